//! Polynomial potentials read from coefficient files.
//!
//! One monomial per line: the exponent tuple, a comma, the coefficient.
//!
//! ```text
//! # W(u1, u2) = (u1^2 - 1)^2 + u2^2
//! 4 0, 1
//! 2 0, -2
//! 0 0, 1
//! 0 2, 1
//! ```
//!
//! Parentheses and commas inside the tuple are accepted, so `(4, 0), 1`
//! parses the same way. `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::{Landscape, PotentialSpec};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("polynomial of dimension 0".into()));
        }
        for t in &terms {
            if t.exponents.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: t.exponents.len(),
                });
            }
        }
        Ok(Polynomial { dim, terms })
    }

    /// Univariate polynomial from ascending coefficients.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, &c)| Monomial {
                exponents: vec![k as u32],
                coefficient: c,
            })
            .collect();
        Polynomial { dim: 1, terms }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// Adds a constant.
    pub fn shifted(mut self, by: f64) -> Self {
        self.terms.push(Monomial {
            exponents: vec![0; self.dim],
            coefficient: by,
        });
        self
    }
}

fn pow(x: f64, e: u32) -> f64 {
    x.powi(e as i32)
}

impl Landscape for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coefficient
                    * t.exponents
                        .iter()
                        .zip(u)
                        .map(|(&e, &x)| pow(x, e))
                        .product::<f64>()
            })
            .sum()
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|g| *g = 0.0);
        for t in &self.terms {
            for i in 0..self.dim {
                let ei = t.exponents[i];
                if ei == 0 {
                    continue;
                }
                let mut v = t.coefficient * ei as f64 * pow(u[i], ei - 1);
                for k in (0..self.dim).filter(|&k| k != i) {
                    v *= pow(u[k], t.exponents[k]);
                }
                out[i] += v;
            }
        }
        true
    }

    fn hessian(&self, u: &[f64], out: &mut [f64]) -> bool {
        let n = self.dim;
        out.iter_mut().for_each(|h| *h = 0.0);
        for t in &self.terms {
            for i in 0..n {
                for j in 0..n {
                    let mut e = t.exponents.clone();
                    let mut factor = t.coefficient;
                    for &k in &[i, j] {
                        if e[k] == 0 {
                            factor = 0.0;
                            break;
                        }
                        factor *= e[k] as f64;
                        e[k] -= 1;
                    }
                    if factor == 0.0 {
                        continue;
                    }
                    let rest: f64 = e.iter().zip(u).map(|(&ek, &x)| pow(x, ek)).product();
                    out[i * n + j] += factor * rest;
                }
            }
        }
        true
    }
}

/// Parses the coefficient-file format described in the module docs.
pub fn parse_polynomial(text: &str) -> Result<Polynomial> {
    let mut terms = Vec::new();
    let mut dim = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: &str| Error::Config(format!("line {}: {why}: `{raw}`", lineno + 1));
        let tokens: Vec<&str> = line
            .split(|ch: char| ch == ',' || ch == '(' || ch == ')' || ch.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let (coef, exps) = tokens
            .split_last()
            .ok_or_else(|| bad("empty monomial"))?;
        if exps.is_empty() {
            return Err(bad("missing exponent tuple"));
        }
        let coefficient: f64 = coef.parse().map_err(|_| bad("bad coefficient"))?;
        let exponents = exps
            .iter()
            .map(|e| e.parse::<u32>().map_err(|_| bad("bad exponent")))
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(exponents.len()),
            Some(d) if d != exponents.len() => return Err(bad("inconsistent tuple length")),
            _ => {}
        }
        terms.push(Monomial {
            exponents,
            coefficient,
        });
    }
    let dim = dim.ok_or_else(|| Error::Config("coefficient file has no monomials".into()))?;
    Polynomial::new(dim, terms)
}

/// Loads a polynomial potential from a coefficient file.
pub fn polynomial_potential(
    path: &Path,
    a_plus: Vec<f64>,
    a_minus: Vec<f64>,
) -> Result<PotentialSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let poly = parse_polynomial(&text)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "polynomial".into());
    PotentialSpec::new(name, BTreeMap::new(), a_plus, a_minus, Arc::new(poly))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_tuple_styles() {
        let a = parse_polynomial("4 0, 1\n2 0, -2\n0 0, 1 # const\n0 2, 1\n").unwrap();
        let b = parse_polynomial("(4, 0), 1\n(2,0), -2\n(0, 0), 1\n(0, 2), 1").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value(&[1.0, 0.0]), 0.0);
        assert_eq!(a.value(&[0.0, 2.0]), 5.0);
    }

    #[test]
    fn rejects_ragged_tuples() {
        assert!(parse_polynomial("1 2, 1\n3, 1").is_err());
        assert!(parse_polynomial("# nothing\n").is_err());
    }

    #[test]
    fn analytic_derivatives() {
        let p = parse_polynomial("2 1, 3\n0 3, -1\n1 0, 2").unwrap();
        let u = [0.7, -1.3];
        let mut g = [0.0; 2];
        p.gradient(&u, &mut g);
        assert!((g[0] - (6.0 * 0.7 * -1.3 + 2.0)).abs() < 1e-14);
        assert!((g[1] - (3.0 * 0.49 - 3.0 * 1.69)).abs() < 1e-14);
        let mut h = [0.0; 4];
        p.hessian(&u, &mut h);
        assert!((h[0] - 6.0 * -1.3).abs() < 1e-14);
        assert!((h[1] - 6.0 * 0.7).abs() < 1e-14);
        assert_eq!(h[1], h[2]);
        assert!((h[3] - -6.0 * -1.3).abs() < 1e-14);
    }
}
