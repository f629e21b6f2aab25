//! Potentials `W : R^N -> R` with two distinguished minima `a⁺`, `a⁻`
//! satisfying `W(a⁻) < 0 = W(a⁺)`.
//!
//! A [`PotentialSpec`] wraps any [`Landscape`] implementation together with
//! its minima. Derivatives fall back to central differences when the
//! landscape does not supply them.

mod builtin;
mod geometry;
mod polynomial;
mod transform;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub use builtin::{make_builtin, BUILTIN_NAMES};
pub use geometry::{geometry_probe, GeometryReport, HypothesisFlags, ProbeBox};
pub use polynomial::{parse_polynomial, polynomial_potential, Monomial, Polynomial};
pub use transform::{appendix_hat, reflect_above, AppendixHat, HatParams, Omega, ReflectionInfo};

/// Tolerance for `∇W(a±) = 0`.
pub const CRITICAL_TOL: f64 = 1e-8;
/// Tolerance for `W(a⁺) = 0`.
pub const ZERO_LEVEL_TOL: f64 = 1e-12;

/// A scalar field on `R^N`.
///
/// Implementations must be pure: evaluation may happen concurrently from
/// several threads.
pub trait Landscape: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, u: &[f64]) -> f64;

    /// Writes `∇W(u)` into `out` and returns `true`, or returns `false` when
    /// no analytic gradient exists.
    fn gradient(&self, _u: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    /// Writes the row-major Hessian into `out` (length `N²`), or returns
    /// `false`.
    fn hessian(&self, _u: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// A potential together with its minima and the named parameters it was
/// built from.
#[derive(Clone)]
pub struct PotentialSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub dim: usize,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    /// `W(a⁻)`, strictly negative.
    pub w_at_a_minus: f64,
    /// Present when the potential is the reflection of another one.
    pub reflection: Option<ReflectionInfo>,
    landscape: Arc<dyn Landscape>,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("a_plus", &self.a_plus)
            .field("a_minus", &self.a_minus)
            .field("w_at_a_minus", &self.w_at_a_minus)
            .finish_non_exhaustive()
    }
}

impl PotentialSpec {
    /// Builds and validates a spec. `W(a⁻)` is read off the landscape.
    pub fn new(
        name: impl Into<String>,
        params: BTreeMap<String, f64>,
        a_plus: Vec<f64>,
        a_minus: Vec<f64>,
        landscape: Arc<dyn Landscape>,
    ) -> Result<Self> {
        let dim = landscape.dim();
        for a in [&a_plus, &a_minus] {
            if a.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: a.len(),
                });
            }
        }
        let w_at_a_minus = landscape.value(&a_minus);
        let spec = PotentialSpec {
            name: name.into(),
            params,
            dim,
            a_plus,
            a_minus,
            w_at_a_minus,
            reflection: None,
            landscape,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn landscape(&self) -> &Arc<dyn Landscape> {
        &self.landscape
    }

    /// `W⁻(a⁻) = -W(a⁻) > 0`.
    pub fn depth(&self) -> f64 {
        -self.w_at_a_minus
    }

    /// `|a⁺ - a⁻|`.
    pub fn separation(&self) -> f64 {
        dist(&self.a_plus, &self.a_minus)
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.landscape.value(u)
    }

    /// `∇W(u)`, analytic when available, otherwise central differences with
    /// step `1e-6·(1 + |u|)`.
    pub fn grad(&self, u: &[f64], out: &mut [f64]) {
        if !self.landscape.gradient(u, out) {
            fd_gradient(&*self.landscape, u, out);
        }
    }

    pub fn grad_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.grad(u, &mut g);
        g
    }

    /// Whether the landscape supplies an analytic gradient.
    pub fn has_analytic_grad(&self) -> bool {
        let mut g = vec![0.0; self.dim];
        self.landscape.gradient(&self.a_plus, &mut g)
    }

    /// Whether the landscape supplies an analytic Hessian.
    pub fn has_analytic_hess(&self) -> bool {
        let mut h = vec![0.0; self.dim * self.dim];
        self.landscape.hessian(&self.a_plus, &mut h)
    }

    /// Hessian of `W`, analytic when available, otherwise differences of
    /// the gradient (or second differences of `W` if the gradient is itself
    /// numerical). Always symmetric.
    pub fn hess(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut h = vec![0.0; n * n];
        if self.landscape.hessian(u, &mut h) {
            return DMatrix::from_row_slice(n, n, &h);
        }
        let m = if self.has_analytic_grad() {
            self.fd_hessian_from_grad(u)
        } else {
            fd_hessian_from_value(&*self.landscape, u)
        };
        (&m + m.transpose()) * 0.5
    }

    /// Hessian by central differences of [`grad`](Self::grad), ignoring any
    /// analytic Hessian.
    pub fn fd_hessian_from_grad(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let step = 1e-6 * (1.0 + norm(u));
        let mut m = DMatrix::zeros(n, n);
        let mut up = u.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        for j in 0..n {
            up[j] = u[j] + step;
            self.grad(&up, &mut gp);
            up[j] = u[j] - step;
            self.grad(&up, &mut gm);
            up[j] = u[j];
            for i in 0..n {
                m[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        m
    }

    /// Checks the structural invariants: criticality of `a±`, `W(a⁺) = 0`,
    /// `W(a⁻) < 0`, and agreement of an analytic Hessian with differences
    /// of the gradient at 10 seeded points around the minima.
    pub fn validate(&self) -> Result<()> {
        let hyp = |detail: String| Error::Hypothesis {
            hypothesis: "W(a-) < 0 = W(a+)".into(),
            detail,
        };
        let wp = self.eval(&self.a_plus);
        if !wp.is_finite() || wp.abs() > ZERO_LEVEL_TOL {
            return Err(hyp(format!("W(a+) = {wp:e} is not 0")));
        }
        let wm = self.eval(&self.a_minus);
        if !(wm < 0.0) {
            return Err(hyp(format!("W(a-) = {wm:e} is not negative")));
        }
        if (wm - self.w_at_a_minus).abs() > 1e-12 * (1.0 + wm.abs()) {
            return Err(hyp(format!(
                "stored W(a-) = {:e} differs from W(a-) = {wm:e}",
                self.w_at_a_minus
            )));
        }
        for (label, a) in [("a+", &self.a_plus), ("a-", &self.a_minus)] {
            let g = norm_inf(&self.grad_vec(a));
            if g > CRITICAL_TOL {
                return Err(Error::Hypothesis {
                    hypothesis: "critical minima".into(),
                    detail: format!("|grad W({label})| = {g:e} exceeds {CRITICAL_TOL:e}"),
                });
            }
        }
        if self.has_analytic_hess() {
            let worst = self.hessian_consistency(10, 0);
            if worst > 1e-4 {
                return Err(Error::Hypothesis {
                    hypothesis: "hessian consistency".into(),
                    detail: format!("analytic Hessian off by relative {worst:e}"),
                });
            }
        }
        Ok(())
    }

    /// Worst relative Frobenius gap between the Hessian and central
    /// differences of the gradient over `count` seeded points near the
    /// segment `[a⁻, a⁺]`.
    pub fn hessian_consistency(&self, count: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spread = 0.5 * self.separation().max(1.0);
        let mut worst: f64 = 0.0;
        for _ in 0..count {
            let s: f64 = rng.random();
            let u: Vec<f64> = (0..self.dim)
                .map(|i| {
                    let base = self.a_minus[i] + s * (self.a_plus[i] - self.a_minus[i]);
                    base + spread * rng.random_range(-1.0..1.0)
                })
                .collect();
            let h = self.hess(&u);
            let fd = self.fd_hessian_from_grad(&u);
            let rel = (&h - &fd).norm() / h.norm().max(1.0);
            worst = worst.max(rel);
        }
        worst
    }
}

/// `W(u)`, rejecting non-finite values.
pub fn eval_w(p: &PotentialSpec, u: &[f64]) -> Result<f64> {
    let w = p.eval(u);
    if w.is_finite() {
        Ok(w)
    } else {
        Err(Error::Geometry(format!(
            "W is not finite at {u:?}; point lies outside the probe box"
        )))
    }
}

/// `∇W(u)`.
pub fn eval_grad(p: &PotentialSpec, u: &[f64]) -> Vec<f64> {
    p.grad_vec(u)
}

pub(crate) fn fd_gradient(l: &dyn Landscape, u: &[f64], out: &mut [f64]) {
    let step = 1e-6 * (1.0 + norm(u));
    let mut up = u.to_vec();
    for i in 0..u.len() {
        up[i] = u[i] + step;
        let fp = l.value(&up);
        up[i] = u[i] - step;
        let fm = l.value(&up);
        up[i] = u[i];
        out[i] = (fp - fm) / (2.0 * step);
    }
}

fn fd_hessian_from_value(l: &dyn Landscape, u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let step = 1e-4 * (1.0 + norm(u));
    let f0 = l.value(u);
    let mut m = DMatrix::zeros(n, n);
    let mut v = u.to_vec();
    for i in 0..n {
        v[i] = u[i] + step;
        let fp = l.value(&v);
        v[i] = u[i] - step;
        let fm = l.value(&v);
        v[i] = u[i];
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (step * step);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                v[i] = u[i] + si * step;
                v[j] = u[j] + sj * step;
                let f = l.value(&v);
                v[i] = u[i];
                v[j] = u[j];
                f
            };
            let mixed = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                + corner(-1.0, -1.0))
                / (4.0 * step * step);
            m[(i, j)] = mixed;
            m[(j, i)] = mixed;
        }
    }
    m
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(u: &[f64]) -> f64 {
    u.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Quartic;

    impl Landscape for Quartic {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, u: &[f64]) -> f64 {
            let x = u[0];
            0.125 * x * x - (1.25 / 3.0) * x.powi(3) + 0.25 * x.powi(4)
        }
    }

    #[test]
    fn numerical_derivatives_follow_the_value() {
        let p = PotentialSpec::new("q", BTreeMap::new(), vec![0.0], vec![1.0], Arc::new(Quartic))
            .unwrap();
        assert!(!p.has_analytic_grad());
        let u = [0.7];
        let exact = 0.7 * (0.7 - 0.25) * (0.7 - 1.0);
        assert!((p.grad_vec(&u)[0] - exact).abs() < 1e-9);
        let exact_h = 0.25 - 2.5 * 0.7 + 3.0 * 0.49;
        assert!((p.hess(&u)[(0, 0)] - exact_h).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_critical_minimum() {
        let err = PotentialSpec::new("q", BTreeMap::new(), vec![0.0], vec![0.9], Arc::new(Quartic));
        assert!(matches!(err, Err(Error::Hypothesis { .. })));
    }
}
