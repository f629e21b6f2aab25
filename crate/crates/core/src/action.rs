//! The discrete weighted action
//!
//! ```text
//! Ê_c(u) = Σ_cells (h/2)|Δu/h|² e^{c(x_{j+½} - x_ref)}
//!        + Σ_nodes τ_j h W(u_j) e^{c(x_j - x_ref)}
//! ```
//!
//! with trapezoid weights `τ_j` (one half at the ends), plus the exact
//! contribution `W(u_0) e^{c(x_0 - x_ref)}/c` of the constant extension to
//! the left of the grid. The extension to the right contributes nothing
//! once `u_n = a⁺`. `Ê_c` is `E_c` scaled by the positive constant
//! `e^{-c x_ref}`, so its sign and zero set are those of `E_c`.

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Profile};
use crate::potential::PotentialSpec;
use crate::{Error, Result};

/// Largest admissible exponent `c (x_n - x_ref)` of the weight.
pub const WEIGHT_GUARD: f64 = 500.0;

/// A value of the scaled action split into its parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub scaled_total: f64,
    pub kinetic: f64,
    /// The `W⁺` part.
    pub potential_plus: f64,
    /// The `W⁻` part, reported as a nonnegative number.
    pub potential_minus: f64,
    pub c: f64,
    pub x_ref: f64,
}

impl ActionValue {
    /// Sum of the absolute parts, the natural scale of the total.
    pub fn magnitude(&self) -> f64 {
        self.kinetic + self.potential_plus + self.potential_minus
    }
}

/// Precomputed weights for one grid and one speed.
#[derive(Clone, Debug)]
pub struct ActionKernel {
    pub c: f64,
    pub grid: Grid,
    /// `e^{c(x_j - x_ref)}`.
    pub node_w: Vec<f64>,
    /// `e^{c(x_{j+½} - x_ref)}`, one per cell.
    pub cell_w: Vec<f64>,
}

impl ActionKernel {
    pub fn new(grid: &Grid, c: f64) -> Result<Self> {
        let exponent = c * (grid.right() - grid.x_ref);
        if !exponent.is_finite() || exponent > WEIGHT_GUARD {
            return Err(Error::WeightOverflow(exponent));
        }
        let node_w = (0..grid.len())
            .map(|j| (c * (grid.x(j) - grid.x_ref)).exp())
            .collect();
        let cell_w = (0..grid.n)
            .map(|j| (c * (grid.x(j) + 0.5 * grid.h - grid.x_ref)).exp())
            .collect();
        Ok(ActionKernel {
            c,
            grid: grid.clone(),
            node_w,
            cell_w,
        })
    }

    /// Action restricted to the nodes `i0..=i1`.
    pub fn value_between(
        &self,
        p: &PotentialSpec,
        values: &[f64],
        dim: usize,
        i0: usize,
        i1: usize,
    ) -> Result<ActionValue> {
        let h = self.grid.h;
        let mut kinetic = 0.0;
        for j in i0..i1 {
            let mut sq = 0.0;
            for k in 0..dim {
                let d = values[(j + 1) * dim + k] - values[j * dim + k];
                sq += d * d;
            }
            kinetic += 0.5 * sq / h * self.cell_w[j];
        }
        let (mut plus, mut minus) = (0.0, 0.0);
        for j in i0..=i1 {
            let w = p.eval(&values[j * dim..(j + 1) * dim]);
            if !w.is_finite() {
                return Err(Error::NonFinite { node: j });
            }
            let tau = if j == i0 || j == i1 { 0.5 } else { 1.0 };
            let q = tau * h * self.node_w[j];
            if w > 0.0 {
                plus += q * w;
            } else {
                minus -= q * w;
            }
        }
        Ok(ActionValue {
            scaled_total: kinetic + plus - minus,
            kinetic,
            potential_plus: plus,
            potential_minus: minus,
            c: self.c,
            x_ref: self.grid.x_ref,
        })
    }

    /// Action of the profile on the whole line, tail included.
    pub fn value(&self, p: &PotentialSpec, values: &[f64], dim: usize) -> Result<ActionValue> {
        let mut v = self.value_between(p, values, dim, 0, self.grid.n)?;
        self.add_tail(&mut v, p.eval(&values[..dim]));
        Ok(v)
    }

    /// `∫_{-∞}^{x_0} W(u_0) e^{c(x - x_ref)} dx`.
    pub fn left_tail(&self, w0: f64) -> f64 {
        w0 * self.node_w[0] / self.c
    }

    fn add_tail(&self, v: &mut ActionValue, w0: f64) {
        let t = self.left_tail(w0);
        if t > 0.0 {
            v.potential_plus += t;
        } else {
            v.potential_minus -= t;
        }
        v.scaled_total += t;
    }

    /// Value and exact gradient with respect to every node. When `clamped`
    /// the end-node entries are zeroed.
    pub fn value_grad(
        &self,
        p: &PotentialSpec,
        values: &[f64],
        dim: usize,
        clamped: bool,
        grad: &mut [f64],
    ) -> Result<ActionValue> {
        let n = self.grid.n;
        let h = self.grid.h;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut kinetic = 0.0;
        for j in 0..n {
            let mut sq = 0.0;
            for k in 0..dim {
                let d = values[(j + 1) * dim + k] - values[j * dim + k];
                sq += d * d;
                let f = self.cell_w[j] * d / h;
                grad[j * dim + k] -= f;
                grad[(j + 1) * dim + k] += f;
            }
            kinetic += 0.5 * sq / h * self.cell_w[j];
        }
        let (mut plus, mut minus) = (0.0, 0.0);
        let mut gw = vec![0.0; dim];
        for j in 0..=n {
            let u = &values[j * dim..(j + 1) * dim];
            let w = p.eval(u);
            if !w.is_finite() {
                return Err(Error::NonFinite { node: j });
            }
            let tau = if j == 0 || j == n { 0.5 } else { 1.0 };
            let q = tau * h * self.node_w[j];
            if w > 0.0 {
                plus += q * w;
            } else {
                minus -= q * w;
            }
            if clamped && (j == 0 || j == n) {
                continue;
            }
            p.grad(u, &mut gw);
            for k in 0..dim {
                grad[j * dim + k] += q * gw[k];
            }
        }
        if clamped {
            for k in 0..dim {
                grad[k] = 0.0;
                grad[n * dim + k] = 0.0;
            }
        } else {
            p.grad(&values[..dim], &mut gw);
            for k in 0..dim {
                grad[k] += self.node_w[0] / self.c * gw[k];
            }
        }
        let mut v = ActionValue {
            scaled_total: kinetic + plus - minus,
            kinetic,
            potential_plus: plus,
            potential_minus: minus,
            c: self.c,
            x_ref: self.grid.x_ref,
        };
        self.add_tail(&mut v, p.eval(&values[..dim]));
        Ok(v)
    }
}

fn check_dim(u: &Profile, p: &PotentialSpec) -> Result<()> {
    if u.dim != p.dim {
        return Err(Error::Dimension {
            expected: p.dim,
            got: u.dim,
        });
    }
    Ok(())
}

/// Scaled action of a profile extended by its left end value.
pub fn action(c: f64, u: &Profile, p: &PotentialSpec) -> Result<ActionValue> {
    check_dim(u, p)?;
    ActionKernel::new(&u.grid, c)?.value(p, &u.values, u.dim)
}

/// Exact gradient of [`action`] with respect to the node values, flattened
/// node-major; zero at the ends of a clamped profile.
pub fn action_gradient(c: f64, u: &Profile, p: &PotentialSpec) -> Result<Vec<f64>> {
    check_dim(u, p)?;
    let mut g = vec![0.0; u.values.len()];
    ActionKernel::new(&u.grid, c)?.value_grad(p, &u.values, u.dim, u.clamped, &mut g)?;
    Ok(g)
}

/// Scaled left-tail contribution included in [`action`].
pub fn left_tail(c: f64, u: &Profile, p: &PotentialSpec) -> Result<f64> {
    check_dim(u, p)?;
    Ok(ActionKernel::new(&u.grid, c)?.left_tail(p.eval(u.point(0))))
}

/// Action over `[mu, nu]`, both snapped to the nearest nodes, without
/// tail.
pub fn restricted_action(
    c: f64,
    u: &Profile,
    p: &PotentialSpec,
    mu: f64,
    nu: f64,
) -> Result<ActionValue> {
    check_dim(u, p)?;
    let (i0, i1) = (u.grid.nearest(mu), u.grid.nearest(nu));
    if !(mu < nu) || i0 >= i1 {
        return Err(Error::Grid(format!(
            "interval [{mu}, {nu}] does not span a cell"
        )));
    }
    ActionKernel::new(&u.grid, c)?.value_between(p, &u.values, u.dim, i0, i1)
}

/// The same samples on the grid moved by `k` cells. Its action is
/// `e^{c k h}` times the original one.
pub fn translate_profile(u: &Profile, k: i64) -> Profile {
    Profile {
        grid: u.grid.shifted(k),
        ..u.clone()
    }
}

/// `∂Ê_c/∂c` at fixed profile and fixed `x_ref`: the first-moment sum
/// `Σ (x - x_ref) · (action density)` plus the derivative of the tail.
pub fn action_dc(c: f64, u: &Profile, p: &PotentialSpec) -> Result<f64> {
    check_dim(u, p)?;
    let k = ActionKernel::new(&u.grid, c)?;
    let g = &u.grid;
    let dim = u.dim;
    let mut total = 0.0;
    for j in 0..g.n {
        let sq: f64 = (0..dim)
            .map(|i| {
                let d = u.values[(j + 1) * dim + i] - u.values[j * dim + i];
                d * d
            })
            .sum();
        total += 0.5 * sq / g.h * k.cell_w[j] * (g.x(j) + 0.5 * g.h - g.x_ref);
    }
    for j in 0..=g.n {
        let tau = if j == 0 || j == g.n { 0.5 } else { 1.0 };
        let w = p.eval(u.point(j));
        total += tau * g.h * w * k.node_w[j] * (g.x(j) - g.x_ref);
    }
    let w0 = p.eval(u.point(0));
    total += w0 * k.node_w[0] * ((g.x(0) - g.x_ref) / c - 1.0 / (c * c));
    Ok(total)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::grid::make_grid;
    use crate::potential::make_builtin;

    fn nagumo() -> PotentialSpec {
        make_builtin("nagumo", &BTreeMap::new()).unwrap()
    }

    #[test]
    fn constant_profiles() {
        let p = nagumo();
        let g = make_grid(5.0, 0.01, 0.0).unwrap();
        let up = Profile::constant(g.clone(), &[0.0], true);
        assert_eq!(action(0.3, &up, &p).unwrap().scaled_total, 0.0);
        assert!(action_gradient(0.3, &up, &p).unwrap().iter().all(|v| *v == 0.0));

        let um = Profile::constant(g, &[1.0], true);
        let c = 0.3;
        let exact = -1.0 / 24.0 * (c * 5.0f64).exp() / c;
        let got = action(c, &um, &p).unwrap();
        assert!((got.scaled_total - exact).abs() <= 1e-6 * exact.abs());
        assert_eq!(got.kinetic, 0.0);
    }

    #[test]
    fn overflow_guard() {
        let p = nagumo();
        let g = make_grid(600.0, 0.5, 0.0).unwrap();
        let u = Profile::constant(g, &[0.0], true);
        assert!(matches!(action(1.0, &u, &p), Err(Error::WeightOverflow(_))));
    }

    #[test]
    fn restriction_is_additive() {
        let p = nagumo();
        let g = make_grid(10.0, 0.01, 2.0).unwrap();
        let u = Profile::from_fn(g, 1, true, |x| vec![1.0 / (1.0 + (x / 2f64.sqrt()).exp())]);
        let c = 0.35;
        let full = action(c, &u, &p).unwrap().scaled_total;
        let whole = restricted_action(c, &u, &p, -10.0, 10.0).unwrap().scaled_total;
        assert_eq!(full, whole + left_tail(c, &u, &p).unwrap());
        let left = restricted_action(c, &u, &p, -10.0, 0.0).unwrap().scaled_total;
        let right = restricted_action(c, &u, &p, 0.0, 10.0).unwrap().scaled_total;
        assert!((left + right - whole).abs() <= 1e-12 * whole.abs());
    }
}
