//! Minimization of the discrete action over the constraint set `X_L`:
//! profiles with `|u - a⁺| ≤ r0` for `x ≥ L` and `|u - a⁻| ≤ r0` for
//! `x ≤ -L`.
//!
//! The solver is a projected spectral gradient method. Steps are taken in
//! the metric of the weighted stiffness matrix `K + σ M`, a tridiagonal
//! matrix that makes the step size independent of the exponential weight.
//! Every trial point is projected back onto the cylinders and accepted only
//! under an Armijo decrease condition, so the action never increases.
//! Whole-cell translations of the samples are tried periodically, which
//! moves the front along the nearly flat translation direction.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::action::{ActionKernel, ActionValue};
use crate::grid::{Grid, Profile};
use crate::potential::{dist, PotentialSpec};
use crate::{Error, Result};

/// The cylinders defining `X_L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub l: f64,
    pub r0: f64,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Minus,
    Free,
    Plus,
}

impl ConstraintSpec {
    /// Rejects `r0` so large that the two balls meet.
    pub fn new(l: f64, r0: f64, p: &PotentialSpec) -> Result<Self> {
        if !(l > 0.0) {
            return Err(Error::Config(format!("L = {l} must be positive")));
        }
        if !(r0 > 0.0 && 2.0 * r0 < p.separation()) {
            return Err(Error::Config(format!(
                "r0 = {r0} must lie in (0, |a+ - a-|/2 = {})",
                p.separation() / 2.0
            )));
        }
        Ok(ConstraintSpec {
            l,
            r0,
            a_plus: p.a_plus.clone(),
            a_minus: p.a_minus.clone(),
        })
    }

    pub fn with_l(&self, l: f64) -> Self {
        ConstraintSpec { l, ..self.clone() }
    }

    /// Both rims lie strictly inside the grid, at least one cell from the
    /// ends.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if !(self.l < grid.right() - grid.h && -self.l > grid.left + grid.h) {
            return Err(Error::Grid(format!(
                "rims ±{} must lie inside [{} + h, {} - h]",
                self.l,
                grid.left,
                grid.right()
            )));
        }
        Ok(())
    }

    fn side(&self, grid: &Grid, j: usize) -> Side {
        let x = grid.x(j);
        let slack = 1e-9 * grid.h;
        if x >= self.l - slack {
            Side::Plus
        } else if x <= -self.l + slack {
            Side::Minus
        } else {
            Side::Free
        }
    }

    fn center(&self, side: Side) -> Option<&[f64]> {
        match side {
            Side::Plus => Some(&self.a_plus),
            Side::Minus => Some(&self.a_minus),
            Side::Free => None,
        }
    }

    /// Largest excess `|u - a±| - r0` over the constrained nodes.
    pub fn max_violation(&self, u: &Profile) -> f64 {
        (0..u.len())
            .filter_map(|j| {
                self.center(self.side(&u.grid, j))
                    .map(|a| dist(u.point(j), a) - self.r0)
            })
            .fold(0.0, f64::max)
    }
}

/// Radial clamp of one node onto the ball `B(a, r0)`. Returns how far the
/// node moved.
fn clamp_node(v: &mut [f64], a: &[f64], r0: f64) -> f64 {
    let r = dist(v, a);
    if r <= r0 {
        return 0.0;
    }
    let s = r0 / r;
    for (x, c) in v.iter_mut().zip(a) {
        *x = c + s * (*x - c);
    }
    r - r0
}

/// Projection onto `X_L`: nodes beyond `±L` outside their ball are moved
/// radially onto its sphere. Interior nodes are untouched.
pub fn project_cylinders(u: &Profile, cs: &ConstraintSpec) -> Profile {
    let mut out = u.clone();
    for j in 0..out.len() {
        if let Some(a) = cs.center(cs.side(&u.grid, j)) {
            clamp_node(out.point_mut(j), a, cs.r0);
        }
    }
    out
}

/// Crossing abscissae of a profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossingTimes {
    /// Last exit from `B(a⁻, r0)`.
    pub lambda_minus: Option<f64>,
    /// Last exit from `C_α⁻`.
    pub lambda_alpha_minus: Option<f64>,
    /// First entry into `B(a⁺, r0)`.
    pub lambda_plus: Option<f64>,
    /// Sign changes of `|u - a⁺| - r0` along the nodes.
    pub plus_sphere_crossings: usize,
    /// Sign changes of `|u - a⁻| - r0` along the nodes.
    pub minus_sphere_crossings: usize,
    /// Exits from `C_α⁻` along the nodes.
    pub alpha_exits: usize,
}

/// Membership in `C_α⁻`: `W ≤ α` away from the ball around `a⁺`.
fn in_c_alpha(p: &PotentialSpec, cs: &ConstraintSpec, u: &[f64], alpha: f64) -> bool {
    p.eval(u) <= alpha && dist(u, &cs.a_plus) > cs.r0
}

fn lerp_root(x0: f64, x1: f64, f0: f64, f1: f64) -> f64 {
    if f1 == f0 {
        return x1;
    }
    x0 + (x1 - x0) * f0 / (f0 - f1)
}

/// The λ-times by linear interpolation between bracketing nodes, together
/// with the crossing counts used by the structure checks.
pub fn crossing_times(
    u: &Profile,
    p: &PotentialSpec,
    cs: &ConstraintSpec,
    alpha: f64,
) -> CrossingTimes {
    let g = &u.grid;
    let n = u.len();
    let rho_m: Vec<f64> = (0..n).map(|j| dist(u.point(j), &cs.a_minus) - cs.r0).collect();
    let rho_p: Vec<f64> = (0..n).map(|j| dist(u.point(j), &cs.a_plus) - cs.r0).collect();
    let inside: Vec<bool> = (0..n)
        .map(|j| in_c_alpha(p, cs, u.point(j), alpha))
        .collect();
    let sign_changes =
        |f: &[f64]| f.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();

    let mut out = CrossingTimes {
        plus_sphere_crossings: sign_changes(&rho_p),
        minus_sphere_crossings: sign_changes(&rho_m),
        alpha_exits: inside.windows(2).filter(|w| w[0] && !w[1]).count(),
        ..Default::default()
    };
    if let Some(j) = (0..n - 1).rev().find(|&j| rho_m[j] <= 0.0 && rho_m[j + 1] > 0.0) {
        out.lambda_minus = Some(lerp_root(g.x(j), g.x(j + 1), rho_m[j], rho_m[j + 1]));
    }
    if let Some(j) = (0..n - 1).find(|&j| rho_p[j] > 0.0 && rho_p[j + 1] <= 0.0) {
        out.lambda_plus = Some(lerp_root(g.x(j), g.x(j + 1), rho_p[j], rho_p[j + 1]));
    }
    if let Some(j) = (0..n - 1).rev().find(|&j| inside[j] && !inside[j + 1]) {
        let f0 = p.eval(u.point(j)) - alpha;
        let f1 = p.eval(u.point(j + 1)) - alpha;
        out.lambda_alpha_minus = Some(if f1 > 0.0 {
            lerp_root(g.x(j), g.x(j + 1), f0, f1)
        } else {
            g.x(j + 1)
        });
    }
    out
}

/// Stopping rules and bookkeeping for [`minimize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Bound on the projected residual `max_j |g_j| / (h e^{c(x_j - x_ref)})`,
    /// which approximates `|U'' + cU' - ∇W(U)|`.
    pub tol_g: f64,
    pub max_iter: usize,
    /// Level used for `λ^{α-}`.
    pub alpha: f64,
    /// Keep the action after every accepted step.
    pub record_history: bool,
    /// Try whole-cell translations every this many iterations; 0 disables.
    pub translate_every: usize,
    /// Abscissa of a node held at its seed value. Pinning one node removes
    /// the translation mode when the action is close to zero.
    pub anchor: Option<f64>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol_g: 1e-7,
            max_iter: 100_000,
            alpha: 0.0,
            record_history: false,
            translate_every: 25,
            anchor: None,
        }
    }
}

/// A constrained minimizer and what is known about it.
#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub profile: Profile,
    pub action: ActionValue,
    pub iterations: usize,
    pub converged: bool,
    /// The line search failed before the tolerance was met.
    pub stagnated: bool,
    pub rim_contact_minus: bool,
    pub rim_contact_plus: bool,
    pub crossings: CrossingTimes,
    pub grad_norm: f64,
    pub max_violation: f64,
    pub history: Vec<f64>,
}

impl MinimizeResult {
    pub fn lambda_minus(&self) -> Option<f64> {
        self.crossings.lambda_minus
    }
    pub fn lambda_alpha_minus(&self) -> Option<f64> {
        self.crossings.lambda_alpha_minus
    }
    pub fn lambda_plus(&self) -> Option<f64> {
        self.crossings.lambda_plus
    }
}

/// Tridiagonal metric `K + σ M` on the interior nodes.
struct Metric {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    frozen: Vec<bool>,
}

/// Nodes whose weight is below this are left where they are.
const WEIGHT_FLOOR: f64 = 1e-250;

impl Metric {
    fn new(k: &ActionKernel, sigma: f64) -> Self {
        let n = k.grid.n;
        let h = k.grid.h;
        let mut sub = vec![0.0; n + 1];
        let mut diag = vec![1.0; n + 1];
        let mut sup = vec![0.0; n + 1];
        let mut frozen = vec![true; n + 1];
        for j in 1..n {
            if k.node_w[j] < WEIGHT_FLOOR {
                continue;
            }
            frozen[j] = false;
            diag[j] = (k.cell_w[j - 1] + k.cell_w[j]) / h + sigma * h * k.node_w[j];
            sub[j] = -k.cell_w[j - 1] / h;
            sup[j] = -k.cell_w[j] / h;
        }
        Metric {
            sub,
            diag,
            sup,
            frozen,
        }
    }

    /// Solves `P x = r` for one component with stride `dim`. Nodes flagged
    /// in `detached` are decoupled from their neighbours and get a diagonal
    /// step; frozen nodes do not move.
    fn solve(&self, r: &[f64], x: &mut [f64], dim: usize, comp: usize, detached: &[bool]) {
        let n = self.diag.len() - 1;
        let cut = |j: usize| j == 0 || j == n || self.frozen[j] || detached[j];
        let mut cp = vec![0.0; n + 1];
        let mut y = vec![0.0; n + 1];
        for j in 1..n {
            let rhs = if self.frozen[j] { 0.0 } else { r[j * dim + comp] };
            let (a, c) = if cut(j) {
                (0.0, 0.0)
            } else {
                (
                    if cut(j - 1) { 0.0 } else { self.sub[j] },
                    if cut(j + 1) { 0.0 } else { self.sup[j] },
                )
            };
            let denom = self.diag[j] - a * cp[j - 1];
            cp[j] = c / denom;
            y[j] = (rhs - a * y[j - 1]) / denom;
        }
        let mut next = 0.0;
        for j in (1..n).rev() {
            let v = y[j] - cp[j] * next;
            x[j * dim + comp] = v;
            next = v;
        }
        x[comp] = 0.0;
        x[n * dim + comp] = 0.0;
    }

    fn quad(&self, s: &[f64], dim: usize) -> f64 {
        let n = self.diag.len() - 1;
        let mut total = 0.0;
        for k in 0..dim {
            for j in 1..n {
                let mut ps = self.diag[j] * s[j * dim + k];
                if j > 1 && !self.frozen[j - 1] {
                    ps += self.sub[j] * s[(j - 1) * dim + k];
                }
                if j + 1 < n && !self.frozen[j + 1] {
                    ps += self.sup[j] * s[(j + 1) * dim + k];
                }
                total += s[j * dim + k] * ps;
            }
        }
        total
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Curvature scale `σ` of the metric: the stiffest Hessian eigenvalue at
/// the two minima.
fn metric_sigma(p: &PotentialSpec) -> f64 {
    [&p.a_plus, &p.a_minus]
        .iter()
        .map(|a| SymmetricEigen::new(p.hess(a)).eigenvalues.max())
        .fold(1e-2, f64::max)
}

struct Problem<'a> {
    p: &'a PotentialSpec,
    cs: &'a ConstraintSpec,
    kernel: ActionKernel,
    sides: Vec<Side>,
    dim: usize,
    pinned: Option<usize>,
}

impl Problem<'_> {
    fn value_grad(&self, v: &[f64], g: &mut [f64]) -> Result<ActionValue> {
        let e = self.kernel.value_grad(self.p, v, self.dim, true, g)?;
        if let Some(j) = self.pinned {
            g[j * self.dim..(j + 1) * self.dim].fill(0.0);
        }
        Ok(e)
    }

    fn project(&self, v: &mut [f64], clipped: &mut [bool; 2]) {
        let dim = self.dim;
        for (j, side) in self.sides.iter().enumerate() {
            if let Some(a) = self.cs.center(*side) {
                let moved = clamp_node(&mut v[j * dim..(j + 1) * dim], a, self.cs.r0);
                if moved > 1e-9 {
                    clipped[(*side == Side::Plus) as usize] = true;
                }
            }
        }
    }

    fn value(&self, v: &[f64]) -> Result<ActionValue> {
        self.kernel.value(self.p, v, self.dim)
    }

    /// Removes the outward radial part of `g` at nodes held on a sphere.
    fn tangential(&self, v: &[f64], g: &mut [f64], active: &mut [bool]) {
        let dim = self.dim;
        active.iter_mut().for_each(|a| *a = false);
        for (j, side) in self.sides.iter().enumerate() {
            let Some(a) = self.cs.center(*side) else {
                continue;
            };
            let u = &v[j * dim..(j + 1) * dim];
            let r = dist(u, a);
            if r < self.cs.r0 * (1.0 - 1e-10) || r == 0.0 {
                continue;
            }
            let gj = &mut g[j * dim..(j + 1) * dim];
            let radial: f64 = gj.iter().zip(u.iter().zip(a)).map(|(gk, (x, c))| gk * (x - c)).sum::<f64>() / r;
            if radial < 0.0 {
                active[j] = true;
                for (gk, (x, c)) in gj.iter_mut().zip(u.iter().zip(a)) {
                    *gk -= radial * (x - c) / r;
                }
            }
        }
    }

    fn residual(&self, g: &[f64]) -> f64 {
        let dim = self.dim;
        let h = self.kernel.grid.h;
        let n = self.kernel.grid.n;
        (1..n)
            .filter(|&j| self.kernel.node_w[j] >= WEIGHT_FLOOR && Some(j) != self.pinned)
            .map(|j| {
                let m = h * self.kernel.node_w[j];
                g[j * dim..(j + 1) * dim]
                    .iter()
                    .fold(0.0_f64, |acc, x| acc.max(x.abs() / m))
            })
            .fold(0.0, f64::max)
    }

    /// Best whole-cell translation that lowers the action, if any.
    fn translate(&self, v: &[f64], e: f64) -> Result<Option<(Vec<f64>, f64)>> {
        let dim = self.dim;
        let dir: i64 = if e < 0.0 { 1 } else { -1 };
        let n = self.kernel.grid.len() as i64;
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut k = 1;
        while k < n / 4 {
            let shift = dir * k;
            let mut trial = vec![0.0; v.len()];
            for j in 0..n {
                let src = j - shift;
                let (lo, hi) = ((j * dim as i64) as usize, ((j + 1) * dim as i64) as usize);
                if src < 0 {
                    trial[lo..hi].copy_from_slice(&self.cs.a_minus);
                } else if src >= n {
                    trial[lo..hi].copy_from_slice(&self.cs.a_plus);
                } else {
                    let s = (src * dim as i64) as usize;
                    trial[lo..hi].copy_from_slice(&v[s..s + dim]);
                }
            }
            self.project(&mut trial, &mut [false; 2]);
            let et = self.value(&trial)?.scaled_total;
            let current = best.as_ref().map_or(e, |b| b.1);
            if et < current - 1e-15 * current.abs() {
                best = Some((trial, et));
                k *= 2;
            } else {
                break;
            }
        }
        Ok(best)
    }
}

/// Minimizes the scaled action at speed `c` over `X_L`, starting from
/// `seed` (projected first). The ends of the profile are pinned to `a∓`.
pub fn minimize(
    c: f64,
    cs: &ConstraintSpec,
    seed: &Profile,
    p: &PotentialSpec,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    if seed.dim != p.dim {
        return Err(Error::Dimension {
            expected: p.dim,
            got: seed.dim,
        });
    }
    if !(c > 0.0) {
        return Err(Error::Config(format!("speed c = {c} must be positive")));
    }
    let grid = seed.grid.clone();
    cs.check_grid(&grid)?;
    let dim = p.dim;
    let n = grid.n;
    let kernel = ActionKernel::new(&grid, c)?;
    let pinned = match opts.anchor {
        Some(x) => {
            let j = grid.nearest(x);
            if j == 0 || j == n || cs.side(&grid, j) != Side::Free {
                return Err(Error::Config(format!("anchor {x} must lie strictly between the rims")));
            }
            Some(j)
        }
        None => None,
    };
    let mut metric = Metric::new(&kernel, metric_sigma(p));
    if let Some(j) = pinned {
        metric.frozen[j] = true;
    }
    let prob = Problem {
        pinned,
        p,
        cs,
        sides: (0..=n).map(|j| cs.side(&grid, j)).collect(),
        kernel,
        dim,
    };

    let mut u = seed.values.clone();
    u[..dim].copy_from_slice(&p.a_minus);
    u[n * dim..].copy_from_slice(&p.a_plus);
    let mut clipped = [false; 2];
    prob.project(&mut u, &mut clipped);

    let mut g = vec![0.0; u.len()];
    let mut e = prob.value_grad(&u, &mut g)?;
    let mut gt = g.clone();
    let mut active = vec![false; n + 1];
    prob.tangential(&u, &mut gt, &mut active);
    let mut history = Vec::new();
    if opts.record_history {
        history.push(e.scaled_total);
    }
    let mut last_clip = [None::<usize>; 2];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut step = 1.0;
    let mut d = vec![0.0; u.len()];
    let mut trial = vec![0.0; u.len()];
    let mut g_new = vec![0.0; u.len()];
    let mut iterations = 0;
    let mut converged = false;
    let mut stagnated = false;
    let mut residual = prob.residual(&gt);

    while iterations < opts.max_iter {
        if residual <= opts.tol_g {
            converged = true;
            break;
        }
        iterations += 1;

        if opts.translate_every > 0 && (iterations == 1 || iterations % opts.translate_every == 0) {
            if let Some((moved, et)) = prob.translate(&u, e.scaled_total)? {
                if et < e.scaled_total {
                    u = moved;
                    e = prob.value_grad(&u, &mut g)?;
                    gt.copy_from_slice(&g);
                    prob.tangential(&u, &mut gt, &mut active);
                    residual = prob.residual(&gt);
                    prev = None;
                    step = 1.0;
                    if opts.record_history {
                        history.push(e.scaled_total);
                    }
                    continue;
                }
            }
        }

        for k in 0..dim {
            metric.solve(&gt, &mut d, dim, k, &active);
        }
        d.iter_mut().for_each(|x| *x = -*x);
        prob.tangential_direction(&u, &mut d);
        if dot(&d, &gt) >= 0.0 {
            jacobi(&metric, &gt, &mut d, dim);
        }

        let mut accepted = false;
        for attempt in 0..2 {
            let mut t = step;
            for _ in 0..40 {
                for i in 0..u.len() {
                    trial[i] = u[i] + t * d[i];
                }
                let mut clip_now = [false; 2];
                prob.project(&mut trial, &mut clip_now);
                let et = prob.value(&trial)?;
                let descent: f64 = g.iter().zip(trial.iter().zip(&u)).map(|(gi, (a, b))| gi * (a - b)).sum();
                let noise = 1e-15 * et.magnitude().max(e.magnitude());
                if et.scaled_total <= e.scaled_total + 1e-4 * descent.min(0.0) + noise
                    && et.scaled_total <= e.scaled_total + noise
                {
                    for (s, flag) in clip_now.iter().enumerate() {
                        if *flag {
                            last_clip[s] = Some(iterations);
                        }
                    }
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted || attempt == 1 {
                break;
            }
            jacobi(&metric, &gt, &mut d, dim);
            step = 1.0;
        }
        if !accepted {
            stagnated = true;
            break;
        }

        let e_new = prob.value_grad(&trial, &mut g_new)?;
        let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 {
            (metric.quad(&s, dim) / sy).clamp(1e-8, 1e2)
        } else {
            1e2
        };
        prev = Some((s, y));
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        e = e_new;
        gt.copy_from_slice(&g);
        prob.tangential(&u, &mut gt, &mut active);
        residual = prob.residual(&gt);
        if opts.record_history {
            history.push(e.scaled_total);
        }
    }
    let _ = prev;
    if !converged && residual <= opts.tol_g {
        converged = true;
    }

    let profile = Profile::new(grid.clone(), dim, u, true)?;
    let on_sphere = |side: Side| {
        (0..=n).any(|j| {
            prob.sides[j] == side
                && cs
                    .center(side)
                    .is_some_and(|a| (dist(profile.point(j), a) - cs.r0).abs() <= 1e-9)
        })
    };
    let recent = |s: usize| last_clip[s].is_some_and(|it| it + 10 > iterations);
    let rim_contact_minus = on_sphere(Side::Minus) || recent(0);
    let rim_contact_plus = on_sphere(Side::Plus) || recent(1);
    let crossings = crossing_times(&profile, p, cs, opts.alpha);
    let max_violation = cs.max_violation(&profile);
    Ok(MinimizeResult {
        profile,
        action: e,
        iterations,
        converged,
        stagnated,
        rim_contact_minus,
        rim_contact_plus,
        crossings,
        grad_norm: residual,
        max_violation,
        history,
    })
}

/// Diagonally scaled steepest descent.
fn jacobi(metric: &Metric, g: &[f64], d: &mut [f64], dim: usize) {
    for (j, diag) in metric.diag.iter().enumerate() {
        for k in 0..dim {
            let i = j * dim + k;
            d[i] = if metric.frozen[j] { 0.0 } else { -g[i] / diag };
        }
    }
}

impl Problem<'_> {
    /// Drops the outward radial part of a direction at nodes on a sphere.
    fn tangential_direction(&self, v: &[f64], d: &mut [f64]) {
        let dim = self.dim;
        for (j, side) in self.sides.iter().enumerate() {
            let Some(a) = self.cs.center(*side) else {
                continue;
            };
            let u = &v[j * dim..(j + 1) * dim];
            let r = dist(u, a);
            if r < self.cs.r0 * (1.0 - 1e-10) || r == 0.0 {
                continue;
            }
            let dj = &mut d[j * dim..(j + 1) * dim];
            let radial: f64 = dj.iter().zip(u.iter().zip(a)).map(|(dk, (x, c))| dk * (x - c)).sum::<f64>() / r;
            if radial > 0.0 {
                for (dk, (x, c)) in dj.iter_mut().zip(u.iter().zip(a)) {
                    *dk -= radial * (x - c) / r;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::grid::make_grid;
    use crate::potential::make_builtin;

    #[test]
    fn radial_clamp() {
        let p = make_builtin("nagumo", &BTreeMap::new()).unwrap();
        let cs = ConstraintSpec::new(0.5, 0.05, &p).unwrap();
        let g = make_grid(1.0, 0.5, 0.0).unwrap();
        let u = Profile::new(g, 1, vec![1.0, 0.9, 0.5, 0.2, 0.2], true).unwrap();
        let q = project_cylinders(&u, &cs);
        assert_eq!(q.values, vec![1.0, 0.95, 0.5, 0.05, 0.05]);
        assert_eq!(project_cylinders(&q, &cs), q);

        let p2 = make_builtin("planar_deformed", &BTreeMap::new()).unwrap();
        let cs2 = ConstraintSpec::new(0.5, 0.1, &p2).unwrap();
        let g2 = make_grid(1.0, 0.5, 0.0).unwrap();
        let mut vals = vec![0.0; 10];
        vals[0] = 1.0;
        vals[8] = -1.0;
        vals[9] = 0.3;
        let v = Profile::new(g2, 2, vals, true).unwrap();
        let w = project_cylinders(&v, &cs2);
        assert!((w.point(4)[0] + 1.0).abs() < 1e-15);
        assert!((w.point(4)[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn exact_front_crossings() {
        let p = make_builtin("nagumo", &BTreeMap::new()).unwrap();
        let cs = ConstraintSpec::new(8.0, 0.05, &p).unwrap();
        let g = make_grid(20.0, 0.01, 0.0).unwrap();
        let u = Profile::from_fn(g.clone(), 1, true, |x| vec![1.0 / (1.0 + (x / 2f64.sqrt()).exp())]);
        let ct = crossing_times(&u, &p, &cs, 1e-4);
        let lam = 2f64.sqrt() * 19f64.ln();
        assert!((ct.lambda_plus.unwrap() - lam).abs() < 1e-4);
        assert!((ct.lambda_minus.unwrap() + lam).abs() < 1e-4);
        let la = ct.lambda_alpha_minus.unwrap();
        assert!(ct.lambda_minus.unwrap() <= la && la <= ct.lambda_plus.unwrap());
        assert_eq!((ct.plus_sphere_crossings, ct.alpha_exits), (1, 1));

        let flat = Profile::constant(g, &[0.0], true);
        let ct = crossing_times(&flat, &p, &cs, 1e-4);
        assert_eq!(ct.lambda_plus, None);
        assert_eq!(ct.lambda_minus, None);
        assert_eq!(ct.lambda_alpha_minus, None);
    }
}
