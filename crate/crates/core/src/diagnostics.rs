//! Identities and structural properties of a computed wave.
//!
//! With `F(x) = e^{c(x - x_ref)}/c · (W(U) - ½|U_x|²)` a solution of the
//! wave equation satisfies `E_c(U, (μ, ν)) = F(ν) - F(μ)`. Across a rim
//! where `U_x` jumps, the same bookkeeping leaves the term
//! `e^{c(±L - x_ref)}/(2c) · (|U_x(±L⁺)|² - |U_x(±L⁻)|²)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{action, left_tail, restricted_action};
use crate::constrained::{crossing_times, ConstraintSpec, CrossingTimes, MinimizeResult};
use crate::grid::Profile;
use crate::potential::{dist, GeometryReport, PotentialSpec};

/// Number of random subintervals of the first-integral check.
pub const FIRST_INTEGRAL_INTERVALS: usize = 8;
/// Tolerance of the polar-radius monotonicity check per node pair.
pub const MONOTONICITY_TOL: f64 = 1e-8;

/// `U_x` at node `j` from the left, second-order three-point stencil.
pub fn left_derivative(u: &Profile, j: usize) -> Vec<f64> {
    let h = u.grid.h;
    (0..u.dim)
        .map(|k| {
            let v = |i: usize| u.point(i)[k];
            (3.0 * v(j) - 4.0 * v(j - 1) + v(j - 2)) / (2.0 * h)
        })
        .collect()
}

/// `U_x` at node `j` from the right, second-order three-point stencil.
pub fn right_derivative(u: &Profile, j: usize) -> Vec<f64> {
    let h = u.grid.h;
    (0..u.dim)
        .map(|k| {
            let v = |i: usize| u.point(i)[k];
            (-3.0 * v(j) + 4.0 * v(j + 1) - v(j + 2)) / (2.0 * h)
        })
        .collect()
}

/// `U_x` at node `j`: one-sided at the ends, central elsewhere.
pub fn one_sided_derivative(u: &Profile, j: usize) -> Vec<f64> {
    let n = u.grid.n;
    if j == 0 {
        right_derivative(u, 0)
    } else if j == n {
        left_derivative(u, n)
    } else {
        let h = u.grid.h;
        (0..u.dim)
            .map(|k| (u.point(j + 1)[k] - u.point(j - 1)[k]) / (2.0 * h))
            .collect()
    }
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `F(x_j)`, the first-integral flux at a node.
fn flux(u: &Profile, c: f64, p: &PotentialSpec, j: usize) -> f64 {
    let g = &u.grid;
    (c * (g.x(j) - g.x_ref)).exp() / c * (p.eval(u.point(j)) - 0.5 * sq(&one_sided_derivative(u, j)))
}

/// The rim bounds on the λ-gaps and how the wave compares.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeBounds {
    /// `Λ_{α,-}`, absent when `w* ≤ 0`.
    pub lambda_minus_bound: Option<f64>,
    /// `Λ_{α,+}`, absent when `α ≤ 0`.
    pub lambda_plus_bound: Option<f64>,
    /// `λ^{α-} - λ⁻`.
    pub gap_minus: Option<f64>,
    /// `λ⁺ - λ^{α-}`.
    pub gap_plus: Option<f64>,
    pub margin_minus: Option<f64>,
    pub margin_plus: Option<f64>,
    /// The `Λ_{α,+}` bound is asserted only for waves with action `≤ 0`.
    pub plus_applies: bool,
    pub note: Option<String>,
    pub pass: bool,
}

/// `Λ_{α,-} = (1/w*)(c R + √((c R)² + 2 w* |R - r0|))` with `R = R^α_max`.
pub fn lambda_alpha_minus_bound(geo: &GeometryReport, c: f64) -> Option<f64> {
    let w = geo.w_star;
    if !(w > 0.0) {
        return None;
    }
    let cr = c * geo.r_alpha_max;
    Some((cr + (cr * cr + 2.0 * w * (geo.r_alpha_max - geo.r0).abs()).sqrt()) / w)
}

/// `Λ_{α,+} = (1/c) ln(1 + W⁻(a⁻)/α)`.
pub fn lambda_alpha_plus_bound(depth: f64, c: f64, alpha: f64) -> Option<f64> {
    (alpha > 0.0 && c > 0.0).then(|| (depth / alpha).ln_1p() / c)
}

fn compare_gaps(
    geo: &GeometryReport,
    depth: f64,
    c: f64,
    alpha: f64,
    ct: &CrossingTimes,
    action_value: f64,
) -> TimeBounds {
    let mut out = TimeBounds {
        lambda_minus_bound: lambda_alpha_minus_bound(geo, c),
        lambda_plus_bound: lambda_alpha_plus_bound(depth, c, alpha),
        plus_applies: action_value <= 0.0,
        ..Default::default()
    };
    if let (Some(lm), Some(la)) = (ct.lambda_minus, ct.lambda_alpha_minus) {
        out.gap_minus = Some(la - lm);
    }
    if let (Some(la), Some(lp)) = (ct.lambda_alpha_minus, ct.lambda_plus) {
        out.gap_plus = Some(lp - la);
    }
    out.margin_minus = out.lambda_minus_bound.zip(out.gap_minus).map(|(b, g)| b - g);
    out.margin_plus = out.lambda_plus_bound.zip(out.gap_plus).map(|(b, g)| b - g);
    let mut notes = Vec::new();
    if out.lambda_minus_bound.is_none() {
        notes.push("w* <= 0: (h*) item 2 fails, Λ_{α,-} check skipped");
    }
    if out.lambda_plus_bound.is_none() {
        notes.push("α = 0: Λ_{α,+} is infinite");
    }
    if out.gap_minus.is_none() || out.gap_plus.is_none() {
        notes.push("crossing times undefined");
    }
    if !notes.is_empty() {
        out.note = Some(notes.join("; "));
    }
    out.pass = out.margin_minus.is_none_or(|m| m >= 0.0)
        && (!out.plus_applies || out.margin_plus.is_none_or(|m| m >= 0.0));
    out
}

/// Compares the measured λ-gaps of a minimizer with `Λ_{α,±}`.
pub fn time_bounds_check(
    geo: &GeometryReport,
    p: &PotentialSpec,
    c: f64,
    result: &MinimizeResult,
    alpha: f64,
) -> TimeBounds {
    compare_gaps(
        geo,
        p.depth(),
        c,
        alpha,
        &result.crossings,
        result.action.scaled_total,
    )
}

/// Residuals of every identity checked on a wave. All residuals are
/// nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    pub c: f64,
    pub action: f64,
    /// `max |U_xx + c U_x - ∇W(U)|` over interior nodes.
    pub ode_residual_max: f64,
    /// `|c ∫|U_x|² - W⁻(a⁻)| / W⁻(a⁻)`.
    pub speed_identity_rel_err: f64,
    /// `max_k |∫∂_k W(U) - c(a⁺ - a⁻)_k|`.
    pub vector_identity_err: f64,
    /// Worst first-integral residual over random subintervals of
    /// `[-L, L]`, relative to the action magnitude on `[-L, L]`.
    pub first_integral_rel_err: f64,
    /// `|F(ω)|` at `ω = M - 1`.
    pub equipartition_tail: f64,
    pub omega_tail: f64,
    /// Jump summands at `+L` and `-L`.
    pub jump_terms: [f64; 2],
    /// `|E - tail - (F(M) - F(-M) + jumps)|`.
    pub action_minus_jumps_err: f64,
    pub crossings: CrossingTimes,
    pub monotonicity_violations: usize,
    pub time_bounds: Option<TimeBounds>,
    /// `None` when the bounds could not be evaluated.
    pub lambda_bounds_ok: Option<bool>,
}

impl WaveReport {
    /// Exactly one crossing of the `a⁺` sphere and one exit from `C_α⁻`.
    pub fn single_crossings(&self) -> bool {
        self.crossings.plus_sphere_crossings == 1 && self.crossings.alpha_exits == 1
    }
}

/// [`verify_wave_seeded`] with seed 0.
pub fn verify_wave(
    wave: &Profile,
    c: f64,
    p: &PotentialSpec,
    cs: &ConstraintSpec,
    alpha: f64,
    geo: Option<&GeometryReport>,
) -> WaveReport {
    verify_wave_seeded(wave, c, p, cs, alpha, geo, 0)
}

/// Evaluates every identity on `wave`, a solution at speed `c`. The
/// first-integral subintervals are drawn inside `[-L, L]` from `seed`.
pub fn verify_wave_seeded(
    wave: &Profile,
    c: f64,
    p: &PotentialSpec,
    cs: &ConstraintSpec,
    alpha: f64,
    geo: Option<&GeometryReport>,
    seed: u64,
) -> WaveReport {
    let g = &wave.grid;
    let n = g.n;
    let h = g.h;
    let dim = wave.dim;
    let e = action(c, wave, p).ok();
    let action_value = e.map_or(f64::NAN, |e| e.scaled_total);

    let mut ode = 0.0_f64;
    let mut gw = vec![0.0; dim];
    for j in 1..n {
        p.grad(wave.point(j), &mut gw);
        for (k, gk) in gw.iter().enumerate() {
            let (um, u0, up) = (wave.point(j - 1)[k], wave.point(j)[k], wave.point(j + 1)[k]);
            let r = (up - 2.0 * u0 + um) / (h * h) + c * (up - um) / (2.0 * h) - gk;
            ode = ode.max(r.abs());
        }
    }

    let mut grad_sq = 0.0;
    let mut grad_int = vec![0.0; dim];
    for j in 0..=n {
        let tau = if j == 0 || j == n { 0.5 } else { 1.0 };
        grad_sq += tau * h * sq(&one_sided_derivative(wave, j));
        p.grad(wave.point(j), &mut gw);
        for k in 0..dim {
            grad_int[k] += tau * h * gw[k];
        }
    }
    let depth = p.depth();
    let speed_identity_rel_err = (c * grad_sq - depth).abs() / depth;
    let vector_identity_err = (0..dim)
        .map(|k| (grad_int[k] - c * (p.a_plus[k] - p.a_minus[k])).abs())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((-cs.l).max(g.left + 2.0 * h), cs.l.min(g.right() - 2.0 * h));
    let window_scale = restricted_action(c, wave, p, lo, hi).map_or(0.0, |r| r.magnitude());
    let mut first_integral_rel_err = 0.0_f64;
    for _ in 0..FIRST_INTEGRAL_INTERVALS {
        let a = rng.random_range(lo..hi);
        let b = rng.random_range(lo..hi);
        let (i0, i1) = (g.nearest(a.min(b)), g.nearest(a.max(b)));
        if i1 <= i0 || window_scale <= 0.0 {
            continue;
        }
        if let Ok(r) = restricted_action(c, wave, p, g.x(i0), g.x(i1)) {
            let exact = flux(wave, c, p, i1) - flux(wave, c, p, i0);
            first_integral_rel_err = first_integral_rel_err.max((r.scaled_total - exact).abs() / window_scale);
        }
    }

    let omega_tail = g.right() - 1.0;
    let equipartition_tail = flux(wave, c, p, g.nearest(omega_tail)).abs();

    let jump = |x: f64| {
        let j = g.nearest(x);
        if j < 2 || j + 2 > n {
            return 0.0;
        }
        let w = (c * (g.x(j) - g.x_ref)).exp();
        w / (2.0 * c) * (sq(&right_derivative(wave, j)) - sq(&left_derivative(wave, j)))
    };
    let jump_terms = [jump(cs.l), jump(-cs.l)];
    let tail = left_tail(c, wave, p).unwrap_or(f64::NAN);
    let action_minus_jumps_err = (action_value
        - tail
        - (flux(wave, c, p, n) - flux(wave, c, p, 0) + jump_terms[0] + jump_terms[1]))
        .abs();

    let crossings = crossing_times(wave, p, cs, alpha);
    let mut monotonicity_violations = 0;
    if let Some(lp) = crossings.lambda_plus {
        for j in 0..n {
            if g.x(j) >= lp
                && dist(wave.point(j + 1), &p.a_plus) > dist(wave.point(j), &p.a_plus) + MONOTONICITY_TOL
            {
                monotonicity_violations += 1;
            }
        }
    }
    if let Some(la) = crossings.lambda_alpha_minus {
        for j in 0..n {
            if g.x(j + 1) <= la
                && dist(wave.point(j + 1), &p.a_minus) + MONOTONICITY_TOL < dist(wave.point(j), &p.a_minus)
            {
                monotonicity_violations += 1;
            }
        }
    }

    let time_bounds = geo.map(|geo| compare_gaps(geo, depth, c, alpha, &crossings, action_value));
    let lambda_bounds_ok = time_bounds.as_ref().and_then(|t| {
        (t.margin_minus.is_some() || t.margin_plus.is_some()).then_some(t.pass)
    });

    WaveReport {
        c,
        action: action_value,
        ode_residual_max: ode,
        speed_identity_rel_err,
        vector_identity_err,
        first_integral_rel_err,
        equipartition_tail,
        omega_tail,
        jump_terms,
        action_minus_jumps_err,
        crossings,
        monotonicity_violations,
        time_bounds,
        lambda_bounds_ok,
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::grid::make_grid;
    use crate::potential::make_builtin;

    #[test]
    fn exact_front_identities() {
        let p = make_builtin("nagumo", &BTreeMap::new()).unwrap();
        let c = 2f64.sqrt() / 4.0;
        let g = make_grid(24.0, 0.01, 8.0).unwrap();
        let u = Profile::from_fn(g, 1, true, |x| vec![1.0 / (1.0 + (x / 2f64.sqrt()).exp())]);
        let cs = ConstraintSpec::new(8.0, 0.05, &p).unwrap();
        let r = verify_wave(&u, c, &p, &cs, 1e-4, None);
        assert!(r.speed_identity_rel_err < 1e-3, "{}", r.speed_identity_rel_err);
        assert!(r.vector_identity_err < 1e-3, "{}", r.vector_identity_err);
        assert!(r.ode_residual_max < 1e-4, "{}", r.ode_residual_max);
        assert!(r.first_integral_rel_err < 1e-3, "{}", r.first_integral_rel_err);
        assert_eq!(r.monotonicity_violations, 0);
        assert!(r.single_crossings());
    }

    #[test]
    fn constant_profile_is_silent() {
        let p = make_builtin("nagumo", &BTreeMap::new()).unwrap();
        let g = make_grid(10.0, 0.01, 0.0).unwrap();
        let u = Profile::constant(g, &[0.0], true);
        let cs = ConstraintSpec::new(4.0, 0.05, &p).unwrap();
        let r = verify_wave(&u, 0.3, &p, &cs, 1e-4, None);
        assert_eq!(r.ode_residual_max, 0.0);
        assert_eq!(r.equipartition_tail, 0.0);
        assert_eq!(r.first_integral_rel_err, 0.0);
        assert_eq!(r.jump_terms, [0.0, 0.0]);
    }

    #[test]
    fn plus_bound_scaling() {
        let b = lambda_alpha_plus_bound(1.0 / 24.0, 0.3, 1e-3).unwrap();
        let b2 = lambda_alpha_plus_bound(1.0 / 24.0, 0.6, 1e-3).unwrap();
        assert!((b - 2.0 * b2).abs() < 1e-12);
        assert!(lambda_alpha_plus_bound(1.0 / 24.0, 0.3, 2e-3).unwrap() < b);
        assert_eq!(lambda_alpha_plus_bound(1.0, 0.3, 0.0), None);
    }
}
