//! The wave speed `c* = sup C`, where `C` is the set of speeds at which a
//! constrained minimizer has negative action.
//!
//! [`solve_speed`] bisects on the sign of the minimized action inside the
//! a priori bracket `[c_min/2, c_max]`, then confirms the zero of the action
//! on a re-centered wave with the rims moved out to `±2L`. The bisection
//! stops on the band `|E| ≤ tol_E`, so its midpoint sits below the zero of
//! the action by about `tol_E / (dE/dc)`; a secant on the action of the
//! confirmed wave then moves `c*` onto the zero itself.

use serde::{Deserialize, Serialize};

use crate::action::{action, left_tail, ActionKernel};
use crate::constrained::{minimize, ConstraintSpec, MinimizeOptions, MinimizeResult};
use crate::grid::{affine_seed, make_grid, Grid, Profile};
use crate::potential::{geometry_probe, reflect_above, GeometryReport, Omega, PotentialSpec};
use crate::{Error, Result};

/// A priori bounds on the speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedBracket {
    pub c_min: f64,
    pub c_max: f64,
    pub d0: f64,
    /// Ramp half-width attaining `c_min`.
    pub t_star: f64,
}

const T_POINTS: usize = 32;
const RAMP_POINTS: usize = 512;

/// `c_max = √(2W⁻(a⁻))/d0` and the affine-competitor lower bound
///
/// ```text
/// c_min = sup_t W⁻(a⁻) e^{-2t c_max} / (½(|a⁺ - a⁻|/2t)² 2t + ∫_{-t}^{t} W⁺(ramp))
/// ```
///
/// over 32 log-spaced `t ∈ [0.05, 50]`.
pub fn speed_bounds(p: &PotentialSpec, geo: &GeometryReport) -> Result<SpeedBracket> {
    let d0 = geo.d0;
    if !(d0 > 0.0) {
        return Err(Error::Geometry(format!("d0 = {d0} must be positive")));
    }
    let depth = p.depth();
    let c_max = (2.0 * depth).sqrt() / d0;
    let sep = p.separation();
    let (lo, hi) = (0.05f64.ln(), 50f64.ln());
    let mut best = (0.0, 0.0);
    let mut point = vec![0.0; p.dim];
    for i in 0..T_POINTS {
        let t = (lo + (hi - lo) * i as f64 / (T_POINTS - 1) as f64).exp();
        let kinetic = 0.5 * (sep / (2.0 * t)).powi(2) * 2.0 * t;
        let dx = 2.0 * t / (RAMP_POINTS - 1) as f64;
        let mut ramp = 0.0;
        for k in 0..RAMP_POINTS {
            let s = k as f64 / (RAMP_POINTS - 1) as f64;
            for (q, (m, pl)) in point.iter_mut().zip(p.a_minus.iter().zip(&p.a_plus)) {
                *q = m + s * (pl - m);
            }
            let tau = if k == 0 || k == RAMP_POINTS - 1 { 0.5 } else { 1.0 };
            ramp += tau * dx * p.eval(&point).max(0.0);
        }
        let value = depth * (-2.0 * t * c_max).exp() / (kinetic + ramp);
        if value > best.0 {
            best = (value, t);
        }
    }
    Ok(SpeedBracket {
        c_min: best.0,
        c_max,
        d0,
        t_star: best.1,
    })
}

/// Minimized scaled action at `c`, the smaller of a cold start from the
/// affine seed of half-width `seed_t` and, if given, a warm start.
pub fn min_action(
    c: f64,
    p: &PotentialSpec,
    cs: &ConstraintSpec,
    grid: &Grid,
    seed_t: f64,
    warm: Option<&Profile>,
    opts: &MinimizeOptions,
) -> Result<(f64, MinimizeResult)> {
    let cold_seed = affine_seed(grid, p, seed_t.min(grid.half_width))?;
    let (cold, warm) = rayon::join(
        || minimize(c, cs, &cold_seed, p, opts),
        || warm.map(|w| minimize(c, cs, w, p, opts)),
    );
    let mut best = cold?;
    if let Some(w) = warm.transpose()? {
        if w.action.scaled_total < best.action.scaled_total {
            best = w;
        }
    }
    Ok((best.action.scaled_total, best))
}

/// Controls for [`solve_speed`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedOptions {
    /// Half-width `M` of the grid.
    pub m: f64,
    pub h: f64,
    /// Rim position.
    pub l: f64,
    /// Bracket width at which bisection stops; defaults to `1e-4 c_max`.
    pub tol_c: Option<f64>,
    /// Width of the zero band of the action.
    pub tol_e: f64,
    /// Normalization abscissa of the action; defaults to `L`.
    pub x_ref: Option<f64>,
    /// Half-width of the affine seed; defaults to `L/2`.
    pub seed_t: Option<f64>,
    /// Box in which (h**) is tried when (h*) fails.
    pub omega: Option<Omega>,
    /// Secant refinement of `c*` onto the zero of the confirmed action.
    pub refine: bool,
    pub minimize: MinimizeOptions,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        SpeedOptions {
            m: 24.0,
            h: 0.01,
            l: 8.0,
            tol_c: None,
            tol_e: 1e-5,
            x_ref: None,
            seed_t: None,
            omega: None,
            refine: true,
            minimize: MinimizeOptions::default(),
        }
    }
}

/// One bisection evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub c: f64,
    pub action: f64,
    /// `action < -tol_E`.
    pub in_set: bool,
    pub rim_contact_minus: bool,
    pub rim_contact_plus: bool,
    pub converged: bool,
    pub iterations: usize,
}

/// Whether the wave of a reflected problem stayed where `W̄ = W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionOutcome {
    pub omega: Omega,
    pub level: f64,
    pub premise_ok: bool,
    /// Smallest `Ω` margin over the wave nodes; positive inside.
    pub min_margin: f64,
    pub geometry: GeometryReport,
}

impl ReflectionOutcome {
    pub fn stayed_inside(&self) -> bool {
        self.min_margin > 0.0
    }
}

/// The computed speed and wave.
#[derive(Clone, Debug)]
pub struct SpeedResult {
    pub c_star: f64,
    /// The confirmed wave, re-centered so that `λ^{α-} ≈ 0`.
    pub wave: Profile,
    pub action_at_c_star: f64,
    pub trace: Vec<TracePoint>,
    pub bracket: SpeedBracket,
    /// Final bisection interval.
    pub c_lo: f64,
    pub c_hi: f64,
    /// Midpoint of the final bisection interval.
    pub c_mid: f64,
    /// Secant steps taken from `c_mid`; 0 when `c* = c_mid`.
    pub refine_steps: usize,
    pub l_used: f64,
    pub m_used: f64,
    pub tol_c: f64,
    pub tol_e: f64,
    pub rim_free: bool,
    /// Minimizer of the confirmation solve at `±2L`.
    pub confirmation: MinimizeResult,
    /// Cells by which the wave was shifted before confirmation.
    pub recenter_shift: i64,
    /// The potential actually solved, reflected if (h*) failed.
    pub potential: PotentialSpec,
    pub constraint: ConstraintSpec,
    pub reflection: Option<ReflectionOutcome>,
}

impl SpeedResult {
    /// The zero band holds and the confirmed wave touches no rim.
    pub fn confirmed(&self) -> bool {
        self.action_at_c_star.abs() <= self.tol_e && self.rim_free
    }
}

/// Chooses the potential to solve: `p` when (h*) holds, otherwise its
/// reflection in `omega` when the reflected problem passes (h*).
pub fn resolve_hypotheses(
    p: &PotentialSpec,
    geo: &GeometryReport,
    omega: Option<&Omega>,
) -> Result<(PotentialSpec, GeometryReport)> {
    if geo.h_star_ok() {
        return Ok((p.clone(), geo.clone()));
    }
    let failed = geo.hypothesis_flags.failed().join(", ");
    let Some(omega) = omega else {
        return Err(Error::Hypothesis {
            hypothesis: "(h*)".into(),
            detail: format!("failed: {failed}; no box for (h**) supplied"),
        });
    };
    let pb = reflect_above(p, omega)?;
    let premise_ok = pb.reflection.as_ref().is_some_and(|r| r.premise_ok);
    if !premise_ok {
        return Err(Error::Hypothesis {
            hypothesis: "(h**)".into(),
            detail: format!("(h*) failed ({failed}) and the boundary minimum of W on omega does not exceed its interior values"),
        });
    }
    let gb = geometry_probe(&pb, geo.alpha, geo.r0, Some(&geo.probe_box), geo.resolution)?;
    if !gb.h_star_ok() {
        return Err(Error::Hypothesis {
            hypothesis: "(h**)".into(),
            detail: format!(
                "the reflected potential still fails {}",
                gb.hypothesis_flags.failed().join(", ")
            ),
        });
    }
    Ok((pb, gb))
}

/// Profile on a wider grid with the same spacing, padded with `a∓`.
fn widen(u: &Profile, half_width: f64) -> Result<Profile> {
    let extra = ((half_width - u.grid.half_width) / u.grid.h).round() as usize;
    let g = make_grid(
        u.grid.half_width + extra as f64 * u.grid.h,
        u.grid.h,
        u.grid.x_ref,
    )?;
    let am = &u.values[..u.dim];
    let ap = &u.values[u.values.len() - u.dim..];
    let mut values = Vec::with_capacity(g.len() * u.dim);
    for _ in 0..extra {
        values.extend_from_slice(am);
    }
    values.extend_from_slice(&u.values);
    for _ in 0..extra {
        values.extend_from_slice(ap);
    }
    Profile::new(g, u.dim, values, u.clamped)
}

/// Bisection for `c*` followed by the confirmation solve.
///
/// `r0` and `α` are those of `geo`. When (h*) fails and `opts.omega` is
/// set, the reflected potential is solved instead and the result records
/// whether the wave stayed in `Ω`.
pub fn solve_speed(p: &PotentialSpec, geo: &GeometryReport, opts: &SpeedOptions) -> Result<SpeedResult> {
    let (p, geo) = resolve_hypotheses(p, geo, opts.omega.as_ref())?;
    let bracket = speed_bounds(&p, &geo)?;
    let x_ref = opts.x_ref.unwrap_or(opts.l);
    let grid = make_grid(opts.m, opts.h, x_ref)?;
    grid.check_solver_limits()?;
    let cs = ConstraintSpec::new(opts.l, geo.r0, &p)?;
    cs.check_grid(&grid)?;
    ActionKernel::new(&grid, bracket.c_max)?;
    let tol_c = opts.tol_c.unwrap_or(1e-4 * bracket.c_max);
    if !(tol_c > 0.0 && opts.tol_e > 0.0) {
        return Err(Error::Config("tol_c and tol_E must be positive".into()));
    }
    let seed_t = opts.seed_t.unwrap_or(opts.l / 2.0);
    let mopts = MinimizeOptions {
        alpha: geo.alpha,
        ..opts.minimize.clone()
    };

    let point = |c: f64, r: &MinimizeResult| TracePoint {
        c,
        action: r.action.scaled_total,
        in_set: r.action.scaled_total < -opts.tol_e,
        rim_contact_minus: r.rim_contact_minus,
        rim_contact_plus: r.rim_contact_plus,
        converged: r.converged,
        iterations: r.iterations,
    };

    let mut c_lo = 0.5 * bracket.c_min;
    let mut c_hi = bracket.c_max;
    let (lo, hi) = rayon::join(
        || min_action(c_lo, &p, &cs, &grid, seed_t, None, &mopts),
        || min_action(c_hi, &p, &cs, &grid, seed_t, None, &mopts),
    );
    let (lo, hi) = (lo?.1, hi?.1);
    let mut trace = vec![point(c_lo, &lo), point(c_hi, &hi)];
    if !trace[0].in_set {
        return Err(Error::Bisection(format!(
            "minimized action {:.3e} at c_min/2 = {c_lo:.4e} is not negative",
            trace[0].action
        )));
    }
    if trace[1].in_set {
        return Err(Error::Bisection(format!(
            "minimized action {:.3e} at c_max = {c_hi:.4e} is negative",
            trace[1].action
        )));
    }
    let mut warm = lo.profile;
    while c_hi - c_lo > tol_c {
        let c = 0.5 * (c_lo + c_hi);
        let (_, r) = min_action(c, &p, &cs, &grid, seed_t, Some(&warm), &mopts)?;
        let tp = point(c, &r);
        trace.push(tp);
        if tp.in_set {
            c_lo = c;
        } else {
            c_hi = c;
        }
        warm = r.profile;
    }
    check_trace(&trace)?;
    let c_mid = 0.5 * (c_lo + c_hi);

    let (_, at_mid) = min_action(c_mid, &p, &cs, &grid, seed_t, Some(&warm), &mopts)?;
    let (confirmation, shift, l_used, m_used) = confirm(c_mid, &p, &cs, &at_mid, &mopts)?;
    let (confirmation, shift, l_used, m_used) = if rim_free(&confirmation) {
        (confirmation, shift, l_used, m_used)
    } else {
        let wider = widen(&confirmation.profile, 1.5 * m_used)?;
        let cs2 = cs.with_l(l_used);
        let retry = minimize(c_mid, &cs2, &wider, &p, &no_translation(&mopts))?;
        let m2 = wider.grid.half_width;
        (retry, shift, l_used, m2)
    };
    let (c_star, confirmation, refine_steps) = if opts.refine {
        let reach = (c_hi - c_lo).max(0.05 * c_mid).max(10.0 * tol_c);
        refine(c_mid, confirmation, &p, &cs.with_l(l_used), &mopts, (c_lo - reach, c_hi + reach))?
    } else {
        (c_mid, confirmation, 0)
    };

    let wave = confirmation.profile.clone();
    let reflection = p.reflection.as_ref().map(|r| ReflectionOutcome {
        omega: r.omega.clone(),
        level: r.level,
        premise_ok: r.premise_ok,
        min_margin: (0..wave.len())
            .map(|j| r.omega.margin(wave.point(j)))
            .fold(f64::INFINITY, f64::min),
        geometry: geo.clone(),
    });
    Ok(SpeedResult {
        c_star,
        action_at_c_star: confirmation.action.scaled_total,
        rim_free: rim_free(&confirmation),
        wave,
        trace,
        bracket,
        c_lo,
        c_hi,
        c_mid,
        refine_steps,
        l_used,
        m_used,
        tol_c,
        tol_e: opts.tol_e,
        confirmation,
        recenter_shift: shift,
        constraint: cs.with_l(l_used),
        potential: p,
        reflection,
    })
}

fn rim_free(r: &MinimizeResult) -> bool {
    !r.rim_contact_minus && !r.rim_contact_plus
}

/// At the zero of the action every translate is a minimizer, so the
/// confirmation solve holds the node at the origin and never translates.
fn no_translation(opts: &MinimizeOptions) -> MinimizeOptions {
    MinimizeOptions {
        translate_every: 0,
        anchor: Some(0.0),
        ..opts.clone()
    }
}

/// Shifts `r` so that `λ^{α-} ≈ 0` and re-minimizes with the rims at
/// `±2L`, widening the grid if `2L` does not fit.
fn confirm(
    c: f64,
    p: &PotentialSpec,
    cs: &ConstraintSpec,
    r: &MinimizeResult,
    opts: &MinimizeOptions,
) -> Result<(MinimizeResult, i64, f64, f64)> {
    let u = &r.profile;
    let anchor = r.lambda_alpha_minus().or(r.lambda_minus()).unwrap_or(0.0);
    let shift = -(anchor / u.grid.h).round() as i64;
    let centered = u.shift_samples(shift, &p.a_minus, &p.a_plus);
    let l2 = 2.0 * cs.l;
    let seed = if l2 < u.grid.half_width - 2.0 * u.grid.h {
        centered
    } else {
        widen(&centered, l2 + (u.grid.half_width - cs.l))?
    };
    let m_used = seed.grid.half_width;
    let out = minimize(c, &cs.with_l(l2), &seed, p, &no_translation(opts))?;
    Ok((out, shift, l2, m_used))
}

/// Secant iteration on `c ↦ E_c` of the anchored confirmation solve. The
/// pin carries a force proportional to `c E_c`, so at the zero the wave is
/// a free solution. Falls back to the start when an iterate leaves
/// `window`, touches a rim or fails to converge.
fn refine(
    c0: f64,
    start: MinimizeResult,
    p: &PotentialSpec,
    cs: &ConstraintSpec,
    opts: &MinimizeOptions,
    window: (f64, f64),
) -> Result<(f64, MinimizeResult, usize)> {
    const MAX_STEPS: usize = 8;
    let fixed = no_translation(opts);
    let e0 = start.action.scaled_total;
    if e0 == 0.0 || !start.converged {
        return Ok((c0, start, 0));
    }
    let mut prev = (c0, e0);
    let probe = c0 * (1.0 + 1e-4);
    let mut cur_c = probe;
    let mut cur = minimize(cur_c, cs, &start.profile, p, &fixed)?;
    for step in 1..=MAX_STEPS {
        let e = cur.action.scaled_total;
        if !(cur.converged && rim_free(&cur) && e.is_finite()) {
            break;
        }
        let slope = (e - prev.1) / (cur_c - prev.0);
        if !(slope.is_finite() && slope != 0.0) {
            break;
        }
        let next = cur_c - e / slope;
        if !(next > window.0 && next < window.1) {
            break;
        }
        if (next - cur_c).abs() <= 1e-10 * cur_c {
            return Ok((cur_c, cur, step));
        }
        prev = (cur_c, e);
        let r = minimize(next, cs, &cur.profile, p, &fixed)?;
        cur_c = next;
        cur = r;
        if step == MAX_STEPS && cur.converged && rim_free(&cur) {
            return Ok((cur_c, cur, step));
        }
    }
    Ok((c0, start, 0))
}

/// No speed accepted into `C` lies above a rejected one.
pub fn check_trace(trace: &[TracePoint]) -> Result<()> {
    let highest_in = trace
        .iter()
        .filter(|t| t.in_set)
        .map(|t| t.c)
        .fold(f64::NEG_INFINITY, f64::max);
    let lowest_out = trace
        .iter()
        .filter(|t| !t.in_set)
        .map(|t| t.c)
        .fold(f64::INFINITY, f64::min);
    if highest_in >= lowest_out {
        return Err(Error::Bisection(format!(
            "predicate not monotone: c = {highest_in:.6} in C above rejected c = {lowest_out:.6}; refine the grid"
        )));
    }
    Ok(())
}

/// Both sides of
///
/// ```text
/// c₁ E_{c₁}(U) = (c₁ - c₂) ∫|U_x|² e^{c₁x} dx + [e^{c₁x}(W(U) - ½|U_x|²)]_{-M}^{M}
/// ```
///
/// for a wave `U` of speed `c₂`, in units scaled by `e^{-c₁ x_ref}`. The
/// constant extension left of the grid adds `c₁` times its tail to the
/// boundary term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessCheck {
    pub c_star: f64,
    pub c_alt: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub boundary: f64,
    /// `|lhs - rhs|` relative to `c₁` times the magnitude of the action.
    pub residual: f64,
    pub action_alt: f64,
    pub action_alt_negative: bool,
}

/// Evaluates the identity behind uniqueness of the speed on a discrete
/// wave solved at `c_star`, with `c₁ = c_alt`.
pub fn uniqueness_check(wave: &Profile, c_star: f64, c_alt: f64, p: &PotentialSpec) -> Result<UniquenessCheck> {
    let e = action(c_alt, wave, p)?;
    let lhs = c_alt * e.scaled_total;
    let weighted_sq = 2.0 * e.kinetic;
    let g = &wave.grid;
    let n = g.n;
    let end_term = |j: usize| {
        let d = crate::diagnostics::one_sided_derivative(wave, j);
        let sq: f64 = d.iter().map(|v| v * v).sum();
        (c_alt * (g.x(j) - g.x_ref)).exp() * (p.eval(wave.point(j)) - 0.5 * sq)
    };
    let boundary = end_term(n) - end_term(0) + c_alt * left_tail(c_alt, wave, p)?;
    let rhs = (c_alt - c_star) * weighted_sq + boundary;
    Ok(UniquenessCheck {
        c_star,
        c_alt,
        lhs,
        rhs,
        boundary,
        residual: (lhs - rhs).abs() / (c_alt * e.magnitude()),
        action_alt: e.scaled_total,
        action_alt_negative: e.scaled_total < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::potential::make_builtin;

    #[test]
    fn nagumo_bracket() {
        let p = make_builtin("nagumo", &BTreeMap::new()).unwrap();
        let geo = geometry_probe(&p, 0.0, 0.05, None, 2001).unwrap();
        let b = speed_bounds(&p, &geo).unwrap();
        let q = 1.25f64 / 3.0;
        let root = 2.0 * (q - (q * q - 0.125).sqrt());
        let d0 = root - 0.05;
        assert!((b.c_max - (1.0 / 12.0f64).sqrt() / d0).abs() < 1e-3);
        assert!(b.c_min > 0.0 && b.c_min <= b.c_max);
        assert!(b.c_min <= 2f64.sqrt() / 4.0);
    }

    #[test]
    fn trace_monotonicity() {
        let tp = |c: f64, in_set: bool| TracePoint {
            c,
            action: if in_set { -1.0 } else { 1.0 },
            in_set,
            rim_contact_minus: false,
            rim_contact_plus: false,
            converged: true,
            iterations: 1,
        };
        assert!(check_trace(&[tp(0.1, true), tp(0.5, false), tp(0.3, true)]).is_ok());
        assert!(check_trace(&[tp(0.1, true), tp(0.3, false), tp(0.4, true)]).is_err());
    }
}
