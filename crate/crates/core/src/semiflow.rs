//! Method-of-lines evolution of `u_t = u_zz - ∇W(u)` and the speed of the
//! emerging front.
//!
//! Each step solves `(I - dt D₂) u^{n+1} = u^n - dt ∇W(u^n)` with the
//! standard three-point Laplacian `D₂` and the ends held at `a∓`. The front
//! is the first crossing of component 1 through the midlevel
//! `(a⁺₁ + a⁻₁)/2`.

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Profile};
use crate::potential::{norm, PotentialSpec};
use crate::{Error, Result};

/// Largest admissible `dt / h²`.
pub const DT_FACTOR: f64 = 0.4;
/// Allowed increase of the free energy in one step.
pub const ENERGY_TOL: f64 = 1e-10;
/// Fewest samples [`front_speed`] accepts.
pub const MIN_SAMPLES: usize = 20;

/// A field on a grid at some time.
#[derive(Clone, Debug)]
pub struct SemiflowState {
    pub field: Profile,
    pub time: f64,
    pub dt: f64,
    /// Abscissa of the window's left end in the fixed frame; moves when
    /// the window follows the front.
    pub offset: f64,
}

impl SemiflowState {
    /// Pins the ends to `a∓`; `dt` defaults to `0.4 h²`.
    pub fn new(mut field: Profile, p: &PotentialSpec, dt: Option<f64>) -> Result<Self> {
        if field.dim != p.dim {
            return Err(Error::Dimension {
                expected: p.dim,
                got: field.dim,
            });
        }
        let h = field.grid.h;
        let dt = dt.unwrap_or(DT_FACTOR * h * h);
        if !(dt > 0.0 && dt <= DT_FACTOR * h * h * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "dt = {dt} must lie in (0, 0.4 h² = {}]",
                DT_FACTOR * h * h
            )));
        }
        let last = field.len() - 1;
        field.point_mut(0).copy_from_slice(&p.a_minus);
        field.point_mut(last).copy_from_slice(&p.a_plus);
        field.clamped = true;
        Ok(SemiflowState {
            field,
            time: 0.0,
            dt,
            offset: 0.0,
        })
    }
}

/// `a⁻` for `x < 0`, `a⁺` for `x ≥ 0`.
pub fn step_datum(grid: &Grid, p: &PotentialSpec) -> Profile {
    Profile::from_fn(grid.clone(), p.dim, true, |x| {
        if x < 0.0 {
            p.a_minus.clone()
        } else {
            p.a_plus.clone()
        }
    })
}

/// Unweighted free energy `∫(½|u_z|² + W(u)) dz` by the same quadrature
/// as the action.
pub fn free_energy(u: &Profile, p: &PotentialSpec) -> f64 {
    let h = u.grid.h;
    let n = u.grid.n;
    let mut e = 0.0;
    for j in 0..n {
        let sq: f64 = u
            .point(j + 1)
            .iter()
            .zip(u.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        e += 0.5 * sq / h;
    }
    for j in 0..=n {
        let tau = if j == 0 || j == n { 0.5 } else { 1.0 };
        e += tau * h * p.eval(u.point(j));
    }
    e
}

/// Front positions and their least-squares speed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrontTrace {
    /// `(t, front position)` in the fixed frame.
    pub samples: Vec<(f64, f64)>,
    pub fitted_speed: f64,
    /// Root-mean-square deviation of the fitted half from the line.
    pub fit_residual: f64,
}

impl FrontTrace {
    /// Fits the samples; see [`front_speed`].
    pub fn fit(samples: Vec<(f64, f64)>) -> Result<FrontTrace> {
        let (fitted_speed, fit_residual) = fit_line(&samples)?;
        Ok(FrontTrace {
            samples,
            fitted_speed,
            fit_residual,
        })
    }
}

fn fit_line(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Front(format!(
            "{} front samples, at least {MIN_SAMPLES} needed",
            samples.len()
        )));
    }
    let tail = &samples[samples.len() / 2..];
    let k = tail.len() as f64;
    let tm = tail.iter().map(|s| s.0).sum::<f64>() / k;
    let xm = tail.iter().map(|s| s.1).sum::<f64>() / k;
    let stt: f64 = tail.iter().map(|s| (s.0 - tm).powi(2)).sum();
    let stx: f64 = tail.iter().map(|s| (s.0 - tm) * (s.1 - xm)).sum();
    if !(stt > 0.0) {
        return Err(Error::Front("samples share one time".into()));
    }
    let slope = stx / stt;
    let rms = (tail
        .iter()
        .map(|s| (s.1 - xm - slope * (s.0 - tm)).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok((slope, rms))
}

/// Least-squares slope of position against time over the last half of the
/// samples.
pub fn front_speed(trace: &FrontTrace) -> Result<f64> {
    fit_line(&trace.samples).map(|f| f.0)
}

/// First crossing of component 1 through the midlevel, in window
/// coordinates.
pub fn front_position(u: &Profile, p: &PotentialSpec) -> Option<f64> {
    let mid = 0.5 * (p.a_plus[0] + p.a_minus[0]);
    let side = |j: usize| (u.point(j)[0] - mid) * (p.a_minus[0] - mid) > 0.0;
    let g = &u.grid;
    (0..u.len() - 1).find(|&j| side(j) && !side(j + 1)).map(|j| {
        let (f0, f1) = (u.point(j)[0] - mid, u.point(j + 1)[0] - mid);
        g.x(j) + g.h * f0 / (f0 - f1)
    })
}

/// Controls for [`run_semiflow`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiflowOptions {
    pub t_final: f64,
    /// Number of front samples over `[0, t_final]`.
    pub samples: usize,
    /// Shift the window when the front comes within this fraction of the
    /// half-width from either end; `None` keeps the window fixed.
    pub recenter_fraction: Option<f64>,
}

impl Default for SemiflowOptions {
    fn default() -> Self {
        SemiflowOptions {
            t_final: 40.0,
            samples: 200,
            recenter_fraction: Some(0.5),
        }
    }
}

/// Outcome of [`run_semiflow`].
#[derive(Clone, Debug)]
pub struct SemiflowRun {
    pub state: SemiflowState,
    pub trace: FrontTrace,
    pub steps: usize,
    pub window_shifts: usize,
    /// Steps, window shifts excluded, on which the free energy rose by
    /// more than [`ENERGY_TOL`].
    pub energy_increases: usize,
    /// Largest one-step change of the free energy, window shifts excluded.
    pub max_energy_change: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
}

/// Constant tridiagonal factorization of `I - dt D₂` on the interior.
struct Implicit {
    cp: Vec<f64>,
    denom: Vec<f64>,
    off: f64,
}

impl Implicit {
    fn new(n: usize, dt: f64, h: f64) -> Self {
        let r = dt / (h * h);
        let off = -r;
        let mut cp = vec![0.0; n + 1];
        let mut denom = vec![1.0; n + 1];
        for j in 1..n {
            let prev = if j > 1 { cp[j - 1] } else { 0.0 };
            denom[j] = 1.0 + 2.0 * r - off * prev;
            cp[j] = if j + 1 < n { off / denom[j] } else { 0.0 };
        }
        Implicit { cp, denom, off }
    }

    /// Solves in place for component `k`; `rhs` already carries the
    /// boundary contributions.
    fn solve(&self, rhs: &mut [f64], dim: usize, k: usize) {
        let n = self.denom.len() - 1;
        let mut prev = 0.0;
        for j in 1..n {
            let v = (rhs[j * dim + k] - self.off * prev) / self.denom[j];
            rhs[j * dim + k] = v;
            prev = v;
        }
        let mut next = 0.0;
        for j in (1..n).rev() {
            let v = rhs[j * dim + k] - self.cp[j] * next;
            rhs[j * dim + k] = v;
            next = v;
        }
    }
}

fn step(u: &mut Profile, p: &PotentialSpec, dt: f64, imp: &Implicit, gw: &mut [f64]) {
    let dim = u.dim;
    let n = u.grid.n;
    let r = dt / (u.grid.h * u.grid.h);
    let mut rhs = u.values.clone();
    for j in 1..n {
        p.grad(u.point(j), gw);
        for k in 0..dim {
            rhs[j * dim + k] -= dt * gw[k];
        }
    }
    for k in 0..dim {
        rhs[dim + k] += r * u.values[k];
        rhs[(n - 1) * dim + k] += r * u.values[n * dim + k];
    }
    for k in 0..dim {
        imp.solve(&mut rhs, dim, k);
    }
    u.values[dim..n * dim].copy_from_slice(&rhs[dim..n * dim]);
}

/// Evolves `state` to `t_final` without tracking.
pub fn evolve(state: SemiflowState, p: &PotentialSpec, t_final: f64) -> Result<SemiflowState> {
    let opts = SemiflowOptions {
        t_final,
        samples: 0,
        recenter_fraction: None,
    };
    Ok(advance(state, p, &opts, false)?.state)
}

/// Evolves `state` to `opts.t_final`, sampling the front and checking the
/// free energy at every step.
pub fn run_semiflow(state: SemiflowState, p: &PotentialSpec, opts: &SemiflowOptions) -> Result<SemiflowRun> {
    let mut run = advance(state, p, opts, true)?;
    run.trace = FrontTrace::fit(std::mem::take(&mut run.trace.samples))?;
    Ok(run)
}

fn advance(
    mut state: SemiflowState,
    p: &PotentialSpec,
    opts: &SemiflowOptions,
    track: bool,
) -> Result<SemiflowRun> {
    let dim = state.field.dim;
    let grid = state.field.grid.clone();
    let n = grid.n;
    let imp = Implicit::new(n, state.dt, grid.h);
    let bound = 10.0 * (1.0 + norm(&p.a_plus) + norm(&p.a_minus));
    let mut gw = vec![0.0; dim];
    let total_steps = ((opts.t_final - state.time) / state.dt).ceil().max(0.0) as usize;
    let every = total_steps
        .checked_div(opts.samples)
        .map_or(usize::MAX, |e| e.max(1));
    let mut energy = free_energy(&state.field, p);
    let energy_initial = energy;
    let mut samples = Vec::new();
    let mut energy_increases = 0;
    let mut max_energy_change = f64::NEG_INFINITY;
    let mut window_shifts = 0;
    let margin = opts.recenter_fraction.map(|f| f * grid.half_width);

    for s in 1..=total_steps {
        step(&mut state.field, p, state.dt, &imp, &mut gw);
        state.time += state.dt;
        let worst = (0..=n).map(|j| norm(state.field.point(j))).fold(0.0, f64::max);
        if !(worst <= bound) {
            return Err(Error::BlowUp {
                time: state.time,
                norm: worst,
            });
        }
        if !track {
            continue;
        }
        let e = free_energy(&state.field, p);
        let de = e - energy;
        max_energy_change = max_energy_change.max(de);
        if de > ENERGY_TOL {
            energy_increases += 1;
        }
        energy = e;

        if s % every == 0 || s == total_steps {
            let x = front_position(&state.field, p).ok_or_else(|| {
                Error::Front(format!("no midlevel crossing at t = {:.3}", state.time))
            })?;
            samples.push((state.time, x + state.offset));
            let to_right = grid.right() - x;
            let to_left = x - grid.left;
            match margin {
                Some(m) if to_right < m || to_left < m => {
                    let k = ((x - 0.5 * (grid.left + grid.right())) / grid.h).round() as i64;
                    state.field = state.field.shift_samples(-k, &p.a_minus, &p.a_plus);
                    state.offset += k as f64 * grid.h;
                    window_shifts += 1;
                    energy = free_energy(&state.field, p);
                }
                None if to_right < 2.0 * grid.h || to_left < 2.0 * grid.h => {
                    return Err(Error::Front(format!(
                        "front left the domain at t = {:.3}; enlarge M",
                        state.time
                    )));
                }
                _ => {}
            }
        }
    }
    let energy_final = free_energy(&state.field, p);
    Ok(SemiflowRun {
        state,
        trace: FrontTrace {
            samples,
            ..Default::default()
        },
        steps: total_steps,
        window_shifts,
        energy_increases,
        max_energy_change: if max_energy_change.is_finite() { max_energy_change } else { 0.0 },
        energy_initial,
        energy_final,
    })
}
