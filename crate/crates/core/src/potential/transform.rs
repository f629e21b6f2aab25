//! Transforms that localize a potential: the reflection `W̄` about the
//! minimum of `W` on the boundary of a convex set, and the bell
//! deformation `Ŵ` that turns a degenerate critical point into a minimum.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{dist, fd_gradient, Landscape, PotentialSpec};
use crate::{Error, Result};

/// Minimum number of boundary samples used to locate `min_{∂Ω} W`.
pub const BOUNDARY_SAMPLES: usize = 10_000;

/// A closed convex set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Omega {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Omega {
    pub fn dim(&self) -> usize {
        match self {
            Omega::Ball { center, .. } => center.len(),
            Omega::Box { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Omega::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) {
                    return Err(Error::Config("ball needs a center and a positive radius".into()));
                }
            }
            Omega::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l < h))
                {
                    return Err(Error::Config("box needs lo < hi in every coordinate".into()));
                }
            }
        }
        Ok(())
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn margin(&self, u: &[f64]) -> f64 {
        match self {
            Omega::Ball { center, radius } => radius - dist(u, center),
            Omega::Box { lo, hi } => {
                let inside = u
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(x, (l, h))| (x - l).min(h - x))
                    .fold(f64::INFINITY, f64::min);
                if inside >= 0.0 {
                    inside
                } else {
                    let out: f64 = u
                        .iter()
                        .zip(lo.iter().zip(hi))
                        .map(|(x, (l, h))| (l - x).max(x - h).max(0.0).powi(2))
                        .sum();
                    -out.sqrt()
                }
            }
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.margin(u) >= 0.0
    }

    /// Deterministic boundary points, at least `min_count` of them when
    /// `N ≥ 2` (the boundary of an interval is its two endpoints).
    pub fn boundary_samples(&self, min_count: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e);
        match self {
            Omega::Ball { center, radius } => {
                if n == 1 {
                    return vec![vec![center[0] - radius], vec![center[0] + radius]];
                }
                (0..min_count)
                    .map(|k| {
                        let dir = if n == 2 {
                            let t = TAU * k as f64 / min_count as f64;
                            vec![t.cos(), t.sin()]
                        } else {
                            random_direction(&mut rng, n)
                        };
                        center.iter().zip(&dir).map(|(c, d)| c + radius * d).collect()
                    })
                    .collect()
            }
            Omega::Box { lo, hi } => {
                if n == 1 {
                    return vec![vec![lo[0]], vec![hi[0]]];
                }
                let faces = 2 * n;
                let per_face = min_count.div_ceil(faces);
                let mut out = Vec::with_capacity(per_face * faces);
                for axis in 0..n {
                    for side in [lo[axis], hi[axis]] {
                        for k in 0..per_face {
                            let mut p: Vec<f64> = if n == 2 {
                                let s = k as f64 / (per_face - 1).max(1) as f64;
                                (0..n).map(|i| lo[i] + s * (hi[i] - lo[i])).collect()
                            } else {
                                (0..n).map(|i| rng.random_range(lo[i]..=hi[i])).collect()
                            };
                            p[axis] = side;
                            out.push(p);
                        }
                    }
                }
                out
            }
        }
    }

    /// Deterministic points strictly inside.
    pub fn interior_samples(&self, count: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let (lo, hi): (Vec<f64>, Vec<f64>) = match self {
            Omega::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Omega::Box { lo, hi } => (lo.clone(), hi.clone()),
        };
        if n == 1 {
            return (1..=count)
                .map(|k| vec![lo[0] + (hi[0] - lo[0]) * k as f64 / (count + 1) as f64])
                .filter(|p| self.margin(p) > 0.0)
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a7e);
        let mut out = Vec::with_capacity(count);
        let mut tries = 0;
        while out.len() < count && tries < 100 * count {
            tries += 1;
            let p: Vec<f64> = (0..n).map(|i| rng.random_range(lo[i]..hi[i])).collect();
            if self.margin(&p) > 0.0 {
                out.push(p);
            }
        }
        out
    }
}

pub(crate) fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = super::norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Record of a reflection `W̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionInfo {
    pub omega: Omega,
    /// `m = min_{∂Ω} W` over the boundary samples.
    pub level: f64,
    pub boundary_samples: usize,
    pub argmin: Vec<f64>,
    /// Interior samples with `W ≥ m`; zero when the interior condition
    /// holds.
    pub interior_violations: usize,
    pub interior_samples: usize,
    /// Both minima lie in `Ω`, `m` exceeds `W(a±)`, and no interior
    /// violation was sampled.
    pub premise_ok: bool,
}

#[derive(Debug)]
struct Reflected {
    base: Arc<dyn Landscape>,
    omega: Omega,
    level: f64,
}

impl Reflected {
    fn flips(&self, u: &[f64], w: f64) -> bool {
        w < self.level && !self.omega.contains(u)
    }
}

impl Landscape for Reflected {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, u: &[f64]) -> f64 {
        let w = self.base.value(u);
        if self.flips(u, w) {
            2.0 * self.level - w
        } else {
            w
        }
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) -> bool {
        if !self.base.gradient(u, out) {
            fd_gradient(&*self.base, u, out);
        }
        if self.flips(u, self.base.value(u)) {
            out.iter_mut().for_each(|g| *g = -*g);
        }
        true
    }
    fn hessian(&self, u: &[f64], out: &mut [f64]) -> bool {
        if !self.base.hessian(u, out) {
            return false;
        }
        if self.flips(u, self.base.value(u)) {
            out.iter_mut().for_each(|h| *h = -*h);
        }
        true
    }
}

/// Reflects the graph of `W` about the plane `w = min_{∂Ω} W` outside `Ω`.
///
/// Inside `Ω` the potential is left untouched, so a wave that stays in `Ω`
/// solves the original problem. When the interior condition of `(h**)`
/// fails the transform is still returned with `premise_ok = false`.
pub fn reflect_above(p: &PotentialSpec, omega: &Omega) -> Result<PotentialSpec> {
    omega.validate()?;
    if omega.dim() != p.dim {
        return Err(Error::Dimension {
            expected: p.dim,
            got: omega.dim(),
        });
    }
    let boundary = omega.boundary_samples(BOUNDARY_SAMPLES);
    let (level, argmin) = boundary
        .iter()
        .map(|b| (p.eval(b), b))
        .filter(|(w, _)| w.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(w, b)| (w, b.clone()))
        .ok_or_else(|| Error::Geometry("W is not finite on the boundary of omega".into()))?;
    let interior = omega.interior_samples(BOUNDARY_SAMPLES);
    let interior_violations = interior.iter().filter(|u| p.eval(u) >= level).count();
    let premise_ok = omega.contains(&p.a_plus)
        && omega.contains(&p.a_minus)
        && level > p.eval(&p.a_plus).max(p.w_at_a_minus)
        && interior_violations == 0;
    let land = Reflected {
        base: p.landscape().clone(),
        omega: omega.clone(),
        level,
    };
    let mut params = p.params.clone();
    params.insert("reflection_level".into(), level);
    let mut spec = PotentialSpec::new(
        format!("reflected({})", p.name),
        params,
        p.a_plus.clone(),
        p.a_minus.clone(),
        Arc::new(land),
    )?;
    spec.reflection = Some(ReflectionInfo {
        omega: omega.clone(),
        level,
        boundary_samples: boundary.len(),
        argmin,
        interior_violations,
        interior_samples: interior.len(),
        premise_ok,
    });
    Ok(spec)
}

/// Breakpoints and bell amplitude of the hat deformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatParams {
    pub a_minus: f64,
    pub a0: f64,
    /// Left end of the localizing interval, used only for the `K` check.
    pub omega1: f64,
    pub omega2: f64,
    pub k: f64,
}

/// Result of [`appendix_hat`].
#[derive(Clone, Debug)]
pub struct AppendixHat {
    /// `Ŵ`, with `a⁰` as its deeper minimum.
    pub spec: PotentialSpec,
    pub params: HatParams,
    /// Bell value at `a⁰`, fixed by continuity there.
    pub f0: f64,
    pub hat_at_a_minus: f64,
    pub w_at_omega1: f64,
    /// `Ŵ(a⁻) ≥ W̄(Ω₁)`.
    pub k_condition_met: bool,
}

impl AppendixHat {
    /// One-sided limit gaps of `Ŵ` at `a⁻`, `a⁰`, `Ω₂`, each limit
    /// extrapolated linearly from samples at offsets `1e-6` and `2e-6`.
    pub fn breakpoint_jumps(&self) -> [f64; 3] {
        let hp = &self.params;
        let w = |x: f64| self.spec.eval(&[x]);
        let d = 1e-6;
        [hp.a_minus, hp.a0, hp.omega2].map(|b| {
            let left = 2.0 * w(b - d) - w(b - 2.0 * d);
            let right = 2.0 * w(b + d) - w(b + 2.0 * d);
            (right - left).abs()
        })
    }
}

#[derive(Debug)]
struct Hat {
    base: Arc<dyn Landscape>,
    hp: HatParams,
    f0: f64,
    w_am: f64,
    w_om2: f64,
}

impl Hat {
    /// `F`, `F'`, `F''` on `(a⁻, a⁰)`: `F₀` plus `K` times a half bell that
    /// peaks at `a⁻` and is flat to all orders at `a⁰`.
    fn bell(&self, u: f64) -> (f64, f64, f64) {
        let width = self.hp.a0 - self.hp.a_minus;
        let s = (u - self.hp.a_minus) / width;
        if s >= 1.0 {
            return (self.f0, 0.0, 0.0);
        }
        let q = 1.0 - s * s;
        let b = (1.0 - 1.0 / q).exp();
        let db = -2.0 * s / (q * q);
        let ddb = db * db - (2.0 * q + 8.0 * s * s) / (q * q * q);
        let k = self.hp.k;
        (
            self.f0 + k * b,
            k * b * db / width,
            k * b * ddb / (width * width),
        )
    }

    fn base_d1(&self, u: f64) -> f64 {
        let mut g = [0.0];
        if !self.base.gradient(&[u], &mut g) {
            fd_gradient(&*self.base, &[u], &mut g);
        }
        g[0]
    }
}

impl Landscape for Hat {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, u: &[f64]) -> f64 {
        let x = u[0];
        let hp = &self.hp;
        if x >= hp.omega2 {
            self.w_om2
        } else if x >= hp.a0 {
            self.base.value(u)
        } else if x > hp.a_minus {
            -(self.bell(x).0 * self.base.value(u) - 2.0 * self.w_am)
        } else {
            -((self.f0 + hp.k) * self.base.value(u) - 2.0 * self.w_am)
        }
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) -> bool {
        let x = u[0];
        let hp = &self.hp;
        out[0] = if x >= hp.omega2 {
            0.0
        } else if x >= hp.a0 {
            self.base_d1(x)
        } else if x > hp.a_minus {
            let (f, df, _) = self.bell(x);
            -(df * self.base.value(u) + f * self.base_d1(x))
        } else {
            -(self.f0 + hp.k) * self.base_d1(x)
        };
        true
    }
    fn hessian(&self, u: &[f64], out: &mut [f64]) -> bool {
        let x = u[0];
        let hp = &self.hp;
        let mut h = [0.0];
        if x < hp.omega2 && !self.base.hessian(u, &mut h) {
            return false;
        }
        out[0] = if x >= hp.omega2 {
            0.0
        } else if x >= hp.a0 {
            h[0]
        } else if x > hp.a_minus {
            let (f, df, ddf) = self.bell(x);
            -(ddf * self.base.value(u) + 2.0 * df * self.base_d1(x) + f * h[0])
        } else {
            -(self.f0 + hp.k) * h[0]
        };
        true
    }
}

/// Deforms a scalar slice `W̄` so that the critical point `a⁰` becomes the
/// global minimum of `Ŵ`:
///
/// ```text
/// Ŵ(u) = W̄(Ω₂)                       u ≥ Ω₂
///        W̄(u)                        a⁰ ≤ u < Ω₂
///        -(F(u) W̄(u) - 2 W̄(a⁻))      a⁻ < u < a⁰
///        -(F(a⁻) W̄(u) - 2 W̄(a⁻))     u ≤ a⁻
/// ```
///
/// The half bell is normalized so that `F(a⁰) = (2W̄(a⁻) - W̄(a⁰))/W̄(a⁰)`,
/// which makes `Ŵ` continuous at `a⁰`.
pub fn appendix_hat(w1d: &PotentialSpec, hp: HatParams) -> Result<AppendixHat> {
    if w1d.dim != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: w1d.dim,
        });
    }
    if !(hp.omega1 <= hp.a_minus && hp.a_minus < hp.a0 && hp.a0 < hp.omega2) {
        return Err(Error::Breakpoints(format!(
            "need omega1 <= a- < a0 < omega2, got {} {} {} {}",
            hp.omega1, hp.a_minus, hp.a0, hp.omega2
        )));
    }
    let a_plus = w1d.a_plus[0];
    if !(hp.a0 < a_plus && a_plus < hp.omega2) {
        return Err(Error::Breakpoints(format!(
            "a+ = {a_plus} must lie in (a0, omega2)"
        )));
    }
    if !(hp.k > 0.0) {
        return Err(Error::param("appendix_hat", "K", "must be positive"));
    }
    let w_am = w1d.eval(&[hp.a_minus]);
    let w_a0 = w1d.eval(&[hp.a0]);
    if !(0.0 > w_a0 && w_a0 > w_am) {
        return Err(Error::Hypothesis {
            hypothesis: "(h1)".into(),
            detail: format!("need 0 > W(a0) > W(a-); got W(a0) = {w_a0:e}, W(a-) = {w_am:e}"),
        });
    }
    let f0 = (2.0 * w_am - w_a0) / w_a0;
    let land = Hat {
        base: w1d.landscape().clone(),
        hp,
        f0,
        w_am,
        w_om2: w1d.eval(&[hp.omega2]),
    };
    let hat_at_a_minus = land.value(&[hp.a_minus]);
    let w_at_omega1 = w1d.eval(&[hp.omega1]);
    let params: BTreeMap<String, f64> = [
        ("a_minus", hp.a_minus),
        ("a0", hp.a0),
        ("omega1", hp.omega1),
        ("omega2", hp.omega2),
        ("K", hp.k),
        ("F0", f0),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), *v))
    .collect();
    let spec = PotentialSpec::new(
        format!("hat({})", w1d.name),
        params,
        w1d.a_plus.clone(),
        vec![hp.a0],
        Arc::new(land),
    )?;
    Ok(AppendixHat {
        spec,
        params: hp,
        f0,
        hat_at_a_minus,
        w_at_omega1,
        k_condition_met: hat_at_a_minus >= w_at_omega1,
    })
}
