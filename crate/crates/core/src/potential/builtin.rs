//! Built-in potential families.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::polynomial::Polynomial;
use super::{Landscape, PotentialSpec};
use crate::{Error, Result};

pub const BUILTIN_NAMES: [&str; 4] = [
    "nagumo",
    "pwell_deformed",
    "planar_deformed",
    "appendix_bistable",
];

/// Builds a named potential. Missing parameters take family defaults;
/// unknown parameter names are rejected.
///
/// | name | parameters (defaults) |
/// |---|---|
/// | `nagumo` | `a` (0.25) |
/// | `planar_deformed` | `C` (0.3) |
/// | `pwell_deformed` | `p` (2), `eps` (1), `delta` (0.5), `dim` (2) |
/// | `appendix_bistable` | `m` (0.7) |
pub fn make_builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<PotentialSpec> {
    match name {
        "nagumo" => {
            let pm = Params::new(name, params, &[("a", 0.25)])?;
            nagumo(pm.get("a"))
        }
        "planar_deformed" => {
            let pm = Params::new(name, params, &[("C", 0.3)])?;
            planar_deformed(pm.get("C"))
        }
        "pwell_deformed" => {
            let pm = Params::new(
                name,
                params,
                &[("p", 2.0), ("eps", 1.0), ("delta", 0.5), ("dim", 2.0)],
            )?;
            pwell_deformed(pm.get("p"), pm.get("eps"), pm.get("delta"), pm.get("dim"))
        }
        "appendix_bistable" => {
            let pm = Params::new(name, params, &[("m", 0.7)])?;
            appendix_bistable(pm.get("m"))
        }
        other => Err(Error::UnknownPotential(other.to_string())),
    }
}

struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    fn new(name: &str, given: &BTreeMap<String, f64>, defaults: &[(&str, f64)]) -> Result<Self> {
        for (k, v) in given {
            if !defaults.iter().any(|(d, _)| d == k) {
                return Err(Error::param(name, k, "unknown parameter"));
            }
            if !v.is_finite() {
                return Err(Error::param(name, k, "not finite"));
            }
        }
        let values = defaults
            .iter()
            .map(|(k, d)| (k.to_string(), *given.get(*k).unwrap_or(d)))
            .collect();
        Ok(Params { values })
    }

    fn get(&self, k: &str) -> f64 {
        self.values[k]
    }
}

fn named(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `W(u) = a u²/2 - (1+a) u³/3 + u⁴/4`, so `W'(u) = u(u - a)(u - 1)`.
#[derive(Debug, Clone, Copy)]
pub struct Nagumo {
    pub a: f64,
}

impl Landscape for Nagumo {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, u: &[f64]) -> f64 {
        let (x, a) = (u[0], self.a);
        let x2 = x * x;
        a * x2 / 2.0 - (1.0 + a) * x2 * x / 3.0 + x2 * x2 / 4.0
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) -> bool {
        let x = u[0];
        out[0] = x * (x - self.a) * (x - 1.0);
        true
    }
    fn hessian(&self, u: &[f64], out: &mut [f64]) -> bool {
        let x = u[0];
        out[0] = self.a - 2.0 * (1.0 + self.a) * x + 3.0 * x * x;
        true
    }
}

fn nagumo(a: f64) -> Result<PotentialSpec> {
    if a >= 0.5 {
        return Err(Error::Hypothesis {
            hypothesis: "W(a-) < 0 = W(a+)".into(),
            detail: format!(
                "nagumo a = {a} gives W(1) = (2a - 1)/12 = {:e} >= 0: no deeper well",
                (2.0 * a - 1.0) / 12.0
            ),
        });
    }
    if a <= 0.0 {
        return Err(Error::param("nagumo", "a", "must lie in (0, 1/2)"));
    }
    PotentialSpec::new(
        "nagumo",
        named(&[("a", a)]),
        vec![0.0],
        vec![1.0],
        Arc::new(Nagumo { a }),
    )
}

/// `(u₁² - 1)² + u₂² - C s(u₁)` with the clamped quintic smoothstep `s`.
#[derive(Debug, Clone, Copy)]
pub struct PlanarDeformed {
    pub c: f64,
}

fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        let s = t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
        let ds = 30.0 * t2 * (t - 1.0) * (t - 1.0);
        let dds = 60.0 * t * (2.0 * t - 1.0) * (t - 1.0);
        (s, ds, dds)
    }
}

impl Landscape for PlanarDeformed {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, u: &[f64]) -> f64 {
        let q = u[0] * u[0] - 1.0;
        q * q + u[1] * u[1] - self.c * smoothstep(u[0]).0
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) -> bool {
        out[0] = 4.0 * u[0] * (u[0] * u[0] - 1.0) - self.c * smoothstep(u[0]).1;
        out[1] = 2.0 * u[1];
        true
    }
    fn hessian(&self, u: &[f64], out: &mut [f64]) -> bool {
        out[0] = 12.0 * u[0] * u[0] - 4.0 - self.c * smoothstep(u[0]).2;
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = 2.0;
        true
    }
}

fn planar_deformed(c: f64) -> Result<PotentialSpec> {
    if !(c > 0.0) {
        return Err(Error::param("planar_deformed", "C", "must be positive"));
    }
    PotentialSpec::new(
        "planar_deformed",
        named(&[("C", c)]),
        vec![-1.0, 0.0],
        vec![1.0, 0.0],
        Arc::new(PlanarDeformed { c }),
    )
}

/// `W_ε = F_ε W - C (F_ε - 1)` for `W = |u - a⁺|^p |u - a⁻|^p`, with the
/// bell `F_ε = 1 + ε exp(1/(|u - a⁻|² - δ²))` inside `B(a⁻, δ)` and
/// `C = max_{|u - a⁻| = δ} W = ((|a⁺ - a⁻| + δ) δ)^p`.
#[derive(Debug, Clone)]
pub struct PwellDeformed {
    pub p: f64,
    pub eps: f64,
    pub delta: f64,
    pub cap: f64,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
}

impl PwellDeformed {
    fn base(&self, u: &[f64]) -> (f64, f64, f64) {
        let rp = super::dist(u, &self.a_plus);
        let rm = super::dist(u, &self.a_minus);
        (rp.powf(self.p) * rm.powf(self.p), rp, rm)
    }

    /// `F_ε - 1` and `1/(r² - δ²)` (the latter only inside the ball).
    fn bell(&self, rm: f64) -> Option<(f64, f64)> {
        let q = rm * rm - self.delta * self.delta;
        if q >= 0.0 {
            return None;
        }
        let inv = 1.0 / q;
        Some((self.eps * inv.exp(), inv))
    }
}

impl Landscape for PwellDeformed {
    fn dim(&self) -> usize {
        self.a_plus.len()
    }
    fn value(&self, u: &[f64]) -> f64 {
        let (w, _, rm) = self.base(u);
        match self.bell(rm) {
            Some((f1, _)) => w + f1 * (w - self.cap),
            None => w,
        }
    }
    fn gradient(&self, u: &[f64], out: &mut [f64]) -> bool {
        let (w, rp, rm) = self.base(u);
        let p = self.p;
        // ∇W = p rp^{p-2} rm^p (u - a⁺) + p rm^{p-2} rp^p (u - a⁻)
        let kp = p * rp.powf(p - 2.0) * rm.powf(p);
        let km = p * rm.powf(p - 2.0) * rp.powf(p);
        for i in 0..out.len() {
            out[i] = kp * (u[i] - self.a_plus[i]) + km * (u[i] - self.a_minus[i]);
        }
        if let Some((f1, inv)) = self.bell(rm) {
            // ∇F = (F - 1) · (-2 / (r² - δ²)²) (u - a⁻)
            let kf = f1 * (-2.0 * inv * inv) * (w - self.cap);
            for i in 0..out.len() {
                out[i] = (1.0 + f1) * out[i] + kf * (u[i] - self.a_minus[i]);
            }
        }
        true
    }
}

fn pwell_deformed(p: f64, eps: f64, delta: f64, dim: f64) -> Result<PotentialSpec> {
    let name = "pwell_deformed";
    if !(p >= 2.0) {
        return Err(Error::param(name, "p", "must be at least 2"));
    }
    if !(eps > 0.0) {
        return Err(Error::param(name, "eps", "must be positive"));
    }
    if dim.fract() != 0.0 || dim < 1.0 {
        return Err(Error::param(name, "dim", "must be a positive integer"));
    }
    let n = dim as usize;
    let mut a_plus = vec![0.0; n];
    let mut a_minus = vec![0.0; n];
    a_plus[0] = -1.0;
    a_minus[0] = 1.0;
    let sep = 2.0;
    if !(delta > 0.0 && delta < sep) {
        return Err(Error::param(name, "delta", "must lie in (0, |a+ - a-|) = (0, 2)"));
    }
    let cap = ((sep + delta) * delta).powf(p);
    let land = PwellDeformed {
        p,
        eps,
        delta,
        cap,
        a_plus: a_plus.clone(),
        a_minus: a_minus.clone(),
    };
    PotentialSpec::new(
        name,
        named(&[("p", p), ("eps", eps), ("delta", delta), ("dim", dim)]),
        a_plus,
        a_minus,
        Arc::new(land),
    )
}

/// Slice with three critical points `a⁻ = -1`, `a⁰ = 0`, `a⁺ = 1`:
/// `W'(u) = (u + 1) u² (u - m)(u - 1)`, shifted so `W(1) = 0`.
///
/// `a⁰` is degenerate and `W` increases through it, with a barrier at `m`
/// before the shallow well `a⁺`.
fn appendix_bistable(m: f64) -> Result<PotentialSpec> {
    let name = "appendix_bistable";
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::param(name, "m", "must lie in (0, 1)"));
    }
    let mut deriv = vec![1.0];
    for r in [-1.0, 0.0, 0.0, m, 1.0] {
        let mut next = vec![0.0; deriv.len() + 1];
        for (k, c) in deriv.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= r * c;
        }
        deriv = next;
    }
    let mut coeffs = vec![0.0];
    coeffs.extend(deriv.iter().enumerate().map(|(k, c)| c / (k as f64 + 1.0)));
    let raw = Polynomial::univariate(&coeffs);
    let poly = raw.clone().shifted(-raw.value(&[1.0]));
    let (w_minus, w_zero) = (poly.value(&[-1.0]), poly.value(&[0.0]));
    if !(0.0 > w_zero && w_zero > w_minus) {
        return Err(Error::Hypothesis {
            hypothesis: "(h1)".into(),
            detail: format!(
                "need W(a+) = 0 > W(a0) > W(a-); got W(0) = {w_zero:e}, W(-1) = {w_minus:e}"
            ),
        });
    }
    PotentialSpec::new(
        name,
        named(&[("m", m), ("a0", 0.0)]),
        vec![1.0],
        vec![-1.0],
        Arc::new(poly),
    )
}
