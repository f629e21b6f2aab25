//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails.
//!
//! Oracles computed here (quadratures, crossing counts, λ-gaps, the `c_max`
//! root) are written independently of the library code they check.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use hetwave::action::{action, action_gradient};
use hetwave::constrained::{ConstraintSpec, MinimizeOptions};
use hetwave::diagnostics::{verify_wave_seeded, WaveReport};
use hetwave::grid::{affine_seed, make_grid, Grid, Profile};
use hetwave::potential::{geometry_probe, make_builtin, GeometryReport, PotentialSpec};
use hetwave::run::{error_exit_code, run, Mode, RunConfig, EXIT_HYPOTHESIS};
use hetwave::speed::{min_action, solve_speed, SpeedOptions};

const SEED: u64 = 7;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&configs().join(name)).expect("example config parses")
}

fn nagumo(a: f64) -> hetwave::Result<PotentialSpec> {
    make_builtin("nagumo", &BTreeMap::from([("a".to_string(), a)]))
}

fn planar() -> PotentialSpec {
    make_builtin("planar_deformed", &BTreeMap::from([("C".to_string(), 0.3)])).unwrap()
}

fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Probe at `r0` and at half the admissible level `ᾱ₀`.
fn half_alpha_geometry(p: &PotentialSpec, r0: f64) -> GeometryReport {
    let first = geometry_probe(p, 0.0, r0, None, 2001).unwrap();
    geometry_probe(p, first.alpha_bar0 / 2.0, r0, None, 2001).unwrap()
}

/// A solved wave and what the gate needs to know about it.
struct Case {
    name: String,
    p: PotentialSpec,
    geo: GeometryReport,
    c_star: f64,
    action: f64,
    c_min: f64,
    c_max: f64,
    converged: bool,
    wave: Profile,
    l: f64,
    diag: WaveReport,
    membership: f64,
    seconds: f64,
}

fn solve_nagumo(a: f64, h: f64) -> Case {
    let p = nagumo(a).unwrap();
    let geo = half_alpha_geometry(&p, 0.05);
    let t = Instant::now();
    let res = solve_speed(&p, &geo, &SpeedOptions { h, ..SpeedOptions::default() }).unwrap();
    let seconds = t.elapsed().as_secs_f64();
    let diag = verify_wave_seeded(&res.wave, res.c_star, &res.potential, &res.constraint, geo.alpha, Some(&geo), SEED);
    let mopts = MinimizeOptions { alpha: geo.alpha, ..MinimizeOptions::default() };
    let (membership, _) = min_action(
        0.8 * res.c_star,
        &res.potential,
        &res.constraint,
        &res.wave.grid,
        res.l_used / 2.0,
        Some(&res.wave),
        &mopts,
    )
    .unwrap();
    Case {
        name: format!("nagumo a={a} h={h}"),
        p,
        geo,
        c_star: res.c_star,
        action: res.action_at_c_star,
        c_min: res.bracket.c_min,
        c_max: res.bracket.c_max,
        converged: res.confirmation.converged && res.rim_free,
        l: res.constraint.l,
        wave: res.wave,
        diag,
        membership,
        seconds,
    }
}

fn solve_config(name: &str, file: &str) -> (Case, hetwave::run::RunOutput) {
    let mut cfg = load(file);
    cfg.mode = Mode::Solve;
    let t = Instant::now();
    let out = run(&cfg, &configs()).unwrap();
    let seconds = t.elapsed().as_secs_f64();
    let r = &out.report;
    let s = r.speed.as_ref().unwrap();
    let p = hetwave::run::build_potential(&cfg.potential, &configs()).unwrap();
    let case = Case {
        name: name.to_string(),
        p,
        geo: r.geometry.clone().unwrap(),
        c_star: s.c_star,
        action: s.action_at_c_star,
        c_min: s.bracket.c_min,
        c_max: s.bracket.c_max,
        converged: s.confirmation.converged && s.rim_free,
        l: s.l_used,
        wave: out.wave.clone().unwrap(),
        diag: r.diagnostics.clone().unwrap(),
        membership: s.membership_action,
        seconds,
    };
    (case, out)
}

/// `c ∫|U_x|²` against `W⁻(a⁻)`, and `∫∇W(U)` against `c(a⁺ - a⁻)`, by
/// cell differences and the trapezoid rule.
fn speed_identity_oracle(case: &Case) -> (f64, f64) {
    let u = &case.wave;
    let (h, n, dim) = (u.grid.h, u.grid.n, u.dim);
    let mut kinetic = 0.0;
    let mut force = vec![0.0; dim];
    for j in 0..=n {
        if j < n {
            kinetic += (0..dim).map(|k| (u.point(j + 1)[k] - u.point(j)[k]).powi(2)).sum::<f64>() / h;
        }
        let w = if j == 0 || j == n { 0.5 * h } else { h };
        for (f, g) in force.iter_mut().zip(case.p.grad_vec(u.point(j))) {
            *f += w * g;
        }
    }
    let depth = -case.p.eval(&case.p.a_minus);
    let rel = (case.c_star * kinetic - depth).abs() / depth;
    let vec_err = (0..dim)
        .map(|k| (force[k] - case.c_star * (case.p.a_plus[k] - case.p.a_minus[k])).abs())
        .fold(0.0, f64::max);
    (rel, vec_err)
}

/// Worst residual of
/// `∫_s^t (½|U'|² + W) e^{cx} = [e^{cx}(W - ½|U'|²)/c]_s^t` over 8 random
/// node intervals inside `[-L, L]`, relative to the absolute action on
/// `[-L, L]`.
fn first_integral_oracle(case: &Case, seed: u64) -> f64 {
    let u = &case.wave;
    let g = &u.grid;
    let (h, dim, c) = (g.h, u.dim, case.c_star);
    let weight = |x: f64| (c * (x - g.x_ref)).exp();
    let slope_sq = |j: usize| -> f64 {
        (0..dim)
            .map(|k| ((u.point(j + 1)[k] - u.point(j - 1)[k]) / (2.0 * h)).powi(2))
            .sum()
    };
    let flux = |j: usize| weight(g.x(j)) * (case.p.eval(u.point(j)) - 0.5 * slope_sq(j)) / c;
    let parts = |i0: usize, i1: usize| -> (f64, f64) {
        let (mut signed, mut abs) = (0.0, 0.0);
        for j in i0..i1 {
            let sq: f64 = (0..dim).map(|k| (u.point(j + 1)[k] - u.point(j)[k]).powi(2)).sum::<f64>() / (h * h);
            let kin = 0.5 * sq * weight(g.x(j) + 0.5 * h) * h;
            let pot = 0.5 * h * (case.p.eval(u.point(j)) * weight(g.x(j)) + case.p.eval(u.point(j + 1)) * weight(g.x(j + 1)));
            signed += kin + pot;
            abs += kin + pot.abs();
        }
        (signed, abs)
    };
    let (lo, hi) = (g.nearest(-case.l), g.nearest(case.l));
    let scale = parts(lo, hi).1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..8)
        .map(|_| {
            let a = rng.random_range(lo..hi);
            let b = rng.random_range(lo..hi);
            let (i0, i1) = (a.min(b), a.max(b).max(a.min(b) + 1));
            ((parts(i0, i1).0 - (flux(i1) - flux(i0))) / scale).abs()
        })
        .fold(0.0, f64::max)
}

/// Crossing counts and monotonicity violations recomputed from the nodes.
struct Structure {
    plus_crossings: usize,
    alpha_exits: usize,
    violations: usize,
    gap_minus: Option<f64>,
    gap_plus: Option<f64>,
}

fn structure_oracle(case: &Case) -> Structure {
    let u = &case.wave;
    let (g, r0, alpha) = (&u.grid, case.geo.r0, case.geo.alpha);
    let (ap, am) = (&case.p.a_plus, &case.p.a_minus);
    let n = u.len();
    let rho_p: Vec<f64> = (0..n).map(|j| dist(u.point(j), ap) - r0).collect();
    let rho_m: Vec<f64> = (0..n).map(|j| dist(u.point(j), am) - r0).collect();
    let inside: Vec<bool> = (0..n).map(|j| case.p.eval(u.point(j)) <= alpha && rho_p[j] > 0.0).collect();
    let plus_crossings = (1..n).filter(|&j| (rho_p[j - 1] > 0.0) != (rho_p[j] > 0.0)).count();
    let alpha_exits = (1..n).filter(|&j| inside[j - 1] && !inside[j]).count();
    let first_plus = (0..n).find(|&j| rho_p[j] <= 0.0);
    let last_exit = (1..n).rev().find(|&j| inside[j - 1] && !inside[j]);
    let last_minus = (1..n).rev().find(|&j| rho_m[j - 1] <= 0.0 && rho_m[j] > 0.0);
    let tol = 1e-8;
    let mut violations = 0;
    if let Some(jp) = first_plus {
        violations += (jp..n - 1).filter(|&j| rho_p[j + 1] > rho_p[j] + tol).count();
    }
    if let Some(je) = last_exit {
        violations += (0..je.saturating_sub(1)).filter(|&j| rho_m[j + 1] + tol < rho_m[j]).count();
    }
    let x = |j: usize| g.x(j);
    Structure {
        plus_crossings,
        alpha_exits,
        violations,
        gap_minus: last_exit.zip(last_minus).map(|(e, m)| x(e) - x(m)),
        gap_plus: first_plus.zip(last_exit).map(|(p, e)| x(p) - x(e)),
    }
}

struct Gate {
    failed: usize,
}

impl Gate {
    fn report(&mut self, n: usize, title: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {n:>2} {}  {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0 };

    // 1. Nagumo speeds against √2(½ - a).
    let nagumo_cases: Vec<Case> = [0.15, 0.25, 0.40].into_iter().map(|a| solve_nagumo(a, 0.01)).collect();
    let total: f64 = nagumo_cases.iter().map(|c| c.seconds).sum();
    let errors: Vec<f64> = [0.15, 0.25, 0.40]
        .iter()
        .zip(&nagumo_cases)
        .map(|(a, c)| (c.c_star - 2f64.sqrt() * (0.5 - a)).abs())
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    gate.report(
        1,
        "nagumo speed",
        worst <= 5e-3 && total <= 120.0,
        format!("max |c* - sqrt2(1/2 - a)| = {worst:.2e} (<= 5e-3), {total:.1} s total (<= 120 s)"),
    );

    let (planar_case, _) = solve_config("planar_deformed C=0.3", "planar.json");
    let (tilted_case, tilted_out) = solve_config("tilted nagumo in box", "tilted.json");
    let mut cases = nagumo_cases;
    cases.push(planar_case);
    cases.push(tilted_case);

    // 2. Zero action and membership below c*.
    let mut ok = true;
    let mut worst_action: f64 = 0.0;
    let mut worst_member = f64::NEG_INFINITY;
    for c in &cases {
        ok &= c.converged && c.action.abs() <= 1e-5 && c.membership < -1e-4;
        worst_action = worst_action.max(c.action.abs());
        worst_member = worst_member.max(c.membership);
    }
    gate.report(
        2,
        "zero action",
        ok,
        format!(
            "{} converged solves, max |E(c*)| = {worst_action:.2e} (<= 1e-5), max E(0.8 c*) = {worst_member:.2e} (< -1e-4)",
            cases.len()
        ),
    );

    // 3. Speed identities, from the library and from the oracle.
    let mut ok = true;
    let (mut worst_rel, mut worst_vec) = (0.0f64, 0.0f64);
    for c in &cases {
        let (rel, vec_err) = speed_identity_oracle(c);
        let bound = 1e-2 * c.p.separation() * c.c_star;
        ok &= rel <= 1e-2 && c.diag.speed_identity_rel_err <= 1e-2;
        ok &= vec_err <= bound && c.diag.vector_identity_err <= bound;
        worst_rel = worst_rel.max(rel).max(c.diag.speed_identity_rel_err);
        worst_vec = worst_vec.max(vec_err / bound).max(c.diag.vector_identity_err / bound);
    }
    gate.report(
        3,
        "speed identities",
        ok,
        format!("max scalar rel err = {worst_rel:.2e} (<= 1e-2), max vector err / (1e-2 |da| c) = {worst_vec:.2e} (<= 1)"),
    );

    // 4. First integral at h = 0.01 and its improvement at h = 0.005.
    let fine = solve_nagumo(0.25, 0.005);
    let coarse = &cases[1];
    let lib = (coarse.diag.first_integral_rel_err, fine.diag.first_integral_rel_err);
    let ora = (first_integral_oracle(coarse, SEED), first_integral_oracle(&fine, SEED));
    let all_coarse = cases
        .iter()
        .map(|c| c.diag.first_integral_rel_err.max(first_integral_oracle(c, SEED)))
        .fold(0.0, f64::max);
    gate.report(
        4,
        "first integral",
        all_coarse <= 1e-3 && lib.0 >= 3.0 * lib.1 && ora.0 >= 3.0 * ora.1,
        format!(
            "worst residual at h=0.01 = {all_coarse:.2e} (<= 1e-3); nagumo 0.25: library {:.2e} -> {:.2e} (x{:.1}), oracle {:.2e} -> {:.2e} (x{:.1}) (>= 3)",
            lib.0,
            lib.1,
            lib.0 / lib.1,
            ora.0,
            ora.1,
            ora.0 / ora.1
        ),
    );

    // 5. A priori bracket, and c_max for nagumo 0.25 from the zero of W.
    let a: f64 = 0.25;
    let s = (1.0 + a) / 3.0;
    let root = 2.0 * (s - (s * s - a / 2.0).sqrt());
    let depth = -(a / 2.0 - (1.0 + a) / 3.0 + 0.25);
    let c_max_oracle = (2.0 * depth).sqrt() / (root - 0.05);
    let inside = cases.iter().all(|c| c.c_min <= c.c_star && c.c_star <= c.c_max);
    let c_max = cases[1].c_max;
    gate.report(
        5,
        "a priori bracket",
        inside && (c_max - c_max_oracle).abs() <= 1e-3 && (c_max - 0.8432).abs() <= 1e-3,
        format!(
            "c_min <= c* <= c_max on {} cases: {inside}; nagumo 0.25 c_max = {c_max:.5}, oracle {c_max_oracle:.5}",
            cases.len()
        ),
    );

    // 6. Directional finite differences of the action gradient.
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let potentials = [nagumo(0.25).unwrap(), planar()];
    let grid = make_grid(6.0, 0.05, 0.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let p = &potentials[i % 2];
        let c = rng.random_range(0.1..0.8);
        let mut u = affine_seed(&grid.with_x_ref(rng.random_range(-3.0..3.0)), p, 2.0).unwrap();
        let dim = u.dim;
        let last = u.values.len() - dim;
        let mut d = vec![0.0; u.values.len()];
        for (v, dk) in u.values[dim..last].iter_mut().zip(&mut d[dim..last]) {
            let z: f64 = rng.sample(StandardNormal);
            *v += 0.1 * z;
            *dk = rng.sample(StandardNormal);
        }
        let g = action_gradient(c, &u, p).unwrap();
        let exact: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let eps = 1e-5;
        let moved = |s: f64| {
            let mut v = u.clone();
            v.values.iter_mut().zip(&d).for_each(|(x, dx)| *x += s * dx);
            action(c, &v, p).unwrap().scaled_total
        };
        let fd = (moved(eps) - moved(-eps)) / (2.0 * eps);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    let secs = t.elapsed().as_secs_f64();
    gate.report(
        6,
        "gradient check",
        worst <= 1e-6 && secs <= 5.0,
        format!("50 pairs, max rel err = {worst:.2e} (<= 1e-6), {secs:.2} s (<= 5 s)"),
    );

    // 7. Translation law under whole-cell shifts.
    let mut worst = 0.0f64;
    for i in 0..20 {
        let p = &potentials[i % 2];
        let h = [0.01, 0.02, 0.05][i % 3];
        let grid = make_grid(rng.random_range(4..12) as f64, h, rng.random_range(-2.0..2.0)).unwrap();
        let c = rng.random_range(0.05..1.0);
        let k: i64 = rng.random_range(-60..=60);
        let mut u = affine_seed(&grid, p, rng.random_range(0.5..3.0)).unwrap();
        for v in u.values.iter_mut() {
            *v += 0.05 * rng.sample::<f64, _>(StandardNormal);
        }
        let e0 = action(c, &u, p).unwrap();
        let moved = Profile::new(grid.shifted(k), u.dim, u.values.clone(), u.clamped).unwrap();
        let e1 = action(c, &moved, p).unwrap();
        let factor = (c * k as f64 * h).exp();
        worst = worst.max((e1.scaled_total - factor * e0.scaled_total).abs() / (factor * e0.magnitude()));
    }
    gate.report(
        7,
        "translation law",
        worst <= 1e-12,
        format!("20 shifts, max |E_k - e^(ckh) E_0| / (e^(ckh) |E_0|_abs) = {worst:.2e} (<= 1e-12)"),
    );

    // 8. Crossing multiplicities, monotone radii and the Λ bounds.
    let mut ok = true;
    let mut lines = Vec::new();
    for c in &cases {
        let s = structure_oracle(c);
        let depth = -c.p.eval(&c.p.a_minus);
        let geo = &c.geo;
        let w = geo.w_star;
        let cr = c.c_star * geo.r_alpha_max;
        let bound_minus = (w > 0.0).then(|| (cr + (cr * cr + 2.0 * w * (geo.r_alpha_max - geo.r0).abs()).sqrt()) / w);
        let bound_plus = (geo.alpha > 0.0).then(|| (1.0 + depth / geo.alpha).ln() / c.c_star);
        let margin_minus = bound_minus.zip(s.gap_minus).map(|(b, g)| b - g);
        let margin_plus = bound_plus.zip(s.gap_plus).map(|(b, g)| b - g);
        let lib = c.diag.time_bounds.clone().unwrap_or_default();
        let case_ok = c.converged
            && s.plus_crossings == 1
            && s.alpha_exits == 1
            && s.violations == 0
            && c.diag.single_crossings()
            && c.diag.monotonicity_violations == 0
            && margin_minus.is_some_and(|m| m >= 0.0)
            && (c.action > 0.0 || margin_plus.is_some_and(|m| m >= 0.0))
            && lib.pass;
        ok &= case_ok;
        lines.push(format!(
            "{}: crossings {}/{}, violations {}, margins {:.3}/{:.3}",
            c.name,
            s.plus_crossings,
            s.alpha_exits,
            s.violations,
            margin_minus.unwrap_or(f64::NAN),
            margin_plus.unwrap_or(f64::NAN)
        ));
    }
    gate.report(8, "structure", ok, lines.join("; "));

    // 9. Minimized action is non-increasing in L.
    let p = nagumo(0.25).unwrap();
    let geo = &cases[1].geo;
    let grid: Grid = make_grid(24.0, 0.01, 8.0).unwrap();
    let mopts = MinimizeOptions { alpha: geo.alpha, ..MinimizeOptions::default() };
    let mut values = Vec::new();
    let mut warm: Option<Profile> = None;
    for l in [4.0, 6.0, 8.0, 10.0] {
        let cs = ConstraintSpec::new(l, 0.05, &p).unwrap();
        let (e, r) = min_action(0.3, &p, &cs, &grid, l / 2.0, warm.as_ref(), &mopts).unwrap();
        values.push(e);
        warm = Some(r.profile);
    }
    let ok = values.windows(2).all(|w| w[1] <= w[0] + 1e-6);
    gate.report(
        9,
        "monotone in L",
        ok,
        format!("c = 0.3, E(L = 4, 6, 8, 10) = {values:?}"),
    );

    // 10. Semiflow front speed against c*.
    let mut ok = true;
    let mut lines = Vec::new();
    for (file, c_star) in [("nagumo.json", cases[1].c_star), ("planar.json", cases[3].c_star)] {
        let mut cfg = load(file);
        cfg.mode = Mode::Semiflow;
        let t = Instant::now();
        let out = run(&cfg, &configs()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let s = out.report.semiflow.unwrap();
        let rel = (s.trace.fitted_speed - c_star).abs() / c_star;
        ok &= rel <= 0.05 && s.energy_increases == 0 && secs <= 120.0;
        lines.push(format!(
            "{file}: speed {:.5} vs c* {c_star:.5} (rel {rel:.2e} <= 5e-2), energy increases {}, {secs:.1} s",
            s.trace.fitted_speed, s.energy_increases
        ));
    }
    gate.report(10, "semiflow", ok, lines.join("; "));

    // 11. Hypothesis gates.
    let mut lines = Vec::new();
    let mut ok = true;
    for a in [0.5, 0.6] {
        let mut cfg = load("nagumo_unstable.json");
        cfg.potential = serde_json::from_value(serde_json::json!({"name": "nagumo", "params": {"a": a}})).unwrap();
        cfg.mode = Mode::Validate;
        let code = match run(&cfg, &configs()) {
            Ok(out) => out.report.exit_code(),
            Err(e) => error_exit_code(&e),
        };
        ok &= code == EXIT_HYPOTHESIS && nagumo(a).is_err();
        lines.push(format!("nagumo a={a} exit {code}"));
    }
    let raw = hetwave::run::build_potential(&load("tilted.json").potential, &configs()).unwrap();
    let raw_geo = geometry_probe(&raw, 0.0, 0.05, None, 401).unwrap();
    let mut cfg = load("tilted.json");
    cfg.mode = Mode::Validate;
    let validated = run(&cfg, &configs()).unwrap().report;
    let premise = validated.checks.iter().any(|c| c.name == "reflection_premise" && c.pass);
    let reflection = tilted_out.report.speed.as_ref().and_then(|s| s.reflection.clone());
    let margin = reflection.as_ref().map_or(f64::NEG_INFINITY, |r| r.min_margin);
    let Some(hetwave::potential::Omega::Box { lo, hi }) = cfg.omega.clone() else {
        panic!("tilted config carries a box")
    };
    let wave = tilted_out.wave.as_ref().unwrap();
    let box_margin = (0..wave.len())
        .flat_map(|j| wave.point(j).iter().enumerate().map(move |(k, v)| (k, *v)))
        .map(|(k, v)| (v - lo[k]).min(hi[k] - v))
        .fold(f64::INFINITY, f64::min);
    ok &= !raw_geo.h_star_ok() && premise && validated.pass && margin > 0.0 && box_margin > 0.0;
    lines.push(format!(
        "tilted: raw (h*) holds {}, reflection premise {premise}, validate pass {}, wave margin {margin:.4} (oracle {box_margin:.4}) > 0",
        raw_geo.h_star_ok(),
        validated.pass
    ));
    gate.report(11, "hypothesis gates", ok, lines.join("; "));

    if gate.failed == 0 {
        println!("acceptance: all 11 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", gate.failed);
        ExitCode::FAILURE
    }
}
