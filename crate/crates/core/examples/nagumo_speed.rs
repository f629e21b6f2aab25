//! Wave speed of the Nagumo equation against the closed form `√2(½ - a)`.

use std::collections::BTreeMap;
use std::time::Instant;

use hetwave::diagnostics::verify_wave;
use hetwave::potential::{geometry_probe, make_builtin};
use hetwave::speed::{solve_speed, SpeedOptions};

fn main() -> hetwave::Result<()> {
    for a in [0.15, 0.25, 0.40] {
        let t = Instant::now();
        let p = make_builtin("nagumo", &BTreeMap::from([("a".to_string(), a)]))?;
        let r0 = 0.05;
        let probe = geometry_probe(&p, 0.0, r0, None, 2001)?;
        let geo = geometry_probe(&p, probe.alpha_bar0 / 2.0, r0, None, 2001)?;
        let res = solve_speed(&p, &geo, &SpeedOptions::default())?;
        let exact = 2f64.sqrt() * (0.5 - a);
        println!(
            "a = {a:.2}  c* = {:.5}  exact = {exact:.5}  error = {:+.1e}  action = {:+.1e}  rim free = {}  bracket = [{:.4}, {:.4}]  evaluations = {}  ({:.2?})",
            res.c_star,
            res.c_star - exact,
            res.action_at_c_star,
            res.rim_free,
            res.bracket.c_min,
            res.bracket.c_max,
            res.trace.len(),
            t.elapsed()
        );
        let d = verify_wave(&res.wave, res.c_star, &res.potential, &res.constraint, geo.alpha, Some(&geo));
        println!(
            "    speed identity {:.1e}  vector identity {:.1e}  first integral {:.1e}  ode residual {:.1e}  jumps {:.1e}  crossings {}/{}  monotonicity {}  lambda bounds {:?}",
            d.speed_identity_rel_err,
            d.vector_identity_err,
            d.first_integral_rel_err,
            d.ode_residual_max,
            d.action_minus_jumps_err,
            d.crossings.plus_sphere_crossings,
            d.crossings.alpha_exits,
            d.monotonicity_violations,
            d.lambda_bounds_ok
        );
    }
    Ok(())
}
