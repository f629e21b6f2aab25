//! Travelling wave of the deformed planar two-well potential, a
//! two-component system without a closed-form speed.

use std::collections::BTreeMap;
use std::time::Instant;

use hetwave::diagnostics::verify_wave;
use hetwave::potential::{geometry_probe, make_builtin};
use hetwave::speed::{solve_speed, SpeedOptions};

fn main() -> hetwave::Result<()> {
    let t = Instant::now();
    let p = make_builtin("planar_deformed", &BTreeMap::from([("C".to_string(), 0.3)]))?;
    let probe = geometry_probe(&p, 0.0, 0.1, None, 401)?;
    let r0 = (probe.r0_max / 2.0).min(p.separation() / 10.0);
    let geo0 = geometry_probe(&p, 0.0, r0, None, 401)?;
    let alpha = geo0.alpha_bar0 / 2.0;
    let geo = geometry_probe(&p, alpha, r0, None, 401)?;
    println!(
        "r0 = {r0:.4}  alpha = {alpha:.3e}  d0 = {:.4}  w* = {:.4}  flags = {:?}  ({:.2?})",
        geo.d0,
        geo.w_star,
        geo.hypothesis_flags,
        t.elapsed()
    );
    let res = solve_speed(&p, &geo, &SpeedOptions::default())?;
    let report = verify_wave(&res.wave, res.c_star, &res.potential, &res.constraint, alpha, Some(&geo));
    println!(
        "c* = {:.5}  action = {:+.1e}  rim free = {}  bracket = [{:.4}, {:.4}]  ({:.2?})",
        res.c_star,
        res.action_at_c_star,
        res.rim_free,
        res.bracket.c_min,
        res.bracket.c_max,
        t.elapsed()
    );
    println!("{report:#?}");
    Ok(())
}
