//! A tilted Nagumo potential that fails (h*) globally but satisfies (h**)
//! in a box. The solver reflects the graph of `W` outside the box and
//! checks that the wave never leaves it.

use std::path::Path;

use hetwave::potential::{geometry_probe, polynomial_potential, reflect_above, Omega};
use hetwave::speed::{solve_speed, SpeedOptions};

fn main() -> hetwave::Result<()> {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/tilted_nagumo.poly");
    let p = polynomial_potential(&file, vec![0.0], vec![1.0])?;
    let raw = geometry_probe(&p, 0.0, 0.05, None, 2001)?;
    println!("unreflected: failed {:?}", raw.hypothesis_flags.failed());

    let omega = Omega::Box {
        lo: vec![-0.6],
        hi: vec![1.512674511519396],
    };
    let info = reflect_above(&p, &omega)?.reflection.expect("reflection record");
    println!(
        "box premise holds = {}  level m = {:.5}  interior violations = {}/{}",
        info.premise_ok, info.level, info.interior_violations, info.interior_samples
    );

    let first = geometry_probe(&p, 0.0, 0.05, None, 2001)?;
    let geo = geometry_probe(&p, first.alpha_bar0 / 2.0, 0.05, None, 2001)?;
    let opts = SpeedOptions {
        omega: Some(omega),
        ..SpeedOptions::default()
    };
    let res = solve_speed(&p, &geo, &opts)?;
    let r = res.reflection.as_ref().expect("solved through the reflection");
    println!(
        "c* = {:.5}  action = {:+.1e}  rim free = {}  smallest box margin = {:.4}  stayed inside = {}",
        res.c_star,
        res.action_at_c_star,
        res.rim_free,
        r.min_margin,
        r.stayed_inside()
    );
    Ok(())
}
