//! Geometric constants and hypothesis flags of every builtin potential.

use std::collections::BTreeMap;

use hetwave::potential::{geometry_probe, make_builtin, BUILTIN_NAMES};
use hetwave::speed::speed_bounds;

fn main() -> hetwave::Result<()> {
    for name in BUILTIN_NAMES {
        let p = make_builtin(name, &BTreeMap::new())?;
        let r0 = p.separation() / 20.0;
        let first = geometry_probe(&p, 0.0, r0, None, 401)?;
        let geo = geometry_probe(&p, first.alpha_bar0 / 2.0, r0, None, 401)?;
        println!(
            "{name:<18} N = {}  W(a-) = {:+.4}  r0 = {r0:.3}  r0_max = {:.3}  d0 = {:.4}  w* = {:.3e}  c0 = {:.3e}  b = {:.3}  alpha_bar0 = {:.3e}  components = {}  sampled = {}",
            p.dim,
            p.w_at_a_minus,
            geo.r0_max,
            geo.d0,
            geo.w_star,
            geo.c0,
            geo.b,
            geo.alpha_bar0,
            geo.component_count,
            geo.sampled
        );
        let failed = geo.hypothesis_flags.failed();
        if failed.is_empty() {
            let b = speed_bounds(&p, &geo)?;
            println!("{:<18} hypotheses hold, c in [{:.4}, {:.4}]", "", b.c_min, b.c_max);
        } else {
            println!("{:<18} failed: {}", "", failed.join(", "));
        }
    }
    Ok(())
}
