//! Constrained minimizers of the Nagumo action below, at and above the
//! exact speed `√2(½ - a)`.

use std::collections::BTreeMap;
use std::time::Instant;

use hetwave::constrained::{minimize, ConstraintSpec, MinimizeOptions};
use hetwave::grid::{affine_seed, make_grid};
use hetwave::potential::make_builtin;

fn main() -> hetwave::Result<()> {
    let p = make_builtin("nagumo", &BTreeMap::new())?;
    let exact = 2f64.sqrt() * 0.25;
    let grid = make_grid(24.0, 0.01, 0.0)?;
    let cs = ConstraintSpec::new(8.0, 0.05, &p)?;
    let seed = affine_seed(&grid, &p, 4.0)?;
    let opts = MinimizeOptions {
        alpha: 5e-4,
        ..Default::default()
    };
    for c in [0.9 * exact, exact, 1.1 * exact] {
        let t = Instant::now();
        let r = minimize(c, &cs, &seed, &p, &opts)?;
        println!(
            "c = {c:.5}  action = {:+.3e}  iterations = {}  converged = {}  rim -/+ = {}/{}  lambda+ = {:?}  residual = {:.1e}  ({:.2?})",
            r.action.scaled_total,
            r.iterations,
            r.converged,
            r.rim_contact_minus,
            r.rim_contact_plus,
            r.lambda_plus(),
            r.grad_norm,
            t.elapsed()
        );
    }
    Ok(())
}
