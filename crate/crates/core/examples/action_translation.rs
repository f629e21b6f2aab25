//! The discrete action under whole-cell shifts of the grid, and a
//! finite-difference check of its gradient.

use std::collections::BTreeMap;

use hetwave::action::{action, action_gradient, translate_profile};
use hetwave::grid::{affine_seed, make_grid};
use hetwave::potential::make_builtin;

fn main() -> hetwave::Result<()> {
    let p = make_builtin("planar_deformed", &BTreeMap::new())?;
    let grid = make_grid(8.0, 0.02, 0.0)?;
    let u = affine_seed(&grid, &p, 3.0)?;
    let c = 0.15;
    let e0 = action(c, &u, &p)?;
    println!(
        "E = {:+.6e}  kinetic = {:.4e}  W+ = {:.4e}  W- = {:.4e}",
        e0.scaled_total, e0.kinetic, e0.potential_plus, e0.potential_minus
    );
    for k in [-100, -7, 1, 50] {
        let e = action(c, &translate_profile(&u, k), &p)?.scaled_total;
        let law = (c * k as f64 * grid.h).exp();
        println!("shift {k:>4}: ratio = {:.15}  e^(ckh) = {law:.15}", e / e0.scaled_total);
    }

    let g = action_gradient(c, &u, &p)?;
    let n = u.values.len();
    let d: Vec<f64> = (0..n).map(|k| if k < 2 || k >= n - 2 { 0.0 } else { (k as f64 * 0.37).sin() }).collect();
    let exact: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
    let eps = 1e-5;
    let at = |s: f64| -> hetwave::Result<f64> {
        let mut v = u.clone();
        v.values.iter_mut().zip(&d).for_each(|(x, dx)| *x += s * dx);
        Ok(action(c, &v, &p)?.scaled_total)
    };
    let fd = (at(eps)? - at(-eps)?) / (2.0 * eps);
    println!("directional derivative: gradient {exact:+.10e}  central difference {fd:+.10e}");
    Ok(())
}
