//! A slice with an intermediate critical point `a⁰`, with
//! `W(a⁺) = 0 > W(a⁰) > W(a⁻)`.
//!
//! The hat deformation turns `a⁰` into the deeper minimum. The solver finds
//! an `a⁰`-`a⁺` wave for it, and the wave stays in `[a⁰, a⁺]`, where the
//! deformation leaves `W` unchanged, so it connects `a⁰` to `a⁺` for the
//! original slice too.

use std::collections::BTreeMap;

use hetwave::potential::{appendix_hat, geometry_probe, make_builtin, HatParams, ProbeBox};
use hetwave::speed::{solve_speed, SpeedOptions};

fn main() -> hetwave::Result<()> {
    let w = make_builtin("appendix_bistable", &BTreeMap::new())?;
    println!(
        "slice: W(a-) = {:.4}  W(a0) = {:.4}  W(a+) = {:.4}",
        w.eval(&[-1.0]),
        w.eval(&[0.0]),
        w.eval(&[1.0])
    );
    let raw = geometry_probe(&w, 0.0, 0.05, None, 2001)?;
    println!("raw slice: (h*) holds = {}  failed = {:?}", raw.h_star_ok(), raw.hypothesis_flags.failed());

    let hat = appendix_hat(
        &w,
        HatParams {
            a_minus: -1.0,
            a0: 0.0,
            omega1: -1.5,
            omega2: 1.5,
            k: 1.0,
        },
    )?;
    println!(
        "hat: W^(a0) = {:.4}  W^(a-) = {:.4} >= W(omega1) = {:.4}: {}  largest breakpoint jump = {:.1e}",
        hat.spec.eval(&[0.0]),
        hat.hat_at_a_minus,
        hat.w_at_omega1,
        hat.k_condition_met,
        hat.breakpoint_jumps().into_iter().fold(0.0, f64::max)
    );

    // Left of a⁻ the hat falls without bound, so the box stops short of it.
    let bx = ProbeBox {
        lo: vec![-1.1],
        hi: vec![1.4],
    };
    let first = geometry_probe(&hat.spec, 0.0, 0.05, Some(&bx), 2001)?;
    let geo = geometry_probe(&hat.spec, first.alpha_bar0 / 2.0, 0.05, Some(&bx), 2001)?;
    println!("hat: (h*) holds = {}  failed = {:?}", geo.h_star_ok(), geo.hypothesis_flags.failed());
    if !geo.h_star_ok() {
        return Ok(());
    }
    let res = solve_speed(&hat.spec, &geo, &SpeedOptions::default())?;
    let (lo, hi) = res
        .wave
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    println!(
        "a0-a+ wave: c* = {:.5}  action = {:+.1e}  rim free = {}  range = [{lo:.4}, {hi:.4}]  inside [a0, a+] = {}",
        res.c_star,
        res.action_at_c_star,
        res.rim_free,
        lo >= -1e-9 && hi <= 1.0 + 1e-9
    );
    Ok(())
}
