use std::collections::BTreeMap;

use proptest::prelude::*;

use hetwave::action::{action, action_gradient, translate_profile};
use hetwave::grid::{affine_seed, make_grid, Profile};
use hetwave::potential::{make_builtin, PotentialSpec};

fn nagumo(a: f64) -> PotentialSpec {
    make_builtin("nagumo", &BTreeMap::from([("a".to_string(), a)])).unwrap()
}

fn planar() -> PotentialSpec {
    make_builtin("planar_deformed", &BTreeMap::new()).unwrap()
}

/// Samples of the Nagumo front `1/(1 + e^{x/√2})`, which runs from
/// `a⁻ = 1` to `a⁺ = 0`. The ends are left unpinned so that no kink of
/// size `e^{-M/√2}` enters the comparison.
fn nagumo_front(m: f64, h: f64) -> Profile {
    let g = make_grid(m, h, 4.0).unwrap();
    Profile::from_fn(g, 1, false, |x| vec![1.0 / (1.0 + (x / 2f64.sqrt()).exp())])
}

#[test]
fn quadrature_is_second_order() {
    let p = nagumo(0.25);
    let c = 2f64.sqrt() * 0.25;
    let e: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|h| action(c, &nagumo_front(16.0, *h), &p).unwrap().scaled_total)
        .collect();
    let slope = ((e[0] - e[1]).abs() / (e[1] - e[2]).abs()).log2();
    assert!(slope >= 1.9, "slope {slope}, actions {e:?}");
}

#[test]
fn grid_and_seed_shapes() {
    let g = make_grid(4.0, 0.05, 0.0).unwrap();
    assert_eq!(g.n, 160);
    let xs = g.xs();
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
    assert!(xs.iter().zip(xs.iter().rev()).all(|(a, b)| (a + b).abs() < 1e-12));
    assert!(make_grid(4.0, 0.03, 0.0).is_err());

    let p = planar();
    let t = 1.5;
    let u = affine_seed(&g, &p, t).unwrap();
    assert_eq!(u.point(0), &p.a_minus[..]);
    assert_eq!(u.point(g.n), &p.a_plus[..]);
    for j in 0..u.len() {
        let x = g.x(j);
        if x <= -t {
            assert_eq!(u.point(j), &p.a_minus[..]);
        } else if x >= t {
            assert_eq!(u.point(j), &p.a_plus[..]);
        } else {
            let s = (x + t) / (2.0 * t);
            assert!((u.point(j)[0] - (1.0 - 2.0 * s)).abs() < 1e-12);
        }
    }
}

fn perturbed(p: &PotentialSpec, m: f64, h: f64, x_ref: f64, t: f64, noise: &[f64]) -> Profile {
    let g = make_grid(m, h, x_ref).unwrap();
    let mut u = affine_seed(&g, p, t.min(m)).unwrap();
    let dim = u.dim;
    let last = u.values.len() - dim;
    for (k, v) in u.values[dim..last].iter_mut().enumerate() {
        *v += 0.1 * noise[k % noise.len()];
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn translation_scales_the_action(
        two in any::<bool>(),
        m in 3usize..10,
        x_ref in -3.0f64..3.0,
        c in 0.05f64..1.2,
        k in -200i64..200,
        t in 0.3f64..3.0,
        noise in proptest::collection::vec(-1.0f64..1.0, 1..17),
    ) {
        let p = if two { planar() } else { nagumo(0.3) };
        let u = perturbed(&p, m as f64, 0.05, x_ref, t, &noise);
        let e0 = action(c, &u, &p).unwrap();
        let e1 = action(c, &translate_profile(&u, k), &p).unwrap();
        let factor = (c * k as f64 * 0.05).exp();
        let err = (e1.scaled_total - factor * e0.scaled_total).abs() / (factor * e0.magnitude());
        prop_assert!(err <= 1e-13, "relative gap {err}");
    }

    #[test]
    fn parts_sum_to_total(
        two in any::<bool>(),
        c in 0.05f64..1.2,
        x_ref in -3.0f64..3.0,
        noise in proptest::collection::vec(-1.0f64..1.0, 1..17),
    ) {
        let p = if two { planar() } else { nagumo(0.3) };
        let u = perturbed(&p, 5.0, 0.05, x_ref, 2.0, &noise);
        let e = action(c, &u, &p).unwrap();
        let sum = e.kinetic + e.potential_plus - e.potential_minus;
        prop_assert!((sum - e.scaled_total).abs() <= 1e-12 * e.magnitude());
        prop_assert!(e.kinetic >= 0.0 && e.potential_plus >= 0.0 && e.potential_minus >= 0.0);
    }

    #[test]
    fn gradient_is_directional_derivative(
        two in any::<bool>(),
        c in 0.05f64..1.0,
        noise in proptest::collection::vec(-1.0f64..1.0, 1..17),
        dir in proptest::collection::vec(-1.0f64..1.0, 1..23),
    ) {
        let p = if two { planar() } else { nagumo(0.3) };
        let u = perturbed(&p, 4.0, 0.05, 1.0, 1.5, &noise);
        let dim = u.dim;
        let last = u.values.len() - dim;
        let d: Vec<f64> = (0..u.values.len())
            .map(|k| if k < dim || k >= last { 0.0 } else { dir[k % dir.len()] })
            .collect();
        let g = action_gradient(c, &u, &p).unwrap();
        prop_assert!(g[..dim].iter().chain(&g[last..]).all(|v| *v == 0.0));
        let exact: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let eps = 1e-5;
        let at = |s: f64| {
            let mut v = u.clone();
            v.values.iter_mut().zip(&d).for_each(|(x, dx)| *x += s * dx);
            action(c, &v, &p).unwrap().scaled_total
        };
        let fd = (at(eps) - at(-eps)) / (2.0 * eps);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{fd} vs {exact}");
    }
}
