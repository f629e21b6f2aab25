use std::collections::BTreeMap;

use proptest::prelude::*;

use hetwave::potential::{
    appendix_hat, eval_grad, eval_w, geometry_probe, make_builtin, reflect_above, HatParams, Omega,
    PotentialSpec, ProbeBox,
};

fn builtin(name: &str) -> PotentialSpec {
    make_builtin(name, &BTreeMap::new()).unwrap()
}

fn nagumo(a: f64) -> PotentialSpec {
    make_builtin("nagumo", &BTreeMap::from([("a".to_string(), a)])).unwrap()
}

fn point_in_box(p: &PotentialSpec, t: &[f64]) -> Vec<f64> {
    let b = ProbeBox::default_for(p);
    (0..p.dim).map(|i| b.lo[i] + t[i] * (b.hi[i] - b.lo[i])).collect()
}

#[test]
fn nagumo_at_one_half() {
    let w = eval_w(&nagumo(0.25), &[0.5]).unwrap();
    let direct = 0.25 * 0.25 / 2.0 - 1.25 * 0.125 / 3.0 + 0.0625 / 4.0;
    assert!((w - direct).abs() < 1e-15);
    assert!((w + 0.0052083).abs() < 1e-7);
}

#[test]
fn planar_examples() {
    let p = builtin("planar_deformed");
    assert_eq!(eval_w(&p, &[-1.0, 0.0]).unwrap(), 0.0);
    assert!((eval_w(&p, &[1.0, 0.0]).unwrap() + 0.3).abs() < 1e-15);
    assert_eq!(eval_grad(&p, &[0.0, 1.0]), vec![0.0, 2.0]);
    assert_eq!(eval_grad(&nagumo(0.25), &[1.0]), vec![0.0]);
}

#[test]
fn minima_are_critical_zeros() {
    for name in ["nagumo", "planar_deformed", "pwell_deformed", "appendix_bistable"] {
        let p = builtin(name);
        assert!(p.eval(&p.a_plus).abs() <= 1e-12, "{name}");
        assert!(p.w_at_a_minus < 0.0, "{name}");
        assert_eq!(p.eval(&p.a_minus), p.w_at_a_minus, "{name}");
        for a in [&p.a_plus, &p.a_minus] {
            assert!(p.grad_vec(a).iter().all(|g| g.abs() <= 1e-8), "{name}");
        }
        if p.has_analytic_hess() {
            assert!(p.hessian_consistency(10, 3) <= 1e-4, "{name}");
        }
    }
}

#[test]
fn sublevel_distance_shrinks_with_alpha() {
    for p in [nagumo(0.25), builtin("planar_deformed")] {
        let top = geometry_probe(&p, 0.0, 0.05, None, 401).unwrap().alpha_bar0;
        let d: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|f| geometry_probe(&p, f * top, 0.05, None, 401).unwrap().d_alpha)
            .collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
        assert!(d.iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn nagumo_sampled_distance_matches_root() {
    let p = nagumo(0.25);
    let root = 2.0 * (5.0 / 12.0 - ((5.0f64 / 12.0).powi(2) - 0.125).sqrt());
    for res in [201, 401, 2001] {
        let g = geometry_probe(&p, 0.0, 0.05, None, res).unwrap();
        assert!((g.d_alpha - (root - 0.05)).abs() <= 2.0 / res as f64);
        assert!((g.r_alpha_max - (1.0 - root)).abs() <= 2.0 / res as f64);
        assert_eq!(g.alpha_bar0, g.c0 * g.lambda_margin / 4.0);
        assert!(g.r0 <= g.r0_max);
        if g.hypothesis_flags.h_star_2 {
            assert!(g.w_star > 0.0);
        }
    }
}

#[test]
fn hat_is_continuous() {
    let w = builtin("appendix_bistable");
    for k in [0.5, 1.0, 4.0] {
        let hat = appendix_hat(
            &w,
            HatParams {
                a_minus: -1.0,
                a0: 0.0,
                omega1: -1.5,
                omega2: 1.5,
                k,
            },
        )
        .unwrap();
        assert!(hat.breakpoint_jumps().iter().all(|j| *j <= 1e-9), "K = {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradients_match_central_differences(
        which in 0usize..4,
        t in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let name = ["nagumo", "planar_deformed", "pwell_deformed", "appendix_bistable"][which];
        let p = builtin(name);
        let u = point_in_box(&p, &t);
        let g = eval_grad(&p, &u);
        let scale = g.iter().map(|v| v.abs()).fold(1e-3, f64::max);
        for i in 0..p.dim {
            let s = 1e-5 * (1.0 + u[i].abs());
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[i] += s;
            dn[i] -= s;
            let fd = (p.eval(&up) - p.eval(&dn)) / (2.0 * s);
            prop_assert!((fd - g[i]).abs() / scale <= 1e-5, "{name} at {u:?}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn reflection_is_idempotent_above_level(
        lo in -0.9f64..-0.2,
        x in -3.0f64..4.0,
    ) {
        let p = nagumo(0.25);
        let omega = Omega::Box { lo: vec![lo], hi: vec![1.4] };
        let once = reflect_above(&p, &omega).unwrap();
        let twice = reflect_above(&once, &omega).unwrap();
        let m = once.reflection.as_ref().unwrap().level;
        if p.eval(&[x]) >= m {
            prop_assert_eq!(once.eval(&[x]), p.eval(&[x]));
            prop_assert_eq!(twice.eval(&[x]), once.eval(&[x]));
        }
        if omega.contains(&[x]) {
            prop_assert_eq!(once.eval(&[x]), p.eval(&[x]));
        }
    }
}
