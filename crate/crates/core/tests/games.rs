mod common;

use proptest::prelude::*;

use common::{bimatrix, coordination, scalar};
use robust_eq_core::game::{game_distance, perturb_collapse1, perturb_collapse2, uniform_payoff_distance, SampleSpec};
use robust_eq_core::linalg::Norm;
use robust_eq_core::{classify_equilibrium, Error, GameSpec, Tolerances, Verdict};

const EPSILONS: [f64; 3] = [1.0, 0.1, 0.01];

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn catalog_gradients() {
    let q = scalar(GameSpec::BoundaryQuartic);
    assert_eq!(q.gradient_field(&[0.0]).unwrap(), vec![0.0]);
    assert!((q.gradient_field(&[0.125]).unwrap()[0] + 0.5).abs() < 1e-15);
    let l = scalar(GameSpec::LinearInterval { slope: 1.0 });
    for x in [0.0, 0.3, 1.0] {
        assert_eq!(l.gradient_field(&[x]).unwrap(), vec![1.0]);
    }
    let c = coordination();
    assert_eq!(c.gradient_field(&[1.0, 0.0, 1.0, 0.0]).unwrap(), vec![1.0, 0.0, 1.0, 0.0]);
    assert!(c.gradient_field(&[1.0, 0.0, 0.5, 0.6]).is_err());
}

#[test]
fn malformed_bimatrices_are_rejected() {
    let bad = GameSpec::Bimatrix {
        a1: vec![vec![1.0, 0.0], vec![0.0]],
        a2: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    };
    assert!(bad.build().is_err());
    let single = GameSpec::Bimatrix {
        a1: vec![vec![1.0, 0.0]],
        a2: vec![vec![1.0, 0.0]],
    };
    assert!(single.build().is_err());
}

#[test]
fn scalar_gradients_match_finite_differences() {
    for spec in [
        GameSpec::BoundaryQuartic,
        GameSpec::LinearInterval { slope: -2.5 },
        GameSpec::InteriorQuadratic { c: 0.3 },
        GameSpec::Zero,
    ] {
        let g = spec.build().unwrap();
        for k in 1..100 {
            let x = [k as f64 / 100.0];
            let a = g.gradient_field(&x).unwrap();
            let f = g.fd_gradient_field(&x);
            assert!((a[0] - f[0]).abs() <= 1e-5 * a[0].abs().max(1.0), "{}: {a:?} vs {f:?}", g.label());
        }
    }
}

#[test]
fn distance_to_self_is_zero() {
    let g = coordination();
    let spec = SampleSpec::default();
    assert_eq!(game_distance(&g, &g, &spec, Norm::Linf).unwrap().value, 0.0);
    assert_eq!(uniform_payoff_distance(&g, &g, &spec).unwrap().value, 0.0);
    assert!(game_distance(&g, &scalar(GameSpec::Zero), &spec, Norm::Linf).is_err());
}

/// Collapse-1 at the robust point of `u(x) = x`: the perturbed gradient is
/// `1 - 2 exp(2(x-1)/ε)`, so `Ṽ(1) = -1` and `u - ũ = ε exp(2(x-1)/ε) ≤ ε`.
#[test]
fn collapse1_on_linear_interval() {
    let g = scalar(GameSpec::LinearInterval { slope: 1.0 });
    let tols = Tolerances::default();
    for eps in EPSILONS {
        let p = perturb_collapse1(&g, 0, &[1.0], eps, &tols).unwrap();
        let v = p.game.gradient_field(&[1.0]).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-12);
        for x in [0.0, 0.5, 0.9] {
            let want = 1.0 - 2.0 * (2.0 * (x - 1.0) / eps).exp();
            assert!((p.game.gradient_field(&[x]).unwrap()[0] - want).abs() < 1e-12);
        }
        let spec = SampleSpec::default().with_anchor(vec![1.0]);
        let d = uniform_payoff_distance(&g, &p.game, &spec).unwrap();
        assert!((d.value - eps).abs() < 1e-12, "{}", d.value);
        assert!(d.lower_bound);
        let gd = game_distance(&g, &p.game, &spec, Norm::Linf).unwrap();
        assert!(gd.value >= 2.0 - 1e-12);
        let before = classify_equilibrium(&g, &[1.0], &tols).unwrap();
        let after = classify_equilibrium(&p.game, &[1.0], &tols).unwrap();
        assert_eq!(before.verdict, Verdict::Robust);
        assert_eq!(after.verdict, Verdict::NotStationary);
        assert!(after.stationarity_gap > 0.0);
        assert_eq!(p.deviation, vec![0.0]);
        // The deviation strictly improves the perturbed first-order payoff.
        assert!(v[0] * (p.deviation[0] - 1.0) > 0.0);
    }
}

#[test]
fn collapse1_on_coordination() {
    let g = coordination();
    let x = [1.0, 0.0, 1.0, 0.0];
    let tols = Tolerances::default();
    for eps in EPSILONS {
        let p = perturb_collapse1(&g, 0, &x, eps, &tols).unwrap();
        let v = g.gradient_field(&x).unwrap();
        let w = p.game.gradient_field(&x).unwrap();
        assert!(close(&w[..2], &[-v[0], -v[1]], 1e-12));
        assert!(close(&w[2..], &v[2..], 0.0));
        let d = uniform_payoff_distance(&g, &p.game, &SampleSpec::default().with_anchor(x.to_vec())).unwrap();
        assert!(d.value > 0.0 && d.value <= eps + 1e-12);
        assert_eq!(classify_equilibrium(&p.game, &x, &tols).unwrap().verdict, Verdict::NotStationary);
    }
}

#[test]
fn collapse2_on_interior_quadratic() {
    let g = scalar(GameSpec::InteriorQuadratic { c: 0.5 });
    let tols = Tolerances::default();
    for eps in EPSILONS {
        let p = perturb_collapse2(&g, 0, &[0.5], eps, &[1.0]).unwrap();
        let v = p.game.gradient_field(&[0.5]).unwrap();
        assert!((v[0] - eps).abs() < 1e-12);
        assert!((v[0] * (1.0 - 0.5) - eps / 2.0).abs() < 1e-12);
        let spec = SampleSpec::default();
        let gd = game_distance(&g, &p.game, &spec, Norm::Linf).unwrap();
        assert!((gd.value - eps).abs() < 1e-9);
        let d = uniform_payoff_distance(&g, &p.game, &spec).unwrap();
        assert!(d.value <= eps + 1e-12);
        assert_eq!(classify_equilibrium(&g, &[0.5], &tols).unwrap().verdict, Verdict::Interior);
        let after = classify_equilibrium(&p.game, &[0.5], &tols).unwrap();
        assert_eq!(after.verdict, Verdict::NotStationary);
        assert!(after.stationarity_gap > 0.0);
    }
}

#[test]
fn collapse2_on_rock_paper_scissors() {
    let a: &[&[f64]] = &[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]];
    let b: &[&[f64]] = &[&[0.0, 1.0, -1.0], &[-1.0, 0.0, 1.0], &[1.0, -1.0, 0.0]];
    let g = bimatrix(a, b);
    let x = [1.0 / 3.0; 6];
    let tols = Tolerances::default();
    for eps in EPSILONS {
        let p = perturb_collapse2(&g, 1, &x, eps, &[1.0, 0.0, 0.0]).unwrap();
        let d = uniform_payoff_distance(&g, &p.game, &SampleSpec::default()).unwrap();
        assert!(d.value <= eps + 1e-12);
        assert_eq!(classify_equilibrium(&p.game, &x, &tols).unwrap().verdict, Verdict::NotStationary);
    }
}

#[test]
fn perturbation_preconditions() {
    let tols = Tolerances::default();
    let q = scalar(GameSpec::BoundaryQuartic);
    assert!(matches!(perturb_collapse1(&q, 0, &[0.0], 0.1, &tols), Err(Error::NotApplicable(_))));
    let l = scalar(GameSpec::LinearInterval { slope: 1.0 });
    assert!(matches!(perturb_collapse1(&l, 0, &[0.5], 0.1, &tols), Err(Error::NotApplicable(_))));
    assert!(matches!(perturb_collapse2(&l, 0, &[1.0], 0.1, &[1.0]), Err(Error::NotApplicable(_))));
    let iq = scalar(GameSpec::InteriorQuadratic { c: 0.5 });
    assert!(perturb_collapse2(&iq, 0, &[0.5], 0.1, &[0.0]).is_err());
    assert!(perturb_collapse2(&iq, 0, &[0.5], -1.0, &[1.0]).is_err());
    assert!(perturb_collapse2(&iq, 1, &[0.5], 0.1, &[1.0]).is_err());
}

fn matrix(m: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), m)
}

fn simplex_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, d).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bimatrix_gradients_match_finite_differences(a1 in matrix(3, 2), a2 in matrix(3, 2), x1 in simplex_point(3), x2 in simplex_point(2)) {
        let g = GameSpec::Bimatrix { a1, a2 }.build().unwrap();
        let x: Vec<f64> = x1.into_iter().chain(x2).collect();
        let a = g.gradient_field(&x).unwrap();
        let f = g.fd_gradient_field(&x);
        for (p, q) in a.iter().zip(&f) {
            prop_assert!((p - q).abs() <= 1e-5 * p.abs().max(1.0), "{a:?} vs {f:?}");
        }
    }

    #[test]
    fn bimatrix_gradients_are_bilinear(a1 in matrix(2, 3), a2 in matrix(2, 3), x1 in simplex_point(2), y1 in simplex_point(2), x2 in simplex_point(3), t in 0.0f64..1.0) {
        let g = GameSpec::Bimatrix { a1: a1.clone(), a2: a2.clone() }.build().unwrap();
        let mix: Vec<f64> = x1.iter().zip(&y1).map(|(p, q)| t * p + (1.0 - t) * q).collect();
        let joint = |p: &[f64]| p.iter().chain(&x2).copied().collect::<Vec<f64>>();
        let (va, vb, vm) = (g.gradient_field(&joint(&x1)).unwrap(), g.gradient_field(&joint(&y1)).unwrap(), g.gradient_field(&joint(&mix)).unwrap());
        for k in 0..5 {
            prop_assert!((vm[k] - (t * va[k] + (1.0 - t) * vb[k])).abs() < 1e-12);
        }
        // Player 1's gradient is A1 x2 regardless of x1.
        for (i, row) in a1.iter().enumerate() {
            let want: f64 = row.iter().zip(&x2).map(|(a, b)| a * b).sum();
            prop_assert!((va[i] - want).abs() < 1e-12);
        }
        for j in 0..3 {
            let want: f64 = (0..2).map(|i| a2[i][j] * x1[i]).sum();
            prop_assert!((va[2 + j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn collapse2_gradient_gap_is_constant(eps in 0.001f64..2.0, y in prop::collection::vec(-1.0f64..1.0, 3)) {
        prop_assume!(y.iter().any(|v| v.abs() > 0.1));
        let a: &[&[f64]] = &[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]];
        let b: &[&[f64]] = &[&[0.0, 1.0, -1.0], &[-1.0, 0.0, 1.0], &[1.0, -1.0, 0.0]];
        let g = bimatrix(a, b);
        let x = [1.0 / 3.0; 6];
        let p = match perturb_collapse2(&g, 0, &x, eps, &y) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let diam = 2f64.sqrt();
        let gap: f64 = y.iter().map(|v| (eps * v / (diam * ny)).abs()).fold(0.0, f64::max);
        let d = game_distance(&g, &p.game, &SampleSpec { samples: 256, ..SampleSpec::default() }, Norm::Linf).unwrap();
        prop_assert!((d.value - gap).abs() < 1e-9);
        prop_assert!(gap <= eps / diam + 1e-12);
    }
}
