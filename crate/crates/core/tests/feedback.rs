mod common;

use proptest::prelude::*;

use common::{coordination, member, scalar};
use robust_eq_core::feedback::{empirical_bias, sample_feedback, Noise, Oracle, OracleSpec};
use robust_eq_core::rng::RunStreams;
use robust_eq_core::{Error, GameSpec, PlayerDomain, ProductDomain};

fn spsa(delta0: f64, rho: f64) -> OracleSpec {
    OracleSpec::Spsa {
        pivots: None,
        radii: None,
        delta0,
        rho,
    }
}

#[test]
fn perfect_feedback_is_the_gradient() {
    let g = scalar(GameSpec::LinearInterval { slope: 1.0 });
    let o = Oracle::new(&OracleSpec::Perfect, g.domain()).unwrap();
    let mut rng = RunStreams::new(1, 0, 1);
    for x in [0.0, 0.25, 1.0] {
        let s = sample_feedback(&o, &g, &[x], 3, &mut rng).unwrap();
        assert_eq!(s.signal, vec![1.0]);
        assert_eq!(s.queried_point, vec![x]);
        assert_eq!(s.delta, None);
    }
}

/// `u(x) = x`, pivot ½, radius ¼, `δ₁ = 0.1`: the query is `½ ± 0.1` and the
/// signal `10·u(x̂)·w`, i.e. 6 or -4, averaging to `V = 1`.
#[test]
fn spsa_hand_example() {
    let g = scalar(GameSpec::LinearInterval { slope: 1.0 });
    let o = Oracle::new(
        &OracleSpec::Spsa {
            pivots: Some(vec![vec![0.5]]),
            radii: Some(vec![0.25]),
            delta0: 0.1,
            rho: 0.25,
        },
        g.domain(),
    )
    .unwrap();
    let mut rng = RunStreams::new(5, 0, 1);
    let (mut plus, mut minus) = (0, 0);
    for _ in 0..200 {
        let s = sample_feedback(&o, &g, &[0.5], 1, &mut rng).unwrap();
        assert_eq!(s.delta, Some(0.1));
        if s.directions[0] > 0.0 {
            plus += 1;
            assert!((s.queried_point[0] - 0.6).abs() < 1e-15);
            assert!((s.signal[0] - 6.0).abs() < 1e-12);
        } else {
            minus += 1;
            assert!((s.queried_point[0] - 0.4).abs() < 1e-15);
            assert!((s.signal[0] + 4.0).abs() < 1e-12);
        }
    }
    assert!(plus > 0 && minus > 0);
    assert!(((6.0 - 4.0) / 2.0 - 1.0f64).abs() < 1e-15);
}

#[test]
fn gaussian_noise_is_centered() {
    let g = coordination();
    let x = [0.5, 0.5, 0.2, 0.8];
    let v = g.gradient_field(&x).unwrap();
    let sigma = 1.5;
    let o = Oracle::new(&OracleSpec::Sfo { noise: Noise::Gaussian(sigma) }, g.domain()).unwrap();
    let mut rng = RunStreams::new(9, 0, 2);
    let m = 100_000;
    let mut mean = [0.0; 4];
    for _ in 0..m {
        let s = sample_feedback(&o, &g, &x, 1, &mut rng).unwrap();
        for k in 0..4 {
            mean[k] += (s.signal[k] - v[k]) / m as f64;
        }
    }
    for c in mean {
        assert!(c.abs() < 4.0 * sigma / (m as f64).sqrt(), "{c}");
    }
}

#[test]
fn rademacher_noise_takes_two_values() {
    let g = scalar(GameSpec::LinearInterval { slope: 1.0 });
    let o = Oracle::new(&OracleSpec::Sfo { noise: Noise::Rademacher(2.0) }, g.domain()).unwrap();
    let mut rng = RunStreams::new(3, 0, 1);
    let mut seen = [false; 2];
    for _ in 0..100 {
        let s = sample_feedback(&o, &g, &[1.0], 1, &mut rng).unwrap();
        match s.signal[0] {
            v if v == 3.0 => seen[0] = true,
            v if v == -1.0 => seen[1] = true,
            v => panic!("unexpected signal {v}"),
        }
    }
    assert!(seen[0] && seen[1]);
}

#[test]
fn covariance_noise_has_the_requested_covariance() {
    let d = ProductDomain::single(PlayerDomain::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
    let cov = vec![vec![2.0, 0.6], vec![0.6, 0.5]];
    let o = Oracle::new(&OracleSpec::Sfo { noise: Noise::GaussianCov(cov.clone()) }, &d).unwrap();
    let zero2 = robust_eq_core::Game::new(d.clone(), std::sync::Arc::new(Zero2), "zero2").unwrap();
    let mut rng = RunStreams::new(4, 0, 1);
    let m = 200_000;
    let mut acc = [[0.0; 2]; 2];
    for _ in 0..m {
        let s = sample_feedback(&o, &zero2, &[0.5, 0.5], 1, &mut rng).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                acc[a][b] += s.signal[a] * s.signal[b] / m as f64;
            }
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            assert!((acc[a][b] - cov[a][b]).abs() < 0.03, "{acc:?}");
        }
    }
    let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
    assert!(Oracle::new(&OracleSpec::Sfo { noise: Noise::GaussianCov(bad) }, &d).is_err());
}

struct Zero2;

impl robust_eq_core::game::Payoffs for Zero2 {
    fn num_players(&self) -> usize {
        1
    }
    fn payoff(&self, _: usize, _: &[f64]) -> f64 {
        0.0
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let d = scalar(GameSpec::Zero).domain().clone();
    assert!(Oracle::new(&OracleSpec::Sfo { noise: Noise::Gaussian(-1.0) }, &d).is_err());
    assert!(Oracle::new(&OracleSpec::Sfo { noise: Noise::Gaussian(f64::NAN) }, &d).is_err());
    assert!(Oracle::new(&spsa(0.1, 0.5), &d).is_err());
    assert!(Oracle::new(&spsa(0.1, 0.0), &d).is_err());
    assert!(Oracle::new(&spsa(-0.1, 0.25), &d).is_err());
    let edge_pivot = OracleSpec::Spsa {
        pivots: Some(vec![vec![0.0]]),
        radii: None,
        delta0: 0.1,
        rho: 0.25,
    };
    assert!(Oracle::new(&edge_pivot, &d).is_err());
    let wide = OracleSpec::Spsa {
        pivots: Some(vec![vec![0.5]]),
        radii: Some(vec![0.6]),
        delta0: 0.1,
        rho: 0.25,
    };
    assert!(Oracle::new(&wide, &d).is_err());
}

#[test]
fn spsa_schedule_errors_before_first_valid_index() {
    let g = scalar(GameSpec::LinearInterval { slope: 1.0 });
    let o = Oracle::new(&spsa(0.5, 0.25), g.domain()).unwrap();
    let n0 = o.first_valid_index();
    assert!(n0 > 1);
    assert!(o.delta_at(n0).unwrap() < 0.25 && o.delta_at(n0 - 1).unwrap() >= 0.25);
    let mut rng = RunStreams::new(0, 0, 1);
    assert!(matches!(sample_feedback(&o, &g, &[0.5], n0 - 1, &mut rng), Err(Error::Schedule { .. })));
    assert!(sample_feedback(&o, &g, &[0.5], n0, &mut rng).is_ok());
}

#[test]
fn feedback_streams_are_reproducible() {
    let g = coordination();
    for spec in [OracleSpec::Sfo { noise: Noise::Gaussian(1.0) }, spsa(0.2, 0.25)] {
        let o = Oracle::new(&spec, g.domain()).unwrap();
        let draw = |seed| {
            let mut rng = RunStreams::new(seed, 2, 2);
            (1..50)
                .map(|n| sample_feedback(&o, &g, &[0.3, 0.7, 0.6, 0.4], n, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(17), draw(17));
        assert_ne!(draw(17), draw(18));
    }
}

/// `u(x) = x` at the pivot: `E v̂ = (u(x+δ) - u(x-δ))/(2δ) = 1` exactly.
#[test]
fn spsa_is_unbiased_for_linear_payoffs_at_the_pivot() {
    let g = scalar(GameSpec::LinearInterval { slope: 1.0 });
    let o = Oracle::new(&spsa(0.1, 0.25), g.domain()).unwrap();
    let mut rng = RunStreams::new(21, 0, 1);
    let b = empirical_bias(&o, &g, &[0.5], 0.1, 100_000, &mut rng).unwrap();
    // v̂ ∈ {6, -4}; standard deviation 5.
    assert!(b.bias[0].abs() < 4.0 * 5.0 / (1e5f64).sqrt(), "{:?}", b.bias);
}

/// For `u = -(x-½)²` with pivot ½, radius ¼ at `x = 0.3`:
/// `E v̂ = (u(x_δ+δ) - u(x_δ-δ))/(2δ) = -2(x_δ - ½)` where
/// `x_δ = x + 4δ(½ - x)`, so the bias is `-2·4δ·0.2 = -1.6δ`.
#[test]
fn spsa_bias_is_linear_in_delta_for_quadratic_payoffs() {
    let g = scalar(GameSpec::InteriorQuadratic { c: 0.5 });
    let o = Oracle::new(&spsa(0.1, 0.25), g.domain()).unwrap();
    let mut rng = RunStreams::new(8, 0, 1);
    for delta in [0.1, 0.05] {
        let b = empirical_bias(&o, &g, &[0.3], delta, 200_000, &mut rng).unwrap();
        let sd = 0.25 / delta;
        assert!((b.bias[0] + 1.6 * delta).abs() < 4.0 * sd / (2e5f64).sqrt(), "{delta}: {:?}", b.bias);
    }
}

fn catalog_domains() -> Vec<ProductDomain> {
    vec![
        ProductDomain::single(PlayerDomain::interval(0.0, 1.0).unwrap()),
        ProductDomain::single(PlayerDomain::boxed(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 2.5]).unwrap()),
        ProductDomain::single(PlayerDomain::simplex(3).unwrap()),
        ProductDomain::new(vec![PlayerDomain::simplex(2).unwrap(), PlayerDomain::simplex(4).unwrap()]).unwrap(),
        ProductDomain::new(vec![PlayerDomain::interval(-2.0, 3.0).unwrap(), PlayerDomain::simplex(3).unwrap()]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn spsa_queries_stay_feasible(which in 0usize..5, u in prop::collection::vec(0.0f64..1.0, 8), vertex in any::<bool>(), n in 1u64..100_000, seed in any::<u64>(), delta0 in 0.01f64..1.0) {
        let d = catalog_domains().swap_remove(which);
        let mut x = d.point_from_unit(&u[..d.sample_dim()]);
        if vertex {
            // Snap to the nearest vertex of each player's set.
            for (i, p) in d.players().iter().enumerate() {
                let r = d.range(i);
                let c: Vec<f64> = x[r.clone()].to_vec();
                let (_, v) = p.maximize_linear(&c).unwrap();
                x[r].copy_from_slice(&v);
            }
        }
        let g = robust_eq_core::Game::new(d.clone(), std::sync::Arc::new(Quad(d.num_players())), "quad").unwrap();
        let o = Oracle::new(&spsa(delta0, 0.3), &d).unwrap();
        let n = n.max(o.first_valid_index());
        let mut rng = RunStreams::new(seed, 0, d.num_players());
        for _ in 0..4 {
            let s = sample_feedback(&o, &g, &x, n, &mut rng).unwrap();
            prop_assert!(member(&d, &s.queried_point, 1e-12), "{:?}", s.queried_point);
        }
    }
}

struct Quad(usize);

impl robust_eq_core::game::Payoffs for Quad {
    fn num_players(&self) -> usize {
        self.0
    }
    fn payoff(&self, i: usize, x: &[f64]) -> f64 {
        -x.iter().map(|v| v * v).sum::<f64>() + i as f64
    }
}
