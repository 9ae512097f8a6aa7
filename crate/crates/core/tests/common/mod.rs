//! Shared fixtures and independent oracles for integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_eq_core::domain::DomainKind;
use robust_eq_core::{Game, GameSpec, PlayerDomain, ProductDomain, Verdict};

pub fn bimatrix(a1: &[&[f64]], a2: &[&[f64]]) -> Game {
    let rows = |a: &[&[f64]]| a.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    GameSpec::Bimatrix {
        a1: rows(a1),
        a2: rows(a2),
    }
    .build()
    .unwrap()
}

pub fn coordination() -> Game {
    bimatrix(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[1.0, 0.0], &[0.0, 1.0]])
}

pub fn scalar(spec: GameSpec) -> Game {
    spec.build().unwrap()
}

/// Membership written out from the domain definitions, independent of the
/// library's own checks.
pub fn member(d: &ProductDomain, x: &[f64], tol: f64) -> bool {
    let mut off = 0;
    for p in d.players() {
        let n = p.dim();
        let xi = &x[off..off + n];
        off += n;
        let ok = match p.kind() {
            DomainKind::Interval { lo, hi } => xi[0] >= lo - tol && xi[0] <= hi + tol,
            DomainKind::Box { lo, hi } => xi.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            DomainKind::Simplex { .. } => xi.iter().all(|v| *v >= -tol) && (xi.iter().sum::<f64>() - 1.0).abs() <= tol,
            DomainKind::Polytope { aeq, beq, nonneg } => {
                aeq.iter().zip(beq).all(|(r, b)| (r.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() - b).abs() <= tol)
                    && xi.iter().zip(nonneg).all(|(v, nn)| !nn || *v >= -tol)
            }
        };
        if !ok {
            return false;
        }
    }
    true
}

fn l1_unit(z: &[f64]) -> Option<Vec<f64>> {
    let s: f64 = z.iter().map(|v| v.abs()).sum();
    (s > 0.0).then(|| z.iter().map(|v| v / s).collect())
}

/// `max ⟨v, z⟩` over ℓ₁-unit directions `z` with `x + t z` feasible for a
/// small `t`, found by enumeration of sparse directions plus random
/// directions in the span of pairwise coordinate differences.
pub fn brute_force_gap(d: &ProductDomain, x: &[f64], v: &[f64], random: usize, seed: u64) -> f64 {
    let n = x.len();
    let t = 1e-7;
    let feasible = |z: &[f64]| {
        let p: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + t * b).collect();
        member(d, &p, 1e-12)
    };
    let mut best = f64::NEG_INFINITY;
    let mut consider = |z: Vec<f64>| {
        if let Some(z) = l1_unit(&z) {
            if feasible(&z) {
                best = best.max(z.iter().zip(v).map(|(a, b)| a * b).sum());
            }
        }
    };
    let e = |j: usize| {
        let mut z = vec![0.0; n];
        z[j] = 1.0;
        z
    };
    for j in 0..n {
        consider(e(j));
        consider(e(j).iter().map(|c| -c).collect());
        for k in 0..n {
            if j != k {
                let mut z = e(j);
                z[k] = -1.0;
                consider(z.clone());
                for l in 0..n {
                    if l != j && l != k {
                        // Moves shared by two simplex players or by two
                        // coordinates of one player.
                        let mut w = z.clone();
                        w[l] += 1.0;
                        consider(w.clone());
                        w[l] -= 2.0;
                        consider(w);
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<Vec<f64>> = (0..n)
        .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
        .map(|(j, k)| {
            let mut z = e(j);
            z[k] = -1.0;
            z
        })
        .chain((0..n).map(e))
        .collect();
    for _ in 0..random {
        let mut z = vec![0.0; n];
        for p in &pairs {
            let c: f64 = rng.random_range(-1.0..1.0);
            let c = if rng.random_bool(0.5) { c * c * c } else { 0.0 };
            for (a, b) in z.iter_mut().zip(p) {
                *a += c * b;
            }
        }
        consider(z);
    }
    best
}

/// A catalog point with its hand-derived verdict and, when known exactly,
/// its ℓ₁-margin.
pub struct Case {
    pub name: &'static str,
    pub game: Game,
    pub x: Vec<f64>,
    pub verdict: Verdict,
    pub margin: Option<f64>,
}

fn case(name: &'static str, game: Game, x: Vec<f64>, verdict: Verdict, margin: Option<f64>) -> Case {
    Case {
        name,
        game,
        x,
        verdict,
        margin,
    }
}

/// Points spanning every verdict: interior, boundary non-extreme, extreme
/// non-robust, robust, and non-stationary.
pub fn catalog_cases() -> Vec<Case> {
    use GameSpec::*;
    use Verdict::*;
    let lin = |slope: f64| scalar(LinearInterval { slope });
    let quad = |c: f64| scalar(InteriorQuadratic { c });
    let ones3: &[&[f64]] = &[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]];
    let flat = || bimatrix(ones3, ones3);
    let rps_a: &[&[f64]] = &[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]];
    let rps_b: &[&[f64]] = &[&[0.0, 1.0, -1.0], &[-1.0, 0.0, 1.0], &[1.0, -1.0, 0.0]];
    let id3: &[&[f64]] = &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]];
    let tie: &[&[f64]] = &[&[1.0, 1.0], &[0.0, 0.0]];
    let third = 1.0 / 3.0;
    let wide = lin(1.0)
        .with_domain(ProductDomain::single(PlayerDomain::interval(-1.0, 1.0).unwrap()))
        .unwrap();
    vec![
        case("linear x=1", lin(1.0), vec![1.0], Robust, Some(1.0)),
        case("linear x=0", lin(1.0), vec![0.0], NotStationary, Some(-1.0)),
        case("linear x=0.5", lin(1.0), vec![0.5], NotStationary, Some(-1.0)),
        case("linear slope -1 x=0", lin(-1.0), vec![0.0], Robust, Some(1.0)),
        case("linear slope 2 x=1", lin(2.0), vec![1.0], Robust, Some(2.0)),
        case("linear on [-1,1] x=1", wide, vec![1.0], Robust, Some(1.0)),
        case("quartic x=0", scalar(BoundaryQuartic), vec![0.0], ExtremeNonRobust, Some(0.0)),
        case("quartic x=1", scalar(BoundaryQuartic), vec![1.0], NotStationary, Some(-1.0)),
        case("quartic x=0.125", scalar(BoundaryQuartic), vec![0.125], NotStationary, Some(-0.5)),
        case("quadratic c=1/2 x=1/2", quad(0.5), vec![0.5], Interior, Some(0.0)),
        case("quadratic c=1/2 x=0.2", quad(0.5), vec![0.2], NotStationary, Some(-0.6)),
        case("quadratic c=0 x=0", quad(0.0), vec![0.0], ExtremeNonRobust, Some(0.0)),
        case("quadratic c=1.5 x=1", quad(1.5), vec![1.0], Robust, Some(1.0)),
        case("zero x=0", scalar(Zero), vec![0.0], ExtremeNonRobust, Some(0.0)),
        case("zero x=1/2", scalar(Zero), vec![0.5], Interior, Some(0.0)),
        case("coordination (e1,e1)", coordination(), vec![1.0, 0.0, 1.0, 0.0], Robust, Some(0.5)),
        case("coordination (e2,e2)", coordination(), vec![0.0, 1.0, 0.0, 1.0], Robust, Some(0.5)),
        case("coordination mixed", coordination(), vec![0.5, 0.5, 0.5, 0.5], Interior, Some(0.0)),
        case("coordination (e1,e2)", coordination(), vec![1.0, 0.0, 0.0, 1.0], NotStationary, Some(-0.5)),
        case("coordination 3x3 (e1,e1)", bimatrix(id3, id3), vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0], Robust, Some(0.5)),
        case("rps uniform", bimatrix(rps_a, rps_b), vec![third; 6], Interior, Some(0.0)),
        case("tied bimatrix (e1,e1)", bimatrix(tie, tie), vec![1.0, 0.0, 1.0, 0.0], ExtremeNonRobust, Some(0.0)),
        case("flat 3x3 on an edge", flat(), vec![0.5, 0.5, 0.0, 0.5, 0.5, 0.0], BoundaryNonExtreme, Some(0.0)),
        case("flat 3x3 at a vertex", flat(), vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0], ExtremeNonRobust, Some(0.0)),
        case("flat 3x3 at third action", flat(), vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0], NotStationary, Some(-0.5)),
    ]
}
