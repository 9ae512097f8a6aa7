//! Classification of candidate equilibria by the geometry of `V(x*)` against
//! the tangent cone at `x*`.
//!
//! A stationary point is strategically robust exactly when `V(x*)` lies in
//! the interior of the polar cone, i.e. `⟨V(x*), z⟩ ≤ -c‖z‖` on the tangent
//! cone for some `c > 0`. Margins reported here use the ℓ₁ norm so that `c`
//! is the value of a linear program; other norms change `c` by at most the
//! usual norm-equivalence constants but never its sign.

use alloc::vec::Vec;

use crate::cone::{lineality_dim, robustness_margin, tangent_cone};
use crate::domain::ProductDomain;
use crate::game::Game;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    NotStationary,
    Interior,
    BoundaryNonExtreme,
    ExtremeNonRobust,
    Robust,
}

impl Verdict {
    pub fn is_stationary(self) -> bool {
        self != Verdict::NotStationary
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotStationary => "not_stationary",
            Verdict::Interior => "interior",
            Verdict::BoundaryNonExtreme => "boundary_non_extreme",
            Verdict::ExtremeNonRobust => "extreme_non_robust",
            Verdict::Robust => "robust",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Tolerances {
    pub stat_tol: f64,
    pub robust_tol: f64,
    pub membership_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            stat_tol: 1e-8,
            robust_tol: 1e-6,
            membership_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RobustnessCertificate {
    pub verdict: Verdict,
    /// ℓ₁-margin `c`; `+∞` for a singleton cone.
    pub margin: f64,
    /// Maximizer of `⟨V, z⟩` over ℓ₁-unit tangent directions.
    pub witness: Vec<f64>,
    /// Per-player indices of coordinates on a bound.
    pub active_sets: Vec<Vec<usize>>,
    /// `max⟨V, z⟩` over ℓ₁-unit tangent directions, i.e. `-margin`.
    pub stationarity_gap: f64,
}

/// Certifies `x` given the gradient field value `v = V(x)`.
pub fn certify_gradient(domain: &ProductDomain, x: &[f64], v: &[f64], tols: &Tolerances) -> Result<RobustnessCertificate> {
    let cone = tangent_cone(domain, x, tols.membership_tol)?;
    let mut margin = robustness_margin(v, &cone)?;
    // Drop the sign of an exact zero so reports never show `-0`.
    margin.value += 0.0;
    let active_sets = (0..domain.num_players()).map(|i| cone.player_active(domain, i)).collect();
    let gap = 0.0 - margin.value;
    let verdict = if gap > tols.stat_tol {
        Verdict::NotStationary
    } else if cone.active.is_empty() {
        Verdict::Interior
    } else if lineality_dim(&cone) > 0 {
        Verdict::BoundaryNonExtreme
    } else if margin.value > tols.robust_tol {
        Verdict::Robust
    } else {
        Verdict::ExtremeNonRobust
    };
    Ok(RobustnessCertificate {
        verdict,
        margin: margin.value,
        witness: margin.witness.unwrap_or_default(),
        active_sets,
        stationarity_gap: gap,
    })
}

pub fn classify_equilibrium(game: &Game, x: &[f64], tols: &Tolerances) -> Result<RobustnessCertificate> {
    game.domain().check_contains(x, tols.membership_tol)?;
    let v = game.gradient_field(x)?;
    certify_gradient(game.domain(), x, &v, tols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameSpec;
    use alloc::vec;

    #[test]
    fn paper_interval_examples() {
        let t = Tolerances::default();
        let g = GameSpec::InteriorQuadratic { c: 0.5 }.build().unwrap();
        assert_eq!(classify_equilibrium(&g, &[0.5], &t).unwrap().verdict, Verdict::Interior);

        let g = GameSpec::BoundaryQuartic.build().unwrap();
        let c = classify_equilibrium(&g, &[0.0], &t).unwrap();
        assert_eq!(c.verdict, Verdict::ExtremeNonRobust);
        assert_eq!(c.margin, 0.0);

        let g = GameSpec::LinearInterval { slope: 1.0 }.build().unwrap();
        let c = classify_equilibrium(&g, &[1.0], &t).unwrap();
        assert_eq!(c.verdict, Verdict::Robust);
        assert!((c.margin - 1.0).abs() < 1e-12);
        assert_eq!(c.witness, vec![-1.0]);
        assert_eq!(c.active_sets, vec![vec![0]]);
    }

    #[test]
    fn infeasible_point_is_an_error() {
        let g = GameSpec::LinearInterval { slope: 1.0 }.build().unwrap();
        assert!(classify_equilibrium(&g, &[1.5], &Tolerances::default()).is_err());
    }
}
