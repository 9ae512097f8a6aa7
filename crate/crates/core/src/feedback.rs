//! Feedback oracles: exact gradients, noisy gradients (SFO) and the
//! single-point payoff-based SPSA estimator with pivot-based feasibility
//! adjustment.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::domain::ProductDomain;
use crate::game::Game;
use crate::linalg::{cholesky, norm2, Matrix};
use crate::rng::RunStreams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Noise {
    /// Isotropic `N(0, σ²I)`.
    Gaussian(f64),
    /// `N(0, Σ)` over the joint coordinates.
    GaussianCov(Vec<Vec<f64>>),
    /// Independent `±σ` per coordinate.
    Rademacher(f64),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum OracleSpec {
    Perfect,
    Sfo {
        noise: Noise,
    },
    Spsa {
        /// One relative-interior point per player; defaults to the domain centers.
        #[cfg_attr(feature = "serde", serde(default))]
        pivots: Option<Vec<Vec<f64>>>,
        /// Defaults to half the distance from the pivot to the boundary along
        /// the nearest basis direction.
        #[cfg_attr(feature = "serde", serde(default))]
        radii: Option<Vec<f64>>,
        delta0: f64,
        rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Resolved {
    Perfect,
    Gaussian(f64),
    GaussianCov(Matrix),
    Rademacher(f64),
    Spsa(Spsa),
}

#[derive(Debug, Clone, PartialEq)]
struct Spsa {
    pivots: Vec<f64>,
    radii: Vec<f64>,
    delta0: f64,
    rho: f64,
    first_valid: u64,
}

/// An oracle validated against a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    spec: OracleSpec,
    kind: Resolved,
    domain: ProductDomain,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FeedbackSample {
    pub signal: Vec<f64>,
    /// The profile at which payoffs or gradients were evaluated.
    pub queried_point: Vec<f64>,
    /// SPSA sampling radius `δ_n`.
    pub delta: Option<f64>,
    /// Concatenated SPSA directions `w_i`; empty for other oracles.
    pub directions: Vec<f64>,
}

impl FeedbackSample {
    pub fn zeros(dim: usize) -> Self {
        Self {
            signal: vec![0.0; dim],
            queried_point: vec![0.0; dim],
            delta: None,
            directions: Vec::new(),
        }
    }
}

impl Oracle {
    pub fn new(spec: &OracleSpec, domain: &ProductDomain) -> Result<Self> {
        let kind = match spec {
            OracleSpec::Perfect => Resolved::Perfect,
            OracleSpec::Sfo { noise } => match noise {
                Noise::Gaussian(s) => Resolved::Gaussian(check_sigma(*s)?),
                Noise::Rademacher(s) => Resolved::Rademacher(check_sigma(*s)?),
                Noise::GaussianCov(c) => {
                    let n = domain.total_dim();
                    let m = Matrix::from_rows(c, n)
                        .filter(|m| m.rows() == n)
                        .ok_or_else(|| Error::InvalidOracle(format!("covariance must be {n}x{n}")))?;
                    Resolved::GaussianCov(
                        cholesky(&m)
                            .ok_or_else(|| Error::InvalidOracle("covariance must be symmetric positive definite".into()))?,
                    )
                }
            },
            OracleSpec::Spsa { pivots, radii, delta0, rho } => {
                Resolved::Spsa(resolve_spsa(domain, pivots.as_deref(), radii.as_deref(), *delta0, *rho)?)
            }
        };
        Ok(Self {
            spec: spec.clone(),
            kind,
            domain: domain.clone(),
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn is_spsa(&self) -> bool {
        matches!(self.kind, Resolved::Spsa(_))
    }

    /// Smallest step index at which `δ_n` is below every SPSA radius; 1 for
    /// other oracles.
    pub fn first_valid_index(&self) -> u64 {
        match &self.kind {
            Resolved::Spsa(s) => s.first_valid,
            _ => 1,
        }
    }

    pub fn delta_at(&self, n: u64) -> Option<f64> {
        match &self.kind {
            Resolved::Spsa(s) => Some(s.delta(n)),
            _ => None,
        }
    }

    /// SPSA pivots and radii, when applicable.
    pub fn spsa_geometry(&self) -> Option<(&[f64], &[f64])> {
        match &self.kind {
            Resolved::Spsa(s) => Some((&s.pivots, &s.radii)),
            _ => None,
        }
    }

    /// Draws `v̂_n` at `x` into `out` without allocating. `x` must be feasible.
    pub fn sample_into(&self, game: &Game, x: &[f64], n: u64, rng: &mut RunStreams, out: &mut FeedbackSample) -> Result<()> {
        match &self.kind {
            Resolved::Spsa(s) => {
                let delta = s.delta(n);
                self.spsa_into(s, game, x, delta, n, rng, out)
            }
            _ => {
                out.queried_point.copy_from_slice(x);
                game.gradient_into(x, &mut out.signal);
                out.delta = None;
                out.directions.clear();
                self.add_noise(&mut out.signal, rng);
                Ok(())
            }
        }
    }

    fn add_noise(&self, v: &mut [f64], rng: &mut RunStreams) {
        let d = &self.domain;
        match &self.kind {
            Resolved::Gaussian(s) => {
                for i in 0..d.num_players() {
                    let r = rng.player(i);
                    for c in &mut v[d.range(i)] {
                        *c += s * r.sample::<f64, _>(StandardNormal);
                    }
                }
            }
            Resolved::Rademacher(s) => {
                for i in 0..d.num_players() {
                    let r = rng.player(i);
                    for c in &mut v[d.range(i)] {
                        *c += if r.random::<bool>() { *s } else { -*s };
                    }
                }
            }
            Resolved::GaussianCov(l) => {
                let mut z = vec![0.0; v.len()];
                for i in 0..d.num_players() {
                    let r = rng.player(i);
                    for c in &mut z[d.range(i)] {
                        *c = r.sample::<f64, _>(StandardNormal);
                    }
                }
                for (k, c) in v.iter_mut().enumerate() {
                    *c += (0..=k).map(|j| l.get(k, j) * z[j]).sum::<f64>();
                }
            }
            Resolved::Perfect | Resolved::Spsa(_) => {}
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn spsa_into(
        &self,
        s: &Spsa,
        game: &Game,
        x: &[f64],
        delta: f64,
        n: u64,
        rng: &mut RunStreams,
        out: &mut FeedbackSample,
    ) -> Result<()> {
        let d = &self.domain;
        for &r in &s.radii {
            if !(delta < r) {
                return Err(Error::Schedule {
                    step: n,
                    delta,
                    radius: r,
                    first_valid: s.first_valid,
                });
            }
        }
        out.directions.resize(x.len(), 0.0);
        for i in 0..d.num_players() {
            let pd = d.player(i);
            let basis = pd.affine_basis();
            let k = rng.player(i).random_range(0..2 * basis.len());
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let w = &basis[k / 2];
            let t = delta / s.radii[i];
            for (local, j) in d.range(i).enumerate() {
                out.directions[j] = sign * w[local];
                let xd = x[j] + t * (s.pivots[j] - x[j]);
                out.queried_point[j] = xd + delta * out.directions[j];
            }
        }
        for i in 0..d.num_players() {
            let u = game.payoff(i, &out.queried_point);
            let scale = d.player(i).affine_dim() as f64 / delta * u;
            for j in d.range(i) {
                out.signal[j] = scale * out.directions[j];
            }
        }
        out.delta = Some(delta);
        Ok(())
    }
}

impl Spsa {
    fn delta(&self, n: u64) -> f64 {
        self.delta0 / libm::pow(n as f64, self.rho)
    }
}

fn check_sigma(s: f64) -> Result<f64> {
    if s >= 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::InvalidOracle(format!("noise scale must be finite and nonnegative, got {s}")))
    }
}

fn resolve_spsa(domain: &ProductDomain, pivots: Option<&[Vec<f64>]>, radii: Option<&[f64]>, delta0: f64, rho: f64) -> Result<Spsa> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::InvalidOracle(format!("rho must lie in (0, 1/2), got {rho}")));
    }
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(Error::InvalidOracle(format!("delta0 must be positive, got {delta0}")));
    }
    let np = domain.num_players();
    if pivots.is_some_and(|p| p.len() != np) || radii.is_some_and(|r| r.len() != np) {
        return Err(Error::InvalidOracle(format!("pivots and radii need one entry per player ({np})")));
    }
    let mut flat = Vec::with_capacity(domain.total_dim());
    let mut rs = Vec::with_capacity(np);
    for (i, pd) in domain.players().iter().enumerate() {
        let p = pivots.map_or_else(|| pd.center().to_vec(), |p| p[i].clone());
        pd.check_contains(&p, 1e-12)
            .map_err(|e| Error::InvalidOracle(format!("pivot {i}: {e}")))?;
        // Room from the pivot along every ±basis direction.
        let room = pd
            .affine_basis()
            .iter()
            .flat_map(|b| {
                let neg: Vec<f64> = b.iter().map(|v| -v).collect();
                [pd.max_step(&p, b), pd.max_step(&p, &neg)]
            })
            .fold(f64::INFINITY, f64::min);
        if !(room > 0.0) {
            return Err(Error::InvalidOracle(format!("pivot {i} is not in the relative interior")));
        }
        let r = radii.map_or(0.5 * room, |r| r[i]);
        if !(r > 0.0 && r <= room * (1.0 + 1e-12)) {
            return Err(Error::InvalidOracle(format!(
                "radius {r} for player {i} must be positive and keep pivot ± r·w feasible (max {room})"
            )));
        }
        flat.extend_from_slice(&p);
        rs.push(r);
    }
    let r_min = rs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut s = Spsa {
        pivots: flat,
        radii: rs,
        delta0,
        rho,
        first_valid: 1,
    };
    if delta0 >= r_min {
        let mut n = libm::floor(libm::pow(delta0 / r_min, 1.0 / rho)).max(1.0) as u64;
        while s.delta(n) >= r_min {
            n += 1;
        }
        while n > 1 && s.delta(n - 1) < r_min {
            n -= 1;
        }
        s.first_valid = n;
    }
    Ok(s)
}

/// Draws one feedback sample (allocating convenience wrapper).
pub fn sample_feedback(oracle: &Oracle, game: &Game, x: &[f64], n: u64, rng: &mut RunStreams) -> Result<FeedbackSample> {
    if n == 0 {
        return Err(Error::InvalidRun("step indices start at 1".into()));
    }
    game.domain().check_contains(x, 1e-9)?;
    let mut out = FeedbackSample::zeros(x.len());
    oracle.sample_into(game, x, n, rng, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BiasEstimate {
    /// Monte Carlo mean of `v̂` minus the tangential part of `V(x)`.
    pub bias: Vec<f64>,
    /// Largest Euclidean norm of `v̂` over the draws.
    pub max_norm: f64,
    pub samples: usize,
}

/// SPSA bias at a fixed sampling radius `delta`. On simplices the estimator
/// only sees affine-hull directions, so the reference is the projection of
/// `V(x)` onto them.
pub fn empirical_bias(oracle: &Oracle, game: &Game, x: &[f64], delta: f64, samples: usize, rng: &mut RunStreams) -> Result<BiasEstimate> {
    let Resolved::Spsa(s) = &oracle.kind else {
        return Err(Error::InvalidOracle("empirical bias needs an SPSA oracle".into()));
    };
    if samples == 0 {
        return Err(Error::InvalidRun("empirical bias needs at least one sample".into()));
    }
    let v = game.domain().project_tangent(&game.gradient_field(x)?);
    let mut out = FeedbackSample::zeros(x.len());
    let mut sum = vec![0.0; x.len()];
    let mut max_norm: f64 = 0.0;
    for _ in 0..samples {
        oracle.spsa_into(s, game, x, delta, 0, rng, &mut out)?;
        for (a, b) in sum.iter_mut().zip(&out.signal) {
            *a += b;
        }
        max_norm = max_norm.max(norm2(&out.signal));
    }
    let bias = sum.iter().zip(&v).map(|(a, b)| a / samples as f64 - b).collect();
    Ok(BiasEstimate { bias, max_norm, samples })
}
