//! Finite-horizon diagnostics for trajectories: convergence checks, Monte
//! Carlo frequencies with Wilson intervals, rate fits and dual recurrence
//! statistics.

use alloc::borrow::Cow;
use alloc::format;
use alloc::vec::Vec;

use crate::dynamics::{run, RunConfig, RunStatus, Trajectory};
use crate::feedback::Oracle;
use crate::game::Game;
use crate::regularizer::RegularizerSpec;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ConvergenceCriterion {
    pub reference: Vec<f64>,
    pub eps_conv: f64,
    #[cfg_attr(feature = "serde", serde(default = "half"))]
    pub window_frac: f64,
}

#[cfg(feature = "serde")]
fn half() -> f64 {
    0.5
}

impl ConvergenceCriterion {
    pub fn new(reference: Vec<f64>, eps_conv: f64) -> Self {
        Self {
            reference,
            eps_conv,
            window_frac: 0.5,
        }
    }
}

/// Distances to `reference`, from the recorded stream when it matches, else
/// recomputed from recorded states.
fn distances<'a>(traj: &'a Trajectory, reference: &[f64]) -> Result<Cow<'a, [f64]>> {
    if traj.config.reference.as_deref() == Some(reference) && traj.dist.len() == traj.len() {
        return Ok(Cow::Borrowed(&traj.dist));
    }
    if traj.has_states() && reference.len() == traj.dim {
        let norm = traj.config.norm;
        return Ok(Cow::Owned((0..traj.len()).map(|k| norm.dist(traj.x(k), reference)).collect()));
    }
    Err(Error::Analysis("trajectory has no distance stream for this reference".into()))
}

/// `true` iff every recorded distance in the final `window_frac` of the
/// horizon is at most `eps_conv`. Diverged runs never converge.
pub fn classify_convergence(traj: &Trajectory, crit: &ConvergenceCriterion) -> Result<bool> {
    if !(crit.window_frac > 0.0 && crit.window_frac <= 1.0) {
        return Err(Error::Analysis(format!("window_frac must lie in (0, 1], got {}", crit.window_frac)));
    }
    let d = distances(traj, &crit.reference)?;
    if traj.status != RunStatus::Completed {
        return Ok(false);
    }
    let start = (1.0 - crit.window_frac) * traj.config.horizon as f64;
    let mut any = false;
    for (k, &n) in traj.steps.iter().enumerate() {
        if n as f64 > start {
            any = true;
            if !(d[k] <= crit.eps_conv) {
                return Ok(false);
            }
        }
    }
    Ok(any)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonteCarloSummary {
    pub runs: u64,
    pub converged: u64,
    /// Runs that stopped on a non-finite state (counted as not converged).
    pub diverged: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Outcome of a single seeded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub converged: bool,
    pub diverged: bool,
}

/// Wilson score interval for `k` successes out of `m`.
pub fn wilson_interval(k: u64, m: u64) -> (f64, f64) {
    if m == 0 {
        return (0.0, 1.0);
    }
    let (k, m) = (k as f64, m as f64);
    let p = k / m;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / m;
    let center = (p + z2 / (2.0 * m)) / denom;
    let half = Z95 * libm::sqrt(p * (1.0 - p) / m + z2 / (4.0 * m * m)) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

impl MonteCarloSummary {
    pub fn from_outcomes<I: IntoIterator<Item = RunOutcome>>(outcomes: I) -> Self {
        let (mut runs, mut conv, mut div) = (0, 0, 0);
        for o in outcomes {
            runs += 1;
            conv += o.converged as u64;
            div += o.diverged as u64;
        }
        let (lo, hi) = wilson_interval(conv, runs);
        Self {
            runs,
            converged: conv,
            diverged: div,
            estimate: if runs == 0 { 0.0 } else { conv as f64 / runs as f64 },
            wilson_lo: lo,
            wilson_hi: hi,
        }
    }
}

/// Runs `cfg` with `run_index = k` and classifies the result.
pub fn run_outcome(game: &Game, reg: &RegularizerSpec, oracle: &Oracle, cfg: &RunConfig, k: u64, crit: &ConvergenceCriterion) -> Result<(RunOutcome, Trajectory)> {
    let mut c = cfg.clone();
    c.run_index = k;
    if c.reference.is_none() {
        c.reference = Some(crit.reference.clone());
    }
    let t = run(game, reg, oracle, &c)?;
    let outcome = RunOutcome {
        converged: classify_convergence(&t, crit)?,
        diverged: t.status != RunStatus::Completed,
    };
    Ok((outcome, t))
}

/// Sequential Monte Carlo estimate over runs `0..m` sharing `cfg.seed`.
pub fn convergence_probability(game: &Game, reg: &RegularizerSpec, oracle: &Oracle, cfg: &RunConfig, m: u64, crit: &ConvergenceCriterion) -> Result<MonteCarloSummary> {
    let mut outcomes = Vec::with_capacity(m as usize);
    for k in 0..m {
        outcomes.push(run_outcome(game, reg, oracle, cfg, k, crit)?.0);
    }
    Ok(MonteCarloSummary::from_outcomes(outcomes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RateModel {
    /// `log dist` against `n`.
    GeometricLog,
    /// `log dist` against `log n`.
    PowerLog,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateFit {
    pub model: RateModel,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub burn_in: u64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum RateReport {
    Fit(RateFit),
    /// The distance is exactly zero from `hit_index` onward.
    FiniteTime { hit_index: u64 },
}

pub const MIN_FIT_POINTS: usize = 20;

/// Least-squares rate fit on recorded steps `n > burn_in` (default: 20% of
/// the horizon). A distance stream that ends in exact zeros is reported as a
/// finite-time hit instead.
pub fn fit_rate(traj: &Trajectory, reference: &[f64], model: RateModel, burn_in: Option<u64>) -> Result<RateReport> {
    let d = distances(traj, reference)?;
    let burn_in = burn_in.unwrap_or(traj.config.horizon / 5);
    if let Some(&last) = d.last() {
        if last == 0.0 {
            let k = d.iter().rposition(|&v| v != 0.0).map_or(0, |k| k + 1);
            return Ok(RateReport::FiniteTime { hit_index: traj.steps[k] });
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = traj
        .steps
        .iter()
        .zip(d.iter())
        .filter(|(&n, &v)| n > burn_in && v > 0.0 && v.is_finite())
        .map(|(&n, &v)| {
            let t = match model {
                RateModel::GeometricLog => n as f64,
                RateModel::PowerLog => libm::log(n as f64),
            };
            (t, libm::log(v))
        })
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::Analysis(format!(
            "rate fit needs at least {MIN_FIT_POINTS} positive post-burn-in distances, found {}",
            xs.len()
        )));
    }
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(RateReport::Fit(RateFit {
        model,
        slope,
        intercept,
        r_squared,
        burn_in,
        points: xs.len(),
    }))
}

/// Ordinary least squares `y ≈ a x + b`; returns `(a, b, r²)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 {
        let ss_res: f64 = x.iter().zip(y).map(|(a, b)| {
            let r = b - slope * a - intercept;
            r * r
        })
        .sum();
        (1.0f64 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RecurrenceStats {
    /// Down-crossings of `z_n = -y_n` below `level`.
    pub returns: u64,
    pub last_return_index: Option<u64>,
    pub max_excursion: f64,
}

/// Crossing statistics of the scalar process `z_n = -y_n`.
pub fn recurrence_stats(traj: &Trajectory, level: f64) -> Result<RecurrenceStats> {
    if traj.dim != 1 {
        return Err(Error::Unsupported("recurrence statistics need a scalar dual state".into()));
    }
    if !traj.has_states() {
        return Err(Error::Analysis("trajectory did not record dual states".into()));
    }
    let mut stats = RecurrenceStats {
        returns: 0,
        last_return_index: None,
        max_excursion: f64::NEG_INFINITY,
    };
    let mut prev: Option<f64> = None;
    for (k, &n) in traj.steps.iter().enumerate() {
        let z = -traj.ys[k];
        stats.max_excursion = stats.max_excursion.max(z);
        if let Some(p) = prev {
            if p >= level && z < level {
                stats.returns += 1;
                stats.last_return_index = Some(n);
            }
        }
        prev = Some(z);
    }
    Ok(stats)
}
