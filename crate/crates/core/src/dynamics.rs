//! Follow-the-regularized-leader and mirror-descent iteration engines.
//!
//! FTRL keeps the running dual score `y_{n+1} = y_n + γ_n v̂_n` and plays
//! `x_n = Q(y_n)`. MD restarts from the primal state,
//! `x_{n+1} = Q(∇h(x_n) + γ_n v̂_n)`. For players with a steep regularizer
//! the two coincide, and the engine simply keeps their dual score.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::feedback::{FeedbackSample, Oracle};
use crate::game::Game;
use crate::linalg::Norm;
use crate::regularizer::{Mirror, RegularizerSpec};
use crate::rng::RunStreams;
use crate::{Error, Result};

/// Dual components are clamped to this magnitude.
pub const DUAL_CLAMP: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", deny_unknown_fields))]
pub enum StepSchedule {
    Constant(f64),
    /// `γ_n = gamma0 / n^p`
    Power { gamma0: f64, p: f64 },
}

impl StepSchedule {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Constant(g) => g > 0.0 && g.is_finite(),
            StepSchedule::Power { gamma0, p } => gamma0 > 0.0 && gamma0.is_finite() && (0.0..=1.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidRun(format!("invalid step schedule {self:?}")))
        }
    }
}

pub fn step_value(schedule: &StepSchedule, n: u64) -> f64 {
    match *schedule {
        StepSchedule::Constant(g) => g,
        StepSchedule::Power { gamma0, p } => gamma0 / libm::pow(n as f64, p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Algorithm {
    #[default]
    Ftrl,
    Md,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Init {
    Dual(Vec<f64>),
    Primal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RunConfig {
    #[cfg_attr(feature = "serde", serde(default))]
    pub algorithm: Algorithm,
    pub step: StepSchedule,
    pub horizon: u64,
    pub init: Init,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// Index of this run among runs sharing `seed`; selects the rng key.
    #[cfg_attr(feature = "serde", serde(default))]
    pub run_index: u64,
    /// Record every `thinning`-th step (the last step is always recorded).
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub thinning: u64,
    /// Point to which distances are recorded.
    #[cfg_attr(feature = "serde", serde(default))]
    pub reference: Option<Vec<f64>>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub norm: Norm,
    /// Keep `x_n` and `y_n`; distances are always kept.
    #[cfg_attr(feature = "serde", serde(default = "yes"))]
    pub record_states: bool,
}

#[cfg(feature = "serde")]
fn one() -> u64 {
    1
}

#[cfg(feature = "serde")]
fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn new(step: StepSchedule, horizon: u64, init: Init) -> Self {
        Self {
            algorithm: Algorithm::Ftrl,
            step,
            horizon,
            init,
            seed: 0,
            run_index: 0,
            thinning: 1,
            reference: None,
            norm: Norm::L2,
            record_states: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "status"))]
pub enum RunStatus {
    Completed,
    /// A non-finite dual value appeared at `step`; the run stopped there.
    Diverged { step: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    /// Recorded step indices `n`.
    pub steps: Vec<u64>,
    /// `x_n` at recorded steps, flattened (`dim` values per step).
    pub xs: Vec<f64>,
    /// The dual state mapped to `x_n`, flattened.
    pub ys: Vec<f64>,
    /// `‖x_n - x_ref‖`, present when a reference was configured.
    pub dist: Vec<f64>,
    pub gamma: Vec<f64>,
    /// SPSA sampling radius used at each recorded step.
    pub delta: Vec<Option<f64>>,
    pub status: RunStatus,
    /// Some dual component hit `±DUAL_CLAMP`.
    pub saturated: bool,
    pub final_x: Vec<f64>,
    pub final_y: Vec<f64>,
    pub config: RunConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn x(&self, k: usize) -> &[f64] {
        &self.xs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn y(&self, k: usize) -> &[f64] {
        &self.ys[k * self.dim..(k + 1) * self.dim]
    }

    pub fn has_states(&self) -> bool {
        self.xs.len() == self.steps.len() * self.dim
    }
}

pub fn run_ftrl(game: &Game, reg: &RegularizerSpec, oracle: &Oracle, cfg: &RunConfig) -> Result<Trajectory> {
    run_with(game, reg, oracle, cfg, Algorithm::Ftrl)
}

pub fn run_md(game: &Game, reg: &RegularizerSpec, oracle: &Oracle, cfg: &RunConfig) -> Result<Trajectory> {
    run_with(game, reg, oracle, cfg, Algorithm::Md)
}

/// Runs the engine named in `cfg.algorithm`.
pub fn run(game: &Game, reg: &RegularizerSpec, oracle: &Oracle, cfg: &RunConfig) -> Result<Trajectory> {
    run_with(game, reg, oracle, cfg, cfg.algorithm)
}

fn run_with(game: &Game, reg: &RegularizerSpec, oracle: &Oracle, cfg: &RunConfig, algorithm: Algorithm) -> Result<Trajectory> {
    let domain = game.domain();
    let dim = domain.total_dim();
    cfg.step.validate()?;
    if cfg.horizon == 0 {
        return Err(Error::InvalidRun("horizon must be at least 1".into()));
    }
    if cfg.thinning == 0 {
        return Err(Error::InvalidRun("thinning must be at least 1".into()));
    }
    if let Some(r) = &cfg.reference {
        domain.check_contains(r, 1e-9)?;
    }
    let mirror = Mirror::new(reg, domain)?;
    // Players whose dual state MD rebuilds from the primal iterate.
    let restart: Vec<bool> = match algorithm {
        Algorithm::Ftrl => vec![false; domain.num_players()],
        Algorithm::Md => reg.players.iter().map(|r| !r.is_steep()).collect(),
    };

    let mut y = match &cfg.init {
        Init::Dual(y) => {
            if y.len() != dim {
                return Err(Error::Dimension { expected: dim, got: y.len() });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidRun("initial dual point must be finite".into()));
            }
            if restart.iter().any(|&r| r) {
                return Err(Error::InvalidRun(
                    "mirror descent with a non-steep regularizer needs a primal initial point".into(),
                ));
            }
            y.clone()
        }
        Init::Primal(x) => {
            domain.check_contains(x, 1e-9)?;
            let y = mirror.grad_h(x)?;
            let back = mirror.apply(&y);
            if Norm::Linf.dist(&back, x) > 1e-9 {
                return Err(Error::InvalidRun("initial primal point is outside the image of the mirror map".into()));
            }
            y
        }
    };

    let mut x = vec![0.0; dim];
    let mut rng = RunStreams::new(cfg.seed, cfg.run_index, domain.num_players());
    let mut fb = FeedbackSample::zeros(dim);
    let offset = oracle.first_valid_index() - 1;

    let cap = (cfg.horizon / cfg.thinning + 2) as usize;
    let mut tr = Trajectory {
        dim,
        steps: Vec::with_capacity(cap),
        xs: Vec::with_capacity(if cfg.record_states { cap * dim } else { 0 }),
        ys: Vec::with_capacity(if cfg.record_states { cap * dim } else { 0 }),
        dist: Vec::with_capacity(if cfg.reference.is_some() { cap } else { 0 }),
        gamma: Vec::with_capacity(cap),
        delta: Vec::with_capacity(cap),
        status: RunStatus::Completed,
        saturated: false,
        final_x: Vec::new(),
        final_y: Vec::new(),
        config: cfg.clone(),
    };

    mirror.apply_into(&y, &mut x);
    for n in 1..=cfg.horizon {
        let gamma = step_value(&cfg.step, n);
        oracle.sample_into(game, &x, n + offset, &mut rng, &mut fb)?;
        if (n - 1) % cfg.thinning == 0 || n == cfg.horizon {
            tr.steps.push(n);
            if cfg.record_states {
                tr.xs.extend_from_slice(&x);
                tr.ys.extend_from_slice(&y);
            }
            if let Some(r) = &cfg.reference {
                tr.dist.push(cfg.norm.dist(&x, r));
            }
            tr.gamma.push(gamma);
            tr.delta.push(fb.delta);
        }
        tr.final_x.clone_from(&x);
        tr.final_y.clone_from(&y);
        if n == cfg.horizon {
            break;
        }

        for (i, &re) in restart.iter().enumerate() {
            if re {
                let r = domain.range(i);
                for j in r {
                    y[j] = match reg.players[i] {
                        crate::regularizer::Regularizer::Quadratic => x[j],
                        crate::regularizer::Regularizer::Kernel(k) => k.theta_prime(x[j]),
                    };
                }
            }
        }
        let mut bad = false;
        for (yj, v) in y.iter_mut().zip(&fb.signal) {
            *yj += gamma * v;
            if yj.is_nan() {
                bad = true;
            } else if yj.abs() > DUAL_CLAMP {
                *yj = yj.clamp(-DUAL_CLAMP, DUAL_CLAMP);
                tr.saturated = true;
            }
        }
        if bad {
            tr.status = RunStatus::Diverged { step: n + 1 };
            break;
        }
        mirror.apply_into(&y, &mut x);
    }
    Ok(tr)
}
