//! Experiment configuration: JSON schema, `--set` overrides and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use robust_eq_core::analysis::{ConvergenceCriterion, RateModel};
use robust_eq_core::domain::DomainKind;
use robust_eq_core::dynamics::{Init, RunConfig};
use robust_eq_core::feedback::{Oracle, OracleSpec};
use robust_eq_core::regularizer::{parse_regularizer, Mirror};
use robust_eq_core::{Game, GameSpec, PlayerDomain, ProductDomain, RegularizerSpec, Tolerances};

use crate::error::{CliError, CliResult, ErrorKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    /// Replaces the catalog domain; one entry per player.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<DomainKind>>,
    #[serde(default = "default_regularizer")]
    pub regularizer: RegularizerConfig,
    #[serde(default = "default_oracle")]
    pub oracle: OracleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
    /// Candidate equilibrium `x*`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegularizerConfig {
    Shared(String),
    PerPlayer(Vec<String>),
}

fn default_regularizer() -> RegularizerConfig {
    RegularizerConfig::Shared("euclidean".into())
}

fn default_oracle() -> OracleSpec {
    OracleSpec::Perfect
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Threshold {
    pub fn met(&self, estimate: f64) -> bool {
        self.min.is_none_or(|m| estimate >= m) && self.max.is_none_or(|m| estimate <= m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Defaults to 1e-9 under perfect feedback and 1e-3 otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_conv: Option<f64>,
    pub window_frac: f64,
    pub seeds: u64,
    /// Seeds per row of the sweep table.
    pub block_size: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Threshold>,
    /// Step sizes to sweep; each replaces the run's schedule by a constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    pub rate_model: RateModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    /// Level for dual recurrence statistics in sweeps of scalar games.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recurrence_level: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            eps_conv: None,
            window_frac: 0.5,
            seeds: 200,
            block_size: 50,
            threshold: None,
            gammas: None,
            rate_model: RateModel::GeometricLog,
            burn_in: None,
            recurrence_level: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    Collapse1,
    Collapse2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    pub player: usize,
    pub kind: PerturbKind,
    pub eps: f64,
    /// Direction for collapse2; defaults to the all-ones vector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_seed: Option<u64>,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            player: 0,
            kind: PerturbKind::Collapse1,
            eps: 0.1,
            y: None,
            samples: 4096,
            shift_seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Reads a config file, inlines `game.file`, applies `key=value` overrides
/// and deserializes with key-path diagnostics.
pub fn load(path: &Path, overrides: &[String]) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::new(ErrorKind::Config, None, format!("invalid JSON: {e}")))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    inline_game_file(&mut value, path.parent().unwrap_or(Path::new(".")))?;
    from_value(value)
}

pub fn from_value(value: Value) -> CliResult<ExperimentConfig> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        CliError::new(ErrorKind::Config, Some(&key), e.inner())
    })
}

fn inline_game_file(value: &mut Value, base: &Path) -> CliResult<()> {
    let Some(game) = value.get_mut("game").and_then(Value::as_object_mut) else {
        return Ok(());
    };
    let Some(file) = game.remove("file") else {
        return Ok(());
    };
    let Some(file) = file.as_str() else {
        return Err(CliError::config("game.file", "expected a path string"));
    };
    let p = base.join(file);
    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
    let payoffs: Value =
        serde_json::from_str(&text).map_err(|e| CliError::config("game.file", format!("{}: {e}", p.display())))?;
    let Value::Object(m) = payoffs else {
        return Err(CliError::config("game.file", "payoff file must hold an object {A1, A2}"));
    };
    for (k, v) in m {
        game.insert(k, v);
    }
    game.entry("catalog").or_insert_with(|| Value::String("bimatrix".into()));
    Ok(())
}

/// Applies `a.b.0.c=value`; the value is parsed as JSON, else taken as a string.
pub fn apply_override(root: &mut Value, spec: &str) -> CliResult<()> {
    let Some((key, raw)) = spec.split_once('=') else {
        return Err(CliError::new(ErrorKind::Usage, Some(spec), "override must look like key=value"));
    };
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if let Ok(idx) = part.parse::<usize>() {
            let Some(arr) = cur.as_array_mut() else {
                return Err(CliError::config(key, format!("`{part}` indexes a non-array")));
            };
            if idx >= arr.len() {
                return Err(CliError::config(key, format!("index {idx} out of range")));
            }
            cur = &mut arr[idx];
        } else {
            if !cur.is_object() {
                *cur = Value::Object(Default::default());
            }
            let obj = cur.as_object_mut().expect("object");
            cur = obj.entry(part.to_string()).or_insert(Value::Null);
        }
        if last {
            *cur = parsed;
            return Ok(());
        }
    }
    Ok(())
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub game: Game,
    pub regularizer: RegularizerSpec,
    pub oracle: Oracle,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> CliResult<Self> {
        let base = config.game.build().map_err(|e| CliError::from_core("game", e))?;
        let game = match &config.domain {
            None => base,
            Some(kinds) => {
                let players = kinds
                    .iter()
                    .enumerate()
                    .map(|(i, k)| PlayerDomain::from_kind(k.clone()).map_err(|e| CliError::from_core(&format!("domain.{i}"), e)))
                    .collect::<CliResult<Vec<_>>>()?;
                let d = ProductDomain::new(players).map_err(|e| CliError::from_core("domain", e))?;
                base.with_domain(d).map_err(|e| CliError::from_core("domain", e))?
            }
        };
        let names: Vec<String> = match &config.regularizer {
            RegularizerConfig::Shared(n) => vec![n.clone(); game.num_players()],
            RegularizerConfig::PerPlayer(v) => v.clone(),
        };
        if names.len() != game.num_players() {
            return Err(CliError::config(
                "regularizer",
                format!("expected {} entries, got {}", game.num_players(), names.len()),
            ));
        }
        let players = names
            .iter()
            .map(|n| parse_regularizer(n).map_err(|m| CliError::config("regularizer", m)))
            .collect::<CliResult<Vec<_>>>()?;
        let regularizer = RegularizerSpec { players };
        Mirror::new(&regularizer, game.domain()).map_err(|e| CliError::from_core("regularizer", e))?;
        let oracle = Oracle::new(&config.oracle, game.domain()).map_err(|e| CliError::from_core("oracle", e))?;
        let tol = config.tolerances.membership_tol;
        if let Some(r) = &config.reference {
            game.domain().check_contains(r, tol).map_err(|e| CliError::from_core("reference", e))?;
        }
        if let Some(run) = &config.run {
            let dim = game.domain().total_dim();
            let init = match &run.init {
                Init::Dual(v) | Init::Primal(v) => v,
            };
            if init.len() != dim {
                return Err(CliError::config("run.init", format!("expected {dim} coordinates, got {}", init.len())));
            }
            if run.horizon == 0 {
                return Err(CliError::config("run.horizon", "must be at least 1"));
            }
            if run.thinning == 0 {
                return Err(CliError::config("run.thinning", "must be at least 1"));
            }
            if let Some(r) = &run.reference {
                game.domain().check_contains(r, tol).map_err(|e| CliError::from_core("run.reference", e))?;
            }
        }
        let a = &config.analysis;
        if a.eps_conv.is_some_and(|e| !(e >= 0.0)) {
            return Err(CliError::config("analysis.eps_conv", "must be nonnegative"));
        }
        if !(a.window_frac > 0.0 && a.window_frac <= 1.0) {
            return Err(CliError::config("analysis.window_frac", "must lie in (0, 1]"));
        }
        if a.block_size == 0 {
            return Err(CliError::config("analysis.block_size", "must be at least 1"));
        }
        Ok(Self {
            config,
            game,
            regularizer,
            oracle,
        })
    }

    pub fn reference(&self) -> CliResult<&[f64]> {
        self.config
            .reference
            .as_deref()
            .or(self.config.run.as_ref().and_then(|r| r.reference.as_deref()))
            .ok_or_else(|| CliError::config("reference", "this command needs a reference point x*"))
    }

    /// The run configuration with the reference filled in.
    pub fn run_config(&self) -> CliResult<RunConfig> {
        let mut run = self
            .config
            .run
            .clone()
            .ok_or_else(|| CliError::config("run", "this command needs a `run` section"))?;
        if run.reference.is_none() {
            run.reference = self.config.reference.clone();
        }
        Ok(run)
    }

    pub fn eps_conv(&self) -> f64 {
        self.config.analysis.eps_conv.unwrap_or(match self.config.oracle {
            OracleSpec::Perfect => 1e-9,
            _ => 1e-3,
        })
    }

    pub fn criterion(&self) -> CliResult<ConvergenceCriterion> {
        Ok(ConvergenceCriterion {
            reference: self.reference()?.to_vec(),
            eps_conv: self.eps_conv(),
            window_frac: self.config.analysis.window_frac,
        })
    }

    pub fn regularizer_label(&self) -> String {
        let names: Vec<&str> = self.regularizer.players.iter().map(|r| r.name()).collect();
        names.join("+")
    }

    pub fn oracle_label(&self) -> &'static str {
        match self.config.oracle {
            OracleSpec::Perfect => "perfect",
            OracleSpec::Sfo { .. } => "sfo",
            OracleSpec::Spsa { .. } => "spsa",
        }
    }
}
