//! Configuration-driven front end for the `robust-eq-core` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::Path;

use serde_json::Value;

pub use commands::Outcome;
pub use config::{Experiment, ExperimentConfig};
pub use error::{exit, CliError, CliResult, ErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Simulate,
    Sweep,
    Perturb,
    Rate,
}

/// Flags that map onto config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub out: Option<std::path::PathBuf>,
    pub eps: Option<f64>,
    pub kind: Option<config::PerturbKind>,
    pub set: Vec<String>,
}

impl Overrides {
    /// Flag values first, then `--set` entries, so `--set` wins.
    pub fn as_sets(&self, has_run: bool) -> Vec<String> {
        let mut v = Vec::new();
        if let (Some(s), true) = (self.seed, has_run) {
            v.push(format!("run.seed={s}"));
        }
        if let Some(m) = self.seeds {
            v.push(format!("analysis.seeds={m}"));
        }
        if let Some(o) = &self.out {
            v.push(format!("output.dir={}", Value::String(o.display().to_string())));
        }
        if let Some(e) = self.eps {
            v.push(format!("perturb.eps={}", output::fmt_f64(e)));
        }
        if let Some(k) = self.kind {
            let name = match k {
                config::PerturbKind::Collapse1 => "collapse1",
                config::PerturbKind::Collapse2 => "collapse2",
            };
            v.push(format!("perturb.kind={name}"));
        }
        v.extend(self.set.iter().cloned());
        v
    }
}

/// Loads `path`, applies `overrides` and builds a validated experiment.
pub fn load_experiment(path: &Path, overrides: &Overrides) -> CliResult<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let has_run = serde_json::from_str::<Value>(&text).ok().is_some_and(|v| v.get("run").is_some());
    let cfg = config::load(path, &overrides.as_sets(has_run))?;
    Experiment::new(cfg)
}

pub fn execute(cmd: Command, path: &Path, overrides: &Overrides, jobs: usize) -> CliResult<Outcome> {
    let exp = load_experiment(path, overrides)?;
    match cmd {
        Command::Certify => commands::certify(&exp),
        Command::Simulate => commands::simulate(&exp),
        Command::Sweep => commands::sweep(&exp, jobs),
        Command::Perturb => commands::perturb(&exp),
        Command::Rate => commands::rate(&exp),
    }
}
