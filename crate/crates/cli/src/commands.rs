//! Subcommand implementations. Each returns an exit code and a JSON report;
//! files go to the configured output directory.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use robust_eq_core::analysis::{
    classify_convergence, fit_rate, recurrence_stats, run_outcome, MonteCarloSummary, RateReport, RunOutcome,
};
use robust_eq_core::dynamics::{self, step_value, StepSchedule, Trajectory};
use robust_eq_core::game::{game_distance, perturb_collapse1, perturb_collapse2, uniform_payoff_distance, SampleSpec};
use robust_eq_core::{classify_equilibrium, Verdict};

use crate::config::{Experiment, PerturbKind, Threshold};
use crate::error::{exit, CliError, CliResult, ErrorKind};
use crate::output::{distances_csv, ensure_dir, fmt_f64, trajectory_csv, write_bytes, write_json};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub report: Value,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn out_dir(exp: &Experiment) -> PathBuf {
    exp.config.output.dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

pub fn certify(exp: &Experiment) -> CliResult<Outcome> {
    let x = exp.reference()?;
    let cert = classify_equilibrium(&exp.game, x, &exp.config.tolerances).map_err(|e| CliError::from_core("reference", e))?;
    let code = match cert.verdict {
        Verdict::Robust => exit::ROBUST,
        Verdict::NotStationary => exit::NOT_STATIONARY,
        _ => exit::STATIONARY,
    };
    let report = to_value(&cert);
    if let Some(dir) = &exp.config.output.dir {
        ensure_dir(dir)?;
        write_json(&dir.join("certificate.json"), &report)?;
    }
    Ok(Outcome { code, report })
}

fn run_once(exp: &Experiment) -> CliResult<Trajectory> {
    let cfg = exp.run_config()?;
    dynamics::run(&exp.game, &exp.regularizer, &exp.oracle, &cfg).map_err(|e| CliError::from_core("run", e))
}

pub fn simulate(exp: &Experiment) -> CliResult<Outcome> {
    let t = run_once(exp)?;
    let converged = match exp.criterion() {
        Ok(c) => Some(classify_convergence(&t, &c).map_err(|e| CliError::from_core("analysis", e))?),
        Err(_) => None,
    };
    let report = json!({
        "converged": converged,
        "final_dist": t.dist.last(),
        "saturation": t.saturated,
        "seed": t.config.seed,
        "run_index": t.config.run_index,
        "status": t.status,
        "final_x": t.final_x,
    });
    let dir = out_dir(exp);
    ensure_dir(&dir)?;
    write_bytes(&dir.join("trajectory.csv"), &trajectory_csv(&t)?)?;
    write_json(&dir.join("summary.json"), &report)?;
    Ok(Outcome {
        code: exit::ROBUST,
        report,
    })
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub game: String,
    pub regularizer: String,
    pub oracle: String,
    pub gamma: f64,
    pub block: u64,
    pub seed_lo: u64,
    pub seed_hi: u64,
    pub failed: u64,
    pub summary: MonteCarloSummary,
    /// Median over runs of the last down-crossing index (0 when none).
    pub median_last_return: Option<f64>,
    pub median_returns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSummary {
    pub gamma: f64,
    pub failed: u64,
    pub summary: MonteCarloSummary,
    pub median_last_return: Option<f64>,
    pub median_returns: Option<f64>,
    pub threshold_met: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
struct RunRecord {
    outcome: RunOutcome,
    failed: bool,
    last_return: Option<u64>,
    returns: Option<u64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) })
}

fn aggregate(records: &[RunRecord]) -> (MonteCarloSummary, u64, Option<f64>, Option<f64>) {
    let summary = MonteCarloSummary::from_outcomes(records.iter().map(|r| r.outcome));
    let failed = records.iter().filter(|r| r.failed).count() as u64;
    let last: Vec<f64> = records
        .iter()
        .filter(|r| r.returns.is_some())
        .map(|r| r.last_return.unwrap_or(0) as f64)
        .collect();
    let ret: Vec<f64> = records.iter().filter_map(|r| r.returns.map(|k| k as f64)).collect();
    (summary, failed, median(last), median(ret))
}

/// Parallel Monte Carlo over `analysis.seeds` runs for each step size.
/// Results are collected in seed order before anything is written.
pub fn sweep_rows(exp: &Experiment, jobs: usize) -> CliResult<(Vec<SweepRow>, Vec<GammaSummary>)> {
    let base = exp.run_config()?;
    let crit = exp.criterion()?;
    let a = &exp.config.analysis;
    let schedules: Vec<StepSchedule> = match &a.gammas {
        Some(gs) => gs.iter().map(|&g| StepSchedule::Constant(g)).collect(),
        None => vec![base.step],
    };
    let level = a.recurrence_level;
    if level.is_some() && exp.game.domain().total_dim() != 1 {
        return Err(CliError::config("analysis.recurrence_level", "recurrence statistics need a scalar game"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::new(ErrorKind::Run, Some("jobs"), e))?;
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for sched in schedules {
        let mut cfg = base.clone();
        cfg.step = sched;
        cfg.record_states = level.is_some();
        let gamma = step_value(&sched, 1);
        let records: Vec<RunRecord> = pool.install(|| {
            (0..a.seeds)
                .into_par_iter()
                .map(|k| match run_outcome(&exp.game, &exp.regularizer, &exp.oracle, &cfg, k, &crit) {
                    Ok((outcome, t)) => {
                        let stats = level.and_then(|l| recurrence_stats(&t, l).ok());
                        RunRecord {
                            outcome,
                            failed: false,
                            last_return: stats.and_then(|s| s.last_return_index),
                            returns: stats.map(|s| s.returns),
                        }
                    }
                    Err(_) => RunRecord {
                        outcome: RunOutcome {
                            converged: false,
                            diverged: false,
                        },
                        failed: true,
                        last_return: None,
                        returns: None,
                    },
                })
                .collect()
        });
        for (b, chunk) in records.chunks(a.block_size as usize).enumerate() {
            let (summary, failed, ml, mr) = aggregate(chunk);
            let lo = b as u64 * a.block_size;
            rows.push(SweepRow {
                game: exp.game.label().to_string(),
                regularizer: exp.regularizer_label(),
                oracle: exp.oracle_label().to_string(),
                gamma,
                block: b as u64,
                seed_lo: lo,
                seed_hi: lo + chunk.len() as u64 - 1,
                failed,
                summary,
                median_last_return: ml,
                median_returns: mr,
            });
        }
        let (summary, failed, ml, mr) = aggregate(&records);
        totals.push(GammaSummary {
            gamma,
            failed,
            summary,
            median_last_return: ml,
            median_returns: mr,
            threshold_met: a.threshold.as_ref().map(|t: &Threshold| t.met(summary.estimate)),
        });
    }
    Ok((rows, totals))
}

pub fn sweep_table(rows: &[SweepRow]) -> CliResult<Vec<u8>> {
    let header = [
        "game",
        "regularizer",
        "oracle",
        "gamma",
        "block",
        "seed_lo",
        "seed_hi",
        "runs",
        "converged",
        "diverged",
        "failed",
        "estimate",
        "wilson_lo",
        "wilson_hi",
        "median_last_return",
        "median_returns",
    ]
    .map(String::from);
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    crate::output::csv_bytes(
        &header,
        rows.iter().map(|r| {
            vec![
                r.game.clone(),
                r.regularizer.clone(),
                r.oracle.clone(),
                fmt_f64(r.gamma),
                r.block.to_string(),
                r.seed_lo.to_string(),
                r.seed_hi.to_string(),
                r.summary.runs.to_string(),
                r.summary.converged.to_string(),
                r.summary.diverged.to_string(),
                r.failed.to_string(),
                fmt_f64(r.summary.estimate),
                fmt_f64(r.summary.wilson_lo),
                fmt_f64(r.summary.wilson_hi),
                opt(r.median_last_return),
                opt(r.median_returns),
            ]
        }),
    )
}

pub fn sweep(exp: &Experiment, jobs: usize) -> CliResult<Outcome> {
    let (rows, totals) = sweep_rows(exp, jobs)?;
    let dir = out_dir(exp);
    ensure_dir(&dir)?;
    write_bytes(&dir.join("sweep.csv"), &sweep_table(&rows)?)?;
    let report = json!({
        "game": exp.game.label(),
        "regularizer": exp.regularizer_label(),
        "oracle": exp.oracle_label(),
        "seed": exp.config.run.as_ref().map(|r| r.seed),
        "results": totals,
    });
    write_json(&dir.join("sweep.json"), &report)?;
    let missed = totals.iter().any(|t| t.threshold_met == Some(false));
    Ok(Outcome {
        code: if missed { exit::THRESHOLD_MISSED } else { exit::ROBUST },
        report,
    })
}

pub fn perturb(exp: &Experiment) -> CliResult<Outcome> {
    let x = exp.reference()?;
    let p = &exp.config.perturb;
    let g = &exp.game;
    if p.player >= g.num_players() {
        return Err(CliError::config("perturb.player", format!("game has {} players", g.num_players())));
    }
    let tols = &exp.config.tolerances;
    let pert = match p.kind {
        PerturbKind::Collapse1 => perturb_collapse1(g, p.player, x, p.eps, tols),
        PerturbKind::Collapse2 => {
            let y = p.y.clone().unwrap_or_else(|| vec![1.0; g.domain().player(p.player).dim()]);
            perturb_collapse2(g, p.player, x, p.eps, &y)
        }
    }
    .map_err(|e| CliError::from_core("perturb", e))?;
    let spec = SampleSpec {
        samples: p.samples,
        shift_seed: p.shift_seed,
        anchors: vec![x.to_vec(), pert.deviation.clone()],
    };
    let dist = |e| CliError::from_core("perturb.samples", e);
    let payoff = uniform_payoff_distance(g, &pert.game, &spec).map_err(dist)?;
    let gradient = game_distance(g, &pert.game, &spec, robust_eq_core::linalg::Norm::Linf).map_err(dist)?;
    let before = classify_equilibrium(g, x, tols).map_err(|e| CliError::from_core("reference", e))?;
    let after = classify_equilibrium(&pert.game, x, tols).map_err(|e| CliError::from_core("reference", e))?;
    let report = json!({
        "kind": p.kind,
        "eps": p.eps,
        "player": p.player,
        "deviation": pert.deviation,
        "payoff_distance": payoff,
        "gradient_distance": gradient,
        "before": before,
        "after": after,
    });
    if let Some(dir) = &exp.config.output.dir {
        ensure_dir(dir)?;
        write_json(&dir.join("perturb.json"), &report)?;
    }
    Ok(Outcome {
        code: exit::ROBUST,
        report,
    })
}

pub fn rate(exp: &Experiment) -> CliResult<Outcome> {
    let t = run_once(exp)?;
    let x = exp.reference()?;
    let a = &exp.config.analysis;
    let fit: RateReport = fit_rate(&t, x, a.rate_model, a.burn_in).map_err(|e| CliError::from_core("analysis", e))?;
    let dist: Vec<f64> = if t.config.reference.as_deref() == Some(x) && t.dist.len() == t.len() {
        t.dist.clone()
    } else {
        (0..t.len()).map(|k| t.config.norm.dist(t.x(k), x)).collect()
    };
    let report = to_value(&fit);
    let dir = out_dir(exp);
    ensure_dir(&dir)?;
    write_json(&dir.join("rate.json"), &report)?;
    write_bytes(&dir.join("distances.csv"), &distances_csv(&t.steps, &dist)?)?;
    Ok(Outcome {
        code: exit::ROBUST,
        report,
    })
}
