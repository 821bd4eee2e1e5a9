//! Seeded batch execution, CSV reports and run rendering.

mod config;
mod render;
mod report;

pub use config::{parse_seeds, ConfigError, ScenarioConfig};
pub use render::{render_image, render_run, Image, RenderError, RenderInfo};
pub use report::{
    mean_curve, median, run_prefix, step_hold, summary_text, write_batch, write_run, StrategyAggregate,
};

use std::panic::{self, AssertUnwindSafe};

use thiserror::Error;

use crate::explorer::{run_exploration, ExplorationRun, ExploreError, Outcome, RunConfig, Strategy};
use crate::semantic_topo::reachable_free;
use crate::world::{load_ground_truth, MapError, MapFormat, OccupancyGrid, WorldPose};

/// How batch jobs are scheduled. `Parallel` runs sequentially when the
/// `parallel` feature is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

/// One attempt of one seed.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub seed: u64,
    pub attempt: usize,
    /// Seed actually fed to the run; differs from `seed` on re-seeded attempts.
    pub run_seed: u64,
    pub run: ExplorationRun,
}

impl RunRecord {
    /// Completed attempts count toward the statistics; the rest are reported only.
    pub fn counted(&self) -> bool {
        self.run.outcome == Outcome::Completed
    }
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub config: ScenarioConfig,
    /// Free area 8-connected to the start cell, m².
    pub reachable_area: f64,
    /// Every attempt, sorted by strategy order in the config, then seed, then attempt.
    pub runs: Vec<RunRecord>,
}

impl BatchReport {
    pub fn counted(&self, strategy: Strategy) -> impl Iterator<Item = &RunRecord> {
        self.runs
            .iter()
            .filter(move |r| r.strategy == strategy && r.counted())
    }

    /// Seeds whose every attempt failed.
    pub fn unresolved(&self) -> Vec<(Strategy, u64)> {
        let mut out = Vec::new();
        for &s in &self.config.strategies {
            for &seed in &self.config.seeds {
                if !self.runs.iter().any(|r| r.strategy == s && r.seed == seed && r.counted()) {
                    out.push((s, seed));
                }
            }
        }
        out
    }

    pub fn all_completed(&self) -> bool {
        self.unresolved().is_empty()
    }

    pub fn completion_times(&self, strategy: Strategy) -> Vec<f64> {
        self.counted(strategy).map(|r| r.run.elapsed_sim_time).collect()
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("loading map: {0}")]
    Map(#[from] MapError),
    #[error("{strategy} seed {seed}: {source}")]
    Run {
        strategy: Strategy,
        seed: u64,
        source: ExploreError,
    },
    #[error("{strategy} seed {seed} panicked: {message}")]
    Panic {
        strategy: Strategy,
        seed: u64,
        message: String,
        /// Runs that finished before the batch was aborted.
        partial: Box<BatchReport>,
    },
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
}

/// Seed used for attempt `attempt` of `seed`.
pub fn reseed(seed: u64, attempt: usize) -> u64 {
    seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn load_map(cfg: &ScenarioConfig) -> Result<OccupancyGrid, BatchError> {
    cfg.check_map()?;
    let format = MapFormat::from_path(&cfg.map)?;
    Ok(load_ground_truth(&cfg.map, format)?)
}

pub fn reachable_area(gt: &OccupancyGrid, start: &WorldPose) -> f64 {
    let res = gt.resolution();
    gt.world_to_cell(start)
        .map_or(0.0, |c| reachable_free(gt, c).count() as f64 * res * res)
}

/// Loads the map and runs every (strategy, seed) job.
pub fn run_batch(cfg: &ScenarioConfig, exec: Execution) -> Result<BatchReport, BatchError> {
    let gt = load_map(cfg)?;
    run_batch_on(&gt, cfg, exec)
}

enum JobResult {
    Done(Vec<RunRecord>),
    Failed(Vec<RunRecord>, ExploreError),
    Panicked(Vec<RunRecord>, String),
}

fn run_job(gt: &OccupancyGrid, start: &WorldPose, run: &RunConfig, strategy: Strategy, seed: u64, max_reseeds: usize) -> JobResult {
    let mut records = Vec::new();
    for attempt in 0..=max_reseeds {
        let run_seed = reseed(seed, attempt);
        let result = panic::catch_unwind(AssertUnwindSafe(|| run_exploration(gt, start, strategy, run, run_seed)));
        match result {
            Ok(Ok(r)) => {
                let done = r.outcome == Outcome::Completed;
                records.push(RunRecord {
                    strategy,
                    seed,
                    attempt,
                    run_seed,
                    run: r,
                });
                if done {
                    break;
                }
            }
            Ok(Err(e)) => return JobResult::Failed(records, e),
            Err(p) => {
                let message = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "non-string panic payload".into());
                return JobResult::Panicked(records, message);
            }
        }
    }
    JobResult::Done(records)
}

/// Runs every job against an already loaded ground truth.
pub fn run_batch_on(gt: &OccupancyGrid, cfg: &ScenarioConfig, exec: Execution) -> Result<BatchReport, BatchError> {
    cfg.validate()?;
    let jobs: Vec<(usize, Strategy, u64)> = cfg
        .strategies
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| cfg.seeds.iter().map(move |&seed| (i, s, seed)))
        .collect();
    let work = |&(_, s, seed): &(usize, Strategy, u64)| run_job(gt, &cfg.start, &cfg.run, s, seed, cfg.max_reseeds);
    let results: Vec<JobResult> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            jobs.par_iter().map(work).collect()
        }
        _ => jobs.iter().map(work).collect(),
    };

    let mut runs = Vec::new();
    let mut failure = None;
    for (&(_, s, seed), r) in jobs.iter().zip(results) {
        match r {
            JobResult::Done(v) => runs.extend(v),
            JobResult::Failed(v, e) => {
                runs.extend(v);
                failure.get_or_insert(Err((s, seed, e)));
            }
            JobResult::Panicked(v, m) => {
                runs.extend(v);
                failure.get_or_insert(Ok((s, seed, m)));
            }
        }
    }
    let order = |s: Strategy| cfg.strategies.iter().position(|&x| x == s);
    runs.sort_by_key(|r| (order(r.strategy), r.seed, r.attempt));
    let report = BatchReport {
        config: cfg.clone(),
        reachable_area: reachable_area(gt, &cfg.start),
        runs,
    };
    match failure {
        None => Ok(report),
        Some(Err((strategy, seed, source))) => Err(BatchError::Run { strategy, seed, source }),
        Some(Ok((strategy, seed, message))) => Err(BatchError::Panic {
            strategy,
            seed,
            message,
            partial: Box::new(report),
        }),
    }
}
