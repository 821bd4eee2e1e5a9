//! CSV and text outputs. Only deterministic quantities go into the CSV files
//! and the summary; wall-clock stage timings are written to `timing.txt`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::{BatchReport, RunRecord};
use crate::explorer::{ExplorationRun, Strategy};
use crate::world::to_snapshot_pgm;

/// Area at time `t` by last-observation-carried-forward; 0 before the first sample.
pub fn step_hold(curve: &[(f64, f64)], t: f64) -> f64 {
    let i = curve.partition_point(|p| p.0 <= t);
    if i == 0 {
        0.0
    } else {
        curve[i - 1].1
    }
}

/// Arithmetic mean of step-held curves at each grid time.
pub fn mean_curve(curves: &[&[(f64, f64)]], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&t| {
            if curves.is_empty() {
                0.0
            } else {
                curves.iter().map(|c| step_hold(c, t)).sum::<f64>() / curves.len() as f64
            }
        })
        .collect()
}

/// Median with the two middle values averaged for even counts; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        let median = median(values)?;
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyAggregate {
    pub strategy: Strategy,
    pub runs: usize,
    pub failed_attempts: usize,
    pub completion: Option<Stats>,
    pub final_area_mean: f64,
    pub detect_ops: Option<Stats>,
    pub select_ops: Option<Stats>,
    pub plan_ops: Option<Stats>,
}

impl StrategyAggregate {
    pub fn of(report: &BatchReport, strategy: Strategy) -> Self {
        let counted: Vec<&RunRecord> = report.counted(strategy).collect();
        let failed_attempts = report
            .runs
            .iter()
            .filter(|r| r.strategy == strategy && !r.counted())
            .count();
        let times: Vec<f64> = counted.iter().map(|r| r.run.elapsed_sim_time).collect();
        let ops = |f: fn(&crate::explorer::CycleRecord) -> u64| {
            let v: Vec<f64> = counted
                .iter()
                .flat_map(|r| r.run.cycles.iter().map(move |c| f(c) as f64))
                .collect();
            Stats::of(&v)
        };
        let final_area_mean = if counted.is_empty() {
            0.0
        } else {
            counted.iter().map(|r| r.run.final_area()).sum::<f64>() / counted.len() as f64
        };
        Self {
            strategy,
            runs: counted.len(),
            failed_attempts,
            completion: Stats::of(&times),
            final_area_mean,
            detect_ops: ops(|c| c.detect_ops),
            select_ops: ops(|c| c.select_ops),
            plan_ops: ops(|c| c.plan_ops),
        }
    }
}

fn stats_cells(s: Option<Stats>) -> String {
    match s {
        Some(s) => format!("{:.6},{:.6},{:.6},{:.6}", s.mean, s.median, s.min, s.max),
        None => ",,,".into(),
    }
}

/// File-name stem shared by one attempt's artifacts.
pub fn run_prefix(strategy: Strategy, seed: u64, attempt: usize) -> String {
    format!("{}_s{}_a{}", strategy.name().to_ascii_lowercase(), seed, attempt)
}

fn put(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> io::Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes)?;
    written.push(p);
    Ok(())
}

/// Writes one run's area, cycle, score and trajectory CSVs plus its explored-map snapshot.
pub fn write_run(dir: &Path, prefix: &str, run: &ExplorationRun, dt: f64) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut area = String::from("time_s,area_m2\n");
    for (t, a) in &run.area_curve {
        let _ = writeln!(area, "{t:.3},{a:.6}");
    }
    put(dir, &format!("{prefix}_area.csv"), area.as_bytes(), &mut written)?;

    let mut cyc = String::from("cycle,time_s,frontiers,detect_ops,select_ops,plan_ops,path_len_m\n");
    for (i, c) in run.cycles.iter().enumerate() {
        let _ = writeln!(
            cyc,
            "{i},{:.3},{},{},{},{},{:.6}",
            c.time, c.frontiers, c.detect_ops, c.select_ops, c.plan_ops, c.path_len
        );
    }
    put(dir, &format!("{prefix}_cycles.csv"), cyc.as_bytes(), &mut written)?;

    if run.strategy == Strategy::Pm {
        let mut sc = String::from("cycle,goal,d_m,v_rad,p_l_m,openings,frontier_pathways,c_metric,g_semantic,total,chosen\n");
        for (i, r) in &run.scores {
            let _ = writeln!(
                sc,
                "{i},{},{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{:.6},{}",
                r.goal,
                r.cost.d,
                r.cost.v,
                r.sem.p_l,
                r.sem.openings,
                r.sem.frontier_pathways,
                r.cost.c_metric,
                r.cost.g_semantic,
                r.cost.total,
                u8::from(r.chosen)
            );
        }
        put(dir, &format!("{prefix}_scores.csv"), sc.as_bytes(), &mut written)?;
    }

    let mut tr = String::from("time_s,x_m,y_m\n");
    for (i, p) in run.trajectory.iter().enumerate() {
        let _ = writeln!(tr, "{:.3},{:.6},{:.6}", i as f64 * dt, p.x, p.y);
    }
    put(dir, &format!("{prefix}_trajectory.csv"), tr.as_bytes(), &mut written)?;
    put(dir, &format!("{prefix}_explored.pgm"), &to_snapshot_pgm(&run.explored), &mut written)?;
    Ok(written)
}

/// Plain-text report; deterministic for a fixed config.
pub fn summary_text(report: &BatchReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    let _ = writeln!(s, "scenario {}", c.name);
    let _ = writeln!(s, "map {}", c.map.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()));
    let _ = writeln!(s, "seeds {}", c.seeds.len());
    let _ = writeln!(s, "reachable_area_m2 {:.4}", report.reachable_area);
    let _ = writeln!(
        s,
        "fe_weights alpha_size={} alpha_dist={}",
        c.run.fe.alpha_size, c.run.fe.alpha_dist
    );
    for &strategy in &c.strategies {
        let a = StrategyAggregate::of(report, strategy);
        let _ = write!(s, "{strategy}: completed {}/{} ", a.runs, c.seeds.len());
        match a.completion {
            Some(t) => {
                let _ = write!(
                    s,
                    "median {:.1} s mean {:.1} s range {:.1}..{:.1} s",
                    t.median, t.mean, t.min, t.max
                );
            }
            None => s.push_str("no completed runs"),
        }
        let _ = writeln!(s, ", failed attempts {}", a.failed_attempts);
        if let Some(p) = a.plan_ops {
            let _ = writeln!(s, "  planning ops per cycle: median {:.0} max {:.0}", p.median, p.max);
        }
    }
    for (strategy, seed) in report.unresolved() {
        let _ = writeln!(s, "unresolved {strategy} seed {seed}");
    }
    s
}

fn timing_text(report: &BatchReport) -> String {
    let mut s = String::from("# wall-clock milliseconds per cycle; varies between runs\n");
    s.push_str("strategy,cycles,detect_mean_ms,select_mean_ms,plan_mean_ms,detect_max_ms,plan_max_ms\n");
    for &strategy in &report.config.strategies {
        let w: Vec<_> = report.counted(strategy).flat_map(|r| r.run.wall.iter()).collect();
        let ms = |f: fn(&crate::explorer::WallTiming) -> u64| -> Vec<f64> { w.iter().map(|x| f(x) as f64 / 1e6).collect() };
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let (d, sel, p) = (ms(|x| x.detect_ns), ms(|x| x.select_ns), ms(|x| x.plan_ns));
        let _ = writeln!(
            s,
            "{strategy},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            w.len(),
            mean(&d),
            mean(&sel),
            mean(&p),
            max(&d),
            max(&p)
        );
    }
    s
}

/// Writes `runs.csv`, `aggregate.csv`, `area_mean.csv`, `summary.txt`,
/// `timing.txt`, `config.txt` and every attempt's artifacts under `runs/`.
pub fn write_batch(report: &BatchReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let dt = report.config.run.sim.dt;

    let mut runs = String::from(
        "strategy,seed,attempt,run_seed,outcome,counted,completion_time_s,ticks,final_area_m2,reachable_area_m2,cycles,start_x,start_y,start_theta,end_x,end_y\n",
    );
    for r in &report.runs {
        let x = &r.run;
        let _ = writeln!(
            runs,
            "{},{},{},{},{},{},{:.3},{},{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.strategy,
            r.seed,
            r.attempt,
            r.run_seed,
            x.outcome.name(),
            u8::from(r.counted()),
            x.elapsed_sim_time,
            x.ticks,
            x.final_area(),
            report.reachable_area,
            x.cycles.len(),
            x.start.x,
            x.start.y,
            x.start.theta,
            x.final_pose.x,
            x.final_pose.y
        );
        written.extend(write_run(&dir.join("runs"), &run_prefix(r.strategy, r.seed, r.attempt), x, dt)?);
    }
    put(dir, "runs.csv", runs.as_bytes(), &mut written)?;

    let mut agg = String::from(
        "strategy,runs,failed_attempts,completion_mean_s,completion_median_s,completion_min_s,completion_max_s,final_area_mean_m2,\
detect_ops_mean,detect_ops_median,detect_ops_min,detect_ops_max,select_ops_mean,select_ops_median,select_ops_min,select_ops_max,\
plan_ops_mean,plan_ops_median,plan_ops_min,plan_ops_max\n",
    );
    for &s in &report.config.strategies {
        let a = StrategyAggregate::of(report, s);
        let _ = writeln!(
            agg,
            "{},{},{},{},{:.6},{},{},{}",
            s,
            a.runs,
            a.failed_attempts,
            stats_cells(a.completion),
            a.final_area_mean,
            stats_cells(a.detect_ops),
            stats_cells(a.select_ops),
            stats_cells(a.plan_ops)
        );
    }
    put(dir, "aggregate.csv", agg.as_bytes(), &mut written)?;

    let horizon = report
        .runs
        .iter()
        .filter(|r| r.counted())
        .map(|r| r.run.elapsed_sim_time)
        .fold(0.0, f64::max)
        .ceil() as usize;
    let grid: Vec<f64> = (0..=horizon).map(|t| t as f64).collect();
    let columns: Vec<Vec<f64>> = report
        .config
        .strategies
        .iter()
        .map(|&s| {
            let curves: Vec<&[(f64, f64)]> = report.counted(s).map(|r| r.run.area_curve.as_slice()).collect();
            mean_curve(&curves, &grid)
        })
        .collect();
    let mut mean = String::from("time_s");
    for s in &report.config.strategies {
        let _ = write!(mean, ",{}_mean_area_m2", s.name().to_ascii_lowercase());
    }
    mean.push('\n');
    for (i, t) in grid.iter().enumerate() {
        let _ = write!(mean, "{t:.0}");
        for c in &columns {
            let _ = write!(mean, ",{:.6}", c[i]);
        }
        mean.push('\n');
    }
    put(dir, "area_mean.csv", mean.as_bytes(), &mut written)?;

    put(dir, "summary.txt", summary_text(report).as_bytes(), &mut written)?;
    put(dir, "config.txt", report.config.to_text().as_bytes(), &mut written)?;
    put(dir, "timing.txt", timing_text(report).as_bytes(), &mut written)?;
    Ok(written)
}
