use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use topo_explore::bench::{self, render_run, run_prefix, write_batch, write_run, Execution, ScenarioConfig};
use topo_explore::explorer::{run_exploration, Outcome, Strategy};
use topo_explore::world::WorldPose;

#[derive(Parser)]
#[command(name = "topo-explore", version, about = "Semantic-topometric vs wavefront frontier exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one exploration mission.
    Run(RunArgs),
    /// Run every strategy and seed of a scenario and write the CSV report.
    Batch(BatchArgs),
    /// Draw a finished run as a PPM image.
    Render(RenderArgs),
    /// Run PM and FE on one or more scenarios and compare completion times.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario file with key=value settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth map (.txt or .pgm); overrides the scenario's map.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Start pose "x,y" or "x,y,theta" in meters and radians.
    #[arg(long)]
    start: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "pm")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    common: Common,
    /// Restrict the batch to one strategy.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Restrict the batch to one seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run jobs one after another instead of on the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Directory written by `run` or `batch`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "pm")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    attempt: usize,
    /// Image path; defaults to `<out>/render_<run>.ppm`.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Pixels per grid cell.
    #[arg(long, default_value_t = 4)]
    scale: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario files; each is run with both strategies.
    #[arg(long, required = true, num_args = 1..)]
    config: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sequential: bool,
}

fn parse_start(s: &str) -> Result<WorldPose> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad start pose '{s}'"))?;
    match v.as_slice() {
        [x, y] => Ok(WorldPose::new(*x, *y, 0.0)),
        [x, y, t] => Ok(WorldPose::new(*x, *y, *t)),
        _ => bail!("start pose needs 2 or 3 numbers, got '{s}'"),
    }
}

fn scenario(c: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &c.config {
        Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => {
            let map = c.map.clone().context("either --config or --map is required")?;
            let start = c.start.as_deref().context("--start is required without --config")?;
            ScenarioConfig::new(map, parse_start(start)?)
        }
    };
    if let Some(m) = &c.map {
        cfg.map = m.clone();
    }
    if let Some(s) = &c.start {
        cfg.start = parse_start(s)?;
    }
    cfg.check_map()?;
    Ok(cfg)
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn cmd_run(a: &RunArgs) -> Result<bool> {
    let cfg = scenario(&a.common)?;
    let gt = bench::load_map(&cfg)?;
    let run = run_exploration(&gt, &cfg.start, a.strategy, &cfg.run, a.seed)?;
    write_run(&a.common.out.join("runs"), &run_prefix(a.strategy, a.seed, 0), &run, cfg.run.sim.dt)?;
    println!(
        "{} seed {}: {} after {:.1} s sim time, explored {:.4} of {:.4} m², {} cycles",
        a.strategy,
        a.seed,
        run.outcome.name(),
        run.elapsed_sim_time,
        run.final_area(),
        bench::reachable_area(&gt, &cfg.start),
        run.cycles.len()
    );
    Ok(run.outcome == Outcome::Completed)
}

fn batch(cfg: &ScenarioConfig, out: &Path, sequential: bool) -> Result<bench::BatchReport> {
    let report = match bench::run_batch(cfg, exec(sequential)) {
        Ok(r) => r,
        Err(bench::BatchError::Panic { partial, strategy, seed, message }) => {
            write_batch(&partial, out)?;
            bail!("{strategy} seed {seed} panicked: {message}; partial results written to {}", out.display());
        }
        Err(e) => return Err(e.into()),
    };
    write_batch(&report, out)?;
    Ok(report)
}

fn cmd_batch(a: &BatchArgs) -> Result<bool> {
    let mut cfg = scenario(&a.common)?;
    if let Some(s) = a.strategy {
        cfg.strategies = vec![s];
    }
    if let Some(s) = a.seed {
        cfg.seeds = vec![s];
    }
    let report = batch(&cfg, &a.common.out, a.sequential)?;
    print!("{}", bench::summary_text(&report));
    Ok(report.all_completed())
}

fn cmd_render(a: &RenderArgs) -> Result<bool> {
    let image = a
        .image
        .clone()
        .unwrap_or_else(|| a.out.join(format!("render_{}.ppm", run_prefix(a.strategy, a.seed, a.attempt))));
    let info = render_run(&a.out, a.strategy, a.seed, a.attempt, &image, a.scale)?;
    let classes: Vec<&str> = info.classes.iter().map(|c| c.name()).collect();
    println!(
        "wrote {} ({}x{}), overlay: {}",
        image.display(),
        info.width,
        info.height,
        if info.overlay { classes.join(",") } else { "none".into() }
    );
    Ok(true)
}

fn cmd_compare(a: &CompareArgs) -> Result<bool> {
    let mut ok = true;
    println!("scenario,pm_median_s,fe_median_s,pm_completed,fe_completed,pm_not_slower");
    for path in &a.config {
        let mut cfg = ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
        cfg.strategies = vec![Strategy::Pm, Strategy::Fe];
        let report = batch(&cfg, &a.out.join(&cfg.name), a.sequential)?;
        ok &= report.all_completed();
        let pm = bench::median(&report.completion_times(Strategy::Pm));
        let fe = bench::median(&report.completion_times(Strategy::Fe));
        let show = |m: Option<f64>| m.map_or("-".to_string(), |v| format!("{v:.1}"));
        let verdict = match (pm, fe) {
            (Some(p), Some(f)) => (p <= f).to_string(),
            _ => "-".into(),
        };
        println!(
            "{},{},{},{},{},{}",
            cfg.name,
            show(pm),
            show(fe),
            report.counted(Strategy::Pm).count(),
            report.counted(Strategy::Fe).count(),
            verdict
        );
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Render(a) => cmd_render(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
