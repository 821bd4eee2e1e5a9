//! Flat `section.key=value` scenario files.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::explorer::{RunConfig, Strategy};
use crate::topo_path::SearchOrder;
use crate::world::WorldPose;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value '{value}' for '{key}'")]
    BadValue { line: usize, key: String, value: String },
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("seed list is empty")]
    NoSeeds,
    #[error("strategy list is empty")]
    NoStrategies,
    #[error("map file {0} does not exist")]
    MapNotFound(PathBuf),
    #[error("invalid tunables: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    /// Resolved against the config file's directory when relative.
    pub map: PathBuf,
    pub start: WorldPose,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub run: RunConfig,
    /// Extra attempts for a seed whose run did not complete.
    pub max_reseeds: usize,
}

impl ScenarioConfig {
    pub fn new(map: impl Into<PathBuf>, start: WorldPose) -> Self {
        Self {
            name: "scenario".into(),
            map: map.into(),
            start,
            strategies: vec![Strategy::Pm, Strategy::Fe],
            seeds: (0..10).collect(),
            run: RunConfig::default(),
            max_reseeds: 3,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        if cfg.map.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.map = dir.join(&cfg.map);
            }
        }
        cfg.check_map()?;
        Ok(cfg)
    }

    pub fn check_map(&self) -> Result<(), ConfigError> {
        if self.map.is_file() {
            Ok(())
        } else {
            Err(ConfigError::MapNotFound(self.map.clone()))
        }
    }

    /// Parses config text; the map path is kept as written.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = None;
        let (mut sx, mut sy, mut st) = (None, None, 0.0);
        let mut cfg = Self::new(PathBuf::new(), WorldPose::new(0.0, 0.0, 0.0));
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            };
            let (key, value) = (k.trim(), v.trim());
            let bad = || ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            let r = &mut cfg.run;
            match key {
                "name" => cfg.name = value.to_string(),
                "map" => map = Some(PathBuf::from(value)),
                "start.x" => sx = Some(num(value).ok_or_else(bad)?),
                "start.y" => sy = Some(num(value).ok_or_else(bad)?),
                "start.theta" => st = num(value).ok_or_else(bad)?,
                "strategy" | "strategies" => {
                    cfg.strategies = value
                        .split(',')
                        .map(|s| s.trim().parse::<Strategy>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad())?
                }
                "seeds" => cfg.seeds = parse_seeds(value).ok_or_else(bad)?,
                "batch.max_reseeds" => cfg.max_reseeds = num(value).ok_or_else(bad)?,
                "sim.dt" => r.sim.dt = num(value).ok_or_else(bad)?,
                "sim.beams" => r.sim.beams = num(value).ok_or_else(bad)?,
                "sim.lidar_max_range" => r.sim.lidar_max_range = num(value).ok_or_else(bad)?,
                "sim.v_max" => r.sim.v_max = num(value).ok_or_else(bad)?,
                "sim.omega_max" => r.sim.omega_max = num(value).ok_or_else(bad)?,
                "sim.robot_radius" => r.sim.robot_radius = num(value).ok_or_else(bad)?,
                "sim.rng_seed" => r.sim.rng_seed = num(value).ok_or_else(bad)?,
                "goal.w_v" => r.weights.w_v = num(value).ok_or_else(bad)?,
                "goal.w_p" => r.weights.w_p = num(value).ok_or_else(bad)?,
                "goal.w_i" | "goal.w_I" => r.weights.w_i = num(value).ok_or_else(bad)?,
                "field.f_g" => r.field.f_g = num(value).ok_or_else(bad)?,
                "field.f_o" => r.field.f_o = num(value).ok_or_else(bad)?,
                "field.f_l" => r.field.f_l = num(value).ok_or_else(bad)?,
                "control.k_v" => r.gains.k_v = num(value).ok_or_else(bad)?,
                "control.k_omega" => r.gains.k_omega = num(value).ok_or_else(bad)?,
                "control.nudge" => r.gains.nudge = num(value).ok_or_else(bad)?,
                "fe.alpha_size" => r.fe.alpha_size = num(value).ok_or_else(bad)?,
                "fe.alpha_dist" => r.fe.alpha_dist = num(value).ok_or_else(bad)?,
                "fe.inflation" => r.fe.inflation = num(value).ok_or_else(bad)?,
                "fe.inflation_cost" => r.fe.inflation_cost = num(value).ok_or_else(bad)?,
                "segment.min_frontier_cluster" => r.segment.min_frontier_cluster = num(value).ok_or_else(bad)?,
                "segment.spur_factor" => r.segment.spur_factor = num(value).ok_or_else(bad)?,
                "segment.spur_min_cells" => r.segment.spur_min_cells = num(value).ok_or_else(bad)?,
                "segment.dead_end_len" => r.segment.dead_end_len = num(value).ok_or_else(bad)?,
                "search.order" => {
                    r.search.order = match value.to_ascii_lowercase().as_str() {
                        "priority" => SearchOrder::Priority,
                        "lifo" => SearchOrder::Lifo,
                        _ => return Err(bad()),
                    }
                }
                "search.lookahead" => r.search.lookahead = num(value).ok_or_else(bad)?,
                "run.replan_interval" => r.replan_interval = num(value).ok_or_else(bad)?,
                "run.goal_tolerance" => r.goal_tolerance = num(value).ok_or_else(bad)?,
                "run.time_budget" => r.time_budget = num(value).ok_or_else(bad)?,
                "run.start_jitter" => r.start_jitter = num(value).ok_or_else(bad)?,
                "run.random_heading" => r.random_heading = num(value).ok_or_else(bad)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        cfg.map = map.ok_or(ConfigError::Missing("map"))?;
        cfg.start = WorldPose::new(
            sx.ok_or(ConfigError::Missing("start.x"))?,
            sy.ok_or(ConfigError::Missing("start.y"))?,
            st,
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError::NoSeeds);
        }
        if self.strategies.is_empty() {
            return Err(ConfigError::NoStrategies);
        }
        self.run
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Canonical text form; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let r = &self.run;
        let strategies: Vec<&str> = self.strategies.iter().map(|s| s.name()).collect();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let order = match r.search.order {
            SearchOrder::Priority => "priority",
            SearchOrder::Lifo => "lifo",
        };
        let lines = [
            format!("name={}", self.name),
            format!("map={}", self.map.display()),
            format!("start.x={}", self.start.x),
            format!("start.y={}", self.start.y),
            format!("start.theta={}", self.start.theta),
            format!("strategy={}", strategies.join(",")),
            format!("seeds={}", seeds.join(",")),
            format!("batch.max_reseeds={}", self.max_reseeds),
            format!("sim.dt={}", r.sim.dt),
            format!("sim.beams={}", r.sim.beams),
            format!("sim.lidar_max_range={}", r.sim.lidar_max_range),
            format!("sim.v_max={}", r.sim.v_max),
            format!("sim.omega_max={}", r.sim.omega_max),
            format!("sim.robot_radius={}", r.sim.robot_radius),
            format!("sim.rng_seed={}", r.sim.rng_seed),
            format!("goal.w_v={}", r.weights.w_v),
            format!("goal.w_p={}", r.weights.w_p),
            format!("goal.w_i={}", r.weights.w_i),
            format!("field.f_g={}", r.field.f_g),
            format!("field.f_o={}", r.field.f_o),
            format!("field.f_l={}", r.field.f_l),
            format!("control.k_v={}", r.gains.k_v),
            format!("control.k_omega={}", r.gains.k_omega),
            format!("control.nudge={}", r.gains.nudge),
            format!("fe.alpha_size={}", r.fe.alpha_size),
            format!("fe.alpha_dist={}", r.fe.alpha_dist),
            format!("fe.inflation={}", r.fe.inflation),
            format!("fe.inflation_cost={}", r.fe.inflation_cost),
            format!("segment.min_frontier_cluster={}", r.segment.min_frontier_cluster),
            format!("segment.spur_factor={}", r.segment.spur_factor),
            format!("segment.spur_min_cells={}", r.segment.spur_min_cells),
            format!("segment.dead_end_len={}", r.segment.dead_end_len),
            format!("search.order={order}"),
            format!("search.lookahead={}", r.search.lookahead),
            format!("run.replan_interval={}", r.replan_interval),
            format!("run.goal_tolerance={}", r.goal_tolerance),
            format!("run.time_budget={}", r.time_budget),
            format!("run.start_jitter={}", r.start_jitter),
            format!("run.random_heading={}", r.random_heading),
        ];
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

fn num<T: FromStr>(v: &str) -> Option<T> {
    v.parse().ok()
}

/// `a..b` ranges (end exclusive) and single values, comma separated.
pub fn parse_seeds(value: &str) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            if a >= b {
                return None;
            }
            out.extend(a..b);
        } else {
            out.push(part.parse().ok()?);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
# maze run
name=demo
map=maps/m.txt
start.x=0.35
start.y=0.4   # comment
strategy=pm
seeds=0..3,10
goal.w_v=2.5
search.order=lifo
run.random_heading=false
";

    #[test]
    fn parses_and_round_trips() {
        let c = ScenarioConfig::parse(TEXT).unwrap();
        assert_eq!(c.name, "demo");
        assert_eq!(c.seeds, vec![0, 1, 2, 10]);
        assert_eq!(c.strategies, vec![Strategy::Pm]);
        assert_eq!(c.run.weights.w_v, 2.5);
        assert_eq!(c.run.search.order, SearchOrder::Lifo);
        assert!(!c.run.random_heading);
        assert_eq!(c.start.y, 0.4);
        assert_eq!(ScenarioConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ScenarioConfig::parse("map=a\nstart.x=1\nstart.y=1\nbogus=1\n"),
            Err(ConfigError::UnknownKey { line: 4, .. })
        ));
        assert!(matches!(
            ScenarioConfig::parse("map=a\nstart.x=one\n"),
            Err(ConfigError::BadValue { line: 2, .. })
        ));
        assert!(matches!(ScenarioConfig::parse("start.x=1\nstart.y=1\n"), Err(ConfigError::Missing("map"))));
        assert!(matches!(
            ScenarioConfig::parse("map=a\nstart.x=1\nstart.y=1\nseeds=\n"),
            Err(ConfigError::NoSeeds)
        ));
        assert!(matches!(ScenarioConfig::parse("just text\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(
            ScenarioConfig::parse("map=a\nstart.x=1\nstart.y=1\ngoal.w_v=-1\n"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("5"), Some(vec![5]));
        assert_eq!(parse_seeds("0..2, 7"), Some(vec![0, 1, 7]));
        assert_eq!(parse_seeds("3..3"), None);
        assert_eq!(parse_seeds("x"), None);
    }
}
