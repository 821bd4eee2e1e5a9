//! Frontier scoring: metric cost minus semantic gain, and goal selection.

use thiserror::Error;

use crate::semantic_topo::{FrontierGoal, GoalId};
use crate::topo_path::TopoPath;

#[derive(Debug, Error, PartialEq)]
pub enum GoalError {
    #[error("average intersection path length must be > 0, got {0}")]
    NonPositivePathLength(f64),
    #[error("path ends at goal {path} but goal {goal} was given")]
    GoalMismatch { path: GoalId, goal: GoalId },
    #[error("weights must be non-negative")]
    NegativeWeight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalWeights {
    /// Per radian of initial turn.
    pub w_v: f64,
    /// Per meter of distance between frontier and intersection.
    pub w_p: f64,
    /// Per opening / connected frontier pathway.
    pub w_i: f64,
}

impl Default for GoalWeights {
    fn default() -> Self {
        Self {
            w_v: 4.0,
            w_p: 0.2,
            w_i: 0.1,
        }
    }
}

impl GoalWeights {
    pub const ZERO: GoalWeights = GoalWeights {
        w_v: 0.0,
        w_p: 0.0,
        w_i: 0.0,
    };

    pub fn validate(&self) -> Result<(), GoalError> {
        if self.w_v >= 0.0 && self.w_p >= 0.0 && self.w_i >= 0.0 {
            Ok(())
        } else {
            Err(GoalError::NegativeWeight)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// Path length in meters.
    pub d: f64,
    /// Initial turn magnitude in radians.
    pub v: f64,
    pub c_metric: f64,
    pub g_semantic: f64,
    pub total: f64,
}

/// Semantic inputs of one frontier: `p_l`, `O` and `P_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticTerms {
    pub p_l: f64,
    pub openings: usize,
    pub frontier_pathways: usize,
}

impl From<&FrontierGoal> for SemanticTerms {
    fn from(g: &FrontierGoal) -> Self {
        Self {
            p_l: g.path_to_nearest_intersection_len,
            openings: g.openings,
            frontier_pathways: g.connected_frontier_pathways,
        }
    }
}

/// `C = d/L + w_v·v − (w_p·p_l + w_I·(O + P_u))`.
pub fn score_terms(
    d: f64,
    v: f64,
    sem: SemanticTerms,
    weights: &GoalWeights,
    l_path: f64,
) -> Result<CostBreakdown, GoalError> {
    if !(l_path > 0.0) {
        return Err(GoalError::NonPositivePathLength(l_path));
    }
    let c_metric = d / l_path + weights.w_v * v;
    let g_semantic =
        weights.w_p * sem.p_l + weights.w_i * (sem.openings + sem.frontier_pathways) as f64;
    Ok(CostBreakdown {
        d,
        v,
        c_metric,
        g_semantic,
        total: c_metric - g_semantic,
    })
}

/// Scores `goal` reached by `path`.
pub fn score(
    goal: &FrontierGoal,
    path: &TopoPath,
    weights: &GoalWeights,
    l_path: f64,
) -> Result<CostBreakdown, GoalError> {
    if path.terminal_goal != goal.id {
        return Err(GoalError::GoalMismatch {
            path: path.terminal_goal,
            goal: goal.id,
        });
    }
    score_terms(path.length, path.initial_turn, goal.into(), weights, l_path)
}

/// Deterministic ordering: total, then d, then goal id.
pub fn cost_order(a: (&CostBreakdown, GoalId), b: (&CostBreakdown, GoalId)) -> std::cmp::Ordering {
    a.0.total
        .total_cmp(&b.0.total)
        .then(a.0.d.total_cmp(&b.0.d))
        .then(a.1.cmp(&b.1))
}

/// Goal with the minimal total cost; `None` means nothing is left to explore.
pub fn select_optimal(scored: &[(FrontierGoal, CostBreakdown)]) -> Option<&FrontierGoal> {
    scored
        .iter()
        .min_by(|x, y| cost_order((&x.1, x.0.id), (&y.1, y.0.id)))
        .map(|(g, _)| g)
}

/// One row of the per-cycle score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub goal: GoalId,
    pub sem: SemanticTerms,
    pub cost: CostBreakdown,
    pub chosen: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{CellIndex, WorldPose};
    use std::f64::consts::PI;

    fn goal(id: GoalId) -> FrontierGoal {
        FrontierGoal {
            id,
            target: WorldPose::new(0.0, 0.0, 0.0),
            target_cell: CellIndex::new(0, 0),
            frontier_cells: vec![],
            area: 0,
            path_to_nearest_intersection_len: 0.0,
            nearest_intersection: None,
            openings: 0,
            connected_frontier_pathways: 0,
        }
    }

    #[test]
    fn worked_example() {
        let sem = SemanticTerms {
            p_l: 2.0,
            openings: 4,
            frontier_pathways: 1,
        };
        let c = score_terms(10.0, PI / 2.0, sem, &GoalWeights::default(), 5.0).unwrap();
        assert!((c.c_metric - (2.0 + 2.0 * PI)).abs() < 1e-12);
        assert!((c.g_semantic - 0.9).abs() < 1e-12);
        assert!((c.total - 7.3832).abs() < 1e-4);
        assert_eq!(c.total, c.c_metric - c.g_semantic);
    }

    #[test]
    fn metric_only() {
        let sem = SemanticTerms {
            p_l: 3.0,
            openings: 5,
            frontier_pathways: 2,
        };
        let c = score_terms(7.0, 1.0, sem, &GoalWeights::ZERO, 7.0).unwrap();
        assert_eq!(c.total, 1.0);
    }

    #[test]
    fn more_openings_is_cheaper() {
        let w = GoalWeights::default();
        let a = score_terms(3.0, 0.2, SemanticTerms { p_l: 1.0, openings: 3, frontier_pathways: 1 }, &w, 2.0);
        let b = score_terms(3.0, 0.2, SemanticTerms { p_l: 1.0, openings: 4, frontier_pathways: 1 }, &w, 2.0);
        assert!(b.unwrap().total < a.unwrap().total);
    }

    #[test]
    fn rejects_bad_path_length() {
        let sem = SemanticTerms { p_l: 0.0, openings: 0, frontier_pathways: 0 };
        assert_eq!(
            score_terms(1.0, 0.0, sem, &GoalWeights::default(), 0.0),
            Err(GoalError::NonPositivePathLength(0.0))
        );
    }

    #[test]
    fn selection() {
        let sem = SemanticTerms { p_l: 0.0, openings: 0, frontier_pathways: 0 };
        let mk = |id, total: f64| {
            let mut c = score_terms(1.0, 0.0, sem, &GoalWeights::ZERO, 1.0).unwrap();
            c.total = total;
            (goal(id), c)
        };
        assert!(select_optimal(&[]).is_none());
        assert_eq!(select_optimal(&[mk(0, 5.0)]).unwrap().id, 0);
        let s = [mk(0, 3.1), mk(1, 2.7), mk(2, 9.0)];
        assert_eq!(select_optimal(&s).unwrap().id, 1);
        // ties fall back to the smaller id
        let s = [mk(4, 1.0), mk(2, 1.0)];
        assert_eq!(select_optimal(&s).unwrap().id, 2);
    }
}
