//! Deterministic online algorithms.

use thiserror::Error;

use crate::model::{ClusterId, Decision, ModelError, OnState};
use crate::pos::{Pos, Scale};
use crate::trace::Trace;

/// A deterministic online algorithm.
///
/// `decide` sees the whole state (its own clusters and every earlier point)
/// and must return one of `state.feasible_decisions(p)`.
pub trait OnlineAlgorithm: Sync {
    fn name(&self) -> &str;
    fn decide(&self, state: &OnState, p: Pos) -> Decision;
}

/// Assigns to the feasible cluster with the smallest left end (ties by id);
/// opens only when nothing can take the point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl OnlineAlgorithm for Greedy {
    fn name(&self) -> &str {
        "greedy"
    }

    fn decide(&self, state: &OnState, p: Pos) -> Decision {
        state
            .feasible_decisions(p)
            .into_iter()
            .filter_map(|d| match d {
                Decision::Assign(id) => Some(id),
                Decision::Open => None,
            })
            .min_by_key(|id| (state.clusters[id.0].lo, *id))
            .map_or(Decision::Open, Decision::Assign)
    }
}

/// One cluster per unit cell `[k, k + 1)`; never assigns across cells.
#[derive(Debug, Clone, Copy, Default)]
pub struct Grid;

impl Grid {
    pub fn cell(p: Pos, unit: i64) -> i64 {
        p.0.div_euclid(unit)
    }
}

impl OnlineAlgorithm for Grid {
    fn name(&self) -> &str {
        "grid"
    }

    fn decide(&self, state: &OnState, p: Pos) -> Decision {
        let unit = state.unit();
        let cell = Grid::cell(p, unit);
        state
            .clusters
            .iter()
            .find(|c| Grid::cell(c.lo, unit) == cell)
            .map_or(Decision::Open, |c| Decision::Assign(c.id))
    }
}

/// Replays a fixed decision list, indexed by how many points were given.
/// A point that does not match the script yields an unknown-cluster
/// decision, which the game driver rejects as illegal.
#[derive(Debug, Clone)]
pub struct Scripted {
    pub steps: Vec<(Pos, Decision)>,
}

impl OnlineAlgorithm for Scripted {
    fn name(&self) -> &str {
        "scripted"
    }

    fn decide(&self, state: &OnState, p: Pos) -> Decision {
        match self.steps.get(state.points.len()) {
            Some(&(q, d)) if q == p => d,
            _ => Decision::Assign(ClusterId(usize::MAX)),
        }
    }
}

pub fn by_name(name: &str) -> Option<Box<dyn OnlineAlgorithm>> {
    match name {
        "greedy" => Some(Box::new(Greedy)),
        "grid" => Some(Box::new(Grid)),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("algorithm {algorithm} made an illegal move at step {step}: {source}")]
    IllegalMove {
        algorithm: String,
        step: usize,
        #[source]
        source: ModelError,
    },
}

/// Feeds `p` to `alg` and applies its answer, recording the step.
pub(crate) fn step(
    alg: &dyn OnlineAlgorithm,
    state: &OnState,
    p: Pos,
    trace: &mut Trace,
) -> Result<OnState, RunError> {
    let d = alg.decide(state, p);
    let next = state.apply(p, d).map_err(|source| RunError::IllegalMove {
        algorithm: alg.name().to_string(),
        step: state.points.len() + 1,
        source,
    })?;
    trace.record(&next, d);
    Ok(next)
}

/// Runs `alg` on a fixed point sequence.
pub fn run(alg: &dyn OnlineAlgorithm, points: &[Pos], scale: Scale) -> Result<Trace, RunError> {
    let mut trace = Trace::new(scale);
    let mut state = OnState::new(scale);
    for &p in points {
        state = step(alg, &state, p, &mut trace)?;
    }
    Ok(trace)
}
