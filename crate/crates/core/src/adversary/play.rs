use thiserror::Error;

use super::tree::{apply_branch, resolve, Node, StrategyTree, TreeError};
use crate::algorithms::{step, OnlineAlgorithm, RunError, Scripted};
use crate::model::{Decision, ModelError, OnState};
use crate::pos::Pos;
use crate::trace::Trace;

#[derive(Debug, Error)]
pub enum PlayError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("node {node:?}: no branch matches decision {decision}")]
    Incomplete { node: String, decision: Decision },
}

/// Plays `alg` against the adversary `tree` and returns the full trace,
/// ending at the leaf the algorithm's choices led to.
pub fn play(tree: &StrategyTree, alg: &dyn OnlineAlgorithm) -> Result<Trace, PlayError> {
    tree.validate()?;
    let mut trace = Trace::new(tree.scale);
    let mut state = OnState::new(tree.scale);
    let mut id = tree.root.clone();
    loop {
        match &tree.nodes[&id] {
            Node::Give { pos, branches } => {
                let d = alg.decide(&state, *pos);
                if !state.is_feasible(*pos, d) {
                    // Surface the precise reason through the normal path.
                    let source = state.apply(*pos, d).map(|_| ()).unwrap_err();
                    return Err(illegal(alg, &state, source).into());
                }
                let branch = resolve(branches, &state, d).ok_or_else(|| PlayError::Incomplete {
                    node: id.clone(),
                    decision: d,
                })?;
                state = apply_branch(&state, *pos, d, branch)
                    .map_err(|source| illegal(alg, &state, source))?;
                trace.record(&state, d);
                id = branch.child.clone();
            }
            Node::Volley { points, leaf } => {
                for &p in points {
                    state = step(alg, &state, p, &mut trace)?;
                }
                trace.leaf = Some(leaf.tag.clone());
                return Ok(trace);
            }
            Node::Leaf(leaf) => {
                trace.leaf = Some(leaf.tag.clone());
                return Ok(trace);
            }
        }
    }
}

fn illegal(alg: &dyn OnlineAlgorithm, state: &OnState, source: ModelError) -> RunError {
    RunError::IllegalMove {
        algorithm: alg.name().to_string(),
        step: state.points.len() + 1,
        source,
    }
}

/// Replays a fixed decision path (for example a verifier witness) through
/// the tree.
pub fn replay_path(tree: &StrategyTree, steps: &[(Pos, Decision)]) -> Result<Trace, PlayError> {
    let trace = play(
        tree,
        &Scripted {
            steps: steps.to_vec(),
        },
    )?;
    if trace.events.len() != steps.len() {
        return Err(PlayError::Run(RunError::IllegalMove {
            algorithm: "scripted".into(),
            step: trace.events.len() + 1,
            source: ModelError::IllegalMove {
                step: trace.events.len() + 1,
                decision: Decision::Open,
                reason: "path does not end at the leaf the tree reached",
            },
        }));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::builtin::builtin_kk13;
    use crate::adversary::tree::{Branch, LeafInfo, Matcher};
    use crate::algorithms::{Greedy, Grid};
    use crate::pos::Scale;
    use crate::ratio::Ratio;
    use std::collections::BTreeMap;

    #[test]
    fn greedy_falls_into_second_leaf() {
        let t = play(&builtin_kk13(), &Greedy).unwrap();
        assert_eq!(t.leaf.as_deref(), Some("L2"));
        assert_eq!((t.on_cost(), t.opt_cost()), (5, 3));
        assert_eq!(t.final_ratio(), Some(Ratio::new(5, 3).unwrap()));
        t.replay().unwrap();
    }

    #[test]
    fn grid_forced_to_at_least_13_8() {
        let t = play(&builtin_kk13(), &Grid).unwrap();
        assert!(t.final_ratio().unwrap() >= Ratio::new(13, 8).unwrap());
        assert_eq!(t.leaf.as_deref(), Some("L1"));
        t.replay().unwrap();
    }

    #[test]
    fn single_point_tree() {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            "g".to_string(),
            Node::Give {
                pos: Pos(0),
                branches: vec![Branch {
                    matcher: Matcher::Otherwise,
                    child: "end".into(),
                }],
            },
        );
        nodes.insert(
            "end".to_string(),
            Node::Leaf(LeafInfo {
                tag: "end".into(),
                expected_min_ratio: None,
            }),
        );
        let tree = StrategyTree {
            scale: Scale::default(),
            root: "g".into(),
            nodes,
        };
        for alg in [&Greedy as &dyn OnlineAlgorithm, &Grid] {
            let t = play(&tree, alg).unwrap();
            assert_eq!(t.final_ratio(), Some(Ratio::ONE));
        }
    }

    #[test]
    fn replaying_a_trace_path_reproduces_it() {
        let tree = builtin_kk13();
        let t = play(&tree, &Greedy).unwrap();
        let again = replay_path(&tree, &t.decisions()).unwrap();
        assert_eq!(t, again);
        assert!(replay_path(&tree, &t.decisions()[..3]).is_err());
    }
}
