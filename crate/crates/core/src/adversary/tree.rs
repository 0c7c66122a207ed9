use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::model::{Decision, OnState};
use crate::pos::{Pos, Scale};
use crate::ratio::Ratio;

pub type NodeId = String;

/// Label used by `OpenAs` when the tree does not need to name the cluster.
pub const ANONYMOUS: &str = "_";

/// What an edge out of a `Give` node expects the algorithm to have done.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Matcher {
    /// Opened a new cluster, which is bound to the label from now on.
    OpenAs(String),
    /// Assigned the cluster bound to the label.
    AssignTo(String),
    /// Any feasible decision no explicit matcher accepted.
    Otherwise,
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Matcher::OpenAs(l) => write!(f, "open {l}"),
            Matcher::AssignTo(l) => write!(f, "assign {l}"),
            Matcher::Otherwise => f.write_str("otherwise"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub matcher: Matcher,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafInfo {
    pub tag: String,
    /// Claimed minimum of `C_ON / C_OPT` over every way to reach this leaf.
    /// Checked by the verifier, never trusted.
    pub expected_min_ratio: Option<Ratio>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Give { pos: Pos, branches: Vec<Branch> },
    Volley { points: Vec<Pos>, leaf: LeafInfo },
    Leaf(LeafInfo),
}

impl Node {
    pub fn leaf_info(&self) -> Option<&LeafInfo> {
        match self {
            Node::Give { .. } => None,
            Node::Volley { leaf, .. } | Node::Leaf(leaf) => Some(leaf),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.leaf_info().is_some()
    }
}

/// An adaptive adversary: a rooted DAG of `Give`, `Volley` and `Leaf` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyTree {
    pub scale: Scale,
    pub root: NodeId,
    pub nodes: BTreeMap<NodeId, Node>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("root node {0:?} does not exist")]
    MissingRoot(NodeId),
    #[error("node {node:?}: child {child:?} does not exist")]
    MissingChild { node: NodeId, child: NodeId },
    #[error("node {node:?}: cycle back to {child:?}")]
    Cycle { node: NodeId, child: NodeId },
    #[error("node {node:?}: label {label:?} is not bound on some path to this node")]
    UnboundLabel { node: NodeId, label: String },
    #[error("node {node:?}: label {label:?} is bound twice on one root path")]
    Rebound { node: NodeId, label: String },
    #[error("node {node:?}: give node has no branches")]
    NoBranches { node: NodeId },
    #[error("node {node:?}: {detail}")]
    Schema { node: NodeId, detail: String },
}

/// The branch a decision takes, or `None` if the tree has no answer for it.
/// Explicit matchers win over `Otherwise`.
pub fn resolve<'a>(branches: &'a [Branch], state: &OnState, d: Decision) -> Option<&'a Branch> {
    let explicit = branches.iter().find(|b| match (&b.matcher, d) {
        (Matcher::OpenAs(_), Decision::Open) => true,
        (Matcher::AssignTo(l), Decision::Assign(id)) => state
            .cluster(id)
            .and_then(|c| c.label.as_deref())
            .is_some_and(|bound| bound == l),
        _ => false,
    });
    explicit.or_else(|| branches.iter().find(|b| b.matcher == Matcher::Otherwise))
}

/// Applies `d` and, when the taken branch opens a named cluster, binds the
/// name to it.
pub fn apply_branch(
    state: &OnState,
    p: Pos,
    d: Decision,
    branch: &Branch,
) -> Result<OnState, crate::model::ModelError> {
    let next = state.apply(p, d)?;
    Ok(match (&branch.matcher, d) {
        (Matcher::OpenAs(l), Decision::Open) if l != ANONYMOUS => {
            let id = *next.assignment.last().expect("just applied");
            next.with_label(id, l.clone())
        }
        _ => next,
    })
}

impl StrategyTree {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    fn children(&self, id: &str) -> impl Iterator<Item = &Branch> {
        match self.nodes.get(id) {
            Some(Node::Give { branches, .. }) => branches.iter(),
            _ => [].iter(),
        }
    }

    /// Reachable node ids in breadth-first order, each listed once.
    pub fn node_order(&self) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::from([self.root.clone()]);
        while let Some(id) = queue.pop_front() {
            if !self.nodes.contains_key(&id) || !seen.insert(id.clone()) {
                continue;
            }
            queue.extend(self.children(&id).map(|b| b.child.clone()));
            out.push(id);
        }
        out
    }

    /// Reachable terminal nodes (volleys and leaves) in breadth-first order.
    pub fn terminals(&self) -> Vec<NodeId> {
        self.node_order()
            .into_iter()
            .filter(|id| self.nodes[id].is_terminal())
            .collect()
    }

    pub fn give_count(&self) -> usize {
        self.nodes
            .values()
            .filter(|n| matches!(n, Node::Give { .. }))
            .count()
    }

    /// Structural checks: references resolve, the graph is acyclic, every
    /// `AssignTo` label is bound on some path to its node and no label is
    /// bound twice on one path.
    pub fn validate(&self) -> Result<(), TreeError> {
        if !self.nodes.contains_key(&self.root) {
            return Err(TreeError::MissingRoot(self.root.clone()));
        }
        for (id, node) in &self.nodes {
            if let Node::Give { branches, .. } = node {
                if branches.is_empty() {
                    return Err(TreeError::NoBranches { node: id.clone() });
                }
                for b in branches {
                    if !self.nodes.contains_key(&b.child) {
                        return Err(TreeError::MissingChild {
                            node: id.clone(),
                            child: b.child.clone(),
                        });
                    }
                }
            }
        }
        self.check_acyclic()?;
        self.check_labels()
    }

    fn check_acyclic(&self) -> Result<(), TreeError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color: BTreeMap<&str, u8> = BTreeMap::new();
        let mut stack: Vec<(&str, usize)> = vec![(self.root.as_str(), 0)];
        color.insert(&self.root, 1);
        while let Some((id, i)) = stack.pop() {
            let branches: Vec<&Branch> = self.children(id).collect();
            if i < branches.len() {
                stack.push((id, i + 1));
                let child = branches[i].child.as_str();
                match color.get(child).copied().unwrap_or(0) {
                    0 => {
                        color.insert(child, 1);
                        stack.push((child, 0));
                    }
                    1 => {
                        return Err(TreeError::Cycle {
                            node: id.to_string(),
                            child: child.to_string(),
                        })
                    }
                    _ => {}
                }
            } else {
                color.insert(id, 2);
            }
        }
        Ok(())
    }

    fn check_labels(&self) -> Result<(), TreeError> {
        let mut seen: HashSet<(String, BTreeSet<String>)> = HashSet::new();
        let mut stack = vec![(self.root.clone(), BTreeSet::new())];
        while let Some((id, bound)) = stack.pop() {
            if !seen.insert((id.clone(), bound.clone())) {
                continue;
            }
            let Some(Node::Give { branches, .. }) = self.nodes.get(&id) else {
                continue;
            };
            for b in branches {
                let mut next = bound.clone();
                match &b.matcher {
                    Matcher::OpenAs(l) if l != ANONYMOUS => {
                        if !next.insert(l.clone()) {
                            return Err(TreeError::Rebound {
                                node: id.clone(),
                                label: l.clone(),
                            });
                        }
                    }
                    Matcher::AssignTo(l) if !bound.contains(l) => {
                        return Err(TreeError::UnboundLabel {
                            node: id.clone(),
                            label: l.clone(),
                        });
                    }
                    _ => {}
                }
                stack.push((b.child.clone(), next));
            }
        }
        Ok(())
    }
}
