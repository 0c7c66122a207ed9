//! Helpers shared by the integration tests: independent oracles that do not
//! go through the library code they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::Rng;

use unit_cluster::adversary::{Branch, LeafInfo, Matcher, Node, StrategyTree};
use unit_cluster::{ClusterId, Decision, OnState, Pos, Ratio, Scale};

pub fn s10() -> Scale {
    Scale::default()
}

pub fn pts(xs: &[&str]) -> Vec<Pos> {
    xs.iter().map(|x| s10().parse(x).unwrap()).collect()
}

/// Largest set of points pairwise more than one unit apart. Every unit
/// interval holds at most one of them, and for points on a line this
/// packing number equals the minimum cover size.
pub fn packing_number(points: &[Pos], unit: i64) -> usize {
    let mut v: Vec<i64> = points.iter().map(|p| p.0).collect();
    v.sort_unstable();
    v.dedup();
    let n = v.len();
    assert!(n <= 16, "packing oracle is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let chosen: Vec<i64> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| v[i])
            .collect();
        if chosen.windows(2).all(|w| w[1] - w[0] > unit) {
            best = best.max(chosen.len());
        }
    }
    best
}

/// Minimum unit-interval cover by trying every assignment of sorted
/// distinct points into consecutive blocks of span at most one.
pub fn cover_by_blocks(points: &[Pos], unit: i64) -> usize {
    let mut v: Vec<i64> = points.iter().map(|p| p.0).collect();
    v.sort_unstable();
    v.dedup();
    // best[i] = fewest intervals covering v[i..]
    let n = v.len();
    let mut best = vec![usize::MAX; n + 1];
    best[n] = 0;
    for i in (0..n).rev() {
        for j in i..n {
            if v[j] - v[i] > unit {
                break;
            }
            best[i] = best[i].min(1 + best[j + 1]);
        }
    }
    best[0]
}

pub fn exact_ratio(on: usize, opt: usize) -> Ratio {
    Ratio::new(on as u64, opt as u64).unwrap()
}

/// Everything the naive enumerator learns about a tree.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Enumeration {
    /// Minimum ratio per terminal over every path with at least one point.
    pub leaf_min: BTreeMap<String, Ratio>,
    pub overall_min: Option<Ratio>,
    /// Give-node decisions that no branch accepts.
    pub gaps: BTreeSet<(String, Decision)>,
    pub paths: u64,
}

/// Walks every feasible decision sequence with no pruning, deduplication or
/// shared label logic: labels are tracked in a side map, not on clusters.
pub fn enumerate(tree: &StrategyTree) -> Enumeration {
    let mut out = Enumeration::default();
    walk(
        tree,
        &tree.root,
        OnState::new(tree.scale),
        BTreeMap::new(),
        &mut out,
    );
    out
}

fn pick<'a>(
    branches: &'a [Branch],
    labels: &BTreeMap<String, ClusterId>,
    d: Decision,
) -> Option<&'a Branch> {
    for b in branches {
        match (&b.matcher, d) {
            (Matcher::OpenAs(_), Decision::Open) => return Some(b),
            (Matcher::AssignTo(l), Decision::Assign(id)) if labels.get(l) == Some(&id) => {
                return Some(b)
            }
            _ => {}
        }
    }
    branches.iter().find(|b| b.matcher == Matcher::Otherwise)
}

fn walk(
    tree: &StrategyTree,
    id: &str,
    state: OnState,
    labels: BTreeMap<String, ClusterId>,
    out: &mut Enumeration,
) {
    match &tree.nodes[id] {
        Node::Give { pos, branches } => {
            for d in state.feasible_decisions(*pos) {
                let Some(b) = pick(branches, &labels, d) else {
                    out.gaps.insert((id.to_string(), d));
                    continue;
                };
                let next = state.apply(*pos, d).unwrap();
                let mut labels = labels.clone();
                if let (Matcher::OpenAs(l), Decision::Open) = (&b.matcher, d) {
                    if l != "_" {
                        labels.insert(l.clone(), ClusterId(next.clusters.len() - 1));
                    }
                }
                walk(tree, &b.child, next, labels, out);
            }
        }
        Node::Volley { points, .. } => volley(id, &state, points, out),
        Node::Leaf(_) => record(id, &state, out),
    }
}

fn volley(id: &str, state: &OnState, rest: &[Pos], out: &mut Enumeration) {
    match rest.split_first() {
        None => record(id, state, out),
        Some((&p, tail)) => {
            for d in state.feasible_decisions(p) {
                volley(id, &state.apply(p, d).unwrap(), tail, out);
            }
        }
    }
}

fn record(id: &str, state: &OnState, out: &mut Enumeration) {
    if state.points.is_empty() {
        return;
    }
    out.paths += 1;
    let r = exact_ratio(
        state.on_cost(),
        cover_by_blocks(&state.points, state.unit()),
    );
    let e = out.leaf_min.entry(id.to_string()).or_insert(r);
    *e = (*e).min(r);
    out.overall_min = Some(out.overall_min.map_or(r, |m| m.min(r)));
}

/// A random tree of give nodes over half-unit positions in `[0, 6]`, with
/// named and anonymous opens, assigns to labels bound higher up, optional
/// fallbacks (so some trees have gaps) and short volleys.
pub fn random_tree(rng: &mut StdRng, max_depth: usize) -> StrategyTree {
    let mut nodes = BTreeMap::new();
    let mut counter = 0;
    let root = grow(rng, &mut nodes, &mut counter, 0, max_depth, &[]);
    StrategyTree {
        scale: s10(),
        root,
        nodes,
    }
}

fn half_unit(rng: &mut StdRng) -> Pos {
    Pos(5 * rng.gen_range(0..=12))
}

fn grow(
    rng: &mut StdRng,
    nodes: &mut BTreeMap<String, Node>,
    counter: &mut usize,
    depth: usize,
    max_depth: usize,
    bound: &[String],
) -> String {
    *counter += 1;
    let id = format!("r{}", *counter);
    let tag = format!("T{}", *counter);
    let roll = rng.gen_range(0..10);
    if depth >= max_depth || (depth > 0 && roll < 3) {
        let node = if rng.gen_bool(0.7) {
            let k = rng.gen_range(0..=3);
            Node::Volley {
                points: (0..k).map(|_| half_unit(rng)).collect(),
                leaf: LeafInfo {
                    tag,
                    expected_min_ratio: None,
                },
            }
        } else {
            Node::Leaf(LeafInfo {
                tag,
                expected_min_ratio: None,
            })
        };
        nodes.insert(id.clone(), node);
        return id;
    }
    let pos = half_unit(rng);
    let mut branches = Vec::new();
    if rng.gen_bool(0.6) {
        let label = if rng.gen_bool(0.7) {
            format!("c{}", *counter)
        } else {
            "_".to_string()
        };
        let mut inner = bound.to_vec();
        if label != "_" {
            inner.push(label.clone());
        }
        let child = grow(rng, nodes, counter, depth + 1, max_depth, &inner);
        branches.push(Branch {
            matcher: Matcher::OpenAs(label),
            child,
        });
    }
    if !bound.is_empty() && rng.gen_bool(0.5) {
        let label = bound[rng.gen_range(0..bound.len())].clone();
        let child = grow(rng, nodes, counter, depth + 1, max_depth, bound);
        branches.push(Branch {
            matcher: Matcher::AssignTo(label),
            child,
        });
    }
    if branches.is_empty() || rng.gen_bool(0.85) {
        let child = grow(rng, nodes, counter, depth + 1, max_depth, bound);
        branches.push(Branch {
            matcher: Matcher::Otherwise,
            child,
        });
    }
    nodes.insert(id.clone(), Node::Give { pos, branches });
    id
}
