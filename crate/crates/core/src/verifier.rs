//! Exhaustive verification of adversary strategy trees.
//!
//! Every lazy deterministic algorithm is a choice of one feasible decision
//! per point, so enumerating all feasible decisions along the tree covers
//! every deterministic algorithm at once. A tree forces ratio `r` iff every
//! complete path ends with `C_ON / C_OPT >= r`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::tree::{apply_branch, resolve, Node, NodeId, StrategyTree, TreeError};
use crate::model::{ClusterId, Decision, OnState};
use crate::opt::{opt_count, ratio};
use crate::pos::{CoordError, Pos, Scale};
use crate::ratio::Ratio;

pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// Give nodes this close to the root fan out across workers.
const PARALLEL_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Skip volley decisions whose state is dominated by an earlier sibling.
    pub prune: bool,
    /// Explore sibling decisions that lead to identical states only once.
    pub dedup: bool,
    pub jobs: usize,
    pub node_cap: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            prune: true,
            dedup: true,
            jobs: 1,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Verified,
    Failed,
    Incomplete,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Verified => "VERIFIED",
            Verdict::Failed => "FAILED",
            Verdict::Incomplete => "INCOMPLETE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafRecord {
    pub node: NodeId,
    pub tag: String,
    pub expected: Option<Ratio>,
    pub min_ratio: Ratio,
    /// Costs on the first path that attains `min_ratio`.
    pub on_cost: usize,
    pub opt_cost: usize,
    pub paths: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub leaf: NodeId,
    pub tag: String,
    pub ratio: Ratio,
    pub on_cost: usize,
    pub opt_cost: usize,
    pub steps: Vec<(Pos, Decision)>,
}

/// A feasible decision at a give node that no branch accepts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gap {
    pub node: NodeId,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyStats {
    pub explored: u64,
    pub paths: u64,
    pub deduped: u64,
    pub pruned: u64,
}

impl VerifyStats {
    fn add(&mut self, o: &VerifyStats) {
        self.explored += o.explored;
        self.paths += o.paths;
        self.deduped += o.deduped;
        self.pruned += o.pruned;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub target: Ratio,
    pub scale: Scale,
    pub overall_min_ratio: Option<Ratio>,
    /// Reached terminals in breadth-first tree order.
    pub leaves: Vec<LeafRecord>,
    /// Terminals no complete path with at least one point reached.
    pub unreached: Vec<NodeId>,
    /// First path in exploration order attaining `overall_min_ratio`.
    pub witness: Option<Witness>,
    pub gaps: Vec<Gap>,
    /// The node cap was hit; everything above is partial.
    pub aborted: bool,
    pub stats: VerifyStats,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DominanceError {
    #[error("states differ in online cost ({0} vs {1})")]
    CostMismatch(usize, usize),
    #[error("states were given different points")]
    PointMismatch,
}

fn reach_within(inner: (Pos, Pos), outer: (Pos, Pos)) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

/// True if some perfect matching pairs each cluster of `b` with a cluster
/// of `a` carrying the same label and whose reach contains `b`'s reach.
/// Whatever the algorithm can still do from `b`, it can then also do from
/// `a`, so `b` never beats `a`.
pub fn check_dominance(a: &OnState, b: &OnState) -> Result<bool, DominanceError> {
    if a.on_cost() != b.on_cost() {
        return Err(DominanceError::CostMismatch(a.on_cost(), b.on_cost()));
    }
    let mut pa = a.points.clone();
    let mut pb = b.points.clone();
    pa.sort_unstable();
    pb.sort_unstable();
    if pa != pb {
        return Err(DominanceError::PointMismatch);
    }
    let ua = a.unit();
    let ub = b.unit();
    let n = a.clusters.len();
    let edges: Vec<Vec<usize>> = b
        .clusters
        .iter()
        .map(|cb| {
            a.clusters
                .iter()
                .enumerate()
                .filter(|(_, ca)| ca.label == cb.label && reach_within(cb.reach(ub), ca.reach(ua)))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    // Kuhn's augmenting paths.
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        v: usize,
        edges: &[Vec<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &u in &edges[v] {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            if owner[u].is_none_or(|w| augment(w, edges, owner, seen)) {
                owner[u] = Some(v);
                return true;
            }
        }
        false
    }
    for v in 0..b.clusters.len() {
        let mut seen = vec![false; n];
        if !augment(v, &edges, &mut owner, &mut seen) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
struct LeafAgg {
    min: Ratio,
    on: usize,
    opt: usize,
    paths: u64,
}

#[derive(Debug, Clone)]
struct Best {
    ratio: Ratio,
    leaf: NodeId,
    on: usize,
    opt: usize,
    steps: Vec<(Pos, Decision)>,
}

#[derive(Debug, Clone, Default)]
struct Summary {
    leaves: BTreeMap<NodeId, LeafAgg>,
    best: Option<Best>,
    gaps: Vec<Gap>,
    stats: VerifyStats,
}

impl Summary {
    /// Folds `later` into `self`; on ties the earlier path wins, so the
    /// result does not depend on how work was split.
    fn merge(&mut self, later: Summary) {
        for (id, agg) in later.leaves {
            match self.leaves.get_mut(&id) {
                Some(cur) => {
                    cur.paths += agg.paths;
                    if agg.min < cur.min {
                        cur.min = agg.min;
                        cur.on = agg.on;
                        cur.opt = agg.opt;
                    }
                }
                None => {
                    self.leaves.insert(id, agg);
                }
            }
        }
        if let Some(b) = later.best {
            if self.best.as_ref().is_none_or(|cur| b.ratio < cur.ratio) {
                self.best = Some(b);
            }
        }
        self.gaps.extend(later.gaps);
        self.stats.add(&later.stats);
    }

    fn finish_path(&mut self, leaf: &NodeId, state: &OnState, steps: &[(Pos, Decision)]) {
        self.stats.paths += 1;
        let opt = opt_count(&state.points, state.scale);
        let Ok(r) = ratio(state.on_cost(), opt) else {
            return;
        };
        let on = state.on_cost();
        self.merge(Summary {
            leaves: BTreeMap::from([(
                leaf.clone(),
                LeafAgg {
                    min: r,
                    on,
                    opt,
                    paths: 1,
                },
            )]),
            best: Some(Best {
                ratio: r,
                leaf: leaf.clone(),
                on,
                opt,
                steps: steps.to_vec(),
            }),
            gaps: Vec::new(),
            stats: VerifyStats::default(),
        });
    }
}

struct Walker<'a> {
    tree: &'a StrategyTree,
    opts: VerifyOptions,
    explored: AtomicU64,
    aborted: AtomicBool,
}

impl Walker<'_> {
    /// Counts one visited state; false once the cap is exhausted.
    fn tick(&self, sum: &mut Summary) -> bool {
        if self.aborted.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.explored.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.opts.node_cap {
            self.aborted.store(true, Ordering::Relaxed);
            return false;
        }
        sum.stats.explored += 1;
        true
    }

    fn node(
        &self,
        id: &NodeId,
        state: &OnState,
        steps: &mut Vec<(Pos, Decision)>,
        depth: usize,
    ) -> Summary {
        let mut sum = Summary::default();
        match &self.tree.nodes[id] {
            Node::Leaf(_) => sum.finish_path(id, state, steps),
            Node::Volley { points, .. } => self.volley(id, points, state, steps, &mut sum),
            Node::Give { pos, branches } => {
                let mut children: Vec<(Decision, &NodeId, OnState)> = Vec::new();
                let mut seen: HashSet<(&NodeId, crate::model::StateKey)> = HashSet::new();
                for d in state.feasible_decisions(*pos) {
                    let Some(branch) = resolve(branches, state, d) else {
                        sum.gaps.push(Gap {
                            node: id.clone(),
                            decision: d,
                        });
                        continue;
                    };
                    let next = apply_branch(state, *pos, d, branch)
                        .expect("feasible decisions always apply");
                    if self.opts.dedup && !seen.insert((&branch.child, next.key())) {
                        sum.stats.deduped += 1;
                        continue;
                    }
                    children.push((d, &branch.child, next));
                }
                let explore = |(d, child, next): &(Decision, &NodeId, OnState),
                               steps: &mut Vec<(Pos, Decision)>| {
                    let mut part = Summary::default();
                    if !self.tick(&mut part) {
                        return part;
                    }
                    steps.push((*pos, *d));
                    part.merge(self.node(child, next, steps, depth + 1));
                    steps.pop();
                    part
                };
                if self.opts.jobs > 1 && depth < PARALLEL_DEPTH && children.len() > 1 {
                    let parts: Vec<Summary> = children
                        .par_iter()
                        .map(|c| explore(c, &mut steps.clone()))
                        .collect();
                    for p in parts {
                        sum.merge(p);
                    }
                } else {
                    for c in &children {
                        let part = explore(c, steps);
                        sum.merge(part);
                    }
                }
            }
        }
        sum
    }

    fn volley(
        &self,
        leaf: &NodeId,
        points: &[Pos],
        state: &OnState,
        steps: &mut Vec<(Pos, Decision)>,
        sum: &mut Summary,
    ) {
        let Some((&p, rest)) = points.split_first() else {
            sum.finish_path(leaf, state, steps);
            return;
        };
        let mut explored: Vec<OnState> = Vec::new();
        let mut seen = HashSet::new();
        for d in state.feasible_decisions(p) {
            let next = state.apply(p, d).expect("feasible decisions always apply");
            if self.opts.dedup && !seen.insert(next.key()) {
                sum.stats.deduped += 1;
                continue;
            }
            if self.opts.prune
                && explored
                    .iter()
                    .any(|a| a.on_cost() == next.on_cost() && check_dominance(a, &next) == Ok(true))
            {
                sum.stats.pruned += 1;
                continue;
            }
            if !self.tick(sum) {
                return;
            }
            steps.push((p, d));
            self.volley(leaf, rest, &next, steps, sum);
            steps.pop();
            explored.push(next);
        }
    }
}

/// Enumerates every feasible algorithm behavior against `tree` and checks
/// that each complete path forces at least `target`.
///
/// A path strictly below `target` makes the verdict `FAILED`. Otherwise any
/// uncovered decision or an exhausted node cap makes it `INCOMPLETE`. A tree
/// without a single scored path forces nothing and also fails.
pub fn verify(
    tree: &StrategyTree,
    target: Ratio,
    opts: VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    tree.validate()?;
    let walker = Walker {
        tree,
        opts,
        explored: AtomicU64::new(0),
        aborted: AtomicBool::new(false),
    };
    let state = OnState::new(tree.scale);
    let run = || walker.node(&tree.root, &state, &mut Vec::new(), 0);
    let sum = if opts.jobs > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| VerifyError::Pool(e.to_string()))?
            .install(run)
    } else {
        run()
    };
    let aborted = walker.aborted.load(Ordering::Relaxed);

    let mut gaps = Vec::new();
    let mut seen = HashSet::new();
    for g in sum.gaps {
        if seen.insert(g.clone()) {
            gaps.push(g);
        }
    }

    let mut leaves = Vec::new();
    let mut unreached = Vec::new();
    for id in tree.terminals() {
        let info = tree.nodes[&id].leaf_info().expect("terminal");
        match sum.leaves.get(&id) {
            Some(agg) => leaves.push(LeafRecord {
                node: id.clone(),
                tag: info.tag.clone(),
                expected: info.expected_min_ratio,
                min_ratio: agg.min,
                on_cost: agg.on,
                opt_cost: agg.opt,
                paths: agg.paths,
            }),
            None => unreached.push(id),
        }
    }

    let overall = sum.best.as_ref().map(|b| b.ratio);
    let verdict = match overall {
        Some(r) if r < target => Verdict::Failed,
        _ if aborted || !gaps.is_empty() => Verdict::Incomplete,
        None => Verdict::Failed,
        Some(_) => Verdict::Verified,
    };
    let witness = sum.best.map(|b| Witness {
        tag: tree.nodes[&b.leaf]
            .leaf_info()
            .expect("terminal")
            .tag
            .clone(),
        leaf: b.leaf,
        ratio: b.ratio,
        on_cost: b.on,
        opt_cost: b.opt,
        steps: b.steps,
    });
    Ok(VerificationReport {
        verdict,
        target,
        scale: tree.scale,
        overall_min_ratio: overall,
        leaves,
        unreached,
        witness,
        gaps,
        aborted,
        stats: sum.stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafStatus {
    Match,
    Mismatch,
    Unannotated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafStat {
    pub node: NodeId,
    pub tag: String,
    pub expected: Option<Ratio>,
    pub computed: Ratio,
    pub status: LeafStatus,
}

/// Computed per-leaf minima against the tree's annotations.
pub fn leaf_stats(report: &VerificationReport) -> Vec<LeafStat> {
    report
        .leaves
        .iter()
        .map(|l| LeafStat {
            node: l.node.clone(),
            tag: l.tag.clone(),
            expected: l.expected,
            computed: l.min_ratio,
            status: match l.expected {
                None => LeafStatus::Unannotated,
                Some(e) if e == l.min_ratio => LeafStatus::Match,
                Some(_) => LeafStatus::Mismatch,
            },
        })
        .collect()
}

pub fn format_leaf_stats(stats: &[LeafStat]) -> String {
    let mut out = String::new();
    for s in stats {
        let expected = s.expected.map_or("-".to_string(), |r| r.to_string());
        let status = match s.status {
            LeafStatus::Match => "ok",
            LeafStatus::Mismatch => "MISMATCH",
            LeafStatus::Unannotated => "unannotated",
        };
        let _ = writeln!(
            out,
            "leaf={} tag={} expected={expected} computed={} status={status}",
            s.node, s.tag, s.computed
        );
    }
    out
}

#[derive(Serialize, Deserialize)]
pub struct StepFile {
    pub point: String,
    pub decision: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct LeafFile {
    node: String,
    tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected: Option<Ratio>,
    min_ratio: Ratio,
    on_cost: usize,
    opt_cost: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    paths: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct WitnessFile {
    leaf: String,
    tag: String,
    ratio: Ratio,
    on_cost: usize,
    opt_cost: usize,
    steps: Vec<StepFile>,
}

#[derive(Serialize, Deserialize)]
struct GapFile {
    node: String,
    decision: StepDecision,
}

#[derive(Serialize, Deserialize)]
struct StepDecision {
    decision: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct StatsFile {
    explored: u64,
    paths: u64,
    deduped: u64,
    pruned: u64,
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    verdict: Verdict,
    target: Ratio,
    scale: i64,
    overall_min_ratio: Option<Ratio>,
    leaves: Vec<LeafFile>,
    unreached: Vec<String>,
    witness: Option<WitnessFile>,
    gaps: Vec<GapFile>,
    aborted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<StatsFile>,
}

fn decision_fields(d: Decision) -> (String, Option<usize>) {
    match d {
        Decision::Open => ("open".into(), None),
        Decision::Assign(c) => ("assign".into(), Some(c.0)),
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad scale in report: {0}")]
    Scale(CoordError),
    #[error("witness step {index}: {detail}")]
    Step { index: usize, detail: String },
}

impl VerificationReport {
    /// JSON form. Without counters the output depends only on values, which
    /// is what pruning and scheduling must leave unchanged.
    pub fn to_json(&self, counters: bool) -> String {
        let scale = self.scale;
        let file = ReportFile {
            verdict: self.verdict,
            target: self.target,
            scale: scale.unit(),
            overall_min_ratio: self.overall_min_ratio,
            leaves: self
                .leaves
                .iter()
                .map(|l| LeafFile {
                    node: l.node.clone(),
                    tag: l.tag.clone(),
                    expected: l.expected,
                    min_ratio: l.min_ratio,
                    on_cost: l.on_cost,
                    opt_cost: l.opt_cost,
                    paths: counters.then_some(l.paths),
                })
                .collect(),
            unreached: self.unreached.clone(),
            witness: self.witness.as_ref().map(|w| WitnessFile {
                leaf: w.leaf.clone(),
                tag: w.tag.clone(),
                ratio: w.ratio,
                on_cost: w.on_cost,
                opt_cost: w.opt_cost,
                steps: w
                    .steps
                    .iter()
                    .map(|&(p, d)| {
                        let (decision, cluster) = decision_fields(d);
                        StepFile {
                            point: scale.format(p),
                            decision,
                            cluster,
                        }
                    })
                    .collect(),
            }),
            gaps: self
                .gaps
                .iter()
                .map(|g| {
                    let (decision, cluster) = decision_fields(g.decision);
                    GapFile {
                        node: g.node.clone(),
                        decision: StepDecision { decision, cluster },
                    }
                })
                .collect(),
            aborted: self.aborted,
            stats: counters.then_some(StatsFile {
                explored: self.stats.explored,
                paths: self.stats.paths,
                deduped: self.stats.deduped,
                pruned: self.stats.pruned,
            }),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("reports serialize");
        out.push('\n');
        out
    }

    pub fn summary_lines(&self) -> String {
        let mut out = String::new();
        let min = self
            .overall_min_ratio
            .map_or("none".to_string(), |r| r.to_string());
        let _ = writeln!(out, "{} min={min}", self.verdict);
        let _ = writeln!(out, "verdict={}", self.verdict);
        let _ = writeln!(out, "target={}", self.target);
        let _ = writeln!(out, "overall_min_ratio={min}");
        if let Some(w) = &self.witness {
            let _ = writeln!(out, "witness_leaf={}", w.tag);
            let _ = writeln!(out, "witness_on_cost={}", w.on_cost);
            let _ = writeln!(out, "witness_opt_cost={}", w.opt_cost);
            let _ = writeln!(out, "witness_steps={}", w.steps.len());
        }
        let _ = writeln!(out, "leaves={}", self.leaves.len());
        let _ = writeln!(out, "gaps={}", self.gaps.len());
        for g in &self.gaps {
            let _ = writeln!(out, "gap={} {}", g.node, g.decision);
        }
        let _ = writeln!(out, "aborted={}", self.aborted);
        let _ = writeln!(out, "explored={}", self.stats.explored);
        let _ = writeln!(out, "paths={}", self.stats.paths);
        out
    }
}

/// Reads the witness decision list back out of a report file.
pub fn parse_witness(report_json: &str) -> Result<Option<Vec<(Pos, Decision)>>, ReportError> {
    let file: ReportFile = serde_json::from_str(report_json)?;
    let scale = Scale::new(file.scale).map_err(ReportError::Scale)?;
    let Some(w) = file.witness else {
        return Ok(None);
    };
    w.steps
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let p = scale.parse(&s.point).map_err(|e| ReportError::Step {
                index,
                detail: e.to_string(),
            })?;
            let d = match (s.decision.as_str(), s.cluster) {
                ("open", None) => Decision::Open,
                ("assign", Some(c)) => Decision::Assign(ClusterId(c)),
                (other, _) => {
                    return Err(ReportError::Step {
                        index,
                        detail: format!("bad decision {other:?}"),
                    })
                }
            };
            Ok((p, d))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}
