//! Minimax search for ratios an adversary can force on a discrete grid.
//!
//! The adversary places up to `max_points` points, each on the grid, after
//! seeing every earlier decision, and may stop whenever it likes. The
//! algorithm answers each point with any feasible decision. The value of a
//! state is
//!
//! ```text
//! V(s, k) = max( C_ON(s) / C_OPT(s),
//!                max over candidates p of min over decisions d of V(s + (p, d), k - 1) )
//! ```
//!
//! Restricting the adversary to a grid and a window only weakens it, so
//! every value found is a valid lower bound for the unrestricted game.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use dashmap::DashMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::io::save_tree;
use crate::adversary::tree::{Branch, LeafInfo, Matcher, Node, StrategyTree};
use crate::model::{Decision, OnState, StateKey};
use crate::opt::{opt_count, ratio};
use crate::pos::{Pos, Scale};
use crate::ratio::Ratio;

pub const DEFAULT_NODE_CAP: u64 = 50_000_000;

/// Max nodes this close to the root spread their candidates over workers.
const PARALLEL_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub scale: Scale,
    /// Candidate spacing in scaled steps.
    pub grid_step: i64,
    /// Widest allowed spread of all points, in scaled steps. The first point
    /// is drawn from `[0, window]`.
    pub window: i64,
    pub max_points: u32,
    /// Stop improving a state once this ratio is forced there.
    pub target: Option<Ratio>,
    pub node_cap: u64,
    pub jobs: usize,
    /// Bound-based cutoffs; never change the value.
    pub prune: bool,
    /// Transposition table keyed by canonical state; never changes the value.
    pub memo: bool,
}

impl SearchConfig {
    /// Grid step and window are given in scaled steps.
    pub fn new(scale: Scale, grid_step: i64, window: i64, max_points: u32) -> Self {
        SearchConfig {
            scale,
            grid_step,
            window,
            max_points,
            target: None,
            node_cap: DEFAULT_NODE_CAP,
            jobs: 1,
            prune: true,
            memo: true,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if self.grid_step < 1 {
            return bad("grid step must be at least 1");
        }
        if self.max_points < 1 {
            return bad("max points must be at least 1");
        }
        if self.window < 0 {
            return bad("window must be non-negative");
        }
        if self.window % self.grid_step != 0 {
            return bad("window must be a multiple of the grid step");
        }
        if self.jobs < 1 {
            return bad("jobs must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub value: Ratio,
    /// False when the node cap cut the search short; `value` is then only
    /// what was proven before stopping.
    pub exhaustive: bool,
    pub target_met: Option<bool>,
    pub strategy: StrategyTree,
    pub explored: u64,
    pub memo_hits: u64,
    /// Plain-text progress lines, one per completed first move.
    pub log: Vec<String>,
}

/// Grid positions the adversary may give next, ascending. Positions inside
/// an existing cluster are skipped: they are free for the algorithm and can
/// only raise the optimum.
pub fn candidate_points(state: &OnState, config: &SearchConfig) -> Vec<Pos> {
    let q = config.grid_step;
    let (lo, hi) = match (state.points.iter().min(), state.points.iter().max()) {
        (Some(&mn), Some(&mx)) => {
            let unit = state.unit();
            let lo = (mn.0 - unit).max(mx.0 - config.window);
            let hi = (mx.0 + unit).min(mn.0 + config.window);
            (lo, hi)
        }
        _ => (0, config.window),
    };
    let first = lo.div_euclid(q) * q + if lo.rem_euclid(q) == 0 { 0 } else { q };
    (0..)
        .map(|k| first + k * q)
        .take_while(|&x| x <= hi)
        .map(Pos)
        .filter(|&p| !state.is_covered(p))
        .collect()
}

/// Optimistic bound `(C_ON + remaining) / C_OPT`: the optimum never shrinks
/// and each remaining point adds at most one online cluster.
pub fn prune_bound(state: &OnState, remaining: u32) -> Option<Ratio> {
    let opt = opt_count(&state.points, state.scale);
    ratio(state.on_cost() + remaining as usize, opt).ok()
}

fn current_ratio(state: &OnState) -> Option<Ratio> {
    ratio(state.on_cost(), opt_count(&state.points, state.scale)).ok()
}

struct Abort;

struct Solver<'a> {
    config: &'a SearchConfig,
    memo: DashMap<(StateKey, u32), Option<Ratio>>,
    explored: AtomicU64,
    memo_hits: AtomicU64,
    aborted: AtomicBool,
    capped: bool,
}

impl Solver<'_> {
    fn tick(&self) -> Result<(), Abort> {
        if !self.capped {
            self.explored.fetch_add(1, Ordering::Relaxed);
            return Ok(());
        }
        if self.aborted.load(Ordering::Relaxed) {
            return Err(Abort);
        }
        if self.explored.fetch_add(1, Ordering::Relaxed) >= self.config.node_cap {
            self.aborted.store(true, Ordering::Relaxed);
            return Err(Abort);
        }
        Ok(())
    }

    fn target_reached(&self, best: Option<Ratio>) -> bool {
        matches!((self.config.target, best), (Some(t), Some(b)) if b >= t)
    }

    /// Worst case for the adversary after giving `p`: the algorithm's best
    /// reply. With `cutoff`, stops as soon as the result cannot exceed it.
    fn reply_value(
        &self,
        state: &OnState,
        p: Pos,
        remaining: u32,
        cutoff: Option<Ratio>,
        depth: usize,
    ) -> Result<Option<Ratio>, Abort> {
        let mut seen = HashSet::new();
        let mut worst: Option<Ratio> = None;
        for d in state.feasible_decisions(p) {
            let next = state.apply(p, d).expect("feasible decisions always apply");
            if !seen.insert(next.key_with(false)) {
                continue;
            }
            let v = self.value(&next, remaining - 1, depth + 1)?;
            worst = match (worst, v) {
                (Some(w), Some(v)) => Some(w.min(v)),
                (None, v) => v,
                (w, None) => w,
            };
            if let (Some(c), Some(w)) = (cutoff, worst) {
                if w <= c {
                    break;
                }
            }
        }
        Ok(worst)
    }

    /// Whether candidate `p` could beat `best` at all.
    fn promising(&self, state: &OnState, p: Pos, remaining: u32, best: Option<Ratio>) -> bool {
        let Some(b) = best.filter(|_| self.config.prune) else {
            return true;
        };
        let mut pts = state.points.clone();
        pts.push(p);
        let opt = opt_count(&pts, state.scale);
        ratio(state.on_cost() + remaining as usize, opt).is_ok_and(|bound| bound > b)
    }

    fn value(&self, state: &OnState, remaining: u32, depth: usize) -> Result<Option<Ratio>, Abort> {
        let key = self.config.memo.then(|| (state.key_with(false), remaining));
        if let Some(k) = &key {
            if let Some(v) = self.memo.get(k) {
                self.memo_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(*v);
            }
        }
        self.tick()?;
        let mut best = current_ratio(state);
        if remaining > 0 {
            let candidates = candidate_points(state, self.config);
            if self.config.jobs > 1 && depth < PARALLEL_DEPTH {
                let values: Vec<Result<Option<Ratio>, Abort>> = candidates
                    .par_iter()
                    .map(|&p| self.reply_value(state, p, remaining, None, depth))
                    .collect();
                // Fold in candidate order with the sequential rules so the
                // result cannot depend on scheduling.
                for (&p, v) in candidates.iter().zip(values) {
                    if self.target_reached(best) {
                        break;
                    }
                    if !self.promising(state, p, remaining, best) {
                        continue;
                    }
                    let v = v?;
                    if v > best {
                        best = v;
                    }
                }
            } else {
                let ceiling = prune_bound(state, remaining);
                for p in candidates {
                    if self.target_reached(best) {
                        break;
                    }
                    if self.config.prune && best.is_some() && best >= ceiling {
                        break;
                    }
                    if !self.promising(state, p, remaining, best) {
                        continue;
                    }
                    let cutoff = if self.config.prune { best } else { None };
                    let v = self.reply_value(state, p, remaining, cutoff, depth)?;
                    if v > best {
                        best = v;
                    }
                }
            }
        }
        if let Some(k) = key {
            self.memo.insert(k, best);
        }
        Ok(best)
    }
}

struct TreeBuilder<'a, 'b> {
    solver: &'a Solver<'b>,
    nodes: BTreeMap<String, Node>,
    next_id: usize,
}

impl TreeBuilder<'_, '_> {
    fn fresh(&mut self, prefix: char) -> String {
        let id = format!("{prefix}{}", self.next_id);
        self.next_id += 1;
        id
    }

    fn forces(&self, state: &OnState, remaining: u32, need: Ratio) -> bool {
        if current_ratio(state).is_some_and(|r| r >= need) {
            return true;
        }
        remaining > 0
            && matches!(self.solver.value(state, remaining, PARALLEL_DEPTH), Ok(Some(v)) if v >= need)
    }

    /// Emits a subtree forcing at least `need` from `state`, whose clusters
    /// carry labels `c<id>`.
    fn build(&mut self, state: &OnState, remaining: u32, need: Ratio) -> String {
        if let Some(r) = current_ratio(state).filter(|&r| r >= need) {
            let id = self.fresh('s');
            self.nodes.insert(
                id.clone(),
                Node::Leaf(LeafInfo {
                    tag: id.clone(),
                    expected_min_ratio: Some(r),
                }),
            );
            return id;
        }
        let config = self.solver.config;
        for p in candidate_points(state, config) {
            if remaining == 0 {
                break;
            }
            let mut pts = state.points.clone();
            pts.push(p);
            let bound = ratio(
                state.on_cost() + remaining as usize,
                opt_count(&pts, state.scale),
            );
            if bound.is_ok_and(|b| b < need) {
                continue;
            }
            let replies: Vec<(Decision, OnState)> = state
                .feasible_decisions(p)
                .into_iter()
                .map(|d| {
                    (
                        d,
                        state.apply(p, d).expect("feasible decisions always apply"),
                    )
                })
                .collect();
            if !replies
                .iter()
                .all(|(_, next)| self.forces(next, remaining - 1, need))
            {
                continue;
            }
            let id = self.fresh('g');
            let mut branches = Vec::new();
            for (d, next) in replies {
                let (matcher, next) = match d {
                    Decision::Open => {
                        let c = *next.assignment.last().expect("just applied");
                        let label = format!("c{}", c.0);
                        (Matcher::OpenAs(label.clone()), next.with_label(c, label))
                    }
                    Decision::Assign(c) => {
                        let label = state.clusters[c.0]
                            .label
                            .clone()
                            .expect("search labels every cluster");
                        (Matcher::AssignTo(label), next)
                    }
                };
                let child = self.build(&next, remaining - 1, need);
                branches.push(Branch { matcher, child });
            }
            self.nodes
                .insert(id.clone(), Node::Give { pos: p, branches });
            return id;
        }
        unreachable!("a state worth {need} always has a forcing candidate")
    }
}

/// Computes the best ratio the adversary can force under `config` and a
/// strategy tree that forces it.
pub fn best_forced_ratio(config: &SearchConfig) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let solver = Solver {
        config,
        memo: DashMap::new(),
        explored: AtomicU64::new(0),
        memo_hits: AtomicU64::new(0),
        aborted: AtomicBool::new(false),
        capped: true,
    };
    let root = OnState::new(config.scale);
    let n = config.max_points;
    let mut log = Vec::new();

    let run = || -> (Option<Ratio>, bool, Vec<String>) {
        // Root handled here so a node-cap abort still reports the first
        // moves that were fully evaluated.
        let candidates = candidate_points(&root, config);
        let evaluate = |p: &Pos| solver.reply_value(&root, *p, n, None, 0).ok();
        let values: Vec<Option<Option<Ratio>>> = if config.jobs > 1 {
            candidates.par_iter().map(evaluate).collect()
        } else {
            let mut out = Vec::new();
            let mut best: Option<Ratio> = None;
            for p in &candidates {
                if solver.target_reached(best) || solver.aborted.load(Ordering::Relaxed) {
                    out.push(None);
                    continue;
                }
                let v = evaluate(p);
                if let Some(Some(v)) = v {
                    best = best.max(Some(v));
                }
                out.push(v);
            }
            out
        };
        let mut best: Option<Ratio> = None;
        let mut complete = true;
        let mut lines = Vec::new();
        for (p, v) in candidates.iter().zip(values) {
            if solver.target_reached(best) {
                break;
            }
            match v {
                Some(v) => {
                    if v > best {
                        best = v;
                    }
                    lines.push(format!(
                        "first={} value={} best={}",
                        config.scale.format(*p),
                        v.map_or("-".into(), |r| r.to_string()),
                        best.map_or("-".into(), |r| r.to_string()),
                    ));
                }
                None => complete = false,
            }
        }
        (best, complete, lines)
    };
    let (best, complete, lines) = if config.jobs > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| SearchError::Pool(e.to_string()))?
            .install(run)
    } else {
        run()
    };
    log.extend(lines);
    let exhaustive = complete && !solver.aborted.load(Ordering::Relaxed);
    // One point always forces 1/1.
    let value = best.unwrap_or(Ratio::ONE);

    // Reconstruction reuses the memo and is not subject to the cap.
    let rebuild = Solver {
        capped: false,
        ..solver
    };
    let mut builder = TreeBuilder {
        solver: &rebuild,
        nodes: BTreeMap::new(),
        next_id: 0,
    };
    let root_id = builder.build(&root, n, value);
    let strategy = StrategyTree {
        scale: config.scale,
        root: root_id,
        nodes: builder.nodes,
    };
    log.push(format!(
        "explored={} memo_hits={} value={value}",
        rebuild.explored.load(Ordering::Relaxed),
        rebuild.memo_hits.load(Ordering::Relaxed)
    ));
    Ok(SearchResult {
        value,
        exhaustive,
        target_met: config.target.map(|t| value >= t),
        strategy,
        explored: rebuild.explored.load(Ordering::Relaxed),
        memo_hits: rebuild.memo_hits.load(Ordering::Relaxed),
        log,
    })
}

impl SearchResult {
    /// JSON report. Without counters the output depends only on the config
    /// and the solved game, so scheduling and pruning must leave it unchanged.
    pub fn to_json(&self, config: &SearchConfig, counters: bool) -> String {
        let strategy: serde_json::Value =
            serde_json::from_str(&save_tree(&self.strategy)).expect("saved trees parse");
        let mut report = serde_json::json!({
            "scale": config.scale.unit(),
            "grid_step": config.scale.format(Pos(config.grid_step)),
            "window": config.scale.format(Pos(config.window)),
            "max_points": config.max_points,
            "target": config.target.map(|t| t.to_string()),
            "value": self.value.to_string(),
            "exhaustive": self.exhaustive,
            "target_met": self.target_met,
            "strategy": strategy,
        });
        if counters {
            report["explored"] = self.explored.into();
            report["memo_hits"] = self.memo_hits.into();
        }
        let mut out = serde_json::to_string_pretty(&report).expect("reports serialize");
        out.push('\n');
        out
    }
}
