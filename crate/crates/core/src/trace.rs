//! Per-point game traces and their JSON-lines file form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ClusterId, Decision, ModelError, OnState};
use crate::opt::{opt_count, ratio};
use crate::pos::{CoordError, Pos, Scale};
use crate::ratio::Ratio;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    /// 1-based.
    pub step: usize,
    pub point: Pos,
    pub decision: Decision,
    /// Cluster that ended up covering the point.
    pub cluster: ClusterId,
    pub label: Option<String>,
    pub on_cost: usize,
    pub opt_cost: usize,
    pub ratio: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub scale: Scale,
    pub events: Vec<TraceEvent>,
    /// Tag of the tree leaf the game ended at, if it was played on a tree.
    pub leaf: Option<String>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Coord {
        line: usize,
        #[source]
        source: CoordError,
    },
    #[error("line {line}: unknown decision {decision:?}")]
    Decision { line: usize, decision: String },
    #[error("replay diverged at step {step}: {what}")]
    Diverged { step: usize, what: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    step: usize,
    point: String,
    decision: String,
    cluster: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    on_cost: usize,
    opt_cost: usize,
    ratio: Ratio,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf: Option<String>,
}

impl Trace {
    pub fn new(scale: Scale) -> Self {
        Trace {
            scale,
            events: Vec::new(),
            leaf: None,
        }
    }

    /// Records the step that produced `after` from its predecessor.
    pub(crate) fn record(&mut self, after: &OnState, decision: Decision) {
        let k = after.points.len() - 1;
        let cluster = after.assignment[k];
        let on = after.on_cost();
        let opt = opt_count(&after.points, after.scale);
        self.events.push(TraceEvent {
            step: k + 1,
            point: after.points[k],
            decision,
            cluster,
            label: after.clusters[cluster.0].label.clone(),
            on_cost: on,
            opt_cost: opt,
            ratio: ratio(on, opt).expect("a non-empty prefix has a positive optimum"),
        });
    }

    pub fn on_cost(&self) -> usize {
        self.events.last().map_or(0, |e| e.on_cost)
    }

    pub fn opt_cost(&self) -> usize {
        self.events.last().map_or(0, |e| e.opt_cost)
    }

    pub fn final_ratio(&self) -> Option<Ratio> {
        self.events.last().map(|e| e.ratio)
    }

    pub fn points(&self) -> Vec<Pos> {
        self.events.iter().map(|e| e.point).collect()
    }

    pub fn decisions(&self) -> Vec<(Pos, Decision)> {
        self.events.iter().map(|e| (e.point, e.decision)).collect()
    }

    /// Reapplies every decision from an empty state and checks that the
    /// recorded clusters and costs come out identical.
    pub fn replay(&self) -> Result<OnState, TraceError> {
        let mut state = OnState::new(self.scale);
        for e in &self.events {
            state = state.apply(e.point, e.decision)?;
            let k = state.points.len() - 1;
            let on = state.on_cost();
            let opt = opt_count(&state.points, self.scale);
            let diverged = |what: String| TraceError::Diverged { step: e.step, what };
            if e.step != k + 1 {
                return Err(diverged(format!("recorded step {}", e.step)));
            }
            if state.assignment[k] != e.cluster {
                return Err(diverged(format!(
                    "cluster {} != {}",
                    state.assignment[k], e.cluster
                )));
            }
            if on != e.on_cost || opt != e.opt_cost {
                return Err(diverged(format!(
                    "costs {on}/{opt} != recorded {}/{}",
                    e.on_cost, e.opt_cost
                )));
            }
            if ratio(on, opt).ok() != Some(e.ratio) {
                return Err(diverged(format!("ratio {}", e.ratio)));
            }
        }
        Ok(state)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let last = self.events.len().saturating_sub(1);
        for (i, e) in self.events.iter().enumerate() {
            let line = EventLine {
                step: e.step,
                point: self.scale.format(e.point),
                decision: match e.decision {
                    Decision::Open => "open".into(),
                    Decision::Assign(_) => "assign".into(),
                },
                cluster: e.cluster.0,
                label: e.label.clone(),
                on_cost: e.on_cost,
                opt_cost: e.opt_cost,
                ratio: e.ratio,
                leaf: if i == last { self.leaf.clone() } else { None },
            };
            out.push_str(&serde_json::to_string(&line).expect("trace lines serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, scale: Scale) -> Result<Trace, TraceError> {
        let mut trace = Trace::new(scale);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let ev: EventLine =
                serde_json::from_str(raw).map_err(|source| TraceError::Json { line, source })?;
            let point = scale
                .parse(&ev.point)
                .map_err(|source| TraceError::Coord { line, source })?;
            let decision = match ev.decision.as_str() {
                "open" => Decision::Open,
                "assign" => Decision::Assign(ClusterId(ev.cluster)),
                other => {
                    return Err(TraceError::Decision {
                        line,
                        decision: other.to_string(),
                    })
                }
            };
            if ev.leaf.is_some() {
                trace.leaf = ev.leaf;
            }
            trace.events.push(TraceEvent {
                step: ev.step,
                point,
                decision,
                cluster: ClusterId(ev.cluster),
                label: ev.label,
                on_cost: ev.on_cost,
                opt_cost: ev.opt_cost,
                ratio: ev.ratio,
            });
        }
        Ok(trace)
    }
}
