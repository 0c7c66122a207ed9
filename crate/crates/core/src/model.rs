//! Clusters, game state, and move legality.
//!
//! An online algorithm only ever extends a cluster lazily: every decision is
//! either opening a fresh zero-length cluster at the given point or extending
//! one existing cluster just enough to cover it. Proactive growth never
//! enlarges what a cluster can still reach, so this is the whole strategy
//! space the verifier and the search have to enumerate.

use std::fmt;

use thiserror::Error;

use crate::pos::{Pos, Scale};

/// Index of a cluster in creation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterId(pub usize);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cluster {
    pub id: ClusterId,
    pub lo: Pos,
    pub hi: Pos,
    /// Name bound by an adversary tree (`D`, `E`, ...), if any.
    pub label: Option<String>,
}

impl Cluster {
    /// Every point this cluster could still be extended to cover:
    /// `[hi - 1, lo + 1]`.
    pub fn reach(&self, unit: i64) -> (Pos, Pos) {
        (self.hi.shift(-unit), self.lo.shift(unit))
    }

    pub fn can_assign(&self, p: Pos, unit: i64) -> bool {
        self.hi.max(p).0 - self.lo.min(p).0 <= unit
    }

    pub fn covers(&self, p: Pos) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn len(&self) -> i64 {
        self.hi.0 - self.lo.0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Name used in traces and reports: the bound label or the id.
    pub fn name(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => self.id.0.to_string(),
        }
    }
}

/// The algorithm's response to a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decision {
    Open,
    Assign(ClusterId),
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Open => f.write_str("open"),
            Decision::Assign(c) => write!(f, "assign {c}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("illegal move {decision} for point at step {step}: {reason}")]
    IllegalMove {
        step: usize,
        decision: Decision,
        reason: &'static str,
    },
}

/// Full game state: the algorithm's clusters plus every point given so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OnState {
    pub scale: Scale,
    /// `clusters[i].id == ClusterId(i)` always holds.
    pub clusters: Vec<Cluster>,
    pub points: Vec<Pos>,
    /// `assignment[k]` is the cluster covering `points[k]`.
    pub assignment: Vec<ClusterId>,
}

/// Translation-free identity of a state: cluster extents with labels, and
/// the sorted point multiset. Assignments are dropped because they never
/// influence the future of a game.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub clusters: Vec<(i64, i64, Option<String>)>,
    pub points: Vec<i64>,
}

impl OnState {
    pub fn new(scale: Scale) -> Self {
        OnState {
            scale,
            clusters: Vec::new(),
            points: Vec::new(),
            assignment: Vec::new(),
        }
    }

    #[inline]
    pub fn unit(&self) -> i64 {
        self.scale.unit()
    }

    /// Number of clusters created so far (`C_ON`).
    pub fn on_cost(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&Cluster> {
        self.clusters.get(id.0)
    }

    pub fn cluster_by_label(&self, label: &str) -> Option<&Cluster> {
        self.clusters
            .iter()
            .find(|c| c.label.as_deref() == Some(label))
    }

    pub fn is_covered(&self, p: Pos) -> bool {
        self.clusters.iter().any(|c| c.covers(p))
    }

    /// Legal responses to `p`, `Open` first and then assignments by id.
    ///
    /// A point already inside some cluster is free: only the covering
    /// clusters are offered and no new cluster may be opened.
    pub fn feasible_decisions(&self, p: Pos) -> Vec<Decision> {
        let covering: Vec<Decision> = self
            .clusters
            .iter()
            .filter(|c| c.covers(p))
            .map(|c| Decision::Assign(c.id))
            .collect();
        if !covering.is_empty() {
            return covering;
        }
        let unit = self.unit();
        std::iter::once(Decision::Open)
            .chain(
                self.clusters
                    .iter()
                    .filter(|c| c.can_assign(p, unit))
                    .map(|c| Decision::Assign(c.id)),
            )
            .collect()
    }

    pub fn is_feasible(&self, p: Pos, d: Decision) -> bool {
        let covered = self.is_covered(p);
        match d {
            Decision::Open => !covered,
            Decision::Assign(id) => match self.cluster(id) {
                Some(c) if covered => c.covers(p),
                Some(c) => c.can_assign(p, self.unit()),
                None => false,
            },
        }
    }

    /// Returns the successor state. Costs grow only on `Open`.
    pub fn apply(&self, p: Pos, d: Decision) -> Result<OnState, ModelError> {
        let mut next = self.clone();
        next.apply_in_place(p, d)?;
        Ok(next)
    }

    pub(crate) fn apply_in_place(&mut self, p: Pos, d: Decision) -> Result<(), ModelError> {
        if !self.is_feasible(p, d) {
            let reason = match d {
                Decision::Open => "point is already covered by an existing cluster",
                Decision::Assign(id) if self.cluster(id).is_none() => "no such cluster",
                Decision::Assign(_) if self.is_covered(p) => {
                    "point is covered; only covering clusters may take it"
                }
                Decision::Assign(_) => "cluster would exceed unit length",
            };
            return Err(ModelError::IllegalMove {
                step: self.points.len() + 1,
                decision: d,
                reason,
            });
        }
        let id = match d {
            Decision::Open => {
                let id = ClusterId(self.clusters.len());
                self.clusters.push(Cluster {
                    id,
                    lo: p,
                    hi: p,
                    label: None,
                });
                id
            }
            Decision::Assign(id) => {
                let c = &mut self.clusters[id.0];
                c.lo = c.lo.min(p);
                c.hi = c.hi.max(p);
                id
            }
        };
        self.points.push(p);
        self.assignment.push(id);
        Ok(())
    }

    /// Returns a copy with `label` bound to cluster `id`.
    pub fn with_label(mut self, id: ClusterId, label: impl Into<String>) -> Self {
        if let Some(c) = self.clusters.get_mut(id.0) {
            c.label = Some(label.into());
        }
        self
    }

    pub fn translate(&self, delta: i64) -> OnState {
        OnState {
            scale: self.scale,
            clusters: self
                .clusters
                .iter()
                .map(|c| Cluster {
                    lo: c.lo.shift(delta),
                    hi: c.hi.shift(delta),
                    ..c.clone()
                })
                .collect(),
            points: self.points.iter().map(|p| p.shift(delta)).collect(),
            assignment: self.assignment.clone(),
        }
    }

    fn min_coord(&self) -> Option<Pos> {
        self.clusters
            .iter()
            .map(|c| c.lo)
            .chain(self.points.iter().copied())
            .min()
    }

    /// Translates so the smallest coordinate is 0, sorts clusters by
    /// `(lo, hi, creation id)` and renumbers them in that order. Points are
    /// sorted together with their (renumbered) assignment. Returns the
    /// canonical state and the offset that was subtracted.
    pub fn canonicalize(&self) -> (OnState, Pos) {
        let offset = self.min_coord().unwrap_or(Pos::ZERO);
        let mut order: Vec<usize> = (0..self.clusters.len()).collect();
        order.sort_by_key(|&i| {
            let c = &self.clusters[i];
            (c.lo, c.hi, c.id)
        });
        let mut remap = vec![ClusterId(0); self.clusters.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = ClusterId(new);
        }
        let clusters = order
            .iter()
            .enumerate()
            .map(|(new, &old)| {
                let c = &self.clusters[old];
                Cluster {
                    id: ClusterId(new),
                    lo: c.lo.shift(-offset.0),
                    hi: c.hi.shift(-offset.0),
                    label: c.label.clone(),
                }
            })
            .collect();
        let mut pairs: Vec<(Pos, ClusterId)> = self
            .points
            .iter()
            .zip(&self.assignment)
            .map(|(p, a)| (p.shift(-offset.0), remap[a.0]))
            .collect();
        pairs.sort();
        let (points, assignment) = pairs.into_iter().unzip();
        (
            OnState {
                scale: self.scale,
                clusters,
                points,
                assignment,
            },
            offset,
        )
    }

    /// Canonical identity for memo tables and decision deduplication.
    pub fn key(&self) -> StateKey {
        self.key_with(true)
    }

    /// Like [`OnState::key`], optionally ignoring labels.
    pub fn key_with(&self, labels: bool) -> StateKey {
        let offset = self.min_coord().unwrap_or(Pos::ZERO).0;
        let mut clusters: Vec<(i64, i64, Option<String>)> = self
            .clusters
            .iter()
            .map(|c| {
                let label = if labels { c.label.clone() } else { None };
                (c.lo.0 - offset, c.hi.0 - offset, label)
            })
            .collect();
        clusters.sort();
        let mut points: Vec<i64> = self.points.iter().map(|p| p.0 - offset).collect();
        points.sort_unstable();
        StateKey { clusters, points }
    }

    /// Checks every structural invariant; used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        let unit = self.unit();
        for (i, c) in self.clusters.iter().enumerate() {
            if c.id != ClusterId(i) {
                return Err(format!("cluster at index {i} has id {}", c.id));
            }
            if c.lo > c.hi || c.len() > unit {
                return Err(format!("cluster {} has bad extent", c.id));
            }
        }
        if self.points.len() != self.assignment.len() {
            return Err("points and assignment differ in length".into());
        }
        for (p, a) in self.points.iter().zip(&self.assignment) {
            match self.cluster(*a) {
                Some(c) if c.covers(*p) => {}
                _ => return Err(format!("point {} not inside its cluster {a}", p.0)),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s() -> Scale {
        Scale::default()
    }

    fn p(x: &str) -> Pos {
        s().parse(x).unwrap()
    }

    fn cl(id: usize, lo: &str, hi: &str) -> Cluster {
        Cluster {
            id: ClusterId(id),
            lo: p(lo),
            hi: p(hi),
            label: None,
        }
    }

    fn state_of(clusters: Vec<Cluster>) -> OnState {
        let mut st = OnState::new(s());
        for c in &clusters {
            st.points.push(c.lo);
            st.assignment.push(c.id);
            if c.hi != c.lo {
                st.points.push(c.hi);
                st.assignment.push(c.id);
            }
        }
        st.clusters = clusters;
        st
    }

    #[test]
    fn reach_examples() {
        assert_eq!(cl(0, "8.5", "8.5").reach(10), (p("7.5"), p("9.5")));
        assert_eq!(cl(0, "3", "4").reach(10), (p("3"), p("4")));
        assert_eq!(cl(0, "8.5", "9").reach(10), (p("8"), p("9.5")));
    }

    #[test]
    fn can_assign_examples() {
        assert!(cl(0, "5", "5").can_assign(p("6"), 10));
        assert!(!cl(0, "3", "4").can_assign(p("4.5"), 10));
        assert!(cl(0, "8", "8").can_assign(p("8.5"), 10));
    }

    #[test]
    fn feasible_examples() {
        let st = state_of(vec![cl(0, "3", "4")]);
        assert_eq!(st.feasible_decisions(p("5")), vec![Decision::Open]);

        let st = state_of(vec![cl(0, "8", "8"), cl(1, "8.5", "8.5")]);
        assert_eq!(
            st.feasible_decisions(p("9")),
            vec![
                Decision::Open,
                Decision::Assign(ClusterId(0)),
                Decision::Assign(ClusterId(1))
            ]
        );

        let st = state_of(vec![cl(0, "2", "2")]);
        assert_eq!(
            st.feasible_decisions(p("1")),
            vec![Decision::Open, Decision::Assign(ClusterId(0))]
        );
    }

    #[test]
    fn covered_points_are_free() {
        let st = state_of(vec![cl(0, "3", "4"), cl(1, "3.5", "3.5")]);
        assert_eq!(
            st.feasible_decisions(p("3.5")),
            vec![
                Decision::Assign(ClusterId(0)),
                Decision::Assign(ClusterId(1))
            ]
        );
        assert!(st.apply(p("3.5"), Decision::Open).is_err());
        let next = st.apply(p("3.5"), Decision::Assign(ClusterId(0))).unwrap();
        assert_eq!(next.on_cost(), 2);
        assert_eq!(next.clusters, st.clusters);
    }

    #[test]
    fn apply_examples() {
        let st = OnState::new(s()).apply(p("3"), Decision::Open).unwrap();
        assert_eq!(st.on_cost(), 1);
        assert_eq!((st.clusters[0].lo, st.clusters[0].hi), (p("3"), p("3")));

        let st = st.apply(p("4"), Decision::Assign(ClusterId(0))).unwrap();
        assert_eq!((st.clusters[0].lo, st.clusters[0].hi), (p("3"), p("4")));
        assert_eq!(st.on_cost(), 1);

        let e = state_of(vec![cl(0, "5", "5")]);
        let e = e.apply(p("4.5"), Decision::Assign(ClusterId(0))).unwrap();
        assert_eq!((e.clusters[0].lo, e.clusters[0].hi), (p("4.5"), p("5")));
        e.check_invariants().unwrap();
    }

    #[test]
    fn illegal_moves_rejected() {
        let st = state_of(vec![cl(0, "3", "4")]);
        let err = st
            .apply(p("4.5"), Decision::Assign(ClusterId(0)))
            .unwrap_err();
        assert!(matches!(err, ModelError::IllegalMove { step: 3, .. }));
        assert!(st.apply(p("5"), Decision::Assign(ClusterId(7))).is_err());
    }

    #[test]
    fn canonicalize_examples() {
        let st = state_of(vec![cl(0, "3", "4"), cl(1, "5", "5")]);
        let (c, off) = st.canonicalize();
        assert_eq!(off, p("3"));
        assert_eq!((c.clusters[0].lo, c.clusters[0].hi), (p("0"), p("1")));
        assert_eq!((c.clusters[1].lo, c.clusters[1].hi), (p("2"), p("2")));
        assert_eq!(c.points, vec![p("0"), p("1"), p("2")]);

        let (c, off) = OnState::new(s()).canonicalize();
        assert_eq!(off, Pos::ZERO);
        assert!(c.clusters.is_empty() && c.points.is_empty());

        let a = state_of(vec![cl(0, "8", "9"), cl(1, "8.5", "8.5")]);
        let b = state_of(vec![cl(0, "8.5", "8.5"), cl(1, "8", "9")]);
        assert_eq!(a.canonicalize().0, b.canonicalize().0);
        assert_eq!(a.key(), b.key());
    }
}
