//! The offline optimum: fewest unit intervals covering a point multiset.

use thiserror::Error;

use crate::pos::{CoordError, Pos, Scale};
use crate::ratio::{Ratio, RatioError};

/// Upper limit on distinct points accepted by [`opt_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OptError {
    #[error("brute force refuses {0} distinct points (limit {BRUTEFORCE_LIMIT})")]
    TooLarge(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {source}")]
pub struct PointsError {
    pub line: usize,
    #[source]
    pub source: CoordError,
}

/// Parses a points file: one coordinate per line; blank lines and anything
/// after `#` are ignored.
pub fn parse_points(text: &str, scale: Scale) -> Result<Vec<Pos>, PointsError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let p = scale.parse(body).map_err(|source| PointsError {
            line: i + 1,
            source,
        })?;
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    pub count: usize,
    /// Closed intervals `[lo, lo + 1]`, ascending.
    pub intervals: Vec<(Pos, Pos)>,
}

fn distinct_sorted(points: &[Pos]) -> Vec<Pos> {
    let mut v = points.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Greedy sweep: open `[x, x + 1]` at the leftmost uncovered point.
pub fn opt_cover(points: &[Pos], scale: Scale) -> OptResult {
    let unit = scale.unit();
    let mut intervals = Vec::new();
    let mut reach: Option<Pos> = None;
    for p in distinct_sorted(points) {
        if reach.is_some_and(|r| p <= r) {
            continue;
        }
        let hi = p.shift(unit);
        intervals.push((p, hi));
        reach = Some(hi);
    }
    OptResult {
        count: intervals.len(),
        intervals,
    }
}

/// Count-only variant of [`opt_cover`] that avoids allocating intervals.
pub fn opt_count(points: &[Pos], scale: Scale) -> usize {
    let unit = scale.unit();
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    let mut count = 0;
    let mut reach = i64::MIN;
    for p in sorted {
        if p.0 > reach {
            count += 1;
            reach = p.0 + unit;
        }
    }
    count
}

/// Exhaustive minimum cover.
///
/// Some optimal cover can always be slid right until each interval starts at
/// an input point, so the candidates are the `n` windows `[p_i, p_i + 1]`.
/// Subsets of candidates are tried in order of increasing size.
pub fn opt_bruteforce(points: &[Pos], scale: Scale) -> Result<usize, OptError> {
    let pts = distinct_sorted(points);
    let n = pts.len();
    if n > BRUTEFORCE_LIMIT {
        return Err(OptError::TooLarge(n));
    }
    if n == 0 {
        return Ok(0);
    }
    let unit = scale.unit();
    let windows: Vec<u32> = pts
        .iter()
        .map(|a| {
            pts.iter()
                .enumerate()
                .filter(|(_, q)| a.0 <= q.0 && q.0 <= a.0 + unit)
                .fold(0u32, |m, (j, _)| m | (1 << j))
        })
        .collect();
    let full: u32 = (1u32 << n) - 1;
    let mut best = n;
    for subset in 1u32..(1u32 << n) {
        let size = subset.count_ones() as usize;
        if size >= best {
            continue;
        }
        let covered = (0..n)
            .filter(|i| subset & (1 << i) != 0)
            .fold(0u32, |m, i| m | windows[i]);
        if covered == full {
            best = size;
        }
    }
    Ok(best)
}

/// `on_cost / opt_cost` as an exact reduced fraction.
pub fn ratio(on_cost: usize, opt_cost: usize) -> Result<Ratio, RatioError> {
    if opt_cost == 0 {
        return Err(RatioError::ZeroDenominator);
    }
    Ratio::new(on_cost as u64, opt_cost as u64)
}
