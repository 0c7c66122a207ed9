//! Exact fixed-point coordinates.
//!
//! Every coordinate in a run is an integer multiple of `1/S` for the run's
//! scale `S`. A [`Pos`] stores the scaled numerator, so one unit of length is
//! `S` steps and all geometry is plain integer arithmetic.

use std::fmt;

use thiserror::Error;

/// A coordinate measured in scaled steps (`value = steps / S`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos(pub i64);

impl Pos {
    pub const ZERO: Pos = Pos(0);

    #[inline]
    pub const fn steps(self) -> i64 {
        self.0
    }

    #[inline]
    pub const fn shift(self, delta: i64) -> Pos {
        Pos(self.0 + delta)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoordError {
    #[error("scale must be a positive integer, got {0}")]
    BadScale(i64),
    #[error("cannot parse coordinate {0:?}")]
    Syntax(String),
    #[error("coordinate {text:?} is not a multiple of 1/{scale}")]
    OffGrid { text: String, scale: i64 },
    #[error("coordinate {0:?} is out of range")]
    Overflow(String),
}

/// The run-wide scale `S`: one unit of length equals `S` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale(i64);

impl Default for Scale {
    fn default() -> Self {
        Scale(10)
    }
}

impl Scale {
    pub fn new(s: i64) -> Result<Self, CoordError> {
        if s >= 1 {
            Ok(Scale(s))
        } else {
            Err(CoordError::BadScale(s))
        }
    }

    /// Number of steps in one unit of length.
    #[inline]
    pub const fn unit(self) -> i64 {
        self.0
    }

    pub fn from_units(self, units: i64) -> Pos {
        Pos(units * self.0)
    }

    /// Parses `"2.5"`, `"-3"`, or `"7/3"` exactly. Values that do not land on
    /// the grid are rejected, never rounded.
    pub fn parse(self, text: &str) -> Result<Pos, CoordError> {
        let t = text.trim();
        let (num, den) = parse_rational(t).ok_or_else(|| CoordError::Syntax(text.to_string()))?;
        let scaled = num
            .checked_mul(self.0 as i128)
            .ok_or_else(|| CoordError::Overflow(text.to_string()))?;
        if scaled % den != 0 {
            return Err(CoordError::OffGrid {
                text: t.to_string(),
                scale: self.0,
            });
        }
        i64::try_from(scaled / den)
            .map(Pos)
            .map_err(|_| CoordError::Overflow(text.to_string()))
    }

    /// Renders a coordinate as a terminating decimal when one exists and as
    /// `n/d` otherwise.
    pub fn format(self, p: Pos) -> String {
        let s = self.0 as i128;
        let v = p.0 as i128;
        let neg = v < 0;
        let a = v.abs();
        let int = a / s;
        let mut rem = a % s;
        let sign = if neg { "-" } else { "" };
        if rem == 0 {
            return format!("{sign}{int}");
        }
        // A fraction over S terminates in base 10 iff the reduced
        // denominator has no prime factors besides 2 and 5.
        let g = gcd_i128(rem, s);
        let mut d = s / g;
        while d % 2 == 0 {
            d /= 2;
        }
        while d % 5 == 0 {
            d /= 5;
        }
        if d != 1 {
            let g = gcd_i128(a, s);
            return format!("{sign}{}/{}", a / g, s / g);
        }
        let mut digits = String::new();
        while rem != 0 {
            rem *= 10;
            digits.push(char::from(b'0' + (rem / s) as u8));
            rem %= s;
        }
        format!("{sign}{int}.{digits}")
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// Returns `(num, den)` with `den > 0`.
fn parse_rational(t: &str) -> Option<(i128, i128)> {
    if let Some((n, d)) = t.split_once('/') {
        let (n, nd) = parse_decimal(n.trim())?;
        let (d, dd) = parse_decimal(d.trim())?;
        if d == 0 {
            return None;
        }
        // (n/nd) / (d/dd)
        let mut num = n.checked_mul(dd)?;
        let mut den = d.checked_mul(nd)?;
        if den < 0 {
            num = -num;
            den = -den;
        }
        return Some((num, den));
    }
    parse_decimal(t)
}

fn parse_decimal(t: &str) -> Option<(i128, i128)> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 30 || int.len() > 30 {
        return None;
    }
    let mut num: i128 = 0;
    for b in int.bytes().chain(frac.bytes()) {
        num = num * 10 + i128::from(b - b'0');
    }
    let den = 10i128.pow(frac.len() as u32);
    Some((if neg { -num } else { num }, den))
}
