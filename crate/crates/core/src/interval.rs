//! Finite unions of closed intervals on the extended real line.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::PotentialError;

/// A closed interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Sorted, pairwise disjoint collection of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn new(intervals: Vec<Interval>) -> Result<Self, PotentialError> {
        let last = intervals.len().saturating_sub(1);
        for (i, iv) in intervals.iter().enumerate() {
            if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo > iv.hi {
                return Err(PotentialError::Invariant(format!(
                    "support: malformed interval {iv}"
                )));
            }
            if iv.lo == f64::INFINITY || iv.hi == f64::NEG_INFINITY {
                return Err(PotentialError::Invariant(format!(
                    "support: empty interval {iv}"
                )));
            }
            if iv.lo == f64::NEG_INFINITY && i != 0 {
                return Err(PotentialError::Invariant(
                    "support: only the first interval may start at -inf".into(),
                ));
            }
            if iv.hi == f64::INFINITY && i != last {
                return Err(PotentialError::Invariant(
                    "support: only the last interval may end at +inf".into(),
                ));
            }
        }
        for w in intervals.windows(2) {
            if w[0].hi >= w[1].lo {
                return Err(PotentialError::Invariant(format!(
                    "support: intervals {} and {} overlap or are unsorted",
                    w[0], w[1]
                )));
            }
        }
        Ok(IntervalSet { intervals })
    }

    pub fn real_line() -> Self {
        IntervalSet {
            intervals: vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self, PotentialError> {
        Self::new(vec![Interval::new(lo, hi)])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains_interior(x))
    }

    pub fn inf(&self) -> f64 {
        self.intervals.first().map_or(f64::NAN, |iv| iv.lo)
    }

    pub fn sup(&self) -> f64 {
        self.intervals.last().map_or(f64::NAN, |iv| iv.hi)
    }

    /// Finite endpoints, ascending.
    pub fn finite_endpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .flat_map(|iv| [iv.lo, iv.hi])
            .filter(|e| e.is_finite())
            .collect()
    }

    /// Distance from `x` to the set (0 inside).
    pub fn distance(&self, x: f64) -> f64 {
        self.intervals
            .iter()
            .map(|iv| {
                if iv.contains(x) {
                    0.0
                } else if x < iv.lo {
                    iv.lo - x
                } else {
                    x - iv.hi
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Image under `x -> -x`.
    pub fn reflected(&self) -> Self {
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .rev()
                .map(|iv| Interval::new(-iv.hi, -iv.lo))
                .collect(),
        }
    }

    /// Connected components of the complement in the real line.
    pub fn gaps(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut left = f64::NEG_INFINITY;
        for iv in &self.intervals {
            if iv.lo > left {
                out.push(Interval::new(left, iv.lo));
            }
            left = iv.hi;
        }
        if left < f64::INFINITY {
            out.push(Interval::new(left, f64::INFINITY));
        }
        out
    }
}

impl TryFrom<Vec<Interval>> for IntervalSet {
    type Error = PotentialError;

    fn try_from(v: Vec<Interval>) -> Result<Self, Self::Error> {
        IntervalSet::new(v)
    }
}

impl From<IntervalSet> for Vec<Interval> {
    fn from(s: IntervalSet) -> Self {
        s.intervals
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|iv| iv.to_string()).collect();
        write!(f, "{}", parts.join(" ∪ "))
    }
}
