// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed energy intervals and finite unions of them.

use serde::Serialize;

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Returns `None` when `lo > hi` or either end is NaN.
    pub fn new(lo: f64, hi: f64) -> Option<Self> {
        if lo <= hi {
            Some(Self { lo, hi })
        } else {
            None
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

/// A finite union of closed intervals, kept sorted and pairwise disjoint.
///
/// Touching or overlapping members are merged on insertion. Degenerate
/// single-point members are kept; callers that integrate over the set skip
/// them since they carry no measure.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_interval(iv: Interval) -> Self {
        Self { parts: vec![iv] }
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(items: I) -> Self {
        let mut set = Self::empty();
        for iv in items {
            set.insert(iv);
        }
        set
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Total length of the union.
    pub fn measure(&self) -> f64 {
        self.parts.iter().map(Interval::width).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|iv| iv.contains(x))
    }

    pub fn insert(&mut self, iv: Interval) {
        let mut merged = iv;
        let mut kept = Vec::with_capacity(self.parts.len() + 1);
        for p in self.parts.drain(..) {
            if p.hi < merged.lo || p.lo > merged.hi {
                kept.push(p);
            } else {
                merged = Interval {
                    lo: merged.lo.min(p.lo),
                    hi: merged.hi.max(p.hi),
                };
            }
        }
        kept.push(merged);
        kept.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        self.parts = kept;
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = self.clone();
        for iv in &other.parts {
            out.insert(*iv);
        }
        out
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = IntervalSet::empty();
        for a in &self.parts {
            for b in &other.parts {
                if let Some(c) = a.intersect(b) {
                    out.insert(c);
                }
            }
        }
        out
    }

    pub fn intersect_interval(&self, iv: &Interval) -> IntervalSet {
        self.intersect(&IntervalSet::from_interval(*iv))
    }

    /// Removes the open interval `(lo, hi)`; the endpoints stay in the set.
    pub fn remove_open(&self, lo: f64, hi: f64) -> IntervalSet {
        let mut out = IntervalSet::empty();
        for p in &self.parts {
            if hi <= p.lo || lo >= p.hi {
                out.insert(*p);
                continue;
            }
            if p.lo <= lo {
                out.insert(Interval { lo: p.lo, hi: lo });
            }
            if hi <= p.hi {
                out.insert(Interval { lo: hi, hi: p.hi });
            }
        }
        out
    }

    /// Drops members shorter than `min_width`.
    pub fn without_slivers(&self, min_width: f64) -> IntervalSet {
        IntervalSet {
            parts: self
                .parts
                .iter()
                .copied()
                .filter(|p| p.width() > min_width)
                .collect(),
        }
    }
}
