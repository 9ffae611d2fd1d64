// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Gauss–Kronrod quadrature over unions of energy intervals.
//!
//! Each segment `[a, b]` is integrated in the angle variable
//! `E = (a+b)/2 − (b−a)/2·cos θ`, `θ ∈ [0, π]`. On a full tight-binding
//! band this is exactly the wavenumber substitution `E = ε − 2t·cos k`; the
//! Jacobian `sin θ` cancels the inverse square-root behavior that the
//! density of states produces at band edges, so edge singularities of that
//! type become smooth integrands.
//!
//! Subdivision is global: the piece with the largest error estimate is
//! bisected until the summed estimate meets the tolerance or the piece
//! budget is spent. Points where the integrand cannot be evaluated are
//! handled by bisecting around them; pieces that shrink below a minimal
//! width while still hitting such points are dropped and charged to the
//! error estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::interval::IntervalSet;

// 15-point Kronrod abscissae on [-1, 1] (non-negative half, descending);
// odd entries are the 7-point Gauss abscissae.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Pieces narrower than this (in θ) are dropped if they still contain an
/// unevaluable point.
const MIN_THETA_WIDTH: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Absolute error target, in the units of the final quantity.
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of pieces over the whole domain.
    pub max_intervals: usize,
    /// Edge-exclusion margin as a fraction of each lead's bandwidth.
    pub edge_fraction: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_intervals: 2000,
            edge_fraction: crate::spectral::DEFAULT_EDGE_FRACTION,
        }
    }
}

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
    };

    pub fn scaled(self, factor: f64) -> Estimate {
        Estimate {
            value: self.value * factor,
            error: self.error * factor.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    /// Pieces in the final partition.
    pub intervals: usize,
    pub evaluations: usize,
    /// Pieces dropped because they kept hitting unevaluable points.
    pub dropped: usize,
}

impl QuadratureResult {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.value,
            error: self.error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge within {intervals} intervals (value {value:.6e}, error estimate {error:.3e})")]
    Failure {
        value: f64,
        error: f64,
        intervals: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    center: f64,
    half: f64,
}

impl Segment {
    fn energy(&self, theta: f64) -> f64 {
        self.center - self.half * theta.cos()
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    segment: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    /// A node hit an unevaluable point; `value` is meaningless.
    blocked: bool,
    id: usize,
}

impl Piece {
    fn priority(&self) -> f64 {
        if self.blocked {
            f64::INFINITY
        } else {
            self.error
        }
    }
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority()
            .total_cmp(&other.priority())
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Integrator<'a, F> {
    f: &'a F,
    segments: Vec<Segment>,
    evaluations: usize,
    /// Largest |integrand| seen, used to bound dropped pieces.
    scale: f64,
    next_id: usize,
}

impl<F: Fn(f64) -> Option<f64>> Integrator<'_, F> {
    fn sample(&mut self, seg: Segment, theta: f64) -> Option<f64> {
        self.evaluations += 1;
        let y = (self.f)(seg.energy(theta))?;
        if !y.is_finite() {
            return None;
        }
        self.scale = self.scale.max(y.abs());
        Some(y * seg.half * theta.sin())
    }

    fn piece(&mut self, segment: usize, lo: f64, hi: f64) -> Piece {
        let seg = self.segments[segment];
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let id = self.next_id;
        self.next_id += 1;
        let blocked = Piece {
            segment,
            lo,
            hi,
            value: 0.0,
            error: f64::INFINITY,
            blocked: true,
            id,
        };

        let Some(fc) = self.sample(seg, center) else {
            return blocked;
        };
        let mut kronrod = fc * WGK[7];
        let mut gauss = fc * WG[3];
        let mut abs_sum = fc.abs() * WGK[7];
        for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
            let Some(f1) = self.sample(seg, center - half * x) else {
                return blocked;
            };
            let Some(f2) = self.sample(seg, center + half * x) else {
                return blocked;
            };
            kronrod += wk * (f1 + f2);
            abs_sum += wk * (f1.abs() + f2.abs());
            if i % 2 == 1 {
                gauss += WG[i / 2] * (f1 + f2);
            }
        }
        let value = kronrod * half;
        let floor = 50.0 * f64::EPSILON * abs_sum * half;
        let error = ((kronrod - gauss) * half).abs().max(floor);
        Piece {
            segment,
            lo,
            hi,
            value,
            error,
            blocked: false,
            id,
        }
    }
}

/// Integrates `f` over `domain`, splitting additionally at `breakpoints`.
///
/// `f` returns `None` at points it cannot evaluate (for example exceptional
/// energies); the quadrature steps around them.
pub fn integrate_band<F>(
    f: F,
    domain: &IntervalSet,
    breakpoints: &[f64],
    config: &QuadratureConfig,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> Option<f64>,
{
    let mut segments = Vec::new();
    for part in domain.parts() {
        if part.width() <= 0.0 {
            continue;
        }
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > part.lo && b < part.hi)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut lo = part.lo;
        for hi in cuts.into_iter().chain(std::iter::once(part.hi)) {
            if hi > lo {
                segments.push(Segment {
                    center: 0.5 * (lo + hi),
                    half: 0.5 * (hi - lo),
                });
            }
            lo = hi;
        }
    }

    let mut integrator = Integrator {
        f: &f,
        segments,
        evaluations: 0,
        scale: 0.0,
        next_id: 0,
    };
    let mut heap = BinaryHeap::new();
    for s in 0..integrator.segments.len() {
        heap.push(integrator.piece(s, 0.0, PI));
    }
    let mut done: Vec<Piece> = Vec::new();
    let mut dropped = 0usize;
    let mut dropped_error = 0.0;

    let totals = |heap: &BinaryHeap<Piece>, done: &[Piece], dropped_error: f64| {
        let mut value = 0.0;
        let mut error = dropped_error;
        for p in heap.iter().chain(done.iter()) {
            if p.blocked {
                error = f64::INFINITY;
            } else {
                value += p.value;
                error += p.error;
            }
        }
        (value, error)
    };

    loop {
        let (value, error) = totals(&heap, &done, dropped_error);
        let target = config.abs_tol.max(config.rel_tol * value.abs());
        if error <= target {
            break;
        }
        let count = heap.len() + done.len();
        if count >= config.max_intervals {
            return Err(QuadratureError::Failure {
                value,
                error,
                intervals: count,
            });
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        if worst.hi - worst.lo < MIN_THETA_WIDTH {
            if worst.blocked {
                let seg = integrator.segments[worst.segment];
                let width = (seg.energy(worst.hi) - seg.energy(worst.lo)).abs();
                dropped += 1;
                dropped_error += width * integrator.scale;
            } else {
                done.push(worst);
            }
            continue;
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = integrator.piece(worst.segment, worst.lo, mid);
        let right = integrator.piece(worst.segment, mid, worst.hi);
        heap.push(left);
        heap.push(right);
    }

    let mut pieces: Vec<Piece> = heap.into_vec();
    pieces.extend(done);
    // sum in a fixed spatial order so the result does not depend on heap layout
    pieces.sort_by(|a, b| {
        a.segment
            .cmp(&b.segment)
            .then_with(|| a.lo.total_cmp(&b.lo))
    });
    let value = pieces.iter().map(|p| p.value).sum();
    let error = pieces.iter().map(|p| p.error).sum::<f64>() + dropped_error;
    Ok(QuadratureResult {
        value,
        error,
        intervals: pieces.len(),
        evaluations: integrator.evaluations,
        dropped,
    })
}
