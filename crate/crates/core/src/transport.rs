// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Steady-state currents from transmission data.
//!
//! Units: `ħ = 1`, electrons carry charge `−e`. The charge current out of
//! reservoir `k` (minus the rate of change of its charge) is
//!
//! ```text
//! j_k = −2eπ ∫ dE Σ_j (f_k(E) − f_j(E)) |T_kj(E)|²
//! ```
//!
//! and the energy current out of reservoir `k` is
//!
//! ```text
//! Φ_k = 2π ∫ dE Σ_j (f_k(E) − f_j(E)) E |T_kj(E)|²
//! ```
//!
//! For more than two reservoirs the energy-current sum over `j` is the
//! direct analogue of the charge-current formula.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::interval::{Interval, IntervalSet};
use crate::model::{LeadSpec, SystemSpec};
use crate::quadrature::{integrate_band, Estimate, QuadratureConfig, QuadratureError};
use crate::scattering::{solve_scattering, CouplingSpace, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TransportError {
    #[error("lead {} {quantity} current: {source}", lead + 1)]
    QuadratureFailure {
        lead: usize,
        quantity: Quantity,
        #[source]
        source: QuadratureError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Charge,
    Energy,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quantity::Charge => "charge",
            Quantity::Energy => "energy",
        })
    }
}

/// Fermi–Dirac occupation `1/(e^{β(E−μ)} + 1)`.
///
/// `beta = ∞` gives the step `1_{E<μ}` with value 1/2 at `E = μ`.
pub fn fermi_dirac(energy: f64, beta: f64, mu: f64) -> f64 {
    let x = energy - mu;
    if beta == f64::INFINITY {
        return if x < 0.0 {
            1.0
        } else if x > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let y = beta * x;
    if y > 0.0 {
        let e = (-y).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + y.exp())
    }
}

fn occupation(lead: &LeadSpec, energy: f64) -> f64 {
    fermi_dirac(energy, lead.beta, lead.mu)
}

/// Energies where `f_k − f_j` can be nonzero, inside both bands and away
/// from every band-edge margin.
fn pair_domain(spec: &SystemSpec, k: usize, j: usize) -> IntervalSet {
    let (lk, lj) = (&spec.leads[k], &spec.leads[j]);
    if lk.same_state(lj) {
        return IntervalSet::empty();
    }
    let Some(mut band) = lk.band().intersect(&lj.band()) else {
        return IntervalSet::empty();
    };
    if lk.is_zero_temperature() && lj.is_zero_temperature() {
        let window = Interval {
            lo: lk.mu.min(lj.mu),
            hi: lk.mu.max(lj.mu),
        };
        match band.intersect(&window) {
            Some(b) => band = b,
            None => return IntervalSet::empty(),
        }
    }
    IntervalSet::from_interval(band)
}

/// Integration domain for the currents out of lead `k`: the union over
/// partners `j` of the pair domains, with every lead's band-edge margin cut
/// out.
pub fn current_domain(spec: &SystemSpec, k: usize, edge_fraction: f64) -> IntervalSet {
    let mut domain = IntervalSet::empty();
    for j in 0..spec.num_leads() {
        if j != k {
            domain = domain.union(&pair_domain(spec, k, j));
        }
    }
    for lead in &spec.leads {
        let margin = edge_fraction * lead.bandwidth();
        let band = lead.band();
        for edge in [band.lo, band.hi] {
            domain = domain.remove_open(edge - margin, edge + margin);
            // the endpoints themselves are still inside the margin
            domain = domain.without_slivers(0.0);
        }
    }
    domain
}

/// Interior points where the integrand has kinks or steps.
fn breakpoints(spec: &SystemSpec) -> Vec<f64> {
    let mut pts = Vec::new();
    for lead in &spec.leads {
        pts.push(lead.mu);
        let band = lead.band();
        pts.push(band.lo);
        pts.push(band.hi);
    }
    pts
}

fn current(
    spec: &SystemSpec,
    space: &CouplingSpace,
    k: usize,
    quantity: Quantity,
    quad: &QuadratureConfig,
) -> Result<(Estimate, GridRecord), TransportError> {
    let solver = SolverConfig {
        edge_fraction: quad.edge_fraction,
        ..SolverConfig::default()
    };
    let prefactor = match quantity {
        Quantity::Charge => -2.0 * spec.charge * PI,
        Quantity::Energy => 2.0 * PI,
    };
    let domain = current_domain(spec, k, quad.edge_fraction);
    let integrand = |e: f64| -> Option<f64> {
        let data = solve_scattering(spec, space, e, &solver).ok()?;
        if !data.open[k] {
            return Some(0.0);
        }
        let fk = occupation(&spec.leads[k], e);
        let mut sum = 0.0;
        for (j, lead) in spec.leads.iter().enumerate() {
            if j == k || !data.open[j] {
                continue;
            }
            sum += (fk - occupation(lead, e)) * data.t_matrix[(k, j)].norm_sqr();
        }
        Some(match quantity {
            Quantity::Charge => sum,
            Quantity::Energy => sum * e,
        })
    };
    let cfg = QuadratureConfig {
        abs_tol: quad.abs_tol / prefactor.abs(),
        ..*quad
    };
    let result = integrate_band(integrand, &domain, &breakpoints(spec), &cfg).map_err(|source| {
        TransportError::QuadratureFailure {
            lead: k,
            quantity,
            source,
        }
    })?;
    let record = GridRecord {
        lead: k,
        quantity,
        domain_measure: domain.measure(),
        intervals: result.intervals,
        evaluations: result.evaluations,
        dropped: result.dropped,
    };
    Ok((result.estimate().scaled(prefactor), record))
}

/// Charge current out of reservoir `k` with its quadrature error estimate.
pub fn charge_current(
    spec: &SystemSpec,
    k: usize,
    quad: &QuadratureConfig,
) -> Result<Estimate, TransportError> {
    let space = CouplingSpace::build(spec);
    current(spec, &space, k, Quantity::Charge, quad).map(|(e, _)| e)
}

/// Energy current out of reservoir `k` with its quadrature error estimate.
pub fn energy_current(
    spec: &SystemSpec,
    k: usize,
    quad: &QuadratureConfig,
) -> Result<Estimate, TransportError> {
    let space = CouplingSpace::build(spec);
    current(spec, &space, k, Quantity::Energy, quad).map(|(e, _)| e)
}

/// Subdivision record of one current integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRecord {
    pub lead: usize,
    pub quantity: Quantity,
    pub domain_measure: f64,
    pub intervals: usize,
    pub evaluations: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurrentReport {
    pub charge_currents: Vec<Estimate>,
    pub energy_currents: Vec<Estimate>,
    /// `|Σ_k j_k|`
    pub charge_defect: f64,
    /// `|Σ_k Φ_k|`
    pub energy_defect: f64,
    pub grid: Vec<GridRecord>,
}

impl CurrentReport {
    pub fn max_charge_error(&self) -> f64 {
        self.charge_currents.iter().map(|e| e.error).fold(0.0, f64::max)
    }

    pub fn max_energy_error(&self) -> f64 {
        self.energy_currents.iter().map(|e| e.error).fold(0.0, f64::max)
    }
}

/// All charge and energy currents. The `2N` integrals run concurrently;
/// results are collected in lead order.
pub fn current_report(
    spec: &SystemSpec,
    quad: &QuadratureConfig,
) -> Result<CurrentReport, TransportError> {
    let space = CouplingSpace::build(spec);
    let n = spec.num_leads();
    let jobs: Vec<(usize, Quantity)> = [Quantity::Charge, Quantity::Energy]
        .into_iter()
        .flat_map(|q| (0..n).map(move |k| (k, q)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(k, q)| current(spec, &space, k, q, quad))
        .collect::<Result<_, _>>()?;
    let (estimates, grid): (Vec<Estimate>, Vec<GridRecord>) = results.into_iter().unzip();
    let charge_currents = estimates[..n].to_vec();
    let energy_currents = estimates[n..].to_vec();
    Ok(CurrentReport {
        charge_defect: charge_currents.iter().map(|e| e.value).sum::<f64>().abs(),
        energy_defect: energy_currents.iter().map(|e| e.value).sum::<f64>().abs(),
        charge_currents,
        energy_currents,
        grid,
    })
}
