// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Stationary scattering on the finite coupling subspace.
//!
//! `V` has finite range, so the outgoing Lippmann–Schwinger equation
//! `ψ⁺ = ψ⁰ + G₀(E + i0)·V·ψ⁺` closes on the amplitudes `u` of `ψ⁺` on the
//! dot and on the lead sites touched by `V`:
//!
//! ```text
//! dot rows:   (H_S − E)·u_S + (v·u)_S = 0
//! lead rows:  u_{j,n} − Σ_m G_j(n, m)·(v·u)_{j,m} = ψ⁰_{k,E}(n)·δ_{jk}
//! ```
//!
//! The dot amplitudes are kept as unknowns so that real eigenvalues of `H_S`
//! do not produce spurious singularities. The transition matrix follows as
//! `T_jk = ⟨ψ⁰_{j,E}, V ψ⁺_{k,E}⟩` and `S = 1 − 2πi·T`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{CouplingKind, SiteVector, SystemSpec};
use crate::spectral::{self, GreenOptions, LeadGreen, SpectralError, DEFAULT_EDGE_FRACTION};

/// Condition number above which an energy is treated as exceptional.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ScatteringError {
    #[error("energy {energy} is within the edge margin of band edge {edge} of lead {}", lead + 1)]
    AtBandEdge { lead: usize, energy: f64, edge: f64 },
    #[error("exceptional energy {energy}: condition estimate {condition:.3e} exceeds the limit")]
    ExceptionalEnergy { energy: f64, condition: f64 },
    #[error("energy {energy} lies outside the band of every lead")]
    OutOfBand { energy: f64 },
    #[error("lead {} is closed at energy {energy}", lead + 1)]
    LeadClosed { lead: usize, energy: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Edge-exclusion margin as a fraction of each lead's bandwidth.
    pub edge_fraction: f64,
    pub condition_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            edge_fraction: DEFAULT_EDGE_FRACTION,
            condition_limit: DEFAULT_CONDITION_LIMIT,
        }
    }
}

/// The range of `V`: the dot plus every lead site any coupling touches.
///
/// Coordinates are ordered dot first, then lead 0 sites ascending, lead 1
/// sites ascending, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpace {
    dot_dim: usize,
    lead_sites: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    v_matrix: DMatrix<Complex64>,
}

impl CouplingSpace {
    pub fn build(spec: &SystemSpec) -> Self {
        let n_leads = spec.num_leads();
        let dot_dim = spec.dot.dim();
        let mut lead_sites: Vec<Vec<usize>> = vec![Vec::new(); n_leads];
        let mut touch = |lead: usize, v: &SiteVector| lead_sites[lead].extend(v.sites());
        for term in &spec.couplings {
            match &term.kind {
                CouplingKind::DotLead {
                    lead, lead_vector, ..
                } => touch(*lead, lead_vector),
                CouplingKind::LeadLead {
                    left_lead,
                    left_vector,
                    right_lead,
                    right_vector,
                } => {
                    touch(*left_lead, left_vector);
                    touch(*right_lead, right_vector);
                }
            }
        }
        for sites in &mut lead_sites {
            sites.sort_unstable();
            sites.dedup();
        }
        let mut offsets = Vec::with_capacity(n_leads);
        let mut next = dot_dim;
        for sites in &lead_sites {
            offsets.push(next);
            next += sites.len();
        }
        let dim = next;

        let mut space = Self {
            dot_dim,
            lead_sites,
            offsets,
            v_matrix: DMatrix::zeros(dim, dim),
        };
        let mut v = DMatrix::zeros(dim, dim);
        for term in &spec.couplings {
            let (left, right) = match &term.kind {
                CouplingKind::DotLead {
                    lead,
                    dot_vector,
                    lead_vector,
                } => {
                    let mut left = DVector::zeros(dim);
                    left.rows_mut(0, dot_dim).copy_from(dot_vector);
                    (left, space.embed(*lead, lead_vector))
                }
                CouplingKind::LeadLead {
                    left_lead,
                    left_vector,
                    right_lead,
                    right_vector,
                } => (
                    space.embed(*left_lead, left_vector),
                    space.embed(*right_lead, right_vector),
                ),
            };
            let a = term.amplitude;
            v += (&left * right.adjoint()) * a;
            v += (&right * left.adjoint()) * a.conj();
        }
        space.v_matrix = v;
        space
    }

    fn embed(&self, lead: usize, vector: &SiteVector) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim());
        for (site, value) in vector.iter() {
            let idx = self.index_of(lead, site).expect("site registered at build");
            out[idx] += value;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.v_matrix.nrows()
    }

    pub fn dot_dim(&self) -> usize {
        self.dot_dim
    }

    /// Distinct coupling sites of a lead, ascending.
    pub fn lead_sites(&self, lead: usize) -> &[usize] {
        &self.lead_sites[lead]
    }

    pub fn lead_offset(&self, lead: usize) -> usize {
        self.offsets[lead]
    }

    pub fn index_of(&self, lead: usize, site: usize) -> Option<usize> {
        self.lead_sites[lead]
            .binary_search(&site)
            .ok()
            .map(|pos| self.offsets[lead] + pos)
    }

    /// `V` restricted to the coupling subspace.
    pub fn v_matrix(&self) -> &DMatrix<Complex64> {
        &self.v_matrix
    }
}

/// Per-energy scattering data over all leads.
///
/// Rows and columns of leads whose band excludes `energy` are zero in `t`
/// and identity in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub energy: f64,
    pub open: Vec<bool>,
    pub t_matrix: DMatrix<Complex64>,
    pub s_matrix: DMatrix<Complex64>,
    pub unitarity_residual: f64,
    pub optical_residual: f64,
    pub condition_estimate: f64,
}

impl ScatteringData {
    pub fn num_leads(&self) -> usize {
        self.open.len()
    }

    /// `4π²|T_jk|²` (`= |S_jk|²` for `j ≠ k`).
    pub fn transmission(&self, j: usize, k: usize) -> Result<f64, ScatteringError> {
        transmission_probability(self, j, k)
    }
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// `‖S·S† − 1‖` in the operator norm.
pub fn unitarity_residual(s: &DMatrix<Complex64>) -> f64 {
    let n = s.nrows();
    spectral_norm(&(s * s.adjoint() - DMatrix::identity(n, n)))
}

/// `S` from `T` via `S = 1 − 2πi·T`.
pub fn s_from_t(t: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    DMatrix::identity(n, n) - t * Complex64::new(0.0, 2.0 * PI)
}

/// `‖T − T† + 2πi·T·T†‖` in the operator norm.
pub fn optical_residual(t: &DMatrix<Complex64>) -> f64 {
    let tt = t * t.adjoint();
    spectral_norm(&(t - t.adjoint() + tt * Complex64::new(0.0, 2.0 * PI)))
}

/// `‖T·T† − T†·T‖`; vanishes whenever `S` is unitary.
pub fn normality_residual(t: &DMatrix<Complex64>) -> f64 {
    spectral_norm(&(t * t.adjoint() - t.adjoint() * t))
}

/// `4π²|T_jk(E)|²`, the probability for a particle incoming from lead `k`
/// to leave through lead `j`.
pub fn transmission_probability(
    data: &ScatteringData,
    j: usize,
    k: usize,
) -> Result<f64, ScatteringError> {
    for lead in [j, k] {
        if !data.open[lead] {
            return Err(ScatteringError::LeadClosed {
                lead,
                energy: data.energy,
            });
        }
    }
    Ok(4.0 * PI * PI * data.t_matrix[(j, k)].norm_sqr())
}

/// Solves the stationary scattering problem at a real energy.
pub fn solve_scattering(
    spec: &SystemSpec,
    space: &CouplingSpace,
    energy: f64,
    config: &SolverConfig,
) -> Result<ScatteringData, ScatteringError> {
    let n_leads = spec.num_leads();
    let green_opts = GreenOptions {
        edge_fraction: config.edge_fraction,
        allow_offband: true,
    };

    let mut open = vec![false; n_leads];
    let mut greens = Vec::with_capacity(n_leads);
    for (j, lead) in spec.leads.iter().enumerate() {
        let green = LeadGreen::new(lead, Complex64::new(energy, 0.0), &green_opts).map_err(
            |e| match e {
                SpectralError::AtBandEdge { edge, .. } => ScatteringError::AtBandEdge {
                    lead: j,
                    energy,
                    edge,
                },
                _ => unreachable!("off-band continuation is enabled: {e}"),
            },
        )?;
        open[j] = lead.band().contains(energy);
        greens.push(green);
    }
    if !open.iter().any(|&o| o) {
        return Err(ScatteringError::OutOfBand { energy });
    }

    let dim = space.dim();
    let mut t_matrix = DMatrix::zeros(n_leads, n_leads);
    let mut condition_estimate = 1.0;

    if dim > 0 {
        let v = space.v_matrix();
        let m = space.dot_dim();
        let mut a = DMatrix::<Complex64>::zeros(dim, dim);

        // dot rows: (H_S − E) u_S + (v u)_S
        for r in 0..m {
            for c in 0..dim {
                a[(r, c)] = v[(r, c)];
            }
            for c in 0..m {
                a[(r, c)] += spec.dot.matrix[(r, c)];
            }
            a[(r, r)] -= energy;
        }
        // lead rows: u_r − Σ_{r'} G(n_r, n_r') (v u)_{r'}
        for (j, green) in greens.iter().enumerate() {
            let sites = space.lead_sites(j);
            let off = space.lead_offset(j);
            for (p, &n) in sites.iter().enumerate() {
                let r = off + p;
                a[(r, r)] += 1.0;
                for (q, &n2) in sites.iter().enumerate() {
                    let g = green.element(n, n2);
                    for c in 0..dim {
                        a[(r, c)] -= g * v[(off + q, c)];
                    }
                }
            }
        }

        let sv = a.clone().singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        condition_estimate = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition_estimate <= config.condition_limit) {
            return Err(ScatteringError::ExceptionalEnergy {
                energy,
                condition: condition_estimate,
            });
        }

        // eigenfunction values of each open lead on its coupling sites
        let mut psi: Vec<Vec<f64>> = vec![Vec::new(); n_leads];
        for (j, lead) in spec.leads.iter().enumerate() {
            if !open[j] {
                continue;
            }
            let point = spectral::band_point(lead, energy, config.edge_fraction)
                .expect("open lead checked against its band and edges");
            psi[j] = space
                .lead_sites(j)
                .iter()
                .map(|&n| spectral::eigenfunction(lead, &point, n))
                .collect();
        }

        let lu = a.lu();
        for k in 0..n_leads {
            if !open[k] || psi[k].is_empty() {
                continue;
            }
            let mut rhs = DVector::<Complex64>::zeros(dim);
            let off = space.lead_offset(k);
            for (p, &val) in psi[k].iter().enumerate() {
                rhs[off + p] = Complex64::new(val, 0.0);
            }
            let u = lu.solve(&rhs).ok_or(ScatteringError::ExceptionalEnergy {
                energy,
                condition: f64::INFINITY,
            })?;
            let vu = v * u;
            for j in 0..n_leads {
                if !open[j] {
                    continue;
                }
                let off = space.lead_offset(j);
                t_matrix[(j, k)] = psi[j]
                    .iter()
                    .enumerate()
                    .map(|(p, &val)| vu[off + p] * val)
                    .sum();
            }
        }
    }

    let s_matrix = s_from_t(&t_matrix);
    Ok(ScatteringData {
        energy,
        unitarity_residual: unitarity_residual(&s_matrix),
        optical_residual: optical_residual(&t_matrix),
        open,
        t_matrix,
        s_matrix,
        condition_estimate,
    })
}
