// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Currents from exact time evolution of a truncated lattice.
//!
//! Each lead is cut to `L_j` sites. The reservoirs start decoupled, each in
//! its own equilibrium `f_j(H_j)`, with an empty dot; the coupling is on
//! from `t = 0`. The one-particle density evolves as
//! `ρ(t) = e^{−iHt} ρ₀ e^{iHt}` and the currents out of reservoir `k` are
//!
//! ```text
//! j_k(t) = i·e·Tr(ρ(t)[V, Π_k])        Φ_k(t) = −i·Tr(ρ(t)[V, Π_k H₀ Π_k])
//! ```
//!
//! Before the outgoing disturbance returns from the far ends of the leads
//! these settle onto a plateau approximating the steady state.
//!
//! `H` is diagonalized once; `ρ(t)` is then exact at every `t`. Only the
//! entries of `ρ(t)` that the sparse commutators touch are formed.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{CouplingKind, LeadSpec, SiteVector, SystemSpec};
use crate::transport::fermi_dirac;

/// Mean values below this are treated as zero by the plateau detector.
pub const PLATEAU_NOISE_FLOOR: f64 = 1e-9;
/// Relative fluctuation above which a window is not a plateau.
pub const PLATEAU_RELATIVE_FLUCTUATION: f64 = 0.05;

pub const DEFAULT_LEAD_LENGTH: usize = 400;
pub const DEFAULT_TIME_STEP: f64 = 0.5;
pub const DEFAULT_WINDOW: (f64, f64) = (50.0, 150.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("lead {} truncated to {length} sites but couplings need at least {required}", lead + 1)]
    TruncationTooShort {
        lead: usize,
        length: usize,
        required: usize,
    },
    #[error("expected {expected} lead lengths, got {got}")]
    LengthCount { expected: usize, got: usize },
    #[error("time {time} exceeds the recurrence horizon {horizon:.3}")]
    RecurrenceHorizonExceeded { time: f64, horizon: f64 },
    #[error("plateau window [{lo}, {hi}] is not covered by the recorded times")]
    WindowOutsideTrace { lo: f64, hi: f64 },
}

/// Finite realization of `H₀ + V`: dot first, then lead blocks with site 1
/// of each lead at the start of its block.
#[derive(Debug, Clone)]
pub struct TruncatedSystem {
    dot_dim: usize,
    lead_lengths: Vec<usize>,
    offsets: Vec<usize>,
    leads: Vec<LeadSpec>,
    charge: f64,
    hamiltonian: DMatrix<Complex64>,
    /// Nonzero entries of `V`, row-major.
    coupling: Vec<(usize, usize, Complex64)>,
}

impl TruncatedSystem {
    pub fn total_dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn dot_block(&self) -> Range<usize> {
        0..self.dot_dim
    }

    pub fn lead_block(&self, lead: usize) -> Range<usize> {
        self.offsets[lead]..self.offsets[lead] + self.lead_lengths[lead]
    }

    pub fn lead_lengths(&self) -> &[usize] {
        &self.lead_lengths
    }

    pub fn num_leads(&self) -> usize {
        self.leads.len()
    }

    pub fn hamiltonian(&self) -> &DMatrix<Complex64> {
        &self.hamiltonian
    }

    pub fn coupling_matrix(&self) -> DMatrix<Complex64> {
        let d = self.total_dim();
        let mut v = DMatrix::zeros(d, d);
        for &(a, b, z) in &self.coupling {
            v[(a, b)] = z;
        }
        v
    }

    /// Diagonal projection onto an index range.
    pub fn projection(&self, block: Range<usize>) -> DMatrix<f64> {
        let d = self.total_dim();
        let mut p = DMatrix::zeros(d, d);
        for i in block {
            p[(i, i)] = 1.0;
        }
        p
    }

    /// `min_j L_j / (2·max_j t_j)`: the time for the fastest wave to cross
    /// the shortest lead.
    pub fn recurrence_horizon(&self) -> f64 {
        let shortest = self.lead_lengths.iter().copied().min().unwrap_or(0) as f64;
        let v_max = 2.0 * self.leads.iter().map(|l| l.hopping).fold(0.0, f64::max);
        shortest / v_max
    }

    /// Matrix index of 1-based `site` on `lead`.
    pub fn site_index(&self, lead: usize, site: usize) -> usize {
        self.offsets[lead] + site - 1
    }

    fn in_lead(&self, lead: usize, idx: usize) -> bool {
        self.lead_block(lead).contains(&idx)
    }
}

fn max_site(v: &SiteVector) -> usize {
    v.max_site().unwrap_or(0)
}

/// Assembles the truncated Hamiltonian with `lengths[j]` sites on lead `j`.
///
/// Each lead must extend at least one site beyond its deepest coupling site.
pub fn build_truncated(
    spec: &SystemSpec,
    lengths: &[usize],
) -> Result<TruncatedSystem, OracleError> {
    let n = spec.num_leads();
    if lengths.len() != n {
        return Err(OracleError::LengthCount {
            expected: n,
            got: lengths.len(),
        });
    }
    let mut deepest = vec![0usize; n];
    for term in &spec.couplings {
        match &term.kind {
            CouplingKind::DotLead {
                lead, lead_vector, ..
            } => deepest[*lead] = deepest[*lead].max(max_site(lead_vector)),
            CouplingKind::LeadLead {
                left_lead,
                left_vector,
                right_lead,
                right_vector,
            } => {
                deepest[*left_lead] = deepest[*left_lead].max(max_site(left_vector));
                deepest[*right_lead] = deepest[*right_lead].max(max_site(right_vector));
            }
        }
    }
    for (j, (&len, &deep)) in lengths.iter().zip(&deepest).enumerate() {
        if deep > 0 && len < deep + 1 {
            return Err(OracleError::TruncationTooShort {
                lead: j,
                length: len,
                required: deep + 1,
            });
        }
    }

    let m = spec.dot.dim();
    let mut offsets = Vec::with_capacity(n);
    let mut next = m;
    for &len in lengths {
        offsets.push(next);
        next += len;
    }
    let dim = next;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    h.view_mut((0, 0), (m, m)).copy_from(&spec.dot.matrix);
    for (j, lead) in spec.leads.iter().enumerate() {
        let off = offsets[j];
        for p in 0..lengths[j] {
            h[(off + p, off + p)] = Complex64::new(lead.onsite, 0.0);
            if p + 1 < lengths[j] {
                h[(off + p, off + p + 1)] = Complex64::new(-lead.hopping, 0.0);
                h[(off + p + 1, off + p)] = Complex64::new(-lead.hopping, 0.0);
            }
        }
    }

    let mut v = DMatrix::<Complex64>::zeros(dim, dim);
    let embed = |lead: usize, vec: &SiteVector| -> Vec<(usize, Complex64)> {
        vec.iter().map(|(s, z)| (offsets[lead] + s - 1, z)).collect()
    };
    for term in &spec.couplings {
        let (left, right): (Vec<(usize, Complex64)>, Vec<(usize, Complex64)>) = match &term.kind {
            CouplingKind::DotLead {
                lead,
                dot_vector,
                lead_vector,
            } => (
                dot_vector.iter().copied().enumerate().collect(),
                embed(*lead, lead_vector),
            ),
            CouplingKind::LeadLead {
                left_lead,
                left_vector,
                right_lead,
                right_vector,
            } => (embed(*left_lead, left_vector), embed(*right_lead, right_vector)),
        };
        let a = term.amplitude;
        for &(i, l) in &left {
            for &(k, r) in &right {
                let z = a * l * r.conj();
                v[(i, k)] += z;
                v[(k, i)] += z.conj();
            }
        }
    }
    let mut coupling = Vec::new();
    for i in 0..dim {
        for k in 0..dim {
            if v[(i, k)] != Complex64::new(0.0, 0.0) {
                coupling.push((i, k, v[(i, k)]));
            }
        }
    }
    h += &v;

    Ok(TruncatedSystem {
        dot_dim: m,
        lead_lengths: lengths.to_vec(),
        offsets,
        leads: spec.leads.clone(),
        charge: spec.charge,
        hamiltonian: h,
        coupling,
    })
}

/// Tridiagonal Hamiltonian of one truncated lead.
pub fn lead_block_hamiltonian(lead: &LeadSpec, length: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(length, length);
    for p in 0..length {
        h[(p, p)] = lead.onsite;
        if p + 1 < length {
            h[(p, p + 1)] = -lead.hopping;
            h[(p + 1, p)] = -lead.hopping;
        }
    }
    h
}

/// Partitioned initial state: `f_j(H_j)` on each lead block, zero on the
/// dot and between blocks.
pub fn initial_density(sys: &TruncatedSystem) -> DMatrix<Complex64> {
    let d = sys.total_dim();
    let mut rho = DMatrix::<Complex64>::zeros(d, d);
    for (j, lead) in sys.leads.iter().enumerate() {
        let len = sys.lead_lengths[j];
        let eig = lead_block_hamiltonian(lead, len).symmetric_eigen();
        let occ = eig
            .eigenvalues
            .map(|e| fermi_dirac(e, lead.beta, lead.mu));
        let u = &eig.eigenvectors;
        let block = u * DMatrix::from_diagonal(&occ) * u.transpose();
        let off = sys.offsets[j];
        for p in 0..len {
            for q in 0..len {
                rho[(off + p, off + q)] = Complex64::new(block[(p, q)], 0.0);
            }
        }
    }
    rho
}

enum Basis {
    Real { u: DMatrix<f64>, r: DMatrix<f64> },
    Complex { u: DMatrix<Complex64>, r: DMatrix<Complex64> },
}

/// Exact propagator for a fixed initial density, built from a single
/// eigendecomposition of the truncated Hamiltonian.
pub struct Evolver {
    energies: DVector<f64>,
    basis: Basis,
}

impl Evolver {
    pub fn new(sys: &TruncatedSystem, rho0: &DMatrix<Complex64>) -> Self {
        let h = sys.hamiltonian();
        let real = h.iter().all(|z| z.im == 0.0) && rho0.iter().all(|z| z.im == 0.0);
        if real {
            let eig = h.map(|z| z.re).symmetric_eigen();
            let u = eig.eigenvectors;
            let r = u.transpose() * rho0.map(|z| z.re) * &u;
            Self {
                energies: eig.eigenvalues,
                basis: Basis::Real { u, r },
            }
        } else {
            let eig = h.clone().symmetric_eigen();
            let u = eig.eigenvectors;
            let r = u.adjoint() * rho0 * &u;
            Self {
                energies: eig.eigenvalues,
                basis: Basis::Complex { u, r },
            }
        }
    }

    /// Entries `ρ(t)[idx[a], idx[b]]`.
    pub fn density_block(&self, idx: &[usize], t: f64) -> DMatrix<Complex64> {
        let d = self.energies.len();
        let s = idx.len();
        match &self.basis {
            Basis::Real { u, r } => {
                // W = U_S·diag(e^{−iεt}) = A + iB
                let mut a = DMatrix::<f64>::zeros(s, d);
                let mut b = DMatrix::<f64>::zeros(s, d);
                for n in 0..d {
                    let (sin, cos) = (self.energies[n] * t).sin_cos();
                    for (row, &i) in idx.iter().enumerate() {
                        a[(row, n)] = u[(i, n)] * cos;
                        b[(row, n)] = -u[(i, n)] * sin;
                    }
                }
                let p = &a * r;
                let q = &b * r;
                let re = &p * a.transpose() + &q * b.transpose();
                let im = &q * a.transpose() - &p * b.transpose();
                DMatrix::from_fn(s, s, |x, y| Complex64::new(re[(x, y)], im[(x, y)]))
            }
            Basis::Complex { u, r } => {
                let mut w = DMatrix::<Complex64>::zeros(s, d);
                for n in 0..d {
                    let phase = Complex64::from_polar(1.0, -self.energies[n] * t);
                    for (row, &i) in idx.iter().enumerate() {
                        w[(row, n)] = u[(i, n)] * phase;
                    }
                }
                (&w * r) * w.adjoint()
            }
        }
    }

    /// The full `ρ(t)`. Cost is cubic in the dimension.
    pub fn density(&self, t: f64) -> DMatrix<Complex64> {
        let idx: Vec<usize> = (0..self.energies.len()).collect();
        self.density_block(&idx, t)
    }
}

type SparseOp = BTreeMap<(usize, usize), Complex64>;

fn add_entry(op: &mut SparseOp, a: usize, b: usize, z: Complex64) {
    *op.entry((a, b)).or_insert(Complex64::new(0.0, 0.0)) += z;
}

/// Nonzero entries of `[V, Π_k]`.
fn charge_operator(sys: &TruncatedSystem, k: usize) -> SparseOp {
    let mut op = SparseOp::new();
    for &(a, b, v) in &sys.coupling {
        let w = f64::from(u8::from(sys.in_lead(k, b))) - f64::from(u8::from(sys.in_lead(k, a)));
        if w != 0.0 {
            add_entry(&mut op, a, b, v * w);
        }
    }
    op
}

/// Nonzero entries of `[V, H_k]` with `H_k = Π_k H₀ Π_k`.
fn energy_operator(sys: &TruncatedSystem, k: usize) -> SparseOp {
    let lead = &sys.leads[k];
    let block = sys.lead_block(k);
    let neighbors = |c: usize| -> Vec<(usize, f64)> {
        let mut out = vec![(c, lead.onsite)];
        if c > block.start {
            out.push((c - 1, -lead.hopping));
        }
        if c + 1 < block.end {
            out.push((c + 1, -lead.hopping));
        }
        out
    };
    let mut op = SparseOp::new();
    for &(a, c, v) in &sys.coupling {
        // (V H_k)_{ab} = Σ_c V_ac (H_k)_cb
        if block.contains(&c) {
            for (b, h) in neighbors(c) {
                add_entry(&mut op, a, b, v * h);
            }
        }
        // (H_k V)_{ab'} = Σ_c' (H_k)_{a'c'} V_{c'b'} with (c', b') = (a, c)
        if block.contains(&a) {
            for (a2, h) in neighbors(a) {
                add_entry(&mut op, a2, c, -v * h);
            }
        }
    }
    op.retain(|_, z| *z != Complex64::new(0.0, 0.0));
    op
}

/// Currents versus time for every lead.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// `currents[t][k]`, charge current out of reservoir `k`.
    pub currents: Vec<Vec<f64>>,
    /// `energy_currents[t][k]`, energy current out of reservoir `k`.
    pub energy_currents: Vec<Vec<f64>>,
    /// Imaginary parts left over in the trace formulas (should vanish).
    pub currents_imag: Vec<Vec<f64>>,
    pub energy_currents_imag: Vec<Vec<f64>>,
    /// `Tr(ρ(t)·Π_S)`, the dot occupation.
    pub dot_occupation: Vec<f64>,
    pub charge: f64,
    #[serde(skip)]
    pub warnings: Vec<OracleError>,
}

impl EvolutionTrace {
    pub fn num_leads(&self) -> usize {
        self.currents.first().map_or(0, Vec::len)
    }

    pub fn charge_series(&self, k: usize) -> Vec<f64> {
        self.currents.iter().map(|row| row[k]).collect()
    }

    pub fn energy_series(&self, k: usize) -> Vec<f64> {
        self.energy_currents.iter().map(|row| row[k]).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.currents_imag
            .iter()
            .chain(&self.energy_currents_imag)
            .flatten()
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Columns `t, j_1..j_N, Phi_1..Phi_N, im_j_1..im_j_N, im_Phi_1..im_Phi_N`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.num_leads();
        let mut header = vec!["t [1/energy]".to_string()];
        header.extend((1..=n).map(|k| format!("j_{k} [e*energy]")));
        header.extend((1..=n).map(|k| format!("Phi_{k} [energy^2]")));
        header.extend((1..=n).map(|k| format!("im_j_{k} [e*energy]")));
        header.extend((1..=n).map(|k| format!("im_Phi_{k} [energy^2]")));
        writeln!(out, "{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for cols in [
                &self.currents[i],
                &self.energy_currents[i],
                &self.currents_imag[i],
                &self.energy_currents_imag[i],
            ] {
                row.extend(cols.iter().map(f64::to_string));
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Evaluates the trace-formula currents at the given times.
///
/// Times past the recurrence horizon are still computed; they are reported
/// in `warnings`.
pub fn evolve_currents(
    sys: &TruncatedSystem,
    rho0: &DMatrix<Complex64>,
    times: &[f64],
) -> EvolutionTrace {
    let evolver = Evolver::new(sys, rho0);
    evolve_with(sys, &evolver, times)
}

/// As [`evolve_currents`] with a prepared propagator.
pub fn evolve_with(sys: &TruncatedSystem, evolver: &Evolver, times: &[f64]) -> EvolutionTrace {
    let n = sys.num_leads();
    let charge_ops: Vec<SparseOp> = (0..n).map(|k| charge_operator(sys, k)).collect();
    let energy_ops: Vec<SparseOp> = (0..n).map(|k| energy_operator(sys, k)).collect();

    let mut needed = BTreeSet::new();
    needed.extend(sys.dot_block());
    for op in charge_ops.iter().chain(&energy_ops) {
        for &(a, b) in op.keys() {
            needed.insert(a);
            needed.insert(b);
        }
    }
    let idx: Vec<usize> = needed.into_iter().collect();
    let local: BTreeMap<usize, usize> = idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let dot_local: Vec<usize> = sys.dot_block().map(|i| local[&i]).collect();

    // Tr(ρ C) = Σ_ab ρ_ba C_ab
    let trace_with = |rho: &DMatrix<Complex64>, op: &SparseOp| -> Complex64 {
        op.iter()
            .map(|(&(a, b), &c)| rho[(local[&b], local[&a])] * c)
            .sum()
    };

    let i = Complex64::new(0.0, 1.0);
    let rows: Vec<_> = times
        .par_iter()
        .map(|&t| {
            let rho = evolver.density_block(&idx, t);
            let mut j = Vec::with_capacity(n);
            let mut phi = Vec::with_capacity(n);
            for k in 0..n {
                j.push(i * sys.charge * trace_with(&rho, &charge_ops[k]));
                phi.push(-i * trace_with(&rho, &energy_ops[k]));
            }
            let occ: f64 = dot_local.iter().map(|&p| rho[(p, p)].re).sum();
            (j, phi, occ)
        })
        .collect();

    let horizon = sys.recurrence_horizon();
    let warnings = times
        .iter()
        .copied()
        .filter(|&t| t > horizon)
        .take(1)
        .map(|time| OracleError::RecurrenceHorizonExceeded { time, horizon })
        .collect();

    let mut trace = EvolutionTrace {
        times: times.to_vec(),
        currents: Vec::with_capacity(times.len()),
        energy_currents: Vec::with_capacity(times.len()),
        currents_imag: Vec::with_capacity(times.len()),
        energy_currents_imag: Vec::with_capacity(times.len()),
        dot_occupation: Vec::with_capacity(times.len()),
        charge: sys.charge,
        warnings,
    };
    for (j, phi, occ) in rows {
        trace.currents.push(j.iter().map(|z| z.re).collect());
        trace.currents_imag.push(j.iter().map(|z| z.im).collect());
        trace.energy_currents.push(phi.iter().map(|z| z.re).collect());
        trace.energy_currents_imag.push(phi.iter().map(|z| z.im).collect());
        trace.dot_occupation.push(occ);
    }
    trace
}

/// `|Σ_k j_k(t) + e·dN_S/dt|` at each recorded time at least two steps
/// from either end, with the five-point centered derivative. Returns
/// `(t, defect, max_k |j_k(t)|)`. Assumes a uniform grid.
pub fn charge_balance(trace: &EvolutionTrace) -> Vec<(f64, f64, f64)> {
    let t = &trace.times;
    let nt = t.len();
    if nt < 5 {
        return Vec::new();
    }
    let h = t[1] - t[0];
    let occ = &trace.dot_occupation;
    (2..nt - 2)
        .map(|i| {
            let deriv =
                (-occ[i + 2] + 8.0 * occ[i + 1] - 8.0 * occ[i - 1] + occ[i - 2]) / (12.0 * h);
            let sum: f64 = trace.currents[i].iter().sum();
            let scale = trace.currents[i].iter().fold(0.0, |m: f64, x| m.max(x.abs()));
            (t[i], (sum + trace.charge * deriv).abs(), scale)
        })
        .collect()
}

/// Time average of a current over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub value: f64,
    /// Largest deviation from `value` inside the window.
    pub fluctuation: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub is_plateau: bool,
}

impl Plateau {
    pub fn from_series(
        times: &[f64],
        values: &[f64],
        window: (f64, f64),
    ) -> Result<Plateau, OracleError> {
        let (lo, hi) = window;
        let outside = OracleError::WindowOutsideTrace { lo, hi };
        let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
            return Err(outside);
        };
        if !(lo <= hi) || lo < first || hi > last {
            return Err(outside);
        }
        let picked: Vec<f64> = times
            .iter()
            .zip(values)
            .filter(|(&t, _)| lo <= t && t <= hi)
            .map(|(_, &v)| v)
            .collect();
        if picked.is_empty() {
            return Err(outside);
        }
        let mean = picked.iter().sum::<f64>() / picked.len() as f64;
        let fluctuation = picked.iter().fold(0.0, |m: f64, v| m.max((v - mean).abs()));
        let is_plateau = !(fluctuation > PLATEAU_RELATIVE_FLUCTUATION * mean.abs()
            && mean.abs() > PLATEAU_NOISE_FLOOR);
        Ok(Plateau {
            value: mean,
            fluctuation,
            window,
            samples: picked.len(),
            is_plateau,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePlateaus {
    pub charge: Vec<Plateau>,
    pub energy: Vec<Plateau>,
}

pub fn extract_plateau(
    trace: &EvolutionTrace,
    window: (f64, f64),
) -> Result<TracePlateaus, OracleError> {
    let n = trace.num_leads();
    let charge = (0..n)
        .map(|k| Plateau::from_series(&trace.times, &trace.charge_series(k), window))
        .collect::<Result<_, _>>()?;
    let energy = (0..n)
        .map(|k| Plateau::from_series(&trace.times, &trace.energy_series(k), window))
        .collect::<Result<_, _>>()?;
    Ok(TracePlateaus { charge, energy })
}

/// Uniform grid covering `window` with spacing `dt`.
pub fn window_times(window: (f64, f64), dt: f64) -> Vec<f64> {
    let steps = ((window.1 - window.0) / dt).round() as usize;
    (0..=steps).map(|i| window.0 + i as f64 * dt).collect()
}

/// Truncate, prepare, evolve over `window` and average: the full
/// steady-state estimate in one call.
pub fn ness_plateaus(
    spec: &SystemSpec,
    lead_length: usize,
    window: (f64, f64),
    dt: f64,
) -> Result<(EvolutionTrace, TracePlateaus), OracleError> {
    let sys = build_truncated(spec, &vec![lead_length; spec.num_leads()])?;
    let rho0 = initial_density(&sys);
    let trace = evolve_currents(&sys, &rho0, &window_times(window, dt));
    let plateaus = extract_plateau(&trace, window)?;
    Ok((trace, plateaus))
}
