// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! System description: reservoirs (semi-infinite tight-binding leads), the
//! finite central region ("dot") and the finite-rank coupling between them.
//!
//! The one-particle Hilbert space is `dot ⊕ lead_0 ⊕ … ⊕ lead_{N-1}`. Lead
//! sites are numbered from 1 at the surface; the dot is indexed `0..M`.
//! Lead indices are 0-based in the API and 1-based in config files and
//! output headers.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::interval::{Interval, IntervalSet};

/// Tolerance used when checking the dot matrix for hermiticity, relative to
/// its largest entry.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

/// A semi-infinite single-channel tight-binding reservoir
/// `H = onsite·Σ|n⟩⟨n| − hopping·Σ(|n⟩⟨n+1| + h.c.)`, `n ≥ 1`, held at
/// inverse temperature `beta` and chemical potential `mu`.
///
/// `beta = f64::INFINITY` selects zero-temperature step filling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadSpec {
    pub hopping: f64,
    pub onsite: f64,
    pub beta: f64,
    pub mu: f64,
}

impl LeadSpec {
    pub fn new(hopping: f64, onsite: f64, beta: f64, mu: f64) -> Self {
        Self {
            hopping,
            onsite,
            beta,
            mu,
        }
    }

    /// The spectrum `[onsite − 2·hopping, onsite + 2·hopping]`.
    pub fn band(&self) -> Interval {
        Interval {
            lo: self.onsite - 2.0 * self.hopping,
            hi: self.onsite + 2.0 * self.hopping,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        4.0 * self.hopping
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta == f64::INFINITY
    }

    /// Same reservoir state (β, μ) as `other`.
    pub fn same_state(&self, other: &LeadSpec) -> bool {
        self.beta == other.beta && self.mu == other.mu
    }
}

/// The central region: an `M×M` Hermitian matrix, `M = 0` allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct DotSpec {
    pub matrix: DMatrix<Complex64>,
}

impl DotSpec {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn empty() -> Self {
        Self {
            matrix: DMatrix::zeros(0, 0),
        }
    }

    pub fn diagonal(levels: &[f64]) -> Self {
        let m = levels.len();
        let mut matrix = DMatrix::zeros(m, m);
        for (i, &e) in levels.iter().enumerate() {
            matrix[(i, i)] = Complex64::new(e, 0.0);
        }
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `(H + H†)/2`, which is exactly Hermitian.
    pub fn symmetrized(&self) -> Self {
        let h = &self.matrix;
        Self {
            matrix: (h + h.adjoint()).scale(0.5),
        }
    }
}

/// A finitely supported vector on one lead: site (≥ 1) → amplitude.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SiteVector(BTreeMap<usize, Complex64>);

impl SiteVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Single-site unit vector.
    pub fn unit(site: usize) -> Self {
        Self::from_pairs([(site, Complex64::new(1.0, 0.0))])
    }

    /// Later duplicates of a site are added to earlier ones.
    pub fn from_pairs<I: IntoIterator<Item = (usize, Complex64)>>(pairs: I) -> Self {
        let mut map = BTreeMap::new();
        for (site, value) in pairs {
            *map.entry(site).or_insert(Complex64::new(0.0, 0.0)) += value;
        }
        Self(map)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.0.iter().map(|(&s, &v)| (s, v))
    }

    pub fn get(&self, site: usize) -> Complex64 {
        self.0.get(&site).copied().unwrap_or_default()
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.0.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|v| *v == Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingKind {
    /// `amplitude·|dot_vector⟩⟨lead_vector| + h.c.`
    DotLead {
        lead: usize,
        dot_vector: DVector<Complex64>,
        lead_vector: SiteVector,
    },
    /// `amplitude·|left_vector⟩⟨right_vector| + h.c.`, the two vectors
    /// living on distinct leads.
    LeadLead {
        left_lead: usize,
        left_vector: SiteVector,
        right_lead: usize,
        right_vector: SiteVector,
    },
}

/// One rank-one Hermitian pair of the coupling operator.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTerm {
    pub amplitude: Complex64,
    pub kind: CouplingKind,
}

impl CouplingTerm {
    pub fn dot_lead(
        amplitude: Complex64,
        lead: usize,
        dot_vector: Vec<Complex64>,
        lead_vector: SiteVector,
    ) -> Self {
        Self {
            amplitude,
            kind: CouplingKind::DotLead {
                lead,
                dot_vector: DVector::from_vec(dot_vector),
                lead_vector,
            },
        }
    }

    pub fn lead_lead(
        amplitude: Complex64,
        left_lead: usize,
        left_vector: SiteVector,
        right_lead: usize,
        right_vector: SiteVector,
    ) -> Self {
        Self {
            amplitude,
            kind: CouplingKind::LeadLead {
                left_lead,
                left_vector,
                right_lead,
                right_vector,
            },
        }
    }

    /// The leads this term touches.
    pub fn leads(&self) -> Vec<usize> {
        match &self.kind {
            CouplingKind::DotLead { lead, .. } => vec![*lead],
            CouplingKind::LeadLead {
                left_lead,
                right_lead,
                ..
            } => vec![*left_lead, *right_lead],
        }
    }
}

/// Full system description.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub leads: Vec<LeadSpec>,
    pub dot: DotSpec,
    pub couplings: Vec<CouplingTerm>,
    /// Elementary charge `e > 0`; electrons carry `−e`.
    pub charge: f64,
}

/// Basis label of the one-particle space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    Dot(usize),
    Lead { lead: usize, site: usize },
}

/// A finitely supported vector on the full space.
pub type StateVector = BTreeMap<Site, Complex64>;

impl SystemSpec {
    pub fn num_leads(&self) -> usize {
        self.leads.len()
    }

    /// Validates and returns the system with an exactly Hermitian dot matrix.
    pub fn checked(self) -> Result<SystemSpec, ValidationReport> {
        let report = validate(&self);
        if report.has_errors() {
            return Err(report);
        }
        let dot = self.dot.symmetrized();
        Ok(SystemSpec { dot, ..self })
    }

    /// Applies the coupling operator `V` term by term to a finitely
    /// supported vector.
    pub fn apply_coupling(&self, x: &StateVector) -> StateVector {
        let mut out = StateVector::new();
        let mut add = |site: Site, value: Complex64| {
            *out.entry(site).or_insert(Complex64::new(0.0, 0.0)) += value;
        };
        let at = |site: Site| x.get(&site).copied().unwrap_or_default();
        for term in &self.couplings {
            let a = term.amplitude;
            match &term.kind {
                CouplingKind::DotLead {
                    lead,
                    dot_vector,
                    lead_vector,
                } => {
                    // ⟨f, x⟩ and ⟨s, x⟩
                    let f_x: Complex64 = lead_vector
                        .iter()
                        .map(|(n, f)| f.conj() * at(Site::Lead { lead: *lead, site: n }))
                        .sum();
                    let s_x: Complex64 = dot_vector
                        .iter()
                        .enumerate()
                        .map(|(i, s)| s.conj() * at(Site::Dot(i)))
                        .sum();
                    for (i, s) in dot_vector.iter().enumerate() {
                        add(Site::Dot(i), a * s * f_x);
                    }
                    for (n, f) in lead_vector.iter() {
                        add(Site::Lead { lead: *lead, site: n }, a.conj() * f * s_x);
                    }
                }
                CouplingKind::LeadLead {
                    left_lead,
                    left_vector,
                    right_lead,
                    right_vector,
                } => {
                    let r_x: Complex64 = right_vector
                        .iter()
                        .map(|(n, g)| g.conj() * at(Site::Lead { lead: *right_lead, site: n }))
                        .sum();
                    let l_x: Complex64 = left_vector
                        .iter()
                        .map(|(n, g)| g.conj() * at(Site::Lead { lead: *left_lead, site: n }))
                        .sum();
                    for (n, g) in left_vector.iter() {
                        add(Site::Lead { lead: *left_lead, site: n }, a * g * r_x);
                    }
                    for (n, g) in right_vector.iter() {
                        add(Site::Lead { lead: *right_lead, site: n }, a.conj() * g * l_x);
                    }
                }
            }
        }
        out
    }
}

/// `⟨x, y⟩` for finitely supported vectors.
pub fn inner(x: &StateVector, y: &StateVector) -> Complex64 {
    x.iter()
        .map(|(site, xv)| xv.conj() * y.get(site).copied().unwrap_or_default())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// All invariant violations found in a [`SystemSpec`]. Errors block
/// computation, warnings do not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn error(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Error,
            message,
        });
    }

    fn warning(&mut self, message: String) {
        self.issues.push(Issue {
            severity: Severity::Warning,
            message,
        });
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

fn is_finite_c(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Checks every invariant of the system description. Never fails; the
/// report carries the findings.
pub fn validate(spec: &SystemSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = spec.leads.len();

    if n < 2 {
        report.error(format!("at least two leads are required (got {n})"));
    }
    if !(spec.charge > 0.0 && spec.charge.is_finite()) {
        report.error(format!("charge must be positive and finite (got {})", spec.charge));
    }

    for (j, lead) in spec.leads.iter().enumerate() {
        let label = j + 1;
        if !(lead.hopping > 0.0 && lead.hopping.is_finite()) {
            report.error(format!(
                "lead {label}: lead hopping must be positive (got {})",
                lead.hopping
            ));
        }
        if !lead.onsite.is_finite() {
            report.error(format!("lead {label}: onsite energy must be finite"));
        }
        if !lead.mu.is_finite() {
            report.error(format!("lead {label}: chemical potential must be finite"));
        }
        if !(lead.beta > 0.0) {
            report.error(format!(
                "lead {label}: inverse temperature must be positive or infinite (got {})",
                lead.beta
            ));
        }
    }

    let h = &spec.dot.matrix;
    let m = h.nrows();
    if h.ncols() != m {
        report.error(format!("dot matrix must be square (got {}x{})", m, h.ncols()));
    } else {
        let scale = h.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        for i in 0..m {
            for k in i..m {
                let a = h[(i, k)];
                let b = h[(k, i)];
                if !is_finite_c(a) {
                    report.error(format!("dot matrix entry ({},{}) is not finite", i + 1, k + 1));
                    continue;
                }
                let mismatch = (a - b.conj()).norm();
                if mismatch > HERMITICITY_TOLERANCE * scale {
                    report.error(format!(
                        "dot matrix is not Hermitian: entries ({},{}) and ({},{}) differ by {:.3e}",
                        i + 1,
                        k + 1,
                        k + 1,
                        i + 1,
                        mismatch
                    ));
                }
            }
        }
    }

    let check_vector = |report: &mut ValidationReport, t: usize, lead: usize, v: &SiteVector| {
        if v.sites().any(|s| s == 0) {
            report.error(format!(
                "coupling {t}: lead sites are numbered from 1 (site 0 on lead {})",
                lead + 1
            ));
        }
        if v.iter().any(|(_, z)| !is_finite_c(z)) {
            report.error(format!("coupling {t}: lead vector has non-finite entries"));
        }
        if v.is_zero() {
            report.warning(format!(
                "coupling {t}: lead vector on lead {} is zero; the term vanishes",
                lead + 1
            ));
        }
    };

    for (idx, term) in spec.couplings.iter().enumerate() {
        let t = idx + 1;
        if !is_finite_c(term.amplitude) {
            report.error(format!("coupling {t}: amplitude must be finite"));
        }
        for lead in term.leads() {
            if lead >= n {
                report.error(format!(
                    "coupling {t}: lead index {} out of range (1..={n})",
                    lead + 1
                ));
            }
        }
        match &term.kind {
            CouplingKind::DotLead {
                lead,
                dot_vector,
                lead_vector,
            } => {
                if dot_vector.len() != m {
                    report.error(format!(
                        "coupling {t}: dot vector has length {} but the dot has dimension {m}",
                        dot_vector.len()
                    ));
                }
                if dot_vector.iter().any(|z| !is_finite_c(*z)) {
                    report.error(format!("coupling {t}: dot vector has non-finite entries"));
                }
                check_vector(&mut report, t, *lead, lead_vector);
            }
            CouplingKind::LeadLead {
                left_lead,
                left_vector,
                right_lead,
                right_vector,
            } => {
                if left_lead == right_lead {
                    report.error(format!(
                        "coupling {t}: lead_lead coupling must join two distinct leads"
                    ));
                }
                check_vector(&mut report, t, *left_lead, left_vector);
                check_vector(&mut report, t, *right_lead, right_vector);
            }
        }
    }

    if n >= 2 && !report.has_errors() {
        connectivity_warnings(spec, &mut report);
    }
    report
}

/// Leads joined through couplings (the dot counts as one node).
fn connectivity_warnings(spec: &SystemSpec, report: &mut ValidationReport) {
    let n = spec.leads.len();
    // union-find over leads plus a dot node at index n
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    for term in &spec.couplings {
        if term.amplitude == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (a, b) = match &term.kind {
            CouplingKind::DotLead {
                lead,
                dot_vector,
                lead_vector,
            } => {
                if lead_vector.is_zero() || dot_vector.iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                (*lead, n)
            }
            CouplingKind::LeadLead {
                left_lead,
                left_vector,
                right_lead,
                right_vector,
            } => {
                if left_vector.is_zero() || right_vector.is_zero() {
                    continue;
                }
                (*left_lead, *right_lead)
            }
        };
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut disconnected = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            if find(&mut parent, j) != find(&mut parent, k) {
                disconnected.push((j, k));
            }
        }
    }
    let total_pairs = n * (n - 1) / 2;
    if disconnected.len() == total_pairs {
        report.warning("leads are disconnected; all currents will be zero".to_string());
    } else {
        for (j, k) in disconnected {
            report.warning(format!(
                "leads {} and {} are disconnected; transmission between them vanishes",
                j + 1,
                k + 1
            ));
        }
    }
}

/// Intersection of the bands of the given leads. Empty input yields the
/// empty set.
pub fn spectral_intersection(spec: &SystemSpec, leads: &[usize]) -> IntervalSet {
    let mut iter = leads.iter();
    let Some(&first) = iter.next() else {
        return IntervalSet::empty();
    };
    let mut acc = Some(spec.leads[first].band());
    for &j in iter {
        acc = acc.and_then(|a| a.intersect(&spec.leads[j].band()));
    }
    match acc {
        Some(iv) => IntervalSet::from_interval(iv),
        None => IntervalSet::empty(),
    }
}
