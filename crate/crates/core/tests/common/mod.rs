// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Shared systems and independent reference computations for the
//! integration tests. Nothing here calls into the solver under test.

#![allow(dead_code)]

use std::f64::consts::PI;

use lbtransport::{CouplingTerm, DotSpec, LeadSpec, SiteVector, SystemSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// One dot level coupled to site 1 of two leads.
pub fn resonant_level(level: f64, v: f64, beta: f64, mu1: f64, mu2: f64) -> SystemSpec {
    SystemSpec {
        leads: vec![LeadSpec::new(1.0, 0.0, beta, mu1), LeadSpec::new(1.0, 0.0, beta, mu2)],
        dot: DotSpec::diagonal(&[level]),
        couplings: vec![
            CouplingTerm::dot_lead(r(v), 0, vec![r(1.0)], SiteVector::unit(1)),
            CouplingTerm::dot_lead(r(v), 1, vec![r(1.0)], SiteVector::unit(1)),
        ],
        charge: 1.0,
    }
}

/// The standard benchmark: level 0.2, couplings 0.4, β = 50, μ = ±0.3.
pub fn benchmark() -> SystemSpec {
    resonant_level(0.2, 0.4, 50.0, 0.3, -0.3)
}

/// Two identical leads joined surface to surface by a single bond.
pub fn joined_chain(hopping: f64, bond: Complex64) -> SystemSpec {
    SystemSpec {
        leads: vec![
            LeadSpec::new(hopping, 0.0, 10.0, 0.1),
            LeadSpec::new(hopping, 0.0, 10.0, -0.1),
        ],
        dot: DotSpec::empty(),
        couplings: vec![CouplingTerm::lead_lead(
            bond,
            0,
            SiteVector::unit(1),
            1,
            SiteVector::unit(1),
        )],
        charge: 1.0,
    }
}

/// Three leads around one dot level, with a complex direct bond between
/// leads 1 and 2. The loop dot-1-2-dot encloses a flux, so time reversal
/// is broken.
pub fn three_terminal_loop() -> SystemSpec {
    SystemSpec {
        leads: vec![
            LeadSpec::new(1.0, 0.0, 20.0, 0.4),
            LeadSpec::new(1.0, 0.0, 20.0, 0.0),
            LeadSpec::new(1.0, 0.0, 20.0, -0.3),
        ],
        dot: DotSpec::diagonal(&[0.1]),
        couplings: vec![
            CouplingTerm::dot_lead(r(0.5), 0, vec![r(1.0)], SiteVector::unit(1)),
            CouplingTerm::dot_lead(r(0.5), 1, vec![r(1.0)], SiteVector::unit(1)),
            CouplingTerm::dot_lead(r(0.4), 2, vec![r(1.0)], SiteVector::unit(1)),
            CouplingTerm::lead_lead(
                Complex64::from_polar(0.6, 0.5 * PI),
                0,
                SiteVector::unit(1),
                1,
                SiteVector::unit(1),
            ),
        ],
        charge: 1.0,
    }
}

fn random_site_vector(rng: &mut ChaCha8Rng) -> SiteVector {
    let support = rng.gen_range(1..=3);
    let mut sites: Vec<usize> = (1..=4).collect();
    let mut pairs = Vec::new();
    for _ in 0..support {
        let i = rng.gen_range(0..sites.len());
        let s = sites.remove(i);
        pairs.push((s, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    }
    SiteVector::from_pairs(pairs)
}

/// Random system with N ∈ {2, 3}, M ∈ {0..3}, complex couplings and
/// lead supports of at most three sites.
pub fn random_system(seed: u64) -> SystemSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=3);
    let m = rng.gen_range(0..=3);
    let leads: Vec<LeadSpec> = (0..n)
        .map(|_| {
            LeadSpec::new(
                rng.gen_range(0.6..1.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(5.0..50.0),
                rng.gen_range(-0.5..0.5),
            )
        })
        .collect();
    let mut h = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = r(rng.gen_range(-1.0..1.0));
        for j in i + 1..m {
            let z = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let mut couplings = Vec::new();
    for lead in 0..n {
        if m > 0 {
            let dot_vector = (0..m)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let amplitude = Complex64::from_polar(rng.gen_range(0.2..0.7), rng.gen_range(0.0..2.0 * PI));
            couplings.push(CouplingTerm::dot_lead(
                amplitude,
                lead,
                dot_vector,
                random_site_vector(&mut rng),
            ));
        }
    }
    let direct = if m == 0 { n } else { rng.gen_range(0..=1) };
    for i in 0..direct {
        let a = i % n;
        let b = (i + 1) % n;
        let amplitude = Complex64::from_polar(rng.gen_range(0.2..0.9), rng.gen_range(0.0..2.0 * PI));
        couplings.push(CouplingTerm::lead_lead(
            amplitude,
            a,
            random_site_vector(&mut rng),
            b,
            random_site_vector(&mut rng),
        ));
    }
    SystemSpec {
        leads,
        dot: DotSpec::new(h),
        couplings,
        charge: 1.0,
    }
}

/// Surface element of the retarded Green's function of a semi-infinite
/// chain, from the quadratic self-consistency `t²g² − x·g + 1 = 0`.
pub fn surface_green(lead: &LeadSpec, energy: f64) -> Complex64 {
    let t = lead.hopping;
    let x = energy - lead.onsite;
    let disc = x * x - 4.0 * t * t;
    if disc < 0.0 {
        c(x, -(-disc).sqrt()) / (2.0 * t * t)
    } else {
        r((x - x.signum() * disc.sqrt()) / (2.0 * t * t))
    }
}

/// Transmission probabilities from the Green's function of an enlarged
/// central region: the dot plus the first `K_j` sites of every lead, where
/// `K_j` is the deepest coupled site. The remaining lead tails enter as
/// surface self-energies. Entry `(j, k)` is the probability from lead `k`
/// into lead `j`.
pub fn green_transmission(spec: &SystemSpec, energy: f64) -> DMatrix<f64> {
    use lbtransport::model::CouplingKind;
    let n = spec.num_leads();
    let m = spec.dot.dim();
    let mut depth = vec![1usize; n];
    let deepest = |v: &SiteVector| v.max_site().unwrap_or(1);
    for term in &spec.couplings {
        match &term.kind {
            CouplingKind::DotLead {
                lead, lead_vector, ..
            } => depth[*lead] = depth[*lead].max(deepest(lead_vector)),
            CouplingKind::LeadLead {
                left_lead,
                left_vector,
                right_lead,
                right_vector,
            } => {
                depth[*left_lead] = depth[*left_lead].max(deepest(left_vector));
                depth[*right_lead] = depth[*right_lead].max(deepest(right_vector));
            }
        }
    }
    let mut offset = vec![m; n];
    for j in 1..n {
        offset[j] = offset[j - 1] + depth[j - 1];
    }
    let dim = offset[n - 1] + depth[n - 1];
    let at = |lead: usize, site: usize| offset[lead] + site - 1;

    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    h.view_mut((0, 0), (m, m)).copy_from(&spec.dot.matrix);
    for (j, lead) in spec.leads.iter().enumerate() {
        for s in 1..=depth[j] {
            h[(at(j, s), at(j, s))] = r(lead.onsite);
            if s < depth[j] {
                h[(at(j, s), at(j, s + 1))] = r(-lead.hopping);
                h[(at(j, s + 1), at(j, s))] = r(-lead.hopping);
            }
        }
    }
    for term in &spec.couplings {
        let (left, right): (Vec<(usize, Complex64)>, Vec<(usize, Complex64)>) = match &term.kind {
            CouplingKind::DotLead {
                lead,
                dot_vector,
                lead_vector,
            } => (
                dot_vector.iter().copied().enumerate().collect(),
                lead_vector.iter().map(|(s, z)| (at(*lead, s), z)).collect(),
            ),
            CouplingKind::LeadLead {
                left_lead,
                left_vector,
                right_lead,
                right_vector,
            } => (
                left_vector.iter().map(|(s, z)| (at(*left_lead, s), z)).collect(),
                right_vector.iter().map(|(s, z)| (at(*right_lead, s), z)).collect(),
            ),
        };
        for &(a, x) in &left {
            for &(b, y) in &right {
                let z = term.amplitude * x * y.conj();
                h[(a, b)] += z;
                h[(b, a)] += z.conj();
            }
        }
    }
    let mut sigma = vec![r(0.0); n];
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        a[(i, i)] = r(energy);
    }
    a -= &h;
    for (j, lead) in spec.leads.iter().enumerate() {
        sigma[j] = lead.hopping * lead.hopping * surface_green(lead, energy);
        let b = at(j, depth[j]);
        a[(b, b)] -= sigma[j];
    }
    let g = a.try_inverse().expect("central region resolvent");
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            return f64::NAN;
        }
        let gj = -2.0 * sigma[j].im;
        let gk = -2.0 * sigma[k].im;
        gj * gk * g[(at(j, depth[j]), at(k, depth[k]))].norm_sqr()
    })
}

/// Transmission of two semi-infinite chains (onsite 0, hopping `t`) joined
/// by the matrix element `w` between their surface sites, by propagating a
/// unit outgoing wave back through the junction.
pub fn transfer_matrix_transmission(t: f64, w: Complex64, energy: f64) -> f64 {
    let k = (-energy / (2.0 * t)).acos();
    let e = |n: f64| Complex64::from_polar(1.0, k * n);
    // right chain: sites 1, 2, ... carry ψ_n = e^{ikn}
    let (psi1, psi2) = (e(1.0), e(2.0));
    // row of site 1: E ψ1 = conj(w) ψ0 − t ψ2
    let psi0 = (energy * psi1 + t * psi2) / w.conj();
    // row of site 0: E ψ0 = −t ψ_{−1} + w ψ1
    let psim1 = (w * psi1 - energy * psi0) / t;
    // ψ0 = A + B, ψ_{−1} = A e^{−ik} + B e^{ik}
    let (em, ep) = (e(-1.0), e(1.0));
    let amp = (psim1 - ep * psi0) / (em - ep);
    1.0 / amp.norm_sqr()
}

/// Breit–Wigner transmission of [`resonant_level`] with equal leads.
pub fn breit_wigner(level: f64, v: f64, energy: f64) -> f64 {
    let lead = LeadSpec::new(1.0, 0.0, 1.0, 0.0);
    let sigma = v * v * surface_green(&lead, energy);
    let gamma = -2.0 * sigma.im;
    gamma * gamma / (r(energy - level) - 2.0 * sigma).norm_sqr()
}

/// `(z − H_L)^{-1}_{nm}` for an `L`-site chain by the tridiagonal
/// (Thomas) algorithm. Sites are 1-based.
pub fn truncated_resolvent(lead: &LeadSpec, len: usize, z: Complex64, n: usize, m: usize) -> Complex64 {
    let diag = z - lead.onsite;
    let off = r(lead.hopping);
    let mut cp = vec![r(0.0); len];
    let mut dp = vec![r(0.0); len];
    for i in 0..len {
        let rhs = if i + 1 == m { r(1.0) } else { r(0.0) };
        if i == 0 {
            cp[0] = off / diag;
            dp[0] = rhs / diag;
        } else {
            let denom = diag - off * cp[i - 1];
            cp[i] = off / denom;
            dp[i] = (rhs - off * dp[i - 1]) / denom;
        }
    }
    let mut x = vec![r(0.0); len];
    x[len - 1] = dp[len - 1];
    for i in (0..len - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x[n - 1]
}

/// Landauer current for two leads from a transmission function, by
/// composite Simpson on `[a, b]`: `j₁ = −(e/2π)∫(f₁ − f₂)𝒯`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn fermi(e: f64, beta: f64, mu: f64) -> f64 {
    0.5 * (1.0 - (0.5 * beta * (e - mu)).tanh())
}

/// Interior grid of `n` points strictly inside `(lo, hi)`.
pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n + 1) as f64;
    (1..=n).map(|i| lo + i as f64 * h).collect()
}
