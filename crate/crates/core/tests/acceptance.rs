// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use common::*;
use lbtransport::oracle::ness_plateaus;
use lbtransport::scattering::{optical_residual, unitarity_residual};
use lbtransport::spectral::{band_point, eigenfunction, lead_green, GreenOptions, DEFAULT_EDGE_FRACTION};
use lbtransport::{current_report, solve_scattering, CouplingSpace, LeadSpec, QuadratureConfig, SolverConfig, SystemSpec};
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn band_hull(spec: &SystemSpec) -> (f64, f64) {
    let lo = spec.leads.iter().map(|l| l.band().lo).fold(f64::INFINITY, f64::min);
    let hi = spec.leads.iter().map(|l| l.band().hi).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn ness_identity() -> Outcome {
    let start = Instant::now();
    let spec = benchmark();
    let quad = current_report(&spec, &QuadratureConfig::default()).unwrap();
    let (_, plateau) = ness_plateaus(&spec, 400, (50.0, 150.0), 0.5).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let dev = (0..2)
        .map(|k| rel(quad.charge_currents[k].value, plateau.charge[k].value))
        .fold(0.0, f64::max);
    Outcome {
        pass: dev < 0.01 && elapsed < 120.0,
        detail: format!(
            "j_1 quadrature {:.10} vs plateau {:.10}, max relative deviation {dev:.2e} (< 1e-2), {elapsed:.1} s",
            quad.charge_currents[0].value, plateau.charge[0].value
        ),
    }
}

/// Worst unitarity and optical residuals over the random family.
fn random_family_residuals() -> (f64, f64, usize, usize) {
    let (mut worst_u, mut worst_o) = (0.0f64, 0.0f64);
    let (mut solved, mut skipped) = (0, 0);
    for seed in 0..20 {
        let spec = random_system(seed).checked().unwrap();
        let space = CouplingSpace::build(&spec);
        let (lo, hi) = band_hull(&spec);
        for e in interior_grid(lo, hi, 200) {
            match solve_scattering(&spec, &space, e, &SolverConfig::default()) {
                Ok(d) => {
                    solved += 1;
                    worst_u = worst_u.max(unitarity_residual(&d.s_matrix));
                    worst_o = worst_o.max(optical_residual(&d.t_matrix));
                }
                Err(_) => skipped += 1,
            }
        }
    }
    (worst_u, worst_o, solved, skipped)
}

fn unitarity(residuals: (f64, f64, usize, usize)) -> Outcome {
    let (u, _, solved, skipped) = residuals;
    Outcome {
        pass: u < 1e-8 && solved > 0,
        detail: format!("worst ||SS* - 1|| = {u:.2e} (< 1e-8) over {solved} energies, {skipped} excluded"),
    }
}

fn optical(residuals: (f64, f64, usize, usize)) -> Outcome {
    let (_, o, solved, skipped) = residuals;
    Outcome {
        pass: o < 1e-8 && solved > 0,
        detail: format!("worst ||T - T* + 2 pi i T T*|| = {o:.2e} (< 1e-8) over {solved} energies, {skipped} excluded"),
    }
}

fn broken_time_reversal() -> Outcome {
    let spec = three_terminal_loop();
    let space = CouplingSpace::build(&spec);
    let mut asym = 0.0f64;
    for e in interior_grid(-2.0, 2.0, 200) {
        let d = solve_scattering(&spec, &space, e, &SolverConfig::default()).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                asym = asym.max((d.t_matrix[(k, j)].norm_sqr() - d.t_matrix[(j, k)].norm_sqr()).abs());
            }
        }
    }
    let r = current_report(&spec, &QuadratureConfig::default()).unwrap();
    let bound = 3.0 * r.max_charge_error();
    Outcome {
        pass: asym > 1e-3 && r.charge_defect <= bound,
        detail: format!(
            "max | |T_kj|^2 - |T_jk|^2 | = {asym:.3e} (> 1e-3), |sum j_k| = {:.2e} <= 3 x max error = {bound:.2e}",
            r.charge_defect
        ),
    }
}

fn perfect_chain() -> Outcome {
    let spec = joined_chain(1.0, r(1.0));
    let space = CouplingSpace::build(&spec);
    let (mut worst, mut worst_oracle) = (0.0f64, 0.0f64);
    for e in interior_grid(-2.0, 2.0, 200) {
        let d = solve_scattering(&spec, &space, e, &SolverConfig::default()).unwrap();
        let t = d.transmission(0, 1).unwrap();
        worst = worst.max((t - 1.0).abs());
        worst_oracle = worst_oracle.max((t - transfer_matrix_transmission(1.0, r(1.0), e)).abs());
    }
    Outcome {
        pass: worst < 1e-8 && worst_oracle < 1e-8,
        detail: format!("max |T(E) - 1| = {worst:.2e}, max deviation from transfer matrix = {worst_oracle:.2e} (< 1e-8)"),
    }
}

fn equilibrium_null() -> Outcome {
    let spec = resonant_level(0.2, 0.4, 50.0, 0.3, 0.3);
    let r = current_report(&spec, &QuadratureConfig::default()).unwrap();
    let quad_ok = r
        .charge_currents
        .iter()
        .chain(&r.energy_currents)
        .all(|e| e.value.abs() <= e.error && e.error < 1e-9);
    let largest = r
        .charge_currents
        .iter()
        .chain(&r.energy_currents)
        .map(|e| e.value.abs())
        .fold(0.0, f64::max);
    let (_, p) = ness_plateaus(&spec, 400, (50.0, 150.0), 0.5).unwrap();
    let plateaus: Vec<_> = p.charge.iter().chain(&p.energy).collect();
    let ness_ok = plateaus.iter().all(|pl| pl.value.abs() <= pl.fluctuation);
    let worst = plateaus.iter().map(|pl| pl.value.abs()).fold(0.0, f64::max);
    let band = plateaus.iter().map(|pl| pl.fluctuation).fold(0.0, f64::max);
    Outcome {
        pass: quad_ok && ness_ok,
        detail: format!(
            "largest quadrature current {largest:.1e}; largest |plateau| {worst:.2e} within fluctuation band {band:.2e}"
        ),
    }
}

fn energy_current() -> Outcome {
    let symmetric = resonant_level(0.0, 0.4, 50.0, 0.3, -0.3);
    let r = current_report(&symmetric, &QuadratureConfig::default()).unwrap();
    let (phi, j) = (r.energy_currents[0], r.charge_currents[0]);
    let symmetric_ok = phi.value.abs() <= phi.error && j.value.abs() > 1e3 * j.error;

    let spec = benchmark();
    let r = current_report(&spec, &QuadratureConfig::default()).unwrap();
    let (_, p) = ness_plateaus(&spec, 400, (50.0, 150.0), 0.5).unwrap();
    let dev = (0..2)
        .map(|k| rel(r.energy_currents[k].value, p.energy[k].value))
        .fold(0.0, f64::max);
    Outcome {
        pass: symmetric_ok && dev < 0.02,
        detail: format!(
            "symmetric: Phi_1 = {:.1e} +- {:.1e}, j_1 = {:.6}; asymmetric: Phi_1 {:.8} vs plateau {:.8}, deviation {dev:.2e} (< 2e-2)",
            phi.value,
            phi.error,
            j.value,
            r.energy_currents[0].value,
            p.energy[0].value
        ),
    }
}

fn spectral_foundations() -> Outcome {
    let lead = LeadSpec::new(1.0, 0.0, 1.0, 0.0);
    let grid = interior_grid(-2.0, 2.0, 20);
    let (len, eta) = (2000, 1e-3);
    let mut resolvent = 0.0f64;
    let mut plemelj = 0.0f64;
    for &e in &grid {
        let z = Complex64::new(e, eta);
        let p = band_point(&lead, e, DEFAULT_EDGE_FRACTION).unwrap();
        for n in 1..=4 {
            for m in 1..=4 {
                let closed = lead_green(&lead, z, n, m, &GreenOptions::default()).unwrap();
                let oracle = truncated_resolvent(&lead, len, z, n, m);
                resolvent = resolvent.max((closed - oracle).norm());

                let g0 = lead_green(&lead, r(e), n, m, &GreenOptions::default()).unwrap();
                let spectral = eigenfunction(&lead, &p, n) * eigenfunction(&lead, &p, m);
                plemelj = plemelj.max((-g0.im / PI - spectral).abs());
            }
        }
    }
    Outcome {
        pass: resolvent < 1e-6 && plemelj < 1e-8,
        detail: format!(
            "closed form vs truncated resolvent (L = {len}, eta = {eta:e}): {resolvent:.3e} (< 1e-6); Plemelj residual {plemelj:.2e} (< 1e-8)"
        ),
    }
}

fn main() {
    let residuals = random_family_residuals();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 scattering vs time-evolved currents", Box::new(ness_identity)),
        ("2 S-matrix unitarity", Box::new(move || unitarity(residuals))),
        ("3 optical theorem", Box::new(move || optical(residuals))),
        ("4 conservation without time reversal", Box::new(broken_time_reversal)),
        ("5 perfect-chain reconstitution", Box::new(perfect_chain)),
        ("6 equilibrium null test", Box::new(equilibrium_null)),
        ("7 energy current", Box::new(energy_current)),
        ("8 lead spectral data", Box::new(spectral_foundations)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
