// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form spectral data of an uncoupled semi-infinite chain.
//!
//! With `E = ε − 2t·cos k`, `k ∈ (0, π)`, the energy-normalized
//! generalized eigenfunctions are
//!
//! ```text
//! ψ_E(n) = sin(k·n) / sqrt(π·t·sin k),      Σ_n ψ_E(n) ψ_E'(n) = δ(E − E')
//! ```
//!
//! and the retarded Green's function `G(z) = (z − H)^{-1}` has elements
//!
//! ```text
//! G(n, m; z) = −(χ^{n<+n>} − χ^{n>−n<}) / (t·(χ − 1/χ)),
//! ```
//!
//! where `χ` is the root of `χ + 1/χ = (ε − z)/t` with `|χ| < 1` off the
//! real axis. On the band it is the `+i0` limit `χ = e^{ik}`, which turns
//! the expression into `−sin(k·n<)·e^{ik·n>}/(t·sin k)`. Off the band it is
//! the real decaying root.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{DotSpec, LeadSpec};

/// Default edge-exclusion margin as a fraction of the lead bandwidth.
pub const DEFAULT_EDGE_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpectralError {
    #[error("energy {energy} lies outside the band [{lo}, {hi}]")]
    OutOfBand { energy: f64, lo: f64, hi: f64 },
    #[error("energy {energy} is within the edge margin of the band edge {edge}")]
    AtBandEdge { energy: f64, edge: f64 },
    #[error("real energy {energy} lies outside the band [{lo}, {hi}] and off-band continuation is disabled")]
    OutOfBandRealAxis { energy: f64, lo: f64, hi: f64 },
    #[error("spectral parameter {re}{im:+}i lies in the lower half plane")]
    LowerHalfPlane { re: f64, im: f64 },
}

/// A point of the open band, parametrized by its wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub energy: f64,
    /// `k ∈ (0, π)` with `energy = onsite − 2·hopping·cos k`.
    pub wavenumber: f64,
    /// `dE/dk = 2·hopping·sin k`.
    pub velocity: f64,
}

fn edge_margin(lead: &LeadSpec, edge_fraction: f64) -> f64 {
    edge_fraction * lead.bandwidth()
}

/// Distance check against both band edges; applies on either side of an
/// edge since the Green's function diverges there from both directions.
fn check_edges(lead: &LeadSpec, energy: f64, edge_fraction: f64) -> Result<(), SpectralError> {
    let band = lead.band();
    let margin = edge_margin(lead, edge_fraction);
    for edge in [band.lo, band.hi] {
        if (energy - edge).abs() <= margin {
            return Err(SpectralError::AtBandEdge { energy, edge });
        }
    }
    Ok(())
}

/// Wavenumber, velocity and energy of an interior band point.
pub fn band_point(
    lead: &LeadSpec,
    energy: f64,
    edge_fraction: f64,
) -> Result<BandPoint, SpectralError> {
    let band = lead.band();
    if !(band.lo <= energy && energy <= band.hi) {
        return Err(SpectralError::OutOfBand {
            energy,
            lo: band.lo,
            hi: band.hi,
        });
    }
    check_edges(lead, energy, edge_fraction)?;
    let cos_k = ((lead.onsite - energy) / (2.0 * lead.hopping)).clamp(-1.0, 1.0);
    let k = cos_k.acos();
    Ok(BandPoint {
        energy,
        wavenumber: k,
        velocity: 2.0 * lead.hopping * k.sin(),
    })
}

impl BandPoint {
    /// Energy reconstructed from the wavenumber.
    pub fn energy_of(lead: &LeadSpec, wavenumber: f64) -> f64 {
        lead.onsite - 2.0 * lead.hopping * wavenumber.cos()
    }
}

/// Energy-normalized generalized eigenfunction `ψ_E(site)`, real-valued.
pub fn eigenfunction(lead: &LeadSpec, point: &BandPoint, site: usize) -> f64 {
    let k = point.wavenumber;
    (k * site as f64).sin() / (std::f64::consts::PI * lead.hopping * k.sin()).sqrt()
}

/// Options for [`lead_green`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenOptions {
    pub edge_fraction: f64,
    /// On the real axis outside the band, return the decaying-branch
    /// continuation instead of an error.
    pub allow_offband: bool,
}

impl Default for GreenOptions {
    fn default() -> Self {
        Self {
            edge_fraction: DEFAULT_EDGE_FRACTION,
            allow_offband: false,
        }
    }
}

/// Retarded Green's function of one lead at a fixed spectral parameter.
#[derive(Debug, Clone, Copy)]
pub struct LeadGreen {
    chi: Complex64,
    /// `t·(χ − 1/χ)`
    denom: Complex64,
}

impl LeadGreen {
    pub fn new(lead: &LeadSpec, z: Complex64, opts: &GreenOptions) -> Result<Self, SpectralError> {
        if z.im < 0.0 {
            return Err(SpectralError::LowerHalfPlane { re: z.re, im: z.im });
        }
        let t = lead.hopping;
        let chi = if z.im == 0.0 {
            let e = z.re;
            check_edges(lead, e, opts.edge_fraction)?;
            let band = lead.band();
            if band.contains(e) {
                let k = ((lead.onsite - e) / (2.0 * t)).clamp(-1.0, 1.0).acos();
                Complex64::from_polar(1.0, k)
            } else if opts.allow_offband {
                let w = (lead.onsite - e) / t;
                // |w| > 2: real roots of χ² − wχ + 1 = 0, take the small one
                let big = 0.5 * (w + w.signum() * (w * w - 4.0).sqrt());
                Complex64::new(1.0 / big, 0.0)
            } else {
                return Err(SpectralError::OutOfBandRealAxis {
                    energy: e,
                    lo: band.lo,
                    hi: band.hi,
                });
            }
        } else {
            let w = (Complex64::new(lead.onsite, 0.0) - z) / t;
            let mut s = (w * w - 4.0).sqrt();
            // pick the sign that avoids cancellation in w + s
            if (w.conj() * s).re < 0.0 {
                s = -s;
            }
            let big = 0.5 * (w + s);
            big.inv()
        };
        Ok(Self {
            chi,
            denom: t * (chi - chi.inv()),
        })
    }

    /// The decaying root `χ` (`e^{ik}` on the band).
    pub fn chi(&self) -> Complex64 {
        self.chi
    }

    /// `G(n, m)` for sites `n, m ≥ 1`.
    pub fn element(&self, n: usize, m: usize) -> Complex64 {
        let (lo, hi) = if n <= m { (n, m) } else { (m, n) };
        let sum = self.chi.powu((lo + hi) as u32);
        let diff = self.chi.powu((hi - lo) as u32);
        -(sum - diff) / self.denom
    }
}

/// Single matrix element `⟨n|(z − H)^{-1}|m⟩` of the lead's retarded
/// Green's function. `Im z = 0` means the `+i0` boundary value.
pub fn lead_green(
    lead: &LeadSpec,
    z: Complex64,
    n: usize,
    m: usize,
    opts: &GreenOptions,
) -> Result<Complex64, SpectralError> {
    Ok(LeadGreen::new(lead, z, opts)?.element(n, m))
}

/// `(H_S − E)·x + y`: the dot block of the stationary equations in residual
/// form, so that no dot resolvent is ever inverted.
pub fn dot_resolvent_residual(
    dot: &DotSpec,
    energy: f64,
    x: &DVector<Complex64>,
    y: &DVector<Complex64>,
) -> DVector<Complex64> {
    &dot.matrix * x - x.scale(energy) + y
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lead(hopping: f64, onsite: f64) -> LeadSpec {
        LeadSpec::new(hopping, onsite, 1.0, 0.0)
    }

    #[test]
    fn band_center_point() {
        let p = band_point(&lead(1.0, 0.0), 0.0, DEFAULT_EDGE_FRACTION).unwrap();
        assert!((p.wavenumber - PI / 2.0).abs() < 1e-15);
        assert!((p.velocity - 2.0).abs() < 1e-15);

        let p = band_point(&lead(0.5, 1.0), 1.0, DEFAULT_EDGE_FRACTION).unwrap();
        assert!((p.wavenumber - PI / 2.0).abs() < 1e-15);
        assert!((p.velocity - 1.0).abs() < 1e-15);
    }

    #[test]
    fn edge_and_outside() {
        let l = lead(1.0, 0.0);
        assert!(matches!(
            band_point(&l, -2.0 + 1e-12, DEFAULT_EDGE_FRACTION),
            Err(SpectralError::AtBandEdge { .. })
        ));
        assert!(matches!(
            band_point(&l, 2.5, DEFAULT_EDGE_FRACTION),
            Err(SpectralError::OutOfBand { .. })
        ));
    }

    #[test]
    fn eigenfunction_nodes_and_surface_value() {
        let l = lead(1.0, 0.0);
        let p = band_point(&l, 0.0, DEFAULT_EDGE_FRACTION).unwrap();
        assert!(eigenfunction(&l, &p, 2).abs() < 1e-15);
        assert!((eigenfunction(&l, &p, 1) - (1.0 / PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn surface_green_at_band_center() {
        let g = lead_green(
            &lead(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            1,
            1,
            &GreenOptions::default(),
        )
        .unwrap();
        assert!((g - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn green_is_symmetric() {
        let l = lead(0.7, 0.3);
        let g = LeadGreen::new(&l, Complex64::new(0.45, 0.0), &GreenOptions::default()).unwrap();
        for n in 1..6 {
            for m in 1..6 {
                assert_eq!(g.element(n, m), g.element(m, n));
            }
        }
    }

    #[test]
    fn offband_requires_flag() {
        let l = lead(1.0, 0.0);
        let z = Complex64::new(3.0, 0.0);
        assert!(matches!(
            lead_green(&l, z, 1, 1, &GreenOptions::default()),
            Err(SpectralError::OutOfBandRealAxis { .. })
        ));
        let opts = GreenOptions {
            allow_offband: true,
            ..Default::default()
        };
        let g = lead_green(&l, z, 1, 1, &opts).unwrap();
        // surface element of the semi-infinite chain: (z − sqrt(z²−4t²))/(2t²)
        let expected = (3.0 - (9.0_f64 - 4.0).sqrt()) / 2.0;
        assert!((g.re - expected).abs() < 1e-14 && g.im == 0.0);
        let below = lead_green(&l, Complex64::new(-3.0, 0.0), 1, 1, &opts).unwrap();
        assert!((below.re + expected).abs() < 1e-14);
    }

    #[test]
    fn offband_continuation_matches_small_eta() {
        let l = lead(1.0, 0.2);
        let opts = GreenOptions {
            allow_offband: true,
            ..Default::default()
        };
        for e in [-2.5, 2.9] {
            let real = lead_green(&l, Complex64::new(e, 0.0), 2, 3, &opts).unwrap();
            let near = lead_green(&l, Complex64::new(e, 1e-9), 2, 3, &opts).unwrap();
            assert!((real - near).norm() < 1e-8);
        }
    }

    #[test]
    fn lower_half_plane_rejected() {
        assert!(matches!(
            lead_green(&lead(1.0, 0.0), Complex64::new(0.0, -0.1), 1, 1, &GreenOptions::default()),
            Err(SpectralError::LowerHalfPlane { .. })
        ));
    }

    #[test]
    fn dot_residual_examples() {
        let one = DotSpec::diagonal(&[0.2]);
        let x = DVector::from_vec(vec![Complex64::new(0.3, -1.1)]);
        let zero = DVector::zeros(1);
        assert_eq!(dot_resolvent_residual(&one, 0.2, &x, &zero).norm(), 0.0);

        let empty = DotSpec::empty();
        let r = dot_resolvent_residual(&empty, 0.5, &DVector::zeros(0), &DVector::zeros(0));
        assert_eq!(r.len(), 0);

        let two = DotSpec::diagonal(&[1.0, -1.0]);
        let x = DVector::from_element(2, Complex64::new(1.0, 0.0));
        let r = dot_resolvent_residual(&two, 0.0, &x, &DVector::zeros(2));
        assert_eq!(r[0], Complex64::new(1.0, 0.0));
        assert_eq!(r[1], Complex64::new(-1.0, 0.0));
    }
}
