// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Steady-state charge and energy currents through a finite quantum dot
//! coupled to semi-infinite tight-binding leads.
//!
//! Currents come from the scattering matrix of the coupled system
//! ([`scattering`], [`transport`]) and can be cross-checked against exact
//! time evolution of a truncated lattice ([`oracle`]).

pub mod cli;
pub mod config;
pub mod interval;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod scattering;
pub mod spectral;
pub mod transport;

pub use config::{load_config, parse_config, ConfigError};
pub use interval::{Interval, IntervalSet};
pub use model::{
    spectral_intersection, validate, CouplingTerm, DotSpec, LeadSpec, SiteVector, SystemSpec,
    ValidationReport,
};
pub use quadrature::{Estimate, QuadratureConfig};
pub use scattering::{solve_scattering, CouplingSpace, ScatteringData, ScatteringError, SolverConfig};
pub use transport::{charge_current, current_report, energy_current, CurrentReport};
