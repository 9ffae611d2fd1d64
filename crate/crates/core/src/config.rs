// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON configuration files.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "charge": 1.0,
//!   "leads": [
//!     { "hopping": 1.0, "onsite": 0.0, "beta": 50.0, "mu": 0.3 },
//!     { "hopping": 1.0, "onsite": 0.0, "beta": "inf", "mu": -0.3 }
//!   ],
//!   "dot": { "dim": 1, "matrix": [[0.2, 0.0]] },
//!   "couplings": [
//!     { "kind": "dot_lead", "amplitude": [0.4, 0.0], "lead": 1,
//!       "dot_vector": [[1.0, 0.0]], "lead_vector": { "1": [1.0, 0.0] } },
//!     { "kind": "lead_lead", "amplitude": [0.1, 0.0],
//!       "left_lead": 1, "left_vector": { "1": [1.0, 0.0] },
//!       "right_lead": 2, "right_vector": { "1": [1.0, 0.0] } }
//!   ]
//! }
//! ```
//!
//! Lead numbers and lead sites are 1-based. Complex numbers are `[re, im]`
//! pairs and the dot matrix is row-major.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CouplingKind, CouplingTerm, DotSpec, LeadSpec, SiteVector, SystemSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("malformed config: {0}")]
    Invalid(String),
}

type Pair = [f64; 2];

fn to_complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn to_pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Beta {
    Finite(f64),
    Named(String),
}

impl Beta {
    fn value(&self) -> Result<f64, ConfigError> {
        match self {
            Beta::Finite(b) => Ok(*b),
            Beta::Named(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            Beta::Named(s) => Err(ConfigError::Invalid(format!(
                "beta must be a number or \"inf\", got \"{s}\""
            ))),
        }
    }

    fn from_value(b: f64) -> Self {
        if b == f64::INFINITY {
            Beta::Named("inf".into())
        } else {
            Beta::Finite(b)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLead {
    hopping: f64,
    onsite: f64,
    beta: Beta,
    mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDot {
    dim: usize,
    matrix: Vec<Pair>,
}

/// Site-indexed entries. JSON keys are strings; integer-valued keys in
/// other key-value encodings arrive here as their decimal text.
type RawSiteVector = BTreeMap<String, Pair>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawCoupling {
    DotLead {
        amplitude: Pair,
        lead: usize,
        dot_vector: Vec<Pair>,
        lead_vector: RawSiteVector,
    },
    LeadLead {
        amplitude: Pair,
        left_lead: usize,
        left_vector: RawSiteVector,
        right_lead: usize,
        right_vector: RawSiteVector,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    #[serde(default = "default_charge")]
    charge: f64,
    leads: Vec<RawLead>,
    dot: RawDot,
    #[serde(default)]
    couplings: Vec<RawCoupling>,
}

fn default_charge() -> f64 {
    1.0
}

fn lead_index(one_based: usize) -> Result<usize, ConfigError> {
    one_based
        .checked_sub(1)
        .ok_or_else(|| ConfigError::Invalid("lead numbers start at 1".into()))
}

fn site_vector(raw: &RawSiteVector) -> Result<SiteVector, ConfigError> {
    let mut pairs = Vec::with_capacity(raw.len());
    for (key, value) in raw {
        let site: usize = key
            .trim()
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("site key \"{key}\" is not an integer")))?;
        pairs.push((site, to_complex(*value)));
    }
    Ok(SiteVector::from_pairs(pairs))
}

fn raw_site_vector(v: &SiteVector) -> RawSiteVector {
    v.iter().map(|(s, z)| (s.to_string(), to_pair(z))).collect()
}

impl RawConfig {
    fn into_spec(self) -> Result<SystemSpec, ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema));
        }
        let leads = self
            .leads
            .iter()
            .map(|l| Ok(LeadSpec::new(l.hopping, l.onsite, l.beta.value()?, l.mu)))
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let m = self.dot.dim;
        if self.dot.matrix.len() != m * m {
            return Err(ConfigError::Invalid(format!(
                "dot matrix has {} entries, expected dim² = {}",
                self.dot.matrix.len(),
                m * m
            )));
        }
        let dot = DotSpec::new(DMatrix::from_row_iterator(
            m,
            m,
            self.dot.matrix.iter().copied().map(to_complex),
        ));
        let mut couplings = Vec::with_capacity(self.couplings.len());
        for c in &self.couplings {
            couplings.push(match c {
                RawCoupling::DotLead {
                    amplitude,
                    lead,
                    dot_vector,
                    lead_vector,
                } => CouplingTerm::dot_lead(
                    to_complex(*amplitude),
                    lead_index(*lead)?,
                    dot_vector.iter().copied().map(to_complex).collect(),
                    site_vector(lead_vector)?,
                ),
                RawCoupling::LeadLead {
                    amplitude,
                    left_lead,
                    left_vector,
                    right_lead,
                    right_vector,
                } => CouplingTerm::lead_lead(
                    to_complex(*amplitude),
                    lead_index(*left_lead)?,
                    site_vector(left_vector)?,
                    lead_index(*right_lead)?,
                    site_vector(right_vector)?,
                ),
            });
        }
        Ok(SystemSpec {
            leads,
            dot,
            couplings,
            charge: self.charge,
        })
    }

    fn from_spec(spec: &SystemSpec) -> Self {
        let m = spec.dot.dim();
        let mut matrix = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                matrix.push(to_pair(spec.dot.matrix[(i, j)]));
            }
        }
        let couplings = spec
            .couplings
            .iter()
            .map(|c| match &c.kind {
                CouplingKind::DotLead {
                    lead,
                    dot_vector,
                    lead_vector,
                } => RawCoupling::DotLead {
                    amplitude: to_pair(c.amplitude),
                    lead: lead + 1,
                    dot_vector: dot_vector.iter().copied().map(to_pair).collect(),
                    lead_vector: raw_site_vector(lead_vector),
                },
                CouplingKind::LeadLead {
                    left_lead,
                    left_vector,
                    right_lead,
                    right_vector,
                } => RawCoupling::LeadLead {
                    amplitude: to_pair(c.amplitude),
                    left_lead: left_lead + 1,
                    left_vector: raw_site_vector(left_vector),
                    right_lead: right_lead + 1,
                    right_vector: raw_site_vector(right_vector),
                },
            })
            .collect();
        RawConfig {
            schema: SCHEMA_VERSION,
            charge: spec.charge,
            leads: spec
                .leads
                .iter()
                .map(|l| RawLead {
                    hopping: l.hopping,
                    onsite: l.onsite,
                    beta: Beta::from_value(l.beta),
                    mu: l.mu,
                })
                .collect(),
            dot: RawDot { dim: m, matrix },
            couplings,
        }
    }
}

/// Parses a config document. The result is not yet validated.
pub fn parse_config(text: &str) -> Result<SystemSpec, ConfigError> {
    serde_json::from_str::<RawConfig>(text)?.into_spec()
}

pub fn load_config(path: &Path) -> Result<SystemSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Canonical JSON form of a spec.
pub fn to_json(spec: &SystemSpec) -> String {
    serde_json::to_string_pretty(&RawConfig::from_spec(spec)).expect("config serializes")
}
