// Copyright 2026 The lbtransport Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 invalid system or arguments, 2 numerical
//! failure, 3 unreadable or malformed config and output errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::load_config;
use crate::model::{spectral_intersection, SystemSpec};
use crate::oracle::{self, OracleError, DEFAULT_LEAD_LENGTH, DEFAULT_TIME_STEP};
use crate::quadrature::{Estimate, QuadratureConfig};
use crate::scattering::{solve_scattering, CouplingSpace, ScatteringError, SolverConfig};
use crate::transport::{charge_current, current_report, energy_current, TransportError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Relative agreement required by `ness-verify` for charge currents.
pub const NESS_CHARGE_TOLERANCE: f64 = 0.01;
/// Relative agreement required by `ness-verify` for energy currents.
pub const NESS_ENERGY_TOLERANCE: f64 = 0.02;

pub const CONVENTIONS: &str = "\
Units and sign conventions
--------------------------
hbar = 1. Energies, hoppings and couplings share one energy unit; times are
in inverse energy units.

Electrons carry charge -e. The config key `charge` sets e > 0 (default 1).

Leads are semi-infinite chains with sites n = 1, 2, ...:
    H_j = onsite * sum_n |n><n| - hopping * sum_n (|n><n+1| + |n+1><n|)
with band [onsite - 2*hopping, onsite + 2*hopping], dispersion
E = onsite - 2*hopping*cos(k), k in (0, pi).

A coupling term with amplitude a and vectors (left, right) adds
a |left><right| + conj(a) |right><left| to the Hamiltonian. For dot_lead
terms `left` lives on the dot and `right` on the lead.

Continuum states of lead j are delta-normalized in energy:
    psi_E(n) = sin(k n) / sqrt(pi * hopping * sin k).
Scattering: S(E) = 1 - 2 pi i T(E); the transmission probability from lead
k into lead j is 4 pi^2 |T_jk(E)|^2.

Currents are positive when flowing OUT of a reservoir into the junction:
    j_k   = -e * d<N_k>/dt  ... reported as j_k = -2 e pi * Int dE sum_j (f_k - f_j) |T_kj|^2
    Phi_k = -d<H_k>/dt      ... reported as Phi_k = 2 pi * Int dE sum_j (f_k - f_j) E |T_kj|^2
A reservoir at higher chemical potential loses electrons, so its charge
current (in units of e) is negative. Sum_k j_k = 0 and Sum_k Phi_k = 0 in
the steady state.

ness-verify prepares decoupled reservoirs in equilibrium at (beta_j, mu_j)
with an empty dot, switches the coupling on at t = 0, and averages
    j_k(t) = i e Tr(rho(t) [V, P_k]),  Phi_k(t) = -i Tr(rho(t) [V, P_k H0 P_k])
over the time window.

beta = \"inf\" in the config selects zero temperature (step occupation).
Lead numbers and lead sites are 1-based in configs and outputs.
";

#[derive(Debug, Parser)]
#[command(
    name = "lbtransport",
    version,
    about = "Steady-state currents through tight-binding junctions",
    args_conflicts_with_subcommands = false
)]
struct Cli {
    /// Print units and sign conventions and exit
    #[arg(long)]
    conventions: bool,

    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Lead bands and their pairwise and total intersections
    Spectrum,
    /// Transmission probabilities and residuals on an energy grid
    Transmission,
    /// Worst unitarity and optical-theorem residuals over an energy grid
    SmatrixCheck,
    /// Charge currents out of every reservoir
    Current,
    /// Energy currents out of every reservoir
    EnergyCurrent,
    /// Compare quadrature currents with a time-evolved finite lattice
    NessVerify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Transmission => "transmission",
            Command::SmatrixCheck => "smatrix-check",
            Command::Current => "current",
            Command::EnergyCurrent => "energy-current",
            Command::NessVerify => "ness-verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, clap::Args)]
struct Options {
    /// System description (JSON)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file; standard output when omitted
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Lower end of the energy grid
    #[arg(long, global = true, allow_negative_numbers = true)]
    emin: Option<f64>,

    /// Upper end of the energy grid
    #[arg(long, global = true, allow_negative_numbers = true)]
    emax: Option<f64>,

    /// Number of grid energies
    #[arg(long, global = true, default_value_t = 200)]
    n: usize,

    /// Absolute error target of each current integral
    #[arg(long, global = true)]
    quad_tol: Option<f64>,

    /// Maximum number of quadrature pieces per integral
    #[arg(long, global = true)]
    quad_budget: Option<usize>,

    /// Band-edge exclusion margin as a fraction of the bandwidth
    #[arg(long, global = true)]
    edge_margin: Option<f64>,

    /// Sites kept per lead by ness-verify
    #[arg(long, global = true, default_value_t = DEFAULT_LEAD_LENGTH)]
    lead_length: usize,

    /// Plateau window of ness-verify
    #[arg(long, global = true, value_name = "T1,T2", value_parser = parse_window)]
    window: Option<(f64, f64)>,

    /// Time step of ness-verify inside the window
    #[arg(long, global = true, default_value_t = DEFAULT_TIME_STEP)]
    dt: f64,

    /// Omit the timestamp line
    #[arg(long, global = true)]
    no_header: bool,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| "expected T1,T2".to_string())?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"));
    let (t1, t2) = (parse(a)?, parse(b)?);
    if !(0.0 <= t1 && t1 < t2) {
        return Err("window needs 0 <= T1 < T2".into());
    }
    Ok((t1, t2))
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<TransportError> for Failure {
    fn from(e: TransportError) -> Self {
        Failure::new(EXIT_NUMERICAL, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::TruncationTooShort { .. } | OracleError::LengthCount { .. } => {
                EXIT_VALIDATION
            }
            _ => EXIT_NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

/// One output artifact: named columns (with units) and rows.
#[derive(Debug, Clone, Serialize)]
struct Table {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(command: Command, columns: Vec<String>) -> Self {
        Self {
            command: command.name(),
            generated_at: None,
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("table serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::new();
                if let Some(t) = self.generated_at {
                    s.push_str(&format!("# lbtransport {} generated_at_unix={t}\n", self.command));
                }
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
        }
    }
}

fn quad_config(opts: &Options) -> QuadratureConfig {
    let mut q = QuadratureConfig::default();
    if let Some(t) = opts.quad_tol {
        q.abs_tol = t;
    }
    if let Some(b) = opts.quad_budget {
        q.max_intervals = b;
    }
    if let Some(m) = opts.edge_margin {
        q.edge_fraction = m;
    }
    q
}

fn solver_config(opts: &Options) -> SolverConfig {
    SolverConfig {
        edge_fraction: quad_config(opts).edge_fraction,
        ..SolverConfig::default()
    }
}

fn check_options(opts: &Options) -> Result<(), Failure> {
    let bad = |m: &str| Err(Failure::new(EXIT_VALIDATION, m.to_string()));
    if let Some(t) = opts.quad_tol {
        if !(t > 0.0) {
            return bad("--quad-tol must be positive");
        }
    }
    if let Some(m) = opts.edge_margin {
        if !(0.0..0.5).contains(&m) {
            return bad("--edge-margin must lie in [0, 0.5)");
        }
    }
    if opts.quad_budget == Some(0) {
        return bad("--quad-budget must be positive");
    }
    if !(opts.dt > 0.0) {
        return bad("--dt must be positive");
    }
    if let (Some(a), Some(b)) = (opts.emin, opts.emax) {
        if !(a < b) {
            return bad("--emin must be below --emax");
        }
    }
    Ok(())
}

/// Energy grid: `n` points from `--emin` to `--emax` inclusive. A missing
/// end defaults to the outermost band edge, and defaulted ends are not
/// sampled.
fn energy_grid(spec: &SystemSpec, opts: &Options) -> Result<Vec<f64>, Failure> {
    if opts.n < 2 {
        return Err(Failure::new(EXIT_VALIDATION, "--n must be at least 2"));
    }
    let lo_band = spec.leads.iter().map(|l| l.band().lo).fold(f64::INFINITY, f64::min);
    let hi_band = spec.leads.iter().map(|l| l.band().hi).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (opts.emin.unwrap_or(lo_band), opts.emax.unwrap_or(hi_band));
    if !(lo < hi) {
        return Err(Failure::new(EXIT_VALIDATION, "empty energy range"));
    }
    let n = opts.n;
    // steps between the first and last sample, plus one for each open end
    let gaps = (n - 1) + usize::from(opts.emin.is_none()) + usize::from(opts.emax.is_none());
    let h = (hi - lo) / gaps as f64;
    let first = if opts.emin.is_none() { lo + h } else { lo };
    Ok((0..n)
        .map(|i| if i + 1 == n && opts.emax.is_some() { hi } else { first + i as f64 * h })
        .collect())
}

fn lead_name(k: usize) -> usize {
    k + 1
}

fn spectrum(spec: &SystemSpec) -> Table {
    let mut table = Table::new(
        Command::Spectrum,
        vec![
            "leads".into(),
            "lo [energy]".into(),
            "hi [energy]".into(),
            "measure [energy]".into(),
        ],
    );
    let n = spec.num_leads();
    let emit = |set: &[usize], table: &mut Table| {
        let label = set
            .iter()
            .map(|&k| lead_name(k).to_string())
            .collect::<Vec<_>>()
            .join("+");
        let inter = spectral_intersection(spec, set);
        if inter.is_empty() {
            table.push(vec![label.clone().into(), f64::NAN.into(), f64::NAN.into(), 0.0.into()]);
        }
        for part in inter.parts() {
            table.push(vec![
                label.clone().into(),
                part.lo.into(),
                part.hi.into(),
                part.width().into(),
            ]);
        }
    };
    for k in 0..n {
        emit(&[k], &mut table);
    }
    for j in 0..n {
        for k in j + 1..n {
            emit(&[j, k], &mut table);
        }
    }
    if n > 2 {
        emit(&(0..n).collect::<Vec<_>>(), &mut table);
    }
    table
}

fn status_of(e: &ScatteringError) -> &'static str {
    match e {
        ScatteringError::AtBandEdge { .. } => "band_edge",
        ScatteringError::ExceptionalEnergy { .. } => "exceptional",
        ScatteringError::OutOfBand { .. } => "out_of_band",
        ScatteringError::LeadClosed { .. } => "closed",
    }
}

fn transmission(spec: &SystemSpec, opts: &Options) -> Result<Table, Failure> {
    let grid = energy_grid(spec, opts)?;
    let n = spec.num_leads();
    let space = CouplingSpace::build(spec);
    let cfg = solver_config(opts);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
        .collect();
    let mut columns = vec!["E [energy]".to_string()];
    columns.extend(
        pairs
            .iter()
            .map(|&(j, k)| format!("T_{}{} [1]", lead_name(j), lead_name(k))),
    );
    columns.extend([
        "unitarity_residual [1]".into(),
        "optical_residual [1]".into(),
        "condition [1]".into(),
        "status".into(),
    ]);
    let mut table = Table::new(Command::Transmission, columns);
    let results: Vec<_> = grid
        .par_iter()
        .map(|&e| solve_scattering(spec, &space, e, &cfg))
        .collect();
    let mut solved = 0;
    for (&e, res) in grid.iter().zip(&results) {
        let mut row: Vec<Cell> = vec![e.into()];
        match res {
            Ok(data) => {
                solved += 1;
                for &(j, k) in &pairs {
                    row.push(data.transmission(j, k).unwrap_or(f64::NAN).into());
                }
                row.push(data.unitarity_residual.into());
                row.push(data.optical_residual.into());
                row.push(data.condition_estimate.into());
                row.push("ok".into());
            }
            Err(err) => {
                row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), pairs.len() + 3));
                row.push(status_of(err).into());
            }
        }
        table.push(row);
    }
    if solved == 0 {
        return Err(Failure::new(
            EXIT_NUMERICAL,
            "no grid energy could be solved (all exceptional, at band edges or out of band)",
        ));
    }
    Ok(table)
}

fn smatrix_check(spec: &SystemSpec, opts: &Options) -> Result<Table, Failure> {
    let grid = energy_grid(spec, opts)?;
    let space = CouplingSpace::build(spec);
    let cfg = solver_config(opts);
    let results: Vec<_> = grid
        .par_iter()
        .map(|&e| solve_scattering(spec, &space, e, &cfg))
        .collect();
    let mut worst_u = (0.0, f64::NAN);
    let mut worst_o = (0.0, f64::NAN);
    let (mut solved, mut skipped) = (0usize, 0usize);
    for (&e, res) in grid.iter().zip(&results) {
        match res {
            Ok(d) => {
                solved += 1;
                if d.unitarity_residual >= worst_u.0 {
                    worst_u = (d.unitarity_residual, e);
                }
                if d.optical_residual >= worst_o.0 {
                    worst_o = (d.optical_residual, e);
                }
            }
            Err(_) => skipped += 1,
        }
    }
    if solved == 0 {
        return Err(Failure::new(EXIT_NUMERICAL, "no grid energy could be solved"));
    }
    let mut table = Table::new(
        Command::SmatrixCheck,
        vec![
            "check".into(),
            "worst_residual [1]".into(),
            "at_E [energy]".into(),
            "solved".into(),
            "skipped".into(),
        ],
    );
    table.push(vec![
        "unitarity".into(),
        worst_u.0.into(),
        worst_u.1.into(),
        solved.into(),
        skipped.into(),
    ]);
    table.push(vec![
        "optical".into(),
        worst_o.0.into(),
        worst_o.1.into(),
        solved.into(),
        skipped.into(),
    ]);
    Ok(table)
}

fn currents(spec: &SystemSpec, opts: &Options, command: Command) -> Result<Table, Failure> {
    let quad = quad_config(opts);
    let n = spec.num_leads();
    let (estimates, unit): (Vec<Estimate>, &str) = if command == Command::Current {
        let v = (0..n)
            .into_par_iter()
            .map(|k| charge_current(spec, k, &quad))
            .collect::<Result<_, _>>()?;
        (v, "e*energy")
    } else {
        let v = (0..n)
            .into_par_iter()
            .map(|k| energy_current(spec, k, &quad))
            .collect::<Result<_, _>>()?;
        (v, "energy^2")
    };
    let symbol = if command == Command::Current { "j" } else { "Phi" };
    let mut table = Table::new(
        command,
        vec![
            "lead".into(),
            format!("{symbol} [{unit}]"),
            format!("error [{unit}]"),
        ],
    );
    for (k, e) in estimates.iter().enumerate() {
        table.push(vec![lead_name(k).to_string().into(), e.value.into(), e.error.into()]);
    }
    let sum: f64 = estimates.iter().map(|e| e.value).sum();
    let err: f64 = estimates.iter().map(|e| e.error).sum();
    table.push(vec!["sum".into(), sum.into(), err.into()]);
    Ok(table)
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn ness_verify(spec: &SystemSpec, opts: &Options) -> Result<Table, Failure> {
    let window = opts.window.unwrap_or(oracle::DEFAULT_WINDOW);
    let (trace, plateaus) = oracle::ness_plateaus(spec, opts.lead_length, window, opts.dt)?;
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    let report = current_report(spec, &quad_config(opts))?;
    let mut table = Table::new(
        Command::NessVerify,
        vec![
            "lead".into(),
            "quantity".into(),
            "quadrature [e*energy | energy^2]".into(),
            "quadrature_error [e*energy | energy^2]".into(),
            "plateau [e*energy | energy^2]".into(),
            "fluctuation [e*energy | energy^2]".into(),
            "relative_deviation [1]".into(),
            "plateau_detected".into(),
            "agrees".into(),
        ],
    );
    let sections = [
        ("charge", &report.charge_currents, &plateaus.charge, NESS_CHARGE_TOLERANCE),
        ("energy", &report.energy_currents, &plateaus.energy, NESS_ENERGY_TOLERANCE),
    ];
    for (name, quad, plat, tol) in sections {
        for k in 0..spec.num_leads() {
            let (q, p) = (quad[k], plat[k]);
            let dev = relative_deviation(q.value, p.value);
            // both sides consistent with zero also counts as agreement
            let both_zero = q.value.abs() <= q.error.max(oracle::PLATEAU_NOISE_FLOOR)
                && p.value.abs() <= p.fluctuation.max(oracle::PLATEAU_NOISE_FLOOR);
            table.push(vec![
                lead_name(k).to_string().into(),
                name.into(),
                q.value.into(),
                q.error.into(),
                p.value.into(),
                p.fluctuation.into(),
                dev.into(),
                p.is_plateau.into(),
                (dev < tol || both_zero).into(),
            ]);
        }
    }
    Ok(table)
}

fn load(opts: &Options) -> Result<SystemSpec, Failure> {
    let path = opts
        .config
        .as_ref()
        .ok_or_else(|| Failure::new(EXIT_IO, "--config PATH is required"))?;
    if path.as_os_str().is_empty() {
        return Err(Failure::new(EXIT_IO, "--config path is empty"));
    }
    let spec = load_config(path).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    match spec.checked() {
        Ok(spec) => {
            for w in crate::model::validate(&spec).warnings() {
                eprintln!("warning: {w}");
            }
            Ok(spec)
        }
        Err(report) => Err(Failure::new(EXIT_VALIDATION, report.to_string())),
    }
}

fn execute(command: Command, opts: &Options) -> Result<(), Failure> {
    check_options(opts)?;
    let spec = load(opts)?;
    let mut table = match command {
        Command::Spectrum => spectrum(&spec),
        Command::Transmission => transmission(&spec, opts)?,
        Command::SmatrixCheck => smatrix_check(&spec, opts)?,
        Command::Current | Command::EnergyCurrent => currents(&spec, opts, command)?,
        Command::NessVerify => ness_verify(&spec, opts)?,
    };
    if !opts.no_header {
        table.generated_at = Some(
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        );
    }
    let text = table.render(opts.format);
    match &opts.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::new(EXIT_IO, format!("cannot write output: {e}")))
        }
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    if cli.conventions {
        print!("{CONVENTIONS}");
        return EXIT_OK;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a command is required (see --help)");
        return EXIT_VALIDATION;
    };
    match execute(command, &cli.opts) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
