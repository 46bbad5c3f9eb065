//! Command-line front end: run protocols and sweeps from flags or a JSON
//! config file, emit a one-screen summary plus machine-readable outputs.
//!
//! Every run writes `<prefix>.summary.json`; sweeps additionally write
//! `<prefix>.data.csv` and/or `<prefix>.data.json` depending on `--format`.
//! Identical configs and seeds produce byte-identical outputs except for the
//! wall-time column of the data files. Exit codes: 0 success, 2 validation
//! or configuration error, 3 numerical-convergence error.

use crate::dynamics::{DynamicsError, FullModelParams, THETA_BELL, THETA_TRANSFER};
use crate::network::{self, GateSchedule, ScheduleError, Severity};
use crate::protocols::{
    self, Correction, Payload, ProtocolError, ProtocolResult, TeleportResult,
};
use crate::validation::{
    self, SweepParameter, SweepProtocol, SweepRow, SweepSpec, ValidationError,
    DEFAULT_PAYLOAD_COUNT, DEFAULT_SEED,
};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical convergence failure: {0}")]
    Numerics(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for config/validation problems, 3 for
    /// numerical-convergence failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerics(_) => 3,
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        match &e {
            ValidationError::CutoffNotConverged { .. } => CliError::Numerics(e.to_string()),
            ValidationError::Dynamics(DynamicsError::TraceDrift { .. }) => {
                CliError::Numerics(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::TraceDrift { .. } => CliError::Numerics(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Bell,
    Teleport,
    Transfer,
    Network,
    Validate,
}

impl CommandKind {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "bell" => Ok(Self::Bell),
            "teleport" => Ok(Self::Teleport),
            "transfer" => Ok(Self::Transfer),
            "network" => Ok(Self::Network),
            "validate" => Ok(Self::Validate),
            other => Err(CliError::Config(format!(
                "unknown command '{other}' (expected bell, teleport, transfer, network or validate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "both" => Ok(Self::Both),
            other => Err(CliError::Config(format!(
                "unknown format '{other}' (expected csv, json or both)"
            ))),
        }
    }

    fn wants_csv(&self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    fn wants_json(&self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }
}

/// Payload request: explicit coefficients or a seeded random batch.
#[derive(Debug, Clone, PartialEq)]
pub enum PayloadSpec {
    Explicit(Vec<Complex64>),
    Random { count: usize, seed: u64 },
}

impl PayloadSpec {
    /// `"re[,re+imi,...]"` or `"random:<count>:<seed>"`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("random:") {
            let mut parts = rest.split(':');
            let count = parts
                .next()
                .and_then(|p| p.parse::<usize>().ok())
                .ok_or_else(|| {
                    CliError::Config(format!("bad random payload spec '{s}': count missing"))
                })?;
            let seed = parts
                .next()
                .and_then(|p| p.parse::<u64>().ok())
                .ok_or_else(|| {
                    CliError::Config(format!("bad random payload spec '{s}': seed missing"))
                })?;
            if parts.next().is_some() {
                return Err(CliError::Config(format!(
                    "bad random payload spec '{s}': expected random:<count>:<seed>"
                )));
            }
            if count == 0 {
                return Err(CliError::Config("random payload count must be ≥ 1".into()));
            }
            return Ok(Self::Random { count, seed });
        }
        let coefficients = s
            .split(',')
            .map(parse_complex)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::Explicit(coefficients))
    }

    fn materialize(&self, n_qubits: usize) -> Result<Vec<Payload>, CliError> {
        match self {
            Self::Explicit(coefficients) => {
                let expected = 1usize << n_qubits;
                if coefficients.len() != expected {
                    return Err(CliError::Config(format!(
                        "payload has {} coefficients but {} qubits need {}",
                        coefficients.len(),
                        n_qubits,
                        expected
                    )));
                }
                Ok(vec![Payload::new(coefficients.clone())?])
            }
            Self::Random { count, seed } => Ok(Payload::random_set(n_qubits, *count, *seed)),
        }
    }
}

/// Complex scalar in `re`, `re+imi`, `re-imi` or `imi` form.
fn parse_complex(token: &str) -> Result<Complex64, CliError> {
    let token = token.trim();
    if token.is_empty() {
        return Err(CliError::Config("empty payload coefficient".into()));
    }
    let bad = |_| CliError::Config(format!("cannot parse coefficient '{token}'"));
    if let Some(body) = token.strip_suffix('i') {
        // locate the sign separating the real and imaginary parts (not an
        // exponent sign and not the leading sign)
        let bytes = body.as_bytes();
        let mut split = None;
        for (idx, &b) in bytes.iter().enumerate().skip(1) {
            if (b == b'+' || b == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                split = Some(idx);
            }
        }
        return match split {
            Some(idx) => {
                let re: f64 = body[..idx].parse().map_err(bad)?;
                let im_str = &body[idx..];
                let im: f64 = if im_str == "+" || im_str == "-" {
                    format!("{im_str}1").parse().map_err(bad)?
                } else {
                    im_str.parse().map_err(bad)?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if body.is_empty() || body == "+" || body == "-" {
                    format!("{body}1").parse().map_err(bad)?
                } else {
                    body.parse().map_err(bad)?
                };
                Ok(Complex64::new(0.0, im))
            }
        };
    }
    Ok(Complex64::new(token.parse().map_err(bad)?, 0.0))
}

/// Sweep settings once defaults are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub g: f64,
    pub detuning_ratio: f64,
    pub fock_cutoff: usize,
    pub payloads: usize,
    pub protocol: SweepProtocol,
}

impl SweepSettings {
    fn to_spec(&self, seed: u64) -> Result<SweepSpec, CliError> {
        let base = FullModelParams::for_gate_angle(
            self.g,
            self.detuning_ratio * self.g,
            0.0,
            self.fock_cutoff,
            THETA_TRANSFER,
        )?;
        Ok(SweepSpec {
            parameter: self.parameter,
            values: self.values.clone(),
            base,
            protocol: self.protocol,
            payloads: self.payloads,
            seed,
        })
    }
}

/// A fully resolved run request.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub payload: Option<PayloadSpec>,
    pub n_qubits: usize,
    pub hops: usize,
    pub theta: f64,
    pub schedule_file: Option<PathBuf>,
    pub sweep: Option<SweepSettings>,
    pub output: String,
    pub format: OutputFormat,
    pub seed: u64,
    pub jobs: Option<usize>,
}

/// Raw config-file / flag values before defaults; `None` means "not given".
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<String>,
    pub payload: Option<String>,
    pub n_qubits: Option<usize>,
    pub hops: Option<usize>,
    pub theta: Option<f64>,
    pub schedule_file: Option<PathBuf>,
    pub sweep: Option<PartialSweep>,
    pub output: Option<String>,
    pub format: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSweep {
    pub parameter: Option<String>,
    pub values: Option<Vec<f64>>,
    pub g: Option<f64>,
    pub detuning_ratio: Option<f64>,
    pub fock_cutoff: Option<usize>,
    pub payloads: Option<usize>,
    pub protocol: Option<String>,
}

impl PartialConfig {
    /// Overlay `self` (higher precedence, e.g. flags) on `base` (file values).
    fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            command: self.command.or(base.command),
            payload: self.payload.or(base.payload),
            n_qubits: self.n_qubits.or(base.n_qubits),
            hops: self.hops.or(base.hops),
            theta: self.theta.or(base.theta),
            schedule_file: self.schedule_file.or(base.schedule_file),
            sweep: match (self.sweep, base.sweep) {
                (Some(a), Some(b)) => Some(PartialSweep {
                    parameter: a.parameter.or(b.parameter),
                    values: a.values.or(b.values),
                    g: a.g.or(b.g),
                    detuning_ratio: a.detuning_ratio.or(b.detuning_ratio),
                    fock_cutoff: a.fock_cutoff.or(b.fock_cutoff),
                    payloads: a.payloads.or(b.payloads),
                    protocol: a.protocol.or(b.protocol),
                }),
                (a, b) => a.or(b),
            },
            output: self.output.or(base.output),
            format: self.format.or(base.format),
            seed: self.seed.or(base.seed),
            jobs: self.jobs.or(base.jobs),
        }
    }

    /// Apply defaults and validate into a runnable config.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let command = CommandKind::parse(self.command.as_deref().ok_or_else(|| {
            CliError::Config("missing 'command' (bell, teleport, transfer, network, validate)".into())
        })?)?;
        let payload = self.payload.as_deref().map(PayloadSpec::parse).transpose()?;
        let n_qubits = self.n_qubits.unwrap_or(1);
        if n_qubits == 0 {
            return Err(CliError::Config("n_qubits must be ≥ 1".into()));
        }
        let format = self
            .format
            .as_deref()
            .map(OutputFormat::parse)
            .transpose()?
            .unwrap_or(OutputFormat::Both);
        let sweep = match (command, self.sweep) {
            (CommandKind::Validate, Some(s)) => Some(resolve_sweep(s)?),
            (CommandKind::Validate, None) => {
                return Err(CliError::Config(
                    "validate needs sweep settings (--sweep and --values)".into(),
                ))
            }
            (_, _) => None,
        };
        let config = RunConfig {
            command,
            payload,
            n_qubits,
            hops: self.hops.unwrap_or(1),
            theta: self.theta.unwrap_or(THETA_BELL),
            schedule_file: self.schedule_file,
            sweep,
            output: self.output.unwrap_or_else(|| "cavnet".to_string()),
            format,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            jobs: self.jobs,
        };
        config.validate()?;
        Ok(config)
    }
}

fn resolve_sweep(partial: PartialSweep) -> Result<SweepSettings, CliError> {
    let parameter = match partial.parameter.as_deref() {
        Some("detuning") | Some("detuning_ratio") => SweepParameter::DetuningRatio,
        Some("kappa") | Some("kappa_over_g") | Some("decay") => SweepParameter::KappaOverG,
        Some("fock") | Some("fock_cutoff") => SweepParameter::FockCutoff,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown sweep parameter '{other}' (expected detuning, kappa or fock)"
            )))
        }
        None => {
            return Err(CliError::Config(
                "sweep parameter missing (--sweep detuning|kappa|fock)".into(),
            ))
        }
    };
    let values = partial
        .values
        .ok_or_else(|| CliError::Config("sweep values missing (--values v1,v2,...)".into()))?;
    let protocol = match partial.protocol.as_deref() {
        None | Some("single_gate") => SweepProtocol::SingleGate,
        Some("transfer_single") => SweepProtocol::TransferSingle,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown sweep protocol '{other}' (expected single_gate or transfer_single)"
            )))
        }
    };
    Ok(SweepSettings {
        parameter,
        values,
        g: partial.g.unwrap_or(1.0),
        detuning_ratio: partial.detuning_ratio.unwrap_or(20.0),
        fock_cutoff: partial.fock_cutoff.unwrap_or(5),
        payloads: partial.payloads.unwrap_or(DEFAULT_PAYLOAD_COUNT),
        protocol,
    })
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        match self.command {
            CommandKind::Teleport => {
                if self.payload.is_none() {
                    return Err(CliError::Config("teleport needs --payload".into()));
                }
                if self.n_qubits != 1 {
                    return Err(CliError::Config(
                        "teleport transfers exactly one qubit".into(),
                    ));
                }
            }
            CommandKind::Transfer => {
                if self.payload.is_none() {
                    return Err(CliError::Config("transfer needs --payload".into()));
                }
                if self.hops == 0 {
                    return Err(CliError::Config("transfer needs hops ≥ 1".into()));
                }
            }
            CommandKind::Network => {
                if self.schedule_file.is_none() {
                    return Err(CliError::Config("network needs --schedule <file>".into()));
                }
                if self.payload.is_none() {
                    return Err(CliError::Config("network needs --payload".into()));
                }
            }
            CommandKind::Bell | CommandKind::Validate => {}
        }
        if let Some(PayloadSpec::Explicit(coefficients)) = &self.payload {
            let expected = 1usize << self.n_qubits;
            if self.command != CommandKind::Network && coefficients.len() != expected {
                return Err(CliError::Config(format!(
                    "payload has {} coefficients but {} qubit(s) need {}",
                    coefficients.len(),
                    self.n_qubits,
                    expected
                )));
            }
        }
        Ok(())
    }
}

/// Parse and validate a JSON config file; flags can later override its values.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    load_partial(path)?.resolve()
}

fn load_partial(path: &Path) -> Result<PartialConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    // serde_json errors already carry "at line N column M"
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Output files (and the text summary) produced by a run.
#[derive(Debug)]
pub struct RunReport {
    pub summary_text: String,
    pub files_written: Vec<PathBuf>,
}

/// Execute a resolved config: runs the command, writes output files, returns
/// the one-screen summary. Nothing is written until the computation succeeds.
pub fn run(config: &RunConfig) -> Result<RunReport, CliError> {
    let mut outputs: Vec<(PathBuf, String)> = Vec::new();
    let summary_path = PathBuf::from(format!("{}.summary.json", config.output));
    let mut text = String::new();

    match config.command {
        CommandKind::Bell => {
            let state = protocols::prepare_bell(config.theta);
            let ideal = protocols::prepare_bell(THETA_BELL);
            let fidelity_with_ideal = state.fidelity(&ideal).unwrap_or(0.0);
            let amplitudes: Vec<[f64; 2]> = state
                .amplitudes()
                .iter()
                .map(|z| [z.re, z.im])
                .collect();
            let summary = json!({
                "command": "bell",
                "theta": config.theta,
                "amplitudes": amplitudes,
                "fidelity_with_ideal_pair": fidelity_with_ideal,
            });
            outputs.push((summary_path.clone(), pretty(&summary)));
            let _ = writeln!(text, "bell preparation at θ = {:.6}", config.theta);
            for (basis, z) in ["|00⟩", "|01⟩", "|10⟩", "|11⟩"]
                .iter()
                .zip(state.amplitudes().iter())
            {
                let _ = writeln!(text, "  {basis}: {}", fmt_complex(*z));
            }
            let _ = writeln!(
                text,
                "fidelity with ideal entangled pair: {}",
                sig12(fidelity_with_ideal)
            );
        }
        CommandKind::Teleport => {
            let payloads = config
                .payload
                .as_ref()
                .expect("validated")
                .materialize(1)?;
            let results: Vec<TeleportResult> = payloads
                .iter()
                .map(protocols::ye_guo_teleport)
                .collect::<Result<_, _>>()?;
            let runs: Vec<serde_json::Value> = payloads
                .iter()
                .zip(results.iter())
                .map(|(p, r)| teleport_json(p, r))
                .collect();
            let summary = json!({
                "command": "teleport",
                "runs": runs,
            });
            outputs.push((summary_path.clone(), pretty(&summary)));
            let _ = writeln!(text, "teleportation ({} payload(s))", results.len());
            let first = &results[0];
            let _ = writeln!(text, "outcome  probability      correction  fidelity");
            for branch in &first.outcomes {
                let (a1, a2) = branch.outcome();
                let fid = branch
                    .corrected_fidelity
                    .map(sig12)
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    text,
                    "({a1},{a2})    {}  {:<10}  {}",
                    sig12(branch.record.probability),
                    correction_str(branch.correction),
                    fid
                );
            }
            let mean_success: f64 = results
                .iter()
                .map(|r| r.success_probability)
                .sum::<f64>()
                / results.len() as f64;
            let _ = writeln!(text, "success_probability: {}", sig12(mean_success));
        }
        CommandKind::Transfer => {
            let payloads = config
                .payload
                .as_ref()
                .expect("validated")
                .materialize(config.n_qubits)?;
            let results: Vec<ProtocolResult> = payloads
                .iter()
                .map(|p| protocols::multi_hop_transfer(p, config.hops))
                .collect::<Result<_, _>>()?;
            let runs: Vec<serde_json::Value> = payloads
                .iter()
                .zip(results.iter())
                .map(|(p, r)| transfer_json(p, r))
                .collect();
            let summary = json!({
                "command": "transfer",
                "n_qubits": config.n_qubits,
                "hops": config.hops,
                "runs": runs,
            });
            outputs.push((summary_path.clone(), pretty(&summary)));
            let worst = results
                .iter()
                .map(|r| r.payload_fidelity)
                .fold(f64::INFINITY, f64::min);
            let _ = writeln!(
                text,
                "transfer of {} qubit(s) over {} hop(s), {} payload(s)",
                config.n_qubits,
                config.hops,
                results.len()
            );
            let _ = writeln!(text, "payload fidelity (worst): {}", sig12(worst));
            if let Some(phase) = results[0].global_phase {
                let _ = writeln!(
                    text,
                    "global phase: {} ({})",
                    phase_sign(phase),
                    fmt_complex(phase)
                );
            }
            let _ = writeln!(
                text,
                "carriers back in |1⟩: {}",
                if results.iter().all(|r| r.carriers_ok()) {
                    "yes"
                } else {
                    "no"
                }
            );
        }
        CommandKind::Network => {
            let path = config.schedule_file.as_ref().expect("validated");
            let schedule_text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let schedule = GateSchedule::from_json(&schedule_text)?;
            let diagnostics = network::validate_schedule(&schedule);
            let payload_qubits = schedule.payload_slot.len();
            let payloads = config
                .payload
                .as_ref()
                .expect("validated")
                .materialize(payload_qubits)?;
            let results: Vec<ProtocolResult> = payloads
                .iter()
                .map(|p| network::execute(&schedule, p))
                .collect::<Result<_, _>>()?;
            let runs: Vec<serde_json::Value> = payloads
                .iter()
                .zip(results.iter())
                .map(|(p, r)| transfer_json(p, r))
                .collect();
            let warnings: Vec<String> = diagnostics
                .iter()
                .filter(|d| d.severity == Severity::Warning)
                .map(|d| d.message.clone())
                .collect();
            let summary = json!({
                "command": "network",
                "schedule_file": path.display().to_string(),
                "atoms": schedule.atom_count(),
                "events": schedule.events.len(),
                "warnings": warnings,
                "runs": runs,
            });
            outputs.push((summary_path.clone(), pretty(&summary)));
            let worst = results
                .iter()
                .map(|r| r.payload_fidelity)
                .fold(f64::INFINITY, f64::min);
            let _ = writeln!(
                text,
                "schedule {} ({} atoms, {} events)",
                path.display(),
                schedule.atom_count(),
                schedule.events.len()
            );
            for w in &warnings {
                let _ = writeln!(text, "warning: {w}");
            }
            let _ = writeln!(text, "payload fidelity (worst): {}", sig12(worst));
            if let Some(phase) = results[0].global_phase {
                let _ = writeln!(
                    text,
                    "global phase: {} ({})",
                    phase_sign(phase),
                    fmt_complex(phase)
                );
            }
        }
        CommandKind::Validate => {
            let settings = config.sweep.as_ref().expect("validated");
            let spec = settings.to_spec(config.seed)?;
            let rows = validation::run_sweep(&spec)?;
            let summary = json!({
                "command": "validate",
                "parameter": settings.parameter.as_str(),
                "protocol": protocol_str(settings.protocol),
                "g": settings.g,
                "detuning_ratio": settings.detuning_ratio,
                "fock_cutoff": settings.fock_cutoff,
                "payloads": settings.payloads,
                "seed": config.seed,
                "rows": rows.iter().map(row_json_no_time).collect::<Vec<_>>(),
            });
            outputs.push((summary_path.clone(), pretty(&summary)));
            if config.format.wants_csv() {
                outputs.push((
                    PathBuf::from(format!("{}.data.csv", config.output)),
                    rows_csv(settings.parameter, &rows),
                ));
            }
            if config.format.wants_json() {
                let data = json!({
                    "parameter": settings.parameter.as_str(),
                    "rows": rows.iter().map(row_json_with_time).collect::<Vec<_>>(),
                });
                outputs.push((
                    PathBuf::from(format!("{}.data.json", config.output)),
                    pretty(&data),
                ));
            }
            let _ = writeln!(
                text,
                "sweep {} over {:?} ({} payloads, seed {})",
                settings.parameter.as_str(),
                settings.values,
                settings.payloads,
                config.seed
            );
            let _ = writeln!(
                text,
                "{:>12}  {:>18}  {:>18}  {:>14}",
                "value", "mean_infidelity", "max_infidelity", "phase_error"
            );
            for row in &rows {
                let _ = writeln!(
                    text,
                    "{:>12}  {:>18}  {:>18}  {:>14}",
                    format!("{}", row.parameter_value),
                    sig12(row.mean_infidelity),
                    sig12(row.max_infidelity),
                    sig12(row.phase_error)
                );
            }
        }
    }

    let mut files_written = Vec::new();
    for (path, content) in &outputs {
        if let Err(source) = fs::write(path, content) {
            for written in &files_written {
                let _ = fs::remove_file(written);
            }
            return Err(CliError::Io {
                path: path.clone(),
                source,
            });
        }
        files_written.push(path.clone());
    }
    for path in &files_written {
        let _ = writeln!(text, "wrote {}", path.display());
    }

    Ok(RunReport {
        summary_text: text,
        files_written,
    })
}

fn correction_str(c: Correction) -> &'static str {
    match c {
        Correction::Identity => "identity",
        Correction::PhaseFlip => "phase-flip",
        Correction::Failure => "failure",
    }
}

fn protocol_str(p: SweepProtocol) -> &'static str {
    match p {
        SweepProtocol::SingleGate => "single_gate",
        SweepProtocol::TransferSingle => "transfer_single",
    }
}

/// 12 significant digits, locale-free.
fn sig12(x: f64) -> String {
    format!("{:.11e}", x)
}

fn fmt_complex(z: Complex64) -> String {
    format!("{}{}{}i", sig12(z.re), if z.im < 0.0 { " - " } else { " + " }, sig12(z.im.abs()))
}

/// Friendly ±1 tag when the phase is (numerically) a sign.
fn phase_sign(z: Complex64) -> String {
    if (z - Complex64::new(1.0, 0.0)).norm() < 1e-6 {
        "+1".into()
    } else if (z + Complex64::new(1.0, 0.0)).norm() < 1e-6 {
        "-1".into()
    } else {
        format!("exp({:+.6}i)", z.arg())
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json");
    s.push('\n');
    s
}

fn complex_pairs(payload: &Payload) -> Vec<[f64; 2]> {
    payload.coefficients().iter().map(|z| [z.re, z.im]).collect()
}

fn teleport_json(payload: &Payload, result: &TeleportResult) -> serde_json::Value {
    json!({
        "payload": complex_pairs(payload),
        "success_probability": result.success_probability,
        "outcomes": result.outcomes.iter().map(|b| {
            let (a1, a2) = b.outcome();
            json!({
                "atom1": a1,
                "atom2": a2,
                "probability": b.record.probability,
                "correction": correction_str(b.correction),
                "corrected_fidelity": b.corrected_fidelity,
            })
        }).collect::<Vec<_>>(),
    })
}

fn transfer_json(payload: &Payload, result: &ProtocolResult) -> serde_json::Value {
    json!({
        "payload": complex_pairs(payload),
        "payload_fidelity": result.payload_fidelity,
        "global_phase": result.global_phase.map(|z| [z.re, z.im]),
        "carriers_ok": result.carriers_ok(),
    })
}

fn row_json_no_time(row: &SweepRow) -> serde_json::Value {
    json!({
        "value": row.parameter_value,
        "mean_infidelity": row.mean_infidelity,
        "max_infidelity": row.max_infidelity,
        "phase_error": row.phase_error,
    })
}

fn row_json_with_time(row: &SweepRow) -> serde_json::Value {
    json!({
        "value": row.parameter_value,
        "mean_infidelity": row.mean_infidelity,
        "max_infidelity": row.max_infidelity,
        "phase_error": row.phase_error,
        "wall_time_s": row.wall_time,
    })
}

fn rows_csv(parameter: SweepParameter, rows: &[SweepRow]) -> String {
    let mut out = String::from("parameter,value,mean_infidelity,max_infidelity,phase_error,wall_time_s\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            parameter.as_str(),
            sig12(row.parameter_value),
            sig12(row.mean_infidelity),
            sig12(row.max_infidelity),
            sig12(row.phase_error),
            sig12(row.wall_time)
        );
    }
    out
}

// ---------------------------------------------------------------------------
// clap layer

#[derive(Debug, Parser)]
#[command(
    name = "cavnet",
    version,
    about = "Cavity-mediated atomic state-transfer simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path prefix (default: cavnet)
    #[arg(long)]
    pub output: Option<String>,
    /// Data file format: csv, json or both
    #[arg(long)]
    pub format: Option<String>,
    /// Seed for sweeps and random payload batches
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for sweep points (default: available parallelism)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prepare the maximally entangled two-atom pair
    Bell {
        /// Interaction angle in radians (default π/4)
        #[arg(long)]
        theta: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Probabilistic teleportation of a single-qubit payload
    Teleport {
        /// Coefficients "a,b" (complex as re+imi) or random:<count>:<seed>
        #[arg(long)]
        payload: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Deterministic n-qubit transfer over a chain of cavities
    Transfer {
        /// Payload width in qubits
        #[arg(long = "n")]
        n_qubits: Option<usize>,
        /// Chain length in hops
        #[arg(long)]
        hops: Option<usize>,
        /// Coefficients (flat comma list) or random:<count>:<seed>
        #[arg(long)]
        payload: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Execute a gate schedule from a JSON file
    Network {
        /// Schedule JSON path
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Coefficients (flat comma list) or random:<count>:<seed>
        #[arg(long)]
        payload: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the exact model against the effective gate
    Validate {
        /// Sweep parameter: detuning, kappa or fock
        #[arg(long)]
        sweep: Option<String>,
        /// Comma-separated ascending values
        #[arg(long)]
        values: Option<String>,
        /// Fixed detuning ratio Δ/g for kappa/fock sweeps (default 20)
        #[arg(long)]
        ratio: Option<f64>,
        /// Coupling rate g (default 1)
        #[arg(long)]
        g: Option<f64>,
        /// Fock cutoff N (default 5)
        #[arg(long)]
        fock: Option<usize>,
        /// Random payloads per sweep point (default 10)
        #[arg(long)]
        payloads: Option<usize>,
        /// single_gate (default) or transfer_single
        #[arg(long)]
        protocol: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Cli {
    /// Merge flags over an optional config file and resolve.
    pub fn into_run_config(self) -> Result<RunConfig, CliError> {
        let (mut partial, common) = self.command.into_partial()?;
        let file_partial = match &common.config {
            Some(path) => load_partial(path)?,
            None => PartialConfig::default(),
        };
        partial.output = common.output;
        partial.format = common.format;
        partial.seed = common.seed;
        partial.jobs = common.jobs;
        partial.over(file_partial).resolve()
    }
}

impl Command {
    fn into_partial(self) -> Result<(PartialConfig, CommonArgs), CliError> {
        let mut partial = PartialConfig::default();
        let common = match self {
            Command::Bell { theta, common } => {
                partial.command = Some("bell".into());
                partial.theta = theta;
                common
            }
            Command::Teleport { payload, common } => {
                partial.command = Some("teleport".into());
                partial.payload = payload;
                common
            }
            Command::Transfer {
                n_qubits,
                hops,
                payload,
                common,
            } => {
                partial.command = Some("transfer".into());
                partial.n_qubits = n_qubits;
                partial.hops = hops;
                partial.payload = payload;
                common
            }
            Command::Network {
                schedule,
                payload,
                common,
            } => {
                partial.command = Some("network".into());
                partial.schedule_file = schedule;
                partial.payload = payload;
                common
            }
            Command::Validate {
                sweep,
                values,
                ratio,
                g,
                fock,
                payloads,
                protocol,
                common,
            } => {
                partial.command = Some("validate".into());
                let values = values
                    .map(|v| {
                        v.split(',')
                            .map(|tok| {
                                tok.trim().parse::<f64>().map_err(|_| {
                                    CliError::Config(format!("bad sweep value '{tok}'"))
                                })
                            })
                            .collect::<Result<Vec<f64>, _>>()
                    })
                    .transpose()?;
                partial.sweep = Some(PartialSweep {
                    parameter: sweep,
                    values,
                    g,
                    detuning_ratio: ratio,
                    fock_cutoff: fock,
                    payloads,
                    protocol,
                });
                common
            }
        };
        Ok((partial, common))
    }
}

/// One-time rayon pool sizing from `--jobs`; silently keeps the existing pool
/// if one was already built.
pub fn configure_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn complex_parsing_covers_the_documented_forms() {
        assert_eq!(parse_complex("0.6").unwrap(), Complex64::new(0.6, 0.0));
        assert_eq!(parse_complex("-1").unwrap(), Complex64::new(-1.0, 0.0));
        assert_eq!(
            parse_complex("0.6+0.2i").unwrap(),
            Complex64::new(0.6, 0.2)
        );
        assert_eq!(
            parse_complex("0.6-0.2i").unwrap(),
            Complex64::new(0.6, -0.2)
        );
        assert_eq!(parse_complex("0.5i").unwrap(), Complex64::new(0.0, 0.5));
        assert_eq!(parse_complex("-0.5i").unwrap(), Complex64::new(0.0, -0.5));
        assert_eq!(
            parse_complex("1e-3+2e-4i").unwrap(),
            Complex64::new(1e-3, 2e-4)
        );
        assert!(parse_complex("").is_err());
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn payload_spec_parsing() {
        assert_eq!(
            PayloadSpec::parse("random:3:17").unwrap(),
            PayloadSpec::Random { count: 3, seed: 17 }
        );
        assert!(PayloadSpec::parse("random:0:17").is_err());
        assert!(PayloadSpec::parse("random:x").is_err());
        match PayloadSpec::parse("0.6,0.8").unwrap() {
            PayloadSpec::Explicit(v) => assert_eq!(v.len(), 2),
            _ => panic!("expected explicit"),
        }
    }

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let partial = PartialConfig {
            command: Some("bell".into()),
            ..Default::default()
        };
        let config = partial.resolve().unwrap();
        assert_eq!(config.command, CommandKind::Bell);
        assert_abs_diff_eq!(config.theta, THETA_BELL, epsilon = 0.0);
        assert_eq!(config.output, "cavnet");
        assert_eq!(config.format, OutputFormat::Both);
        assert_eq!(config.seed, DEFAULT_SEED);
    }

    #[test]
    fn wrong_payload_length_names_both_numbers() {
        let partial = PartialConfig {
            command: Some("transfer".into()),
            payload: Some("0.6,0.8".into()),
            n_qubits: Some(2),
            ..Default::default()
        };
        let err = partial.resolve().unwrap_err();
        let message = err.to_string();
        assert!(message.contains('2'), "message: {message}");
        assert!(message.contains('4'), "message: {message}");
    }

    #[test]
    fn flags_override_file_values() {
        let file = PartialConfig {
            command: Some("transfer".into()),
            payload: Some("0.6,0.8".into()),
            hops: Some(1),
            ..Default::default()
        };
        let flags = PartialConfig {
            hops: Some(3),
            ..Default::default()
        };
        let merged = flags.over(file).resolve().unwrap();
        assert_eq!(merged.hops, 3);
        assert_eq!(merged.command, CommandKind::Transfer);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = serde_json::from_str::<PartialConfig>(r#"{"command":"bell","bogus":1}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus"), "error: {err}");
    }

    #[test]
    fn validate_requires_sweep_settings() {
        let partial = PartialConfig {
            command: Some("validate".into()),
            ..Default::default()
        };
        assert!(partial.resolve().is_err());
    }

    #[test]
    fn sig12_has_twelve_significant_digits() {
        assert_eq!(sig12(0.5), "5.00000000000e-1");
        assert_eq!(sig12(1.0), "1.00000000000e0");
    }
}
