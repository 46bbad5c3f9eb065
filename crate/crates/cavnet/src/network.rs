//! Declarative gate schedules for transfer topologies and their executor.
//!
//! A schedule is data: a register of named atoms, the payload location, a
//! list of pairwise cavity interactions grouped into time slots, and the
//! expected destination. Chains for 1-, 2- and n-qubit transfer networks are
//! generated by [`build_chain`]; arbitrary topologies can be loaded from the
//! JSON form documented on [`GateSchedule`].

use crate::dynamics::{self, EffectiveGateParams, THETA_TRANSFER};
use crate::protocols::{Payload, ProtocolResult};
use crate::qstate::{StateError, StateVector, SubsystemLabel};
use crate::tolerances::{PROPORTIONALITY_TOL, STATE_TOL};
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default register cap for the executor: 12 atom qubits keeps the dense
/// state at or below 4096 amplitudes.
pub const DEFAULT_MAX_ATOMS: usize = 12;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid chain: {detail}")]
    InvalidChain { detail: String },
    #[error("register needs {atoms} atoms, cap is {cap}")]
    CapacityExceeded { atoms: usize, cap: usize },
    #[error("schedule is invalid: {first} ({count} error diagnostics)")]
    InvalidSchedule { first: String, count: usize },
    #[error("payload has {got} coefficients but the payload slots span dimension {expected}")]
    PayloadShape { expected: usize, got: usize },
    #[error("schedule JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    State(#[from] StateError),
}

/// One register slot: an atom (or mode) name, its dimension, and the basis
/// state it starts in. Payload slots ignore `init` — the payload replaces it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RegisterSlot {
    pub name: String,
    pub dim: usize,
    pub init: usize,
}

/// A single two-atom cavity interaction at angle `theta`, scheduled into a
/// time slot. Events sharing a slot act on disjoint atoms and commute.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GateEvent {
    #[serde(rename = "cavity")]
    pub cavity_id: String,
    pub atoms: [String; 2],
    pub theta: f64,
    #[serde(rename = "slot")]
    pub time_slot: usize,
}

/// A transfer topology as data.
///
/// JSON form (field names are part of the format):
///
/// ```json
/// {
///   "register": [{"name": "1", "dim": 2, "init": 0}, ...],
///   "payload_slot": ["1"],
///   "events": [{"cavity": "C1", "atoms": ["1", "2"], "theta": 1.5707963, "slot": 0}],
///   "destination": ["3"]
/// }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GateSchedule {
    pub register: Vec<RegisterSlot>,
    pub payload_slot: Vec<String>,
    pub events: Vec<GateEvent>,
    #[serde(rename = "destination")]
    pub expected_destination: Vec<String>,
}

impl GateSchedule {
    pub fn from_json(json: &str) -> Result<Self, ScheduleError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization")
    }

    pub fn atom_count(&self) -> usize {
        self.register.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

/// Count of error-severity diagnostics.
pub fn error_count(diagnostics: &[Diagnostic]) -> usize {
    diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .count()
}

fn atom_name(n_qubits: usize, col: usize, row: usize) -> String {
    if n_qubits == 1 {
        format!("{}", col + 1)
    } else {
        let letter = (b'a' + col as u8) as char;
        format!("{}{}", letter, row + 1)
    }
}

fn cavity_name(n_qubits: usize, hop: usize, row: usize) -> String {
    if n_qubits == 1 {
        format!("C{}", hop + 1)
    } else {
        format!("C{}{}", row + 1, hop + 1)
    }
}

/// Transfer chain of `hops` columns of fresh carrier atoms behind the payload
/// column: `n_qubits·(hops+1)` atoms, `n_qubits·hops` events at θ=π/2, hop h
/// in time slot h, destination = the last column.
pub fn build_chain(n_qubits: usize, hops: usize) -> Result<GateSchedule, ScheduleError> {
    build_chain_capped(n_qubits, hops, DEFAULT_MAX_ATOMS)
}

/// [`build_chain`] with an explicit register cap.
pub fn build_chain_capped(
    n_qubits: usize,
    hops: usize,
    max_atoms: usize,
) -> Result<GateSchedule, ScheduleError> {
    if n_qubits < 1 {
        return Err(ScheduleError::InvalidChain {
            detail: "a chain needs at least one payload qubit".into(),
        });
    }
    if hops < 1 {
        return Err(ScheduleError::InvalidChain {
            detail: "a chain needs at least one hop".into(),
        });
    }
    let atoms = n_qubits * (hops + 1);
    if atoms > max_atoms {
        return Err(ScheduleError::CapacityExceeded {
            atoms,
            cap: max_atoms,
        });
    }
    let mut register = Vec::with_capacity(atoms);
    for col in 0..=hops {
        for row in 0..n_qubits {
            register.push(RegisterSlot {
                name: atom_name(n_qubits, col, row),
                dim: 2,
                init: if col == 0 { 0 } else { 1 },
            });
        }
    }
    let mut events = Vec::with_capacity(n_qubits * hops);
    for hop in 0..hops {
        for row in 0..n_qubits {
            events.push(GateEvent {
                cavity_id: cavity_name(n_qubits, hop, row),
                atoms: [
                    atom_name(n_qubits, hop, row),
                    atom_name(n_qubits, hop + 1, row),
                ],
                theta: THETA_TRANSFER,
                time_slot: hop,
            });
        }
    }
    let payload_slot: Vec<String> = (0..n_qubits).map(|r| atom_name(n_qubits, 0, r)).collect();
    let expected_destination: Vec<String> =
        (0..n_qubits).map(|r| atom_name(n_qubits, hops, r)).collect();
    Ok(GateSchedule {
        register,
        payload_slot,
        events,
        expected_destination,
    })
}

/// Structural check of a schedule. Errors make [`execute`] refuse to run;
/// warnings (non-transfer angles, suspicious destinations) do not.
pub fn validate_schedule(schedule: &GateSchedule) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let names: Vec<&str> = schedule.register.iter().map(|s| s.name.as_str()).collect();

    for (i, slot) in schedule.register.iter().enumerate() {
        if slot.name.is_empty() {
            diagnostics.push(Diagnostic::error(format!("register slot {i} has an empty name")));
        }
        if slot.dim < 2 {
            diagnostics.push(Diagnostic::error(format!(
                "register slot '{}' has dimension {} (must be ≥ 2)",
                slot.name, slot.dim
            )));
        }
        if slot.init >= slot.dim {
            diagnostics.push(Diagnostic::error(format!(
                "register slot '{}' initializes to {} outside its dimension {}",
                slot.name, slot.init, slot.dim
            )));
        }
        if names[..i].contains(&slot.name.as_str()) {
            diagnostics.push(Diagnostic::error(format!(
                "duplicate register name '{}'",
                slot.name
            )));
        }
    }
    if schedule.register.len() > DEFAULT_MAX_ATOMS {
        diagnostics.push(Diagnostic::warning(format!(
            "register has {} atoms; the executor default cap is {}",
            schedule.register.len(),
            DEFAULT_MAX_ATOMS
        )));
    }

    for name in &schedule.payload_slot {
        if !names.contains(&name.as_str()) {
            diagnostics.push(Diagnostic::error(format!(
                "payload slot '{name}' is not in the register"
            )));
        }
    }
    if schedule.payload_slot.is_empty() {
        diagnostics.push(Diagnostic::error("payload slot list is empty"));
    }

    let mut slots: Vec<usize> = schedule.events.iter().map(|e| e.time_slot).collect();
    slots.sort_unstable();
    slots.dedup();
    for (expected, &got) in slots.iter().enumerate() {
        if got != expected {
            diagnostics.push(Diagnostic::error(format!(
                "time slots must form a contiguous range from 0; slot {got} breaks the sequence"
            )));
            break;
        }
    }

    for (i, event) in schedule.events.iter().enumerate() {
        for atom in &event.atoms {
            if !names.contains(&atom.as_str()) {
                diagnostics.push(Diagnostic::error(format!(
                    "event {i} ({}) references unknown atom '{atom}'",
                    event.cavity_id
                )));
            }
        }
        if event.atoms[0] == event.atoms[1] {
            diagnostics.push(Diagnostic::error(format!(
                "event {i} ({}) needs two distinct atoms",
                event.cavity_id
            )));
        }
        if !event.theta.is_finite() {
            diagnostics.push(Diagnostic::error(format!(
                "event {i} ({}) has non-finite theta",
                event.cavity_id
            )));
        } else if (event.theta - THETA_TRANSFER).abs() > 1e-12 {
            diagnostics.push(Diagnostic::warning(format!(
                "event {i} ({}) uses non-transfer angle θ={}",
                event.cavity_id, event.theta
            )));
        }
        for (j, other) in schedule.events.iter().enumerate().skip(i + 1) {
            if other.time_slot == event.time_slot
                && event.atoms.iter().any(|a| other.atoms.contains(a))
            {
                diagnostics.push(Diagnostic::error(format!(
                    "events {i} ({}) and {j} ({}) share an atom in time slot {}",
                    event.cavity_id, other.cavity_id, event.time_slot
                )));
            }
        }
    }

    for name in &schedule.expected_destination {
        if !names.contains(&name.as_str()) {
            diagnostics.push(Diagnostic::error(format!(
                "destination '{name}' is not in the register"
            )));
        } else {
            let touched = schedule
                .events
                .iter()
                .any(|e| e.atoms.iter().any(|a| a == name));
            let is_payload = schedule.payload_slot.contains(name);
            if !touched && !is_payload {
                diagnostics.push(Diagnostic::warning(format!(
                    "destination '{name}' is never touched by an event and does not hold the payload"
                )));
            }
        }
    }

    diagnostics
}

/// Run a schedule: non-payload atoms start in their `init` basis states, the
/// events are applied slot by slot (within a slot in list order — they
/// commute by disjointness), and the payload fidelity is measured on the
/// expected destination.
pub fn execute(schedule: &GateSchedule, payload: &Payload) -> Result<ProtocolResult, ScheduleError> {
    let diagnostics = validate_schedule(schedule);
    let errors = error_count(&diagnostics);
    if errors > 0 {
        let first = diagnostics
            .iter()
            .find(|d| d.severity == Severity::Error)
            .map(|d| d.message.clone())
            .unwrap_or_default();
        return Err(ScheduleError::InvalidSchedule {
            first,
            count: errors,
        });
    }
    if schedule.register.len() > DEFAULT_MAX_ATOMS {
        return Err(ScheduleError::CapacityExceeded {
            atoms: schedule.register.len(),
            cap: DEFAULT_MAX_ATOMS,
        });
    }

    let payload_dim: usize = schedule
        .payload_slot
        .iter()
        .map(|name| {
            schedule
                .register
                .iter()
                .find(|s| &s.name == name)
                .map(|s| s.dim)
                .unwrap_or(0)
        })
        .product();
    if payload_dim != payload.coefficients().len() {
        return Err(ScheduleError::PayloadShape {
            expected: payload_dim,
            got: payload.coefficients().len(),
        });
    }

    let labels: Vec<SubsystemLabel> = schedule
        .register
        .iter()
        .map(|s| SubsystemLabel::new(s.name.clone(), s.dim))
        .collect::<Result<_, _>>()?;
    let initial = assemble_initial_state(schedule, payload, &labels)?;

    let mut state = initial;
    let mut ordered: Vec<&GateEvent> = schedule.events.iter().collect();
    ordered.sort_by_key(|e| e.time_slot);
    for event in ordered {
        let gate = dynamics::effective_unitary(
            &EffectiveGateParams::new(event.theta).map_err(|e| ScheduleError::InvalidChain {
                detail: e.to_string(),
            })?,
        );
        state = state.apply_local_unitary(&[&event.atoms[0], &event.atoms[1]], &gate)?;
    }

    let destination: Vec<&str> = schedule
        .expected_destination
        .iter()
        .map(|s| s.as_str())
        .collect();
    let reference = payload.to_state_named(&destination)?;
    let payload_fidelity = state
        .reduced_density(&destination)?
        .fidelity_with_pure(&reference)?;

    // Global phase is defined only when the final state factorizes into the
    // payload on the destination and basis states elsewhere; build that
    // candidate and compare.
    let mut carrier_atoms_final = Vec::new();
    let mut carrier_indices = Vec::new();
    for slot in &schedule.register {
        if destination.contains(&slot.name.as_str()) {
            carrier_indices.push(None);
            continue;
        }
        let reduced = state.reduced_density(&[slot.name.as_str()])?;
        let mut best = 0usize;
        for k in 1..slot.dim {
            if reduced.matrix()[(k, k)].re > reduced.matrix()[(best, best)].re {
                best = k;
            }
        }
        let excited_weight = if slot.dim > 1 {
            reduced.matrix()[(1, 1)].re
        } else {
            0.0
        };
        carrier_atoms_final.push((slot.name.clone(), excited_weight >= 1.0 - STATE_TOL));
        carrier_indices.push(Some(best));
    }

    let ideal = assemble_reference_state(schedule, payload, &labels, &carrier_indices)?;
    let global_phase = match state.fidelity(&ideal) {
        Ok(f) if f >= 1.0 - PROPORTIONALITY_TOL => Some(state.relative_phase(&ideal)?),
        _ => None,
    };

    Ok(ProtocolResult {
        final_state: state,
        payload_fidelity,
        global_phase,
        carrier_atoms_final,
        schedule_used: schedule.clone(),
    })
}

/// Payload amplitudes on the payload slots, `init` basis values elsewhere.
fn assemble_initial_state(
    schedule: &GateSchedule,
    payload: &Payload,
    labels: &[SubsystemLabel],
) -> Result<StateVector, ScheduleError> {
    let fixed: Vec<Option<usize>> = schedule
        .register
        .iter()
        .map(|s| {
            if schedule.payload_slot.contains(&s.name) {
                None
            } else {
                Some(s.init)
            }
        })
        .collect();
    assemble_product_state(schedule, payload, labels, &schedule.payload_slot, &fixed)
}

fn assemble_reference_state(
    schedule: &GateSchedule,
    payload: &Payload,
    labels: &[SubsystemLabel],
    carrier_indices: &[Option<usize>],
) -> Result<StateVector, ScheduleError> {
    let fixed: Vec<Option<usize>> = carrier_indices.to_vec();
    assemble_product_state(
        schedule,
        payload,
        labels,
        &schedule.expected_destination,
        &fixed,
    )
}

/// Build ⊗(basis states) with the payload amplitudes spread over the named
/// slots (row-major in the order given by `payload_names`), directly in the
/// register's index space so the slots may be non-contiguous.
fn assemble_product_state(
    schedule: &GateSchedule,
    payload: &Payload,
    labels: &[SubsystemLabel],
    payload_names: &[String],
    fixed: &[Option<usize>],
) -> Result<StateVector, ScheduleError> {
    let dims: Vec<usize> = schedule.register.iter().map(|s| s.dim).collect();
    let total: usize = dims.iter().product();
    let payload_positions: Vec<usize> = payload_names
        .iter()
        .map(|n| {
            schedule
                .register
                .iter()
                .position(|s| &s.name == n)
                .expect("validated payload name")
        })
        .collect();

    let mut amplitudes: Array1<Complex64> = Array1::zeros(total);
    'outer: for flat in 0..total {
        let mut digits = vec![0usize; dims.len()];
        let mut rem = flat;
        for (slot, d) in digits.iter_mut().zip(&dims).rev() {
            *slot = rem % d;
            rem /= d;
        }
        for (i, f) in fixed.iter().enumerate() {
            if let Some(value) = f {
                if digits[i] != *value {
                    continue 'outer;
                }
            }
        }
        let mut p_index = 0usize;
        for &pos in &payload_positions {
            p_index = p_index * dims[pos] + digits[pos];
        }
        amplitudes[flat] = payload.coefficients()[p_index];
    }
    Ok(StateVector::from_amplitudes(labels.to_vec(), amplitudes)?)
}
