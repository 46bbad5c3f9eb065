//! Simulator for cavity-mediated atomic state-transfer networks.
//!
//! Two atoms passing simultaneously through a far-detuned cavity pick up an
//! effective pairwise interaction; at interaction angle θ = π/2 the cavity
//! acts as a SWAP gate up to phases, which makes deterministic transfer of
//! arbitrary 1-, 2- and n-qubit atomic states possible along chains of
//! cavities. This crate provides:
//!
//! * [`qstate`] — dense labeled multi-subsystem states, measurement, metrics;
//! * [`dynamics`] — the closed-form dispersive gate, the exact
//!   atom-atom-cavity model, exact and Lindblad evolution;
//! * [`protocols`] — Bell preparation, probabilistic teleportation, and the
//!   deterministic 1/2/n-qubit transfer protocols;
//! * [`network`] — declarative gate schedules and an executor for arbitrary
//!   transfer topologies;
//! * [`validation`] — quantitative checks of the dispersive approximation
//!   against detuning and cavity decay;
//! * [`cli`] — the `cavnet` command-line front end.

pub mod cli;
pub mod dynamics;
pub mod linalg;
pub mod network;
pub mod protocols;
pub mod qstate;
pub mod tolerances;
pub mod validation;

pub use dynamics::{EffectiveGateParams, FullModelParams};
pub use protocols::{Payload, ProtocolResult, TeleportResult};
pub use qstate::{DensityMatrix, MeasurementRecord, StateVector, SubsystemLabel};
