//! Centralized numerical tolerances.
//!
//! All thresholds used for state validation and analytic identities live here
//! so that library code and the acceptance suite agree on the same numbers.

/// Tolerance for state invariants (norm, trace, Hermiticity).
///
/// Double-precision dense algebra at register dimensions up to ~2^12 keeps
/// accumulated rounding far below this.
pub const STATE_TOL: f64 = 1e-10;

/// Tolerance for exact analytic identities (gate entries, closed-form states).
pub const ANALYTIC_TOL: f64 = 1e-12;

/// Eigenvalue floor for positive-semidefiniteness of density matrices.
pub const PSD_FLOOR: f64 = -1e-8;

/// Minimum fidelity for two states to count as proportional when extracting
/// a relative phase.
pub const PROPORTIONALITY_TOL: f64 = 1e-8;

/// Measurement outcomes below this probability are reported with an undefined
/// post-state (renormalization would divide by ~0).
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// Window around unit norm inside which payload coefficients are silently
/// renormalized; anything farther off is rejected.
pub const PAYLOAD_NORM_WINDOW: f64 = 1e-6;

/// Fidelity window for multi-qubit transfers (slightly looser than
/// [`ANALYTIC_TOL`] to absorb rounding across many gate applications).
pub const TRANSFER_TOL: f64 = 1e-11;

/// Fock-space truncation is accepted when results at cutoff N and N+2 agree
/// to this level.
pub const FOCK_CONVERGENCE_TOL: f64 = 1e-9;

/// Final trace drift at which the Lindblad integrator reports a step-size
/// failure instead of returning a state.
pub const LINDBLAD_TRACE_TOL: f64 = 1e-6;

/// Agreement required between the zero-decay Lindblad path and exact
/// closed-system evolution.
pub const CLOSED_OPEN_AGREEMENT_TOL: f64 = 1e-7;
