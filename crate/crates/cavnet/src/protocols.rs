//! The named procedures: Bell-pair preparation, probabilistic teleportation,
//! and the deterministic 1-, 2- and n-qubit transfer chains.
//!
//! All transfers run at θ=π/2, where the cavity gate is a SWAP up to phases:
//! a payload hop onto an excited carrier picks up a global −1, so a network of
//! k gates ends with global phase (−1)^k. No measurement appears anywhere in
//! the transfer paths; measurement only enters the teleportation baseline.

use crate::dynamics::{self, EffectiveGateParams, THETA_BELL, THETA_TRANSFER};
use crate::network::{self, GateSchedule, ScheduleError};
use crate::qstate::{MeasurementRecord, StateError, StateVector, SubsystemLabel};
use crate::tolerances::{PAYLOAD_NORM_WINDOW, STATE_TOL};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Largest payload size accepted by [`transfer_n_qubit`].
pub const MAX_TRANSFER_QUBITS: usize = 8;
/// Register cap for multi-hop chains (atoms across all columns).
pub const MAX_CHAIN_ATOMS: usize = 16;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("payload needs 2^n coefficients for n ≥ 1 qubits, got {got}")]
    BadCoefficientCount { got: usize },
    #[error("payload norm {norm} is too far from 1 to renormalize")]
    NotNormalized { norm: f64 },
    #[error("expected a {expected}-qubit payload, got {got} qubits")]
    WrongArity { expected: usize, got: usize },
    #[error("{what} exceeds the cap of {cap}")]
    CapacityExceeded { what: String, cap: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// An unknown n-qubit state to be transferred: 2^n complex coefficients,
/// row-major over the qubits. Inputs within 1e-6 of unit norm are accepted
/// and renormalized; anything farther off is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    n_qubits: usize,
    coefficients: Vec<Complex64>,
}

impl Payload {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self, ProtocolError> {
        let len = coefficients.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(ProtocolError::BadCoefficientCount { got: len });
        }
        let n_qubits = len.trailing_zeros() as usize;
        let norm = coefficients
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > PAYLOAD_NORM_WINDOW {
            return Err(ProtocolError::NotNormalized { norm });
        }
        let coefficients = coefficients.into_iter().map(|z| z / norm).collect();
        Ok(Self {
            n_qubits,
            coefficients,
        })
    }

    /// Single-qubit payload α|0⟩ + β|1⟩.
    pub fn single(alpha: Complex64, beta: Complex64) -> Result<Self, ProtocolError> {
        Self::new(vec![alpha, beta])
    }

    /// Haar-like random payload: complex-normal coefficients, normalized.
    pub fn random(n_qubits: usize, rng: &mut impl Rng) -> Self {
        let len = 1usize << n_qubits;
        let mut coefficients: Vec<Complex64> = (0..len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            })
            .collect();
        let norm = coefficients
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        for z in &mut coefficients {
            *z /= norm;
        }
        Self {
            n_qubits,
            coefficients,
        }
    }

    /// A reproducible set of random payloads from one seed.
    pub fn random_set(n_qubits: usize, count: usize, seed: u64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| Self::random(n_qubits, &mut rng)).collect()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// The payload as a state on freshly named atoms.
    pub fn to_state_named(&self, names: &[&str]) -> Result<StateVector, StateError> {
        debug_assert_eq!(names.len(), self.n_qubits);
        let labels: Vec<SubsystemLabel> = names
            .iter()
            .map(|n| SubsystemLabel::new(*n, 2))
            .collect::<Result<_, _>>()?;
        StateVector::from_amplitudes(labels, Array1::from_vec(self.coefficients.clone()))
    }
}

/// Outcome classification for one teleportation branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correction {
    /// Destination already holds the payload.
    Identity,
    /// Destination holds the payload up to diag(1,−1).
    PhaseFlip,
    /// Unrecoverable branch.
    Failure,
}

/// One of the four measurement branches of the teleportation run.
#[derive(Debug, Clone)]
pub struct TeleportBranch {
    pub record: MeasurementRecord,
    pub correction: Correction,
    /// Fidelity of the destination atom with the payload after applying the
    /// prescribed correction; absent for failures and zero-probability
    /// branches.
    pub corrected_fidelity: Option<f64>,
}

impl TeleportBranch {
    /// Measured basis values of the two carrier atoms.
    pub fn outcome(&self) -> (usize, usize) {
        let idx = self.record.indices();
        (idx[0], idx[1])
    }
}

/// Full teleportation result: all four branches plus the success probability.
#[derive(Debug, Clone)]
pub struct TeleportResult {
    pub outcomes: Vec<TeleportBranch>,
    pub success_probability: f64,
}

impl TeleportResult {
    pub fn branch(&self, outcome: (usize, usize)) -> Option<&TeleportBranch> {
        self.outcomes.iter().find(|b| b.outcome() == outcome)
    }
}

/// Result of a deterministic transfer run.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub final_state: StateVector,
    /// Fidelity of the destination subsystems with the payload.
    pub payload_fidelity: f64,
    /// Global phase of the final state against the ideal product state;
    /// absent when the final state does not factorize.
    pub global_phase: Option<Complex64>,
    /// Per-atom check that every non-destination atom ended in |1⟩.
    pub carrier_atoms_final: Vec<(String, bool)>,
    pub schedule_used: GateSchedule,
}

impl ProtocolResult {
    pub fn carriers_ok(&self) -> bool {
        self.carrier_atoms_final.iter().all(|(_, ok)| *ok)
    }
}

/// Let an excited/ground atom pair ("2", "3") interact at angle θ.
/// At θ=π/4 this produces the maximally entangled pair
/// (e^{−iπ/4}/√2)(|10⟩ − i|01⟩).
pub fn prepare_bell(theta: f64) -> StateVector {
    let initial = StateVector::basis(
        vec![SubsystemLabel::qubit("2"), SubsystemLabel::qubit("3")],
        &[1, 0],
    )
    .expect("two-atom basis state");
    let gate = dynamics::effective_unitary(
        &EffectiveGateParams::new(theta).expect("finite angle"),
    );
    initial
        .apply_local_unitary(&["2", "3"], &gate)
        .expect("bell gate application")
}

/// Default Bell preparation at θ=π/4.
pub fn prepare_bell_default() -> StateVector {
    prepare_bell(THETA_BELL)
}

/// Probabilistic teleportation baseline: entangle atoms 2 and 3 at θ=π/4,
/// interact atoms 1 and 2 at θ=π/4, then measure atoms 1 and 2.
///
/// Outcome (1,0) delivers the payload on atom 3 as-is, (0,1) after a
/// phase-flip correction; (0,0) and (1,1) are failures. The success
/// probability is exactly 1/2, independent of the payload.
pub fn ye_guo_teleport(payload: &Payload) -> Result<TeleportResult, ProtocolError> {
    require_arity(payload, 1)?;
    let atom1 = payload.to_state_named(&["1"])?;
    let atom2 = StateVector::basis(vec![SubsystemLabel::qubit("2")], &[1])?;
    let atom3 = StateVector::basis(vec![SubsystemLabel::qubit("3")], &[0])?;
    let initial = atom1.tensor(&atom2)?.tensor(&atom3)?;

    let gate = dynamics::effective_unitary(&EffectiveGateParams::new(THETA_BELL).unwrap());
    let entangled = initial.apply_local_unitary(&["2", "3"], &gate)?;
    let interacted = entangled.apply_local_unitary(&["1", "2"], &gate)?;

    let records = interacted.measure_subsystems(&["1", "2"])?;
    let mut phase_flip: Array2<Complex64> = Array2::zeros((2, 2));
    phase_flip[(0, 0)] = Complex64::new(1.0, 0.0);
    phase_flip[(1, 1)] = Complex64::new(-1.0, 0.0);

    let mut outcomes = Vec::with_capacity(records.len());
    let mut success_probability = 0.0;
    for record in records {
        let idx = record.indices();
        let correction = match (idx[0], idx[1]) {
            (1, 0) => Correction::Identity,
            (0, 1) => Correction::PhaseFlip,
            _ => Correction::Failure,
        };
        let corrected_fidelity = match (&record.post_state, correction) {
            (Some(post), Correction::Identity | Correction::PhaseFlip) => {
                let corrected = if correction == Correction::PhaseFlip {
                    post.apply_local_unitary(&["3"], &phase_flip)?
                } else {
                    post.clone()
                };
                let reference = StateVector::basis(
                    vec![SubsystemLabel::qubit("1"), SubsystemLabel::qubit("2")],
                    &[idx[0], idx[1]],
                )?
                .tensor(&payload.to_state_named(&["3"])?)?;
                Some(corrected.fidelity(&reference)?)
            }
            _ => None,
        };
        if matches!(correction, Correction::Identity | Correction::PhaseFlip) {
            success_probability += record.probability;
        }
        outcomes.push(TeleportBranch {
            record,
            correction,
            corrected_fidelity,
        });
    }
    Ok(TeleportResult {
        outcomes,
        success_probability,
    })
}

/// Deterministic single-qubit transfer along atoms 1 → 2 → 3: two θ=π/2
/// gates, carriers prepared excited. The two per-hop −1 phases cancel.
pub fn transfer_single(payload: &Payload) -> Result<ProtocolResult, ProtocolError> {
    require_arity(payload, 1)?;
    run_transfer_chain(payload, 2)
}

/// Deterministic two-qubit transfer (a1,a2) → (b1,b2) through two parallel
/// cavities in one time slot; works for entangled payloads and ends with
/// global phase +1.
pub fn transfer_two_qubit(payload: &Payload) -> Result<ProtocolResult, ProtocolError> {
    require_arity(payload, 2)?;
    run_transfer_chain(payload, 1)
}

/// Deterministic n-qubit transfer (a1..an) → (b1..bn) through n parallel
/// cavities; ends with global phase (−1)^n.
pub fn transfer_n_qubit(payload: &Payload) -> Result<ProtocolResult, ProtocolError> {
    if payload.n_qubits() > MAX_TRANSFER_QUBITS {
        return Err(ProtocolError::CapacityExceeded {
            what: format!("{}-qubit transfer", payload.n_qubits()),
            cap: MAX_TRANSFER_QUBITS,
        });
    }
    run_transfer_chain(payload, 1)
}

/// Chain the one-hop transfer `hops` times over fresh excited carriers; the
/// payload ends on the last column with global phase (−1)^(n·hops) and every
/// intermediate carrier back in |1⟩, ready for reuse.
pub fn multi_hop_transfer(payload: &Payload, hops: usize) -> Result<ProtocolResult, ProtocolError> {
    let atoms = payload.n_qubits() * (hops + 1);
    if atoms > MAX_CHAIN_ATOMS {
        return Err(ProtocolError::CapacityExceeded {
            what: format!("{atoms}-atom chain register"),
            cap: MAX_CHAIN_ATOMS,
        });
    }
    run_transfer_chain(payload, hops)
}

/// Direct (non-executor) implementation of the transfer chain; the network
/// executor provides the second, independently-coded route to the same
/// states.
fn run_transfer_chain(payload: &Payload, hops: usize) -> Result<ProtocolResult, ProtocolError> {
    let n = payload.n_qubits();
    let schedule = network::build_chain_capped(n, hops, MAX_CHAIN_ATOMS)?;

    let names: Vec<String> = schedule.register.iter().map(|s| s.name.clone()).collect();
    let payload_names: Vec<&str> = names[..n].iter().map(|s| s.as_str()).collect();
    let mut state = payload.to_state_named(&payload_names)?;
    for name in &names[n..] {
        state = state.tensor(&StateVector::basis(
            vec![SubsystemLabel::qubit(name.clone())],
            &[1],
        )?)?;
    }

    let gate = dynamics::effective_unitary(&EffectiveGateParams::new(THETA_TRANSFER).unwrap());
    for hop in 0..hops {
        for row in 0..n {
            let source = &names[hop * n + row];
            let target = &names[(hop + 1) * n + row];
            state = state.apply_local_unitary(&[source, target], &gate)?;
        }
    }

    // ideal final state: every non-destination atom back in |1⟩, payload on
    // the last column
    let mut ideal = StateVector::basis(
        names[..hops * n]
            .iter()
            .map(|s| SubsystemLabel::qubit(s.clone()))
            .collect(),
        &vec![1; hops * n],
    )?;
    let destination: Vec<&str> = names[hops * n..].iter().map(|s| s.as_str()).collect();
    ideal = ideal.tensor(&payload.to_state_named(&destination)?)?;

    let payload_fidelity = state.fidelity(&ideal)?;
    let global_phase = state.relative_phase(&ideal).ok();
    let mut carrier_atoms_final = Vec::with_capacity(hops * n);
    for name in &names[..hops * n] {
        let reduced = state.reduced_density(&[name.as_str()])?;
        let excited = reduced.matrix()[(1, 1)].re;
        carrier_atoms_final.push((name.clone(), excited >= 1.0 - STATE_TOL));
    }

    Ok(ProtocolResult {
        final_state: state,
        payload_fidelity,
        global_phase,
        carrier_atoms_final,
        schedule_used: schedule,
    })
}

fn require_arity(payload: &Payload, expected: usize) -> Result<(), ProtocolError> {
    if payload.n_qubits() != expected {
        return Err(ProtocolError::WrongArity {
            expected,
            got: payload.n_qubits(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn payload_validation() {
        assert!(matches!(
            Payload::new(vec![c(1.0, 0.0)]),
            Err(ProtocolError::BadCoefficientCount { .. })
        ));
        assert!(matches!(
            Payload::new(vec![c(1.0, 0.0); 3]),
            Err(ProtocolError::BadCoefficientCount { .. })
        ));
        assert!(matches!(
            Payload::new(vec![c(3.0, 0.0), c(4.0, 0.0)]),
            Err(ProtocolError::NotNormalized { .. })
        ));
        // slightly off-norm input is renormalized
        let p = Payload::new(vec![c(0.6 + 1e-7, 0.0), c(0.8, 0.0)]).unwrap();
        let norm: f64 = p
            .coefficients()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn random_payloads_are_normalized_and_reproducible() {
        let a = Payload::random_set(2, 5, 99);
        let b = Payload::random_set(2, 5, 99);
        assert_eq!(a, b);
        for p in &a {
            let norm: f64 = p
                .coefficients()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
        assert_ne!(Payload::random_set(2, 1, 1), Payload::random_set(2, 1, 2));
    }

    #[test]
    fn bell_preparation_amplitudes() {
        let state = prepare_bell(THETA_BELL);
        let inv = 1.0 / 2.0_f64.sqrt();
        let overall = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        // |10⟩ amplitude e^{−iπ/4}/√2, |01⟩ amplitude −i·e^{−iπ/4}/√2
        assert!((state.amplitudes()[2] - overall * inv).norm() < 1e-15);
        assert!((state.amplitudes()[1] - overall * c(0.0, -inv)).norm() < 1e-15);
        assert_eq!(state.amplitudes()[0], c(0.0, 0.0));
        assert_eq!(state.amplitudes()[3], c(0.0, 0.0));

        let ideal = StateVector::from_amplitudes(
            state.labels().to_vec(),
            ndarray::array![c(0.0, 0.0), c(0.0, -inv), c(inv, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert_abs_diff_eq!(state.fidelity(&ideal).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bell_preparation_at_zero_angle_is_inert() {
        let state = prepare_bell(0.0);
        assert_eq!(state.amplitudes()[2], c(1.0, 0.0));
    }

    #[test]
    fn teleport_success_probability_is_one_half() {
        for payload in Payload::random_set(1, 20, 4242) {
            let result = ye_guo_teleport(&payload).unwrap();
            assert_abs_diff_eq!(result.success_probability, 0.5, epsilon = 1e-12);
            let total: f64 = result.outcomes.iter().map(|b| b.record.probability).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn teleport_identity_branch_holds_payload_exactly() {
        for payload in Payload::random_set(1, 50, 7) {
            let result = ye_guo_teleport(&payload).unwrap();
            let branch = result.branch((1, 0)).unwrap();
            assert_eq!(branch.correction, Correction::Identity);
            assert_abs_diff_eq!(branch.record.probability, 0.25, epsilon = 1e-12);
            assert_abs_diff_eq!(branch.corrected_fidelity.unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn teleport_phase_flip_branch_needs_its_correction() {
        let payload = Payload::single(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        let result = ye_guo_teleport(&payload).unwrap();
        let branch = result.branch((0, 1)).unwrap();
        assert_eq!(branch.correction, Correction::PhaseFlip);
        assert_abs_diff_eq!(branch.corrected_fidelity.unwrap(), 1.0, epsilon = 1e-12);

        // before the correction the branch state differs from the payload
        let post = branch.record.post_state.as_ref().unwrap();
        let reference = StateVector::basis(
            vec![SubsystemLabel::qubit("1"), SubsystemLabel::qubit("2")],
            &[0, 1],
        )
        .unwrap()
        .tensor(&payload.to_state_named(&["3"]).unwrap())
        .unwrap();
        let uncorrected = post.fidelity(&reference).unwrap();
        assert!(uncorrected < 1.0 - 1e-3);
    }

    #[test]
    fn teleport_failure_branches_carry_the_residual_probability() {
        let alpha = c(1.0, 0.0);
        let beta = c(0.0, 0.0);
        let payload = Payload::single(alpha, beta).unwrap();
        let result = ye_guo_teleport(&payload).unwrap();
        // ground payload: the (1,1) branch is empty, (0,0) carries |α|²/2
        let fail_11 = result.branch((1, 1)).unwrap();
        assert_eq!(fail_11.correction, Correction::Failure);
        assert_abs_diff_eq!(fail_11.record.probability, 0.0, epsilon = 1e-12);
        assert!(fail_11.record.post_state.is_none());
        let fail_00 = result.branch((0, 0)).unwrap();
        assert_abs_diff_eq!(fail_00.record.probability, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn single_transfer_is_perfect_with_positive_phase() {
        for payload in Payload::random_set(1, 20, 1234) {
            let result = transfer_single(&payload).unwrap();
            assert!((result.payload_fidelity - 1.0).abs() < 1e-12);
            let phase = result.global_phase.unwrap();
            assert!((phase - c(1.0, 0.0)).norm() < 1e-10);
            assert!(result.carriers_ok());
        }
    }

    #[test]
    fn single_transfer_intermediate_carries_minus_sign() {
        // after the first hop the state is −|1⟩₁(α|0⟩₂+β|1⟩₂)|1⟩₃
        let alpha = c(0.6, 0.0);
        let beta = c(0.0, 0.8);
        let payload = Payload::single(alpha, beta).unwrap();
        let labels = [
            SubsystemLabel::qubit("1"),
            SubsystemLabel::qubit("2"),
            SubsystemLabel::qubit("3"),
        ];
        let initial = payload
            .to_state_named(&["1"])
            .unwrap()
            .tensor(&StateVector::basis(vec![labels[1].clone()], &[1]).unwrap())
            .unwrap()
            .tensor(&StateVector::basis(vec![labels[2].clone()], &[1]).unwrap())
            .unwrap();
        let gate =
            dynamics::effective_unitary(&EffectiveGateParams::new(THETA_TRANSFER).unwrap());
        let after_hop1 = initial.apply_local_unitary(&["1", "2"], &gate).unwrap();
        // amplitudes: |1⟩₁(α|0⟩₂+β|1⟩₂)|1⟩₃ lives at flat indices 101=5, 111=7
        assert!((after_hop1.amplitudes()[5] + alpha).norm() < 1e-12);
        assert!((after_hop1.amplitudes()[7] + beta).norm() < 1e-12);
        let leak: f64 = after_hop1
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 5 && *i != 7)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        assert!(leak < 1e-24);
    }

    #[test]
    fn excited_payload_stays_in_excited_manifold() {
        let payload = Payload::single(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let result = transfer_single(&payload).unwrap();
        // final state is |111⟩ up to phase
        let all_excited = StateVector::basis(
            result.final_state.labels().to_vec(),
            &[1, 1, 1],
        )
        .unwrap();
        assert_abs_diff_eq!(
            result.final_state.fidelity(&all_excited).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_qubit_transfer_preserves_entanglement() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let bell = Payload::new(vec![c(inv, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(inv, 0.0)]).unwrap();
        let result = transfer_two_qubit(&bell).unwrap();
        assert!((result.payload_fidelity - 1.0).abs() < 1e-12);
        assert!((result.global_phase.unwrap() - c(1.0, 0.0)).norm() < 1e-10);

        // single-qubit reduced spectra are unchanged by the transfer
        let before = bell
            .to_state_named(&["x1", "x2"])
            .unwrap()
            .reduced_density(&["x1"])
            .unwrap()
            .eigenvalues()
            .unwrap();
        let after = result
            .final_state
            .reduced_density(&["b1"])
            .unwrap()
            .eigenvalues()
            .unwrap();
        for (x, y) in before.iter().zip(after.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_qubit_intermediate_matches_closed_form() {
        // after the (a1,b1) gate:
        // −|1⟩_{a1}(α|0⟩+γ|1⟩)_{b1}|0⟩_{a2}|1⟩_{b2} − |1⟩_{a1}(β|0⟩+δ|1⟩)_{b1}|1⟩_{a2}|1⟩_{b2}
        let (alpha, beta, gamma, delta) = (c(0.5, 0.0), c(0.5, 0.0), c(0.1, 0.3), c(0.2, -0.1));
        let norm = (alpha.norm_sqr() + beta.norm_sqr() + gamma.norm_sqr() + delta.norm_sqr()).sqrt();
        let payload =
            Payload::new(vec![alpha / norm, beta / norm, gamma / norm, delta / norm]).unwrap();
        let names = ["a1", "a2", "b1", "b2"];
        let mut state = payload.to_state_named(&names[..2]).unwrap();
        for carrier in &names[2..] {
            state = state
                .tensor(&StateVector::basis(vec![SubsystemLabel::qubit(*carrier)], &[1]).unwrap())
                .unwrap();
        }
        let gate =
            dynamics::effective_unitary(&EffectiveGateParams::new(THETA_TRANSFER).unwrap());
        let mid = state.apply_local_unitary(&["a1", "b1"], &gate).unwrap();

        // register order (a1,a2,b1,b2): amplitude of |1, m2, m1', 1⟩
        let idx = |a1: usize, a2: usize, b1: usize, b2: usize| a1 * 8 + a2 * 4 + b1 * 2 + b2;
        let expect = [
            (idx(1, 0, 0, 1), -alpha / norm),
            (idx(1, 0, 1, 1), -gamma / norm),
            (idx(1, 1, 0, 1), -beta / norm),
            (idx(1, 1, 1, 1), -delta / norm),
        ];
        for (flat, value) in expect {
            assert!(
                (mid.amplitudes()[flat] - value).norm() < 1e-12,
                "amplitude {flat}"
            );
        }
    }

    #[test]
    fn n_qubit_phase_alternates_with_n() {
        for (n, sign) in [(1usize, -1.0), (2, 1.0), (3, -1.0)] {
            let payload = Payload::random_set(n, 1, 31 + n as u64).remove(0);
            let result = transfer_n_qubit(&payload).unwrap();
            assert!(
                (result.payload_fidelity - 1.0).abs() < 1e-11,
                "fidelity at n={n}"
            );
            let phase = result.global_phase.unwrap();
            assert!(
                (phase - c(sign, 0.0)).norm() < 1e-10,
                "phase at n={n}: {phase}"
            );
        }
    }

    #[test]
    fn n_qubit_cap_is_enforced() {
        let payload = Payload::random_set(1, 1, 5).remove(0);
        let wide = Payload {
            n_qubits: MAX_TRANSFER_QUBITS + 1,
            coefficients: vec![c(1.0, 0.0); 1 << (MAX_TRANSFER_QUBITS + 1)],
        };
        assert!(matches!(
            transfer_n_qubit(&wide),
            Err(ProtocolError::CapacityExceeded { .. })
        ));
        assert!(transfer_n_qubit(&payload).is_ok());
    }

    #[test]
    fn ghz_payload_transfers_perfectly() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let mut coeffs = vec![c(0.0, 0.0); 8];
        coeffs[0] = c(inv, 0.0);
        coeffs[7] = c(inv, 0.0);
        let ghz = Payload::new(coeffs).unwrap();
        let result = transfer_n_qubit(&ghz).unwrap();
        assert!((result.payload_fidelity - 1.0).abs() < 1e-11);
        assert!((result.global_phase.unwrap() - c(-1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn multi_hop_signs_and_fidelity() {
        let payload = Payload::single(c(0.6, 0.0), c(0.0, 0.8)).unwrap();

        // two hops of one qubit reproduce the single-transfer path exactly
        let double = multi_hop_transfer(&payload, 2).unwrap();
        let single = transfer_single(&payload).unwrap();
        assert!(double
            .final_state
            .max_amplitude_diff(&single.final_state)
            .unwrap()
            < 1e-14);

        let triple = multi_hop_transfer(&payload, 3).unwrap();
        assert!((triple.payload_fidelity - 1.0).abs() < 1e-11);
        assert!((triple.global_phase.unwrap() - c(-1.0, 0.0)).norm() < 1e-10);
        assert!(triple.carriers_ok());

        let two_by_two = multi_hop_transfer(&Payload::random_set(2, 1, 8).remove(0), 2).unwrap();
        assert!((two_by_two.payload_fidelity - 1.0).abs() < 1e-11);
        assert!((two_by_two.global_phase.unwrap() - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn multi_hop_cap_is_enforced() {
        let payload = Payload::random_set(2, 1, 3).remove(0);
        assert!(matches!(
            multi_hop_transfer(&payload, 8),
            Err(ProtocolError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn transfer_is_linear_in_the_payload() {
        // transferring c1·p1 + c2·p2 equals the same superposition of the
        // transferred payloads
        let p1 = Payload::single(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let p2 = Payload::single(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let (c1, c2) = (c(0.6, 0.0), c(0.0, 0.8));
        let combined = Payload::new(vec![c1, c2]).unwrap();

        let out1 = transfer_single(&p1).unwrap().final_state;
        let out2 = transfer_single(&p2).unwrap().final_state;
        let out_combined = transfer_single(&combined).unwrap().final_state;
        let superposed: Vec<Complex64> = out1
            .amplitudes()
            .iter()
            .zip(out2.amplitudes().iter())
            .map(|(a, b)| c1 * a + c2 * b)
            .collect();
        for (lhs, rhs) in out_combined.amplitudes().iter().zip(superposed.iter()) {
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn wrong_arity_is_rejected() {
        let two = Payload::random_set(2, 1, 6).remove(0);
        assert!(matches!(
            transfer_single(&two),
            Err(ProtocolError::WrongArity { .. })
        ));
        assert!(matches!(
            ye_guo_teleport(&two),
            Err(ProtocolError::WrongArity { .. })
        ));
        let one = Payload::random_set(1, 1, 6).remove(0);
        assert!(matches!(
            transfer_two_qubit(&one),
            Err(ProtocolError::WrongArity { .. })
        ));
    }
}
