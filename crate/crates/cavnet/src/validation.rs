//! Quantitative validation of the dispersive approximation.
//!
//! The effective gate treats the cavity as only virtually excited; here the
//! same runs are done with the exact atom-atom-cavity model (optionally with
//! cavity decay) and compared against the effective prediction, turning the
//! qualitative Δ≫g and decay-insensitivity claims into measured curves.
//!
//! The exact model lives in the frame rotating at the cavity frequency, where
//! the atoms carry the detuning. The effective prediction therefore gets the
//! local free phase exp(−iΔt·Σₖ|1⟩ₖₖ⟨1|) applied before any comparison; the
//! two frames differ by exactly that per-atom phase.

use crate::dynamics::{
    self, DynamicsError, EffectiveGateParams, FullModelParams, THETA_TRANSFER,
};
use crate::linalg::{self, CMat, HermitianEig};
use crate::protocols::{Payload, ProtocolError};
use crate::qstate::{DensityMatrix, StateError, StateVector, SubsystemLabel};
use crate::tolerances::{FOCK_CONVERGENCE_TOL, STATE_TOL};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Fixed-step count per gate for the Lindblad runs in decay sweeps.
pub const DEFAULT_LINDBLAD_STEPS: usize = 4000;
/// Size of the seeded payload set averaged over per sweep point.
pub const DEFAULT_PAYLOAD_COUNT: usize = 10;
/// Seed of the default payload set.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("invalid sweep spec: {detail}")]
    Spec { detail: String },
    #[error("sweep expects parameter {expected}, spec has {got}")]
    WrongParameter { expected: String, got: String },
    #[error("gate comparison needs λt = π/2, got λt = {theta}")]
    NotTransferAngle { theta: f64 },
    #[error(
        "Fock cutoff not converged: fidelities at N and N+2 differ by {difference:.3e} (tolerance {tol:.1e})"
    )]
    CutoffNotConverged { difference: f64, tol: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Which knob a sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    DetuningRatio,
    KappaOverG,
    FockCutoff,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DetuningRatio => "detuning_ratio",
            Self::KappaOverG => "kappa_over_g",
            Self::FockCutoff => "fock_cutoff",
        }
    }
}

/// Which procedure runs at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepProtocol {
    /// One two-atom gate through one cavity.
    SingleGate,
    /// The full 1→2→3 transfer, one cavity per hop.
    TransferSingle,
}

/// A sweep request: which parameter, over which ascending values, on top of
/// which base model, with how many seeded random payloads.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: FullModelParams,
    pub protocol: SweepProtocol,
    pub payloads: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.values.is_empty() {
            return Err(ValidationError::Spec {
                detail: "values list is empty".into(),
            });
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ValidationError::Spec {
                detail: "values must be strictly ascending".into(),
            });
        }
        if self.payloads < 1 {
            return Err(ValidationError::Spec {
                detail: "payload count must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One sweep point: infidelity statistics over the payload set plus the
/// phase error against the predicted sign bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter_value: f64,
    pub mean_infidelity: f64,
    pub max_infidelity: f64,
    /// Radians; see [`phase_error_pure`] / [`phase_error_mixed`].
    pub phase_error: f64,
    /// Seconds of compute spent on this row (excluded from determinism).
    pub wall_time: f64,
}

/// Local free phase exp(−iΔt|1⟩⟨1|) per atom, as a two-atom diagonal.
fn free_phase_gate(delta: f64, t: f64) -> CMat {
    let phase = Complex64::from_polar(1.0, -delta * t);
    let mut m: CMat = Array2::zeros((4, 4));
    m[(0, 0)] = Complex64::new(1.0, 0.0);
    m[(1, 1)] = phase;
    m[(2, 2)] = phase;
    m[(3, 3)] = phase * phase;
    m
}

fn atom_labels(names: &[&str]) -> Vec<SubsystemLabel> {
    names.iter().map(|n| SubsystemLabel::qubit(*n)).collect()
}

fn cavity_label(fock_cutoff: usize) -> SubsystemLabel {
    SubsystemLabel::new("cav", fock_cutoff + 1).expect("cavity label")
}

/// |arg ⟨prediction|state⟩|: global-phase error of a pure final state against
/// the prediction (which already carries all expected phases).
fn phase_error_pure(state: &StateVector, prediction: &StateVector) -> f64 {
    match prediction.inner(state) {
        Ok(overlap) if overlap.norm() > 1e-12 => overlap.arg().abs(),
        _ => 0.0,
    }
}

/// Phase error readable from a mixed state: compare the coherence between
/// the two largest predicted components against its predicted value. A mixed
/// state has no global phase, so this measures the observable relative phase.
fn phase_error_mixed(rho: &DensityMatrix, prediction: &StateVector) -> f64 {
    let amps = prediction.amplitudes();
    let mut first = 0usize;
    for k in 1..amps.len() {
        if amps[k].norm() > amps[first].norm() {
            first = k;
        }
    }
    let mut second = usize::MAX;
    for k in 0..amps.len() {
        if k == first {
            continue;
        }
        if second == usize::MAX || amps[k].norm() > amps[second].norm() {
            second = k;
        }
    }
    if second == usize::MAX || amps[second].norm() < 1e-6 {
        return 0.0;
    }
    let expected = amps[first] * amps[second].conj();
    let actual = rho.matrix()[(first, second)];
    if actual.norm() < 1e-12 {
        return 0.0;
    }
    (actual * expected.conj()).arg().abs()
}

/// Per-payload result of one exact-vs-effective comparison.
struct Comparison {
    fidelity: f64,
    phase_error: f64,
}

/// Closed-system single-gate comparison at a fixed Fock cutoff.
///
/// Evolves (payload ⊗ |1⟩ ⊗ vacuum) under the exact Hamiltonian, traces out
/// the cavity and compares with the frame-corrected effective gate.
fn closed_single_gate(
    p: &FullModelParams,
    payloads: &[Payload],
) -> Result<Vec<Comparison>, ValidationError> {
    let h = dynamics::tavis_cummings_hamiltonian(p);
    let eig = HermitianEig::new(&h, STATE_TOL)?;
    let gate = dynamics::effective_unitary(&EffectiveGateParams::new(p.theta())?);
    let frame = free_phase_gate(p.delta(), p.t());
    let labels3 = [
        SubsystemLabel::qubit("1"),
        SubsystemLabel::qubit("2"),
        cavity_label(p.fock_cutoff()),
    ];
    let vacuum = StateVector::basis(vec![cavity_label(p.fock_cutoff())], &[0])?;

    payloads
        .iter()
        .map(|payload| {
            let atoms = payload
                .to_state_named(&["1"])?
                .tensor(&StateVector::basis(atom_labels(&["2"]), &[1])?)?;
            let full = atoms.tensor(&vacuum)?;
            debug_assert_eq!(full.labels(), &labels3[..]);
            let evolved = StateVector::from_amplitudes(
                full.labels().to_vec(),
                eig.propagate(Complex64::new(0.0, -p.t()), full.amplitudes()),
            )?;
            let predicted = atoms
                .apply_local_unitary(&["1", "2"], &gate)?
                .apply_local_unitary(&["1", "2"], &frame)?;
            let rho_atoms = evolved.reduced_density(&["1", "2"])?;
            let fidelity = rho_atoms.fidelity_with_pure(&predicted)?;
            let phase_error = phase_error_pure(&evolved, &predicted.tensor(&vacuum)?);
            Ok(Comparison {
                fidelity,
                phase_error,
            })
        })
        .collect()
}

/// Closed-system full single-qubit transfer (two hops, fresh cavity each).
fn closed_transfer_single(
    p: &FullModelParams,
    payloads: &[Payload],
) -> Result<Vec<Comparison>, ValidationError> {
    let h = dynamics::tavis_cummings_hamiltonian(p);
    let eig = HermitianEig::new(&h, STATE_TOL)?;
    let u_full = eig.exp_scaled(Complex64::new(0.0, -p.t()));
    let gate = dynamics::effective_unitary(&EffectiveGateParams::new(p.theta())?);
    let frame = free_phase_gate(p.delta(), p.t());
    let vacuum_dm =
        StateVector::basis(vec![cavity_label(p.fock_cutoff())], &[0])?.to_density_matrix();

    payloads
        .iter()
        .map(|payload| {
            let initial = payload
                .to_state_named(&["1"])?
                .tensor(&StateVector::basis(atom_labels(&["2"]), &[1])?)?
                .tensor(&StateVector::basis(atom_labels(&["3"]), &[1])?)?;
            let mut rho = initial.to_density_matrix();
            let mut predicted = initial;
            for pair in [["1", "2"], ["2", "3"]] {
                let joint = rho.tensor(&vacuum_dm)?;
                let evolved =
                    joint.apply_local_unitary(&[pair[0], pair[1], "cav"], &u_full)?;
                rho = evolved.partial_trace(&["1", "2", "3"])?;
                predicted = predicted
                    .apply_local_unitary(pair.as_ref(), &gate)?
                    .apply_local_unitary(pair.as_ref(), &frame)?;
            }
            let fidelity = rho.fidelity_with_pure(&predicted)?;
            let phase_error = phase_error_mixed(&rho, &predicted);
            Ok(Comparison {
                fidelity,
                phase_error,
            })
        })
        .collect()
}

/// Lindblad single-gate comparison with collapse √κ·a.
fn open_single_gate(
    p: &FullModelParams,
    payloads: &[Payload],
    steps: usize,
) -> Result<Vec<Comparison>, ValidationError> {
    let h = dynamics::tavis_cummings_hamiltonian(p);
    let levels = p.fock_cutoff() + 1;
    let a = dynamics::fock_annihilation(levels);
    let collapse = linalg::embed_operator(&[2, 2, levels], &[(2, &a)])
        .mapv(|z| z * p.kappa().sqrt());
    let gate = dynamics::effective_unitary(&EffectiveGateParams::new(p.theta())?);
    let frame = free_phase_gate(p.delta(), p.t());
    let vacuum = StateVector::basis(vec![cavity_label(p.fock_cutoff())], &[0])?;

    payloads
        .par_iter()
        .map(|payload| {
            let atoms = payload
                .to_state_named(&["1"])?
                .tensor(&StateVector::basis(atom_labels(&["2"]), &[1])?)?;
            let full = atoms.tensor(&vacuum)?;
            let rho_t = dynamics::lindblad_evolve(
                &h,
                std::slice::from_ref(&collapse),
                p.t(),
                steps,
                &full.to_density_matrix(),
            )?;
            let predicted = atoms
                .apply_local_unitary(&["1", "2"], &gate)?
                .apply_local_unitary(&["1", "2"], &frame)?;
            let rho_atoms = rho_t.partial_trace(&["1", "2"])?;
            let fidelity = rho_atoms.fidelity_with_pure(&predicted)?;
            let phase_error = phase_error_mixed(&rho_atoms, &predicted);
            Ok(Comparison {
                fidelity,
                phase_error,
            })
        })
        .collect()
}

/// Lindblad full single-qubit transfer, fresh decaying cavity per hop.
fn open_transfer_single(
    p: &FullModelParams,
    payloads: &[Payload],
    steps: usize,
) -> Result<Vec<Comparison>, ValidationError> {
    let levels = p.fock_cutoff() + 1;
    let a = dynamics::fock_annihilation(levels);
    let gate = dynamics::effective_unitary(&EffectiveGateParams::new(p.theta())?);
    let frame = free_phase_gate(p.delta(), p.t());
    let vacuum_dm = StateVector::basis(vec![cavity_label(p.fock_cutoff())], &[0])?
        .to_density_matrix();

    // embed the pair Hamiltonian and collapse into the 3-atom+cavity register
    let dims = [2usize, 2, 2, levels];
    let total = 8 * levels;
    let spin = dynamics::SpinOperatorSet::new();
    let a_dag = linalg::dagger(&a);
    let delta = Complex64::new(p.delta(), 0.0);
    let g = Complex64::new(p.g(), 0.0);
    let collapse = linalg::embed_operator(&dims, &[(3, &a)]).mapv(|z| z * p.kappa().sqrt());
    let hop_hamiltonians: Vec<CMat> = [[0usize, 1], [1, 2]]
        .iter()
        .map(|pair| {
            let mut h_full: CMat = Array2::zeros((total, total));
            for &atom in pair {
                h_full = h_full
                    + linalg::embed_operator(&dims, &[(atom, &spin.excited_projector)])
                        .mapv(|z| z * delta);
                h_full = h_full
                    + linalg::embed_operator(&dims, &[(atom, &spin.s_minus), (3, &a_dag)])
                        .mapv(|z| z * g);
                h_full = h_full
                    + linalg::embed_operator(&dims, &[(atom, &spin.s_plus), (3, &a)])
                        .mapv(|z| z * g);
            }
            h_full
        })
        .collect();

    payloads
        .par_iter()
        .map(|payload| {
            let initial = payload
                .to_state_named(&["1"])?
                .tensor(&StateVector::basis(atom_labels(&["2"]), &[1])?)?
                .tensor(&StateVector::basis(atom_labels(&["3"]), &[1])?)?;
            let mut rho = initial.to_density_matrix();
            let mut predicted = initial;
            for (hop, pair) in [["1", "2"], ["2", "3"]].iter().enumerate() {
                let joint = rho.tensor(&vacuum_dm)?;
                let evolved = dynamics::lindblad_evolve(
                    &hop_hamiltonians[hop],
                    std::slice::from_ref(&collapse),
                    p.t(),
                    steps,
                    &joint,
                )?;
                rho = evolved.partial_trace(&["1", "2", "3"])?;
                predicted = predicted
                    .apply_local_unitary(pair.as_ref(), &gate)?
                    .apply_local_unitary(pair.as_ref(), &frame)?;
            }
            let fidelity = rho.fidelity_with_pure(&predicted)?;
            let phase_error = phase_error_mixed(&rho, &predicted);
            Ok(Comparison {
                fidelity,
                phase_error,
            })
        })
        .collect()
}

fn require_transfer_angle(p: &FullModelParams) -> Result<(), ValidationError> {
    if (p.theta() - THETA_TRANSFER).abs() > 1e-9 {
        return Err(ValidationError::NotTransferAngle { theta: p.theta() });
    }
    Ok(())
}

/// Mean/max infidelity and mean phase error of a comparison set.
fn summarize(comparisons: &[Comparison]) -> (f64, f64, f64) {
    let n = comparisons.len() as f64;
    let mean_infid = comparisons.iter().map(|c| 1.0 - c.fidelity).sum::<f64>() / n;
    let max_infid = comparisons
        .iter()
        .map(|c| 1.0 - c.fidelity)
        .fold(0.0, f64::max);
    let mean_phase = comparisons.iter().map(|c| c.phase_error).sum::<f64>() / n;
    (mean_infid.max(0.0), max_infid.max(0.0), mean_phase)
}

/// Fock-truncation guard: the closed-system fidelities at N and N+2 must
/// agree payload-by-payload.
fn check_fock_convergence(
    p: &FullModelParams,
    payloads: &[Payload],
    protocol: SweepProtocol,
) -> Result<(), ValidationError> {
    let run = |params: &FullModelParams| match protocol {
        SweepProtocol::SingleGate => closed_single_gate(params, payloads),
        SweepProtocol::TransferSingle => closed_transfer_single(params, payloads),
    };
    let at_n = run(p)?;
    let bumped = p.with_fock_cutoff(p.fock_cutoff() + 2);
    let at_n2 = run(&bumped)?;
    let difference = at_n
        .iter()
        .zip(at_n2.iter())
        .map(|(x, y)| (x.fidelity - y.fidelity).abs())
        .fold(0.0, f64::max);
    if difference > FOCK_CONVERGENCE_TOL {
        return Err(ValidationError::CutoffNotConverged {
            difference,
            tol: FOCK_CONVERGENCE_TOL,
        });
    }
    Ok(())
}

/// Mean infidelity of the exact single gate against the effective gate at
/// λt = π/2, averaged over the default seeded payload set. Includes the
/// Fock-convergence guard (N vs N+2).
pub fn gate_infidelity_full_vs_effective(p: &FullModelParams) -> Result<f64, ValidationError> {
    let payloads = Payload::random_set(1, DEFAULT_PAYLOAD_COUNT, DEFAULT_SEED);
    gate_infidelity_with_payloads(p, &payloads)
}

/// [`gate_infidelity_full_vs_effective`] over a caller-supplied payload set.
pub fn gate_infidelity_with_payloads(
    p: &FullModelParams,
    payloads: &[Payload],
) -> Result<f64, ValidationError> {
    require_transfer_angle(p)?;
    check_fock_convergence(p, payloads, SweepProtocol::SingleGate)?;
    let comparisons = closed_single_gate(p, payloads)?;
    Ok(summarize(&comparisons).0)
}

/// Closed-system sweep over detuning ratios Δ/g at λt = π/2.
pub fn detuning_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ValidationError> {
    spec.validate()?;
    if spec.parameter != SweepParameter::DetuningRatio {
        return Err(ValidationError::WrongParameter {
            expected: SweepParameter::DetuningRatio.as_str().into(),
            got: spec.parameter.as_str().into(),
        });
    }
    if spec.values.iter().any(|v| *v <= 0.0) {
        return Err(ValidationError::Spec {
            detail: "detuning ratios must be positive".into(),
        });
    }
    let payloads = Payload::random_set(1, spec.payloads, spec.seed);
    spec.values
        .par_iter()
        .map(|&ratio| {
            let started = Instant::now();
            let p = FullModelParams::for_gate_angle(
                spec.base.g(),
                ratio * spec.base.g(),
                0.0,
                spec.base.fock_cutoff(),
                THETA_TRANSFER,
            )?;
            check_fock_convergence(&p, &payloads, spec.protocol)?;
            let comparisons = match spec.protocol {
                SweepProtocol::SingleGate => closed_single_gate(&p, &payloads)?,
                SweepProtocol::TransferSingle => closed_transfer_single(&p, &payloads)?,
            };
            let (mean_infidelity, max_infidelity, phase_error) = summarize(&comparisons);
            Ok(SweepRow {
                parameter_value: ratio,
                mean_infidelity,
                max_infidelity,
                phase_error,
                wall_time: started.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Open-system sweep over κ/g at fixed Δ/g and λt = π/2, Lindblad collapse
/// √κ·a with [`DEFAULT_LINDBLAD_STEPS`] steps per gate. The κ=0 row runs the
/// same integrator and must match the closed system.
pub fn decay_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ValidationError> {
    spec.validate()?;
    if spec.parameter != SweepParameter::KappaOverG {
        return Err(ValidationError::WrongParameter {
            expected: SweepParameter::KappaOverG.as_str().into(),
            got: spec.parameter.as_str().into(),
        });
    }
    if spec.values.iter().any(|v| *v < 0.0) {
        return Err(ValidationError::Spec {
            detail: "decay ratios must be nonnegative".into(),
        });
    }
    require_transfer_angle(&spec.base)?;
    let payloads = Payload::random_set(1, spec.payloads, spec.seed);
    // photon loss only depopulates the cavity ladder, so the closed-system
    // truncation check bounds the open runs too
    check_fock_convergence(&spec.base, &payloads, spec.protocol)?;

    spec.values
        .iter()
        .map(|&ratio| {
            let started = Instant::now();
            let p = spec.base.with_kappa(ratio * spec.base.g());
            let comparisons = match spec.protocol {
                SweepProtocol::SingleGate => {
                    open_single_gate(&p, &payloads, DEFAULT_LINDBLAD_STEPS)?
                }
                SweepProtocol::TransferSingle => {
                    open_transfer_single(&p, &payloads, DEFAULT_LINDBLAD_STEPS)?
                }
            };
            let (mean_infidelity, max_infidelity, phase_error) = summarize(&comparisons);
            Ok(SweepRow {
                parameter_value: ratio,
                mean_infidelity,
                max_infidelity,
                phase_error,
                wall_time: started.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Closed-system sweep over Fock cutoffs at fixed Δ/g (truncation study; no
/// trend assertion and no N+2 guard — the sweep itself is the guard).
pub fn fock_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ValidationError> {
    spec.validate()?;
    if spec.parameter != SweepParameter::FockCutoff {
        return Err(ValidationError::WrongParameter {
            expected: SweepParameter::FockCutoff.as_str().into(),
            got: spec.parameter.as_str().into(),
        });
    }
    if spec.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
        return Err(ValidationError::Spec {
            detail: "fock cutoffs must be integers ≥ 1".into(),
        });
    }
    require_transfer_angle(&spec.base)?;
    let payloads = Payload::random_set(1, spec.payloads, spec.seed);
    spec.values
        .par_iter()
        .map(|&value| {
            let started = Instant::now();
            let p = spec.base.with_fock_cutoff(value as usize);
            let comparisons = match spec.protocol {
                SweepProtocol::SingleGate => closed_single_gate(&p, &payloads)?,
                SweepProtocol::TransferSingle => closed_transfer_single(&p, &payloads)?,
            };
            let (mean_infidelity, max_infidelity, phase_error) = summarize(&comparisons);
            Ok(SweepRow {
                parameter_value: value,
                mean_infidelity,
                max_infidelity,
                phase_error,
                wall_time: started.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Dispatch a sweep on its parameter kind.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ValidationError> {
    match spec.parameter {
        SweepParameter::DetuningRatio => detuning_sweep(spec),
        SweepParameter::KappaOverG => decay_sweep(spec),
        SweepParameter::FockCutoff => fock_sweep(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn transfer_base(ratio: f64, fock: usize) -> FullModelParams {
        FullModelParams::for_gate_angle(1.0, ratio, 0.0, fock, THETA_TRANSFER).unwrap()
    }

    #[test]
    fn single_gate_infidelity_is_small_but_positive() {
        let p = transfer_base(10.0, 5);
        let infid = gate_infidelity_full_vs_effective(&p).unwrap();
        assert!(infid > 0.0, "dispersive error cannot vanish, got {infid}");
        assert!(infid < 0.1, "unexpectedly large infidelity {infid}");
    }

    #[test]
    fn infidelity_decreases_with_detuning() {
        let payloads = Payload::random_set(1, 4, DEFAULT_SEED);
        let eps10 =
            gate_infidelity_with_payloads(&transfer_base(10.0, 5), &payloads).unwrap();
        let eps40 =
            gate_infidelity_with_payloads(&transfer_base(40.0, 5), &payloads).unwrap();
        assert!(
            eps40 < eps10,
            "expected monotone improvement: eps10={eps10}, eps40={eps40}"
        );
    }

    #[test]
    fn wrong_angle_is_rejected() {
        let p = FullModelParams::new(1.0, 20.0, 0.0, 5, 1.0).unwrap();
        assert!(matches!(
            gate_infidelity_full_vs_effective(&p),
            Err(ValidationError::NotTransferAngle { .. })
        ));
    }

    #[test]
    fn sweep_spec_validation() {
        let base = transfer_base(20.0, 5);
        let mut spec = SweepSpec {
            parameter: SweepParameter::DetuningRatio,
            values: vec![],
            base,
            protocol: SweepProtocol::SingleGate,
            payloads: 2,
            seed: 1,
        };
        assert!(matches!(
            detuning_sweep(&spec),
            Err(ValidationError::Spec { .. })
        ));
        spec.values = vec![10.0, 10.0];
        assert!(matches!(
            detuning_sweep(&spec),
            Err(ValidationError::Spec { .. })
        ));
        spec.values = vec![10.0, 20.0];
        spec.parameter = SweepParameter::KappaOverG;
        assert!(matches!(
            detuning_sweep(&spec),
            Err(ValidationError::WrongParameter { .. })
        ));
    }

    #[test]
    fn detuning_sweep_single_row_and_determinism() {
        let spec = SweepSpec {
            parameter: SweepParameter::DetuningRatio,
            values: vec![15.0],
            base: transfer_base(20.0, 4),
            protocol: SweepProtocol::SingleGate,
            payloads: 3,
            seed: 9,
        };
        let rows_a = detuning_sweep(&spec).unwrap();
        let rows_b = detuning_sweep(&spec).unwrap();
        assert_eq!(rows_a.len(), 1);
        assert_eq!(rows_a[0].mean_infidelity.to_bits(), rows_b[0].mean_infidelity.to_bits());
        assert_eq!(rows_a[0].max_infidelity.to_bits(), rows_b[0].max_infidelity.to_bits());
        assert_eq!(rows_a[0].phase_error.to_bits(), rows_b[0].phase_error.to_bits());
        assert!(rows_a[0].mean_infidelity <= rows_a[0].max_infidelity);
    }

    #[test]
    fn closed_transfer_study_runs() {
        // small cutoff keeps the density-matrix chain cheap
        let payloads = Payload::random_set(1, 2, 3);
        let p = transfer_base(15.0, 2);
        let comparisons = closed_transfer_single(&p, &payloads).unwrap();
        for c in &comparisons {
            assert!(c.fidelity > 0.95, "fidelity {}", c.fidelity);
            assert!(c.phase_error < 0.2);
        }
    }

    #[test]
    fn decay_zero_row_matches_closed_system() {
        let payloads = Payload::random_set(1, 2, DEFAULT_SEED);
        let base = transfer_base(20.0, 3);
        let closed = closed_single_gate(&base, &payloads).unwrap();
        let open = open_single_gate(&base.with_kappa(0.0), &payloads, 64).unwrap();
        for (c, o) in closed.iter().zip(open.iter()) {
            assert_abs_diff_eq!(c.fidelity, o.fidelity, epsilon = 1e-9);
        }
    }

    #[test]
    fn decay_monotonicity_small_case() {
        let spec = SweepSpec {
            parameter: SweepParameter::KappaOverG,
            values: vec![0.0, 0.2],
            base: transfer_base(20.0, 3),
            protocol: SweepProtocol::SingleGate,
            payloads: 2,
            seed: 11,
        };
        let rows = decay_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(
            rows[1].mean_infidelity >= rows[0].mean_infidelity,
            "decay must not improve fidelity: {rows:?}"
        );
    }

    #[test]
    fn fock_sweep_rows_come_back_in_order() {
        let spec = SweepSpec {
            parameter: SweepParameter::FockCutoff,
            values: vec![1.0, 3.0],
            base: transfer_base(20.0, 5),
            protocol: SweepProtocol::SingleGate,
            payloads: 2,
            seed: 2,
        };
        let rows = fock_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert_abs_diff_eq!(rows[0].parameter_value, 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(rows[1].parameter_value, 3.0, epsilon = 0.0);
    }

    #[test]
    fn doubling_steps_barely_moves_the_answer() {
        // self-convergence at the decay operating point
        let payloads = Payload::random_set(1, 1, DEFAULT_SEED);
        let p = transfer_base(20.0, 3).with_kappa(0.1);
        let coarse = open_single_gate(&p, &payloads, 2000).unwrap();
        let fine = open_single_gate(&p, &payloads, 4000).unwrap();
        let diff = (coarse[0].fidelity - fine[0].fidelity).abs();
        assert!(diff < 1e-8, "step-size sensitivity {diff}");
    }
}
