//! Two-atom dispersive gate dynamics and the underlying cavity model.
//!
//! When two atoms are far detuned from a common cavity mode (detuning Δ large
//! against the coupling g), the cavity mediates an effective atom-atom
//! interaction with strength λ = g²/Δ. The closed-form two-atom gate for an
//! interaction angle θ = λt is generated analytically here; exponentiating the
//! effective Hamiltonian is kept as an independent cross-check, not as the
//! implementation. The exact two-atom/one-cavity Hamiltonian and a Lindblad
//! integrator with cavity decay back the validation of that approximation.

use crate::linalg::{self, CMat, HermitianEig};
use crate::qstate::{DensityMatrix, StateError, StateVector};
use crate::tolerances::{LINDBLAD_TRACE_TOL, STATE_TOL};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use thiserror::Error;

/// Gate angle for maximal entanglement (θ = π/4).
pub const THETA_BELL: f64 = FRAC_PI_4;
/// Gate angle for full state transfer (θ = π/2).
pub const THETA_TRANSFER: f64 = FRAC_PI_2;

/// Ratio |Δ|/g below which the dispersive approximation becomes questionable.
pub const DISPERSIVE_RATIO_FLOOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("gate angle must be finite, got {theta}")]
    BadTheta { theta: f64 },
    #[error("invalid model parameter: {detail}")]
    BadParameter { detail: String },
    #[error("Hamiltonian dimension {ham} does not match state dimension {state}")]
    DimensionMismatch { ham: usize, state: usize },
    #[error("integrator needs at least one step")]
    NoSteps,
    #[error(
        "trace drifted by {drift:.3e} after {steps} steps (tolerance {tol:.1e}); increase steps"
    )]
    TraceDrift { drift: f64, steps: usize, tol: f64 },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// The dispersive-gate angle θ = λt with λ = g²/Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveGateParams {
    theta: f64,
}

impl EffectiveGateParams {
    pub fn new(theta: f64) -> Result<Self, DynamicsError> {
        if !theta.is_finite() {
            return Err(DynamicsError::BadTheta { theta });
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Closed-form two-atom gate on the basis |00⟩,|01⟩,|10⟩,|11⟩ (first atom is
/// the slower index):
///
/// * |00⟩ → |00⟩
/// * |11⟩ → e^{-2iθ}|11⟩
/// * span{|01⟩,|10⟩} → e^{-iθ}\[cosθ·(same) − i·sinθ·(flipped)\]
pub fn effective_unitary(params: &EffectiveGateParams) -> CMat {
    let theta = params.theta;
    let phase = Complex64::from_polar(1.0, -theta);
    let cos = phase * theta.cos();
    let flip = phase * Complex64::new(0.0, -theta.sin());
    let mut u: CMat = Array2::zeros((4, 4));
    u[(0, 0)] = Complex64::new(1.0, 0.0);
    u[(1, 1)] = cos;
    u[(1, 2)] = flip;
    u[(2, 1)] = flip;
    u[(2, 2)] = cos;
    u[(3, 3)] = Complex64::from_polar(1.0, -2.0 * theta);
    u
}

/// Effective two-atom Hamiltonian in units of λ: Stark shifts on the excited
/// states plus the excitation flip-flop between the atoms.
pub fn effective_hamiltonian_matrix() -> CMat {
    let one = Complex64::new(1.0, 0.0);
    let mut h: CMat = Array2::zeros((4, 4));
    h[(1, 1)] = one;
    h[(2, 2)] = one;
    h[(3, 3)] = Complex64::new(2.0, 0.0);
    h[(1, 2)] = one;
    h[(2, 1)] = one;
    h
}

/// Raising/lowering/projector set for a single two-level atom
/// (index 0 = ground, 1 = excited).
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub s_plus: CMat,
    pub s_minus: CMat,
    pub excited_projector: CMat,
}

impl SpinOperatorSet {
    pub fn new() -> Self {
        let mut s_plus: CMat = Array2::zeros((2, 2));
        s_plus[(1, 0)] = Complex64::new(1.0, 0.0);
        let s_minus = linalg::dagger(&s_plus);
        let mut excited_projector: CMat = Array2::zeros((2, 2));
        excited_projector[(1, 1)] = Complex64::new(1.0, 0.0);
        Self {
            s_plus,
            s_minus,
            excited_projector,
        }
    }
}

impl Default for SpinOperatorSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Annihilation operator on a Fock space truncated to `levels` states.
pub fn fock_annihilation(levels: usize) -> CMat {
    let mut a: CMat = Array2::zeros((levels, levels));
    for n in 1..levels {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Parameters of the exact two-atom/one-cavity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModelParams {
    g: f64,
    delta: f64,
    kappa: f64,
    fock_cutoff: usize,
    t: f64,
}

impl FullModelParams {
    pub fn new(
        g: f64,
        delta: f64,
        kappa: f64,
        fock_cutoff: usize,
        t: f64,
    ) -> Result<Self, DynamicsError> {
        if g <= 0.0 || !g.is_finite() {
            return Err(DynamicsError::BadParameter {
                detail: format!("coupling g must be positive, got {g}"),
            });
        }
        if delta == 0.0 || !delta.is_finite() {
            return Err(DynamicsError::BadParameter {
                detail: format!("detuning must be nonzero, got {delta}"),
            });
        }
        if kappa < 0.0 || !kappa.is_finite() {
            return Err(DynamicsError::BadParameter {
                detail: format!("decay rate must be nonnegative, got {kappa}"),
            });
        }
        if fock_cutoff < 1 {
            return Err(DynamicsError::BadParameter {
                detail: "Fock cutoff must be at least 1".into(),
            });
        }
        if !t.is_finite() || t < 0.0 {
            return Err(DynamicsError::BadParameter {
                detail: format!("interaction time must be nonnegative, got {t}"),
            });
        }
        Ok(Self {
            g,
            delta,
            kappa,
            fock_cutoff,
            t,
        })
    }

    /// Parameters with the interaction time chosen so that λt hits `theta`.
    pub fn for_gate_angle(
        g: f64,
        delta: f64,
        kappa: f64,
        fock_cutoff: usize,
        theta: f64,
    ) -> Result<Self, DynamicsError> {
        if g <= 0.0 {
            return Err(DynamicsError::BadParameter {
                detail: format!("coupling g must be positive, got {g}"),
            });
        }
        let lambda = g * g / delta;
        Self::new(g, delta, kappa, fock_cutoff, theta / lambda)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// λ = g²/Δ.
    pub fn lambda(&self) -> f64 {
        self.g * self.g / self.delta
    }

    /// θ = λt.
    pub fn theta(&self) -> f64 {
        self.lambda() * self.t
    }

    /// True when |Δ|/g is below [`DISPERSIVE_RATIO_FLOOR`].
    pub fn dispersive_warning(&self) -> bool {
        (self.delta / self.g).abs() < DISPERSIVE_RATIO_FLOOR
    }

    pub fn with_fock_cutoff(mut self, fock_cutoff: usize) -> Self {
        self.fock_cutoff = fock_cutoff.max(1);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa.max(0.0);
        self
    }

    /// Dimension of the atom⊗atom⊗cavity register.
    pub fn full_dim(&self) -> usize {
        4 * (self.fock_cutoff + 1)
    }
}

/// Exact two-atom/one-cavity Hamiltonian in the frame rotating at the cavity
/// frequency: H = Δ·Σₖ|1⟩ₖₖ⟨1| + g·Σₖ(a†Sₖ⁻ + aSₖ⁺) on atom⊗atom⊗Fock(N+1).
///
/// In this frame the atoms carry the detuning; comparisons against the
/// effective gate must first strip the free phase exp(-iΔt·Σₖ|1⟩ₖₖ⟨1|), a
/// local phase on each atom (see the validation module).
pub fn tavis_cummings_hamiltonian(params: &FullModelParams) -> CMat {
    let levels = params.fock_cutoff + 1;
    let dims = [2usize, 2, levels];
    let spin = SpinOperatorSet::new();
    let a = fock_annihilation(levels);
    let a_dag = linalg::dagger(&a);
    let delta = Complex64::new(params.delta, 0.0);
    let g = Complex64::new(params.g, 0.0);

    let mut h: CMat = Array2::zeros((4 * levels, 4 * levels));
    for atom in 0..2 {
        h = h + linalg::embed_operator(&dims, &[(atom, &spin.excited_projector)]).mapv(|z| z * delta);
        h = h + linalg::embed_operator(&dims, &[(atom, &spin.s_minus), (2, &a_dag)]).mapv(|z| z * g);
        h = h + linalg::embed_operator(&dims, &[(atom, &spin.s_plus), (2, &a)]).mapv(|z| z * g);
    }
    h
}

/// Σₖ|1⟩ₖₖ⟨1| + a†a on the atom⊗atom⊗cavity register; commutes with the
/// exact Hamiltonian.
pub fn total_excitation_operator(fock_cutoff: usize) -> CMat {
    let levels = fock_cutoff + 1;
    let dims = [2usize, 2, levels];
    let spin = SpinOperatorSet::new();
    let a = fock_annihilation(levels);
    let number = linalg::dagger(&a).dot(&a);
    linalg::embed_operator(&dims, &[(0, &spin.excited_projector)])
        + linalg::embed_operator(&dims, &[(1, &spin.excited_projector)])
        + linalg::embed_operator(&dims, &[(2, &number)])
}

/// s' = exp(-iHt)·s through a dense Hermitian eigendecomposition — exact up
/// to floating point, no step-size error.
pub fn evolve_exact(h: &CMat, t: f64, state: &StateVector) -> Result<StateVector, DynamicsError> {
    if h.nrows() != state.dim() {
        return Err(DynamicsError::DimensionMismatch {
            ham: h.nrows(),
            state: state.dim(),
        });
    }
    let eig = HermitianEig::new(h, STATE_TOL)?;
    let amplitudes = eig.propagate(Complex64::new(0.0, -t), state.amplitudes());
    Ok(StateVector::from_amplitudes(
        state.labels().to_vec(),
        amplitudes,
    )?)
}

/// Fixed-step 4th-order integration of
/// dρ/dt = −i\[H,ρ\] + Σⱼ (LⱼρLⱼ† − ½{Lⱼ†Lⱼ, ρ}).
///
/// The Hamiltonian part is rotated out exactly through the eigenbasis of H
/// (an integrating factor), so the RK4 stages only integrate the dissipators;
/// with no collapse operators the result is exact up to the decomposition.
/// The output is re-Hermitized once at the end. Trace drift beyond 1e-6 is a
/// step-size error; residual drift below that is renormalized away.
pub fn lindblad_evolve(
    h: &CMat,
    collapse: &[CMat],
    t: f64,
    steps: usize,
    rho: &DensityMatrix,
) -> Result<DensityMatrix, DynamicsError> {
    if steps == 0 {
        return Err(DynamicsError::NoSteps);
    }
    let dim = rho.dim();
    if h.nrows() != dim {
        return Err(DynamicsError::DimensionMismatch {
            ham: h.nrows(),
            state: dim,
        });
    }
    for op in collapse {
        if op.nrows() != dim || op.ncols() != dim {
            return Err(DynamicsError::DimensionMismatch {
                ham: op.nrows(),
                state: dim,
            });
        }
    }

    let eig = HermitianEig::new(h, STATE_TOL)?;
    let v = &eig.vectors;
    let v_dag = linalg::dagger(v);

    // Everything below runs in the eigenbasis of H, where the rotating-frame
    // transform is a diagonal phase.
    let mut rho_e = v_dag.dot(rho.matrix()).dot(v);
    let ops_e: Vec<(CMat, CMat)> = collapse
        .iter()
        .map(|l| {
            let l_e = v_dag.dot(l).dot(v);
            let k_e = linalg::dagger(&l_e).dot(&l_e);
            (l_e, k_e)
        })
        .collect();

    let dt = t / steps as f64;
    // rotate A by the frame phases: Ã[a,b] = e^{i e_a s} A[a,b] e^{-i e_b s}
    let frame = |op: &CMat, phases: &Array1<Complex64>| -> CMat {
        let mut out = op.clone();
        for a in 0..dim {
            for b in 0..dim {
                out[(a, b)] *= phases[a] * phases[b].conj();
            }
        }
        out
    };
    let deriv = |state: &CMat, s: f64| -> CMat {
        let phases: Array1<Complex64> =
            eig.values.mapv(|e| Complex64::from_polar(1.0, e * s));
        let mut d: CMat = Array2::zeros((dim, dim));
        for (l_e, k_e) in &ops_e {
            let l_t = frame(l_e, &phases);
            let k_t = frame(k_e, &phases);
            let jump = l_t.dot(state).dot(&linalg::dagger(&l_t));
            let anti = k_t.dot(state) + state.dot(&k_t);
            d = d + jump - anti.mapv(|z| z * 0.5);
        }
        d
    };

    if !ops_e.is_empty() {
        for step in 0..steps {
            let s0 = step as f64 * dt;
            let k1 = deriv(&rho_e, s0);
            let half = &rho_e + &k1.mapv(|z| z * (0.5 * dt));
            let k2 = deriv(&half, s0 + 0.5 * dt);
            let half = &rho_e + &k2.mapv(|z| z * (0.5 * dt));
            let k3 = deriv(&half, s0 + 0.5 * dt);
            let full = &rho_e + &k3.mapv(|z| z * dt);
            let k4 = deriv(&full, s0 + dt);
            let incr = (k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4)
                .mapv(|z| z * (dt / 6.0));
            rho_e = rho_e + incr;
        }
    }

    // undo the frame at the final time, then leave the eigenbasis
    let final_phases: Array1<Complex64> =
        eig.values.mapv(|e| Complex64::from_polar(1.0, -e * t));
    let rotated = frame(&rho_e, &final_phases);
    let mut out = v.dot(&rotated).dot(&v_dag);

    let out_dag = linalg::dagger(&out);
    out = (out + out_dag).mapv(|z| z * 0.5);
    let trace: f64 = out.diag().iter().map(|z| z.re).sum();
    let drift = (trace - 1.0).abs();
    if drift > LINDBLAD_TRACE_TOL {
        return Err(DynamicsError::TraceDrift {
            drift,
            steps,
            tol: LINDBLAD_TRACE_TOL,
        });
    }
    out.mapv_inplace(|z| z / trace);
    Ok(DensityMatrix::new(rho.labels().to_vec(), out)?)
}
