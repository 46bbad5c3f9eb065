//! Dense complex-amplitude states of labeled multi-subsystem registers.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * basis index 0 is the atomic ground state |0⟩, index 1 the excited
//!   state |1⟩; a truncated cavity mode uses indices 0..=N for photon number;
//! * amplitudes are stored row-major over the labels in listed order, so the
//!   **first** label is the slowest-varying index;
//! * operations that take a target list accept the targets in any register
//!   positions and any order — the order given defines the index order of the
//!   operator matrix.

use crate::linalg::{self, CMat, CVec, HermitianEig};
use crate::tolerances::{PROBABILITY_FLOOR, PROPORTIONALITY_TOL, PSD_FLOOR, STATE_TOL};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("subsystem dimension must be at least 2, got {dim} for '{name}'")]
    BadDimension { name: String, dim: usize },
    #[error("subsystem name must be nonempty")]
    EmptyName,
    #[error("duplicate subsystem name '{name}'")]
    DuplicateLabel { name: String },
    #[error("unknown subsystem '{name}'")]
    UnknownLabel { name: String },
    #[error("amplitude count {got} does not match register dimension {expected}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("state norm {norm} is not 1 within tolerance")]
    NotNormalized { norm: f64 },
    #[error("operator is {got}x{got2} but the targets span dimension {expected}")]
    OperatorDimension { expected: usize, got: usize, got2: usize },
    #[error("operator is not unitary (max |U^H U - I| = {max_dev:.3e})")]
    NotUnitary { max_dev: f64 },
    #[error("registers do not match: {detail}")]
    RegisterMismatch { detail: String },
    #[error("states are not proportional (fidelity {fidelity}), no relative phase")]
    NotProportional { fidelity: f64 },
    #[error("basis index {index} out of range for '{name}' (dim {dim})")]
    BasisIndex { name: String, index: usize, dim: usize },
    #[error("matrix is not Hermitian (max deviation {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// A named subsystem with its local dimension (2 for atoms, N+1 for a
/// truncated cavity mode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemLabel {
    name: String,
    dim: usize,
}

impl SubsystemLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self, StateError> {
        let name = name.into();
        if name.is_empty() {
            return Err(StateError::EmptyName);
        }
        if dim < 2 {
            return Err(StateError::BadDimension { name, dim });
        }
        Ok(Self { name, dim })
    }

    /// Two-level atom.
    pub fn qubit(name: impl Into<String>) -> Self {
        Self::new(name, 2).expect("qubit label")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn check_unique(labels: &[SubsystemLabel]) -> Result<(), StateError> {
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[..i] {
            if a.name == b.name {
                return Err(StateError::DuplicateLabel {
                    name: a.name.clone(),
                });
            }
        }
    }
    Ok(())
}

fn total_dim(labels: &[SubsystemLabel]) -> usize {
    labels.iter().map(|l| l.dim).product()
}

/// Row-major strides: stride of the last label is 1.
fn strides(labels: &[SubsystemLabel]) -> Vec<usize> {
    let mut strides = vec![1usize; labels.len()];
    for i in (0..labels.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * labels[i + 1].dim;
    }
    strides
}

/// Index bookkeeping for operations acting on a subset of subsystems.
struct TargetView {
    /// stride of each target, in the caller-given target order
    target_strides: Vec<usize>,
    target_dims: Vec<usize>,
    /// product of target dims
    block: usize,
    /// strides and dims of the remaining subsystems, register order
    rest_strides: Vec<usize>,
    rest_dims: Vec<usize>,
    rest_count: usize,
}

impl TargetView {
    fn new(labels: &[SubsystemLabel], targets: &[&str]) -> Result<Self, StateError> {
        let all = strides(labels);
        let mut positions = Vec::with_capacity(targets.len());
        for name in targets {
            let pos = labels
                .iter()
                .position(|l| l.name == *name)
                .ok_or_else(|| StateError::UnknownLabel {
                    name: (*name).to_string(),
                })?;
            if positions.contains(&pos) {
                return Err(StateError::DuplicateLabel {
                    name: (*name).to_string(),
                });
            }
            positions.push(pos);
        }
        let target_dims: Vec<usize> = positions.iter().map(|&p| labels[p].dim).collect();
        let target_strides: Vec<usize> = positions.iter().map(|&p| all[p]).collect();
        let rest: Vec<usize> = (0..labels.len()).filter(|i| !positions.contains(i)).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&i| labels[i].dim).collect();
        let rest_strides: Vec<usize> = rest.iter().map(|&i| all[i]).collect();
        Ok(Self {
            block: target_dims.iter().product(),
            target_strides,
            target_dims,
            rest_count: rest_dims.iter().product(),
            rest_strides,
            rest_dims,
        })
    }

    /// Flat offset contributed by the remaining subsystems for rest index `r`.
    fn rest_offset(&self, mut r: usize) -> usize {
        let mut offset = 0;
        for (dim, stride) in self.rest_dims.iter().zip(&self.rest_strides).rev() {
            offset += (r % dim) * stride;
            r /= dim;
        }
        offset
    }

    /// Flat offset contributed by the targets for block index `b`
    /// (row-major over the caller-given target order).
    fn block_offset(&self, mut b: usize) -> usize {
        let mut offset = 0;
        for (dim, stride) in self.target_dims.iter().zip(&self.target_strides).rev() {
            offset += (b % dim) * stride;
            b /= dim;
        }
        offset
    }

    /// Decompose a block index into per-target digits.
    fn block_digits(&self, mut b: usize) -> Vec<usize> {
        let mut digits = vec![0usize; self.target_dims.len()];
        for (slot, dim) in digits.iter_mut().zip(&self.target_dims).rev() {
            *slot = b % dim;
            b /= dim;
        }
        digits
    }
}

/// Pure state of a labeled register.
#[derive(Debug, Clone)]
pub struct StateVector {
    labels: Vec<SubsystemLabel>,
    amplitudes: CVec,
}

impl StateVector {
    /// Build from explicit amplitudes; the vector must already be normalized.
    pub fn from_amplitudes(
        labels: Vec<SubsystemLabel>,
        amplitudes: CVec,
    ) -> Result<Self, StateError> {
        check_unique(&labels)?;
        let expected = total_dim(&labels);
        if amplitudes.len() != expected {
            return Err(StateError::AmplitudeCount {
                expected,
                got: amplitudes.len(),
            });
        }
        let state = Self { labels, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(state)
    }

    /// Computational basis state |indices⟩.
    pub fn basis(labels: Vec<SubsystemLabel>, indices: &[usize]) -> Result<Self, StateError> {
        check_unique(&labels)?;
        if indices.len() != labels.len() {
            return Err(StateError::RegisterMismatch {
                detail: format!(
                    "{} basis indices for {} subsystems",
                    indices.len(),
                    labels.len()
                ),
            });
        }
        for (label, &index) in labels.iter().zip(indices) {
            if index >= label.dim {
                return Err(StateError::BasisIndex {
                    name: label.name.clone(),
                    index,
                    dim: label.dim,
                });
            }
        }
        let st = strides(&labels);
        let flat: usize = indices.iter().zip(&st).map(|(i, s)| i * s).sum();
        let mut amplitudes: CVec = Array1::zeros(total_dim(&labels));
        amplitudes[flat] = Complex64::new(1.0, 0.0);
        Ok(Self { labels, amplitudes })
    }

    /// Single atom α|0⟩ + β|1⟩.
    pub fn qubit(name: &str, alpha: Complex64, beta: Complex64) -> Result<Self, StateError> {
        Self::from_amplitudes(
            vec![SubsystemLabel::qubit(name)],
            ndarray::array![alpha, beta],
        )
    }

    pub fn labels(&self) -> &[SubsystemLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn same_register(&self, other: &Self) -> Result<(), StateError> {
        if self.labels != other.labels {
            return Err(StateError::RegisterMismatch {
                detail: format!(
                    "[{}] vs [{}]",
                    self.labels
                        .iter()
                        .map(|l| l.name.as_str())
                        .collect::<Vec<_>>()
                        .join(","),
                    other
                        .labels
                        .iter()
                        .map(|l| l.name.as_str())
                        .collect::<Vec<_>>()
                        .join(",")
                ),
            });
        }
        Ok(())
    }

    /// Kronecker composition; label names must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self, StateError> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_unique(&labels)?;
        let mut amplitudes: CVec = Array1::zeros(self.dim() * other.dim());
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                amplitudes[i * other.dim() + j] = a * b;
            }
        }
        Ok(Self { labels, amplitudes })
    }

    /// Apply a unitary on the chosen targets, identity elsewhere.
    pub fn apply_local_unitary(&self, targets: &[&str], u: &CMat) -> Result<Self, StateError> {
        let view = TargetView::new(&self.labels, targets)?;
        if u.nrows() != view.block || u.ncols() != view.block {
            return Err(StateError::OperatorDimension {
                expected: view.block,
                got: u.nrows(),
                got2: u.ncols(),
            });
        }
        let max_dev = linalg::unitarity_deviation(u);
        if max_dev > STATE_TOL {
            return Err(StateError::NotUnitary { max_dev });
        }
        let mut out: CVec = Array1::zeros(self.dim());
        let mut flat = vec![0usize; view.block];
        for r in 0..view.rest_count {
            let base = view.rest_offset(r);
            for (b, slot) in flat.iter_mut().enumerate() {
                *slot = base + view.block_offset(b);
            }
            for (row, &row_flat) in flat.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, &col_flat) in flat.iter().enumerate() {
                    acc += u[(row, col)] * self.amplitudes[col_flat];
                }
                out[row_flat] = acc;
            }
        }
        Ok(Self {
            labels: self.labels.clone(),
            amplitudes: out,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Result<Complex64, StateError> {
        self.same_register(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|², insensitive to global phases.
    pub fn fidelity(&self, other: &Self) -> Result<f64, StateError> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// Unit phase c minimizing ‖self − c·other‖, i.e. ⟨other|self⟩ normalized.
    /// The states must be proportional (fidelity ≥ 1 − 1e-8).
    pub fn relative_phase(&self, other: &Self) -> Result<Complex64, StateError> {
        let fidelity = self.fidelity(other)?;
        if fidelity < 1.0 - PROPORTIONALITY_TOL {
            return Err(StateError::NotProportional { fidelity });
        }
        let overlap = other.inner(self)?;
        Ok(overlap / overlap.norm())
    }

    /// Born-rule measurement of the targets in the computational basis.
    ///
    /// Returns one record per basis outcome, ordered row-major over the
    /// targets as given. Zero-probability outcomes are reported too, with an
    /// undefined post-state.
    pub fn measure_subsystems(&self, targets: &[&str]) -> Result<Vec<MeasurementRecord>, StateError> {
        let view = TargetView::new(&self.labels, targets)?;
        let mut records = Vec::with_capacity(view.block);
        for b in 0..view.block {
            let block_base = view.block_offset(b);
            let mut probability = 0.0;
            for r in 0..view.rest_count {
                probability += self.amplitudes[block_base + view.rest_offset(r)].norm_sqr();
            }
            let outcome: Vec<(String, usize)> = targets
                .iter()
                .map(|n| n.to_string())
                .zip(view.block_digits(b))
                .collect();
            let post_state = if probability > PROBABILITY_FLOOR {
                let scale = Complex64::new(1.0 / probability.sqrt(), 0.0);
                let mut amplitudes: CVec = Array1::zeros(self.dim());
                for r in 0..view.rest_count {
                    let flat = block_base + view.rest_offset(r);
                    amplitudes[flat] = self.amplitudes[flat] * scale;
                }
                Some(Self {
                    labels: self.labels.clone(),
                    amplitudes,
                })
            } else {
                None
            };
            records.push(MeasurementRecord {
                outcome,
                probability,
                post_state,
            });
        }
        Ok(records)
    }

    /// Reduced density matrix on the kept subsystems (in the order given),
    /// computed directly from the amplitudes.
    pub fn reduced_density(&self, keep: &[&str]) -> Result<DensityMatrix, StateError> {
        let view = TargetView::new(&self.labels, keep)?;
        let mut matrix: CMat = Array2::zeros((view.block, view.block));
        for r in 0..view.rest_count {
            let base = view.rest_offset(r);
            for i in 0..view.block {
                let ai = self.amplitudes[base + view.block_offset(i)];
                if ai == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..view.block {
                    let aj = self.amplitudes[base + view.block_offset(j)];
                    matrix[(i, j)] += ai * aj.conj();
                }
            }
        }
        let labels: Vec<SubsystemLabel> = keep
            .iter()
            .map(|name| {
                self.labels
                    .iter()
                    .find(|l| l.name == *name)
                    .cloned()
                    .expect("validated label")
            })
            .collect();
        Ok(DensityMatrix { labels, matrix })
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let n = self.dim();
        let mut matrix: CMat = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                matrix[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix {
            labels: self.labels.clone(),
            matrix,
        }
    }

    /// Largest entrywise amplitude difference; registers must match.
    pub fn max_amplitude_diff(&self, other: &Self) -> Result<f64, StateError> {
        self.same_register(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// One measurement outcome: which basis index each target collapsed to, its
/// Born probability, and the renormalized post-measurement state (absent for
/// zero-probability branches).
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcome: Vec<(String, usize)>,
    pub probability: f64,
    pub post_state: Option<StateVector>,
}

impl MeasurementRecord {
    /// Basis indices in target order.
    pub fn indices(&self) -> Vec<usize> {
        self.outcome.iter().map(|(_, i)| *i).collect()
    }
}

/// Mixed state of a labeled register.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    labels: Vec<SubsystemLabel>,
    matrix: CMat,
}

impl DensityMatrix {
    /// Build from an explicit matrix, validating Hermiticity, unit trace and
    /// positive semidefiniteness (up to tolerance).
    pub fn new(labels: Vec<SubsystemLabel>, matrix: CMat) -> Result<Self, StateError> {
        check_unique(&labels)?;
        let expected = total_dim(&labels);
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(StateError::AmplitudeCount {
                expected,
                got: matrix.nrows(),
            });
        }
        let max_dev = linalg::hermiticity_deviation(&matrix);
        if max_dev > STATE_TOL {
            return Err(StateError::NotHermitian { max_dev });
        }
        let trace = matrix.diag().iter().map(|z| z.re).sum::<f64>();
        if (trace - 1.0).abs() > STATE_TOL {
            return Err(StateError::TraceNotOne { trace });
        }
        let eig = HermitianEig::new(&matrix, STATE_TOL)?;
        let min_eig = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < PSD_FLOOR {
            return Err(StateError::NotPositive { min_eig });
        }
        Ok(Self { labels, matrix })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        state.to_density_matrix()
    }

    pub fn labels(&self) -> &[SubsystemLabel] {
        &self.labels
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).sum()
    }

    /// Tr(ρ²).
    pub fn purity(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                sum += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        sum
    }

    /// Reduced density matrix on the kept subsystems (in the order given);
    /// trace is preserved.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix, StateError> {
        let view = TargetView::new(&self.labels, keep)?;
        let mut matrix: CMat = Array2::zeros((view.block, view.block));
        for i in 0..view.block {
            let row_base = view.block_offset(i);
            for j in 0..view.block {
                let col_base = view.block_offset(j);
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..view.rest_count {
                    let rest = view.rest_offset(r);
                    acc += self.matrix[(row_base + rest, col_base + rest)];
                }
                matrix[(i, j)] = acc;
            }
        }
        let labels: Vec<SubsystemLabel> = keep
            .iter()
            .map(|name| {
                self.labels
                    .iter()
                    .find(|l| l.name == *name)
                    .cloned()
                    .expect("validated label")
            })
            .collect();
        Ok(DensityMatrix { labels, matrix })
    }

    /// Kronecker composition; label names must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self, StateError> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_unique(&labels)?;
        Ok(Self {
            labels,
            matrix: ndarray::linalg::kron(&self.matrix, &other.matrix),
        })
    }

    /// ρ → U ρ U† with U acting on the chosen targets.
    pub fn apply_local_unitary(&self, targets: &[&str], u: &CMat) -> Result<Self, StateError> {
        let view = TargetView::new(&self.labels, targets)?;
        if u.nrows() != view.block || u.ncols() != view.block {
            return Err(StateError::OperatorDimension {
                expected: view.block,
                got: u.nrows(),
                got2: u.ncols(),
            });
        }
        let max_dev = linalg::unitarity_deviation(u);
        if max_dev > STATE_TOL {
            return Err(StateError::NotUnitary { max_dev });
        }
        let full = self.embed(targets, u)?;
        let matrix = full.dot(&self.matrix).dot(&linalg::dagger(&full));
        Ok(Self {
            labels: self.labels.clone(),
            matrix,
        })
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure reference on the same register.
    pub fn fidelity_with_pure(&self, state: &StateVector) -> Result<f64, StateError> {
        if self.labels != state.labels {
            return Err(StateError::RegisterMismatch {
                detail: "density matrix and state labels differ".into(),
            });
        }
        let rho_psi = self.matrix.dot(&state.amplitudes);
        let value: Complex64 = state
            .amplitudes
            .iter()
            .zip(rho_psi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(value.re.clamp(0.0, 1.0))
    }

    /// Eigenvalues of ρ, ascending.
    pub fn eigenvalues(&self) -> Result<Array1<f64>, StateError> {
        Ok(HermitianEig::new(&self.matrix, STATE_TOL)?.values)
    }

    fn embed(&self, targets: &[&str], u: &CMat) -> Result<CMat, StateError> {
        // Full-register embedding of u; density registers stay small enough
        // that forming the matrix is fine.
        let view = TargetView::new(&self.labels, targets)?;
        let dim = self.dim();
        let mut full: CMat = Array2::zeros((dim, dim));
        for r in 0..view.rest_count {
            let base = view.rest_offset(r);
            for row in 0..view.block {
                let row_flat = base + view.block_offset(row);
                for col in 0..view.block {
                    full[(row_flat, base + view.block_offset(col))] = u[(row, col)];
                }
            }
        }
        Ok(full)
    }
}

/// Convenience: measurement probabilities must form a distribution.
pub fn total_probability(records: &[MeasurementRecord]) -> f64 {
    records.iter().map(|r| r.probability).sum()
}

/// Checks that a set of states is pairwise equal up to the stated tolerance.
pub fn states_equal(a: &StateVector, b: &StateVector, tol: f64) -> bool {
    matches!(a.max_amplitude_diff(b), Ok(d) if d <= tol)
}

// Keep the analytic tolerance in the public surface for callers comparing
// states entrywise.
pub use crate::tolerances::ANALYTIC_TOL as ENTRYWISE_TOL;
