//! Truncated bosonic Fock-space algebra.
//!
//! A [`CompositeSpace`] is an ordered list of modes, each truncated to a finite
//! number of Fock levels. Flat indices follow the Kronecker-product layout: the
//! first mode is the most significant digit, so in the optomechanical space
//! `(cavity 1, mechanical, cavity 2)` the occupation string `|100⟩` means one
//! photon in cavity 1.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const NORM_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue a density matrix may have before it is rejected.
pub const PSD_TOL: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeId {
    pub index: usize,
    pub label: String,
}

impl ModeId {
    pub fn new(index: usize, label: impl Into<String>) -> Self {
        Self { index, label: label.into() }
    }

    pub fn cavity1() -> Self {
        Self::new(0, "cavity1")
    }

    pub fn mechanical() -> Self {
        Self::new(1, "mechanical")
    }

    pub fn cavity2() -> Self {
        Self::new(2, "cavity2")
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.label, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSpace {
    modes: Vec<(ModeId, usize)>,
}

impl CompositeSpace {
    pub fn new(modes: Vec<(ModeId, usize)>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidDimension { dim: 0 });
        }
        for (k, (id, dim)) in modes.iter().enumerate() {
            if *dim < 2 {
                return Err(Error::InvalidDimension { dim: *dim });
            }
            if modes[..k].iter().any(|(other, _)| other.index == id.index) {
                return Err(Error::DuplicateMode(id.index));
            }
        }
        Ok(Self { modes })
    }

    /// `(cavity 1, mechanical, cavity 2)` with the given truncations.
    pub fn optomechanical(cavity_dim: usize, mech_dim: usize) -> Result<Self> {
        Self::new(vec![
            (ModeId::cavity1(), cavity_dim),
            (ModeId::mechanical(), mech_dim),
            (ModeId::cavity2(), cavity_dim),
        ])
    }

    fn single(dim: usize) -> Result<Self> {
        Self::new(vec![(ModeId::new(0, "mode"), dim)])
    }

    pub fn modes(&self) -> &[(ModeId, usize)] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        self.modes.iter().map(|(_, d)| d).product()
    }

    pub fn position(&self, mode: &ModeId) -> Result<usize> {
        self.modes.iter().position(|(id, _)| id.index == mode.index).ok_or_else(|| Error::UnknownMode(mode.to_string()))
    }

    pub fn mode_dim(&self, mode: &ModeId) -> Result<usize> {
        Ok(self.modes[self.position(mode)?].1)
    }

    pub fn contains(&self, mode: &ModeId) -> bool {
        self.position(mode).is_ok()
    }

    pub fn flat_index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes.len() {
            return Err(Error::DimensionMismatch { expected: self.modes.len(), found: occupations.len() });
        }
        let mut flat = 0;
        for ((id, dim), &n) in self.modes.iter().zip(occupations) {
            if n >= *dim {
                return Err(Error::OccupationOutOfRange { mode: id.to_string(), occupation: n, dim: *dim });
            }
            flat = flat * dim + n;
        }
        Ok(flat)
    }

    /// Inverse of [`flat_index`](Self::flat_index). Panics if `flat >= dim()`.
    pub fn occupations(&self, flat: usize) -> Vec<usize> {
        assert!(flat < self.dim(), "flat index {flat} out of range for dimension {}", self.dim());
        let mut occ = vec![0; self.modes.len()];
        let mut rest = flat;
        for (slot, (_, dim)) in occ.iter_mut().zip(&self.modes).rev() {
            *slot = rest % dim;
            rest /= dim;
        }
        occ
    }

    /// Subspace made of `keep`, in this space's mode order.
    pub fn restrict(&self, keep: &[ModeId]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        for id in keep {
            self.position(id)?;
        }
        let modes = self.modes.iter().filter(|(id, _)| keep.iter().any(|k| k.index == id.index)).cloned().collect();
        Self::new(modes)
    }
}

/// Dense operator on a [`CompositeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    data: DMatrix<C64>,
}

impl Operator {
    pub fn new(space: CompositeSpace, data: DMatrix<C64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch { expected: data.nrows(), found: data.ncols() });
        }
        if data.nrows() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: data.nrows() });
        }
        Ok(Self { space, data })
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), data: DMatrix::identity(d, d) }
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), data: DMatrix::zeros(d, d) }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), data: self.data.adjoint() }
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), data: &self.data * &rhs.data })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), data: &self.data + &rhs.data })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { space: self.space.clone(), data: &self.data * factor }
    }

    /// `[self, rhs] = self·rhs − rhs·self`
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.same_space(rhs)?;
        Ok(Self { space: self.space.clone(), data: &self.data * &rhs.data - &rhs.data * &self.data })
    }

    pub fn apply(&self, state: &DVector<C64>) -> Result<DVector<C64>> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: state.len() });
        }
        Ok(&self.data * state)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs_diff(&self.data, &self.data.adjoint()) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim();
        max_abs_diff(&(self.data.adjoint() * &self.data), &DMatrix::identity(d, d)) <= tol
    }
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Single-mode lowering operator with `a[n−1, n] = √n`.
pub fn annihilation(dim: usize) -> Result<Operator> {
    let space = CompositeSpace::single(dim)?;
    let mut data = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        data[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(space, data)
}

pub fn creation(dim: usize) -> Result<Operator> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number(dim: usize) -> Result<Operator> {
    let a = annihilation(dim)?;
    a.adjoint().matmul(&a)
}

/// Lift a single-mode operator onto `space` as `I ⊗ … ⊗ op ⊗ … ⊗ I`.
pub fn embed(op: &Operator, mode: &ModeId, space: &CompositeSpace) -> Result<Operator> {
    if op.space().num_modes() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: op.space().num_modes() });
    }
    let target = space.position(mode)?;
    let mode_dim = space.modes()[target].1;
    if op.dim() != mode_dim {
        return Err(Error::DimensionMismatch { expected: mode_dim, found: op.dim() });
    }
    let mut data = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for (k, (_, dim)) in space.modes().iter().enumerate() {
        let factor = if k == target { op.matrix().clone() } else { DMatrix::identity(*dim, *dim) };
        data = data.kronecker(&factor);
    }
    Operator::new(space.clone(), data)
}

/// Ladder operator of `mode` embedded in `space`.
pub fn mode_annihilation(mode: &ModeId, space: &CompositeSpace) -> Result<Operator> {
    embed(&annihilation(space.mode_dim(mode)?)?, mode, space)
}

pub fn mode_number(mode: &ModeId, space: &CompositeSpace) -> Result<Operator> {
    embed(&number(space.mode_dim(mode)?)?, mode, space)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateRepr {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    space: CompositeSpace,
    repr: StateRepr,
}

impl QState {
    pub fn pure(space: CompositeSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("vector norm {norm} is not 1")));
        }
        Ok(Self { space, repr: StateRepr::Pure(amplitudes) })
    }

    /// Validated density matrix: Hermitian, unit trace and positive semidefinite.
    pub fn density(space: CompositeSpace, rho: DMatrix<C64>) -> Result<Self> {
        if !rho.is_square() || rho.nrows() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: rho.nrows() });
        }
        let check = DensityCheck::of(&rho);
        if check.hermiticity > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {:.3e})", check.hermiticity)));
        }
        if check.trace_deviation > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace deviates from 1 by {:.3e}", check.trace_deviation)));
        }
        if check.min_eigenvalue < PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", check.min_eigenvalue)));
        }
        Ok(Self { space, repr: StateRepr::Mixed(rho) })
    }

    pub(crate) fn density_unchecked(space: CompositeSpace, rho: DMatrix<C64>) -> Self {
        Self { space, repr: StateRepr::Mixed(rho) }
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }

    pub fn is_pure_repr(&self) -> bool {
        matches!(self.repr, StateRepr::Pure(_))
    }

    /// The state as a density matrix, promoting pure vectors to `|ψ⟩⟨ψ|`.
    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.repr {
            StateRepr::Pure(psi) => psi * psi.adjoint(),
            StateRepr::Mixed(rho) => rho.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self { space: self.space.clone(), repr: StateRepr::Mixed(self.density_matrix()) }
    }

    pub fn trace(&self) -> C64 {
        match &self.repr {
            StateRepr::Pure(psi) => C64::new(psi.norm_squared(), 0.0),
            StateRepr::Mixed(rho) => rho.trace(),
        }
    }

    /// `tr(ρ·op)`; real for Hermitian `op`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(match &self.repr {
            StateRepr::Pure(psi) => psi.dotc(&(op.matrix() * psi)),
            StateRepr::Mixed(rho) => (op.matrix() * rho).trace(),
        })
    }

    /// `⟨ψ|ρ|ψ⟩` for a pure `target` on the same space.
    pub fn overlap_with_pure(&self, target: &DVector<C64>) -> Result<f64> {
        if target.len() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: target.len() });
        }
        Ok(match &self.repr {
            StateRepr::Pure(psi) => target.dotc(psi).norm_sqr(),
            StateRepr::Mixed(rho) => target.dotc(&(rho * target)).re,
        })
    }
}

/// Deviations of a matrix from being a valid density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityCheck {
    pub hermiticity: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
}

impl DensityCheck {
    pub fn of(rho: &DMatrix<C64>) -> Self {
        let hermiticity = max_abs_diff(rho, &rho.adjoint());
        let trace_deviation = (rho.trace() - C64::new(1.0, 0.0)).norm();
        Self { hermiticity, trace_deviation, min_eigenvalue: min_eigenvalue(rho) }
    }
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn min_eigenvalue(rho: &DMatrix<C64>) -> f64 {
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn basis_state(space: &CompositeSpace, occupations: &[usize]) -> Result<QState> {
    let idx = space.flat_index(occupations)?;
    let mut psi = DVector::zeros(space.dim());
    psi[idx] = C64::new(1.0, 0.0);
    QState::pure(space.clone(), psi)
}

/// Reduced density matrix over `keep`, tracing out every other mode.
pub fn partial_trace(state: &QState, keep: &[ModeId]) -> Result<QState> {
    let space = state.space();
    let reduced = space.restrict(keep)?;
    let kept: Vec<bool> = space.modes().iter().map(|(id, _)| keep.iter().any(|k| k.index == id.index)).collect();

    // (reduced index, traced-out index) for every flat index of the full space
    let split: Vec<(usize, usize)> = (0..space.dim())
        .map(|flat| {
            let occ = space.occupations(flat);
            let (mut r, mut t) = (0, 0);
            for ((n, (_, dim)), keep) in occ.iter().zip(space.modes()).zip(&kept) {
                if *keep {
                    r = r * dim + n;
                } else {
                    t = t * dim + n;
                }
            }
            (r, t)
        })
        .collect();

    let rho = state.density_matrix();
    let rd = reduced.dim();
    let mut out = DMatrix::zeros(rd, rd);
    for (j, &(rj, tj)) in split.iter().enumerate() {
        for (i, &(ri, ti)) in split.iter().enumerate() {
            if ti == tj {
                out[(ri, rj)] += rho[(i, j)];
            }
        }
    }
    Ok(QState::density_unchecked(reduced, out))
}
