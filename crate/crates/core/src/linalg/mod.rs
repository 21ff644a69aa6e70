//! Dense complex Hermitian linear algebra.
//!
//! Every matrix function goes through a single Hermitian eigendecomposition.
//! Negative powers and logarithms are evaluated on the support only: an
//! eigenvalue counts as supported when it exceeds
//! `d * f64::EPSILON * |lambda|_max`, and directions off the support map to 0.

mod random;

pub use random::{complex_gaussian, derive_seed, haar_unitary, random_density, random_subnormalized, rng_from_seed};
pub(crate) use random::random_density_with;

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Trace tolerance for the "normalized" flag.
pub const NORMALIZED_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    fn of(m: &CMatrix) -> Eigen {
        let n = m.nrows();
        if n == 1 {
            return Eigen {
                values: vec![m[(0, 0)].re],
                vectors: CMatrix::identity(1, 1),
            };
        }
        let se = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, k| se.eigenvectors[(r, order[k])]);
        Eigen { values, vectors }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Support threshold for this spectrum.
    pub fn cutoff(&self) -> f64 {
        self.values.len() as f64 * f64::EPSILON * self.max_abs()
    }

    /// Rebuild `V f(Λ) V†`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            for r in 0..n {
                scaled[(r, k)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Hermitian operator on a finite-dimensional space.
///
/// Construction symmetrizes `H <- (H + H†)/2`, so the stored matrix is
/// Hermitian to machine precision. The eigendecomposition is computed
/// lazily and cached.
pub struct HermitianOperator {
    m: CMatrix,
    eig: OnceLock<Eigen>,
}

impl Clone for HermitianOperator {
    fn clone(&self) -> Self {
        HermitianOperator {
            m: self.m.clone(),
            eig: self.eig.clone(),
        }
    }
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator").field("dim", &self.dim()).field("m", &self.m).finish()
    }
}

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::MalformedInput(format!(
                "matrix is not square: {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::MalformedInput("dimension must be at least 1".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::MalformedInput("non-finite matrix entry".into()));
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Like [`new`](Self::new) but rejects inputs whose anti-Hermitian part exceeds `tol`.
    pub fn new_checked(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() == m.ncols() {
            let asym = (&m - m.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            if asym > tol {
                return Err(Error::MalformedInput(format!(
                    "matrix is not Hermitian (max |H - H†| = {asym:e})"
                )));
            }
        }
        Self::new(m)
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        let sym = (&m + m.adjoint()) * c(0.5, 0.0);
        HermitianOperator {
            m: sym,
            eig: OnceLock::new(),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::new(CMatrix::from_fn(n, n, |r, k| if r == k { c(diag[r], 0.0) } else { C64::default() }))
    }

    pub fn identity(d: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self::from_matrix_unchecked(CMatrix::zeros(d, d))
    }

    /// `|v⟩⟨v|`
    pub fn projector_onto(v: &CVector) -> Self {
        Self::from_matrix_unchecked(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn eigen(&self) -> &Eigen {
        self.eig.get_or_init(|| Eigen::of(&self.m))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen().values
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigen().values.last().unwrap()
    }

    pub fn support_cutoff(&self) -> f64 {
        self.eigen().cutoff()
    }

    pub fn support_rank(&self) -> usize {
        let cut = self.support_cutoff();
        self.eigenvalues().iter().filter(|&&v| v > cut).count()
    }

    /// Rank with an eigenvalue threshold relative to the largest eigenvalue.
    pub fn rank_relative(&self, rel: f64) -> usize {
        let cut = rel * self.eigen().max_abs();
        self.eigenvalues().iter().filter(|&&v| v > cut).count()
    }

    pub fn support_projector(&self) -> HermitianOperator {
        let cut = self.support_cutoff();
        Self::from_matrix_unchecked(self.eigen().reconstruct(|v| if v > cut { 1.0 } else { 0.0 }))
    }

    /// Applies `f` to the spectrum. With `support_only`, eigenvalues at or below
    /// the support cutoff map to zero instead of `f(λ)`.
    pub fn map_spectrum(&self, support_only: bool, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
        let cut = self.support_cutoff();
        let out = self
            .eigen()
            .reconstruct(|v| if support_only && v <= cut { 0.0 } else { f(v) });
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::MalformedInput("matrix function produced non-finite entries".into()));
        }
        Ok(Self::from_matrix_unchecked(out))
    }

    pub fn apply(&self, f: OperatorFunction) -> Result<HermitianOperator> {
        operator_function(self, f)
    }

    /// `ρ^p` on the support. For `p >= 0` tiny negative eigenvalues are clamped to 0.
    pub fn power(&self, p: f64) -> Result<HermitianOperator> {
        operator_function(self, OperatorFunction::Power(p))
    }

    pub fn sqrt(&self) -> Result<HermitianOperator> {
        self.power(0.5)
    }

    pub fn log2(&self) -> Result<HermitianOperator> {
        operator_function(self, OperatorFunction::Log2)
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        Self::from_matrix_unchecked(&self.m * c(s, 0.0))
    }

    pub fn kron(&self, other: &HermitianOperator) -> HermitianOperator {
        Self::from_matrix_unchecked(self.m.kronecker(&other.m))
    }

    /// `K H K†` for an arbitrary (possibly rectangular) `K`.
    pub fn conjugate_by(&self, k: &CMatrix) -> HermitianOperator {
        Self::from_matrix_unchecked(k * &self.m * k.adjoint())
    }

    /// `A H A` for Hermitian `A`.
    pub fn sandwich(&self, a: &HermitianOperator) -> HermitianOperator {
        Self::from_matrix_unchecked(&a.m * &self.m * &a.m)
    }

    /// `Tr[A B]` for Hermitian A, B (real up to rounding).
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        trace_of_product(&self.m, &other.m).re
    }

    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<'a> Add<&'a HermitianOperator> for &'a HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(&self.m + &rhs.m)
    }
}

impl<'a> Sub<&'a HermitianOperator> for &'a HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(&self.m - &rhs.m)
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

/// Matrix functions available through [`operator_function`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorFunction {
    Power(f64),
    Log2,
    Exp2,
}

pub fn operator_function(h: &HermitianOperator, f: OperatorFunction) -> Result<HermitianOperator> {
    if !h.is_finite() {
        return Err(Error::MalformedInput("non-finite entries".into()));
    }
    match f {
        OperatorFunction::Power(p) if p == 0.0 => Ok(h.support_projector()),
        OperatorFunction::Power(p) if p > 0.0 => h.map_spectrum(true, |v| v.max(0.0).powf(p)),
        OperatorFunction::Power(p) => h.map_spectrum(true, |v| v.powf(p)),
        OperatorFunction::Log2 => h.map_spectrum(true, f64::log2),
        OperatorFunction::Exp2 => h.map_spectrum(false, f64::exp2),
    }
}

pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::default();
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(h: &HermitianOperator) -> f64 {
    h.eigenvalues().iter().map(|v| v.abs()).sum()
}

/// `‖a − b‖₁`
pub fn trace_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(trace_norm(&(a - b)))
}

pub(crate) fn check_same_dim(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::dims(a.dim(), b.dim()));
    }
    Ok(())
}

/// Positive semidefinite operator with trace in (0, 1].
#[derive(Debug, Clone)]
pub struct DensityOperator {
    op: HermitianOperator,
    trace: f64,
    normalized: bool,
}

impl std::ops::Deref for DensityOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

impl DensityOperator {
    /// Validates PSD (up to `-10 * support_cutoff`) and trace in (0, 1].
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let cut = op.support_cutoff();
        let min = op.min_eigenvalue();
        if min < -10.0 * cut.max(f64::MIN_POSITIVE) {
            return Err(Error::MalformedInput(format!(
                "operator is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Self::with_trace_check(op)
    }

    /// Accepts eigenvalues down to `-tol`, zeroing the negative part of the spectrum.
    pub fn new_clamped(op: HermitianOperator, tol: f64) -> Result<Self> {
        let min = op.min_eigenvalue();
        if min < -tol {
            return Err(Error::MalformedInput(format!(
                "operator is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        if min < 0.0 {
            let clamped = op.eigen().reconstruct(|v| v.max(0.0));
            return Self::with_trace_check(HermitianOperator::from_matrix_unchecked(clamped));
        }
        Self::with_trace_check(op)
    }

    fn with_trace_check(op: HermitianOperator) -> Result<Self> {
        let trace = op.trace();
        if !(trace > 0.0) || trace > 1.0 + NORMALIZED_TOL {
            return Err(Error::MalformedInput(format!("trace {trace} outside (0, 1]")));
        }
        let normalized = (trace - 1.0).abs() <= NORMALIZED_TOL;
        Ok(DensityOperator { op, trace, normalized })
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::new(HermitianOperator::identity(d).scale(1.0 / d as f64)).expect("I/d is a state")
    }

    /// `|k⟩⟨k|` in dimension `d`.
    pub fn basis_state(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::Precondition(format!("basis index {k} out of range for dim {d}")));
        }
        let mut diag = vec![0.0; d];
        diag[k] = 1.0;
        Self::new(HermitianOperator::from_real_diagonal(&diag)?)
    }

    pub fn pure(v: &CVector) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::MalformedInput("zero vector".into()));
        }
        Self::new(HermitianOperator::projector_onto(&(v / c(n, 0.0))))
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(p)?)
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Rescales to unit trace.
    pub fn normalize(&self) -> DensityOperator {
        let op = self.op.scale(1.0 / self.trace);
        DensityOperator { op, trace: 1.0, normalized: true }
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op)
    }

    pub fn kron(&self, other: &DensityOperator) -> DensityOperator {
        let op = self.op.kron(&other.op);
        let trace = self.trace * other.trace;
        DensityOperator { op, trace, normalized: (trace - 1.0).abs() <= NORMALIZED_TOL }
    }
}

/// A state on a tensor product of subsystems, first subsystem most significant.
#[derive(Debug, Clone)]
pub struct BipartiteState {
    state: DensityOperator,
    dims: Vec<usize>,
}

impl BipartiteState {
    pub fn new(state: DensityOperator, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::MalformedInput(format!("invalid subsystem dims {dims:?}")));
        }
        let prod: usize = dims.iter().product();
        if prod != state.dim() {
            return Err(Error::dims(state.dim(), prod));
        }
        Ok(BipartiteState { state, dims })
    }

    pub fn product(a: &DensityOperator, b: &DensityOperator) -> Self {
        BipartiteState { state: a.kron(b), dims: vec![a.dim(), b.dim()] }
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, k: usize) -> usize {
        self.dims[k]
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        partial_trace(self, keep)
    }

    /// Marginal on a single subsystem.
    pub fn marginal(&self, k: usize) -> Result<DensityOperator> {
        partial_trace(self, &[k])
    }

    /// Reorders subsystems: the new subsystem `j` is old subsystem `order[j]`.
    pub fn permute(&self, order: &[usize]) -> Result<BipartiteState> {
        let m = permute_subsystems(self.state.matrix(), &self.dims, order)?;
        let dims = order.iter().map(|&k| self.dims[k]).collect();
        let op = HermitianOperator::from_matrix_unchecked(m);
        Ok(BipartiteState {
            state: DensityOperator { op, trace: self.state.trace, normalized: self.state.normalized },
            dims,
        })
    }

    /// Swaps the two subsystems of a bipartite state.
    pub fn swapped(&self) -> Result<BipartiteState> {
        if self.dims.len() != 2 {
            return Err(Error::Precondition("swap needs exactly two subsystems".into()));
        }
        self.permute(&[1, 0])
    }
}

fn validate_keep(dims: &[usize], keep: &[usize]) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::MalformedInput("keep set must be nonempty".into()));
    }
    for (i, &k) in keep.iter().enumerate() {
        if k >= dims.len() {
            return Err(Error::MalformedInput(format!("subsystem {k} out of range for {} subsystems", dims.len())));
        }
        if keep[..i].contains(&k) {
            return Err(Error::MalformedInput(format!("subsystem {k} listed twice")));
        }
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Enumerates multi-indices of `sub` (a list of subsystem ids) as offsets into the full index.
fn offsets(dims: &[usize], st: &[usize], sub: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &k in sub {
        let mut next = Vec::with_capacity(out.len() * dims[k]);
        for &base in &out {
            for i in 0..dims[k] {
                next.push(base + i * st[k]);
            }
        }
        out = next;
    }
    out
}

/// Partial trace of a (not necessarily Hermitian) square matrix over all subsystems not in `keep`.
/// The kept subsystems appear in the order given by `keep`.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    validate_keep(dims, keep)?;
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::dims(total, m.nrows()));
    }
    let st = strides(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_off = offsets(dims, &st, keep);
    let traced_off = offsets(dims, &st, &traced);
    let n = kept_off.len();
    let mut out = CMatrix::zeros(n, n);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (col, &co) in kept_off.iter().enumerate() {
            let mut acc = C64::default();
            for &t in &traced_off {
                acc += m[(ro + t, co + t)];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(out)
}

pub fn permute_subsystems(m: &CMatrix, dims: &[usize], order: &[usize]) -> Result<CMatrix> {
    if order.len() != dims.len() {
        return Err(Error::MalformedInput("permutation length mismatch".into()));
    }
    validate_keep(dims, order)?;
    let st = strides(dims);
    let off = offsets(dims, &st, order);
    let n = off.len();
    Ok(CMatrix::from_fn(n, n, |r, col| m[(off[r], off[col])]))
}

pub fn partial_trace(state: &BipartiteState, keep: &[usize]) -> Result<DensityOperator> {
    let m = partial_trace_matrix(state.state.matrix(), &state.dims, keep)?;
    let op = HermitianOperator::from_matrix_unchecked(m);
    Ok(DensityOperator { op, trace: state.state.trace, normalized: state.state.normalized })
}

/// Partial trace for general Hermitian operators on a product space.
pub fn partial_trace_op(h: &HermitianOperator, dims: &[usize], keep: &[usize]) -> Result<HermitianOperator> {
    Ok(HermitianOperator::from_matrix_unchecked(partial_trace_matrix(h.matrix(), dims, keep)?))
}

/// Purification `|ψ⟩ = (√ρ_A ⊗ I_R) Σ_i |i⟩|i⟩` with A most significant.
#[derive(Debug, Clone)]
pub struct Purification {
    pub vector: CVector,
    pub marginal: DensityOperator,
    pub d_r: usize,
}

impl Purification {
    pub fn state(&self) -> Result<BipartiteState> {
        let d = self.marginal.dim();
        BipartiteState::new(DensityOperator::pure(&self.vector)?, vec![d, self.d_r])
    }
}

pub fn canonical_purification(rho: &DensityOperator) -> Result<Purification> {
    if !rho.is_normalized() {
        return Err(Error::Precondition("canonical purification needs a normalized state".into()));
    }
    let d = rho.dim();
    let sq = rho.sqrt()?;
    let mut v = CVector::zeros(d * d);
    for a in 0..d {
        for i in 0..d {
            v[a * d + i] = sq.matrix()[(a, i)];
        }
    }
    Ok(Purification { vector: v, marginal: rho.clone(), d_r: d })
}

/// `log₂ e`
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// `f(t) = −t log₂ t`, with `f(0) = 0`.
pub fn binary_f(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -t * t.log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> BipartiteState {
        let mut v = CVector::zeros(4);
        v[0] = c(1.0, 0.0);
        v[3] = c(1.0, 0.0);
        BipartiteState::new(DensityOperator::pure(&v).unwrap(), vec![2, 2]).unwrap()
    }

    #[test]
    fn inverse_sqrt_of_maximally_mixed() {
        let r = DensityOperator::maximally_mixed(2);
        let p = r.power(-0.5).unwrap();
        let expect = HermitianOperator::identity(2).scale(2f64.sqrt());
        assert!(p.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn log_zeroes_off_support() {
        let r = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        let l = r.log2().unwrap();
        assert!(l.max_abs_diff(&HermitianOperator::zeros(2)) < 1e-15);
    }

    #[test]
    fn sqrt_round_trip_rank_deficient() {
        let r = random_density(3, 2, 11).unwrap();
        let s = r.sqrt().unwrap();
        let back = s.sandwich(&HermitianOperator::identity(3));
        let sq = HermitianOperator::new(back.matrix() * s.matrix()).unwrap();
        assert!(trace_distance(&sq, &r).unwrap() < 1e-9);
        let inv = r.power(-0.5).unwrap();
        let proj = r.sandwich(&inv);
        assert!(trace_distance(&proj, &r.support_projector()).unwrap() < 1e-9);
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(HermitianOperator::new(m), Err(Error::MalformedInput(_))));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = random_density(2, 2, 1).unwrap();
        let b = random_density(3, 2, 2).unwrap();
        let ab = BipartiteState::product(&a, &b);
        assert!(ab.marginal(0).unwrap().max_abs_diff(&a) < 1e-14);
        assert!(ab.marginal(1).unwrap().max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let m = bell().marginal(1).unwrap();
        assert!(m.max_abs_diff(&DensityOperator::maximally_mixed(2)) < 1e-14);
    }

    #[test]
    fn partial_trace_order_independent() {
        let r = random_density(12, 5, 9).unwrap();
        let s = BipartiteState::new(r, vec![2, 3, 2]).unwrap();
        let direct = s.partial_trace(&[0]).unwrap();
        let c_gone = BipartiteState::new(s.partial_trace(&[0, 1]).unwrap(), vec![2, 3]).unwrap();
        let two_step = c_gone.partial_trace(&[0]).unwrap();
        assert!(direct.max_abs_diff(&two_step) < 1e-12);
        assert!((direct.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let s = bell();
        assert!(s.partial_trace(&[]).is_err());
        assert!(s.partial_trace(&[2]).is_err());
        let r = DensityOperator::maximally_mixed(4);
        assert!(BipartiteState::new(r, vec![3, 2]).is_err());
    }

    #[test]
    fn trace_norm_basics() {
        let h = HermitianOperator::from_real_diagonal(&[1.0, -1.0]).unwrap();
        assert!((trace_norm(&h) - 2.0).abs() < 1e-15);
        let r = random_density(3, 3, 4).unwrap();
        assert!(trace_norm(&(r.op() - r.op())) == 0.0);
    }

    #[test]
    fn trace_norm_matches_singular_values() {
        for seed in 0..20 {
            let a = random_density(4, 3, seed).unwrap();
            let b = random_density(4, 2, seed + 100).unwrap();
            let diff = a.op() - b.op();
            let svd: f64 = diff.matrix().clone().singular_values().iter().sum();
            assert!((trace_norm(&diff) - svd).abs() < 1e-10);
        }
    }

    #[test]
    fn purification_of_pure_state() {
        let p = canonical_purification(&DensityOperator::basis_state(2, 0).unwrap()).unwrap();
        let mut e = CVector::zeros(4);
        e[0] = c(1.0, 0.0);
        assert!((&p.vector - e).norm() < 1e-12);
    }

    #[test]
    fn purification_of_maximally_mixed_is_bell() {
        let p = canonical_purification(&DensityOperator::maximally_mixed(2)).unwrap();
        let s = p.state().unwrap();
        assert!(s.state().max_abs_diff(bell().state().normalize().op()) < 1e-12);
        assert!(s.marginal(0).unwrap().max_abs_diff(&DensityOperator::maximally_mixed(2)) < 1e-12);
    }

    #[test]
    fn purification_reference_marginal_is_transpose() {
        let r = random_density(3, 3, 5).unwrap();
        let s = canonical_purification(&r).unwrap().state().unwrap();
        let a = s.marginal(0).unwrap();
        let rr = s.marginal(1).unwrap();
        assert!(trace_distance(&a, &r).unwrap() < 1e-10);
        let rt = HermitianOperator::new(r.matrix().transpose()).unwrap();
        assert!(trace_distance(&rr, &rt).unwrap() < 1e-10);
    }

    #[test]
    fn purification_rejects_subnormalized() {
        let r = DensityOperator::diagonal(&[0.5, 0.25]).unwrap();
        assert!(matches!(canonical_purification(&r), Err(Error::Precondition(_))));
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::diagonal(&[0.7, 0.7]).is_err());
        assert!(DensityOperator::diagonal(&[1.2, -0.2]).is_err());
        let s = DensityOperator::diagonal(&[0.5, 0.2]).unwrap();
        assert!(!s.is_normalized());
        assert!(DensityOperator::maximally_mixed(3).is_normalized());
    }

    #[test]
    fn permute_round_trip() {
        let r = random_density(6, 6, 3).unwrap();
        let s = BipartiteState::new(r, vec![2, 3]).unwrap();
        let back = s.swapped().unwrap().swapped().unwrap();
        assert!(back.state().max_abs_diff(s.state()) < 1e-15);
        assert!(s.swapped().unwrap().marginal(0).unwrap().max_abs_diff(&s.marginal(1).unwrap()) < 1e-14);
    }
}
