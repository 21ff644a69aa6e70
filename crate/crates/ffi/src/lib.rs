//! C ABI over `qsoftcover`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns a [`QscStatus`]; on failure the message is
//! kept per thread and read back with [`qsc_last_error`].
//! Matrices cross the boundary as row-major real and imaginary arrays.
//! A null imaginary pointer means a real matrix.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qsoftcover::channels::{CQEnsemble, QuantumChannel};
use qsoftcover::error::Error;
use qsoftcover::linalg::{random_density, BipartiteState, CMatrix, DensityOperator, C64};
use qsoftcover::{cqcover, decouple, entropic, qcover};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QscStatus {
    Ok = 0,
    NullPointer = 1,
    MalformedInput = 2,
    DimensionMismatch = 3,
    Precondition = 4,
    Support = 5,
    Numerical = 6,
    Lookup = 7,
    Resource = 8,
    Config = 9,
    Io = 10,
    Panic = 11,
}

impl From<&Error> for QscStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::MalformedInput(_) => QscStatus::MalformedInput,
            Error::DimensionMismatch { .. } => QscStatus::DimensionMismatch,
            Error::Precondition(_) => QscStatus::Precondition,
            Error::Support(_) => QscStatus::Support,
            Error::Numerical(_) => QscStatus::Numerical,
            Error::Lookup(_) => QscStatus::Lookup,
            Error::Resource(_) => QscStatus::Resource,
            Error::Config { .. } => QscStatus::Config,
            Error::Io(_) => QscStatus::Io,
        }
    }
}

/// Density operator handle.
pub struct QscState(DensityOperator);

/// Channel handle.
pub struct QscChannel(QuantumChannel);

/// Classical-quantum ensemble handle.
pub struct QscEnsemble(CQEnsemble);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QscStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QscStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            QscStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            QscStatus::from(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            QscStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn matrix(rows: usize, cols: usize, re: *const f64, im: *const f64) -> Result<CMatrix, Fail> {
    let re = slice(re, rows * cols, "re")?;
    let im = if im.is_null() { None } else { Some(slice(im, rows * cols, "im")?) };
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let k = i * cols + j;
        C64::new(re[k], im.map_or(0.0, |v| v[k]))
    }))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn qsc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `re` (and `im` when non-null) point to `dim·dim` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_state_from_matrix(dim: usize, re: *const f64, im: *const f64, out: *mut *mut QscState) -> QscStatus {
    guard(|| {
        let m = matrix(dim, dim, re, im)?;
        put(out, boxed(QscState(DensityOperator::from_matrix(m)?)), "out")
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_state_random(dim: usize, rank: usize, seed: u64, out: *mut *mut QscState) -> QscStatus {
    guard(|| put(out, boxed(QscState(random_density(dim, rank, seed)?)), "out"))
}

/// # Safety
/// `state` is a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qsc_state_dim(state: *const QscState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `state` came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsc_state_free(state: *mut QscState) {
    free(state)
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_channel_identity(dim: usize, out: *mut *mut QscChannel) -> QscStatus {
    guard(|| {
        if dim == 0 {
            return Err(Error::Precondition("dimension must be positive".into()).into());
        }
        put(out, boxed(QscChannel(QuantumChannel::identity(dim))), "out")
    })
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_channel_depolarizing(dim: usize, p: f64, out: *mut *mut QscChannel) -> QscStatus {
    guard(|| put(out, boxed(QscChannel(QuantumChannel::depolarizing(dim, p)?)), "out"))
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_channel_random(d_in: usize, d_out: usize, n_kraus: usize, seed: u64, out: *mut *mut QscChannel) -> QscStatus {
    guard(|| put(out, boxed(QscChannel(QuantumChannel::random(d_in, d_out, n_kraus, seed)?)), "out"))
}

/// Kraus operators stacked one after another, each `d_out × d_in` row-major.
///
/// # Safety
/// `re` (and `im` when non-null) hold `n_kraus·d_out·d_in` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_channel_from_kraus(
    d_in: usize,
    d_out: usize,
    n_kraus: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut QscChannel,
) -> QscStatus {
    guard(|| {
        let block = d_in * d_out;
        let kraus = (0..n_kraus)
            .map(|k| {
                let im_k = if im.is_null() { ptr::null() } else { im.wrapping_add(k * block) };
                matrix(d_out, d_in, re.wrapping_add(k * block), im_k)
            })
            .collect::<Result<Vec<_>, _>>()?;
        put(out, boxed(QscChannel(QuantumChannel::new(kraus)?)), "out")
    })
}

/// # Safety
/// `channel` came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsc_channel_free(channel: *mut QscChannel) {
    free(channel)
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_ensemble_binary_orthogonal(out: *mut *mut QscEnsemble) -> QscStatus {
    guard(|| put(out, boxed(QscEnsemble(CQEnsemble::binary_orthogonal())), "out"))
}

/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_ensemble_random(n_symbols: usize, dim: usize, seed: u64, out: *mut *mut QscEnsemble) -> QscStatus {
    guard(|| put(out, boxed(QscEnsemble(CQEnsemble::random(n_symbols, dim, seed)?)), "out"))
}

/// Ensemble of the classical channel `W` (row-major `n_x × n_y`) with input PMF `q`.
///
/// # Safety
/// `w` holds `n_x·n_y` doubles, `q` holds `n_x`; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_ensemble_from_classical(
    n_x: usize,
    n_y: usize,
    w: *const f64,
    q: *const f64,
    out: *mut *mut QscEnsemble,
) -> QscStatus {
    guard(|| {
        let w = slice(w, n_x * n_y, "w")?;
        let rows: Vec<Vec<f64>> = w.chunks(n_y.max(1)).map(<[f64]>::to_vec).collect();
        let q = slice(q, n_x, "q")?;
        put(out, boxed(QscEnsemble(CQEnsemble::from_classical(&rows, q)?)), "out")
    })
}

/// # Safety
/// `ens` came from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsc_ensemble_free(ens: *mut QscEnsemble) {
    free(ens)
}

/// `D(σ‖ρ)` in bits; `+inf` when the support condition fails.
///
/// # Safety
/// Handles are live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_relative_entropy(sigma: *const QscState, rho: *const QscState, out: *mut f64) -> QscStatus {
    guard(|| {
        let (s, r) = (get(sigma, "sigma")?, get(rho, "rho")?);
        put(out, entropic::relative_entropy(&s.0, &r.0)?.as_f64(), "out")
    })
}

/// `H_min(A|B)` of a state on `A ⊗ B`.
///
/// # Safety
/// `state` is live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_h_min(state: *const QscState, d_a: usize, d_b: usize, out: *mut f64) -> QscStatus {
    guard(|| {
        let s = get(state, "state")?;
        let bp = BipartiteState::new(s.0.clone(), vec![d_a, d_b])?;
        put(out, entropic::h_min(&bp)?, "out")
    })
}

/// Collision quantity `Q̃₂` of the covering instance `(ρ_A, N)`.
///
/// # Safety
/// Handles are live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_qcover_q2(rho_a: *const QscState, channel: *const QscChannel, out: *mut f64) -> QscStatus {
    guard(|| {
        let inst = qcover::build_instance(&get(rho_a, "rho_a")?.0, &get(channel, "channel")?.0)?;
        put(out, qcover::q2_target(&inst)?, "out")
    })
}

/// Monte Carlo estimate of the expected covering divergence with block size `theta`.
///
/// # Safety
/// Handles are live; `mean`, `stderr` and `bound` are writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_qcover_mc(
    rho_a: *const QscState,
    channel: *const QscChannel,
    theta: usize,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
    bound: *mut f64,
) -> QscStatus {
    guard(|| {
        let inst = qcover::build_instance(&get(rho_a, "rho_a")?.0, &get(channel, "channel")?.0)?;
        let q2 = qcover::q2_target(&inst)?;
        let e = qcover::mc_expectation(&inst, theta, trials, seed)?;
        put(mean, e.mean, "mean")?;
        put(stderr, e.stderr, "stderr")?;
        put(bound, qcover::covering_bound(q2, theta), "bound")
    })
}

/// # Safety
/// `ens` is live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_cq_q2(ens: *const QscEnsemble, out: *mut f64) -> QscStatus {
    guard(|| put(out, cqcover::q2_cq(&get(ens, "ens")?.0)?, "out"))
}

/// Exact expected divergence over i.i.d. codebooks of size `theta`.
///
/// # Safety
/// `ens` is live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_cq_exact(ens: *const QscEnsemble, theta: usize, out: *mut f64) -> QscStatus {
    guard(|| put(out, cqcover::exact_expectation(&get(ens, "ens")?.0, theta)?, "out"))
}

/// Monte Carlo decoupling estimate for `ρ_AE` on `d_a ⊗ d_e`.
///
/// # Safety
/// Handles are live; `mean`, `stderr` and `bound` are writable.
#[no_mangle]
pub unsafe extern "C" fn qsc_decouple_mc(
    rho_ae: *const QscState,
    d_a: usize,
    d_e: usize,
    channel: *const QscChannel,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
    bound: *mut f64,
) -> QscStatus {
    guard(|| {
        let bp = BipartiteState::new(get(rho_ae, "rho_ae")?.0.clone(), vec![d_a, d_e])?;
        let inst = decouple::DecoupleInstance::new(bp, get(channel, "channel")?.0.clone())?;
        let e = decouple::mc_expectation(&inst, trials, seed)?;
        put(mean, e.estimate.mean, "mean")?;
        put(stderr, e.estimate.stderr, "stderr")?;
        put(bound, e.bound, "bound")
    })
}
