//! C ABI over the `qvlc` library.
//!
//! Every function returns a [`QvlcStatus`]; results go through out-pointers.
//! On failure the message is retrievable with [`qvlc_last_error`] on the
//! same thread. Handles are opaque and must be released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use qvlc::codec::{outcome_stats, CodeParams, EvalOptions, VLCode};
use qvlc::info::{self, ExponentProblem, ProbVector, SpectrumFamily};
use qvlc::linalg::{self, ComplexMatrix, DensityMatrix, Source};
use qvlc::schur_weyl::block_prob_iid;
use qvlc::young::{ln_dim_su, ln_dim_sym, YoungIndex};
use qvlc::{bounds, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvlcStatus {
    Ok = 0,
    InvalidInput = 1,
    SizeMismatch = 2,
    BudgetExceeded = 3,
    NotPsd = 4,
    NotHermitian = 5,
    Numerical = 6,
    NullPointer = 7,
    Panic = 8,
}

/// A validated density matrix.
pub struct QvlcDensity(DensityMatrix);

/// A finite ensemble of density matrices.
pub struct QvlcSource(Source);

/// A universal variable-length code for fixed `(n, d, δ)`.
pub struct QvlcCode(VLCode);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    // interior NULs would truncate the message; replace them
    let clean = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(err: &Error) -> QvlcStatus {
    match err {
        Error::InvalidInput(_) => QvlcStatus::InvalidInput,
        Error::SizeMismatch { .. } => QvlcStatus::SizeMismatch,
        Error::BudgetExceeded { .. } => QvlcStatus::BudgetExceeded,
        Error::NotPsd(..) => QvlcStatus::NotPsd,
        Error::NotHermitian(..) => QvlcStatus::NotHermitian,
        Error::Numerical(_) => QvlcStatus::Numerical,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QvlcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            QvlcStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(&format!("null pointer: {name}"));
            QvlcStatus::NullPointer
        }
        Err(_) => {
            set_last_error("internal panic");
            QvlcStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or a valid, aligned pointer.
unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

/// # Safety
/// `p` must be null or a live handle.
unsafe fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qvlc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Natural logs of `dim 𝒰_λ` (for `SU(d)`) and `dim 𝒱_λ`.
///
/// # Safety
/// `parts` points to `len` values; the out-pointers are writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_ln_dims(
    parts: *const usize,
    len: usize,
    d: usize,
    ln_dim_u: *mut f64,
    ln_dim_v: *mut f64,
) -> QvlcStatus {
    guard(|| {
        let lambda = YoungIndex::new(slice(parts, len, "parts")?.to_vec())?.with_rows(d)?;
        let u = ln_dim_su(&lambda, d)?;
        *out(ln_dim_u, "ln_dim_u")? = u;
        *out(ln_dim_v, "ln_dim_v")? = ln_dim_sym(&lambda);
        Ok(())
    })
}

/// `Tr P_λ ρ^{⊗n}` for `ρ` with eigenvalues `spec[0..d]`, `n = Σ parts`.
///
/// # Safety
/// `parts` points to `len` values, `spec` to `d` values; `prob` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_block_prob_iid(
    parts: *const usize,
    len: usize,
    spec: *const f64,
    d: usize,
    prob: *mut f64,
) -> QvlcStatus {
    guard(|| {
        let spec = slice(spec, d, "spec")?;
        let lambda = YoungIndex::new(slice(parts, len, "parts")?.to_vec())?.with_rows(d)?;
        *out(prob, "prob")? = block_prob_iid(&lambda, spec)?;
        Ok(())
    })
}

/// Builds a density matrix from row-major real and imaginary parts.
/// `im` may be null for a real matrix.
///
/// # Safety
/// `re` (and `im` when non-null) point to `d*d` values; `density` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_density_new(
    d: usize,
    re: *const f64,
    im: *const f64,
    density: *mut *mut QvlcDensity,
) -> QvlcStatus {
    guard(|| {
        let slot = out(density, "density")?;
        *slot = ptr::null_mut();
        let len = d.checked_mul(d).ok_or(Error::BudgetExceeded { requested: usize::MAX, max: usize::MAX })?;
        let re = slice(re, len, "re")?;
        let im = if im.is_null() { None } else { Some(slice(im, len, "im")?) };
        let entries: Vec<Complex64> =
            (0..len).map(|i| Complex64::new(re[i], im.map_or(0.0, |v| v[i]))).collect();
        let m = ComplexMatrix::from_row_slice(d, d, &entries);
        *slot = Box::into_raw(Box::new(QvlcDensity(DensityMatrix::new(m)?)));
        Ok(())
    })
}

/// # Safety
/// `density` is null or a handle from [`qvlc_density_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qvlc_density_free(density: *mut QvlcDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// `F(ρ,σ) = Tr|√ρ√σ|`.
///
/// # Safety
/// Both handles are live; `fidelity` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_fidelity(
    rho: *const QvlcDensity,
    sigma: *const QvlcDensity,
    fidelity: *mut f64,
) -> QvlcStatus {
    guard(|| {
        let (rho, sigma) = (handle(rho, "rho")?, handle(sigma, "sigma")?);
        *out(fidelity, "fidelity")? = linalg::fidelity(&rho.0, &sigma.0)?;
        Ok(())
    })
}

/// A source of `count` atoms; the densities are copied.
///
/// # Safety
/// `weights` and `atoms` point to `count` values, each atom a live handle;
/// `source` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_source_new(
    weights: *const f64,
    atoms: *const *const QvlcDensity,
    count: usize,
    source: *mut *mut QvlcSource,
) -> QvlcStatus {
    guard(|| {
        let slot = out(source, "source")?;
        *slot = ptr::null_mut();
        let weights = slice(weights, count, "weights")?;
        let atoms = slice(atoms, count, "atoms")?;
        let mut list = Vec::with_capacity(count);
        for (&w, &a) in weights.iter().zip(atoms) {
            list.push((w, handle(a, "atom")?.0.clone()));
        }
        *slot = Box::into_raw(Box::new(QvlcSource(Source::new(list)?)));
        Ok(())
    })
}

/// Basis states `|i⟩` with weights `weights[0..d]`.
///
/// # Safety
/// `weights` points to `d` values; `source` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_source_classical(
    weights: *const f64,
    d: usize,
    source: *mut *mut QvlcSource,
) -> QvlcStatus {
    guard(|| {
        let slot = out(source, "source")?;
        *slot = ptr::null_mut();
        *slot = Box::into_raw(Box::new(QvlcSource(Source::classical(slice(weights, d, "weights")?)?)));
        Ok(())
    })
}

/// # Safety
/// `source` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qvlc_source_free(source: *mut QvlcSource) {
    if !source.is_null() {
        drop(Box::from_raw(source));
    }
}

/// Optimal overflow exponent over all spectra at `rate`.
///
/// # Safety
/// `spec` points to `d` values; `exponent` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_overflow_exponent(
    rate: f64,
    spec: *const f64,
    d: usize,
    exponent: *mut f64,
) -> QvlcStatus {
    guard(|| {
        let p = ProbVector::new(slice(spec, d, "spec")?.to_vec())?;
        *out(exponent, "exponent")? =
            info::theorem2_exponent(&ExponentProblem { rate, p, family: SpectrumFamily::All })?;
        Ok(())
    })
}

/// Finite-n upper bound on the average error of the `(n, d, δ)` code.
///
/// # Safety
/// `bound` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_error_bound(n: usize, d: usize, delta: f64, c3: f64, bound: *mut f64) -> QvlcStatus {
    guard(|| {
        *out(bound, "bound")? = bounds::bound_e1(n, d, delta, c3)?;
        Ok(())
    })
}

/// Finite-n lower bound on `−(1/n) ln P(overflow)`.
///
/// # Safety
/// `spec` points to `d` values; `bound` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_overflow_bound(
    n: usize,
    delta: f64,
    rate: f64,
    spec: *const f64,
    d: usize,
    bound: *mut f64,
) -> QvlcStatus {
    guard(|| {
        let p = ProbVector::new(slice(spec, d, "spec")?.to_vec())?;
        *out(bound, "bound")? = bounds::bound_e2(n, delta, rate, &p)?;
        Ok(())
    })
}

/// # Safety
/// `code` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_code_new(n: usize, d: usize, delta: f64, code: *mut *mut QvlcCode) -> QvlcStatus {
    guard(|| {
        let slot = out(code, "code")?;
        *slot = ptr::null_mut();
        *slot = Box::into_raw(Box::new(QvlcCode(VLCode::new(CodeParams::new(n, d, delta))?)));
        Ok(())
    })
}

/// # Safety
/// `code` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qvlc_code_free(code: *mut QvlcCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Number of outcomes `|Ω|`.
///
/// # Safety
/// `code` is live; `count` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_code_outcome_count(code: *const QvlcCode, count: *mut usize) -> QvlcStatus {
    guard(|| {
        *out(count, "count")? = handle(code, "code")?.0.alphabet_size();
        Ok(())
    })
}

/// `ln P(ℓ/n ≥ rate)` for an i.i.d. source with spectrum `spec`.
///
/// # Safety
/// `code` is live, `spec` points to `d` values; `ln_prob` is writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_code_ln_overflow(
    code: *const QvlcCode,
    spec: *const f64,
    d: usize,
    rate: f64,
    ln_prob: *mut f64,
) -> QvlcStatus {
    guard(|| {
        let code = handle(code, "code")?;
        let p = ProbVector::new(slice(spec, d, "spec")?.to_vec())?;
        *out(ln_prob, "ln_prob")? = code.0.ln_overflow_probability(&p, rate)?;
        Ok(())
    })
}

/// Average error of the code on `source`. Exact when the number of atom
/// compositions is small, else Monte Carlo with `samples` draws from
/// `seed`; `std_error` (nullable) receives the standard error, or 0 when
/// exact.
///
/// # Safety
/// Handles are live; `error` is writable; `std_error` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn qvlc_code_average_error(
    code: *const QvlcCode,
    source: *const QvlcSource,
    samples: usize,
    seed: u64,
    error: *mut f64,
    std_error: *mut f64,
) -> QvlcStatus {
    guard(|| {
        let (code, source) = (handle(code, "code")?, handle(source, "source")?);
        let opts = EvalOptions { samples, seed, ..EvalOptions::default() };
        let est = outcome_stats(&code.0, &source.0, &opts)?.error();
        *out(error, "error")? = est.value;
        if let Some(se) = std_error.as_mut() {
            *se = est.std_error.unwrap_or(0.0);
        }
        Ok(())
    })
}
