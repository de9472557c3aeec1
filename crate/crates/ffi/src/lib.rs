//! C ABI over `metaplectic`.
//!
//! Objects are opaque handles created by `mp_*_new`-style constructors and
//! released with the matching `mp_*_free`. Every fallible call returns an
//! [`MpStatus`]; the message of the last failure on the calling thread is
//! available from [`mp_last_error_message`]. Complex samples cross the
//! boundary as separate real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use metaplectic::config_ops::{qfio_apply, QfioMethod};
use metaplectic::feichtinger::s0_norm;
use metaplectic::grid::{hermite, C};
use metaplectic::indices::{conley_zehnder, ConleyZehnderIndex, MaslovIndex};
use metaplectic::linalg;
use metaplectic::phase_space::{cross_wigner, cross_wigner_on, metaplectic_phase_apply, moyal_inner, PhaseForm, PhaseFunction, PhaseGrid};
use metaplectic::symplectic::{cayley, free_from_generating, GeneratingFunction, SymplecticMatrix};
use metaplectic::{Error, Grid, SampledFunction, Tolerances, Truncation};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotSymplectic = 4,
    Singular = 5,
    Degenerate = 6,
    OutOfDomain = 7,
    GridMismatch = 8,
    Truncation = 9,
    Unsupported = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpMethod {
    Factored = 0,
    Quadrature = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpLattice {
    Dual = 0,
    Square = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpPhaseForm {
    S1 = 0,
    Alfa1 = 1,
    Alfa2 = 2,
}

pub struct MpGenerating(GeneratingFunction);
pub struct MpSymplectic(SymplecticMatrix);
pub struct MpSampled(SampledFunction);
pub struct MpPhase(PhaseFunction);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> MpStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::OddDimension(_) => MpStatus::DimensionMismatch,
        Error::NotSymplectic { .. } | Error::NotFree { .. } => MpStatus::NotSymplectic,
        Error::SingularL { .. } | Error::SingularSminusI { .. } | Error::SingularMminusHalfJ { .. } | Error::SingularAngle(_) => {
            MpStatus::Singular
        }
        Error::DegenerateMatrix { .. } | Error::DegeneratePhase { .. } | Error::FactorizationFailed { .. } => {
            MpStatus::Degenerate
        }
        Error::OutOfDomain(_) => MpStatus::OutOfDomain,
        Error::GridMismatch(_) | Error::InvalidGrid(_) => MpStatus::GridMismatch,
        Error::TruncationError { .. } => MpStatus::Truncation,
        Error::Unsupported(_) => MpStatus::Unsupported,
        _ => MpStatus::InvalidArgument,
    }
}

enum Fail {
    Null,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MpStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (MpStatus::Ok, String::new()),
        Ok(Err(Fail::Null)) => (MpStatus::NullPointer, "null pointer argument".to_string()),
        Ok(Err(Fail::Lib(e))) => (status_of(&e), e.to_string()),
        Err(_) => (MpStatus::Panic, "internal panic".to_string()),
    };
    LAST_ERROR.with(|l| *l.borrow_mut() = msg);
    status
}

unsafe fn href<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    *out = v;
    Ok(())
}

fn require_len(len: usize, expected: usize) -> Result<(), Fail> {
    if len == expected {
        Ok(())
    } else {
        Err(Fail::Lib(Error::DimensionMismatch { expected, found: len }))
    }
}

fn split_values(values: &[C], re: &mut [f64], im: &mut [f64]) {
    for ((v, r), i) in values.iter().zip(re.iter_mut()).zip(im.iter_mut()) {
        *r = v.re;
        *i = v.im;
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|l| {
        let msg = l.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `W = (P, L, Q)`, each an `n×n` row-major array.
///
/// # Safety
/// `p`, `l`, `q` must each hold `n*n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_generating_new(
    n: usize,
    p: *const f64,
    l: *const f64,
    q: *const f64,
    out: *mut *mut MpGenerating,
) -> MpStatus {
    guard(|| {
        let t = Tolerances::default();
        let w = GeneratingFunction::new(
            linalg::from_row_major(n, n, slice(p, n * n)?)?,
            linalg::from_row_major(n, n, slice(l, n * n)?)?,
            linalg::from_row_major(n, n, slice(q, n * n)?)?,
            &t,
        )?;
        put(out, MpGenerating(w))
    })
}

/// Generating function of the rotation by `alpha` (`n = 1`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_generating_rotation(alpha: f64, out: *mut *mut MpGenerating) -> MpStatus {
    guard(|| put(out, MpGenerating(GeneratingFunction::rotation(alpha)?)))
}

/// # Safety
/// `w` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_generating_free(w: *mut MpGenerating) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// `2n×2n` row-major symplectic matrix.
///
/// # Safety
/// `entries` must hold `4n²` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_symplectic_new(n: usize, entries: *const f64, out: *mut *mut MpSymplectic) -> MpStatus {
    guard(|| {
        let d = 2 * n;
        let m = linalg::from_row_major(d, d, slice(entries, d * d)?)?;
        put(out, MpSymplectic(SymplecticMatrix::new(m, &Tolerances::default())?))
    })
}

/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_symplectic_from_generating(w: *const MpGenerating, out: *mut *mut MpSymplectic) -> MpStatus {
    guard(|| put(out, MpSymplectic(free_from_generating(&href(w)?.0))))
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_symplectic_free(s: *mut MpSymplectic) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Half-dimension `n`; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_symplectic_n(s: *const MpSymplectic) -> usize {
    s.as_ref().map_or(0, |s| s.0.n())
}

/// # Safety
/// `s` must be a live handle; `out` must hold `len = 4n²` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_symplectic_entries(s: *const MpSymplectic, out: *mut f64, len: usize) -> MpStatus {
    guard(|| {
        let m = linalg::to_row_major(href(s)?.0.matrix());
        require_len(len, m.len())?;
        slice_mut(out, len)?.copy_from_slice(&m);
        Ok(())
    })
}

/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_symplectic_det_minus_identity(s: *const MpSymplectic, out: *mut f64) -> MpStatus {
    guard(|| put_value(out, href(s)?.0.det_minus_identity()))
}

/// Cayley transform `M_S`, written row-major into `out` (`len = 4n²`).
///
/// # Safety
/// `s` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_cayley(s: *const MpSymplectic, out: *mut f64, len: usize) -> MpStatus {
    guard(|| {
        let m = cayley(&href(s)?.0, &Tolerances::default())?;
        let v = linalg::to_row_major(m.matrix());
        require_len(len, v.len())?;
        slice_mut(out, len)?.copy_from_slice(&v);
        Ok(())
    })
}

/// Conley–Zehnder index of `Ŝ_{W,m}`.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_conley_zehnder(w: *const MpGenerating, m: i64, out: *mut u8) -> MpStatus {
    guard(|| {
        let nu = conley_zehnder(&href(w)?.0, MaslovIndex::new(m), &Tolerances::default())?;
        put_value(out, nu.value())
    })
}

/// Hermite function of order `order` along every axis.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_sampled_hermite(
    n: usize,
    half_width: f64,
    points: usize,
    hbar: f64,
    order: usize,
    out: *mut *mut MpSampled,
) -> MpStatus {
    guard(|| {
        let grid = Grid::new(n, half_width, points)?;
        put(out, MpSampled(hermite(grid, hbar, &vec![order; n])?))
    })
}

/// Samples in lattice order (`len = points^n`).
///
/// # Safety
/// `re`, `im` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_sampled_from_values(
    n: usize,
    half_width: f64,
    points: usize,
    hbar: f64,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut MpSampled,
) -> MpStatus {
    guard(|| {
        let grid = Grid::new(n, half_width, points)?;
        let values = slice(re, len)?
            .iter()
            .zip(slice(im, len)?)
            .map(|(r, i)| C::new(*r, *i))
            .collect();
        put(out, MpSampled(SampledFunction::new(grid, values, hbar)?))
    })
}

/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_sampled_free(f: *mut MpSampled) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_sampled_len(f: *const MpSampled) -> usize {
    f.as_ref().map_or(0, |f| f.0.values().len())
}

/// # Safety
/// `f` must be a live handle; `re`, `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_sampled_values(f: *const MpSampled, re: *mut f64, im: *mut f64, len: usize) -> MpStatus {
    guard(|| {
        let v = href(f)?.0.values();
        require_len(len, v.len())?;
        split_values(v, slice_mut(re, len)?, slice_mut(im, len)?);
        Ok(())
    })
}

/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_sampled_norm(f: *const MpSampled, out: *mut f64) -> MpStatus {
    guard(|| put_value(out, href(f)?.0.norm()))
}

/// `Ŝ_{W,m} f`.
///
/// # Safety
/// `w`, `f` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_qfio_apply(
    w: *const MpGenerating,
    m: i64,
    f: *const MpSampled,
    method: MpMethod,
    out: *mut *mut MpSampled,
) -> MpStatus {
    guard(|| {
        let method = match method {
            MpMethod::Factored => QfioMethod::Factored,
            MpMethod::Quadrature => QfioMethod::Quadrature,
        };
        let g = qfio_apply(&href(w)?.0, MaslovIndex::new(m), &href(f)?.0, method)?;
        put(out, MpSampled(g))
    })
}

/// Cross-Wigner transform `W(f, g)`.
///
/// # Safety
/// `f`, `g` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_cross_wigner(
    f: *const MpSampled,
    g: *const MpSampled,
    lattice: MpLattice,
    out: *mut *mut MpPhase,
) -> MpStatus {
    guard(|| {
        let (f, g) = (&href(f)?.0, &href(g)?.0);
        let w = match lattice {
            MpLattice::Dual => cross_wigner(f, g)?,
            MpLattice::Square => cross_wigner_on(f, g, &PhaseGrid::square(f.grid()))?,
        };
        put(out, MpPhase(w))
    })
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_phase_free(p: *mut MpPhase) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of phase-space samples; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mp_phase_len(p: *const MpPhase) -> usize {
    p.as_ref().map_or(0, |p| p.0.values().len())
}

/// # Safety
/// `p` must be a live handle; `re`, `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_phase_values(p: *const MpPhase, re: *mut f64, im: *mut f64, len: usize) -> MpStatus {
    guard(|| {
        let v = href(p)?.0.values();
        require_len(len, v.len())?;
        split_values(v, slice_mut(re, len)?, slice_mut(im, len)?);
        Ok(())
    })
}

/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_phase_norm(p: *const MpPhase, out: *mut f64) -> MpStatus {
    guard(|| put_value(out, href(p)?.0.norm()))
}

/// `S̃F` for the Conley–Zehnder index `nu`, default truncation.
///
/// # Safety
/// `s`, `big_f` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_phase_apply(
    s: *const MpSymplectic,
    nu: i64,
    big_f: *const MpPhase,
    form: MpPhaseForm,
    out: *mut *mut MpPhase,
) -> MpStatus {
    guard(|| {
        let form = match form {
            MpPhaseForm::S1 => PhaseForm::S1,
            MpPhaseForm::Alfa1 => PhaseForm::Alfa1,
            MpPhaseForm::Alfa2 => PhaseForm::Alfa2,
        };
        let g = metaplectic_phase_apply(
            &href(s)?.0,
            ConleyZehnderIndex::new(nu),
            &href(big_f)?.0,
            form,
            &Truncation::default(),
            &Tolerances::default(),
        )?;
        put(out, MpPhase(g))
    })
}

/// Moyal inner product `(F|G)`.
///
/// # Safety
/// `a`, `b` must be live handles; `re`, `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_moyal_inner(a: *const MpPhase, b: *const MpPhase, re: *mut f64, im: *mut f64) -> MpStatus {
    guard(|| {
        let v = moyal_inner(&href(a)?.0, &href(b)?.0)?;
        put_value(re, v.re)?;
        put_value(im, v.im)
    })
}

/// `‖W(ψ, φ)‖_{L¹}` on the square phase lattice.
///
/// # Safety
/// `psi`, `phi` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_s0_norm(psi: *const MpSampled, phi: *const MpSampled, out: *mut f64) -> MpStatus {
    guard(|| {
        let r = s0_norm(&href(psi)?.0, &href(phi)?.0)?;
        put_value(out, r.norm_value)
    })
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn mp_status_name(status: MpStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MpStatus::Ok => b"ok\0",
        MpStatus::NullPointer => b"null pointer\0",
        MpStatus::InvalidArgument => b"invalid argument\0",
        MpStatus::DimensionMismatch => b"dimension mismatch\0",
        MpStatus::NotSymplectic => b"not symplectic\0",
        MpStatus::Singular => b"singular\0",
        MpStatus::Degenerate => b"degenerate\0",
        MpStatus::OutOfDomain => b"out of domain\0",
        MpStatus::GridMismatch => b"grid mismatch\0",
        MpStatus::Truncation => b"truncation\0",
        MpStatus::Unsupported => b"unsupported\0",
        MpStatus::Panic => b"panic\0",
    };
    s.as_ptr() as *const c_char
}
