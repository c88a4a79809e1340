//! C ABI for `ncp-core`.
//!
//! Every fallible function returns an [`NcpStatus`]. On failure a message is
//! stored per thread and can be read with [`ncp_last_error_message`].
//! Objects are handed out as opaque pointers and must be released with the
//! matching `*_free` function. Output buffers are caller-allocated.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ncp::fock::{self, FockOperator, FockSpace};
use ncp::levy::{self, GeneratorTuple, TupleClass};
use ncp::moments::{self, CumulantSequence, Flavor, MomentSequence};
use ncp::{Error, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeLimit = 3,
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcpFlavor {
    Classical = 0,
    Free = 1,
    Boolean = 2,
}

impl From<NcpFlavor> for Flavor {
    fn from(f: NcpFlavor) -> Self {
        match f {
            NcpFlavor::Classical => Flavor::Classical,
            NcpFlavor::Free => Flavor::Free,
            NcpFlavor::Boolean => Flavor::Boolean,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcpTupleClass {
    Gaussian = 0,
    CompoundPoisson = 1,
    General = 2,
}

/// Truncated free Fock space.
pub struct NcpFockSpace(Arc<FockSpace>);

/// Operator on an [`NcpFockSpace`].
pub struct NcpFockOperator(FockOperator);

/// Generator tuple of an additive free Lévy process.
pub struct NcpTuple(GeneratorTuple);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(NcpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::SizeLimit { .. } => NcpStatus::SizeLimit,
            Error::RecursionDepth(_) => NcpStatus::Numerical,
            _ => NcpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NcpStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NcpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            NcpStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Complex vector from split real and imaginary parts; `im` may be null.
unsafe fn complex(re: *const f64, im: *const f64, len: usize) -> Result<Vec<C64>, Failure> {
    let re = input(re, len, "re")?;
    if im.is_null() {
        return Ok(re.iter().map(|&x| C64::new(x, 0.0)).collect());
    }
    let im = input(im, len, "im")?;
    Ok(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ncp_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version contains nul"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ncp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Writes `n` cumulants of the moments `m[0..n]` (`m_1..m_n`) to `out`.
#[no_mangle]
pub unsafe extern "C" fn ncp_moments_to_cumulants(
    flavor: NcpFlavor,
    m: *const f64,
    n: usize,
    out: *mut f64,
) -> NcpStatus {
    guard(|| {
        let seq = MomentSequence::new(input(m, n, "m")?.to_vec())?;
        let k = moments::moments_to_cumulants(&seq, flavor.into())?;
        output(out, n, "out")?.copy_from_slice(k.values());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_cumulants_to_moments(
    flavor: NcpFlavor,
    kappa: *const f64,
    n: usize,
    out: *mut f64,
) -> NcpStatus {
    guard(|| {
        let k = CumulantSequence::new(flavor.into(), input(kappa, n, "kappa")?.to_vec())?;
        let m = moments::cumulants_to_moments(&k)?;
        output(out, n, "out")?.copy_from_slice(m.values());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_convolve(
    flavor: NcpFlavor,
    m1: *const f64,
    m2: *const f64,
    n: usize,
    out: *mut f64,
) -> NcpStatus {
    guard(|| {
        let a = MomentSequence::new(input(m1, n, "m1")?.to_vec())?;
        let b = MomentSequence::new(input(m2, n, "m2")?.to_vec())?;
        let m = moments::convolve(&a, &b, flavor.into())?;
        output(out, n, "out")?.copy_from_slice(m.values());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_bercovici_pata(m: *const f64, n: usize, out: *mut f64) -> NcpStatus {
    guard(|| {
        let seq = MomentSequence::new(input(m, n, "m")?.to_vec())?;
        let free = moments::bercovici_pata(&seq)?;
        output(out, n, "out")?.copy_from_slice(free.values());
        Ok(())
    })
}

/// Space over `C^dim` truncated at `depth`, subject to the basis cap.
#[no_mangle]
pub unsafe extern "C" fn ncp_fock_space_new(dim: usize, depth: usize, out: *mut *mut NcpFockSpace) -> NcpStatus {
    guard(|| store(out, NcpFockSpace(FockSpace::bounded(dim, depth)?)))
}

#[no_mangle]
pub unsafe extern "C" fn ncp_fock_space_free(space: *mut NcpFockSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ncp_fock_space_total_dim(space: *const NcpFockSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.total_dim())
}

/// `a+(u)`; `u_im` may be null for a real vector of length `dim`.
#[no_mangle]
pub unsafe extern "C" fn ncp_fock_creation(
    space: *const NcpFockSpace,
    u_re: *const f64,
    u_im: *const f64,
    out: *mut *mut NcpFockOperator,
) -> NcpStatus {
    guard(|| {
        let s = &handle(space, "space")?.0;
        let u = complex(u_re, u_im, s.dim())?;
        store(out, NcpFockOperator(fock::creation(s, &u)?))
    })
}

/// `a-(v)`, conjugate-linear in `v`.
#[no_mangle]
pub unsafe extern "C" fn ncp_fock_annihilation(
    space: *const NcpFockSpace,
    v_re: *const f64,
    v_im: *const f64,
    out: *mut *mut NcpFockOperator,
) -> NcpStatus {
    guard(|| {
        let s = &handle(space, "space")?.0;
        let v = complex(v_re, v_im, s.dim())?;
        store(out, NcpFockOperator(fock::annihilation(s, &v)?))
    })
}

/// `Lambda(X)` for a row-major `dim x dim` matrix `X`.
#[no_mangle]
pub unsafe extern "C" fn ncp_fock_conservation(
    space: *const NcpFockSpace,
    x_re: *const f64,
    x_im: *const f64,
    out: *mut *mut NcpFockOperator,
) -> NcpStatus {
    guard(|| {
        let s = &handle(space, "space")?.0;
        let d = s.dim();
        let x = complex(x_re, x_im, d * d)?;
        let m = DMatrix::from_row_slice(d, d, &x);
        store(out, NcpFockOperator(fock::conservation(s, &m)?))
    })
}

/// `c Id`.
#[no_mangle]
pub unsafe extern "C" fn ncp_fock_scalar(
    space: *const NcpFockSpace,
    re: f64,
    im: f64,
    out: *mut *mut NcpFockOperator,
) -> NcpStatus {
    guard(|| {
        let s = &handle(space, "space")?.0;
        store(out, NcpFockOperator(FockOperator::scalar(s, C64::new(re, im))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_fock_sum(
    a: *const NcpFockOperator,
    b: *const NcpFockOperator,
    out: *mut *mut NcpFockOperator,
) -> NcpStatus {
    guard(|| {
        let sum = handle(a, "a")?.0.plus(&handle(b, "b")?.0)?;
        store(out, NcpFockOperator(sum))
    })
}

/// `a b`, with `b` applied first.
#[no_mangle]
pub unsafe extern "C" fn ncp_fock_product(
    a: *const NcpFockOperator,
    b: *const NcpFockOperator,
    out: *mut *mut NcpFockOperator,
) -> NcpStatus {
    guard(|| {
        let p = FockOperator::product(&[&handle(a, "a")?.0, &handle(b, "b")?.0])?;
        store(out, NcpFockOperator(p))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_fock_adjoint(a: *const NcpFockOperator, out: *mut *mut NcpFockOperator) -> NcpStatus {
    guard(|| store(out, NcpFockOperator(handle(a, "a")?.0.adjoint())))
}

#[no_mangle]
pub unsafe extern "C" fn ncp_fock_operator_free(op: *mut NcpFockOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// `<Omega, ops[0] ops[1] ... ops[n-1] Omega>`.
#[no_mangle]
pub unsafe extern "C" fn ncp_vacuum_expectation(
    ops: *const *const NcpFockOperator,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> NcpStatus {
    guard(|| {
        let handles = input(ops, n, "ops")?;
        let word = handles
            .iter()
            .map(|&p| handle(p, "ops[i]").map(|h| &h.0))
            .collect::<Result<Vec<_>, _>>()?;
        if out_re.is_null() || out_im.is_null() {
            return Err(null("out"));
        }
        let z = fock::vacuum_expectation(&word)?;
        *out_re = z.re;
        *out_im = z.im;
        Ok(())
    })
}

/// Tuple with row-major `d x d` matrix `t`; `v` may be null for `v = u`.
#[no_mangle]
pub unsafe extern "C" fn ncp_tuple_new(
    d: usize,
    t: *const f64,
    u: *const f64,
    v: *const f64,
    lambda: f64,
    out: *mut *mut NcpTuple,
) -> NcpStatus {
    guard(|| {
        let t = DMatrix::from_row_slice(d, d, input(t, d * d, "t")?);
        let u = DVector::from_column_slice(input(u, d, "u")?);
        let v = if v.is_null() {
            u.clone()
        } else {
            DVector::from_column_slice(input(v, d, "v")?)
        };
        store(out, NcpTuple(GeneratorTuple::new(t, u, v, lambda)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn ncp_tuple_free(tuple: *mut NcpTuple) {
    if !tuple.is_null() {
        drop(Box::from_raw(tuple));
    }
}

/// Writes the first `order` cumulants of the process at time `t`.
#[no_mangle]
pub unsafe extern "C" fn ncp_tuple_cumulants(
    tuple: *const NcpTuple,
    t: f64,
    flavor: NcpFlavor,
    order: usize,
    out: *mut f64,
) -> NcpStatus {
    guard(|| {
        let k = levy::tuple_cumulants(&handle(tuple, "tuple")?.0, t, flavor.into(), order)?;
        output(out, order, "out")?.copy_from_slice(k.values());
        Ok(())
    })
}

/// Classifies a symmetric tuple. For compound Poisson tuples, `omega`
/// (length `d`, may be null) receives a vector with `T omega = u`.
#[no_mangle]
pub unsafe extern "C" fn ncp_tuple_classify(
    tuple: *const NcpTuple,
    class: *mut NcpTupleClass,
    omega: *mut f64,
) -> NcpStatus {
    guard(|| {
        let tuple = &handle(tuple, "tuple")?.0;
        if class.is_null() {
            return Err(null("class"));
        }
        *class = match levy::classify(tuple)? {
            TupleClass::Gaussian => NcpTupleClass::Gaussian,
            TupleClass::CompoundPoisson { omega: w } => {
                if !omega.is_null() {
                    output(omega, tuple.dim(), "omega")?.copy_from_slice(w.as_slice());
                }
                NcpTupleClass::CompoundPoisson
            }
            TupleClass::General => NcpTupleClass::General,
        };
        Ok(())
    })
}

/// Moments `m_1..m_max_order` of the discretized free Azéma martingale at
/// time `t`.
#[no_mangle]
pub unsafe extern "C" fn ncp_azema_free(
    gamma_re: f64,
    gamma_im: f64,
    t: f64,
    steps: usize,
    depth: usize,
    max_order: usize,
    out: *mut f64,
) -> NcpStatus {
    guard(|| {
        let m = ncp::affine::azema_free(C64::new(gamma_re, gamma_im), t, steps, depth, max_order)?;
        output(out, max_order, "out")?.copy_from_slice(m.values());
        Ok(())
    })
}
