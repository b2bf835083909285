//! C interface to the exponential-sum laboratory.
//!
//! Shape of the API: constructors write an opaque handle through an out
//! pointer and return a status; every fallible call returns [`EslStatus`],
//! whose numeric values match the CLI's process exit codes (0 ok, 1
//! runtime failure, 2 invalid argument, 3 budget refusal). A per-thread
//! message slot, read through [`esl_last_error_message`], carries the
//! diagnostic for the most recent failure on the calling thread.
//!
//! Safety contract (also documented in `include/expsumlab.h`): pointers
//! must be valid for the stated lengths for the duration of the call; out
//! pointers must be writable. Null pointers are detected and reported as
//! `ESL_STATUS_INVALID` rather than dereferenced, but validity of non-null
//! pointers is the caller's obligation, so every pointer-taking entry
//! point is `unsafe`. No call unwinds across the boundary: a panic inside
//! the library is caught and reported as `ESL_STATUS_RUNTIME`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use expsumlab::arcs::classify_w;
use expsumlab::curve::Curve;
use expsumlab::expsum::{eval_curve_sum, Coords, IntervalZ, Point4};
use expsumlab::Error;

/// Status code of every fallible entry point; values match the CLI exit
/// codes so a C harness can forward them as a process status unchanged.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EslStatus {
    /// Success.
    Ok = 0,
    /// A computation failed at runtime (precision, degeneracy, panic).
    Runtime = 1,
    /// An argument violates a documented precondition.
    Invalid = 2,
    /// The call would exceed a configured budget.
    Resource = 3,
}

/// Opaque curve handle. Create with `esl_curve_new_*`, release with
/// `esl_curve_free`. Handles are immutable and safe to share across
/// threads for concurrent reads.
pub struct EslCurve(Curve);

/// Farey-arc classification of a quadratic coordinate, the C mirror of the
/// library's arc report.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EslArcClass {
    /// Minimal denominator q <= m with dist(q w, Z) <= 1/m.
    pub q: u64,
    /// Numerator in [1, q].
    pub b: u64,
    /// Circle distance |w - b/q|.
    pub phi: f64,
    /// 1 when phi <= 1/(q m) up to roundoff, else 0.
    pub major_arc: c_int,
    /// q^(-1/2) min(m, phi^(-1/2)): the square-root arc bound.
    pub bound: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("interior NUL removed");
    });
}

fn fail(status: EslStatus, msg: &str) -> EslStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> EslStatus {
    match e.exit_code() {
        2 => EslStatus::Invalid,
        3 => EslStatus::Resource,
        _ => EslStatus::Runtime,
    }
}

/// Run a fallible body without letting a panic cross the FFI boundary.
fn guarded(body: impl FnOnce() -> Result<(), (EslStatus, String)>) -> EslStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EslStatus::Ok,
        Ok(Err((status, msg))) => fail(status, &msg),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EslStatus::Runtime, &format!("internal panic: {msg}"))
        }
    }
}

fn lib_err(e: Error) -> (EslStatus, String) {
    (status_of(&e), e.to_string())
}

/// ABI revision of this header/library pair.
#[no_mangle]
pub extern "C" fn esl_abi_version() -> u32 {
    1
}

/// Diagnostic message for the most recent failure on the calling thread.
/// The pointer stays valid until the next failing call on this thread;
/// never free it. Returns an empty string when nothing failed yet.
#[no_mangle]
pub extern "C" fn esl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Create the cubic/quartic model curve.
///
/// # Safety
/// `out` must be null or a valid pointer to writable `EslCurve*` storage.
#[no_mangle]
pub unsafe extern "C" fn esl_curve_new_moment(out: *mut *mut EslCurve) -> EslStatus {
    if out.is_null() {
        return fail(EslStatus::Invalid, "out pointer is null");
    }
    guarded(|| {
        let handle = Box::into_raw(Box::new(EslCurve(Curve::moment())));
        unsafe { *out = handle };
        Ok(())
    })
}

/// Create the fractional-power curve (t^a, t^b) on t > 0.
///
/// # Safety
/// `out` must be null or a valid pointer to writable `EslCurve*` storage.
#[no_mangle]
pub unsafe extern "C" fn esl_curve_new_power(
    a: f64,
    b: f64,
    out: *mut *mut EslCurve,
) -> EslStatus {
    if out.is_null() {
        return fail(EslStatus::Invalid, "out pointer is null");
    }
    if !a.is_finite() || !b.is_finite() {
        return fail(EslStatus::Invalid, "power curve exponents must be finite");
    }
    guarded(|| {
        let handle = Box::into_raw(Box::new(EslCurve(Curve::power(a, b))));
        unsafe { *out = handle };
        Ok(())
    })
}

/// Release a curve handle. Null is tolerated.
///
/// # Safety
/// `curve` must be null or a handle from a constructor that has not been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn esl_curve_free(curve: *mut EslCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// Measure the window condition constants on a grid of `grid` points.
/// Writes A1, A2, A3, A4 into `out_constants[0..4]`.
///
/// # Safety
/// `curve` must be null or a live handle; `out_constants` must be null or
/// valid writable storage for 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn esl_curve_verify_conditions(
    curve: *const EslCurve,
    grid: usize,
    out_constants: *mut f64,
) -> EslStatus {
    if curve.is_null() || out_constants.is_null() {
        return fail(EslStatus::Invalid, "curve and out pointers must be non-null");
    }
    guarded(|| {
        let curve = unsafe { &(*curve).0 };
        let rep = curve.verify_conditions(grid).map_err(lib_err)?;
        let out = unsafe { std::slice::from_raw_parts_mut(out_constants, 4) };
        out.copy_from_slice(&[rep.a1, rep.a2, rep.a3, rep.a4]);
        Ok(())
    })
}

/// Evaluate the derivative ladder phi_k^(order) at t; k is 3 or 4 and
/// order at most 4.
///
/// # Safety
/// `curve` must be null or a live handle; `out_value` must be null or a
/// valid pointer to a writable double.
#[no_mangle]
pub unsafe extern "C" fn esl_curve_eval_phi(
    curve: *const EslCurve,
    k: u8,
    order: u8,
    t: f64,
    out_value: *mut f64,
) -> EslStatus {
    if curve.is_null() || out_value.is_null() {
        return fail(EslStatus::Invalid, "curve and out pointers must be non-null");
    }
    guarded(|| {
        let curve = unsafe { &(*curve).0 };
        let v = curve.eval_phi(k, order, t).map_err(lib_err)?;
        unsafe { *out_value = v };
        Ok(())
    })
}

/// Evaluate the curve exponential sum over the integer interval [lo, hi]
/// at scale n and point x[0..4]. `renormalized` selects the coordinate
/// convention: 0 evaluates at x as given, 1 applies the renormalized
/// scaling (x2 divided by n, window coordinates multiplied by n). The
/// complex value is written to (out_re, out_im).
///
/// # Safety
/// `curve` must be null or a live handle; `x` must be null or valid
/// readable storage for 4 doubles; `out_re` and `out_im` must each be
/// null or a valid pointer to a writable double.
#[no_mangle]
pub unsafe extern "C" fn esl_curve_eval_sum(
    curve: *const EslCurve,
    n: u64,
    lo: i64,
    hi: i64,
    x: *const f64,
    renormalized: c_int,
    out_re: *mut f64,
    out_im: *mut f64,
) -> EslStatus {
    if curve.is_null() || x.is_null() || out_re.is_null() || out_im.is_null() {
        return fail(EslStatus::Invalid, "curve, x and out pointers must be non-null");
    }
    guarded(|| {
        let curve = unsafe { &(*curve).0 };
        let x = unsafe { std::slice::from_raw_parts(x, 4) };
        let iv = IntervalZ::new(lo, hi).map_err(lib_err)?;
        let coords = if renormalized == 0 {
            Coords::Conjecture
        } else {
            Coords::Renormalized
        };
        let v = eval_curve_sum(curve, n, iv, Point4::new(x[0], x[1], x[2], x[3]), coords)
            .map_err(lib_err)?;
        unsafe {
            *out_re = v.re;
            *out_im = v.im;
        }
        Ok(())
    })
}

/// Classify a quadratic coordinate w into its minimal Farey arc at scale m.
///
/// # Safety
/// `out` must be null or a valid pointer to a writable `EslArcClass`.
#[no_mangle]
pub unsafe extern "C" fn esl_classify_w(w: f64, m: u64, out: *mut EslArcClass) -> EslStatus {
    if out.is_null() {
        return fail(EslStatus::Invalid, "out pointer is null");
    }
    if !w.is_finite() || m == 0 {
        return fail(EslStatus::Invalid, "classification needs finite w and m >= 1");
    }
    guarded(|| {
        let class = classify_w(w, m);
        unsafe {
            *out = EslArcClass {
                q: class.q,
                b: class.b,
                phi: class.phi,
                major_arc: c_int::from(class.major_arc),
                bound: class.bound,
            };
        }
        Ok(())
    })
}
