//! C ABI for the fairalloc solver.
//!
//! Instances and reports are opaque handles created and freed through this
//! interface. Every fallible function returns an [`FaStatus`]; on failure
//! [`fa_last_error_message`] describes the most recent error on the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairalloc::{
    allocation_min_value, brute_force_opt, parse_allocation, parse_instance, solve, solve_for_tau,
    verify_allocation, write_allocation, Allocation, Error, ExtendError, ExtendOptions, Instance,
    Params, Rational, SolveOptions,
};
use libc::{c_char, size_t};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaStatus {
    Ok = 0,
    /// The probe at the requested target aborted.
    Aborted = 1,
    NullArgument = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    InvalidInput = 5,
    InvalidParams = 6,
    SizeGuard = 7,
    /// Internal consistency check failed.
    Defect = 8,
    Panic = 9,
}

/// Solver options. Obtain defaults from [`fa_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FaOptions {
    /// Approximation factor `beta_num / beta_den`.
    pub beta_num: u64,
    pub beta_den: u64,
    /// Concurrent binary-search probes; 0 is treated as 1.
    pub jobs: u32,
    /// Run the invariant checks at every iterative-step boundary.
    pub check_invariants: bool,
}

/// Opaque instance handle.
pub struct FaInstance(Instance);

/// Opaque result of a solve.
pub struct FaReport {
    allocation: Allocation,
    tau_star: u64,
    guaranteed: Rational,
    min_value: u64,
    probes: usize,
    invariant_failures: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> FaStatus {
    match e {
        Error::Parse { .. } => FaStatus::ParseError,
        Error::InvalidAllocation(_) | Error::InvalidInput(_) | Error::InfeasibleBase(_) => {
            FaStatus::InvalidInput
        }
        Error::InvalidParams(_) => FaStatus::InvalidParams,
        Error::SizeGuard(_) => FaStatus::SizeGuard,
        Error::StaleState(_) | Error::Defect(_) => FaStatus::Defect,
    }
}

fn fail(e: Error) -> FaStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn guarded(f: impl FnOnce() -> FaStatus) -> FaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside fairalloc");
            FaStatus::Panic
        }
    }
}

unsafe fn text_arg<'a>(p: *const c_char) -> Result<&'a str, FaStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(FaStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        FaStatus::InvalidUtf8
    })
}

fn params_from(opts: Option<&FaOptions>) -> Result<(Params, usize, bool), FaStatus> {
    let Some(o) = opts else {
        return Ok((Params::default(), 1, false));
    };
    if o.beta_den == 0 {
        set_error("beta denominator is zero");
        return Err(FaStatus::InvalidParams);
    }
    let params = Params {
        beta: Rational::new(o.beta_num as i128, o.beta_den as i128),
        ..Params::default()
    };
    Ok((params, o.jobs.max(1) as usize, o.check_invariants))
}

/// Default options: beta = 13, one job, no invariant checks.
#[no_mangle]
pub extern "C" fn fa_options_default() -> FaOptions {
    FaOptions {
        beta_num: 13,
        beta_den: 1,
        jobs: 1,
        check_invariants: false,
    }
}

/// Message describing the last error on this thread. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses an instance in the text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_parse(
    text: *const c_char,
    out: *mut *mut FaInstance,
) -> FaStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return FaStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let text = match text_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_instance(text) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(FaInstance(inst)));
                FaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `inst` must be null or a handle from [`fa_instance_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_free(inst: *mut FaInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_num_players(inst: *const FaInstance) -> size_t {
    inst.as_ref().map_or(0, |i| i.0.num_players())
}

/// # Safety
/// `inst` must be a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn fa_instance_num_resources(inst: *const FaInstance) -> size_t {
    inst.as_ref().map_or(0, |i| i.0.num_resources())
}

fn make_report(
    inst: &Instance,
    allocation: Allocation,
    tau_star: u64,
    guaranteed: Rational,
    probes: usize,
    invariant_failures: usize,
) -> Result<FaReport, Error> {
    let min_value = allocation_min_value(inst, &allocation)?;
    Ok(FaReport {
        allocation,
        tau_star,
        guaranteed,
        min_value,
        probes,
        invariant_failures,
    })
}

/// Binary search over the target value. `opts` may be null for defaults.
///
/// # Safety
/// `inst` must be a live instance handle, `opts` null or valid, and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_solve(
    inst: *const FaInstance,
    opts: *const FaOptions,
    out: *mut *mut FaReport,
) -> FaStatus {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            set_error("null argument");
            return FaStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let inst = &(*inst).0;
        let (params, jobs, check_invariants) = match params_from(opts.as_ref()) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let so = SolveOptions {
            params,
            tau_hint: None,
            jobs,
            check_invariants,
        };
        let res = solve(inst, &so, None).and_then(|r| {
            make_report(
                inst,
                r.allocation,
                r.tau_star,
                r.guaranteed,
                r.probes.len(),
                r.invariant_failures.len(),
            )
        });
        match res {
            Ok(r) => {
                *out = Box::into_raw(Box::new(r));
                FaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Single probe at target `tau`. Returns [`FaStatus::Aborted`] when the
/// probe aborts; `*out` is then null.
///
/// # Safety
/// As for [`fa_solve`].
#[no_mangle]
pub unsafe extern "C" fn fa_solve_for_tau(
    inst: *const FaInstance,
    tau: u64,
    opts: *const FaOptions,
    out: *mut *mut FaReport,
) -> FaStatus {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            set_error("null argument");
            return FaStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let inst = &(*inst).0;
        let (params, _, check_invariants) = match params_from(opts.as_ref()) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let ext = ExtendOptions { check_invariants };
        match solve_for_tau(inst, tau, &params, ext, None) {
            Ok(s) => {
                let guaranteed = Rational::from_integer(tau as i128) / params.beta;
                match make_report(
                    inst,
                    s.allocation,
                    tau,
                    guaranteed,
                    1,
                    s.invariant_failures.len(),
                ) {
                    Ok(r) => {
                        *out = Box::into_raw(Box::new(r));
                        FaStatus::Ok
                    }
                    Err(e) => fail(e),
                }
            }
            Err(e @ ExtendError::Abort { .. }) => {
                set_error(e.to_string());
                FaStatus::Aborted
            }
            Err(ExtendError::Invalid(e)) => fail(e),
            Err(ExtendError::Defect(msg)) => fail(Error::Defect(msg)),
        }
    })
}

/// # Safety
/// `report` must be null or a handle returned by a solve call, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_report_free(report: *mut FaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Largest target value with a successful probe.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_tau_star(report: *const FaReport) -> u64 {
    report.as_ref().map_or(0, |r| r.tau_star)
}

/// Certified bundle value `tau_star / beta` as a reduced fraction.
///
/// # Safety
/// `report` must be a live report handle; `num` and `den` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fa_report_guaranteed(
    report: *const FaReport,
    num: *mut u64,
    den: *mut u64,
) -> FaStatus {
    let (Some(r), false, false) = (report.as_ref(), num.is_null(), den.is_null()) else {
        set_error("null argument");
        return FaStatus::NullArgument;
    };
    *num = *r.guaranteed.numer() as u64;
    *den = *r.guaranteed.denom() as u64;
    FaStatus::Ok
}

/// Smallest bundle value in the allocation.
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_min_value(report: *const FaReport) -> u64 {
    report.as_ref().map_or(0, |r| r.min_value)
}

/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_num_probes(report: *const FaReport) -> size_t {
    report.as_ref().map_or(0, |r| r.probes)
}

/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_invariant_failures(report: *const FaReport) -> size_t {
    report.as_ref().map_or(0, |r| r.invariant_failures)
}

/// Number of resources assigned to `player` (0 for an unknown player).
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_bundle_len(report: *const FaReport, player: size_t) -> size_t {
    report
        .as_ref()
        .and_then(|r| r.allocation.bundles.get(player))
        .map_or(0, Vec::len)
}

/// Copies up to `cap` resource ids of `player`'s bundle into `buf` and
/// returns the full bundle length.
///
/// # Safety
/// `report` must be a live report handle and `buf` valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn fa_report_bundle(
    report: *const FaReport,
    player: size_t,
    buf: *mut size_t,
    cap: size_t,
) -> size_t {
    let Some(bundle) = report
        .as_ref()
        .and_then(|r| r.allocation.bundles.get(player))
    else {
        return 0;
    };
    if !buf.is_null() {
        let k = bundle.len().min(cap);
        ptr::copy_nonoverlapping(bundle.as_ptr(), buf, k);
    }
    bundle.len()
}

/// Allocation in the text format. Free the result with [`fa_string_free`].
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fa_report_allocation_text(report: *const FaReport) -> *mut c_char {
    report.as_ref().map_or(ptr::null_mut(), |r| {
        CString::new(write_allocation(&r.allocation)).map_or(ptr::null_mut(), CString::into_raw)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Checks an allocation (text format) against `num / den`. `*ok` is set to
/// whether every player reaches the threshold; structural problems with the
/// allocation also yield `false`.
///
/// # Safety
/// `inst` must be a live instance handle, `alloc_text` a NUL-terminated
/// string and `ok` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_verify(
    inst: *const FaInstance,
    alloc_text: *const c_char,
    num: u64,
    den: u64,
    ok: *mut bool,
) -> FaStatus {
    guarded(|| {
        if inst.is_null() || ok.is_null() {
            set_error("null argument");
            return FaStatus::NullArgument;
        }
        if den == 0 {
            set_error("threshold denominator is zero");
            return FaStatus::InvalidInput;
        }
        let inst = &(*inst).0;
        let text = match text_arg(alloc_text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let alloc = match parse_allocation(text, inst.num_players()) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        let threshold = Rational::new(num as i128, den as i128);
        match verify_allocation(inst, &alloc, threshold) {
            Ok(v) => *ok = v,
            Err(e) => {
                set_error(e.to_string());
                *ok = false;
            }
        }
        FaStatus::Ok
    })
}

/// Optimal value by exhaustive search; [`FaStatus::SizeGuard`] beyond 6
/// players or 14 resources.
///
/// # Safety
/// `inst` must be a live instance handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fa_brute_force_opt(inst: *const FaInstance, out: *mut u64) -> FaStatus {
    guarded(|| {
        if inst.is_null() || out.is_null() {
            set_error("null argument");
            return FaStatus::NullArgument;
        }
        match brute_force_opt(&(*inst).0) {
            Ok(v) => {
                *out = v;
                FaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
