//! C ABI over the toolkit: scalar special functions, the analytic
//! Gaussian-symbol channel, discrete (reverse) waterfilling behind opaque
//! handles, and the time-frequency waterfilling integrals for the Gaussian
//! symbol family.
//!
//! Every function returns a [`TfwfStatus`]; results travel through out
//! pointers. Handles returned by `*_new` functions must be released with the
//! matching `*_free`. All entry points catch panics and report
//! `TFWF_RUNTIME_ERROR` instead of unwinding across the boundary.

use std::panic::{catch_unwind, AssertUnwindSafe};

use tfwf_core::error::Error;
use tfwf_core::heat;
use tfwf_core::special::{lambert_w0, lambert_wm1, HermiteBasis};
use tfwf_core::waterfill::{
    reverse_waterfill_discrete, tf_capacity, tf_rate, waterfill_discrete, ReverseWaterfillResult,
    WaterfillResult,
};
use tfwf_core::weyl::WeylSymbol;

/// Status code of every C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfwfStatus {
    TfwfOk = 0,
    TfwfNullPointer = 1,
    TfwfInvalidArgument = 2,
    TfwfDomainError = 3,
    TfwfRuntimeError = 4,
}

fn status_of(err: &Error) -> TfwfStatus {
    match err {
        Error::LambertDomain { .. } => TfwfStatus::TfwfDomainError,
        Error::InvalidParameter(_)
        | Error::OrderOutOfRange { .. }
        | Error::RateExceedsCapacity { .. }
        | Error::CodebookTooLarge { .. } => TfwfStatus::TfwfInvalidArgument,
        _ => TfwfStatus::TfwfRuntimeError,
    }
}

/// Runs a fallible scalar computation and stores its result through `out`.
fn scalar_call<F>(out: *mut f64, f: F) -> TfwfStatus
where
    F: FnOnce() -> Result<f64, Error> + std::panic::UnwindSafe,
{
    if out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    match catch_unwind(f) {
        Ok(Ok(v)) => {
            unsafe { *out = v };
            TfwfStatus::TfwfOk
        }
        Ok(Err(err)) => status_of(&err),
        Err(_) => TfwfStatus::TfwfRuntimeError,
    }
}

/// Principal Lambert branch: `out = W_0(x)` for `x >= -1/e`.
#[no_mangle]
pub extern "C" fn tfwf_lambert_w0(x: f64, out: *mut f64) -> TfwfStatus {
    scalar_call(out, || lambert_w0(x))
}

/// Lower Lambert branch: `out = W_{-1}(x)` for `x` in `[-1/e, 0)`.
#[no_mangle]
pub extern "C" fn tfwf_lambert_wm1(x: f64, out: *mut f64) -> TfwfStatus {
    scalar_call(out, || lambert_wm1(x))
}

/// Orthonormal dilated Hermite function of the given order at `t`.
#[no_mangle]
pub extern "C" fn tfwf_hermite_eval(gamma: f64, order: u32, t: f64, out: *mut f64) -> TfwfStatus {
    scalar_call(out, || {
        HermiteBasis::new(gamma, order as usize)?.eval(order as usize, t)
    })
}

/// Squared singular value `lambda_k` of the Gaussian-symbol channel at
/// spreading factor `r`.
#[no_mangle]
pub extern "C" fn tfwf_heat_eigenvalue(r: f64, k: u32, out: *mut f64) -> TfwfStatus {
    scalar_call(out, || {
        Ok(heat::HeatChannelModel::new(1.0, r)?.eigenvalue(k as usize))
    })
}

/// Closed-form channel capacity in nats per transmission.
#[no_mangle]
pub extern "C" fn tfwf_heat_capacity_nats(snr: f64, r: f64, out: *mut f64) -> TfwfStatus {
    scalar_call(out, || Ok(heat::closed_form_capacity(snr, r)?.nats))
}

/// Closed-form rate-distortion value in nats per realization.
#[no_mangle]
pub extern "C" fn tfwf_heat_rate_nats(sdr: f64, r: f64, out: *mut f64) -> TfwfStatus {
    scalar_call(out, || Ok(heat::closed_form_rate(sdr, r)?.nats))
}

/// Ellipse-of-concentration semi-axes: approximate `(a, b)` and exact
/// `(a_x, b_x)`.
#[no_mangle]
pub extern "C" fn tfwf_heat_eoc(
    gamma: f64,
    r: f64,
    a: *mut f64,
    b: *mut f64,
    a_exact: *mut f64,
    b_exact: *mut f64,
) -> TfwfStatus {
    if a.is_null() || b.is_null() || a_exact.is_null() || b_exact.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    match catch_unwind(|| heat::eoc(gamma, r)) {
        Ok(Ok(e)) => {
            unsafe {
                *a = e.a_approx;
                *b = e.b_approx;
                *a_exact = e.a_exact;
                *b_exact = e.b_exact;
            }
            TfwfStatus::TfwfOk
        }
        Ok(Err(err)) => status_of(&err),
        Err(_) => TfwfStatus::TfwfRuntimeError,
    }
}

/// Opaque waterfilling allocation.
pub struct TfwfWaterfill(WaterfillResult);

/// Waterfilling on ascending noise variances; returns an owned handle or
/// null (with `status` set).
///
/// # Safety
/// `noise_vars` must point to `len` readable doubles; `status` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfwf_waterfill_new(
    noise_vars: *const f64,
    len: usize,
    s_total: f64,
    status: *mut TfwfStatus,
) -> *mut TfwfWaterfill {
    if status.is_null() {
        return std::ptr::null_mut();
    }
    if noise_vars.is_null() && len > 0 {
        *status = TfwfStatus::TfwfNullPointer;
        return std::ptr::null_mut();
    }
    let vars = std::slice::from_raw_parts(noise_vars, len);
    match catch_unwind(AssertUnwindSafe(|| waterfill_discrete(vars, s_total))) {
        Ok(Ok(res)) => {
            *status = TfwfStatus::TfwfOk;
            Box::into_raw(Box::new(TfwfWaterfill(res)))
        }
        Ok(Err(err)) => {
            *status = status_of(&err);
            std::ptr::null_mut()
        }
        Err(_) => {
            *status = TfwfStatus::TfwfRuntimeError;
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `handle` must come from [`tfwf_waterfill_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tfwf_waterfill_free(handle: *mut TfwfWaterfill) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_waterfill_water_level(
    handle: *const TfwfWaterfill,
    out: *mut f64,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    *out = (*handle).0.water_level;
    TfwfStatus::TfwfOk
}

/// Number of active subchannels.
///
/// # Safety
/// `handle` must be a live waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_waterfill_active(
    handle: *const TfwfWaterfill,
    out: *mut usize,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    *out = (*handle).0.active;
    TfwfStatus::TfwfOk
}

/// # Safety
/// `handle` must be a live waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_waterfill_capacity_nats(
    handle: *const TfwfWaterfill,
    out: *mut f64,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    *out = (*handle).0.capacity_nats;
    TfwfStatus::TfwfOk
}

/// Energy allocated to subchannel `k`.
///
/// # Safety
/// `handle` must be a live waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_waterfill_power(
    handle: *const TfwfWaterfill,
    k: usize,
    out: *mut f64,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    match (&(*handle).0.powers).get(k) {
        Some(&p) => {
            *out = p;
            TfwfStatus::TfwfOk
        }
        None => TfwfStatus::TfwfInvalidArgument,
    }
}

/// Opaque reverse-waterfilling allocation.
pub struct TfwfReverseWaterfill(ReverseWaterfillResult);

/// Reverse waterfilling on descending signal variances.
///
/// # Safety
/// `signal_vars` must point to `len` readable doubles; `status` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tfwf_reverse_waterfill_new(
    signal_vars: *const f64,
    len: usize,
    distortion: f64,
    status: *mut TfwfStatus,
) -> *mut TfwfReverseWaterfill {
    if status.is_null() {
        return std::ptr::null_mut();
    }
    if signal_vars.is_null() && len > 0 {
        *status = TfwfStatus::TfwfNullPointer;
        return std::ptr::null_mut();
    }
    let vars = std::slice::from_raw_parts(signal_vars, len);
    match catch_unwind(AssertUnwindSafe(|| {
        reverse_waterfill_discrete(vars, distortion)
    })) {
        Ok(Ok(res)) => {
            *status = TfwfStatus::TfwfOk;
            Box::into_raw(Box::new(TfwfReverseWaterfill(res)))
        }
        Ok(Err(err)) => {
            *status = status_of(&err);
            std::ptr::null_mut()
        }
        Err(_) => {
            *status = TfwfStatus::TfwfRuntimeError;
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `handle` must come from [`tfwf_reverse_waterfill_new`] and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn tfwf_reverse_waterfill_free(handle: *mut TfwfReverseWaterfill) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live reverse-waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_reverse_waterfill_water_table(
    handle: *const TfwfReverseWaterfill,
    out: *mut f64,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    *out = (*handle).0.water_table;
    TfwfStatus::TfwfOk
}

/// Number of components coded above the water table.
///
/// # Safety
/// `handle` must be a live reverse-waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_reverse_waterfill_preserved(
    handle: *const TfwfReverseWaterfill,
    out: *mut usize,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    *out = (*handle).0.preserved;
    TfwfStatus::TfwfOk
}

/// # Safety
/// `handle` must be a live reverse-waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_reverse_waterfill_rate_nats(
    handle: *const TfwfReverseWaterfill,
    out: *mut f64,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    *out = (*handle).0.rate_nats;
    TfwfStatus::TfwfOk
}

/// Distortion assigned to component `k`.
///
/// # Safety
/// `handle` must be a live reverse-waterfill handle.
#[no_mangle]
pub unsafe extern "C" fn tfwf_reverse_waterfill_distortion(
    handle: *const TfwfReverseWaterfill,
    k: usize,
    out: *mut f64,
) -> TfwfStatus {
    if handle.is_null() || out.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    match (&(*handle).0.distortions).get(k) {
        Some(&d) => {
            *out = d;
            TfwfStatus::TfwfOk
        }
        None => TfwfStatus::TfwfInvalidArgument,
    }
}

/// Capacity of the Gaussian-symbol channel by waterfilling in the
/// time-frequency plane. `out_level` may be null.
#[no_mangle]
pub extern "C" fn tfwf_tf_capacity_gaussian(
    gamma: f64,
    r: f64,
    s_total: f64,
    theta2: f64,
    out_nats: *mut f64,
    out_level: *mut f64,
) -> TfwfStatus {
    if out_nats.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    match catch_unwind(|| tf_capacity(&WeylSymbol::gaussian(gamma), r, s_total, theta2)) {
        Ok(Ok(res)) => {
            unsafe {
                *out_nats = res.value_nats;
                if !out_level.is_null() {
                    *out_level = res.level;
                }
            }
            TfwfStatus::TfwfOk
        }
        Ok(Err(err)) => status_of(&err),
        Err(_) => TfwfStatus::TfwfRuntimeError,
    }
}

/// Rate-distortion value of the matched nonstationary source by reverse
/// waterfilling in the time-frequency plane. `out_level` may be null.
#[no_mangle]
pub extern "C" fn tfwf_tf_rate_gaussian(
    gamma: f64,
    r: f64,
    distortion: f64,
    sigma2: f64,
    out_nats: *mut f64,
    out_level: *mut f64,
) -> TfwfStatus {
    if out_nats.is_null() {
        return TfwfStatus::TfwfNullPointer;
    }
    match catch_unwind(|| tf_rate(&WeylSymbol::gaussian(gamma), r, distortion, sigma2)) {
        Ok(Ok(res)) => {
            unsafe {
                *out_nats = res.value_nats;
                if !out_level.is_null() {
                    *out_level = res.level;
                }
            }
            TfwfStatus::TfwfOk
        }
        Ok(Err(err)) => status_of(&err),
        Err(_) => TfwfStatus::TfwfRuntimeError,
    }
}
