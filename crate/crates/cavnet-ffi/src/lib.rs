//! C ABI for the cavnet simulator.
//!
//! Opaque handles wrap payloads and protocol results; every fallible call
//! returns a [`CavnetStatus`] and writes its output through pointers. The
//! thread-local message behind [`cavnet_last_error_message`] describes the
//! most recent failure on the calling thread. The header `include/cavnet.h`
//! is generated by cbindgen at build time.

use cavnet::network::GateSchedule;
use cavnet::protocols::{
    self, multi_hop_transfer, Correction, Payload, ProtocolResult, TeleportResult,
};
use cavnet::{network, StateVector};
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

/// ABI revision; bump on breaking header changes.
pub const CAVNET_ABI_VERSION: u32 = 1;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Numerics = 4,
    Utf8 = 5,
}

/// Correction tag of a teleportation branch.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavnetCorrection {
    Identity = 0,
    PhaseFlip = 1,
    Failure = 2,
}

/// One teleportation measurement branch.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CavnetTeleportBranch {
    pub atom1: u8,
    pub atom2: u8,
    pub probability: f64,
    pub correction: CavnetCorrection,
    /// Valid only when `has_fidelity` is true.
    pub corrected_fidelity: f64,
    pub has_fidelity: bool,
}

/// Opaque payload handle.
pub struct CavnetPayload {
    inner: Payload,
}

/// Opaque transfer-result handle.
pub struct CavnetResult {
    inner: ProtocolResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = sanitized);
}

fn fail(status: CavnetStatus, message: &str) -> CavnetStatus {
    set_error(message);
    status
}

/// Message for the most recent error on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cavnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn cavnet_abi_version() -> u32 {
    CAVNET_ABI_VERSION
}

/// Build a payload from split real/imaginary coefficient arrays of length
/// `len` (which must be 2^n for n ≥ 1). The coefficients must be normalized
/// to within 1e-6; they are renormalized exactly.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles; `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cavnet_payload_new(
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut CavnetPayload,
) -> CavnetStatus {
    if re.is_null() || im.is_null() || out.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    let res = std::slice::from_raw_parts(re, len);
    let ims = std::slice::from_raw_parts(im, len);
    let coefficients: Vec<Complex64> = res
        .iter()
        .zip(ims.iter())
        .map(|(r, i)| Complex64::new(*r, *i))
        .collect();
    match Payload::new(coefficients) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CavnetPayload { inner }));
            CavnetStatus::Ok
        }
        Err(e) => fail(CavnetStatus::InvalidArgument, &e.to_string()),
    }
}

/// Seeded Haar-like random payload on `n_qubits` qubits.
///
/// # Safety
/// `out` must be a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cavnet_payload_random(
    n_qubits: usize,
    seed: u64,
    out: *mut *mut CavnetPayload,
) -> CavnetStatus {
    if out.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    if n_qubits == 0 || n_qubits > protocols::MAX_TRANSFER_QUBITS {
        return fail(
            CavnetStatus::InvalidArgument,
            "n_qubits must be between 1 and the transfer cap",
        );
    }
    let inner = Payload::random_set(n_qubits, 1, seed).remove(0);
    *out = Box::into_raw(Box::new(CavnetPayload { inner }));
    CavnetStatus::Ok
}

/// # Safety
/// `payload` must come from a `cavnet_payload_*` constructor and not be freed
/// twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cavnet_payload_free(payload: *mut CavnetPayload) {
    if !payload.is_null() {
        drop(Box::from_raw(payload));
    }
}

fn run_result(out: *mut *mut CavnetResult, result: Result<ProtocolResult, protocols::ProtocolError>) -> CavnetStatus {
    match result {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(CavnetResult { inner })) };
            CavnetStatus::Ok
        }
        Err(e @ protocols::ProtocolError::CapacityExceeded { .. }) => {
            fail(CavnetStatus::Capacity, &e.to_string())
        }
        Err(e) => fail(CavnetStatus::InvalidArgument, &e.to_string()),
    }
}

/// Deterministic transfer of the payload over `hops` columns of fresh
/// carriers (hops ≥ 1).
///
/// # Safety
/// `payload` must be a live payload handle; `out` must be a valid destination
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cavnet_transfer(
    payload: *const CavnetPayload,
    hops: usize,
    out: *mut *mut CavnetResult,
) -> CavnetStatus {
    if payload.is_null() || out.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    if hops == 0 {
        return fail(CavnetStatus::InvalidArgument, "hops must be ≥ 1");
    }
    run_result(out, multi_hop_transfer(&(*payload).inner, hops))
}

/// Execute a JSON gate schedule (see the schedule format in the README) on
/// the payload.
///
/// # Safety
/// `schedule_json` must be a NUL-terminated string; `payload` a live handle;
/// `out` a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cavnet_execute_schedule_json(
    schedule_json: *const c_char,
    payload: *const CavnetPayload,
    out: *mut *mut CavnetResult,
) -> CavnetStatus {
    if schedule_json.is_null() || payload.is_null() || out.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    let text = match CStr::from_ptr(schedule_json).to_str() {
        Ok(t) => t,
        Err(_) => return fail(CavnetStatus::Utf8, "schedule JSON is not valid UTF-8"),
    };
    let schedule = match GateSchedule::from_json(text) {
        Ok(s) => s,
        Err(e) => return fail(CavnetStatus::InvalidArgument, &e.to_string()),
    };
    match network::execute(&schedule, &(*payload).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CavnetResult { inner }));
            CavnetStatus::Ok
        }
        Err(e @ network::ScheduleError::CapacityExceeded { .. }) => {
            fail(CavnetStatus::Capacity, &e.to_string())
        }
        Err(e) => fail(CavnetStatus::InvalidArgument, &e.to_string()),
    }
}

/// Fidelity of the destination atoms with the payload; NaN for null input.
///
/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn cavnet_result_fidelity(result: *const CavnetResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    (*result).inner.payload_fidelity
}

/// Global phase of the final state, when it is defined.
///
/// # Safety
/// `result` must be a live result handle; `re`/`im` valid destinations.
#[no_mangle]
pub unsafe extern "C" fn cavnet_result_global_phase(
    result: *const CavnetResult,
    re: *mut f64,
    im: *mut f64,
) -> CavnetStatus {
    if result.is_null() || re.is_null() || im.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    match (*result).inner.global_phase {
        Some(phase) => {
            *re = phase.re;
            *im = phase.im;
            CavnetStatus::Ok
        }
        None => fail(
            CavnetStatus::InvalidArgument,
            "final state does not factorize; no global phase",
        ),
    }
}

/// Amplitude count of the final register state.
///
/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn cavnet_result_state_len(result: *const CavnetResult) -> usize {
    if result.is_null() {
        return 0;
    }
    (*result).inner.final_state.dim()
}

/// Copy the final-state amplitudes into split re/im arrays of length `len`
/// (must equal `cavnet_result_state_len`).
///
/// # Safety
/// `result` must be a live result handle; `re`/`im` must point to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cavnet_result_state_amplitudes(
    result: *const CavnetResult,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> CavnetStatus {
    if result.is_null() || re.is_null() || im.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    let state: &StateVector = &(*result).inner.final_state;
    if len != state.dim() {
        return fail(
            CavnetStatus::InvalidArgument,
            "len does not match the state dimension",
        );
    }
    for (k, z) in state.amplitudes().iter().enumerate() {
        *re.add(k) = z.re;
        *im.add(k) = z.im;
    }
    CavnetStatus::Ok
}

/// True when every non-destination atom ended in its excited state.
///
/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn cavnet_result_carriers_ok(result: *const CavnetResult) -> bool {
    if result.is_null() {
        return false;
    }
    (*result).inner.carriers_ok()
}

/// # Safety
/// `result` must come from a result-producing call and not be freed twice;
/// null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cavnet_result_free(result: *mut CavnetResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

fn correction_code(c: Correction) -> CavnetCorrection {
    match c {
        Correction::Identity => CavnetCorrection::Identity,
        Correction::PhaseFlip => CavnetCorrection::PhaseFlip,
        Correction::Failure => CavnetCorrection::Failure,
    }
}

/// Run the probabilistic teleportation of a single-qubit payload. Fills
/// `branches[0..4]` in outcome order (0,0), (0,1), (1,0), (1,1) and writes
/// the total success probability.
///
/// # Safety
/// `payload` must be a live single-qubit payload handle; `branches` must
/// point to four writable entries; `success_probability` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cavnet_teleport(
    payload: *const CavnetPayload,
    branches: *mut CavnetTeleportBranch,
    success_probability: *mut f64,
) -> CavnetStatus {
    if payload.is_null() || branches.is_null() || success_probability.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    let result: TeleportResult = match protocols::ye_guo_teleport(&(*payload).inner) {
        Ok(r) => r,
        Err(e) => return fail(CavnetStatus::InvalidArgument, &e.to_string()),
    };
    if result.outcomes.len() != 4 {
        return fail(CavnetStatus::Numerics, "unexpected branch count");
    }
    for (k, branch) in result.outcomes.iter().enumerate() {
        let (a1, a2) = branch.outcome();
        *branches.add(k) = CavnetTeleportBranch {
            atom1: a1 as u8,
            atom2: a2 as u8,
            probability: branch.record.probability,
            correction: correction_code(branch.correction),
            corrected_fidelity: branch.corrected_fidelity.unwrap_or(f64::NAN),
            has_fidelity: branch.corrected_fidelity.is_some(),
        };
    }
    *success_probability = result.success_probability;
    CavnetStatus::Ok
}

/// Amplitudes of the entangled pair produced at interaction angle `theta`
/// (basis |00⟩,|01⟩,|10⟩,|11⟩).
///
/// # Safety
/// `re` and `im` must point to four writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn cavnet_bell_amplitudes(
    theta: f64,
    re: *mut f64,
    im: *mut f64,
) -> CavnetStatus {
    if re.is_null() || im.is_null() {
        return fail(CavnetStatus::NullPointer, "null pointer argument");
    }
    if !theta.is_finite() {
        return fail(CavnetStatus::InvalidArgument, "theta must be finite");
    }
    let state = protocols::prepare_bell(theta);
    for (k, z) in state.amplitudes().iter().enumerate() {
        *re.add(k) = z.re;
        *im.add(k) = z.im;
    }
    CavnetStatus::Ok
}
