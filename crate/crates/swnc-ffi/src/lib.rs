//! C ABI for the swnc simulation library.
//!
//! Every function returns a [`SwncStatus`] code and writes results
//! through out-pointers; channel profiles travel as opaque handles. A
//! thread-local message for the most recent error is available through
//! [`swnc_last_error`]. The header is generated into `include/swnc.h`
//! at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use swnc::analysis::{
    delay_upper_bound, eps_max_alpha, ge_scaling, ge_variance, DelayBound, DelayBoundInput,
};
use swnc::channel::{fit_ge, ge_generate, ge_stationary, ChannelProfile, GeParams};
use swnc::config::RunConfig;
use swnc::report::summary_csv;
use swnc::sim::sweep;

/// Result codes of every `swnc_*` call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum SwncStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A parameter was outside its domain.
    InvalidArgument = 2,
    /// File input/output failed.
    Io = 3,
    /// A document (trace, config) failed to parse.
    Parse = 4,
    /// The simulation could not produce a result.
    Sim = 5,
    /// The delay bound is infeasible for these parameters.
    Infeasible = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl std::fmt::Display) {
    let text = CString::new(message.to_string())
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(err: &swnc::Error) -> SwncStatus {
    match err {
        swnc::Error::Io(_) => SwncStatus::Io,
        swnc::Error::TraceParse { .. } | swnc::Error::Config(_) => SwncStatus::Parse,
        swnc::Error::NoCompletedExperience | swnc::Error::ProfileExhausted { .. } => {
            SwncStatus::Sim
        }
        _ => SwncStatus::InvalidArgument,
    }
}

fn fail(err: swnc::Error) -> SwncStatus {
    let status = status_of(&err);
    set_error(err);
    status
}

/// Message of the most recent error on this thread, or null when the
/// last call succeeded. The pointer stays valid until the next failing
/// `swnc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn swnc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Opaque channel profile handle.
pub struct SwncProfile {
    inner: ChannelProfile,
}

/// Aggregate metrics of one simulated cell, as written to reports.
#[repr(C)]
pub struct SwncMetrics {
    pub throughput_mean: f64,
    pub mean_delay_slots: f64,
    pub max_delay_slots: f64,
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Stationary distribution and mean erasure rate of a Gilbert-Elliott
/// channel. Any out-pointer may be null to skip that value.
///
/// # Safety
/// Non-null out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swnc_ge_stationary(
    s: f64,
    q: f64,
    eps_good: f64,
    eps_bad: f64,
    pi_g: *mut f64,
    pi_b: *mut f64,
    eps_mean: *mut f64,
) -> SwncStatus {
    let params = match GeParams::new(s, q, eps_good, eps_bad) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    match ge_stationary(&params) {
        Ok((g, b, eps)) => {
            if !pi_g.is_null() {
                unsafe { *pi_g = g };
            }
            if !pi_b.is_null() {
                unsafe { *pi_b = b };
            }
            if !eps_mean.is_null() {
                unsafe { *eps_mean = eps };
            }
            SwncStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Retransmission scaling term of the GE channel.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swnc_ge_scaling(s: f64, out: *mut f64) -> SwncStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return SwncStatus::NullArgument;
    }
    match ge_scaling(s) {
        Ok(v) => {
            unsafe { *out = v };
            SwncStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Confidence-scaled erasure rate `eps_mean + alpha * sqrt(nu) / rtt`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swnc_eps_max_alpha(
    eps_mean: f64,
    nu: f64,
    rtt_slots: u32,
    alpha: f64,
    out: *mut f64,
) -> SwncStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return SwncStatus::NullArgument;
    }
    if rtt_slots == 0 {
        set_error("rtt_slots must be positive");
        return SwncStatus::InvalidArgument;
    }
    unsafe { *out = eps_max_alpha(eps_mean, nu, rtt_slots, alpha) };
    SwncStatus::Ok
}

/// Upper bound on the in-order delivery delay, in slots. `nu_or_negative`
/// below zero selects the closed-form GE variance for `eps_mean`.
/// Returns `SWNC_STATUS_INFEASIBLE` when no operating point satisfies
/// the retransmission condition.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swnc_delay_upper_bound(
    eps_mean: f64,
    nu_or_negative: f64,
    rtt_slots: u32,
    alpha: f64,
    th: f64,
    dof_rate: f64,
    s: f64,
    out: *mut f64,
) -> SwncStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return SwncStatus::NullArgument;
    }
    if rtt_slots == 0 {
        set_error("rtt_slots must be positive");
        return SwncStatus::InvalidArgument;
    }
    let nu = if nu_or_negative < 0.0 {
        ge_variance(eps_mean, 1.0, rtt_slots)
    } else {
        nu_or_negative
    };
    let input = DelayBoundInput {
        eps_mean,
        nu,
        rtt_slots,
        alpha,
        th,
        d: dof_rate,
        s,
    };
    match delay_upper_bound(&input) {
        Ok(DelayBound::Slots(v)) => {
            unsafe { *out = v };
            SwncStatus::Ok
        }
        Ok(DelayBound::Infeasible) => {
            set_error("delay bound infeasible: 1 - d - eps_max <= th for every d");
            SwncStatus::Infeasible
        }
        Err(e) => fail(e),
    }
}

/// Synthesize a Gilbert-Elliott profile. The handle must be released
/// with [`swnc_profile_free`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn swnc_profile_from_ge(
    s: f64,
    q: f64,
    eps_good: f64,
    eps_bad: f64,
    n_slots: u64,
    rtt_us: u32,
    slot_us: u32,
    seed: u64,
    out: *mut *mut SwncProfile,
) -> SwncStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return SwncStatus::NullArgument;
    }
    let params = match GeParams::new(s, q, eps_good, eps_bad) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    match ge_generate(&params, n_slots as usize, rtt_us, slot_us, seed) {
        Ok(profile) => {
            let handle = Box::new(SwncProfile { inner: profile });
            unsafe { *out = Box::into_raw(handle) };
            SwncStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Load a recorded trace (`slot,rtt_us,lost` CSV).
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn swnc_profile_load(
    path: *const c_char,
    out: *mut *mut SwncProfile,
) -> SwncStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return SwncStatus::NullArgument;
    }
    let Some(path) = cstr(path) else {
        set_error("path is null or not UTF-8");
        return SwncStatus::NullArgument;
    };
    match ChannelProfile::load(Path::new(path)) {
        Ok(profile) => {
            *out = Box::into_raw(Box::new(SwncProfile { inner: profile }));
            SwncStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Write a profile in the trace format.
///
/// # Safety
/// `profile` must come from this library; `path` must be a valid string.
#[no_mangle]
pub unsafe extern "C" fn swnc_profile_save(
    profile: *const SwncProfile,
    path: *const c_char,
) -> SwncStatus {
    let Some(profile) = profile.as_ref() else {
        set_error("profile handle is null");
        return SwncStatus::NullArgument;
    };
    let Some(path) = cstr(path) else {
        set_error("path is null or not UTF-8");
        return SwncStatus::NullArgument;
    };
    match profile.inner.save(Path::new(path)) {
        Ok(()) => SwncStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Number of slots in the profile.
///
/// # Safety
/// `profile` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn swnc_profile_len(profile: *const SwncProfile) -> u64 {
    profile.as_ref().map_or(0, |p| p.inner.len() as u64)
}

/// Fit burst-erasure GE parameters to a profile. Out-pointers may be
/// null to skip values.
///
/// # Safety
/// `profile` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn swnc_profile_fit(
    profile: *const SwncProfile,
    s: *mut f64,
    q: *mut f64,
    eps_mean: *mut f64,
) -> SwncStatus {
    let Some(profile) = profile.as_ref() else {
        set_error("profile handle is null");
        return SwncStatus::NullArgument;
    };
    match fit_ge(&profile.inner) {
        Ok(fitted) => {
            let (_, _, eps) = match ge_stationary(&fitted) {
                Ok(v) => v,
                Err(e) => return fail(e),
            };
            if !s.is_null() {
                *s = fitted.s;
            }
            if !q.is_null() {
                *q = fitted.q;
            }
            if !eps_mean.is_null() {
                *eps_mean = eps;
            }
            SwncStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Release a profile handle. Null is a no-op.
///
/// # Safety
/// `profile` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn swnc_profile_free(profile: *mut SwncProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Run the full sweep described by a TOML configuration document (the
/// same format the `swnc simulate` command reads) and return the
/// summary CSV as a newly allocated string. Release it with
/// [`swnc_string_free`].
///
/// # Safety
/// `config_toml` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn swnc_simulate_toml(
    config_toml: *const c_char,
    summary_out: *mut *mut c_char,
) -> SwncStatus {
    if summary_out.is_null() {
        set_error("summary_out pointer is null");
        return SwncStatus::NullArgument;
    }
    let Some(text) = cstr(config_toml) else {
        set_error("config_toml is null or not UTF-8");
        return SwncStatus::NullArgument;
    };
    let config = match RunConfig::from_toml(text) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let entries = match config.sweep_entries(Path::new(".")) {
        Ok(e) => e,
        Err(e) => return fail(e),
    };
    let output = sweep(&entries);
    if output.rows.is_empty() {
        let detail = output
            .errors
            .first()
            .map(|(cell, err)| format!("{cell}: {err}"))
            .unwrap_or_else(|| "no rows produced".into());
        set_error(format!("every sweep cell failed; first error: {detail}"));
        return SwncStatus::Sim;
    }
    let csv = summary_csv(&output.rows);
    match CString::new(csv) {
        Ok(text) => {
            *summary_out = text.into_raw();
            SwncStatus::Ok
        }
        Err(_) => {
            set_error("summary contained an interior NUL");
            SwncStatus::Sim
        }
    }
}

/// Run one scheme over a profile handle and return aggregate metrics.
/// `scheme` is one of "arq", "rrlnc", "fsw-rlnc", "asw-rlnc".
///
/// # Safety
/// `profile` must come from this library; `scheme` must be a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn swnc_run_datapoint(
    profile: *const SwncProfile,
    scheme: *const c_char,
    n_packets: u32,
    packet_bytes: u64,
    experiences: u32,
    seed: u64,
    out: *mut SwncMetrics,
) -> SwncStatus {
    use swnc::scheme::SchemeKind;
    use swnc::sim::{run_datapoint, ChannelSource, SimConfig};

    if out.is_null() {
        set_error("out pointer is null");
        return SwncStatus::NullArgument;
    }
    let Some(profile) = profile.as_ref() else {
        set_error("profile handle is null");
        return SwncStatus::NullArgument;
    };
    let kind = match cstr(scheme) {
        Some("arq") => SchemeKind::Arq,
        Some("rrlnc") => SchemeKind::Rrlnc,
        Some("fsw-rlnc") | Some("fsw") => SchemeKind::FswRlnc,
        Some("asw-rlnc") | Some("asw") => SchemeKind::AswRlnc,
        Some(other) => {
            set_error(format!("unknown scheme {other:?}"));
            return SwncStatus::InvalidArgument;
        }
        None => {
            set_error("scheme is null or not UTF-8");
            return SwncStatus::NullArgument;
        }
    };
    if n_packets == 0 || packet_bytes == 0 || experiences == 0 {
        set_error("n_packets, packet_bytes and experiences must be positive");
        return SwncStatus::InvalidArgument;
    }
    let mut config = SimConfig::new(
        kind,
        ChannelSource::Trace(std::sync::Arc::new(profile.inner.clone())),
        seed,
    );
    config.n_packets = n_packets;
    config.packet_bytes = packet_bytes as usize;
    config.experiences_per_datapoint = experiences;
    match run_datapoint(&config) {
        Ok(dp) => {
            *out = SwncMetrics {
                throughput_mean: dp.throughput,
                mean_delay_slots: dp.mean_delay_slots,
                max_delay_slots: dp.max_delay_slots,
            };
            SwncStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `text` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn swnc_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_through_the_c_abi() {
        let (mut pi_g, mut pi_b, mut eps) = (0.0, 0.0, 0.0);
        let status =
            unsafe { swnc_ge_stationary(0.17, 0.019, 0.0, 1.0, &mut pi_g, &mut pi_b, &mut eps) };
        assert!(matches!(status, SwncStatus::Ok));
        assert!((pi_g - 0.8995).abs() < 1e-3);
        assert!((eps - 0.1005).abs() < 1e-3);

        let status =
            unsafe { swnc_ge_stationary(0.0, 0.0, 0.0, 1.0, &mut pi_g, &mut pi_b, &mut eps) };
        assert!(matches!(status, SwncStatus::InvalidArgument));
        let message = unsafe { CStr::from_ptr(swnc_last_error()) };
        assert!(message.to_str().unwrap().contains("degenerate"));
    }

    #[test]
    fn scaling_and_bound_through_the_c_abi() {
        let mut out = 0.0;
        assert!(matches!(unsafe { swnc_ge_scaling(0.17, &mut out) }, SwncStatus::Ok));
        assert!((out - 5.88235).abs() < 1e-4);
        assert!(matches!(
            unsafe { swnc_ge_scaling(1.5, &mut out) },
            SwncStatus::InvalidArgument
        ));

        let mut bound = 0.0;
        let status =
            unsafe { swnc_delay_upper_bound(0.3, -1.0, 16, 3.0, 0.0, 0.0, 0.17, &mut bound) };
        assert!(matches!(status, SwncStatus::Ok));
        assert!((60.0..=90.0).contains(&bound), "bound = {bound}");

        let status =
            unsafe { swnc_delay_upper_bound(0.99, -1.0, 16, 3.0, 0.5, 0.0, 0.17, &mut bound) };
        assert!(matches!(status, SwncStatus::Infeasible));
    }

    #[test]
    fn profile_handles_round_trip() {
        let mut profile: *mut SwncProfile = ptr::null_mut();
        let status = unsafe {
            swnc_profile_from_ge(0.17, 0.019, 0.0, 1.0, 50_000, 7200, 450, 9, &mut profile)
        };
        assert!(matches!(status, SwncStatus::Ok));
        assert!(!profile.is_null());
        unsafe {
            assert_eq!(swnc_profile_len(profile), 50_000);
            let (mut s, mut q, mut eps) = (0.0, 0.0, 0.0);
            let status = swnc_profile_fit(profile, &mut s, &mut q, &mut eps);
            assert!(matches!(status, SwncStatus::Ok));
            assert!((s - 0.17).abs() < 0.03, "s = {s}");
            assert!((eps - 0.1).abs() < 0.02, "eps = {eps}");
            swnc_profile_free(profile);
        }
    }

    #[test]
    fn datapoint_over_a_handle() {
        let mut profile: *mut SwncProfile = ptr::null_mut();
        assert!(matches!(
            unsafe { swnc_profile_from_ge(1.0, 0.0, 0.0, 0.0, 2_000, 7200, 450, 3, &mut profile) },
            SwncStatus::Ok
        ));
        unsafe {
            let scheme = CString::new("asw-rlnc").unwrap();
            let mut metrics = SwncMetrics {
                throughput_mean: 0.0,
                mean_delay_slots: 0.0,
                max_delay_slots: 0.0,
            };
            let status =
                swnc_run_datapoint(profile, scheme.as_ptr(), 30, 64, 2, 5, &mut metrics);
            assert!(matches!(status, SwncStatus::Ok));
            assert_eq!(metrics.throughput_mean, 1.0);
            assert!(metrics.max_delay_slots <= 16.0);

            let bad = CString::new("tcp").unwrap();
            assert!(matches!(
                swnc_run_datapoint(profile, bad.as_ptr(), 30, 64, 2, 5, &mut metrics),
                SwncStatus::InvalidArgument
            ));
            swnc_profile_free(profile);
        }
    }

    #[test]
    fn simulate_toml_returns_summary_csv() {
        let config = CString::new(
            r#"
[run]
n_packets = 20
packet_bytes = 32
seed = 4
experiences_per_datapoint = 2
datapoints = 2

[channel]
kind = "ge"
s = 0.2
q = 0.02

[schemes]
run = ["asw-rlnc"]
"#,
        )
        .unwrap();
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { swnc_simulate_toml(config.as_ptr(), &mut out) };
        assert!(matches!(status, SwncStatus::Ok));
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        assert!(text.starts_with("mode,algorithm,metric,mean,stdev,p99\n"));
        assert!(text.contains("asw-rlnc"));
        unsafe { swnc_string_free(out) };

        let broken = CString::new("[run]\nn_packets = 0\n").unwrap();
        let status = unsafe { swnc_simulate_toml(broken.as_ptr(), &mut out) };
        assert!(matches!(status, SwncStatus::Parse));
    }

    #[test]
    fn generated_header_exists_and_names_the_surface() {
        let header = std::fs::read_to_string(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/swnc.h"),
        )
        .expect("cbindgen header generated at build time");
        for symbol in [
            "swnc_ge_stationary",
            "swnc_ge_scaling",
            "swnc_eps_max_alpha",
            "swnc_delay_upper_bound",
            "swnc_profile_from_ge",
            "swnc_profile_load",
            "swnc_profile_fit",
            "swnc_profile_free",
            "swnc_run_datapoint",
            "swnc_simulate_toml",
            "swnc_last_error",
            "SwncStatus",
            "SwncMetrics",
        ] {
            assert!(header.contains(symbol), "header missing {symbol}");
        }
    }
}
