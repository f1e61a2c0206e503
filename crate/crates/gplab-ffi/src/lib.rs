//! C ABI for the dark-soliton stability laboratory.
//!
//! Conventions:
//! - Handles (`GplGrid`, `GplSoliton`, `GplRun`, `GplReport`) are opaque;
//!   constructors return null on failure and every handle has a matching
//!   `_free` function that accepts null.
//! - Fallible functions return a status code: 0 for success, 2 for
//!   invalid input, 3 for numerical failure, 4 for I/O problems, 5 for an
//!   internal panic. [`gpl_last_error_message`] describes the most recent
//!   failure on the calling thread.
//! - Structured results cross the boundary as JSON. String-returning
//!   functions follow a two-call pattern: pass a null buffer to query the
//!   required size (written to `needed`, terminator included), then call
//!   again with a buffer of at least that size.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gplab::error::Error;
use gplab::grid::Grid;
use gplab::lab::{self, RunArtifacts, RunConfig, VerificationLevel};
use gplab::soliton::Soliton;

/// Success.
pub const GPL_OK: i32 = 0;
/// A parameter or configuration was rejected.
pub const GPL_ERR_INVALID: i32 = 2;
/// A guard tripped or an algorithm failed to converge.
pub const GPL_ERR_NUMERICAL: i32 = 3;
/// Reading or writing run artifacts failed.
pub const GPL_ERR_IO: i32 = 4;
/// An internal invariant was violated; the handle state is unspecified.
pub const GPL_ERR_PANIC: i32 = 5;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn clear_error() {
    LAST_ERROR.with(|e| e.borrow_mut().clear());
}

fn fail(code: i32, message: impl Into<String>) -> i32 {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
    code
}

fn fail_error(e: &Error) -> i32 {
    fail(e.code(), e.to_string())
}

fn guarded<T>(default: T, f: impl FnOnce() -> T) -> T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(_) => {
            let _ = fail(GPL_ERR_PANIC, "internal panic");
            default
        }
    }
}

/// Copies `text` into `buf` with a terminating NUL. A null `buf` queries
/// the required capacity via `needed` (terminator included).
unsafe fn copy_out(text: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> i32 {
    let bytes = text.as_bytes();
    let want = bytes.len() + 1;
    if !needed.is_null() {
        *needed = want;
    }
    if buf.is_null() {
        return GPL_OK;
    }
    if cap < want {
        return fail(
            GPL_ERR_INVALID,
            format!("buffer of {cap} bytes is too small ({want} needed)"),
        );
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
    *buf.add(bytes.len()) = 0;
    GPL_OK
}

/// Spatial grid on `[-half_length, half_length)`.
pub struct GplGrid(Grid);

/// Travelling-wave profile with a fixed speed and center.
pub struct GplSoliton(Soliton);

/// A completed simulation run with its tracked diagnostics.
pub struct GplRun(RunArtifacts);

/// An analysis result serialized as JSON.
pub struct GplReport(String);

/// Diagnostic columns of a run's modulation track.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum GplTrackColumn {
    /// Sample time.
    Time = 0,
    /// Fitted soliton center a(t).
    Center = 1,
    /// Fitted soliton speed c(t).
    Speed = 2,
    /// Finite-difference rate a'(t).
    CenterRate = 3,
    /// Finite-difference rate c'(t).
    SpeedRate = 4,
    /// Energy-space norm of the residual field.
    EpsNormX = 5,
    /// First orthogonality residual.
    ResidualOne = 6,
    /// Second orthogonality residual.
    ResidualTwo = 7,
}

/// Scale of the verification battery.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum GplVerifyLevel {
    /// Reduced grids and horizons; completes in seconds.
    Fast = 0,
    /// Acceptance-grade grids, horizons, and thresholds.
    Full = 1,
}

/// Describes the most recent failure on the calling thread. Returns the
/// required capacity (terminator included); copies a possibly truncated,
/// always NUL-terminated message when `buf` is non-null.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gpl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let message = e.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let take = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), take);
            *buf.add(take) = 0;
        }
        bytes.len() + 1
    })
}

/// Speed of sound of the unit background; profiles exist for
/// `0 < |speed| < gpl_sound_speed()`.
#[no_mangle]
pub extern "C" fn gpl_sound_speed() -> f64 {
    gplab::SOUND_SPEED
}

/// Creates a uniform periodic grid with the given half-length and number
/// of points. Returns null on invalid parameters.
#[no_mangle]
pub extern "C" fn gpl_grid_new(half_length: f64, points: usize) -> *mut GplGrid {
    guarded(ptr::null_mut(), || {
        clear_error();
        match Grid::new(half_length, points) {
            Ok(g) => Box::into_raw(Box::new(GplGrid(g))),
            Err(e) => {
                let _ = fail_error(&e);
                ptr::null_mut()
            }
        }
    })
}

/// Releases a grid. Accepts null.
///
/// # Safety
/// `grid` must be null or a handle from [`gpl_grid_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn gpl_grid_free(grid: *mut GplGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of grid points; 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle from [`gpl_grid_new`].
#[no_mangle]
pub unsafe extern "C" fn gpl_grid_len(grid: *const GplGrid) -> usize {
    if grid.is_null() {
        return 0;
    }
    (*grid).0.len()
}

/// Copies the node coordinates into `out`, which must hold exactly
/// `gpl_grid_len` values.
///
/// # Safety
/// `grid` must be null or a live handle; `out` must be null or point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gpl_grid_nodes(grid: *const GplGrid, out: *mut f64, len: usize) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if grid.is_null() || out.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        let g = &(*grid).0;
        if len != g.len() {
            return fail(
                GPL_ERR_INVALID,
                format!("expected {} nodes, got buffer for {len}", g.len()),
            );
        }
        ptr::copy_nonoverlapping(g.nodes().as_ptr(), out, len);
        GPL_OK
    })
}

/// Creates a travelling-wave profile. Returns null when the speed is not
/// in `(0, sqrt(2))` up to sign or the center is not finite.
#[no_mangle]
pub extern "C" fn gpl_soliton_new(speed: f64, center: f64) -> *mut GplSoliton {
    guarded(ptr::null_mut(), || {
        clear_error();
        match Soliton::new(speed, center) {
            Ok(s) => Box::into_raw(Box::new(GplSoliton(s))),
            Err(e) => {
                let _ = fail_error(&e);
                ptr::null_mut()
            }
        }
    })
}

/// Releases a soliton. Accepts null.
///
/// # Safety
/// `soliton` must be null or a handle from [`gpl_soliton_new`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn gpl_soliton_free(soliton: *mut GplSoliton) {
    if !soliton.is_null() {
        drop(Box::from_raw(soliton));
    }
}

/// Closed-form invariants of a profile: energy, momentum, and the
/// momentum's derivative in the speed. Null output pointers are skipped.
///
/// # Safety
/// `soliton` must be null or a live handle; each output must be null or
/// point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn gpl_soliton_invariants(
    soliton: *const GplSoliton,
    energy: *mut f64,
    momentum: *mut f64,
    momentum_slope: *mut f64,
) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if soliton.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        let inv = (*soliton).0.invariants();
        if !energy.is_null() {
            *energy = inv.energy;
        }
        if !momentum.is_null() {
            *momentum = inv.momentum;
        }
        if !momentum_slope.is_null() {
            *momentum_slope = inv.momentum_slope;
        }
        GPL_OK
    })
}

/// Samples the profile's density dip and phase gradient on a grid. Both
/// buffers must hold exactly `gpl_grid_len` values.
///
/// # Safety
/// `soliton` and `grid` must be null or live handles; `eta` and `v` must
/// be null or point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gpl_soliton_profile(
    soliton: *const GplSoliton,
    grid: *const GplGrid,
    eta: *mut f64,
    v: *mut f64,
    len: usize,
) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if soliton.is_null() || grid.is_null() || eta.is_null() || v.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        let g = &(*grid).0;
        if len != g.len() {
            return fail(
                GPL_ERR_INVALID,
                format!("expected {} samples, got buffer for {len}", g.len()),
            );
        }
        let prof = (*soliton).0.eval_hydro(g);
        ptr::copy_nonoverlapping(prof.eta.as_ptr(), eta, len);
        ptr::copy_nonoverlapping(prof.v.as_ptr(), v, len);
        GPL_OK
    })
}

/// Bottom of the essential spectrum of the linearized operator at the
/// given speed.
///
/// # Safety
/// `out` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn gpl_essential_edge(speed: f64, out: *mut f64) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if out.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        match gplab::soliton::validate_speed(speed) {
            Ok(_) => {
                *out = gplab::linops::essential_edge(speed);
                GPL_OK
            }
            Err(e) => fail_error(&e),
        }
    })
}

/// Bottom of the essential spectrum of the reduced single-field operator
/// at the given speed.
///
/// # Safety
/// `out` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn gpl_reduced_edge(speed: f64, out: *mut f64) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if out.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        match gplab::soliton::validate_speed(speed) {
            Ok(_) => {
                *out = gplab::linops::reduced_edge(speed);
                GPL_OK
            }
            Err(e) => fail_error(&e),
        }
    })
}

/// Constrained coercivity constant of the second variation at the given
/// speed, computed on a grid with the given half-length and points.
///
/// # Safety
/// `lambda` must be null or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn gpl_coercivity(
    speed: f64,
    half_length: f64,
    points: usize,
    lambda: *mut f64,
) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if lambda.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        let result = (|| -> Result<f64, Error> {
            let g = Grid::new(half_length, points)?;
            let s = Soliton::new(speed, 0.0)?;
            Ok(gplab::linops::coercivity(&g, &s)?.lambda)
        })();
        match result {
            Ok(value) => {
                *lambda = value;
                GPL_OK
            }
            Err(e) => fail_error(&e),
        }
    })
}

/// Runs a simulation described by a JSON configuration (see the run
/// configuration schema) and returns a handle to its artifacts. When the
/// configuration names an output directory the artifact files are written
/// as well. Returns null on failure.
///
/// # Safety
/// `config_json` must be null or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gpl_run_from_json(config_json: *const c_char) -> *mut GplRun {
    guarded(ptr::null_mut(), || {
        clear_error();
        if config_json.is_null() {
            let _ = fail(GPL_ERR_INVALID, "null pointer");
            return ptr::null_mut();
        }
        let text = match CStr::from_ptr(config_json).to_str() {
            Ok(t) => t,
            Err(_) => {
                let _ = fail(GPL_ERR_INVALID, "configuration is not valid UTF-8");
                return ptr::null_mut();
            }
        };
        let result = (|| -> Result<RunArtifacts, Error> {
            let cfg = RunConfig::from_json_str(text)?;
            let artifacts = lab::run_experiment(&cfg)?;
            if let Some(outdir) = artifacts.config.outdir.clone() {
                lab::write_run_outputs(&outdir, &artifacts)?;
            }
            Ok(artifacts)
        })();
        match result {
            Ok(artifacts) => Box::into_raw(Box::new(GplRun(artifacts))),
            Err(e) => {
                let _ = fail_error(&e);
                ptr::null_mut()
            }
        }
    })
}

/// Releases a run. Accepts null.
///
/// # Safety
/// `run` must be null or a handle from [`gpl_run_from_json`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn gpl_run_free(run: *mut GplRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Serializes the run summary (resolved configuration, conservation
/// drifts, tracked norms, settling statistics, exit status) as JSON.
/// Two-call pattern; see the module documentation.
///
/// # Safety
/// `run` must be null or a live handle; `buf` must be null or point to
/// `cap` writable bytes; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gpl_run_summary_json(
    run: *const GplRun,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if run.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        match serde_json::to_string_pretty(&(*run).0.summary) {
            Ok(text) => copy_out(&text, buf, cap, needed),
            Err(e) => fail(GPL_ERR_IO, e.to_string()),
        }
    })
}

/// Number of samples in the run's modulation track; 0 when tracking
/// failed or the handle is null.
///
/// # Safety
/// `run` must be null or a live handle from [`gpl_run_from_json`].
#[no_mangle]
pub unsafe extern "C" fn gpl_run_track_len(run: *const GplRun) -> usize {
    if run.is_null() {
        return 0;
    }
    (*run).0.track.as_ref().map_or(0, |t| t.points.len())
}

/// Copies one diagnostic column of the modulation track into `out`,
/// which must hold exactly `gpl_run_track_len` values.
///
/// # Safety
/// `run` must be null or a live handle; `out` must be null or point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gpl_run_track_column(
    run: *const GplRun,
    column: GplTrackColumn,
    out: *mut f64,
    len: usize,
) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if run.is_null() || out.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        let track = match (*run).0.track.as_ref() {
            Some(t) => t,
            None => return fail(GPL_ERR_NUMERICAL, "the run has no modulation track"),
        };
        if len != track.points.len() {
            return fail(
                GPL_ERR_INVALID,
                format!(
                    "expected {} samples, got buffer for {len}",
                    track.points.len()
                ),
            );
        }
        for (i, p) in track.points.iter().enumerate() {
            *out.add(i) = match column {
                GplTrackColumn::Time => p.t,
                GplTrackColumn::Center => p.a,
                GplTrackColumn::Speed => p.c,
                GplTrackColumn::CenterRate => track.a_prime[i],
                GplTrackColumn::SpeedRate => track.c_prime[i],
                GplTrackColumn::EpsNormX => p.eps_norm_x,
                GplTrackColumn::ResidualOne => p.residual.0,
                GplTrackColumn::ResidualTwo => p.residual.1,
            };
        }
        GPL_OK
    })
}

/// Releases a report. Accepts null.
///
/// # Safety
/// `report` must be null or a report handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gpl_report_free(report: *mut GplReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Copies a report's JSON text. Two-call pattern; see the module
/// documentation.
///
/// # Safety
/// `report` must be null or a live handle; `buf` must be null or point
/// to `cap` writable bytes; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn gpl_report_json(
    report: *const GplReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> i32 {
    guarded(GPL_ERR_PANIC, || {
        clear_error();
        if report.is_null() {
            return fail(GPL_ERR_INVALID, "null pointer");
        }
        copy_out(&(*report).0, buf, cap, needed)
    })
}

/// Runs an amplitude-scaling sweep around a JSON-configured run and
/// returns the fitted log-log slopes as a JSON report. Returns null on
/// failure.
///
/// # Safety
/// `config_json` must be null or a NUL-terminated string; `amplitudes`
/// must be null or point to `count` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn gpl_sweep_from_json(
    config_json: *const c_char,
    amplitudes: *const f64,
    count: usize,
) -> *mut GplReport {
    guarded(ptr::null_mut(), || {
        clear_error();
        if config_json.is_null() || amplitudes.is_null() {
            let _ = fail(GPL_ERR_INVALID, "null pointer");
            return ptr::null_mut();
        }
        let text = match CStr::from_ptr(config_json).to_str() {
            Ok(t) => t,
            Err(_) => {
                let _ = fail(GPL_ERR_INVALID, "configuration is not valid UTF-8");
                return ptr::null_mut();
            }
        };
        let amps = std::slice::from_raw_parts(amplitudes, count);
        let result = (|| -> Result<String, Error> {
            let cfg = RunConfig::from_json_str(text)?;
            let report = lab::run_scaling_sweep(&cfg, amps)?;
            Ok(serde_json::to_string_pretty(&report)?)
        })();
        match result {
            Ok(json) => Box::into_raw(Box::new(GplReport(json))),
            Err(e) => {
                let _ = fail_error(&e);
                ptr::null_mut()
            }
        }
    })
}

/// Runs the verification battery at the given level and returns the
/// per-criterion verdicts as a JSON report. Failed criteria are data,
/// not errors; the report's `all_passed` field gives the overall verdict.
#[no_mangle]
pub extern "C" fn gpl_verify(level: GplVerifyLevel) -> *mut GplReport {
    guarded(ptr::null_mut(), || {
        clear_error();
        let level = match level {
            GplVerifyLevel::Fast => VerificationLevel::Fast,
            GplVerifyLevel::Full => VerificationLevel::Full,
        };
        let report = lab::run_verification_suite(level);
        match serde_json::to_string_pretty(&report) {
            Ok(json) => Box::into_raw(Box::new(GplReport(json))),
            Err(e) => {
                let _ = fail(GPL_ERR_IO, e.to_string());
                ptr::null_mut()
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn grid_and_soliton_round_trip_through_the_c_interface() {
        unsafe {
            let grid = gpl_grid_new(40.0, 256);
            assert!(!grid.is_null());
            assert_eq!(gpl_grid_len(grid), 256);
            let mut nodes = vec![0.0; 256];
            assert_eq!(gpl_grid_nodes(grid, nodes.as_mut_ptr(), 256), GPL_OK);
            assert_eq!(nodes[0], -40.0);

            let soliton = gpl_soliton_new(1.0, 0.0);
            assert!(!soliton.is_null());
            let (mut e, mut p, mut dp) = (0.0, 0.0, 0.0);
            assert_eq!(
                gpl_soliton_invariants(soliton, &mut e, &mut p, &mut dp),
                GPL_OK
            );
            assert!((e - 1.0 / 3.0).abs() < 1e-15);
            assert!((dp + 1.0).abs() < 1e-15);

            let mut eta = vec![0.0; 256];
            let mut v = vec![0.0; 256];
            assert_eq!(
                gpl_soliton_profile(soliton, grid, eta.as_mut_ptr(), v.as_mut_ptr(), 256),
                GPL_OK
            );
            let peak = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((peak - 0.5).abs() < 1e-12);

            // Mismatched buffer length is rejected with a message.
            assert_eq!(
                gpl_soliton_profile(soliton, grid, eta.as_mut_ptr(), v.as_mut_ptr(), 128),
                GPL_ERR_INVALID
            );
            let mut msg = vec![0i8; 128];
            let n = gpl_last_error_message(msg.as_mut_ptr() as *mut c_char, msg.len());
            assert!(n > 1);

            gpl_soliton_free(soliton);
            gpl_grid_free(grid);
        }
    }

    #[test]
    fn constructors_report_invalid_parameters() {
        unsafe {
            assert!(gpl_soliton_new(0.0, 0.0).is_null());
            let needed = gpl_last_error_message(ptr::null_mut(), 0);
            assert!(needed > 1);
            let mut msg = vec![0u8; needed];
            gpl_last_error_message(msg.as_mut_ptr() as *mut c_char, msg.len());
            let text = std::str::from_utf8(&msg[..needed - 1]).unwrap();
            assert!(text.contains("speed"), "unexpected message: {text}");

            let mut edge = 0.0;
            assert_eq!(gpl_essential_edge(2.0, &mut edge), GPL_ERR_INVALID);
            assert_eq!(gpl_essential_edge(1.0, &mut edge), GPL_OK);
            assert!((edge - (2.0 - 1.0) / (3.0 + 5.0f64.sqrt())).abs() < 1e-15);
        }
    }

    #[test]
    fn runs_and_reports_cross_the_boundary_as_json() {
        unsafe {
            let config = CString::new(
                r#"{
                    "speed": 1.0,
                    "grid": { "half_length": 40.0, "points": 256 },
                    "horizon": 1.0,
                    "perturbation": { "kind": "gaussian_eta", "amplitude": 0.01 },
                    "cadence": 0.1
                }"#,
            )
            .unwrap();
            let run = gpl_run_from_json(config.as_ptr());
            assert!(!run.is_null());

            let mut needed = 0usize;
            assert_eq!(
                gpl_run_summary_json(run, ptr::null_mut(), 0, &mut needed),
                GPL_OK
            );
            assert!(needed > 2);
            let mut buf = vec![0u8; needed];
            assert_eq!(
                gpl_run_summary_json(run, buf.as_mut_ptr() as *mut c_char, needed, &mut needed),
                GPL_OK
            );
            let text = std::str::from_utf8(&buf[..needed - 1]).unwrap();
            let value: serde_json::Value = serde_json::from_str(text).unwrap();
            assert_eq!(value["exit"], "completed");

            let len = gpl_run_track_len(run);
            assert_eq!(len, 11);
            let mut speeds = vec![0.0; len];
            assert_eq!(
                gpl_run_track_column(run, GplTrackColumn::Speed, speeds.as_mut_ptr(), len),
                GPL_OK
            );
            assert!(speeds.iter().all(|c| (c - 1.0).abs() < 0.05));

            // An undersized buffer is rejected without writing.
            let mut small = [0i8; 4];
            assert_eq!(
                gpl_run_summary_json(run, small.as_mut_ptr(), small.len(), ptr::null_mut()),
                GPL_ERR_INVALID
            );

            gpl_run_free(run);

            // Invalid configurations produce a null handle and a message.
            let bad = CString::new(r#"{ "speed": 5.0, "perturbation": { "kind": "gaussian_eta" } }"#)
                .unwrap();
            assert!(gpl_run_from_json(bad.as_ptr()).is_null());
            assert!(gpl_last_error_message(ptr::null_mut(), 0) > 1);
        }
    }

    #[test]
    fn generated_header_declares_the_interface() {
        let header = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/include/gplab.h"
        ))
        .expect("header generated at build time");
        for needle in [
            "typedef struct GplRun GplRun;",
            "gpl_run_from_json",
            "gpl_run_track_column",
            "gpl_last_error_message",
            "gpl_verify",
            "GPL_ERR_NUMERICAL",
        ] {
            assert!(header.contains(needle), "header lacks {needle}");
        }
    }
}
