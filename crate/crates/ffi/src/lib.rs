//! C interface to `aosnn`.
//!
//! Every function returns an [`AosnnStatus`]; on failure the message is kept
//! per thread and can be read with [`aosnn_last_error`]. Objects are opaque
//! handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;

use aosnn::config::RunConfig;
use aosnn::dtn::DtnOperator;
use aosnn::experiment::Checkpoint;
use aosnn::geometry::Point;
use aosnn::solver::{run_method, StageRecord};
use aosnn::{specfun, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AosnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Config = 4,
    Computation = 5,
    Io = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AosnnStatus {
    match err {
        _ if err.is_config() => AosnnStatus::Config,
        Error::Domain { .. } | Error::OrderOverflow { .. } | Error::Overflow { .. } => AosnnStatus::Domain,
        Error::InvalidCount { .. }
        | Error::InvalidDomain(_)
        | Error::LengthMismatch { .. }
        | Error::EmptySet(_)
        | Error::InvalidShape(_)
        | Error::InvalidParameter { .. } => AosnnStatus::InvalidArgument,
        Error::Io(_) | Error::Snapshot(_) => AosnnStatus::Io,
        Error::Stage { source, .. } => status_of(source),
        _ => AosnnStatus::Computation,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (AosnnStatus, String)>) -> AosnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AosnnStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AosnnStatus::Panic
        }
    }
}

fn lib(err: Error) -> (AosnnStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (AosnnStatus, String) {
    (AosnnStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (AosnnStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (AosnnStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (AosnnStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, or 0 if there is none.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn aosnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bessel function `J_n(x)`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_bessel_j(n: u32, x: f64, out: *mut f64) -> AosnnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = specfun::bessel_j(n, x).map_err(lib)?;
        Ok(())
    })
}

/// Bessel function `Y_n(x)`, `x > 0`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_bessel_y(n: u32, x: f64, out: *mut f64) -> AosnnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = specfun::bessel_y(n, x).map_err(lib)?;
        Ok(())
    })
}

unsafe fn write_complex(v: Complex64, re: *mut f64, im: *mut f64) -> Result<(), (AosnnStatus, String)> {
    let re = out_ref(re, "out_re")?;
    let im = out_ref(im, "out_im")?;
    *re = v.re;
    *im = v.im;
    Ok(())
}

/// Hankel function `H_n^(1)(x)`.
///
/// # Safety
/// `out_re` and `out_im` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_hankel1(n: i32, x: f64, out_re: *mut f64, out_im: *mut f64) -> AosnnStatus {
    guard(|| write_complex(specfun::hankel1(n, x).map_err(lib)?, out_re, out_im))
}

/// Derivative of `H_n^(1)` at `x`.
///
/// # Safety
/// `out_re` and `out_im` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_hankel1_deriv(n: i32, x: f64, out_re: *mut f64, out_im: *mut f64) -> AosnnStatus {
    guard(|| write_complex(specfun::hankel1_deriv(n, x).map_err(lib)?, out_re, out_im))
}

/// DtN symbol `z H_n^(1)'(z) / H_n^(1)(z)`.
///
/// # Safety
/// `out_re` and `out_im` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_dtn_symbol(n: i32, z: f64, out_re: *mut f64, out_im: *mut f64) -> AosnnStatus {
    guard(|| write_complex(specfun::dtn_symbol(n, z).map_err(lib)?, out_re, out_im))
}

/// Truncated DtN operator on `n_quad` equispaced points of a circle.
pub struct AosnnDtn(DtnOperator);

/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_dtn_new(
    kappa: f64,
    radius: f64,
    order: usize,
    n_quad: usize,
    out: *mut *mut AosnnDtn,
) -> AosnnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let op = DtnOperator::new(kappa, radius, order, n_quad).map_err(lib)?;
        *out = Box::into_raw(Box::new(AosnnDtn(op)));
        Ok(())
    })
}

/// Applies the operator to a trace given as separate real and imaginary
/// arrays of length `n`.
///
/// # Safety
/// `op` must come from `aosnn_dtn_new`; the arrays must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn aosnn_dtn_apply(
    op: *const AosnnDtn,
    trace_re: *const f64,
    trace_im: *const f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> AosnnStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("op"))?;
        let tr = slice(trace_re, n, "trace_re")?;
        let ti = slice(trace_im, n, "trace_im")?;
        let or = slice_mut(out_re, n, "out_re")?;
        let oi = slice_mut(out_im, n, "out_im")?;
        let trace: Vec<Complex64> = tr.iter().zip(ti).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let out = op.0.apply(&trace).map_err(lib)?;
        for (i, v) in out.iter().enumerate() {
            or[i] = v.re;
            oi[i] = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `op` must be NULL or come from `aosnn_dtn_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aosnn_dtn_free(op: *mut AosnnDtn) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Parsed and validated run configuration.
pub struct AosnnConfig(RunConfig);

/// Parses a TOML run configuration.
///
/// # Safety
/// `text` must be NULL or a NUL-terminated string; `out` must be NULL or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_config_parse(text: *const c_char, out: *mut *mut AosnnConfig) -> AosnnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (AosnnStatus::InvalidArgument, "configuration is not UTF-8".to_string()))?;
        let cfg = RunConfig::from_toml_str(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(AosnnConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or come from `aosnn_config_parse`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aosnn_config_free(cfg: *mut AosnnConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Result of a training run.
pub struct AosnnSolution {
    checkpoint: Checkpoint,
    history: Vec<StageRecord>,
}

/// Trains the configured method. Nothing is written to disk.
///
/// # Safety
/// `cfg` must come from `aosnn_config_parse`; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_run(cfg: *const AosnnConfig, out: *mut *mut AosnnSolution) -> AosnnStatus {
    guard(|| {
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        let out = out_ref(out, "out")?;
        let solution = run_method(&cfg.solver_config(), cfg.experiment.method, &mut |_| Ok(())).map_err(lib)?;
        let checkpoint = Checkpoint::from_solution(cfg.clone(), &solution);
        *out = Box::into_raw(Box::new(AosnnSolution { checkpoint, history: solution.history }));
        Ok(())
    })
}

/// Loads a checkpoint file written by a run.
///
/// # Safety
/// `path` must be NULL or a NUL-terminated string; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_solution_load(path: *const c_char, out: *mut *mut AosnnSolution) -> AosnnStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (AosnnStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let checkpoint = Checkpoint::read_file(path.as_ref()).map_err(lib)?;
        *out = Box::into_raw(Box::new(AosnnSolution { checkpoint, history: Vec::new() }));
        Ok(())
    })
}

/// Writes the solution as a checkpoint file.
///
/// # Safety
/// `sol` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn aosnn_solution_save(sol: *const AosnnSolution, path: *const c_char) -> AosnnStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (AosnnStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        sol.checkpoint.write_file(path.as_ref()).map_err(lib)
    })
}

/// Number of recorded stages (0 for loaded checkpoints).
///
/// # Safety
/// `sol` must come from this library; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_solution_stage_count(sol: *const AosnnSolution, out: *mut usize) -> AosnnStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        *out_ref(out, "out")? = sol.history.len();
        Ok(())
    })
}

/// Epochs and relative l2 error of stage `stage`.
///
/// # Safety
/// `sol` must come from this library; the outputs must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_solution_stage(
    sol: *const AosnnSolution,
    stage: usize,
    epochs: *mut usize,
    relative_l2: *mut f64,
) -> AosnnStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let rec = sol.history.get(stage).ok_or_else(|| {
            (AosnnStatus::InvalidArgument, format!("stage {stage} out of range ({} stages)", sol.history.len()))
        })?;
        *out_ref(epochs, "epochs")? = rec.epochs;
        *out_ref(relative_l2, "relative_l2")? = rec.errors.relative_l2;
        Ok(())
    })
}

/// Evaluates the solution at `n` points given as interleaved `x, y` pairs.
///
/// # Safety
/// `sol` must come from this library; `xy` must hold `2n` doubles and the
/// outputs `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn aosnn_solution_evaluate(
    sol: *const AosnnSolution,
    xy: *const f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> AosnnStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let xy = slice(xy, 2 * n, "xy")?;
        let or = slice_mut(out_re, n, "out_re")?;
        let oi = slice_mut(out_im, n, "out_im")?;
        let points: Vec<Point> = xy.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let values = sol.checkpoint.values(&points).map_err(lib)?;
        for (i, v) in values.iter().enumerate() {
            or[i] = v.re;
            oi[i] = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `sol` must be NULL or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aosnn_solution_free(sol: *mut AosnnSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Runs the built-in self-checks; `passed` receives 1 or 0.
///
/// # Safety
/// `passed` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn aosnn_verify(passed: *mut i32) -> AosnnStatus {
    guard(|| {
        let passed = out_ref(passed, "passed")?;
        let report = aosnn::verify::verify(&Default::default());
        *passed = i32::from(report.passed());
        Ok(())
    })
}
