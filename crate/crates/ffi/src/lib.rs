//! C ABI over `poincare_lab`.
//!
//! Every entry point returns a [`PlStatus`]. On failure the message is kept
//! per thread and can be read with [`pl_last_error_message`]. Models are
//! opaque handles released with [`pl_model_free`]. Output buffers are caller
//! owned and must hold exactly the stated number of values.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use poincare_lab::generator::{evolve, spectral_gap, GeneratorMatrix};
use poincare_lab::hopflax::{hopf_lax, GridFunction};
use poincare_lab::measure::{
    auto_half_width, gaussian_tilt, DensityRatio, GridMeasure, Potential, UniformGrid, DEFAULT_TAIL_TOLERANCE,
};
use poincare_lab::suite::{run_suite, ConfigError, SuiteConfig};
use poincare_lab::transport::TransportBackend;
use poincare_lab::LabError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    NoConvergence = 4,
    SizeCap = 5,
    Config = 6,
    Io = 7,
    BufferSize = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlPotential {
    /// `x^2 / 2`.
    Gaussian = 0,
    /// `x^4 - 2 x^2`.
    DoubleWell = 1,
    /// `x^4`.
    Quartic = 2,
    /// `V = 0` on a bounded domain.
    Uniform = 3,
    /// `c_0 + c_1 x + ...` from the coefficient array.
    Polynomial = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlBackend {
    Quantile = 0,
    Lp = 1,
    /// Upper bracket of entropic transport.
    Sinkhorn = 2,
}

/// Verdict tallies of a suite run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlCounts {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    pub skipped: usize,
    pub errors: usize,
    /// No errors and every binding check passed.
    pub success: bool,
}

/// Opaque model handle: a grid measure with its generator.
pub struct PlModel {
    generator: GeneratorMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(PlStatus, String);

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let status = match root(&e) {
            LabError::NoConvergence { .. } => PlStatus::NoConvergence,
            LabError::SizeCap { .. } => PlStatus::SizeCap,
            LabError::Numerical(_) | LabError::Overflow(_) => PlStatus::Numerical,
            _ => PlStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let status = match e {
            ConfigError::Io { .. } => PlStatus::Io,
            _ => PlStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

fn root(e: &LabError) -> &LabError {
    match e {
        LabError::AtTime { source, .. } => root(source),
        other => other,
    }
}

fn fail<T>(status: PlStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PlStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => (PlStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (PlStatus::Panic, format!("panic: {m}"))
        }
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

unsafe fn model_ref<'a>(model: *const PlModel) -> Result<&'a PlModel, Failure> {
    if model.is_null() {
        return fail(PlStatus::NullPointer, "model is null");
    }
    Ok(&*model)
}

unsafe fn input<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        return fail(PlStatus::NullPointer, format!("{name} is null"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, want: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if ptr.is_null() {
        return fail(PlStatus::NullPointer, format!("{name} is null"));
    }
    if len != want {
        return fail(
            PlStatus::BufferSize,
            format!("{name} holds {len} values, expected {want}"),
        );
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out_scalar<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    if ptr.is_null() {
        return fail(PlStatus::NullPointer, format!("{name} is null"));
    }
    Ok(&mut *ptr)
}

unsafe fn path(ptr: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if ptr.is_null() {
        return fail(PlStatus::NullPointer, format!("{name} is null"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(PlStatus::InvalidInput, format!("{name} is not UTF-8")),
    }
}

fn density(model: &PlModel, values: &[f64]) -> Result<DensityRatio, Failure> {
    Ok(DensityRatio::new(values.to_vec(), model.generator.measure())?)
}

/// Length in bytes (without the terminating NUL) of the last error message on this thread.
#[no_mangle]
pub extern "C" fn pl_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message, NUL terminated and truncated to `len` bytes.
///
/// # Safety
/// `buf` must be valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn pl_last_error_message(buf: *mut c_char, len: usize) -> PlStatus {
    if buf.is_null() || len == 0 {
        return PlStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len().min(len - 1);
        std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
        *buf.add(n) = 0;
        if n < msg.len() {
            PlStatus::BufferSize
        } else {
            PlStatus::Ok
        }
    })
}

/// Builds a model on `n` nodes of `[lo, hi]`. Passing NaN for both bounds picks a
/// symmetric domain whose truncated tail mass is negligible. `coeffs` is read only
/// for the polynomial potential and may be null otherwise.
///
/// # Safety
/// `coeffs` must be valid for `ncoeffs` reads when used; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_model_new(
    potential: PlPotential,
    coeffs: *const f64,
    ncoeffs: usize,
    lo: f64,
    hi: f64,
    n: usize,
    out: *mut *mut PlModel,
) -> PlStatus {
    guard(|| {
        let out = out_scalar(out, "out")?;
        *out = std::ptr::null_mut();
        let pot = match potential {
            PlPotential::Gaussian => Potential::Gaussian,
            PlPotential::DoubleWell => Potential::DoubleWell,
            PlPotential::Quartic => Potential::Quartic,
            PlPotential::Uniform => Potential::Uniform,
            PlPotential::Polynomial => Potential::Polynomial(input(coeffs, ncoeffs, "coeffs")?.to_vec()),
        };
        let (lo, hi) = if lo.is_nan() && hi.is_nan() {
            let r = auto_half_width(|x| pot.eval(x), n, DEFAULT_TAIL_TOLERANCE)?;
            (-r, r)
        } else {
            (lo, hi)
        };
        let mu = GridMeasure::from_potential(&pot, lo, hi, n)?;
        let generator = GeneratorMatrix::new(mu)?;
        *out = Box::into_raw(Box::new(PlModel { generator }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from [`pl_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pl_model_free(model: *mut PlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of grid nodes.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_model_len(model: *const PlModel, out: *mut usize) -> PlStatus {
    guard(|| {
        *out_scalar(out, "out")? = model_ref(model)?.generator.measure().len();
        Ok(())
    })
}

/// Grid nodes.
///
/// # Safety
/// `model` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pl_model_nodes(model: *const PlModel, out: *mut f64, len: usize) -> PlStatus {
    guard(|| {
        let mu = model_ref(model)?.generator.measure();
        output(out, len, mu.len(), "out")?.copy_from_slice(mu.nodes());
        Ok(())
    })
}

/// Probability weights of the grid measure.
///
/// # Safety
/// `model` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pl_model_weights(model: *const PlModel, out: *mut f64, len: usize) -> PlStatus {
    guard(|| {
        let mu = model_ref(model)?.generator.measure();
        output(out, len, mu.len(), "out")?.copy_from_slice(mu.weights());
        Ok(())
    })
}

/// Poincaré constant `1 / gap` of the generator.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_poincare_constant(model: *const PlModel, out: *mut f64) -> PlStatus {
    guard(|| {
        let gap = spectral_gap(&model_ref(model)?.generator)?;
        *out_scalar(out, "out")? = 1.0 / gap;
        Ok(())
    })
}

/// Normalized density ratio proportional to `exp(m x)`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pl_tilt_density(model: *const PlModel, m: f64, out: *mut f64, len: usize) -> PlStatus {
    guard(|| {
        let mu = model_ref(model)?.generator.measure();
        let f = if m == 0.0 {
            DensityRatio::constant(mu)
        } else {
            gaussian_tilt(m, mu)?
        };
        output(out, len, mu.len(), "out")?.copy_from_slice(f.values());
        Ok(())
    })
}

/// `W2(f mu, mu)` for a normalized density ratio `f`. `epsilon` is read only by
/// the Sinkhorn backend.
///
/// # Safety
/// `model` must be a live handle, `f` valid for `len` reads and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_w2(
    model: *const PlModel,
    f: *const f64,
    len: usize,
    backend: PlBackend,
    epsilon: f64,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        let model = model_ref(model)?;
        let f = density(model, input(f, len, "f")?)?;
        let backend = match backend {
            PlBackend::Quantile => TransportBackend::default(),
            PlBackend::Lp => TransportBackend::Lp,
            PlBackend::Sinkhorn => TransportBackend::Sinkhorn { epsilon, tol: 1e-9 },
        };
        *out_scalar(out, "out")? = backend.w2(&f, model.generator.measure())?;
        Ok(())
    })
}

/// `P_t f` for a normalized density ratio `f`.
///
/// # Safety
/// `model` must be a live handle, `f` valid for `len` reads and `out` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pl_evolve(
    model: *const PlModel,
    f: *const f64,
    len: usize,
    t: f64,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        let model = model_ref(model)?;
        let f = density(model, input(f, len, "f")?)?;
        let ft = evolve(&model.generator, &f, t)?;
        output(out, len, len, "out")?.copy_from_slice(ft.values());
        Ok(())
    })
}

/// `Q_t h` for `h` sampled on `n` uniform nodes of `[lo, hi]`.
///
/// # Safety
/// `h` must be valid for `n` reads and `out` for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn pl_hopf_lax(lo: f64, hi: f64, n: usize, h: *const f64, t: f64, out: *mut f64) -> PlStatus {
    guard(|| {
        let grid = UniformGrid::new(lo, hi, n)?;
        let h = GridFunction::new(input(h, n, "h")?.to_vec())?;
        let q = hopf_lax(&h, t, &grid)?;
        output(out, n, n, "out")?.copy_from_slice(q.values());
        Ok(())
    })
}

/// Runs the suites of a JSON config and writes the report and summary to
/// `out_dir`, or to the directory named in the config when null. `jobs = 0`
/// uses every core. Failing checks still return `Ok`; see `counts.success`.
///
/// # Safety
/// Paths must be NUL-terminated strings; `counts` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_run_suite(
    config_path: *const c_char,
    out_dir: *const c_char,
    jobs: usize,
    counts: *mut PlCounts,
) -> PlStatus {
    guard(|| {
        let counts = out_scalar(counts, "counts")?;
        let config = SuiteConfig::load(&path(config_path, "config_path")?)?;
        let dir = if out_dir.is_null() {
            config.output.dir.clone()
        } else {
            path(out_dir, "out_dir")?
        };
        let outcome = run_suite(&config, (jobs > 0).then_some(jobs))?;
        if let Err(e) = outcome.write(&dir) {
            return fail(PlStatus::Io, format!("cannot write reports to {}: {e}", dir.display()));
        }
        let c = outcome.counts();
        *counts = PlCounts {
            pass: c.pass,
            fail: c.fail,
            vacuous: c.vacuous,
            skipped: c.skipped,
            errors: c.errors,
            success: outcome.success(),
        };
        Ok(())
    })
}
