//! C ABI over the `cgalr` controller, topological signal, persistence diagrams and statistics.
//!
//! Every function returns a [`CgalrStatus`]; results go through out-pointers.
//! On failure, [`cgalr_last_error_message`] describes the most recent error on
//! the calling thread. Handles are opaque and must be released with their
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cgalr::controller::{Controller, ControllerConfig};
use cgalr::harness;
use cgalr::metrics;
use cgalr::signal::{SignalConfig, TopoSignalState, Window};
use cgalr::topology::{self, PersistenceDiagram};
use cgalr::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgalrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidData = 3,
    InvalidState = 4,
    Structural = 5,
    UndefinedRatio = 6,
    Parse = 7,
    Io = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CgalrStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => CgalrStatus::InvalidArgument,
        Error::InvalidData(_) => CgalrStatus::InvalidData,
        Error::InvalidState(_) => CgalrStatus::InvalidState,
        Error::Disconnected { .. } => CgalrStatus::Structural,
        Error::UndefinedRatio(_) => CgalrStatus::UndefinedRatio,
        Error::Parse { .. } => CgalrStatus::Parse,
        Error::Io(_) => CgalrStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CgalrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CgalrStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(&format!("null pointer: {what}"));
            CgalrStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            CgalrStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Message for the last failure on this thread; empty if none. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn cgalr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Controller hyperparameters, field-for-field with the Rust configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgalrControllerConfig {
    pub eta_star: f64,
    pub t0: f64,
    pub alpha: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub gamma_late: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub k_warm: usize,
    pub n_trigger: usize,
    pub cooldown: usize,
    pub n_late_ratio: f64,
    pub epochs: usize,
    pub batches_per_epoch: usize,
}

impl From<ControllerConfig> for CgalrControllerConfig {
    fn from(c: ControllerConfig) -> Self {
        Self {
            eta_star: c.eta_star,
            t0: c.t0,
            alpha: c.alpha,
            gamma_down: c.gamma_down,
            gamma_up: c.gamma_up,
            gamma_late: c.gamma_late,
            psi_min: c.psi_min,
            psi_max: c.psi_max,
            k_warm: c.k_warm,
            n_trigger: c.n_trigger,
            cooldown: c.cooldown,
            n_late_ratio: c.n_late_ratio,
            epochs: c.epochs,
            batches_per_epoch: c.batches_per_epoch,
        }
    }
}

impl From<CgalrControllerConfig> for ControllerConfig {
    fn from(c: CgalrControllerConfig) -> Self {
        Self {
            eta_star: c.eta_star,
            t0: c.t0,
            alpha: c.alpha,
            gamma_down: c.gamma_down,
            gamma_up: c.gamma_up,
            gamma_late: c.gamma_late,
            psi_min: c.psi_min,
            psi_max: c.psi_max,
            k_warm: c.k_warm,
            n_trigger: c.n_trigger,
            cooldown: c.cooldown,
            n_late_ratio: c.n_late_ratio,
            epochs: c.epochs,
            batches_per_epoch: c.batches_per_epoch,
        }
    }
}

/// Outcome of one epoch boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CgalrEpochDecision {
    pub epoch: usize,
    pub u: f64,
    pub psi: f64,
    pub cooldown_left: usize,
    pub consecutive_over: usize,
}

/// Opaque learning-rate controller.
pub struct CgalrController(Controller);

/// Opaque topological signal state.
pub struct CgalrSignal(TopoSignalState);

/// Opaque H1 persistence diagram.
pub struct CgalrDiagram(PersistenceDiagram);

/// Fill `out` with the image-regime constants.
///
/// # Safety
/// `out` must be null or point to writable memory for one config.
#[no_mangle]
pub unsafe extern "C" fn cgalr_controller_config_image(eta_star: f64, batches_per_epoch: usize, out: *mut CgalrControllerConfig) -> CgalrStatus {
    guard(|| {
        *deref_mut(out, "out")? = ControllerConfig::image_preset(eta_star, batches_per_epoch).into();
        Ok(())
    })
}

/// # Safety
/// `config` must be null or valid; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_controller_new(config: *const CgalrControllerConfig, out: *mut *mut CgalrController) -> CgalrStatus {
    guard(|| {
        let cfg = *deref(config, "config")?;
        let slot = deref_mut(out, "out")?;
        *slot = Box::into_raw(Box::new(CgalrController(Controller::new(cfg.into())?)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`cgalr_controller_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn cgalr_controller_free(handle: *mut CgalrController) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Rate for the next batch; advances the global batch counter.
///
/// # Safety
/// `handle` must be a live controller; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_controller_batch_rate(handle: *mut CgalrController, out: *mut f64) -> CgalrStatus {
    guard(|| {
        let c = deref_mut(handle, "controller")?;
        let slot = deref_mut(out, "out")?;
        *slot = c.0.batch_rate();
        Ok(())
    })
}

/// Apply the decision for 1-based `epoch` given its z-score and threshold.
///
/// # Safety
/// `handle` must be a live controller; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_controller_end_of_epoch(
    handle: *mut CgalrController,
    epoch: usize,
    z: f64,
    threshold: f64,
    out: *mut CgalrEpochDecision,
) -> CgalrStatus {
    guard(|| {
        let c = deref_mut(handle, "controller")?;
        let slot = deref_mut(out, "out")?;
        let d = c.0.end_of_epoch(epoch, z, threshold)?;
        *slot = CgalrEpochDecision { epoch: d.epoch, u: d.u, psi: d.psi, cooldown_left: d.cooldown_left, consecutive_over: d.consecutive_over };
        Ok(())
    })
}

/// Current multiplier.
///
/// # Safety
/// `handle` must be a live controller; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_controller_psi(handle: *const CgalrController, out: *mut f64) -> CgalrStatus {
    guard(|| {
        let c = deref(handle, "controller")?;
        *deref_mut(out, "out")? = c.0.state().psi;
        Ok(())
    })
}

/// `window == 0` means every observation so far.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_signal_new(lambda: f64, tau: f64, window: usize, k_mad: f64, out: *mut *mut CgalrSignal) -> CgalrStatus {
    guard(|| {
        let slot = deref_mut(out, "out")?;
        let window = if window == 0 { Window::Unbounded } else { Window::Last(window) };
        let state = TopoSignalState::new(SignalConfig { lambda, tau, window, k_mad })?;
        *slot = Box::into_raw(Box::new(CgalrSignal(state)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`cgalr_signal_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn cgalr_signal_free(handle: *mut CgalrSignal) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Record one epoch distance; writes its z-score and the threshold that goes with it.
///
/// # Safety
/// `handle` must be a live signal; `z` and `threshold` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_signal_observe(handle: *mut CgalrSignal, delta: f64, z: *mut f64, threshold: *mut f64) -> CgalrStatus {
    guard(|| {
        let s = deref_mut(handle, "signal")?;
        let (z, threshold) = (deref_mut(z, "z")?, deref_mut(threshold, "threshold")?);
        let sample = s.0.observe(delta)?;
        *z = sample.z;
        *threshold = sample.threshold;
        Ok(())
    })
}

/// Diagram from `n` `(births[i], deaths[i])` pairs.
///
/// # Safety
/// `births` and `deaths` must hold `n` values each; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_diagram_from_pairs(births: *const f64, deaths: *const f64, n: usize, out: *mut *mut CgalrDiagram) -> CgalrStatus {
    guard(|| {
        let b = slice(births, n, "births")?;
        let d = slice(deaths, n, "deaths")?;
        let slot = deref_mut(out, "out")?;
        let pairs: Vec<(f64, f64)> = b.iter().copied().zip(d.iter().copied()).collect();
        *slot = Box::into_raw(Box::new(CgalrDiagram(PersistenceDiagram::from_pairs(&pairs)?)));
        Ok(())
    })
}

/// H1 diagram of the Rips filtration of a row-major `p x p` dissimilarity matrix.
///
/// # Safety
/// `dissimilarity` must hold `p * p` values; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_diagram_from_dissimilarity(dissimilarity: *const f64, p: usize, out: *mut *mut CgalrDiagram) -> CgalrStatus {
    guard(|| {
        let n = p.checked_mul(p).ok_or_else(|| Error::InvalidArgument(format!("matrix size {p} overflows")))?;
        let values = slice(dissimilarity, n, "dissimilarity")?;
        let slot = deref_mut(out, "out")?;
        let view = ndarray::ArrayView2::from_shape((p, p), values).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        *slot = Box::into_raw(Box::new(CgalrDiagram(topology::vr_h1_from_dissimilarity(view)?)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from a `cgalr_diagram_*` constructor and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn cgalr_diagram_free(handle: *mut CgalrDiagram) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live diagram; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_diagram_len(handle: *const CgalrDiagram, out: *mut usize) -> CgalrStatus {
    guard(|| {
        let d = deref(handle, "diagram")?;
        *deref_mut(out, "out")? = d.0.len();
        Ok(())
    })
}

/// Point `index`; points are sorted by birth, then death.
///
/// # Safety
/// `handle` must be a live diagram; `birth` and `death` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_diagram_point(handle: *const CgalrDiagram, index: usize, birth: *mut f64, death: *mut f64) -> CgalrStatus {
    guard(|| {
        let d = deref(handle, "diagram")?;
        let (b, de) = (deref_mut(birth, "birth")?, deref_mut(death, "death")?);
        let pt = d.0.points().get(index).ok_or_else(|| Error::InvalidArgument(format!("index {index} out of range for {} points", d.0.len())))?;
        *b = pt.birth;
        *de = pt.death;
        Ok(())
    })
}

/// Which diagram distance [`cgalr_diagram_distance`] computes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgalrDiagramDistance {
    /// `param` is the order p.
    Wasserstein = 0,
    /// `param` is ignored.
    Bottleneck = 1,
    /// `param` is the bandwidth sigma.
    Heat = 2,
    /// `param` is the order p; 50 directions.
    SlicedWasserstein = 3,
}

/// # Safety
/// `a` and `b` must be live diagrams; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_diagram_distance(
    kind: CgalrDiagramDistance,
    a: *const CgalrDiagram,
    b: *const CgalrDiagram,
    param: f64,
    out: *mut f64,
) -> CgalrStatus {
    guard(|| {
        let (a, b) = (&deref(a, "a")?.0, &deref(b, "b")?.0);
        let slot = deref_mut(out, "out")?;
        *slot = match kind {
            CgalrDiagramDistance::Wasserstein => {
                metrics::DistanceKind::Wasserstein { p: param }.validate()?;
                metrics::wasserstein_distance(a, b, param)
            }
            CgalrDiagramDistance::Bottleneck => metrics::bottleneck_distance(a, b),
            CgalrDiagramDistance::Heat => metrics::heat_distance(a, b, param)?,
            CgalrDiagramDistance::SlicedWasserstein => metrics::sliced_wasserstein_distance(a, b, 50, param)?,
        };
        Ok(())
    })
}

/// TOP distance between two persistence vectors of non-tree edge weights.
///
/// # Safety
/// `u` holds `nu` values, `v` holds `nv`; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_top_distance(u: *const f64, nu: usize, v: *const f64, nv: usize, out: *mut f64) -> CgalrStatus {
    guard(|| {
        let u = topology::PersistenceVector::new(slice(u, nu, "u")?.to_vec())?;
        let v = topology::PersistenceVector::new(slice(v, nv, "v")?.to_vec())?;
        *deref_mut(out, "out")? = metrics::top_distance(&u, &v);
        Ok(())
    })
}

/// Relative error difference of a baseline error against the controller's error.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_red(err_baseline: f64, err_cgalr: f64, out: *mut f64) -> CgalrStatus {
    guard(|| {
        let slot = deref_mut(out, "out")?;
        *slot = harness::red(err_baseline, err_cgalr)?;
        Ok(())
    })
}

/// Median with its percentile-bootstrap interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CgalrMedianCi {
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// # Safety
/// `values` must hold `n` values; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cgalr_bootstrap_median_ci(
    values: *const f64,
    n: usize,
    resamples: usize,
    level: f64,
    seed: u64,
    out: *mut CgalrMedianCi,
) -> CgalrStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        let slot = deref_mut(out, "out")?;
        let r = harness::bootstrap_median_ci(v, resamples, level, seed)?;
        *slot = CgalrMedianCi { median: r.median_red, ci_low: r.ci_low, ci_high: r.ci_high };
        Ok(())
    })
}

/// Null-terminated library version.
#[no_mangle]
pub extern "C" fn cgalr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
