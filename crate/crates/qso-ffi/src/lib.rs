//! C ABI over the operator dynamics: opaque handles, status codes, and
//! plain-old-data results. Every constructor has a matching `_free`;
//! handles must not be shared across concurrent mutating calls.
//!
//! All functions return [`QsoStatus`]; outputs go through pointers. A null
//! required pointer yields `NullPointer`, a rejected argument yields
//! `InvalidArgument` (domain violations included), and quadrature that
//! cannot reach tolerance yields `NotConverged`.

use std::ffi::{c_char, c_double, c_ulonglong};

use qso_core::atomic;
use qso_core::bounds;
use qso_core::cdf::{CdfMeasure, DensityOrbit};
use qso_core::convergence::{self, InitialMeasure, Metric, PredictedLimit};
use qso_core::error::Error;
use qso_core::kernel::KernelParams;
use qso_core::particle;

/// Status code of every FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QsoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
}

fn status_of(err: &Error) -> QsoStatus {
    match err {
        Error::QuadratureDidNotConverge { .. } => QsoStatus::NotConverged,
        _ => QsoStatus::InvalidArgument,
    }
}

/// Opaque kernel parameter handle.
pub struct QsoParams(KernelParams);
/// Opaque atomic measure handle.
pub struct QsoAtomic(atomic::AtomicMeasure);
/// Opaque continuous base measure handle.
pub struct QsoCdf(CdfMeasure);
/// Opaque particle ensemble handle.
pub struct QsoEnsemble(particle::ParticleEnsemble);

/// Certificate constants, flattened for C.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QsoCertificate {
    pub p: c_double,
    pub n: u32,
    pub beta_n: c_double,
    pub domain_end: c_double,
    pub bound: c_double,
    pub valid: bool,
}

/// Convergence run summary, flattened for C. `converged_at` is negative
/// when the run did not reach tolerance. For the identity parameter
/// `is_identity` is set and `limit` is meaningless.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QsoConvergence {
    pub limit: c_double,
    pub is_identity: bool,
    pub converged_at: i64,
    pub final_distance: c_double,
    pub steps_recorded: u64,
}

macro_rules! nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return QsoStatus::NullPointer,
        }
    };
}

macro_rules! out_ptr {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => return QsoStatus::NullPointer,
        }
    };
}

fn give<T>(out: *mut *mut T, value: T) -> QsoStatus {
    if out.is_null() {
        return QsoStatus::NullPointer;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    QsoStatus::Ok
}

// ---------------------------------------------------------------------------
// kernel parameters
// ---------------------------------------------------------------------------

/// Creates kernel parameters for p in `[0,1]`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qso_params_new(p: c_double, out: *mut *mut QsoParams) -> QsoStatus {
    match KernelParams::new(p) {
        Ok(k) => give(out, QsoParams(k)),
        Err(_) => QsoStatus::InvalidArgument,
    }
}

/// # Safety
/// `h` must come from [`qso_params_new`] and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn qso_params_free(h: *mut QsoParams) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Reads back (p, q).
///
/// # Safety
/// `h`, `p_out`, `q_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_params_get(
    h: *const QsoParams,
    p_out: *mut c_double,
    q_out: *mut c_double,
) -> QsoStatus {
    let h = nonnull!(h);
    *out_ptr!(p_out) = h.0.p();
    *out_ptr!(q_out) = h.0.q();
    QsoStatus::Ok
}

/// The CDF interval map x(x + 2q(1-x)).
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_g_map(
    h: *const QsoParams,
    x: c_double,
    out: *mut c_double,
) -> QsoStatus {
    let h = nonnull!(h);
    match qso_core::g_map(h.0, x) {
        Ok(v) => {
            *out_ptr!(out) = v;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// The density factor 2px + 2q(1-x).
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_f_factor(
    h: *const QsoParams,
    x: c_double,
    out: *mut c_double,
) -> QsoStatus {
    let h = nonnull!(h);
    match qso_core::f_factor(h.0, x) {
        Ok(v) => {
            *out_ptr!(out) = v;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

// ---------------------------------------------------------------------------
// atomic measures
// ---------------------------------------------------------------------------

/// Builds an atomic measure from parallel position/weight arrays.
///
/// # Safety
/// `atoms` and `weights` must point to `len` readable doubles; `out` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_atomic_new(
    atoms: *const c_double,
    weights: *const c_double,
    len: usize,
    out: *mut *mut QsoAtomic,
) -> QsoStatus {
    if atoms.is_null() || weights.is_null() {
        return QsoStatus::NullPointer;
    }
    let atoms = unsafe { std::slice::from_raw_parts(atoms, len) };
    let weights = unsafe { std::slice::from_raw_parts(weights, len) };
    match atomic::AtomicMeasure::new(atoms.iter().copied().zip(weights.iter().copied())) {
        Ok(m) => give(out, QsoAtomic(m)),
        Err(_) => QsoStatus::InvalidArgument,
    }
}

/// # Safety
/// `h` must come from an atomic constructor and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn qso_atomic_free(h: *mut QsoAtomic) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Number of atoms.
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_atomic_len(h: *const QsoAtomic, out: *mut usize) -> QsoStatus {
    let h = nonnull!(h);
    *out_ptr!(out) = h.0.len();
    QsoStatus::Ok
}

/// Copies atoms and weights into caller buffers of capacity `len`.
///
/// # Safety
/// `atoms_out` and `weights_out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qso_atomic_copy(
    h: *const QsoAtomic,
    atoms_out: *mut c_double,
    weights_out: *mut c_double,
    len: usize,
) -> QsoStatus {
    let h = nonnull!(h);
    if atoms_out.is_null() || weights_out.is_null() {
        return QsoStatus::NullPointer;
    }
    if len < h.0.len() {
        return QsoStatus::InvalidArgument;
    }
    unsafe {
        std::ptr::copy_nonoverlapping(h.0.atoms().as_ptr(), atoms_out, h.0.len());
        std::ptr::copy_nonoverlapping(h.0.weights().as_ptr(), weights_out, h.0.len());
    }
    QsoStatus::Ok
}

/// One operator step.
///
/// # Safety
/// All handles must be valid; `out` must be a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qso_atomic_apply(
    params: *const QsoParams,
    measure: *const QsoAtomic,
    out: *mut *mut QsoAtomic,
) -> QsoStatus {
    let params = nonnull!(params);
    let measure = nonnull!(measure);
    give(out, QsoAtomic(atomic::apply_once(params.0, &measure.0)))
}

/// `steps` operator steps; returns the final measure.
///
/// # Safety
/// All handles must be valid; `out` must be a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qso_atomic_iterate(
    params: *const QsoParams,
    measure: *const QsoAtomic,
    steps: u32,
    out: *mut *mut QsoAtomic,
) -> QsoStatus {
    let params = nonnull!(params);
    let measure = nonnull!(measure);
    let mut current = measure.0.clone();
    for _ in 0..steps {
        current = atomic::apply_once(params.0, &current);
    }
    give(out, QsoAtomic(current))
}

/// The predicted trajectory limit (Dirac at an extreme atom; the measure
/// itself at p = 1/2).
///
/// # Safety
/// All handles must be valid; `out` must be a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qso_atomic_predict_limit(
    params: *const QsoParams,
    measure: *const QsoAtomic,
    out: *mut *mut QsoAtomic,
) -> QsoStatus {
    let params = nonnull!(params);
    let measure = nonnull!(measure);
    give(out, QsoAtomic(atomic::predict_limit(params.0, &measure.0)))
}

// ---------------------------------------------------------------------------
// continuous base measures and orbits
// ---------------------------------------------------------------------------

/// The uniform base measure (CDF x).
///
/// # Safety
/// `out` must be a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qso_cdf_uniform(out: *mut *mut QsoCdf) -> QsoStatus {
    give(out, QsoCdf(CdfMeasure::uniform()))
}

/// The power base measure (CDF x^k, k >= 1).
///
/// # Safety
/// `out` must be a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qso_cdf_power(k: c_double, out: *mut *mut QsoCdf) -> QsoStatus {
    match CdfMeasure::power(k) {
        Ok(c) => give(out, QsoCdf(c)),
        Err(_) => QsoStatus::InvalidArgument,
    }
}

/// A piecewise-linear CDF through `len` (x, g) nodes from (0,0) to (1,1).
///
/// # Safety
/// `xs` and `gs` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_cdf_grid(
    xs: *const c_double,
    gs: *const c_double,
    len: usize,
    out: *mut *mut QsoCdf,
) -> QsoStatus {
    if xs.is_null() || gs.is_null() {
        return QsoStatus::NullPointer;
    }
    let xs = unsafe { std::slice::from_raw_parts(xs, len) };
    let gs = unsafe { std::slice::from_raw_parts(gs, len) };
    match CdfMeasure::from_grid(xs.iter().copied().zip(gs.iter().copied()).collect()) {
        Ok(c) => give(out, QsoCdf(c)),
        Err(_) => QsoStatus::InvalidArgument,
    }
}

/// # Safety
/// `h` must come from a CDF constructor and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn qso_cdf_free(h: *mut QsoCdf) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Base CDF value g(x).
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_cdf_eval(
    h: *const QsoCdf,
    x: c_double,
    out: *mut c_double,
) -> QsoStatus {
    let h = nonnull!(h);
    match h.0.cdf(x) {
        Ok(v) => {
            *out_ptr!(out) = v;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Orbit CDF iterate g_n(x) (n >= 1).
///
/// # Safety
/// Handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_orbit_cdf_at(
    params: *const QsoParams,
    base: *const QsoCdf,
    n: u32,
    x: c_double,
    out: *mut c_double,
) -> QsoStatus {
    let params = nonnull!(params);
    let base = nonnull!(base);
    let orbit = match DensityOrbit::new(params.0, base.0.clone(), n) {
        Ok(o) => o,
        Err(e) => return status_of(&e),
    };
    match orbit.cdf_at(x) {
        Ok(v) => {
            *out_ptr!(out) = v;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Orbit density f_n(x) and its natural logarithm (n >= 1).
///
/// # Safety
/// Handles and both out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_orbit_density_at(
    params: *const QsoParams,
    base: *const QsoCdf,
    n: u32,
    x: c_double,
    value_out: *mut c_double,
    log_value_out: *mut c_double,
) -> QsoStatus {
    let params = nonnull!(params);
    let base = nonnull!(base);
    let orbit = match DensityOrbit::new(params.0, base.0.clone(), n) {
        Ok(o) => o,
        Err(e) => return status_of(&e),
    };
    match orbit.density_at(x) {
        Ok(v) => {
            *out_ptr!(value_out) = v.value;
            *out_ptr!(log_value_out) = v.log_value;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// One-step interval image `V([a,b])`.
///
/// # Safety
/// Handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_pushforward_interval(
    params: *const QsoParams,
    base: *const QsoCdf,
    a: c_double,
    b: c_double,
    out: *mut c_double,
) -> QsoStatus {
    let params = nonnull!(params);
    let base = nonnull!(base);
    match qso_core::pushforward_interval(params.0, &base.0, a, b) {
        Ok(v) => {
            *out_ptr!(out) = v;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Adaptive quadrature of the orbit density against the base measure
/// over `[a,b]` to absolute tolerance `tol`.
///
/// # Safety
/// Handles and out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_integrate_density(
    params: *const QsoParams,
    base: *const QsoCdf,
    n: u32,
    a: c_double,
    b: c_double,
    tol: c_double,
    value_out: *mut c_double,
    abs_error_out: *mut c_double,
) -> QsoStatus {
    let params = nonnull!(params);
    let base = nonnull!(base);
    let orbit = match DensityOrbit::new(params.0, base.0.clone(), n) {
        Ok(o) => o,
        Err(e) => return status_of(&e),
    };
    match orbit.integrate_density(a, b, tol) {
        Ok(r) => {
            *out_ptr!(value_out) = r.value;
            *out_ptr!(abs_error_out) = r.abs_error;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

/// Certificate constants at (p, n). Invalid certificates are returned with
/// `valid = false`, not as errors; p = 1/2 or n < 2 is `InvalidArgument`.
///
/// # Safety
/// `params` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_certificate(
    params: *const QsoParams,
    n: u32,
    out: *mut QsoCertificate,
) -> QsoStatus {
    let params = nonnull!(params);
    match bounds::certificate(params.0, n) {
        Ok(c) => {
            *out_ptr!(out) = QsoCertificate {
                p: c.p,
                n: c.n,
                beta_n: c.beta_n,
                domain_end: c.domain_end,
                bound: c.bound,
                valid: c.valid,
            };
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Smallest n with a valid certificate.
///
/// # Safety
/// `params` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_min_valid_n(params: *const QsoParams, out: *mut u32) -> QsoStatus {
    let params = nonnull!(params);
    match bounds::min_valid_n(params.0) {
        Ok(n) => {
            *out_ptr!(out) = n;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

fn convergence_out(report: convergence::ConvergenceReport) -> QsoConvergence {
    let (limit, is_identity) = match report.predicted_limit {
        PredictedLimit::Point(x) => (x, false),
        PredictedLimit::Identity => (f64::NAN, true),
    };
    QsoConvergence {
        limit,
        is_identity,
        converged_at: report.converged_at.map(i64::from).unwrap_or(-1),
        final_distance: report.final_distance,
        steps_recorded: report.distances.len() as u64,
    }
}

/// Runs a continuous initial measure to its predicted Dirac limit under
/// the W1 stopping rule.
///
/// # Safety
/// Handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_converge_cdf(
    params: *const QsoParams,
    base: *const QsoCdf,
    tol: c_double,
    max_steps: u32,
    out: *mut QsoConvergence,
) -> QsoStatus {
    let params = nonnull!(params);
    let base = nonnull!(base);
    match convergence::run_to_convergence(
        params.0,
        &InitialMeasure::Cdf(base.0.clone()),
        Metric::W1,
        tol,
        max_steps,
    ) {
        Ok(r) => {
            *out_ptr!(out) = convergence_out(r);
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Runs an atomic initial measure to its predicted Dirac limit.
/// `use_tail_mass` selects the tail-mass metric instead of W1.
///
/// # Safety
/// Handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_converge_atomic(
    params: *const QsoParams,
    measure: *const QsoAtomic,
    tol: c_double,
    max_steps: u32,
    use_tail_mass: bool,
    out: *mut QsoConvergence,
) -> QsoStatus {
    let params = nonnull!(params);
    let measure = nonnull!(measure);
    let metric = if use_tail_mass {
        Metric::TailMass
    } else {
        Metric::W1
    };
    match convergence::run_to_convergence(
        params.0,
        &InitialMeasure::Atomic(measure.0.clone()),
        metric,
        tol,
        max_steps,
    ) {
        Ok(r) => {
            *out_ptr!(out) = convergence_out(r);
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Residual |V delta_a({a}) - 1|; zero for every fixed point.
///
/// # Safety
/// `params` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_fixed_point_check(
    params: *const QsoParams,
    a: c_double,
    out: *mut c_double,
) -> QsoStatus {
    let params = nonnull!(params);
    match convergence::fixed_point_check(params.0, a) {
        Ok(v) => {
            *out_ptr!(out) = v;
            QsoStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

// ---------------------------------------------------------------------------
// particle oracle
// ---------------------------------------------------------------------------

/// Samples an ensemble of `count` particles from a continuous base.
///
/// # Safety
/// Handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_from_cdf(
    base: *const QsoCdf,
    count: usize,
    seed: c_ulonglong,
    out: *mut *mut QsoEnsemble,
) -> QsoStatus {
    let base = nonnull!(base);
    match particle::sample_initial(&InitialMeasure::Cdf(base.0.clone()), count, seed) {
        Ok(e) => give(out, QsoEnsemble(e)),
        Err(_) => QsoStatus::InvalidArgument,
    }
}

/// Samples an ensemble of `count` particles from an atomic measure.
///
/// # Safety
/// Handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_from_atomic(
    measure: *const QsoAtomic,
    count: usize,
    seed: c_ulonglong,
    out: *mut *mut QsoEnsemble,
) -> QsoStatus {
    let measure = nonnull!(measure);
    match particle::sample_initial(&InitialMeasure::Atomic(measure.0.clone()), count, seed) {
        Ok(e) => give(out, QsoEnsemble(e)),
        Err(_) => QsoStatus::InvalidArgument,
    }
}

/// # Safety
/// `h` must come from an ensemble constructor and not already be freed.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_free(h: *mut QsoEnsemble) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Advances the ensemble one generation in place.
///
/// # Safety
/// Handles must be valid; `ensemble` must not be aliased concurrently.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_step(
    params: *const QsoParams,
    ensemble: *mut QsoEnsemble,
    threads: usize,
) -> QsoStatus {
    let params = nonnull!(params);
    let ensemble = out_ptr!(ensemble);
    ensemble.0 = particle::step_generation(params.0, &ensemble.0, threads.max(1));
    QsoStatus::Ok
}

/// Particle count.
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_len(h: *const QsoEnsemble, out: *mut usize) -> QsoStatus {
    let h = nonnull!(h);
    *out_ptr!(out) = h.0.len();
    QsoStatus::Ok
}

/// Generation counter.
///
/// # Safety
/// `h` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_generation(
    h: *const QsoEnsemble,
    out: *mut u32,
) -> QsoStatus {
    let h = nonnull!(h);
    *out_ptr!(out) = h.0.generation();
    QsoStatus::Ok
}

/// Copies the (sorted) particle positions into a caller buffer of capacity
/// `len`.
///
/// # Safety
/// `points_out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_copy(
    h: *const QsoEnsemble,
    points_out: *mut c_double,
    len: usize,
) -> QsoStatus {
    let h = nonnull!(h);
    if points_out.is_null() {
        return QsoStatus::NullPointer;
    }
    if len < h.0.len() {
        return QsoStatus::InvalidArgument;
    }
    unsafe { std::ptr::copy_nonoverlapping(h.0.points().as_ptr(), points_out, h.0.len()) };
    QsoStatus::Ok
}

/// Kolmogorov distance between the ensemble and the analytic CDF of the
/// same particle process after `ensemble.generation()` steps (the
/// mirrored-parameter orbit).
///
/// # Safety
/// Handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qso_ensemble_kolmogorov_vs_analytic(
    params: *const QsoParams,
    base: *const QsoCdf,
    ensemble: *const QsoEnsemble,
    out: *mut c_double,
) -> QsoStatus {
    let params = nonnull!(params);
    let base = nonnull!(base);
    let ensemble = nonnull!(ensemble);
    let orbit = match particle::analytic_cdf_orbit(params.0, &base.0, ensemble.0.generation()) {
        Ok(o) => o,
        Err(e) => return status_of(&e),
    };
    let failed = std::cell::Cell::new(false);
    let ks = ensemble.0.kolmogorov_distance(|x| match orbit.cdf_at(x) {
        Ok(v) => v,
        Err(_) => {
            failed.set(true);
            f64::NAN
        }
    });
    if failed.get() {
        return QsoStatus::InvalidArgument;
    }
    *out_ptr!(out) = ks;
    QsoStatus::Ok
}

/// Crate version as a static C string.
#[no_mangle]
pub extern "C" fn qso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
