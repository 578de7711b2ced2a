//! C ABI for levyma: opaque handles, status codes, flat `extern "C"`
//! functions. The matching header lives at `include/levyma.h`.
//!
//! Conventions: every constructor writes its result through an out-pointer
//! and returns a [`LevymaStatus`]; heap objects are released with the paired
//! `*_free` function; all entry points catch panics and report
//! `LEVYMA_STATUS_PANIC` instead of unwinding across the boundary.

use levyma::kernels::{GammaExpKernel, KernelFn, Sidedness};
use levyma::levy::{JumpDensity, LevyTriplet};
use levyma::mellin::{estimate_levy_density, EstimatorConfig, LambdaMode, Sigma2Mode, Variant};
use levyma::simulate::{simulate_path, SamplePath};
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes mirrored in the C header.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevymaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalError = 3,
    Panic = 4,
}

/// Opaque kernel handle.
pub struct LevymaKernel(GammaExpKernel);
/// Opaque sample-path handle.
pub struct LevymaPath(SamplePath);
/// Opaque density-estimate handle.
pub struct LevymaDensity {
    xs: Vec<f64>,
    values: Vec<f64>,
}

/// ABI version as major·10000 + minor·100 + patch.
#[no_mangle]
pub extern "C" fn levyma_version() -> u32 {
    100
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn levyma_status_message(status: LevymaStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        LevymaStatus::Ok => b"ok\0",
        LevymaStatus::NullPointer => b"null pointer argument\0",
        LevymaStatus::InvalidArgument => b"invalid argument\0",
        LevymaStatus::NumericalError => b"numerical error\0",
        LevymaStatus::Panic => b"internal panic\0",
    };
    msg.as_ptr() as *const c_char
}

fn guard(status: impl FnOnce() -> LevymaStatus + std::panic::UnwindSafe) -> LevymaStatus {
    catch_unwind(status).unwrap_or(LevymaStatus::Panic)
}

/// Create a gamma-exponential kernel K(x) = |x|^r e^{-rho|x|}.
///
/// # Safety
/// `out` must be a valid pointer to a `*mut LevymaKernel`.
#[no_mangle]
pub unsafe extern "C" fn levyma_kernel_new(
    r: u32,
    rho: f64,
    one_sided: bool,
    out: *mut *mut LevymaKernel,
) -> LevymaStatus {
    if out.is_null() {
        return LevymaStatus::NullPointer;
    }
    guard(move || {
        let sided = if one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
        match GammaExpKernel::new(r, rho, sided) {
            Ok(k) => {
                unsafe { *out = Box::into_raw(Box::new(LevymaKernel(k))) };
                LevymaStatus::Ok
            }
            Err(_) => LevymaStatus::InvalidArgument,
        }
    })
}

/// # Safety
/// `kernel` must be null or a pointer obtained from `levyma_kernel_new`.
#[no_mangle]
pub unsafe extern "C" fn levyma_kernel_free(kernel: *mut LevymaKernel) {
    if !kernel.is_null() {
        drop(unsafe { Box::from_raw(kernel) });
    }
}

/// ‖K‖_{L¹}; NaN on a null handle.
///
/// # Safety
/// `kernel` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn levyma_kernel_l1_norm(kernel: *const LevymaKernel) -> f64 {
    if kernel.is_null() {
        return f64::NAN;
    }
    unsafe { &*kernel }.0.l1_norm()
}

/// Simulate n observations of Z_t = ∫K(t−s)dL_s with a compound-Poisson
/// driver (intensity `lambda`, standard-exponential marks), optional
/// Gaussian part `sigma2` and drift.
///
/// # Safety
/// `kernel` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn levyma_simulate(
    kernel: *const LevymaKernel,
    lambda: f64,
    sigma2: f64,
    drift: f64,
    delta: f64,
    n: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut LevymaPath,
) -> LevymaStatus {
    if kernel.is_null() || out.is_null() {
        return LevymaStatus::NullPointer;
    }
    guard(AssertUnwindSafe(move || {
        let k = &unsafe { &*kernel }.0;
        let model = match LevyTriplet::new(drift, sigma2, JumpDensity::ExponentialCpp {
            intensity: lambda,
        }) {
            Ok(m) => m,
            Err(_) => return LevymaStatus::InvalidArgument,
        };
        match simulate_path(&model, k, delta, n, alpha, seed) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(LevymaPath(p))) };
                LevymaStatus::Ok
            }
            Err(_) => LevymaStatus::InvalidArgument,
        }
    }))
}

/// Wrap externally produced equidistant observations into a path handle.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn levyma_path_from_observations(
    delta: f64,
    data: *const f64,
    len: usize,
    out: *mut *mut LevymaPath,
) -> LevymaStatus {
    if data.is_null() || out.is_null() {
        return LevymaStatus::NullPointer;
    }
    if len == 0 || !(delta > 0.0 && delta.is_finite()) {
        return LevymaStatus::InvalidArgument;
    }
    guard(AssertUnwindSafe(move || {
        let obs = unsafe { std::slice::from_raw_parts(data, len) }.to_vec();
        if obs.iter().any(|z| !z.is_finite()) {
            return LevymaStatus::InvalidArgument;
        }
        let path = SamplePath { delta, observations: obs, seed: 0, provenance: None };
        unsafe { *out = Box::into_raw(Box::new(LevymaPath(path))) };
        LevymaStatus::Ok
    }))
}

/// Number of observations; 0 on a null handle.
///
/// # Safety
/// `path` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn levyma_path_len(path: *const LevymaPath) -> usize {
    if path.is_null() {
        return 0;
    }
    unsafe { &*path }.0.observations.len()
}

/// Copy observations into `buf` (capacity `len` ≥ path length).
///
/// # Safety
/// `path` must be valid; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn levyma_path_copy_observations(
    path: *const LevymaPath,
    buf: *mut f64,
    len: usize,
) -> LevymaStatus {
    if path.is_null() || buf.is_null() {
        return LevymaStatus::NullPointer;
    }
    let obs = &unsafe { &*path }.0.observations;
    if len < obs.len() {
        return LevymaStatus::InvalidArgument;
    }
    unsafe { std::ptr::copy_nonoverlapping(obs.as_ptr(), buf, obs.len()) };
    LevymaStatus::Ok
}

/// # Safety
/// `path` must be null or a pointer from a levyma constructor.
#[no_mangle]
pub unsafe extern "C" fn levyma_path_free(path: *mut LevymaPath) {
    if !path.is_null() {
        drop(unsafe { Box::from_raw(path) });
    }
}

/// Estimator variants for [`levyma_estimate`].
pub const LEVYMA_VARIANT_SECOND: u32 = 0;
pub const LEVYMA_VARIANT_FIRST: u32 = 1;
pub const LEVYMA_VARIANT_FIRST_STABILIZED: u32 = 2;

/// Run the full estimation pipeline on `n_x` grid points.
///
/// `k_points == 0` picks the default ceil(200·V). When `estimate_sigma2` is
/// nonzero, `sigma2` is ignored and estimated from the data at scale
/// `sigma2_u`. When `lambda_known` is nonzero, `lambda` replaces the plug-in
/// intensity in the stabilized completion term.
///
/// # Safety
/// `path`, `kernel`, `xs` (length `n_x`) and `out` must be valid pointers.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn levyma_estimate(
    path: *const LevymaPath,
    kernel: *const LevymaKernel,
    variant: u32,
    c: f64,
    u_max: f64,
    v_max: f64,
    k_points: usize,
    sigma2: f64,
    estimate_sigma2: bool,
    sigma2_u: f64,
    lambda_known: bool,
    lambda: f64,
    xs: *const f64,
    n_x: usize,
    out: *mut *mut LevymaDensity,
) -> LevymaStatus {
    if path.is_null() || kernel.is_null() || xs.is_null() || out.is_null() {
        return LevymaStatus::NullPointer;
    }
    if n_x == 0 {
        return LevymaStatus::InvalidArgument;
    }
    guard(AssertUnwindSafe(move || {
        let variant = match variant {
            LEVYMA_VARIANT_SECOND => Variant::SecondDerivative,
            LEVYMA_VARIANT_FIRST => Variant::FirstDerivative,
            LEVYMA_VARIANT_FIRST_STABILIZED => Variant::FirstDerivativeStabilized,
            _ => return LevymaStatus::InvalidArgument,
        };
        let cfg = EstimatorConfig {
            variant,
            c,
            u_max,
            v_max,
            k_points: if k_points == 0 { None } else { Some(k_points) },
            sigma2: if estimate_sigma2 {
                Sigma2Mode::Estimate { u_n: sigma2_u }
            } else {
                Sigma2Mode::Known(sigma2)
            },
            lambda: if lambda_known { LambdaMode::Known(lambda) } else { LambdaMode::PlugIn },
            forward_nodes: levyma::mellin::DEFAULT_FORWARD_NODES,
        };
        let xs = unsafe { std::slice::from_raw_parts(xs, n_x) };
        let p = &unsafe { &*path }.0;
        let k = &unsafe { &*kernel }.0;
        match estimate_levy_density(p, k, &cfg, xs) {
            Ok(est) => {
                unsafe {
                    *out = Box::into_raw(Box::new(LevymaDensity {
                        xs: est.xs,
                        values: est.values,
                    }))
                };
                LevymaStatus::Ok
            }
            Err(_) => LevymaStatus::NumericalError,
        }
    }))
}

/// Number of grid points in a density estimate; 0 on null.
///
/// # Safety
/// `density` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn levyma_density_len(density: *const LevymaDensity) -> usize {
    if density.is_null() {
        return 0;
    }
    unsafe { &*density }.values.len()
}

/// Copy the x grid and estimated values (each of the estimate's length).
///
/// # Safety
/// Buffers must hold `len` writable doubles each; null buffers are skipped.
#[no_mangle]
pub unsafe extern "C" fn levyma_density_copy(
    density: *const LevymaDensity,
    xs: *mut f64,
    values: *mut f64,
    len: usize,
) -> LevymaStatus {
    if density.is_null() {
        return LevymaStatus::NullPointer;
    }
    let d = unsafe { &*density };
    if len < d.values.len() {
        return LevymaStatus::InvalidArgument;
    }
    if !xs.is_null() {
        unsafe { std::ptr::copy_nonoverlapping(d.xs.as_ptr(), xs, d.xs.len()) };
    }
    if !values.is_null() {
        unsafe { std::ptr::copy_nonoverlapping(d.values.as_ptr(), values, d.values.len()) };
    }
    LevymaStatus::Ok
}

/// # Safety
/// `density` must be null or a pointer from `levyma_estimate`.
#[no_mangle]
pub unsafe extern "C" fn levyma_density_free(density: *mut LevymaDensity) {
    if !density.is_null() {
        drop(unsafe { Box::from_raw(density) });
    }
}
