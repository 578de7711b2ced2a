//! Path generation for Z_t = ∫K(t−s) dL_s with a two-sided compound-Poisson
//! driver (standard-exponential marks) plus an optional Gaussian component.
//!
//! Both jump series are truncated at x_max = the largest x with K(x) > α.
//! Writing s⁽¹⁾ for jump times of the positive-time process and s⁽²⁾ for the
//! negative-time one,
//!   Z̃_t = Σ_{max(0,t-x_max) < s⁽¹⁾ < t+x_max} K(t-s⁽¹⁾)ξ⁽¹⁾
//!        − Σ_{0 < s⁽²⁾ < max(0,-t+x_max)}     K(t+s⁽²⁾)ξ⁽²⁾ .
//! Jump times come from exponential inter-arrival accumulation over the
//! widened windows, so each jump is generated once and shrinking α only
//! appends jumps (nested truncation).
//!
//! RNG streams (ChaCha12, one generator per stream, all seeded from the path
//! seed): 1 = positive-side jump times, 2 = negative-side jump times,
//! 3 = marks, 4 = Gaussian component.

use crate::kernels::{GammaExpKernel, KernelError, KernelFn, KernelSpec, Sidedness};
use crate::levy::{JumpDensity, LevyTriplet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("jump family not simulable: {0}")]
    UnsupportedFamily(String),
    #[error("Gaussian covariance is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed path CSV at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// What produced a path; carried for provenance headers and estimators.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PathProvenance {
    pub lambda: f64,
    pub sigma2: f64,
    pub drift: f64,
    pub kernel: KernelSpec,
    pub alpha: f64,
    pub x_max: f64,
}

/// Equidistant observations Z_Δ, …, Z_{nΔ}.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub delta: f64,
    pub observations: Vec<f64>,
    pub seed: u64,
    pub provenance: Option<PathProvenance>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn mean(&self) -> f64 {
        crate::quad::pairwise_sum(&self.observations) / self.observations.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let sq: Vec<f64> = self.observations.iter().map(|z| (z - m) * (z - m)).collect();
        crate::quad::pairwise_sum(&sq) / (self.observations.len() as f64 - 1.0)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_exp<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    // Inverse CDF on (0, 1]; never ln(0).
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Poisson arrivals on (0, horizon) by inter-arrival accumulation.
fn poisson_times<R: Rng>(rng: &mut R, rate: f64, horizon: f64) -> Vec<f64> {
    let mut times = Vec::new();
    if rate <= 0.0 || horizon <= 0.0 {
        return times;
    }
    let mut s = draw_exp(rng, rate);
    while s < horizon {
        times.push(s);
        s += draw_exp(rng, rate);
    }
    times
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; one value per call keeps the stream layout simple.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// In-place lower Cholesky of a symmetric matrix stored row-major.
fn cholesky(a: &mut [f64], n: usize) -> Result<(), SimulateError> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return Err(SimulateError::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Simulate with x_max derived from the kernel truncation level α.
pub fn simulate_path(
    model: &LevyTriplet,
    kernel: &GammaExpKernel,
    delta: f64,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<SamplePath, SimulateError> {
    let x_max = kernel.truncation_radius(alpha)?;
    simulate_path_with_x_max(model, kernel, delta, n, alpha, x_max, seed)
}

/// Simulate with an explicit truncation radius (config override hook).
pub fn simulate_path_with_x_max(
    model: &LevyTriplet,
    kernel: &GammaExpKernel,
    delta: f64,
    n: usize,
    alpha: f64,
    x_max: f64,
    seed: u64,
) -> Result<SamplePath, SimulateError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(SimulateError::InvalidParameter(format!("delta = {delta}")));
    }
    if n == 0 {
        return Err(SimulateError::InvalidParameter("n must be ≥ 1".into()));
    }
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(SimulateError::InvalidParameter(format!("x_max = {x_max}")));
    }
    let lambda = match model.jumps {
        JumpDensity::None => 0.0,
        JumpDensity::ExponentialCpp { intensity } => {
            if !(intensity >= 0.0 && intensity.is_finite()) {
                return Err(SimulateError::InvalidParameter(format!("lambda = {intensity}")));
            }
            intensity
        }
        JumpDensity::TemperedStable { .. } => {
            return Err(SimulateError::UnsupportedFamily(
                "tempered-stable path generation is not provided; transforms only".into(),
            ))
        }
    };
    if !(model.sigma2 >= 0.0 && model.sigma2.is_finite()) {
        return Err(SimulateError::InvalidParameter(format!("sigma2 = {}", model.sigma2)));
    }

    let horizon = n as f64 * delta + x_max;
    let mut times_pos = stream_rng(seed, 1);
    let mut times_neg = stream_rng(seed, 2);
    let mut marks = stream_rng(seed, 3);

    let s1 = poisson_times(&mut times_pos, lambda, horizon);
    let s2 = poisson_times(&mut times_neg, lambda, x_max);
    let xi1: Vec<f64> = s1.iter().map(|_| draw_exp(&mut marks, 1.0)).collect();
    let xi2: Vec<f64> = s2.iter().map(|_| draw_exp(&mut marks, 1.0)).collect();

    let mut obs = vec![0.0; n];

    // Positive-side sum: jump at s hits observations with max(0, t-x_max) < s < t+x_max.
    for (s, xi) in s1.iter().zip(&xi1) {
        let k_lo = (((s - x_max) / delta).floor() as i64 + 1).max(1);
        let k_hi = (((s + x_max) / delta).ceil() as i64 - 1).min(n as i64);
        let mut k = k_lo;
        while k <= k_hi {
            let t = k as f64 * delta;
            obs[(k - 1) as usize] += kernel.eval(t - s) * xi;
            k += 1;
        }
    }
    // Negative-side sum enters with a minus sign and only affects t < x_max - s.
    for (s, xi) in s2.iter().zip(&xi2) {
        let mut k = 1i64;
        while (k as f64) * delta < x_max - s && k <= n as i64 {
            let t = k as f64 * delta;
            obs[(k - 1) as usize] -= kernel.eval(t + s) * xi;
            k += 1;
        }
    }

    // Deterministic drift contribution: γ ∫K.
    if model.drift != 0.0 {
        let shift = model.drift * kernel.l1_norm();
        for z in &mut obs {
            *z += shift;
        }
    }

    // Gaussian component, sampled exactly from the stationary law via the
    // Cholesky factor of σ²(K⋆K)(Δ(j-k)).
    if model.sigma2 > 0.0 {
        if kernel.sidedness() != Sidedness::TwoSided {
            return Err(SimulateError::Kernel(KernelError::UnsupportedSidedness));
        }
        let mut gauss = stream_rng(seed, 4);
        let mut cov = vec![0.0; n * n];
        let mut row0 = vec![0.0; n];
        for (j, r) in row0.iter_mut().enumerate() {
            *r = model.sigma2 * kernel.autoconvolution(j as f64 * delta)?;
        }
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] = row0[i.abs_diff(j)];
            }
        }
        cholesky(&mut cov, n)?;
        let g: Vec<f64> = (0..n).map(|_| standard_normal(&mut gauss)).collect();
        for i in 0..n {
            let mut acc = 0.0;
            for (k, gk) in g.iter().enumerate().take(i + 1) {
                acc += cov[i * n + k] * gk;
            }
            obs[i] += acc;
        }
    }

    for (i, z) in obs.iter().enumerate() {
        if !z.is_finite() {
            return Err(SimulateError::InvalidParameter(format!(
                "non-finite observation at index {i}"
            )));
        }
    }

    Ok(SamplePath {
        delta,
        observations: obs,
        seed,
        provenance: Some(PathProvenance {
            lambda,
            sigma2: model.sigma2,
            drift: model.drift,
            kernel: kernel.spec(),
            alpha,
            x_max,
        }),
    })
}

/// Write a path as CSV (`k,t,z`, 17 significant digits).
pub fn export_path<W: Write>(path: &SamplePath, out: &mut W) -> Result<(), SimulateError> {
    writeln!(out, "k,t,z")?;
    for (i, z) in path.observations.iter().enumerate() {
        let k = i + 1;
        writeln!(out, "{},{:.16e},{:.16e}", k, k as f64 * path.delta, z)?;
    }
    Ok(())
}

/// Read a path written by [`export_path`]; comment lines (`#`) are skipped
/// and the grid spacing is recovered from the `t` column.
pub fn read_path<R: BufRead>(input: R) -> Result<SamplePath, SimulateError> {
    let mut delta = None;
    let mut obs = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "k,t,z" {
                return Err(SimulateError::Parse {
                    line: lineno + 1,
                    reason: format!("expected header 'k,t,z', got '{trimmed}'"),
                });
            }
            saw_header = true;
            continue;
        }
        let mut parts = trimmed.split(',');
        let parse = |s: Option<&str>, what: &str| -> Result<f64, SimulateError> {
            s.ok_or_else(|| SimulateError::Parse {
                line: lineno + 1,
                reason: format!("missing {what} column"),
            })?
            .trim()
            .parse::<f64>()
            .map_err(|e| SimulateError::Parse { line: lineno + 1, reason: e.to_string() })
        };
        let k = parse(parts.next(), "k")?;
        let t = parse(parts.next(), "t")?;
        let z = parse(parts.next(), "z")?;
        if k >= 1.0 && delta.is_none() {
            delta = Some(t / k);
        }
        if let Some(d) = delta {
            let expect = k * d;
            if (t - expect).abs() > 1e-9 * expect.abs().max(1.0) {
                return Err(SimulateError::Parse {
                    line: lineno + 1,
                    reason: format!("non-equidistant grid: t = {t}, expected {expect}"),
                });
            }
        }
        obs.push(z);
    }
    if obs.is_empty() {
        return Err(SimulateError::Parse { line: 0, reason: "no observations".into() });
    }
    Ok(SamplePath { delta: delta.unwrap_or(1.0), observations: obs, seed: 0, provenance: None })
}
