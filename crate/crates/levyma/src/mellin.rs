//! Mellin deconvolution machinery: forward Mellin estimates of Ψ_σ'' and Ψ',
//! the Q and Q̃ multipliers, the σ² estimator, and the regularized inverse
//! Mellin reconstruction of ν̄ and ν.
//!
//! Forward transforms integrate over (0, U] against u^{-z}, z = c + iv. The
//! substitution u = U·t^{1/(1-c)} absorbs the u^{-c} endpoint singularity:
//!   ∫₀^U f(u) u^{-z} du = U^{1-z}·m·∫₀¹ f(U t^m) t^{-ivm} dt,  m = 1/(1-c),
//! and the t-integral is done with composite Gauss–Legendre nodes shared by
//! every v on the line.
//!
//! The inverse transform is the Riemann sum over the stored symmetric grid
//! v_k = -V + (k-1/2)δ, δ = 2V/K:
//!   ν̄̂(x) = (δ/2π)   Σ_k Re{ [line_k / Q(1-c-iv_k)] x^{-(c+iv_k)} }   (second)
//!   ν̂(x)  = (δ/2πx) Σ_k Re{ [line_k / Q̃(1-c-iv_k)] x^{-(c+iv_k)} }   (first)

use crate::ecf::{CharFnSource, EcfError, PathEcf};
use crate::kernels::{KernelError, KernelFn, KernelSpec};
use crate::quad::gauss_legendre;
use crate::simulate::SamplePath;
use crate::special::{gamma, real_pow_neg, SpecialError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MellinError {
    #[error("parameter outside domain: {0}")]
    Domain(String),
    #[error("Q factor vanishes at 1 - c - iv with v = {v}")]
    QVanishes { v: f64 },
    #[error(transparent)]
    Ecf(#[from] EcfError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Which log-CF derivative the line estimates, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// M_n[Ψ_σ''](1-z); reconstructs ν̄ = x²ν through Q.
    SecondDerivative,
    /// M_n[Ψ'](1-z), plain; reconstructs ν through Q̃.
    FirstDerivative,
    /// M_n[Ψ'](1-z) with the oscillation-subtracted integrand and the
    /// Γ-completion term.
    FirstDerivativeStabilized,
}

impl Variant {
    pub fn target(self) -> DensityTarget {
        match self {
            Variant::SecondDerivative => DensityTarget::NuBar,
            _ => DensityTarget::Nu,
        }
    }
}

/// λ for the stabilizer's completion term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    /// λ̂ = mean(Z)/‖K‖_{L¹}.
    PlugIn,
    /// Supplied intensity instead of the plug-in moment.
    Known(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstMode {
    Plain,
    Stabilized(LambdaMode),
}

/// Values of a Mellin transform on the vertical line c + iv over the
/// symmetric midpoint grid on [-V, V].
#[derive(Debug, Clone)]
pub struct MellinLineEstimate {
    pub c: f64,
    pub v_max: f64,
    pub grid: Vec<f64>,
    pub delta_v: f64,
    pub values: Vec<Complex64>,
    pub variant: Variant,
}

impl MellinLineEstimate {
    pub fn new(
        c: f64,
        v_max: f64,
        k_points: usize,
        values: Vec<Complex64>,
        variant: Variant,
    ) -> Result<Self, MellinError> {
        if k_points < 2 {
            return Err(MellinError::Domain(format!("need K ≥ 2 grid points, got {k_points}")));
        }
        let (grid, delta_v) = v_grid(v_max, k_points);
        if values.len() != grid.len() {
            return Err(MellinError::Domain("values/grid length mismatch".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(MellinError::Domain("non-finite line value".into()));
        }
        Ok(Self { c, v_max, grid, delta_v, values, variant })
    }
}

/// Symmetric midpoint grid v_k = -V + (k - 1/2)·δ, δ = 2V/K, k = 1..K.
pub fn v_grid(v_max: f64, k_points: usize) -> (Vec<f64>, f64) {
    let delta = 2.0 * v_max / k_points as f64;
    let grid = (1..=k_points).map(|k| -v_max + (k as f64 - 0.5) * delta).collect();
    (grid, delta)
}

/// Q(z) = -Γ(z) e^{iπz/2} ∫K(x)^{2-z} dx.
///
/// The deconvolution lives on Re z ∈ (0,1); the closed form extends to
/// Re z ∈ (0,2) and the endpoint z → 1 is used by tests.
pub fn q_factor<K: KernelFn>(kernel: &K, z: Complex64) -> Result<Complex64, MellinError> {
    if z.re <= 0.0 || z.re >= 2.0 {
        return Err(MellinError::Domain(format!("q_factor needs Re z ∈ (0,2), got {}", z.re)));
    }
    let i = Complex64::new(0.0, 1.0);
    let g = gamma(z)?;
    let phase = (i * std::f64::consts::FRAC_PI_2 * z).exp();
    let integral = kernel.integral_pow(Complex64::new(2.0, 0.0) - z)?;
    Ok(-g * phase * integral)
}

/// Q̃(z) = i Γ(z) e^{iπz/2} ∫K(x)^{1-z} dx, Re z ∈ (0,1).
pub fn q_tilde_factor<K: KernelFn>(kernel: &K, z: Complex64) -> Result<Complex64, MellinError> {
    if z.re <= 0.0 || z.re >= 1.0 {
        return Err(MellinError::Domain(format!("q_tilde needs Re z ∈ (0,1), got {}", z.re)));
    }
    let i = Complex64::new(0.0, 1.0);
    let g = gamma(z)?;
    let phase = (i * std::f64::consts::FRAC_PI_2 * z).exp();
    let integral = kernel.integral_pow(Complex64::new(1.0, 0.0) - z)?;
    Ok(i * g * phase * integral)
}

/// Shared quadrature nodes for ∫₀^U f(u) u^{-(c+iv)} du at every v on a line.
///
/// Layout of the substituted \[0,1\] interval: an analytic head segment
/// [0, t₀] where f is frozen at one node and ∫ t^{-ivm} dt is integrated in
/// closed form (the factor oscillates in ln t without bound there), geometric
/// octave panels on [t₀, 1/8], and uniform panels on [1/8, 1] sized so each
/// carries at most ~10 radians of the e^{iu}-scale phase at u_max.
#[derive(Debug, Clone)]
pub struct ForwardPlan {
    pub c: f64,
    pub u_max: f64,
    m: f64,
    t_head: f64,
    /// (u node, weight, ln t); the first entry is the head node with weight 0
    /// (its contribution is added analytically).
    nodes: Vec<(f64, f64, f64)>,
}

pub const DEFAULT_FORWARD_NODES: usize = 256;

const HEAD_OCTAVES: i32 = 18;
const GL_ORDER: usize = 16;

impl ForwardPlan {
    pub fn new(c: f64, u_max: f64, n_nodes: usize) -> Result<Self, MellinError> {
        if !(c > 0.0 && c < 1.0) {
            return Err(MellinError::Domain(format!("c must be in (0,1), got {c}")));
        }
        if !(u_max > 0.0 && u_max.is_finite()) {
            return Err(MellinError::Domain(format!("U must be > 0, got {u_max}")));
        }
        let (gx, gw) = gauss_legendre(GL_ORDER);
        let m = 1.0 / (1.0 - c);
        let t_head = 2.0f64.powi(-HEAD_OCTAVES);
        let mut edges: Vec<f64> = (3..=HEAD_OCTAVES).rev().map(|k| 2.0f64.powi(-k)).collect();
        let top_panels =
            ((n_nodes / GL_ORDER).saturating_sub(edges.len())).max(8).max((u_max / 8.0).ceil() as usize);
        for p in 1..=top_panels {
            edges.push(0.125 + 0.875 * p as f64 / top_panels as f64);
        }
        let mut nodes = Vec::with_capacity(edges.len() * GL_ORDER + 1);
        // Head node: f frozen at u(t_head/2); analytic weight applied per v.
        let t_c = 0.5 * t_head;
        nodes.push((u_max * t_c.powf(m), 0.0, t_c.ln()));
        let mut a = t_head;
        for &b in &edges {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in gx.iter().zip(&gw) {
                let t = mid + half * x;
                nodes.push((u_max * t.powf(m), w * half, t.ln()));
            }
            a = b;
        }
        Ok(Self { c, u_max, m, t_head, nodes })
    }

    pub fn u_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(|n| n.0)
    }

    /// ∫₀^U f(u) u^{-(c+iv)} du from integrand samples at the plan's nodes.
    pub fn integrate(&self, f: &[Complex64], v: f64) -> Complex64 {
        assert_eq!(f.len(), self.nodes.len());
        let beta = v * self.m;
        // Head: f(u₀)·∫₀^{t₀} t^{-iβ} dt = f(u₀)·t₀^{1-iβ}/(1-iβ).
        let one_minus_ib = Complex64::new(1.0, -beta);
        let (s0, c0) = (-beta * self.t_head.ln()).sin_cos();
        let mut acc = f[0] * self.t_head * Complex64::new(c0, s0) / one_minus_ib;
        for ((_, w, ln_t), fq) in self.nodes.iter().zip(f).skip(1) {
            // t^{-ivm} = e^{-i v m ln t}
            let (s, c) = (-beta * ln_t).sin_cos();
            acc += *w * fq * Complex64::new(c, s);
        }
        // U^{1-z} m, z = c + iv
        let scale = self.u_max.powf(1.0 - self.c) * self.m;
        let (s, c) = (-v * self.u_max.ln()).sin_cos();
        acc * scale * Complex64::new(c, s)
    }
}

/// M_n[Ψ_σ''](1-(c+iv)) at each requested v:
/// ∫₀^U [Φ''/Φ − (Φ'/Φ)² + σ²‖K‖²] u^{-z} du.
#[allow(clippy::too_many_arguments)]
pub fn forward_mellin_second_at<S: CharFnSource, K: KernelFn>(
    source: &S,
    kernel: &K,
    sigma2: f64,
    c: f64,
    u_max: f64,
    vs: &[f64],
    n_nodes: usize,
) -> Result<Vec<Complex64>, MellinError> {
    let plan = ForwardPlan::new(c, u_max, n_nodes)?;
    let s2k2 = sigma2 * kernel.l2_norm_sq();
    let mut f = Vec::with_capacity(plan.nodes.len());
    for u in plan.u_nodes() {
        let r = source.ratios(u)?;
        f.push(r.d2 - r.d1 * r.d1 + s2k2);
    }
    Ok(vs.iter().map(|&v| plan.integrate(&f, v)).collect())
}

/// M_n[Ψ_σ''](1-z) over the symmetric midpoint grid.
#[allow(clippy::too_many_arguments)]
pub fn forward_mellin_second<S: CharFnSource, K: KernelFn>(
    source: &S,
    kernel: &K,
    sigma2: f64,
    c: f64,
    u_max: f64,
    v_max: f64,
    k_points: usize,
    n_nodes: usize,
) -> Result<MellinLineEstimate, MellinError> {
    let (grid, _) = v_grid(v_max, k_points);
    let values = forward_mellin_second_at(source, kernel, sigma2, c, u_max, &grid, n_nodes)?;
    MellinLineEstimate::new(c, v_max, k_points, values, Variant::SecondDerivative)
}

/// M_n[Ψ'](1-(c+iv)) at each requested v.
///
/// Plain: `i∫₀^U [mean(Z e^{iuZ})/mean(e^{iuZ})] u^{-z} du = ∫₀^U Ψₙ'(u) u^{-z} du`.
/// Stabilized: subtract mean(Z)e^{iu} inside and add 2iλ̂Γ(1-z)e^{iπ(1-z)/2},
/// the completed Mellin transform of the subtracted term.
#[allow(clippy::too_many_arguments)]
pub fn forward_mellin_first_at<S: CharFnSource>(
    source: &S,
    kernel_l1: f64,
    c: f64,
    u_max: f64,
    vs: &[f64],
    n_nodes: usize,
    mode: FirstMode,
) -> Result<Vec<Complex64>, MellinError> {
    let plan = ForwardPlan::new(c, u_max, n_nodes)?;
    let i = Complex64::new(0.0, 1.0);
    let mean_z = source.mean_z();
    let (stabilized, lambda_hat) = match mode {
        FirstMode::Plain => (false, 0.0),
        FirstMode::Stabilized(LambdaMode::PlugIn) => (true, mean_z / kernel_l1),
        FirstMode::Stabilized(LambdaMode::Known(l)) => (true, l),
    };
    let mut f = Vec::with_capacity(plan.u_nodes().count());
    for u in plan.u_nodes() {
        let r = source.ratios(u)?;
        // i·[ratio − mean(Z)e^{iu}] with ratio = −iΨ' gives Ψ' − i·mean(Z)e^{iu}.
        let mut val = r.d1;
        if stabilized {
            let (s, cc) = u.sin_cos();
            val -= i * mean_z * Complex64::new(cc, s);
        }
        f.push(val);
    }
    let mut values = Vec::with_capacity(vs.len());
    for &v in vs {
        let mut val = plan.integrate(&f, v);
        if stabilized {
            let one_minus_z = Complex64::new(1.0 - c, -v);
            let completion = 2.0
                * i
                * lambda_hat
                * gamma(one_minus_z)?
                * (i * std::f64::consts::FRAC_PI_2 * one_minus_z).exp();
            val += completion;
        }
        values.push(val);
    }
    Ok(values)
}

/// M_n[Ψ'](1-z) over the symmetric midpoint grid.
#[allow(clippy::too_many_arguments)]
pub fn forward_mellin_first<S: CharFnSource>(
    source: &S,
    kernel_l1: f64,
    c: f64,
    u_max: f64,
    v_max: f64,
    k_points: usize,
    n_nodes: usize,
    mode: FirstMode,
) -> Result<MellinLineEstimate, MellinError> {
    let (grid, _) = v_grid(v_max, k_points);
    let values = forward_mellin_first_at(source, kernel_l1, c, u_max, &grid, n_nodes, mode)?;
    let variant = match mode {
        FirstMode::Plain => Variant::FirstDerivative,
        FirstMode::Stabilized(_) => Variant::FirstDerivativeStabilized,
    };
    MellinLineEstimate::new(c, v_max, k_points, values, variant)
}

/// `σ̂² = −(1/‖K‖²) Re ∫ w_n(u)[Φ''/Φ − (Φ'/Φ)²] du` with w_n(u) = w(u/U)/U,
/// supp(w) ⊆ \[1,2\], ∫w = 1; the integral runs over \[U, 2U\].
pub fn estimate_sigma2<S: CharFnSource, K: KernelFn, W: Fn(f64) -> f64>(
    source: &S,
    kernel: &K,
    weight: W,
    u_n: f64,
) -> Result<f64, MellinError> {
    if !(u_n > 0.0 && u_n.is_finite()) {
        return Err(MellinError::Domain(format!("sigma2 estimator needs U > 0, got {u_n}")));
    }
    let (gx, gw) = gauss_legendre(64);
    let a = u_n;
    let b = 2.0 * u_n;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in gx.iter().zip(&gw) {
        let u = mid + half * x;
        let r = source.ratios(u)?;
        let psi2 = r.d2 - r.d1 * r.d1;
        acc += w * weight(u / u_n) / u_n * psi2.re;
    }
    acc *= half;
    Ok(-acc / kernel.l2_norm_sq())
}

/// Uniform weight on \[1, 2\]: bounded, supported in \[1,2\], unit mass.
pub fn uniform_weight(x: f64) -> f64 {
    if (1.0..=2.0).contains(&x) {
        1.0
    } else {
        0.0
    }
}

/// What a density estimate approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityTarget {
    /// ν̄(x) = x²ν(x).
    NuBar,
    /// ν(x).
    Nu,
}

/// Tuning parameters a density estimate was produced with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateInfo {
    pub variant: Variant,
    pub c: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub k_points: usize,
    pub sigma2: f64,
    pub sigma2_estimated: bool,
    pub lambda_hat: Option<f64>,
    pub n: usize,
    pub delta: f64,
    pub kernel: Option<KernelSpec>,
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub target: DensityTarget,
    pub info: Option<EstimateInfo>,
}

impl DensityEstimate {
    /// Convert a ν̄ estimate into a ν estimate via ν = ν̄/x².
    pub fn to_nu(&self) -> DensityEstimate {
        match self.target {
            DensityTarget::Nu => self.clone(),
            DensityTarget::NuBar => DensityEstimate {
                xs: self.xs.clone(),
                values: self
                    .xs
                    .iter()
                    .zip(&self.values)
                    .map(|(x, v)| v / (x * x))
                    .collect(),
                target: DensityTarget::Nu,
                info: self.info.clone(),
            },
        }
    }
}

/// Regularized inverse Mellin transform of a line estimate on an x-grid.
pub fn inverse_mellin<K: KernelFn>(
    line: &MellinLineEstimate,
    kernel: &K,
    xs: &[f64],
) -> Result<DensityEstimate, MellinError> {
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(MellinError::Domain("x grid must be strictly positive".into()));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MellinError::Domain("x grid must be strictly increasing".into()));
    }
    let c = line.c;
    // line_k / Q(1-c-iv_k) (or Q̃), fixed per grid point.
    let mut ratios = Vec::with_capacity(line.grid.len());
    for (&v, &val) in line.grid.iter().zip(&line.values) {
        let arg = Complex64::new(1.0 - c, -v);
        let q = match line.variant {
            Variant::SecondDerivative => q_factor(kernel, arg)?,
            _ => q_tilde_factor(kernel, arg)?,
        };
        // |Q(1-c-iv)| decays like e^{-π|v|} on one half-line, so only a
        // near-denormal threshold flags a genuinely vanishing multiplier.
        if q.norm() < 1e-300 {
            return Err(MellinError::QVanishes { v });
        }
        ratios.push(val / q);
    }
    let scale = line.delta_v / (2.0 * std::f64::consts::PI);
    let per_x_pow = match line.variant {
        Variant::SecondDerivative => 0,
        _ => 1,
    };
    let values = xs
        .iter()
        .map(|&x| {
            let mut acc = 0.0;
            for (&v, g) in line.grid.iter().zip(&ratios) {
                acc += (g * real_pow_neg(x, Complex64::new(c, v))).re;
            }
            scale * acc / x.powi(per_x_pow)
        })
        .collect();
    Ok(DensityEstimate { xs: xs.to_vec(), values, target: line.variant.target(), info: None })
}

/// How σ² enters the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sigma2Mode {
    Known(f64),
    /// Estimate from the data with the uniform \[1,2\] weight at scale U.
    Estimate { u_n: f64 },
}

/// Full estimator configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub variant: Variant,
    pub c: f64,
    pub u_max: f64,
    pub v_max: f64,
    /// Number of v-grid points; defaults to ceil(200·V).
    pub k_points: Option<usize>,
    pub sigma2: Sigma2Mode,
    #[serde(default = "default_lambda_mode")]
    pub lambda: LambdaMode,
    #[serde(default = "default_forward_nodes")]
    pub forward_nodes: usize,
}

fn default_lambda_mode() -> LambdaMode {
    LambdaMode::PlugIn
}

fn default_forward_nodes() -> usize {
    DEFAULT_FORWARD_NODES
}

impl EstimatorConfig {
    pub fn resolved_k_points(&self) -> usize {
        self.k_points.unwrap_or_else(|| (200.0 * self.v_max).ceil() as usize)
    }
}

/// Pipeline ecf → forward Mellin → inverse Mellin.
pub fn estimate_levy_density<K: KernelFn>(
    path: &SamplePath,
    kernel: &K,
    cfg: &EstimatorConfig,
    xs: &[f64],
) -> Result<DensityEstimate, MellinError> {
    let source = PathEcf::new(&path.observations)?;
    let k_points = cfg.resolved_k_points();
    let (sigma2, sigma2_estimated) = match cfg.sigma2 {
        Sigma2Mode::Known(v) => (v, false),
        Sigma2Mode::Estimate { u_n } => {
            (estimate_sigma2(&source, kernel, uniform_weight, u_n)?, true)
        }
    };
    let line = match cfg.variant {
        Variant::SecondDerivative => forward_mellin_second(
            &source,
            kernel,
            sigma2,
            cfg.c,
            cfg.u_max,
            cfg.v_max,
            k_points,
            cfg.forward_nodes,
        )?,
        Variant::FirstDerivative => forward_mellin_first(
            &source,
            kernel.l1_norm(),
            cfg.c,
            cfg.u_max,
            cfg.v_max,
            k_points,
            cfg.forward_nodes,
            FirstMode::Plain,
        )?,
        Variant::FirstDerivativeStabilized => forward_mellin_first(
            &source,
            kernel.l1_norm(),
            cfg.c,
            cfg.u_max,
            cfg.v_max,
            k_points,
            cfg.forward_nodes,
            FirstMode::Stabilized(cfg.lambda),
        )?,
    };
    let lambda_hat = match (cfg.variant, cfg.lambda) {
        (Variant::FirstDerivativeStabilized, LambdaMode::PlugIn) => {
            Some(source.mean_z() / kernel.l1_norm())
        }
        (Variant::FirstDerivativeStabilized, LambdaMode::Known(l)) => Some(l),
        _ => None,
    };
    let mut est = inverse_mellin(&line, kernel, xs)?;
    est.info = Some(EstimateInfo {
        variant: cfg.variant,
        c: cfg.c,
        u_max: cfg.u_max,
        v_max: cfg.v_max,
        k_points,
        sigma2,
        sigma2_estimated,
        lambda_hat,
        n: path.observations.len(),
        delta: path.delta,
        kernel: kernel.describe(),
    });
    Ok(est)
}

/// Analytic `M[Ψ'](1-z)` for the exponential model with K = e^{-|x|}:
/// 2iλ Γ(1-z) Γ(1+z) e^{iπ(1-z)/2} / z. Shared by tests and diagnostics.
pub fn exp_model_mellin_psi_d1(lambda: f64, z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let one_minus_z = Complex64::new(1.0, 0.0) - z;
    2.0 * i
        * lambda
        * gamma(one_minus_z).unwrap()
        * gamma(z + 1.0).unwrap()
        * (i * std::f64::consts::FRAC_PI_2 * one_minus_z).exp()
        / z
}
