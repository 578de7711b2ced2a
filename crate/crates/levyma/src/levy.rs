//! Driving Lévy process models: triplet, characteristic exponent ψ and its
//! derivatives, the kernel-integrated exponent Ψ(u) = ∫ψ(uK(s))ds, and the
//! analytic Mellin/Fourier transforms of the weighted jump densities used as
//! estimator targets and test oracles.
//!
//! Conventions. ν̄(x) := x²ν(x) throughout. For finite-activity families the
//! exponent is kept uncompensated, ψ(u) = iuγ − σ²u²/2 + ∫(e^{iux} − 1)ν(dx),
//! with γ the genuine drift; the second-derivative estimator is invariant to
//! the truncation convention. Two weighted Mellin transforms appear:
//!   `M[ν̄](z)  = M[x²ν](z)`   (target of the second-derivative machinery),
//!   `M[xν](z)`                (target of the first-derivative variant)
//! (for the exponential family: λΓ(z+2) and λΓ(z+1) respectively).

use crate::ecf::{CfRatios, CharFnSource, EcfError};
use crate::kernels::KernelFn;
use crate::quad::AdaptiveQuad;
use crate::special::{complex_pow, gamma};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("argument outside the analyticity strip: {0}")]
    OutsideStrip(String),
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] crate::quad::QuadError),
    #[error(transparent)]
    Special(#[from] crate::special::SpecialError),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
}

/// Jump density families with known transforms. Support is the nonnegative
/// half-line for every family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum JumpDensity {
    /// No jump part.
    None,
    /// Compound Poisson with ν(x) = λ e^{-x}, x ≥ 0 (standard-exponential marks).
    ExponentialCpp { intensity: f64 },
    /// Tempered stable with ν(x) = x^{-η-1} e^{-λx}, η ∈ (0,1). Transforms
    /// only; path generation for this family is out of scope.
    TemperedStable { eta: f64, lambda: f64 },
}

impl JumpDensity {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            JumpDensity::None => Ok(()),
            JumpDensity::ExponentialCpp { intensity } => {
                if intensity >= 0.0 && intensity.is_finite() {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter(format!("intensity = {intensity}")))
                }
            }
            JumpDensity::TemperedStable { eta, lambda } => {
                if eta > 0.0 && eta < 1.0 && lambda > 0.0 {
                    Ok(())
                } else {
                    Err(ModelError::InvalidParameter(format!("eta = {eta}, lambda = {lambda}")))
                }
            }
        }
    }

    /// ν(x), x ≥ 0.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            JumpDensity::None => 0.0,
            JumpDensity::ExponentialCpp { intensity } => intensity * (-x).exp(),
            JumpDensity::TemperedStable { eta, lambda } => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    x.powf(-eta - 1.0) * (-lambda * x).exp()
                }
            }
        }
    }

    /// ν̄(x) = x²ν(x).
    pub fn weighted_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        x * x * self.density(x)
    }

    /// ∫ x ν(x) dx.
    pub fn first_moment(&self) -> f64 {
        match *self {
            JumpDensity::None => 0.0,
            JumpDensity::ExponentialCpp { intensity } => intensity,
            JumpDensity::TemperedStable { eta, lambda } => {
                gamma(Complex64::new(1.0 - eta, 0.0)).unwrap().re * lambda.powf(eta - 1.0)
            }
        }
    }

    /// ∫ x² ν(x) dx.
    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpDensity::None => 0.0,
            JumpDensity::ExponentialCpp { intensity } => 2.0 * intensity,
            JumpDensity::TemperedStable { eta, lambda } => {
                gamma(Complex64::new(2.0 - eta, 0.0)).unwrap().re * lambda.powf(eta - 2.0)
            }
        }
    }

    /// `M[ν̄](z) = ∫₀^∞ x^{z-1} x²ν(x) dx` on the family's analyticity strip
    /// (exponential: Re z > -2; tempered stable: Re z > η - 1).
    pub fn mellin_nu_bar(&self, z: Complex64) -> Result<Complex64, ModelError> {
        match *self {
            JumpDensity::None => Ok(Complex64::default()),
            JumpDensity::ExponentialCpp { intensity } => {
                if z.re <= -2.0 {
                    return Err(ModelError::OutsideStrip(format!("Re z = {} ≤ -2", z.re)));
                }
                Ok(intensity * gamma(z + 2.0)?)
            }
            JumpDensity::TemperedStable { eta, lambda } => {
                if z.re <= eta - 1.0 {
                    return Err(ModelError::OutsideStrip(format!("Re z = {} ≤ η - 1", z.re)));
                }
                let g = gamma(z - eta + 1.0)?;
                let p = complex_pow(Complex64::new(lambda, 0.0), Complex64::new(eta, 0.0) - z - 1.0)?;
                Ok(g * p)
            }
        }
    }

    /// `M[xν](z) = ∫₀^∞ x^{z-1} xν(x) dx`, the weight the first-derivative
    /// estimator reconstructs (exponential: λΓ(1+z), Re z > -1).
    pub fn mellin_x_nu(&self, z: Complex64) -> Result<Complex64, ModelError> {
        match *self {
            JumpDensity::None => Ok(Complex64::default()),
            JumpDensity::ExponentialCpp { intensity } => {
                if z.re <= -1.0 {
                    return Err(ModelError::OutsideStrip(format!("Re z = {} ≤ -1", z.re)));
                }
                Ok(intensity * gamma(z + 1.0)?)
            }
            JumpDensity::TemperedStable { eta, lambda } => {
                if z.re <= eta {
                    return Err(ModelError::OutsideStrip(format!("Re z = {} ≤ η", z.re)));
                }
                let g = gamma(z - eta)?;
                let p = complex_pow(Complex64::new(lambda, 0.0), Complex64::new(eta, 0.0) - z)?;
                Ok(g * p)
            }
        }
    }

    /// `F[ν̄](u) = ∫₀^∞ e^{iux} x²ν(x) dx`.
    pub fn fourier_nu_bar(&self, u: f64) -> Complex64 {
        match *self {
            JumpDensity::None => Complex64::default(),
            JumpDensity::ExponentialCpp { intensity } => {
                let d = Complex64::new(1.0, -u);
                2.0 * intensity / (d * d * d)
            }
            JumpDensity::TemperedStable { eta, lambda } => {
                let g = gamma(Complex64::new(2.0 - eta, 0.0)).unwrap();
                let p = complex_pow(Complex64::new(lambda, -u), Complex64::new(eta - 2.0, 0.0))
                    .unwrap();
                g * p
            }
        }
    }
}

/// Lévy triplet (drift, diffusion, jump density) in the uncompensated
/// convention for finite-activity families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    #[serde(default)]
    pub drift: f64,
    pub sigma2: f64,
    pub jumps: JumpDensity,
}

impl LevyTriplet {
    pub fn new(drift: f64, sigma2: f64, jumps: JumpDensity) -> Result<Self, ModelError> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("sigma2 = {sigma2}")));
        }
        jumps.validate()?;
        Ok(Self { drift, sigma2, jumps })
    }

    pub fn exponential_cpp(intensity: f64, sigma2: f64) -> Result<Self, ModelError> {
        Self::new(0.0, sigma2, JumpDensity::ExponentialCpp { intensity })
    }

    fn check_strip(&self, u: Complex64) -> Result<(), ModelError> {
        match self.jumps {
            JumpDensity::None => Ok(()),
            JumpDensity::ExponentialCpp { .. } => {
                if u.im <= -1.0 {
                    Err(ModelError::OutsideStrip(format!("Im u = {} ≤ -1", u.im)))
                } else {
                    Ok(())
                }
            }
            JumpDensity::TemperedStable { lambda, .. } => {
                if u.im <= -lambda {
                    Err(ModelError::OutsideStrip(format!("Im u = {} ≤ -λ", u.im)))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// ψ(u) = iuγ − σ²u²/2 + ∫(e^{iux} − 1)ν(dx), closed form per family.
    pub fn psi(&self, u: Complex64) -> Result<Complex64, ModelError> {
        self.check_strip(u)?;
        let i = Complex64::new(0.0, 1.0);
        let base = i * u * self.drift - 0.5 * self.sigma2 * u * u;
        let jump = match self.jumps {
            JumpDensity::None => Complex64::default(),
            JumpDensity::ExponentialCpp { intensity } => {
                // λ[(1 - iu)^{-1} - 1]
                intensity * (1.0 / (Complex64::new(1.0, 0.0) - i * u) - 1.0)
            }
            JumpDensity::TemperedStable { eta, lambda } => {
                // Γ(-η)[(λ - iu)^η - λ^η]
                let g = gamma(Complex64::new(-eta, 0.0))?;
                let e = Complex64::new(eta, 0.0);
                g * (complex_pow(Complex64::new(lambda, 0.0) - i * u, e)?
                    - complex_pow(Complex64::new(lambda, 0.0), e)?)
            }
        };
        Ok(base + jump)
    }

    /// ψ'(u).
    pub fn psi_d1(&self, u: Complex64) -> Result<Complex64, ModelError> {
        self.check_strip(u)?;
        let i = Complex64::new(0.0, 1.0);
        let base = i * self.drift - self.sigma2 * u;
        let jump = match self.jumps {
            JumpDensity::None => Complex64::default(),
            JumpDensity::ExponentialCpp { intensity } => {
                let d = Complex64::new(1.0, 0.0) - i * u;
                i * intensity / (d * d)
            }
            JumpDensity::TemperedStable { eta, lambda } => {
                let g = gamma(Complex64::new(-eta, 0.0))?;
                let p = complex_pow(
                    Complex64::new(lambda, 0.0) - i * u,
                    Complex64::new(eta - 1.0, 0.0),
                )?;
                -i * eta * g * p
            }
        };
        Ok(base + jump)
    }

    /// `ψ''(u) = −σ² − F[ν̄](u)` for real u (analytic continuation otherwise).
    pub fn psi_d2(&self, u: Complex64) -> Result<Complex64, ModelError> {
        self.check_strip(u)?;
        let i = Complex64::new(0.0, 1.0);
        let jump = match self.jumps {
            JumpDensity::None => Complex64::default(),
            JumpDensity::ExponentialCpp { intensity } => {
                let d = Complex64::new(1.0, 0.0) - i * u;
                -2.0 * intensity / (d * d * d)
            }
            JumpDensity::TemperedStable { eta, lambda } => {
                let g = gamma(Complex64::new(2.0 - eta, 0.0))?;
                let p = complex_pow(
                    Complex64::new(lambda, 0.0) - i * u,
                    Complex64::new(eta - 2.0, 0.0),
                )?;
                -g * p
            }
        };
        Ok(Complex64::new(-self.sigma2, 0.0) + jump)
    }
}

/// Effective integration radius: beyond it, |uK(s)| contributions fall below
/// the quadrature tolerance.
fn support_radius<K: KernelFn>(kernel: &K, u: f64) -> f64 {
    let level = (1e-16 / (1.0 + u.abs())).max(1e-300);
    kernel.truncation_radius(level).unwrap_or(64.0)
}

fn kernel_breaks(radius: f64) -> [f64; 5] {
    // Geometric refinement toward 0 where u·K(s) varies fastest for r = 0.
    [0.0, radius * 1e-3, radius * 0.05, radius * 0.4, radius]
}

impl LevyTriplet {
    /// Ψ(u) = ∫ ψ(uK(s)) ds by adaptive quadrature (absolute tolerance 1e-10).
    pub fn big_psi<K: KernelFn>(&self, kernel: &K, u: f64) -> Result<Complex64, ModelError> {
        self.kernel_integral(kernel, u, |w| self.psi(w), 0)
    }

    /// Ψ'(u) = ∫ ψ'(uK(s)) K(s) ds.
    pub fn big_psi_d1<K: KernelFn>(&self, kernel: &K, u: f64) -> Result<Complex64, ModelError> {
        self.kernel_integral(kernel, u, |w| self.psi_d1(w), 1)
    }

    /// Ψ''(u) = ∫ ψ''(uK(s)) K²(s) ds.
    pub fn big_psi_d2<K: KernelFn>(&self, kernel: &K, u: f64) -> Result<Complex64, ModelError> {
        self.kernel_integral(kernel, u, |w| self.psi_d2(w), 2)
    }

    /// `Ψ_σ''(u) = Ψ''(u) + σ²‖K‖² = −∫ F[ν̄](uK(s)) K²(s) ds`.
    pub fn big_psi_sigma_d2<K: KernelFn>(&self, kernel: &K, u: f64) -> Result<Complex64, ModelError> {
        Ok(self.big_psi_d2(kernel, u)? + self.sigma2 * kernel.l2_norm_sq())
    }

    fn kernel_integral<K, F>(&self, kernel: &K, u: f64, f: F, kpow: u32) -> Result<Complex64, ModelError>
    where
        K: KernelFn,
        F: Fn(Complex64) -> Result<Complex64, ModelError>,
    {
        if u == 0.0 && kpow == 0 {
            return Ok(Complex64::default());
        }
        let radius = support_radius(kernel, u);
        let quad = AdaptiveQuad::new(1e-11, 1e-11);
        let integrand = |s: f64| -> Complex64 {
            let k = kernel.eval(s);
            let w = Complex64::new(u * k, 0.0);
            let weight = match kpow {
                0 => 1.0,
                1 => k,
                _ => k * k,
            };
            // uK(s) real and the family strips contain the real axis, so the
            // closure below cannot fail; map failures to NaN to surface them.
            f(w).map(|v| v * weight).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        };
        let positive = quad.integrate_segmented(&integrand, &kernel_breaks(radius))?;
        let total = match kernel.symmetry() {
            crate::kernels::KernelSymmetry::Even => positive * 2.0,
            crate::kernels::KernelSymmetry::PositiveSupport => positive,
            crate::kernels::KernelSymmetry::General => {
                let negative = quad.integrate_segmented(
                    &integrand,
                    &[-radius, -radius * 0.4, -radius * 0.05, -radius * 1e-3, 0.0],
                )?;
                positive + negative
            }
        };
        Ok(total)
    }
}

/// Exact characteristic-function source: ratios computed from the analytic
/// Ψ derivatives rather than sample averages. Used for plug-in oracles and
/// the known-model σ² estimator.
pub struct ExactCf<'a, K: KernelFn> {
    pub model: LevyTriplet,
    pub kernel: &'a K,
}

impl<'a, K: KernelFn> ExactCf<'a, K> {
    pub fn new(model: LevyTriplet, kernel: &'a K) -> Self {
        Self { model, kernel }
    }
}

impl<K: KernelFn> CharFnSource for ExactCf<'_, K> {
    fn ratios(&self, u: f64) -> Result<CfRatios, EcfError> {
        let d1 = self
            .model
            .big_psi_d1(self.kernel, u)
            .map_err(|e| EcfError::Source(e.to_string()))?;
        let d2 = self
            .model
            .big_psi_d2(self.kernel, u)
            .map_err(|e| EcfError::Source(e.to_string()))?;
        let psi = self
            .model
            .big_psi(self.kernel, u)
            .map_err(|e| EcfError::Source(e.to_string()))?;
        Ok(CfRatios {
            phi_norm: psi.re.exp(),
            d1,
            d2: d2 + d1 * d1,
        })
    }

    fn guard(&self) -> f64 {
        0.0
    }

    fn mean_z(&self) -> f64 {
        (self.model.drift + self.model.jumps.first_moment()) * self.kernel.l1_norm()
    }
}
