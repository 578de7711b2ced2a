//! Empirical characteristic function of the observations and its first two
//! derivatives, the raw input to the Mellin estimators.
//!
//! Φₙ(u) = mean e^{iuZ}, Φₙ'(u) = mean(iZ e^{iuZ}), Φₙ''(u) = mean(−Z² e^{iuZ});
//! exact sample statistics with pairwise summation, not numerical
//! differentiation. Negative frequencies evaluate by conjugation, so the
//! Hermitian symmetry Φₙ(−u) = conj Φₙ(u) holds exactly.

use crate::quad::pairwise_sum_complex;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EcfError {
    #[error("|Φ(u)| = {abs:.3e} at u = {u} is at or below the denominator guard {guard:.3e}")]
    SmallDenominator { u: f64, abs: f64, guard: f64 },
    #[error("empty sample path")]
    EmptyPath,
    #[error("characteristic-function source failed: {0}")]
    Source(String),
}

/// Φ ratios at one frequency: d1 = Φ'/Φ (= Ψ'), d2 = Φ''/Φ.
#[derive(Debug, Clone, Copy)]
pub struct CfRatios {
    pub phi_norm: f64,
    pub d1: Complex64,
    pub d2: Complex64,
}

/// Anything that can play the role of (Φ, Φ', Φ'') for the forward Mellin
/// estimators: a sample path or an exact model.
pub trait CharFnSource: Sync {
    /// Φ'/Φ and Φ''/Φ at u; errs when |Φ(u)| is at or below the guard.
    fn ratios(&self, u: f64) -> Result<CfRatios, EcfError>;
    /// Denominator guard; empirical sources use max(n^{-1/2}·ln n, 1e-6).
    fn guard(&self) -> f64;
    /// mean(Z) (or E Z for exact sources), the stabilizer's plug-in moment.
    fn mean_z(&self) -> f64;
}

/// (Φₙ, Φₙ', Φₙ'') at a single frequency.
pub fn ecf_eval(observations: &[f64], u: f64) -> (Complex64, Complex64, Complex64) {
    assert!(!observations.is_empty(), "ecf of an empty path");
    if u < 0.0 {
        // Φ is Hermitian, Φ' odd-conjugate, Φ'' even-conjugate.
        let (p, d1, d2) = ecf_eval(observations, -u);
        return (p.conj(), -d1.conj(), d2.conj());
    }
    let n = observations.len() as f64;
    let mut e = Vec::with_capacity(observations.len());
    let mut ze = Vec::with_capacity(observations.len());
    let mut zze = Vec::with_capacity(observations.len());
    for &z in observations {
        let (s, c) = (u * z).sin_cos();
        let w = Complex64::new(c, s);
        e.push(w);
        ze.push(Complex64::new(0.0, z) * w);
        zze.push(Complex64::new(-z * z, 0.0) * w);
    }
    (
        pairwise_sum_complex(&e) / n,
        pairwise_sum_complex(&ze) / n,
        pairwise_sum_complex(&zze) / n,
    )
}

/// ECF values over a frequency grid.
#[derive(Debug, Clone)]
pub struct EcfBatch {
    pub us: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub phi_d1: Vec<Complex64>,
    pub phi_d2: Vec<Complex64>,
    pub n: usize,
}

pub fn ecf_batch(observations: &[f64], us: &[f64]) -> EcfBatch {
    assert!(us.windows(2).all(|w| w[0] <= w[1]), "frequency grid must be sorted");
    let mut phi = Vec::with_capacity(us.len());
    let mut phi_d1 = Vec::with_capacity(us.len());
    let mut phi_d2 = Vec::with_capacity(us.len());
    for &u in us {
        let (p, d1, d2) = ecf_eval(observations, u);
        phi.push(p);
        phi_d1.push(d1);
        phi_d2.push(d2);
    }
    let batch = EcfBatch { us: us.to_vec(), phi, phi_d1, phi_d2, n: observations.len() };
    batch.assert_invariants();
    batch
}

impl EcfBatch {
    /// Typed invariants: Φₙ(0) = 1 exactly, |Φₙ| ≤ 1 + 1e-12, Hermitian
    /// symmetry whenever ±u are both on the grid.
    pub fn assert_invariants(&self) {
        for (i, (&u, p)) in self.us.iter().zip(&self.phi).enumerate() {
            assert!(p.norm() <= 1.0 + 1e-12, "|Φ({u})| = {} exceeds 1", p.norm());
            if u == 0.0 {
                assert_eq!(*p, Complex64::new(1.0, 0.0), "Φ(0) must be exactly 1");
            }
            if u > 0.0 {
                if let Ok(j) = self.us.binary_search_by(|x| x.partial_cmp(&-u).unwrap()) {
                    assert_eq!(self.phi[j], p.conj(), "Hermitian symmetry at ±{u}");
                    assert_eq!(self.phi_d1[j], -self.phi_d1[i].conj());
                    assert_eq!(self.phi_d2[j], self.phi_d2[i].conj());
                }
            }
        }
    }
}

/// (Ψₙ'(u), Ψ_{σ,n}''(u)) from one ECF triple:
/// Ψ' = Φ'/Φ, Ψ_σ'' = Φ''/Φ − (Φ'/Φ)² + σ²‖K‖²_{L²}.
pub fn log_cf_derivatives(
    u: f64,
    phi: Complex64,
    phi_d1: Complex64,
    phi_d2: Complex64,
    sigma2_l2sq: f64,
    guard: f64,
) -> Result<(Complex64, Complex64), EcfError> {
    let abs = phi.norm();
    if abs <= guard {
        return Err(EcfError::SmallDenominator { u, abs, guard });
    }
    let d1 = phi_d1 / phi;
    let d2 = phi_d2 / phi;
    Ok((d1, d2 - d1 * d1 + sigma2_l2sq))
}

/// Denominator guard for a sample of size n: max(n^{-1/2}·ln n, 1e-6).
pub fn ecf_guard(n: usize) -> f64 {
    let nf = n as f64;
    (nf.powf(-0.5) * nf.ln()).max(1e-6)
}

/// Empirical characteristic-function source backed by observations.
pub struct PathEcf<'a> {
    observations: &'a [f64],
    guard: f64,
    mean_z: f64,
}

impl<'a> PathEcf<'a> {
    pub fn new(observations: &'a [f64]) -> Result<Self, EcfError> {
        if observations.is_empty() {
            return Err(EcfError::EmptyPath);
        }
        let mean_z = crate::quad::pairwise_sum(observations) / observations.len() as f64;
        Ok(Self { observations, guard: ecf_guard(observations.len()), mean_z })
    }
}

impl CharFnSource for PathEcf<'_> {
    fn ratios(&self, u: f64) -> Result<CfRatios, EcfError> {
        let (p, d1, d2) = ecf_eval(self.observations, u);
        let abs = p.norm();
        if abs <= self.guard {
            return Err(EcfError::SmallDenominator { u, abs, guard: self.guard });
        }
        Ok(CfRatios { phi_norm: abs, d1: d1 / p, d2: d2 / p })
    }

    fn guard(&self) -> f64 {
        self.guard
    }

    fn mean_z(&self) -> f64 {
        self.mean_z
    }
}
