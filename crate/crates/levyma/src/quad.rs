//! Quadrature and summation primitives shared by the estimators.
//!
//! Three pieces live here:
//! - Gauss–Legendre node/weight generation (Newton iteration on Pₙ),
//! - an adaptive complex-valued integrator with a Gauss(10)/Gauss(21)
//!   error estimate and interval bisection,
//! - deterministic pairwise summation and composite Simpson rules.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}] (best error {err:.3e}, tol {tol:.3e})")]
    NoConvergence { a: f64, b: f64, err: f64, tol: f64 },
    #[error("non-finite integrand value at {at}")]
    NonFinite { at: f64 },
}

/// Gauss–Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre polynomial; accurate to machine
/// precision for the orders used here (n ≤ 64).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre integral of a complex integrand on [a, b].
pub fn gl_integrate<F>(f: &F, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> Complex64
where
    F: Fn(f64) -> Complex64 + ?Sized,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        acc += f(mid + half * x) * *w;
    }
    acc * half
}

/// Adaptive complex-valued integrator.
///
/// Per interval the error is estimated as |G21 − G10|; intervals failing the
/// tolerance split at the midpoint. Tolerance is `abs_tol + rel_tol·|I|`
/// against the running global estimate.
pub struct AdaptiveQuad {
    nodes10: Vec<f64>,
    weights10: Vec<f64>,
    nodes21: Vec<f64>,
    weights21: Vec<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl AdaptiveQuad {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        let (nodes10, weights10) = gauss_legendre(10);
        let (nodes21, weights21) = gauss_legendre(21);
        Self {
            nodes10,
            weights10,
            nodes21,
            weights21,
            abs_tol,
            rel_tol,
            max_intervals: 4000,
        }
    }

    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<Complex64, QuadError>
    where
        F: Fn(f64) -> Complex64,
    {
        self.integrate_segmented(&f, &[a, b])
    }

    /// Integrate over consecutive segments (breakpoints let callers isolate
    /// kinks such as the |x|^r cusp at the origin).
    pub fn integrate_segmented<F>(&self, f: &F, breaks: &[f64]) -> Result<Complex64, QuadError>
    where
        F: Fn(f64) -> Complex64 + ?Sized,
    {
        #[derive(Clone, Copy)]
        struct Seg {
            a: f64,
            b: f64,
            value: Complex64,
            err: f64,
        }
        let mut segs: Vec<Seg> = Vec::new();
        let eval = |a: f64, b: f64| -> Result<Seg, QuadError> {
            let coarse = gl_integrate(f, a, b, &self.nodes10, &self.weights10);
            let fine = gl_integrate(f, a, b, &self.nodes21, &self.weights21);
            if !fine.re.is_finite() || !fine.im.is_finite() {
                return Err(QuadError::NonFinite { at: 0.5 * (a + b) });
            }
            Ok(Seg {
                a,
                b,
                value: fine,
                err: (fine - coarse).norm(),
            })
        };
        for w in breaks.windows(2) {
            if w[0] != w[1] {
                segs.push(eval(w[0], w[1])?);
            }
        }
        loop {
            let total: Complex64 = segs.iter().map(|s| s.value).sum();
            let err: f64 = segs.iter().map(|s| s.err).sum();
            let tol = self.abs_tol + self.rel_tol * total.norm();
            if err <= tol {
                return Ok(total);
            }
            if segs.len() >= self.max_intervals {
                return Err(QuadError::NoConvergence {
                    a: breaks[0],
                    b: *breaks.last().unwrap(),
                    err,
                    tol,
                });
            }
            // Split the worst interval.
            let (idx, _) = segs
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
                .unwrap();
            let Seg { a, b, .. } = segs[idx];
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                // Interval at floating-point resolution; accept what we have.
                let total: Complex64 = segs.iter().map(|s| s.value).sum();
                return Ok(total);
            }
            let left = eval(a, mid)?;
            let right = eval(mid, b)?;
            segs[idx] = left;
            segs.push(right);
        }
    }

    /// Real-valued convenience wrapper.
    pub fn integrate_real<F>(&self, f: F, a: f64, b: f64) -> Result<f64, QuadError>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate(|x| Complex64::new(f(x), 0.0), a, b).map(|v| v.re)
    }
}

/// Pairwise (tree) summation; deterministic order, O(log n) rounding depth.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Composite Simpson rule on uniformly spaced samples.
///
/// Odd interval counts are closed with a 3/8 rule on the final three
/// intervals, so any `values.len() >= 4` integrates at fourth order.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2, "need at least two samples");
    if n == 2 {
        return 0.5 * h * (values[0] + values[1]);
    }
    if n == 3 {
        return h / 3.0 * (values[0] + 4.0 * values[1] + values[2]);
    }
    let intervals = n - 1;
    let (simpson_end, tail) = if intervals % 2 == 0 {
        (n - 1, 0.0)
    } else {
        // 3/8 rule on the last three intervals.
        let t = 3.0 * h / 8.0
            * (values[n - 4] + 3.0 * values[n - 3] + 3.0 * values[n - 2] + values[n - 1]);
        (n - 4, t)
    };
    let mut acc = values[0] + values[simpson_end];
    let mut i = 1;
    while i < simpson_end {
        acc += 4.0 * values[i];
        if i + 1 < simpson_end {
            acc += 2.0 * values[i + 1];
        }
        i += 2;
    }
    acc * h / 3.0 + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_nodes_integrate_polynomials_exactly() {
        for n in [2usize, 5, 8, 16, 32] {
            let (nodes, weights) = gauss_legendre(n);
            // degree 2n-1 monomial integrates exactly
            let deg = 2 * n - 1;
            let val: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((val - exact).abs() < 1e-13, "n={n} got {val} want {exact}");
        }
    }

    #[test]
    fn adaptive_handles_oscillatory_decay() {
        let q = AdaptiveQuad::new(1e-12, 0.0);
        // ∫₀^∞ e^{-x} cos(10x) dx = 1/101
        let v = q
            .integrate(|x| Complex64::new((-x).exp() * (10.0 * x).cos(), 0.0), 0.0, 60.0)
            .unwrap();
        assert!((v.re - 1.0 / 101.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity_via_breaks() {
        let q = AdaptiveQuad::new(1e-11, 0.0);
        // ∫₀¹ x^{-1/2} dx = 2, singular endpoint split off geometrically
        let breaks = [0.0, 1e-12, 1e-9, 1e-6, 1e-3, 1.0];
        let v = q
            .integrate_segmented(
                &|x: f64| Complex64::new(if x > 0.0 { x.powf(-0.5) } else { 0.0 }, 0.0),
                &breaks,
            )
            .unwrap();
        assert!((v.re - 2.0).abs() < 2e-6);
    }

    #[test]
    fn simpson_matches_closed_forms() {
        // even interval count
        let h = 2.0 / 256.0;
        let vals: Vec<f64> = (0..257).map(|i| (1.0 + i as f64 * h).powi(3)).collect();
        let exact = (3.0f64.powi(4) - 1.0) / 4.0;
        assert!((simpson_uniform(&vals, h) - exact).abs() < 1e-9);
        // odd interval count exercises the 3/8 tail
        let h = 2.0 / 255.0;
        let vals: Vec<f64> = (0..256).map(|i| (1.0 + i as f64 * h).exp()).collect();
        let exact = 3.0f64.exp() - 1.0f64.exp();
        assert!((simpson_uniform(&vals, h) - exact).abs() < 1e-8);
    }

    #[test]
    fn pairwise_sum_is_deterministic_and_accurate() {
        let xs: Vec<f64> = (0..100_000).map(|i| 1e-3 * ((i % 7) as f64 - 3.0)).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs);
        assert_eq!(a.to_bits(), b.to_bits());
        let exact: f64 = xs.iter().sum();
        assert!((a - exact).abs() < 1e-9);
    }
}
