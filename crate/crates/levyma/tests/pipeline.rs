//! End-to-end pipeline tests: estimator statistics against model oracles,
//! the risk trend over growing sample sizes, and the CLI binary surface.

use levyma::ecf::{ecf_eval, log_cf_derivatives, PathEcf};
use levyma::experiment::{run_study, StudyConfig};
use levyma::kernels::{GammaExpKernel, KernelFn};
use levyma::levy::{ExactCf, LevyTriplet};
use levyma::mellin::{forward_mellin_first_at, FirstMode, LambdaMode};
use levyma::simulate::{simulate_path, simulate_path_with_x_max};
use num_complex::Complex64;
use std::io::Write;
use std::process::Command;

fn exp_kernel() -> GammaExpKernel {
    GammaExpKernel::exponential()
}

fn exp_model(lambda: f64) -> LevyTriplet {
    LevyTriplet::exponential_cpp(lambda, 0.0).unwrap()
}

/// |Φₙ(u) − Φ(u)| at u = 0.4 stays within 5/√n of the model CF (computed
/// through the kernel-integrated exponent). The path is truncated at a small
/// α so the series-truncation gap is negligible next to the sampling error.
#[test]
fn ecf_tracks_model_cf() {
    let kernel = exp_kernel();
    let model = exp_model(1.0);
    let n = 100_000;
    let x_max = kernel.truncation_radius(1e-4).unwrap();
    let path = simulate_path_with_x_max(&model, &kernel, 1.0, n, 1e-4, x_max, 909).unwrap();
    let u = 0.4;
    let (phi_n, _, _) = ecf_eval(&path.observations, u);
    let phi = model.big_psi(&kernel, u).unwrap().exp();
    let err = (phi_n - phi).norm();
    let bound = 5.0 / (n as f64).sqrt();
    assert!(err < bound, "|Φₙ − Φ| = {err:.4e} ≥ {bound:.4e}");
}

/// Ψₙ''(u) is consistent for Ψ''(u) = −∫F[ν̄](uK(x))K²(x)dx at u = 0.4:
/// the mean over independent paths is within 3 standard errors of the
/// quadrature oracle.
#[test]
fn log_cf_second_derivative_consistent() {
    let kernel = exp_kernel();
    let model = exp_model(1.0);
    let u = 0.4;
    let oracle = model.big_psi_sigma_d2(&kernel, u).unwrap();
    let n = 20_000;
    let mut samples = Vec::new();
    for seed in 0..10u64 {
        let path = simulate_path(&model, &kernel, 1.0, n, 0.001, 600 + seed).unwrap();
        let (p, d1, d2) = ecf_eval(&path.observations, u);
        let (_, psi2) = log_cf_derivatives(u, p, d1, d2, 0.0, 1e-6).unwrap();
        samples.push(psi2);
    }
    let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
    let sd = (samples.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>()
        / (samples.len() as f64 - 1.0))
        .sqrt();
    let se = sd / (samples.len() as f64).sqrt();
    let dev = (mean - oracle).norm();
    assert!(dev < 3.0 * se + 1e-3, "|mean Ψₙ'' − Ψ''| = {dev:.4e}, 3·SE = {:.4e}", 3.0 * se);
}

/// Stabilized line estimate at U = 0.4, z = 0.5: across seeds, the sample
/// mean is within 3 Monte Carlo spreads of the finite-U population value
/// (the analytic transform minus its known truncation tail).
#[test]
fn stabilized_line_matches_population_value() {
    let kernel = exp_kernel();
    let model = exp_model(1.0);
    let n = 20_000;
    let mut samples = Vec::new();
    for seed in 0..20u64 {
        let path = simulate_path(&model, &kernel, 1.0, n, 0.01, 7000 + seed).unwrap();
        let source = PathEcf::new(&path.observations).unwrap();
        let vals = forward_mellin_first_at(
            &source,
            kernel.l1_norm(),
            0.5,
            0.4,
            &[0.0],
            256,
            FirstMode::Stabilized(LambdaMode::PlugIn),
        )
        .unwrap();
        samples.push(vals[0]);
    }
    let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
    let spread = (samples.iter().map(|s| (s - mean).norm_sqr()).sum::<f64>()
        / (samples.len() as f64 - 1.0))
        .sqrt();
    // population value at the same truncation level (exact CF, same plan)
    let exact_src = ExactCf::new(model, &kernel);
    let population = forward_mellin_first_at(
        &exact_src,
        kernel.l1_norm(),
        0.5,
        0.4,
        &[0.0],
        256,
        FirstMode::Stabilized(LambdaMode::Known(1.0)),
    )
    .unwrap()[0];
    let dev = (mean - population).norm();
    assert!(
        dev < 3.0 * spread,
        "|mean − population| = {dev:.4e}, 3·spread = {:.4e}",
        3.0 * spread
    );
}

/// Risk trend over the four sample sizes with the study's per-n tuning:
/// mean risk non-increasing in n, and the risk variance at n = 20000 is
/// below half the variance at n = 1000.
#[test]
fn risk_trend_and_variance_ordering() {
    let cfg: StudyConfig = serde_json::from_value(serde_json::json!({
        "model": { "lambda": 1.0 },
        "rows": [
            { "n": 1000,  "u": 0.4, "v": 1.1 },
            { "n": 5000,  "u": 0.4, "v": 1.2 },
            { "n": 10000, "u": 0.5, "v": 1.3 },
            { "n": 20000, "u": 0.3, "v": 1.3 }
        ],
        "base_seed": 555
    }))
    .unwrap();
    let report = run_study(&cfg).unwrap();
    let means: Vec<f64> = report.cells.iter().map(|c| c.mean_risk).collect();
    println!("risk trend: {means:?}");
    for w in means.windows(2) {
        assert!(w[1] <= w[0], "risk trend not monotone: {means:?}");
    }
    let var_small = report.cells[0].var_risk;
    let var_large = report.cells[3].var_risk;
    assert!(
        2.0 * var_large < var_small,
        "variance ordering violated: {var_large:.3e} vs {var_small:.3e}"
    );
}

/// A jump-free, noise-free driver yields the identically-zero estimate and
/// the closed-form risk of the zero function: ∫₁³ e^{-2x} dx.
#[test]
fn zero_driver_risk_closed_form() {
    use levyma::experiment::risk_l2;
    use levyma::mellin::{estimate_levy_density, EstimatorConfig, LambdaMode, Sigma2Mode, Variant};
    let kernel = exp_kernel();
    let model = exp_model(0.0);
    let path = simulate_path(&model, &kernel, 1.0, 2000, 0.01, 3).unwrap();
    let cfg = EstimatorConfig {
        variant: Variant::FirstDerivativeStabilized,
        c: 0.5,
        u_max: 0.4,
        v_max: 1.1,
        k_points: None,
        sigma2: Sigma2Mode::Known(0.0),
        lambda: LambdaMode::PlugIn,
        forward_nodes: 256,
    };
    let xs: Vec<f64> = (0..256).map(|i| 1.0 + i as f64 * (2.0 / 255.0)).collect();
    let est = estimate_levy_density(&path, &kernel, &cfg, &xs).unwrap();
    assert!(est.values.iter().all(|&v| v.abs() < 1e-14));
    let truth = levyma::levy::JumpDensity::ExponentialCpp { intensity: 1.0 };
    let risk = risk_l2(&est, &truth, 1.0, 3.0).unwrap();
    let exact = ((-2.0f64).exp() - (-6.0f64).exp()) / 2.0;
    assert!((risk - exact).abs() < 1e-6, "risk {risk} vs {exact}");
}

/// Grid spacing other than Δ = 1 keeps the stationary moments.
#[test]
fn fractional_spacing_moments() {
    let kernel = exp_kernel();
    let model = exp_model(1.0);
    let delta = 0.25;
    let n = 40_000;
    let path = simulate_path(&model, &kernel, delta, n, 0.01, 77).unwrap();
    let c0 = kernel.autoconvolution(0.0).unwrap();
    let tau: f64 = 1.0
        + 2.0
            * (1..800)
                .map(|j| kernel.autoconvolution(j as f64 * delta).unwrap() / c0)
                .sum::<f64>();
    let se_mean = (2.0 * tau / n as f64).sqrt();
    assert!((path.mean() - 2.0).abs() < 5.0 * se_mean, "mean {} se {se_mean}", path.mean());
}

/// Every estimator variant runs end to end on simulated data and reports a
/// finite estimate of the right target.
#[test]
fn all_variants_run_end_to_end() {
    use levyma::mellin::{estimate_levy_density, DensityTarget, EstimatorConfig, Sigma2Mode, Variant};
    let kernel = exp_kernel();
    let model = exp_model(1.0);
    let path = simulate_path(&model, &kernel, 1.0, 5000, 0.01, 404).unwrap();
    let xs: Vec<f64> = (0..128).map(|i| 1.0 + i as f64 * (2.0 / 127.0)).collect();
    for (variant, target) in [
        (Variant::SecondDerivative, DensityTarget::NuBar),
        (Variant::FirstDerivative, DensityTarget::Nu),
        (Variant::FirstDerivativeStabilized, DensityTarget::Nu),
    ] {
        let cfg = EstimatorConfig {
            variant,
            c: 0.5,
            u_max: 0.4,
            v_max: 1.3,
            k_points: None,
            sigma2: Sigma2Mode::Known(0.0),
            lambda: levyma::mellin::LambdaMode::PlugIn,
            forward_nodes: 256,
        };
        let est = estimate_levy_density(&path, &kernel, &cfg, &xs).unwrap();
        assert_eq!(est.target, target);
        assert!(est.values.iter().all(|v| v.is_finite()), "{variant:?}");
        // ν̄ → ν conversion agrees pointwise with dividing by x²
        if target == DensityTarget::NuBar {
            let nu = est.to_nu();
            for ((x, a), b) in est.xs.iter().zip(&est.values).zip(&nu.values) {
                assert!((a / (x * x) - b).abs() < 1e-15);
            }
        }
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levyma"))
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("levyma-test-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// CLI surface: simulate → estimate → mc-study round trip through the
/// binary, checking formats and exit codes.
#[test]
fn cli_end_to_end() {
    let dir = tmp_dir("cli");
    let path_csv = dir.join("path.csv");
    let dens_csv = dir.join("density.csv");

    let status = bin()
        .args([
            "simulate", "--lambda", "1.0", "--n", "4000", "--delta", "1", "--alpha", "0.01",
            "--seed", "11",
        ])
        .arg("--out")
        .arg(&path_csv)
        .status()
        .expect("simulate runs");
    assert!(status.success());
    let text = std::fs::read_to_string(&path_csv).unwrap();
    assert!(text.starts_with("k,t,z\n"));
    assert_eq!(text.lines().count(), 4001);

    let status = bin()
        .args([
            "estimate", "--variant", "first-stab", "--c", "0.5", "--u-max", "0.4", "--v-max",
            "1.1", "--x-grid", "1:3:128",
        ])
        .arg("--in")
        .arg(&path_csv)
        .arg("--out")
        .arg(&dens_csv)
        .status()
        .expect("estimate runs");
    assert!(status.success());
    let text = std::fs::read_to_string(&dens_csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# levyma estimate:"));
    assert_eq!(lines.next().unwrap(), "x,nu_hat");
    assert_eq!(text.lines().count(), 130);
    // estimates should be finite and of the right magnitude near x = 1
    let first_row = text.lines().nth(2).unwrap();
    let nu_hat: f64 = first_row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(nu_hat.is_finite() && nu_hat.abs() < 2.0);

    // mc-study from a config file
    let config = dir.join("study.json");
    let mut f = std::fs::File::create(&config).unwrap();
    write!(
        f,
        r#"{{ "model": {{ "lambda": 1.0 }}, "rows": [ {{ "n": 500, "u": 0.4, "v": 1.1 }} ],
             "runs_per_n": 3, "base_seed": 9 }}"#
    )
    .unwrap();
    let table = dir.join("table.csv");
    let status = bin()
        .arg("mc-study")
        .arg("--config")
        .arg(&config)
        .arg("--out-table")
        .arg(&table)
        .status()
        .expect("mc-study runs");
    assert!(status.success());
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("n,U,V,mean_risk,var_risk\n"));
    assert_eq!(text.lines().count(), 2);

    // tune over a degenerate grid prints the single pair
    let config2 = dir.join("tune.json");
    let mut f = std::fs::File::create(&config2).unwrap();
    write!(
        f,
        r#"{{ "model": {{ "lambda": 1.0 }}, "n_list": [400], "u_grid": [0.4], "v_grid": [1.1],
             "runs_per_n": 2, "base_seed": 9 }}"#
    )
    .unwrap();
    let out = bin().arg("tune").arg("--config").arg(&config2).output().expect("tune runs");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("n,U,V,mean_risk\n"));
    assert!(text.lines().nth(1).unwrap().starts_with("400,0.4,1.1,"));

    let _ = std::fs::remove_dir_all(&dir);
}

/// Bad inputs surface as nonzero exit codes with a message, not panics.
#[test]
fn cli_error_paths() {
    let dir = tmp_dir("err");
    // estimate on a missing file
    let out = bin()
        .args([
            "estimate", "--u-max", "0.4", "--v-max", "1.1", "--in", "/nonexistent/z.csv",
            "--out",
        ])
        .arg(dir.join("d.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    // invalid variant
    let out = bin()
        .args([
            "estimate", "--variant", "third", "--u-max", "0.4", "--v-max", "1.1", "--in", "x",
            "--out", "y",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    // mc-study with a malformed config
    let cfgp = dir.join("bad.json");
    std::fs::write(&cfgp, "{ not json").unwrap();
    let out = bin().arg("mc-study").arg("--config").arg(&cfgp).output().unwrap();
    assert!(!out.status.success());
    let _ = std::fs::remove_dir_all(&dir);
}
