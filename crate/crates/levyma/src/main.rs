//! Command-line interface: simulate paths, estimate the Lévy density from a
//! path CSV, and run / tune the Monte Carlo study from a JSON config.

use clap::{Args, Parser, Subcommand};
use levyma::experiment::{emit_table, run_study, tune_parameters, StudyConfig};
use levyma::kernels::{GammaExpKernel, KernelFn, Sidedness};
use levyma::levy::{JumpDensity, LevyTriplet};
use levyma::mellin::{
    estimate_levy_density, EstimatorConfig, LambdaMode, Sigma2Mode, Variant,
};
use levyma::simulate::{export_path, read_path, simulate_path_with_x_max};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "levyma", version, about = "Moving-average Lévy process simulation and Mellin-deconvolution density estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct KernelArgs {
    /// Kernel power r in K(x) = |x|^r e^{-ρ|x|}
    #[arg(long = "kernel-r", default_value_t = 0)]
    kernel_r: u32,
    /// Kernel decay ρ
    #[arg(long = "kernel-rho", default_value_t = 1.0)]
    kernel_rho: f64,
    /// Restrict the kernel to x ≥ 0
    #[arg(long = "one-sided", default_value_t = false)]
    one_sided: bool,
}

impl KernelArgs {
    fn build(&self) -> Result<GammaExpKernel, String> {
        let sided = if self.one_sided { Sidedness::OneSided } else { Sidedness::TwoSided };
        GammaExpKernel::new(self.kernel_r, self.kernel_rho, sided).map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate equidistant observations of Z_t = ∫K(t−s) dL_s
    Simulate {
        /// Jump intensity λ of the compound-Poisson driver
        #[arg(long)]
        lambda: f64,
        /// Diffusion coefficient σ²
        #[arg(long, default_value_t = 0.0)]
        sigma2: f64,
        /// Drift γ
        #[arg(long, default_value_t = 0.0)]
        drift: f64,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Observation spacing Δ
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Number of observations
        #[arg(long)]
        n: usize,
        /// Series truncation level α (x_max = largest x with K(x) > α)
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        /// Explicit x_max overriding the α-derived radius
        #[arg(long)]
        x_max: Option<f64>,
        /// RNG seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (k,t,z)
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the Lévy density from a path CSV
    Estimate {
        /// Input path CSV as written by `simulate`
        #[arg(long = "in")]
        input: PathBuf,
        /// Estimator variant
        #[arg(long, value_parser = parse_variant, default_value = "first-stab")]
        variant: Variant,
        /// Mellin line abscissa c ∈ (0,1)
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        /// Forward integration cutoff U
        #[arg(long = "u-max")]
        u_max: f64,
        /// Inversion line cutoff V
        #[arg(long = "v-max")]
        v_max: f64,
        /// Number of inversion grid points (default ceil(200·V))
        #[arg(long = "k-points")]
        k_points: Option<usize>,
        /// σ²: a number, or `estimate` to use the high-frequency weight estimator
        #[arg(long, default_value = "0")]
        sigma2: String,
        /// Scale U for the σ² estimator when --sigma2 estimate
        #[arg(long = "sigma2-u", default_value_t = 20.0)]
        sigma2_u: f64,
        /// Known λ for the stabilized completion term (default: plug-in mean(Z)/‖K‖₁)
        #[arg(long)]
        lambda: Option<f64>,
        /// Evaluation grid start:stop:count
        #[arg(long = "x-grid", default_value = "1:3:256")]
        x_grid: String,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Output CSV (x,nu_hat) with a provenance header
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Monte Carlo study described by a JSON config
    McStudy {
        #[arg(long)]
        config: PathBuf,
        /// Output table CSV (n,U,V,mean_risk,var_risk); stdout when omitted
        #[arg(long = "out-table")]
        out_table: Option<PathBuf>,
    },
    /// Grid-search (U, V) per sample size over held-out seeds
    Tune {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    match s {
        "second" => Ok(Variant::SecondDerivative),
        "first" => Ok(Variant::FirstDerivative),
        "first-stab" => Ok(Variant::FirstDerivativeStabilized),
        other => Err(format!("unknown variant '{other}' (expected second|first|first-stab)")),
    }
}

fn parse_x_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("x-grid must be start:stop:count, got '{s}'"));
    }
    let start: f64 = parts[0].parse().map_err(|e| format!("bad start: {e}"))?;
    let stop: f64 = parts[1].parse().map_err(|e| format!("bad stop: {e}"))?;
    let count: usize = parts[2].parse().map_err(|e| format!("bad count: {e}"))?;
    if !(start > 0.0 && stop > start && count >= 2) {
        return Err("x-grid needs 0 < start < stop and count ≥ 2".into());
    }
    let h = (stop - start) / (count as f64 - 1.0);
    Ok((0..count).map(|i| start + i as f64 * h).collect())
}

fn run() -> Result<(), String> {
    match Cli::parse().command {
        Command::Simulate { lambda, sigma2, drift, kernel, delta, n, alpha, x_max, seed, out } => {
            let k = kernel.build()?;
            let model = LevyTriplet::new(drift, sigma2, JumpDensity::ExponentialCpp {
                intensity: lambda,
            })
            .map_err(|e| e.to_string())?;
            let x_max = match x_max {
                Some(x) => x,
                None => k.truncation_radius(alpha).map_err(|e| e.to_string())?,
            };
            let path = simulate_path_with_x_max(&model, &k, delta, n, alpha, x_max, seed)
                .map_err(|e| e.to_string())?;
            let mut w = BufWriter::new(File::create(&out).map_err(|e| e.to_string())?);
            export_path(&path, &mut w).map_err(|e| e.to_string())?;
            eprintln!("wrote {} observations to {}", n, out.display());
            Ok(())
        }
        Command::Estimate {
            input,
            variant,
            c,
            u_max,
            v_max,
            k_points,
            sigma2,
            sigma2_u,
            lambda,
            x_grid,
            kernel,
            out,
        } => {
            let k = kernel.build()?;
            let path = read_path(BufReader::new(File::open(&input).map_err(|e| e.to_string())?))
                .map_err(|e| e.to_string())?;
            let sigma2_mode = if sigma2 == "estimate" {
                Sigma2Mode::Estimate { u_n: sigma2_u }
            } else {
                Sigma2Mode::Known(sigma2.parse::<f64>().map_err(|e| format!("bad --sigma2: {e}"))?)
            };
            let cfg = EstimatorConfig {
                variant,
                c,
                u_max,
                v_max,
                k_points,
                sigma2: sigma2_mode,
                lambda: lambda.map(LambdaMode::Known).unwrap_or(LambdaMode::PlugIn),
                forward_nodes: levyma::mellin::DEFAULT_FORWARD_NODES,
            };
            let xs = parse_x_grid(&x_grid)?;
            let est = estimate_levy_density(&path, &k, &cfg, &xs).map_err(|e| e.to_string())?;
            let mut w = BufWriter::new(File::create(&out).map_err(|e| e.to_string())?);
            let info = est.info.as_ref().expect("pipeline fills provenance");
            writeln!(
                w,
                "# levyma estimate: variant={:?} c={} U={} V={} K={} sigma2={} sigma2_estimated={} lambda_hat={:?} n={} delta={} kernel=(r={},rho={},one_sided={})",
                info.variant,
                info.c,
                info.u_max,
                info.v_max,
                info.k_points,
                info.sigma2,
                info.sigma2_estimated,
                info.lambda_hat,
                info.n,
                info.delta,
                k.r(),
                k.rho(),
                k.sidedness() == Sidedness::OneSided,
            )
            .map_err(|e| e.to_string())?;
            writeln!(w, "x,nu_hat").map_err(|e| e.to_string())?;
            for (x, v) in est.xs.iter().zip(&est.values) {
                writeln!(w, "{:.16e},{:.16e}", x, v).map_err(|e| e.to_string())?;
            }
            eprintln!("wrote density estimate to {}", out.display());
            Ok(())
        }
        Command::McStudy { config, out_table } => {
            let cfg: StudyConfig = serde_json::from_reader(BufReader::new(
                File::open(&config).map_err(|e| e.to_string())?,
            ))
            .map_err(|e| format!("config parse error: {e}"))?;
            let report = run_study(&cfg).map_err(|e| e.to_string())?;
            match out_table {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(&p).map_err(|e| e.to_string())?);
                    emit_table(&report, &mut w).map_err(|e| e.to_string())?;
                    eprintln!("wrote study table to {}", p.display());
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    emit_table(&report, &mut stdout).map_err(|e| e.to_string())?;
                }
            }
            Ok(())
        }
        Command::Tune { config } => {
            let cfg: StudyConfig = serde_json::from_reader(BufReader::new(
                File::open(&config).map_err(|e| e.to_string())?,
            ))
            .map_err(|e| format!("config parse error: {e}"))?;
            let tuned = tune_parameters(&cfg).map_err(|e| e.to_string())?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "n,U,V,mean_risk").map_err(|e| e.to_string())?;
            for row in tuned {
                writeln!(stdout, "{},{},{},{:.16e}", row.n, row.u, row.v, row.mean_risk)
                    .map_err(|e| e.to_string())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
