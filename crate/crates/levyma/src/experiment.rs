//! Monte Carlo study harness: repeated simulate→estimate runs, L² risk on a
//! fixed interval, (U, V) grid tuning, and CSV table/plot-data emission.
//!
//! Runs are independent and seeded as `base_seed + run_index`; the tuning
//! search uses the disjoint block `base_seed + runs_per_n + run_index` unless
//! `paper_faithful` is set, which reuses the reporting seeds (optimizing and
//! reporting on the same randomness, as in the original study protocol).

use crate::kernels::{GammaExpKernel, KernelFn, KernelSpec};
use crate::levy::{JumpDensity, LevyTriplet};
use crate::mellin::{
    DensityEstimate, DensityTarget, EstimatorConfig, LambdaMode, MellinError, Sigma2Mode, Variant,
};
use crate::quad::simpson_uniform;
use crate::simulate::{simulate_path_with_x_max, SimulateError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("risk grid does not cover [{a}, {b}] with ≥ {min_points} uniform points")]
    GridCoverage { a: f64, b: f64, min_points: usize },
    #[error("empty tuning grid")]
    EmptyGrid,
    #[error("run {run} (n = {n}, U = {u}, V = {v}) failed: {source}")]
    RunFailure { run: usize, n: usize, u: f64, v: f64, source: Box<ExperimentError> },
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Mellin(#[from] MellinError),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed table CSV at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ModelSpec {
    pub lambda: f64,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default)]
    pub drift: f64,
}

impl ModelSpec {
    pub fn triplet(&self) -> Result<LevyTriplet, ExperimentError> {
        LevyTriplet::new(self.drift, self.sigma2, JumpDensity::ExponentialCpp {
            intensity: self.lambda,
        })
        .map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn to_vec(self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.count.max(2) as f64 - 1.0);
        (0..self.count.max(2)).map(|i| self.start + i as f64 * h).collect()
    }
}

fn default_risk_grid() -> GridSpec {
    GridSpec { start: 1.0, stop: 3.0, count: 256 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FailurePolicy {
    #[default]
    Abort,
    SkipAndFlag,
}

/// One (n, U, V) cell of the study table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TableRow {
    pub n: usize,
    pub u: f64,
    pub v: f64,
}

fn default_runs() -> usize {
    20
}

fn default_delta() -> f64 {
    1.0
}

fn default_c() -> f64 {
    0.5
}

fn default_alpha() -> f64 {
    0.01
}

fn default_variant() -> Variant {
    Variant::FirstDerivativeStabilized
}

fn default_interval() -> [f64; 2] {
    [1.0, 3.0]
}

fn default_forward_nodes() -> usize {
    crate::mellin::DEFAULT_FORWARD_NODES
}

/// Study configuration; JSON-compatible, with defaults matching the
/// numerical study (λ = 1, K = e^{-|x|}, Δ = 1, c = 0.5, 20 runs,
/// stabilized first-derivative variant, risk on \[1,3\]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "default_runs")]
    pub runs_per_n: usize,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Explicit per-n (U, V) rows; when absent the study crosses
    /// `n_list × u_grid × v_grid`.
    #[serde(default)]
    pub rows: Option<Vec<TableRow>>,
    #[serde(default)]
    pub u_grid: Vec<f64>,
    #[serde(default)]
    pub v_grid: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Overrides the α-derived series truncation radius.
    #[serde(default)]
    pub x_max_override: Option<f64>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_risk_grid")]
    pub x_grid: GridSpec,
    #[serde(default = "default_interval")]
    pub risk_interval: [f64; 2],
    /// σ² handed to the estimator; defaults to the model's true value.
    #[serde(default)]
    pub sigma2_mode: Option<Sigma2Mode>,
    #[serde(default)]
    pub lambda_mode: Option<LambdaMode>,
    #[serde(default)]
    pub k_points: Option<usize>,
    #[serde(default = "default_forward_nodes")]
    pub forward_nodes: usize,
    #[serde(default)]
    pub failure_policy: FailurePolicy,
    /// Reuse reporting seeds for tuning (the original study's protocol).
    #[serde(default)]
    pub paper_faithful: bool,
    /// Exponential decay rate of the weighted density's Mellin transform
    /// along the inversion line; recorded for provenance only.
    #[serde(default)]
    pub mellin_decay_gamma: Option<f64>,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.runs_per_n == 0 {
            return Err(ExperimentError::Config("runs_per_n must be ≥ 1".into()));
        }
        if self.rows.is_none() {
            if self.n_list.is_empty() {
                return Err(ExperimentError::Config("n_list is empty and no rows given".into()));
            }
            if self.u_grid.is_empty() || self.v_grid.is_empty() {
                return Err(ExperimentError::Config("u_grid/v_grid empty and no rows given".into()));
            }
        }
        let [a, b] = self.risk_interval;
        if !(a < b) {
            return Err(ExperimentError::Config(format!("risk interval [{a}, {b}] invalid")));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(ExperimentError::Config(format!("c = {} outside (0,1)", self.c)));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<TableRow> {
        match &self.rows {
            Some(rows) => rows.clone(),
            None => {
                let mut cells = Vec::new();
                for &n in &self.n_list {
                    for &u in &self.u_grid {
                        for &v in &self.v_grid {
                            cells.push(TableRow { n, u, v });
                        }
                    }
                }
                cells
            }
        }
    }

    fn estimator_config(&self, row: &TableRow) -> EstimatorConfig {
        EstimatorConfig {
            variant: self.variant,
            c: self.c,
            u_max: row.u,
            v_max: row.v,
            k_points: self.k_points,
            sigma2: self.sigma2_mode.unwrap_or(Sigma2Mode::Known(self.model.sigma2)),
            lambda: self.lambda_mode.unwrap_or(LambdaMode::PlugIn),
            forward_nodes: self.forward_nodes,
        }
    }

    /// Seed of reporting run `i`.
    pub fn reporting_seed(&self, run: usize) -> u64 {
        self.base_seed + run as u64
    }

    /// Seed of tuning run `i`; disjoint from the reporting block unless
    /// `paper_faithful`.
    pub fn tuning_seed(&self, run: usize) -> u64 {
        if self.paper_faithful {
            self.reporting_seed(run)
        } else {
            self.base_seed + self.runs_per_n as u64 + run as u64
        }
    }
}

/// Aggregates for one table cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub u: f64,
    pub v: f64,
    pub mean_risk: f64,
    pub var_risk: f64,
    pub risks: Vec<f64>,
    pub failures: usize,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskReport {
    pub cells: Vec<CellReport>,
}

/// Composite-Simpson L² distance ∫_a^b (ν̂ − ν)² dx on the estimate's grid.
///
/// The grid must be uniform, contain a and b as nodes (to grid tolerance),
/// and carry at least 64 points inside [a, b].
pub fn risk_l2(
    estimate: &DensityEstimate,
    truth: &JumpDensity,
    a: f64,
    b: f64,
) -> Result<f64, ExperimentError> {
    let xs = &estimate.xs;
    let coverage = || ExperimentError::GridCoverage { a, b, min_points: 64 };
    if xs.len() < 2 {
        return Err(coverage());
    }
    let h = xs[1] - xs[0];
    if xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(ExperimentError::Config("risk grid must be uniform".into()));
    }
    let idx_of = |x: f64| -> Option<usize> {
        let i = ((x - xs[0]) / h).round();
        if i < 0.0 {
            return None;
        }
        let i = i as usize;
        if i < xs.len() && (xs[i] - x).abs() < 1e-6 * h {
            Some(i)
        } else {
            None
        }
    };
    let (ia, ib) = match (idx_of(a), idx_of(b)) {
        (Some(ia), Some(ib)) if ib > ia && ib - ia + 1 >= 64 => (ia, ib),
        _ => return Err(coverage()),
    };
    let truth_at = |x: f64| match estimate.target {
        DensityTarget::Nu => truth.density(x),
        DensityTarget::NuBar => truth.weighted_density(x),
    };
    let sq: Vec<f64> = (ia..=ib)
        .map(|i| {
            let d = estimate.values[i] - truth_at(xs[i]);
            d * d
        })
        .collect();
    Ok(simpson_uniform(&sq, h))
}

fn run_one(
    cfg: &StudyConfig,
    kernel: &GammaExpKernel,
    row: &TableRow,
    seed: u64,
    xs: &[f64],
) -> Result<f64, ExperimentError> {
    let model = cfg.model.triplet()?;
    let x_max = match cfg.x_max_override {
        Some(x) => x,
        None => kernel.truncation_radius(cfg.alpha)?,
    };
    let path =
        simulate_path_with_x_max(&model, kernel, cfg.delta, row.n, cfg.alpha, x_max, seed)?;
    let est_cfg = cfg.estimator_config(row);
    let est = crate::mellin::estimate_levy_density(&path, kernel, &est_cfg, xs)?;
    let [a, b] = cfg.risk_interval;
    risk_l2(&est, &model.jumps, a, b)
}

fn mean_var(risks: &[f64]) -> (f64, f64) {
    let n = risks.len() as f64;
    let mean = risks.iter().sum::<f64>() / n;
    let var = if risks.len() < 2 {
        0.0
    } else {
        risks.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)
    };
    (mean, var)
}

fn run_cell(
    cfg: &StudyConfig,
    kernel: &GammaExpKernel,
    row: &TableRow,
    seeds: &[u64],
) -> Result<CellReport, ExperimentError> {
    let xs = cfg.x_grid.to_vec();
    let start = Instant::now();
    let outcomes: Vec<Result<f64, ExperimentError>> = seeds
        .par_iter()
        .map(|&seed| run_one(cfg, kernel, row, seed, &xs))
        .collect();
    let mut risks = Vec::with_capacity(outcomes.len());
    let mut failures = 0usize;
    for (run, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => risks.push(r),
            Err(e) => match cfg.failure_policy {
                FailurePolicy::Abort => {
                    return Err(ExperimentError::RunFailure {
                        run,
                        n: row.n,
                        u: row.u,
                        v: row.v,
                        source: Box::new(e),
                    })
                }
                FailurePolicy::SkipAndFlag => failures += 1,
            },
        }
    }
    if risks.is_empty() {
        return Err(ExperimentError::Config(format!(
            "every run failed in cell n={}, U={}, V={}",
            row.n, row.u, row.v
        )));
    }
    let (mean_risk, var_risk) = mean_var(&risks);
    Ok(CellReport {
        n: row.n,
        u: row.u,
        v: row.v,
        mean_risk,
        var_risk,
        risks,
        failures,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

fn with_thread_override<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("LEVYMA_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        Some(k) if k >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

/// Execute the study: all cells, `runs_per_n` seeded pipelines each.
pub fn run_study(cfg: &StudyConfig) -> Result<RiskReport, ExperimentError> {
    cfg.validate()?;
    let kernel = cfg.kernel.build()?;
    let seeds: Vec<u64> = (0..cfg.runs_per_n).map(|i| cfg.reporting_seed(i)).collect();
    with_thread_override(|| {
        let mut cells = Vec::new();
        for row in cfg.cells() {
            cells.push(run_cell(cfg, &kernel, &row, &seeds)?);
        }
        Ok(RiskReport { cells })
    })
}

/// Tuning result for one sample size.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TunedRow {
    pub n: usize,
    pub u: f64,
    pub v: f64,
    pub mean_risk: f64,
}

/// Grid search minimizing mean risk per n over the held-out seed block;
/// ties break toward smaller U, then smaller V.
pub fn tune_parameters(cfg: &StudyConfig) -> Result<Vec<TunedRow>, ExperimentError> {
    cfg.validate()?;
    if cfg.u_grid.is_empty() || cfg.v_grid.is_empty() || cfg.n_list.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    let kernel = cfg.kernel.build()?;
    let mut u_grid = cfg.u_grid.clone();
    let mut v_grid = cfg.v_grid.clone();
    u_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let seeds: Vec<u64> = (0..cfg.runs_per_n).map(|i| cfg.tuning_seed(i)).collect();
    if !cfg.paper_faithful {
        debug_assert!(seeds.iter().all(|s| *s >= cfg.base_seed + cfg.runs_per_n as u64));
    }
    with_thread_override(|| {
        let mut tuned = Vec::new();
        for &n in &cfg.n_list {
            let mut best: Option<TunedRow> = None;
            for &u in &u_grid {
                for &v in &v_grid {
                    let row = TableRow { n, u, v };
                    let cell = run_cell(cfg, &kernel, &row, &seeds)?;
                    let better = match &best {
                        None => true,
                        Some(b) => cell.mean_risk < b.mean_risk,
                    };
                    if better {
                        best = Some(TunedRow { n, u, v, mean_risk: cell.mean_risk });
                    }
                }
            }
            tuned.push(best.ok_or(ExperimentError::EmptyGrid)?);
        }
        Ok(tuned)
    })
}

/// Write the study table as CSV: `n,U,V,mean_risk,var_risk`.
pub fn emit_table<W: Write>(report: &RiskReport, out: &mut W) -> Result<(), ExperimentError> {
    writeln!(out, "n,U,V,mean_risk,var_risk")?;
    for c in &report.cells {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e},{:.16e}", c.n, c.u, c.v, c.mean_risk, c.var_risk)?;
    }
    Ok(())
}

/// Rows of a parsed study table: (n, U, V, mean risk, risk variance).
pub type TableRows = Vec<(usize, f64, f64, f64, f64)>;

/// Parse a table written by [`emit_table`] (round-trip support).
pub fn parse_table<R: BufRead>(input: R) -> Result<TableRows, ExperimentError> {
    let mut rows = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if lineno == 0 {
            if trimmed != "n,U,V,mean_risk,var_risk" {
                return Err(ExperimentError::Parse {
                    line: 1,
                    reason: format!("unexpected header '{trimmed}'"),
                });
            }
            continue;
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() != 5 {
            return Err(ExperimentError::Parse {
                line: lineno + 1,
                reason: format!("expected 5 columns, got {}", parts.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64, ExperimentError> {
            s.parse().map_err(|e: std::num::ParseFloatError| ExperimentError::Parse {
                line: lineno + 1,
                reason: e.to_string(),
            })
        };
        rows.push((
            parts[0].parse().map_err(|e: std::num::ParseIntError| ExperimentError::Parse {
                line: lineno + 1,
                reason: e.to_string(),
            })?,
            parse_f(parts[1])?,
            parse_f(parts[2])?,
            parse_f(parts[3])?,
            parse_f(parts[4])?,
        ));
    }
    Ok(rows)
}

/// Write estimate-vs-truth curves as CSV: `x,nu_hat,nu_true`.
pub fn emit_plotdata<W: Write>(
    estimate: &DensityEstimate,
    truth: &JumpDensity,
    out: &mut W,
) -> Result<(), ExperimentError> {
    if let Some(info) = &estimate.info {
        writeln!(
            out,
            "# levyma estimate: variant={:?} c={} U={} V={} K={} sigma2={} n={} delta={}",
            info.variant, info.c, info.u_max, info.v_max, info.k_points, info.sigma2, info.n,
            info.delta
        )?;
    }
    writeln!(out, "x,nu_hat,nu_true")?;
    for (x, v) in estimate.xs.iter().zip(&estimate.values) {
        let t = match estimate.target {
            DensityTarget::Nu => truth.density(*x),
            DensityTarget::NuBar => truth.weighted_density(*x),
        };
        writeln!(out, "{:.16e},{:.16e},{:.16e}", x, v, t)?;
    }
    Ok(())
}
