//! `ts1-bench` subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use ts1_core::io::{read_matrix_csv, write_matrix_csv, GrayImage, PgmFormat};
use ts1_core::problem::{
    add_noise, freedom_ratio_display, gen_gaussian_lowrank, image_to_lowrank_truth, sample_uniform, GroundTruth,
    MaskedMatrix,
};
use ts1_core::solver::{solve, Algorithm, RankInput, SolverConfig, DEFAULT_MAX_ITERS, DEFAULT_MU, DEFAULT_TOL};
use ts1_core::RecoveryMetrics;

use crate::config::{ExperimentSpec, ImageSource, Suite};
use crate::image;
use crate::record::{aggregate_success, emit_csv, emit_success_csv, write_csv, ExperimentRecord};
use crate::runner::{run_suite, summarize, trial_streams};

#[derive(Debug, Parser)]
#[command(name = "ts1-bench", version, about = "TS1 matrix completion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic problem: truth.csv, observed.csv (NaN = missing), meta.toml.
    Gen(GenArgs),
    /// Solve one problem with one solver and print its metrics.
    Solve(SolveArgs),
    /// Run an experiment suite from a TOML config.
    Bench(BenchArgs),
    /// Image pipeline: truncate, add noise, sample, recover.
    Inpaint(InpaintArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// True rank (or target rank of the image truncation).
    #[arg(long, default_value_t = 5)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.4)]
    pub sr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub cov: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "ts1-s2")]
    pub solver: Algorithm,
    #[arg(long, default_value_t = DEFAULT_MU)]
    pub mu: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Estimate the rank starting from working rank K instead of using --rank.
    #[arg(long, value_name = "K")]
    pub rank_estimate: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub r_min: usize,
}

impl SolverArgs {
    fn config(&self, rank: Option<usize>) -> anyhow::Result<SolverConfig<f64>> {
        let mut cfg = SolverConfig::new(self.solver)
            .with_mu(self.mu)
            .with_tol(self.tol)
            .with_max_iters(self.max_iters);
        cfg.a = self.a;
        cfg.lambda = self.lambda;
        cfg.rank_input = match (self.rank_estimate, rank) {
            (Some(k), _) => Some(RankInput::Estimate { k, r_min: self.r_min }),
            (None, Some(r)) => Some(RankInput::Known(r)),
            (None, None) => None,
        };
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Observed matrix CSV with NaN for missing entries; generated from the
    /// problem flags when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ground truth CSV, for metrics when --input is used.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Write the recovered matrix as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub config: PathBuf,
    /// Use the full-scale trial count (`full_trials`, default 50).
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV path; overrides the config. Without either, rows go to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InpaintArgs {
    /// PGM or CSV image with values in [0, 1], or "synthetic".
    #[arg(long, default_value = "synthetic")]
    pub image: String,
    /// Side length of the synthetic image.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 10)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.4)]
    pub sr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory for recovered.pgm, observed.pgm and metrics.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Meta {
    m: usize,
    n: usize,
    rank: usize,
    sr: f64,
    p: usize,
    fr: f64,
    cov: f64,
    noise: f64,
    seed: u64,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Inpaint(a) => inpaint(a),
    }
}

/// Generated problem: clean truth and the sample of its noisy version.
fn generate(p: &ProblemArgs) -> anyhow::Result<(GroundTruth<f64>, MaskedMatrix<f64>)> {
    let (truth_seed, sample_seed, noise_seed) = trial_streams(p.seed, 0);
    let truth = gen_gaussian_lowrank(p.m, p.n, p.rank, p.cov, truth_seed)?;
    let noisy = add_noise(&truth, p.noise, noise_seed)?;
    let problem = sample_uniform(&noisy, p.sr, sample_seed)?;
    Ok((truth, problem))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn nan_filled(problem: &MaskedMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = problem.dims();
    let mut x = DMatrix::from_element(m, n, f64::NAN);
    for (k, &ij) in problem.omega().iter().enumerate() {
        x[ij] = problem.values()[k];
    }
    x
}

fn from_nan_filled(observed: &DMatrix<f64>, rank: Option<usize>) -> anyhow::Result<MaskedMatrix<f64>> {
    let (m, n) = observed.shape();
    let mut omega = Vec::new();
    let mut values = Vec::new();
    for j in 0..n {
        for i in 0..m {
            let v = observed[(i, j)];
            if !v.is_nan() {
                omega.push((i, j));
                values.push(v);
            }
        }
    }
    if omega.is_empty() {
        bail!("observed matrix has no entries");
    }
    Ok(MaskedMatrix::new((m, n), omega, DVector::from_vec(values), rank)?)
}

fn gen(a: GenArgs) -> anyhow::Result<()> {
    let (truth, problem) = generate(&a.problem)?;
    create_dir(&a.out)?;
    write_matrix_csv(&a.out.join("truth.csv"), &truth.m_full)?;
    write_matrix_csv(&a.out.join("observed.csv"), &nan_filled(&problem))?;
    let d = problem.descriptors().expect("rank known");
    let meta = Meta {
        m: a.problem.m,
        n: a.problem.n,
        rank: a.problem.rank,
        sr: d.sr,
        p: problem.p(),
        fr: d.fr,
        cov: a.problem.cov,
        noise: a.problem.noise,
        seed: a.problem.seed,
    };
    let path = a.out.join("meta.toml");
    std::fs::write(&path, toml::to_string(&meta)?).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "wrote {}: {}x{} rank {} p={} FR={}",
        a.out.display(),
        meta.m,
        meta.n,
        meta.rank,
        meta.p,
        freedom_ratio_display(meta.m, meta.n, meta.rank, meta.p)
    );
    Ok(())
}

fn solve_cmd(a: SolveArgs) -> anyhow::Result<()> {
    let (problem, truth) = match &a.input {
        Some(path) => {
            let observed = read_matrix_csv::<f64>(path)?;
            let truth = a.truth.as_deref().map(read_matrix_csv::<f64>).transpose()?;
            (from_nan_filled(&observed, Some(a.problem.rank))?, truth)
        }
        None => {
            let (truth, problem) = generate(&a.problem)?;
            (problem, Some(truth.m_full))
        }
    };
    let cfg = a.solver.config(Some(a.problem.rank))?;
    let start = Instant::now();
    let report = solve(&problem, &cfg)?;
    let secs = start.elapsed().as_secs_f64();

    let mut line = format!(
        "solver={} iterations={} converged={} residual={:e}",
        report.algorithm, report.iterations, report.converged, report.final_residual
    );
    if let Some(k) = report.rank_estimate {
        line.push_str(&format!(" rank_estimated={k}"));
    }
    if let Some(truth) = &truth {
        let m = RecoveryMetrics::evaluate(&report.x_opt, truth, 1.0)?;
        line.push_str(&format!(" rel_err={:e} success={}", m.rel_err, m.success));
    }
    line.push_str(&format!(" seconds={secs:.2}"));
    println!("{line}");
    if let Some(out) = &a.out {
        write_matrix_csv(out, &report.x_opt)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    let mut spec = ExperimentSpec::from_path(&a.config)?;
    if a.full {
        spec = spec.with_full_trials();
    }
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if a.out.is_some() {
        spec.output = a.out;
    }
    let records = run_suite(&spec)?;

    match &spec.output {
        Some(path) => {
            emit_csv(&records, path)?;
            eprintln!("wrote {} rows to {}", records.len(), path.display());
        }
        None => write_csv(&records, std::io::stdout().lock())?,
    }
    if let Some(path) = spec.curve_path() {
        emit_success_csv(&aggregate_success(&records), &path)?;
        eprintln!("wrote success rates to {}", path.display());
    }
    let mut err = std::io::stderr().lock();
    for c in summarize(&records) {
        writeln!(
            err,
            "{:<8} r={:<3} sr={:<6} fr={:.4} cov={} noise={}: median rel_err {:.3e}, success {:.2}, iters {:.0}, {:.2}s{}",
            c.solver,
            c.r,
            c.sr,
            c.fr,
            c.cov,
            c.sigma_noise,
            c.median_rel_err,
            c.success_rate,
            c.mean_iterations,
            c.mean_seconds,
            if c.failures > 0 { format!(", {} failed", c.failures) } else { String::new() }
        )?;
    }
    Ok(())
}

fn inpaint(a: InpaintArgs) -> anyhow::Result<()> {
    let source = match a.image.as_str() {
        "synthetic" => ImageSource::Synthetic { size: a.size },
        path => ImageSource::File(PathBuf::from(path)),
    };
    let pixels = image::resolve(&source)?;
    let truth = image_to_lowrank_truth(&pixels, a.rank)?;
    let (_, sample_seed, noise_seed) = trial_streams(a.seed, 0);
    let noisy = add_noise(&truth, a.noise, noise_seed)?;
    let problem = sample_uniform(&noisy, a.sr, sample_seed)?;

    let cfg = a.solver.config(Some(a.rank))?;
    let start = Instant::now();
    let report = solve(&problem, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let metrics = RecoveryMetrics::evaluate(&report.x_opt, &truth.m_full, a.peak)?;

    create_dir(&a.out)?;
    let to_pgm = |m: &DMatrix<f64>| GrayImage::from_unit_matrix(m, 255);
    to_pgm(&report.x_opt).write(&a.out.join("recovered.pgm"), PgmFormat::Binary)?;
    to_pgm(&problem.zero_filled()).write(&a.out.join("observed.pgm"), PgmFormat::Binary)?;
    to_pgm(&truth.m_full).write(&a.out.join("truth.pgm"), PgmFormat::Binary)?;

    let (m, n) = truth.m_full.shape();
    let d = problem.descriptors().expect("rank known");
    let record = ExperimentRecord {
        suite: Suite::Inpaint,
        solver: report.algorithm.name().to_string(),
        m,
        n,
        r: a.rank,
        sr: d.sr,
        fr: d.fr,
        cov: 0.0,
        sigma_noise: a.noise,
        trial: 0,
        rel_err: metrics.rel_err,
        psnr: metrics.psnr,
        mse: metrics.mse,
        success: metrics.success,
        iterations: report.iterations,
        wall_time_seconds: secs,
        rank_estimated: report.rank_estimate,
        error: None,
    };
    emit_csv(&[record], &a.out.join("metrics.csv"))?;
    println!(
        "solver={} psnr={:.2} mse={:e} rel_err={:e} iterations={} seconds={secs:.2}",
        report.algorithm, metrics.psnr, metrics.mse, metrics.rel_err, report.iterations
    );
    Ok(())
}
