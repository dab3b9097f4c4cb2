//! Experiment description, loaded from a TOML file with `[experiment]`,
//! `[problem]`, `[solver]` and (for inpainting) `[inpaint]` sections.
//!
//! ```toml
//! [experiment]
//! suite = "table-known-rank"
//! seed = 1
//! trials = 10
//!
//! [problem]
//! m = 100
//! n = 100
//! ranks = [5, 6, 7]
//! sr = 0.4
//!
//! [solver]
//! names = ["ts1-s2"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use ts1_core::solver::{Algorithm, RankInput, SolverConfig, DEFAULT_MAX_ITERS, DEFAULT_MU, DEFAULT_TOL};

use crate::error::{io_err, BenchError, Result};

/// Trial count restored by `--full`.
pub const FULL_TRIALS: usize = 50;

/// Initial overestimate `K = ⌊1.5 r⌋` when rank estimation is on.
pub const DEFAULT_K_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    TableKnownRank,
    TableCovKnownRank,
    TableRankEstimate,
    SuccessCurve,
    Inpaint,
    Single,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::TableKnownRank,
        Suite::TableCovKnownRank,
        Suite::TableRankEstimate,
        Suite::SuccessCurve,
        Suite::Inpaint,
        Suite::Single,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::TableKnownRank => "table-known-rank",
            Suite::TableCovKnownRank => "table-cov-known-rank",
            Suite::TableRankEstimate => "table-rank-estimate",
            Suite::SuccessCurve => "success-curve",
            Suite::Inpaint => "inpaint",
            Suite::Single => "single",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == key)
            .ok_or_else(|| BenchError::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankMode {
    Known,
    /// `k = None` uses `⌊k_factor · r⌋`.
    Estimate { k: Option<usize>, k_factor: f64, r_min: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    Synthetic { size: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub mu: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub a: Option<f64>,
    pub lambda: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mu: DEFAULT_MU,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            a: None,
            lambda: None,
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub suite: Suite,
    /// Ignored by inpainting, which takes its size from the image.
    pub dims: (usize, usize),
    /// True ranks, or target ranks of the image truncation.
    pub ranks: Vec<usize>,
    pub sr: Vec<f64>,
    pub cov: Vec<f64>,
    pub noise: Vec<f64>,
    pub trials: usize,
    pub full_trials: usize,
    pub solvers: Vec<Algorithm>,
    pub rank_mode: RankMode,
    pub options: SolverOptions,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Success-rate aggregate; defaults to `<output>_success.csv` for curve suites.
    pub curve_output: Option<PathBuf>,
    pub image: Option<ImageSource>,
    pub peak: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    experiment: RawExperiment,
    #[serde(default)]
    problem: RawProblem,
    #[serde(default)]
    solver: RawSolver,
    inpaint: Option<RawInpaint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    suite: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    trials: usize,
    #[serde(default = "full_trials_default")]
    full_trials: usize,
    output: Option<PathBuf>,
    curve_output: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    m: Option<usize>,
    n: Option<usize>,
    ranks: Option<OneOrMany<usize>>,
    sr: Option<OneOrMany<f64>>,
    cov: Option<OneOrMany<f64>>,
    noise: Option<OneOrMany<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    names: Option<OneOrMany<String>>,
    rank: Option<String>,
    k: Option<usize>,
    k_factor: Option<f64>,
    r_min: Option<usize>,
    mu: Option<f64>,
    tol: Option<f64>,
    max_iters: Option<usize>,
    a: Option<f64>,
    lambda: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInpaint {
    image: Option<String>,
    size: Option<usize>,
    peak: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

fn one() -> usize {
    1
}

fn full_trials_default() -> usize {
    FULL_TRIALS
}

impl ExperimentSpec {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let raw: RawFile = toml::from_str(&text).map_err(|source| BenchError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_raw(raw)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawFile) -> Result<Self> {
        let suite: Suite = raw.experiment.suite.parse()?;
        let p = raw.problem;
        let s = raw.solver;

        let solvers = s
            .names
            .map(OneOrMany::into_vec)
            .unwrap_or_else(|| vec!["ts1-s2".to_string()])
            .iter()
            .map(|name| name.parse::<Algorithm>().map_err(|e| BenchError::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;

        let default_mode = if suite == Suite::TableRankEstimate { "estimate" } else { "known" };
        let rank_mode = match s.rank.as_deref().unwrap_or(default_mode) {
            "known" => RankMode::Known,
            "estimate" => RankMode::Estimate {
                k: s.k,
                k_factor: s.k_factor.unwrap_or(DEFAULT_K_FACTOR),
                r_min: s.r_min.unwrap_or(1),
            },
            other => {
                return Err(BenchError::Config(format!(
                    "solver.rank must be \"known\" or \"estimate\", got {other:?}"
                )))
            }
        };

        let (image, peak) = match raw.inpaint {
            Some(ip) => {
                let size = ip.size.unwrap_or(128);
                let source = match ip.image.as_deref() {
                    None | Some("synthetic") => ImageSource::Synthetic { size },
                    Some(path) => ImageSource::File(PathBuf::from(path)),
                };
                (Some(source), ip.peak.unwrap_or(1.0))
            }
            None if suite == Suite::Inpaint => (Some(ImageSource::Synthetic { size: 128 }), 1.0),
            None => (None, 1.0),
        };

        let spec = ExperimentSpec {
            suite,
            dims: (p.m.unwrap_or(100), p.n.unwrap_or(100)),
            ranks: p.ranks.map(OneOrMany::into_vec).unwrap_or_else(|| vec![5]),
            sr: p.sr.map(OneOrMany::into_vec).unwrap_or_else(|| vec![0.4]),
            cov: p.cov.map(OneOrMany::into_vec).unwrap_or_else(|| vec![0.0]),
            noise: p.noise.map(OneOrMany::into_vec).unwrap_or_else(|| vec![0.0]),
            trials: raw.experiment.trials,
            full_trials: raw.experiment.full_trials,
            solvers,
            rank_mode,
            options: SolverOptions {
                mu: s.mu.unwrap_or(DEFAULT_MU),
                tol: s.tol.unwrap_or(DEFAULT_TOL),
                max_iters: s.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
                a: s.a,
                lambda: s.lambda,
            },
            seed: raw.experiment.seed,
            output: raw.experiment.output,
            curve_output: raw.experiment.curve_output,
            image,
            peak,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Full-scale trial count.
    pub fn with_full_trials(mut self) -> Self {
        self.trials = self.full_trials;
        self
    }

    /// Working dimensions: the image size for inpainting, else `dims`.
    pub fn problem_dims(&self) -> (usize, usize) {
        match (&self.suite, &self.image) {
            (Suite::Inpaint, Some(ImageSource::Synthetic { size })) => (*size, *size),
            _ => self.dims,
        }
    }

    /// Rejects anything that would fail only once trials are running.
    /// File-backed images are checked when loaded.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.full_trials == 0 {
            return bad("full_trials must be at least 1".into());
        }
        for (name, empty) in [
            ("ranks", self.ranks.is_empty()),
            ("sr", self.sr.is_empty()),
            ("cov", self.cov.is_empty()),
            ("noise", self.noise.is_empty()),
            ("solver names", self.solvers.is_empty()),
        ] {
            if empty {
                return bad(format!("{name} must not be empty"));
            }
        }
        if let Some(v) = self.sr.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return bad(format!("sr must lie in (0, 1], got {v}"));
        }
        if let Some(v) = self.cov.iter().find(|&&v| !(0.0..1.0).contains(&v)) {
            return bad(format!("cov must lie in [0, 1), got {v}"));
        }
        if let Some(v) = self.noise.iter().find(|&&v| !(v >= 0.0 && v.is_finite())) {
            return bad(format!("noise must be a nonnegative number, got {v}"));
        }
        if !(self.peak > 0.0) {
            return bad(format!("peak must be positive, got {}", self.peak));
        }
        if self.suite == Suite::Inpaint && self.image.is_none() {
            return bad("inpaint suite needs an image source".into());
        }
        let (m, n) = self.problem_dims();
        if m == 0 || n == 0 {
            return bad(format!("matrix dimensions must be positive, got {m}x{n}"));
        }
        let known_size = !matches!(self.image, Some(ImageSource::File(_))) || self.suite != Suite::Inpaint;
        for &r in &self.ranks {
            if r == 0 {
                return bad("ranks must be positive".into());
            }
            if known_size {
                for &alg in &self.solvers {
                    self.solver_config(alg, r)?
                        .validate((m, n), 1.0)
                        .map_err(|e| BenchError::Config(format!("rank {r}, solver {alg}: {e}")))?;
                }
            }
        }
        Ok(())
    }

    /// Solver configuration for one true (or target) rank.
    pub fn solver_config(&self, algorithm: Algorithm, r: usize) -> Result<SolverConfig<f64>> {
        let o = self.options;
        let mut cfg = SolverConfig::new(algorithm)
            .with_mu(o.mu)
            .with_tol(o.tol)
            .with_max_iters(o.max_iters);
        cfg.a = o.a;
        cfg.lambda = o.lambda;
        cfg.rank_input = Some(match self.rank_mode {
            RankMode::Known => RankInput::Known(r),
            RankMode::Estimate { k, k_factor, r_min } => {
                let k = k.unwrap_or_else(|| (k_factor * r as f64).floor() as usize);
                RankInput::Estimate { k, r_min }
            }
        });
        Ok(cfg)
    }

    /// Where the aggregate success-rate CSV goes, if anywhere.
    pub fn curve_path(&self) -> Option<PathBuf> {
        if let Some(p) = &self.curve_output {
            return Some(p.clone());
        }
        if self.suite != Suite::SuccessCurve {
            return None;
        }
        self.output.as_ref().map(|out| {
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
            out.with_file_name(format!("{stem}_success.csv"))
        })
    }
}
