//! Fixed-point completion solvers `X ← shrink(B_μ(X))`.
//!
//! * [`Algorithm::Ts1It`]: fixed `(λ, a)`.
//! * [`Algorithm::Ts1S1`]: fixed `a`, `λ` re-selected from the spectrum each step.
//! * [`Algorithm::Ts1S2`]: `a` and `λ` both re-selected.
//! * [`Algorithm::NuclearBaseline`]: singular value soft thresholding.

mod rank;
mod select;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Result, Ts1Error};
use crate::operator::{LinearOperator, ObjectiveContext, SamplingOperator};
use crate::problem::MaskedMatrix;
use crate::scalar::Real;
use crate::spectral::{gram_reliable, SvdFactors};
use crate::thresholding::ThresholdParams;

pub use rank::{
    estimate_rank, estimate_rank_from_eigenvalues, estimate_rank_from_singular_values, RankEstimate,
    EIGEN_FLOOR, TAU_THRESHOLD,
};
pub use select::{
    ts1_s1_select, ts1_s1_select_lambda, ts1_s2_select, ts1_s2_select_params, Selection, Shrinkage,
    LAMBDA_MU_FLOOR,
};

pub const DEFAULT_MU: f64 = 0.99;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 5000;

/// Nuclear baseline without an explicit `λ`: continuation from
/// `NUCLEAR_START·σ₁` down to `NUCLEAR_TARGET·σ₁` (σ₁ of the zero-filled data),
/// shrinking by `NUCLEAR_DECAY` whenever a stage settles below `NUCLEAR_STAGE_TOL`.
pub const NUCLEAR_START: f64 = 0.25;
pub const NUCLEAR_TARGET: f64 = 1e-4;
pub const NUCLEAR_DECAY: f64 = 0.25;
pub const NUCLEAR_STAGE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Ts1It,
    Ts1S1,
    Ts1S2,
    NuclearBaseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ts1It,
        Algorithm::Ts1S1,
        Algorithm::Ts1S2,
        Algorithm::NuclearBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ts1It => "ts1-it",
            Algorithm::Ts1S1 => "ts1-s1",
            Algorithm::Ts1S2 => "ts1-s2",
            Algorithm::NuclearBaseline => "nuclear",
        }
    }

    fn needs_rank(self) -> bool {
        matches!(self, Algorithm::Ts1S1 | Algorithm::Ts1S2)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Ts1Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .or(match key.as_str() {
                "ts1it" => Some(Algorithm::Ts1It),
                "ts1s1" | "s1" => Some(Algorithm::Ts1S1),
                "ts1s2" | "s2" => Some(Algorithm::Ts1S2),
                "nuclear-baseline" | "svt" => Some(Algorithm::NuclearBaseline),
                _ => None,
            })
            .ok_or_else(|| {
                Ts1Error::Config(format!(
                    "unknown solver {s:?} (expected one of ts1-it, ts1-s1, ts1-s2, nuclear)"
                ))
            })
    }
}

/// How the working rank of TS1-s1 / TS1-s2 is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankInput {
    Known(usize),
    /// Start from `k` and allow one eigengap adjustment, never below `r_min`.
    Estimate { k: usize, r_min: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub algorithm: Algorithm,
    pub mu: T,
    /// TL1 shape; `None` selects the per-algorithm default.
    pub a: Option<T>,
    /// Regularisation weight for TS1-IT and the nuclear baseline.
    pub lambda: Option<T>,
    pub rank_input: Option<RankInput>,
    pub tol: T,
    pub max_iters: usize,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            mu: T::lit(DEFAULT_MU),
            a: None,
            lambda: None,
            rank_input: None,
            tol: T::lit(DEFAULT_TOL),
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_a(mut self, a: T) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_rank(mut self, rank_input: RankInput) -> Self {
        self.rank_input = Some(rank_input);
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    /// Checks the configuration against an `m × n` problem and an operator
    /// norm bound `‖𝒜‖`.
    pub fn validate(&self, dims: (usize, usize), op_norm: T) -> Result<()> {
        let cfg = |msg: String| Err(Ts1Error::Config(msg));
        let mu_max = T::one() / (op_norm * op_norm);
        if !(self.mu > T::zero() && self.mu < mu_max) {
            return cfg(format!("mu must lie in (0, {mu_max}), got {}", self.mu));
        }
        if !(self.tol > T::zero()) {
            return cfg(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            return cfg("max_iters must be at least 1".into());
        }
        if let Some(a) = self.a {
            if !(a > T::zero()) || !Float::is_finite(a) {
                return cfg(format!("a must be positive, got {a}"));
            }
        }
        if let Some(l) = self.lambda {
            if !(l > T::zero()) || !Float::is_finite(l) {
                return cfg(format!("lambda must be positive, got {l}"));
            }
        }
        if self.algorithm == Algorithm::Ts1It && self.lambda.is_none() {
            return cfg("ts1-it needs an explicit lambda".into());
        }
        let min_dim = dims.0.min(dims.1);
        match self.rank_input {
            None if self.algorithm.needs_rank() => {
                return cfg(format!("{} needs a known rank or a rank estimate", self.algorithm));
            }
            Some(RankInput::Known(r)) if r < 1 || r >= min_dim => {
                return cfg(format!("known rank must satisfy 1 <= r < {min_dim}, got {r}"));
            }
            Some(RankInput::Estimate { k, r_min }) if r_min < 1 || r_min >= k || k + 1 > min_dim => {
                return cfg(format!(
                    "rank estimate must satisfy 1 <= r_min < K <= {}, got K = {k}, r_min = {r_min}",
                    min_dim.saturating_sub(1)
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// `a` used by the run: explicit value, else TS1-s1 with an estimated rank
    /// takes 1000 below freedom ratio 0.6 and 10 otherwise (10 when the ratio
    /// is unknown), and every other case takes 1.
    pub fn resolve_a(&self, freedom_ratio: Option<f64>) -> T {
        if let Some(a) = self.a {
            return a;
        }
        match (self.algorithm, self.rank_input) {
            (Algorithm::Ts1S1, Some(RankInput::Estimate { .. })) => match freedom_ratio {
                Some(fr) if fr < 0.6 => T::lit(1000.0),
                _ => T::lit(10.0),
            },
            _ => T::one(),
        }
    }
}

/// Iteration variables `X^n, λ_n, a_n, t_n` and the working rank.
#[derive(Debug, Clone)]
pub struct SolverState<T: Real> {
    pub x: DMatrix<T>,
    pub iter: usize,
    pub lambda_n: T,
    pub lambda_mu: T,
    pub a_n: T,
    pub t_n: T,
    pub rank_estimate: Option<usize>,
    pub rank_adjusted: bool,
}

impl<T: Real> SolverState<T> {
    pub fn new(x0: DMatrix<T>) -> Self {
        SolverState {
            x: x0,
            iter: 0,
            lambda_n: T::zero(),
            lambda_mu: T::zero(),
            a_n: T::zero(),
            t_n: T::zero(),
            rank_estimate: None,
            rank_adjusted: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    pub residual: T,
    pub lambda: T,
    pub a: T,
    pub t: T,
    pub rank_estimate: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SolveReport<T: Real> {
    pub algorithm: Algorithm,
    pub x_opt: DMatrix<T>,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: T,
    pub history: Vec<IterationRecord<T>>,
    pub mu: T,
    pub rank_estimate: Option<usize>,
    pub rank_adjusted: bool,
    /// Spectral map of the last iteration.
    pub final_shrinkage: Shrinkage<T>,
}

impl<T: Real> SolveReport<T> {
    pub fn final_lambda(&self) -> T {
        self.history.last().map_or(T::zero(), |h| h.lambda)
    }

    pub fn final_a(&self) -> T {
        self.history.last().map_or(T::zero(), |h| h.a)
    }

    pub fn final_t(&self) -> T {
        self.history.last().map_or(T::zero(), |h| h.t)
    }

    /// Fixed-point certificate of `x_opt` under the final spectral map.
    pub fn fixed_point_residual(&self, problem: &MaskedMatrix<T>) -> Result<T> {
        fixed_point_residual(
            &problem.operator(),
            problem.values(),
            self.mu,
            &self.final_shrinkage,
            &self.x_opt,
        )
    }
}

/// `‖X − shrink(B_μ(X))‖_F / ‖X‖_F` (denominator floored at 1 for `X = 0`).
pub fn fixed_point_residual<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    b: &DVector<T>,
    mu: T,
    shrinkage: &Shrinkage<T>,
    x: &DMatrix<T>,
) -> Result<T> {
    let y = op.gradient_step(b, mu, x)?;
    let svd = SvdFactors::compute(&y)?;
    let gx = svd.compose(&shrinkage.apply(svd.sigma.as_slice()));
    let norm = x.norm();
    let denom = if norm > T::zero() { norm } else { T::one() };
    Ok((x - gx).norm() / denom)
}

/// One TS1-IT step `X ← G_{λμ,a}(B_μ(X))` with the context's fixed `(λ, μ, a)`.
pub fn ts1_it_step<T: Real, O: LinearOperator<T>>(
    state: &SolverState<T>,
    ctx: &ObjectiveContext<T, O>,
) -> Result<SolverState<T>> {
    let params = ThresholdParams::new(ctx.a, ctx.lambda * ctx.mu)?;
    let shrinkage = Shrinkage::Ts1 { params, keep: None };
    let svd = SvdFactors::compute(&ctx.b_mu_step(&state.x)?)?;
    Ok(SolverState {
        x: svd.compose(&shrinkage.apply(svd.sigma.as_slice())),
        iter: state.iter + 1,
        lambda_n: ctx.lambda,
        lambda_mu: params.lambda_mu(),
        a_n: ctx.a,
        t_n: params.t(),
        ..state.clone()
    })
}

/// One soft-thresholding step `X ← U·max(Σ − λμ, 0)·Vᵀ` of `B_μ(X)`.
pub fn nuclear_baseline_step<T: Real, O: LinearOperator<T>>(
    state: &SolverState<T>,
    ctx: &ObjectiveContext<T, O>,
) -> Result<SolverState<T>> {
    let level = ctx.lambda * ctx.mu;
    let y = ctx.b_mu_step(&state.x)?;
    let x = if level == T::zero() {
        y
    } else {
        let svd = SvdFactors::compute(&y)?;
        svd.compose(&Shrinkage::Soft { level }.apply(svd.sigma.as_slice()))
    };
    Ok(SolverState {
        x,
        iter: state.iter + 1,
        lambda_n: ctx.lambda,
        lambda_mu: level,
        a_n: T::infinity(),
        t_n: level,
        ..state.clone()
    })
}

/// Runs the configured algorithm from the zero-filled observations.
pub fn solve<T: Real>(problem: &MaskedMatrix<T>, config: &SolverConfig<T>) -> Result<SolveReport<T>> {
    let op: SamplingOperator = problem.operator();
    let fr = problem.descriptors().map(|d| d.fr);
    solve_with_operator(&op, problem.values(), problem.zero_filled(), config, fr)
}

/// Generic driver over any measurement operator, starting from `x0`.
pub fn solve_with_operator<T: Real, O: LinearOperator<T>>(
    op: &O,
    b: &DVector<T>,
    x0: DMatrix<T>,
    config: &SolverConfig<T>,
    freedom_ratio: Option<f64>,
) -> Result<SolveReport<T>> {
    let dims = op.dims();
    if x0.shape() != dims {
        return Err(Ts1Error::dims(format!("{dims:?}"), format!("{:?}", x0.shape())));
    }
    if b.len() != op.num_measurements() {
        return Err(Ts1Error::dims(
            format!("{} observations", op.num_measurements()),
            format!("{}", b.len()),
        ));
    }
    let op_norm = crate::operator::operator_norm(op)?;
    config.validate(dims, op_norm)?;

    let mu = config.mu;
    let a_fixed = config.resolve_a(freedom_ratio);
    let mut state = SolverState::new(x0);
    state.rank_estimate = match config.rank_input {
        Some(RankInput::Known(r)) => Some(r),
        Some(RankInput::Estimate { k, .. }) => Some(k),
        None => None,
    };
    let r_min = match config.rank_input {
        Some(RankInput::Estimate { r_min, .. }) => Some(r_min),
        _ => None,
    };

    // Continuation schedule for the nuclear baseline without explicit λ.
    let mut soft_level: Option<(T, T)> = None;

    let mut history = Vec::new();
    let mut converged = false;
    let mut residual = T::infinity();
    let mut shrinkage = Shrinkage::Soft { level: T::zero() };

    for _ in 0..config.max_iters {
        let y = op.gradient_step(b, mu, &state.x)?;
        let ctx = StepContext {
            config,
            a_fixed,
            r_min,
            rank: state.rank_estimate,
            rank_adjusted: state.rank_adjusted,
            soft_level,
            residual,
        };
        // The Gram factorisation is exact enough unless the step touches
        // singular values far below σ₁; then redo it with the full SVD.
        let mut svd = SvdFactors::compute_gram(&y)?;
        let mut step = ctx.choose(svd.sigma.as_slice())?;
        let mut shrunk = step.shrinkage.apply(svd.sigma.as_slice());
        if !gram_reliable(svd.sigma.as_slice(), step.needed(&shrunk)) {
            svd = SvdFactors::compute(&y)?;
            step = ctx.choose(svd.sigma.as_slice())?;
            shrunk = step.shrinkage.apply(svd.sigma.as_slice());
        }
        state.rank_estimate = step.rank;
        state.rank_adjusted = step.rank_adjusted;
        soft_level = step.soft_level;
        shrinkage = step.shrinkage;
        let (lambda_mu, a_n, t_n) = (step.lambda_mu, step.a, step.t);

        let x_next = svd.compose(&shrunk);
        let norm = state.x.norm();
        residual = (&x_next - &state.x).norm() / Float::max(norm, T::one());

        state.x = x_next;
        state.iter += 1;
        state.lambda_mu = lambda_mu;
        state.lambda_n = lambda_mu / mu;
        state.a_n = a_n;
        state.t_n = t_n;
        history.push(IterationRecord {
            residual,
            lambda: state.lambda_n,
            a: a_n,
            t: t_n,
            rank_estimate: state.rank_estimate,
        });

        let settled = match soft_level {
            Some((level, target)) => level <= target,
            None => true,
        };
        if residual <= config.tol && settled {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        algorithm: config.algorithm,
        x_opt: state.x,
        iterations: state.iter,
        converged,
        final_residual: residual,
        history,
        mu,
        rank_estimate: state.rank_estimate,
        rank_adjusted: state.rank_adjusted,
        final_shrinkage: shrinkage,
    })
}

/// Inputs of one parameter-selection step, frozen before the SVD.
struct StepContext<'a, T: Real> {
    config: &'a SolverConfig<T>,
    a_fixed: T,
    r_min: Option<usize>,
    rank: Option<usize>,
    rank_adjusted: bool,
    soft_level: Option<(T, T)>,
    residual: T,
}

struct Step<T: Real> {
    lambda_mu: T,
    a: T,
    t: T,
    shrinkage: Shrinkage<T>,
    rank: Option<usize>,
    rank_adjusted: bool,
    soft_level: Option<(T, T)>,
    /// Leading singular values the selection read.
    read: usize,
}

impl<T: Real> Step<T> {
    /// Leading triplets that must be accurate for this step.
    fn needed(&self, shrunk: &[T]) -> usize {
        let active = shrunk.iter().rposition(|&v| v != T::zero()).map_or(0, |i| i + 1);
        active.max(self.read)
    }
}

impl<T: Real> StepContext<'_, T> {
    fn choose(&self, sigma: &[T]) -> Result<Step<T>> {
        let config = self.config;
        let mu = config.mu;
        let mut rank = self.rank;
        let mut rank_adjusted = self.rank_adjusted;
        let mut soft_level = self.soft_level;
        let mut read = 0;
        let (lambda_mu, a, t, shrinkage) = match config.algorithm {
            Algorithm::Ts1It => {
                let lambda = config.lambda.expect("validated");
                let params = ThresholdParams::new(self.a_fixed, lambda * mu)?;
                (params.lambda_mu(), self.a_fixed, params.t(), Shrinkage::Ts1 { params, keep: None })
            }
            Algorithm::Ts1S1 | Algorithm::Ts1S2 => {
                if let (Some(r_min), false) = (self.r_min, rank_adjusted) {
                    let k = rank.expect("set from rank input");
                    read = k + 1;
                    let est = estimate_rank_from_singular_values(sigma, k, r_min)?;
                    if est.adjusted {
                        rank = Some(est.k);
                        rank_adjusted = true;
                    }
                }
                let r = rank.expect("set from rank input");
                read = read.max(r + 1);
                let sel = if config.algorithm == Algorithm::Ts1S1 {
                    ts1_s1_select(sigma, r, mu, self.a_fixed)?
                } else {
                    ts1_s2_select(sigma, r)?
                };
                let shrinkage = Shrinkage::Ts1 {
                    params: sel.params,
                    keep: Some(r),
                };
                (sel.lambda_mu, sel.a, sel.t, shrinkage)
            }
            Algorithm::NuclearBaseline => {
                let level = match config.lambda {
                    Some(lambda) => lambda * mu,
                    None => {
                        read = 1;
                        let (level, target) = soft_level.unwrap_or_else(|| {
                            let s1 = sigma.first().copied().unwrap_or(T::zero());
                            (T::lit(NUCLEAR_START) * s1, T::lit(NUCLEAR_TARGET) * s1)
                        });
                        let stage_tol = Float::max(config.tol, T::lit(NUCLEAR_STAGE_TOL));
                        let next = if level > target && self.residual <= stage_tol {
                            Float::max(level * T::lit(NUCLEAR_DECAY), target)
                        } else {
                            level
                        };
                        soft_level = Some((next, target));
                        next
                    }
                };
                (level, T::infinity(), level, Shrinkage::Soft { level })
            }
        };
        Ok(Step {
            lambda_mu,
            a,
            t,
            shrinkage,
            rank,
            rank_adjusted,
            soft_level,
            read,
        })
    }
}
