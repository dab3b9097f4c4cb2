//! Synthetic completion problems: correlated Gaussian low-rank ground truth,
//! uniform entry sampling, additive noise, and difficulty descriptors.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, Ts1Error};
use crate::operator::SamplingOperator;
use crate::scalar::Real;
use crate::spectral::SvdFactors;

/// Parameters a ground truth was generated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenMeta {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub cov: f64,
    pub seed: u64,
}

/// Full matrix `M` with its (upper bound on) rank.
#[derive(Debug, Clone)]
pub struct GroundTruth<T: Real> {
    pub m_full: DMatrix<T>,
    pub rank: usize,
    pub gen: GenMeta,
}

/// Sampling ratio, freedom ratio and maximum recoverable rank of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptors {
    pub sr: f64,
    pub fr: f64,
    pub r_m: usize,
}

impl Descriptors {
    pub fn new(m: usize, n: usize, r: usize, p: usize) -> Self {
        Descriptors {
            sr: p as f64 / (m * n) as f64,
            fr: freedom_ratio(m, n, r, p),
            r_m: max_recoverable_rank(m, n, p),
        }
    }
}

/// Observed entries `M|_Ω` of an `m × n` matrix.
#[derive(Debug, Clone)]
pub struct MaskedMatrix<T: Real> {
    dims: (usize, usize),
    omega: Vec<(usize, usize)>,
    values: DVector<T>,
    descriptors: Option<Descriptors>,
}

impl<T: Real> MaskedMatrix<T> {
    /// `true_rank`, when known, fills in the difficulty descriptors.
    pub fn new(
        dims: (usize, usize),
        omega: Vec<(usize, usize)>,
        values: DVector<T>,
        true_rank: Option<usize>,
    ) -> Result<Self> {
        if values.len() != omega.len() {
            return Err(Ts1Error::dims(
                format!("{} values", omega.len()),
                format!("{}", values.len()),
            ));
        }
        // Validates bounds and duplicates.
        SamplingOperator::new(dims, omega.clone())?;
        let descriptors = true_rank.map(|r| Descriptors::new(dims.0, dims.1, r, omega.len()));
        Ok(MaskedMatrix {
            dims,
            omega,
            values,
            descriptors,
        })
    }

    /// Observes every index of `omega` from `full`.
    pub fn observe(full: &DMatrix<T>, omega: Vec<(usize, usize)>, true_rank: Option<usize>) -> Result<Self> {
        let values = DVector::from_iterator(omega.len(), omega.iter().map(|&ij| full[ij]));
        Self::new(full.shape(), omega, values, true_rank)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn omega(&self) -> &[(usize, usize)] {
        &self.omega
    }

    pub fn values(&self) -> &DVector<T> {
        &self.values
    }

    pub fn p(&self) -> usize {
        self.omega.len()
    }

    pub fn descriptors(&self) -> Option<Descriptors> {
        self.descriptors
    }

    pub fn operator(&self) -> SamplingOperator {
        SamplingOperator::new(self.dims, self.omega.clone()).expect("validated at construction")
    }

    /// Observed values on `Ω`, zeros elsewhere.
    pub fn zero_filled(&self) -> DMatrix<T> {
        let mut x = DMatrix::zeros(self.dims.0, self.dims.1);
        for (k, &ij) in self.omega.iter().enumerate() {
            x[ij] = self.values[k];
        }
        x
    }
}

/// `FR = r(m + n − r) / p`. Requires `r ≤ m + n`.
pub fn freedom_ratio(m: usize, n: usize, r: usize, p: usize) -> f64 {
    (r * (m + n - r)) as f64 / p as f64
}

/// FR truncated (not rounded) to four decimals, computed in integer arithmetic.
pub fn freedom_ratio_display(m: usize, n: usize, r: usize, p: usize) -> String {
    let num = (r * (m + n - r)) as u128 * 10_000;
    let q = num / p as u128;
    format!("{}.{:04}", q / 10_000, q % 10_000)
}

/// `r_m = ⌊(m + n − sqrt((m + n)² − 4p)) / 2⌋`, the largest `r` with `FR ≤ 1`.
pub fn max_recoverable_rank(m: usize, n: usize, p: usize) -> usize {
    if p == 0 {
        return 0;
    }
    let s = (m + n) as f64;
    let disc = (s * s - 4.0 * p as f64).max(0.0);
    let mut r = ((s - disc.sqrt()) / 2.0).floor().max(0.0) as usize;
    // Correct for rounding in the square root: r(m+n−r) ≤ p must hold at r and fail at r+1.
    let fits = |r: usize| r <= m + n && r * (m + n - r) <= p;
    while r > 0 && !fits(r) {
        r -= 1;
    }
    while 2 * (r + 1) <= m + n && fits(r + 1) {
        r += 1;
    }
    r
}

/// `M = M_L M_Rᵀ` with rows of `M_L` (`m × r`) and `M_R` (`n × r`) drawn
/// independently from `N(0, Σ)`, `Σ = (1 − cov) I + cov 𝟙𝟙ᵀ`.
pub fn gen_gaussian_lowrank<T: Real>(
    m: usize,
    n: usize,
    r: usize,
    cov: f64,
    seed: u64,
) -> Result<GroundTruth<T>> {
    if r == 0 || r > m.min(n) {
        return Err(Ts1Error::domain(format!("rank {r} must lie in 1..={}", m.min(n))));
    }
    if !(0.0..1.0).contains(&cov) {
        return Err(Ts1Error::domain(format!("cov must lie in [0, 1), got {cov}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factor = covariance_factor(r, cov)?;
    let left = correlated_rows(&mut rng, m, &factor);
    let right = correlated_rows(&mut rng, n, &factor);
    let full = left * right.transpose();
    Ok(GroundTruth {
        m_full: full.map(T::lit),
        rank: r,
        gen: GenMeta { m, n, r, cov, seed },
    })
}

/// Lower Cholesky factor of `(1 − cov) I + cov 𝟙𝟙ᵀ`.
fn covariance_factor(r: usize, cov: f64) -> Result<DMatrix<f64>> {
    let sigma = DMatrix::from_fn(r, r, |i, j| if i == j { 1.0 } else { cov });
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Ts1Error::domain(format!("covariance with cov = {cov} is not positive definite")))?;
    Ok(chol.l())
}

/// `rows × r` matrix whose rows are `L z` with `z ~ N(0, I)`.
pub(crate) fn correlated_rows(rng: &mut ChaCha8Rng, rows: usize, factor: &DMatrix<f64>) -> DMatrix<f64> {
    let r = factor.nrows();
    let z = DMatrix::<f64>::from_fn(r, rows, |_, _| rng.sample(StandardNormal));
    (factor * z).transpose()
}

/// Draws `p = round(sr · m · n)` distinct entries uniformly without replacement.
pub fn sample_uniform<T: Real>(truth: &GroundTruth<T>, sr: f64, seed: u64) -> Result<MaskedMatrix<T>> {
    let (m, n) = truth.m_full.shape();
    let omega = uniform_indices(m, n, sr, seed)?;
    MaskedMatrix::observe(&truth.m_full, omega, Some(truth.rank))
}

/// Index set of a uniform sample, sorted in column-major order.
pub fn uniform_indices(m: usize, n: usize, sr: f64, seed: u64) -> Result<Vec<(usize, usize)>> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(Ts1Error::domain(format!("sampling ratio must lie in (0, 1], got {sr}")));
    }
    let total = m * n;
    let p = ((sr * total as f64).round() as usize).clamp(1, total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, total, p).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| (k % m, k / m)).collect())
}

/// `M = M₀ + σ (‖M₀‖_F / ‖ε‖_F) ε` with `ε` i.i.d. standard Gaussian.
pub fn add_noise<T: Real>(truth: &GroundTruth<T>, sigma_noise: f64, seed: u64) -> Result<GroundTruth<T>> {
    if !(sigma_noise >= 0.0) {
        return Err(Ts1Error::domain(format!("noise level must be nonnegative, got {sigma_noise}")));
    }
    if sigma_noise == 0.0 {
        return Ok(truth.clone());
    }
    let (m, n) = truth.m_full.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = DMatrix::<f64>::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    let base = truth.m_full.map(|v| v.to_f64_lossy());
    let scale = sigma_noise * base.norm() / eps.norm();
    Ok(GroundTruth {
        m_full: (base + eps * scale).map(T::lit),
        rank: truth.rank,
        gen: truth.gen,
    })
}

/// Best rank-`target_rank` approximation of an image with pixels in `[0, 1]`.
pub fn image_to_lowrank_truth<T: Real>(pixels: &DMatrix<T>, target_rank: usize) -> Result<GroundTruth<T>> {
    let (m, n) = pixels.shape();
    if target_rank == 0 || target_rank > m.min(n) {
        return Err(Ts1Error::domain(format!(
            "target rank {target_rank} must lie in 1..={}",
            m.min(n)
        )));
    }
    if pixels.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
        return Err(Ts1Error::domain("image pixels must be normalised to [0, 1]"));
    }
    let svd = SvdFactors::compute(pixels)?;
    let kept: Vec<T> = svd
        .sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| if i < target_rank { s } else { T::zero() })
        .collect();
    Ok(GroundTruth {
        m_full: svd.compose(&kept),
        rank: target_rank,
        gen: GenMeta {
            m,
            n,
            r: target_rank,
            cov: 0.0,
            seed: 0,
        },
    })
}
