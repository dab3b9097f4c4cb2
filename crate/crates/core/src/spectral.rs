//! Matrix penalty `T(X) = Σ rho_a(σ_i)` and its singular-value thresholding
//! operator `G(Y) = U · Diag(g(σ)) · Vᵀ`.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Result, Ts1Error};
use crate::scalar::Real;
use crate::thresholding::{prox_scalar, rho_unchecked, ThresholdParams};

/// Singular values at or below this are treated as zero when counting rank.
pub const RANK_EPS: f64 = 1e-12;

const SVD_MAX_SWEEPS: usize = 100_000;

/// Economy SVD `Y = U · Diag(σ) · Vᵀ` with `σ` sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactors<T: Real> {
    /// `m × k` with orthonormal columns, `k = min(m, n)`.
    pub u: DMatrix<T>,
    pub sigma: DVector<T>,
    /// `k × n` with orthonormal rows.
    pub v_t: DMatrix<T>,
}

impl<T: Real> SvdFactors<T> {
    pub fn compute(y: &DMatrix<T>) -> Result<Self> {
        if y.is_empty() {
            return Err(Ts1Error::domain("SVD of an empty matrix"));
        }
        if y.iter().any(|v| !Float::is_finite(*v)) {
            return Err(Ts1Error::Numerical("SVD input has non-finite entries".into()));
        }
        let svd = nalgebra::SVD::try_new_unordered(
            y.clone(),
            true,
            true,
            T::default_epsilon(),
            SVD_MAX_SWEEPS,
        )
        .ok_or_else(|| Ts1Error::Numerical("SVD did not converge".into()))?;
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let sigma = svd.singular_values;

        // The backend does not promise an order; sort descending.
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("NaN singular value"));
        let sigma = DVector::from_iterator(sigma.len(), order.iter().map(|&i| sigma[i]));
        let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
        let v_t = DMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
        Ok(SvdFactors { u, sigma, v_t })
    }

    /// SVD from the symmetric eigendecomposition of the smaller Gram matrix.
    ///
    /// Triplets with `σ_i ≥ g · σ₁` reproduce `compose` to roughly
    /// `ε / g²` relative accuracy; smaller ones are unreliable. Callers must
    /// check with [`gram_reliable`] before relying on the tail.
    pub fn compute_gram(y: &DMatrix<T>) -> Result<Self> {
        if y.is_empty() {
            return Err(Ts1Error::domain("SVD of an empty matrix"));
        }
        if y.iter().any(|v| !Float::is_finite(*v)) {
            return Err(Ts1Error::Numerical("SVD input has non-finite entries".into()));
        }
        let (m, n) = y.shape();
        let wide = m < n;
        // Work with the tall orientation: y = W Vᵀ, W = y V.
        let tall = if wide { y.transpose() } else { y.clone() };
        let gram = tall.transpose() * &tall;
        let eig = nalgebra::SymmetricEigen::try_new(gram, T::default_epsilon(), SVD_MAX_SWEEPS)
            .ok_or_else(|| Ts1Error::Numerical("eigendecomposition did not converge".into()))?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .partial_cmp(&eig.eigenvalues[i])
                .expect("NaN eigenvalue")
        });
        let k = order.len();
        let v = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
        let mut w = &tall * &v;
        let mut sigma = DVector::zeros(k);
        for (c, mut col) in w.column_iter_mut().enumerate() {
            let s = col.norm();
            sigma[c] = s;
            if s > T::zero() {
                col /= s;
            }
        }
        // Column norms are not exactly sorted when eigenvalues are nearly tied.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("NaN singular value"));
        let sigma = DVector::from_iterator(k, order.iter().map(|&i| sigma[i]));
        let w = DMatrix::from_fn(w.nrows(), k, |r, c| w[(r, order[c])]);
        let v = DMatrix::from_fn(k, k, |r, c| v[(r, order[c])]);
        Ok(if wide {
            SvdFactors {
                u: v,
                sigma,
                v_t: w.transpose(),
            }
        } else {
            SvdFactors {
                u: w,
                sigma,
                v_t: v.transpose(),
            }
        })
    }

    pub fn v(&self) -> DMatrix<T> {
        self.v_t.transpose()
    }

    pub fn rank(&self) -> usize {
        count_above(self.sigma.as_slice(), T::lit(RANK_EPS))
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        self.compose(self.sigma.as_slice())
    }

    /// `U · Diag(values) · Vᵀ`, skipping zero entries of `values`.
    pub fn compose(&self, values: &[T]) -> DMatrix<T> {
        assert_eq!(values.len(), self.sigma.len(), "spectrum length");
        let (m, n) = (self.u.nrows(), self.v_t.ncols());
        let active: Vec<usize> = (0..values.len()).filter(|&i| values[i] != T::zero()).collect();
        if active.is_empty() {
            return DMatrix::zeros(m, n);
        }
        let us = DMatrix::from_fn(m, active.len(), |r, c| self.u[(r, active[c])] * values[active[c]]);
        let vs = DMatrix::from_fn(active.len(), n, |r, c| self.v_t[(active[r], c)]);
        us * vs
    }
}

/// Relative singular-value floor above which Gram triplets are trusted.
pub const GRAM_GUARD: f64 = 1e-5;

/// Whether the leading `count` Gram triplets are accurate enough for a
/// fixed-point step. Always false below double precision.
pub fn gram_reliable<T: Real>(sigma: &[T], count: usize) -> bool {
    if T::default_epsilon() > T::lit(1e-12) {
        return false;
    }
    match (sigma.first(), count.min(sigma.len()).checked_sub(1)) {
        (_, None) => true,
        (Some(&s1), Some(last)) => sigma[last] >= T::lit(GRAM_GUARD) * s1,
        (None, Some(_)) => true,
    }
}

pub(crate) fn count_above<T: Real>(values: &[T], eps: T) -> usize {
    values.iter().filter(|&&s| s > eps).count()
}

/// Singular values of `x`, nonincreasing.
pub fn singular_values<T: Real>(x: &DMatrix<T>) -> Result<DVector<T>> {
    if x.is_empty() {
        return Err(Ts1Error::domain("singular values of an empty matrix"));
    }
    let svd = nalgebra::SVD::try_new_unordered(
        x.clone(),
        false,
        false,
        T::default_epsilon(),
        SVD_MAX_SWEEPS,
    )
    .ok_or_else(|| Ts1Error::Numerical("SVD did not converge".into()))?;
    let mut s: Vec<T> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("NaN singular value"));
    Ok(DVector::from_vec(s))
}

/// Number of singular values above [`RANK_EPS`].
pub fn numerical_rank<T: Real>(x: &DMatrix<T>) -> Result<usize> {
    Ok(count_above(singular_values(x)?.as_slice(), T::lit(RANK_EPS)))
}

/// `T(X) = Σ rho_a(σ_i)` given the singular values.
pub fn ts1_penalty<T: Real>(sigma: &[T], a: T) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Ts1Error::domain(format!("ts1_penalty: a must be positive, got {a}")));
    }
    if let Some(s) = sigma.iter().find(|&&s| !(s >= T::zero())) {
        return Err(Ts1Error::domain(format!(
            "ts1_penalty: singular values must be nonnegative, got {s}"
        )));
    }
    Ok(sigma.iter().fold(T::zero(), |acc, &s| acc + rho_unchecked(s, a)))
}

/// `T(X)` computed from the matrix itself.
pub fn ts1_penalty_of<T: Real>(x: &DMatrix<T>, a: T) -> Result<T> {
    ts1_penalty(singular_values(x)?.as_slice(), a)
}

/// Applies the scalar prox to every singular value.
pub fn shrink_spectrum<T: Real>(sigma: &[T], params: &ThresholdParams<T>) -> Vec<T> {
    sigma.iter().map(|&s| prox_scalar(s, params)).collect()
}

/// Global minimiser of `½‖X − Y‖_F² + λμ·T(X)`.
pub fn ts1_prox_matrix<T: Real>(y: &DMatrix<T>, a: T, lambda_mu: T) -> Result<DMatrix<T>> {
    let params = ThresholdParams::new(a, lambda_mu)?;
    let svd = SvdFactors::compute(y)?;
    Ok(svd.compose(&shrink_spectrum(svd.sigma.as_slice(), &params)))
}

/// Value of `½‖X − Y‖_F² + λμ·T(X)`.
pub fn prox_matrix_objective<T: Real>(
    x: &DMatrix<T>,
    y: &DMatrix<T>,
    a: T,
    lambda_mu: T,
) -> Result<T> {
    let d = (x - y).norm_squared();
    Ok(d / T::lit(2.0) + lambda_mu * ts1_penalty_of(x, a)?)
}

/// `I_k^s`: an `m × n` matrix with ones on the first `k` diagonal entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShrinkageIdentity {
    k: usize,
    dims: (usize, usize),
}

impl ShrinkageIdentity {
    pub fn new(k: usize, dims: (usize, usize)) -> Result<Self> {
        check_k(k, dims.0.min(dims.1))?;
        Ok(ShrinkageIdentity { k, dims })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn to_matrix<T: Real>(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.dims.0, self.dims.1, |i, j| {
            if i == j && i < self.k {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// `⟨X, I_k^s⟩ = tr_k(X)`.
    pub fn inner<T: Real>(&self, x: &DMatrix<T>) -> Result<T> {
        if x.shape() != self.dims {
            return Err(Ts1Error::dims(format!("{:?}", self.dims), format!("{:?}", x.shape())));
        }
        partial_trace(x, self.k)
    }
}

fn check_k(k: usize, hi: usize) -> Result<()> {
    if k == 0 || k > hi {
        return Err(Ts1Error::Index { index: k, lo: 1, hi });
    }
    Ok(())
}

/// `tr_k(X)`: sum of the first `k` diagonal entries (`k` is 1-based).
pub fn partial_trace<T: Real>(x: &DMatrix<T>, k: usize) -> Result<T> {
    check_k(k, x.nrows().min(x.ncols()))?;
    Ok((0..k).fold(T::zero(), |acc, i| acc + x[(i, i)]))
}

/// Ky Fan `k`-norm: sum of the `k` largest entries of a nonincreasing spectrum.
pub fn ky_fan_norm<T: Real>(sigma: &[T], k: usize) -> Result<T> {
    check_k(k, sigma.len())?;
    Ok(sigma[..k].iter().fold(T::zero(), |acc, &s| acc + s))
}
