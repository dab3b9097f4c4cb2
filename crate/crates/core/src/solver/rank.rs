//! Rank-decreasing (maximum eigengap) estimator.

use nalgebra::DMatrix;
use crate::error::{Result, Ts1Error};
use crate::scalar::Real;
use crate::spectral::singular_values;

/// Eigenvalues at or below this are treated as zero in gap quotients.
pub const EIGEN_FLOOR: f64 = 1e-30;

/// Dominance level `τ` must strictly exceed before the estimate is changed.
pub const TAU_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEstimate<T> {
    /// Estimated rank (1-based index of the dominant gap) if adjusted, else the input `K`.
    pub k: usize,
    pub adjusted: bool,
    /// Dominance statistic; `+∞` when the spectrum drops to zero inside the window.
    pub tau: T,
}

/// Eigengap test on the eigenvalues of `XᵀX`.
pub fn estimate_rank<T: Real>(x: &DMatrix<T>, k: usize, r_min: usize) -> Result<RankEstimate<T>> {
    let sigma = singular_values(x)?;
    estimate_rank_from_singular_values(sigma.as_slice(), k, r_min)
}

/// Same as [`estimate_rank`] given singular values sorted nonincreasing.
pub fn estimate_rank_from_singular_values<T: Real>(
    sigma: &[T],
    k: usize,
    r_min: usize,
) -> Result<RankEstimate<T>> {
    let eig: Vec<T> = sigma.iter().map(|&s| s * s).collect();
    estimate_rank_from_eigenvalues(&eig, k, r_min)
}

/// Core test over nonincreasing eigenvalues `λ_1 ≥ λ_2 ≥ …` (1-based indices).
///
/// Quotients `q_i = λ_i / λ_{i+1}` are formed for `i ∈ [r_min, K]`. A quotient
/// whose denominator is at or below [`EIGEN_FLOOR`] is dropped, except when
/// it marks a drop to zero strictly inside the window (`i < K`, numerator
/// nonzero): that is an exact rank deficiency and wins with `τ = +∞`. A drop
/// at `i = K` is the working-rank truncation itself and carries no
/// information.
pub fn estimate_rank_from_eigenvalues<T: Real>(
    eig: &[T],
    k: usize,
    r_min: usize,
) -> Result<RankEstimate<T>> {
    if r_min < 1 || r_min >= k {
        return Err(Ts1Error::Config(format!(
            "rank estimation needs 1 <= r_min < K, got r_min = {r_min}, K = {k}"
        )));
    }
    if k + 1 > eig.len() {
        return Err(Ts1Error::Index {
            index: k + 1,
            lo: 1,
            hi: eig.len(),
        });
    }
    let floor = T::lit(EIGEN_FLOOR);
    let unchanged = |tau| RankEstimate {
        k,
        adjusted: false,
        tau,
    };

    let mut quotients: Vec<(usize, T)> = Vec::with_capacity(k - r_min + 1);
    for i in r_min..=k {
        let (num, den) = (eig[i - 1], eig[i]);
        if den > floor {
            quotients.push((i, num / den));
        } else if num > floor && i < k {
            return Ok(RankEstimate {
                k: i,
                adjusted: true,
                tau: T::infinity(),
            });
        }
    }
    if quotients.len() < 2 {
        return Ok(unchanged(T::zero()));
    }

    let (best, q_max) = quotients
        .iter()
        .copied()
        .fold((0, T::neg_infinity()), |acc, (i, q)| if q > acc.1 { (i, q) } else { acc });
    let rest = quotients
        .iter()
        .filter(|&&(i, _)| i != best)
        .fold(T::zero(), |acc, &(_, q)| acc + q);
    let count = T::from_usize(quotients.len()).expect("count fits");
    let tau = count * q_max / rest;
    if tau > T::lit(TAU_THRESHOLD) {
        Ok(RankEstimate {
            k: best,
            adjusted: true,
            tau,
        })
    } else {
        Ok(unchanged(tau))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(rng));
        g.qr().q()
    }

    #[test]
    fn exact_rank_ten_is_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = orthonormal(&mut rng, 60, 10);
        let v = orthonormal(&mut rng, 50, 10);
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(10, |i, _| 3.0 - 0.2 * i as f64));
        let x = &u * s * v.transpose();
        let est = estimate_rank(&x, 15, 1).unwrap();
        assert_eq!(est.k, 10);
        assert!(est.adjusted);
        assert!(est.tau > 1e3);
    }

    #[test]
    fn exact_zero_tail_inside_window() {
        let sigma = [3.0f64, 2.0, 1.5, 0.0, 0.0, 0.0];
        let est = estimate_rank_from_singular_values(&sigma, 5, 1).unwrap();
        assert_eq!((est.k, est.adjusted), (3, true));
        assert!(est.tau.is_infinite());
    }

    #[test]
    fn drop_at_window_edge_is_ignored() {
        // Rank equals K: the final quotient is dropped and the real gap decides.
        let sigma = [10.0f64, 9.0, 8.0, 0.1, 0.09, 0.0];
        let est = estimate_rank_from_singular_values(&sigma, 5, 1).unwrap();
        assert_eq!((est.k, est.adjusted), (3, true));
        assert!(est.tau.is_finite());
    }

    #[test]
    fn flat_spectrum_is_not_adjusted() {
        let sigma = [1.0f64; 20];
        let est = estimate_rank_from_singular_values(&sigma, 15, 1).unwrap();
        assert!(!est.adjusted);
        assert_eq!(est.k, 15);
        assert!((est.tau - 15.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn tau_exactly_ten_is_not_adjusted() {
        // q = (5, 1): τ = 2·5/1 = 10, which does not exceed 10.
        let est = estimate_rank_from_eigenvalues(&[5.0, 1.0, 1.0], 2, 1).unwrap();
        assert_eq!(est.tau, 10.0);
        assert!(!est.adjusted);
        assert_eq!(est.k, 2);

        let est = estimate_rank_from_eigenvalues(&[5.5, 1.0, 1.0], 2, 1).unwrap();
        assert!(est.tau > 10.0);
        assert_eq!((est.k, est.adjusted), (1, true));
    }

    #[test]
    fn picks_the_maximal_quotient() {
        let eig = [100.0, 90.0, 80.0, 1.0, 0.9, 0.8, 0.7];
        let est = estimate_rank_from_eigenvalues(&eig, 6, 1).unwrap();
        assert_eq!(est.k, 3);
        let q: Vec<f64> = (1..=6).map(|i| eig[i - 1] / eig[i]).collect();
        let expect = 6.0 * q[2] / (q.iter().sum::<f64>() - q[2]);
        assert!((est.tau - expect).abs() < 1e-12);
    }

    #[test]
    fn argument_errors() {
        assert!(estimate_rank_from_eigenvalues(&[1.0, 1.0, 1.0], 1, 1).is_err());
        assert!(estimate_rank_from_eigenvalues(&[1.0, 1.0, 1.0], 2, 0).is_err());
        assert!(matches!(
            estimate_rank_from_eigenvalues(&[1.0, 1.0, 1.0], 3, 1),
            Err(Ts1Error::Index { .. })
        ));
    }
}
