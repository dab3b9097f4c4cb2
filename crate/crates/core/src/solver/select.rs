//! Adaptive parameter rules for the TS1-s1 / TS1-s2 schemes and the
//! spectral shrinkage maps shared by all iterations.

use num_traits::Float;

use crate::error::{Result, Ts1Error};
use crate::scalar::Real;
use crate::thresholding::{critical_lambda_mu, keep_branch, prox_scalar, ThresholdParams};

/// Lower bound on `λμ` when `σ_{r+1} = 0` would collapse the threshold.
pub const LAMBDA_MU_FLOOR: f64 = 1e-12;

/// Result of an adaptive parameter rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection<T> {
    pub lambda_mu: T,
    pub a: T,
    pub t: T,
    pub params: ThresholdParams<T>,
}

fn check_rank<T>(sigma: &[T], r: usize) -> Result<()> {
    if r < 1 || r + 1 > sigma.len() {
        return Err(Ts1Error::Index {
            index: r,
            lo: 1,
            hi: sigma.len().saturating_sub(1),
        });
    }
    Ok(())
}

/// TS1-s1 rule for fixed `a`: returns `(λ, t)`.
///
/// `λ₁ = aσ_{r+1}/(μ(a+1))` is used when it is subcritical (`t = σ_{r+1}`),
/// otherwise `λ₂ = (a+2σ_r)²/(8(a+1)μ)` (`t = σ_r`).
pub fn ts1_s1_select_lambda<T: Real>(sigma: &[T], r: usize, mu: T, a: T) -> Result<(T, T)> {
    let sel = ts1_s1_select(sigma, r, mu, a)?;
    Ok((sel.lambda_mu / mu, sel.t))
}

pub fn ts1_s1_select<T: Real>(sigma: &[T], r: usize, mu: T, a: T) -> Result<Selection<T>> {
    check_rank(sigma, r)?;
    if !(mu > T::zero()) || !(a > T::zero()) {
        return Err(Ts1Error::domain(format!("ts1-s1: need mu > 0 and a > 0, got mu = {mu}, a = {a}")));
    }
    let (s_r, s_next) = (sigma[r - 1], sigma[r]);
    let one = T::one();
    let lm1 = a * s_next / (a + one);
    let lambda_mu = if lm1 <= critical_lambda_mu(a) {
        lm1
    } else {
        let w = a + T::lit(2.0) * s_r;
        w * w / (T::lit(8.0) * (a + one))
    };
    let lambda_mu = Float::max(lambda_mu, T::lit(LAMBDA_MU_FLOOR));
    let params = ThresholdParams::new(a, lambda_mu)?;
    Ok(Selection {
        lambda_mu,
        a,
        t: params.t(),
        params,
    })
}

/// TS1-s2 rule: `λμ = 2s²/(1+2s)` with `s = σ_{r+1}`, then
/// `a = λμ + sqrt(λμ² + 2λμ)` so that `(a, λμ)` sits on the critical curve
/// and `t = λμ/2 + sqrt(λμ² + 2λμ)/2 = s`.
///
/// Returns `(λμ, a, t)`.
pub fn ts1_s2_select_params<T: Real>(sigma: &[T], r: usize) -> Result<(T, T, T)> {
    let sel = ts1_s2_select(sigma, r)?;
    Ok((sel.lambda_mu, sel.a, sel.t))
}

pub fn ts1_s2_select<T: Real>(sigma: &[T], r: usize) -> Result<Selection<T>> {
    check_rank(sigma, r)?;
    let two = T::lit(2.0);
    let s = sigma[r];
    let lambda_mu = Float::max(two * s * s / (T::one() + two * s), T::lit(LAMBDA_MU_FLOOR));
    let root = Float::sqrt(lambda_mu * lambda_mu + two * lambda_mu);
    let a = lambda_mu + root;
    let params = ThresholdParams::new(a, lambda_mu)?;
    Ok(Selection {
        lambda_mu,
        a,
        t: (lambda_mu + root) / two,
        params,
    })
}

/// Spectral map applied after the gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shrinkage<T> {
    /// TS1 thresholding. With `keep = Some(r)`, a singular value within
    /// `sqrt(ε)` (relative) of the threshold counts as a tie: kept on the
    /// nonzero branch if its index is `≤ r`, zeroed otherwise. Both branches
    /// minimise the prox at the tie.
    Ts1 { params: ThresholdParams<T>, keep: Option<usize> },
    /// Soft thresholding `max(σ − level, 0)`.
    Soft { level: T },
}

impl<T: Real> Shrinkage<T> {
    pub fn apply(&self, sigma: &[T]) -> Vec<T> {
        match *self {
            Shrinkage::Ts1 { params, keep } => {
                let tie = Float::sqrt(T::epsilon());
                let t = params.t();
                sigma
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        match keep {
                            Some(r) if i < r && s > T::zero() && s >= t * (T::one() - tie) => {
                                keep_branch(s, &params)
                            }
                            Some(r) if i >= r && s <= t * (T::one() + tie) => T::zero(),
                            _ => prox_scalar(s, &params),
                        }
                    })
                    .collect()
            }
            Shrinkage::Soft { level } => sigma.iter().map(|&s| Float::max(s - level, T::zero())).collect(),
        }
    }
}
