//! Scalar transformed-L1 penalty and its exact proximal (thresholding) map.
//!
//! For shape parameter `a > 0` the penalty is
//!
//! ```text
//! rho_a(x) = (a + 1) |x| / (a + |x|)
//! ```
//!
//! and the proximal problem `min_y ½(y − x)² + λμ·rho_a(|y|)` has a closed-form
//! solution: zero when `|x| ≤ t`, and the trigonometric root `h(x)` of the
//! stationarity cubic otherwise. The active threshold `t` depends on whether
//! `λμ` lies below or above the critical value `a² / (2(a + 1))`.

use num_traits::Float;

use crate::error::{Result, Ts1Error};
use crate::scalar::{sign, Real};

/// Slack allowed on the `arccos` argument before it is treated as a domain error.
pub const ACOS_CLAMP_EPS: f64 = 1e-9;

/// `rho_a(x) = (a + 1) x / (a + x)` for `x ≥ 0`.
pub fn rho_a<T: Real>(x: T, a: T) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Ts1Error::domain(format!("rho_a: a must be positive, got {a}")));
    }
    if !(x >= T::zero()) {
        return Err(Ts1Error::domain(format!("rho_a: x must be nonnegative, got {x}")));
    }
    Ok(rho_unchecked(x, a))
}

#[inline]
pub(crate) fn rho_unchecked<T: Real>(x: T, a: T) -> T {
    (a + T::one()) * x / (a + x)
}

/// Which branch of the threshold formula is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `λμ ≤ a²/(2(a+1))`: continuous thresholding, `t = λμ(a+1)/a`.
    SubCritical,
    /// `λμ > a²/(2(a+1))`: jump thresholding, `t = sqrt(2λμ(a+1)) − a/2`.
    SuperCritical,
}

/// Validated `(a, λμ)` pair together with its active threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams<T> {
    a: T,
    lambda_mu: T,
    t: T,
    regime: Regime,
}

impl<T: Real> ThresholdParams<T> {
    pub fn new(a: T, lambda_mu: T) -> Result<Self> {
        if !(a > T::zero()) || !Float::is_finite(a) {
            return Err(Ts1Error::domain(format!("threshold: a must be positive, got {a}")));
        }
        if !(lambda_mu > T::zero()) || !Float::is_finite(lambda_mu) {
            return Err(Ts1Error::domain(format!(
                "threshold: lambda*mu must be positive, got {lambda_mu}"
            )));
        }
        let regime = if lambda_mu <= critical_lambda_mu(a) {
            Regime::SubCritical
        } else {
            Regime::SuperCritical
        };
        let t = match regime {
            Regime::SubCritical => t2(a, lambda_mu),
            Regime::SuperCritical => t3(a, lambda_mu),
        };
        Ok(ThresholdParams {
            a,
            lambda_mu,
            t,
            regime,
        })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn lambda_mu(&self) -> T {
        self.lambda_mu
    }

    /// Active threshold: inputs with `|x| ≤ t` are mapped to zero.
    pub fn t(&self) -> T {
        self.t
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// The three candidate thresholds `(t1*, t2*, t3*)`.
    pub fn candidates(&self) -> (T, T, T) {
        (
            t1(self.a, self.lambda_mu),
            t2(self.a, self.lambda_mu),
            t3(self.a, self.lambda_mu),
        )
    }
}

/// `a² / (2(a+1))`, the value of `λμ` at which `t2* = t3*`.
#[inline]
pub fn critical_lambda_mu<T: Real>(a: T) -> T {
    a * a / (T::lit(2.0) * (a + T::one()))
}

/// `t1* = 3/2^{2/3} (λμ a (a+1))^{1/3} − a`: below this the stationarity cubic has one real root.
#[inline]
fn t1<T: Real>(a: T, lm: T) -> T {
    T::lit(3.0) / Float::powf(T::lit(2.0), T::lit(2.0 / 3.0)) * Float::cbrt(lm * a * (a + T::one()))
        - a
}

#[inline]
fn t2<T: Real>(a: T, lm: T) -> T {
    lm * (a + T::one()) / a
}

#[inline]
fn t3<T: Real>(a: T, lm: T) -> T {
    Float::sqrt(T::lit(2.0) * lm * (a + T::one())) - a / T::lit(2.0)
}

/// Closed-form nonzero branch of the prox,
///
/// ```text
/// h(x) = sgn(x) { (2/3)(a+|x|) cos(φ/3) − 2a/3 + |x|/3 },
/// φ    = arccos(1 − 27 λμ a(a+1) / (2 (a+|x|)³)).
/// ```
///
/// Meaningful for `|x|` at or above the active threshold. The `arccos`
/// argument is clamped into `[−1, 1]` when it overshoots by at most
/// [`ACOS_CLAMP_EPS`]; larger overshoots are a domain error.
pub fn h_lambda<T: Real>(x: T, a: T, lambda_mu: T) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Ts1Error::domain(format!("h_lambda: a must be positive, got {a}")));
    }
    if !(lambda_mu > T::zero()) {
        return Err(Ts1Error::domain(format!(
            "h_lambda: lambda*mu must be positive, got {lambda_mu}"
        )));
    }
    let ax = Float::abs(x);
    let gap = acos_gap(ax, a, lambda_mu);
    let eps = T::lit(ACOS_CLAMP_EPS);
    // arccos argument is 1 − gap; gap ≥ 0 always, so only the lower bound can fail.
    if !(gap <= T::lit(2.0) + eps) {
        return Err(Ts1Error::domain(format!(
            "h_lambda: arccos argument {} outside [-1, 1] (x = {x}, a = {a}, lambda*mu = {lambda_mu})",
            T::one() - gap
        )));
    }
    Ok(sign(x) * h_magnitude(ax, a, gap))
}

/// `27 λμ a(a+1) / (2 (a+|x|)³)`, i.e. one minus the `arccos` argument.
#[inline]
fn acos_gap<T: Real>(ax: T, a: T, lm: T) -> T {
    let s = a + ax;
    T::lit(27.0) * lm * a * (a + T::one()) / (T::lit(2.0) * s * s * s)
}

/// `|h(x)|` evaluated as `|x| − (4/3)(a+|x|) sin²(φ/6)` with
/// `φ = 2 asin(sqrt(gap/2))`. Algebraically identical to the cosine form but
/// free of cancellation when `λμ` is tiny.
#[inline]
fn h_magnitude<T: Real>(ax: T, a: T, gap: T) -> T {
    let half = Float::min(Float::max(gap / T::lit(2.0), T::zero()), T::one());
    let phi = T::lit(2.0) * Float::asin(Float::sqrt(half));
    let s = Float::sin(phi / T::lit(6.0));
    ax - T::lit(4.0 / 3.0) * (a + ax) * s * s
}

/// Exact scalar prox `argmin_y ½(y − x)² + λμ·rho_a(|y|)`.
///
/// Returns `0` for `|x| ≤ t` (the boundary itself maps to zero) and `h(x)`
/// above it.
pub fn prox_scalar<T: Real>(x: T, params: &ThresholdParams<T>) -> T {
    let ax = Float::abs(x);
    if ax <= params.t {
        return T::zero();
    }
    let gap = acos_gap(ax, params.a, params.lambda_mu);
    sign(x) * h_magnitude(ax, params.a, gap)
}

/// Nonzero branch `h(x)` without the threshold test; used when a tie at
/// `|x| = t` is resolved in favour of keeping `x`.
pub(crate) fn keep_branch<T: Real>(x: T, params: &ThresholdParams<T>) -> T {
    let ax = Float::abs(x);
    let gap = acos_gap(ax, params.a, params.lambda_mu);
    sign(x) * h_magnitude(ax, params.a, gap)
}

/// Objective of the scalar prox problem, `½(y − x)² + λμ·rho_a(|y|)`.
pub fn prox_objective<T: Real>(y: T, x: T, params: &ThresholdParams<T>) -> T {
    let d = y - x;
    d * d / T::lit(2.0) + params.lambda_mu * rho_unchecked(Float::abs(y), params.a)
}
