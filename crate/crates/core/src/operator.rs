//! Linear measurement operators and the objectives built on them.
//!
//! Only entry sampling is implemented concretely, but the solvers talk to the
//! [`LinearOperator`] trait so other operators can be dropped in.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, Ts1Error};
use crate::scalar::Real;
use crate::spectral::ts1_penalty_of;

/// A linear map `𝒜: R^{m×n} → R^p`.
pub trait LinearOperator<T: Real> {
    /// Shape `(m, n)` of the matrices the operator acts on.
    fn dims(&self) -> (usize, usize);

    fn num_measurements(&self) -> usize;

    fn apply(&self, x: &DMatrix<T>) -> Result<DVector<T>>;

    fn adjoint(&self, v: &DVector<T>) -> Result<DMatrix<T>>;

    /// Exact operator 2-norm when known analytically.
    fn norm_bound(&self) -> Option<T> {
        None
    }

    /// Gradient step `Z + μ 𝒜*(b − 𝒜(Z))`.
    fn gradient_step(&self, b: &DVector<T>, mu: T, z: &DMatrix<T>) -> Result<DMatrix<T>> {
        let residual = b - self.apply(z)?;
        Ok(z + self.adjoint(&residual)? * mu)
    }
}

/// Operator 2-norm: the analytic value if available, otherwise a power
/// iteration estimate on `𝒜*𝒜`.
pub fn operator_norm<T: Real, O: LinearOperator<T> + ?Sized>(op: &O) -> Result<T> {
    match op.norm_bound() {
        Some(v) => Ok(v),
        None => estimate_operator_norm(op, 200, 0x5eed),
    }
}

/// Power iteration on `𝒜*𝒜` from a seeded Gaussian start.
pub fn estimate_operator_norm<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    iters: usize,
    seed: u64,
) -> Result<T> {
    let (m, n) = op.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::<T>::from_fn(m, n, |_, _| T::lit(rng.sample(StandardNormal)));
    let mut estimate = T::zero();
    for _ in 0..iters.max(1) {
        let nx = x.norm();
        if nx == T::zero() {
            return Ok(T::zero());
        }
        x /= nx;
        let y = op.adjoint(&op.apply(&x)?)?;
        // Rayleigh quotient of 𝒜*𝒜 at unit x is ‖𝒜x‖².
        estimate = Float::sqrt(x.dot(&y));
        x = y;
    }
    Ok(estimate)
}

/// Entry sampling `X ↦ (X_{ij})_{(i,j) ∈ Ω}` with zero-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingOperator {
    dims: (usize, usize),
    omega: Vec<(usize, usize)>,
}

impl SamplingOperator {
    /// Builds the operator; indices must be in bounds, distinct, and nonempty.
    pub fn new(dims: (usize, usize), omega: Vec<(usize, usize)>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Ts1Error::domain("sampling operator needs at least one observed entry"));
        }
        let mut seen = HashSet::with_capacity(omega.len());
        for &(i, j) in &omega {
            if i >= dims.0 || j >= dims.1 {
                return Err(Ts1Error::domain(format!(
                    "sampled index ({i}, {j}) outside {}x{}",
                    dims.0, dims.1
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Ts1Error::domain(format!("duplicate sampled index ({i}, {j})")));
            }
        }
        Ok(SamplingOperator { dims, omega })
    }

    pub fn omega(&self) -> &[(usize, usize)] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    fn check_matrix<T: Real>(&self, x: &DMatrix<T>) -> Result<()> {
        if x.shape() != self.dims {
            return Err(Ts1Error::dims(
                format!("{}x{}", self.dims.0, self.dims.1),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        Ok(())
    }

    fn check_vector<T: Real>(&self, v: &DVector<T>) -> Result<()> {
        if v.len() != self.omega.len() {
            return Err(Ts1Error::dims(
                format!("vector of length {}", self.omega.len()),
                format!("length {}", v.len()),
            ));
        }
        Ok(())
    }
}

impl<T: Real> LinearOperator<T> for SamplingOperator {
    fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn num_measurements(&self) -> usize {
        self.omega.len()
    }

    fn apply(&self, x: &DMatrix<T>) -> Result<DVector<T>> {
        self.check_matrix(x)?;
        Ok(DVector::from_iterator(self.omega.len(), self.omega.iter().map(|&ij| x[ij])))
    }

    fn adjoint(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_vector(v)?;
        let mut out = DMatrix::zeros(self.dims.0, self.dims.1);
        for (k, &ij) in self.omega.iter().enumerate() {
            out[ij] = v[k];
        }
        Ok(out)
    }

    fn norm_bound(&self) -> Option<T> {
        Some(T::one())
    }

    fn gradient_step(&self, b: &DVector<T>, mu: T, z: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.check_matrix(z)?;
        self.check_vector(b)?;
        let mut out = z.clone();
        for (k, &ij) in self.omega.iter().enumerate() {
            let cur = out[ij];
            out[ij] = cur + mu * (b[k] - cur);
        }
        Ok(out)
    }
}

/// `B_μ(Z) = Z + μ 𝒜*(b − 𝒜(Z))`.
pub fn b_mu_step<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    b: &DVector<T>,
    mu: T,
    z: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    op.gradient_step(b, mu, z)
}

/// Data, operator, and the `(λ, μ, a)` triple defining `C_λ` and `C_{λ,μ}`.
#[derive(Debug, Clone)]
pub struct ObjectiveContext<T: Real, O = SamplingOperator> {
    pub op: O,
    pub b: DVector<T>,
    pub lambda: T,
    pub mu: T,
    pub a: T,
}

impl<T: Real, O: LinearOperator<T>> ObjectiveContext<T, O> {
    /// Validates `μ ∈ (0, ‖𝒜‖⁻²)`, `λ ≥ 0`, `a > 0` and the data length.
    pub fn new(op: O, b: DVector<T>, lambda: T, mu: T, a: T) -> Result<Self> {
        if b.len() != op.num_measurements() {
            return Err(Ts1Error::dims(
                format!("{} observations", op.num_measurements()),
                format!("{}", b.len()),
            ));
        }
        let norm = operator_norm(&op)?;
        let mu_max = T::one() / (norm * norm);
        if !(mu > T::zero() && mu < mu_max) {
            return Err(Ts1Error::domain(format!("mu must lie in (0, {mu_max}), got {mu}")));
        }
        if !(lambda >= T::zero()) {
            return Err(Ts1Error::domain(format!("lambda must be nonnegative, got {lambda}")));
        }
        if !(a > T::zero()) {
            return Err(Ts1Error::domain(format!("a must be positive, got {a}")));
        }
        Ok(ObjectiveContext {
            op,
            b,
            lambda,
            mu,
            a,
        })
    }

    pub fn b_mu_step(&self, z: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.op.gradient_step(&self.b, self.mu, z)
    }

    /// `C_λ(X) = ½‖𝒜(X) − b‖² + λ T(X)`.
    pub fn objective_c_lambda(&self, x: &DMatrix<T>) -> Result<T> {
        let r = self.op.apply(x)? - &self.b;
        let penalty = if self.lambda == T::zero() {
            T::zero()
        } else {
            self.lambda * ts1_penalty_of(x, self.a)?
        };
        Ok(r.norm_squared() / T::lit(2.0) + penalty)
    }

    /// `C_{λ,μ}(X, Z) = μ{C_λ(X) − ½‖𝒜(X) − 𝒜(Z)‖²} + ½‖X − Z‖²`.
    pub fn objective_c_lambda_mu(&self, x: &DMatrix<T>, z: &DMatrix<T>) -> Result<T> {
        if x.shape() != z.shape() {
            return Err(Ts1Error::dims(format!("{:?}", x.shape()), format!("{:?}", z.shape())));
        }
        let c = self.objective_c_lambda(x)?;
        let d = (self.op.apply(x)? - self.op.apply(z)?).norm_squared();
        let half = T::lit(2.0);
        Ok(self.mu * (c - d / half) + (x - z).norm_squared() / half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{singular_values, ts1_prox_matrix};
    use crate::thresholding::rho_unchecked;

    fn gaussian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
    }

    fn random_op(rng: &mut ChaCha8Rng, m: usize, n: usize, p: usize) -> SamplingOperator {
        let idx = rand::seq::index::sample(rng, m * n, p);
        SamplingOperator::new((m, n), idx.iter().map(|k| (k % m, k / m)).collect()).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert!(SamplingOperator::new((2, 2), vec![]).is_err());
        assert!(SamplingOperator::new((2, 2), vec![(2, 0)]).is_err());
        assert!(SamplingOperator::new((2, 2), vec![(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn apply_examples() {
        let op = SamplingOperator::new((2, 2), vec![(0, 0), (1, 1)]).unwrap();
        let ones = DMatrix::<f64>::from_element(2, 2, 1.0);
        assert_eq!(op.apply(&ones).unwrap(), DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(op.apply(&DMatrix::<f64>::zeros(2, 2)).unwrap(), DVector::zeros(2));
        assert!(LinearOperator::<f64>::apply(&op, &DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn projection_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let op = random_op(&mut rng, 7, 5, 12);
        let x = gaussian(&mut rng, 7, 5);
        let once = op.apply(&x).unwrap();
        let twice = op.apply(&op.adjoint(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn adjoint_examples() {
        let op = SamplingOperator::new((2, 3), vec![(1, 2), (0, 0)]).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let m = op.adjoint(&e1).unwrap();
        assert_eq!(m.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(m[(1, 2)], 1.0);
        assert!(op.adjoint(&DVector::<f64>::zeros(3)).is_err());

        let x = DMatrix::from_fn(2, 3, |i, j| (i * 3 + j + 1) as f64);
        let masked = op.adjoint(&op.apply(&x).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let observed = op.omega().contains(&(i, j));
                assert_eq!(masked[(i, j)], if observed { x[(i, j)] } else { 0.0 });
            }
        }
    }

    #[test]
    fn adjointness_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let op = random_op(&mut rng, 6, 8, 20);
            let x = gaussian(&mut rng, 6, 8);
            let v = DVector::from_fn(20, |_, _| rng.sample(StandardNormal));
            let lhs = op.apply(&x).unwrap().dot(&v);
            let rhs = x.dot(&op.adjoint(&v).unwrap());
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn power_iteration_recovers_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = random_op(&mut rng, 9, 9, 30);
        let est: f64 = estimate_operator_norm(&op, 50, 1).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
        assert_eq!(operator_norm::<f64, _>(&op).unwrap(), 1.0);
    }

    #[test]
    fn b_mu_examples() {
        let op = SamplingOperator::new((2, 2), vec![(0, 0), (1, 0)]).unwrap();
        let b = DVector::from_vec(vec![4.0, -1.0]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 5.0]);
        let full = b_mu_step(&op, &b, 1.0, &z).unwrap();
        assert_eq!(full, DMatrix::from_row_slice(2, 2, &[4.0, 2.0, -1.0, 5.0]));

        let consistent = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, -1.0, 5.0]);
        assert_eq!(b_mu_step(&op, &b, 0.7, &consistent).unwrap(), consistent);

        let op = SamplingOperator::new((2, 2), vec![(0, 0)]).unwrap();
        let half = b_mu_step(&op, &DVector::from_vec(vec![4.0]), 0.5, &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(half, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
    }

    /// The sampling fast path agrees with the generic `Z + μ𝒜*(b − 𝒜Z)` route.
    #[test]
    fn fast_gradient_step_matches_generic() {
        struct Generic<'a>(&'a SamplingOperator);
        impl LinearOperator<f64> for Generic<'_> {
            fn dims(&self) -> (usize, usize) {
                LinearOperator::<f64>::dims(self.0)
            }
            fn num_measurements(&self) -> usize {
                self.0.len()
            }
            fn apply(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
                self.0.apply(x)
            }
            fn adjoint(&self, v: &DVector<f64>) -> Result<DMatrix<f64>> {
                self.0.adjoint(v)
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let op = random_op(&mut rng, 5, 6, 11);
        let z = gaussian(&mut rng, 5, 6);
        let b = DVector::from_fn(11, |_, _| rng.sample(StandardNormal));
        let fast = b_mu_step(&op, &b, 0.37, &z).unwrap();
        let slow = b_mu_step(&Generic(&op), &b, 0.37, &z).unwrap();
        assert!((fast - slow).abs().max() < 1e-15);
    }

    #[test]
    fn context_validation() {
        let op = SamplingOperator::new((2, 2), vec![(0, 0)]).unwrap();
        let b = DVector::from_vec(vec![1.0]);
        assert!(ObjectiveContext::new(op.clone(), b.clone(), 1.0, 1.0, 1.0).is_err());
        assert!(ObjectiveContext::new(op.clone(), b.clone(), 1.0, 0.0, 1.0).is_err());
        assert!(ObjectiveContext::new(op.clone(), b.clone(), 1.0, 0.5, 0.0).is_err());
        assert!(ObjectiveContext::new(op.clone(), DVector::zeros(2), 1.0, 0.5, 1.0).is_err());
        assert!(ObjectiveContext::new(op, b, 1.0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn objective_examples() {
        let op = SamplingOperator::new((2, 2), vec![(0, 0), (1, 1)]).unwrap();
        let ctx = ObjectiveContext::new(op.clone(), DVector::zeros(2), 1.0, 0.5, 1.0).unwrap();
        assert_eq!(ctx.objective_c_lambda(&DMatrix::zeros(2, 2)).unwrap(), 0.0);

        // Rank one, σ₁ = 1, consistent with the data.
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ctx = ObjectiveContext::new(op, DVector::from_vec(vec![1.0, 0.0]), 2.0, 0.5, 1.0).unwrap();
        assert!((ctx.objective_c_lambda(&x).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn objective_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let op = random_op(&mut rng, 6, 4, 10);
        let b = DVector::from_fn(10, |_, _| rng.sample(StandardNormal));
        let ctx = ObjectiveContext::new(op.clone(), b.clone(), 0.7, 0.9, 2.0).unwrap();
        let x = gaussian(&mut rng, 6, 4);

        let mut data = 0.0;
        for (k, &(i, j)) in op.omega().iter().enumerate() {
            data += (x[(i, j)] - b[k]).powi(2);
        }
        // Penalty from eigenvalues of XᵀX rather than an SVD of X.
        let eig = (x.transpose() * &x).symmetric_eigenvalues();
        let pen: f64 = eig.iter().map(|&l| rho_unchecked(l.max(0.0).sqrt(), 2.0)).sum();
        let want = 0.5 * data + 0.7 * pen;
        assert!((ctx.objective_c_lambda(&x).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn surrogate_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let op = random_op(&mut rng, 5, 5, 12);
        let b = DVector::from_fn(12, |_, _| rng.sample(StandardNormal));
        let ctx = ObjectiveContext::new(op.clone(), b.clone(), 0.8, 0.6, 1.0).unwrap();
        for _ in 0..50 {
            let x = gaussian(&mut rng, 5, 5);
            let z = gaussian(&mut rng, 5, 5);
            let cx = ctx.objective_c_lambda(&x).unwrap();
            let same = ctx.objective_c_lambda_mu(&x, &x).unwrap();
            assert!((same - 0.6 * cx).abs() < 1e-12);
            assert!(ctx.objective_c_lambda_mu(&x, &z).unwrap() >= 0.6 * cx - 1e-12);
        }

        // λ = 0 leaves only the quadratic part.
        let ctx0 = ObjectiveContext::new(op.clone(), b.clone(), 0.0, 0.1, 1.0).unwrap();
        let x = gaussian(&mut rng, 5, 5);
        let z = gaussian(&mut rng, 5, 5);
        let ax = op.apply(&x).unwrap();
        let az = op.apply(&z).unwrap();
        let want = 0.1 * (0.5 * (&ax - &b).norm_squared() - 0.5 * (&ax - &az).norm_squared())
            + 0.5 * (&x - &z).norm_squared();
        assert!((ctx0.objective_c_lambda_mu(&x, &z).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn thresholded_gradient_step_minimises_surrogate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let op = random_op(&mut rng, 6, 5, 18);
        let b = DVector::from_fn(18, |_, _| 2.0 * rng.sample::<f64, _>(StandardNormal));
        let ctx = ObjectiveContext::new(op, b, 0.5, 0.9, 1.0).unwrap();
        let z = gaussian(&mut rng, 6, 5);
        let xs = ts1_prox_matrix(&ctx.b_mu_step(&z).unwrap(), ctx.a, ctx.lambda * ctx.mu).unwrap();
        let best = ctx.objective_c_lambda_mu(&xs, &z).unwrap();
        for k in 0..100 {
            let cand = if k % 2 == 0 {
                gaussian(&mut rng, 6, 5)
            } else {
                &xs + gaussian(&mut rng, 6, 5) * 0.05
            };
            assert!(best <= ctx.objective_c_lambda_mu(&cand, &z).unwrap() + 1e-12);
        }
        assert!(singular_values(&xs).unwrap().len() == 5);
    }
}
