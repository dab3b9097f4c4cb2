//! Recovery quality measures.

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{Result, Ts1Error};
use crate::scalar::Real;

/// A recovery counts as successful below this relative error.
pub const SUCCESS_REL_ERR: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryMetrics {
    pub rel_err: f64,
    pub mse: f64,
    /// Decibels; `+∞` when the reconstruction is exact.
    pub psnr: f64,
    pub success: bool,
}

impl RecoveryMetrics {
    pub fn evaluate<T: Real>(x_opt: &DMatrix<T>, truth: &DMatrix<T>, peak: f64) -> Result<Self> {
        let rel_err = relative_error(x_opt, truth)?;
        let mse = mse(x_opt, truth)?;
        Ok(RecoveryMetrics {
            rel_err,
            mse,
            psnr: psnr_from_mse(mse, peak)?,
            success: rel_err < SUCCESS_REL_ERR,
        })
    }
}

fn check_dims<T: Real>(x: &DMatrix<T>, m: &DMatrix<T>) -> Result<()> {
    if x.shape() != m.shape() {
        return Err(Ts1Error::dims(format!("{:?}", m.shape()), format!("{:?}", x.shape())));
    }
    Ok(())
}

/// `‖X − M‖_F / ‖M‖_F`.
pub fn relative_error<T: Real>(x_opt: &DMatrix<T>, truth: &DMatrix<T>) -> Result<f64> {
    check_dims(x_opt, truth)?;
    let denom = truth.norm().to_f64_lossy();
    if denom == 0.0 {
        return Err(Ts1Error::domain("relative error against a zero matrix"));
    }
    Ok((x_opt - truth).norm().to_f64_lossy() / denom)
}

/// Mean squared entrywise error.
pub fn mse<T: Real>(x_opt: &DMatrix<T>, truth: &DMatrix<T>) -> Result<f64> {
    check_dims(x_opt, truth)?;
    let n = truth.len().max(1) as f64;
    Ok((x_opt - truth).norm_squared().to_f64_lossy() / n)
}

/// `10 log₁₀(peak² / mse)`.
pub fn psnr<T: Real>(x_opt: &DMatrix<T>, truth: &DMatrix<T>, peak: f64) -> Result<f64> {
    psnr_from_mse(mse(x_opt, truth)?, peak)
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Ts1Error::domain(format!("PSNR peak must be positive, got {peak}")));
    }
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * Float::log10(peak * peak / mse))
}
