//! Least squares, regularized least squares and empirical-Bayes tuning.

pub mod eb;
pub mod kernel;
pub mod optimize;

pub use eb::{eb_cost, eb_estimate, EbFit, EbObjective, OptimizerStats};
pub use kernel::{kernel_matrix, KernelFamily, KernelMatrices, KernelSpec, ParamRole};
pub use optimize::{minimize, Minimum, Objective, OptimizerOptions};

use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, symmetrize, Mat, Vector};
use crate::signal::Dataset;

/// Record-level quantities shared by every estimator.
#[derive(Debug, Clone)]
pub struct RegressionSummary {
    pub theta_ls: Vector,
    /// `ΦᵀΦ`.
    pub gram: Mat,
    /// `(ΦᵀΦ)⁻¹` from the triangular QR factor.
    pub gram_inv: Mat,
    pub sigma2_hat: f64,
    pub samples: usize,
}

impl RegressionSummary {
    pub fn new(phi: &Mat, y: &Vector) -> Result<Self> {
        let (samples, n) = phi.shape();
        if samples <= n {
            return Err(Error::InvalidConfig(format!(
                "need N > n, got N = {samples}, n = {n}"
            )));
        }
        let qr = phi.clone().qr();
        let r = qr.r();
        let dmax = r.diagonal().amax();
        let dmin = r.diagonal().amin();
        if !(dmin > dmax * n as f64 * f64::EPSILON) {
            let cond = if dmin > 0.0 {
                (dmax / dmin).powi(2)
            } else {
                f64::INFINITY
            };
            return Err(Error::RankDeficient { cond });
        }
        let mut qty = y.clone();
        qr.q_tr_mul(&mut qty);
        let head = qty.rows(0, n).into_owned();
        let theta_ls = r
            .solve_upper_triangular(&head)
            .ok_or(Error::RankDeficient {
                cond: f64::INFINITY,
            })?;
        let r_inv = r
            .solve_upper_triangular(&Mat::identity(n, n))
            .ok_or(Error::RankDeficient {
                cond: f64::INFINITY,
            })?;
        let gram_inv = symmetrize(&(&r_inv * r_inv.transpose()));
        let gram = symmetrize(&(phi.transpose() * phi));
        let resid = y - phi * &theta_ls;
        let sigma2_hat = resid.norm_squared() / (samples - n) as f64;
        Ok(Self {
            theta_ls,
            gram,
            gram_inv,
            sigma2_hat,
            samples,
        })
    }

    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        Self::new(&data.phi, &data.y)
    }

    pub fn order(&self) -> usize {
        self.theta_ls.len()
    }

    /// `θ_LS − σ² G⁻¹ S⁻¹ θ_LS` with `S = P + σ² G⁻¹`.
    pub fn regularized(&self, p: &Mat, sigma2: f64) -> Result<Vector> {
        let s = symmetrize(&(p + &self.gram_inv * sigma2));
        let chol = s
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("S = P + sigma^2 (Phi^T Phi)^-1"))?;
        let alpha = chol.solve(&self.theta_ls);
        Ok(&self.theta_ls - &self.gram_inv * alpha * sigma2)
    }
}

/// `θ̂^LS = (ΦᵀΦ)⁻¹ΦᵀY` via Householder QR of `Φ`.
pub fn ls_estimate(data: &Dataset) -> Result<Vector> {
    Ok(RegressionSummary::from_dataset(data)?.theta_ls)
}

/// `σ̂² = ‖Y − Φθ̂^LS‖² / (N − n)`.
pub fn noise_variance_estimate(data: &Dataset) -> Result<f64> {
    Ok(RegressionSummary::from_dataset(data)?.sigma2_hat)
}

/// `θ̂^TR = (ΦᵀΦ + σ²P⁻¹)⁻¹ΦᵀY`.
///
/// Evaluated as `θ̂^LS − σ²(ΦᵀΦ)⁻¹(P + σ²(ΦᵀΦ)⁻¹)⁻¹θ̂^LS`, which needs no `P⁻¹`
/// and stays accurate when `P` is nearly singular.
pub fn rls_estimate(data: &Dataset, p: &Mat, sigma2: f64) -> Result<Vector> {
    if p.nrows() != data.order() || !p.is_square() {
        return Err(Error::InvalidConfig(format!(
            "P must be {0}x{0}, got {1}x{2}",
            data.order(),
            p.nrows(),
            p.ncols()
        )));
    }
    // reject indefinite P up front; the S-form alone would hide it
    spd_inverse(p, "P")?;
    RegressionSummary::from_dataset(data)?.regularized(p, sigma2)
}
