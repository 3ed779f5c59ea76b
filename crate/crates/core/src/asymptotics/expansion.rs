//! Record-level expansion terms and the trace bounds in `cond(Σ)`.

use crate::error::Result;
use crate::estimators::kernel::{kernel_matrix_unchecked, KernelSpec};
use crate::estimators::{EbFit, RegressionSummary};
use crate::linalg::{spd_inverse, sym_eigen, symmetrize, Mat, Vector};
use crate::signal::Dataset;

/// Terms of `√N(θ̂^LS − θ₀) = θ̂₁ + θ̂₂/√N` and
/// `√N(θ̂^TR − θ₀) = θ̂₁ + (θ̂₂ + ϑ_b2)/√N + θ̂_b3/N`.
#[derive(Debug, Clone)]
pub struct ExpansionTerms {
    pub theta_als_1: Vector,
    pub theta_als_2: Vector,
    pub vartheta_b2: Vector,
    pub theta_b3: Vector,
    /// `‖lhs − rhs‖ / (‖θ₀‖ + ‖θ̂^LS‖)` for the LS identity.
    pub ls_residual: f64,
    /// Same for the regularized identity.
    pub tr_residual: f64,
}

pub fn expansion_terms(
    data: &Dataset,
    fit: &EbFit,
    spec: &KernelSpec,
    sigma: &Mat,
    eta_star: &[f64],
    sigma2: f64,
) -> Result<ExpansionTerms> {
    let summary = RegressionSummary::from_dataset(data)?;
    let theta0 = &data.system.theta0;
    let n = theta0.len();
    let nf = data.samples() as f64;
    let rt = nf.sqrt();
    let v = match &data.v {
        Some(v) => v.clone(),
        None => &data.y - &data.phi * theta0,
    };
    let sigma_inv = spd_inverse(sigma, "Sigma")?;
    // √N ΦᵀV / N
    let score = data.phi.transpose() * v / rt;
    let theta_als_1 = &sigma_inv * &score;
    let theta_als_2 = (&summary.gram_inv * nf - &sigma_inv) * &score * rt;

    let p_star = kernel_matrix_unchecked(spec.family, eta_star, n).p;
    let p_star_inv = spd_inverse(&p_star, "P(eta*)")?;
    let vartheta_b2 = -(&sigma_inv * (&p_star_inv * theta0)) * sigma2;

    let p_hat = kernel_matrix_unchecked(spec.family, &fit.eta_hat, n).p;
    let s_hat = symmetrize(&(p_hat + &summary.gram_inv * fit.sigma2_hat));
    let alpha = s_hat
        .cholesky()
        .ok_or(crate::Error::NotPositiveDefinite("S(eta_hat)"))?
        .solve(&fit.theta_ls);
    let theta_b3 = -(&summary.gram_inv * alpha * (fit.sigma2_hat * nf) + &vartheta_b2) * rt;

    let scale = theta0.norm() + fit.theta_ls.norm();
    let lhs_ls = (&fit.theta_ls - theta0) * rt;
    let rhs_ls = &theta_als_1 + &theta_als_2 / rt;
    let lhs_tr = (&fit.theta_tr - theta0) * rt;
    let rhs_tr = &theta_als_1 + (&theta_als_2 + &vartheta_b2) / rt + &theta_b3 / nf;
    Ok(ExpansionTerms {
        ls_residual: (lhs_ls - rhs_ls).norm() / scale,
        tr_residual: (lhs_tr - rhs_tr).norm() / scale,
        theta_als_1,
        theta_als_2,
        vartheta_b2,
        theta_b3,
    })
}

/// Bracket `[lower, upper]` around `Tr(AᵀB⁻ᵏA)` in terms of `cond(B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionBounds {
    pub lower: f64,
    pub upper: f64,
    pub trace: f64,
    /// `u_minᵀA = 0`; the lower bound is reported as 0.
    pub degenerate: bool,
}

impl ConditionBounds {
    pub fn contains_trace(&self) -> bool {
        let slack = 1e-10 * self.upper.abs();
        self.lower <= self.trace + slack && self.trace <= self.upper + slack
    }
}

pub fn condition_bounds(a: &Mat, b: &Mat, k: u32) -> Result<ConditionBounds> {
    let (values, vectors) = sym_eigen(b);
    let n = values.len();
    let lambda_1 = values[0];
    let lambda_n = values[n - 1];
    if !(lambda_n > 0.0) {
        return Err(crate::Error::NotPositiveDefinite("B"));
    }
    let cond = lambda_1 / lambda_n;
    let factor = (cond / lambda_1).powi(k as i32);
    let u = vectors.column(n - 1);
    let ua = a.transpose() * u;
    let degenerate = ua.norm() <= 1e-12 * a.norm();
    let lower = if degenerate {
        0.0
    } else {
        ua.norm_squared() * factor
    };
    let upper = (a * a.transpose()).trace() * factor;
    let b_inv = spd_inverse(b, "B")?;
    let mut b_inv_k = Mat::identity(n, n);
    for _ in 0..k {
        b_inv_k = &b_inv_k * &b_inv;
    }
    let trace = (a.transpose() * b_inv_k * a).trace();
    Ok(ConditionBounds {
        lower,
        upper,
        trace,
        degenerate,
    })
}
