//! Empirical-Bayes cost in the reduced `n × n` form and its minimizer.

use serde::{Deserialize, Serialize};

use super::kernel::{
    kernel_gradient_unchecked, kernel_matrix_unchecked, kernel_value_unchecked, KernelSpec,
};
use super::optimize::{minimize, Objective, OptimizerOptions};
use super::RegressionSummary;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, Mat, Vector};
use crate::signal::Dataset;

/// `F̄(η) = θ_LSᵀ Ŝ⁻¹ θ_LS + log det Ŝ`, `Ŝ = P(η) + σ̂²(ΦᵀΦ)⁻¹`.
#[derive(Debug, Clone)]
pub struct EbObjective {
    pub spec: KernelSpec,
    pub theta_ls: Vector,
    /// `σ̂²(ΦᵀΦ)⁻¹`.
    pub noise_cov: Mat,
}

impl EbObjective {
    pub fn new(spec: KernelSpec, summary: &RegressionSummary) -> Self {
        Self {
            spec,
            theta_ls: summary.theta_ls.clone(),
            noise_cov: &summary.gram_inv * summary.sigma2_hat,
        }
    }

    fn evaluate(&self, eta: &[f64], with_grad: bool) -> Option<(f64, Vec<f64>)> {
        let n = self.theta_ls.len();
        if !with_grad {
            let p = kernel_value_unchecked(self.spec.family, eta, n);
            let chol = symmetrize(&(p + &self.noise_cov)).cholesky()?;
            let alpha = chol.solve(&self.theta_ls);
            let logdet: f64 = 2.0
                * chol
                    .l_dirty()
                    .diagonal()
                    .iter()
                    .map(|d| d.ln())
                    .sum::<f64>();
            return Some((self.theta_ls.dot(&alpha) + logdet, Vec::new()));
        }
        let (p, dp) = kernel_gradient_unchecked(self.spec.family, eta, n);
        let s = symmetrize(&(p + &self.noise_cov));
        let chol = s.cholesky()?;
        let alpha = chol.solve(&self.theta_ls);
        let logdet: f64 = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>();
        let value = self.theta_ls.dot(&alpha) + logdet;
        let s_inv = chol.inverse();
        let grad = dp
            .iter()
            .map(|dp| -alpha.dot(&(dp * &alpha)) + s_inv.component_mul(dp).sum())
            .collect();
        Some((value, grad))
    }
}

impl Objective for EbObjective {
    fn value(&self, eta: &[f64]) -> Option<f64> {
        self.evaluate(eta, false).map(|(v, _)| v)
    }

    fn value_grad(&self, eta: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.evaluate(eta, true)
    }
}

/// Value and gradient of the reduced EB cost.
pub fn eb_cost(
    eta: &[f64],
    theta_ls: &Vector,
    gram: &Mat,
    sigma2_hat: f64,
    spec: &KernelSpec,
) -> Result<(f64, Vector)> {
    spec.check_in_box(eta)?;
    let gram_inv = crate::linalg::spd_inverse(gram, "Phi^T Phi")?;
    let obj = EbObjective {
        spec: spec.clone(),
        theta_ls: theta_ls.clone(),
        noise_cov: gram_inv * sigma2_hat,
    };
    let (v, g) = obj
        .evaluate(eta, true)
        .ok_or(Error::NotPositiveDefinite("S = P + sigma^2 (Phi^T Phi)^-1"))?;
    Ok((v, Vector::from_vec(g)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStats {
    pub starts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub at_boundary: bool,
}

/// Result of [`eb_estimate`].
#[derive(Debug, Clone)]
pub struct EbFit {
    pub eta_hat: Vec<f64>,
    pub sigma2_hat: f64,
    pub theta_ls: Vector,
    pub theta_tr: Vector,
    pub cost: f64,
    pub optimizer_stats: OptimizerStats,
    /// Multi-start initial points and their costs.
    pub initial_points: Vec<(Vec<f64>, f64)>,
}

/// Tunes `η` by minimizing the EB cost over `Ω`, then forms `θ̂^TR(η̂)`.
pub fn eb_estimate(data: &Dataset, spec: &KernelSpec, opts: &OptimizerOptions) -> Result<EbFit> {
    let summary = RegressionSummary::from_dataset(data)?;
    eb_estimate_from_summary(&summary, spec, opts)
}

pub fn eb_estimate_from_summary(
    summary: &RegressionSummary,
    spec: &KernelSpec,
    opts: &OptimizerOptions,
) -> Result<EbFit> {
    spec.validate()?;
    let obj = EbObjective::new(spec.clone(), summary);
    let m = minimize(&obj, spec.family.roles(), &spec.bounds(), opts);
    if !m.value.is_finite() {
        log::warn!("EB cost was infeasible from every start");
    }
    let n = summary.order();
    let p = kernel_matrix_unchecked(spec.family, &m.eta, n).p;
    let theta_tr = summary.regularized(&p, summary.sigma2_hat)?;
    Ok(EbFit {
        eta_hat: m.eta,
        sigma2_hat: summary.sigma2_hat,
        theta_ls: summary.theta_ls.clone(),
        theta_tr,
        cost: m.value,
        optimizer_stats: OptimizerStats {
            starts: m.starts,
            iterations: m.iterations,
            converged: m.converged,
            at_boundary: m.at_boundary,
        },
        initial_points: m.initial_points,
    })
}
