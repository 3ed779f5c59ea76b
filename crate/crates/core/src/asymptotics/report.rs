//! Serializable asymptotic report and the ridge `a`-sweep.

use serde::{Deserialize, Serialize};

use super::moments::SecondOrderStats;
use super::theorems::{
    eta_star, ridge_theorem1, ridge_theorem3, theorem1, theorem2, theorem3, Theorem1, Theorem2,
    Theorem3,
};
use crate::error::{Error, Result};
use crate::estimators::kernel::{KernelFamily, KernelSpec};
use crate::estimators::optimize::OptimizerOptions;
use crate::exec::{map_indexed, ExecMode};
use crate::linalg::{max_eigenvalue, Mat, Vector};
use crate::signal::{FilterKind, FilterSpec, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub cond_sigma: f64,
    pub trace_v_b_h: f64,
    pub trace_v_als_1: f64,
    pub trace_v_als: f64,
    pub trace_v_b_ar: f64,
    pub e_b_ar_norm2: f64,
    pub amse1: f64,
    pub amse2: f64,
    pub amse3: f64,
}

/// Every asymptotic quantity for one `(kernel, θ₀, filter, noise, N)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub family: KernelFamily,
    pub n: usize,
    pub n_samples: usize,
    pub sigma2: f64,
    pub eta_star: Vec<f64>,
    #[serde(with = "super::serde_mat")]
    pub sigma: Mat,
    #[serde(with = "super::serde_mat")]
    pub a_b: Mat,
    #[serde(with = "super::serde_mat")]
    pub b_b: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_b_h: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_als_1: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_als_2: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_als: Mat,
    #[serde(flatten)]
    pub third: Theorem3,
    pub singular_a: bool,
    pub summary: ReportSummary,
}

impl AsymptoticReport {
    fn assemble(
        family: KernelFamily,
        eta_star: Vec<f64>,
        stats: &SecondOrderStats,
        noise: &NoiseSpec,
        samples: usize,
        t1: Theorem1,
        t2: Theorem2,
        third: Theorem3,
    ) -> Self {
        let summary = ReportSummary {
            cond_sigma: stats.cond,
            trace_v_b_h: t1.v_b_h.trace(),
            trace_v_als_1: t2.v_als_1.trace(),
            trace_v_als: t2.v_als.trace(),
            trace_v_b_ar: third.v_b_ar.trace(),
            e_b_ar_norm2: third.e_b_ar.norm_squared(),
            amse1: third.amse[0],
            amse2: third.amse[1],
            amse3: third.amse[2],
        };
        Self {
            family,
            n: stats.order(),
            n_samples: samples,
            sigma2: noise.sigma2,
            eta_star,
            sigma: stats.sigma.clone(),
            a_b: t1.a_b,
            b_b: t1.b_b,
            v_b_h: t1.v_b_h,
            v_als_1: t2.v_als_1,
            v_als_2: t2.v_als_2,
            v_als: t2.v_als,
            third,
            singular_a: t1.singular_a,
            summary,
        }
    }
}

fn check_order(theta0: &Vector, stats: &SecondOrderStats) -> Result<()> {
    if theta0.len() != stats.order() {
        return Err(Error::InvalidConfig(format!(
            "theta0 has length {}, Sigma is {}x{}",
            theta0.len(),
            stats.order(),
            stats.order()
        )));
    }
    Ok(())
}

/// `η*` by optimization followed by the generic asymptotic formulas.
pub fn generic_report(
    spec: &KernelSpec,
    theta0: &Vector,
    stats: &SecondOrderStats,
    noise: &NoiseSpec,
    samples: usize,
    opts: &OptimizerOptions,
) -> Result<AsymptoticReport> {
    check_order(theta0, stats)?;
    let eta = eta_star(spec, theta0, opts)?;
    generic_report_at(spec, theta0, eta, stats, noise, samples)
}

/// The generic asymptotic formulas at a given `η*`.
pub fn generic_report_at(
    spec: &KernelSpec,
    theta0: &Vector,
    eta: Vec<f64>,
    stats: &SecondOrderStats,
    noise: &NoiseSpec,
    samples: usize,
) -> Result<AsymptoticReport> {
    check_order(theta0, stats)?;
    let t1 = theorem1(spec, theta0, &eta, &stats.sigma, noise.sigma2)?;
    let t2 = theorem2(stats, noise.sigma2, samples)?;
    let t3 = theorem3(theta0, &t1, &t2, stats, noise, samples)?;
    Ok(AsymptoticReport::assemble(
        spec.family,
        eta,
        stats,
        noise,
        samples,
        t1,
        t2,
        t3,
    ))
}

/// Ridge report from the closed forms alone.
pub fn ridge_report(
    theta0: &Vector,
    stats: &SecondOrderStats,
    noise: &NoiseSpec,
    samples: usize,
) -> Result<AsymptoticReport> {
    check_order(theta0, stats)?;
    let s = theta0.norm_squared();
    if s == 0.0 {
        return Err(Error::InvalidConfig(
            "theta0 must be nonzero for ridge".into(),
        ));
    }
    if samples <= theta0.len() {
        return Err(Error::InvalidConfig(format!(
            "need N > n, got N = {samples}, n = {}",
            theta0.len()
        )));
    }
    let t2 = theorem2(stats, noise.sigma2, samples)?;
    let t1 = ridge_theorem1(theta0, &t2.sigma_inv, noise.sigma2);
    let t3 = ridge_theorem3(theta0, &t2, stats, noise, samples);
    let eta = vec![s / theta0.len() as f64];
    Ok(AsymptoticReport::assemble(
        KernelFamily::Ridge,
        eta,
        stats,
        noise,
        samples,
        t1,
        t2,
        t3,
    ))
}

/// Second-order filter with `c_u` chosen so that `λ₁(Σ) = 1`.
pub fn unit_lambda1_filter(a: f64, n: usize) -> Result<FilterSpec> {
    let base = FilterSpec::second_order(a, 1.0)?;
    let lambda1 = max_eigenvalue(&super::sigma_matrix(&base, n));
    FilterSpec::second_order(a, 1.0 / lambda1.sqrt())
}

/// One point of the ridge `a`-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub system: usize,
    pub a: f64,
    pub cu2: f64,
    pub n_samples: usize,
    pub cond_sigma: f64,
    pub e_b_ar_norm2: f64,
    pub trace_v_als: f64,
    pub trace_v_b_ar: f64,
}

/// Ridge quantities over an `a`-grid with `λ₁(Σ) = 1`, Gaussian noise of
/// variance `sigma2`. Rows are ordered by system, then sample size, then `a`.
pub fn sweep(
    systems: &[Vector],
    a_grid: &[f64],
    sample_sizes: &[usize],
    sigma2: f64,
) -> Result<Vec<SweepRow>> {
    let n = systems
        .first()
        .map(|t| t.len())
        .ok_or_else(|| Error::InvalidConfig("sweep needs at least one system".into()))?;
    let noise = NoiseSpec::gaussian(sigma2)?;
    let per_a = map_indexed(a_grid.len(), ExecMode::Parallel, |i| {
        let a = a_grid[i];
        let filter = unit_lambda1_filter(a, n)?;
        let cu2 = match filter.kind {
            FilterKind::SecondOrderAr { c_u, .. } => c_u * c_u,
            FilterKind::ImpulseSequence { .. } => unreachable!(),
        };
        Ok((a, cu2, SecondOrderStats::new(&filter, n)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (na, ns) = (a_grid.len(), sample_sizes.len());
    let rows = map_indexed(systems.len() * ns * na, ExecMode::Parallel, |i| {
        let (system, samples) = (i / (ns * na), sample_sizes[(i / na) % ns]);
        let (a, cu2, stats) = &per_a[i % na];
        let rep = ridge_report(&systems[system], stats, &noise, samples)?;
        Ok(SweepRow {
            system,
            a: *a,
            cu2: *cu2,
            n_samples: samples,
            cond_sigma: stats.cond,
            e_b_ar_norm2: rep.summary.e_b_ar_norm2,
            trace_v_als: rep.summary.trace_v_als,
            trace_v_b_ar: rep.summary.trace_v_b_ar,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

/// First index `i` with `values[i+1] < values[i]`.
pub fn first_decrease(values: &[f64]) -> Option<usize> {
    values.windows(2).position(|w| w[1] < w[0])
}
