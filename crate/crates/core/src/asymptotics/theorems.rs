//! Limits `η*_b`, `A_b`, `B_b`, `V_b^H` and the second/third order moments of
//! `√N(θ̂ − θ₀)`.

use serde::{Deserialize, Serialize};

use super::moments::SecondOrderStats;
use crate::dd::{c_sandwich, refine_inverse, DdMat};
use crate::error::{Error, Result};
use crate::estimators::kernel::{
    kernel_matrix_unchecked, KernelFamily, KernelMatrices, KernelSpec,
};
use crate::estimators::optimize::{minimize, Objective, OptimizerOptions};
use crate::linalg::{spd_inverse, sym_pinv, symmetrize, unvec, vec_cols, Mat, Vector};
use crate::signal::NoiseSpec;

/// `W_b(η) = θ₀ᵀP(η)⁻¹θ₀ + log det P(η)`.
#[derive(Debug, Clone)]
pub struct WbObjective {
    pub family: KernelFamily,
    pub theta0: Vector,
}

impl Objective for WbObjective {
    fn value(&self, eta: &[f64]) -> Option<f64> {
        self.value_grad_inner(eta, false).map(|(v, _)| v)
    }

    fn value_grad(&self, eta: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.value_grad_inner(eta, true)
    }
}

impl WbObjective {
    fn value_grad_inner(&self, eta: &[f64], with_grad: bool) -> Option<(f64, Vec<f64>)> {
        let km = kernel_matrix_unchecked(self.family, eta, self.theta0.len());
        let chol = symmetrize(&km.p).cholesky()?;
        let beta = chol.solve(&self.theta0);
        let logdet = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>();
        let value = self.theta0.dot(&beta) + logdet;
        if !with_grad {
            return Some((value, Vec::new()));
        }
        let p_inv = chol.inverse();
        let grad = km
            .dp
            .iter()
            .map(|dp| -beta.dot(&(dp * &beta)) + p_inv.component_mul(dp).sum())
            .collect();
        Some((value, grad))
    }
}

/// Minimizer of `W_b` over `Ω`; ridge uses `η* = θ₀ᵀθ₀ / n`.
pub fn eta_star(spec: &KernelSpec, theta0: &Vector, opts: &OptimizerOptions) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = theta0.len();
    if spec.family == KernelFamily::Ridge {
        let s = theta0.norm_squared();
        if s == 0.0 {
            return Err(Error::InvalidConfig(
                "theta0 must be nonzero for ridge".into(),
            ));
        }
        let eta = vec![s / n as f64];
        spec.check_in_box(&eta)?;
        return Ok(eta);
    }
    let obj = WbObjective {
        family: spec.family,
        theta0: theta0.clone(),
    };
    let m = minimize(&obj, spec.family.roles(), &spec.bounds(), opts);
    if !m.value.is_finite() {
        return Err(Error::NoConvergence);
    }
    if m.at_boundary {
        log::warn!("eta* lies on the boundary of the box: {:?}", m.eta);
    }
    Ok(m.eta)
}

/// `P⁻¹`, `∂P⁻¹/∂η_k` and `∂²P⁻¹/∂η_k∂η_l` from the kernel derivatives.
#[derive(Debug, Clone)]
pub struct InverseDerivatives {
    pub p_inv: Mat,
    pub d: Vec<Mat>,
    pub d2: Vec<Vec<Mat>>,
}

pub fn inverse_derivatives(km: &KernelMatrices) -> Result<InverseDerivatives> {
    let p_inv = spd_inverse(&km.p, "P(eta*)")?;
    let dim = km.dp.len();
    // P⁻¹ ∂_k P P⁻¹
    let sand: Vec<Mat> = km.dp.iter().map(|dp| &p_inv * dp * &p_inv).collect();
    let d: Vec<Mat> = sand.iter().map(|m| -m).collect();
    let d2 = (0..dim)
        .map(|k| {
            (0..dim)
                .map(|l| {
                    &sand[l] * &km.dp[k] * &p_inv + &sand[k] * &km.dp[l] * &p_inv
                        - &p_inv * &km.d2p[k][l] * &p_inv
                })
                .collect()
        })
        .collect();
    Ok(InverseDerivatives { p_inv, d, d2 })
}

/// Hessian `A_b`, cross term `B_b` and `V_b^H` at `η*`.
#[derive(Debug, Clone)]
pub struct Theorem1 {
    pub a_b: Mat,
    pub b_b: Mat,
    pub v_b_h: Mat,
    /// `A_b⁻¹` (pseudo-inverse when `A_b` is singular).
    pub a_inv: Mat,
    pub p_inv: Mat,
    pub singular_a: bool,
}

fn invert_a(a: &Mat) -> (Mat, bool) {
    match spd_inverse(a, "A_b") {
        Ok(inv) => (inv, false),
        Err(_) => {
            log::warn!("{}", Error::SingularA);
            (sym_pinv(a, 1e-12), true)
        }
    }
}

pub fn theorem1(
    spec: &KernelSpec,
    theta0: &Vector,
    eta_star: &[f64],
    sigma: &Mat,
    sigma2: f64,
) -> Result<Theorem1> {
    let n = theta0.len();
    let km = kernel_matrix_unchecked(spec.family, eta_star, n);
    let inv = inverse_derivatives(&km)?;
    let dim = km.dp.len();
    let a_b = symmetrize(&Mat::from_fn(dim, dim, |k, l| {
        theta0.dot(&(&inv.d2[k][l] * theta0))
            + (&inv.d[l] * &km.dp[k]).trace()
            + (&inv.p_inv * &km.d2p[k][l]).trace()
    }));
    let b_b = Mat::from_fn(dim, n, |k, j| (inv.d[k].transpose() * theta0)[j]);
    let (a_inv, singular_a) = invert_a(&a_b);
    let sigma_inv = accurate_inverse(sigma)?.to_mat();
    let v_b_h =
        symmetrize(&(&a_inv * &b_b * &sigma_inv * b_b.transpose() * &a_inv * (4.0 * sigma2)));
    Ok(Theorem1 {
        a_b,
        b_b,
        v_b_h,
        a_inv,
        p_inv: inv.p_inv,
        singular_a,
    })
}

/// `Σ⁻¹` from Cholesky, refined to double-double accuracy.
pub fn accurate_inverse(sigma: &Mat) -> Result<DdMat> {
    let x0 = spd_inverse(sigma, "Sigma")?;
    Ok(refine_inverse(sigma, &x0, 3))
}

/// `V^ALS_1`, `V^ALS_2` and `V^ALS(N) = V₁ + V₂/N`.
#[derive(Debug, Clone)]
pub struct Theorem2 {
    pub v_als_1: Mat,
    pub v_als_2: Mat,
    pub v_als: Mat,
    pub sigma_inv: Mat,
    /// `Σ⁻¹` to double-double accuracy.
    pub sigma_inv_dd: DdMat,
}

/// `Σ⁻¹ vec⁻¹[C_Γ vec(X)] Σ⁻¹`, i.e. `vec⁻¹[(Σ⁻¹⊗Σ⁻¹) C_Γ vec(X)]`, in
/// plain `f64`. Loses about `ε·cond(Σ)²` relative accuracy.
pub fn c_gamma_sandwich(sigma_inv: &Mat, c_gamma: &Mat, x: &Mat) -> Mat {
    let n = sigma_inv.nrows();
    let w = unvec(&(c_gamma * vec_cols(x)), n);
    symmetrize(&(sigma_inv * w * sigma_inv))
}

/// `(Σ⁻¹⊗Σ⁻¹) C_Γ (Σ⁻¹⊗Σ⁻¹) vec(M)` back in matrix form, in double-double.
pub fn c_gamma_double_sandwich(sigma_inv: &DdMat, c_gamma: &Mat, m: &Mat) -> Mat {
    let inner = sigma_inv.mul(&DdMat::from_mat(m)).mul(sigma_inv);
    c_sandwich(sigma_inv, c_gamma, &inner)
}

pub fn theorem2(stats: &SecondOrderStats, sigma2: f64, samples: usize) -> Result<Theorem2> {
    let sigma_inv_dd = accurate_inverse(&stats.sigma)?;
    let sigma_inv = sigma_inv_dd.to_mat();
    let v_als_1 = &sigma_inv * sigma2;
    let v_als_2 = c_sandwich(&sigma_inv_dd, &stats.c_gamma, &sigma_inv_dd) * sigma2;
    let v_als = &v_als_1 + &v_als_2 / samples as f64;
    Ok(Theorem2 {
        v_als_1,
        v_als_2,
        v_als,
        sigma_inv,
        sigma_inv_dd,
    })
}

/// Third-order moments of `√N(θ̂^TR(η̂_EB) − θ₀)` and the three AMSEs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem3 {
    #[serde(with = "super::serde_mat")]
    pub c_b: Mat,
    /// `ϑ^AR_{b2} = −σ²Σ⁻¹P(η*)⁻¹θ₀`.
    #[serde(with = "super::serde_vec")]
    pub vartheta_b2: Vector,
    #[serde(with = "super::serde_vec")]
    pub e_b_ar: Vector,
    #[serde(with = "super::serde_mat")]
    pub v_b3_11: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_b3_12: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_b3_13: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_b3_2: Mat,
    #[serde(with = "super::serde_mat")]
    pub v_b_ar: Mat,
    pub amse: [f64; 3],
}

/// Assembles `V^AR_b` and the AMSEs from the individual blocks.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_theorem3(
    c_b: Mat,
    vartheta_b2: Vector,
    v_b3_11: Mat,
    v_b3_12: Mat,
    v_b3_13: Mat,
    v_b3_2: Mat,
    t2: &Theorem2,
    samples: usize,
) -> Theorem3 {
    let nf = samples as f64;
    let e_b_ar = &vartheta_b2 / nf.sqrt();
    let v31 = &v_b3_11 + &v_b3_12 + &v_b3_13;
    let v_b_ar = symmetrize(&(&t2.v_als + v31 / (nf * nf) + (&v_b3_2 + v_b3_2.transpose()) / nf));
    let bias2 = e_b_ar.norm_squared();
    let amse = [
        t2.v_als_1.trace() / nf,
        (t2.v_als.trace() + bias2) / nf,
        (v_b_ar.trace() + bias2) / nf,
    ];
    Theorem3 {
        c_b,
        vartheta_b2,
        e_b_ar,
        v_b3_11,
        v_b3_12,
        v_b3_13,
        v_b3_2,
        v_b_ar,
        amse,
    }
}

pub fn theorem3(
    theta0: &Vector,
    t1: &Theorem1,
    t2: &Theorem2,
    stats: &SecondOrderStats,
    noise: &NoiseSpec,
    samples: usize,
) -> Result<Theorem3> {
    let n = theta0.len();
    if samples <= n {
        return Err(Error::InvalidConfig(format!(
            "need N > n, got N = {samples}, n = {n}"
        )));
    }
    let s2 = noise.sigma2;
    let si = &t2.sigma_inv;
    let c_b = symmetrize(&(-2.0 * t1.b_b.transpose() * &t1.a_inv * &t1.b_b + &t1.p_inv));
    let pt = &t1.p_inv * theta0;
    let vartheta_b2 = -(si * &pt) * s2;
    let ptt = &pt * pt.transpose();
    let v_b3_11 = symmetrize(&(si * &c_b * si * &c_b * si)) * s2.powi(3);
    let v_b3_12 = c_gamma_double_sandwich(&t2.sigma_inv_dd, &stats.c_gamma, &ptt) * (s2 * s2);
    let v_b3_13 = symmetrize(&(si * &ptt * si)) * noise.rho_variance();
    let v_b3_2 = -symmetrize(&(si * &c_b * si)) * (s2 * s2);
    Ok(assemble_theorem3(
        c_b,
        vartheta_b2,
        v_b3_11,
        v_b3_12,
        v_b3_13,
        v_b3_2,
        t2,
        samples,
    ))
}

/// Closed forms for `P = ηI` at `η* = θ₀ᵀθ₀/n`.
pub fn ridge_theorem1(theta0: &Vector, sigma_inv: &Mat, sigma2: f64) -> Theorem1 {
    let n = theta0.len() as f64;
    let s = theta0.norm_squared();
    let a_b = Mat::from_element(1, 1, n.powi(3) / (s * s));
    let b_b = Mat::from_fn(1, theta0.len(), |_, j| -(n * n) / (s * s) * theta0[j]);
    let v_b_h = Mat::from_element(
        1,
        1,
        4.0 * sigma2 * theta0.dot(&(sigma_inv * theta0)) / (n * n),
    );
    Theorem1 {
        a_inv: Mat::from_element(1, 1, s * s / n.powi(3)),
        a_b,
        b_b,
        v_b_h,
        p_inv: Mat::identity(theta0.len(), theta0.len()) * (n / s),
        singular_a: false,
    }
}

pub fn ridge_theorem3(
    theta0: &Vector,
    t2: &Theorem2,
    stats: &SecondOrderStats,
    noise: &NoiseSpec,
    samples: usize,
) -> Theorem3 {
    let dim = theta0.len();
    let n = dim as f64;
    let s = theta0.norm_squared();
    let s2 = noise.sigma2;
    let si = &t2.sigma_inv;
    let si2 = si * si;
    let si3 = &si2 * si;
    let tt = theta0 * theta0.transpose();
    let c_b = Mat::identity(dim, dim) * (n / s) - &tt * (2.0 * n / (s * s));
    let vartheta_b2 = -(si * theta0) * (n * s2 / s);
    let sts = si * &tt * si;
    let v_b3_11 = (&sts * &tt * si * (4.0 / (s * s)) + &si3
        - &si2 * &tt * si * (2.0 / s)
        - si * &tt * &si2 * (2.0 / s))
        * (n * n * s2.powi(3) / (s * s));
    let v_b3_12 = c_gamma_double_sandwich(&t2.sigma_inv_dd, &stats.c_gamma, &tt)
        * (n * n * s2 * s2 / (s * s));
    let v_b3_13 = &sts * (n * n * noise.rho_variance() / (s * s));
    let v_b3_2 = &sts * (2.0 * n * s2 * s2 / (s * s)) - &si2 * (n * s2 * s2 / s);
    assemble_theorem3(
        c_b,
        vartheta_b2,
        symmetrize(&v_b3_11),
        v_b3_12,
        symmetrize(&v_b3_13),
        symmetrize(&v_b3_2),
        t2,
        samples,
    )
}
