//! Kernel matrices `P(η)` with analytic first and second derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `P = η I`.
    Ridge,
    /// Tuned-correlated: `c α^{max(i,j)}`.
    Tc,
    /// Diagonal-correlated: `c α^{(i+j)/2} ρ^{|i-j|}`.
    Dc,
    /// Stable spline: `c (α^{i+j+max(i,j)}/2 − α^{3 max(i,j)}/6)`.
    Ss,
}

impl KernelFamily {
    /// Number of hyper-parameters.
    pub fn dim(self) -> usize {
        match self {
            KernelFamily::Ridge => 1,
            KernelFamily::Tc | KernelFamily::Ss => 2,
            KernelFamily::Dc => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Ridge => "ridge",
            KernelFamily::Tc => "tc",
            KernelFamily::Dc => "dc",
            KernelFamily::Ss => "ss",
        }
    }

    /// Coordinate roles, used to pick the search transform.
    pub fn roles(self) -> &'static [ParamRole] {
        use ParamRole::*;
        match self {
            KernelFamily::Ridge => &[Scale],
            KernelFamily::Tc | KernelFamily::Ss => &[Scale, Decay],
            KernelFamily::Dc => &[Scale, Decay, Correlation],
        }
    }

    /// Strictly interior default box `Ω`.
    pub fn default_box(self) -> Vec<(f64, f64)> {
        self.roles().iter().map(|r| r.default_bounds()).collect()
    }
}

/// How a hyper-parameter enters the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    /// Positive scale (`η` for ridge, `c` otherwise).
    Scale,
    /// Decay rate `α ∈ [0, 1)`.
    Decay,
    /// Correlation `ρ ∈ [-1, 1]`.
    Correlation,
}

impl ParamRole {
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            ParamRole::Scale => (1e-9, 1e9),
            ParamRole::Decay => (1e-6, 1.0 - 1e-6),
            ParamRole::Correlation => (-1.0 + 1e-6, 1.0 - 1e-6),
        }
    }
}

/// Kernel family plus its hyper-parameter box `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Per-coordinate closed bounds; defaults to [`KernelFamily::default_box`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<Vec<(f64, f64)>>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Self {
        Self {
            family,
            omega: None,
        }
    }

    pub fn with_box(family: KernelFamily, omega: Vec<(f64, f64)>) -> Result<Self> {
        let spec = Self {
            family,
            omega: Some(omega),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.omega
            .clone()
            .unwrap_or_else(|| self.family.default_box())
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = self.bounds();
        if bounds.len() != self.dim() {
            return Err(Error::InvalidConfig(format!(
                "kernel.omega for {} needs {} intervals, got {}",
                self.family.name(),
                self.dim(),
                bounds.len()
            )));
        }
        for (k, (&(lo, hi), role)) in bounds.iter().zip(self.family.roles()).enumerate() {
            let ok = lo < hi
                && match role {
                    ParamRole::Scale => lo > 0.0 && hi.is_finite(),
                    ParamRole::Decay => lo > 0.0 && hi < 1.0,
                    ParamRole::Correlation => lo > -1.0 && hi < 1.0,
                };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "kernel.omega[{k}] = [{lo}, {hi}] is not a strictly interior interval"
                )));
            }
        }
        Ok(())
    }

    pub fn check_in_box(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.dim() {
            return Err(Error::InvalidConfig(format!(
                "expected {} hyper-parameters, got {}",
                self.dim(),
                eta.len()
            )));
        }
        for (index, (&value, &(lo, hi))) in eta.iter().zip(&self.bounds()).enumerate() {
            if !(value >= lo && value <= hi) {
                return Err(Error::OutOfBox {
                    index,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}

/// `P(η)` and its partial derivatives.
#[derive(Debug, Clone)]
pub struct KernelMatrices {
    pub p: Mat,
    /// `∂P/∂η_k`.
    pub dp: Vec<Mat>,
    /// `∂²P/∂η_k∂η_l`, indexed `[k][l]`.
    pub d2p: Vec<Vec<Mat>>,
}

/// `x^e` that treats `0 · x^{negative}` terms as zero.
#[inline]
fn pow_or_zero(coef: f64, x: f64, e: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * x.powf(e)
    }
}

#[inline]
fn powi_or_zero(coef: f64, x: f64, e: i32) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef * x.powi(e)
    }
}

/// Evaluates `P(η)` together with its first and second derivatives.
pub fn kernel_matrix(spec: &KernelSpec, eta: &[f64], n: usize) -> Result<KernelMatrices> {
    spec.check_in_box(eta)?;
    Ok(kernel_matrix_unchecked(spec.family, eta, n))
}

/// `x^0 … x^len-1`, each by `powi`.
fn powers(x: f64, len: usize) -> Vec<f64> {
    (0..len).map(|k| x.powi(k as i32)).collect()
}

/// `P(η)` alone, without the box check.
pub fn kernel_value_unchecked(family: KernelFamily, eta: &[f64], n: usize) -> Mat {
    match family {
        KernelFamily::Ridge => Mat::identity(n, n) * eta[0],
        KernelFamily::Tc => {
            let (c, a) = (eta[0], eta[1]);
            let pa = powers(a, n + 1);
            Mat::from_fn(n, n, |i, j| c * pa[i.max(j) + 1])
        }
        KernelFamily::Dc => {
            let (c, a, r) = (eta[0], eta[1], eta[2]);
            // a^{(i+j+2)/2} = (√a)^{i+j+2}
            let pa = powers(a.sqrt(), 2 * n + 1);
            let pr = powers(r, n);
            Mat::from_fn(n, n, |i, j| c * pa[i + j + 2] * pr[i.abs_diff(j)])
        }
        KernelFamily::Ss => {
            let (c, a) = (eta[0], eta[1]);
            let pa = powers(a, 3 * n + 1);
            Mat::from_fn(n, n, |i, j| {
                let m = i.max(j) + 1;
                c * (pa[i + j + 2 + m] / 2.0 - pa[3 * m] / 6.0)
            })
        }
    }
}

/// `P(η)` and `∂P/∂η_k`, without the box check or second derivatives.
pub fn kernel_gradient_unchecked(family: KernelFamily, eta: &[f64], n: usize) -> (Mat, Vec<Mat>) {
    match family {
        KernelFamily::Ridge => (Mat::identity(n, n) * eta[0], vec![Mat::identity(n, n)]),
        KernelFamily::Tc => {
            let (c, a) = (eta[0], eta[1]);
            let pa = powers(a, n + 1);
            let base = Mat::from_fn(n, n, |i, j| pa[i.max(j) + 1]);
            let da = Mat::from_fn(n, n, |i, j| {
                let m = i.max(j) + 1;
                c * m as f64 * pa[m - 1]
            });
            (&base * c, vec![base, da])
        }
        KernelFamily::Dc => {
            let (c, a, r) = (eta[0], eta[1], eta[2]);
            let pa = powers(a.sqrt(), 2 * n + 1);
            let pr = powers(r, n);
            let base = Mat::from_fn(n, n, |i, j| pa[i + j + 2] * pr[i.abs_diff(j)]);
            let da = Mat::from_fn(n, n, |i, j| {
                c * (i + j + 2) as f64 / 2.0 * pa[i + j] * pr[i.abs_diff(j)]
            });
            let dr = Mat::from_fn(n, n, |i, j| {
                let d = i.abs_diff(j);
                if d == 0 {
                    0.0
                } else {
                    c * pa[i + j + 2] * d as f64 * pr[d - 1]
                }
            });
            (&base * c, vec![base, da, dr])
        }
        KernelFamily::Ss => {
            let (c, a) = (eta[0], eta[1]);
            let pa = powers(a, 3 * n + 1);
            let exps = |i: usize, j: usize| {
                let m = i.max(j) + 1;
                (i + j + 2 + m, 3 * m)
            };
            let base = Mat::from_fn(n, n, |i, j| {
                let (e1, e2) = exps(i, j);
                pa[e1] / 2.0 - pa[e2] / 6.0
            });
            let da = Mat::from_fn(n, n, |i, j| {
                let (e1, e2) = exps(i, j);
                c * (e1 as f64 * pa[e1 - 1] / 2.0 - e2 as f64 * pa[e2 - 1] / 6.0)
            });
            (&base * c, vec![base, da])
        }
    }
}

/// As [`kernel_matrix`] without the box check.
pub fn kernel_matrix_unchecked(family: KernelFamily, eta: &[f64], n: usize) -> KernelMatrices {
    let p_dim = family.dim();
    let mut p = Mat::zeros(n, n);
    let mut dp = vec![Mat::zeros(n, n); p_dim];
    let mut d2p = vec![vec![Mat::zeros(n, n); p_dim]; p_dim];
    match family {
        KernelFamily::Ridge => {
            p.fill_diagonal(eta[0]);
            dp[0].fill_diagonal(1.0);
        }
        KernelFamily::Tc => {
            let (c, a) = (eta[0], eta[1]);
            for i in 0..n {
                for j in 0..n {
                    let m = (i.max(j) + 1) as i32;
                    let mf = m as f64;
                    let base = a.powi(m);
                    let d1 = mf * a.powi(m - 1);
                    let d2 = powi_or_zero(mf * (mf - 1.0), a, m - 2);
                    p[(i, j)] = c * base;
                    dp[0][(i, j)] = base;
                    dp[1][(i, j)] = c * d1;
                    d2p[0][1][(i, j)] = d1;
                    d2p[1][0][(i, j)] = d1;
                    d2p[1][1][(i, j)] = c * d2;
                }
            }
        }
        KernelFamily::Dc => {
            let (c, a, r) = (eta[0], eta[1], eta[2]);
            for i in 0..n {
                for j in 0..n {
                    let s = (i + j + 2) as f64 / 2.0;
                    let d = i.abs_diff(j) as i32;
                    let df = d as f64;
                    let fa = a.powf(s);
                    let fa1 = s * a.powf(s - 1.0);
                    let fa2 = pow_or_zero(s * (s - 1.0), a, s - 2.0);
                    let fr = r.powi(d);
                    let fr1 = powi_or_zero(df, r, d - 1);
                    let fr2 = powi_or_zero(df * (df - 1.0), r, d - 2);
                    p[(i, j)] = c * fa * fr;
                    dp[0][(i, j)] = fa * fr;
                    dp[1][(i, j)] = c * fa1 * fr;
                    dp[2][(i, j)] = c * fa * fr1;
                    d2p[0][1][(i, j)] = fa1 * fr;
                    d2p[1][0][(i, j)] = fa1 * fr;
                    d2p[0][2][(i, j)] = fa * fr1;
                    d2p[2][0][(i, j)] = fa * fr1;
                    d2p[1][1][(i, j)] = c * fa2 * fr;
                    d2p[1][2][(i, j)] = c * fa1 * fr1;
                    d2p[2][1][(i, j)] = c * fa1 * fr1;
                    d2p[2][2][(i, j)] = c * fa * fr2;
                }
            }
        }
        KernelFamily::Ss => {
            let (c, a) = (eta[0], eta[1]);
            for i in 0..n {
                for j in 0..n {
                    let m = i.max(j) + 1;
                    let e1 = (i + j + 2 + m) as i32;
                    let e2 = (3 * m) as i32;
                    let (f1, f2) = (e1 as f64, e2 as f64);
                    let g = a.powi(e1) / 2.0 - a.powi(e2) / 6.0;
                    let g1 = f1 * a.powi(e1 - 1) / 2.0 - f2 * a.powi(e2 - 1) / 6.0;
                    let g2 = f1 * (f1 - 1.0) * a.powi(e1 - 2) / 2.0
                        - f2 * (f2 - 1.0) * a.powi(e2 - 2) / 6.0;
                    p[(i, j)] = c * g;
                    dp[0][(i, j)] = g;
                    dp[1][(i, j)] = c * g1;
                    d2p[0][1][(i, j)] = g1;
                    d2p[1][0][(i, j)] = g1;
                    d2p[1][1][(i, j)] = c * g2;
                }
            }
        }
    }
    KernelMatrices { p, dp, d2p }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_matches_full_evaluation() {
        let cases = [
            (KernelFamily::Ridge, vec![2.5]),
            (KernelFamily::Tc, vec![3.0, 0.8]),
            (KernelFamily::Dc, vec![3.0, 0.8, -0.4]),
            (KernelFamily::Ss, vec![3.0, 0.8]),
        ];
        for (family, eta) in cases {
            let full = kernel_matrix_unchecked(family, &eta, 7);
            let fast = kernel_value_unchecked(family, &eta, 7);
            let scale = full.p.amax();
            assert!((&full.p - fast).amax() <= 1e-14 * scale, "{family:?}");
            let (p, dp) = kernel_gradient_unchecked(family, &eta, 7);
            assert!((&full.p - p).amax() <= 1e-14 * scale, "{family:?}");
            for (a, b) in full.dp.iter().zip(&dp) {
                assert!((a - b).amax() <= 1e-13 * a.amax().max(1.0), "{family:?}");
            }
        }
    }

    #[test]
    fn ridge_is_linear() {
        let k = kernel_matrix(&KernelSpec::new(KernelFamily::Ridge), &[2.5], 3).unwrap();
        assert_eq!(k.p, Mat::identity(3, 3) * 2.5);
        assert_eq!(k.dp[0], Mat::identity(3, 3));
        assert_eq!(k.d2p[0][0], Mat::zeros(3, 3));
    }

    #[test]
    fn tc_direct_evaluation() {
        let k = kernel_matrix(&KernelSpec::new(KernelFamily::Tc), &[1.0, 0.5], 2).unwrap();
        assert_eq!(k.p, Mat::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.25]));
    }

    #[test]
    fn out_of_box_is_rejected() {
        let spec = KernelSpec::new(KernelFamily::Tc);
        let err = kernel_matrix(&spec, &[1.0, 1.0], 4).unwrap_err();
        assert!(matches!(err, Error::OutOfBox { index: 1, .. }));
        assert!(kernel_matrix(&spec, &[1.0], 4).is_err());
    }

    #[test]
    fn box_validation() {
        assert!(KernelSpec::with_box(KernelFamily::Tc, vec![(1e-3, 10.0), (0.1, 1.0)]).is_err());
        assert!(KernelSpec::with_box(KernelFamily::Ridge, vec![(0.0, 1.0)]).is_err());
        assert!(KernelSpec::with_box(KernelFamily::Ridge, vec![(1e-3, 1.0)]).is_ok());
    }
}
