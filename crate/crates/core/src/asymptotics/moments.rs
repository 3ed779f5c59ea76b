//! Input second-order statistics `Σ` and the fourth-moment matrix `C_Γ`.

use crate::linalg::{sym_eigen, symmetric_toeplitz, Mat, Vector};
use crate::signal::{autocovariance, FilterKind, FilterSpec};

/// `Σ`, `C_Γ` and the eigen-structure of `Σ` for one filter and order.
#[derive(Debug, Clone)]
pub struct SecondOrderStats {
    pub sigma: Mat,
    pub c_gamma: Mat,
    /// Eigenvalues of `Σ`, descending.
    pub eigenvalues: Vector,
    pub eigenvectors: Mat,
    pub cond: f64,
}

impl SecondOrderStats {
    pub fn new(filter: &FilterSpec, n: usize) -> Self {
        let sigma = sigma_matrix(filter, n);
        let c_gamma = c_gamma(filter, n);
        let (eigenvalues, eigenvectors) = sym_eigen(&sigma);
        let cond = eigenvalues[0] / eigenvalues[n - 1];
        Self {
            sigma,
            c_gamma,
            eigenvalues,
            eigenvectors,
            cond,
        }
    }

    pub fn order(&self) -> usize {
        self.sigma.nrows()
    }
}

/// Toeplitz `Σ` with entries `R_u(|i-j|)`.
pub fn sigma_matrix(filter: &FilterSpec, n: usize) -> Mat {
    let first: Vec<f64> = (0..n).map(|t| autocovariance(filter, t as i64)).collect();
    symmetric_toeplitz(&first)
}

/// Expands a `(k, l)` table into the `n² × n²` matrix.
///
/// With 0-based vec indices, `k` is the distance between the column blocks
/// `⌊i/n⌋` and `l` the distance between the positions `i mod n`.
pub fn expand_kl(table: &Mat) -> Mat {
    let n = table.nrows();
    Mat::from_fn(n * n, n * n, |i, j| {
        let k = (i / n).abs_diff(j / n);
        let l = (i % n).abs_diff(j % n);
        table[(k, l)]
    })
}

/// `C_Γ`. The second-order filter uses its closed form, impulse sequences the
/// lag series.
pub fn c_gamma(filter: &FilterSpec, n: usize) -> Mat {
    expand_kl(&match &filter.kind {
        FilterKind::SecondOrderAr { a, c_u } => {
            c_gamma_table_closed(*a, *c_u, filter.sigma_e2, filter.kurtosis_ratio, n)
        }
        FilterKind::ImpulseSequence { .. } => c_gamma_table_series(filter, n),
    })
}

/// `C_Γ` from the lag series for any filter.
pub fn c_gamma_series(filter: &FilterSpec, n: usize) -> Mat {
    expand_kl(&c_gamma_table_series(filter, n))
}

fn f_gamma(a: f64, x: usize) -> f64 {
    let xf = x as f64;
    let a2 = a * a;
    let a4 = a2 * a2;
    let q = 1.0 - a2;
    let ax = a.powi(x as i32);
    2.0 * a.powi(x as i32 + 2) / q * ((1.0 - xf) * a4 + (5.0 - xf) * a2 + 4.0 + 2.0 * xf)
        - ax * q * q * xf * (xf + 1.0) * (2.0 * xf + 1.0) / 6.0
        + ax * q * q * xf * xf * (xf + 1.0) / 2.0
        + ax * (xf + 1.0) * ((1.0 - xf) * a4 + 2.0 * a2 + 1.0 + xf)
}

fn c_gamma_table_closed(a: f64, c_u: f64, sigma_e2: f64, kurtosis: f64, n: usize) -> Mat {
    let a2 = a * a;
    let q = 1.0 - a2;
    let q6 = q.powi(6);
    let scale = c_u.powi(4) * sigma_e2 * sigma_e2;
    Mat::from_fn(n, n, |k, l| {
        let (kf, lf) = (k as f64, l as f64);
        let excess = (kurtosis - 3.0) * a.powi((k + l) as i32) / q6
            * (kf * q + 1.0 + a2)
            * (lf * q + 1.0 + a2);
        scale * (excess + (f_gamma(a, k.abs_diff(l)) + f_gamma(a, k + l)) / q6)
    })
}

/// Lags beyond which `R_u` is treated as zero.
fn autocovariance_cache(filter: &FilterSpec) -> Vec<f64> {
    match &filter.kind {
        FilterKind::ImpulseSequence { h } => (0..h.len())
            .map(|t| autocovariance(filter, t as i64))
            .collect(),
        FilterKind::SecondOrderAr { .. } => {
            let r0 = autocovariance(filter, 0);
            let mut cache = vec![r0];
            let mut small = 0;
            while small < 20 {
                let r = autocovariance(filter, cache.len() as i64);
                small = if r.abs() <= 1e-18 * r0.abs() {
                    small + 1
                } else {
                    0
                };
                cache.push(r);
            }
            cache
        }
    }
}

/// `[C_Γ]` by `(k, l)`: `(c-3)R(k)R(l) + Σ_τ [R(τ)R(τ+k-l) + R(τ+k)R(τ-l)]`,
/// summed outward from `τ = 0` until 20 consecutive lag pairs each add less
/// than `1e-14` of the partial sum.
fn c_gamma_table_series(filter: &FilterSpec, n: usize) -> Mat {
    let cache = autocovariance_cache(filter);
    let r = |t: i64| -> f64 { cache.get(t.unsigned_abs() as usize).copied().unwrap_or(0.0) };
    let excess = filter.kurtosis_ratio - 3.0;
    Mat::from_fn(n, n, |k, l| {
        let (k, l) = (k as i64, l as i64);
        let term = |tau: i64| r(tau) * r(tau + k - l) + r(tau + k) * r(tau - l);
        let mut sum = term(0);
        let mut quiet = 0;
        let mut tau = 1i64;
        let horizon = cache.len() as i64 + 2 * n as i64 + 2;
        while quiet < 20 && tau <= horizon {
            let c = term(tau) + term(-tau);
            sum += c;
            quiet = if c.abs() < 1e-14 * sum.abs() {
                quiet + 1
            } else {
                0
            };
            tau += 1;
        }
        excess * r(k) * r(l) + sum
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_pattern() {
        let f = FilterSpec::second_order(0.0, 1.0).unwrap();
        let n = 3;
        let c = c_gamma(&f, n);
        for i in 0..n * n {
            for j in 0..n * n {
                let k = (i / n).abs_diff(j / n);
                let l = (i % n).abs_diff(j % n);
                let expect = match (k, l) {
                    (0, 0) => 2.0,
                    (k, l) if k == l => 1.0,
                    _ => 0.0,
                };
                assert_eq!(c[(i, j)], expect, "entry ({i},{j})");
            }
        }
        assert_eq!(sigma_matrix(&f, n), Mat::identity(n, n));
    }

    #[test]
    fn closed_form_matches_series() {
        for &(a, kurt) in &[(0.5, 3.0), (0.8, 5.0), (0.3, 1.8)] {
            let f = FilterSpec::second_order(a, 1.3)
                .unwrap()
                .with_innovations(0.7, kurt)
                .unwrap();
            let closed = c_gamma(&f, 4);
            let series = c_gamma_series(&f, 4);
            assert!(crate::linalg::rel_diff(&closed, &series) < 1e-10);
        }
    }

    #[test]
    fn table1_condition_numbers() {
        for (a, cond) in [(0.05, 1.4856), (0.7, 834.39), (0.95, 551272.76)] {
            let s = sigma_matrix(&FilterSpec::second_order(a, 1.0).unwrap(), 20);
            let c = crate::linalg::condition_number(&s);
            assert!((c / cond - 1.0).abs() < 1e-4, "a = {a}: {c}");
        }
    }
}
