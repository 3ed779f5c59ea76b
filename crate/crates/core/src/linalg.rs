//! Small dense linear-algebra helpers shared by the estimators and the
//! asymptotic formulas.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Column-stacking vectorization.
pub fn vec_cols(m: &Mat) -> Vector {
    // nalgebra storage is column-major
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_cols`] into an `n × n` matrix.
pub fn unvec(v: &Vector, n: usize) -> Mat {
    assert_eq!(v.len(), n * n, "unvec expects n^2 entries");
    Mat::from_column_slice(n, n, v.as_slice())
}

/// Symmetric Toeplitz matrix with the given first column.
pub fn symmetric_toeplitz(first: &[f64]) -> Mat {
    let n = first.len();
    Mat::from_fn(n, n, |i, j| first[i.abs_diff(j)])
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &Mat, what: &'static str) -> Result<Mat> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite(what))?;
    Ok(symmetrize(&chol.inverse()))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
pub fn sym_eigen(m: &Mat) -> (Vector, Mat) {
    let eig = symmetrize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Mat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    symmetrize(m).symmetric_eigenvalues().min()
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    symmetrize(m).symmetric_eigenvalues().max()
}

/// `λ_max / λ_min` of a symmetric matrix.
pub fn condition_number(m: &Mat) -> f64 {
    let ev = symmetrize(m).symmetric_eigenvalues();
    ev.max() / ev.min()
}

/// Pseudo-inverse of a symmetric matrix, dropping eigenvalues with
/// `|λ| <= rel_tol · max|λ|`.
pub fn sym_pinv(m: &Mat, rel_tol: f64) -> Mat {
    let (values, vectors) = sym_eigen(m);
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let n = values.len();
    let mut out = Mat::zeros(n, n);
    for (i, &lambda) in values.iter().enumerate() {
        if lambda.abs() > rel_tol * scale {
            let u = vectors.column(i);
            out += (u * u.transpose()) / lambda;
        }
    }
    out
}

/// Frobenius-relative distance `‖a − b‖ / ‖b‖` (absolute when `b = 0`).
pub fn rel_diff(a: &Mat, b: &Mat) -> f64 {
    let d = (a - b).norm();
    let s = b.norm();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

pub fn rel_diff_scalar(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().copied().collect::<NeumaierSum>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<NeumaierSum>()
        .value();
    (mean, ss / (n - 1) as f64)
}

pub fn matrix_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
