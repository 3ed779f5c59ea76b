//! Double-double arithmetic for the `C_Γ` sandwich products.
//!
//! `Σ⁻¹ vec⁻¹[C_Γ vec(X)] Σ⁻¹` cancels heavily once `cond(Σ)` is large; plain
//! `f64` loses roughly `ε·cond(Σ)²` of relative accuracy there.

use crate::linalg::Mat;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let p = self.hi * x;
        let e = self.hi.mul_add(x, -p) + self.lo * x;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Column-major double-double matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DdMat {
    rows: usize,
    cols: usize,
    data: Vec<Dd>,
}

impl DdMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Dd::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Dd::new(1.0);
        }
        m
    }

    pub fn from_mat(m: &Mat) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.as_slice().iter().map(|&x| Dd::new(x)).collect(),
        }
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_iterator(self.rows, self.cols, self.data.iter().map(|d| d.to_f64()))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Dd {
        self.data[j * self.rows + i]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Dd) {
        self.data[j * self.rows + i] = v;
    }

    pub fn mul(&self, o: &DdMat) -> DdMat {
        assert_eq!(self.cols, o.rows);
        let mut out = DdMat::zeros(self.rows, o.cols);
        for j in 0..o.cols {
            for i in 0..self.rows {
                let mut acc = Dd::ZERO;
                for k in 0..self.cols {
                    acc = acc.add(self.get(i, k).mul(o.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add(&self, o: &DdMat) -> DdMat {
        DdMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.add(*b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &DdMat) -> DdMat {
        DdMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| a.add(b.neg()))
                .collect(),
        }
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> DdMat {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let v = self.get(i, j).add(self.get(j, i)).mul_f64(0.5);
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }
}

/// Inverse of `m` refined by Newton steps `X ← X + X(I − mX)` from `x0`.
pub fn refine_inverse(m: &Mat, x0: &Mat, steps: usize) -> DdMat {
    let md = DdMat::from_mat(m);
    let eye = DdMat::identity(m.nrows());
    let mut x = DdMat::from_mat(x0);
    for _ in 0..steps {
        let r = eye.sub(&md.mul(&x));
        x = x.add(&x.mul(&r));
    }
    x.symmetrized()
}

/// `S vec⁻¹[C vec(X)] S` for `n × n` `S`, `X` and `n² × n²` `C`.
pub fn c_sandwich(s: &DdMat, c: &Mat, x: &DdMat) -> Mat {
    let n = s.rows;
    let nn = n * n;
    let mut w = DdMat::zeros(n, n);
    // vec is column-major, matching the storage of both operands
    for i in 0..nn {
        let mut acc = Dd::ZERO;
        for j in 0..nn {
            let cij = c[(i, j)];
            if cij != 0.0 {
                acc = acc.add(x.data[j].mul_f64(cij));
            }
        }
        w.data[i] = acc;
    }
    s.mul(&w).mul(s).symmetrized().to_mat()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lost_bits() {
        let a = Dd::new(1.0).add(Dd::new(1e-20));
        let b = a.add(Dd::new(-1.0));
        assert_eq!(b.to_f64(), 1e-20);
        // fl(1/3) = (2^54 - 1) / (3 · 2^54), so 3·fl(1/3) - 1 = -2^-54 exactly
        let r = Dd::new(1.0 / 3.0).mul_f64(3.0).add(Dd::new(-1.0));
        assert_eq!(r.to_f64(), -(2f64.powi(-54)));
    }

    #[test]
    fn refined_inverse_of_hilbert() {
        // cond ≈ 4.8e5
        let n = 5;
        let h = Mat::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64);
        let x0 = h.clone().try_inverse().unwrap();
        let x = refine_inverse(&h, &x0, 3);
        let r = DdMat::identity(n).sub(&DdMat::from_mat(&h).mul(&x));
        let res = r.data.iter().map(|d| d.to_f64().abs()).fold(0.0, f64::max);
        assert!(res < 1e-20, "{res}");
    }
}
