//! Filtered-white-noise inputs, FIR data records and test-system generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::rng::RandomStream;

/// Relative size of the start-up transient left after burn-in.
const TRANSIENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterKind {
    /// `H(q) = c_u / (1 - a q^{-1})^2`.
    SecondOrderAr { a: f64, c_u: f64 },
    /// Finite impulse response `h(0), h(1), …`.
    ImpulseSequence { h: Vec<f64> },
}

/// Input filter `H(q)` driven by i.i.d. innovations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    #[serde(flatten)]
    pub kind: FilterKind,
    /// Innovation variance `σ_e²`.
    #[serde(default = "one")]
    pub sigma_e2: f64,
    /// `E[e⁴] / σ_e⁴`; 3 for Gaussian innovations.
    #[serde(default = "three")]
    pub kurtosis_ratio: f64,
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

impl FilterSpec {
    pub fn second_order(a: f64, c_u: f64) -> Result<Self> {
        let spec = Self {
            kind: FilterKind::SecondOrderAr { a, c_u },
            sigma_e2: 1.0,
            kurtosis_ratio: 3.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Second-order filter parameterized by `c_u²` as in the data collections.
    pub fn second_order_cu2(a: f64, cu2: f64) -> Result<Self> {
        if !(cu2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "c_u^2 must be > 0, got {cu2}"
            )));
        }
        Self::second_order(a, cu2.sqrt())
    }

    pub fn impulse(h: Vec<f64>) -> Result<Self> {
        let spec = Self {
            kind: FilterKind::ImpulseSequence { h },
            sigma_e2: 1.0,
            kurtosis_ratio: 3.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_innovations(mut self, sigma_e2: f64, kurtosis_ratio: f64) -> Result<Self> {
        self.sigma_e2 = sigma_e2;
        self.kurtosis_ratio = kurtosis_ratio;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            FilterKind::SecondOrderAr { a, c_u } => {
                if !(0.0..1.0).contains(a) {
                    return Err(Error::InvalidConfig(format!(
                        "filter.a must lie in [0, 1), got {a}"
                    )));
                }
                if *c_u == 0.0 || !c_u.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "filter.c_u must be finite and nonzero, got {c_u}"
                    )));
                }
            }
            FilterKind::ImpulseSequence { h } => {
                if h.is_empty() || h.iter().any(|x| !x.is_finite()) || h.iter().all(|&x| x == 0.0) {
                    return Err(Error::InvalidConfig(
                        "filter.h must be a finite, nonzero sequence".into(),
                    ));
                }
            }
        }
        if !(self.sigma_e2 > 0.0) || !self.sigma_e2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "filter.sigma_e2 must be > 0, got {}",
                self.sigma_e2
            )));
        }
        if !(self.kurtosis_ratio >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "filter.kurtosis_ratio must be >= 1, got {}",
                self.kurtosis_ratio
            )));
        }
        Ok(())
    }

    /// Returns a copy with the filter gain scaled by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Self {
        let kind = match &self.kind {
            FilterKind::SecondOrderAr { a, c_u } => FilterKind::SecondOrderAr {
                a: *a,
                c_u: c_u * gamma,
            },
            FilterKind::ImpulseSequence { h } => FilterKind::ImpulseSequence {
                h: h.iter().map(|x| x * gamma).collect(),
            },
        };
        Self {
            kind,
            ..self.clone()
        }
    }

    /// Number of pre-sample steps needed for the zero initial state to fade.
    pub fn burn_in(&self) -> usize {
        match &self.kind {
            FilterKind::SecondOrderAr { a, .. } => {
                if *a == 0.0 {
                    return 1;
                }
                // The impulse response decays like (k+1) a^k.
                let mut b = (TRANSIENT_TOL.ln() / a.ln()).ceil().max(1.0) as usize;
                while (b as f64 + 1.0) * a.powi(b as i32) > TRANSIENT_TOL {
                    b += 1;
                }
                b
            }
            FilterKind::ImpulseSequence { h } => h.len(),
        }
    }
}

/// Impulse response `h(0..=K)`, truncated so that the discarded tail mass is at
/// most `tail_tol` times the retained mass.
pub fn impulse_response(filter: &FilterSpec, tail_tol: f64) -> Vec<f64> {
    assert!(tail_tol > 0.0, "tail_tol must be positive");
    match &filter.kind {
        FilterKind::ImpulseSequence { h } => h.clone(),
        FilterKind::SecondOrderAr { a, c_u } => {
            if *a == 0.0 {
                return vec![*c_u];
            }
            let a = *a;
            // Σ_{k≥m} (k+1) a^k = a^m (m + 1 - m a) / (1-a)²
            let total = 1.0 / ((1.0 - a) * (1.0 - a));
            let tail_from = |m: usize| {
                let mf = m as f64;
                a.powi(m as i32) * (mf + 1.0 - mf * a) / ((1.0 - a) * (1.0 - a))
            };
            let mut k = 0usize;
            loop {
                let tail = tail_from(k + 1);
                if tail <= tail_tol * (total - tail) {
                    break;
                }
                k += 1;
            }
            (0..=k)
                .map(|j| c_u * (j as f64 + 1.0) * a.powi(j as i32))
                .collect()
        }
    }
}

/// Stationary autocovariance `R_u(τ) = σ_e² Σ_k h(k) h(k+|τ|)`.
pub fn autocovariance(filter: &FilterSpec, tau: i64) -> f64 {
    let t = tau.unsigned_abs() as usize;
    match &filter.kind {
        FilterKind::SecondOrderAr { a, c_u } => {
            let scale = c_u * c_u * filter.sigma_e2;
            if *a == 0.0 {
                return if t == 0 { scale } else { 0.0 };
            }
            let q = 1.0 - a * a;
            scale * a.powi(t as i32) * (2.0 / (q * q * q) + (t as f64 - 1.0) / (q * q))
        }
        FilterKind::ImpulseSequence { h } => {
            if t >= h.len() {
                return 0.0;
            }
            filter.sigma_e2 * h.iter().zip(&h[t..]).map(|(x, y)| x * y).sum::<f64>()
        }
    }
}

/// Options for [`generate_input`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputOptions {
    /// Force `u(t) = 0` for `t < 0` instead of drawing the stationary pre-sample.
    #[serde(default)]
    pub zero_pad_negative_t: bool,
}

/// Input samples `u(t)` for `t = 1-n, …, N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSignal {
    pub n: usize,
    pub values: Vec<f64>,
}

impl InputSignal {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || values.len() < n + 1 {
            return Err(Error::InvalidConfig(format!(
                "input must cover t = 1-n..N-1 with N > n; got {} samples for n = {n}",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    /// Sample size `N`.
    pub fn samples(&self) -> usize {
        self.values.len() + 1 - self.n
    }

    /// `u(t)` for `1-n <= t <= N-1`.
    pub fn at(&self, t: i64) -> f64 {
        self.values[(t + self.n as i64 - 1) as usize]
    }
}

/// Draws `u(t)`, `t = 1-n … N-1`, by filtering i.i.d. innovations.
pub fn generate_input(
    filter: &FilterSpec,
    n: usize,
    samples: usize,
    rng: &mut RandomStream,
    opts: InputOptions,
) -> Result<InputSignal> {
    if n == 0 || samples <= n {
        return Err(Error::InvalidConfig(format!(
            "need N > n >= 1, got N = {samples}, n = {n}"
        )));
    }
    let len = samples + n - 1;
    let burn = filter.burn_in();
    let sd = filter.sigma_e2.sqrt();
    let kurt = filter.kurtosis_ratio;
    let mut values = Vec::with_capacity(len);
    match &filter.kind {
        FilterKind::SecondOrderAr { a, c_u } => {
            let (mut w, mut z) = (0.0, 0.0);
            for step in 0..burn + len {
                let e = sd * rng.standardized(kurt);
                w = a * w + e;
                z = a * z + w;
                if step >= burn {
                    values.push(c_u * z);
                }
            }
        }
        FilterKind::ImpulseSequence { h } => {
            let e: Vec<f64> = (0..burn + len)
                .map(|_| sd * rng.standardized(kurt))
                .collect();
            for t in burn..burn + len {
                let mut acc = 0.0;
                for (k, hk) in h.iter().enumerate() {
                    acc += hk * e[t - k];
                }
                values.push(acc);
            }
        }
    }
    if opts.zero_pad_negative_t {
        // entries t = 1-n .. -1 occupy the first n-1 slots
        for v in values.iter_mut().take(n - 1) {
            *v = 0.0;
        }
    }
    Ok(InputSignal { n, values })
}

/// Measurement noise `v(t)`: i.i.d., variance `σ²`, fourth moment `E[v⁴]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseSpecRepr", into = "NoiseSpecRepr")]
pub struct NoiseSpec {
    pub sigma2: f64,
    pub fourth_moment: f64,
}

#[derive(Serialize, Deserialize)]
struct NoiseSpecRepr {
    sigma2: f64,
    #[serde(default)]
    fourth_moment: Option<f64>,
}

impl TryFrom<NoiseSpecRepr> for NoiseSpec {
    type Error = Error;
    fn try_from(r: NoiseSpecRepr) -> Result<Self> {
        match r.fourth_moment {
            Some(m4) => NoiseSpec::new(r.sigma2, m4),
            None => NoiseSpec::gaussian(r.sigma2),
        }
    }
}

impl From<NoiseSpec> for NoiseSpecRepr {
    fn from(s: NoiseSpec) -> Self {
        Self {
            sigma2: s.sigma2,
            fourth_moment: Some(s.fourth_moment),
        }
    }
}

impl NoiseSpec {
    pub fn new(sigma2: f64, fourth_moment: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise.sigma2 must be > 0, got {sigma2}"
            )));
        }
        if !(fourth_moment >= sigma2 * sigma2) {
            return Err(Error::InvalidConfig(format!(
                "noise.fourth_moment must be >= sigma2^2, got {fourth_moment}"
            )));
        }
        Ok(Self {
            sigma2,
            fourth_moment,
        })
    }

    pub fn gaussian(sigma2: f64) -> Result<Self> {
        Self::new(sigma2, 3.0 * sigma2 * sigma2)
    }

    /// `E[ρ²] = E[v⁴] − σ⁴`.
    pub fn rho_variance(&self) -> f64 {
        self.fourth_moment - self.sigma2 * self.sigma2
    }

    pub fn kurtosis_ratio(&self) -> f64 {
        self.fourth_moment / (self.sigma2 * self.sigma2)
    }
}

/// True FIR coefficients `g₁⁰ … g_n⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirSystem {
    pub theta0: Vector,
    pub label: String,
}

impl FirSystem {
    pub fn new(theta0: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if theta0.is_empty() || theta0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(
                "theta0 must be a nonempty vector of finite values".into(),
            ));
        }
        Ok(Self {
            theta0: Vector::from_vec(theta0),
            label: label.into(),
        })
    }

    pub fn order(&self) -> usize {
        self.theta0.len()
    }
}

/// One identification instance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub phi: Mat,
    pub y: Vector,
    pub u: InputSignal,
    pub v: Option<Vector>,
    pub system: FirSystem,
    pub noise: NoiseSpec,
    /// `cond(ΦᵀΦ)`, computed during the rank check.
    pub gram_cond: f64,
}

impl Dataset {
    pub fn samples(&self) -> usize {
        self.phi.nrows()
    }

    pub fn order(&self) -> usize {
        self.phi.ncols()
    }
}

/// Regression matrix with rows `φ(t) = [u(t-1) … u(t-n)]`, `t = 1 … N`.
pub fn regression_matrix(u: &InputSignal) -> Mat {
    let n = u.n;
    let samples = u.samples();
    Mat::from_fn(samples, n, |row, col| {
        let t = row as i64 + 1;
        u.at(t - col as i64 - 1)
    })
}

/// Assembles `Φ`, draws `V` and forms `Y = Φθ₀ + V`.
pub fn build_dataset(
    system: &FirSystem,
    u: &InputSignal,
    noise: NoiseSpec,
    rng: &mut RandomStream,
    noise_free: bool,
) -> Result<Dataset> {
    if u.n != system.order() {
        return Err(Error::InvalidConfig(format!(
            "input was generated for n = {}, system has order {}",
            u.n,
            system.order()
        )));
    }
    let phi = regression_matrix(u);
    let samples = phi.nrows();
    let v = if noise_free {
        Vector::zeros(samples)
    } else {
        let sd = noise.sigma2.sqrt();
        let kurt = noise.kurtosis_ratio();
        Vector::from_fn(samples, |_, _| sd * rng.standardized(kurt))
    };
    let y = &phi * &system.theta0 + &v;
    let gram = phi.transpose() * &phi;
    let ev = crate::linalg::symmetrize(&gram).symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    let cond = hi / lo;
    if !(lo > hi * system.order() as f64 * f64::EPSILON) {
        return Err(Error::RankDeficient { cond });
    }
    Ok(Dataset {
        phi,
        y,
        u: u.clone(),
        v: Some(v),
        system: system.clone(),
        noise,
        gram_cond: cond,
    })
}

/// Target `‖θ₀‖₂` for generated test systems.
pub const TEST_SYSTEM_NORM: f64 = 10.0;

fn normalized(mut theta: Vec<f64>) -> Vec<f64> {
    let norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in theta.iter_mut() {
        *x *= TEST_SYSTEM_NORM / norm;
    }
    theta
}

/// Pre-normalization T1 draw: `(σ_g², g)` with `g ~ N(0, σ_g² I)`.
pub fn t1_raw(n: usize, rng: &mut RandomStream) -> (f64, Vec<f64>) {
    let var = rng.uniform(0.5, 3.0);
    let sd = var.sqrt();
    let g = (0..n).map(|_| sd * rng.standard_normal()).collect();
    (var, g)
}

/// T1 test system: Gaussian coefficients with random variance, `‖θ₀‖₂ = 10`.
pub fn generate_t1(n: usize, rng: &mut RandomStream) -> FirSystem {
    assert!(n >= 1);
    loop {
        let (_, g) = t1_raw(n, rng);
        if g.iter().any(|&x| x != 0.0) {
            return FirSystem::new(normalized(g), "T1").expect("finite coefficients");
        }
    }
}

const T2_ORDER: usize = 30;
const T2_SLOW_POLES: usize = 5;

/// Adds the conjugate-pair or real pole factors of a random stable
/// polynomial in `q^{-1}` with `count` poles of modulus in `[lo, hi]`.
fn push_poles(den: &mut Vec<f64>, count: usize, lo: f64, hi: f64, rng: &mut RandomStream) {
    let mut left = count;
    while left > 0 {
        let r = rng.uniform(lo, hi);
        if left >= 2 {
            let phase = rng.uniform(0.0, std::f64::consts::PI);
            // (1 - 2 r cos φ q⁻¹ + r² q⁻²)
            *den = poly_mul(den, &[1.0, -2.0 * r * phase.cos(), r * r]);
            left -= 2;
        } else {
            let sign = if rng.uniform(0.0, 1.0) < 0.5 {
                -1.0
            } else {
                1.0
            };
            *den = poly_mul(den, &[1.0, -sign * r]);
            left -= 1;
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Impulse response `g_1 … g_n` of `B(q)/A(q)` with `B(q) = Σ_{k≥1} b_k q^{-k}`.
fn impulse_of_ratio(num: &[f64], den: &[f64], n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n + 1];
    for k in 1..=n {
        let mut acc = num.get(k).copied().unwrap_or(0.0);
        for j in 1..den.len().min(k + 1) {
            acc -= den[j] * g[k - j];
        }
        g[k] = acc;
    }
    g.split_off(1)
}

/// T2 test system: a random stable 30th-order system whose five slowest poles
/// have modulus in `[0.94, 0.96]`, truncated at `n` and scaled to `‖θ₀‖₂ = 10`.
pub fn generate_t2(n: usize, rng: &mut RandomStream) -> FirSystem {
    assert!(n >= 1);
    loop {
        let mut den = vec![1.0];
        push_poles(&mut den, T2_SLOW_POLES, 0.94, 0.96, rng);
        push_poles(&mut den, T2_ORDER - T2_SLOW_POLES, 0.0, 0.9, rng);
        let mut num = vec![0.0; T2_ORDER + 1];
        for b in num.iter_mut().skip(1) {
            *b = rng.standard_normal();
        }
        let g = impulse_of_ratio(&num, &den, n);
        if g.iter().all(|x| x.is_finite()) && g.iter().any(|&x| x != 0.0) {
            return FirSystem::new(normalized(g), "T2").expect("finite coefficients");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_filter_impulse() {
        let f = FilterSpec::second_order(0.0, 1.0).unwrap();
        assert_eq!(impulse_response(&f, 1e-12), vec![1.0]);
    }

    #[test]
    fn impulse_matches_long_division() {
        // 1/(1 - 0.5 q⁻¹)² by long division of 1 / (1 - q⁻¹ + 0.25 q⁻²)
        let den = [1.0, -1.0, 0.25];
        let mut div = [0.0; 12];
        for k in 0..12 {
            let mut acc = if k == 0 { 1.0 } else { 0.0 };
            for j in 1..=2.min(k) {
                acc -= den[j] * div[k - j];
            }
            div[k] = acc;
        }
        let f = FilterSpec::second_order(0.5, 1.0).unwrap();
        let h = impulse_response(&f, 1e-12);
        assert_eq!(&h[..4], &[1.0, 1.0, 0.75, 0.5]);
        for k in 0..12 {
            assert!((h[k] - div[k]).abs() < 1e-15);
        }
        let retained: f64 = h.iter().sum();
        let tail: f64 = (h.len()..5000)
            .map(|k| (k as f64 + 1.0) * 0.5f64.powi(k as i32))
            .sum();
        assert!(tail <= 1e-12 * retained);
    }

    #[test]
    fn impulse_sequence_is_identity() {
        let f = FilterSpec::impulse(vec![2.0, 3.0]).unwrap();
        assert_eq!(impulse_response(&f, 1e-3), vec![2.0, 3.0]);
        assert_eq!(autocovariance(&f, 0), 13.0);
        assert_eq!(autocovariance(&f, 1), 6.0);
        assert_eq!(autocovariance(&f, -1), 6.0);
        assert_eq!(autocovariance(&f, 2), 0.0);
    }

    #[test]
    fn white_autocovariance() {
        let f = FilterSpec::second_order(0.0, 2.0)
            .unwrap()
            .with_innovations(0.5, 3.0)
            .unwrap();
        assert_eq!(autocovariance(&f, 0), 2.0);
        assert_eq!(autocovariance(&f, 3), 0.0);
    }

    #[test]
    fn validation_errors() {
        assert!(FilterSpec::second_order(1.0, 1.0).is_err());
        assert!(FilterSpec::second_order(-0.1, 1.0).is_err());
        assert!(FilterSpec::second_order(0.5, 0.0).is_err());
        assert!(FilterSpec::second_order(0.5, 1.0)
            .unwrap()
            .with_innovations(1.0, 0.5)
            .is_err());
        assert!(NoiseSpec::new(1.0, 0.5).is_err());
        assert!(NoiseSpec::gaussian(0.0).is_err());
    }

    #[test]
    fn burn_in_bounds_transient() {
        let f = FilterSpec::second_order(0.95, 1.0).unwrap();
        let b = f.burn_in();
        assert!((b as f64 + 1.0) * 0.95f64.powi(b as i32) <= 1e-12);
        assert_eq!(FilterSpec::second_order(0.0, 1.0).unwrap().burn_in(), 1);
    }

    #[test]
    fn memoryless_filter_scales_innovations() {
        let f = FilterSpec::second_order(0.0, 1.5).unwrap();
        let mut rng = RandomStream::new(5);
        let u = generate_input(&f, 3, 10, &mut rng, InputOptions::default()).unwrap();
        let mut rng = RandomStream::new(5);
        let e: Vec<f64> = (0..1 + 12).map(|_| rng.standard_normal()).collect();
        for (i, x) in u.values.iter().enumerate() {
            assert_eq!(*x, 1.5 * e[i + 1]);
        }
    }

    #[test]
    fn regression_lags() {
        // u(-1), u(0), u(1), u(2) with n = 2, N = 3
        let u = InputSignal::from_values(2, vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let phi = regression_matrix(&u);
        let expected = Mat::from_row_slice(3, 2, &[20.0, 10.0, 30.0, 20.0, 40.0, 30.0]);
        assert_eq!(phi, expected);
    }

    #[test]
    fn zero_padding_clears_negative_times() {
        let f = FilterSpec::second_order(0.5, 1.0).unwrap();
        let mut rng = RandomStream::new(1);
        let opts = InputOptions {
            zero_pad_negative_t: true,
        };
        let u = generate_input(&f, 4, 10, &mut rng, opts).unwrap();
        for t in -3..0 {
            assert_eq!(u.at(t), 0.0);
        }
        assert_ne!(u.at(0), 0.0);
    }

    #[test]
    fn noise_free_and_zero_truth() {
        let f = FilterSpec::second_order(0.3, 1.0).unwrap();
        let mut rng = RandomStream::new(2);
        let u = generate_input(&f, 3, 40, &mut rng, InputOptions::default()).unwrap();
        let noise = NoiseSpec::gaussian(1.0).unwrap();
        let sys = FirSystem::new(vec![1.0, -2.0, 0.5], "s").unwrap();
        let d = build_dataset(&sys, &u, noise, &mut rng, true).unwrap();
        assert_eq!(d.y, &d.phi * &sys.theta0);

        let zero = FirSystem::new(vec![0.0; 3], "zero").unwrap();
        let d = build_dataset(&zero, &u, noise, &mut rng, false).unwrap();
        assert_eq!(&d.y, d.v.as_ref().unwrap());
    }

    #[test]
    fn constant_input_is_rank_deficient() {
        let u = InputSignal::from_values(3, vec![1.0; 12]).unwrap();
        let sys = FirSystem::new(vec![1.0, 1.0, 1.0], "s").unwrap();
        let mut rng = RandomStream::new(0);
        let err = build_dataset(&sys, &u, NoiseSpec::gaussian(1.0).unwrap(), &mut rng, false)
            .unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn generators_normalize_and_replay() {
        for seed in 0..20 {
            let t1 = generate_t1(20, &mut RandomStream::new(seed));
            let t2 = generate_t2(20, &mut RandomStream::new(seed));
            assert!((t1.theta0.norm() - 10.0).abs() < 1e-12);
            assert!((t2.theta0.norm() - 10.0).abs() < 1e-12);
            assert_eq!(t1, generate_t1(20, &mut RandomStream::new(seed)));
            assert_eq!(t2, generate_t2(20, &mut RandomStream::new(seed)));
        }
    }
}
