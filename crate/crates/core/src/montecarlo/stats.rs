use crate::error::{Error, Result};
use crate::linalg::{mean_variance, NeumaierSum, Vector};
use crate::rng::{RandomStream, StreamKey};

/// Flags `#₁ #₂ #₃`: `AMSE²`, `AMSE³`, `AMSE³` strictly closer to the
/// SMSE than `AMSE¹`, `AMSE¹`, `AMSE²` respectively.
pub fn compare_amse(smse: f64, amse: [f64; 3]) -> [bool; 3] {
    let d = amse.map(|x| (x - smse).abs());
    [d[1] < d[0], d[2] < d[0], d[2] < d[1]]
}

/// `100 (1 - ‖θ̂ - θ₀‖ / ‖θ₀ - θ̄₀‖)` with `θ̄₀` the coefficient mean.
pub fn fit_g(theta_hat: &Vector, theta0: &Vector) -> Result<f64> {
    if theta_hat.len() != theta0.len() {
        return Err(Error::InvalidConfig(format!(
            "fit_g: lengths differ ({} vs {})",
            theta_hat.len(),
            theta0.len()
        )));
    }
    let mean = theta0.iter().copied().collect::<NeumaierSum>().value() / theta0.len() as f64;
    let spread = theta0.map(|x| x - mean).norm();
    if !(spread > 0.0) {
        return Err(Error::DegenerateTruth);
    }
    Ok(100.0 * (1.0 - (theta_hat - theta0).norm() / spread))
}

/// Compensated sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    mean_variance(xs).1
}

/// Bootstrap standard error of `stat` from `resamples` draws with replacement.
pub fn bootstrap_se<F>(values: &[f64], resamples: usize, seed: u64, stat: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(!values.is_empty() && resamples >= 2);
    let mut rng = RandomStream::derive(seed, StreamKey::bootstrap(0));
    let mut buf = vec![0.0; values.len()];
    let draws: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.index(values.len())];
            }
            stat(&buf)
        })
        .collect();
    variance(&draws).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amse_flags() {
        assert_eq!(compare_amse(1.0, [2.0, 1.5, 1.1]), [true, true, true]);
        assert_eq!(compare_amse(1.0, [1.05, 1.5, 1.2]), [false, false, true]);
        assert_eq!(compare_amse(1.5, [2.0, 1.5, 1.1]), [true, true, false]);
        assert_eq!(compare_amse(1.5, [1.5, 1.5, 1.1]), [false, false, false]);
    }

    #[test]
    fn fit_values() {
        let t0 = Vector::from_vec(vec![1.0, -1.0]);
        assert_eq!(fit_g(&t0, &t0).unwrap(), 100.0);
        assert!(fit_g(&Vector::zeros(2), &t0).unwrap().abs() < 1e-14);
        let t = Vector::from_vec(vec![3.0, 1.0, 2.0]);
        assert!(fit_g(&Vector::from_element(3, 2.0), &t).unwrap().abs() < 1e-14);
        assert_eq!(
            fit_g(&t, &Vector::from_element(3, 4.0)),
            Err(Error::DegenerateTruth)
        );
    }

    #[test]
    fn bootstrap_se_of_mean() {
        let mut rng = RandomStream::new(5);
        let xs: Vec<f64> = (0..2000).map(|_| rng.standard_normal()).collect();
        let se = bootstrap_se(&xs, 1000, 1, mean);
        let expected = (variance(&xs) / xs.len() as f64).sqrt();
        assert!((se / expected - 1.0).abs() < 0.1, "se {se} vs {expected}");
    }
}
