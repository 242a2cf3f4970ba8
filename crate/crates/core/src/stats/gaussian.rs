//! Univariate Gaussian parameters and moment fitting.

use serde::{Deserialize, Serialize};

use super::StatsError;

pub(crate) const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Mean and standard deviation of a univariate Gaussian, `std > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: f64,
    pub std: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, std: f64) -> Result<Self, StatsError> {
        if !(mean.is_finite() && std.is_finite() && std > 0.0) {
            return Err(StatsError::InvalidParameter {
                what: "Gaussian parameters (std must be finite and > 0)",
            });
        }
        Ok(Self { mean, std })
    }

    /// Log density at `x`.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std;
        -0.5 * z * z - self.std.ln() - 0.5 * LN_2PI
    }
}

pub(crate) fn mean_of(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Fit a Gaussian by sample mean and sample standard deviation (n-1 divisor).
///
/// Needs at least two samples with nonzero spread.
pub fn fit_gaussian(samples: &[f64]) -> Result<GaussianParams, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFiniteSample);
    }
    let mean = mean_of(samples);
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let var = ss / (samples.len() - 1) as f64;
    if var <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    GaussianParams::new(mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn hand_arithmetic_case() {
        let g = fit_gaussian(&[1.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(g.mean, 1.5);
        assert_eq!(g.std, 1.0);
    }

    #[test]
    fn degenerate_inputs_error() {
        assert_eq!(
            fit_gaussian(&[1.0]).unwrap_err(),
            StatsError::TooFewSamples { needed: 2, got: 1 }
        );
        assert_eq!(
            fit_gaussian(&[2.0, 2.0, 2.0]).unwrap_err(),
            StatsError::ZeroVariance
        );
        assert!(fit_gaussian(&[]).is_err());
    }

    #[test]
    fn recovers_moments_of_seeded_draws() {
        let mut rng = RngStream::new(11, 0).rng();
        let normal = Normal::new(3.43, 0.03).unwrap();
        let samples: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
        let g = fit_gaussian(&samples).unwrap();
        // Within five standard errors.
        assert!((g.mean - 3.43).abs() < 5.0 * 0.03 / 100.0);
        assert_relative_eq!(g.std, 0.03, max_relative = 0.1);
    }

    #[test]
    fn log_pdf_matches_closed_form() {
        let g = GaussianParams::new(2.0, 0.5).unwrap();
        let x = 2.7_f64;
        let expected = (-0.5 * ((x - 2.0) / 0.5_f64).powi(2)).exp()
            / (0.5 * (2.0 * std::f64::consts::PI).sqrt());
        assert_relative_eq!(g.log_pdf(x).exp(), expected, epsilon = 1e-14);
    }
}
