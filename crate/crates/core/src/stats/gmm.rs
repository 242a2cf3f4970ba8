//! Univariate Gaussian mixtures fitted by expectation-maximization.

use serde::{Deserialize, Serialize};

use super::cluster::kmeans;
use super::gaussian::GaussianParams;
use super::StatsError;
use crate::rng::RngStream;

const MAX_EM_ITERS: usize = 500;
const RELATIVE_GAIN_TOL: f64 = 1e-8;
// Responsibility-weighted variances are floored at (1e-9 * data range)^2 so
// a component can never collapse onto a single sample.
const STD_FLOOR_FRACTION: f64 = 1e-9;

/// A convex combination of univariate Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub components: Vec<GaussianParams>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianParams>) -> Result<Self, StatsError> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(StatsError::InvalidParameter {
                what: "mixture (weights and components must be non-empty and equal length)",
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(StatsError::InvalidParameter {
                what: "mixture weights (must be non-negative)",
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(StatsError::InvalidParameter {
                what: "mixture weights (must sum to 1)",
            });
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Weighted log density at `x`, via log-sum-exp.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, g)| {
                if *w == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    w.ln() + g.log_pdf(x)
                }
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// Total log likelihood of an i.i.d. sample.
    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.log_pdf(x)).sum()
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Fit a `k`-component mixture by EM, initialized from a k-means hard
/// clustering of the samples. Stops when the relative log-likelihood gain
/// drops below 1e-8 or after 500 iterations. Components are returned in
/// ascending mean order.
pub fn fit_gmm(samples: &[f64], k: usize, rng: RngStream) -> Result<GaussianMixture, StatsError> {
    if k == 0 {
        return Err(StatsError::ZeroClusters);
    }
    if samples.len() < 2 * k {
        return Err(StatsError::TooFewSamples {
            needed: 2 * k,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFiniteSample);
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(StatsError::ZeroVariance);
    }
    let std_floor = STD_FLOOR_FRACTION * (hi - lo);

    let responsibilities = initial_responsibilities(samples, k, rng)?;
    let (mixture, _) = em(samples, responsibilities, std_floor);
    Ok(mixture)
}

fn initial_responsibilities(
    samples: &[f64],
    k: usize,
    rng: RngStream,
) -> Result<Vec<Vec<f64>>, StatsError> {
    if k == 1 {
        return Ok(vec![vec![1.0]; samples.len()]);
    }
    let points: Vec<[f64; 2]> = samples.iter().map(|&x| [x, 0.0]).collect();
    let assignment = kmeans(&points, k, rng)?;
    Ok(assignment
        .labels
        .iter()
        .map(|&c| {
            let mut row = vec![0.0; k];
            row[c] = 1.0;
            row
        })
        .collect())
}

/// EM iterations from given responsibilities. Returns the fitted mixture and
/// the per-iteration log-likelihood trace (used to test EM monotonicity).
pub(crate) fn em(
    samples: &[f64],
    mut responsibilities: Vec<Vec<f64>>,
    std_floor: f64,
) -> (GaussianMixture, Vec<f64>) {
    let n = samples.len();
    let k = responsibilities[0].len();
    let mut weights = vec![0.0; k];
    let mut comps = vec![GaussianParams { mean: 0.0, std: 1.0 }; k];
    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;

    for _ in 0..MAX_EM_ITERS {
        // M-step: responsibility-weighted moments (population form).
        for j in 0..k {
            let mass: f64 = responsibilities.iter().map(|r| r[j]).sum();
            let mass = mass.max(f64::MIN_POSITIVE);
            let mean: f64 = responsibilities
                .iter()
                .zip(samples)
                .map(|(r, &x)| r[j] * x)
                .sum::<f64>()
                / mass;
            let var: f64 = responsibilities
                .iter()
                .zip(samples)
                .map(|(r, &x)| r[j] * (x - mean) * (x - mean))
                .sum::<f64>()
                / mass;
            weights[j] = mass / n as f64;
            comps[j] = GaussianParams {
                mean,
                std: var.sqrt().max(std_floor),
            };
        }

        // E-step: refresh responsibilities and accumulate the likelihood.
        let mut ll = 0.0;
        for (r, &x) in responsibilities.iter_mut().zip(samples) {
            let logs: Vec<f64> = weights
                .iter()
                .zip(&comps)
                .map(|(w, g)| {
                    if *w == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        w.ln() + g.log_pdf(x)
                    }
                })
                .collect();
            let lse = log_sum_exp(&logs);
            ll += lse;
            for (rj, lj) in r.iter_mut().zip(&logs) {
                *rj = (lj - lse).exp();
            }
        }
        trace.push(ll);
        if (ll - prev_ll).abs() <= RELATIVE_GAIN_TOL * ll.abs().max(1.0) {
            break;
        }
        prev_ll = ll;
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| comps[a].mean.partial_cmp(&comps[b].mean).expect("finite means"));
    let weights: Vec<f64> = order.iter().map(|&j| weights[j]).collect();
    let comps: Vec<GaussianParams> = order.iter().map(|&j| comps[j]).collect();

    // Weights come out of averaged responsibilities; renormalize the last
    // few ulps so the mixture invariant holds exactly.
    let sum: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / sum).collect();
    let mixture = GaussianMixture::new(weights, comps).expect("EM produces a valid mixture");
    (mixture, trace)
}
