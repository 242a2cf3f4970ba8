//! Gaussian-kernel CDF estimation and the Kolmogorov-Smirnov distance
//! between two kernel CDFs.
//!
//! The KS distance approximates `sup_x |A(x) - B(x)|` by maximizing over a
//! fixed candidate set: the sorted union of both sample sets, the midpoints
//! between consecutive union points, and one point 10 bandwidths beyond
//! each extreme. The maximum over that set is computed exactly, but lazily:
//! both CDFs are monotone, so on any candidate interval the difference is
//! bounded by `max(A(r)-B(l), B(r)-A(l))`, and subintervals whose bound
//! cannot beat the best value seen so far are skipped. The detector loop
//! additionally memoizes baseline-CDF evaluations across steps, which is
//! what makes sliding-window KS affordable inside Monte Carlo sweeps.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{fit_gaussian, StatsError};

/// Standard normal CDF.
pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Silverman's rule-of-thumb bandwidth, `1.06 * sigma * n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64, StatsError> {
    let g = fit_gaussian(samples)?;
    Ok(1.06 * g.std * (samples.len() as f64).powf(-0.2))
}

/// A smoothed CDF estimate: the average of Gaussian CDFs centered at the
/// sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCdf {
    pub sample_points: Vec<f64>,
    pub bandwidth: f64,
}

impl KernelCdf {
    pub fn new(sample_points: Vec<f64>, bandwidth: f64) -> Result<Self, StatsError> {
        if sample_points.is_empty() {
            return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
        }
        if sample_points.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFiniteSample);
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(StatsError::InvalidParameter {
                what: "kernel bandwidth (must be finite and > 0)",
            });
        }
        Ok(Self {
            sample_points,
            bandwidth,
        })
    }

    /// Fit with Silverman's bandwidth.
    pub fn from_samples(samples: &[f64]) -> Result<Self, StatsError> {
        let h = silverman_bandwidth(samples)?;
        Self::new(samples.to_vec(), h)
    }

    /// Evaluate the estimated CDF at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let sum: f64 = self
            .sample_points
            .iter()
            .map(|&s| std_normal_cdf((x - s) / self.bandwidth))
            .sum();
        sum / self.sample_points.len() as f64
    }
}

/// Memo of CDF evaluations, keyed by the query point's bit pattern.
///
/// Used by the KS detector to avoid re-evaluating its fixed training
/// baseline at recurring candidate points.
#[derive(Debug, Clone, Default)]
pub struct BaselineCache {
    map: HashMap<u64, f64>,
}

impl BaselineCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn eval(&mut self, cdf: &KernelCdf, x: f64) -> f64 {
        *self.map.entry(x.to_bits()).or_insert_with(|| cdf.eval(x))
    }
}

/// KS distance between two kernel CDFs over the shared candidate set.
pub fn ks_distance(a: &KernelCdf, b: &KernelCdf) -> f64 {
    ks_distance_with_cache(a, b, &mut BaselineCache::new())
}

/// [`ks_distance`] with memoized evaluations of `b`.
///
/// Returns exactly what [`ks_distance`] returns; the cache must only ever
/// be reused with the same `b`.
pub fn ks_distance_with_cache(a: &KernelCdf, b: &KernelCdf, cache: &mut BaselineCache) -> f64 {
    let xs = candidates(a, b);
    max_abs_diff(a, b, &xs, cache)
}

/// Candidate maximizers: sorted union, midpoints, and 10-bandwidth tails.
fn candidates(a: &KernelCdf, b: &KernelCdf) -> Vec<f64> {
    let mut pts: Vec<f64> = a
        .sample_points
        .iter()
        .chain(b.sample_points.iter())
        .copied()
        .collect();
    pts.sort_unstable_by(|x, y| x.partial_cmp(y).expect("sample points are finite"));
    pts.dedup();

    let reach = 10.0 * a.bandwidth.max(b.bandwidth);
    let mut xs = Vec::with_capacity(2 * pts.len() + 1);
    xs.push(pts[0] - reach);
    for w in pts.windows(2) {
        xs.push(w[0]);
        xs.push(w[0] + (w[1] - w[0]) / 2.0);
    }
    xs.push(*pts.last().expect("non-empty"));
    xs.push(pts.last().expect("non-empty") + reach);
    xs
}

// Tolerance absorbing sub-ulp non-monotonicity of the erfc approximation;
// the pruned maximum matches the brute-force maximum to within this slack.
const PRUNE_SLACK: f64 = 1e-12;

fn max_abs_diff(a: &KernelCdf, b: &KernelCdf, xs: &[f64], cache: &mut BaselineCache) -> f64 {
    let n = xs.len();
    let mut vals: Vec<Option<(f64, f64)>> = vec![None; n];
    let eval = |vals: &mut Vec<Option<(f64, f64)>>, cache: &mut BaselineCache, i: usize| {
        if let Some(v) = vals[i] {
            v
        } else {
            let v = (a.eval(xs[i]), cache.eval(b, xs[i]));
            vals[i] = Some(v);
            v
        }
    };

    let (a_lo, b_lo) = eval(&mut vals, cache, 0);
    let (a_hi, b_hi) = eval(&mut vals, cache, n - 1);
    let mut best = (a_lo - b_lo).abs().max((a_hi - b_hi).abs());

    let mut stack = vec![(0usize, n - 1)];
    while let Some((i, j)) = stack.pop() {
        if j <= i + 1 {
            continue;
        }
        let (ai, bi) = vals[i].expect("interval endpoints are evaluated");
        let (aj, bj) = vals[j].expect("interval endpoints are evaluated");
        // Monotonicity bound on |A - B| anywhere inside (x_i, x_j).
        let bound = (aj - bi).max(bj - ai);
        if bound <= best + PRUNE_SLACK {
            continue;
        }
        let m = i + (j - i) / 2;
        let (am, bm) = eval(&mut vals, cache, m);
        best = best.max((am - bm).abs());
        stack.push((i, m));
        stack.push((m, j));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn brute_force_over_candidates(a: &KernelCdf, b: &KernelCdf) -> f64 {
        candidates(a, b)
            .iter()
            .map(|&x| (a.eval(x) - b.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    fn dense_grid_sup(a: &KernelCdf, b: &KernelCdf, lo: f64, hi: f64, n: usize) -> f64 {
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .map(|x| (a.eval(x) - b.eval(x)).abs())
            .fold(0.0, f64::max)
    }

    fn random_cdf(rng: &mut impl Rng, n: usize, center: f64, spread: f64) -> KernelCdf {
        let normal = Normal::new(center, spread).unwrap();
        let pts: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
        KernelCdf::from_samples(&pts).unwrap()
    }

    #[test]
    fn silverman_formula() {
        // sigma-hat cancels: h / sigma = 1.06 n^(-1/5); n = 32 gives exactly 1.06 / 2.
        let samples: Vec<f64> = (0..32).map(|i| i as f64 * 0.37 + 1.0).collect();
        let sigma = fit_gaussian(&samples).unwrap().std;
        let h = silverman_bandwidth(&samples).unwrap();
        assert_relative_eq!(h / sigma, 0.53, epsilon = 1e-12);
        assert!(silverman_bandwidth(&[1.0]).is_err());
    }

    #[test]
    fn silverman_scale_equivariance() {
        let samples = [0.4, 1.9, 2.2, 5.0, 7.7];
        let scaled: Vec<f64> = samples.iter().map(|x| 3.0 * x).collect();
        assert_relative_eq!(
            silverman_bandwidth(&scaled).unwrap(),
            3.0 * silverman_bandwidth(&samples).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn cdf_limits_and_symmetry() {
        let cdf = KernelCdf::new(vec![2.0], 0.5).unwrap();
        assert_eq!(cdf.eval(2.0), 0.5);
        assert!(cdf.eval(-1e6) < 1e-12);
        assert!(cdf.eval(1e6) > 1.0 - 1e-12);
        assert_eq!(cdf.eval(f64::NEG_INFINITY), 0.0);
        assert_eq!(cdf.eval(f64::INFINITY), 1.0);
    }

    #[test]
    fn tiny_bandwidth_approaches_empirical_cdf() {
        let mut rng = RngStream::new(5, 0).rng();
        let mut pts: Vec<f64> = (0..100).map(|_| rng.random::<f64>() * 10.0).collect();
        let cdf = KernelCdf::new(pts.clone(), 1e-8).unwrap();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Evaluate strictly between sample points.
        for i in 0..pts.len() - 1 {
            let x = pts[i] + (pts[i + 1] - pts[i]) / 2.0;
            if pts[i + 1] - pts[i] < 1e-6 {
                continue;
            }
            let empirical = (i + 1) as f64 / pts.len() as f64;
            assert!((cdf.eval(x) - empirical).abs() < 1e-9);
        }
    }

    #[test]
    fn ks_distance_of_identical_cdfs_is_zero() {
        let cdf = KernelCdf::new(vec![1.0, 2.0, 5.0], 0.4).unwrap();
        assert_eq!(ks_distance(&cdf, &cdf), 0.0);
    }

    #[test]
    fn ks_distance_of_separated_singletons_near_one() {
        let a = KernelCdf::new(vec![0.0], 1e-3).unwrap();
        let b = KernelCdf::new(vec![1.0], 1e-3).unwrap();
        let d = ks_distance(&a, &b);
        let oracle = dense_grid_sup(&a, &b, -0.5, 1.5, 200_000);
        assert!((d - oracle).abs() < 1e-3);
        assert!(d > 0.999);
        assert!(d <= 1.0);
    }

    #[test]
    fn pruned_max_matches_brute_force() {
        let mut rng = RngStream::new(77, 0).rng();
        for trial in 0..50 {
            let a = random_cdf(&mut rng, 40 + trial, 0.0, 1.0);
            let b = random_cdf(&mut rng, 60, 0.3, 1.3);
            let fast = ks_distance(&a, &b);
            let brute = brute_force_over_candidates(&a, &b);
            assert!(
                (fast - brute).abs() <= 1e-12,
                "trial {trial}: fast {fast} vs brute {brute}"
            );
        }
    }

    #[test]
    fn cache_reuse_changes_nothing() {
        let mut rng = RngStream::new(78, 0).rng();
        let baseline = random_cdf(&mut rng, 200, 0.0, 1.0);
        let mut cache = BaselineCache::new();
        for _ in 0..10 {
            let w = random_cdf(&mut rng, 30, 0.2, 1.1);
            assert_eq!(
                ks_distance_with_cache(&w, &baseline, &mut cache),
                ks_distance(&w, &baseline)
            );
        }
    }

    proptest! {
        #[test]
        fn cdf_is_nondecreasing(
            seed in 0u64..1000,
            lo in -5.0f64..5.0,
            span in 0.1f64..10.0,
        ) {
            let mut rng = RngStream::new(seed, 1).rng();
            let cdf = random_cdf(&mut rng, 30, 0.0, 2.0);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..50 {
                let x = lo + span * i as f64 / 49.0;
                let y = cdf.eval(x);
                prop_assert!(y >= prev - 1e-15);
                prop_assert!((0.0..=1.0).contains(&y));
                prev = y;
            }
        }

        #[test]
        fn ks_distance_symmetric_and_bounded(seed in 0u64..500) {
            let mut rng = RngStream::new(seed, 2).rng();
            let a = random_cdf(&mut rng, 25, 0.0, 1.0);
            let b = random_cdf(&mut rng, 35, 1.0, 0.7);
            let d_ab = ks_distance(&a, &b);
            let d_ba = ks_distance(&b, &a);
            prop_assert!((d_ab - d_ba).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&d_ab));
        }

        #[test]
        fn ks_distance_triangle_inequality(seed in 0u64..300) {
            let mut rng = RngStream::new(seed, 3).rng();
            let a = random_cdf(&mut rng, 20, 0.0, 1.0);
            let b = random_cdf(&mut rng, 25, 0.5, 1.2);
            let c = random_cdf(&mut rng, 30, 1.0, 0.8);
            let ab = ks_distance(&a, &b);
            let bc = ks_distance(&b, &c);
            let ac = ks_distance(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-9);
        }
    }
}
