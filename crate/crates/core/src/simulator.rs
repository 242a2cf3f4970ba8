//! Scenario simulation: mixtures of customer patterns with probabilistic
//! diversion injection after a change point.
//!
//! Each shipment draws a customer pattern (an energy level crossed with a
//! power level), then energy and power from that pattern's Gaussians
//! (redrawn until positive). From the change point on, each shipment is
//! independently diverted with probability `diversion_prob`, adding fixed
//! increments to energy and power. Duration is energy over power.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{LabeledSeries, ShipmentObservation, ShipmentSeries};
use crate::rng::RngStream;

/// Probabilities must sum to 1 within this slack.
const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("{which}_levels must be non-empty")]
    EmptyLevels { which: &'static str },
    #[error("{which}_levels[{index}].{field} must be strictly positive, got {value}")]
    NonPositiveLevel {
        which: &'static str,
        index: usize,
        field: &'static str,
        value: f64,
    },
    #[error("pattern_probs must be {rows} rows of {cols} entries (one per energy/power pair)")]
    ProbTableShape { rows: usize, cols: usize },
    #[error("pattern_probs[{row}][{col}] must be a finite non-negative number, got {value}")]
    BadProb { row: usize, col: usize, value: f64 },
    #[error("pattern_probs entries sum to {sum}, expected 1")]
    ProbSum { sum: f64 },
    #[error("change_point must be in 1..={max} (test_length + 1 encodes no change), got {got}")]
    ChangePointRange { got: u32, max: u32 },
    #[error("diversion_prob must be in [0, 1], got {0}")]
    DiversionProbRange(f64),
    #[error("{field} must be finite and non-negative, got {value}")]
    BadDiversionAdd { field: &'static str, value: f64 },
    #[error("scenario file: {0}")]
    Parse(String),
}

/// One Gaussian level: mean and standard deviation, both positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub mean: f64,
    pub std: f64,
}

/// The four Gaussian parameters of one customer pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerPattern {
    pub energy_mean: f64,
    pub energy_std: f64,
    pub power_mean: f64,
    pub power_std: f64,
}

/// Full generative description of a monitoring scenario.
///
/// `pattern_probs[i][j]` is the probability of the pattern combining energy
/// level `i` with power level `j`. The pattern id used in labels is the
/// 1-based row-major index `i * power_levels.len() + j + 1`.
/// `change_point = test_length + 1` encodes a diversion-free test stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub training_length: u32,
    pub test_length: u32,
    pub change_point: u32,
    pub diversion_prob: f64,
    pub diversion_energy_add: f64,
    pub diversion_power_add: f64,
    pub energy_levels: Vec<Level>,
    pub power_levels: Vec<Level>,
    pub pattern_probs: Vec<Vec<f64>>,
}

impl ScenarioConfig {
    /// The simulation scenario the detectors are benchmarked on: six
    /// customer patterns (energy means 3.43 / 4.35 / 5.29 MTSWU with std
    /// 0.03, power means 0.1 / 0.2 MTSWU/day with std 0.001, uniform
    /// pattern probabilities), 1000 training shipments, diversions with
    /// probability 0.2 adding 0.1934 MTSWU of energy and one power std.
    pub fn paper_default() -> Self {
        let energy_levels = vec![
            Level { mean: 3.43, std: 0.03 },
            Level { mean: 4.35, std: 0.03 },
            Level { mean: 5.29, std: 0.03 },
        ];
        let power_levels = vec![
            Level { mean: 0.1, std: 0.001 },
            Level { mean: 0.2, std: 0.001 },
        ];
        let pattern_probs = vec![vec![1.0 / 6.0; 2]; 3];
        Self {
            training_length: 1000,
            test_length: 3000,
            change_point: 1001,
            diversion_prob: 0.2,
            diversion_energy_add: 0.1934,
            diversion_power_add: 0.001,
            energy_levels,
            power_levels,
            pattern_probs,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (which, levels) in [("energy", &self.energy_levels), ("power", &self.power_levels)] {
            if levels.is_empty() {
                return Err(ScenarioError::EmptyLevels { which });
            }
            for (index, level) in levels.iter().enumerate() {
                for (field, value) in [("mean", level.mean), ("std", level.std)] {
                    if !(value > 0.0 && value.is_finite()) {
                        return Err(ScenarioError::NonPositiveLevel {
                            which,
                            index,
                            field,
                            value,
                        });
                    }
                }
            }
        }
        let rows = self.energy_levels.len();
        let cols = self.power_levels.len();
        if self.pattern_probs.len() != rows
            || self.pattern_probs.iter().any(|r| r.len() != cols)
        {
            return Err(ScenarioError::ProbTableShape { rows, cols });
        }
        let mut sum = 0.0;
        for (row, r) in self.pattern_probs.iter().enumerate() {
            for (col, &p) in r.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(ScenarioError::BadProb { row, col, value: p });
                }
                sum += p;
            }
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(ScenarioError::ProbSum { sum });
        }
        if self.change_point < 1 || self.change_point > self.test_length + 1 {
            return Err(ScenarioError::ChangePointRange {
                got: self.change_point,
                max: self.test_length + 1,
            });
        }
        if !(0.0..=1.0).contains(&self.diversion_prob) {
            return Err(ScenarioError::DiversionProbRange(self.diversion_prob));
        }
        for (field, value) in [
            ("diversion_energy_add", self.diversion_energy_add),
            ("diversion_power_add", self.diversion_power_add),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(ScenarioError::BadDiversionAdd { field, value });
            }
        }
        Ok(())
    }

    pub fn pattern_count(&self) -> usize {
        self.energy_levels.len() * self.power_levels.len()
    }

    /// Pattern parameters for a 1-based pattern id.
    pub fn pattern(&self, id: u32) -> CustomerPattern {
        let idx = (id - 1) as usize;
        let cols = self.power_levels.len();
        let energy = self.energy_levels[idx / cols];
        let power = self.power_levels[idx % cols];
        CustomerPattern {
            energy_mean: energy.mean,
            energy_std: energy.std,
            power_mean: power.mean,
            power_std: power.std,
        }
    }

    /// The configured change point, `None` when it encodes "no change".
    pub fn change_point_or_none(&self) -> Option<u32> {
        (self.change_point <= self.test_length).then_some(self.change_point)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let config: Self =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }
}

/// One generated shipment with its labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledShipment {
    pub obs: ShipmentObservation,
    pub pattern: u32,
    pub diverted: bool,
}

/// Streaming shipment generator; `generate` collects it into a series.
///
/// Draw order per shipment is fixed (pattern, energy, power, then — only at
/// or past the change point — the diversion coin), so runs that differ only
/// in `diversion_prob` consume randomness identically and stay aligned.
pub struct ShipmentSampler<'a> {
    config: &'a ScenarioConfig,
    rng: ChaCha8Rng,
    length: u32,
    change_point: Option<u32>,
    t: u32,
}

impl<'a> ShipmentSampler<'a> {
    /// `change_point = Some(c)` lets diversions start at shipment `c`;
    /// `None` generates a diversion-free stream.
    pub fn new(
        config: &'a ScenarioConfig,
        length: u32,
        change_point: Option<u32>,
        rng: RngStream,
    ) -> Self {
        Self {
            config,
            rng: rng.rng(),
            length,
            change_point,
            t: 0,
        }
    }

    fn draw_pattern(&mut self) -> u32 {
        let u: f64 = self.rng.random();
        let cols = self.config.power_levels.len();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (row, r) in self.config.pattern_probs.iter().enumerate() {
            for (col, &p) in r.iter().enumerate() {
                if p > 0.0 {
                    last_positive = row * cols + col;
                    acc += p;
                    if u < acc {
                        return (last_positive + 1) as u32;
                    }
                }
            }
        }
        (last_positive + 1) as u32
    }

    fn draw_positive(&mut self, mean: f64, std: f64) -> f64 {
        let normal = Normal::new(mean, std).expect("validated level parameters");
        loop {
            let x = normal.sample(&mut self.rng);
            if x > 0.0 {
                return x;
            }
        }
    }
}

impl Iterator for ShipmentSampler<'_> {
    type Item = SampledShipment;

    fn next(&mut self) -> Option<SampledShipment> {
        if self.t >= self.length {
            return None;
        }
        self.t += 1;
        let pattern = self.draw_pattern();
        let params = self.config.pattern(pattern);
        let mut energy = self.draw_positive(params.energy_mean, params.energy_std);
        let mut power = self.draw_positive(params.power_mean, params.power_std);
        let diverted = match self.change_point {
            Some(cp) if self.t >= cp => self.rng.random::<f64>() < self.config.diversion_prob,
            _ => false,
        };
        if diverted {
            energy += self.config.diversion_energy_add;
            power += self.config.diversion_power_add;
        }
        let obs = ShipmentObservation::new(self.t, energy / power, power)
            .expect("positive draws yield a valid observation");
        Some(SampledShipment {
            obs,
            pattern,
            diverted,
        })
    }
}

/// Generate a labeled series of `length` shipments.
pub fn generate(
    config: &ScenarioConfig,
    length: u32,
    change_point: Option<u32>,
    rng: RngStream,
) -> Result<LabeledSeries, ScenarioError> {
    config.validate()?;
    let mut observations = Vec::with_capacity(length as usize);
    let mut patterns = Vec::with_capacity(length as usize);
    let mut diverted = Vec::with_capacity(length as usize);
    for shipment in ShipmentSampler::new(config, length, change_point, rng) {
        observations.push(shipment.obs);
        patterns.push(shipment.pattern);
        diverted.push(shipment.diverted);
    }
    let series = ShipmentSeries::new(observations).expect("sampler indexes consecutively");
    Ok(LabeledSeries::new(series, Some(patterns), Some(diverted))
        .expect("label vectors match series length"))
}

/// Generate the training stream (diversion-free, length `training_length`)
/// and the test stream (length `test_length`, change at the configured
/// change point) from independent substreams of `rng`.
pub fn generate_training_and_test(
    config: &ScenarioConfig,
    rng: RngStream,
) -> Result<(LabeledSeries, LabeledSeries), ScenarioError> {
    let training = generate(config, config.training_length, None, rng.substream(0))?;
    let test = generate(
        config,
        config.test_length,
        config.change_point_or_none(),
        rng.substream(1),
    )?;
    Ok((training, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> ScenarioConfig {
        ScenarioConfig::paper_default()
    }

    #[test]
    fn paper_default_matches_published_scenario() {
        let config = paper();
        config.validate().unwrap();
        assert_eq!(config.pattern_count(), 6);
        assert_eq!(config.training_length, 1000);
        assert_eq!(config.diversion_prob, 0.2);
        assert_eq!(config.diversion_energy_add, 0.1934);
        assert_eq!(config.diversion_power_add, 0.001);
        // Diverted power means sit one std above the clean means.
        assert_eq!(config.power_levels[0].mean + config.diversion_power_add, 0.101);
        assert_eq!(config.power_levels[1].mean + config.diversion_power_add, 0.201);
    }

    #[test]
    fn validation_catches_bad_probability_table() {
        let mut config = paper();
        config.pattern_probs[0][0] = 0.0;
        assert!(matches!(
            config.validate().unwrap_err(),
            ScenarioError::ProbSum { .. }
        ));
        config.pattern_probs = vec![vec![0.5; 2]; 2];
        assert!(matches!(
            config.validate().unwrap_err(),
            ScenarioError::ProbTableShape { rows: 3, cols: 2 }
        ));
    }

    #[test]
    fn validation_catches_bad_change_point() {
        let mut config = paper();
        config.change_point = 0;
        assert!(config.validate().is_err());
        config.change_point = config.test_length + 2;
        assert!(config.validate().is_err());
        config.change_point = config.test_length + 1;
        assert!(config.validate().is_ok());
        assert_eq!(config.change_point_or_none(), None);
    }

    #[test]
    fn short_clean_stream_has_no_diversions_and_consistent_energy() {
        let series = generate(&paper(), 4, None, RngStream::new(7, 0)).unwrap();
        assert_eq!(series.len(), 4);
        assert!(series.diverted().unwrap().iter().all(|&d| !d));
        assert_eq!(series.change_point(), None);
        for obs in series.series().observations() {
            assert_eq!(obs.energy(), obs.duration_days() * obs.power());
            assert!(obs.duration_days() > 0.0 && obs.power() > 0.0);
        }
    }

    #[test]
    fn zero_probability_never_diverts() {
        let mut config = paper();
        config.diversion_prob = 0.0;
        let series = generate(&config, 200, Some(1), RngStream::new(8, 0)).unwrap();
        assert!(series.diverted().unwrap().iter().all(|&d| !d));
    }

    #[test]
    fn power_mean_matches_mixture_over_large_sample() {
        let n = 10_000u32;
        let series = generate(&paper(), n, None, RngStream::new(9, 0)).unwrap();
        let mean: f64 =
            series.series().powers().iter().sum::<f64>() / n as f64;
        // Mixture mean 0.15; component std 0.001 plus the 0.05 bimodal split
        // dominates the standard error.
        let mixture_std = 0.05f64;
        assert!((mean - 0.15).abs() < 5.0 * mixture_std / (n as f64).sqrt());
    }

    #[test]
    fn determinism_and_label_soundness() {
        let config = paper();
        let a = generate(&config, 500, Some(100), RngStream::new(10, 4)).unwrap();
        let b = generate(&config, 500, Some(100), RngStream::new(10, 4)).unwrap();
        assert_eq!(a, b);
        let diverted = a.diverted().unwrap();
        for (i, &d) in diverted.iter().enumerate() {
            if d {
                assert!(i as u32 + 1 >= 100);
            }
        }
        assert!(diverted[99..].iter().any(|&d| d));
    }

    #[test]
    fn diversion_adds_fixed_increments_to_base_draws() {
        let mut with = paper();
        with.diversion_prob = 1.0;
        let mut without = with.clone();
        without.diversion_prob = 0.0;
        let rng = RngStream::new(11, 2);
        let diverted = generate(&with, 50, Some(1), rng).unwrap();
        let base = generate(&without, 50, Some(1), rng).unwrap();
        for (d, b) in diverted
            .series()
            .observations()
            .iter()
            .zip(base.series().observations())
        {
            assert!((d.energy() - (b.energy() + 0.1934)).abs() < 1e-9);
            assert!((d.power() - (b.power() + 0.001)).abs() < 1e-12);
        }
    }

    #[test]
    fn per_pattern_moments_recovered() {
        let config = paper();
        let n = 12_000u32;
        let series = generate(&config, n, None, RngStream::new(12, 0)).unwrap();
        let patterns = series.pattern().unwrap();
        for id in 1..=6u32 {
            let params = config.pattern(id);
            let energies: Vec<f64> = series
                .series()
                .observations()
                .iter()
                .zip(patterns)
                .filter(|(_, &p)| p == id)
                .map(|(o, _)| o.energy())
                .collect();
            let count = energies.len() as f64;
            assert!(count > 1000.0, "pattern {id} undersampled");
            let mean = energies.iter().sum::<f64>() / count;
            let se = params.energy_std / count.sqrt();
            assert!(
                (mean - params.energy_mean).abs() < 5.0 * se,
                "pattern {id}: mean {mean} vs {}",
                params.energy_mean
            );
        }
    }

    #[test]
    fn training_and_test_split() {
        let mut config = paper();
        config.training_length = 300;
        config.test_length = 400;
        config.change_point = 101;
        let (training, test) = generate_training_and_test(&config, RngStream::new(13, 0)).unwrap();
        assert_eq!(training.len(), 300);
        assert_eq!(test.len(), 400);
        assert_eq!(training.change_point(), None);
        assert!(test.change_point().unwrap() >= 101);

        config.test_length = 0;
        config.change_point = 1;
        let (_, empty_test) =
            generate_training_and_test(&config, RngStream::new(13, 0)).unwrap();
        assert!(empty_test.is_empty());
    }

    #[test]
    fn scenario_toml_round_trip() {
        let config = paper();
        let text = config.to_toml();
        let parsed = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn scenario_toml_rejects_invalid() {
        let mut config = paper();
        config.pattern_probs[2][1] = 0.05;
        let text = config.to_toml();
        assert!(matches!(
            ScenarioConfig::from_toml(&text).unwrap_err(),
            ScenarioError::ProbSum { .. }
        ));
    }
}
