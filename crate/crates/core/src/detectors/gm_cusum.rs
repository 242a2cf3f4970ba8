//! Gaussian-mixture CUSUM: like the Gaussian CUSUM, but each modality's
//! baseline is a mixture whose component count is selected by BIC. Each
//! observation is scored against the best-fitting component, pre- and
//! post-shift (unweighted maxima over components), and the two per-modality
//! CUSUMs race to the threshold.

use serde::{Deserialize, Serialize};

use super::{cusum_step, shifted_log_pdf, ShiftSpec, StepVerdict, TrainError};
use crate::data::{ShipmentObservation, ShipmentSeries};
use crate::rng::RngStream;
use crate::stats::{fit_gmm, GaussianMixture};

/// Largest component count tried by default.
pub const DEFAULT_K_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmCusumModel {
    pub shift: ShiftSpec,
    pub duration_mix: GaussianMixture,
    pub power_mix: GaussianMixture,
}

impl GmCusumModel {
    /// Fit per-modality mixtures for k = 1..=k_max and keep the BIC
    /// minimizer (`BIC = -2 log L + p ln n`, `p = 3k - 1`).
    pub fn train(
        training: &ShipmentSeries,
        shift: ShiftSpec,
        k_max: usize,
        rng: RngStream,
    ) -> Result<Self, TrainError> {
        if k_max < 1 {
            return Err(TrainError::Stats(crate::stats::StatsError::ZeroClusters));
        }
        if training.len() < 2 * k_max {
            return Err(TrainError::InsufficientData {
                needed: 2 * k_max,
                got: training.len(),
            });
        }
        let duration_mix = select_by_bic(&training.durations(), k_max, rng.substream(0))?;
        let power_mix = select_by_bic(&training.powers(), k_max, rng.substream(1))?;
        Ok(Self {
            shift,
            duration_mix,
            power_mix,
        })
    }

    pub fn step(
        &self,
        state: &mut GmCusumState,
        obs: &ShipmentObservation,
        threshold: f64,
    ) -> StepVerdict {
        if let Some(at) = state.alarm {
            return StepVerdict::Alarm { at };
        }
        state.t += 1;
        state.u = cusum_step(
            state.u,
            mixture_shift_llr(obs.duration_days(), &self.duration_mix, &self.shift),
        );
        state.v = cusum_step(
            state.v,
            mixture_shift_llr(obs.power(), &self.power_mix, &self.shift),
        );
        if state.u.max(state.v) >= threshold {
            state.alarm = Some(state.t);
            StepVerdict::Alarm { at: state.t }
        } else {
            StepVerdict::Continue
        }
    }
}

/// `log max_k f1k(x) - log max_k f0k(x)` with each component's post-change
/// mean clamped into its own feasible interval. Component weights are
/// deliberately ignored.
fn mixture_shift_llr(x: f64, mix: &GaussianMixture, shift: &ShiftSpec) -> f64 {
    let log_f0 = mix
        .components
        .iter()
        .map(|g| g.log_pdf(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let log_f1 = mix
        .components
        .iter()
        .map(|g| shifted_log_pdf(x, g, shift))
        .fold(f64::NEG_INFINITY, f64::max);
    log_f1 - log_f0
}

fn select_by_bic(
    samples: &[f64],
    k_max: usize,
    rng: RngStream,
) -> Result<GaussianMixture, TrainError> {
    let n = samples.len() as f64;
    let mut best: Option<(f64, GaussianMixture)> = None;
    for k in 1..=k_max {
        let mix = fit_gmm(samples, k, rng.substream(k as u64))?;
        let p = (3 * k - 1) as f64;
        let bic = -2.0 * mix.log_likelihood(samples) + p * n.ln();
        // Strict improvement: ties keep the smaller k.
        if best.as_ref().is_none_or(|(b, _)| bic < *b) {
            best = Some((bic, mix));
        }
    }
    Ok(best.expect("k_max >= 1").1)
}

/// Parallel CUSUM statistics for duration (`u`) and power (`v`).
#[derive(Debug, Clone, Default)]
pub struct GmCusumState {
    t: u32,
    u: f64,
    v: f64,
    alarm: Option<u32>,
}

impl GmCusumState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn statistics(&self) -> (f64, f64) {
        (self.u, self.v)
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn alarm(&self) -> Option<u32> {
        self.alarm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{GCusumModel, GCusumState};
    use crate::rng::RngStream;
    use crate::simulator::{generate, ScenarioConfig};
    use crate::stats::GaussianParams;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn bic_selects_two_power_components_on_the_paper_scenario() {
        let data = generate(
            &ScenarioConfig::paper_default(),
            1000,
            None,
            RngStream::new(31, 0),
        )
        .unwrap();
        let model = GmCusumModel::train(
            data.series(),
            ShiftSpec::default(),
            DEFAULT_K_MAX,
            RngStream::new(31, 1),
        )
        .unwrap();
        assert_eq!(model.power_mix.component_count(), 2);
        assert!((model.power_mix.components[0].mean - 0.1).abs() < 0.001);
        assert!((model.power_mix.components[1].mean - 0.2).abs() < 0.001);
        assert_eq!(model.shift, ShiftSpec::default());
    }

    #[test]
    fn bic_prefers_one_component_for_unimodal_data() {
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = RngStream::new(32, seed).rng();
            let normal = Normal::new(5.0, 1.0).unwrap();
            let samples: Vec<f64> = (0..400).map(|_| normal.sample(&mut rng)).collect();
            let mix = select_by_bic(&samples, 4, RngStream::new(33, seed)).unwrap();
            if mix.component_count() == 1 {
                hits += 1;
            }
        }
        assert!(hits >= 18, "k=1 selected only {hits}/20 times");
    }

    #[test]
    fn single_component_model_reduces_to_gaussian_cusum() {
        let duration = GaussianParams { mean: 30.0, std: 2.0 };
        let power = GaussianParams { mean: 0.15, std: 0.01 };
        let shift = ShiftSpec::default();
        let gm = GmCusumModel {
            shift,
            duration_mix: GaussianMixture::new(vec![1.0], vec![duration]).unwrap(),
            power_mix: GaussianMixture::new(vec![1.0], vec![power]).unwrap(),
        };
        let g = GCusumModel {
            shift,
            duration_g0: duration,
            power_g0: power,
        };
        let mut gm_state = GmCusumState::new();
        let mut g_state = GCusumState::new();
        let data = generate(
            &ScenarioConfig::paper_default(),
            200,
            None,
            RngStream::new(34, 0),
        )
        .unwrap();
        for obs in data.series().observations() {
            let a = gm.step(&mut gm_state, obs, 1e9);
            let b = g.step(&mut g_state, obs, 1e9);
            assert_eq!(a, b);
            assert_eq!(gm_state.statistics(), g_state.statistics());
        }
    }

    #[test]
    fn dominating_component_gives_closed_form_llr() {
        // Components far apart with equal stds: at a component mean the llr
        // is -a^2/2, exactly as in the single-Gaussian case.
        let shift = ShiftSpec::new(0.5, 3.0).unwrap();
        let mix = GaussianMixture::new(
            vec![0.5, 0.5],
            vec![
                GaussianParams { mean: 0.0, std: 1.0 },
                GaussianParams { mean: 50.0, std: 1.0 },
            ],
        )
        .unwrap();
        assert_relative_eq!(mixture_shift_llr(0.0, &mix, &shift), -0.125, epsilon = 1e-12);
        assert_relative_eq!(mixture_shift_llr(50.0, &mix, &shift), -0.125, epsilon = 1e-12);
    }

    #[test]
    fn zero_shift_keeps_statistics_at_zero() {
        let data = generate(
            &ScenarioConfig::paper_default(),
            300,
            Some(1),
            RngStream::new(35, 0),
        )
        .unwrap();
        let model = GmCusumModel::train(
            data.series(),
            ShiftSpec::new(0.0, 0.0).unwrap(),
            4,
            RngStream::new(35, 1),
        )
        .unwrap();
        let mut state = GmCusumState::new();
        for obs in data.series().observations() {
            model.step(&mut state, obs, 1e9);
            assert_eq!(state.statistics(), (0.0, 0.0));
        }
    }
}
