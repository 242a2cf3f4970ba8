//! Windowed Kolmogorov-Smirnov detector.
//!
//! Training estimates kernel CDF baselines for duration and power. In the
//! test phase a sliding window of the last `W` observations is re-estimated
//! the same way and compared to the baselines; the alarm fires when either
//! modality's KS distance reaches the threshold. No statistic exists until
//! the window has filled.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{StepVerdict, TrainError};
use crate::data::{ShipmentObservation, ShipmentSeries};
use crate::stats::{ks_distance_with_cache, silverman_bandwidth, BaselineCache, KernelCdf};

// The window re-fit falls back to this bandwidth when all window samples
// are identical (Silverman's rule is undefined there); the kernel CDF then
// acts as a step function.
const DEGENERATE_WINDOW_BANDWIDTH: f64 = 1e-300;

/// Trained KS detector: per-modality baselines plus the window size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsModel {
    pub window: u32,
    pub baseline_duration: KernelCdf,
    pub baseline_power: KernelCdf,
}

impl KsModel {
    /// Fit baselines with Silverman bandwidths. Training must have at least
    /// `max(window, 10)` shipments and `window >= 2`.
    pub fn train(training: &ShipmentSeries, window: u32) -> Result<Self, TrainError> {
        if window < 2 {
            return Err(TrainError::WindowTooSmall { got: window });
        }
        let needed = (window as usize).max(10);
        if training.len() < needed {
            return Err(TrainError::InsufficientData {
                needed,
                got: training.len(),
            });
        }
        Ok(Self {
            window,
            baseline_duration: KernelCdf::from_samples(&training.durations())?,
            baseline_power: KernelCdf::from_samples(&training.powers())?,
        })
    }

    pub fn new_state(&self) -> KsState {
        KsState {
            t: 0,
            durations: VecDeque::with_capacity(self.window as usize),
            powers: VecDeque::with_capacity(self.window as usize),
            stats: None,
            alarm: None,
            duration_cache: BaselineCache::new(),
            power_cache: BaselineCache::new(),
        }
    }

    /// Slide the window by one observation and re-test (stride 1).
    pub fn step(
        &self,
        state: &mut KsState,
        obs: &ShipmentObservation,
        threshold: f64,
    ) -> StepVerdict {
        if let Some(at) = state.alarm {
            return StepVerdict::Alarm { at };
        }
        state.t += 1;
        if state.durations.len() == self.window as usize {
            state.durations.pop_front();
            state.powers.pop_front();
        }
        state.durations.push_back(obs.duration_days());
        state.powers.push_back(obs.power());
        if state.durations.len() < self.window as usize {
            return StepVerdict::Continue;
        }

        let d = window_distance(
            &state.durations,
            &self.baseline_duration,
            &mut state.duration_cache,
        );
        let e = window_distance(&state.powers, &self.baseline_power, &mut state.power_cache);
        state.stats = Some((d, e));
        if d.max(e) >= threshold {
            state.alarm = Some(state.t);
            StepVerdict::Alarm { at: state.t }
        } else {
            StepVerdict::Continue
        }
    }
}

fn window_distance(
    window: &VecDeque<f64>,
    baseline: &KernelCdf,
    cache: &mut BaselineCache,
) -> f64 {
    let samples: Vec<f64> = window.iter().copied().collect();
    let bandwidth =
        silverman_bandwidth(&samples).unwrap_or(DEGENERATE_WINDOW_BANDWIDTH);
    let window_cdf = KernelCdf::new(samples, bandwidth).expect("window samples are finite");
    ks_distance_with_cache(&window_cdf, baseline, cache)
}

/// Sliding-window state: ring buffers, the step counter, the most recent
/// `(D, E)` statistics, and the frozen alarm index once raised.
#[derive(Debug, Clone)]
pub struct KsState {
    t: u32,
    durations: VecDeque<f64>,
    powers: VecDeque<f64>,
    stats: Option<(f64, f64)>,
    alarm: Option<u32>,
    duration_cache: BaselineCache,
    power_cache: BaselineCache,
}

impl KsState {
    /// Latest `(duration, power)` KS statistics; `None` during warm-up.
    pub fn stats(&self) -> Option<(f64, f64)> {
        self.stats
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn alarm(&self) -> Option<u32> {
        self.alarm
    }
}
