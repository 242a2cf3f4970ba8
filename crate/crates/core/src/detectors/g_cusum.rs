//! Gaussian CUSUM: two parallel generalized CUSUMs with single-Gaussian
//! baselines fitted to the training durations and powers. The alarm fires
//! when either statistic reaches the threshold.

use serde::{Deserialize, Serialize};

use super::{cusum_step, glr_shift_llr, ShiftSpec, StepVerdict, TrainError};
use crate::data::{ShipmentObservation, ShipmentSeries};
use crate::stats::{fit_gaussian, GaussianParams};

const MIN_TRAINING: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCusumModel {
    pub shift: ShiftSpec,
    pub duration_g0: GaussianParams,
    pub power_g0: GaussianParams,
}

impl GCusumModel {
    pub fn train(training: &ShipmentSeries, shift: ShiftSpec) -> Result<Self, TrainError> {
        if training.len() < MIN_TRAINING {
            return Err(TrainError::InsufficientData {
                needed: MIN_TRAINING,
                got: training.len(),
            });
        }
        Ok(Self {
            shift,
            duration_g0: fit_gaussian(&training.durations())?,
            power_g0: fit_gaussian(&training.powers())?,
        })
    }

    pub fn step(
        &self,
        state: &mut GCusumState,
        obs: &ShipmentObservation,
        threshold: f64,
    ) -> StepVerdict {
        if let Some(at) = state.alarm {
            return StepVerdict::Alarm { at };
        }
        state.t += 1;
        state.u = cusum_step(
            state.u,
            glr_shift_llr(obs.duration_days(), &self.duration_g0, &self.shift),
        );
        state.v = cusum_step(
            state.v,
            glr_shift_llr(obs.power(), &self.power_g0, &self.shift),
        );
        if state.u.max(state.v) >= threshold {
            state.alarm = Some(state.t);
            StepVerdict::Alarm { at: state.t }
        } else {
            StepVerdict::Continue
        }
    }
}

/// Parallel CUSUM statistics for duration (`u`) and power (`v`).
#[derive(Debug, Clone, Default)]
pub struct GCusumState {
    t: u32,
    u: f64,
    v: f64,
    alarm: Option<u32>,
}

impl GCusumState {
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
