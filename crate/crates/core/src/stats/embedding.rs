//! Per-modality standardization into a common 2-D representation.
//!
//! Duration and power live on very different scales, so each is centered
//! and scaled by its training moments before clustering.

use serde::{Deserialize, Serialize};

use super::{fit_gaussian, StatsError};
use crate::data::{ShipmentObservation, ShipmentSeries};

/// Affine map taking raw `(duration, power)` to a standardized 2-vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub duration_center: f64,
    pub duration_scale: f64,
    pub power_center: f64,
    pub power_scale: f64,
}

impl EmbeddingModel {
    pub fn new(
        duration_center: f64,
        duration_scale: f64,
        power_center: f64,
        power_scale: f64,
    ) -> Result<Self, StatsError> {
        if !(duration_scale > 0.0 && power_scale > 0.0)
            || ![duration_center, duration_scale, power_center, power_scale]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(StatsError::InvalidParameter {
                what: "embedding (scales must be finite and > 0)",
            });
        }
        Ok(Self {
            duration_center,
            duration_scale,
            power_center,
            power_scale,
        })
    }

    /// Fit centers and scales from training durations and powers
    /// (sample mean / sample standard deviation).
    pub fn fit(training: &ShipmentSeries) -> Result<Self, StatsError> {
        let dur = fit_gaussian(&training.durations())?;
        let pow = fit_gaussian(&training.powers())?;
        Self::new(dur.mean, dur.std, pow.mean, pow.std)
    }

    pub fn embed(&self, obs: &ShipmentObservation) -> [f64; 2] {
        [
            (obs.duration_days() - self.duration_center) / self.duration_scale,
            (obs.power() - self.power_center) / self.power_scale,
        ]
    }

    pub fn embed_series(&self, series: &ShipmentSeries) -> Vec<[f64; 2]> {
        series.observations().iter().map(|o| self.embed(o)).collect()
    }
}
