//! Streaming change detectors and their training procedures.
//!
//! Four detectors share one harness contract: train on a diversion-free
//! series, then consume test shipments one at a time and raise an alarm
//! when a statistic crosses the caller's threshold.
//!
//! * [`KsModel`] — windowed Kolmogorov-Smirnov distance between kernel-CDF
//!   baselines and a sliding window, per modality.
//! * [`GCusumModel`] — two parallel CUSUMs with single-Gaussian baselines
//!   on duration and power.
//! * [`GmCusumModel`] — the same, with BIC-selected Gaussian mixtures.
//! * [`MCusumModel`] — one CUSUM on the joint per-cluster likelihood of
//!   energy and power.
//!
//! The CUSUM family scores each observation with a generalized likelihood
//! ratio: the post-change mean is chosen by maximum likelihood from the
//! interval `[mean + a*std, mean + b*std]` ([`ShiftSpec`]), which for a
//! Gaussian is just the observation clamped into that interval. Variances
//! are assumed unchanged. Once a detector alarms its state freezes;
//! re-arming is the caller's job.

mod g_cusum;
mod gm_cusum;
mod ks;
mod m_cusum;

pub use g_cusum::{GCusumModel, GCusumState};
pub use gm_cusum::{GmCusumModel, GmCusumState};
pub use ks::{KsModel, KsState};
pub use m_cusum::{MCusumModel, MCusumState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ShipmentObservation;
use crate::stats::{GaussianParams, StatsError};

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training series too short: need at least {needed} shipments, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("KS window must be at least 2, got {got}")]
    WindowTooSmall { got: u32 },
    #[error("invalid shift spec: need 0 <= lower <= upper, got [{lower}, {upper}]")]
    BadShift { lower: f64, upper: f64 },
    #[error("estimation failed: {0}")]
    Stats(#[from] StatsError),
    #[error("cluster {cluster} has only {size} shipments (need at least 2)")]
    ClusterTooSmall { cluster: usize, size: usize },
    #[error("fitting cluster {cluster} failed: {source}")]
    ClusterFit { cluster: usize, source: StatsError },
}

#[derive(Debug, Error, PartialEq)]
#[error("model file: {0}")]
pub struct ModelFormatError(pub String);

/// Feasible post-change mean shifts, in units of the baseline std:
/// `[mean + lower_mult * std, mean + upper_mult * std]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub lower_mult: f64,
    pub upper_mult: f64,
}

impl ShiftSpec {
    pub fn new(lower_mult: f64, upper_mult: f64) -> Result<Self, TrainError> {
        if !(lower_mult.is_finite() && upper_mult.is_finite())
            || lower_mult < 0.0
            || upper_mult < lower_mult
        {
            return Err(TrainError::BadShift {
                lower: lower_mult,
                upper: upper_mult,
            });
        }
        Ok(Self {
            lower_mult,
            upper_mult,
        })
    }
}

impl Default for ShiftSpec {
    /// Small-to-moderate upward shifts: half a std to three stds.
    fn default() -> Self {
        Self {
            lower_mult: 0.5,
            upper_mult: 3.0,
        }
    }
}

/// One Page update: `max(0, s + llr)`.
pub fn cusum_step(s: f64, llr: f64) -> f64 {
    (s + llr).max(0.0)
}

/// Log likelihood ratio of the best feasible mean shift against the
/// baseline: `mu* = clamp(x, mean + a*std, mean + b*std)`, returning
/// `log N(x; mu*, std) - log N(x; mean, std)`.
pub fn glr_shift_llr(x: f64, g0: &GaussianParams, shift: &ShiftSpec) -> f64 {
    let d0 = x - g0.mean;
    let d1 = x - clamped_shift_mean(x, g0, shift);
    (d0 * d0 - d1 * d1) / (2.0 * g0.std * g0.std)
}

fn clamped_shift_mean(x: f64, g0: &GaussianParams, shift: &ShiftSpec) -> f64 {
    x.clamp(
        g0.mean + shift.lower_mult * g0.std,
        g0.mean + shift.upper_mult * g0.std,
    )
}

/// Log density of `x` under the best feasible shifted version of `g`.
pub(crate) fn shifted_log_pdf(x: f64, g: &GaussianParams, shift: &ShiftSpec) -> f64 {
    let z = (x - clamped_shift_mean(x, g, shift)) / g.std;
    -0.5 * z * z - g.std.ln() - 0.5 * crate::stats::LN_2PI
}

/// Verdict of one detector step at the caller's threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepVerdict {
    Continue,
    /// Alarm raised at the given shipment index (possibly on an earlier
    /// step; frozen states keep reporting their alarm).
    Alarm { at: u32 },
}

impl StepVerdict {
    pub fn alarm_at(&self) -> Option<u32> {
        match self {
            StepVerdict::Continue => None,
            StepVerdict::Alarm { at } => Some(*at),
        }
    }
}

/// A trained detector of any kind, as persisted to a model file.
///
/// The serialized form is TOML with a `kind` discriminator and fields named
/// after the model types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Ks(KsModel),
    GCusum(GCusumModel),
    GmCusum(GmCusumModel),
    MCusum(MCusumModel),
}

/// Streaming state paired with a [`Model`].
#[derive(Debug, Clone)]
pub enum DetectorState {
    Ks(KsState),
    GCusum(GCusumState),
    GmCusum(GmCusumState),
    MCusum(MCusumState),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Ks(_) => "ks",
            Model::GCusum(_) => "g_cusum",
            Model::GmCusum(_) => "gm_cusum",
            Model::MCusum(_) => "m_cusum",
        }
    }

    pub fn new_state(&self) -> DetectorState {
        match self {
            Model::Ks(m) => DetectorState::Ks(m.new_state()),
            Model::GCusum(_) => DetectorState::GCusum(GCusumState::new()),
            Model::GmCusum(_) => DetectorState::GmCusum(GmCusumState::new()),
            Model::MCusum(_) => DetectorState::MCusum(MCusumState::new()),
        }
    }

    /// Advance `state` by one observation.
    ///
    /// Panics if `state` was created by a different model kind.
    pub fn step(
        &self,
        state: &mut DetectorState,
        obs: &ShipmentObservation,
        threshold: f64,
    ) -> StepVerdict {
        match (self, state) {
            (Model::Ks(m), DetectorState::Ks(s)) => m.step(s, obs, threshold),
            (Model::GCusum(m), DetectorState::GCusum(s)) => m.step(s, obs, threshold),
            (Model::GmCusum(m), DetectorState::GmCusum(s)) => m.step(s, obs, threshold),
            (Model::MCusum(m), DetectorState::MCusum(s)) => m.step(s, obs, threshold),
            _ => panic!("detector state does not match model kind"),
        }
    }

    /// First alarm index on a full series, or `None`.
    pub fn scan(&self, series: &crate::data::ShipmentSeries, threshold: f64) -> Option<u32> {
        let mut state = self.new_state();
        for obs in series.observations() {
            if let StepVerdict::Alarm { at } = self.step(&mut state, obs, threshold) {
                return Some(at);
            }
        }
        None
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelFormatError> {
        toml::from_str(text).map_err(|e| ModelFormatError(e.to_string()))
    }
}
