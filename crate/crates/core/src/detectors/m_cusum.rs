//! Multimodal CUSUM: the joint detector.
//!
//! Training standardizes `(duration, power)` into a common 2-D space,
//! clusters the training shipments there (cluster count chosen by
//! silhouette), and fits per-cluster Gaussians to energy and power. One
//! CUSUM then scores each test shipment by the joint per-cluster
//! likelihood ratio
//! `log max_m f1m(e) f1m(z) - log max_m f0m(e) f0m(z)`, where `e = y z`
//! and the post-change densities shift each cluster's mean into the
//! feasible interval.

use serde::{Deserialize, Serialize};

use super::{cusum_step, shifted_log_pdf, ShiftSpec, StepVerdict, TrainError};
use crate::data::{ShipmentObservation, ShipmentSeries};
use crate::rng::RngStream;
use crate::stats::{fit_gaussian, select_m_with_assignment, EmbeddingModel, GaussianParams};

/// Default candidate range for the cluster count.
pub const DEFAULT_M_RANGE: std::ops::RangeInclusive<usize> = 2..=8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCusumModel {
    pub m: u32,
    pub shift: ShiftSpec,
    pub embedding: EmbeddingModel,
    pub energy_g0: Vec<GaussianParams>,
    pub power_g0: Vec<GaussianParams>,
}

impl MCusumModel {
    /// Embed, cluster (selecting `m` by silhouette over `m_range`), and fit
    /// per-cluster energy/power Gaussians. Training needs at least
    /// `10 * max(m_range)` shipments and every cluster must keep at least
    /// two shipments.
    pub fn train(
        training: &ShipmentSeries,
        shift: ShiftSpec,
        m_range: std::ops::RangeInclusive<usize>,
        rng: RngStream,
    ) -> Result<Self, TrainError> {
        let needed = 10 * *m_range.end();
        if training.len() < needed {
            return Err(TrainError::InsufficientData {
                needed,
                got: training.len(),
            });
        }
        let embedding = EmbeddingModel::fit(training)?;
        let points = embedding.embed_series(training);
        let (m, assignment) = select_m_with_assignment(&points, m_range, rng)?;

        let energies = training.energies();
        let powers = training.powers();
        let mut energy_g0 = Vec::with_capacity(m);
        let mut power_g0 = Vec::with_capacity(m);
        for cluster in 0..m {
            let members = assignment.members(cluster);
            if members.len() < 2 {
                return Err(TrainError::ClusterTooSmall {
                    cluster: cluster + 1,
                    size: members.len(),
                });
            }
            let cluster_energy: Vec<f64> = members.iter().map(|&i| energies[i]).collect();
            let cluster_power: Vec<f64> = members.iter().map(|&i| powers[i]).collect();
            energy_g0.push(fit_gaussian(&cluster_energy).map_err(|source| {
                TrainError::ClusterFit {
                    cluster: cluster + 1,
                    source,
                }
            })?);
            power_g0.push(fit_gaussian(&cluster_power).map_err(|source| {
                TrainError::ClusterFit {
                    cluster: cluster + 1,
                    source,
                }
            })?);
        }
        Ok(Self {
            m: m as u32,
            shift,
            embedding,
            energy_g0,
            power_g0,
        })
    }

    /// Per-cluster `(energy mean, power mean)` pairs.
    pub fn cluster_means(&self) -> Vec<(f64, f64)> {
        self.energy_g0
            .iter()
            .zip(&self.power_g0)
            .map(|(e, p)| (e.mean, p.mean))
            .collect()
    }

    pub fn step(
        &self,
        state: &mut MCusumState,
        obs: &ShipmentObservation,
        threshold: f64,
    ) -> StepVerdict {
        if let Some(at) = state.alarm {
            return StepVerdict::Alarm { at };
        }
        state.t += 1;
        state.s = cusum_step(state.s, self.joint_llr(obs));
        if state.s >= threshold {
            state.alarm = Some(state.t);
            StepVerdict::Alarm { at: state.t }
        } else {
            StepVerdict::Continue
        }
    }

    fn joint_llr(&self, obs: &ShipmentObservation) -> f64 {
        let e = obs.energy();
        let z = obs.power();
        let mut log_f0 = f64::NEG_INFINITY;
        let mut log_f1 = f64::NEG_INFINITY;
        for (ge, gz) in self.energy_g0.iter().zip(&self.power_g0) {
            log_f0 = log_f0.max(ge.log_pdf(e) + gz.log_pdf(z));
            log_f1 = log_f1
                .max(shifted_log_pdf(e, ge, &self.shift) + shifted_log_pdf(z, gz, &self.shift));
        }
        log_f1 - log_f0
    }
}

/// Single CUSUM statistic over the joint likelihood.
#[derive(Debug, Clone, Default)]
pub struct MCusumState {
    t: u32,
    s: f64,
    alarm: Option<u32>,
}

impl MCusumState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn statistic(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn alarm(&self) -> Option<u32> {
        self.alarm
    }
}
