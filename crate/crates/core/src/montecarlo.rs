//! Monte Carlo benchmarking of trained detectors: false alarm rate versus
//! average detection delay across a threshold sweep.
//!
//! Each trial generates a fresh test stream from the scenario, feeds it to
//! the detector, and classifies the outcome against the configured change
//! point T*: alarm before T* is a false alarm, alarm at or after T* is a
//! detection with delay `T - T*`, and a stream that ends silent is
//! censored. Trials draw from substreams keyed by `(threshold index, trial
//! index)` — or by trial index alone in paired mode, which reuses the same
//! streams across thresholds for monotonicity checks. Results are reduced
//! in trial order, so sweeps are bit-reproducible at any parallelism.

use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

use crate::detectors::{Model, StepVerdict};
use crate::rng::RngStream;
use crate::simulator::{ScenarioConfig, ScenarioError, ShipmentSampler};

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("thresholds must be non-empty and strictly increasing")]
    BadThresholds,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// How a single benchmark trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    /// Alarm strictly before the change point.
    FalseAlarm { alarm_t: u32 },
    /// Alarm at or after the change point.
    Detection { alarm_t: u32, delay: u32 },
    /// No alarm by the end of the stream.
    Censored { end: u32 },
}

/// One point of a FAR/ADD curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub threshold: f64,
    pub trials: u32,
    pub n_false: u32,
    pub n_detect: u32,
    pub n_censored: u32,
    /// Estimated false alarm rate, `n_false / trials`.
    pub far: f64,
    /// Mean delay over detecting trials; absent when none detected.
    pub add: Option<f64>,
    /// 95% normal-approximation half-width for `add`; absent with fewer
    /// than two detections.
    pub add_ci_halfwidth: Option<f64>,
}

/// Run one trial: fresh test stream, stream it into the detector, classify.
pub fn run_trial(
    model: &Model,
    threshold: f64,
    config: &ScenarioConfig,
    rng: RngStream,
) -> TrialOutcome {
    let change_point = config.change_point_or_none();
    let sampler = ShipmentSampler::new(config, config.test_length, change_point, rng);
    let mut state = model.new_state();
    for shipment in sampler {
        if let StepVerdict::Alarm { at } = model.step(&mut state, &shipment.obs, threshold) {
            return match change_point {
                Some(t_star) if at >= t_star => TrialOutcome::Detection {
                    alarm_t: at,
                    delay: at - t_star,
                },
                _ => TrialOutcome::FalseAlarm { alarm_t: at },
            };
        }
    }
    TrialOutcome::Censored {
        end: config.test_length,
    }
}

/// Aggregate trial outcomes into a curve point.
pub fn estimate(outcomes: &[TrialOutcome], threshold: f64) -> CurvePoint {
    let trials = outcomes.len() as u32;
    let mut n_false = 0;
    let mut n_censored = 0;
    let mut delays: Vec<f64> = Vec::new();
    for outcome in outcomes {
        match outcome {
            TrialOutcome::FalseAlarm { .. } => n_false += 1,
            TrialOutcome::Detection { delay, .. } => delays.push(*delay as f64),
            TrialOutcome::Censored { .. } => n_censored += 1,
        }
    }
    let n_detect = delays.len() as u32;
    let add = (n_detect > 0).then(|| delays.iter().sum::<f64>() / delays.len() as f64);
    let add_ci_halfwidth = (n_detect > 1).then(|| {
        let mean = add.expect("detections exist");
        let var = delays.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / (delays.len() - 1) as f64;
        1.96 * (var / delays.len() as f64).sqrt()
    });
    CurvePoint {
        threshold,
        trials,
        n_false,
        n_detect,
        n_censored,
        far: n_false as f64 / trials as f64,
        add,
        add_ci_halfwidth,
    }
}

/// Sweep configuration; thresholds must be strictly increasing.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub trials: u32,
    /// Reuse the same trial substreams at every threshold.
    pub paired: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            trials: 1000,
            paired: false,
        }
    }
}

/// Default threshold grid: `count` log-spaced values in `[lo, hi]`.
pub fn log_spaced_thresholds(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2, "need 0 < lo < hi, count >= 2");
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Estimate one curve point per threshold, `opts.trials` trials each.
///
/// Trials are independent and run in parallel on the current rayon pool;
/// outcomes are reduced in trial order, so the result depends only on
/// `(model, config, thresholds, opts, rng)`.
pub fn sweep(
    model: &Model,
    thresholds: &[f64],
    config: &ScenarioConfig,
    opts: &SweepOptions,
    rng: RngStream,
) -> Result<Vec<CurvePoint>, SweepError> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::BadThresholds);
    }
    if opts.trials == 0 {
        return Err(SweepError::NoTrials);
    }
    config.validate()?;

    let mut curve = Vec::with_capacity(thresholds.len());
    for (ti, &threshold) in thresholds.iter().enumerate() {
        let outcomes: Vec<TrialOutcome> = (0..opts.trials)
            .into_par_iter()
            .map(|trial| {
                let key = if opts.paired {
                    trial as u64
                } else {
                    ((ti as u64 + 1) << 32) | trial as u64
                };
                run_trial(model, threshold, config, rng.substream(key))
            })
            .collect();
        curve.push(estimate(&outcomes, threshold));
    }
    Ok(curve)
}

pub const CURVE_CSV_HEADER: &str =
    "algo,threshold,trials,n_false,n_detect,n_censored,far,add,add_ci95";

/// Render labeled curves as CSV; absent `add`/`add_ci95` become empty fields.
pub fn curves_to_csv(curves: &[(String, Vec<CurvePoint>)]) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for (algo, points) in curves {
        for p in points {
            write!(
                out,
                "{algo},{},{},{},{},{},{}",
                p.threshold, p.trials, p.n_false, p.n_detect, p.n_censored, p.far
            )
            .expect("writing to String cannot fail");
            match p.add {
                Some(add) => write!(out, ",{add}").expect("writing to String cannot fail"),
                None => out.push(','),
            }
            match p.add_ci_halfwidth {
                Some(ci) => write!(out, ",{ci}").expect("writing to String cannot fail"),
                None => out.push(','),
            }
            out.push('\n');
        }
    }
    out
}
