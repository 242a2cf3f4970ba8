//! Learn the bimodal statistical pattern of a simulated uranium-enrichment
//! facility and detect small diversion-induced changes online.
//!
//! The crate provides, end to end:
//!
//! * a shipment data model with CSV interchange ([`data`]),
//! * separative-work physics for the energy constants ([`enrichment`]),
//! * a parameterized scenario simulator with diversion injection
//!   ([`simulator`]),
//! * the statistical building blocks ([`stats`]),
//! * four streaming detectors — windowed KS, Gaussian CUSUM,
//!   Gaussian-mixture CUSUM, and the joint multimodal CUSUM
//!   ([`detectors`]),
//! * and a Monte Carlo harness estimating false-alarm rate versus average
//!   detection delay over threshold sweeps ([`montecarlo`]).
//!
//! Everything randomized takes an explicit [`RngStream`], so any result in
//! this crate is reproducible from a seed.

pub mod data;
pub mod detectors;
pub mod enrichment;
pub mod montecarlo;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use data::{
    parse_series, serialize_series, DataError, LabeledSeries, ShipmentObservation, ShipmentSeries,
};
pub use detectors::{
    cusum_step, glr_shift_llr, DetectorState, GCusumModel, GmCusumModel, KsModel, MCusumModel,
    Model, ShiftSpec, StepVerdict, TrainError,
};
pub use montecarlo::{
    curves_to_csv, estimate, run_trial, sweep, CurvePoint, SweepError, SweepOptions, TrialOutcome,
};
pub use rng::RngStream;
pub use simulator::{
    generate, generate_training_and_test, CustomerPattern, Level, ScenarioConfig, ScenarioError,
};
pub use stats::{GaussianMixture, GaussianParams, KernelCdf, StatsError};
