//! Surrogate-model predictive control for low-order plants.
//!
//! The crate learns the dynamics of a few control-relevant sensor outputs
//! with a recurrent encoder/decoder network, embeds that surrogate in a
//! receding-horizon optimizer, and closes the loop against built-in ODE
//! plants, optionally retraining the surrogate online from incoming
//! measurements.

pub mod csvio;
pub mod datagen;
pub mod error;
pub mod metrics;
pub mod mpc;
pub mod online;
pub mod plants;
pub mod surrogate;
pub mod types;
pub mod window;

pub use error::{Error, Result};
pub use metrics::compute_metrics;
pub use types::{
    ControlSeries, ControlVector, MetricsReport, Observation, ReferenceTrajectory, Sample,
    TimeSeries,
};
pub use window::{build_delay_window, DelayWindow};
