//! Heterogeneous radar-network RCS simulation and a spatio-temporal-frequency
//! graph attention convolutional network for two-class aircraft recognition.
//!
//! The crate is organised bottom-up:
//!
//! * [`sim`] synthesises per-radar RCS time series from aircraft kinematics,
//!   micro-motion and a surrogate scattering pattern.
//! * [`graph`] builds the weighted radar graph, normalises signals, splits and
//!   serialises datasets.
//! * [`nn`] holds hand-differentiated layers (GRU, temporal attention, graph
//!   convolution, decoder), the composed model and Adam.
//! * [`experiment`] trains, evaluates, runs baselines, voting ensembles,
//!   ablations and SNR sweeps.
//!
//! The numerical layers are generic over [`Scalar`]; the aliases below pin the
//! 64-bit instantiation used by the simulator and experiment harness.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod nn;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use nn::Model;
pub use scalar::Scalar;

/// Model parameters in 64-bit precision.
pub type Params = nn::ModelParams<f64>;
/// Model parameters in 32-bit precision.
pub type Params32 = nn::ModelParams<f32>;
/// Adam state in 64-bit precision.
pub type Adam = nn::AdamState<f64>;
/// Row-major dense tensor in 64-bit precision.
pub type Tensor = nn::Tensor<f64>;
/// Radar graph in 64-bit precision.
pub type RadarGraph = graph::RadarGraph<f64>;
