//! Multi-task Wi-Fi sensing toolkit.
//!
//! The crate is organised along the three tracks of the framework:
//!
//! * [`domain`] holds the shared vocabulary: event sets, feature sets, task
//!   composition and the per-event feature range table.
//! * [`csi`] and [`features`] are the physical layer: a single-path CSI
//!   forward model, a trace format, and the correlation / DSER / PLCR
//!   extractors.
//! * [`simulator`] is the modeling track: Markov behaviour sequences expanded
//!   into trajectories, relabelled into real events, and turned into feature
//!   sequences.
//! * [`inverse`] is the learned inverse model that maps feature sequences back
//!   to per-frame events and positions.
//! * [`eval`] scores predictions and runs the experiment protocols.

pub mod config;
pub mod csi;
pub mod domain;
pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod inverse;
pub mod rng;
pub mod simulator;

pub use config::ExperimentConfig;
pub use csi::{CsiFrame, RadioConfig};
pub use domain::{FeatureDescriptor, FeatureKind, FeatureRangeTable, RealEvent, SimEvent};
pub use error::{Error, Result};
pub use features::{FeatureFrame, WindowConfig};
pub use geometry::{Point2, Trajectory};
pub use inverse::{FramePrediction, InverseModel, ModelConfig, TrainConfig};
pub use simulator::{KinematicParams, LabeledSequence, RoomSpec, TransitionMatrix};
