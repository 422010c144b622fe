//! The modeling track: Markov behaviour sequences, kinematic expansion,
//! rule-based relabelling and feature synthesis.

mod crosscheck;
mod dataset;
mod events;
mod kinematics;
mod synth;

pub use crosscheck::{cross_check, CrossCheck, SegmentCheck, MODEL_TOLERANCE};
pub use dataset::{
    generate_dataset, parse_dataset, read_dataset, simulate_sequence, write_dataset, write_dataset_file, ClassBalance,
    LabeledSequence, LengthDist, SequenceRecord, SimConfig,
};
pub use events::{sample_sim_events, DwellTimes, SegmentChain, TransitionMatrix};
pub use kinematics::{
    expand_kinematics, map_to_real_events, segments, KinematicParams, RoomSpec, Trapezoid, REFERENCE_RATE_HZ,
};
pub use synth::{synthesize_features, FeatureSynthParams};
