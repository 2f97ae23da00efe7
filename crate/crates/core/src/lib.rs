//! Scenario extraction from traffic video and violation search for
//! autonomous-driving policies.

pub mod abstraction;
pub mod flowkey;
pub mod geom;
pub mod inspect;
pub mod map;
pub mod metrics;
pub mod num;
pub mod scenlang;
pub mod script;
pub mod search;
pub mod sim;
pub mod synth;
pub mod vocab;

pub use num::Scalar;

pub type MotionStateVector = flowkey::MotionStateVector<f64>;
pub type KeyFrameSequence = flowkey::KeyFrameSequence<f64>;
pub type CostModel = metrics::CostModel<f64>;
