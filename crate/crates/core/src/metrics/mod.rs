//! Behavior and trajectory distances, and extraction/synthesis accuracy.

mod distance;
mod edit;
mod eval;

pub use distance::{
    resample, scenario_distance, trajectory_distance, variation_range, DEFAULT_RESAMPLE,
};
pub use edit::{behavior_distance, CostModel, CostModelFile};
pub use eval::{category_elements, csc, sua, Category, Element};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("resample count must be at least 2, got {0}")]
    ResampleCount(usize),
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("scenario without participants")]
    NoParticipants,
    #[error("{0} extractions for {1} ground-truth scenarios")]
    CountMismatch(usize, usize),
    #[error("no scenarios to score")]
    Empty,
    #[error("invalid cost model: {0}")]
    CostModel(String),
}
