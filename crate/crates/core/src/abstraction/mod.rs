//! Abstract scenarios from scene descriptions.
//!
//! A provider turns key frames or an annotation log into a line-oriented
//! description, which [`parse_description`] turns into an [`AbstractScenario`].

mod annotation;
mod grammar;
mod prompt;
mod provider;

pub use annotation::{AnnotatedParticipant, AnnotationLog, TimedPoint};
pub use grammar::{
    normalize_action, normalize_position, normalize_road, parse_description, CHANGE_LANE_NOTE,
};
pub use prompt::{build_understanding_prompt, FORMAT_INSTRUCTION};
pub use provider::{
    abstract_scene, describe_scene, MockProvider, ProviderRequest, RemoteConfig, RemoteProvider,
    SceneProvider, ENV_KEY, ENV_URL,
};

use crate::vocab::{
    Action, RelativePosition, RoadType, Role, TrafficSignal, UnknownToken, VehicleType,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantSpec {
    pub role: Role,
    pub vehicle_type: VehicleType,
    pub behaviors: Vec<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_position: Option<RelativePosition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbstractScenario {
    pub road_type: RoadType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic_signal: Option<TrafficSignal>,
    pub participants: Vec<ParticipantSpec>,
    /// Assumptions made while parsing and ignored input lines.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AbstractScenario {
    pub fn ego(&self) -> Option<&ParticipantSpec> {
        self.participants.iter().find(|p| p.role == Role::Ego)
    }

    /// Non-ego participants in declaration order.
    pub fn others(&self) -> impl Iterator<Item = &ParticipantSpec> {
        self.participants.iter().filter(|p| p.role != Role::Ego)
    }

    pub fn validate(&self) -> Result<(), AbstractionError> {
        let egos = self
            .participants
            .iter()
            .filter(|p| p.role == Role::Ego)
            .count();
        if egos != 1 {
            return Err(AbstractionError::Invalid(format!(
                "{egos} ego participants, expected exactly one"
            )));
        }
        for (i, p) in self.participants.iter().enumerate() {
            if p.behaviors.is_empty() {
                return Err(AbstractionError::Invalid(format!(
                    "participant {i} has no behaviors"
                )));
            }
            match p.role {
                Role::Pedestrian => {
                    if p.vehicle_type != VehicleType::None {
                        return Err(AbstractionError::Invalid(format!(
                            "pedestrian {i} has a vehicle type"
                        )));
                    }
                    if let Some(a) = p.behaviors.iter().find(|a| !a.is_pedestrian_action()) {
                        return Err(AbstractionError::Invalid(format!(
                            "pedestrian {i} cannot `{a}`"
                        )));
                    }
                }
                Role::Ego | Role::Npc => {
                    if p.vehicle_type == VehicleType::None {
                        return Err(AbstractionError::Invalid(format!(
                            "vehicle {i} has no vehicle type"
                        )));
                    }
                    if let Some(a) = p.behaviors.iter().find(|a| !a.is_vehicle_action()) {
                        return Err(AbstractionError::Invalid(format!(
                            "vehicle {i} cannot `{a}`"
                        )));
                    }
                }
            }
            if p.role != Role::Ego && p.relative_position.is_none() {
                return Err(AbstractionError::Invalid(format!(
                    "participant {i} has no relative position"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("abstract scenario serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionSource {
    Mock,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub raw_text: String,
    pub source: DescriptionSource,
}

#[derive(Debug, thiserror::Error)]
pub enum AbstractionError {
    #[error("line {line}: {source}")]
    Token {
        line: usize,
        #[source]
        source: UnknownToken,
    },
    #[error("description names no ego vehicle")]
    NoEgo,
    #[error("description names no road type")]
    NoRoad,
    #[error("description is empty")]
    EmptyDescription,
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("invalid abstract scenario: {0}")]
    Invalid(String),
    #[error("provider failed after {attempts} attempt(s): {message}")]
    Provider { attempts: usize, message: String },
    #[error("provider not configured: {0}")]
    Config(String),
    #[error("annotation log: {0}")]
    Annotation(String),
}
