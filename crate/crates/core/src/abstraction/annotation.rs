use super::AbstractionError;
use crate::vocab::Role;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// One participant as written by a human annotator. Text fields keep the
/// annotator's phrasing and are normalized when the description is parsed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedParticipant {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_position: Option<String>,
    pub behaviors: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<TimedPoint>,
}

/// Ground-truth annotation of a video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationLog {
    pub road_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic_signal: Option<String>,
    pub participants: Vec<AnnotatedParticipant>,
}

impl AnnotationLog {
    pub fn load(path: &Path) -> Result<Self, AbstractionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AbstractionError::Annotation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| AbstractionError::Annotation(format!("{}: {e}", path.display())))
    }

    pub fn check(&self) -> Result<(), AbstractionError> {
        let egos = self
            .participants
            .iter()
            .filter(|p| p.role == Role::Ego)
            .count();
        if egos != 1 {
            return Err(AbstractionError::Annotation(format!(
                "{egos} ego entries, expected one"
            )));
        }
        for (i, p) in self.participants.iter().enumerate() {
            if p.behaviors.is_empty() {
                return Err(AbstractionError::Annotation(format!(
                    "participant {i} has no behaviors"
                )));
            }
            if p.role != Role::Ego && p.relative_position.is_none() {
                return Err(AbstractionError::Annotation(format!(
                    "participant {i} has no relative position"
                )));
            }
            if p.role == Role::Npc && p.vehicle_type.is_none() {
                return Err(AbstractionError::Annotation(format!(
                    "vehicle {i} has no type"
                )));
            }
            let text = p
                .behaviors
                .iter()
                .chain(&p.vehicle_type)
                .chain(&p.relative_position);
            if let Some(bad) = text.clone().find(|s| s.contains([';', ',', '\n', ':'])) {
                return Err(AbstractionError::Annotation(format!(
                    "participant {i}: `{bad}` contains a separator"
                )));
            }
        }
        Ok(())
    }
}
