use super::ast::*;
use crate::map::RoadMap;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RefError {
    #[error("scenario targets map `{found}` but `{expected}` is loaded")]
    MapMismatch { expected: String, found: String },
    #[error("{who}: unknown lane `{lane}`")]
    UnknownLane { who: String, lane: String },
    #[error("{who}: offset {offset} exceeds length {length:.2} of lane `{lane}`")]
    OffsetOutOfRange {
        who: String,
        lane: String,
        offset: f64,
        length: f64,
    },
    #[error("{who}: vehicles must use lane positions")]
    FreePositionForVehicle { who: String },
}

/// Check every lane reference against the loaded map.
pub fn validate_refs(s: &ConcreteScenario, map: &RoadMap) -> Vec<RefError> {
    let mut out = Vec::new();
    if s.map_id != map.id {
        out.push(RefError::MapMismatch {
            expected: map.id.to_string(),
            found: s.map_id.clone(),
        });
    }
    let lane = |who: &str, lp: &LanePosition, out: &mut Vec<RefError>| match map.lane(&lp.lane_id) {
        None => out.push(RefError::UnknownLane {
            who: who.into(),
            lane: lp.lane_id.clone(),
        }),
        Some(l) if lp.offset > l.length() + 1e-6 => out.push(RefError::OffsetOutOfRange {
            who: who.into(),
            lane: lp.lane_id.clone(),
            offset: lp.offset,
            length: l.length(),
        }),
        _ => {}
    };
    lane("ego start", &s.ego.start, &mut out);
    lane("ego destination", &s.ego.destination, &mut out);
    for t in s.participants() {
        for w in &t.waypoints {
            match &w.position {
                Position::Lane(lp) => lane(&t.name, lp, &mut out),
                Position::Free { .. } if t.participant_type.is_vehicle() => {
                    out.push(RefError::FreePositionForVehicle {
                        who: t.name.clone(),
                    })
                }
                Position::Free { .. } => {}
            }
        }
    }
    out
}
