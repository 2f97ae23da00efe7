use super::{AbstractScenario, AbstractionError, ParticipantSpec, SceneDescription};
use crate::vocab::{
    Action, RelativePosition, RoadType, Role, TrafficSignal, UnknownToken, VehicleType,
};

pub const CHANGE_LANE_NOTE: &str = "undirected lane change read as change_left";

fn canon(text: &str) -> String {
    let lowered = text.trim().to_lowercase().replace(['-', '_'], " ");
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn unknown(kind: &'static str, text: &str) -> UnknownToken {
    UnknownToken {
        kind,
        token: text.trim().to_string(),
    }
}

pub fn normalize_road(text: &str) -> Result<RoadType, UnknownToken> {
    Ok(match canon(text).as_str() {
        "straight" | "straight road" | "road" | "highway" => RoadType::Straight,
        "intersection"
        | "crossroad"
        | "crossroads"
        | "4 way intersection"
        | "four way intersection" => RoadType::Intersection,
        "t junction" | "t intersection" | "tjunction" | "three way intersection" => {
            RoadType::TJunction
        }
        _ => return Err(unknown("road type", text)),
    })
}

fn normalize_signal(text: &str) -> Result<TrafficSignal, UnknownToken> {
    Ok(match canon(text).as_str() {
        "none" | "no signal" | "no" => TrafficSignal::None,
        "light green" | "green" | "green light" => TrafficSignal::LightGreen,
        "light red" | "red" | "red light" => TrafficSignal::LightRed,
        "stop sign" | "stop" => TrafficSignal::StopSign,
        _ => return Err(unknown("traffic signal", text)),
    })
}

/// Maps a behavior phrase to an action. The note is set when the phrase
/// leaves a choice open and a default was taken.
pub fn normalize_action(text: &str) -> Result<(Action, Option<&'static str>), UnknownToken> {
    use Action::*;
    let a = match canon(text).as_str() {
        "follow lane" | "follow" | "lane following" | "keep lane" | "follow the lane" => FollowLane,
        "change left"
        | "change lane left"
        | "lane change left"
        | "change to left lane"
        | "change lane to the left" => ChangeLeft,
        "change right"
        | "change lane right"
        | "lane change right"
        | "change to right lane"
        | "change lane to the right" => ChangeRight,
        "change lane" | "lane change" | "change lanes" => {
            return Ok((ChangeLeft, Some(CHANGE_LANE_NOTE)))
        }
        "turn left" | "left turn" => TurnLeft,
        "turn right" | "right turn" => TurnRight,
        "cross" | "crossing" | "go across" | "cross the road" | "cross the intersection" => Cross,
        "accelerate" | "speed up" => Accelerate,
        "decelerate" | "slow down" => Decelerate,
        "brake" | "hard brake" | "emergency brake" => Brake,
        "stop" | "stopped" | "park" => Stop,
        "drive through" | "pass through" => DriveThrough,
        "walk along" | "walk along the road" => WalkAlong,
        "walk across" => WalkAcross,
        "stand" | "standing" | "wait" => Stand,
        _ => return Err(unknown("action", text)),
    };
    Ok((a, None))
}

pub fn normalize_position(text: &str) -> Result<RelativePosition, UnknownToken> {
    use RelativePosition::*;
    Ok(match canon(text).as_str() {
        "ahead" | "front" | "in front" | "in front of ego" => Ahead,
        "behind" | "rear" | "back" => Behind,
        "left front" | "front left" => LeftFront,
        "right front" | "front right" => RightFront,
        "left behind" | "left rear" | "rear left" | "behind left" => LeftBehind,
        "right behind" | "right rear" | "rear right" | "behind right" => RightBehind,
        "left vertical" | "vertical left" | "left crossing" => LeftVertical,
        "right vertical" | "vertical right" | "right crossing" => RightVertical,
        "opposite" | "oncoming" | "opposite lane" => Opposite,
        _ => return Err(unknown("relative position", text)),
    })
}

fn normalize_vehicle(text: &str) -> Result<VehicleType, UnknownToken> {
    Ok(match canon(text).as_str() {
        "car" | "sedan" | "vehicle" | "suv" => VehicleType::Car,
        "truck" | "lorry" | "bus" | "van" => VehicleType::Truck,
        _ => return Err(unknown("vehicle type", text)),
    })
}

struct Fields<'a> {
    head: Option<&'a str>,
    pos: Option<&'a str>,
    behaviors: Option<&'a str>,
}

fn fields(rest: &str, line: usize) -> Result<Fields<'_>, AbstractionError> {
    let mut f = Fields {
        head: None,
        pos: None,
        behaviors: None,
    };
    for (i, part) in rest.split(';').enumerate() {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        match part.split_once(':') {
            Some((k, v)) => match canon(k).as_str() {
                "pos" | "position" => f.pos = Some(v),
                "behaviors" | "behavior" | "behaviours" => f.behaviors = Some(v),
                other => {
                    return Err(AbstractionError::Syntax(
                        line,
                        format!("unknown field `{other}`"),
                    ))
                }
            },
            None if i == 0 => f.head = Some(part),
            None => {
                return Err(AbstractionError::Syntax(
                    line,
                    format!("unexpected `{part}`"),
                ))
            }
        }
    }
    Ok(f)
}

fn behaviors(
    text: Option<&str>,
    line: usize,
    notes: &mut Vec<String>,
) -> Result<Vec<Action>, AbstractionError> {
    let text = text.ok_or_else(|| AbstractionError::Syntax(line, "missing BEHAVIORS".into()))?;
    let mut out = Vec::new();
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (a, note) =
            normalize_action(tok).map_err(|source| AbstractionError::Token { line, source })?;
        if let Some(n) = note {
            notes.push(format!("line {line}: {n}"));
        }
        out.push(a);
    }
    Ok(out)
}

/// Parses the line grammar into an abstract scenario. Lines that match no
/// element are recorded in the scenario notes.
pub fn parse_description(desc: &SceneDescription) -> Result<AbstractScenario, AbstractionError> {
    if desc.raw_text.trim().is_empty() {
        return Err(AbstractionError::EmptyDescription);
    }
    let mut road = None;
    let mut signal = None;
    let mut ego: Option<ParticipantSpec> = None;
    let mut others = Vec::new();
    let mut notes = Vec::new();
    for (idx, raw) in desc.raw_text.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        let Some((key, rest)) = text.split_once(':') else {
            notes.push(format!("ignored line {line}: {text}"));
            continue;
        };
        let key = key.trim().to_uppercase();
        let base = key.split('[').next().unwrap_or("").trim();
        let token_err = |source| AbstractionError::Token { line, source };
        match base {
            "ROAD" => {
                if road.is_some() {
                    return Err(AbstractionError::Syntax(line, "second ROAD line".into()));
                }
                road = Some(normalize_road(rest).map_err(token_err)?);
            }
            "SIGNAL" => signal = Some(normalize_signal(rest).map_err(token_err)?),
            "OBSTACLES" => {}
            "EGO" => {
                if ego.is_some() {
                    return Err(AbstractionError::Syntax(line, "second EGO line".into()));
                }
                let f = fields(rest, line)?;
                let vt = f
                    .head
                    .map_or(Ok(VehicleType::Car), normalize_vehicle)
                    .map_err(token_err)?;
                ego = Some(ParticipantSpec {
                    role: Role::Ego,
                    vehicle_type: vt,
                    behaviors: behaviors(f.behaviors, line, &mut notes)?,
                    relative_position: None,
                });
            }
            "NPC" | "PEDESTRIAN" => {
                let f = fields(rest, line)?;
                let pedestrian = base == "PEDESTRIAN";
                let vehicle_type = if pedestrian {
                    VehicleType::None
                } else {
                    let head = f.head.ok_or_else(|| {
                        AbstractionError::Syntax(line, "missing vehicle type".into())
                    })?;
                    normalize_vehicle(head).map_err(token_err)?
                };
                let pos = f
                    .pos
                    .ok_or_else(|| AbstractionError::Syntax(line, "missing POS".into()))?;
                others.push(ParticipantSpec {
                    role: if pedestrian {
                        Role::Pedestrian
                    } else {
                        Role::Npc
                    },
                    vehicle_type,
                    behaviors: behaviors(f.behaviors, line, &mut notes)?,
                    relative_position: Some(normalize_position(pos).map_err(token_err)?),
                });
            }
            _ => notes.push(format!("ignored line {line}: {text}")),
        }
    }
    let ego = ego.ok_or(AbstractionError::NoEgo)?;
    let road_type = road.ok_or(AbstractionError::NoRoad)?;
    let mut participants = vec![ego];
    participants.extend(others);
    let scenario = AbstractScenario {
        road_type,
        traffic_signal: signal,
        participants,
        notes,
    };
    scenario.validate()?;
    Ok(scenario)
}
