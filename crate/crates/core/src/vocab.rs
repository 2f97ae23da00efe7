//! Closed vocabularies shared by every stage.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{token}`")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident, $kind:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownToken { kind: $kind, token: s.to_string() }),
                }
            }
        }
    };
}

token_enum!(
    /// A participant behavior.
    Action, "action" {
        FollowLane => "follow_lane",
        ChangeLeft => "change_left",
        ChangeRight => "change_right",
        TurnLeft => "turn_left",
        TurnRight => "turn_right",
        Cross => "cross",
        Accelerate => "accelerate",
        Decelerate => "decelerate",
        Brake => "brake",
        Stop => "stop",
        DriveThrough => "drive_through",
        WalkAlong => "walk_along",
        WalkAcross => "walk_across",
        Stand => "stand",
    }
);

impl Action {
    pub fn is_vehicle_action(self) -> bool {
        !matches!(self, Action::WalkAlong | Action::WalkAcross | Action::Stand)
    }

    pub fn is_pedestrian_action(self) -> bool {
        matches!(
            self,
            Action::WalkAlong | Action::WalkAcross | Action::Stand | Action::Cross
        )
    }
}

token_enum!(RoadType, "road type" {
    Straight => "straight",
    Intersection => "intersection",
    TJunction => "t_junction",
});

token_enum!(TrafficSignal, "traffic signal" {
    None => "none",
    LightGreen => "light_green",
    LightRed => "light_red",
    StopSign => "stop_sign",
});

token_enum!(Role, "role" {
    Ego => "ego",
    Npc => "npc",
    Pedestrian => "pedestrian",
});

token_enum!(VehicleType, "vehicle type" {
    Car => "car",
    Truck => "truck",
    None => "none",
});

token_enum!(RelativePosition, "relative position" {
    Ahead => "ahead",
    Behind => "behind",
    LeftFront => "left_front",
    RightFront => "right_front",
    LeftBehind => "left_behind",
    RightBehind => "right_behind",
    LeftVertical => "left_vertical",
    RightVertical => "right_vertical",
    Opposite => "opposite",
});

token_enum!(ParticipantType, "participant type" {
    Car => "car",
    Truck => "truck",
    Pedestrian => "pedestrian",
});

impl ParticipantType {
    /// Footprint length and width in meters.
    pub fn footprint(self) -> (f64, f64) {
        match self {
            ParticipantType::Car => (4.7, 1.8),
            ParticipantType::Truck => (8.0, 2.5),
            ParticipantType::Pedestrian => (0.5, 0.5),
        }
    }

    pub fn is_vehicle(self) -> bool {
        self != ParticipantType::Pedestrian
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_round_trip() {
        for a in Action::ALL {
            assert_eq!(a.as_str().parse::<Action>().unwrap(), *a);
            assert_eq!(
                serde_json::to_string(a).unwrap(),
                format!("\"{}\"", a.as_str())
            );
        }
        assert_eq!(Action::ALL.len(), 14);
        assert_eq!(RelativePosition::ALL.len(), 9);
        let e = "teleport".parse::<Action>().unwrap_err();
        assert_eq!(e.to_string(), "unknown action `teleport`");
    }
}
