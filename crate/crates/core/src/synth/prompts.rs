//! Prompt patterns for remote scenario program generation.

use super::{assign_ego_task, divide_road, RoadDivision, RoadSelection, SynthError, SynthParams};
use crate::abstraction::AbstractScenario;
use crate::map::RoadMap;
use crate::vocab::RelativePosition;
use std::fmt::Write;

const EXAMPLE_PROGRAM: &str = r#"map standard;
ego car {
    start ("lane_222" -> 10);
    destination ("lane_223" -> 110);
}
npc npc_1 car (("lane_223" -> 30, , 5), ("lane_223" -> 100, , 8));
assert {
    never collision;
    always clearance >= 2;
    eventually within 60 at_destination 3;
}"#;

pub fn instruction_prompt(count: usize) -> String {
    format!(
        "You are an expert in autonomous driving system (ADS) testing. We want you to generate {count} \
         test scenarios according to the input to challenge the ego vehicle (which connects to ADS)."
    )
}

pub fn context_prompt() -> String {
    format!(
        "A scenario to test ADS is shown as follows:\n{EXAMPLE_PROGRAM}\n\
         The ego vehicle is given by its type (car or truck), a start position and a destination. \
         A lane position is written (\"<lane id>\" -> <offset in meters along the lane>).\n\
         Each NPC vehicle and pedestrian is given by a name, a type and a list of waypoints. \
         A waypoint is (<position>, <lateral offset in meters, positive to the left, may be empty>, \
         <speed in m/s>[, at <time in s>]). A pedestrian position may also be a map point (x, y)."
    )
}

pub fn ego_determination_prompt(road: &RoadSelection, start: &str, destination: &str) -> String {
    let mut s = String::from("The input road has these lanes (lane ID, direction in degrees, length in meters):\n");
    for l in &road.info {
        let _ = writeln!(
            s,
            "  {}: {:.0} deg, {:.1} m",
            l.id,
            l.heading.to_degrees(),
            l.length
        );
    }
    let _ = write!(
        s,
        "On the input road, S and D are the examples of ego vehicle's initial position and destination \
         for \"change lane\" task. S is defined by (\"lane_222\"->10), D is defined by (\"lane_223\"->110).\n\
         For this scenario use S = {start} and D = {destination}, whose route performs the ego behaviors."
    );
    s
}

pub fn road_divisions_prompt(divisions: &[RoadDivision]) -> String {
    let names: Vec<String> = divisions.iter().map(|d| d.division_id.to_string()).collect();
    let mut s = format!(
        "The road for test scenario generation is divided into {} divisions: {} correspond to relative \
         positions according to the position of participant relative to the ego vehicle's initial position.\n",
        divisions.len(),
        names.join(", ")
    );
    for d in divisions {
        let _ = writeln!(
            s,
            "  {}: lanes {}, from {:.1} m to {:.1} m",
            d.division_id,
            d.lanes.join(", "),
            d.longitudinal_range.0,
            d.longitudinal_range.1
        );
    }
    s
}

pub fn participant_trajectory_prompt(abs: &AbstractScenario) -> String {
    let mut s = String::from(
        "On the input road, for an NPC vehicle that performs \"follow lane\" behavior (NPC's relative position \
         is \"right front\"), its waypoints are defined as:((\"lane_223\"->30, ,5),(\"lane_223\"->100, ,8))\n\
         Generate the waypoints of these participants, named in this order:\n",
    );
    let (mut n, mut p) = (0, 0);
    for spec in abs.others() {
        let name = if spec.role == crate::vocab::Role::Pedestrian {
            p += 1;
            format!("ped_{p}")
        } else {
            n += 1;
            format!("npc_{n}")
        };
        let behaviors: Vec<String> = spec.behaviors.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(
            s,
            "  {name}: {} {}, behaviors {}, relative position {}",
            spec.role,
            spec.vehicle_type,
            behaviors.join(", "),
            spec.relative_position.unwrap_or(RelativePosition::Ahead)
        );
    }
    s
}

pub fn assertion_prompt(params: &SynthParams) -> String {
    format!(
        "Finish the program with an assert block checking that the ego vehicle never collides, \
         always keeps a clearance of at least {} m from every participant, and eventually reaches \
         its destination within {} s and {} m.",
        params.clearance, params.deadline, params.destination_radius
    )
}

/// Full generation prompt for one abstract scenario.
pub fn build_generation_prompt(
    abs: &AbstractScenario,
    map: &RoadMap,
    road: &RoadSelection,
    params: &SynthParams,
) -> Result<String, SynthError> {
    let ego = abs
        .ego()
        .ok_or(SynthError::Abstract(crate::abstraction::AbstractionError::NoEgo))?;
    let needs_rear = abs.others().any(|p| {
        matches!(
            p.relative_position,
            Some(RelativePosition::Behind | RelativePosition::LeftBehind | RelativePosition::RightBehind)
        )
    });
    let task = assign_ego_task(map, road, ego, needs_rear, params)?;
    let divisions = divide_road(map, road, &task.start, params);
    let pos = |lp: &crate::scenlang::LanePosition| format!("(\"{}\"->{})", lp.lane_id, lp.offset);
    Ok([
        instruction_prompt(1),
        context_prompt(),
        format!("Map: {}. Abstract scenario:\n{}", map.id, abs.to_json()),
        ego_determination_prompt(road, &pos(&task.start), &pos(&task.destination)),
        road_divisions_prompt(&divisions),
        participant_trajectory_prompt(abs),
        assertion_prompt(params),
        "Reply with the scenario program only.".to_string(),
    ]
    .join("\n\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenlang;

    #[test]
    fn example_program_parses() {
        let s = scenlang::parse(EXAMPLE_PROGRAM).unwrap();
        assert_eq!(s.npcs[0].waypoints[1].speed, 8.0);
    }

    #[test]
    fn patterns() {
        assert!(instruction_prompt(3).contains("generate 3"));
        assert!(context_prompt().contains("lane_223"));
    }
}
