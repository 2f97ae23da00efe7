/// Appended to the scene prompt so replies follow the line grammar.
pub const FORMAT_INSTRUCTION: &str = "Answer with one element per line, using exactly these forms:\n\
ROAD: <straight | intersection | t_junction>\n\
SIGNAL: <none | light_green | light_red | stop_sign>\n\
EGO: <car | truck>; BEHAVIORS: <behavior>, <behavior>, ...\n\
NPC[<n>]: <car | truck>; POS: <position>; BEHAVIORS: <behavior>, ...\n\
PEDESTRIAN[<n>]: POS: <position>; BEHAVIORS: <behavior>, ...\n\
Behaviors: follow_lane, change_left, change_right, turn_left, turn_right, cross, accelerate, decelerate, brake, stop, drive_through, walk_along, walk_across, stand.\n\
Positions: ahead, behind, left_front, right_front, left_behind, right_behind, left_vertical, right_vertical, opposite.";

/// Scene-understanding prompt for a sequence of `frame_count` key frames.
pub fn build_understanding_prompt(frame_count: usize) -> Result<String, super::AbstractionError> {
    if frame_count == 0 {
        return Err(super::AbstractionError::Invalid(
            "at least one key frame is required".into(),
        ));
    }
    Ok(format!(
        "You are an autonomous driving expert who specializes in identifying dynamic objects in traffic scenarios. \
I will show you a series of traffic pictures taken by the camera of the vehicle you are driving. \
These pictures are from the same one scenario. \
Please use concise and structured language to describe the following objects in the scenario: \
road types, behaviors of the vehicle you are driving, behaviors and positions of traffic participants \
(all vehicles and pedestrians, other signals and obstacles within the visible range).\n\
({frame_count} pictures attached.)\n\n{FORMAT_INSTRUCTION}"
    ))
}
