//! Concrete scenario generation from abstract scenarios: road selection,
//! ego task, road divisions, participant templates and assertions, with
//! an inspect-and-repair loop.

mod prompts;
mod road;
mod templates;

pub use prompts::{
    assertion_prompt, build_generation_prompt, context_prompt, ego_determination_prompt,
    instruction_prompt, participant_trajectory_prompt, road_divisions_prompt,
};
pub use road::{
    assign_ego_task, divide_road, route_actions, select_road, RoadDivision, RoadSelection,
};
pub use templates::{gen_participant_trajectory, Placement};

use crate::abstraction::{
    AbstractScenario, AbstractionError, ParticipantSpec, ProviderRequest, SceneProvider,
};
use crate::inspect::{self, check_feasibility, InspectParams};
use crate::map::{Maneuver, RoadMap};
use crate::scenlang::{self, Assertion, ConcreteScenario, TrajectoryDef};
use crate::vocab::{Action, ParticipantType, RelativePosition, Role, RoadType, VehicleType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("the map has no {0} road")]
    NoRoad(RoadType),
    #[error("no ego task on a {road_type} road performs {behaviors:?}")]
    EgoTask {
        road_type: RoadType,
        behaviors: Vec<Action>,
    },
    #[error("the road has no {0} division")]
    NoDivision(RelativePosition),
    #[error("template: {0}")]
    Template(String),
    #[error("invalid abstract scenario: {0}")]
    Abstract(#[source] AbstractionError),
    #[error("provider: {0}")]
    Provider(#[source] AbstractionError),
    #[error("generation failed after {rounds} repair round(s): {}", .diagnostics.join("; "))]
    GenerationFailed {
        rounds: usize,
        diagnostics: Vec<String>,
    },
}

/// Placement and template constants (meters, seconds, m/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub ego_start_offset: f64,
    /// Ego start when a participant has to fit behind it.
    pub ego_start_offset_rear: f64,
    pub destination_margin: f64,
    pub change_distance: f64,
    pub exit_offset: f64,
    pub successor_offset: f64,
    pub front_gap: f64,
    pub behind_gap: f64,
    pub slot_spacing: f64,
    /// Offset on a side approach where vehicles start.
    pub side_start: f64,
    /// Distance before the junction where pedestrians cross a side approach.
    pub crosswalk_setback: f64,
    pub base_speed_factor: f64,
    pub follow_distance: f64,
    pub speed_step: f64,
    pub comfort_accel: f64,
    pub decel_floor_ratio: f64,
    pub decel_floor: f64,
    pub brake_decel: f64,
    pub stop_dwell: f64,
    /// Lane-change length in seconds of travel, at least `min_change_distance`.
    pub change_time: f64,
    pub min_change_distance: f64,
    pub exit_distance: f64,
    pub walk_speed: f64,
    pub walk_distance: f64,
    pub stand_dwell: f64,
    pub curb_margin: f64,
    pub repair_rounds: usize,
    pub jitter_offset: f64,
    pub jitter_speed: f64,
    pub clearance: f64,
    pub deadline: f64,
    pub destination_radius: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            ego_start_offset: 10.0,
            ego_start_offset_rear: 40.0,
            destination_margin: 20.0,
            change_distance: 100.0,
            exit_offset: 30.0,
            successor_offset: 50.0,
            front_gap: 15.0,
            behind_gap: 15.0,
            slot_spacing: 15.0,
            side_start: 50.0,
            crosswalk_setback: 4.0,
            base_speed_factor: 0.8,
            follow_distance: 25.0,
            speed_step: 4.0,
            comfort_accel: 1.5,
            decel_floor_ratio: 0.05,
            decel_floor: 0.5,
            brake_decel: 4.0,
            stop_dwell: 2.0,
            change_time: 2.5,
            min_change_distance: 10.0,
            exit_distance: 20.0,
            walk_speed: 1.4,
            walk_distance: 20.0,
            stand_dwell: 3.0,
            curb_margin: 1.0,
            repair_rounds: 3,
            jitter_offset: 10.0,
            jitter_speed: 0.2,
            clearance: 2.0,
            deadline: 60.0,
            destination_radius: 3.0,
        }
    }
}

/// Where generation runs.
pub enum GenerationMode<'a> {
    Template,
    Remote(&'a dyn SceneProvider),
}

/// Appends the collision, clearance and arrival assertions unless the
/// scenario already has assertions.
pub fn attach_assertions(mut s: ConcreteScenario, params: &SynthParams) -> ConcreteScenario {
    if s.assertions.is_empty() {
        s.assertions = vec![
            Assertion::NeverCollision,
            Assertion::AlwaysClearance {
                min: params.clearance,
            },
            Assertion::EventuallyAtDestination {
                within: params.deadline,
                radius: params.destination_radius,
            },
        ];
    }
    s
}

fn participant_type(p: &ParticipantSpec) -> ParticipantType {
    match (p.role, p.vehicle_type) {
        (Role::Pedestrian, _) => ParticipantType::Pedestrian,
        (_, VehicleType::Truck) => ParticipantType::Truck,
        _ => ParticipantType::Car,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Group {
    Front,
    Behind,
    Side(RelativePosition),
}

fn group_of(d: RelativePosition) -> Group {
    use RelativePosition::*;
    match d {
        Ahead | LeftFront | RightFront => Group::Front,
        Behind | LeftBehind | RightBehind => Group::Behind,
        other => Group::Side(other),
    }
}

#[derive(Clone, Copy, Debug)]
struct Jitter {
    offset: f64,
    speed: f64,
}

fn junction_maneuver(a: Action) -> Option<Maneuver> {
    match a {
        Action::TurnLeft => Some(Maneuver::TurnLeft),
        Action::TurnRight => Some(Maneuver::TurnRight),
        Action::Cross => Some(Maneuver::Straight),
        _ => None,
    }
}

/// Lowest speed limit among the connectors a participant will use.
fn connector_limit(map: &RoadMap, lanes: &[usize], behaviors: &[Action]) -> f64 {
    let mut limit = f64::INFINITY;
    for &b in behaviors {
        if let Some(m) = junction_maneuver(b) {
            for &l in lanes {
                for s in map.successors(l) {
                    if map.lane_at(s).def.junction && map.connector_maneuver(s) == m {
                        limit = limit.min(map.lane_at(s).def.speed_limit);
                    }
                }
            }
        }
    }
    limit
}

struct Draft {
    scenario: ConcreteScenario,
    /// Template failures by participant name.
    failures: Vec<(String, String)>,
}

fn draft(
    abs: &AbstractScenario,
    map: &RoadMap,
    params: &SynthParams,
    jitter: &[Jitter],
) -> Result<Draft, SynthError> {
    let road = select_road(map, abs.road_type)?;
    let ego = abs
        .ego()
        .ok_or(SynthError::Abstract(AbstractionError::NoEgo))?;
    let needs_rear = abs
        .others()
        .any(|p| matches!(p.relative_position.map(group_of), Some(Group::Behind)));
    let candidates = road::ego_task_candidates(map, &road, ego, needs_rear, params);
    let first = candidates.first().cloned().ok_or_else(|| SynthError::EgoTask {
        road_type: road.road_type,
        behaviors: ego.behaviors.clone(),
    })?;
    // prefer an ego start from which every required division exists
    let (task, divisions) = candidates
        .into_iter()
        .map(|t| {
            let d = divide_road(map, &road, &t.start, params);
            (t, d)
        })
        .find(|(_, d)| {
            abs.others().all(|p| {
                p.relative_position
                    .is_some_and(|r| d.iter().any(|x| x.division_id == r))
                    || p.role == Role::Pedestrian
            })
        })
        .unwrap_or_else(|| {
            let d = divide_road(map, &road, &first.start, params);
            (first, d)
        });
    let mut scenario = ConcreteScenario {
        map_id: map.id.clone(),
        ego: task.clone(),
        npcs: Vec::new(),
        pedestrians: Vec::new(),
        assertions: Vec::new(),
    };
    let mut failures = Vec::new();
    let mut slots: Vec<(Group, usize)> = Vec::new();
    let (mut n_npc, mut n_ped) = (0, 0);
    for (k, p) in abs.others().enumerate() {
        let kind = participant_type(p);
        let name = if kind == ParticipantType::Pedestrian {
            n_ped += 1;
            format!("ped_{n_ped}")
        } else {
            n_npc += 1;
            format!("npc_{n_npc}")
        };
        let rel = p
            .relative_position
            .ok_or(SynthError::NoDivision(RelativePosition::Ahead))?;
        let division = match divisions.iter().find(|d| d.division_id == rel) {
            Some(d) => d.clone(),
            // pedestrians beside the outermost lane walk on that side's curb
            None if kind == ParticipantType::Pedestrian => {
                let along = match group_of(rel) {
                    Group::Behind => RelativePosition::Behind,
                    _ => RelativePosition::Ahead,
                };
                let mut d = divisions
                    .iter()
                    .find(|d| d.division_id == along)
                    .cloned()
                    .ok_or(SynthError::NoDivision(rel))?;
                d.division_id = rel;
                d
            }
            None => return Err(SynthError::NoDivision(rel)),
        };
        let division = &division;
        let group = group_of(rel);
        let slot = match slots.iter_mut().find(|s| s.0 == group) {
            Some(s) => {
                s.1 += 1;
                s.1
            }
            None => {
                slots.push((group, 0));
                0
            }
        };
        let spacing = params.slot_spacing * slot as f64;
        let lane_ids: Vec<usize> = division
            .lanes
            .iter()
            .filter_map(|id| map.lane_index(id))
            .collect();
        let lane_pick = match (group, p.behaviors.iter().find_map(|b| junction_maneuver(*b))) {
            (Group::Side(_), Some(Maneuver::TurnLeft)) => lane_ids.len().saturating_sub(1),
            _ => 0,
        };
        let lane_len = lane_ids
            .get(lane_pick)
            .map_or(0.0, |&l| map.lane_at(l).length());
        let base_offset = match group {
            Group::Front => task.start.offset + params.front_gap + spacing,
            Group::Behind => task.start.offset - params.behind_gap - spacing,
            Group::Side(_) if kind == ParticipantType::Pedestrian => {
                lane_len - params.crosswalk_setback - spacing
            }
            Group::Side(_) => params.side_start - spacing,
        };
        let j = jitter.get(k).copied().unwrap_or(Jitter {
            offset: 0.0,
            speed: 1.0,
        });
        let offset = (base_offset + j.offset).clamp(0.0, lane_len);
        let lane_limit = lane_ids
            .get(lane_pick)
            .map_or(f64::INFINITY, |&l| map.lane_at(l).def.speed_limit);
        let cap = lane_limit.min(connector_limit(map, &lane_ids, &p.behaviors));
        let mut speed = params.base_speed_factor * cap;
        if p.behaviors.contains(&Action::Accelerate) && cap - params.speed_step > 0.0 {
            speed = speed.min(cap - params.speed_step);
        }
        let speed = (speed * j.speed).min(cap);
        let placement = Placement {
            lane: lane_pick,
            offset,
        };
        let result = gen_participant_trajectory(
            map,
            &name,
            division,
            placement,
            &p.behaviors,
            kind,
            speed,
            params,
        );
        match result {
            Ok(t) => push_participant(&mut scenario, t),
            Err(e) => {
                failures.push((name.clone(), e.to_string()));
                // keep a placeholder so names and order stay aligned
                push_participant(
                    &mut scenario,
                    TrajectoryDef {
                        name,
                        participant_type: kind,
                        waypoints: Vec::new(),
                    },
                );
            }
        }
    }
    let scenario = attach_assertions(scenario, params);
    Ok(Draft { scenario, failures })
}

fn push_participant(s: &mut ConcreteScenario, t: TrajectoryDef) {
    if t.participant_type == ParticipantType::Pedestrian {
        s.pedestrians.push(t);
    } else {
        s.npcs.push(t);
    }
}

/// Problems that make a generated scenario unacceptable, by participant.
pub fn scenario_problems(
    s: &ConcreteScenario,
    map: &RoadMap,
    abs: &AbstractScenario,
    inspect_params: &InspectParams,
) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = scenlang::validate_refs(s, map)
        .into_iter()
        .map(|e| (String::new(), e.to_string()))
        .collect();
    if !out.is_empty() {
        return out;
    }
    for d in check_feasibility(s, map).diagnostics {
        out.push((d.participant.clone(), d.to_string()));
    }
    match inspect::check_semantic_equivalence(s, map, abs, inspect_params) {
        Ok(r) => {
            for d in r.diffs {
                let msg = match d.error {
                    Some(e) => format!("{}: {e}", d.name),
                    None => format!(
                        "{}: expected {:?}, trajectory shows {:?}",
                        d.name, d.expected, d.found
                    ),
                };
                out.push((d.name, msg));
            }
        }
        Err(e) => out.push((String::new(), e.to_string())),
    }
    if let Some(ego) = abs.ego() {
        if let Err(msg) = check_ego_task(s, map, ego) {
            out.push(("ego".into(), msg));
        }
    }
    out
}

fn check_ego_task(s: &ConcreteScenario, map: &RoadMap, ego: &ParticipantSpec) -> Result<(), String> {
    let (Some(a), Some(b)) = (
        map.lane_index(&s.ego.start.lane_id),
        map.lane_index(&s.ego.destination.lane_id),
    ) else {
        return Err("ego lanes are not on the map".into());
    };
    let route = map
        .plan_route((a, s.ego.start.offset), (b, s.ego.destination.offset))
        .ok_or("ego destination is unreachable")?;
    let want: Vec<Action> = ego
        .behaviors
        .iter()
        .copied()
        .filter(|x| {
            matches!(
                x,
                Action::ChangeLeft
                    | Action::ChangeRight
                    | Action::TurnLeft
                    | Action::TurnRight
                    | Action::Cross
                    | Action::DriveThrough
            )
        })
        .collect();
    let got = route_actions(map, &route);
    if got != want {
        return Err(format!("ego route performs {got:?}, expected {want:?}"));
    }
    Ok(())
}

/// Per-element conformance of a scenario to its abstract: road type, ego
/// task, then each scripted participant in declaration order.
pub fn conformance(
    s: &ConcreteScenario,
    map: &RoadMap,
    abs: &AbstractScenario,
    inspect_params: &InspectParams,
) -> Vec<bool> {
    let road_ok = map
        .lane(&s.ego.start.lane_id)
        .is_some_and(|l| l.def.road_type == abs.road_type);
    let ego_ok = abs
        .ego()
        .is_some_and(|e| check_ego_task(s, map, e).is_ok());
    let mut out = vec![road_ok, ego_ok];
    let feasible = check_feasibility(s, map);
    match inspect::check_semantic_equivalence(s, map, abs, inspect_params) {
        Ok(r) => {
            for t in s.participants() {
                let clean = !r.diffs.iter().any(|d| d.name == t.name)
                    && !feasible.diagnostics.iter().any(|d| d.participant == t.name);
                out.push(clean);
            }
        }
        Err(_) => out.extend(abs.others().map(|_| false)),
    }
    out
}

fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Generates a concrete scenario, repairing it up to `repair_rounds` times.
pub fn generate_concrete(
    abs: &AbstractScenario,
    map: &RoadMap,
    mode: GenerationMode<'_>,
    seed: u64,
    params: &SynthParams,
    inspect_params: &InspectParams,
) -> Result<ConcreteScenario, SynthError> {
    abs.validate().map_err(SynthError::Abstract)?;
    match mode {
        GenerationMode::Template => generate_template(abs, map, seed, params, inspect_params),
        GenerationMode::Remote(provider) => {
            generate_remote(abs, map, provider, params, inspect_params)
        }
    }
}

fn generate_template(
    abs: &AbstractScenario,
    map: &RoadMap,
    seed: u64,
    params: &SynthParams,
    inspect_params: &InspectParams,
) -> Result<ConcreteScenario, SynthError> {
    let others: Vec<&ParticipantSpec> = abs.others().collect();
    let mut jitter = vec![
        Jitter {
            offset: 0.0,
            speed: 1.0
        };
        others.len()
    ];
    let mut last = Vec::new();
    for round in 0..=params.repair_rounds {
        let d = draft(abs, map, params, &jitter)?;
        let problems: Vec<(String, String)> = if d.failures.is_empty() {
            scenario_problems(&d.scenario, map, abs, inspect_params)
        } else {
            d.failures.clone()
        };
        if problems.is_empty() {
            return Ok(d.scenario);
        }
        log::debug!("repair round {round}: {problems:?}");
        last = problems.iter().map(|p| p.1.clone()).collect();
        let names: Vec<String> = d.scenario.participants().map(|t| t.name.clone()).collect();
        // participant k of the abstract is the k-th name in declaration order
        let order = declaration_order(abs);
        let mut rng = round_rng(seed, round + 1);
        for (k, j) in jitter.iter_mut().enumerate() {
            let name = &names[order[k]];
            let blamed = problems.iter().any(|p| &p.0 == name || p.0.is_empty() || p.0 == "ego");
            if blamed {
                j.offset = rng.random_range(-params.jitter_offset..=params.jitter_offset);
                j.speed = 1.0 + rng.random_range(-params.jitter_speed..=params.jitter_speed);
            }
        }
    }
    Err(SynthError::GenerationFailed {
        rounds: params.repair_rounds,
        diagnostics: last,
    })
}

/// Index into `scenario.participants()` of each abstract non-ego participant.
fn declaration_order(abs: &AbstractScenario) -> Vec<usize> {
    let n_npc = abs.participants.iter().filter(|p| p.role == Role::Npc).count();
    let (mut i_npc, mut i_ped) = (0, 0);
    abs.others()
        .map(|p| {
            if p.role == Role::Pedestrian {
                i_ped += 1;
                n_npc + i_ped - 1
            } else {
                i_npc += 1;
                i_npc - 1
            }
        })
        .collect()
}

fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let body = rest.split_once('\n').map_or("", |(_, b)| b);
        body.trim_end().strip_suffix("```").unwrap_or(body)
    } else {
        t
    }
}

fn generate_remote(
    abs: &AbstractScenario,
    map: &RoadMap,
    provider: &dyn SceneProvider,
    params: &SynthParams,
    inspect_params: &InspectParams,
) -> Result<ConcreteScenario, SynthError> {
    let road = select_road(map, abs.road_type)?;
    let base = build_generation_prompt(abs, map, &road, params)?;
    let mut prompt = base.clone();
    let mut last = Vec::new();
    for _ in 0..=params.repair_rounds {
        let reply = provider
            .describe(&ProviderRequest {
                prompt: prompt.clone(),
                ..Default::default()
            })
            .map_err(SynthError::Provider)?;
        let problems: Vec<String> = match scenlang::parse(strip_fences(&reply.raw_text)) {
            Ok(s) => {
                let s = attach_assertions(s, params);
                let p = scenario_problems(&s, map, abs, inspect_params);
                if p.is_empty() {
                    return Ok(s);
                }
                p.into_iter().map(|x| x.1).collect()
            }
            Err(diags) => diags.iter().map(|d| d.to_string()).collect(),
        };
        prompt = format!(
            "{base}\n\nThe previous scenario was rejected:\n{}\nGenerate a corrected scenario program.",
            problems.join("\n")
        );
        last = problems;
    }
    Err(SynthError::GenerationFailed {
        rounds: params.repair_rounds,
        diagnostics: last,
    })
}
