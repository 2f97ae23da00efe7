//! Dual-layer violation search: an outer loop that pushes the ego's
//! behavior away from the human driver's, and an inner loop that measures
//! how widely a found violation recurs.

use crate::abstraction::AbstractScenario;
use crate::inspect::{
    canonical_sequence, check_feasibility, check_semantic_equivalence, extract_action_sequence,
    InspectParams,
};
use crate::geom::{Obb, Vec2};
use crate::map::RoadMap;
use crate::script::Script;
use crate::metrics::{behavior_distance, variation_range, DEFAULT_RESAMPLE};
use crate::CostModel;
use crate::scenlang::{self, Assertion, ConcreteScenario, Position, TrajectoryDef};
use crate::sim::{
    create_policy, longest_standstill, monitor_assertions, run_scenario, ExecutionTrace,
    LaneKeeperParams, SimConfig, SimError, Verdict, EGO_ID,
};
use crate::vocab::{Action, ParticipantType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("abstract scenario has no ego participant")]
    NoEgo,
    #[error("no seed scenario is feasible and equivalent to the abstract")]
    NoFeasibleSeed,
    #[error("no assertion is violated")]
    NoViolation,
    #[error("only the destination deadline was missed and the ego was not stuck")]
    Unclassified,
    #[error("scenario does not reproduce a {0} violation")]
    NotReproducing(ViolationKind),
    #[error("invalid search config: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub seed: u64,
    pub outer_budget: usize,
    pub inner_budget: usize,
    pub population: usize,
    pub offspring: usize,
    pub sigma_pos: f64,
    pub sigma_speed: f64,
    pub type_flip_prob: f64,
    /// Sigma scale for inner-layer variations.
    pub inner_scale: f64,
    /// Variation range at or above which a violation counts as universal (m).
    pub rv_threshold: f64,
    pub max_resamples: usize,
    pub min_speed: f64,
    pub max_walk_speed: f64,
    pub stuck_speed: f64,
    /// Contiguous seconds below `stuck_speed` that make a missed deadline a
    /// traffic disruption.
    pub stuck_time: f64,
    pub resample_points: usize,
    pub sim: SimConfig,
    pub policy: LaneKeeperParams,
    pub inspect: InspectParams,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 42,
            outer_budget: 200,
            inner_budget: 20,
            population: 5,
            offspring: 5,
            sigma_pos: 5.0,
            sigma_speed: 1.5,
            type_flip_prob: 0.1,
            inner_scale: 0.5,
            rv_threshold: 10.0,
            max_resamples: 10,
            min_speed: 0.5,
            max_walk_speed: 2.5,
            stuck_speed: 0.5,
            stuck_time: 15.0,
            resample_points: DEFAULT_RESAMPLE,
            sim: SimConfig::default(),
            policy: LaneKeeperParams::default(),
            inspect: InspectParams::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.into()));
        if self.outer_budget == 0 || self.inner_budget == 0 {
            return bad("budgets must be at least 1");
        }
        if self.population == 0 || self.offspring == 0 {
            return bad("population and offspring must be at least 1");
        }
        if !(self.sigma_pos > 0.0 && self.sigma_speed > 0.0) {
            return bad("sigmas must be positive");
        }
        if self.rv_threshold.is_nan() || self.rv_threshold <= 0.0 {
            return bad("rv_threshold must be positive");
        }
        if !(0.0..=1.0).contains(&self.type_flip_prob) {
            return bad("type_flip_prob must be a probability");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Collision,
    TrafficDisruption,
    RuleViolation,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Collision => "collision",
            ViolationKind::TrafficDisruption => "traffic_disruption",
            ViolationKind::RuleViolation => "rule_violation",
        })
    }
}

/// Ego behaviors the human driver showed, normalised like extracted ones.
pub fn human_action_sequence(abs: &AbstractScenario) -> Result<Vec<Action>, SearchError> {
    abs.ego()
        .map(|e| canonical_sequence(&e.behaviors))
        .ok_or(SearchError::NoEgo)
}

pub fn classify_violation(
    verdicts: &[Verdict],
    trace: &ExecutionTrace,
    config: &SearchConfig,
) -> Result<ViolationKind, SearchError> {
    let violated = |f: fn(&Assertion) -> bool| {
        verdicts.iter().any(|v| f(&v.assertion) && v.is_violated())
    };
    if violated(|a| matches!(a, Assertion::NeverCollision)) {
        return Ok(ViolationKind::Collision);
    }
    let missed = violated(|a| matches!(a, Assertion::EventuallyAtDestination { .. }));
    if missed && longest_standstill(trace, config.stuck_speed) >= config.stuck_time - 1e-9 {
        return Ok(ViolationKind::TrafficDisruption);
    }
    if violated(|a| matches!(a, Assertion::AlwaysClearance { .. })) {
        return Ok(ViolationKind::RuleViolation);
    }
    if missed {
        Err(SearchError::Unclassified)
    } else {
        Err(SearchError::NoViolation)
    }
}

/// One simulated scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Evaluation index within the run.
    pub index: usize,
    pub scenario: ConcreteScenario,
    /// Behavior distance between the realised ego actions and the human's.
    pub distance: f64,
    pub equivalent: bool,
    pub ego_actions: Vec<Action>,
    pub verdicts: Vec<Verdict>,
    pub violation: Option<ViolationKind>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub id: String,
    pub source_video: String,
    pub abstract_id: String,
    pub policy: String,
    pub seed: u64,
    pub evaluation: usize,
    pub kind: ViolationKind,
    /// Scenario program text.
    pub scenario: String,
    pub verdicts: Vec<Verdict>,
    pub distance: f64,
    pub rv: f64,
    pub universal: bool,
    /// Variations where the same kind of violation recurred.
    pub variations: Vec<String>,
    pub essential_participants: Vec<String>,
}

/// Everything needed to simulate and judge scenarios for one abstract.
pub struct SearchContext<'a> {
    pub map: &'a RoadMap,
    pub abstract_scenario: &'a AbstractScenario,
    pub policy: &'a str,
    pub costs: &'a CostModel,
    pub config: &'a SearchConfig,
}

impl SearchContext<'_> {
    pub fn simulate(&self, s: &ConcreteScenario) -> Result<(ExecutionTrace, Vec<Verdict>), SearchError> {
        let mut policy = create_policy(self.policy, &self.config.policy)?;
        let trace = run_scenario(s, self.map, policy.as_mut(), &self.config.sim)?;
        let verdicts = monitor_assertions(&trace, &s.assertions);
        Ok((trace, verdicts))
    }

    fn violation_of(&self, s: &ConcreteScenario) -> Result<(ExecutionTrace, Option<ViolationKind>), SearchError> {
        let (trace, verdicts) = self.simulate(s)?;
        let kind = classify_violation(&verdicts, &trace, self.config).ok();
        Ok((trace, kind))
    }

    /// Feasible, equivalent to the abstract, and not already violating the
    /// clearance at the start.
    pub fn legal(&self, s: &ConcreteScenario) -> bool {
        check_semantic_equivalence(s, self.map, self.abstract_scenario, &self.config.inspect)
            .is_ok_and(|r| r.equivalent)
            && initial_clearance(s, self.map).map_or(true, |d| d >= s.min_clearance().unwrap_or(0.0))
    }

    /// Simulates and scores one scenario.
    pub fn evaluate(&self, index: usize, s: ConcreteScenario) -> Result<Candidate, SearchError> {
        debug_assert!(check_feasibility(&s, self.map).is_feasible());
        let human = human_action_sequence(self.abstract_scenario)?;
        let equivalent = self.legal(&s);
        let (trace, verdicts) = self.simulate(&s)?;
        let ego_actions = extract_action_sequence(
            &trace.trajectory(EGO_ID),
            s.ego.vehicle_type,
            self.map,
            &self.config.inspect,
        )
        .map(|a| canonical_sequence(&a))
        .unwrap_or_default();
        let distance = behavior_distance(&ego_actions, &human, self.costs);
        let violation = classify_violation(&verdicts, &trace, self.config).ok();
        Ok(Candidate {
            index,
            scenario: s,
            distance,
            equivalent,
            ego_actions,
            verdicts,
            violation: violation.filter(|_| equivalent),
        })
    }

    /// Gaussian perturbation of every scripted participant, resampled until
    /// the result stays feasible and equivalent, else the parent.
    pub fn mutate(&self, s: &ConcreteScenario, scale: f64, flip: bool, rng: &mut ChaCha8Rng) -> ConcreteScenario {
        let c = self.config;
        for _ in 0..=c.max_resamples {
            let mut child = s.clone();
            for t in child.participants_mut() {
                perturb(t, self.map, c, scale, flip, rng);
            }
            if self.legal(&child) {
                return child;
            }
        }
        s.clone()
    }
}

/// Smallest boundary distance between the ego and any participant at the
/// start.
pub fn initial_clearance(s: &ConcreteScenario, map: &RoadMap) -> Option<f64> {
    let lane = map.lane(&s.ego.start.lane_id)?;
    let (p, h) = lane.point_at(s.ego.start.offset);
    let (l, w) = s.ego.vehicle_type.footprint();
    let ego = Obb::new(p, h, l, w);
    s.participants()
        .filter_map(|t| {
            let script = Script::build(map, t).ok()?;
            let m = script.sample_at(0.0);
            let (l, w) = t.participant_type.footprint();
            Some(ego.distance(&Obb::new(Vec2::new(m.x, m.y), m.heading, l, w)))
        })
        .min_by(f64::total_cmp)
}

fn perturb(
    t: &mut TrajectoryDef,
    map: &RoadMap,
    c: &SearchConfig,
    scale: f64,
    flip: bool,
    rng: &mut ChaCha8Rng,
) {
    let pos = Normal::new(0.0, c.sigma_pos * scale).expect("finite sigma");
    let speed = Normal::new(0.0, c.sigma_speed * scale).expect("finite sigma");
    // free points move along the walking direction
    let walk = match (t.waypoints.first(), t.waypoints.last()) {
        (Some(a), Some(b)) => match (&a.position, &b.position) {
            (Position::Free { x: x0, y: y0 }, Position::Free { x: x1, y: y1 }) => {
                let (dx, dy) = (x1 - x0, y1 - y0);
                let n = dx.hypot(dy);
                if n > 1e-9 {
                    (dx / n, dy / n)
                } else {
                    (1.0, 0.0)
                }
            }
            _ => (1.0, 0.0),
        },
        _ => (1.0, 0.0),
    };
    let pedestrian = t.participant_type == ParticipantType::Pedestrian;
    let mut last: Option<(Position, Position)> = None;
    for w in &mut t.waypoints {
        // repeated positions (dwells) move together
        let moved = match &last {
            Some((before, after)) if *before == w.position => after.clone(),
            _ => {
                let d = if c.sigma_pos * scale > 0.0 { pos.sample(rng) } else { 0.0 };
                match &w.position {
                    Position::Lane(lp) => {
                        let len = map.lane(&lp.lane_id).map_or(f64::INFINITY, |l| l.length());
                        let mut lp = lp.clone();
                        lp.offset = (lp.offset + d).clamp(0.0, len);
                        Position::Lane(lp)
                    }
                    Position::Free { x, y } => Position::Free {
                        x: x + d * walk.0,
                        y: y + d * walk.1,
                    },
                }
            }
        };
        last = Some((w.position.clone(), moved.clone()));
        w.position = moved;
        if w.speed > 0.0 && c.sigma_speed * scale > 0.0 {
            let limit = if pedestrian {
                c.max_walk_speed
            } else {
                match &w.position {
                    Position::Lane(lp) => map.lane(&lp.lane_id).map_or(f64::INFINITY, |l| l.def.speed_limit),
                    Position::Free { .. } => f64::INFINITY,
                }
            };
            w.speed = (w.speed + speed.sample(rng)).clamp(c.min_speed, limit.max(c.min_speed));
        }
    }
    if flip && !pedestrian && c.type_flip_prob > 0.0 && rng.random_bool(c.type_flip_prob) {
        t.participant_type = match t.participant_type {
            ParticipantType::Car => ParticipantType::Truck,
            _ => ParticipantType::Car,
        };
    }
}

/// RNG for one draw: run seed, then a stream per (layer, generation, slot).
pub fn stream_rng(seed: u64, layer: u64, generation: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((layer << 56) ^ (generation << 24) ^ slot);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterResult {
    pub evaluations: usize,
    /// Final population, best distance first.
    pub best: Vec<Candidate>,
    /// Every legal candidate whose run violated an assertion.
    pub violations: Vec<Candidate>,
    /// Distance of every evaluated candidate, in evaluation order.
    pub distances: Vec<f64>,
}

fn rank(pop: &mut Vec<Candidate>, keep: usize) {
    pop.sort_by(|a, b| {
        b.equivalent
            .cmp(&a.equivalent)
            .then(b.distance.total_cmp(&a.distance))
            .then(a.index.cmp(&b.index))
    });
    pop.truncate(keep);
}

/// Elitist mutate, simulate and score loop over a fixed evaluation budget.
pub fn outer_search(
    ctx: &SearchContext<'_>,
    seeds: &[ConcreteScenario],
) -> Result<OuterResult, SearchError> {
    let c = ctx.config;
    c.validate()?;
    human_action_sequence(ctx.abstract_scenario)?;
    let legal: Vec<&ConcreteScenario> = seeds.iter().filter(|s| ctx.legal(s)).collect();
    if legal.is_empty() {
        return Err(SearchError::NoFeasibleSeed);
    }
    let mut evaluated: Vec<Candidate> = Vec::new();
    let first: Vec<ConcreteScenario> = legal.into_iter().take(c.outer_budget).cloned().collect();
    let mut pop = first
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| ctx.evaluate(i, s))
        .collect::<Result<Vec<_>, _>>()?;
    evaluated.extend(pop.iter().cloned());
    rank(&mut pop, c.population);
    let mut generation = 0u64;
    while evaluated.len() < c.outer_budget {
        generation += 1;
        let n = c.offspring.min(c.outer_budget - evaluated.len());
        let base = evaluated.len();
        let children = (0..n)
            .into_par_iter()
            .map(|j| {
                let parent = &pop[j % pop.len()].scenario;
                let mut rng = stream_rng(c.seed, 0, generation, j as u64);
                let child = ctx.mutate(parent, 1.0, true, &mut rng);
                ctx.evaluate(base + j, child)
            })
            .collect::<Result<Vec<_>, _>>()?;
        evaluated.extend(children.iter().cloned());
        pop.extend(children);
        rank(&mut pop, c.population);
    }
    Ok(OuterResult {
        evaluations: evaluated.len(),
        distances: evaluated.iter().map(|e| e.distance).collect(),
        violations: evaluated
            .into_iter()
            .filter(|e| e.violation.is_some())
            .collect(),
        best: pop,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerResult {
    pub rv: f64,
    pub universal: bool,
    pub variations: Vec<ConcreteScenario>,
}

/// Participant paths as used by the variation range.
pub fn participant_paths(trace: &ExecutionTrace) -> Vec<Vec<(f64, f64)>> {
    trace.participant_paths()
}

/// Variation range of `failing` over the scenarios in `reproduced`, from
/// fresh simulations.
pub fn recompute_rv(
    ctx: &SearchContext<'_>,
    failing: &ConcreteScenario,
    reproduced: &[ConcreteScenario],
) -> Result<f64, SearchError> {
    let base = participant_paths(&ctx.simulate(failing)?.0);
    let z = reproduced
        .iter()
        .map(|s| ctx.simulate(s).map(|(t, _)| participant_paths(&t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(range(&base, &z, ctx.config.resample_points))
}

fn range(base: &[Vec<(f64, f64)>], z: &[Vec<Vec<(f64, f64)>>], count: usize) -> f64 {
    if z.is_empty() || base.is_empty() {
        return 0.0;
    }
    variation_range(base, z, count).unwrap_or(0.0)
}

/// Explores trajectory variations of a violation and measures how far the
/// violation reaches. `slot` separates the RNG streams of different
/// violations in one run.
pub fn inner_search(
    ctx: &SearchContext<'_>,
    failing: &ConcreteScenario,
    kind: ViolationKind,
    slot: u64,
) -> Result<InnerResult, SearchError> {
    let c = ctx.config;
    let (trace, found) = ctx.violation_of(failing)?;
    if found != Some(kind) {
        return Err(SearchError::NotReproducing(kind));
    }
    let base = participant_paths(&trace);
    let runs = (0..c.inner_budget)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(c.seed, 1, slot, i as u64);
            let v = ctx.mutate(failing, c.inner_scale, false, &mut rng);
            let (t, k) = ctx.violation_of(&v)?;
            Ok((v, participant_paths(&t), k))
        })
        .collect::<Result<Vec<_>, SearchError>>()?;
    let (variations, paths): (Vec<_>, Vec<_>) = runs
        .into_iter()
        .filter(|r| r.2 == Some(kind))
        .map(|r| (r.0, r.1))
        .unzip();
    let rv = range(&base, &paths, c.resample_points);
    Ok(InnerResult {
        rv,
        universal: rv >= c.rv_threshold,
        variations,
    })
}

/// Participants whose removal alone makes the violation disappear.
pub fn minimize_essential(
    ctx: &SearchContext<'_>,
    failing: &ConcreteScenario,
    kind: ViolationKind,
) -> Result<Vec<String>, SearchError> {
    if ctx.violation_of(failing)?.1 != Some(kind) {
        return Err(SearchError::NotReproducing(kind));
    }
    let names: Vec<String> = failing.participants().map(|t| t.name.clone()).collect();
    let keep = names
        .par_iter()
        .map(|n| ctx.violation_of(&failing.without(n)).map(|(_, k)| k != Some(kind)))
        .collect::<Result<Vec<_>, SearchError>>()?;
    Ok(names
        .into_iter()
        .zip(keep)
        .filter(|(_, e)| *e)
        .map(|(n, _)| n)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub outer: OuterResult,
    pub records: Vec<ViolationRecord>,
}

/// Outer search, then inner search and minimisation for every violation.
pub fn run_search(
    ctx: &SearchContext<'_>,
    seeds: &[ConcreteScenario],
    source_video: &str,
    abstract_id: &str,
) -> Result<SearchOutcome, SearchError> {
    let outer = outer_search(ctx, seeds)?;
    let mut records = Vec::with_capacity(outer.violations.len());
    for (k, v) in outer.violations.iter().enumerate() {
        let kind = v.violation.expect("filtered on violation");
        let inner = inner_search(ctx, &v.scenario, kind, k as u64)?;
        let essential = minimize_essential(ctx, &v.scenario, kind)?;
        records.push(ViolationRecord {
            id: format!("violation_{:04}", k + 1),
            source_video: source_video.to_string(),
            abstract_id: abstract_id.to_string(),
            policy: ctx.policy.to_string(),
            seed: ctx.config.seed,
            evaluation: v.index,
            kind,
            scenario: scenlang::print(&v.scenario),
            verdicts: v.verdicts.clone(),
            distance: v.distance,
            rv: inner.rv,
            universal: inner.universal,
            variations: inner.variations.iter().map(scenlang::print).collect(),
            essential_participants: essential,
        });
    }
    Ok(SearchOutcome { outer, records })
}

#[cfg(test)]
mod tests;
