use super::ExecutionTrace;
use crate::scenlang::Assertion;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum Outcome {
    Satisfied,
    Violated {
        step: usize,
        time: f64,
        detail: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub assertion: Assertion,
    #[serde(flatten)]
    pub outcome: Outcome,
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        matches!(self.outcome, Outcome::Violated { .. })
    }
}

/// Smallest boundary distance from the ego to any other entity, per step.
pub fn min_clearance_series(trace: &ExecutionTrace) -> Vec<(f64, Option<String>)> {
    trace
        .states
        .iter()
        .map(|s| {
            let ego = s.ego().obb();
            s.others()
                .iter()
                .map(|e| (ego.distance(&e.obb()), Some(e.id.clone())))
                .fold((f64::INFINITY, None), |a, b| if b.0 < a.0 { b } else { a })
        })
        .collect()
}

/// Longest contiguous time (s) the ego spends below `speed`.
pub fn longest_standstill(trace: &ExecutionTrace, speed: f64) -> f64 {
    let mut best: f64 = 0.0;
    let mut since: Option<f64> = None;
    for s in &trace.states {
        if s.ego().speed < speed {
            let t0 = *since.get_or_insert(s.time);
            best = best.max(s.time - t0);
        } else {
            since = None;
        }
    }
    best
}

/// One verdict per assertion, in order.
pub fn monitor_assertions(trace: &ExecutionTrace, assertions: &[Assertion]) -> Vec<Verdict> {
    let clearance = min_clearance_series(trace);
    assertions
        .iter()
        .map(|a| {
            let outcome = match a {
                Assertion::NeverCollision => trace
                    .states
                    .iter()
                    .find_map(|s| {
                        let ego = s.ego().obb();
                        s.others()
                            .iter()
                            .find(|e| ego.collides(&e.obb(), trace.collision_tolerance))
                            .map(|e| Outcome::Violated {
                                step: s.step,
                                time: s.time,
                                detail: format!("collision with {}", e.id),
                            })
                    })
                    .unwrap_or(Outcome::Satisfied),
                Assertion::AlwaysClearance { min } => trace
                    .states
                    .iter()
                    .zip(&clearance)
                    .find(|(_, c)| c.0 < *min)
                    .map(|(s, c)| Outcome::Violated {
                        step: s.step,
                        time: s.time,
                        detail: format!(
                            "clearance {:.3} m to {} below {min} m",
                            c.0,
                            c.1.as_deref().unwrap_or("?")
                        ),
                    })
                    .unwrap_or(Outcome::Satisfied),
                Assertion::EventuallyAtDestination { within, radius } => {
                    let arrived = trace.states.iter().find(|s| {
                        s.time <= *within + 1e-9 && s.ego().pos().dist(trace.destination) <= *radius
                    });
                    match (arrived, trace.states.last()) {
                        (Some(_), _) => Outcome::Satisfied,
                        (None, Some(last)) => {
                            let at = trace
                                .states
                                .iter()
                                .find(|s| s.time >= *within - 1e-9)
                                .unwrap_or(last);
                            Outcome::Violated {
                                step: at.step,
                                time: at.time,
                                detail: format!(
                                    "not within {radius} m of the destination after {:.1} s",
                                    at.time
                                ),
                            }
                        }
                        (None, None) => Outcome::Violated {
                            step: 0,
                            time: 0.0,
                            detail: "empty trace".into(),
                        },
                    }
                }
            };
            Verdict {
                assertion: *a,
                outcome,
            }
        })
        .collect()
}
