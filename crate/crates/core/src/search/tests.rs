use super::*;
use crate::abstraction::ParticipantSpec;
use crate::map::standard_map;
use crate::synth::{generate_concrete, GenerationMode, SynthParams};
use crate::vocab::{RelativePosition, Role, RoadType, VehicleType};

fn slow_npc_abstract() -> AbstractScenario {
    AbstractScenario {
        road_type: RoadType::Straight,
        traffic_signal: None,
        participants: vec![
            ParticipantSpec {
                role: Role::Ego,
                vehicle_type: VehicleType::Car,
                behaviors: vec![Action::FollowLane],
                relative_position: None,
            },
            ParticipantSpec {
                role: Role::Npc,
                vehicle_type: VehicleType::Car,
                behaviors: vec![Action::Decelerate, Action::FollowLane],
                relative_position: Some(RelativePosition::Ahead),
            },
        ],
        notes: vec![],
    }
}

fn seed_scenario(abs: &AbstractScenario) -> ConcreteScenario {
    generate_concrete(
        abs,
        &standard_map(),
        GenerationMode::Template,
        42,
        &SynthParams::default(),
        &InspectParams::default(),
    )
    .unwrap()
}

fn with_ctx<R>(policy: &str, config: &SearchConfig, f: impl FnOnce(&SearchContext<'_>) -> R) -> R {
    let map = standard_map();
    let abs = slow_npc_abstract();
    let costs = CostModel::standard();
    f(&SearchContext {
        map: &map,
        abstract_scenario: &abs,
        policy,
        costs: &costs,
        config,
    })
}

#[test]
fn human_sequence() {
    assert_eq!(
        human_action_sequence(&slow_npc_abstract()).unwrap(),
        vec![Action::FollowLane]
    );
    let mut abs = slow_npc_abstract();
    abs.participants[0].behaviors = vec![Action::ChangeRight, Action::TurnRight];
    assert_eq!(
        human_action_sequence(&abs).unwrap(),
        vec![Action::ChangeRight, Action::TurnRight]
    );
    abs.participants.remove(0);
    assert!(matches!(human_action_sequence(&abs), Err(SearchError::NoEgo)));
}

#[test]
fn zero_sigma_mutation_is_identity() {
    let config = SearchConfig {
        sigma_pos: 0.0,
        sigma_speed: 0.0,
        type_flip_prob: 0.0,
        ..SearchConfig::default()
    };
    let s = seed_scenario(&slow_npc_abstract());
    with_ctx("lanekeeper", &config, |ctx| {
        let mut rng = stream_rng(1, 0, 0, 0);
        assert_eq!(ctx.mutate(&s, 1.0, true, &mut rng), s);
    });
}

#[test]
fn mutation_is_seeded() {
    let config = SearchConfig::default();
    let s = seed_scenario(&slow_npc_abstract());
    with_ctx("lanekeeper", &config, |ctx| {
        let a = ctx.mutate(&s, 1.0, true, &mut stream_rng(9, 0, 3, 1));
        let b = ctx.mutate(&s, 1.0, true, &mut stream_rng(9, 0, 3, 1));
        assert_eq!(scenlang::print(&a), scenlang::print(&b));
        assert_ne!(a, s);
    });
}

#[test]
fn crowded_start_is_rejected() {
    // a second NPC 4 m behind the first breaks the spacing rule
    let mut s = seed_scenario(&slow_npc_abstract());
    let mut other = s.npcs[0].clone();
    other.name = "npc_2".into();
    if let Position::Lane(lp) = &mut other.waypoints[0].position {
        lp.offset -= 4.0;
    }
    s.npcs.push(other);
    let mut abs = slow_npc_abstract();
    abs.participants.push(abs.participants[1].clone());
    let map = standard_map();
    let costs = CostModel::standard();
    let config = SearchConfig::default();
    let ctx = SearchContext {
        map: &map,
        abstract_scenario: &abs,
        policy: "lanekeeper",
        costs: &costs,
        config: &config,
    };
    assert!(!ctx.legal(&s));
    // mutation never returns an illegal child: it falls back to the parent
    let child = ctx.mutate(&s, 0.01, false, &mut stream_rng(1, 0, 0, 0));
    assert!(!ctx.legal(&child));
    assert_eq!(child, s);
}

fn verdict(a: Assertion, violated: bool) -> Verdict {
    Verdict {
        assertion: a,
        outcome: if violated {
            crate::sim::Outcome::Violated {
                step: 1,
                time: 0.1,
                detail: String::new(),
            }
        } else {
            crate::sim::Outcome::Satisfied
        },
    }
}

fn standing_trace(seconds: f64, speed: f64) -> ExecutionTrace {
    use crate::sim::{EntityState, Termination, WorldState};
    let states = (0..=(seconds * 10.0) as usize)
        .map(|k| WorldState {
            step: k,
            time: k as f64 * 0.1,
            entities: vec![EntityState {
                id: EGO_ID.into(),
                kind: ParticipantType::Car,
                x: 0.0,
                y: 0.0,
                heading: 0.0,
                speed,
                half_length: 2.35,
                half_width: 0.9,
            }],
        })
        .collect();
    ExecutionTrace {
        dt: 0.1,
        destination: Vec2::new(100.0, 0.0),
        collision_tolerance: 0.01,
        states,
        termination: Termination::Horizon,
        fault: None,
    }
}

#[test]
fn classification_priorities() {
    let c = SearchConfig::default();
    let col = verdict(Assertion::NeverCollision, true);
    let clr = verdict(Assertion::AlwaysClearance { min: 2.0 }, true);
    let dest = verdict(
        Assertion::EventuallyAtDestination {
            within: 60.0,
            radius: 3.0,
        },
        true,
    );
    let stuck = standing_trace(20.0, 0.0);
    let moving = standing_trace(20.0, 1.0);
    let k = |v: &[Verdict], t: &ExecutionTrace| classify_violation(v, t, &c);
    assert_eq!(k(&[col.clone(), clr.clone(), dest.clone()], &stuck).unwrap(), ViolationKind::Collision);
    assert_eq!(k(&[dest.clone(), clr.clone()], &stuck).unwrap(), ViolationKind::TrafficDisruption);
    assert_eq!(k(&[clr.clone()], &moving).unwrap(), ViolationKind::RuleViolation);
    assert_eq!(k(&[dest.clone(), clr], &moving).unwrap(), ViolationKind::RuleViolation);
    assert!(matches!(k(&[dest], &moving), Err(SearchError::Unclassified)));
    assert!(matches!(
        k(&[verdict(Assertion::NeverCollision, false)], &moving),
        Err(SearchError::NoViolation)
    ));
}

#[test]
fn budget_of_one() {
    let config = SearchConfig {
        outer_budget: 1,
        ..SearchConfig::default()
    };
    let s = seed_scenario(&slow_npc_abstract());
    with_ctx("lanekeeper", &config, |ctx| {
        let out = outer_search(ctx, &[s.clone()]).unwrap();
        assert_eq!(out.evaluations, 1);
        assert_eq!(out.best.len(), 1);
        assert_eq!(out.best[0].scenario, s);
    });
}

#[test]
fn no_legal_seed() {
    let config = SearchConfig::default();
    let mut s = seed_scenario(&slow_npc_abstract());
    s.npcs.clear();
    with_ctx("lanekeeper", &config, |ctx| {
        assert!(matches!(outer_search(ctx, &[s]), Err(SearchError::NoFeasibleSeed)));
    });
}

#[test]
fn small_search_keeps_the_best_and_stays_legal() {
    let config = SearchConfig {
        outer_budget: 30,
        ..SearchConfig::default()
    };
    let s = seed_scenario(&slow_npc_abstract());
    with_ctx("lanekeeper-staticbug", &config, |ctx| {
        let a = outer_search(ctx, &[s.clone()]).unwrap();
        let b = outer_search(ctx, &[s.clone()]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.evaluations, 30);
        let top = a.best[0].distance;
        assert!(a.distances.iter().all(|&d| d <= top));
        for v in &a.violations {
            assert!(ctx.legal(&v.scenario));
        }
        assert!(!a.violations.is_empty());
    });
}

#[test]
fn inner_search_and_minimisation() {
    let config = SearchConfig {
        inner_budget: 6,
        ..SearchConfig::default()
    };
    let s = seed_scenario(&slow_npc_abstract());
    with_ctx("lanekeeper-staticbug", &config, |ctx| {
        let (_, kind) = ctx.violation_of(&s).unwrap();
        let kind = kind.expect("the slow NPC trips the static bug");
        let inner = inner_search(ctx, &s, kind, 0).unwrap();
        let again = recompute_rv(ctx, &s, &inner.variations).unwrap();
        assert_eq!(inner.rv, again);
        assert_eq!(inner.universal, inner.rv >= config.rv_threshold);
        assert_eq!(minimize_essential(ctx, &s, kind).unwrap(), vec!["npc_1".to_string()]);
        // an unreachable threshold is never met
        let strict = SearchConfig {
            rv_threshold: f64::INFINITY,
            ..config.clone()
        };
        let ctx2 = SearchContext {
            config: &strict,
            ..*ctx
        };
        assert!(!inner_search(&ctx2, &s, kind, 0).unwrap().universal);
    });
    with_ctx("lanekeeper", &config, |ctx| {
        assert!(matches!(
            inner_search(ctx, &s, ViolationKind::Collision, 0),
            Err(SearchError::NotReproducing(_))
        ));
    });
}

#[test]
fn empty_variation_set_has_zero_range() {
    assert_eq!(range(&[vec![(0.0, 0.0), (1.0, 0.0)]], &[], 10), 0.0);
}

#[test]
fn far_pedestrian_is_not_essential() {
    let config = SearchConfig::default();
    let mut s = seed_scenario(&slow_npc_abstract());
    s.pedestrians.push(TrajectoryDef {
        name: "ped_1".into(),
        participant_type: ParticipantType::Pedestrian,
        waypoints: vec![
            scenlang::Waypoint::free(250.0, -6.0, 0.0),
            scenlang::Waypoint::free(250.0, -6.0, 0.0).at(60.0),
        ],
    });
    with_ctx("lanekeeper-staticbug", &config, |ctx| {
        let kind = ctx.violation_of(&s).unwrap().1.unwrap();
        assert_eq!(minimize_essential(ctx, &s, kind).unwrap(), vec!["npc_1".to_string()]);
    });
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
    #[test]
    fn mutants_are_legal(seed in proptest::prelude::any::<u64>(), inner in proptest::prelude::any::<bool>()) {
        let config = SearchConfig::default();
        let s = seed_scenario(&slow_npc_abstract());
        with_ctx("lanekeeper", &config, |ctx| {
            let scale = if inner { config.inner_scale } else { 1.0 };
            let child = ctx.mutate(&s, scale, !inner, &mut stream_rng(seed, 0, 0, 0));
            assert!(ctx.legal(&child));
            assert!(check_feasibility(&child, ctx.map).is_feasible());
        });
    }
}
