//! Random scenario and text generators for round-trip and fuzz testing.

use super::ast::*;
use crate::vocab::ParticipantType;
use rand::Rng;

fn any_name(rng: &mut (impl Rng + ?Sized)) -> String {
    const POOL: &[&str] = &[
        "npc_1",
        "lead",
        "x",
        "_a9",
        "with space",
        "quo\"te",
        "back\\slash",
        "caf\u{e9}",
        "\u{6c7d}\u{8f66}",
        "tab\tnl\n",
        "map",
        "car",
    ];
    if rng.random_bool(0.3) {
        let n = rng.random_range(1..10);
        (0..n)
            .map(|_| char::from_u32(rng.random_range(0x20..0x3000)).unwrap_or('z'))
            .collect()
    } else {
        format!(
            "{}{}",
            POOL[rng.random_range(0..POOL.len())],
            rng.random_range(0..1000)
        )
    }
}

fn any_f64(rng: &mut (impl Rng + ?Sized), lo: f64, hi: f64) -> f64 {
    match rng.random_range(0..6) {
        0 => (rng.random_range(lo as i64..=hi as i64) as f64).max(lo),
        1 => ((rng.random_range(lo..hi) * 10.0).round() / 10.0).max(lo),
        _ => rng.random_range(lo..hi),
    }
}

fn any_lane(rng: &mut (impl Rng + ?Sized)) -> LanePosition {
    let ids = [
        "lane_222",
        "lane_223",
        "x_w_in_0",
        "x_n_1_l",
        "weird \"id\"",
    ];
    LanePosition::new(
        ids[rng.random_range(0..ids.len())],
        any_f64(rng, 0.0, 300.0),
    )
}

fn any_trajectory(
    rng: &mut (impl Rng + ?Sized),
    name: String,
    ty: ParticipantType,
) -> TrajectoryDef {
    let n = rng.random_range(2..6);
    let mut t = 0.0;
    let waypoints = (0..n)
        .map(|_| {
            let position = if ty == ParticipantType::Pedestrian && rng.random_bool(0.5) {
                Position::Free {
                    x: any_f64(rng, -500.0, 1500.0),
                    y: any_f64(rng, -100.0, 100.0),
                }
            } else {
                Position::Lane(any_lane(rng))
            };
            let time = if rng.random_bool(0.3) {
                t += any_f64(rng, 0.0, 10.0);
                Some(t)
            } else {
                None
            };
            Waypoint {
                position,
                lateral_offset: rng.random_bool(0.3).then(|| any_f64(rng, -2.0, 2.0)),
                speed: any_f64(rng, 0.0, 20.0),
                time,
            }
        })
        .collect();
    TrajectoryDef {
        name,
        participant_type: ty,
        waypoints,
    }
}

/// A syntactically and structurally valid scenario.
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R) -> ConcreteScenario {
    fn vt(rng: &mut (impl Rng + ?Sized)) -> ParticipantType {
        if rng.random_bool(0.5) {
            ParticipantType::Car
        } else {
            ParticipantType::Truck
        }
    }
    let n_npc = rng.random_range(0..4);
    let n_ped = rng.random_range(0..3);
    let mut used = std::collections::HashSet::new();
    let mut fresh = |rng: &mut R| loop {
        let n = any_name(rng);
        if used.insert(n.clone()) {
            return n;
        }
    };
    let npcs = (0..n_npc)
        .map(|_| {
            let name = fresh(rng);
            let ty = vt(rng);
            any_trajectory(rng, name, ty)
        })
        .collect();
    let pedestrians = (0..n_ped)
        .map(|_| {
            let name = fresh(rng);
            any_trajectory(rng, name, ParticipantType::Pedestrian)
        })
        .collect();
    let mut assertions = Vec::new();
    for _ in 0..rng.random_range(0..4) {
        assertions.push(match rng.random_range(0..3) {
            0 => Assertion::NeverCollision,
            1 => Assertion::AlwaysClearance {
                min: any_f64(rng, 0.1, 5.0),
            },
            _ => Assertion::EventuallyAtDestination {
                within: any_f64(rng, 1.0, 120.0),
                radius: any_f64(rng, 0.5, 10.0),
            },
        });
    }
    let map_id = any_name(rng);
    ConcreteScenario {
        map_id,
        ego: EgoTask {
            vehicle_type: vt(rng),
            start: any_lane(rng),
            destination: any_lane(rng),
        },
        npcs,
        pedestrians,
        assertions,
    }
}

/// Arbitrary text biased toward near-miss scenario syntax.
pub fn fuzz_text(rng: &mut (impl Rng + ?Sized), seed_texts: &[String]) -> String {
    const FRAGMENTS: &[&str] = &[
        "map",
        "ego",
        "npc",
        "pedestrian",
        "assert",
        "{",
        "}",
        "(",
        ")",
        ",",
        ";",
        "->",
        "\u{2192}",
        ">=",
        "at",
        "start",
        "destination",
        "never",
        "collision",
        "always",
        "clearance",
        "eventually",
        "within",
        "at_destination",
        "car",
        "truck",
        "\"",
        "\\",
        "\\u{",
        "1e999",
        "-",
        ".",
        "0",
        "3.5",
        "-7",
        "\n",
        " ",
        "#",
        "//",
        "\u{0}",
        "\u{ffff}",
        "\u{1F697}",
    ];
    match rng.random_range(0..3) {
        0 if !seed_texts.is_empty() => {
            let base: Vec<char> = seed_texts[rng.random_range(0..seed_texts.len())]
                .chars()
                .collect();
            let mut s = base;
            for _ in 0..rng.random_range(1..6) {
                if s.is_empty() {
                    break;
                }
                let i = rng.random_range(0..s.len());
                match rng.random_range(0..3) {
                    0 => {
                        s.remove(i);
                    }
                    1 => s.insert(i, char::from_u32(rng.random_range(0..0x80)).unwrap_or('?')),
                    _ => {
                        let j = rng.random_range(i..s.len());
                        s.truncate(j.max(i));
                    }
                }
            }
            s.into_iter().collect()
        }
        1 => (0..rng.random_range(0..40))
            .map(|_| FRAGMENTS[rng.random_range(0..FRAGMENTS.len())])
            .collect::<Vec<_>>()
            .join(" "),
        _ => (0..rng.random_range(0..64))
            .map(|_| char::from_u32(rng.random_range(0..0x200)).unwrap_or('x'))
            .collect(),
    }
}
