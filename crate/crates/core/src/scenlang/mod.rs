//! Textual scenario language: AST, parser, canonical printer and map
//! reference checks.

mod ast;
pub mod gen;
mod lexer;
mod parser;
mod printer;
mod validate;

pub use ast::*;
pub use parser::parse;
pub use printer::{print, quote};
pub use validate::{validate_refs, RefError};

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ParseErrors(pub Vec<Diagnostic>);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_map;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SAMPLE: &str = r#"
map standard;
ego car {
    start ("lane_222" -> 10);
    destination ("lane_222" -> 130);
}
# lead vehicle
npc npc_1 truck (("lane_223"→30, ,5), ("lane_223" -> 100, 0.5, 8, at 12));
pedestrian ped (((20, -6), , 1.4), ("lane_222" -> 20, , 1.4));
"#;

    #[test]
    fn parses_sample_with_default_assertions() {
        let s = parse(SAMPLE).unwrap();
        assert_eq!(s.map_id, "standard");
        assert_eq!(s.npcs[0].waypoints.len(), 2);
        assert_eq!(s.npcs[0].waypoints[1].time, Some(12.0));
        assert_eq!(s.npcs[0].waypoints[1].lateral_offset, Some(0.5));
        assert_eq!(
            s.pedestrians[0].waypoints[0].position,
            Position::Free { x: 20.0, y: -6.0 }
        );
        assert_eq!(s.assertions, default_assertions());
        assert_eq!(parse(&print(&s)).unwrap(), s);
    }

    #[test]
    fn empty_assert_block_is_kept() {
        let src = format!("{SAMPLE}\nassert {{ }}");
        assert!(parse(&src).unwrap().assertions.is_empty());
    }

    #[test]
    fn diagnostics_carry_positions() {
        let e = parse("map m;\nego car {\n  start (\"a\" 10);\n}").unwrap_err();
        assert_eq!((e[0].line, e[0].column), (3, 14));
        assert!(e[0].message.contains("expected `->`"), "{}", e[0]);
        let e = parse("map m;").unwrap_err();
        assert!(e[0].message.contains("missing component: ego"));
        let e = parse("ego car { start (\"a\"->1); destination (\"a\"->2); }").unwrap_err();
        assert!(e[0].message.contains("missing component: map"));
    }

    #[test]
    fn duplicate_names_and_bad_values_are_reported() {
        let src = "map m; ego car { start (\"a\"->1); destination (\"a\"->2); }
            npc a car ((\"a\"->1, , 2), (\"a\"->5, , -1));
            npc a car ((\"a\"->1, , 2));";
        let e = parse(src).unwrap_err();
        assert_eq!(e.len(), 3, "{e:?}");
    }

    #[test]
    fn unicode_names_are_escaped() {
        let mut s = parse(SAMPLE).unwrap();
        s.npcs[0].name = "\u{8f66} \"1\"".into();
        let text = print(&s);
        assert!(text.contains("\"\\u{8f66} \\\"1\\\"\""));
        assert_eq!(parse(&text).unwrap(), s);
    }

    #[test]
    fn refs_checked_against_map() {
        let map = standard_map();
        let mut s = parse(SAMPLE).unwrap();
        s.map_id = map.id.clone();
        assert!(validate_refs(&s, &map).is_empty());
        s.npcs[0].waypoints[0].position = Position::Lane(LanePosition::new("nowhere", 1.0));
        s.ego.destination.offset = 400.0;
        assert_eq!(validate_refs(&s, &map).len(), 2);
    }

    #[test]
    fn generated_scenarios_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let s = gen::random_scenario(&mut rng);
            let text = print(&s);
            assert_eq!(parse(&text).as_ref(), Ok(&s), "{text}");
        }
    }

    proptest! {
        #[test]
        fn parser_never_panics(s in "\\PC{0,200}") {
            let _ = parse(&s);
        }

        #[test]
        fn numbers_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let v = v.abs();
            let src = format!("map m; ego car {{ start (\"a\"->{v}); destination (\"a\"->1); }}");
            prop_assert_eq!(parse(&src).unwrap().ego.start.offset, v);
        }
    }
}
