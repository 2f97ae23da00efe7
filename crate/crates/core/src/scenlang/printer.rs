use super::ast::*;
use std::fmt::Write;

fn is_bare(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_ascii_graphic() || c == ' ' => out.push(c),
            c => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
        }
    }
    out.push('"');
    out
}

fn name(s: &str) -> String {
    if is_bare(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn lane_pos(lp: &LanePosition) -> String {
    format!("{} -> {}", quote(&lp.lane_id), lp.offset)
}

fn waypoint(w: &Waypoint) -> String {
    let pos = match &w.position {
        Position::Lane(lp) => lane_pos(lp),
        Position::Free { x, y } => format!("({x}, {y})"),
    };
    let lat = w
        .lateral_offset
        .map(|l| format!(" {l}"))
        .unwrap_or_default();
    let time = w.time.map(|t| format!(", at {t}")).unwrap_or_default();
    format!("({pos},{lat}, {}{time})", w.speed)
}

fn trajectory(out: &mut String, head: &str, t: &TrajectoryDef) {
    let _ = writeln!(out, "{head} (");
    for (i, w) in t.waypoints.iter().enumerate() {
        let sep = if i + 1 < t.waypoints.len() { "," } else { "" };
        let _ = writeln!(out, "    {}{sep}", waypoint(w));
    }
    out.push_str(");\n\n");
}

/// Canonical text form. `parse(&print(s))` reproduces `s`.
pub fn print(s: &ConcreteScenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "map {};\n", name(&s.map_id));
    let _ = writeln!(out, "ego {} {{", s.ego.vehicle_type);
    let _ = writeln!(out, "    start ({});", lane_pos(&s.ego.start));
    let _ = writeln!(out, "    destination ({});", lane_pos(&s.ego.destination));
    out.push_str("}\n\n");
    for t in &s.npcs {
        trajectory(
            &mut out,
            &format!("npc {} {}", name(&t.name), t.participant_type),
            t,
        );
    }
    for t in &s.pedestrians {
        trajectory(&mut out, &format!("pedestrian {}", name(&t.name)), t);
    }
    out.push_str("assert {\n");
    for a in &s.assertions {
        let line = match a {
            Assertion::NeverCollision => "never collision".to_string(),
            Assertion::AlwaysClearance { min } => format!("always clearance >= {min}"),
            Assertion::EventuallyAtDestination { within, radius } => {
                format!("eventually within {within} at_destination {radius}")
            }
        };
        let _ = writeln!(out, "    {line};");
    }
    out.push_str("}\n");
    out
}
