use super::ast::*;
use super::lexer::{lex, Spanned, Tok};
use super::Diagnostic;
use crate::vocab::ParticipantType;
use std::collections::HashSet;

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.column))
            .unwrap_or(self.end)
    }

    fn fail<T>(&self, message: String) -> PResult<T> {
        let (line, column) = self.here();
        Err(Diagnostic {
            line,
            column,
            message,
        })
    }

    fn found(&self) -> String {
        self.peek()
            .map(|t| t.describe())
            .unwrap_or_else(|| "end of input".into())
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!(
                "expected {}, found {}",
                want.describe(),
                self.found()
            ))
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail(format!("expected `{kw}`, found {}", self.found())),
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail(format!("expected a name, found {}", self.found())),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => self.fail(format!("expected a number, found {}", self.found())),
        }
    }

    fn participant_type(&mut self) -> PResult<ParticipantType> {
        let at = self.here();
        let word = self.name()?;
        word.parse::<ParticipantType>().map_err(|e| Diagnostic {
            line: at.0,
            column: at.1,
            message: e.to_string(),
        })
    }

    fn lane_position(&mut self) -> PResult<LanePosition> {
        let lane_id = match self.peek().cloned() {
            Some(Tok::Str(s)) | Some(Tok::Ident(s)) => {
                self.pos += 1;
                s
            }
            _ => return self.fail(format!("expected a lane id, found {}", self.found())),
        };
        self.expect(Tok::Arrow)?;
        let offset = self.number()?;
        Ok(LanePosition { lane_id, offset })
    }

    fn position(&mut self) -> PResult<Position> {
        if self.eat(&Tok::LParen) {
            let x = self.number()?;
            self.expect(Tok::Comma)?;
            let y = self.number()?;
            self.expect(Tok::RParen)?;
            Ok(Position::Free { x, y })
        } else {
            Ok(Position::Lane(self.lane_position()?))
        }
    }

    fn waypoint(&mut self) -> PResult<Waypoint> {
        self.expect(Tok::LParen)?;
        let position = self.position()?;
        self.expect(Tok::Comma)?;
        let lateral_offset = if matches!(self.peek(), Some(Tok::Comma)) {
            None
        } else {
            Some(self.number()?)
        };
        self.expect(Tok::Comma)?;
        let speed = self.number()?;
        let time = if self.eat(&Tok::Comma) {
            self.keyword("at")?;
            Some(self.number()?)
        } else {
            None
        };
        self.expect(Tok::RParen)?;
        Ok(Waypoint {
            position,
            lateral_offset,
            speed,
            time,
        })
    }

    fn trajectory(&mut self) -> PResult<Vec<Waypoint>> {
        self.expect(Tok::LParen)?;
        let mut wps = vec![self.waypoint()?];
        while self.eat(&Tok::Comma) {
            if matches!(self.peek(), Some(Tok::RParen)) {
                break;
            }
            wps.push(self.waypoint()?);
        }
        self.expect(Tok::RParen)?;
        Ok(wps)
    }

    fn ego(&mut self) -> PResult<EgoTask> {
        let at = self.here();
        let vehicle_type = self.participant_type()?;
        if !vehicle_type.is_vehicle() {
            return Err(Diagnostic {
                line: at.0,
                column: at.1,
                message: "ego must be a car or truck".into(),
            });
        }
        self.expect(Tok::LBrace)?;
        let (mut start, mut destination) = (None, None);
        while !self.eat(&Tok::RBrace) {
            let at = self.here();
            let which = self.name()?;
            self.expect(Tok::LParen)?;
            let lp = self.lane_position()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Semi)?;
            let slot = match which.as_str() {
                "start" => &mut start,
                "destination" => &mut destination,
                other => {
                    return Err(Diagnostic {
                        line: at.0,
                        column: at.1,
                        message: format!("unknown ego field `{other}`"),
                    })
                }
            };
            if slot.is_some() {
                return Err(Diagnostic {
                    line: at.0,
                    column: at.1,
                    message: format!("duplicate ego field `{which}`"),
                });
            }
            *slot = Some(lp);
        }
        let Some(start) = start else {
            return self.fail_at(at, "ego task has no start");
        };
        let Some(destination) = destination else {
            return self.fail_at(at, "ego task has no destination");
        };
        Ok(EgoTask {
            vehicle_type,
            start,
            destination,
        })
    }

    fn fail_at<T>(&self, at: (usize, usize), m: &str) -> PResult<T> {
        Err(Diagnostic {
            line: at.0,
            column: at.1,
            message: m.into(),
        })
    }

    fn assertion(&mut self) -> PResult<Assertion> {
        let at = self.here();
        let head = self.name()?;
        let a = match head.as_str() {
            "never" => {
                self.keyword("collision")?;
                Assertion::NeverCollision
            }
            "always" => {
                self.keyword("clearance")?;
                self.expect(Tok::Ge)?;
                Assertion::AlwaysClearance {
                    min: self.number()?,
                }
            }
            "eventually" => {
                self.keyword("within")?;
                let within = self.number()?;
                self.keyword("at_destination")?;
                let radius = self.number()?;
                Assertion::EventuallyAtDestination { within, radius }
            }
            other => return self.fail_at(at, &format!("unknown assertion `{other}`")),
        };
        self.expect(Tok::Semi)?;
        Ok(a)
    }
}

fn check(s: &ConcreteScenario, spans: &[(usize, usize)], out: &mut Vec<Diagnostic>) {
    let mut push = |at: (usize, usize), m: String| {
        out.push(Diagnostic {
            line: at.0,
            column: at.1,
            message: m,
        })
    };
    let mut seen = HashSet::new();
    for (t, &at) in s.participants().zip(spans) {
        if !seen.insert(t.name.as_str()) {
            push(at, format!("duplicate participant `{}`", t.name));
        }
        if t.waypoints.len() < 2 {
            push(
                at,
                format!("trajectory of `{}` needs at least two waypoints", t.name),
            );
        }
        let mut last_t = f64::NEG_INFINITY;
        for (k, w) in t.waypoints.iter().enumerate() {
            if w.speed < 0.0 {
                push(
                    at,
                    format!("waypoint {k} of `{}` has negative speed", t.name),
                );
            }
            if let Position::Lane(lp) = &w.position {
                if lp.offset < 0.0 {
                    push(
                        at,
                        format!("waypoint {k} of `{}` has negative lane offset", t.name),
                    );
                }
            }
            if let Some(tt) = w.time {
                if tt < 0.0 || tt < last_t {
                    push(
                        at,
                        format!(
                            "waypoint {k} of `{}` has a time earlier than its predecessor",
                            t.name
                        ),
                    );
                }
                last_t = tt;
            }
        }
    }
    let ego_at = spans.last().copied().unwrap_or((1, 1));
    if s.ego.start.offset < 0.0 || s.ego.destination.offset < 0.0 {
        push(ego_at, "ego position has negative lane offset".into());
    }
    for a in &s.assertions {
        match *a {
            Assertion::AlwaysClearance { min } if min <= 0.0 => {
                push(ego_at, "clearance must be positive".into())
            }
            Assertion::EventuallyAtDestination { within, radius }
                if within <= 0.0 || radius <= 0.0 =>
            {
                push(
                    ego_at,
                    "destination deadline and radius must be positive".into(),
                )
            }
            _ => {}
        }
    }
}

pub fn parse(src: &str) -> Result<ConcreteScenario, Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let end = toks
        .last()
        .map(|t| (t.line, t.column + 1))
        .unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, end };
    parse_tokens(&mut p)
        .map_err(|d| vec![d])
        .and_then(|(s, spans)| {
            let mut diags = Vec::new();
            check(&s, &spans, &mut diags);
            if diags.is_empty() {
                Ok(s)
            } else {
                Err(diags)
            }
        })
}

fn parse_tokens(p: &mut Parser) -> PResult<(ConcreteScenario, Vec<(usize, usize)>)> {
    let mut map_id = None;
    let mut ego = None;
    let mut ego_at = (1, 1);
    let mut npcs = Vec::new();
    let mut pedestrians = Vec::new();
    let mut spans = Vec::new();
    let mut ped_spans = Vec::new();
    let mut assertions = None;
    while p.peek().is_some() {
        let at = p.here();
        let head = p.name()?;
        match head.as_str() {
            "map" => {
                if map_id.is_some() {
                    return p.fail_at(at, "duplicate map declaration");
                }
                map_id = Some(p.name()?);
                p.expect(Tok::Semi)?;
            }
            "ego" => {
                if ego.is_some() {
                    return p.fail_at(at, "duplicate ego driving task");
                }
                ego_at = at;
                ego = Some(p.ego()?);
            }
            "npc" => {
                let name = p.name()?;
                let tat = p.here();
                let participant_type = p.participant_type()?;
                if !participant_type.is_vehicle() {
                    return p.fail_at(tat, "npc must be a car or truck");
                }
                let waypoints = p.trajectory()?;
                p.expect(Tok::Semi)?;
                npcs.push(TrajectoryDef {
                    name,
                    participant_type,
                    waypoints,
                });
                spans.push(at);
            }
            "pedestrian" => {
                let name = p.name()?;
                let waypoints = p.trajectory()?;
                p.expect(Tok::Semi)?;
                pedestrians.push(TrajectoryDef {
                    name,
                    participant_type: ParticipantType::Pedestrian,
                    waypoints,
                });
                ped_spans.push(at);
            }
            "assert" => {
                if assertions.is_some() {
                    return p.fail_at(at, "duplicate assert block");
                }
                p.expect(Tok::LBrace)?;
                let mut v = Vec::new();
                while !p.eat(&Tok::RBrace) {
                    if p.peek().is_none() {
                        return p.fail("unterminated assert block".into());
                    }
                    v.push(p.assertion()?);
                }
                assertions = Some(v);
            }
            other => return p.fail_at(at, &format!("unexpected `{other}` at top level")),
        }
    }
    let Some(map_id) = map_id else {
        return p.fail("missing component: map declaration".into());
    };
    let Some(ego) = ego else {
        return p.fail("missing component: ego driving task".into());
    };
    spans.extend(ped_spans);
    spans.push(ego_at);
    let s = ConcreteScenario {
        map_id,
        ego,
        npcs,
        pedestrians,
        assertions: assertions.unwrap_or_else(default_assertions),
    };
    Ok((s, spans))
}
