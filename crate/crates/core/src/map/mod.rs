//! Lane-graph road maps.

mod fixture;
mod route;

pub use fixture::{standard_map, LANE_WIDTH};
pub use route::{Maneuver, Route};

use crate::geom::{Polyline, Projection, Vec2};
use crate::vocab::RoadType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("map json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid map: {0}")]
    Invalid(String),
}

/// Lane as stored in map JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneDef {
    pub id: String,
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
    pub speed_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_neighbor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_neighbor: Option<String>,
    #[serde(default)]
    pub successors: Vec<String>,
    pub road_type: RoadType,
    /// Road segment the lane belongs to.
    #[serde(default)]
    pub segment: String,
    /// True for connector lanes inside a junction box.
    #[serde(default)]
    pub junction: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub id: String,
    pub lanes: Vec<LaneDef>,
}

#[derive(Clone, Debug)]
pub struct Lane {
    pub def: LaneDef,
    pub line: Polyline,
}

impl Lane {
    pub fn id(&self) -> &str {
        &self.def.id
    }

    pub fn length(&self) -> f64 {
        self.line.length()
    }

    pub fn point_at(&self, offset: f64) -> (Vec2, f64) {
        self.line.sample(offset)
    }

    pub fn project(&self, p: Vec2) -> Projection {
        self.line.project(p)
    }

    pub fn start_heading(&self) -> f64 {
        self.line.heading_at(0.0)
    }

    pub fn end_heading(&self) -> f64 {
        self.line.heading_at(self.length())
    }
}

/// Summary of a lane returned with a selected road.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaneInfo {
    pub id: String,
    pub heading: f64,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct RoadMap {
    pub id: String,
    lanes: Vec<Lane>,
    index: BTreeMap<String, usize>,
    predecessors: Vec<Vec<usize>>,
}

impl RoadMap {
    pub fn from_file(file: MapFile) -> Result<Self, MapError> {
        let mut index = BTreeMap::new();
        let mut lanes = Vec::with_capacity(file.lanes.len());
        for (i, def) in file.lanes.into_iter().enumerate() {
            if def.centerline.len() < 2 {
                return Err(MapError::Invalid(format!(
                    "lane {} needs at least two points",
                    def.id
                )));
            }
            if !(def.width > 0.0 && def.speed_limit > 0.0) {
                return Err(MapError::Invalid(format!(
                    "lane {} needs positive width and speed limit",
                    def.id
                )));
            }
            if index.insert(def.id.clone(), i).is_some() {
                return Err(MapError::Invalid(format!("duplicate lane {}", def.id)));
            }
            let pts: Vec<Vec2> = def
                .centerline
                .iter()
                .map(|&[x, y]| Vec2::new(x, y))
                .collect();
            let line = Polyline::new(&pts);
            if line.length() <= 0.0 {
                return Err(MapError::Invalid(format!(
                    "lane {} has zero length",
                    def.id
                )));
            }
            lanes.push(Lane { def, line });
        }
        let mut predecessors = vec![Vec::new(); lanes.len()];
        for (i, l) in lanes.iter().enumerate() {
            for s in &l.def.successors {
                let j = *index.get(s).ok_or_else(|| {
                    MapError::Invalid(format!("{}: unknown successor {s}", l.id()))
                })?;
                predecessors[j].push(i);
            }
            let mutual = [(&l.def.left_neighbor, true), (&l.def.right_neighbor, false)];
            for (n, is_left) in mutual {
                if let Some(n) = n {
                    let j = *index.get(n).ok_or_else(|| {
                        MapError::Invalid(format!("{}: unknown neighbor {n}", l.id()))
                    })?;
                    let other = &lanes[j].def;
                    let back = if is_left {
                        &other.right_neighbor
                    } else {
                        &other.left_neighbor
                    };
                    if back.as_deref() != Some(l.id()) {
                        return Err(MapError::Invalid(format!(
                            "{} and {n} are not mutual neighbors",
                            l.id()
                        )));
                    }
                }
            }
        }
        Ok(RoadMap {
            id: file.id,
            lanes,
            index,
            predecessors,
        })
    }

    pub fn to_file(&self) -> MapFile {
        MapFile {
            id: self.id.clone(),
            lanes: self.lanes.iter().map(|l| l.def.clone()).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, MapError> {
        let text = std::fs::read_to_string(path)?;
        RoadMap::from_file(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("map serializes")
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.index.get(id).map(|&i| &self.lanes[i])
    }

    pub fn lane_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn lane_at(&self, i: usize) -> &Lane {
        &self.lanes[i]
    }

    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.predecessors[i]
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.lanes[i]
            .def
            .successors
            .iter()
            .filter_map(|s| self.lane_index(s))
    }

    pub fn left_of(&self, i: usize) -> Option<usize> {
        self.lanes[i]
            .def
            .left_neighbor
            .as_deref()
            .and_then(|n| self.lane_index(n))
    }

    pub fn right_of(&self, i: usize) -> Option<usize> {
        self.lanes[i]
            .def
            .right_neighbor
            .as_deref()
            .and_then(|n| self.lane_index(n))
    }

    /// Lanes of the same carriageway, rightmost first.
    pub fn carriageway(&self, i: usize) -> Vec<usize> {
        let mut right = i;
        while let Some(r) = self.right_of(right) {
            right = r;
        }
        let mut out = vec![right];
        while let Some(l) = self.left_of(*out.last().unwrap()) {
            out.push(l);
        }
        out
    }

    /// Segment ids carrying lanes of `road_type`, sorted.
    pub fn segments(&self, road_type: RoadType) -> Vec<String> {
        let mut v: Vec<String> = self
            .lanes
            .iter()
            .filter(|l| l.def.road_type == road_type)
            .map(|l| l.def.segment.clone())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn segment_lanes(&self, segment: &str) -> Vec<usize> {
        (0..self.lanes.len())
            .filter(|&i| self.lanes[i].def.segment == segment)
            .collect()
    }

    pub fn lane_infos(&self, lanes: &[usize]) -> Vec<LaneInfo> {
        lanes
            .iter()
            .map(|&i| LaneInfo {
                id: self.lanes[i].id().to_string(),
                heading: self.lanes[i].start_heading(),
                length: self.lanes[i].length(),
            })
            .collect()
    }

    /// The lane whose surface contains `p`, preferring ordinary lanes over
    /// junction connectors and then the smallest lateral offset.
    pub fn locate(&self, p: Vec2) -> Option<(usize, Projection)> {
        self.locate_where(p, |_| true)
    }

    pub fn locate_where(
        &self,
        p: Vec2,
        keep: impl Fn(usize) -> bool,
    ) -> Option<(usize, Projection)> {
        let mut best: Option<(usize, Projection)> = None;
        for (i, l) in self.lanes.iter().enumerate() {
            if !keep(i) {
                continue;
            }
            let pr = l.project(p);
            let inside = pr.lateral.abs() <= l.def.width / 2.0 + 1e-6
                && pr.offset >= -1e-6
                && pr.offset <= l.length() + 1e-6;
            if !inside {
                continue;
            }
            let better = match &best {
                None => true,
                Some((j, b)) => {
                    let (ja, ia) = (self.lanes[*j].def.junction, l.def.junction);
                    if ja != ia {
                        !ia
                    } else {
                        pr.lateral.abs() < b.lateral.abs() - 1e-9
                    }
                }
            };
            if better {
                best = Some((i, pr));
            }
        }
        best
    }

    /// Nearest lane centerline, whether or not `p` is on the road.
    pub fn nearest_lane(&self, p: Vec2) -> Option<(usize, Projection)> {
        self.lanes
            .iter()
            .enumerate()
            .map(|(i, l)| (i, l.project(p)))
            .min_by(|a, b| {
                a.1.distance
                    .partial_cmp(&b.1.distance)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }

    /// True when the point lies on any lane surface.
    pub fn on_road(&self, p: Vec2) -> bool {
        self.locate(p).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_map_loads_and_round_trips() {
        let m = standard_map();
        let json = m.to_json();
        let back = RoadMap::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.to_file(), m.to_file());
        assert_eq!(m.segments(RoadType::Straight), vec!["straight_1"]);
        assert_eq!(m.segments(RoadType::Intersection), vec!["cross_1"]);
        assert_eq!(m.segments(RoadType::TJunction), vec!["tee_1"]);
    }

    #[test]
    fn straight_lanes() {
        let m = standard_map();
        let l = m.lane("lane_222").unwrap();
        assert_eq!(l.length(), 150.0);
        let i = m.lane_index("lane_222").unwrap();
        let cw: Vec<_> = m
            .carriageway(i)
            .iter()
            .map(|&j| m.lane_at(j).id().to_string())
            .collect();
        assert_eq!(cw, vec!["lane_222", "lane_223"]);
        let (j, pr) = m.locate(Vec2::new(20.0, 3.0)).unwrap();
        assert_eq!(m.lane_at(j).id(), "lane_223");
        assert!((pr.lateral + 0.75).abs() < 1e-9);
        assert!(m.locate(Vec2::new(20.0, -4.0)).is_none());
    }

    #[test]
    fn invalid_maps_rejected() {
        let mut f = standard_map().to_file();
        f.lanes[0].successors.push("nope".into());
        assert!(RoadMap::from_file(f).is_err());
        let mut f = standard_map().to_file();
        f.lanes[0].left_neighbor = Some(f.lanes[2].id.clone());
        assert!(RoadMap::from_file(f).is_err());
    }
}
