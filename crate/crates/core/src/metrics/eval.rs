use super::MetricsError;
use crate::abstraction::AbstractScenario;
use crate::vocab::Role;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Attribute name to value.
pub type Element = BTreeMap<String, String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Road,
    EgoTask,
    Participant,
    RelativePosition,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Road,
        Category::EgoTask,
        Category::Participant,
        Category::RelativePosition,
    ];
}

fn element(pairs: &[(&str, String)]) -> Element {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// The scored elements of one category, in participant order.
pub fn category_elements(scenario: &AbstractScenario, category: Category) -> Vec<Element> {
    let others = scenario.participants.iter().filter(|p| p.role != Role::Ego);
    match category {
        Category::Road => vec![element(&[
            ("road_type", scenario.road_type.to_string()),
            (
                "traffic_signal",
                scenario
                    .traffic_signal
                    .map_or("none".to_string(), |s| s.to_string()),
            ),
        ])],
        Category::EgoTask => scenario
            .participants
            .iter()
            .filter(|p| p.role == Role::Ego)
            .map(|p| {
                element(&[
                    ("vehicle_type", p.vehicle_type.to_string()),
                    ("behaviors", join(&p.behaviors)),
                ])
            })
            .collect(),
        Category::Participant => others
            .map(|p| {
                element(&[
                    ("role", p.role.to_string()),
                    ("vehicle_type", p.vehicle_type.to_string()),
                    ("behaviors", join(&p.behaviors)),
                ])
            })
            .collect(),
        Category::RelativePosition => others
            .map(|p| {
                element(&[(
                    "relative_position",
                    p.relative_position
                        .map_or("none".to_string(), |r| r.to_string()),
                )])
            })
            .collect(),
    }
}

/// Mean over scenarios of the fraction of ground-truth elements whose
/// attributes are all reproduced. Scenarios without ground-truth elements
/// in the category are skipped.
pub fn sua(extracted: &[Vec<Element>], truth: &[Vec<Element>]) -> Result<f64, MetricsError> {
    if extracted.len() != truth.len() {
        return Err(MetricsError::CountMismatch(extracted.len(), truth.len()));
    }
    let mut total = 0.0;
    let mut scored = 0usize;
    for (ext, gt) in extracted.iter().zip(truth) {
        if gt.is_empty() {
            continue;
        }
        let correct = gt
            .iter()
            .enumerate()
            .filter(|(j, g)| {
                ext.get(*j)
                    .is_some_and(|e| g.iter().all(|(k, v)| e.get(k) == Some(v)))
            })
            .count();
        total += correct as f64 / gt.len() as f64;
        scored += 1;
    }
    if scored == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(total / scored as f64)
}

/// Fraction of scenarios whose every element conforms. `results[i]` holds the
/// per-element verdicts for the scenario built from `abstract_ids[i]`.
pub fn csc(results: &[(String, Vec<bool>)], abstract_ids: &[String]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::Empty);
    }
    if results.len() != abstract_ids.len()
        || results.iter().zip(abstract_ids).any(|((id, _), a)| id != a)
    {
        return Err(MetricsError::CountMismatch(
            results.len(),
            abstract_ids.len(),
        ));
    }
    let ok = results.iter().filter(|(_, v)| v.iter().all(|&b| b)).count();
    Ok(ok as f64 / results.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(pairs: &[(&str, &str)]) -> Element {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn sua_half() {
        let truth = vec![
            vec![el(&[("type", "car"), ("behaviors", "follow_lane")])],
            vec![el(&[("type", "truck"), ("behaviors", "cross")])],
        ];
        let ext = vec![
            vec![el(&[("type", "car"), ("behaviors", "follow_lane")])],
            vec![el(&[("type", "truck"), ("behaviors", "stand")])],
        ];
        assert!((sua(&ext, &truth).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(sua(&truth, &truth).unwrap(), 1.0);
        assert_eq!(sua(&[], &[]), Err(MetricsError::Empty));
        assert_eq!(
            sua(&ext[..1], &truth),
            Err(MetricsError::CountMismatch(1, 2))
        );
    }

    #[test]
    fn csc_counts() {
        let ids: Vec<String> = (0..4).map(|i| format!("s{i}")).collect();
        let mut r: Vec<(String, Vec<bool>)> =
            ids.iter().map(|i| (i.clone(), vec![true, true])).collect();
        assert_eq!(csc(&r, &ids).unwrap(), 1.0);
        r[2].1[1] = false;
        assert_eq!(csc(&r, &ids).unwrap(), 0.75);
        assert_eq!(csc(&[], &[]), Err(MetricsError::Empty));
        assert!(csc(&r[..3], &ids).is_err());
    }
}
