use super::MetricsError;
use crate::vocab::Action;
use num_traits::Num;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Insert/delete cost plus a symmetric replacement table.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModel<C> {
    indel: C,
    default_replacement: C,
    table: BTreeMap<(Action, Action), C>,
}

fn key(a: Action, b: Action) -> (Action, Action) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<C: Num + PartialOrd + Copy> CostModel<C> {
    /// Every replacement costs `replacement`, every insertion or deletion `indel`.
    pub fn uniform(indel: C, replacement: C) -> Self {
        CostModel {
            indel,
            default_replacement: replacement,
            table: BTreeMap::new(),
        }
    }

    pub fn with_pair(mut self, a: Action, b: Action, cost: C) -> Self {
        self.table.insert(key(a, b), cost);
        self
    }

    pub fn indel(&self) -> C {
        self.indel
    }

    pub fn replacement(&self, a: Action, b: Action) -> C {
        if a == b {
            return C::zero();
        }
        self.table
            .get(&key(a, b))
            .copied()
            .unwrap_or(self.default_replacement)
    }

    pub fn scaled(&self, k: C) -> Self {
        CostModel {
            indel: self.indel * k,
            default_replacement: self.default_replacement * k,
            table: self.table.iter().map(|(&p, &c)| (p, c * k)).collect(),
        }
    }
}

impl CostModel<f64> {
    /// Longitudinal and pedestrian families are cheap to confuse,
    /// opposite directions are expensive.
    pub fn standard() -> Self {
        use Action::*;
        let mut m = CostModel::uniform(1.0, 1.0);
        for fam in [
            &[Accelerate, Decelerate, Brake, Stop][..],
            &[WalkAlong, WalkAcross, Stand][..],
        ] {
            for (i, &a) in fam.iter().enumerate() {
                for &b in &fam[i + 1..] {
                    m = m.with_pair(a, b, 0.5);
                }
            }
        }
        m.with_pair(ChangeLeft, ChangeRight, 2.0)
            .with_pair(TurnLeft, TurnRight, 2.0)
    }

    pub fn to_file(&self) -> CostModelFile {
        CostModelFile {
            lambda_indel: self.indel,
            default_replacement: self.default_replacement,
            replacement: self
                .table
                .iter()
                .map(|(&(a, b), &c)| (format!("{a}|{b}"), c))
                .collect(),
        }
    }

    pub fn from_file(file: &CostModelFile) -> Result<Self, MetricsError> {
        let bad = |m: String| MetricsError::CostModel(m);
        let finite_non_negative = |c: f64| c.is_finite() && c >= 0.0;
        if !finite_non_negative(file.lambda_indel) || !finite_non_negative(file.default_replacement)
        {
            return Err(bad("costs must be finite and non-negative".into()));
        }
        let mut m = CostModel::uniform(file.lambda_indel, file.default_replacement);
        for (pair, &cost) in &file.replacement {
            let (a, b) = pair
                .split_once('|')
                .ok_or_else(|| bad(format!("pair `{pair}` must be `a|b`")))?;
            let a: Action = a.trim().parse().map_err(|e| bad(format!("{e}")))?;
            let b: Action = b.trim().parse().map_err(|e| bad(format!("{e}")))?;
            if !finite_non_negative(cost) {
                return Err(bad(format!(
                    "cost for `{pair}` must be finite and non-negative"
                )));
            }
            if a == b && cost != 0.0 {
                return Err(bad(format!("replacing `{a}` with itself must cost 0")));
            }
            if let Some(&prev) = m.table.get(&key(a, b)) {
                if prev != cost {
                    return Err(bad(format!("asymmetric costs for `{a}` and `{b}`")));
                }
            }
            m.table.insert(key(a, b), cost);
        }
        Ok(m)
    }
}

/// JSON form: `{"lambda_indel": 1.0, "default_replacement": 1.0, "replacement": {"brake|decelerate": 0.5}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModelFile {
    pub lambda_indel: f64,
    pub default_replacement: f64,
    #[serde(default)]
    pub replacement: BTreeMap<String, f64>,
}

fn min2<C: PartialOrd>(a: C, b: C) -> C {
    if b < a {
        b
    } else {
        a
    }
}

/// Weighted Levenshtein distance turning `from` into `to`.
pub fn behavior_distance<C: Num + PartialOrd + Copy>(
    from: &[Action],
    to: &[Action],
    model: &CostModel<C>,
) -> C {
    let n = to.len();
    let mut prev: Vec<C> = Vec::with_capacity(n + 1);
    let mut acc = C::zero();
    prev.push(acc);
    for _ in 0..n {
        acc = acc + model.indel;
        prev.push(acc);
    }
    let mut cur = vec![C::zero(); n + 1];
    for &a in from {
        cur[0] = prev[0] + model.indel;
        for j in 1..=n {
            let b = to[j - 1];
            cur[j] = if a == b {
                prev[j - 1]
            } else {
                let del = prev[j] + model.indel;
                let ins = cur[j - 1] + model.indel;
                let rep = prev[j - 1] + model.replacement(a, b);
                min2(min2(del, ins), rep)
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Action::*;

    #[test]
    fn worked_pair() {
        let h = [FollowLane, Decelerate, ChangeRight, Accelerate, Cross];
        let e = [
            FollowLane,
            Brake,
            ChangeRight,
            Accelerate,
            Decelerate,
            Cross,
        ];
        let m = CostModel::standard();
        let expected = m.replacement(Brake, Decelerate) + m.indel();
        assert_eq!(behavior_distance(&e, &h, &m), expected);
        assert_eq!(behavior_distance(&e, &h, &m), 1.5);
        assert_eq!(behavior_distance(&h, &e, &m), 1.5);
    }

    #[test]
    fn identities() {
        let m = CostModel::standard();
        assert_eq!(behavior_distance(&[], &[], &m), 0.0);
        assert_eq!(behavior_distance(&[Brake, Stop], &[Brake, Stop], &m), 0.0);
        assert_eq!(behavior_distance(&[], &[Brake, Stop, Cross], &m), 3.0);
        assert_eq!(behavior_distance(&[ChangeLeft], &[ChangeRight], &m), 2.0);
        assert_eq!(behavior_distance(&[ChangeLeft], &[Brake], &m), 1.0);
        assert_eq!(behavior_distance(&[Stand], &[WalkAcross], &m), 0.5);
    }

    #[test]
    fn integer_costs() {
        let m = CostModel::<u32>::uniform(2, 3).with_pair(Brake, Stop, 1);
        assert_eq!(behavior_distance(&[Brake], &[Stop], &m), 1);
        assert_eq!(behavior_distance(&[Cross], &[Stop], &m), 3);
        assert_eq!(behavior_distance(&[Cross, Cross], &[], &m), 4);
    }

    #[test]
    fn file_round_trip_and_validation() {
        let m = CostModel::standard();
        let json = serde_json::to_string(&m.to_file()).unwrap();
        let back = CostModel::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, m);
        let neg = CostModelFile {
            lambda_indel: -1.0,
            default_replacement: 1.0,
            replacement: BTreeMap::new(),
        };
        assert!(CostModel::from_file(&neg).is_err());
        let mut asym = CostModelFile {
            lambda_indel: 1.0,
            default_replacement: 1.0,
            replacement: BTreeMap::new(),
        };
        asym.replacement.insert("brake|stop".into(), 0.5);
        asym.replacement.insert("stop|brake".into(), 0.7);
        assert!(CostModel::from_file(&asym).is_err());
        let mut diag = asym.clone();
        diag.replacement.clear();
        diag.replacement.insert("stop|stop".into(), 1.0);
        assert!(CostModel::from_file(&diag).is_err());
    }

    fn seq() -> impl Strategy<Value = Vec<Action>> {
        proptest::collection::vec(proptest::sample::select(Action::ALL.to_vec()), 0..7)
    }

    proptest! {
        #[test]
        fn symmetric_and_zero_on_diagonal(a in seq(), b in seq()) {
            let m = CostModel::standard();
            prop_assert_eq!(behavior_distance(&a, &a, &m), 0.0);
            prop_assert_eq!(behavior_distance(&a, &b, &m), behavior_distance(&b, &a, &m));
        }

        #[test]
        fn scaling_preserves_ranking(target in seq(), cands in proptest::collection::vec(seq(), 2..6), k in 0.1..10.0f64) {
            let m = CostModel::standard();
            let s = m.scaled(k);
            for x in &cands {
                for y in &cands {
                    let (dx, dy) = (behavior_distance(x, &target, &m), behavior_distance(y, &target, &m));
                    let (sx, sy) = (behavior_distance(x, &target, &s), behavior_distance(y, &target, &s));
                    prop_assert!((sx - k * dx).abs() < 1e-9 * (1.0 + sx));
                    if dx + 1e-12 < dy { prop_assert!(sx < sy); }
                }
            }
        }
    }
}
