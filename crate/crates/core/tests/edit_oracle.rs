use scenforge_core::metrics::behavior_distance;
use scenforge_core::vocab::Action;
use scenforge_core::CostModel;

const ALPHABET: [Action; 6] = [
    Action::FollowLane,
    Action::ChangeLeft,
    Action::ChangeRight,
    Action::Brake,
    Action::Decelerate,
    Action::Stop,
];

/// Minimum over every edit script, by exhaustive recursion without memoisation.
fn brute_force(a: &[Action], b: &[Action], m: &CostModel) -> f64 {
    match (a.split_first(), b.split_first()) {
        (None, None) => 0.0,
        (Some((_, ra)), None) => m.indel() + brute_force(ra, b, m),
        (None, Some((_, rb))) => m.indel() + brute_force(a, rb, m),
        (Some((&x, ra)), Some((&y, rb))) => {
            let del = m.indel() + brute_force(ra, b, m);
            let ins = m.indel() + brute_force(a, rb, m);
            let rep = m.replacement(x, y) + brute_force(ra, rb, m);
            del.min(ins).min(rep)
        }
    }
}

fn all_sequences(max_len: usize) -> Vec<Vec<Action>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &a in &ALPHABET {
                let mut t: Vec<Action> = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn dp_matches_exhaustive_scripts_up_to_length_three() {
    let m = CostModel::standard();
    let seqs = all_sequences(3);
    for a in &seqs {
        for b in &seqs {
            assert_eq!(
                behavior_distance(a, b, &m),
                brute_force(a, b, &m),
                "{a:?} -> {b:?}"
            );
        }
    }
}
