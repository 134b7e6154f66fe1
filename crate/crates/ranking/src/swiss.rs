use std::collections::{BTreeMap, BTreeSet};

/// Pairs of adjacent players in `order` (best first), avoiding rematches
/// while any rematch-free pairing exists. With an odd count the
/// lowest-ranked player without a previous bye sits out (the lowest-ranked
/// overall if everyone had one).
pub fn swiss_pairings(
    order: &[String],
    met: &BTreeMap<String, BTreeSet<String>>,
    byes: &BTreeMap<String, u32>,
) -> (Vec<(String, String)>, Option<String>) {
    let mut players: Vec<&String> = order.iter().collect();
    let bye = if players.len() % 2 == 1 {
        let k = (0..players.len())
            .rev()
            .find(|&k| byes.get(players[k]).copied().unwrap_or(0) == 0)
            .unwrap_or(players.len() - 1);
        Some(players.remove(k).clone())
    } else {
        None
    };
    let has_met = |a: &str, b: &str| met.get(a).is_some_and(|s| s.contains(b));
    let pairs = match pair_without_rematch(&players, &has_met) {
        Some(p) => p,
        None => players.chunks(2).map(|c| (c[0], c[1])).collect(),
    };
    (pairs.into_iter().map(|(a, b)| (a.clone(), b.clone())).collect(), bye)
}

/// Depth-first search preferring the nearest-ranked opponent.
fn pair_without_rematch<'a>(players: &[&'a String], has_met: &impl Fn(&str, &str) -> bool) -> Option<Vec<(&'a String, &'a String)>> {
    let Some((&first, rest)) = players.split_first() else {
        return Some(Vec::new());
    };
    for k in 0..rest.len() {
        if has_met(first, rest[k]) {
            continue;
        }
        let mut remaining = rest.to_vec();
        let second = remaining.remove(k);
        if let Some(mut tail) = pair_without_rematch(&remaining, has_met) {
            tail.insert(0, (first, second));
            return Some(tail);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn adjacent_pairs_and_bye() {
        let (p, bye) = swiss_pairings(&ids(4), &BTreeMap::new(), &BTreeMap::new());
        assert_eq!(p, vec![("p0".into(), "p1".into()), ("p2".into(), "p3".into())]);
        assert_eq!(bye, None);
        let (p, bye) = swiss_pairings(&ids(5), &BTreeMap::new(), &BTreeMap::new());
        assert_eq!(p.len(), 2);
        assert_eq!(bye.as_deref(), Some("p4"));
        let byes = BTreeMap::from([("p4".to_string(), 1)]);
        let (_, bye) = swiss_pairings(&ids(5), &BTreeMap::new(), &byes);
        assert_eq!(bye.as_deref(), Some("p3"));
    }

    #[test]
    fn avoids_rematches_until_exhausted() {
        let mut met: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut meet = |a: &str, b: &str| {
            met.entry(a.into()).or_default().insert(b.into());
            met.entry(b.into()).or_default().insert(a.into());
        };
        meet("p0", "p1");
        meet("p2", "p3");
        let (p, _) = swiss_pairings(&ids(4), &met, &BTreeMap::new());
        assert_eq!(p, vec![("p0".into(), "p2".into()), ("p1".into(), "p3".into())]);
        let mut met = met.clone();
        for (a, b) in [("p0", "p2"), ("p1", "p3"), ("p0", "p3"), ("p1", "p2")] {
            met.entry(a.into()).or_default().insert(b.into());
            met.entry(b.into()).or_default().insert(a.into());
        }
        let (p, _) = swiss_pairings(&ids(4), &met, &BTreeMap::new());
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|(a, b)| a != b));
    }
}
