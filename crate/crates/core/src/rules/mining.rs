//! Level-wise itemset enumeration and FISinFIS-style rule generation.
//!
//! Items are interned to dense ids and each itemset carries the sorted list
//! of transaction indices that contain it, so the count of a `k`-candidate
//! is the size of the intersection of its prefix's list with its last
//! item's list.

use std::collections::{BTreeMap, HashMap};

use super::{MiningConfig, Result, Rule, RuleError, RuleMetrics, Itemset};
use crate::corpus::Transaction;

type ItemId = u32;
type TidList = Vec<u32>;

/// An itemset together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequentItemset {
    pub itemset: Itemset,
    pub support: f64,
}

/// Vertical view of the transaction database restricted to a chosen item
/// universe.
struct ItemDb {
    names: Vec<String>,
    tids: Vec<TidList>,
    n: usize,
}

impl ItemDb {
    fn build(t: &[Transaction], keep: impl Fn(&str, usize) -> bool) -> Self {
        let mut by_item: BTreeMap<&str, TidList> = BTreeMap::new();
        for (tid, x) in t.iter().enumerate() {
            for item in &x.items {
                by_item.entry(item.as_str()).or_default().push(tid as u32);
            }
        }
        let mut names = Vec::new();
        let mut tids = Vec::new();
        for (name, list) in by_item {
            if keep(name, list.len()) {
                names.push(name.to_owned());
                tids.push(list);
            }
        }
        ItemDb { names, tids, n: t.len() }
    }

    fn itemset(&self, ids: &[ItemId]) -> Itemset {
        Itemset::from_sorted(ids.iter().map(|&i| self.names[i as usize].clone()).collect())
    }
}

fn intersect(a: &[u32], b: &[u32]) -> TidList {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Admitted itemsets with their counts, in level then lexicographic order.
struct Lattice {
    admitted: Vec<(Vec<ItemId>, usize)>,
}

/// Apriori: level `k` candidates are joins of admitted `k−1` itemsets sharing
/// a `k−2` prefix, kept only if every `k−1` subset was admitted.
fn levelwise(db: &ItemDb, max_size: usize, admit: impl Fn(usize) -> bool) -> Lattice {
    let mut admitted = Vec::new();

    let mut level: Vec<(Vec<ItemId>, TidList)> = Vec::new();
    for (id, list) in db.tids.iter().enumerate() {
        let key = vec![id as ItemId];
        if admit(list.len()) {
            level.push((key, list.clone()));
        }
    }

    let mut size = 1;
    while !level.is_empty() {
        admitted.extend(level.iter().map(|(k, l)| (k.clone(), l.len())));
        if size >= max_size {
            break;
        }
        let members: std::collections::HashSet<&[ItemId]> =
            level.iter().map(|(k, _)| k.as_slice()).collect();
        let mut next = Vec::new();
        let mut start = 0;
        while start < level.len() {
            let prefix = &level[start].0[..size - 1];
            let mut end = start + 1;
            while end < level.len() && &level[end].0[..size - 1] == prefix {
                end += 1;
            }
            for i in start..end {
                for j in i + 1..end {
                    let last = *level[j].0.last().unwrap();
                    let mut cand = level[i].0.clone();
                    cand.push(last);
                    let all_subsets_in = (0..cand.len() - 2).all(|drop| {
                        let sub: Vec<ItemId> = cand
                            .iter()
                            .enumerate()
                            .filter(|&(p, _)| p != drop)
                            .map(|(_, &v)| v)
                            .collect();
                        members.contains(sub.as_slice())
                    });
                    if !all_subsets_in {
                        continue;
                    }
                    let list = intersect(&level[i].1, &db.tids[last as usize]);
                    if admit(list.len()) {
                        next.push((cand, list));
                    }
                }
            }
            start = end;
        }
        level = next;
        size += 1;
    }
    Lattice { admitted }
}

fn meets(count: usize, n: usize, threshold: f64) -> bool {
    count as f64 / n as f64 >= threshold
}

/// All itemsets of at most `max_size` items whose support is at least
/// `minsupp`, in level order then lexicographic order.
pub fn apriori_frequent(
    t: &[Transaction],
    minsupp: f64,
    max_size: usize,
) -> Result<Vec<FrequentItemset>> {
    if t.is_empty() {
        return Err(RuleError::EmptyTransactions);
    }
    let db = ItemDb::build(t, |_, _| true);
    let n = db.n;
    let lattice = levelwise(&db, max_size, |c| c > 0 && meets(c, n, minsupp));
    Ok(lattice
        .admitted
        .into_iter()
        .map(|(ids, c)| FrequentItemset {
            itemset: db.itemset(&ids),
            support: c as f64 / n as f64,
        })
        .collect())
}

struct RuleSink<'a> {
    db: &'a ItemDb,
    config: &'a MiningConfig,
    rules: Vec<Rule>,
}

impl RuleSink<'_> {
    fn offer(
        &mut self,
        a: &[ItemId],
        b: &[ItemId],
        neg_a: bool,
        neg_b: bool,
        (ca, cb, cab): (usize, usize, usize),
    ) {
        let Ok(metrics) = RuleMetrics::from_counts(self.db.n, ca, cb, cab) else {
            return;
        };
        let cfg = self.config;
        if !meets(cab, self.db.n, cfg.minsupp) || !(metrics.confidence >= cfg.mincnf) {
            return;
        }
        if cfg.require_lift_gt1 && !(metrics.lift > 1.0) {
            return;
        }
        self.rules.push(Rule {
            antecedent: self.db.itemset(a),
            consequent: self.db.itemset(b),
            neg_antecedent: neg_a,
            neg_consequent: neg_b,
            metrics,
        });
    }
}

fn union_sorted(a: &[ItemId], b: &[ItemId]) -> Option<Vec<ItemId>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => return None,
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some(out)
}

/// Mines positive and negative association rules.
///
/// 1. Items whose IDF falls outside `[idf_min, idf_max]` are discarded.
/// 2. A level-wise pass enumerates every itemset (up to
///    `max_itemset_size` items) that occurs in at least one transaction;
///    those with support ≥ `minsupp` form the frequent itemsets, the rest
///    the infrequent itemsets.
/// 3. Positive rules `A ⇒ B` come from splits of frequent itemsets.
/// 4. Negative rules `A ⇒ ¬B`, `¬A ⇒ B` and `¬A ⇒ ¬B` pair frequent and
///    infrequent itemsets; a rule is admitted when its support on the
///    (possibly negated) events reaches `minsupp`, its confidence reaches
///    `mincnf` and, if `require_lift_gt1`, its lift exceeds 1.
///
/// Rules are sorted by lift, then confidence (both descending), then
/// lexicographically.
pub fn fisinfis_mine(t: &[Transaction], config: &MiningConfig) -> Result<Vec<Rule>> {
    if t.is_empty() {
        return Err(RuleError::EmptyTransactions);
    }
    config.validate()?;
    let n = t.len();
    let (idf_lo, idf_hi) = config.idf_band(n);
    let db = ItemDb::build(t, |_, df| {
        let idf = (n as f64 / df as f64).ln();
        idf >= idf_lo && idf <= idf_hi
    });

    let lattice = levelwise(&db, config.max_itemset_size, |c| c > 0);
    let counts: HashMap<&[ItemId], usize> = lattice
        .admitted
        .iter()
        .map(|(k, c)| (k.as_slice(), *c))
        .collect();
    let count_of = |ids: &[ItemId]| counts.get(ids).copied().unwrap_or(0);
    let frequent: Vec<&(Vec<ItemId>, usize)> = lattice
        .admitted
        .iter()
        .filter(|(_, c)| meets(*c, n, config.minsupp))
        .collect();
    let pool = &lattice.admitted;

    let mut sink = RuleSink {
        db: &db,
        config,
        rules: Vec::new(),
    };

    // A ⇒ B and ¬A ⇒ ¬B over splits of an occurring itemset A ∪ B.
    for (x, cx) in pool.iter().filter(|(x, _)| x.len() >= 2) {
        let k = x.len();
        for mask in 1..(1u32 << k) - 1 {
            let (a, b): (Vec<ItemId>, Vec<ItemId>) = {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (p, &id) in x.iter().enumerate() {
                    if mask & (1 << p) != 0 {
                        a.push(id);
                    } else {
                        b.push(id);
                    }
                }
                (a, b)
            };
            let (ca, cb) = (count_of(&a), count_of(&b));
            if meets(*cx, n, config.minsupp) {
                sink.offer(&a, &b, false, false, (ca, cb, *cx));
            }
            if config.require_lift_gt1 {
                sink.offer(&a, &b, true, true, (n - ca, n - cb, n + cx - ca - cb));
            }
        }
    }

    let within_size = |a: &[ItemId], b: &[ItemId]| a.len() + b.len() <= config.max_itemset_size;

    // A ⇒ ¬B needs A frequent; ¬A ⇒ B needs B frequent.
    for (a, ca) in &frequent {
        for (b, cb) in pool {
            if !within_size(a, b) {
                continue;
            }
            let Some(x) = union_sorted(a, b) else { continue };
            let cab = count_of(&x);
            sink.offer(a, b, false, true, (*ca, n - cb, ca - cab));
            sink.offer(b, a, true, false, (n - cb, *ca, ca - cab));
        }
    }

    // Without the lift filter, ¬A ⇒ ¬B may hold for pairs that never
    // co-occur, so every pair of occurring itemsets is a candidate.
    if !config.require_lift_gt1 {
        for (a, ca) in pool {
            for (b, cb) in pool {
                if !within_size(a, b) {
                    continue;
                }
                let Some(x) = union_sorted(a, b) else { continue };
                let cab = count_of(&x);
                sink.offer(a, b, true, true, (n - ca, n - cb, n + cab - ca - cb));
            }
        }
    }

    let mut rules = sink.rules;
    rules.sort_by(Rule::order);
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> Vec<Transaction> {
        vec![
            Transaction::new("1", ["a", "b"]),
            Transaction::new("2", ["a", "b"]),
            Transaction::new("3", ["a", "b"]),
            Transaction::new("4", ["c"]),
        ]
    }

    fn labels(fis: &[FrequentItemset]) -> Vec<(String, f64)> {
        fis.iter().map(|f| (f.itemset.label(), f.support)).collect()
    }

    fn config(minsupp: f64, mincnf: f64, idf_min: f64, idf_max: f64) -> MiningConfig {
        MiningConfig {
            minsupp,
            mincnf,
            idf_min,
            idf_max: Some(idf_max),
            max_itemset_size: 4,
            require_lift_gt1: true,
        }
    }

    fn find<'r>(rules: &'r [Rule], a: &str, b: &str, na: bool, nb: bool) -> Option<&'r Rule> {
        rules.iter().find(|r| {
            r.antecedent.label() == a
                && r.consequent.label() == b
                && r.neg_antecedent == na
                && r.neg_consequent == nb
        })
    }

    #[test]
    fn apriori_fixture() {
        let fis = apriori_frequent(&fixture(), 0.5, 4).unwrap();
        assert_eq!(
            labels(&fis),
            vec![("a".into(), 0.75), ("b".into(), 0.75), ("a+b".into(), 0.75)]
        );
    }

    #[test]
    fn apriori_edge_cases() {
        assert!(apriori_frequent(&fixture(), 1.0, 4).unwrap().is_empty());
        let singles = apriori_frequent(&fixture(), 1e-9, 1).unwrap();
        assert_eq!(singles.len(), 3);
        assert!(singles.iter().all(|f| f.itemset.len() == 1));
        assert_eq!(apriori_frequent(&[], 0.5, 4), Err(RuleError::EmptyTransactions));
    }

    #[test]
    fn apriori_three_levels() {
        let t = vec![
            Transaction::new("1", ["a", "b", "c"]),
            Transaction::new("2", ["a", "b", "c"]),
            Transaction::new("3", ["a", "b"]),
            Transaction::new("4", ["c", "d"]),
        ];
        let fis = apriori_frequent(&t, 0.5, 3).unwrap();
        let got: Vec<String> = fis.iter().map(|f| f.itemset.label()).collect();
        assert_eq!(got, ["a", "b", "c", "a+b", "a+c", "b+c", "a+b+c"]);
        assert_eq!(fis.last().unwrap().support, 0.5);
    }

    #[test]
    fn fisinfis_fixture() {
        let rules = fisinfis_mine(&fixture(), &config(0.5, 0.8, 0.0, 10.0)).unwrap();
        for (a, b) in [("a", "b"), ("b", "a")] {
            let r = find(&rules, a, b, false, false).expect("PAR missing");
            assert_eq!(r.metrics.confidence, 1.0);
            assert!((r.metrics.lift - 4.0 / 3.0).abs() < 1e-12);
        }
        let nar = find(&rules, "a", "c", false, true).expect("a => ¬c missing");
        assert_eq!(nar.metrics.support, 0.75);
        assert_eq!(nar.metrics.confidence, 1.0);
        assert!((nar.metrics.lift - 4.0 / 3.0).abs() < 1e-12);
        for pair in rules.windows(2) {
            assert!(Rule::order(&pair[0], &pair[1]).is_lt());
        }
    }

    #[test]
    fn fisinfis_idf_floor_removes_item() {
        // b shares a's IDF, leaving only c: nothing left to pair
        let rules = fisinfis_mine(&fixture(), &config(0.5, 0.8, 0.3, 10.0)).unwrap();
        assert!(rules.is_empty());
        // a in 4 of 5 (idf 0.22) is cut, b and c survive
        let mut t = fixture();
        t.push(Transaction::new("5", ["a", "c"]));
        let rules = fisinfis_mine(&t, &config(0.2, 0.5, 0.3, 10.0)).unwrap();
        assert!(!rules.is_empty());
        for r in &rules {
            assert!(!r.antecedent.items().contains(&"a".to_string()));
            assert!(!r.consequent.items().contains(&"a".to_string()));
        }
    }

    #[test]
    fn fisinfis_minsupp_one_is_empty() {
        let rules = fisinfis_mine(&fixture(), &config(1.0, 0.8, 0.0, 10.0)).unwrap();
        assert!(rules.is_empty());
        assert_eq!(
            fisinfis_mine(&[], &config(0.5, 0.8, 0.0, 10.0)),
            Err(RuleError::EmptyTransactions)
        );
    }

    #[test]
    fn union_rejects_overlap() {
        assert_eq!(union_sorted(&[1, 3], &[2]), Some(vec![1, 2, 3]));
        assert_eq!(union_sorted(&[1, 3], &[3]), None);
    }
}
