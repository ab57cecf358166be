//! Itemset metrics and positive/negative association rules.
//!
//! Probabilities are always computed from integer transaction counts so that
//! support, confidence and lift are correctly rounded ratios. For a rule
//! `X ⇒ Y` over events `X`, `Y` (each either "itemset contained in the
//! transaction" or its complement):
//!
//! * support    = P(X ∧ Y)
//! * confidence = P(X ∧ Y) / P(X)
//! * lift       = P(X ∧ Y) / (P(X) · P(Y))

mod export;
mod mining;

use std::fmt;

use thiserror::Error;

use crate::corpus::Transaction;

pub use export::{export_rule_graph, write_rules_csv};
pub use mining::{apriori_frequent, fisinfis_mine, FrequentItemset};

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("transaction list is empty")]
    EmptyTransactions,
    #[error("itemset must contain at least one item")]
    EmptyItemset,
    #[error("antecedent and consequent share item `{0}`")]
    NotDisjoint(String),
    #[error("confidence undefined: antecedent event never occurs")]
    UndefinedConfidence,
    #[error("lift undefined: consequent event never occurs")]
    UndefinedLift,
    #[error("item `{0}` does not occur in any transaction")]
    AbsentItem(String),
    #[error("invalid mining config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, RuleError>;

/// A non-empty, sorted, duplicate-free set of items.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset(Vec<String>);

impl Itemset {
    pub fn new<I, S>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut items: Vec<String> = items.into_iter().map(Into::into).collect();
        items.sort();
        items.dedup();
        if items.is_empty() {
            return Err(RuleError::EmptyItemset);
        }
        Ok(Itemset(items))
    }

    pub(crate) fn from_sorted(items: Vec<String>) -> Self {
        debug_assert!(!items.is_empty() && items.windows(2).all(|w| w[0] < w[1]));
        Itemset(items)
    }

    pub fn items(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset_of(&self, t: &Transaction) -> bool {
        self.0.iter().all(|i| t.items.contains(i))
    }

    fn shared_item(&self, other: &Itemset) -> Option<&String> {
        self.0.iter().find(|i| other.0.binary_search(i).is_ok())
    }

    /// Items joined by `+`.
    pub fn label(&self) -> String {
        self.0.join("+")
    }
}

impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleMetrics {
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

impl RuleMetrics {
    /// Metrics from integer counts: `n` transactions, `antecedent` and
    /// `consequent` event counts and the joint count.
    pub fn from_counts(n: usize, antecedent: usize, consequent: usize, joint: usize) -> Result<Self> {
        if n == 0 {
            return Err(RuleError::EmptyTransactions);
        }
        if antecedent == 0 {
            return Err(RuleError::UndefinedConfidence);
        }
        if consequent == 0 {
            return Err(RuleError::UndefinedLift);
        }
        Ok(RuleMetrics {
            support: joint as f64 / n as f64,
            confidence: joint as f64 / antecedent as f64,
            lift: (joint as f64 * n as f64) / (antecedent as f64 * consequent as f64),
        })
    }
}

/// `antecedent ⇒ consequent` with optional negation of either side.
/// `(false, false)` is a positive rule, every other combination negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    pub neg_antecedent: bool,
    pub neg_consequent: bool,
    pub metrics: RuleMetrics,
}

impl Rule {
    pub fn is_positive(&self) -> bool {
        !self.neg_antecedent && !self.neg_consequent
    }

    fn side(items: &Itemset, negated: bool) -> String {
        if negated {
            format!("¬{}", items.label())
        } else {
            items.label()
        }
    }

    pub fn antecedent_label(&self) -> String {
        Self::side(&self.antecedent, self.neg_antecedent)
    }

    pub fn consequent_label(&self) -> String {
        Self::side(&self.consequent, self.neg_consequent)
    }

    pub(crate) fn order(a: &Rule, b: &Rule) -> std::cmp::Ordering {
        b.metrics
            .lift
            .total_cmp(&a.metrics.lift)
            .then_with(|| b.metrics.confidence.total_cmp(&a.metrics.confidence))
            .then_with(|| a.antecedent.cmp(&b.antecedent))
            .then_with(|| a.consequent.cmp(&b.consequent))
            .then_with(|| a.neg_antecedent.cmp(&b.neg_antecedent))
            .then_with(|| a.neg_consequent.cmp(&b.neg_consequent))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} => {} (s={:.3} c={:.3} l={:.3})",
            self.antecedent_label(),
            self.consequent_label(),
            self.metrics.support,
            self.metrics.confidence,
            self.metrics.lift
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningConfig {
    pub minsupp: f64,
    pub mincnf: f64,
    pub idf_min: f64,
    /// Upper IDF bound; `None` resolves to `ln(|T|) − 0.1`, which excludes
    /// items seen in a single transaction.
    pub idf_max: Option<f64>,
    pub max_itemset_size: usize,
    pub require_lift_gt1: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            minsupp: 0.05,
            mincnf: 0.6,
            idf_min: 0.1,
            idf_max: None,
            max_itemset_size: 4,
            require_lift_gt1: true,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x <= 1.0;
        if !in_unit(self.minsupp) {
            return Err(RuleError::Config(format!("minsupp {} not in (0, 1]", self.minsupp)));
        }
        if !in_unit(self.mincnf) {
            return Err(RuleError::Config(format!("mincnf {} not in (0, 1]", self.mincnf)));
        }
        if !(self.idf_min >= 0.0) {
            return Err(RuleError::Config(format!("idf_min {} is negative", self.idf_min)));
        }
        if let Some(max) = self.idf_max {
            if !(max > self.idf_min) {
                return Err(RuleError::Config(format!(
                    "idf_max {max} must exceed idf_min {}",
                    self.idf_min
                )));
            }
        }
        if self.max_itemset_size == 0 {
            return Err(RuleError::Config("max_itemset_size must be at least 1".into()));
        }
        Ok(())
    }

    /// The effective IDF band for a database of `n` transactions.
    pub fn idf_band(&self, n: usize) -> (f64, f64) {
        let max = self.idf_max.unwrap_or_else(|| (n as f64).ln() - 0.1);
        (self.idf_min, max)
    }
}

fn count_where(t: &[Transaction], pred: impl Fn(&Transaction) -> bool) -> usize {
    t.iter().filter(|x| pred(x)).count()
}

/// Fraction of transactions containing every item of `s`.
pub fn support(s: &Itemset, t: &[Transaction]) -> Result<f64> {
    if t.is_empty() {
        return Err(RuleError::EmptyTransactions);
    }
    Ok(count_where(t, |x| s.is_subset_of(x)) as f64 / t.len() as f64)
}

/// P(s ⊆ t) or, when `negated`, P(s ⊄ t).
pub fn event_probability(s: &Itemset, negated: bool, t: &[Transaction]) -> Result<f64> {
    if t.is_empty() {
        return Err(RuleError::EmptyTransactions);
    }
    Ok(count_where(t, |x| s.is_subset_of(x) != negated) as f64 / t.len() as f64)
}

pub fn rule_metrics(
    antecedent: &Itemset,
    consequent: &Itemset,
    neg_antecedent: bool,
    neg_consequent: bool,
    t: &[Transaction],
) -> Result<RuleMetrics> {
    if t.is_empty() {
        return Err(RuleError::EmptyTransactions);
    }
    if let Some(item) = antecedent.shared_item(consequent) {
        return Err(RuleError::NotDisjoint(item.clone()));
    }
    let ev_a = |x: &Transaction| antecedent.is_subset_of(x) != neg_antecedent;
    let ev_b = |x: &Transaction| consequent.is_subset_of(x) != neg_consequent;
    RuleMetrics::from_counts(
        t.len(),
        count_where(t, ev_a),
        count_where(t, ev_b),
        count_where(t, |x| ev_a(x) && ev_b(x)),
    )
}

/// Natural-log inverse document frequency of `item`.
pub fn idf(item: &str, t: &[Transaction]) -> Result<f64> {
    if t.is_empty() {
        return Err(RuleError::EmptyTransactions);
    }
    let df = count_where(t, |x| x.items.contains(item));
    if df == 0 {
        return Err(RuleError::AbsentItem(item.to_owned()));
    }
    Ok((t.len() as f64 / df as f64).ln())
}
