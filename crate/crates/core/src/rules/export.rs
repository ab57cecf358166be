use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io;

use super::{Itemset, Rule};

/// Writes `antecedent,consequent,neg_a,neg_c,support,confidence,lift`
/// rows; items are `+`-joined and metrics printed with 6 decimals.
pub fn write_rules_csv<W: io::Write>(rules: &[Rule], mut out: W) -> io::Result<()> {
    writeln!(out, "antecedent,consequent,neg_a,neg_c,support,confidence,lift")?;
    for r in rules {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            csv_field(&r.antecedent.label()),
            csv_field(&r.consequent.label()),
            r.neg_antecedent,
            r.neg_consequent,
            r.metrics.support,
            r.metrics.confidence,
            r.metrics.lift
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders rules as a GraphViz digraph.
///
/// Each distinct itemset is one box node labelled with its `+`-joined
/// items. Each rule is an edge antecedent → consequent labelled with its
/// metrics; negative rules are dashed and carry `¬<items>` as tail and/or
/// head label on the negated side. Nodes and edges are emitted in sorted
/// order, so the output depends only on the rule set.
pub fn export_rule_graph(rules: &[Rule]) -> String {
    let nodes: BTreeSet<&Itemset> = rules
        .iter()
        .flat_map(|r| [&r.antecedent, &r.consequent])
        .collect();
    let ids: BTreeMap<&Itemset, usize> = nodes.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    let mut edges: Vec<&Rule> = rules.iter().collect();
    edges.sort_by(|a, b| {
        (&a.antecedent, &a.consequent, a.neg_antecedent, a.neg_consequent).cmp(&(
            &b.antecedent,
            &b.consequent,
            b.neg_antecedent,
            b.neg_consequent,
        ))
    });

    let mut dot = String::from("digraph rules {\n  rankdir=LR;\n  node [shape=box];\n");
    for (i, s) in nodes.iter().enumerate() {
        let _ = writeln!(dot, "  n{i} [label=\"{}\"];", dot_escape(&s.label()));
    }
    for r in edges {
        let mut attrs = vec![format!(
            "label=\"s={:.3} c={:.3} l={:.3}\"",
            r.metrics.support, r.metrics.confidence, r.metrics.lift
        )];
        if !r.is_positive() {
            attrs.push("style=dashed".into());
        }
        if r.neg_antecedent {
            attrs.push(format!("taillabel=\"{}\"", dot_escape(&r.antecedent_label())));
        }
        if r.neg_consequent {
            attrs.push(format!("headlabel=\"{}\"", dot_escape(&r.consequent_label())));
        }
        let _ = writeln!(
            dot,
            "  n{} -> n{} [{}];",
            ids[&r.antecedent],
            ids[&r.consequent],
            attrs.join(", ")
        );
    }
    dot.push_str("}\n");
    dot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::RuleMetrics;

    fn rule(a: &str, b: &str, na: bool, nb: bool) -> Rule {
        Rule {
            antecedent: Itemset::new([a]).unwrap(),
            consequent: Itemset::new([b]).unwrap(),
            neg_antecedent: na,
            neg_consequent: nb,
            metrics: RuleMetrics {
                support: 0.75,
                confidence: 1.0,
                lift: 4.0 / 3.0,
            },
        }
    }

    #[test]
    fn single_par() {
        let dot = export_rule_graph(&[rule("a", "b", false, false)]);
        assert_eq!(
            dot,
            "digraph rules {\n  rankdir=LR;\n  node [shape=box];\n  n0 [label=\"a\"];\n  n1 [label=\"b\"];\n  n0 -> n1 [label=\"s=0.750 c=1.000 l=1.333\"];\n}\n"
        );
    }

    #[test]
    fn single_nar_is_dashed() {
        let dot = export_rule_graph(&[rule("a", "c", false, true)]);
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("headlabel=\"¬c\""));
        assert!(!dot.contains("taillabel"));
    }

    #[test]
    fn empty_graph() {
        assert_eq!(
            export_rule_graph(&[]),
            "digraph rules {\n  rankdir=LR;\n  node [shape=box];\n}\n"
        );
    }

    #[test]
    fn order_independent() {
        let rs = vec![rule("b", "a", true, false), rule("a", "c", false, true), rule("a", "b", false, false)];
        let mut rev = rs.clone();
        rev.reverse();
        assert_eq!(export_rule_graph(&rs), export_rule_graph(&rev));
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_rules_csv(&[rule("a", "c", false, true)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "antecedent,consequent,neg_a,neg_c,support,confidence,lift\na,c,false,true,0.750000,1.000000,1.333333\n"
        );
    }
}
