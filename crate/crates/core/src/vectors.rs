//! Term index and sparse TF-IDF matrix.
//!
//! `weight(d, t) = count(t, d) · ln(N / df(t))` with raw counts and no IDF
//! smoothing, so terms present in every document get weight zero and are
//! not stored.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("no terms in any document")]
    NoTerms,
    #[error("term `{0}` is not in the index")]
    UnknownTerm(String),
}

pub type Result<T> = std::result::Result<T, VectorError>;

/// A document as a bag of terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub counts: BTreeMap<String, u32>,
}

impl Document {
    pub fn from_tokens<S: AsRef<str>>(id: impl Into<String>, tokens: &[S]) -> Self {
        let mut counts = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.as_ref().to_owned()).or_insert(0) += 1;
        }
        Document { id: id.into(), counts }
    }
}

/// Sorted vocabulary with dense column positions.
#[derive(Debug, Clone, PartialEq)]
pub struct TermIndex {
    terms: Vec<String>,
    positions: HashMap<String, usize>,
}

impl TermIndex {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.positions.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub fn build_term_index(docs: &[Document]) -> Result<TermIndex> {
    let terms: BTreeSet<&str> = docs
        .iter()
        .flat_map(|d| d.counts.iter().filter(|(_, &c)| c > 0).map(|(t, _)| t.as_str()))
        .collect();
    if terms.is_empty() {
        return Err(VectorError::NoTerms);
    }
    let terms: Vec<String> = terms.into_iter().map(str::to_owned).collect();
    let positions = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(TermIndex { terms, positions })
}

/// Row-compressed TF-IDF weights; every stored weight is non-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfMatrix {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TfIdfMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Stored `(column, weight)` pairs of a row, by ascending column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.rows[row]
            .binary_search_by_key(&col, |&(c, _)| c)
            .map(|k| self.rows[row][k].1)
            .unwrap_or(0.0)
    }

    /// `(row, col, weight)` triplets sorted by row then column.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, w)| (r, c, w)))
    }

    /// Coordinate text format: `n_rows n_cols nnz`, then one
    /// `row col weight` line per stored entry.
    pub fn write_coo<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {} {}", self.n_rows(), self.n_cols, self.nnz())?;
        for (r, c, w) in self.triplets() {
            writeln!(out, "{r} {c} {w}")?;
        }
        Ok(())
    }
}

pub fn tfidf_matrix(docs: &[Document], index: &TermIndex) -> Result<TfIdfMatrix> {
    let mut df = vec![0usize; index.len()];
    for doc in docs {
        for (term, &count) in &doc.counts {
            let col = index
                .position(term)
                .ok_or_else(|| VectorError::UnknownTerm(term.clone()))?;
            if count > 0 {
                df[col] += 1;
            }
        }
    }
    let n = docs.len() as f64;
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { (n / d as f64).ln() })
        .collect();

    let rows = docs
        .iter()
        .map(|doc| {
            let mut row: Vec<(usize, f64)> = doc
                .counts
                .iter()
                .filter_map(|(term, &count)| {
                    let col = index.positions[term];
                    let w = count as f64 * idf[col];
                    (w != 0.0).then_some((col, w))
                })
                .collect();
            row.sort_by_key(|&(c, _)| c);
            row
        })
        .collect();
    Ok(TfIdfMatrix {
        n_cols: index.len(),
        rows,
    })
}
