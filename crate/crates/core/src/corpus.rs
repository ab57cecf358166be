//! Incident records, text normalisation and the transaction database.
//!
//! A corpus is a list of `(id, dynamics, consequence)` records. The dynamics
//! text of every record is normalised (NFC, lowercase), split into alphabetic
//! runs, filtered by length and stopwords, optionally passed through a
//! word → TAG ontology, and finally collapsed into a set of items.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Deserialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_it.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("record at line {0} has an empty id")]
    EmptyId(u64),
    #[error("corpus {0} contains no usable records")]
    EmptyCorpus(PathBuf),
    #[error("every record tokenised to an empty item set")]
    EmptyTransactions,
    #[error("invalid ontology: {0}")]
    Ontology(String),
    #[error("invalid preprocessing config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: String,
    pub dynamics: String,
    pub consequence: String,
}

/// Input file layout for [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guesses the format from the file extension; anything but `.jsonl` /
    /// `.json` is treated as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("json") => {
                CorpusFormat::Jsonl
            }
            _ => CorpusFormat::Csv,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub source: PathBuf,
    /// Seconds since the Unix epoch at load time.
    pub loaded_at: u64,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<RawRecord>,
    pub provenance: Provenance,
}

impl Corpus {
    /// Builds an in-memory corpus, enforcing the same invariants as
    /// [`load_corpus`].
    pub fn from_records(records: Vec<RawRecord>, source: impl Into<PathBuf>) -> Result<Self> {
        let source = source.into();
        if records.is_empty() {
            return Err(CorpusError::EmptyCorpus(source));
        }
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if r.id.is_empty() {
                return Err(CorpusError::EmptyId(i as u64 + 1));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Corpus {
            records,
            provenance: Provenance {
                source,
                loaded_at: now_secs(),
            },
        })
    }

    pub fn records(&self) -> &[RawRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub loaded: usize,
    /// Rows whose dynamics field was a missing-value placeholder.
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    stopwords: HashSet<String>,
    min_token_len: usize,
    placeholders: HashSet<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: parse_word_list(DEFAULT_STOPWORDS),
            min_token_len: 2,
            placeholders: default_placeholders(),
        }
    }
}

fn default_placeholders() -> HashSet<String> {
    ["", "ND", "N.D.", "-"].iter().map(|s| s.to_string()).collect()
}

impl PreprocessConfig {
    pub fn new(
        stopwords: impl IntoIterator<Item = String>,
        min_token_len: usize,
        placeholders: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        if min_token_len == 0 {
            return Err(CorpusError::Config("min_token_len must be at least 1".into()));
        }
        Ok(PreprocessConfig {
            stopwords: stopwords.into_iter().map(|w| normalize(&w)).collect(),
            min_token_len,
            placeholders: placeholders.into_iter().collect(),
        })
    }

    /// Config with the given stopwords and the default length and
    /// placeholder settings.
    pub fn with_stopwords(stopwords: impl IntoIterator<Item = String>) -> Self {
        PreprocessConfig {
            stopwords: stopwords.into_iter().map(|w| normalize(&w)).collect(),
            ..Default::default()
        }
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn min_token_len(&self) -> usize {
        self.min_token_len
    }

    pub fn placeholders(&self) -> &HashSet<String> {
        &self.placeholders
    }

    pub fn is_placeholder(&self, field: &str) -> bool {
        self.placeholders.contains(field.trim())
    }

    pub fn sorted_stopwords(&self) -> Vec<String> {
        let mut words: Vec<String> = self.stopwords.iter().cloned().collect();
        words.sort();
        words
    }
}

fn normalize(text: &str) -> String {
    text.nfc().collect::<String>().to_lowercase()
}

fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize)
        .collect()
}

/// Reads a stopword file: one word per line, `#` comments and blank lines
/// ignored.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(parse_word_list(&text))
}

/// The bundled Italian stopword list.
pub fn default_stopwords() -> HashSet<String> {
    parse_word_list(DEFAULT_STOPWORDS)
}

#[derive(Debug, Deserialize)]
struct RecordRow {
    id: String,
    dynamics: String,
    #[serde(default)]
    consequence: Option<String>,
}

/// Loads a corpus with the default placeholder set.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<(Corpus, LoadReport)> {
    load_corpus_with(path, format, &PreprocessConfig::default())
}

/// Loads a corpus, dropping rows whose dynamics field is one of
/// `config`'s placeholders. Row order is preserved.
pub fn load_corpus_with(
    path: &Path,
    format: CorpusFormat,
    config: &PreprocessConfig,
) -> Result<(Corpus, LoadReport)> {
    let io_err = |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let rows = match format {
        CorpusFormat::Csv => read_csv_rows(path, file)?,
        CorpusFormat::Jsonl => read_jsonl_rows(path, file)?,
    };

    let mut report = LoadReport::default();
    let mut records = Vec::with_capacity(rows.len());
    let mut seen = HashSet::new();
    for (line, row) in rows {
        let id = row.id.trim().to_string();
        if id.is_empty() {
            return Err(CorpusError::EmptyId(line));
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        if config.is_placeholder(&row.dynamics) {
            report.dropped += 1;
            continue;
        }
        let consequence = row.consequence.unwrap_or_default();
        let consequence = if config.is_placeholder(&consequence) {
            String::new()
        } else {
            consequence
        };
        records.push(RawRecord {
            id,
            dynamics: row.dynamics,
            consequence,
        });
    }
    report.loaded = records.len();
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus(path.to_owned()));
    }
    Ok((
        Corpus {
            records,
            provenance: Provenance {
                source: path.to_owned(),
                loaded_at: now_secs(),
            },
        },
        report,
    ))
}

fn read_csv_rows(path: &Path, file: File) -> Result<Vec<(u64, RecordRow)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for result in reader.deserialize::<RecordRow>() {
        match result {
            Ok(row) => {
                // header is line 1
                let line = rows.len() as u64 + 2;
                rows.push((line, row));
            }
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(rows.len() as u64 + 2);
                return Err(CorpusError::Parse {
                    path: path.to_owned(),
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(rows)
}

fn read_jsonl_rows(path: &Path, file: File) -> Result<Vec<(u64, RecordRow)>> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: RecordRow = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            path: path.to_owned(),
            line: lineno,
            message: e.to_string(),
        })?;
        rows.push((lineno, row));
    }
    Ok(rows)
}

/// Normalises and tokenises `text`.
///
/// Tokens are maximal runs of alphabetic characters (accented letters
/// included) after NFC normalisation and lowercasing. Runs shorter than
/// `min_token_len` characters and stopwords are dropped.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let normalized = normalize(text);
    normalized
        .split(|c: char| !c.is_alphabetic())
        .filter(|tok| !tok.is_empty())
        .filter(|tok| tok.chars().count() >= config.min_token_len)
        .filter(|tok| !config.stopwords.contains(*tok))
        .map(str::to_owned)
        .collect()
}

/// The `k` most frequent tokens over all documents, by descending count with
/// ties broken lexicographically.
pub fn top_frequent_words<D: AsRef<[String]>>(docs: &[D], k: usize) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for tok in doc.as_ref() {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(w, c)| (w.to_owned(), c))
        .collect()
}

/// Word → TAG substitution table.
///
/// Words and tags are stored lowercase; tags are emitted uppercase so they
/// can never collide with a preprocessed word.
#[derive(Debug, Clone, Default)]
pub struct TagOntology {
    pairs: BTreeMap<String, String>,
}

impl TagOntology {
    pub fn from_pairs<I, W, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (W, T)>,
        W: AsRef<str>,
        T: AsRef<str>,
    {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (word, tag) in pairs {
            let word = normalize(word.as_ref().trim());
            let tag = normalize(tag.as_ref().trim());
            if word.is_empty() || tag.is_empty() {
                return Err(CorpusError::Ontology("empty word or tag".into()));
            }
            match map.get(&word) {
                Some(existing) if existing != &tag => {
                    return Err(CorpusError::Ontology(format!(
                        "word `{word}` maps to both {} and {}",
                        existing.to_uppercase(),
                        tag.to_uppercase()
                    )));
                }
                _ => {
                    map.insert(word, tag);
                }
            }
        }
        if let Some(tag) = map.values().find(|t| map.contains_key(*t)) {
            return Err(CorpusError::Ontology(format!(
                "tag `{}` is also a mapped word",
                tag.to_uppercase()
            )));
        }
        Ok(TagOntology { pairs: map })
    }

    /// Reads `word<TAB>TAG` lines; `#` starts a comment line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(w), Some(t), None) => pairs.push((w.to_string(), t.to_string())),
                _ => {
                    return Err(CorpusError::Parse {
                        path: path.to_owned(),
                        line: i as u64 + 1,
                        message: "expected `word<TAB>TAG`".into(),
                    })
                }
            }
        }
        Self::from_pairs(pairs)
    }

    /// Tag for `word`, rendered uppercase.
    pub fn tag_of(&self, word: &str) -> Option<String> {
        self.pairs.get(word).map(|t| t.to_uppercase())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Replaces every mapped token by its tag; unmapped tokens pass through.
pub fn apply_tags(tokens: &[String], ontology: &TagOntology) -> Vec<String> {
    tokens
        .iter()
        .map(|t| ontology.tag_of(t).unwrap_or_else(|| t.clone()))
        .collect()
}

/// One record reduced to its item set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub id: String,
    pub items: BTreeSet<String>,
}

impl Transaction {
    pub fn new<I, S>(id: impl Into<String>, items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Transaction {
            id: id.into(),
            items: items.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransactionSet {
    /// Non-empty transactions, in corpus order.
    pub transactions: Vec<Transaction>,
    /// Ids of records that tokenised to nothing and were excluded.
    pub flagged: Vec<String>,
}

/// Token lists of every record's dynamics text, in corpus order.
pub fn tokenize_corpus(
    corpus: &Corpus,
    config: &PreprocessConfig,
    ontology: Option<&TagOntology>,
) -> Vec<Vec<String>> {
    corpus
        .records()
        .iter()
        .map(|r| {
            let tokens = preprocess(&r.dynamics, config);
            match ontology {
                Some(o) => apply_tags(&tokens, o),
                None => tokens,
            }
        })
        .collect()
}

pub fn to_transactions(
    corpus: &Corpus,
    config: &PreprocessConfig,
    ontology: Option<&TagOntology>,
) -> Result<TransactionSet> {
    let mut transactions = Vec::with_capacity(corpus.len());
    let mut flagged = Vec::new();
    for (record, tokens) in corpus
        .records()
        .iter()
        .zip(tokenize_corpus(corpus, config, ontology))
    {
        if tokens.is_empty() {
            flagged.push(record.id.clone());
        } else {
            transactions.push(Transaction::new(record.id.clone(), tokens));
        }
    }
    if transactions.is_empty() {
        return Err(CorpusError::EmptyTransactions);
    }
    Ok(TransactionSet {
        transactions,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn write_tmp(suffix: &str, contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn cfg(stop: &[&str]) -> PreprocessConfig {
        PreprocessConfig::with_stopwords(stop.iter().map(|s| s.to_string()))
    }

    #[test]
    fn loads_valid_csv() {
        let f = write_tmp(
            ".csv",
            "id,dynamics,consequence\n1,cade dalla scala,frattura\n2,\"taglio, con coltello\",ferita\n3,urto,\n",
        );
        let (corpus, report) = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(report.dropped, 0);
        assert_eq!(corpus.records()[1].dynamics, "taglio, con coltello");
        assert_eq!(corpus.records()[2].consequence, "");
    }

    #[test]
    fn placeholder_dynamics_dropped() {
        let f = write_tmp(
            ".csv",
            "id,dynamics,consequence\n1,cade,frattura\n2,ND,ferita\n",
        );
        let (corpus, report) = load_corpus(f.path(), CorpusFormat::Csv).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(report.dropped, 1);
    }

    #[test]
    fn duplicate_id_rejected() {
        let f = write_tmp(".csv", "id,dynamics,consequence\n7,a,b\n7,c,d\n");
        match load_corpus(f.path(), CorpusFormat::Csv) {
            Err(CorpusError::DuplicateId(id)) => assert_eq!(id, "7"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_csv_reports_line() {
        let f = write_tmp(".csv", "id,dynamics,consequence\n1,a,b\n2,c\n");
        match load_corpus(f.path(), CorpusFormat::Csv) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_placeholders_is_empty_corpus() {
        let f = write_tmp(".csv", "id,dynamics,consequence\n1,-,b\n2,,d\n");
        assert!(matches!(
            load_corpus(f.path(), CorpusFormat::Csv),
            Err(CorpusError::EmptyCorpus(_))
        ));
    }

    #[test]
    fn loads_jsonl() {
        let f = write_tmp(
            ".jsonl",
            "{\"id\":\"a\",\"dynamics\":\"cade\",\"consequence\":\"x\"}\n\n{\"id\":\"b\",\"dynamics\":\"urta\"}\n",
        );
        let (corpus, _) = load_corpus(f.path(), CorpusFormat::from_path(f.path())).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.records()[1].consequence, "");
        let bad = write_tmp(".jsonl", "{\"id\":\"a\",\"dynamics\":\"x\"}\n{oops\n");
        match load_corpus(bad.path(), CorpusFormat::Jsonl) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(
            preprocess("Il lavoratore cade dalla scala.", &cfg(&["il", "dalla"])),
            toks(&["lavoratore", "cade", "scala"])
        );
        assert_eq!(preprocess("È CADUTO!!", &cfg(&[])), toks(&["caduto"]));
        assert_eq!(preprocess("x 12 kg", &cfg(&[])), toks(&["kg"]));
    }

    #[test]
    fn preprocess_composes_decomposed_accents() {
        // "perché" with a combining acute accent
        let decomposed = "perche\u{0301} cosi\u{0300}";
        assert_eq!(preprocess(decomposed, &cfg(&[])), toks(&["perché", "così"]));
    }

    #[test]
    fn min_token_len_validated() {
        assert!(PreprocessConfig::new(Vec::new(), 0, Vec::new()).is_err());
        let c = PreprocessConfig::new(Vec::new(), 1, Vec::new()).unwrap();
        assert_eq!(preprocess("x 12 kg", &c), toks(&["x", "kg"]));
    }

    #[test]
    fn top_words_ranking() {
        let docs = vec![toks(&["a", "a", "b"])];
        assert_eq!(
            top_frequent_words(&docs, 2),
            vec![("a".to_string(), 2), ("b".to_string(), 1)]
        );
        let docs = vec![toks(&["b", "a"])];
        assert_eq!(top_frequent_words(&docs, 1), vec![("a".to_string(), 1)]);
        let words: Vec<String> = (0..40).map(|i| format!("w{i:02}")).collect();
        assert_eq!(top_frequent_words(&[words], 100).len(), 40);
    }

    #[test]
    fn tag_substitution() {
        let onto = TagOntology::from_pairs([("martello", "UTENSILE"), ("trapano", "utensile")]).unwrap();
        assert_eq!(apply_tags(&toks(&["martello"]), &onto), toks(&["UTENSILE"]));
        assert_eq!(
            apply_tags(&toks(&["cade", "martello", "trapano"]), &onto),
            toks(&["cade", "UTENSILE", "UTENSILE"])
        );
        assert!(apply_tags(&[], &onto).is_empty());
    }

    #[test]
    fn ontology_invariants() {
        assert!(TagOntology::from_pairs([("a", "X"), ("a", "Y")]).is_err());
        assert!(TagOntology::from_pairs([("a", "b"), ("b", "C")]).is_err());
        assert!(TagOntology::from_pairs([("a", "X"), ("a", "x")]).is_ok());
    }

    #[test]
    fn ontology_tsv() {
        let f = write_tmp(".tsv", "# tools\nmartello\tUTENSILE\n\ntrapano\tUTENSILE\n");
        let onto = TagOntology::load(f.path()).unwrap();
        assert_eq!(onto.len(), 2);
        assert_eq!(onto.tag_of("trapano").as_deref(), Some("UTENSILE"));
        let bad = write_tmp(".tsv", "martello UTENSILE\n");
        assert!(matches!(
            TagOntology::load(bad.path()),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    fn corpus(dyns: &[&str]) -> Corpus {
        let records = dyns
            .iter()
            .enumerate()
            .map(|(i, d)| RawRecord {
                id: format!("r{i}"),
                dynamics: d.to_string(),
                consequence: String::new(),
            })
            .collect();
        Corpus::from_records(records, "mem").unwrap()
    }

    #[test]
    fn transactions_are_sets() {
        let c = corpus(&["cade cade scala"]);
        let ts = to_transactions(&c, &cfg(&[]), None).unwrap();
        assert_eq!(ts.transactions[0].items, ["cade", "scala"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn transactions_fixture_and_flagging() {
        let c = corpus(&["cade scala", "urta martello", "taglio coltello", "scivola pavimento"]);
        let ts = to_transactions(&c, &cfg(&[]), None).unwrap();
        assert_eq!((ts.transactions.len(), ts.flagged.len()), (4, 0));

        let c = corpus(&["cade scala", "il della"]);
        let ts = to_transactions(&c, &cfg(&["il", "della"]), None).unwrap();
        assert_eq!(ts.transactions.len(), 1);
        assert_eq!(ts.flagged, vec!["r1".to_string()]);

        let c = corpus(&["il", "12"]);
        assert!(matches!(
            to_transactions(&c, &cfg(&["il"]), None),
            Err(CorpusError::EmptyTransactions)
        ));
    }

    #[test]
    fn transactions_with_tags() {
        let c = corpus(&["cade martello trapano"]);
        let onto = TagOntology::from_pairs([("martello", "UTENSILE"), ("trapano", "UTENSILE")]).unwrap();
        let ts = to_transactions(&c, &cfg(&[]), Some(&onto)).unwrap();
        assert_eq!(ts.transactions[0].items.len(), 2);
        assert!(ts.transactions[0].items.contains("UTENSILE"));
    }

    #[test]
    fn default_stopwords_lowercase() {
        let sw = default_stopwords();
        assert!(sw.contains("della"));
        assert!(sw.iter().all(|w| *w == w.to_lowercase()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn preprocess_idempotent(text in "[a-zA-Zàèéìòù0-9 ,.!?'-]{0,80}") {
                let c = cfg(&["il", "la", "di"]);
                let once = preprocess(&text, &c);
                let twice = preprocess(&once.join(" "), &c);
                prop_assert_eq!(once, twice);
            }

            #[test]
            fn apply_tags_idempotent(words in proptest::collection::vec("[a-d]{1,2}", 0..12)) {
                let onto = TagOntology::from_pairs([("a", "T1"), ("bb", "T2"), ("c", "T1")]).unwrap();
                let once = apply_tags(&words, &onto);
                prop_assert_eq!(apply_tags(&once, &onto), once);
            }

            #[test]
            fn top_words_counts_bounded(words in proptest::collection::vec("[a-e]", 0..40), k in 1usize..8) {
                let docs = vec![words.clone()];
                let top = top_frequent_words(&docs, k);
                let total: usize = top.iter().map(|(_, c)| c).sum();
                prop_assert!(total <= words.len());
                for pair in top.windows(2) {
                    prop_assert!(pair[0].1 > pair[1].1 || (pair[0].1 == pair[1].1 && pair[0].0 < pair[1].0));
                }
            }

            #[test]
            fn transaction_count_conserved(texts in proptest::collection::vec("[a-c ]{0,10}", 1..10)) {
                let dyns: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
                let c = corpus(&dyns);
                let conf = PreprocessConfig::new(vec!["aa".to_string()], 2, Vec::new()).unwrap();
                match to_transactions(&c, &conf, None) {
                    Ok(ts) => prop_assert_eq!(ts.transactions.len() + ts.flagged.len(), c.len()),
                    Err(CorpusError::EmptyTransactions) => {}
                    Err(e) => prop_assert!(false, "{}", e),
                }
            }
        }
    }
}
