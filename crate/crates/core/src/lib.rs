//! Text mining toolkit for incident-description corpora.
//!
//! The crate is organised around the stages of the pipeline:
//!
//! * [`corpus`]: loading records, tokenisation, stopword removal, ontology tag
//!   substitution and the transaction database.
//! * [`rules`]: itemset metrics and positive/negative association rule mining
//!   from frequent and infrequent itemsets with an IDF band filter.
//! * [`vectors`]: term index and sparse TF-IDF matrix.
//! * [`clustering`]: PAM k-medoids, silhouette-based k selection, incremental
//!   PCA and embedding-matrix ingestion.
//! * [`langmodel`]: a bidirectional LSTM multi-label predictor of consequence
//!   tokens trained with binary cross entropy and ADAM.

pub mod clustering;
pub mod corpus;
pub mod langmodel;
pub mod rules;
pub mod vectors;
