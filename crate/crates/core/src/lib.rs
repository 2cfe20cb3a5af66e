//! Audit toolkit for measuring whether a language model has memorized specific
//! books, using a name-cloze probe: a masked passage containing a single person
//! name and no other named entities is shown to the model, and the model is
//! asked to recover the name. Per-book accuracy on such probes, together with
//! the statistical machinery in [`stats`], quantifies memorization, its biases,
//! and its downstream consequences.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`corpus`] — book ingestion, tokenization, sentence segmentation
//! - [`annotate`] — person-entity spans (imported or heuristically tagged)
//! - [`cloze`] — passage extraction, sampling, and masking
//! - [`backends`] — model completion backends (HTTP chat, scripted oracle, masked LM)
//! - [`probe`] — prompt construction, answer parsing, scoring
//! - [`stats`] — decile partitions, PPMI name sets, log-odds randomization test,
//!   Spearman correlation, percentile bootstrap
//! - [`prevalence`] — 10-gram search-hit counting against web or local indexes
//! - [`downstream`] — year-of-publication and narrative-time experiments
//! - [`report`] — CSV / Markdown / SVG renderings of the result tables
//! - [`cache`], [`manifest`] — run reproducibility plumbing
//! - [`synth`] — deterministic synthetic book collections for demos and tests

pub mod annotate;
pub mod backends;
pub mod cache;
pub mod cloze;
pub mod corpus;
pub mod downstream;
pub mod manifest;
pub mod prevalence;
pub mod probe;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;

pub use corpus::{BookMeta, BookRecord, Category, TokenizedText};

