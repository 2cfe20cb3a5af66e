//! Name-cloze passage extraction, sampling, and masking.
//!
//! A candidate passage is a run of complete sentences totalling 40–60 tokens
//! that contains exactly one mention of one single-token person name and no
//! other named entities. The person token is replaced by `[MASK]` (keeping any
//! possessive suffix), so re-inserting the gold name reconstructs the original
//! span byte for byte.
//!
//! Enumeration is greedy by start sentence: sentences are appended while the
//! window stays within the 60-token budget, yielding at most one candidate per
//! starting sentence. Sampling is uniform without replacement via the seeded
//! generator in [`crate::rng`], so a fixed seed reproduces the evaluation set
//! on any platform.

use serde::{Deserialize, Serialize};

use crate::annotate::{strip_possessive, EntityLabel, EntitySpan};
use crate::corpus::BookRecord;
use crate::rng::SplitMix64;

pub const MIN_TOKENS: usize = 40;
pub const MAX_TOKENS: usize = 60;
pub const MASK: &str = "[MASK]";

/// Default number of passages sampled per book.
pub const DEFAULT_SAMPLES_PER_BOOK: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozePassage {
    pub passage_id: String,
    pub book_id: String,
    /// Token index range `[start, end)` into the book's token stream.
    pub token_span: (usize, usize),
    pub masked_text: String,
    pub gold_name: String,
    pub token_count: usize,
}

impl ClozePassage {
    /// Original passage text, reconstructed by re-inserting the gold name.
    pub fn unmasked_text(&self) -> String {
        self.masked_text.replacen(MASK, &self.gold_name, 1)
    }

    /// Byte offset of the mask marker within `masked_text`.
    pub fn mask_offset(&self) -> Option<usize> {
        self.masked_text.find(MASK)
    }
}

/// Enumerate all candidate passages for a book in document order.
/// `entities` must be validated, sorted, non-overlapping spans for this book.
pub fn extract_candidates(book: &BookRecord, entities: &[EntitySpan]) -> Vec<ClozePassage> {
    let sents = &book.tokenized.sentences;
    let mut out = Vec::new();
    for start_sent in 0..sents.len() {
        // Greedy: extend while the token budget holds.
        let tok_start = sents[start_sent].token_start;
        let mut end_sent = start_sent;
        let mut tok_end = sents[start_sent].token_end;
        while end_sent + 1 < sents.len()
            && sents[end_sent + 1].token_end - tok_start <= MAX_TOKENS
        {
            end_sent += 1;
            tok_end = sents[end_sent].token_end;
        }
        let count = tok_end - tok_start;
        if !(MIN_TOKENS..=MAX_TOKENS).contains(&count) {
            continue;
        }
        if let Some(p) = mask_window(book, entities, tok_start, tok_end) {
            out.push(p);
        }
    }
    out
}

/// Try to turn the token window `[tok_start, tok_end)` into a masked passage.
/// Returns `None` if the window violates any constraint.
fn mask_window(
    book: &BookRecord,
    entities: &[EntitySpan],
    tok_start: usize,
    tok_end: usize,
) -> Option<ClozePassage> {
    let tokens = &book.tokenized.tokens;
    let mut person: Option<&EntitySpan> = None;
    for span in entities {
        if span.token_end <= tok_start || span.token_start >= tok_end {
            continue;
        }
        match span.label {
            EntityLabel::OtherNe => return None,
            EntityLabel::Person => {
                if person.is_some() {
                    return None; // more than one person mention
                }
                // The span must be a single token fully inside the window.
                if span.token_end - span.token_start != 1
                    || span.token_start < tok_start
                    || span.token_end > tok_end
                {
                    return None;
                }
                person = Some(span);
            }
        }
    }
    let person = person?;
    let gold = person.canonical_name.clone();
    if gold.is_empty() || gold.split_whitespace().count() != 1 {
        return None;
    }
    // The same name appearing again (tagged or not) disqualifies the window.
    let mentions = tokens[tok_start..tok_end]
        .iter()
        .filter(|t| strip_possessive(&t.surface) == gold)
        .count();
    if mentions != 1 {
        return None;
    }
    let w0 = tokens[tok_start].start;
    let w1 = tokens[tok_end - 1].end;
    let window_text = &book.text[w0..w1];
    if window_text.contains(MASK) {
        return None; // the marker already occurs literally
    }
    let ptok = &tokens[person.token_start];
    let possessive_suffix = &ptok.surface[gold.len()..];
    let masked_text = format!(
        "{}{}{}{}",
        &book.text[w0..ptok.start],
        MASK,
        possessive_suffix,
        &book.text[ptok.end..w1]
    );
    Some(ClozePassage {
        passage_id: format!("{}:{:06}-{:06}", book.meta.book_id, tok_start, tok_end),
        book_id: book.meta.book_id.clone(),
        token_span: (tok_start, tok_end),
        masked_text,
        gold_name: gold,
        token_count: tok_end - tok_start,
    })
}

/// Result of sampling a book's candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleOutcome {
    /// The sampled passages, in document order.
    Sampled(Vec<ClozePassage>),
    /// The book has fewer candidates than requested and is excluded.
    BookExcluded { available: usize, requested: usize },
}

/// Sample `n` passages uniformly without replacement, deterministic per seed.
/// Books with fewer than `n` candidates are excluded rather than short-sampled.
pub fn sample_passages(candidates: &[ClozePassage], n: usize, seed: u64) -> SampleOutcome {
    assert!(n >= 1, "sample size must be at least 1");
    if candidates.len() < n {
        return SampleOutcome::BookExcluded {
            available: candidates.len(),
            requested: n,
        };
    }
    let mut rng = SplitMix64::new(seed);
    let mut picked = rng.sample_indices(candidates.len(), n);
    picked.sort_unstable();
    SampleOutcome::Sampled(picked.into_iter().map(|i| candidates[i].clone()).collect())
}

/// Violations of the passage invariants, checked against the source book.
/// Empty means the passage is valid.
pub fn validate_passage(p: &ClozePassage, book: &BookRecord) -> Vec<String> {
    let mut problems = Vec::new();
    if !(MIN_TOKENS..=MAX_TOKENS).contains(&p.token_count) {
        problems.push(format!("token_count {} outside 40..=60", p.token_count));
    }
    if p.masked_text.matches(MASK).count() != 1 {
        problems.push("masked_text must contain exactly one [MASK]".into());
    }
    if p.gold_name.split_whitespace().count() != 1 {
        problems.push(format!("gold_name {:?} is not a single word", p.gold_name));
    }
    let (a, b) = p.token_span;
    let tokens = &book.tokenized.tokens;
    if b <= a || b > tokens.len() {
        problems.push(format!("token_span {a}..{b} out of range"));
        return problems;
    }
    if b - a != p.token_count {
        problems.push(format!(
            "token_count {} disagrees with span length {}",
            p.token_count,
            b - a
        ));
    }
    let starts_sentence = book.tokenized.sentences.iter().any(|s| s.token_start == a);
    let ends_sentence = book.tokenized.sentences.iter().any(|s| s.token_end == b);
    if !starts_sentence {
        problems.push(format!("token {a} is not a sentence start"));
    }
    if !ends_sentence {
        problems.push(format!("token {b} is not a sentence end"));
    }
    let original = &book.text[tokens[a].start..tokens[b - 1].end];
    if p.unmasked_text() != original {
        problems.push("re-inserting gold_name does not reconstruct the original span".into());
    }
    problems
}
