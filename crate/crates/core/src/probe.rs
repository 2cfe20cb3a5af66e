//! Name-cloze prompting, answer parsing, judging, and scoring.
//!
//! The prompt template ships as a resource file and is substituted verbatim;
//! its SHA-256 is recorded in every run manifest so a result can be traced to
//! the exact prompt bytes that produced it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::cloze::ClozePassage;
use crate::corpus::{BookMeta, Category};

/// The Figure-style name-cloze prompt with `{input}` placeholder.
pub const NAME_CLOZE_TEMPLATE: &str = include_str!("../resources/name_cloze_prompt.txt");

/// SHA-256 hex digest of a template (or any other resource) string.
pub fn template_checksum(template: &str) -> String {
    let mut h = Sha256::new();
    h.update(template.as_bytes());
    hex_string(&h.finalize())
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Escape literal name tags in passage text so they cannot confuse response
/// parsing: `<name>` becomes `&lt;name&gt;`, `</name>` becomes `&lt;/name&gt;`.
pub fn escape_name_tags(text: &str) -> String {
    text.replace("<name>", "&lt;name&gt;")
        .replace("</name>", "&lt;/name&gt;")
}

/// Build the name-cloze prompt for a passage. The output ends with `Output:`
/// and no trailing text.
pub fn build_name_cloze_prompt(passage: &ClozePassage) -> String {
    let (head, tail) = NAME_CLOZE_TEMPLATE
        .split_once("{input}")
        .expect("template has {input} placeholder");
    format!("{head}{}{tail}", escape_name_tags(&passage.masked_text))
}

/// Words skipped by the untagged-response fallback: capitalized sentence
/// openers and scaffolding that are never the answer to a name cloze.
const RESPONSE_SKIP_WORDS: [&str; 30] = [
    "The", "A", "An", "I", "I'm", "This", "That", "It", "He", "She", "They", "We", "You", "My",
    "Based", "In", "If", "As", "Since", "There", "Here", "Name", "Answer", "Output", "Input",
    "Note", "Yes", "No", "Sorry", "Unfortunately",
];

fn clean_word(w: &str) -> &str {
    w.trim_matches(|c: char| {
        matches!(
            c,
            '.' | ',' | '!' | '?' | ';' | ':' | '"' | '\'' | '\u{201C}' | '\u{201D}' | '\u{2018}'
                | '\u{2019}' | '(' | ')' | '[' | ']' | '*' | '`'
        )
    })
}

/// Parse a model response into a predicted name.
///
/// Primary rule: the first substring between `<name>` and `</name>`, trimmed;
/// multi-word content keeps its first word. Fallback when no tags are present:
/// the first capitalized alphabetic token (skipping common sentence openers).
/// Surrounding quotes and periods are stripped. Returns `None` on parse
/// failure, which callers record as an incorrect prediction.
pub fn parse_name(raw_response: &str) -> Option<String> {
    if let Some(tag_start) = raw_response.find("<name>") {
        let after = &raw_response[tag_start + "<name>".len()..];
        if let Some(tag_end) = after.find("</name>") {
            let inner = after[..tag_end].trim();
            let first = inner.split_whitespace().next().unwrap_or("");
            let cleaned = clean_word(first);
            if cleaned.is_empty() {
                return None;
            }
            return Some(cleaned.to_string());
        }
    }
    for word in raw_response.split_whitespace() {
        let cleaned = clean_word(word);
        if cleaned.is_empty() {
            continue;
        }
        if RESPONSE_SKIP_WORDS.contains(&cleaned) {
            continue;
        }
        let first = cleaned.chars().next().unwrap();
        if first.is_uppercase()
            && cleaned
                .chars()
                .all(|c| c.is_alphabetic() || c == '\'' || c == '\u{2019}' || c == '-')
        {
            return Some(cleaned.to_string());
        }
    }
    None
}

/// Normalize a name for comparison: NFC, Unicode lowercasing, surrounding
/// punctuation stripped, possessive suffix removed.
pub fn normalize_name(name: &str) -> String {
    let composed: String = name.nfc().collect();
    let trimmed = clean_word(&composed);
    let lowered = trimmed.to_lowercase();
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stripped) = lowered.strip_suffix(suffix) {
            if !stripped.is_empty() {
                return stripped.to_string();
            }
        }
    }
    lowered
}

/// Lenient correctness: names match after normalization. No nickname
/// expansion ("Katherine" never matches "Kate").
pub fn judge(parsed_name: &str, gold_name: &str) -> bool {
    !parsed_name.is_empty()
        && !gold_name.is_empty()
        && normalize_name(parsed_name) == normalize_name(gold_name)
}

/// Strict correctness for sensitivity analysis: byte equality.
pub fn judge_strict(parsed_name: &str, gold_name: &str) -> bool {
    !parsed_name.is_empty() && parsed_name == gold_name
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "parse-failure")]
    ParseFailure,
    #[serde(rename = "transport-error")]
    TransportError,
}

/// One model response to one cloze passage. For transport errors the
/// `raw_response` field carries the error description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub passage_id: String,
    pub book_id: String,
    pub raw_response: String,
    pub parsed_name: Option<String>,
    pub correct: bool,
    pub failure_kind: FailureKind,
}

impl Prediction {
    /// Build a prediction from a raw model response.
    pub fn from_response(passage: &ClozePassage, raw: String, strict: bool) -> Prediction {
        match parse_name(&raw) {
            Some(name) => {
                let correct = if strict {
                    judge_strict(&name, &passage.gold_name)
                } else {
                    judge(&name, &passage.gold_name)
                };
                Prediction {
                    passage_id: passage.passage_id.clone(),
                    book_id: passage.book_id.clone(),
                    raw_response: raw,
                    parsed_name: Some(name),
                    correct,
                    failure_kind: FailureKind::None,
                }
            }
            None => Prediction {
                passage_id: passage.passage_id.clone(),
                book_id: passage.book_id.clone(),
                raw_response: raw,
                parsed_name: None,
                correct: false,
                failure_kind: FailureKind::ParseFailure,
            },
        }
    }

    pub fn transport_error(passage: &ClozePassage, message: String) -> Prediction {
        Prediction {
            passage_id: passage.passage_id.clone(),
            book_id: passage.book_id.clone(),
            raw_response: message,
            parsed_name: None,
            correct: false,
            failure_kind: FailureKind::TransportError,
        }
    }
}

/// Per-book name-cloze accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookScore {
    pub book_id: String,
    pub n_samples: usize,
    pub n_correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("no predictions to score")]
    Empty,
    #[error("predictions span multiple books: {0} and {1}")]
    MixedBooks(String, String),
}

/// Score one book's predictions. Transport errors stay in the denominator as
/// incorrect; the accuracy is the plain fraction of correct flags.
pub fn score_book(predictions: &[Prediction]) -> Result<BookScore, ProbeError> {
    let first = predictions.first().ok_or(ProbeError::Empty)?;
    for p in predictions {
        if p.book_id != first.book_id {
            return Err(ProbeError::MixedBooks(
                first.book_id.clone(),
                p.book_id.clone(),
            ));
        }
    }
    let n_samples = predictions.len();
    let n_correct = predictions.iter().filter(|p| p.correct).count();
    Ok(BookScore {
        book_id: first.book_id.clone(),
        n_samples,
        n_correct,
        accuracy: n_correct as f64 / n_samples as f64,
    })
}

/// The most frequent gold name in the evaluation set (ties broken
/// lexicographically) and the accuracy of always predicting it.
pub fn baseline_most_frequent(passages: &[ClozePassage]) -> Option<(String, f64)> {
    if passages.is_empty() {
        return None;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in passages {
        *counts.entry(p.gold_name.as_str()).or_insert(0) += 1;
    }
    // BTreeMap iterates names lexicographically, so strictly-greater
    // comparison keeps the lexicographically first name on ties.
    let (name, _) = counts
        .iter()
        .fold(("", 0usize), |best, (n, c)| if *c > best.1 { (n, *c) } else { best });
    let correct = passages
        .iter()
        .filter(|p| judge(name, &p.gold_name))
        .count();
    Some((name.to_string(), correct as f64 / passages.len() as f64))
}

/// Unweighted mean of per-book accuracies within each category, sorted by
/// descending mean (category name breaking ties). The third column is the
/// number of books in the category.
pub fn aggregate_by_category(
    scores: &[BookScore],
    metas: &[BookMeta],
) -> Vec<(Category, f64, usize)> {
    let meta_by_id: BTreeMap<&str, &BookMeta> =
        metas.iter().map(|m| (m.book_id.as_str(), m)).collect();
    let mut grouped: BTreeMap<Category, Vec<f64>> = BTreeMap::new();
    for s in scores {
        if let Some(meta) = meta_by_id.get(s.book_id.as_str()) {
            grouped.entry(meta.category).or_default().push(s.accuracy);
        }
    }
    let mut rows: Vec<(Category, f64, usize)> = grouped
        .into_iter()
        .map(|(cat, accs)| {
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            (cat, mean, accs.len())
        })
        .collect();
    rows.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.as_str().cmp(b.0.as_str()))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn passage(gold: &str) -> ClozePassage {
        ClozePassage {
            passage_id: format!("b:000000-000045:{gold}"),
            book_id: "b".into(),
            token_span: (0, 45),
            masked_text: "Then the road bent and [MASK] walked on alone.".to_string(),
            gold_name: gold.to_string(),
            token_count: 45,
        }
    }

    #[test]
    fn prompt_contains_examples_and_ends_clean() {
        let p = passage("Kate");
        let prompt = build_name_cloze_prompt(&p);
        assert!(prompt.contains("Output: <name>Ponyboy</name>"));
        assert!(prompt.contains("Output: <name>Gerty</name>"));
        assert!(prompt.contains("You have seen the following passage in your training data."));
        assert!(prompt.ends_with("Output:"));
        assert!(prompt.contains(&p.masked_text));
    }

    #[test]
    fn prompt_escapes_embedded_tags() {
        let mut p = passage("Kate");
        p.masked_text = "odd <name> text [MASK] more </name> here".into();
        let prompt = build_name_cloze_prompt(&p);
        assert!(prompt.contains("&lt;name&gt;"));
        assert!(prompt.contains("&lt;/name&gt;"));
        // The only remaining literal tags are the two worked examples.
        assert_eq!(prompt.matches("<name>").count(), 2);
    }

    #[test]
    fn template_checksum_is_stable() {
        let a = template_checksum(NAME_CLOZE_TEMPLATE);
        let b = template_checksum(NAME_CLOZE_TEMPLATE);
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn parse_tagged_name() {
        assert_eq!(parse_name("<name>Gerty</name>").as_deref(), Some("Gerty"));
        assert_eq!(
            parse_name("text before <name> Okonkwo </name> after").as_deref(),
            Some("Okonkwo")
        );
    }

    #[test]
    fn parse_multiword_tag_takes_first_word() {
        assert_eq!(
            parse_name("<name>Scout Finch</name>").as_deref(),
            Some("Scout")
        );
    }

    #[test]
    fn parse_fallback_finds_capitalized_token() {
        assert_eq!(parse_name("The name is Gatsby.").as_deref(), Some("Gatsby"));
        assert_eq!(parse_name("\"Heathcliff\"").as_deref(), Some("Heathcliff"));
    }

    #[test]
    fn parse_failure_cases() {
        assert_eq!(parse_name("i cannot determine this"), None);
        assert_eq!(parse_name("<name></name>"), None);
        assert_eq!(parse_name(""), None);
        assert_eq!(parse_name("12345 !!"), None);
    }

    #[test]
    fn judge_rules() {
        assert!(judge("okonkwo", "Okonkwo"));
        assert!(judge("Kate's", "Kate"));
        assert!(!judge("Katherine", "Kate"));
        assert!(judge("\u{201C}Alice.\u{201D}", "Alice"));
        assert!(!judge_strict("okonkwo", "Okonkwo"));
        assert!(judge_strict("Okonkwo", "Okonkwo"));
    }

    fn pred(book: &str, correct: bool, kind: FailureKind) -> Prediction {
        Prediction {
            passage_id: "p".into(),
            book_id: book.into(),
            raw_response: String::new(),
            parsed_name: correct.then(|| "X".to_string()),
            correct,
            failure_kind: kind,
        }
    }

    #[test]
    fn score_book_fractions() {
        let mut preds: Vec<Prediction> =
            (0..98).map(|_| pred("alice", true, FailureKind::None)).collect();
        preds.extend((0..2).map(|_| pred("alice", false, FailureKind::None)));
        let s = score_book(&preds).unwrap();
        assert_eq!(s.n_samples, 100);
        assert_eq!(s.n_correct, 98);
        assert_eq!(s.accuracy, 0.98);

        let zeros: Vec<Prediction> =
            (0..100).map(|_| pred("b", false, FailureKind::None)).collect();
        assert_eq!(score_book(&zeros).unwrap().accuracy, 0.0);

        let mut hp: Vec<Prediction> = (0..76).map(|_| pred("hp", true, FailureKind::None)).collect();
        hp.extend((0..24).map(|_| pred("hp", false, FailureKind::None)));
        assert_eq!(score_book(&hp).unwrap().accuracy, 0.76);
    }

    #[test]
    fn transport_errors_count_in_denominator() {
        let mut preds: Vec<Prediction> = (0..9).map(|_| pred("b", true, FailureKind::None)).collect();
        preds.push(pred("b", false, FailureKind::TransportError));
        let s = score_book(&preds).unwrap();
        assert_eq!(s.n_samples, 10);
        assert_eq!(s.accuracy, 0.9);
    }

    #[test]
    fn score_book_is_permutation_invariant() {
        let mut preds: Vec<Prediction> = (0..10)
            .map(|i| pred("b", i % 3 == 0, FailureKind::None))
            .collect();
        let a = score_book(&preds).unwrap();
        preds.reverse();
        let b = score_book(&preds).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.n_correct, b.n_correct);
    }

    #[test]
    fn score_book_rejects_mixed_books() {
        let preds = vec![
            pred("a", true, FailureKind::None),
            pred("b", true, FailureKind::None),
        ];
        assert!(score_book(&preds).is_err());
    }

    #[test]
    fn baseline_degenerate_and_uniform() {
        let all_alice: Vec<ClozePassage> = (0..10).map(|_| passage("Alice")).collect();
        let (name, acc) = baseline_most_frequent(&all_alice).unwrap();
        assert_eq!(name, "Alice");
        assert_eq!(acc, 1.0);

        let mut uniform = Vec::new();
        for name in ["Ada", "Ben", "Cora", "Dan"] {
            for _ in 0..25 {
                uniform.push(passage(name));
            }
        }
        let (name, acc) = baseline_most_frequent(&uniform).unwrap();
        assert_eq!(name, "Ada"); // tie broken lexicographically
        assert_eq!(acc, 0.25);
    }

    #[test]
    fn category_aggregation() {
        let metas = vec![
            BookMeta::new("a", "A", "aa", 1900, Category::LitbankPre1923),
            BookMeta::new("b", "B", "bb", 1900, Category::LitbankPre1923),
            BookMeta::new("c", "C", "cc", 1990, Category::Pulitzer),
        ];
        let scores = vec![
            BookScore { book_id: "a".into(), n_samples: 10, n_correct: 2, accuracy: 0.2 },
            BookScore { book_id: "b".into(), n_samples: 10, n_correct: 4, accuracy: 0.4 },
            BookScore { book_id: "c".into(), n_samples: 10, n_correct: 1, accuracy: 0.1 },
        ];
        let rows = aggregate_by_category(&scores, &metas);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, Category::LitbankPre1923);
        assert!((rows[0].1 - 0.3).abs() < 1e-12);
        assert_eq!(rows[1].0, Category::Pulitzer);

        // Fixture mirroring the published litbank mean of 0.244.
        let metas = vec![
            BookMeta::new("x", "X", "xx", 1900, Category::LitbankPre1923),
            BookMeta::new("y", "Y", "yy", 1900, Category::LitbankPre1923),
        ];
        let scores = vec![
            BookScore { book_id: "x".into(), n_samples: 100, n_correct: 30, accuracy: 0.3 },
            BookScore { book_id: "y".into(), n_samples: 100, n_correct: 19, accuracy: 0.188 },
        ];
        let rows = aggregate_by_category(&scores, &metas);
        assert!((rows[0].1 - 0.244).abs() < 1e-12);
    }

    #[test]
    fn single_category_identity() {
        let metas = vec![BookMeta::new("a", "A", "aa", 1900, Category::GenreHorror)];
        let scores = vec![BookScore {
            book_id: "a".into(),
            n_samples: 2,
            n_correct: 1,
            accuracy: 0.5,
        }];
        let rows = aggregate_by_category(&scores, &metas);
        assert_eq!(rows, vec![(Category::GenreHorror, 0.5, 1)]);
    }
}
