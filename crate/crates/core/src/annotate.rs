//! Person-entity spans over a book's token stream.
//!
//! Spans either come from an external annotation tool's output (JSONL import,
//! one `{"book_id","start","end","label","surface"}` object per line, with an
//! optional `{"tokens":[...]}` sidecar that overrides the built-in
//! tokenization) or from the built-in heuristic tagger, which makes the
//! toolkit usable end to end on plain text without external NLP tooling.
//! Audits meant to mirror published results should import real annotations;
//! the heuristic tagger trades recall/precision for self-containment.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{segment_token_stream, BookRecord, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityLabel {
    #[serde(rename = "PERSON")]
    Person,
    #[serde(rename = "OTHER_NE")]
    OtherNe,
}

/// An entity span over token indices `[token_start, token_end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub token_start: usize,
    pub token_end: usize,
    pub label: EntityLabel,
    pub surface: String,
    /// Surface with any possessive suffix ("'s", "’s", trailing "'") stripped.
    pub canonical_name: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("{path} line {line}: {message}")]
    Line {
        path: String,
        line: usize,
        message: String,
    },
    #[error("token sidecar does not align with book text: {0}")]
    SidecarAlignment(String),
    #[error("empty gazetteer")]
    EmptyGazetteer,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Strip a possessive suffix from a name surface: trailing "'s", "’s", or a
/// lone apostrophe after "s" ("Jones'").
pub fn strip_possessive(surface: &str) -> &str {
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stripped) = surface.strip_suffix(suffix) {
            if !stripped.is_empty() {
                return stripped;
            }
        }
    }
    for suffix in ["'", "\u{2019}"] {
        if let Some(stripped) = surface.strip_suffix(suffix) {
            if stripped.ends_with('s') || stripped.ends_with('S') {
                return stripped;
            }
        }
    }
    surface
}

fn expected_surfaces(tokens: &[Token], start: usize, end: usize, text: &str) -> Vec<String> {
    let joined = tokens[start..end]
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let concat = tokens[start..end]
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<String>();
    let slice = text[tokens[start].start..tokens[end - 1].end].to_string();
    vec![slice, joined, concat]
}

#[derive(Debug, Deserialize, Serialize)]
struct SpanRecord {
    book_id: String,
    start: usize,
    end: usize,
    label: String,
    surface: String,
}

fn map_label(label: &str) -> EntityLabel {
    // Everything that is not a person label collapses to OTHER_NE.
    match label.to_ascii_uppercase().as_str() {
        "PERSON" | "PER" => EntityLabel::Person,
        _ => EntityLabel::OtherNe,
    }
}

/// Import entity spans for `book` from a JSONL annotation file. Lines for
/// other book ids are ignored. Spans are validated (range, ordering, overlap,
/// surface agreement) and returned sorted by start index; any violation
/// rejects the file with its line number.
pub fn import_annotations(
    path: &Path,
    book: &BookRecord,
) -> Result<Vec<EntitySpan>, AnnotationError> {
    let file = fs::File::open(path).map_err(AnnotationError::Io)?;
    let reader = std::io::BufReader::new(file);
    let path_str = path.display().to_string();
    let mut spans: Vec<(usize, EntitySpan)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SpanRecord =
            serde_json::from_str(&line).map_err(|e| AnnotationError::Line {
                path: path_str.clone(),
                line: lineno,
                message: e.to_string(),
            })?;
        if rec.book_id != book.meta.book_id {
            continue;
        }
        let ntok = book.tokenized.tokens.len();
        if rec.end <= rec.start {
            return Err(AnnotationError::Line {
                path: path_str.clone(),
                line: lineno,
                message: format!("end {} <= start {}", rec.end, rec.start),
            });
        }
        if rec.end > ntok {
            return Err(AnnotationError::Line {
                path: path_str.clone(),
                line: lineno,
                message: format!("span {}..{} out of range (book has {} tokens)", rec.start, rec.end, ntok),
            });
        }
        let candidates = expected_surfaces(&book.tokenized.tokens, rec.start, rec.end, &book.text);
        if !candidates.iter().any(|c| c == &rec.surface) {
            return Err(AnnotationError::Line {
                path: path_str.clone(),
                line: lineno,
                message: format!(
                    "surface {:?} does not match tokens {:?}",
                    rec.surface, candidates[0]
                ),
            });
        }
        let canonical = strip_possessive(&rec.surface).to_string();
        spans.push((
            lineno,
            EntitySpan {
                token_start: rec.start,
                token_end: rec.end,
                label: map_label(&rec.label),
                surface: rec.surface,
                canonical_name: canonical,
            },
        ));
    }
    spans.sort_by_key(|(_, s)| (s.token_start, s.token_end));
    for pair in spans.windows(2) {
        let (_, a) = &pair[0];
        let (line_b, b) = &pair[1];
        if b.token_start < a.token_end {
            return Err(AnnotationError::Line {
                path: path_str,
                line: *line_b,
                message: format!(
                    "overlap: span {}..{} overlaps {}..{}",
                    b.token_start, b.token_end, a.token_start, a.token_end
                ),
            });
        }
    }
    Ok(spans.into_iter().map(|(_, s)| s).collect())
}

/// Export spans in the import schema, so import/export round-trips.
pub fn export_annotations(
    path: &Path,
    book_id: &str,
    spans: &[EntitySpan],
) -> Result<(), AnnotationError> {
    let mut out = String::new();
    for s in spans {
        let rec = SpanRecord {
            book_id: book_id.to_string(),
            start: s.token_start,
            end: s.token_end,
            label: match s.label {
                EntityLabel::Person => "PERSON".to_string(),
                EntityLabel::OtherNe => "OTHER_NE".to_string(),
            },
            surface: s.surface.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("span serializes"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TokenSidecar {
    tokens: Vec<String>,
}

/// Replace a book's tokenization with an externally supplied token stream
/// (e.g. the tokens an annotation tool actually used). Tokens are aligned
/// greedily against the normalized text; sentence spans are recomputed over
/// the new stream with the standard segmentation rules.
pub fn apply_token_sidecar(
    book: &BookRecord,
    sidecar_path: &Path,
) -> Result<BookRecord, AnnotationError> {
    let raw = fs::read_to_string(sidecar_path)?;
    let sidecar: TokenSidecar =
        serde_json::from_str(&raw).map_err(|e| AnnotationError::SidecarAlignment(e.to_string()))?;
    override_tokens(book, &sidecar.tokens)
}

pub fn override_tokens(book: &BookRecord, tokens: &[String]) -> Result<BookRecord, AnnotationError> {
    let text = &book.text;
    let mut aligned = Vec::with_capacity(tokens.len());
    let mut cursor = 0usize;
    for (i, surface) in tokens.iter().enumerate() {
        // Skip whitespace, then require the token verbatim.
        while cursor < text.len() {
            let c = text[cursor..].chars().next().unwrap();
            if c.is_whitespace() {
                cursor += c.len_utf8();
            } else {
                break;
            }
        }
        if !text[cursor..].starts_with(surface.as_str()) {
            return Err(AnnotationError::SidecarAlignment(format!(
                "token {} ({:?}) not found at byte {}",
                i, surface, cursor
            )));
        }
        aligned.push(Token {
            surface: surface.clone(),
            start: cursor,
            end: cursor + surface.len(),
        });
        cursor += surface.len();
    }
    let sentences = segment_token_stream(&aligned, text);
    Ok(BookRecord {
        meta: book.meta.clone(),
        text: book.text.clone(),
        tokenized: crate::corpus::TokenizedText {
            tokens: aligned,
            sentences,
        },
    })
}

/// Honorifics that mark the following capitalized token as a person.
pub const HONORIFICS: [&str; 6] = ["Mr.", "Mrs.", "Miss", "Dr.", "Lady", "Sir"];

/// Capitalized function words and titles that are never person candidates.
const TAGGER_STOPWORDS: [&str; 40] = [
    "I", "I'm", "I'll", "I've", "I'd", "O", "Oh", "Ah", "Alas", "The", "A", "An", "And", "But",
    "Or", "Nor", "For", "Yet", "So", "If", "Then", "That", "This", "These", "Those", "There",
    "Here", "Mr.", "Mrs.", "Miss", "Dr.", "Lady", "Sir", "Madam", "Madame", "Yes", "No", "Not",
    "Well", "Now",
];

/// Lowercase-insensitive suffix words marking a place name ("Baker Street").
const PLACE_SUFFIXES: [&str; 24] = [
    "street", "avenue", "road", "city", "river", "lake", "square", "park", "bridge", "island",
    "valley", "bay", "harbor", "harbour", "town", "village", "county", "lane", "court", "abbey",
    "hall", "castle", "house", "boulevard",
];

/// Name list backing the heuristic tagger. Non-empty by construction.
pub struct Gazetteer {
    names: HashSet<String>,
}

impl Gazetteer {
    /// The bundled list of common given names and surnames.
    pub fn bundled() -> Self {
        Self::from_lines(include_str!("../resources/gazetteer.txt"))
            .expect("bundled gazetteer is non-empty")
    }

    pub fn from_file(path: &Path) -> Result<Self, AnnotationError> {
        let raw = fs::read_to_string(path)?;
        Self::from_lines(&raw)
    }

    pub fn from_lines(raw: &str) -> Result<Self, AnnotationError> {
        let names: HashSet<String> = raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        if names.is_empty() {
            return Err(AnnotationError::EmptyGazetteer);
        }
        Ok(Gazetteer { names })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(&name.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn is_capitalized_word(surface: &str) -> bool {
    let mut chars = surface.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() => {}
        _ => return false,
    }
    surface
        .chars()
        .all(|c| c.is_alphabetic() || c == '\'' || c == '\u{2019}' || c == '-' || c == '.')
}

/// Heuristic person tagger. A single capitalized token becomes PERSON when it
/// is in the gazetteer, follows an honorific, or occurs capitalized at least
/// three times in the book with this occurrence not sentence-initial. Runs of
/// two or more capitalized tokens, and capitalized tokens followed by a place
/// suffix, become OTHER_NE. Total function; may return an empty list.
pub fn tag_persons(book: &BookRecord, gazetteer: &Gazetteer) -> Vec<EntitySpan> {
    let tokens = &book.tokenized.tokens;
    let n = tokens.len();
    let sentence_starts: BTreeSet<usize> = book.tokenized.sentence_starts().into_iter().collect();
    let stop: HashSet<&str> = TAGGER_STOPWORDS.iter().copied().collect();

    let candidate = |i: usize| -> bool {
        let s = tokens[i].surface.as_str();
        is_capitalized_word(s) && !stop.contains(s)
    };

    // Counts of capitalized occurrences per canonical form.
    let mut cap_counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in tokens {
        if is_capitalized_word(&t.surface) {
            *cap_counts
                .entry(strip_possessive(&t.surface).to_string())
                .or_insert(0) += 1;
        }
    }

    let mut spans: Vec<EntitySpan> = Vec::new();
    let mut i = 0usize;
    while i < n {
        if !candidate(i) {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut run_end = i + 1;
        while run_end < n && candidate(run_end) {
            run_end += 1;
        }
        if run_end - run_start >= 2 {
            // Multi-word capitalized run: a non-person named entity.
            let surface = book.text[tokens[run_start].start..tokens[run_end - 1].end].to_string();
            let canonical = strip_possessive(&surface).to_string();
            spans.push(EntitySpan {
                token_start: run_start,
                token_end: run_end,
                label: EntityLabel::OtherNe,
                surface,
                canonical_name: canonical,
            });
            i = run_end;
            continue;
        }
        // Single capitalized token.
        let surface = tokens[i].surface.clone();
        let canonical = strip_possessive(&surface).to_string();
        let sentence_initial = sentence_starts.contains(&i);
        let after_honorific = i > 0 && HONORIFICS.contains(&tokens[i - 1].surface.as_str());
        let recurrent = !sentence_initial
            && cap_counts.get(canonical.as_str()).copied().unwrap_or(0) >= 3;
        let is_person = gazetteer.contains(&canonical) || after_honorific || recurrent;
        let place_like = i + 1 < n
            && PLACE_SUFFIXES.contains(&tokens[i + 1].surface.to_lowercase().as_str());
        if is_person && !place_like {
            spans.push(EntitySpan {
                token_start: i,
                token_end: i + 1,
                label: EntityLabel::Person,
                surface,
                canonical_name: canonical,
            });
        } else if !sentence_initial && place_like {
            spans.push(EntitySpan {
                token_start: i,
                token_end: i + 1,
                label: EntityLabel::OtherNe,
                surface,
                canonical_name: canonical,
            });
        }
        i += 1;
    }
    spans
}

/// Check the `EntitySpan` invariants against a book. Returns violations.
pub fn validate_spans(spans: &[EntitySpan], book: &BookRecord) -> Vec<String> {
    let mut problems = Vec::new();
    let ntok = book.tokenized.tokens.len();
    for (i, s) in spans.iter().enumerate() {
        if s.token_start >= s.token_end {
            problems.push(format!("span {i}: start {} >= end {}", s.token_start, s.token_end));
        }
        if s.token_end > ntok {
            problems.push(format!("span {i}: end {} out of range {}", s.token_end, ntok));
        }
    }
    for w in spans.windows(2) {
        if w[1].token_start < w[0].token_end {
            problems.push(format!(
                "overlap: {}..{} and {}..{}",
                w[0].token_start, w[0].token_end, w[1].token_start, w[1].token_end
            ));
        }
    }
    problems
}
