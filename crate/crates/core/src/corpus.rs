//! Book ingestion, tokenization, and sentence segmentation.
//!
//! All token-count constraints downstream (passage windows, n-gram queries,
//! word budgets) are defined against the tokenizer here, so its rules are
//! fixed and fully specified:
//!
//! - text is normalized at ingestion: NFC, `\r\n`/`\r` to `\n`, BOM stripped;
//! - tokens are produced by splitting on whitespace, then peeling punctuation
//!   characters off each chunk as separate tokens; apostrophes and hyphens
//!   between alphanumeric characters stay attached ("can't" is one token);
//! - a fixed abbreviation list (Mr., Mrs., Dr., St., ...) keeps its trailing
//!   period attached, so abbreviations never look like sentence terminals;
//! - a sentence ends at a standalone `.` `!` `?` token (plus any flush closing
//!   quotes/brackets) followed by whitespace and a capitalized token; blank
//!   lines always end a sentence.
//!
//! The concatenation of token surfaces with the original inter-token
//! whitespace reconstructs the normalized text exactly, and sentence spans
//! tile the token sequence with no gaps or overlaps.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Top-level book category, matching the collection sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "litbank-pre1923")]
    LitbankPre1923,
    #[serde(rename = "pulitzer")]
    Pulitzer,
    #[serde(rename = "bestseller")]
    Bestseller,
    #[serde(rename = "bbip-bcala")]
    BbipBcala,
    #[serde(rename = "global-anglophone")]
    GlobalAnglophone,
    #[serde(rename = "genre-sf-fantasy")]
    GenreSfFantasy,
    #[serde(rename = "genre-horror")]
    GenreHorror,
    #[serde(rename = "genre-mystery-crime")]
    GenreMysteryCrime,
    #[serde(rename = "genre-romance")]
    GenreRomance,
    #[serde(rename = "genre-action-spy")]
    GenreActionSpy,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::LitbankPre1923,
        Category::Pulitzer,
        Category::Bestseller,
        Category::BbipBcala,
        Category::GlobalAnglophone,
        Category::GenreSfFantasy,
        Category::GenreHorror,
        Category::GenreMysteryCrime,
        Category::GenreRomance,
        Category::GenreActionSpy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::LitbankPre1923 => "litbank-pre1923",
            Category::Pulitzer => "pulitzer",
            Category::Bestseller => "bestseller",
            Category::BbipBcala => "bbip-bcala",
            Category::GlobalAnglophone => "global-anglophone",
            Category::GenreSfFantasy => "genre-sf-fantasy",
            Category::GenreHorror => "genre-horror",
            Category::GenreMysteryCrime => "genre-mystery-crime",
            Category::GenreRomance => "genre-romance",
            Category::GenreActionSpy => "genre-action-spy",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Publication year after which a book is treated as in copyright.
pub const COPYRIGHT_CUTOFF_YEAR: i32 = 1928;

/// Book metadata. `in_copyright` is derived from `pub_year` and the 1928
/// cutoff; a manifest may state it explicitly but it must agree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookMeta {
    pub book_id: String,
    pub title: String,
    pub author: String,
    pub pub_year: i32,
    pub category: Category,
    pub in_copyright: bool,
}

impl BookMeta {
    pub fn new(
        book_id: impl Into<String>,
        title: impl Into<String>,
        author: impl Into<String>,
        pub_year: i32,
        category: Category,
    ) -> Self {
        BookMeta {
            book_id: book_id.into(),
            title: title.into(),
            author: author.into(),
            pub_year,
            category,
            in_copyright: pub_year > COPYRIGHT_CUTOFF_YEAR,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.book_id.is_empty() {
            return Err(CorpusError::InvalidMeta("empty book_id".into()));
        }
        if self.in_copyright != (self.pub_year > COPYRIGHT_CUTOFF_YEAR) {
            return Err(CorpusError::InvalidMeta(format!(
                "book {}: in_copyright={} contradicts pub_year={}",
                self.book_id, self.in_copyright, self.pub_year
            )));
        }
        Ok(())
    }
}

/// One token: its surface form and byte span in the normalized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

/// Sentence as a half-open token index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub token_start: usize,
    pub token_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct TokenizedText {
    pub tokens: Vec<Token>,
    pub sentences: Vec<SentenceSpan>,
}

impl TokenizedText {
    /// Index of the sentence containing token `tok`, if any.
    pub fn sentence_of(&self, tok: usize) -> Option<usize> {
        self.sentences
            .iter()
            .position(|s| s.token_start <= tok && tok < s.token_end)
    }

    /// Token indices at which sentences start.
    pub fn sentence_starts(&self) -> Vec<usize> {
        self.sentences.iter().map(|s| s.token_start).collect()
    }
}

/// A fully ingested book: normalized text, tokenization, metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookRecord {
    pub meta: BookMeta,
    pub text: String,
    pub tokenized: TokenizedText,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("empty text in {0}")]
    EmptyText(String),
    #[error("duplicate book_id {0}")]
    DuplicateBookId(String),
    #[error("invalid metadata: {0}")]
    InvalidMeta(String),
    #[error("manifest {path} line {line}: {message}")]
    Manifest {
        path: String,
        line: usize,
        message: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Abbreviations whose trailing period stays attached to the token and never
/// terminates a sentence.
pub const ABBREVIATIONS: [&str; 26] = [
    "Mr.", "Mrs.", "Ms.", "Dr.", "St.", "Prof.", "Rev.", "Fr.", "Gen.", "Col.", "Capt.", "Lt.",
    "Sgt.", "Maj.", "Hon.", "Messrs.", "Mme.", "Mlle.", "Jr.", "Sr.", "vs.", "etc.", "e.g.",
    "i.e.", "viz.", "cf.",
];

fn is_abbreviation(s: &str) -> bool {
    ABBREVIATIONS.contains(&s)
}

/// Normalize raw file content: strip BOM, unify line endings to `\n`, apply
/// Unicode NFC. Curly quotes and all other characters are preserved.
pub fn normalize_text(raw: &str) -> String {
    let no_bom = raw.strip_prefix('\u{FEFF}').unwrap_or(raw);
    let unified = no_bom.replace("\r\n", "\n").replace('\r', "\n");
    unified.nfc().collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_attachable(c: char) -> bool {
    c == '\'' || c == '\u{2019}' || c == '-'
}

fn char_at(s: &str, byte: usize) -> Option<char> {
    s[byte..].chars().next()
}

/// Tokenize one whitespace-delimited chunk starting at byte `base`.
fn tokenize_chunk(text: &str, base: usize, chunk: &str, out: &mut Vec<Token>) {
    let mut start = 0usize;
    // Leading punctuation: one token per character.
    while let Some(c) = char_at(chunk, start) {
        if is_word_char(c) {
            break;
        }
        let len = c.len_utf8();
        out.push(Token {
            surface: chunk[start..start + len].to_string(),
            start: base + start,
            end: base + start + len,
        });
        start += len;
    }
    if start >= chunk.len() {
        return;
    }
    // Peel trailing punctuation, stopping early if the remainder is a listed
    // abbreviation (which keeps its period).
    let mut end = chunk.len();
    let mut trailing: Vec<(usize, usize)> = Vec::new();
    loop {
        let rest = &chunk[start..end];
        if rest.is_empty() || is_abbreviation(rest) {
            break;
        }
        let last = rest.chars().next_back().unwrap();
        if is_word_char(last) {
            break;
        }
        let len = last.len_utf8();
        trailing.push((end - len, end));
        end -= len;
    }
    let core = &chunk[start..end];
    if is_abbreviation(core) {
        out.push(Token {
            surface: core.to_string(),
            start: base + start,
            end: base + end,
        });
    } else {
        // Split the core on punctuation, keeping apostrophes/hyphens that sit
        // between alphanumeric characters attached.
        let chars: Vec<(usize, char)> = core.char_indices().collect();
        let mut i = 0usize;
        while i < chars.len() {
            let (off, c) = chars[i];
            if is_word_char(c) {
                let run_start = off;
                let mut j = i;
                while j < chars.len() {
                    let (_, cj) = chars[j];
                    if is_word_char(cj) {
                        j += 1;
                    } else if is_attachable(cj)
                        && j + 1 < chars.len()
                        && is_word_char(chars[j + 1].1)
                    {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let run_end = if j < chars.len() { chars[j].0 } else { core.len() };
                out.push(Token {
                    surface: core[run_start..run_end].to_string(),
                    start: base + start + run_start,
                    end: base + start + run_end,
                });
                i = j;
            } else {
                let len = c.len_utf8();
                out.push(Token {
                    surface: core[off..off + len].to_string(),
                    start: base + start + off,
                    end: base + start + off + len,
                });
                i += 1;
            }
        }
    }
    // Trailing punctuation in original (left-to-right) order.
    for &(s, e) in trailing.iter().rev() {
        out.push(Token {
            surface: chunk[s..e].to_string(),
            start: base + s,
            end: base + e,
        });
    }
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = char_at(text, i).unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let chunk_start = i;
        while i < bytes.len() {
            let c = char_at(text, i).unwrap();
            if c.is_whitespace() {
                break;
            }
            i += c.len_utf8();
        }
        tokenize_chunk(text, chunk_start, &text[chunk_start..i], &mut tokens);
    }
    tokens
}

const SENTENCE_TERMINALS: [&str; 3] = [".", "!", "?"];
const CLOSING_MARKS: [&str; 6] = ["\"", "'", "\u{201D}", "\u{2019}", ")", "]"];
const OPENING_MARKS: [&str; 6] = ["\"", "'", "\u{201C}", "\u{2018}", "(", "["];

fn gap_has_whitespace(text: &str, a: &Token, b: &Token) -> bool {
    text[a.end..b.start].chars().any(char::is_whitespace)
}

/// A blank line (two newlines separated only by spaces/tabs) inside the gap.
fn gap_has_blank_line(text: &str, a: &Token, b: &Token) -> bool {
    let mut saw_newline = false;
    for c in text[a.end..b.start].chars() {
        match c {
            '\n' if saw_newline => return true,
            '\n' => saw_newline = true,
            ' ' | '\t' => {}
            _ => saw_newline = false,
        }
    }
    false
}

fn starts_uppercase(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

fn segment(text: &str, tokens: &[Token]) -> Vec<SentenceSpan> {
    let n = tokens.len();
    if n == 0 {
        return Vec::new();
    }
    let mut spans = Vec::new();
    let mut sent_start = 0usize;
    let mut i = 0usize;
    while i < n {
        let mut close_after: Option<usize> = None;
        if SENTENCE_TERMINALS.contains(&tokens[i].surface.as_str()) {
            // Absorb closing quotes/brackets flush against the terminal.
            let mut j = i;
            while j + 1 < n
                && CLOSING_MARKS.contains(&tokens[j + 1].surface.as_str())
                && tokens[j + 1].start == tokens[j].end
            {
                j += 1;
            }
            if j + 1 < n && gap_has_whitespace(text, &tokens[j], &tokens[j + 1]) {
                // Capital check skips opening quotes/brackets.
                let mut k = j + 1;
                while k < n && OPENING_MARKS.contains(&tokens[k].surface.as_str()) {
                    k += 1;
                }
                if k < n && starts_uppercase(&tokens[k].surface) {
                    close_after = Some(j);
                }
            }
        }
        if close_after.is_none() && i + 1 < n && gap_has_blank_line(text, &tokens[i], &tokens[i + 1])
        {
            close_after = Some(i);
        }
        if let Some(j) = close_after {
            spans.push(SentenceSpan {
                token_start: sent_start,
                token_end: j + 1,
            });
            sent_start = j + 1;
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if sent_start < n {
        spans.push(SentenceSpan {
            token_start: sent_start,
            token_end: n,
        });
    }
    spans
}

/// Tokenize and sentence-segment normalized text. Total function: any input
/// (including empty) yields a valid `TokenizedText`.
pub fn tokenize_and_segment(text: &str) -> TokenizedText {
    let tokens = tokenize(text);
    let sentences = segment(text, &tokens);
    TokenizedText { tokens, sentences }
}

/// Rebuild sentence spans for an externally supplied token stream, applying
/// the same terminal/abbreviation rules over token surfaces. Used when an
/// annotation sidecar overrides the built-in tokenization.
pub fn segment_token_stream(tokens: &[Token], text: &str) -> Vec<SentenceSpan> {
    segment(text, tokens)
}

/// Ingest a book from a UTF-8 text file.
pub fn ingest_book(path: &Path, meta: BookMeta) -> Result<BookRecord, CorpusError> {
    meta.validate()?;
    if !path.exists() {
        return Err(CorpusError::MissingFile(path.display().to_string()));
    }
    let raw = fs::read_to_string(path)?;
    ingest_text(&raw, meta, &path.display().to_string())
}

/// Ingest a book from an in-memory string (the file-reading path delegates
/// here; `origin` only labels error messages).
pub fn ingest_text(raw: &str, meta: BookMeta, origin: &str) -> Result<BookRecord, CorpusError> {
    meta.validate()?;
    let text = normalize_text(raw);
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyText(origin.to_string()));
    }
    let tokenized = tokenize_and_segment(&text);
    Ok(BookRecord {
        meta,
        text,
        tokenized,
    })
}

/// An ingested collection keyed by book id; insertion rejects duplicates.
#[derive(Debug, Default)]
pub struct Collection {
    books: BTreeMap<String, BookRecord>,
}

impl Collection {
    pub fn new() -> Self {
        Collection::default()
    }

    pub fn insert(&mut self, record: BookRecord) -> Result<(), CorpusError> {
        if self.books.contains_key(&record.meta.book_id) {
            return Err(CorpusError::DuplicateBookId(record.meta.book_id.clone()));
        }
        self.books.insert(record.meta.book_id.clone(), record);
        Ok(())
    }

    pub fn get(&self, book_id: &str) -> Option<&BookRecord> {
        self.books.get(book_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &BookRecord> {
        self.books.values()
    }

    pub fn len(&self) -> usize {
        self.books.len()
    }

    pub fn is_empty(&self) -> bool {
        self.books.is_empty()
    }
}

/// One line of the book manifest: metadata plus the text file location
/// (relative paths resolve against the manifest's directory). When
/// `in_copyright` is omitted it is derived from `pub_year`.
#[derive(Debug, Clone, Deserialize)]
struct RawManifestEntry {
    book_id: String,
    title: String,
    author: String,
    pub_year: i32,
    category: Category,
    #[serde(default)]
    in_copyright: Option<bool>,
    #[serde(default)]
    path: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub meta: BookMeta,
    pub path: std::path::PathBuf,
}

/// Load a JSONL manifest of `BookMeta` objects. A `path` field per line names
/// the text file; it defaults to `<book_id>.txt` next to the manifest.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    let file = fs::File::open(path)
        .map_err(|_| CorpusError::MissingFile(path.display().to_string()))?;
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let reader = std::io::BufReader::new(file);
    let mut entries = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawManifestEntry =
            serde_json::from_str(&line).map_err(|e| CorpusError::Manifest {
                path: path.display().to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        let derived = raw.pub_year > COPYRIGHT_CUTOFF_YEAR;
        if let Some(stated) = raw.in_copyright {
            if stated != derived {
                return Err(CorpusError::Manifest {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!(
                        "in_copyright={} contradicts pub_year={}",
                        stated, raw.pub_year
                    ),
                });
            }
        }
        if !seen.insert(raw.book_id.clone()) {
            return Err(CorpusError::Manifest {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("duplicate book_id {}", raw.book_id),
            });
        }
        let meta = BookMeta {
            book_id: raw.book_id.clone(),
            title: raw.title,
            author: raw.author,
            pub_year: raw.pub_year,
            category: raw.category,
            in_copyright: derived,
        };
        let file_path = dir.join(raw.path.unwrap_or(format!("{}.txt", raw.book_id)));
        entries.push(ManifestEntry {
            meta,
            path: file_path,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize_and_segment(text)
            .tokens
            .iter()
            .map(|t| t.surface.clone())
            .collect()
    }

    #[test]
    fn ponyboy_line_is_eight_tokens_one_sentence() {
        let t = tokenize_and_segment("Stay gold, Ponyboy, stay gold.");
        assert_eq!(t.tokens.len(), 8);
        assert_eq!(t.sentences.len(), 1);
        assert_eq!(
            surfaces("Stay gold, Ponyboy, stay gold."),
            vec!["Stay", "gold", ",", "Ponyboy", ",", "stay", "gold", "."]
        );
    }

    #[test]
    fn two_sentences_of_three_tokens() {
        let t = tokenize_and_segment("He left. She stayed.");
        assert_eq!(t.sentences.len(), 2);
        for s in &t.sentences {
            assert_eq!(s.token_end - s.token_start, 3);
        }
    }

    #[test]
    fn abbreviation_suppresses_split() {
        let t = tokenize_and_segment("Mr. Darcy smiled.");
        assert_eq!(t.sentences.len(), 1);
        assert_eq!(t.tokens[0].surface, "Mr.");
    }

    #[test]
    fn contractions_stay_whole() {
        assert_eq!(surfaces("can't"), vec!["can't"]);
        assert_eq!(surfaces("can\u{2019}t stop"), vec!["can\u{2019}t", "stop"]);
        assert_eq!(surfaces("Kate's book."), vec!["Kate's", "book", "."]);
    }

    #[test]
    fn hyphenated_words_stay_whole() {
        assert_eq!(surfaces("well-known fact"), vec!["well-known", "fact"]);
        assert_eq!(surfaces("a- b"), vec!["a", "-", "b"]);
    }

    #[test]
    fn quotes_are_separate_tokens() {
        assert_eq!(
            surfaces("\u{201C}Hello,\u{201D} he said."),
            vec!["\u{201C}", "Hello", ",", "\u{201D}", "he", "said", "."]
        );
    }

    #[test]
    fn closing_quote_is_absorbed_into_sentence() {
        let t = tokenize_and_segment("\u{201C}Go.\u{201D} He went.");
        assert_eq!(t.sentences.len(), 2);
        // First sentence ends after the closing quote.
        assert_eq!(t.sentences[0].token_end, 4);
    }

    #[test]
    fn blank_line_is_hard_boundary() {
        let t = tokenize_and_segment("he paused\n\nthen spoke");
        assert_eq!(t.sentences.len(), 2);
    }

    #[test]
    fn newline_inside_paragraph_is_soft() {
        let t = tokenize_and_segment("he paused\nthen spoke");
        assert_eq!(t.sentences.len(), 1);
    }

    #[test]
    fn no_split_without_capital() {
        let t = tokenize_and_segment("He left. she stayed.");
        assert_eq!(t.sentences.len(), 1);
    }

    #[test]
    fn round_trip_examples() {
        for text in [
            "Stay gold, Ponyboy, stay gold.",
            "Mr. Darcy smiled.  \u{201C}Quite so,\u{201D} said Mrs. Bennet!",
            "line one\nline two\n\npara two",
            "digits 1865 and U.S.A. end",
        ] {
            let t = tokenize_and_segment(text);
            let mut rebuilt = String::new();
            let mut cursor = 0usize;
            for tok in &t.tokens {
                rebuilt.push_str(&text[cursor..tok.start]);
                rebuilt.push_str(&tok.surface);
                cursor = tok.end;
            }
            rebuilt.push_str(&text[cursor..]);
            assert_eq!(rebuilt, text);
        }
    }

    #[test]
    fn sentences_tile_tokens() {
        let t = tokenize_and_segment("One. Two! Three? etc. Four\n\nFive.");
        let total: usize = t
            .sentences
            .iter()
            .map(|s| s.token_end - s.token_start)
            .sum();
        assert_eq!(total, t.tokens.len());
        for w in t.sentences.windows(2) {
            assert_eq!(w[0].token_end, w[1].token_start);
        }
        assert_eq!(t.sentences[0].token_start, 0);
    }

    #[test]
    fn ingest_alice_derives_public_domain() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("alice.txt");
        std::fs::write(&p, "Alice was beginning to get very tired.").unwrap();
        let meta = BookMeta::new(
            "alice",
            "Alice's Adventures in Wonderland",
            "Lewis Carroll",
            1865,
            Category::LitbankPre1923,
        );
        let rec = ingest_book(&p, meta).unwrap();
        assert!(!rec.meta.in_copyright);
        assert!(!rec.tokenized.tokens.is_empty());
    }

    #[test]
    fn ingest_rejects_empty_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.txt");
        std::fs::write(&p, "  \n\t ").unwrap();
        let meta = BookMeta::new("e", "E", "A", 1900, Category::Pulitzer);
        match ingest_book(&p, meta) {
            Err(CorpusError::EmptyText(_)) => {}
            other => panic!("expected empty text error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_missing_file() {
        let meta = BookMeta::new("m", "M", "A", 1900, Category::Pulitzer);
        match ingest_book(Path::new("/nonexistent/book.txt"), meta) {
            Err(CorpusError::MissingFile(_)) => {}
            other => panic!("expected missing file error, got {other:?}"),
        }
    }

    #[test]
    fn collection_rejects_duplicate_id() {
        let meta = BookMeta::new("dup", "D", "A", 1900, Category::Pulitzer);
        let rec = ingest_text("Some text here.", meta, "mem").unwrap();
        let mut coll = Collection::new();
        coll.insert(rec.clone()).unwrap();
        match coll.insert(rec) {
            Err(CorpusError::DuplicateBookId(id)) => assert_eq!(id, "dup"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_is_idempotent() {
        let meta = BookMeta::new("i", "I", "A", 1900, Category::Pulitzer);
        let a = ingest_text("Same bytes. Same record.", meta.clone(), "mem").unwrap();
        let b = ingest_text("Same bytes. Same record.", meta, "mem").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nfc_applied_and_curly_quotes_kept() {
        // "é" as e + combining acute composes to a single char.
        let meta = BookMeta::new("n", "N", "A", 1900, Category::Pulitzer);
        let rec = ingest_text("caf\u{0065}\u{0301} \u{2019}quoted\u{2019}", meta, "mem").unwrap();
        assert!(rec.text.contains('\u{00E9}'));
        assert!(rec.text.contains('\u{2019}'));
    }

    #[test]
    fn meta_validation_checks_copyright_flag() {
        let mut meta = BookMeta::new("c", "C", "A", 1865, Category::LitbankPre1923);
        assert!(meta.validate().is_ok());
        meta.in_copyright = true;
        assert!(meta.validate().is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b1.txt"), "Text one.").unwrap();
        std::fs::write(dir.path().join("other.txt"), "Text two.").unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        std::fs::write(
            &manifest,
            concat!(
                "{\"book_id\":\"b1\",\"title\":\"One\",\"author\":\"A\",\"pub_year\":1900,\"category\":\"pulitzer\"}\n",
                "{\"book_id\":\"b2\",\"title\":\"Two\",\"author\":\"B\",\"pub_year\":1990,\"category\":\"bestseller\",\"in_copyright\":true,\"path\":\"other.txt\"}\n",
            ),
        )
        .unwrap();
        let entries = load_manifest(&manifest).unwrap();
        assert_eq!(entries.len(), 2);
        assert!(!entries[0].meta.in_copyright);
        assert!(entries[1].meta.in_copyright);
        assert!(entries[1].path.ends_with("other.txt"));
    }

    #[test]
    fn manifest_rejects_contradictory_copyright() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("manifest.jsonl");
        std::fs::write(
            &manifest,
            "{\"book_id\":\"b\",\"title\":\"T\",\"author\":\"A\",\"pub_year\":1900,\"category\":\"pulitzer\",\"in_copyright\":true}\n",
        )
        .unwrap();
        assert!(load_manifest(&manifest).is_err());
    }
}
