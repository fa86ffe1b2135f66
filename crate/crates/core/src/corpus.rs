//! Deed documents, offset-preserving tokenization, and gold annotations.
//!
//! All offsets are counted in Unicode scalar values (`char`s), never bytes,
//! so spans exchanged with other tools do not depend on the text encoding.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MultiPolygon;
use crate::geoner::EntityClass;
use crate::jsonl;

/// Half-open `[start, end)` character range.
pub type Span = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub normalized: String,
}

impl Token {
    /// Character range of the part of the surface that survives
    /// normalization, i.e. without leading and trailing punctuation.
    pub fn core_span(&self) -> Span {
        let lead = self
            .surface
            .chars()
            .take_while(|c| !c.is_alphanumeric())
            .count();
        if lead == self.end - self.start {
            return (self.start, self.end);
        }
        let trail = self
            .surface
            .chars()
            .rev()
            .take_while(|c| !c.is_alphanumeric())
            .count();
        (self.start + lead, self.end - trail)
    }

    pub fn is_word(&self) -> bool {
        !self.normalized.is_empty()
    }
}

/// One deed page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    text: String,
    tokens: Vec<Token>,
    // byte offset of every char, plus text.len() as a sentinel
    char_bytes: Vec<usize>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut char_bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        char_bytes.push(text.len());
        let tokens = tokenize(&text);
        Document {
            id: id.into(),
            text,
            tokens,
            char_bytes,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Length of the text in characters.
    pub fn char_len(&self) -> usize {
        self.char_bytes.len() - 1
    }

    /// Text between two character offsets. Panics if the span is out of
    /// bounds; use [`Document::check_span`] on untrusted input.
    pub fn slice(&self, start: usize, end: usize) -> &str {
        &self.text[self.char_bytes[start]..self.char_bytes[end]]
    }

    pub fn check_span(&self, span: Span) -> Result<()> {
        let (start, end) = span;
        if start >= end || end > self.char_len() {
            return Err(Error::SpanOutOfBounds {
                doc_id: self.id.clone(),
                start,
                end,
                len: self.char_len(),
            });
        }
        Ok(())
    }
}

/// Lowercases a token and strips punctuation. Leading and trailing
/// non-alphanumerics are dropped; inside the word only letters, digits and
/// hyphens are kept.
pub fn normalize_word(surface: &str) -> String {
    let trimmed = surface.trim_matches(|c: char| !c.is_alphanumeric());
    trimmed
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '-')
        .flat_map(char::to_lowercase)
        .collect()
}

/// Splits on Unicode whitespace. Offsets always refer to the original text.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    // (char offset, byte offset) of the token being built
    let mut open: Option<(usize, usize)> = None;
    let mut char_count = 0;
    for (ci, (bi, ch)) in text.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((cs, bs)) = open.take() {
                tokens.push(make_token(&text[bs..bi], cs, ci));
            }
        } else if open.is_none() {
            open = Some((ci, bi));
        }
        char_count = ci + 1;
    }
    if let Some((cs, bs)) = open {
        tokens.push(make_token(&text[bs..], cs, char_count));
    }
    tokens
}

fn make_token(surface: &str, start: usize, end: usize) -> Token {
    Token {
        start,
        end,
        surface: surface.to_string(),
        normalized: normalize_word(surface),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusRecord {
    id: String,
    #[serde(default)]
    text: String,
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn read_corpus<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Document>> {
    let records: Vec<(usize, CorpusRecord)> = jsonl::parse_records(reader, source_name)?;
    let mut seen = HashSet::new();
    let mut docs = Vec::with_capacity(records.len());
    for (_, rec) in records {
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Duplicate {
                what: "document id",
                key: rec.id,
            });
        }
        docs.push(Document::new(rec.id, rec.text));
    }
    Ok(docs)
}

/// Inverse of [`read_corpus`].
pub fn write_corpus(docs: &[Document]) -> String {
    let records: Vec<CorpusRecord> = docs
        .iter()
        .map(|d| CorpusRecord {
            id: d.id.clone(),
            text: d.text.clone(),
        })
        .collect();
    jsonl::to_lines(&records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEntity {
    pub class: EntityClass,
    pub start: usize,
    pub end: usize,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldAnnotation {
    pub doc_id: String,
    pub term_spans: Vec<Span>,
    pub doc_flag: bool,
    pub entity_spans: Vec<GoldEntity>,
    pub parcels: Option<MultiPolygon>,
}

#[derive(Debug, Deserialize)]
struct GoldRecord {
    id: String,
    #[serde(default)]
    term_spans: Vec<Span>,
    #[serde(default)]
    doc_flag: Option<bool>,
    #[serde(default)]
    entities: Vec<GoldEntity>,
    #[serde(default)]
    parcels: Option<serde_json::Value>,
}

pub fn load_gold(path: &Path) -> Result<Vec<GoldAnnotation>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_gold(std::io::BufReader::new(file), &path.display().to_string())
}

/// Parses gold records. Span bounds are not checked here because the
/// matching documents may not be loaded; evaluation checks them.
pub fn read_gold<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<GoldAnnotation>> {
    let records: Vec<(usize, GoldRecord)> = jsonl::parse_records(reader, source_name)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, rec) in records {
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Duplicate {
                what: "gold id",
                key: rec.id,
            });
        }
        let doc_flag = rec.doc_flag.unwrap_or(!rec.term_spans.is_empty());
        if !doc_flag && !rec.term_spans.is_empty() {
            return Err(Error::malformed(
                source_name,
                line,
                format!("{}: doc_flag is false but term_spans is non-empty", rec.id),
            ));
        }
        let bad_span = rec
            .term_spans
            .iter()
            .copied()
            .chain(rec.entities.iter().map(|e| (e.start, e.end)))
            .find(|(s, e)| s >= e);
        if let Some((s, e)) = bad_span {
            return Err(Error::malformed(
                source_name,
                line,
                format!("{}: empty or reversed span ({s}, {e})", rec.id),
            ));
        }
        let parcels = match rec.parcels {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(MultiPolygon::from_geojson(&v, &rec.id)?),
        };
        out.push(GoldAnnotation {
            doc_id: rec.id,
            term_spans: rec.term_spans,
            doc_flag,
            entity_spans: rec.entities,
            parcels,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(toks: &[Token]) -> Vec<&str> {
        toks.iter().map(|t| t.surface.as_str()).collect()
    }

    fn normals(toks: &[Token]) -> Vec<&str> {
        toks.iter().map(|t| t.normalized.as_str()).collect()
    }

    #[test]
    fn tokenize_strips_punctuation_into_normalized_form() {
        let toks = tokenize("Eight (8) North");
        assert_eq!(surfaces(&toks), ["Eight", "(8)", "North"]);
        assert_eq!(normals(&toks), ["eight", "8", "north"]);
        assert_eq!((toks[1].start, toks[1].end), (6, 9));
        assert_eq!(toks[1].core_span(), (7, 8));
    }

    #[test]
    fn tokenize_trailing_period() {
        let toks = tokenize("domestic servants.");
        assert_eq!(normals(&toks), ["domestic", "servants"]);
        assert_eq!(toks[1].core_span(), (9, 17));
    }

    #[test]
    fn tokenize_empty_and_whitespace() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n ").is_empty());
    }

    #[test]
    fn internal_hyphen_kept_and_pure_punctuation_empty() {
        let toks = tokenize("twenty-five -- Add'n");
        assert_eq!(normals(&toks), ["twenty-five", "", "addn"]);
        assert!(!toks[1].is_word());
        assert_eq!(toks[1].core_span(), (toks[1].start, toks[1].end));
    }

    #[test]
    fn offsets_are_in_chars_not_bytes() {
        let doc = Document::new("u", "café  Section 25");
        let toks = doc.tokens();
        assert_eq!((toks[1].start, toks[1].end), (6, 13));
        assert_eq!(doc.slice(6, 13), "Section");
        assert_eq!(doc.char_len(), 16);
    }

    #[test]
    fn load_corpus_examples() {
        let input = "{\"id\":\"d1\",\"text\":\"Section 25\"}\n{\"id\":\"d2\",\"text\":\"\"}\n";
        let docs = read_corpus(input.as_bytes(), "mem").unwrap();
        assert_eq!(docs[0].tokens().len(), 2);
        assert_eq!(docs[1].tokens().len(), 0);

        let dup = "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d1\",\"text\":\"b\"}\n";
        match read_corpus(dup.as_bytes(), "mem").unwrap_err() {
            Error::Duplicate { key, .. } => assert_eq!(key, "d1"),
            e => panic!("unexpected {e:?}"),
        }

        let bad = "{\"id\":\"d1\",\"text\":\"a\"}\nnot json\n";
        match read_corpus(bad.as_bytes(), "mem").unwrap_err() {
            Error::Malformed { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn gold_flag_and_geometry_validation() {
        let ok = r#"{"id":"a","term_spans":[[10,19]],"doc_flag":true}
{"id":"b","term_spans":[],"doc_flag":false}
{"id":"c","term_spans":[[1,2]]}"#;
        let gold = read_gold(ok.as_bytes(), "mem").unwrap();
        assert!(gold[0].doc_flag);
        assert!(!gold[1].doc_flag);
        assert!(gold[2].doc_flag);

        let contradictory = r#"{"id":"a","term_spans":[[10,19]],"doc_flag":false}"#;
        assert!(read_gold(contradictory.as_bytes(), "mem").is_err());

        let two_points = r#"{"id":"p","parcels":{"type":"Polygon","coordinates":[[[0,0],[1,1]]]}}"#;
        match read_gold(two_points.as_bytes(), "mem").unwrap_err() {
            Error::Geometry { owner, .. } => assert_eq!(owner, "p"),
            e => panic!("unexpected {e:?}"),
        }

        let unclosed =
            r#"{"id":"q","parcels":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}"#;
        assert!(matches!(
            read_gold(unclosed.as_bytes(), "mem").unwrap_err(),
            Error::Geometry { .. }
        ));
    }

    #[test]
    fn gold_rejects_unknown_entity_class() {
        let rec = r#"{"id":"a","entities":[{"class":"Parish","start":0,"end":3,"value":"x"}]}"#;
        assert!(read_gold(rec.as_bytes(), "mem").is_err());
    }
}
