//! Restrictive-term detection: lexicon lookup with OCR-tolerant fuzzy
//! matching, a rule-based context filter, and document flagging.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Document, GoldEntity, Span};
use crate::error::{Error, Result};
use crate::jsonl;

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - levenshtein(a, b) / max(|a|, |b|)`; two empty strings score 1.
pub fn similarity(a: &str, b: &str) -> f64 {
    let max = a.chars().count().max(b.chars().count());
    if max == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub entry_id: String,
    pub phrase: Vec<String>,
    pub category: String,
    pub min_similarity_override: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    max_phrase_len: usize,
}

impl Lexicon {
    pub fn load(path: &Path) -> Result<Self> {
        let text = jsonl::read_to_string(path)?;
        Lexicon::parse(&text, &path.display().to_string())
    }

    /// Parses `phrase<TAB>category[<TAB>min_similarity]` lines. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() > 3 {
                return Err(Error::malformed(source_name, line_no, "too many columns"));
            }
            let phrase: Vec<String> = tokenize(cols[0])
                .into_iter()
                .map(|t| t.normalized)
                .filter(|w| !w.is_empty())
                .collect();
            if phrase.is_empty() {
                return Err(Error::malformed(source_name, line_no, "empty phrase"));
            }
            let category = cols.get(1).map(|c| c.trim()).unwrap_or("").to_string();
            let min_similarity_override = match cols.get(2).map(|c| c.trim()) {
                None | Some("") => None,
                Some(v) => {
                    let x: f64 = v.parse().map_err(|_| {
                        Error::malformed(source_name, line_no, format!("bad similarity '{v}'"))
                    })?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(Error::malformed(
                            source_name,
                            line_no,
                            format!("similarity {x} outside [0, 1]"),
                        ));
                    }
                    Some(x)
                }
            };
            let entry_id = phrase.join(" ");
            if !seen.insert(entry_id.clone()) {
                return Err(Error::Duplicate {
                    what: "lexicon phrase",
                    key: entry_id,
                });
            }
            entries.push(LexiconEntry {
                entry_id,
                phrase,
                category,
                min_similarity_override,
            });
        }
        Lexicon::new(entries)
    }

    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid("lexicon is empty".to_string()));
        }
        let max_phrase_len = entries.iter().map(|e| e.phrase.len()).max().unwrap_or(0);
        Ok(Lexicon {
            entries,
            max_phrase_len,
        })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_phrase_len
    }
}

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    pub similarity_threshold: f64,
    /// Lexicon words shorter than this many characters must match exactly.
    pub min_fuzzy_len: usize,
    pub context_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            similarity_threshold: 0.8,
            min_fuzzy_len: 4,
            context_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermMatch {
    pub entry_id: String,
    pub start: usize,
    pub end: usize,
    pub kind: MatchKind,
    pub similarity: f64,
    pub context_score: f64,
    pub accepted: bool,
    #[serde(skip)]
    pub category: String,
    #[serde(skip)]
    pub threshold: f64,
    /// Word positions (indices among the document's non-punctuation
    /// tokens) covered by the match, half-open.
    #[serde(skip)]
    pub words: (usize, usize),
}

impl TermMatch {
    pub fn span(&self) -> Span {
        (self.start, self.end)
    }
}

fn word_indices(doc: &Document) -> Vec<usize> {
    doc.tokens()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_word())
        .map(|(i, _)| i)
        .collect()
}

/// Finds lexicon phrases in the document. Every word of a phrase must be
/// an exact match or clear the similarity threshold. Overlapping
/// candidates are resolved to the longest, then the most similar, then the
/// leftmost. Returned matches do not overlap and are ordered by position.
pub fn match_terms(doc: &Document, lex: &Lexicon, cfg: &DetectorConfig) -> Vec<TermMatch> {
    let words = word_indices(doc);
    let tokens = doc.tokens();
    let token_lens: Vec<usize> = words
        .iter()
        .map(|&t| tokens[t].normalized.chars().count())
        .collect();

    // (word start, word len, similarity, entry index)
    let mut candidates: Vec<(usize, usize, f64, usize)> = Vec::new();
    for w in 0..words.len() {
        'entry: for (ei, entry) in lex.entries.iter().enumerate() {
            let n = entry.phrase.len();
            if w + n > words.len() {
                continue;
            }
            let threshold = entry
                .min_similarity_override
                .unwrap_or(cfg.similarity_threshold);
            let mut min_sim = 1.0f64;
            for (k, pw) in entry.phrase.iter().enumerate() {
                let tok = &tokens[words[w + k]].normalized;
                if tok == pw {
                    continue;
                }
                let plen = pw.chars().count();
                let tlen = token_lens[w + k];
                if plen < cfg.min_fuzzy_len {
                    continue 'entry;
                }
                // distance is at least the length difference
                let longest = plen.max(tlen) as f64;
                if 1.0 - plen.abs_diff(tlen) as f64 / longest < threshold {
                    continue 'entry;
                }
                let s = similarity(tok, pw);
                if s < threshold {
                    continue 'entry;
                }
                min_sim = min_sim.min(s);
            }
            candidates.push((w, n, min_sim, ei));
        }
    }

    candidates.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(b.2.total_cmp(&a.2))
            .then(a.0.cmp(&b.0))
            .then(a.3.cmp(&b.3))
    });
    let mut taken = vec![false; words.len()];
    let mut out = Vec::new();
    for (w, n, sim, ei) in candidates {
        if taken[w..w + n].iter().any(|t| *t) {
            continue;
        }
        taken[w..w + n].fill(true);
        let entry = &lex.entries[ei];
        let threshold = entry
            .min_similarity_override
            .unwrap_or(cfg.similarity_threshold);
        let start = tokens[words[w]].core_span().0;
        let end = tokens[words[w + n - 1]].core_span().1;
        out.push(TermMatch {
            entry_id: entry.entry_id.clone(),
            start,
            end,
            kind: if sim == 1.0 {
                MatchKind::Exact
            } else {
                MatchKind::Fuzzy
            },
            similarity: sim,
            context_score: 1.0,
            accepted: sim >= threshold && 1.0 >= cfg.context_threshold,
            category: entry.category.clone(),
            threshold,
            words: (w, w + n),
        });
    }
    out.sort_by_key(|m| m.start);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleEffect {
    Suppress,
    Boost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRule {
    pub rule_id: String,
    /// Lexicon entry id or category the rule applies to.
    pub trigger: String,
    pub window: usize,
    pub cue_words: Vec<String>,
    pub effect: RuleEffect,
    pub weight: f64,
}

impl ContextRule {
    fn validate(mut self) -> std::result::Result<Self, String> {
        if self.window < 1 {
            return Err(format!("rule {}: window must be at least 1", self.rule_id));
        }
        self.cue_words = self
            .cue_words
            .iter()
            .map(|w| crate::corpus::normalize_word(w))
            .filter(|w| !w.is_empty())
            .collect();
        if self.cue_words.is_empty() {
            return Err(format!("rule {}: no cue words", self.rule_id));
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(format!("rule {}: weight must be in (0, 1]", self.rule_id));
        }
        self.trigger = self.trigger.trim().to_lowercase();
        Ok(self)
    }
}

pub fn load_rules(path: &Path) -> Result<Vec<ContextRule>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rules(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn read_rules<R: std::io::BufRead>(reader: R, source_name: &str) -> Result<Vec<ContextRule>> {
    let records: Vec<(usize, ContextRule)> = jsonl::parse_records(reader, source_name)?;
    records
        .into_iter()
        .map(|(line, r)| {
            r.validate()
                .map_err(|m| Error::malformed(source_name, line, m))
        })
        .collect()
}

/// Scores each match against the context rules, in rule order. A
/// triggered suppress rule multiplies the score by `1 - weight`; a boost
/// rule moves it `weight` of the way towards 1.
pub fn apply_context(
    doc: &Document,
    matches: &[TermMatch],
    rules: &[ContextRule],
    cfg: &DetectorConfig,
) -> Vec<TermMatch> {
    let words = word_indices(doc);
    let tokens = doc.tokens();
    matches
        .iter()
        .map(|m| {
            let mut score = 1.0f64;
            for rule in rules {
                let applies =
                    rule.trigger == m.entry_id || rule.trigger == m.category.to_lowercase();
                if !applies {
                    continue;
                }
                let (lo, hi) = m.words;
                let before = lo.saturating_sub(rule.window)..lo;
                let after = hi..(hi + rule.window).min(words.len());
                let cued = before.chain(after).any(|w| {
                    rule.cue_words
                        .iter()
                        .any(|c| *c == tokens[words[w]].normalized)
                });
                if !cued {
                    continue;
                }
                match rule.effect {
                    RuleEffect::Suppress => score *= 1.0 - rule.weight,
                    RuleEffect::Boost => score += (1.0 - score) * rule.weight,
                }
            }
            let mut out = m.clone();
            out.context_score = score.clamp(0.0, 1.0);
            out.accepted =
                m.similarity >= m.threshold && out.context_score >= cfg.context_threshold;
            out
        })
        .collect()
}

/// A document is flagged iff it has at least one accepted match.
pub fn flag_document(matches: &[TermMatch]) -> bool {
    matches.iter().any(|m| m.accepted)
}

/// Per-document detector result in the line-delimited output format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub id: String,
    pub matches: Vec<TermMatch>,
    pub doc_flag: bool,
}

impl DetectionRecord {
    pub fn accepted_spans(&self) -> Vec<Span> {
        self.matches
            .iter()
            .filter(|m| m.accepted)
            .map(TermMatch::span)
            .collect()
    }
}

pub fn detect(
    doc: &Document,
    lex: &Lexicon,
    rules: &[ContextRule],
    cfg: &DetectorConfig,
) -> DetectionRecord {
    let matches = apply_context(doc, &match_terms(doc, lex, cfg), rules, cfg);
    DetectionRecord {
        id: doc.id().to_string(),
        doc_flag: flag_document(&matches),
        matches,
    }
}

/// Output of an external system (e.g. a learned token classifier or NER
/// model) for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalPrediction {
    pub doc_id: String,
    pub term_spans: Vec<Span>,
    pub doc_flag: bool,
    pub entities: Option<Vec<GoldEntity>>,
}

#[derive(Debug, Deserialize)]
struct PredictionRecord {
    id: String,
    #[serde(default)]
    term_spans: Vec<Span>,
    #[serde(default)]
    doc_flag: Option<bool>,
    #[serde(default)]
    entities: Option<Vec<GoldEntity>>,
}

pub fn load_external_predictions(path: &Path) -> Result<Vec<ExternalPrediction>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_external_predictions(std::io::BufReader::new(file), &path.display().to_string())
}

/// Reads prediction records. Spans are checked against document bounds at
/// evaluation time; ids unknown to the corpus are kept.
pub fn read_external_predictions<R: std::io::BufRead>(
    reader: R,
    source_name: &str,
) -> Result<Vec<ExternalPrediction>> {
    let records: Vec<(usize, PredictionRecord)> = jsonl::parse_records(reader, source_name)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, rec) in records {
        let spans = rec
            .term_spans
            .iter()
            .copied()
            .chain(rec.entities.iter().flatten().map(|e| (e.start, e.end)));
        for (s, e) in spans {
            if s >= e {
                return Err(Error::malformed(
                    source_name,
                    line,
                    format!("{}: empty or reversed span ({s}, {e})", rec.id),
                ));
            }
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::malformed(
                source_name,
                line,
                format!("duplicate prediction id {}", rec.id),
            ));
        }
        out.push(ExternalPrediction {
            doc_flag: rec.doc_flag.unwrap_or(!rec.term_spans.is_empty()),
            doc_id: rec.id,
            term_spans: rec.term_spans,
            entities: rec.entities,
        });
    }
    Ok(out)
}
