//! Geoentity recognition: PLSS Township/Range/Section mentions from
//! keyword-anchored numerals, and State/County/City/Subdivision mentions
//! from gazetteer lookup.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_word, Document, Span, Token};
use crate::detector::levenshtein;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::numerals::{parse_numeral_with, NumeralOptions};
use crate::subdiv::{self, blended_similarity, normalize_subdivision_with, Abbreviations};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityClass {
    State,
    County,
    City,
    Subdivision,
    Township,
    Range,
    Section,
}

impl EntityClass {
    pub const ALL: [EntityClass; 7] = [
        EntityClass::State,
        EntityClass::County,
        EntityClass::City,
        EntityClass::Subdivision,
        EntityClass::Township,
        EntityClass::Range,
        EntityClass::Section,
    ];

    pub fn is_plss(self) -> bool {
        matches!(
            self,
            EntityClass::Township | EntityClass::Range | EntityClass::Section
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            EntityClass::State => "State",
            EntityClass::County => "County",
            EntityClass::City => "City",
            EntityClass::Subdivision => "Subdivision",
            EntityClass::Township => "Township",
            EntityClass::Range => "Range",
            EntityClass::Section => "Section",
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    S,
    E,
    W,
}

impl Direction {
    /// Parses direction words and letters ("north", "N", "w").
    pub fn parse(word: &str) -> Option<Direction> {
        match word.to_ascii_lowercase().as_str() {
            "n" | "north" => Some(Direction::N),
            "s" | "south" => Some(Direction::S),
            "e" | "east" => Some(Direction::E),
            "w" | "west" => Some(Direction::W),
            _ => None,
        }
    }

    pub fn is_north_south(self) -> bool {
        matches!(self, Direction::N | Direction::S)
    }

    pub fn letter(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::S => "S",
            Direction::E => "E",
            Direction::W => "W",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

/// Normalized value of a mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntityValue {
    Number {
        value: u32,
        direction: Option<Direction>,
    },
    Name(String),
}

impl fmt::Display for EntityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityValue::Number {
                value,
                direction: Some(d),
            } => write!(f, "{value}{d}"),
            EntityValue::Number { value, .. } => write!(f, "{value}"),
            EntityValue::Name(n) => f.write_str(n),
        }
    }
}

impl Serialize for EntityValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityMention {
    pub class: EntityClass,
    #[serde(skip)]
    pub span: Span,
    pub surface: String,
    pub value: EntityValue,
    /// Index of the first token of the mention in the document.
    #[serde(skip)]
    pub token_start: usize,
}

impl EntityMention {
    pub fn number(&self) -> Option<(u32, Option<Direction>)> {
        match self.value {
            EntityValue::Number { value, direction } => Some((value, direction)),
            EntityValue::Name(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub start: usize,
    pub end: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction {
    pub mentions: Vec<EntityMention>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone)]
pub struct GeonerConfig {
    /// How many tokens after a keyword the numeral may start.
    pub keyword_lookahead: usize,
    /// Township, Range and Section of one key must lie within this many tokens.
    pub proximity_window: usize,
    pub subdivision_threshold: f64,
}

impl Default for GeonerConfig {
    fn default() -> Self {
        GeonerConfig {
            keyword_lookahead: 4,
            proximity_window: 40,
            subdivision_threshold: subdiv::DEFAULT_THRESHOLD,
        }
    }
}

const FILLERS: [&str; 5] = ["numbered", "no", "number", "num", "nr"];

fn keyword_class(word: &str) -> Option<EntityClass> {
    match word {
        "township" | "twp" | "tp" | "town" => return Some(EntityClass::Township),
        "range" | "rge" | "rng" => return Some(EntityClass::Range),
        "section" | "sec" | "sect" => return Some(EntityClass::Section),
        _ => {}
    }
    // one edit of OCR tolerance for the long keywords
    [
        ("township", EntityClass::Township),
        ("range", EntityClass::Range),
        ("section", EntityClass::Section),
    ]
    .into_iter()
    .find(|(kw, _)| word.len().abs_diff(kw.len()) <= 1 && levenshtein(word, kw) <= 1)
    .map(|(_, c)| c)
}

/// "t28n", "r23w", "s25": keyword letter, digits, optional direction.
fn compact_mention(word: &str) -> Option<(EntityClass, u32, Option<Direction>)> {
    let mut chars = word.chars();
    let class = match chars.next()? {
        't' => EntityClass::Township,
        'r' => EntityClass::Range,
        's' => EntityClass::Section,
        _ => return None,
    };
    let rest = chars.as_str();
    let digits_end = rest
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(rest.len());
    if digits_end == 0 || digits_end > 3 {
        return None;
    }
    let value: u32 = rest[..digits_end].parse().ok()?;
    let tail = &rest[digits_end..];
    let dir = if tail.is_empty() {
        None
    } else {
        Some(Direction::parse(tail)?)
    };
    Some((class, value, dir))
}

/// "29n": digits immediately followed by a direction letter.
fn number_with_direction(word: &str) -> Option<(u32, Direction)> {
    let (digits, dir) = word.split_at(word.len().checked_sub(1)?);
    if digits.is_empty() || digits.len() > 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((digits.parse().ok()?, Direction::parse(dir)?))
}

fn direction_fits(class: EntityClass, d: Direction) -> bool {
    match class {
        EntityClass::Township => d.is_north_south(),
        EntityClass::Range => !d.is_north_south(),
        _ => false,
    }
}

struct PlssScanner<'a> {
    doc: &'a Document,
    words: Vec<usize>,
    cfg: &'a GeonerConfig,
    out: Extraction,
}

impl<'a> PlssScanner<'a> {
    fn token(&self, w: usize) -> &'a Token {
        &self.doc.tokens()[self.words[w]]
    }

    fn emit(
        &mut self,
        class: EntityClass,
        first_word: usize,
        end_char: usize,
        value: u32,
        direction: Option<Direction>,
    ) {
        let start = self.token(first_word).core_span().0;
        let surface = self.doc.slice(start, end_char).to_string();
        let valid = match class {
            EntityClass::Section => (1..=36).contains(&value),
            _ => value >= 1,
        };
        if !valid {
            self.out.diagnostics.push(Diagnostic {
                start,
                end: end_char,
                message: format!("{class} value {value} out of range; dropped"),
            });
            return;
        }
        self.out.mentions.push(EntityMention {
            class,
            span: (start, end_char),
            surface,
            value: EntityValue::Number { value, direction },
            token_start: self.words[first_word],
        });
    }

    /// Direction word following position `w`, if it fits the class.
    fn trailing_direction(&self, class: EntityClass, w: usize) -> Option<Direction> {
        if class == EntityClass::Section || w >= self.words.len() {
            return None;
        }
        // the direction must directly follow, not across punctuation-only tokens
        if self.words[w] != self.words[w - 1] + 1 {
            return None;
        }
        Direction::parse(&self.token(w).normalized).filter(|d| direction_fits(class, *d))
    }

    /// Tries to read a mention whose keyword is word `w`. Returns the next
    /// word index to scan from.
    fn mention_at(&mut self, w: usize, class: EntityClass) -> usize {
        let limit = (w + self.cfg.keyword_lookahead).min(self.words.len() - 1);
        let mut j = w + 1;
        while j <= limit && FILLERS.contains(&self.token(j).normalized.as_str()) {
            j += 1;
        }
        if j > limit {
            return w + 1;
        }

        let tok = self.token(j);
        if let Some((value, dir)) = number_with_direction(&tok.normalized) {
            if direction_fits(class, dir) {
                self.emit(class, w, tok.core_span().1, value, Some(dir));
                return j + 1;
            }
        }

        let tokens = &self.doc.tokens()[self.words[j]..];
        let Some(num) = parse_numeral_with(tokens, NumeralOptions { ocr_digits: true }) else {
            return w + 1;
        };
        let after = j + num.tokens;
        let mut end_char = num.source_span.1;
        let mut next = after;
        let direction = self.trailing_direction(class, after);
        if direction.is_some() {
            end_char = self.token(after).core_span().1;
            next = after + 1;
        }
        self.emit(class, w, end_char, num.value, direction);
        next
    }

    fn run(mut self) -> Extraction {
        let mut w = 0;
        while w < self.words.len() {
            let word = &self.token(w).normalized;
            if let Some((class, value, dir)) = compact_mention(word) {
                let end = self.token(w).core_span().1;
                self.emit(class, w, end, value, dir);
                w += 1;
            } else if let Some(class) = keyword_class(word) {
                w = self.mention_at(w, class);
            } else {
                w += 1;
            }
        }
        self.out
    }
}

/// Extracts Township, Range and Section mentions.
pub fn extract_plss(doc: &Document, cfg: &GeonerConfig) -> Extraction {
    let words = doc
        .tokens()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_word())
        .map(|(i, _)| i)
        .collect();
    PlssScanner {
        doc,
        words,
        cfg,
        out: Extraction::default(),
    }
    .run()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazetteerRecord {
    pub class: EntityClass,
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdivisionRecord {
    pub id: String,
    pub name: String,
    #[serde(skip)]
    pub canonical: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

/// Place-name inventory. Lookups are case-insensitive.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    records: Vec<GazetteerRecord>,
    names: HashMap<Vec<String>, Vec<usize>>,
    max_name_words: usize,
    subdivisions: Vec<SubdivisionRecord>,
    subdivision_first_words: BTreeMap<String, Vec<usize>>,
    abbreviations: Abbreviations,
}

fn name_key(name: &str) -> Vec<String> {
    name.split_whitespace()
        .map(normalize_word)
        .filter(|w| !w.is_empty())
        .collect()
}

impl Gazetteer {
    pub fn empty() -> Self {
        Gazetteer::from_records(Vec::new(), Abbreviations::default()).expect("empty gazetteer")
    }

    pub fn load(path: &Path, abbreviations: Abbreviations) -> Result<Self> {
        let records: Vec<GazetteerRecord> = jsonl::read_records(path)?
            .into_iter()
            .map(|(_, r)| r)
            .collect();
        Gazetteer::from_records(records, abbreviations)
    }

    pub fn from_records(
        records: Vec<GazetteerRecord>,
        abbreviations: Abbreviations,
    ) -> Result<Self> {
        let mut names: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
        let mut subdivisions = Vec::new();
        let mut subdivision_first_words: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, rec) in records.iter().enumerate() {
            if name_key(&rec.name).is_empty() {
                return Err(Error::Invalid(format!(
                    "gazetteer {} entry with empty name",
                    rec.class
                )));
            }
            match rec.class {
                EntityClass::State | EntityClass::County | EntityClass::City => {
                    for n in std::iter::once(&rec.name).chain(rec.aliases.iter()) {
                        let key = name_key(n);
                        if key.is_empty() {
                            continue;
                        }
                        let slot = names.entry(key).or_default();
                        if !slot.contains(&idx) {
                            slot.push(idx);
                        }
                    }
                }
                EntityClass::Subdivision => {
                    for n in std::iter::once(&rec.name).chain(rec.aliases.iter()) {
                        let canonical = normalize_subdivision_with(n, &abbreviations);
                        let Some(first) = canonical.split(' ').next().map(str::to_string) else {
                            continue;
                        };
                        subdivision_first_words
                            .entry(first)
                            .or_default()
                            .push(subdivisions.len());
                        subdivisions.push(SubdivisionRecord {
                            id: rec.id.clone().unwrap_or_else(|| rec.name.clone()),
                            name: rec.name.clone(),
                            canonical,
                            parent: rec.parent.clone(),
                        });
                    }
                }
                other => {
                    return Err(Error::Invalid(format!(
                        "gazetteer cannot hold {other} entries ({})",
                        rec.name
                    )))
                }
            }
        }
        let max_name_words = names.keys().map(Vec::len).max().unwrap_or(0);
        Ok(Gazetteer {
            records,
            names,
            max_name_words,
            subdivisions,
            subdivision_first_words,
            abbreviations,
        })
    }

    pub fn records(&self) -> &[GazetteerRecord] {
        &self.records
    }

    pub fn subdivisions(&self) -> &[SubdivisionRecord] {
        &self.subdivisions
    }

    pub fn abbreviations(&self) -> &Abbreviations {
        &self.abbreviations
    }

    /// Entries whose name or alias matches, case-insensitively.
    pub fn lookup(&self, name: &str) -> Vec<&GazetteerRecord> {
        self.names
            .get(&name_key(name))
            .map(|ids| ids.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// The state a county or city entry belongs to, following parents.
    pub fn state_of(&self, class: EntityClass, name: &str) -> Option<String> {
        let mut current = self.lookup(name).into_iter().find(|r| r.class == class)?;
        for _ in 0..3 {
            if current.class == EntityClass::State {
                return Some(current.name.clone());
            }
            let parent = current.parent.as_deref()?;
            current = self
                .lookup(parent)
                .into_iter()
                .filter(|r| r.class < current.class)
                .max_by_key(|r| r.class)?;
        }
        None
    }
}

fn has_word_near(doc: &Document, words: &[usize], lo: usize, hi: usize, target: &str) -> bool {
    words[lo..hi]
        .iter()
        .any(|&t| doc.tokens()[t].normalized == target)
}

fn rpss_names(doc: &Document, gaz: &Gazetteer, words: &[usize], out: &mut Vec<EntityMention>) {
    let mut w = 0;
    while w < words.len() {
        let max_n = gaz.max_name_words.min(words.len() - w);
        let mut advanced = false;
        for n in (1..=max_n).rev() {
            let key: Vec<String> = words[w..w + n]
                .iter()
                .map(|&t| doc.tokens()[t].normalized.clone())
                .collect();
            let Some(ids) = gaz.names.get(&key) else {
                continue;
            };
            let entries: Vec<&GazetteerRecord> = ids.iter().map(|&i| &gaz.records[i]).collect();
            let county_context = has_word_near(doc, words, w.saturating_sub(2), w, "county")
                || has_word_near(doc, words, w + n, (w + n + 2).min(words.len()), "county");
            let city_context = has_word_near(doc, words, w.saturating_sub(2), w, "city");
            let pick = |class| entries.iter().find(|e| e.class == class).copied();
            let chosen = if city_context && pick(EntityClass::City).is_some() {
                pick(EntityClass::City)
            } else if county_context && pick(EntityClass::County).is_some() {
                pick(EntityClass::County)
            } else if let Some(s) = pick(EntityClass::State) {
                Some(s)
            } else if let Some(c) = pick(EntityClass::City) {
                Some(c)
            } else if entries.len() == 1 {
                Some(entries[0])
            } else {
                None
            };
            let Some(entry) = chosen else {
                continue;
            };
            let first = &doc.tokens()[words[w]];
            let last = &doc.tokens()[words[w + n - 1]];
            let span = (first.core_span().0, last.core_span().1);
            out.push(EntityMention {
                class: entry.class,
                span,
                surface: doc.slice(span.0, span.1).to_string(),
                value: EntityValue::Name(entry.name.clone()),
                token_start: words[w],
            });
            w += n;
            advanced = true;
            break;
        }
        if !advanced {
            w += 1;
        }
    }
}

struct SubdivisionHit {
    first: usize,
    len: usize,
    score: f64,
    name: String,
}

fn rpss_subdivisions(
    doc: &Document,
    gaz: &Gazetteer,
    words: &[usize],
    threshold: f64,
    out: &mut Vec<EntityMention>,
) {
    if gaz.subdivisions.is_empty() {
        return;
    }
    let mut hits: Vec<SubdivisionHit> = Vec::new();
    for w in 0..words.len() {
        let tok = &doc.tokens()[words[w]];
        let lead = normalize_subdivision_with(&tok.surface, &gaz.abbreviations);
        let Some(lead) = lead.split(' ').next().filter(|s| !s.is_empty()) else {
            continue;
        };
        let lead_len = lead.chars().count();
        for (first_word, cands) in &gaz.subdivision_first_words {
            let flen = first_word.chars().count();
            if first_word != lead
                && (lead_len.abs_diff(flen) * 5 > flen.max(lead_len)
                    || crate::detector::similarity(lead, first_word) < 0.8)
            {
                continue;
            }
            for &ci in cands {
                let cand = &gaz.subdivisions[ci];
                let k = cand.canonical.split(' ').count();
                for len in k.saturating_sub(1).max(1)..=k + 1 {
                    if w + len > words.len() {
                        break;
                    }
                    let start = tok.start;
                    let end = doc.tokens()[words[w + len - 1]].end;
                    let window =
                        normalize_subdivision_with(doc.slice(start, end), &gaz.abbreviations);
                    let score = blended_similarity(&window, &cand.canonical);
                    if score >= threshold {
                        hits.push(SubdivisionHit {
                            first: w,
                            len,
                            score,
                            name: cand.name.clone(),
                        });
                    }
                }
            }
        }
    }
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.len.cmp(&a.len))
            .then(a.first.cmp(&b.first))
            .then(a.name.cmp(&b.name))
    });
    let mut taken = vec![false; words.len()];
    for h in hits {
        if taken[h.first..h.first + h.len].iter().any(|t| *t) {
            continue;
        }
        taken[h.first..h.first + h.len].fill(true);
        let first = &doc.tokens()[words[h.first]];
        let last = &doc.tokens()[words[h.first + h.len - 1]];
        let span = (first.core_span().0, last.core_span().1);
        out.push(EntityMention {
            class: EntityClass::Subdivision,
            span,
            surface: doc.slice(span.0, span.1).to_string(),
            value: EntityValue::Name(h.name),
            token_start: words[h.first],
        });
    }
}

/// Extracts State, County, City and Subdivision mentions by gazetteer
/// lookup. Results are ordered by position, then class.
pub fn extract_rpss(doc: &Document, gaz: &Gazetteer, cfg: &GeonerConfig) -> Vec<EntityMention> {
    let words: Vec<usize> = doc
        .tokens()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_word())
        .map(|(i, _)| i)
        .collect();
    let mut out = Vec::new();
    rpss_names(doc, gaz, &words, &mut out);
    rpss_subdivisions(doc, gaz, &words, cfg.subdivision_threshold, &mut out);
    out.sort_by_key(|m| (m.span.0, m.class));
    out
}

/// A (Township, Range[, Section]) combination found in one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlssCandidate {
    pub t: u32,
    pub t_dir: Option<Direction>,
    pub r: u32,
    pub r_dir: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
    pub count: usize,
    /// Token index where this combination first occurs.
    #[serde(skip)]
    pub first_token: usize,
}

impl PlssCandidate {
    pub fn as_tuple(&self) -> PlssCandidate {
        PlssCandidate {
            s: None,
            ..self.clone()
        }
    }
}

fn nearest<'m>(pool: &[&'m EntityMention], pos: usize, window: usize) -> Option<&'m EntityMention> {
    pool.iter()
        .filter(|m| m.token_start.abs_diff(pos) < window)
        .min_by_key(|m| (m.token_start.abs_diff(pos), m.token_start))
        .copied()
}

fn combine(
    t: &EntityMention,
    r: &EntityMention,
    s: Option<&EntityMention>,
    window: usize,
) -> Option<PlssCandidate> {
    let positions = [Some(t), Some(r), s]
        .into_iter()
        .flatten()
        .map(|m| m.token_start);
    let (lo, hi) = positions.fold((usize::MAX, 0), |(lo, hi), p| (lo.min(p), hi.max(p)));
    if hi - lo >= window {
        return None;
    }
    let (tv, td) = t.number()?;
    let (rv, rd) = r.number()?;
    Some(PlssCandidate {
        t: tv,
        t_dir: td,
        r: rv,
        r_dir: rd,
        s: s.and_then(|m| m.number()).map(|(v, _)| v),
        count: 1,
        first_token: lo,
    })
}

/// Groups PLSS mentions into triples (or tuples when no Section is present)
/// and ranks them by frequency, then by first occurrence.
pub fn select_plss_key(mentions: &[EntityMention], window: usize) -> Vec<PlssCandidate> {
    let of = |class| -> Vec<&EntityMention> {
        mentions
            .iter()
            .filter(|m| m.class == class && m.number().is_some())
            .collect()
    };
    let (ts, rs, ss) = (
        of(EntityClass::Township),
        of(EntityClass::Range),
        of(EntityClass::Section),
    );

    let mut combos: Vec<PlssCandidate> = ss
        .iter()
        .filter_map(|s| {
            let t = nearest(&ts, s.token_start, window)?;
            let r = nearest(&rs, s.token_start, window)?;
            combine(t, r, Some(s), window)
        })
        .collect();
    if combos.is_empty() {
        combos = ts
            .iter()
            .filter_map(|t| {
                let r = nearest(&rs, t.token_start, window)?;
                combine(t, r, None, window)
            })
            .collect();
    }

    let mut merged: Vec<PlssCandidate> = Vec::new();
    for c in combos {
        match merged
            .iter_mut()
            .find(|m| (m.t, m.t_dir, m.r, m.r_dir, m.s) == (c.t, c.t_dir, c.r, c.r_dir, c.s))
        {
            Some(m) => {
                m.count += 1;
                m.first_token = m.first_token.min(c.first_token);
            }
            None => merged.push(c),
        }
    }
    merged.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.first_token.cmp(&b.first_token))
    });
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plss(text: &str) -> Extraction {
        extract_plss(&Document::new("t", text), &GeonerConfig::default())
    }

    fn values(ex: &Extraction) -> Vec<(EntityClass, String)> {
        ex.mentions
            .iter()
            .map(|m| (m.class, m.value.to_string()))
            .collect()
    }

    #[test]
    fn quoted_township_phrase() {
        let ex = plss("Township numbered Eight (8) North");
        assert_eq!(values(&ex), [(EntityClass::Township, "8N".to_string())]);
        assert_eq!(ex.mentions[0].span, (0, 33));
        assert_eq!(ex.mentions[0].surface, "Township numbered Eight (8) North");
    }

    #[test]
    fn section_and_out_of_range_section() {
        assert_eq!(
            values(&plss("Section 25")),
            [(EntityClass::Section, "25".to_string())]
        );
        let ex = plss("Section 40");
        assert!(ex.mentions.is_empty());
        assert_eq!(ex.diagnostics.len(), 1);
        assert!(ex.diagnostics[0].message.contains("40"));
    }

    #[test]
    fn ocr_tolerant_keyword() {
        // "townsh1p" is one substitution away from "township"
        assert_eq!(levenshtein("townsh1p", "township"), 1);
        assert_eq!(
            values(&plss("Townsh1p 29 N")),
            [(EntityClass::Township, "29N".to_string())]
        );
        // short keywords get no tolerance
        assert!(plss("sac 5").mentions.is_empty());
    }

    #[test]
    fn hundreds_and_full_description() {
        assert_eq!(
            values(&plss("Township One hundred and six North")),
            [(EntityClass::Township, "106N".to_string())]
        );
        let ex = plss("Section Twenty-five (25), Township 28 North, Range 23 West of the 4th P.M.");
        assert_eq!(
            values(&ex),
            [
                (EntityClass::Section, "25".to_string()),
                (EntityClass::Township, "28N".to_string()),
                (EntityClass::Range, "23W".to_string()),
            ]
        );
    }

    #[test]
    fn compact_and_abbreviated_forms() {
        assert_eq!(
            values(&plss("T.28N., R.23W., Sec. 5")),
            [
                (EntityClass::Township, "28N".to_string()),
                (EntityClass::Range, "23W".to_string()),
                (EntityClass::Section, "5".to_string()),
            ]
        );
        assert_eq!(
            values(&plss("Twp 29N Rge 22 E")),
            [
                (EntityClass::Township, "29N".to_string()),
                (EntityClass::Range, "22E".to_string()),
            ]
        );
    }

    #[test]
    fn range_direction_not_absorbed_by_township() {
        let ex = plss("Township 8 West");
        assert_eq!(values(&ex), [(EntityClass::Township, "8".to_string())]);
    }

    #[test]
    fn keyword_without_numeral_is_ignored() {
        assert!(plss("a wide range of uses in this section of the deed")
            .mentions
            .is_empty());
    }

    fn fixture_gazetteer() -> Gazetteer {
        let recs = r#"{"class":"State","name":"Minnesota","aliases":["Minn","MN"]}
{"class":"State","name":"Wisconsin","aliases":["Wis","WI"]}
{"class":"County","name":"Dakota","parent":"Minnesota"}
{"class":"County","name":"Milwaukee","parent":"Wisconsin"}
{"class":"County","name":"Washington","parent":"Minnesota"}
{"class":"County","name":"Washington","parent":"Wisconsin"}
{"class":"City","name":"Hastings","parent":"Dakota"}
{"class":"Subdivision","name":"Oakwood Addition No. 2","parent":"Dakota"}"#;
        let records: Vec<GazetteerRecord> = recs
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        Gazetteer::from_records(records, Abbreviations::default()).unwrap()
    }

    fn rpss(text: &str) -> Vec<(EntityClass, String)> {
        extract_rpss(
            &Document::new("t", text),
            &fixture_gazetteer(),
            &GeonerConfig::default(),
        )
        .into_iter()
        .map(|m| (m.class, m.value.to_string()))
        .collect()
    }

    #[test]
    fn county_and_state() {
        assert_eq!(
            rpss("Dakota County, Minnesota"),
            [
                (EntityClass::County, "Dakota".to_string()),
                (EntityClass::State, "Minnesota".to_string()),
            ]
        );
        assert_eq!(
            rpss("the state of Wisconsin"),
            [(EntityClass::State, "Wisconsin".to_string())]
        );
    }

    #[test]
    fn county_uniqueness_rule() {
        // Milwaukee is the only gazetteer entry with that name
        assert_eq!(
            rpss("lying in Milwaukee and"),
            [(EntityClass::County, "Milwaukee".to_string())]
        );
        // Washington names two counties, so it needs the county cue
        assert!(rpss("lying in Washington and").is_empty());
        assert_eq!(
            rpss("County of Washington"),
            [(EntityClass::County, "Washington".to_string())]
        );
    }

    #[test]
    fn subdivision_fuzzy_hit() {
        let found = rpss("Lot 4, Block 2, Oakwood Add'n No. 2, City of Hastings");
        assert!(found.contains(&(
            EntityClass::Subdivision,
            "Oakwood Addition No. 2".to_string()
        )));
        assert!(found.contains(&(EntityClass::City, "Hastings".to_string())));
        // one misread word costs a quarter of the token overlap: 0.3 + 0.48
        assert!(rpss("Oakwood Additlon Number 2").is_empty());
    }

    #[test]
    fn state_of_follows_parents() {
        let g = fixture_gazetteer();
        assert_eq!(
            g.state_of(EntityClass::City, "Hastings").as_deref(),
            Some("Minnesota")
        );
        assert_eq!(
            g.state_of(EntityClass::County, "milwaukee").as_deref(),
            Some("Wisconsin")
        );
    }

    fn key(text: &str) -> Vec<PlssCandidate> {
        select_plss_key(&plss(text).mentions, 40)
    }

    #[test]
    fn single_triple() {
        let ranked = key("Section 25, Township 28 North, Range 23 East");
        assert_eq!(ranked.len(), 1);
        let c = &ranked[0];
        assert_eq!(
            (c.t, c.t_dir, c.r, c.r_dir, c.s, c.count),
            (28, Some(Direction::N), 23, Some(Direction::E), Some(25), 1)
        );
    }

    #[test]
    fn repeated_triple_ranks_first() {
        let text = "Section 3, Township 1 North, Range 2 West. \
                    Section 9, Township 1 North, Range 2 West. \
                    again Section 9, Township 1 North, Range 2 West.";
        let ranked = key(text);
        assert_eq!(ranked[0].s, Some(9));
        assert_eq!(ranked[0].count, 2);
        assert_eq!(ranked[1].s, Some(3));
    }

    #[test]
    fn tuple_when_no_section_and_window_respected() {
        let ranked = key("Township 1 North, Range 2 West");
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].s, None);

        let filler = "word ".repeat(50);
        assert!(key(&format!("Township 1 North {filler} Range 2 West")).is_empty());
        assert!(key("").is_empty());
    }
}
