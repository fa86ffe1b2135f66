//! Seeded synthetic data: a two-state PLSS grid, deeds with planted
//! covenant terms and survey descriptions, and their gold annotations.
//! Used by tests, benchmarks and demos; output depends only on the seed.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::corpus::{Document, GoldAnnotation, GoldEntity, Span};
use crate::detector::{ContextRule, Lexicon};
use crate::geometry::{BBox, MultiPolygon};
use crate::geoner::{Direction, EntityClass, Gazetteer, GazetteerRecord};
use crate::numerals::render_numeral;
use crate::plss::{FieldBindings, PlssIndex};
use crate::subdiv::Abbreviations;

pub const DEMO_LEXICON: &str = include_str!("../data/lexicon.tsv");
pub const DEMO_RULES: &str = include_str!("../data/context_rules.jsonl");
pub const DEMO_GAZETTEER: &str = include_str!("../data/gazetteer.jsonl");

pub fn demo_lexicon() -> Lexicon {
    Lexicon::parse(DEMO_LEXICON, "demo lexicon").expect("demo lexicon parses")
}

pub fn demo_rules() -> Vec<ContextRule> {
    crate::detector::read_rules(DEMO_RULES.as_bytes(), "demo rules").expect("demo rules parse")
}

pub fn demo_gazetteer() -> Gazetteer {
    let records: Vec<GazetteerRecord> = DEMO_GAZETTEER
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("demo gazetteer record"))
        .collect();
    Gazetteer::from_records(records, Abbreviations::default()).expect("demo gazetteer")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// PLSS grid

/// Side of one section in degrees (a power of two, so grid coordinates are
/// exact in binary floating point).
pub const SECTION_DEG: f64 = 1.0 / 64.0;
pub const TOWNSHIP_DEG: f64 = 6.0 * SECTION_DEG;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridState {
    Minnesota,
    Wisconsin,
}

impl GridState {
    pub const BOTH: [GridState; 2] = [GridState::Minnesota, GridState::Wisconsin];

    pub fn name(self) -> &'static str {
        match self {
            GridState::Minnesota => "Minnesota",
            GridState::Wisconsin => "Wisconsin",
        }
    }

    pub fn range_dir(self) -> Direction {
        match self {
            GridState::Minnesota => Direction::W,
            GridState::Wisconsin => Direction::E,
        }
    }

    pub fn county(self) -> &'static str {
        match self {
            GridState::Minnesota => "Dakota",
            GridState::Wisconsin => "Milwaukee",
        }
    }

    fn meridian(self) -> f64 {
        match self {
            GridState::Minnesota => -93.0,
            GridState::Wisconsin => -89.0,
        }
    }
}

/// Both grids cover Township 1 North, Ranges 1 and 2 (West of the meridian
/// in Minnesota, East in Wisconsin), so the numbers collide across states.
pub const GRID_TOWNSHIP: u32 = 1;
pub const GRID_RANGES: [u32; 2] = [1, 2];
const BASELINE_LAT: f64 = 45.0;

pub fn township_bbox(state: GridState, range: u32) -> BBox {
    let offset = (range - 1) as f64 * TOWNSHIP_DEG;
    let (min_lon, max_lon) = match state.range_dir() {
        Direction::W => (
            state.meridian() - offset - TOWNSHIP_DEG,
            state.meridian() - offset,
        ),
        _ => (
            state.meridian() + offset,
            state.meridian() + offset + TOWNSHIP_DEG,
        ),
    };
    let min_lat = BASELINE_LAT + (GRID_TOWNSHIP - 1) as f64 * TOWNSHIP_DEG;
    [min_lon, min_lat, max_lon, min_lat + TOWNSHIP_DEG]
}

/// (row from north, column from west) of a section; numbering runs east to
/// west across the top row and alternates direction row by row.
pub fn section_cell(section: u32) -> (u32, u32) {
    let idx = section - 1;
    let row = idx / 6;
    let k = idx % 6;
    let col = if row.is_multiple_of(2) { 5 - k } else { k };
    (row, col)
}

pub fn section_bbox(state: GridState, range: u32, section: u32) -> BBox {
    let t = township_bbox(state, range);
    let (row, col) = section_cell(section);
    let min_lon = t[0] + col as f64 * SECTION_DEG;
    let max_lat = t[3] - row as f64 * SECTION_DEG;
    [
        min_lon,
        max_lat - SECTION_DEG,
        min_lon + SECTION_DEG,
        max_lat,
    ]
}

fn rect_geojson(b: BBox) -> Value {
    MultiPolygon::rect(b[0], b[1], b[2], b[3]).to_geojson()
}

/// FeatureCollection with 2 township and 72 section features, using the
/// attribute schema of [`grid_bindings`].
pub fn grid_geojson(state: GridState) -> Value {
    let mut features = Vec::new();
    for range in GRID_RANGES {
        for section in 0..=36u32 {
            let props = match state {
                GridState::Minnesota => json!({
                    "TWP": GRID_TOWNSHIP, "TDIR": "N", "RNG": range, "RDIR": "W",
                    "SEC": if section == 0 { Value::Null } else { json!(section) },
                }),
                GridState::Wisconsin => json!({
                    "TOWN": format!("{GRID_TOWNSHIP:03}"), "RANGE": range, "RNG_DIR": 2,
                    "SECTION": section,
                }),
            };
            let bbox = if section == 0 {
                township_bbox(state, range)
            } else {
                section_bbox(state, range, section)
            };
            features.push(json!({
                "type": "Feature",
                "properties": props,
                "geometry": rect_geojson(bbox),
            }));
        }
    }
    json!({"type": "FeatureCollection", "features": features})
}

/// The two grids deliberately use different attribute schemas.
pub fn grid_bindings(state: GridState) -> FieldBindings {
    let value = match state {
        GridState::Minnesota => json!({
            "state": "Minnesota", "township": "TWP", "township_dir": "TDIR",
            "range": "RNG", "range_dir": "RDIR", "section": "SEC",
            "default_township_dir": "N", "default_range_dir": "W",
        }),
        GridState::Wisconsin => json!({
            "state": "Wisconsin", "township": "TOWN",
            "range": "RANGE", "range_dir": "RNG_DIR", "section": "SECTION",
            "directions": {"2": "E", "4": "W"},
            "default_township_dir": "N", "default_range_dir": "E",
        }),
    };
    serde_json::from_value(value).expect("fixture bindings")
}

/// Index over both fixture grids.
pub fn grid_index() -> PlssIndex {
    let mut idx = PlssIndex::default();
    for st in GridState::BOTH {
        idx.add_feature_collection(&grid_geojson(st), &grid_bindings(st), st.name())
            .expect("fixture grid loads");
    }
    idx.finish(crate::plss::DEFAULT_NESTING_EPSILON)
        .expect("fixture grid nests");
    idx
}

// ---------------------------------------------------------------------------
// Text assembly

/// Appends text while tracking character offsets.
#[derive(Debug, Default, Clone)]
pub struct TextBuilder {
    text: String,
    chars: usize,
}

impl TextBuilder {
    pub fn push(&mut self, s: &str) -> Span {
        let start = self.chars;
        self.text.push_str(s);
        self.chars += s.chars().count();
        (start, self.chars)
    }

    pub fn len(&self) -> usize {
        self.chars
    }

    pub fn is_empty(&self) -> bool {
        self.chars == 0
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Filler vocabulary that never fuzzy-matches the demo lexicon.
pub const FILLER_WORDS: &[&str] = &[
    "the",
    "said",
    "premises",
    "grantor",
    "grantee",
    "hereby",
    "conveys",
    "and",
    "warrants",
    "unto",
    "heirs",
    "assigns",
    "forever",
    "lot",
    "block",
    "according",
    "recorded",
    "plat",
    "thereof",
    "office",
    "register",
    "deeds",
    "witness",
    "whereof",
    "hand",
    "seal",
    "dated",
    "this",
    "day",
    "year",
    "consideration",
    "dollars",
    "paid",
    "receipt",
    "acknowledged",
    "subject",
    "easements",
    "taxes",
    "assessments",
    "building",
    "line",
    "feet",
    "street",
    "avenue",
    "lying",
    "being",
    "situated",
    "parcel",
    "tract",
    "land",
    "described",
    "party",
    "first",
    "part",
    "second",
    "executors",
    "administrators",
    "covenant",
    "lawfully",
    "seized",
    "good",
    "right",
    "sell",
    "free",
    "clear",
    "encumbrances",
    "whatsoever",
    "defend",
    "title",
    "against",
    "claims",
    "persons",
    "lawful",
    "instrument",
    "mortgage",
    "filed",
    "page",
    "book",
    "notary",
    "public",
    "commission",
    "expires",
    "signed",
    "sealed",
    "delivered",
    "presence",
];

fn filler(rng: &mut ChaCha8Rng, b: &mut TextBuilder, words: std::ops::Range<usize>) {
    let words = rng.random_range(words);
    for i in 0..words {
        let w = FILLER_WORDS.choose(rng).expect("non-empty");
        if i == 0 && !b.is_empty() {
            b.push(" ");
        } else if i > 0 {
            b.push(if rng.random_bool(0.08) { ", " } else { " " });
        }
        b.push(w);
    }
    b.push(". ");
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

// ---------------------------------------------------------------------------
// Covenant terms

const COVENANT_LEADS: &[&str] = &[
    "said premises shall not be sold, leased or occupied by any",
    "no part of said lot shall ever be used or occupied by any",
    "shall not at any time be conveyed to any",
    "the grantee agrees not to permit occupancy by",
    "said lot shall never pass to",
];

/// Picks a lexicon phrase and writes it in one of a few casings.
fn plant_term(rng: &mut ChaCha8Rng, lex: &Lexicon, b: &mut TextBuilder, noisy: bool) -> Span {
    let entry = lex.entries().choose(rng).expect("lexicon non-empty");
    let mut text = entry.phrase.join(" ");
    if noisy {
        text = one_edit(rng, &text);
    }
    let text = match rng.random_range(0..3) {
        0 => text,
        1 => text
            .split(' ')
            .map(capitalize)
            .collect::<Vec<_>>()
            .join(" "),
        _ => text.to_uppercase(),
    };
    b.push(&text)
}

/// Applies one random substitution, insertion or deletion at a letter.
pub fn one_edit(rng: &mut ChaCha8Rng, s: &str) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let letters: Vec<usize> = (0..chars.len())
        .filter(|&i| chars[i].is_alphabetic())
        .collect();
    let &pos = letters.choose(rng).expect("term has letters");
    let random_letter = |rng: &mut ChaCha8Rng, not: char| loop {
        let c = (b'a' + rng.random_range(0..26u8)) as char;
        if c != not {
            break c;
        }
    };
    let word_len = |chars: &[char], pos: usize| {
        let lo = chars[..pos]
            .iter()
            .rposition(|c| *c == ' ')
            .map_or(0, |i| i + 1);
        let hi = chars[pos..]
            .iter()
            .position(|c| *c == ' ')
            .map_or(chars.len(), |i| pos + i);
        hi - lo
    };
    match rng.random_range(0..3) {
        0 => chars[pos] = random_letter(rng, chars[pos]),
        1 => {
            let c = random_letter(rng, '\0');
            chars.insert(pos + 1, c);
        }
        _ if word_len(&chars, pos) > 1 => {
            chars.remove(pos);
        }
        _ => chars[pos] = random_letter(rng, chars[pos]),
    }
    chars.into_iter().collect()
}

/// Documents where some pages carry planted lexicon terms. Gold spans
/// cover exactly the planted text.
pub fn planted_corpus(
    lex: &Lexicon,
    docs: usize,
    seed: u64,
    noisy: bool,
) -> (Vec<Document>, Vec<GoldAnnotation>) {
    let mut rng = rng(seed);
    let mut out_docs = Vec::with_capacity(docs);
    let mut gold = Vec::with_capacity(docs);
    for i in 0..docs {
        let id = format!("planted-{i:05}");
        let mut b = TextBuilder::default();
        let mut spans = Vec::new();
        let planted = if rng.random_bool(0.6) {
            rng.random_range(1..=3)
        } else {
            0
        };
        filler(&mut rng, &mut b, 10..30);
        for _ in 0..planted {
            b.push(COVENANT_LEADS.choose(&mut rng).expect("leads"));
            b.push(" ");
            spans.push(plant_term(&mut rng, lex, &mut b, noisy));
            b.push(". ");
            filler(&mut rng, &mut b, 5..25);
        }
        gold.push(GoldAnnotation {
            doc_id: id.clone(),
            doc_flag: !spans.is_empty(),
            term_spans: spans,
            entity_spans: Vec::new(),
            parcels: None,
        });
        out_docs.push(Document::new(id, b.finish()));
    }
    (out_docs, gold)
}

/// 50 pages using "race" in a restrictive sense followed by 50 pages
/// using "the human race"; only the first 50 carry gold spans.
pub fn context_fixture(seed: u64) -> (Vec<Document>, Vec<GoldAnnotation>) {
    let mut rng = rng(seed);
    let mut docs = Vec::new();
    let mut gold = Vec::new();
    for i in 0..100 {
        let positive = i < 50;
        let id = format!("{}-{i:03}", if positive { "tp" } else { "distractor" });
        let mut b = TextBuilder::default();
        filler(&mut rng, &mut b, 8..20);
        let span = if positive {
            b.push("said premises shall not be occupied by persons of another ");
            let s = b.push("race");
            b.push(" than the grantee. ");
            vec![s]
        } else {
            b.push("dedicated to the betterment of the human race and of posterity. ");
            vec![]
        };
        filler(&mut rng, &mut b, 8..20);
        gold.push(GoldAnnotation {
            doc_id: id.clone(),
            doc_flag: positive,
            term_spans: span,
            entity_spans: Vec::new(),
            parcels: None,
        });
        docs.push(Document::new(id, b.finish()));
    }
    (docs, gold)
}

// ---------------------------------------------------------------------------
// PLSS descriptions

/// A planted survey description and its expected mentions.
#[derive(Debug, Clone)]
pub struct PlantedPlss {
    pub township: u32,
    pub township_dir: Option<Direction>,
    pub range: u32,
    pub range_dir: Option<Direction>,
    pub section: Option<u32>,
}

fn numeral_text(rng: &mut ChaCha8Rng, n: u32, allow_words: bool) -> (String, String) {
    // (text up to and including the value's last character, closing suffix)
    let style = if allow_words {
        rng.random_range(0..3)
    } else {
        0
    };
    let words = || {
        let w = render_numeral(n).expect("in range");
        let mut parts: Vec<String> = Vec::new();
        for (i, word) in w.iter().enumerate() {
            parts.push(capitalize(word));
            if word == "hundred" && i + 1 < w.len() && !n.is_multiple_of(100) {
                parts.push("and".to_string());
            }
        }
        parts.join(" ")
    };
    match style {
        0 => (n.to_string(), String::new()),
        1 => (words(), String::new()),
        _ => (format!("{} ({n}", words()), ")".to_string()),
    }
}

fn direction_text(rng: &mut ChaCha8Rng, d: Direction) -> String {
    let word = match d {
        Direction::N => "North",
        Direction::S => "South",
        Direction::E => "East",
        Direction::W => "West",
    };
    match rng.random_range(0..4) {
        0 => word.to_string(),
        1 => word.to_uppercase(),
        2 => format!("{}.", d.letter()),
        _ => d.letter().to_string(),
    }
}

fn keyword_text(rng: &mut ChaCha8Rng, class: EntityClass) -> &'static str {
    let options: &[&str] = match class {
        EntityClass::Township => &[
            "Township",
            "TOWNSHIP",
            "Twp.",
            "Township numbered",
            "Township No.",
        ],
        EntityClass::Range => &["Range", "RANGE", "Rge.", "Range numbered", "Rng."],
        _ => &["Section", "SECTION", "Sec.", "Section numbered"],
    };
    options.choose(rng).expect("options")
}

/// Writes one component ("Township Eight (8) North") and returns its gold
/// mention.
fn plss_component(
    rng: &mut ChaCha8Rng,
    b: &mut TextBuilder,
    class: EntityClass,
    value: u32,
    dir: Option<Direction>,
) -> GoldEntity {
    let (start, _) = b.push(keyword_text(rng, class));
    b.push(" ");
    let (num, close) = numeral_text(rng, value, true);
    let (_, mut end) = b.push(&num);
    b.push(&close);
    if let Some(d) = dir {
        b.push(" ");
        let text = direction_text(rng, d);
        let core = text.trim_end_matches('.');
        end = b.push(core).1;
        b.push(&text[core.len()..]);
    }
    GoldEntity {
        class,
        start,
        end,
        value: match dir {
            Some(d) => format!("{value}{d}"),
            None => value.to_string(),
        },
    }
}

/// Writes a full description in a random order and style.
pub fn plss_description(
    rng: &mut ChaCha8Rng,
    b: &mut TextBuilder,
    p: &PlantedPlss,
) -> Vec<GoldEntity> {
    let compact = p.township_dir.is_some() && p.range_dir.is_some() && rng.random_bool(0.15);
    if compact {
        let (td, rd) = (p.township_dir.expect("dir"), p.range_dir.expect("dir"));
        let mut out = Vec::new();
        if let Some(s) = p.section {
            let (start, _) = b.push("Sec. ");
            let (_, end) = b.push(&s.to_string());
            b.push(", ");
            out.push(GoldEntity {
                class: EntityClass::Section,
                start,
                end,
                value: s.to_string(),
            });
        }
        let t = b.push(&format!("T.{}{td}", p.township));
        b.push("., ");
        let r = b.push(&format!("R.{}{rd}", p.range));
        b.push(".");
        out.push(GoldEntity {
            class: EntityClass::Township,
            start: t.0,
            end: t.1,
            value: format!("{}{td}", p.township),
        });
        out.push(GoldEntity {
            class: EntityClass::Range,
            start: r.0,
            end: r.1,
            value: format!("{}{rd}", p.range),
        });
        return out;
    }
    let separators = [", ", " in ", " of "];
    let mut parts: Vec<(EntityClass, u32, Option<Direction>)> = vec![
        (EntityClass::Township, p.township, p.township_dir),
        (EntityClass::Range, p.range, p.range_dir),
    ];
    if let Some(s) = p.section {
        if rng.random_bool(0.7) {
            parts.insert(0, (EntityClass::Section, s, None));
        } else {
            parts.push((EntityClass::Section, s, None));
        }
    }
    let mut out = Vec::new();
    for (i, (class, value, dir)) in parts.into_iter().enumerate() {
        if i > 0 {
            b.push(separators.choose(rng).expect("separators"));
        }
        out.push(plss_component(rng, b, class, value, dir));
    }
    out
}

/// Documents made only of filler and planted survey descriptions with
/// random numbers, for extraction recall checks.
pub fn plss_phrase_corpus(docs: usize, seed: u64) -> Vec<(Document, Vec<GoldEntity>)> {
    let mut rng = rng(seed);
    (0..docs)
        .map(|i| {
            let mut b = TextBuilder::default();
            let mut gold = Vec::new();
            for _ in 0..rng.random_range(1..=2) {
                filler(&mut rng, &mut b, 3..12);
                let p = PlantedPlss {
                    township: rng.random_range(1..=150),
                    township_dir: rng
                        .random_bool(0.8)
                        .then(|| *[Direction::N, Direction::S].choose(&mut rng).expect("dirs")),
                    range: rng.random_range(1..=40),
                    range_dir: rng
                        .random_bool(0.8)
                        .then(|| *[Direction::E, Direction::W].choose(&mut rng).expect("dirs")),
                    section: rng.random_bool(0.8).then(|| rng.random_range(1..=36)),
                };
                gold.extend(plss_description(&mut rng, &mut b, &p));
                b.push(". ");
            }
            filler(&mut rng, &mut b, 3..12);
            (Document::new(format!("plss-{i:05}"), b.finish()), gold)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Full deeds

const SUBDIVISIONS: &[(&str, GridState)] = &[
    ("Oakwood Addition No. 2", GridState::Minnesota),
    ("Elm Park", GridState::Minnesota),
    ("Highland Park Second Addition", GridState::Wisconsin),
    ("Prospect Hills", GridState::Wisconsin),
    ("Westwood Terrace", GridState::Wisconsin),
];

/// Options for [`deed_corpus`].
#[derive(Debug, Clone)]
pub struct DeedOptions {
    /// Fraction of deeds carrying a covenant.
    pub covenant_rate: f64,
    /// Pad each deed with filler to at least this many characters.
    pub min_chars: usize,
}

impl Default for DeedOptions {
    fn default() -> Self {
        DeedOptions {
            covenant_rate: 0.4,
            min_chars: 0,
        }
    }
}

/// Full deeds on the two-state grid fixture: county/state and subdivision
/// names, a survey description of a real grid section, an optional
/// covenant, and a gold parcel square inside the described section.
pub fn deed_corpus(
    lex: &Lexicon,
    docs: usize,
    seed: u64,
    opts: &DeedOptions,
) -> (Vec<Document>, Vec<GoldAnnotation>) {
    let mut rng = rng(seed);
    let mut out_docs = Vec::with_capacity(docs);
    let mut gold = Vec::with_capacity(docs);
    for i in 0..docs {
        let id = format!("deed-{i:05}");
        let state = *GridState::BOTH.choose(&mut rng).expect("states");
        let range = *GRID_RANGES.choose(&mut rng).expect("ranges");
        let section = rng.random_range(1..=36u32);
        let explicit_dirs = rng.random_bool(0.8);
        let mut b = TextBuilder::default();
        let mut entities = Vec::new();
        let mut terms = Vec::new();

        b.push("THIS INDENTURE, made this day between the party of the first part and the party of the second part. ");
        filler(&mut rng, &mut b, 5..15);
        b.push("The grantor conveys the following described land situated in the County of ");
        let county = b.push(state.county());
        b.push(" and State of ");
        let st = b.push(state.name());
        b.push(", to wit: Lot ");
        b.push(&rng.random_range(1..30).to_string());
        b.push(", Block ");
        b.push(&rng.random_range(1..12).to_string());
        b.push(", ");
        let subs: Vec<&(&str, GridState)> =
            SUBDIVISIONS.iter().filter(|(_, s)| *s == state).collect();
        let (sub_name, _) = **subs.choose(&mut rng).expect("subdivisions");
        let sub = b.push(sub_name);
        b.push(", being a part of ");
        entities.push(GoldEntity {
            class: EntityClass::County,
            start: county.0,
            end: county.1,
            value: state.county().to_string(),
        });
        entities.push(GoldEntity {
            class: EntityClass::State,
            start: st.0,
            end: st.1,
            value: state.name().to_string(),
        });
        entities.push(GoldEntity {
            class: EntityClass::Subdivision,
            start: sub.0,
            end: sub.1,
            value: sub_name.to_string(),
        });

        let planted = PlantedPlss {
            township: GRID_TOWNSHIP,
            township_dir: explicit_dirs.then_some(Direction::N),
            range,
            range_dir: explicit_dirs.then_some(state.range_dir()),
            section: Some(section),
        };
        entities.extend(plss_description(&mut rng, &mut b, &planted));
        b.push(". ");
        filler(&mut rng, &mut b, 5..15);

        if rng.random_bool(opts.covenant_rate) {
            b.push(COVENANT_LEADS.choose(&mut rng).expect("leads"));
            b.push(" ");
            terms.push(plant_term(&mut rng, lex, &mut b, false));
            b.push(". ");
        }
        while b.len() < opts.min_chars {
            filler(&mut rng, &mut b, 12..13);
        }

        // a square an eighth of a section wide, placed well inside it
        let sb = section_bbox(state, range, section);
        let half = SECTION_DEG / 16.0;
        let cx = sb[0] + SECTION_DEG * rng.random_range(0.25..0.75);
        let cy = sb[1] + SECTION_DEG * rng.random_range(0.25..0.75);
        let parcel = MultiPolygon::rect(cx - half, cy - half, cx + half, cy + half);

        gold.push(GoldAnnotation {
            doc_id: id.clone(),
            doc_flag: !terms.is_empty(),
            term_spans: terms,
            entity_spans: entities,
            parcels: Some(parcel),
        });
        out_docs.push(Document::new(id, b.finish()));
    }
    (out_docs, gold)
}

/// Gold records in the line-delimited gold file format.
pub fn gold_records(gold: &[GoldAnnotation]) -> String {
    let records: Vec<Value> = gold
        .iter()
        .map(|g| {
            json!({
                "id": g.doc_id,
                "term_spans": g.term_spans,
                "doc_flag": g.doc_flag,
                "entities": g.entity_spans,
                "parcels": g.parcels.as_ref().map(MultiPolygon::to_geojson),
            })
        })
        .collect();
    crate::jsonl::to_lines(&records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{match_terms, similarity, DetectorConfig};

    #[test]
    fn filler_never_matches_lexicon() {
        let lex = demo_lexicon();
        let cfg = DetectorConfig::default();
        let mut words: Vec<&str> = FILLER_WORDS.to_vec();
        for lead in COVENANT_LEADS {
            words.extend(lead.split_whitespace());
        }
        for w in words {
            let w = crate::corpus::normalize_word(w);
            for e in lex.entries().iter().filter(|e| e.phrase.len() == 1) {
                for p in &e.phrase {
                    let fuzzy_ok = p.chars().count() >= cfg.min_fuzzy_len;
                    assert!(
                        w != *p && !(fuzzy_ok && similarity(&w, p) >= cfg.similarity_threshold),
                        "{w} vs {p}"
                    );
                }
            }
        }
        let doc = Document::new("x", FILLER_WORDS.join(" "));
        assert!(match_terms(&doc, &lex, &cfg).is_empty());
    }

    #[test]
    fn grid_geometry() {
        // section 1 is the north-east corner, 6 the north-west, 7 below 6
        assert_eq!(section_cell(1), (0, 5));
        assert_eq!(section_cell(6), (0, 0));
        assert_eq!(section_cell(7), (1, 0));
        assert_eq!(section_cell(36), (5, 5));
        let t = township_bbox(GridState::Minnesota, 1);
        assert_eq!(t[2], -93.0);
        assert_eq!(section_bbox(GridState::Minnesota, 1, 1)[2], t[2]);
        assert_eq!(section_bbox(GridState::Minnesota, 1, 1)[3], t[3]);
        let w = township_bbox(GridState::Wisconsin, 2);
        assert_eq!(w[0], -89.0 + TOWNSHIP_DEG);
    }

    #[test]
    fn gold_spans_cover_planted_text() {
        let lex = demo_lexicon();
        let (docs, gold) = planted_corpus(&lex, 50, 7, false);
        for (d, g) in docs.iter().zip(&gold) {
            for &(s, e) in &g.term_spans {
                let text = d.slice(s, e).to_lowercase();
                assert!(lex.entries().iter().any(|x| x.entry_id == text), "{text}");
            }
        }
    }

    #[test]
    fn one_edit_changes_exactly_one_character() {
        let mut r = rng(3);
        for _ in 0..200 {
            let e = one_edit(&mut r, "domestic servants");
            assert_eq!(
                crate::detector::levenshtein(&e, "domestic servants"),
                1,
                "{e}"
            );
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let lex = demo_lexicon();
        let a = deed_corpus(&lex, 20, 11, &DeedOptions::default());
        let b = deed_corpus(&lex, 20, 11, &DeedOptions::default());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
