//! Subdivision-name normalization and fuzzy matching against a gazetteer
//! of platted subdivisions.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::detector::similarity;
use crate::error::{Error, Result};
use crate::geoner::{EntityMention, Gazetteer, SubdivisionRecord};
use crate::jsonl;

pub const DEFAULT_THRESHOLD: f64 = 0.85;

const DEFAULT_TABLE: &str = include_str!("../data/abbreviations.tsv");

/// Variant → canonical replacements applied word by word.
#[derive(Debug, Clone)]
pub struct Abbreviations {
    table: HashMap<String, Vec<String>>,
}

impl Default for Abbreviations {
    fn default() -> Self {
        Abbreviations::parse(DEFAULT_TABLE, "builtin abbreviations").expect("builtin table parses")
    }
}

impl Abbreviations {
    pub fn load(path: &Path) -> Result<Self> {
        let text = jsonl::read_to_string(path)?;
        Abbreviations::parse(&text, &path.display().to_string())
    }

    /// Two tab-separated columns per line, `variant<TAB>canonical`; `#`
    /// starts a comment line.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut table: HashMap<String, Vec<String>> = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(variant), Some(canonical), None) = (cols.next(), cols.next(), cols.next())
            else {
                return Err(Error::malformed(
                    source_name,
                    line_no,
                    "expected two tab-separated columns",
                ));
            };
            let variant = variant.trim().to_lowercase();
            let canonical: Vec<String> = canonical
                .split_whitespace()
                .map(|w| strip_word(&w.to_lowercase()))
                .filter(|w| !w.is_empty())
                .collect();
            if variant.is_empty() || canonical.is_empty() {
                return Err(Error::malformed(source_name, line_no, "empty column"));
            }
            if table.insert(variant.clone(), canonical).is_some() {
                return Err(Error::Duplicate {
                    what: "abbreviation",
                    key: variant,
                });
            }
        }
        // A canonical word that is itself a variant would make normalization
        // non-idempotent.
        for (variant, canonical) in &table {
            for w in canonical {
                if let Some(other) = table.get(w) {
                    if other.len() != 1 || &other[0] != w {
                        return Err(Error::Invalid(format!(
                            "{source_name}: canonical form '{w}' of '{variant}' is itself an abbreviation"
                        )));
                    }
                }
            }
        }
        Ok(Abbreviations { table })
    }

    fn expand(&self, word: &str) -> Option<&[String]> {
        if let Some(c) = self.table.get(word) {
            return Some(c);
        }
        let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
        if let Some(c) = self.table.get(trimmed) {
            return Some(c);
        }
        self.table.get(&strip_word(word)).map(Vec::as_slice)
    }
}

fn strip_word(w: &str) -> String {
    w.chars().filter(|c| c.is_alphanumeric()).collect()
}

/// Lowercases, expands abbreviations, and collapses punctuation and
/// whitespace into single spaces.
pub fn normalize_subdivision_with(name: &str, abbrev: &Abbreviations) -> String {
    let mut out: Vec<String> = Vec::new();
    for raw in name.split_whitespace() {
        let lower = raw.to_lowercase();
        if let Some(canonical) = abbrev.expand(&lower) {
            out.extend(canonical.iter().cloned());
            continue;
        }
        // apostrophes join ("o'brien" → "obrien"), other punctuation splits
        let joined: String = lower.chars().filter(|c| *c != '\'' && *c != '’').collect();
        for part in joined.split(|c: char| !c.is_alphanumeric()) {
            if part.is_empty() {
                continue;
            }
            match abbrev.expand(part) {
                Some(canonical) => out.extend(canonical.iter().cloned()),
                None => out.push(part.to_string()),
            }
        }
    }
    out.join(" ")
}

pub fn normalize_subdivision(name: &str) -> String {
    normalize_subdivision_with(name, &Abbreviations::default())
}

/// Jaccard overlap of the word sets of two canonical names.
pub fn token_set_similarity(a: &str, b: &str) -> f64 {
    let sa: std::collections::BTreeSet<&str> = a.split(' ').filter(|w| !w.is_empty()).collect();
    let sb: std::collections::BTreeSet<&str> = b.split(' ').filter(|w| !w.is_empty()).collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

/// Equal-weight blend of word-set overlap and normalized edit similarity
/// over two canonical names.
pub fn blended_similarity(a: &str, b: &str) -> f64 {
    0.5 * token_set_similarity(a, b) + 0.5 * similarity(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdivisionMatch {
    pub mention: EntityMention,
    pub candidate: SubdivisionRecord,
    pub similarity: f64,
    pub accepted: bool,
}

/// Best gazetteer subdivision for a canonical name. Ties go to the shorter
/// candidate name, then the lexicographically smaller one.
pub fn best_subdivision<'g>(
    canonical: &str,
    subdivisions: &'g [SubdivisionRecord],
) -> Option<(&'g SubdivisionRecord, f64)> {
    let mut best: Option<(&SubdivisionRecord, f64)> = None;
    for cand in subdivisions {
        let score = blended_similarity(canonical, &cand.canonical);
        let better = match best {
            None => true,
            Some((b, s)) => {
                score > s
                    || (score == s
                        && (cand.canonical.chars().count(), &cand.canonical)
                            < (b.canonical.chars().count(), &b.canonical))
            }
        };
        if better {
            best = Some((cand, score));
        }
    }
    best
}

/// Matches an extracted (or externally predicted) subdivision mention to
/// the gazetteer.
pub fn match_subdivision(
    mention: &EntityMention,
    gaz: &Gazetteer,
    threshold: f64,
) -> Option<SubdivisionMatch> {
    let canonical = normalize_subdivision_with(&mention.surface, gaz.abbreviations());
    let (cand, score) = best_subdivision(&canonical, gaz.subdivisions())?;
    Some(SubdivisionMatch {
        mention: mention.clone(),
        candidate: cand.clone(),
        similarity: score,
        accepted: score >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geoner::{EntityClass, EntityValue, GazetteerRecord};

    #[test]
    fn normalization_examples() {
        assert_eq!(
            normalize_subdivision("Oakwood Add'n No. 2"),
            "oakwood addition number 2"
        );
        assert_eq!(
            normalize_subdivision("OAKWOOD ADDITION NUMBER 2"),
            "oakwood addition number 2"
        );
        assert_eq!(normalize_subdivision(""), "");
        assert_eq!(
            normalize_subdivision("  Lake-View   1st  Addn."),
            "lake view first addition"
        );
    }

    #[test]
    fn normalization_is_idempotent_on_examples() {
        for s in [
            "Oakwood Add'n No. 2",
            "St. Paul's Rearr.",
            "Hts of Glen--Lake",
        ] {
            let once = normalize_subdivision(s);
            assert_eq!(normalize_subdivision(&once), once);
        }
    }

    #[test]
    fn chained_abbreviations_rejected() {
        let err = Abbreviations::parse("a\tb\nb\tc\n", "t").unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
        assert!(Abbreviations::parse("only-one-column\n", "t").is_err());
    }

    fn gaz(names: &[&str]) -> Gazetteer {
        let records = names
            .iter()
            .map(|n| GazetteerRecord {
                class: EntityClass::Subdivision,
                name: n.to_string(),
                parent: None,
                aliases: vec![],
                id: None,
            })
            .collect();
        Gazetteer::from_records(records, Abbreviations::default()).unwrap()
    }

    fn mention(surface: &str) -> EntityMention {
        EntityMention {
            class: EntityClass::Subdivision,
            span: (0, surface.chars().count()),
            surface: surface.to_string(),
            value: EntityValue::Name(surface.to_string()),
            token_start: 0,
        }
    }

    #[test]
    fn exact_canonical_match_scores_one() {
        let g = gaz(&["Oakwood Addition No. 2", "Elm Park"]);
        let m =
            match_subdivision(&mention("OAKWOOD ADD'N NUMBER 2"), &g, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(m.similarity, 1.0);
        assert!(m.accepted);
        assert_eq!(m.candidate.name, "Oakwood Addition No. 2");
    }

    #[test]
    fn truncated_name_fixture() {
        // Word sets {oakwood, addition} vs {oakwood, addition, number, 2}:
        // Jaccard 2/4. The joined strings have lengths 16 and 25 and differ
        // by the 9-character suffix " number 2", so edit similarity 16/25.
        let g = gaz(&["Oakwood Addition No. 2"]);
        let m = match_subdivision(&mention("Oakwood Addition"), &g, DEFAULT_THRESHOLD).unwrap();
        let expected = 0.5 * 0.5 + 0.5 * (16.0 / 25.0);
        assert!((m.similarity - expected).abs() < 1e-12);
        assert!((m.similarity - 0.57).abs() < 1e-12);
        assert!(!m.accepted);
    }

    #[test]
    fn empty_gazetteer_yields_none() {
        let g = gaz(&[]);
        assert!(match_subdivision(&mention("Elm Park"), &g, DEFAULT_THRESHOLD).is_none());
    }

    #[test]
    fn ties_prefer_shorter_then_lexicographic() {
        let subs = gaz(&["bb cc", "aa", "ab"]);
        // "a" vs "aa" and "ab": both Jaccard 0, edit 1/2
        let (best, _) = best_subdivision("a", subs.subdivisions()).unwrap();
        assert_eq!(best.canonical, "aa");
    }
}
