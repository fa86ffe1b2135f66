//! Detection, entity and georeferencing metrics, and the report tables.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::Serialize;

use crate::corpus::{GoldAnnotation, GoldEntity, Span};
use crate::detector::ExternalPrediction;
use crate::error::{Error, Result};
use crate::geometry::{overlap, MultiPolygon};
use crate::geoner::EntityClass;
use crate::plss::{GeorefOutcome, ResolutionTag, UnresolvedReason};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Only meaningful for document-level counts.
    pub tn: u64,
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;
    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: ConfusionCounts) {
        *self = *self + o;
    }
}

impl Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = ConfusionCounts>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), Add::add)
    }
}

/// Precision, recall and F1 as fractions. A zero denominator yields 0 and
/// sets `degenerate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl ConfusionCounts {
    pub fn metrics(&self) -> Metrics {
        let (precision, dp) = ratio(self.tp, self.tp + self.fp);
        let (recall, dr) = ratio(self.tp, self.tp + self.fn_);
        let (f1, df) = if precision + recall == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / (precision + recall), false)
        };
        Metrics {
            precision,
            recall,
            f1,
            degenerate: dp || dr || df,
        }
    }
}

fn overlap_len(a: Span, b: Span) -> usize {
    a.1.min(b.1).saturating_sub(a.0.max(b.0))
}

/// A prediction credits a gold span when it covers at least half of it.
fn credits(pred: Span, gold: Span) -> bool {
    2 * overlap_len(pred, gold) >= gold.1 - gold.0 && overlap_len(pred, gold) > 0
}

/// Maximum bipartite matching (Kuhn's augmenting paths). `adj[p]` lists
/// the gold indices prediction `p` may be paired with. Returns the number
/// of pairs.
fn max_matching(adj: &[Vec<usize>], golds: usize) -> usize {
    fn augment(
        p: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &g in &adj[p] {
            if seen[g] {
                continue;
            }
            seen[g] = true;
            if owner[g].is_none_or(|q| augment(q, adj, seen, owner)) {
                owner[g] = Some(p);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; golds];
    let mut pairs = 0;
    for p in 0..adj.len() {
        let mut seen = vec![false; golds];
        if augment(p, adj, &mut seen, &mut owner) {
            pairs += 1;
        }
    }
    pairs
}

fn check_spans(doc_id: &str, doc_len: usize, spans: &[Span]) -> Result<()> {
    for &(s, e) in spans {
        if s >= e || e > doc_len {
            return Err(Error::SpanOutOfBounds {
                doc_id: doc_id.to_string(),
                start: s,
                end: e,
                len: doc_len,
            });
        }
    }
    Ok(())
}

/// Token-level counts for one document. Each gold span is credited at most
/// once; the pairing maximizes true positives.
pub fn eval_tokens(
    doc_id: &str,
    doc_len: usize,
    gold: &[Span],
    pred: &[Span],
) -> Result<ConfusionCounts> {
    check_spans(doc_id, doc_len, gold)?;
    check_spans(doc_id, doc_len, pred)?;
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|&p| (0..gold.len()).filter(|&g| credits(p, gold[g])).collect())
        .collect();
    let tp = max_matching(&adj, gold.len()) as u64;
    Ok(ConfusionCounts {
        tp,
        fp: pred.len() as u64 - tp,
        fn_: gold.len() as u64 - tp,
        tn: 0,
    })
}

pub fn doc_confusion(gold: bool, pred: bool) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    match (gold, pred) {
        (true, true) => c.tp = 1,
        (false, true) => c.fp = 1,
        (true, false) => c.fn_ = 1,
        (false, false) => c.tn = 1,
    }
    c
}

fn normalize_value(v: &str) -> String {
    v.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Per-class counts for one document. A match needs the same class, equal
/// normalized value and at least half of the gold span covered.
pub fn eval_entities(
    doc_id: &str,
    doc_len: usize,
    gold: &[GoldEntity],
    pred: &[GoldEntity],
) -> Result<BTreeMap<EntityClass, ConfusionCounts>> {
    let spans = |es: &[GoldEntity]| es.iter().map(|e| (e.start, e.end)).collect::<Vec<_>>();
    check_spans(doc_id, doc_len, &spans(gold))?;
    check_spans(doc_id, doc_len, &spans(pred))?;
    let mut out = BTreeMap::new();
    for class in EntityClass::ALL {
        let g: Vec<&GoldEntity> = gold.iter().filter(|e| e.class == class).collect();
        let p: Vec<&GoldEntity> = pred.iter().filter(|e| e.class == class).collect();
        if g.is_empty() && p.is_empty() {
            continue;
        }
        let adj: Vec<Vec<usize>> = p
            .iter()
            .map(|pe| {
                (0..g.len())
                    .filter(|&i| {
                        credits((pe.start, pe.end), (g[i].start, g[i].end))
                            && normalize_value(&pe.value) == normalize_value(&g[i].value)
                    })
                    .collect()
            })
            .collect();
        let tp = max_matching(&adj, g.len()) as u64;
        out.insert(
            class,
            ConfusionCounts {
                tp,
                fp: p.len() as u64 - tp,
                fn_: g.len() as u64 - tp,
                tn: 0,
            },
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountsReport {
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    #[serde(flatten)]
    pub metrics: Metrics,
}

impl From<ConfusionCounts> for CountsReport {
    fn from(counts: ConfusionCounts) -> Self {
        CountsReport {
            metrics: counts.metrics(),
            counts,
        }
    }
}

/// Detection and entity results for one prediction source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemReport {
    pub name: String,
    pub token: CountsReport,
    pub document: CountsReport,
    pub entities: Option<BTreeMap<EntityClass, CountsReport>>,
    /// Predicted ids absent from the gold set.
    pub orphans: Vec<String>,
    /// Gold ids without a prediction; scored as negative predictions.
    pub missing: Vec<String>,
}

/// Scores one prediction source against the gold set. `doc_lens` gives
/// the character length of each document for bounds checks; documents not
/// in it are checked only for well-formed spans.
pub fn eval_system(
    name: &str,
    gold: &[GoldAnnotation],
    preds: &[ExternalPrediction],
    doc_lens: &HashMap<String, usize>,
) -> Result<SystemReport> {
    let by_id: HashMap<&str, &ExternalPrediction> =
        preds.iter().map(|p| (p.doc_id.as_str(), p)).collect();
    let gold_ids: std::collections::HashSet<&str> =
        gold.iter().map(|g| g.doc_id.as_str()).collect();
    let mut token = ConfusionCounts::default();
    let mut document = ConfusionCounts::default();
    let mut entities: BTreeMap<EntityClass, ConfusionCounts> = BTreeMap::new();
    let mut any_entities = false;
    let mut missing = Vec::new();
    for g in gold {
        let len = doc_lens.get(&g.doc_id).copied().unwrap_or(usize::MAX);
        let p = by_id.get(g.doc_id.as_str());
        if p.is_none() {
            missing.push(g.doc_id.clone());
        }
        let pred_spans = p.map(|p| p.term_spans.as_slice()).unwrap_or(&[]);
        token += eval_tokens(&g.doc_id, len, &g.term_spans, pred_spans)?;
        document += doc_confusion(g.doc_flag, p.is_some_and(|p| p.doc_flag));
        if let Some(pe) = p.and_then(|p| p.entities.as_ref()) {
            any_entities = true;
            for (class, c) in eval_entities(&g.doc_id, len, &g.entity_spans, pe)? {
                *entities.entry(class).or_default() += c;
            }
        } else if !g.entity_spans.is_empty() {
            for (class, c) in eval_entities(&g.doc_id, len, &g.entity_spans, &[])? {
                *entities.entry(class).or_default() += c;
            }
        }
    }
    let mut orphans: Vec<String> = preds
        .iter()
        .filter(|p| !gold_ids.contains(p.doc_id.as_str()))
        .map(|p| p.doc_id.clone())
        .collect();
    orphans.sort();
    Ok(SystemReport {
        name: name.to_string(),
        token: token.into(),
        document: document.into(),
        entities: any_entities.then(|| entities.into_iter().map(|(c, n)| (c, n.into())).collect()),
        orphans,
        missing,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ResolutionScore {
    pub hits: u64,
    pub attempts: u64,
    pub accuracy: f64,
    /// Attempts over scored deeds.
    pub coverage: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GeorefReport {
    /// Deeds with a usable gold parcel and at least one PLSS candidate.
    pub deeds: u64,
    /// Deeds with a gold parcel but no PLSS candidate; not scored.
    pub no_candidates: u64,
    pub section: ResolutionScore,
    pub township: ResolutionScore,
    pub unresolved: u64,
    pub diagnostics: Vec<String>,
}

fn tally(
    score: &mut ResolutionScore,
    parcel: &MultiPolygon,
    boundary: &MultiPolygon,
    id: &str,
    diags: &mut Vec<String>,
) {
    match overlap(parcel, boundary) {
        Ok(o) => {
            score.attempts += 1;
            score.hits += o.is_hit() as u64;
        }
        Err(e) => diags.push(format!("{id}: {e}")),
    }
}

/// Georeferencing accuracy. A deed is a hit at a resolution when its gold
/// parcel lies within or partially overlaps the resolved boundary of that
/// resolution; deeds without such a boundary are left out of that
/// resolution's denominator. Deeds without any PLSS candidate are not
/// scored.
pub fn eval_georef<'a>(
    deeds: impl IntoIterator<Item = (&'a str, Option<&'a MultiPolygon>, Option<&'a GeorefOutcome>)>,
) -> GeorefReport {
    let mut r = GeorefReport::default();
    for (id, parcel, outcome) in deeds {
        let Some(parcel) = parcel else { continue };
        if parcel.area() <= 0.0 {
            r.diagnostics
                .push(format!("{id}: degenerate gold parcel skipped"));
            continue;
        }
        let res = match outcome {
            None | Some(GeorefOutcome::Unresolved(UnresolvedReason::NoCandidates)) => {
                r.no_candidates += 1;
                continue;
            }
            Some(GeorefOutcome::Unresolved(_)) => {
                r.deeds += 1;
                r.unresolved += 1;
                continue;
            }
            Some(GeorefOutcome::Resolved(res)) => res,
        };
        r.deeds += 1;
        if res.resolution == ResolutionTag::Section {
            tally(
                &mut r.section,
                parcel,
                &res.boundary.geometry,
                id,
                &mut r.diagnostics,
            );
        }
        if let Some(t) = &res.township {
            tally(&mut r.township, parcel, &t.geometry, id, &mut r.diagnostics);
        }
    }
    for s in [&mut r.section, &mut r.township] {
        s.accuracy = ratio(s.hits, s.attempts).0;
        s.coverage = ratio(s.attempts, r.deeds).0;
    }
    r
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub systems: Vec<SystemReport>,
    pub georef: Option<GeorefReport>,
    /// Fraction of deeds with an accepted subdivision match.
    pub subdivision_coverage: Option<f64>,
}

pub fn subdivision_coverage(matched: usize, deeds: usize) -> f64 {
    ratio(matched as u64, deeds as u64).0
}

pub fn percent(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

fn pct_cell(x: f64, degenerate: bool) -> String {
    if degenerate && x == 0.0 {
        format!("{}*", percent(x))
    } else {
        percent(x)
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 1 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

/// Plain-text tables. Cells marked `*` had a zero denominator.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    if !report.systems.is_empty() {
        out.push_str("Table 1. Covenant detection\n");
        let mut rows = vec![
            vec![
                "".to_string(),
                "Per Token".to_string(),
                "".to_string(),
                "Per Document".to_string(),
                "".to_string(),
            ],
            vec![
                "Method".to_string(),
                "Recall".to_string(),
                "Precision".to_string(),
                "Recall".to_string(),
                "Precision".to_string(),
            ],
        ];
        for s in &report.systems {
            rows.push(vec![
                s.name.clone(),
                pct_cell(s.token.metrics.recall, s.token.metrics.degenerate),
                pct_cell(s.token.metrics.precision, s.token.metrics.degenerate),
                pct_cell(s.document.metrics.recall, s.document.metrics.degenerate),
                pct_cell(s.document.metrics.precision, s.document.metrics.degenerate),
            ]);
        }
        out.push_str(&table(&rows));
        for s in &report.systems {
            let _ = writeln!(
                out,
                "{}: token tp={} fp={} fn={}; document tp={} fp={} fn={} tn={}",
                s.name,
                s.token.counts.tp,
                s.token.counts.fp,
                s.token.counts.fn_,
                s.document.counts.tp,
                s.document.counts.fp,
                s.document.counts.fn_,
                s.document.counts.tn,
            );
            if !s.orphans.is_empty() || !s.missing.is_empty() {
                let _ = writeln!(
                    out,
                    "{}: {} orphan prediction(s), {} gold document(s) without prediction",
                    s.name,
                    s.orphans.len(),
                    s.missing.len()
                );
            }
        }
        out.push_str(
            "Recall is measured for every method, including fuzzy baselines often assumed to reach 100%.\n",
        );
    }
    for s in &report.systems {
        let Some(ents) = &s.entities else { continue };
        let _ = writeln!(out, "\nTable 2. Entity recognition ({})", s.name);
        let mut rows = vec![
            vec!["".to_string(); 5],
            ["Entity", "Precision", "Recall", "F1", "Support"]
                .map(String::from)
                .to_vec(),
        ];
        for (class, c) in ents {
            let d = c.metrics.degenerate;
            rows.push(vec![
                class.to_string(),
                pct_cell(c.metrics.precision, d),
                pct_cell(c.metrics.recall, d),
                pct_cell(c.metrics.f1, d),
                (c.counts.tp + c.counts.fn_).to_string(),
            ]);
        }
        let mut t = table(&rows);
        // the first row is a spacer for the two-row header layout
        t = t
            .split_once('\n')
            .map(|(_, rest)| rest.to_string())
            .unwrap_or(t);
        out.push_str(&t);
    }
    if let Some(g) = &report.georef {
        out.push_str("\nTable 3. Georeferencing accuracy\n");
        let mut rows = vec![
            vec!["".to_string(); 4],
            ["Resolution", "Accuracy", "Deeds", "Coverage"]
                .map(String::from)
                .to_vec(),
        ];
        for (tag, s) in [
            (ResolutionTag::Section, &g.section),
            (ResolutionTag::Township, &g.township),
        ] {
            rows.push(vec![
                tag.label().to_string(),
                pct_cell(s.accuracy, s.attempts == 0),
                format!("{}/{}", s.hits, s.attempts),
                percent(s.coverage),
            ]);
        }
        let t = table(&rows);
        out.push_str(t.split_once('\n').map_or(t.as_str(), |(_, r)| r));
        let _ = writeln!(
            out,
            "scored deeds: {}, unresolved: {}, without PLSS candidates: {}",
            g.deeds, g.unresolved, g.no_candidates
        );
        for d in &g.diagnostics {
            let _ = writeln!(out, "note: {d}");
        }
    }
    if let Some(c) = report.subdivision_coverage {
        let _ = writeln!(out, "\nSubdivision coverage: {}", percent(c));
    }
    out
}

pub fn render_json(report: &EvalReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_examples() {
        let c = eval_tokens("d", 20, &[(4, 13)], &[(4, 13)]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (1, 0, 0));
        let c = eval_tokens("d", 20, &[(4, 13)], &[]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (0, 0, 1));
        let c = eval_tokens("d", 20, &[(0, 10)], &[(0, 4)]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (0, 1, 1));
        let c = eval_tokens("d", 20, &[(0, 10)], &[(0, 5)]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (1, 0, 0));
    }

    #[test]
    fn gold_credited_once() {
        let c = eval_tokens("d", 30, &[(0, 10)], &[(0, 10), (0, 9)]).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (1, 1, 0));
    }

    #[test]
    fn matching_is_maximal() {
        // greedy pairing of the first prediction with the first gold span
        // would strand the second gold span
        let gold = [(0, 4), (4, 8)];
        let pred = [(1, 7), (5, 9)];
        let c = eval_tokens("d", 10, &gold, &pred).unwrap();
        assert_eq!(c.tp, 2);
    }

    #[test]
    fn out_of_bounds_names_doc() {
        let e = eval_tokens("doc-7", 5, &[], &[(3, 9)]).unwrap_err();
        assert!(e.to_string().contains("doc-7"), "{e}");
    }

    #[test]
    fn metric_examples() {
        let m = ConfusionCounts {
            tp: 91,
            fp: 9,
            fn_: 9,
            tn: 0,
        }
        .metrics();
        assert_eq!(percent(m.precision), "91.00%");
        assert_eq!(percent(m.recall), "91.00%");
        assert!(!m.degenerate);
        let m = ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 3,
            tn: 0,
        }
        .metrics();
        assert_eq!(percent(m.precision), "0.00%");
        assert!(m.degenerate);
    }

    fn ent(class: EntityClass, s: usize, e: usize, v: &str) -> GoldEntity {
        GoldEntity {
            class,
            start: s,
            end: e,
            value: v.into(),
        }
    }

    #[test]
    fn entity_rules() {
        let g = [ent(EntityClass::County, 0, 6, "Dakota")];
        let r = eval_entities("d", 10, &g, &g).unwrap();
        assert_eq!(r[&EntityClass::County].tp, 1);
        let p = [ent(EntityClass::City, 0, 6, "Dakota")];
        let r = eval_entities("d", 10, &g, &p).unwrap();
        assert_eq!(r[&EntityClass::County].fn_, 1);
        assert_eq!(r[&EntityClass::City].fp, 1);
        let g = [ent(EntityClass::Township, 0, 6, "8")];
        let p = [ent(EntityClass::Township, 0, 6, "9")];
        let r = eval_entities("d", 10, &g, &p).unwrap();
        assert_eq!(
            (r[&EntityClass::Township].fp, r[&EntityClass::Township].fn_),
            (1, 1)
        );
    }

    #[test]
    fn unknown_class_rejected() {
        let e = serde_json::from_str::<GoldEntity>(
            r#"{"class":"Parish","start":0,"end":1,"value":"x"}"#,
        );
        assert!(e.is_err());
    }
}
