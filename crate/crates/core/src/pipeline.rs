//! Per-document processing: covenant detection, geoentity extraction and
//! georeferencing, fanned out over an [`Executor`].

use serde::Serialize;
use serde_json::{json, Value};

use crate::corpus::{Document, GoldEntity};
use crate::detector::{
    detect, ContextRule, DetectionRecord, DetectorConfig, ExternalPrediction, Lexicon,
};
use crate::exec::Executor;
use crate::geoner::{
    extract_plss, extract_rpss, select_plss_key, Diagnostic, EntityClass, EntityMention, Gazetteer,
    GeonerConfig, PlssCandidate,
};
use crate::plss::{georef_record, georeference, GeorefOutcome, PlssIndex};

/// Everything a run needs besides the documents.
#[derive(Debug, Clone)]
pub struct Pipeline {
    /// Detection is skipped when no lexicon is configured.
    pub lexicon: Option<Lexicon>,
    pub rules: Vec<ContextRule>,
    pub detector: DetectorConfig,
    pub gazetteer: Gazetteer,
    pub geoner: GeonerConfig,
    pub plss: Option<PlssIndex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocResult {
    pub detection: DetectionRecord,
    pub entities: Vec<EntityMention>,
    pub diagnostics: Vec<Diagnostic>,
    pub candidates: Vec<PlssCandidate>,
    pub state_hint: Option<String>,
    /// `None` when no PLSS index was supplied.
    pub georef: Option<GeorefOutcome>,
}

#[derive(Serialize)]
struct EntityOut<'a> {
    class: EntityClass,
    start: usize,
    end: usize,
    surface: &'a str,
    value: String,
}

impl DocResult {
    pub fn id(&self) -> &str {
        &self.detection.id
    }

    /// Mentions in the gold/prediction entity format.
    pub fn entity_spans(&self) -> Vec<GoldEntity> {
        self.entities
            .iter()
            .map(|m| GoldEntity {
                class: m.class,
                start: m.span.0,
                end: m.span.1,
                value: m.value.to_string(),
            })
            .collect()
    }

    /// The run's output in the same shape as externally supplied predictions.
    pub fn as_prediction(&self) -> ExternalPrediction {
        ExternalPrediction {
            doc_id: self.id().to_string(),
            term_spans: self.detection.accepted_spans(),
            doc_flag: self.detection.doc_flag,
            entities: Some(self.entity_spans()),
        }
    }

    pub fn entity_record(&self) -> Value {
        let entities: Vec<EntityOut> = self
            .entities
            .iter()
            .map(|m| EntityOut {
                class: m.class,
                start: m.span.0,
                end: m.span.1,
                surface: &m.surface,
                value: m.value.to_string(),
            })
            .collect();
        json!({
            "id": self.id(),
            "entities": entities,
            "candidates": self.candidates,
            "state_hint": self.state_hint,
            "diagnostics": self.diagnostics,
        })
    }

    pub fn georef_record(&self) -> Option<Value> {
        self.georef.as_ref().map(|g| georef_record(self.id(), g))
    }

    pub fn has_subdivision(&self) -> bool {
        self.entities
            .iter()
            .any(|m| m.class == EntityClass::Subdivision)
    }
}

/// State named in the deed, or the state of the first county or city
/// mention.
pub fn state_hint(mentions: &[EntityMention], gaz: &Gazetteer) -> Option<String> {
    if let Some(m) = mentions.iter().find(|m| m.class == EntityClass::State) {
        return Some(m.value.to_string());
    }
    mentions
        .iter()
        .filter(|m| matches!(m.class, EntityClass::County | EntityClass::City))
        .find_map(|m| gaz.state_of(m.class, &m.value.to_string()))
}

impl Pipeline {
    pub fn detect(&self, doc: &Document) -> DetectionRecord {
        match &self.lexicon {
            Some(lex) => detect(doc, lex, &self.rules, &self.detector),
            None => DetectionRecord {
                id: doc.id().to_string(),
                matches: Vec::new(),
                doc_flag: false,
            },
        }
    }

    pub fn process(&self, doc: &Document) -> DocResult {
        let detection = self.detect(doc);
        let plss = extract_plss(doc, &self.geoner);
        let rpss = extract_rpss(doc, &self.gazetteer, &self.geoner);
        let candidates = select_plss_key(&plss.mentions, self.geoner.proximity_window);
        let hint = state_hint(&rpss, &self.gazetteer);
        let georef = self
            .plss
            .as_ref()
            .map(|idx| georeference(&candidates, hint.as_deref(), idx));
        let mut entities = plss.mentions;
        entities.extend(rpss);
        entities.sort_by_key(|m| (m.span.0, m.class, m.span.1));
        DocResult {
            detection,
            entities,
            diagnostics: plss.diagnostics,
            candidates,
            state_hint: hint,
            georef,
        }
    }

    pub fn run(&self, docs: &[Document], exec: &Executor) -> Vec<DocResult> {
        exec.map(docs, |d| self.process(d))
    }

    pub fn run_detect(&self, docs: &[Document], exec: &Executor) -> Vec<DetectionRecord> {
        exec.map(docs, |d| self.detect(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plss::ResolutionTag;
    use crate::synth;

    fn pipeline() -> Pipeline {
        Pipeline {
            lexicon: Some(synth::demo_lexicon()),
            rules: synth::demo_rules(),
            detector: DetectorConfig::default(),
            gazetteer: synth::demo_gazetteer(),
            geoner: GeonerConfig::default(),
            plss: Some(synth::grid_index()),
        }
    }

    #[test]
    fn state_hint_from_county() {
        let p = pipeline();
        let doc = Document::new(
            "d",
            "situated in the County of Milwaukee, Section 4, Township 1, Range 2.",
        );
        let r = p.process(&doc);
        assert_eq!(r.state_hint.as_deref(), Some("Wisconsin"));
        let g = r.georef.unwrap();
        let res = g.resolved().unwrap();
        assert_eq!(res.key.state, "Wisconsin");
        assert_eq!(res.resolution, ResolutionTag::Section);
    }

    #[test]
    fn no_plss_text_is_unresolved() {
        let p = pipeline();
        let r = p.process(&Document::new("d", "nothing to see here"));
        assert!(r.georef.unwrap().resolved().is_none());
        assert!(r.candidates.is_empty());
    }

    #[test]
    fn parallel_matches_sequential() {
        let p = pipeline();
        let (docs, _) = synth::deed_corpus(&synth::demo_lexicon(), 40, 5, &Default::default());
        let a = p.run(&docs, &Executor::sequential());
        let b = p.run(&docs, &Executor::new(4));
        assert_eq!(a, b);
    }
}
