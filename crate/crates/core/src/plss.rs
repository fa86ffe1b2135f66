//! PLSS grid index: resolves (Township, Range[, Section]) keys to township
//! (6×6 mile) or section (1×1 mile) boundaries loaded from GeoJSON, and
//! georeferences documents from their ranked PLSS candidates.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{BBox, MultiPolygon};
use crate::geoner::{Direction, PlssCandidate};
use crate::jsonl;

pub use crate::geometry::{overlap, Overlap};

/// Default slack when checking that a section lies inside its township.
pub const DEFAULT_NESTING_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PlssKey {
    pub state: String,
    pub township: u32,
    pub township_dir: Direction,
    pub range: u32,
    pub range_dir: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub section: Option<u8>,
}

impl PlssKey {
    pub fn township_key(&self) -> PlssKey {
        PlssKey {
            section: None,
            ..self.clone()
        }
    }
}

impl fmt::Display for PlssKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} T{}{} R{}{}",
            self.state, self.township, self.township_dir, self.range, self.range_dir
        )?;
        if let Some(s) = self.section {
            write!(f, " S{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolutionTag {
    Township,
    Section,
    Subdivision,
}

impl ResolutionTag {
    /// Label in square miles, as used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ResolutionTag::Township => "6×6 sq-mi",
            ResolutionTag::Section => "1×1 sq-mi",
            ResolutionTag::Subdivision => "subdivision",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoBoundary {
    pub geometry: MultiPolygon,
    pub bbox: BBox,
    pub resolution: ResolutionTag,
}

impl GeoBoundary {
    pub fn new(geometry: MultiPolygon, resolution: ResolutionTag) -> Self {
        GeoBoundary {
            bbox: geometry.bbox(),
            geometry,
            resolution,
        }
    }
}

/// Attribute names carrying the PLSS fields in one state's dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldBindings {
    pub state: String,
    pub township: String,
    #[serde(default)]
    pub township_dir: Option<String>,
    pub range: String,
    #[serde(default)]
    pub range_dir: Option<String>,
    /// Absent, or null/0 on a feature, marks a township-level feature.
    #[serde(default)]
    pub section: Option<String>,
    /// Extra raw-value → direction vocabulary (e.g. `"2": "E"`). Direction
    /// words and letters are always understood.
    #[serde(default)]
    pub directions: BTreeMap<String, Direction>,
    pub default_township_dir: Direction,
    pub default_range_dir: Direction,
}

impl FieldBindings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = jsonl::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::malformed(path.display().to_string(), e.line(), e.to_string()))
    }

    fn direction(&self, raw: &Value) -> Option<Direction> {
        let s = match raw {
            Value::String(s) => s.trim().to_string(),
            Value::Number(n) => n.to_string(),
            _ => return None,
        };
        self.directions
            .get(&s)
            .copied()
            .or_else(|| Direction::parse(&s))
    }
}

/// Per-state direction defaults for keys written without directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateConfig {
    pub name: String,
    pub default_township_dir: Direction,
    pub default_range_dir: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoadStats {
    pub features: usize,
    pub skipped: usize,
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct PlssIndex {
    townships: BTreeMap<PlssKey, GeoBoundary>,
    sections: BTreeMap<PlssKey, GeoBoundary>,
    states: Vec<StateConfig>,
    pub stats: LoadStats,
}

fn as_number(v: &Value) -> Option<u32> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|x| u32::try_from(x).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Loads one dataset into a fresh index.
pub fn load_plss(path: &Path, bindings: &FieldBindings) -> Result<PlssIndex> {
    let mut idx = PlssIndex::default();
    idx.add_dataset(path, bindings)?;
    idx.finish(DEFAULT_NESTING_EPSILON)?;
    Ok(idx)
}

impl PlssIndex {
    pub fn add_dataset(&mut self, path: &Path, bindings: &FieldBindings) -> Result<()> {
        let text = jsonl::read_to_string(path)?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::malformed(path.display().to_string(), e.line(), e.to_string()))?;
        self.add_feature_collection(&value, bindings, &path.display().to_string())
    }

    pub fn add_feature_collection(
        &mut self,
        fc: &Value,
        bindings: &FieldBindings,
        source_name: &str,
    ) -> Result<()> {
        let features = fc
            .get("features")
            .and_then(Value::as_array)
            .filter(|_| fc.get("type").and_then(Value::as_str) == Some("FeatureCollection"))
            .ok_or_else(|| {
                Error::Invalid(format!("{source_name}: not a GeoJSON FeatureCollection"))
            })?;

        if !self.states.iter().any(|s| s.name == bindings.state) {
            self.states.push(StateConfig {
                name: bindings.state.clone(),
                default_township_dir: bindings.default_township_dir,
                default_range_dir: bindings.default_range_dir,
            });
        }

        for (i, feature) in features.iter().enumerate() {
            self.stats.features += 1;
            let props = feature.get("properties").cloned().unwrap_or(Value::Null);
            let get = |name: &str| props.get(name).filter(|v| !v.is_null());
            let township = get(&bindings.township)
                .and_then(as_number)
                .filter(|v| *v > 0);
            let range = get(&bindings.range).and_then(as_number).filter(|v| *v > 0);
            let (Some(township), Some(range)) = (township, range) else {
                self.skip(format!(
                    "{source_name} feature {i}: missing township or range"
                ));
                continue;
            };
            let dir = |field: &Option<String>, default: Direction| match field {
                None => Some(default),
                Some(f) => get(f).map_or(Some(default), |v| bindings.direction(v)),
            };
            let township_dir = dir(&bindings.township_dir, bindings.default_township_dir)
                .filter(|d| d.is_north_south());
            let range_dir = dir(&bindings.range_dir, bindings.default_range_dir)
                .filter(|d| !d.is_north_south());
            let (Some(township_dir), Some(range_dir)) = (township_dir, range_dir) else {
                self.skip(format!("{source_name} feature {i}: unrecognized direction"));
                continue;
            };
            let section = match bindings.section.as_deref().and_then(get) {
                None => None,
                Some(v) => match as_number(v) {
                    Some(0) => None,
                    Some(s @ 1..=36) => Some(s as u8),
                    _ => {
                        self.skip(format!("{source_name} feature {i}: bad section value {v}"));
                        continue;
                    }
                },
            };
            let key = PlssKey {
                state: bindings.state.clone(),
                township,
                township_dir,
                range,
                range_dir,
                section,
            };
            let Some(geom) = feature.get("geometry").filter(|g| !g.is_null()) else {
                self.skip(format!("{source_name} feature {i}: no geometry"));
                continue;
            };
            let geometry = MultiPolygon::from_geojson(geom, &key.to_string())?;
            let (map, tag) = if section.is_some() {
                (&mut self.sections, ResolutionTag::Section)
            } else {
                (&mut self.townships, ResolutionTag::Township)
            };
            if map.contains_key(&key) {
                return Err(Error::Duplicate {
                    what: "PLSS key",
                    key: key.to_string(),
                });
            }
            map.insert(key, GeoBoundary::new(geometry, tag));
        }
        Ok(())
    }

    fn skip(&mut self, message: String) {
        self.stats.skipped += 1;
        self.stats.messages.push(message);
    }

    /// Fills in township boundaries missing from the data as the bounding
    /// rectangle of their sections, then checks that every section lies
    /// within its township's bounding box widened by `epsilon`.
    pub fn finish(&mut self, epsilon: f64) -> Result<()> {
        let mut extents: BTreeMap<PlssKey, BBox> = BTreeMap::new();
        for (key, b) in &self.sections {
            let e = extents.entry(key.township_key()).or_insert(b.bbox);
            e[0] = e[0].min(b.bbox[0]);
            e[1] = e[1].min(b.bbox[1]);
            e[2] = e[2].max(b.bbox[2]);
            e[3] = e[3].max(b.bbox[3]);
        }
        for (key, e) in extents {
            self.townships.entry(key).or_insert_with(|| {
                GeoBoundary::new(
                    MultiPolygon::rect(e[0], e[1], e[2], e[3]),
                    ResolutionTag::Township,
                )
            });
        }
        for (key, b) in &self.sections {
            let t = &self.townships[&key.township_key()].bbox;
            let inside = b.bbox[0] >= t[0] - epsilon
                && b.bbox[1] >= t[1] - epsilon
                && b.bbox[2] <= t[2] + epsilon
                && b.bbox[3] <= t[3] + epsilon;
            if !inside {
                return Err(Error::Invalid(format!(
                    "section {key} extends outside its township"
                )));
            }
        }
        Ok(())
    }

    pub fn states(&self) -> &[StateConfig] {
        &self.states
    }

    pub fn township_count(&self) -> usize {
        self.townships.len()
    }

    pub fn section_count(&self) -> usize {
        self.sections.len()
    }

    pub fn townships(&self) -> impl Iterator<Item = (&PlssKey, &GeoBoundary)> {
        self.townships.iter()
    }

    pub fn sections(&self) -> impl Iterator<Item = (&PlssKey, &GeoBoundary)> {
        self.sections.iter()
    }

    /// Section boundary when the key has a section, township boundary
    /// otherwise.
    pub fn resolve(&self, key: &PlssKey) -> std::result::Result<&GeoBoundary, NotFound> {
        let map = if key.section.is_some() {
            &self.sections
        } else {
            &self.townships
        };
        map.get(key).ok_or_else(|| NotFound { key: key.clone() })
    }

    /// Resolves a candidate whose state is unknown. Missing directions take
    /// each state's defaults; explicit directions (notably the Range
    /// orientation) separate states that reuse the same numbers. The hinted
    /// state wins when several states match.
    pub fn resolve_candidate(
        &self,
        c: &PlssCandidate,
        state_hint: Option<&str>,
    ) -> CandidateLookup<'_> {
        let section = match c.s {
            None => None,
            Some(s @ 1..=36) => Some(s as u8),
            Some(_) => return CandidateLookup::NotFound,
        };
        let mut found: Vec<(PlssKey, &GeoBoundary)> = Vec::new();
        for st in &self.states {
            let key = PlssKey {
                state: st.name.clone(),
                township: c.t,
                township_dir: c.t_dir.unwrap_or(st.default_township_dir),
                range: c.r,
                range_dir: c.r_dir.unwrap_or(st.default_range_dir),
                section,
            };
            if let Ok(b) = self.resolve(&key) {
                found.push((key, b));
            }
        }
        if let Some(hint) = state_hint {
            if let Some(pos) = found
                .iter()
                .position(|(k, _)| k.state.eq_ignore_ascii_case(hint))
            {
                let (k, b) = found.swap_remove(pos);
                return CandidateLookup::Found(k, b);
            }
        }
        match found.len() {
            0 => CandidateLookup::NotFound,
            1 => {
                let (k, b) = found.pop().expect("one");
                CandidateLookup::Found(k, b)
            }
            _ => CandidateLookup::Ambiguous(found.into_iter().map(|(k, _)| k).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotFound {
    pub key: PlssKey,
}

impl fmt::Display for NotFound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no boundary for {}", self.key)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateLookup<'a> {
    Found(PlssKey, &'a GeoBoundary),
    Ambiguous(Vec<PlssKey>),
    NotFound,
}

/// How a document's key was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "step", content = "rank")]
pub enum GeorefPath {
    /// The top-ranked candidate resolved.
    Top,
    /// A lower-ranked candidate (0-based rank) resolved.
    Next(usize),
    /// Only the township of the top candidate resolved.
    TupleFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeorefResult {
    pub key: PlssKey,
    pub resolution: ResolutionTag,
    pub boundary: GeoBoundary,
    /// Containing township; same as `boundary` for township results.
    pub township: Option<GeoBoundary>,
    pub path: GeorefPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnresolvedReason {
    NoCandidates,
    NotInIndex,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeorefOutcome {
    Resolved(GeorefResult),
    Unresolved(UnresolvedReason),
}

impl GeorefOutcome {
    pub fn resolved(&self) -> Option<&GeorefResult> {
        match self {
            GeorefOutcome::Resolved(r) => Some(r),
            GeorefOutcome::Unresolved(_) => None,
        }
    }
}

/// Resolves the top candidate, falling back to lower-ranked candidates and
/// then to the township of the top candidate.
pub fn georeference(
    candidates: &[PlssCandidate],
    state_hint: Option<&str>,
    idx: &PlssIndex,
) -> GeorefOutcome {
    let Some(top) = candidates.first() else {
        return GeorefOutcome::Unresolved(UnresolvedReason::NoCandidates);
    };
    let mut ambiguous = false;
    let attempts = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (
                c.clone(),
                if i == 0 {
                    GeorefPath::Top
                } else {
                    GeorefPath::Next(i)
                },
            )
        })
        .chain(
            top.s
                .is_some()
                .then(|| (top.as_tuple(), GeorefPath::TupleFallback)),
        );
    for (cand, path) in attempts {
        match idx.resolve_candidate(&cand, state_hint) {
            CandidateLookup::Found(key, boundary) => {
                let township = if key.section.is_some() {
                    idx.resolve(&key.township_key()).ok().cloned()
                } else {
                    Some(boundary.clone())
                };
                return GeorefOutcome::Resolved(GeorefResult {
                    resolution: boundary.resolution,
                    boundary: boundary.clone(),
                    township,
                    key,
                    path,
                });
            }
            CandidateLookup::Ambiguous(_) => ambiguous = true,
            CandidateLookup::NotFound => {}
        }
    }
    GeorefOutcome::Unresolved(if ambiguous {
        UnresolvedReason::Ambiguous
    } else {
        UnresolvedReason::NotInIndex
    })
}

/// One line of the georeference output file.
pub fn georef_record(doc_id: &str, outcome: &GeorefOutcome) -> Value {
    match outcome {
        GeorefOutcome::Resolved(r) => json!({
            "id": doc_id,
            "key": r.key,
            "resolution": r.resolution,
            "bbox": r.boundary.bbox,
            "boundary": r.boundary.geometry.to_geojson(),
            "path": r.path,
        }),
        GeorefOutcome::Unresolved(reason) => json!({
            "id": doc_id,
            "key": Value::Null,
            "resolution": "unresolved",
            "bbox": Value::Null,
            "boundary": Value::Null,
            "reason": reason,
        }),
    }
}

/// FeatureCollection of resolved documents for GIS tools.
pub fn georef_feature_collection<'a>(
    results: impl IntoIterator<Item = (&'a str, &'a GeorefOutcome)>,
) -> Value {
    let features: Vec<Value> = results
        .into_iter()
        .filter_map(|(id, o)| {
            let r = o.resolved()?;
            Some(json!({
                "type": "Feature",
                "properties": {
                    "id": id,
                    "key": r.key.to_string(),
                    "resolution": r.resolution,
                },
                "geometry": r.boundary.geometry.to_geojson(),
            }))
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, GridState};

    fn mn_bindings() -> FieldBindings {
        synth::grid_bindings(GridState::Minnesota)
    }

    fn fixture() -> PlssIndex {
        let mut idx = PlssIndex::default();
        for st in [GridState::Minnesota, GridState::Wisconsin] {
            idx.add_feature_collection(&synth::grid_geojson(st), &synth::grid_bindings(st), "grid")
                .unwrap();
        }
        idx.finish(DEFAULT_NESTING_EPSILON).unwrap();
        idx
    }

    fn key(state: &str, t: u32, r: u32, rdir: Direction, s: Option<u8>) -> PlssKey {
        PlssKey {
            state: state.to_string(),
            township: t,
            township_dir: Direction::N,
            range: r,
            range_dir: rdir,
            section: s,
        }
    }

    #[test]
    fn builds_township_and_section_keys() {
        let mut idx = PlssIndex::default();
        idx.add_feature_collection(
            &synth::grid_geojson(GridState::Minnesota),
            &mn_bindings(),
            "mn",
        )
        .unwrap();
        idx.finish(DEFAULT_NESTING_EPSILON).unwrap();
        assert_eq!(idx.township_count(), 2);
        assert_eq!(idx.section_count(), 72);
    }

    #[test]
    fn missing_range_is_skipped() {
        let fc = json!({"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"TWP":1,"RDIR":"W","SEC":1},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}
        ]});
        let mut idx = PlssIndex::default();
        idx.add_feature_collection(&fc, &mn_bindings(), "t")
            .unwrap();
        assert_eq!(idx.stats.skipped, 1);
        assert_eq!(idx.section_count(), 0);
    }

    #[test]
    fn duplicate_key_is_an_error() {
        let f = json!({"type":"Feature","properties":{"TWP":1,"TDIR":"N","RNG":1,"RDIR":"W","SEC":1},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}});
        let fc = json!({"type":"FeatureCollection","features":[f.clone(), f]});
        let mut idx = PlssIndex::default();
        match idx
            .add_feature_collection(&fc, &mn_bindings(), "t")
            .unwrap_err()
        {
            Error::Duplicate { key, .. } => assert_eq!(key, "Minnesota T1N R1W S1"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn resolves_sections_and_townships() {
        let idx = fixture();
        let s1 = idx
            .resolve(&key("Minnesota", 1, 1, Direction::W, Some(1)))
            .unwrap();
        assert_eq!(s1.resolution, ResolutionTag::Section);
        assert_eq!(s1.bbox, synth::section_bbox(GridState::Minnesota, 1, 1));

        let t = idx
            .resolve(&key("Minnesota", 1, 1, Direction::W, None))
            .unwrap();
        assert_eq!(t.resolution, ResolutionTag::Township);
        assert_eq!(t.bbox, synth::township_bbox(GridState::Minnesota, 1));

        let missing = key("Minnesota", 9, 9, Direction::W, None);
        assert_eq!(idx.resolve(&missing).unwrap_err().key, missing);
    }

    #[test]
    fn range_orientation_disambiguates_states() {
        let idx = fixture();
        let cand = |rdir| PlssCandidate {
            t: 1,
            t_dir: Some(Direction::N),
            r: 1,
            r_dir: rdir,
            s: Some(7),
            count: 1,
            first_token: 0,
        };
        match idx.resolve_candidate(&cand(Some(Direction::E)), None) {
            CandidateLookup::Found(k, _) => assert_eq!(k.state, "Wisconsin"),
            other => panic!("unexpected {other:?}"),
        }
        match idx.resolve_candidate(&cand(Some(Direction::W)), None) {
            CandidateLookup::Found(k, _) => assert_eq!(k.state, "Minnesota"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            idx.resolve_candidate(&cand(None), None),
            CandidateLookup::Ambiguous(_)
        ));
        match idx.resolve_candidate(&cand(None), Some("wisconsin")) {
            CandidateLookup::Found(k, _) => assert_eq!(k.range_dir, Direction::E),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sections_never_disjoint_from_their_township() {
        let idx = fixture();
        for (k, b) in idx.sections() {
            let t = idx.resolve(&k.township_key()).unwrap();
            assert_ne!(
                overlap(&b.geometry, &t.geometry).unwrap(),
                Overlap::Disjoint,
                "{k}"
            );
        }
    }

    fn cand(t: u32, r: u32, s: Option<u32>) -> PlssCandidate {
        PlssCandidate {
            t,
            t_dir: Some(Direction::N),
            r,
            r_dir: Some(Direction::W),
            s,
            count: 1,
            first_token: 0,
        }
    }

    #[test]
    fn georeference_paths() {
        let idx = fixture();
        match georeference(&[cand(1, 1, Some(1))], None, &idx) {
            GeorefOutcome::Resolved(r) => {
                assert_eq!(r.resolution, ResolutionTag::Section);
                assert_eq!(r.path, GeorefPath::Top);
                assert!(r.township.is_some());
            }
            o => panic!("unexpected {o:?}"),
        }
        // top candidate's township exists in MN, but not T1N R1W S40 / T5N
        match georeference(&[cand(1, 1, Some(40)), cand(5, 5, Some(2))], None, &idx) {
            GeorefOutcome::Resolved(r) => {
                assert_eq!(r.resolution, ResolutionTag::Township);
                assert_eq!(r.path, GeorefPath::TupleFallback);
            }
            o => panic!("unexpected {o:?}"),
        }
        match georeference(&[cand(5, 5, Some(2)), cand(1, 2, Some(3))], None, &idx) {
            GeorefOutcome::Resolved(r) => assert_eq!(r.path, GeorefPath::Next(1)),
            o => panic!("unexpected {o:?}"),
        }
        assert_eq!(
            georeference(&[], None, &idx),
            GeorefOutcome::Unresolved(UnresolvedReason::NoCandidates)
        );
    }

    #[test]
    fn bindings_with_coded_directions() {
        let b = synth::grid_bindings(GridState::Wisconsin);
        assert_eq!(b.direction(&json!(2)), Some(Direction::E));
        assert_eq!(b.direction(&json!("East")), Some(Direction::E));
        assert_eq!(b.direction(&json!("?")), None);
    }
}
