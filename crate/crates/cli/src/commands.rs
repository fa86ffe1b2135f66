use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use deedscan_core::corpus::{load_corpus, load_gold, tokenize, write_corpus, Document};
use deedscan_core::detector::{load_external_predictions, load_rules, DetectorConfig, Lexicon};
use deedscan_core::evaluator::{
    eval_georef, eval_system, render_json, render_text, subdivision_coverage, EvalReport,
};
use deedscan_core::exec::Executor;
use deedscan_core::geoner::{Gazetteer, GeonerConfig};
use deedscan_core::jsonl::{to_lines, write_atomic};
use deedscan_core::numerals::{parse_numeral, NumeralForm};
use deedscan_core::pipeline::{DocResult, Pipeline};
use deedscan_core::plss::{
    georef_feature_collection, FieldBindings, GeorefOutcome, PlssIndex, ResolutionTag,
    DEFAULT_NESTING_EPSILON,
};
use deedscan_core::subdiv::Abbreviations;
use deedscan_core::synth::{self, DeedOptions, GridState};
use serde_json::json;

use crate::config::RunConfig;

pub const INTERNAL_METHOD: &str = "Rule-based fuzzy match";
pub const EXTERNAL_METHOD: &str = "External predictions";

struct Loaded {
    docs: Vec<Document>,
    pipeline: Pipeline,
}

fn load(cfg: &RunConfig, docs_needed: bool) -> Result<Loaded> {
    let docs = match &cfg.corpus {
        Some(p) => load_corpus(p)?,
        None if docs_needed => {
            bail!("no corpus configured (pass --corpus or set it in the config file)")
        }
        None => Vec::new(),
    };
    let lexicon = cfg.lexicon.as_deref().map(Lexicon::load).transpose()?;
    let rules = match &cfg.rules {
        Some(p) => load_rules(p)?,
        None => Vec::new(),
    };
    let abbreviations = match &cfg.abbreviations {
        Some(p) => Abbreviations::load(p)?,
        None => Abbreviations::default(),
    };
    let gazetteer = match &cfg.gazetteer {
        Some(p) => Gazetteer::load(p, abbreviations)?,
        None => Gazetteer::empty(),
    };
    let plss = if cfg.plss.is_empty() {
        None
    } else {
        let mut idx = PlssIndex::default();
        for src in &cfg.plss {
            let bindings = FieldBindings::load(&src.bindings)?;
            idx.add_dataset(&src.data, &bindings)?;
        }
        idx.finish(DEFAULT_NESTING_EPSILON)?;
        if idx.stats.skipped > 0 {
            eprintln!(
                "note: {} PLSS feature(s) skipped for missing or invalid fields",
                idx.stats.skipped
            );
        }
        Some(idx)
    };
    Ok(Loaded {
        docs,
        pipeline: Pipeline {
            lexicon,
            rules,
            detector: DetectorConfig {
                similarity_threshold: cfg.similarity_threshold,
                context_threshold: cfg.context_threshold,
                ..DetectorConfig::default()
            },
            gazetteer,
            geoner: GeonerConfig {
                subdivision_threshold: cfg.subdivision_threshold,
                ..GeonerConfig::default()
            },
            plss,
        },
    })
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    write_atomic(&dir.join(name), contents.as_bytes())?;
    Ok(())
}

fn flagged_line(results: &[DocResult]) -> String {
    let flagged = results.iter().filter(|r| r.detection.doc_flag).count();
    format!("flagged {flagged}/{}", results.len())
}

fn georef_line(results: &[DocResult]) -> String {
    let outcomes: Vec<&GeorefOutcome> = results.iter().filter_map(|r| r.georef.as_ref()).collect();
    let resolved: Vec<_> = outcomes.iter().filter_map(|o| o.resolved()).collect();
    let sections = resolved
        .iter()
        .filter(|r| r.resolution == ResolutionTag::Section)
        .count();
    let townships = resolved.iter().filter(|r| r.township.is_some()).count();
    format!(
        "1×1: {sections}, 6×6: {townships}, unresolved: {}",
        outcomes.len() - resolved.len()
    )
}

fn write_detections(cfg: &RunConfig, results: &[DocResult]) -> Result<()> {
    let records: Vec<_> = results.iter().map(|r| &r.detection).collect();
    write_out(&cfg.out, "detections.jsonl", &to_lines(&records))
}

fn write_geo(cfg: &RunConfig, results: &[DocResult]) -> Result<()> {
    let entities: Vec<_> = results.iter().map(DocResult::entity_record).collect();
    write_out(&cfg.out, "entities.jsonl", &to_lines(&entities))?;
    if results.iter().any(|r| r.georef.is_some()) {
        let records: Vec<_> = results
            .iter()
            .filter_map(DocResult::georef_record)
            .collect();
        write_out(&cfg.out, "georef.jsonl", &to_lines(&records))?;
        let fc = georef_feature_collection(
            results
                .iter()
                .filter_map(|r| r.georef.as_ref().map(|g| (r.id(), g))),
        );
        write_out(&cfg.out, "georef.geojson", &format!("{fc}\n"))?;
    }
    Ok(())
}

pub fn detect(cfg: &RunConfig) -> Result<()> {
    cfg.validate_paths()?;
    cfg.require(&cfg.corpus, "corpus")?;
    cfg.require(&cfg.lexicon, "lexicon")?;
    let loaded = load(cfg, true)?;
    let exec = Executor::new(cfg.jobs);
    let records = loaded.pipeline.run_detect(&loaded.docs, &exec);
    write_out(&cfg.out, "detections.jsonl", &to_lines(&records))?;
    let flagged = records.iter().filter(|r| r.doc_flag).count();
    println!("flagged {flagged}/{}", records.len());
    Ok(())
}

pub fn georef(cfg: &RunConfig) -> Result<()> {
    cfg.validate_paths()?;
    cfg.require(&cfg.corpus, "corpus")?;
    cfg.require(&cfg.gazetteer, "gazetteer")?;
    if cfg.plss.is_empty() {
        bail!("no PLSS dataset configured (pass --plss <data>:<bindings>)");
    }
    let mut loaded = load(cfg, true)?;
    loaded.pipeline.lexicon = None;
    let results = loaded.pipeline.run(&loaded.docs, &Executor::new(cfg.jobs));
    write_geo(cfg, &results)?;
    println!("{}", georef_line(&results));
    Ok(())
}

fn build_report(
    cfg: &RunConfig,
    loaded: &Loaded,
    internal: Option<&[DocResult]>,
) -> Result<EvalReport> {
    let gold = load_gold(cfg.require(&cfg.gold, "gold")?)?;
    let lens: HashMap<String, usize> = loaded
        .docs
        .iter()
        .map(|d| (d.id().to_string(), d.char_len()))
        .collect();
    let mut report = EvalReport::default();
    if let Some(results) = internal {
        let mut preds: Vec<_> = results.iter().map(DocResult::as_prediction).collect();
        if cfg.gazetteer.is_none() {
            // without a gazetteer only PLSS classes are extracted
            preds.iter_mut().for_each(|p| p.entities = None);
        }
        report
            .systems
            .push(eval_system(INTERNAL_METHOD, &gold, &preds, &lens)?);
        if loaded.pipeline.plss.is_some() {
            let by_id: HashMap<&str, &DocResult> = results.iter().map(|r| (r.id(), r)).collect();
            report.georef = Some(eval_georef(gold.iter().map(|g| {
                (
                    g.doc_id.as_str(),
                    g.parcels.as_ref(),
                    by_id.get(g.doc_id.as_str()).and_then(|r| r.georef.as_ref()),
                )
            })));
        }
        if cfg.gazetteer.is_some() {
            let matched = results.iter().filter(|r| r.has_subdivision()).count();
            report.subdivision_coverage = Some(subdivision_coverage(matched, results.len()));
        }
    }
    if let Some(p) = &cfg.predictions {
        let preds = load_external_predictions(p)?;
        report
            .systems
            .push(eval_system(EXTERNAL_METHOD, &gold, &preds, &lens)?);
    }
    for s in &report.systems {
        if !s.orphans.is_empty() || !s.missing.is_empty() {
            eprintln!(
                "warning: {}: {} prediction id(s) not in gold, {} gold id(s) without prediction",
                s.name,
                s.orphans.len(),
                s.missing.len()
            );
        }
    }
    Ok(report)
}

fn write_report(cfg: &RunConfig, report: &EvalReport) -> Result<()> {
    let text = render_text(report);
    write_out(&cfg.out, "report.txt", &text)?;
    write_out(&cfg.out, "report.json", &render_json(report))?;
    print!("{text}");
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    cfg.validate_paths()?;
    cfg.require(&cfg.gold, "gold")?;
    let internal = cfg.lexicon.is_some() && cfg.corpus.is_some();
    if !internal && cfg.predictions.is_none() {
        bail!("nothing to evaluate: configure --corpus with --lexicon, or --predictions");
    }
    let loaded = load(cfg, false)?;
    let results = internal.then(|| loaded.pipeline.run(&loaded.docs, &Executor::new(cfg.jobs)));
    let report = build_report(cfg, &loaded, results.as_deref())?;
    write_report(cfg, &report)
}

pub fn pipeline(cfg: &RunConfig) -> Result<()> {
    cfg.validate_paths()?;
    cfg.require(&cfg.corpus, "corpus")?;
    cfg.require(&cfg.lexicon, "lexicon")?;
    let loaded = load(cfg, true)?;
    let results = loaded.pipeline.run(&loaded.docs, &Executor::new(cfg.jobs));
    write_detections(cfg, &results)?;
    write_geo(cfg, &results)?;
    println!("{}", flagged_line(&results));
    if loaded.pipeline.plss.is_some() {
        println!("{}", georef_line(&results));
    }
    if cfg.gold.is_some() {
        let report = build_report(cfg, &loaded, Some(&results))?;
        write_report(cfg, &report)?;
    }
    Ok(())
}

/// Parses one numeral phrase per line; lines with leftover words are
/// rejected.
pub fn numerals(input: Option<&Path>) -> Result<()> {
    let reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(std::io::BufReader::new(
            std::fs::File::open(p).with_context(|| format!("cannot open {}", p.display()))?,
        )),
        None => Box::new(std::io::stdin().lock()),
    };
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    for line in reader.lines() {
        let line = line.context("reading numeral input")?;
        let tokens: Vec<_> = tokenize(&line)
            .into_iter()
            .filter(|t| t.is_word())
            .collect();
        match parse_numeral(&tokens).filter(|p| p.tokens == tokens.len()) {
            Some(p) => {
                let note = match (p.form, p.conflict) {
                    (NumeralForm::Mixed, true) => "\t(words disagree with digits)",
                    _ => "",
                };
                writeln!(out, "{}{note}", p.value)?;
            }
            None => writeln!(out, "NOPARSE")?,
        }
    }
    out.flush()?;
    Ok(())
}

pub struct SynthArgs {
    pub docs: usize,
    pub seed: u64,
    pub min_chars: usize,
    pub covenant_rate: f64,
}

/// Writes the demo inputs and a fixture corpus with gold annotations, plus
/// a config file wiring them together.
pub fn synth(dir: &Path, args: &SynthArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.covenant_rate) {
        bail!("covenant rate must be within [0, 1]");
    }
    let lex = synth::demo_lexicon();
    let opts = DeedOptions {
        covenant_rate: args.covenant_rate,
        min_chars: args.min_chars,
    };
    let (docs, gold) = synth::deed_corpus(&lex, args.docs, args.seed, &opts);
    write_out(dir, "corpus.jsonl", &write_corpus(&docs))?;
    write_out(dir, "gold.jsonl", &synth::gold_records(&gold))?;
    write_out(dir, "lexicon.tsv", synth::DEMO_LEXICON)?;
    write_out(dir, "context_rules.jsonl", synth::DEMO_RULES)?;
    write_out(dir, "gazetteer.jsonl", synth::DEMO_GAZETTEER)?;
    let mut plss = String::new();
    for st in GridState::BOTH {
        let stem = st.name().to_lowercase();
        write_out(
            dir,
            &format!("{stem}.geojson"),
            &format!("{}\n", synth::grid_geojson(st)),
        )?;
        let bindings = serde_json::to_string_pretty(&synth::grid_bindings(st))?;
        write_out(
            dir,
            &format!("{stem}.bindings.json"),
            &format!("{bindings}\n"),
        )?;
        plss.push_str(&format!(
            "\n[[plss]]\ndata = \"{stem}.geojson\"\nbindings = \"{stem}.bindings.json\"\n"
        ));
    }
    let config = format!(
        "corpus = \"corpus.jsonl\"\nlexicon = \"lexicon.tsv\"\nrules = \"context_rules.jsonl\"\n\
         gazetteer = \"gazetteer.jsonl\"\ngold = \"gold.jsonl\"\nout = \"out\"\n{plss}\n\
         [thresholds]\nsimilarity = 0.8\ncontext = 0.5\nsubdivision = 0.85\n"
    );
    write_out(dir, "deedscan.toml", &config)?;
    let summary =
        json!({"documents": docs.len(), "flagged": gold.iter().filter(|g| g.doc_flag).count()});
    println!("wrote {} ({summary})", dir.display());
    Ok(())
}
