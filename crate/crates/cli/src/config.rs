//! Run configuration: an optional TOML file merged with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

/// One state's PLSS dataset and its attribute bindings.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlssSource {
    pub data: PathBuf,
    pub bindings: PathBuf,
}

impl std::str::FromStr for PlssSource {
    type Err = String;

    /// `<geojson>:<bindings.json>`; the split is at the last colon.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.rsplit_once(':') {
            Some((d, b)) if !d.is_empty() && !b.is_empty() => Ok(PlssSource {
                data: d.into(),
                bindings: b.into(),
            }),
            _ => Err(format!("expected <data>:<bindings>, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub similarity: Option<f64>,
    pub context: Option<f64>,
    pub subdivision: Option<f64>,
}

/// Contents of a config file. Relative paths are relative to the file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub plss: Vec<PlssSource>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                *x = base.join(&*x);
            }
        };
        rebase(&mut cfg.corpus);
        rebase(&mut cfg.lexicon);
        rebase(&mut cfg.rules);
        rebase(&mut cfg.gazetteer);
        rebase(&mut cfg.abbreviations);
        rebase(&mut cfg.gold);
        rebase(&mut cfg.predictions);
        rebase(&mut cfg.out);
        for s in &mut cfg.plss {
            s.data = base.join(&s.data);
            s.bindings = base.join(&s.bindings);
        }
        Ok(cfg)
    }
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration
    #[arg(long, global = true, env = "DEEDSCAN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses every core, 1 runs sequentially
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Document corpus (JSONL with id and text)
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Lexicon of restrictive terms (TSV)
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Context rules (JSONL)
    #[arg(long, global = true)]
    pub rules: Option<PathBuf>,
    /// Place-name gazetteer (JSONL)
    #[arg(long, global = true)]
    pub gazetteer: Option<PathBuf>,
    /// Subdivision abbreviation table (TSV)
    #[arg(long, global = true)]
    pub abbreviations: Option<PathBuf>,
    /// PLSS dataset as <geojson>:<bindings.json>; repeat once per state
    #[arg(long, global = true)]
    pub plss: Vec<PlssSource>,
    /// Gold annotations (JSONL)
    #[arg(long, global = true)]
    pub gold: Option<PathBuf>,
    /// Predictions from an external system (JSONL)
    #[arg(long, global = true)]
    pub predictions: Option<PathBuf>,
    /// Minimum per-word similarity for fuzzy lexicon matches
    #[arg(long, global = true)]
    pub similarity_threshold: Option<f64>,
    /// Minimum context score for a match to be accepted
    #[arg(long, global = true)]
    pub context_threshold: Option<f64>,
    /// Minimum blended similarity for subdivision matches
    #[arg(long, global = true)]
    pub subdivision_threshold: Option<f64>,
}

/// Merged configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub plss: Vec<PlssSource>,
    pub gold: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: PathBuf,
    pub jobs: usize,
    pub similarity_threshold: f64,
    pub context_threshold: f64,
    pub subdivision_threshold: f64,
}

fn unit_interval(name: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        bail!("{name} must be within [0, 1], got {v}");
    }
    Ok(v)
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let pick = |flag: &Option<PathBuf>, conf: Option<PathBuf>| flag.clone().or(conf);
        let det = deedscan_core::detector::DetectorConfig::default();
        Ok(RunConfig {
            corpus: pick(&args.corpus, file.corpus),
            lexicon: pick(&args.lexicon, file.lexicon),
            rules: pick(&args.rules, file.rules),
            gazetteer: pick(&args.gazetteer, file.gazetteer),
            abbreviations: pick(&args.abbreviations, file.abbreviations),
            plss: if args.plss.is_empty() {
                file.plss
            } else {
                args.plss.clone()
            },
            gold: pick(&args.gold, file.gold),
            predictions: pick(&args.predictions, file.predictions),
            out: pick(&args.out, file.out).unwrap_or_else(|| PathBuf::from("out")),
            jobs: args.jobs.or(file.jobs).unwrap_or(0),
            similarity_threshold: unit_interval(
                "similarity threshold",
                args.similarity_threshold
                    .or(file.thresholds.similarity)
                    .unwrap_or(det.similarity_threshold),
            )?,
            context_threshold: unit_interval(
                "context threshold",
                args.context_threshold
                    .or(file.thresholds.context)
                    .unwrap_or(det.context_threshold),
            )?,
            subdivision_threshold: unit_interval(
                "subdivision threshold",
                args.subdivision_threshold
                    .or(file.thresholds.subdivision)
                    .unwrap_or(deedscan_core::subdiv::DEFAULT_THRESHOLD),
            )?,
        })
    }

    /// Fails on the first configured input that is not a readable file.
    pub fn validate_paths(&self) -> Result<()> {
        let singles = [
            &self.corpus,
            &self.lexicon,
            &self.rules,
            &self.gazetteer,
            &self.abbreviations,
            &self.gold,
            &self.predictions,
        ];
        let plss = self.plss.iter().flat_map(|s| [&s.data, &s.bindings]);
        for p in singles.into_iter().flatten().chain(plss) {
            if !p.is_file() {
                bail!("input not found: {}", p.display());
            }
        }
        Ok(())
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
        match value {
            Some(p) => Ok(p),
            None => bail!("no {what} configured (pass --{what} or set it in the config file)"),
        }
    }
}
