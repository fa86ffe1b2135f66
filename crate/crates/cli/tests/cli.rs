use std::path::Path;
use std::process::{Command, Output};

fn deedscan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deedscan"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DEEDSCAN_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, docs: &str) {
    let o = deedscan(&["synth", "--docs", docs, "--out", "."], dir);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn write_corpus(dir: &Path, texts: &[String]) {
    let lines: String = texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            format!(
                "{}\n",
                serde_json::json!({"id": format!("p{i:03}"), "text": t})
            )
        })
        .collect();
    std::fs::write(dir.join("plain.jsonl"), lines).unwrap();
}

#[test]
fn detect_counts_planted_documents() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    let texts: Vec<String> = (0..100)
        .map(|i| {
            if i < 40 {
                "said lot shall not be sold to any person of the Hindu faith".to_string()
            } else {
                "the grantor conveys said lot with all easements of record".to_string()
            }
        })
        .collect();
    write_corpus(dir.path(), &texts);
    let o = deedscan(
        &[
            "detect",
            "--corpus",
            "plain.jsonl",
            "--lexicon",
            "lexicon.tsv",
            "--out",
            "d",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "flagged 40/100");
    let lines = std::fs::read_to_string(dir.path().join("d/detections.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 100);
}

#[test]
fn empty_corpus_flags_nothing() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    std::fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let o = deedscan(
        &[
            "detect",
            "--corpus",
            "empty.jsonl",
            "--lexicon",
            "lexicon.tsv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "flagged 0/0");
}

#[test]
fn missing_input_names_path_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    let o = deedscan(
        &[
            "detect",
            "--corpus",
            "corpus.jsonl",
            "--lexicon",
            "no/such/lexicon.tsv",
        ],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no/such/lexicon.tsv"), "{}", stderr(&o));
    assert!(
        !dir.path().join("out").exists(),
        "nothing written before validation"
    );
}

#[test]
fn fixture_georeferences_fully() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "50");
    let o = deedscan(&["--config", "deedscan.toml", "georef"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1×1: 50, 6×6: 50, unresolved: 0");
    let fc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/georef.geojson")).unwrap(),
    )
    .unwrap();
    assert_eq!(fc["features"].as_array().unwrap().len(), 50);
}

#[test]
fn corpus_without_survey_text_is_unresolved() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    write_corpus(dir.path(), &["a plain letter".into(), "another one".into()]);
    let o = deedscan(
        &[
            "--config",
            "deedscan.toml",
            "--corpus",
            "plain.jsonl",
            "georef",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "1×1: 0, 6×6: 0, unresolved: 2");
}

#[test]
fn corrupt_geojson_fails() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    std::fs::write(dir.path().join("minnesota.geojson"), "{\"type\": \"Feature").unwrap();
    let o = deedscan(&["--config", "deedscan.toml", "georef"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("minnesota.geojson"), "{}", stderr(&o));
}

#[test]
fn gold_as_predictions_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "30");
    let o = deedscan(
        &[
            "eval",
            "--gold",
            "gold.jsonl",
            "--predictions",
            "gold.jsonl",
            "--corpus",
            "corpus.jsonl",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row = text
        .lines()
        .find(|l| l.starts_with("External predictions"))
        .unwrap();
    assert_eq!(row.matches("100.00%").count(), 4, "{text}");
}

#[test]
fn internal_and_external_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "30");
    let o = deedscan(
        &[
            "--config",
            "deedscan.toml",
            "--predictions",
            "gold.jsonl",
            "eval",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let methods: Vec<&str> = text
        .lines()
        .filter(|l| l.ends_with('%'))
        .filter_map(|l| l.split('|').next())
        .map(str::trim)
        .collect();
    assert!(
        methods.starts_with(&["Rule-based fuzzy match", "External predictions"]),
        "{text}"
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["systems"].as_array().unwrap().len(), 2);
}

#[test]
fn orphan_predictions_are_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "5");
    std::fs::write(
        dir.path().join("preds.jsonl"),
        "{\"id\":\"unknown-doc\",\"term_spans\":[],\"doc_flag\":true}\n",
    )
    .unwrap();
    let o = deedscan(
        &[
            "eval",
            "--gold",
            "gold.jsonl",
            "--predictions",
            "preds.jsonl",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stderr(&o).contains("1 prediction id(s) not in gold"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn pipeline_reruns_identically_and_leaves_no_temp_files() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "40");
    let run = || {
        let o = deedscan(&["--config", "deedscan.toml", "pipeline"], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path().join("out"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "detections.jsonl",
            "entities.jsonl",
            "georef.geojson",
            "georef.jsonl",
            "report.json",
            "report.txt"
        ]
    );
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "3");
    let o = Command::new(env!("CARGO_BIN_EXE_deedscan"))
        .arg("detect")
        .current_dir(dir.path())
        .env("DEEDSCAN_CONFIG", "deedscan.toml")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("flagged "));
}

#[test]
fn numerals_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("n.txt"),
        "Eight (8)\nOne hundred and six\ntwenty-five\nforty thousand and two\nnorth\n",
    )
    .unwrap();
    let o = deedscan(&["numerals", "n.txt"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "8\n106\n25\n40002\nNOPARSE\n");
}
