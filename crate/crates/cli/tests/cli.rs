mod common;

use std::path::Path;

use common::{psychoprobe, synthetic_transcripts, tree, write_transcripts};

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn score_on_empty_input_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = psychoprobe(&["score", "--in", p(&empty), "--out", p(&dir.path().join("cases.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no valid cases"), "{}", stderr(&out));
}

#[test]
fn missing_input_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = psychoprobe(&["analyze", "--cases", p(&dir.path().join("absent.csv")), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn invalid_settings_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = psychoprobe(&["analyze", "--alpha", "1.5", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("alpha"));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"statistics": {"bandwidth": "wide"}}"#).unwrap();
    let out = psychoprobe(&["--config", p(&cfg), "analyze"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bandwidth"));
}

#[test]
fn collect_needs_an_endpoint_and_reports_unreachable_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("de.jsonl");
    let out = psychoprobe(&["collect", "--language", "de", "--n", "1", "--out", p(&out_file)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("endpoint"));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"collection": {"max_retries": 1, "base_delay_ms": 1, "max_delay_ms": 1, "min_interval_ms": 0}}"#,
    )
    .unwrap();
    let out = psychoprobe(&[
        "--config",
        p(&cfg),
        "collect",
        "--language",
        "de",
        "--n",
        "1",
        "--endpoint",
        "http://127.0.0.1:9/v1/completions",
        "--out",
        p(&out_file),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("unreachable"));
    assert!(!out_file.exists());
}

#[test]
fn parse_splits_valid_and_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let tdir = dir.path().join("transcripts");
    write_transcripts(&tdir, &synthetic_transcripts(3, 10));
    let parsed = dir.path().join("parsed").join("all.jsonl");
    let out = psychoprobe(&["parse", "--in", p(&tdir), "--out", p(&parsed)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let valid = std::fs::read_to_string(&parsed).unwrap();
    let rejects = std::fs::read_to_string(dir.path().join("parsed").join("all.rejects.jsonl")).unwrap();
    assert_eq!(valid.lines().count() + rejects.lines().count(), 33);
    assert!(rejects.lines().count() >= 3);
    assert!(rejects.contains("ArbitraryAllMiddle"));
    let side = std::fs::read_to_string(dir.path().join("parsed").join("all.jsonl.provenance.json")).unwrap();
    assert!(side.contains("config_sha256"));

    let cases = dir.path().join("cases.csv");
    let out = psychoprobe(&["score", "--in", p(&parsed), "--out", p(&cases)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&cases).unwrap();
    assert!(text.starts_with("# psychoprobe "));
    assert_eq!(text.lines().count(), 2 + valid.lines().count());
}

#[test]
fn pipeline_builds_the_report_tree_offline() {
    let dir = tempfile::tempdir().unwrap();
    let tdir = dir.path().join("transcripts");
    write_transcripts(&tdir, &synthetic_transcripts(11, 30));
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 5, "statistics": {"mc_draws": 500}, "mixture": {"chains": 2, "draws": 150, "warmup": 150}}"#,
    )
    .unwrap();
    let report = dir.path().join("report");
    let out = psychoprobe(&["--config", p(&cfg), "pipeline", "--transcripts", p(&tdir), "--out", p(&report)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let files = tree(&report);
    for name in [
        "data/cases.csv",
        "data/parsed.jsonl",
        "stats/analysis.json",
        "stats/mixture.json",
        "tables/sample.csv",
        "tables/descriptives.csv",
        "tables/anova.csv",
        "tables/waic_selection.csv",
        "tables/tokens_en_E.csv",
        "figures/box_O.svg",
    ] {
        assert!(files.contains_key(name), "missing {name}");
    }
    let prov = "config_sha256=";
    for (name, bytes) in &files {
        let text = String::from_utf8_lossy(bytes);
        if name.ends_with(".csv") || name.ends_with(".svg") {
            assert!(text.contains(prov), "{name} lacks provenance");
        }
        if name.ends_with(".json") && name.starts_with("stats/") {
            assert!(text.contains("\"provenance\""), "{name} lacks provenance");
        }
    }
    let sample = String::from_utf8_lossy(&files["tables/sample.csv"]).into_owned();
    assert!(sample.lines().any(|l| l.starts_with("en,30,")), "{sample}");

    std::fs::remove_dir_all(report.join("figures")).unwrap();
    let out = psychoprobe(&["--config", p(&cfg), "report", "--out", p(&report)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let again = tree(&report);
    let figures = |t: &std::collections::BTreeMap<String, Vec<u8>>| {
        t.iter()
            .filter(|(k, _)| k.starts_with("figures/") && !k.contains("tokens_"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(figures(&files), figures(&again));
}

#[test]
fn pipeline_without_transcripts_does_not_collect() {
    let dir = tempfile::tempdir().unwrap();
    let out = psychoprobe(&[
        "pipeline",
        "--transcripts",
        p(&dir.path().join("none")),
        "--out",
        p(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--collect"));
}
