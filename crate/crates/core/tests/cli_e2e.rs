//! The `linkstudy` binary, driven the way a user would run it.

mod common;

use std::path::Path;

use common::{fixtures, linkstudy, run_ids, run_ok, write_ratings};
use serde_json::Value;

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}

#[test]
fn registry_stages_in_order() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path();
    for stage in ["harvest", "audit", "rank", "report"] {
        run_ok(linkstudy(o).arg(stage));
    }
    let report = read_json(&o.join("report/ecosystem.json"));
    assert_eq!(report["share_with_repo_link"], 0.6);
    assert_eq!(report["outdated_repo_share"], 0.25);
    let text = std::fs::read_to_string(o.join("report/ecosystem.txt")).unwrap();
    assert!(text.contains("60.0%"), "{text}");
    let rank = read_json(&o.join("rank/pagerank.json"));
    assert_eq!(rank["converged"], true);

    let sample = run_ok(linkstudy(o).args(["sample", "-n", "3"]));
    let picked = std::fs::read_to_string(o.join("sample/participants.txt")).unwrap();
    assert_eq!(picked.lines().count(), 3);
    assert!(!sample.stdout.is_empty());
}

#[test]
fn harvest_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for o in [a.path(), b.path()] {
        run_ok(linkstudy(o).arg("harvest"));
        run_ok(linkstudy(o).arg("audit"));
    }
    for f in ["snapshot/packages.jsonl", "snapshot/links.jsonl", "snapshot/links.audited.jsonl"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sample_is_seeded_from_cli_or_config() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path();
    run_ok(linkstudy(o).arg("harvest"));
    let draw = |seed: &str| {
        run_ok(linkstudy(o).args(["--seed", seed, "sample", "-n", "4"]));
        std::fs::read_to_string(o.join("sample/participants.txt")).unwrap()
    };
    assert_eq!(draw("1"), draw("1"));
    assert_ne!(draw("1"), draw("2"));
}

#[test]
fn model_runs_are_reproducible() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path();
    run_ok(linkstudy(o).arg("ingest"));
    run_ok(linkstudy(o).args(["--mock", "model", "--survey", "repository_url", "--runs", "2"]));
    let ids = run_ids(o);
    assert_eq!(ids.len(), 2);
    let merged = |id: &str| {
        let run = read_json(&o.join("runs").join(format!("{id}.json")));
        run["questions"].as_array().unwrap().iter().map(|q| q["merged"].clone()).collect::<Vec<_>>()
    };
    assert_eq!(merged(&ids[0]), merged(&ids[1]));
    let run = read_json(&o.join("runs").join(format!("{}.json", ids[0])));
    assert_eq!(run["seed"], 42);
    assert_eq!(run["temperature"], 0.0);
    assert_eq!(run["complete"], true);
}

#[test]
fn errors_are_one_line_json() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path();
    let res = linkstudy(o).arg("audit").output().unwrap();
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8(res.stderr).unwrap();
    let last = stderr.lines().last().unwrap();
    let err: Value = serde_json::from_str(last).unwrap();
    assert_eq!(err["command"], "audit");
    assert!(err["error"].as_str().unwrap().contains("harvest"));

    run_ok(linkstudy(o).arg("harvest"));
    let res = linkstudy(o).args(["sample", "-n", "500"]).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    let out = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["model"],
        vec!["model", "--survey", "nowhere"],
        vec!["--replay", "a", "--record", "b", "harvest"],
        vec!["ingest", "--csv", "x.csv"],
    ] {
        let res = linkstudy(out.path()).args(&args).output().unwrap();
        assert_eq!(res.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\n[llm]\nbatch_size = 0\n").unwrap();
    let res = std::process::Command::new(env!("CARGO_BIN_EXE_linkstudy"))
        .args(["--config", cfg.to_str().unwrap(), "ingest"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8(res.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!(err["field"], "llm.batch_size");
}

#[test]
fn evaluation_round_trip() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path();
    run_ok(linkstudy(o).arg("ingest"));
    run_ok(linkstudy(o).args(["--mock", "model", "--survey", "donation_platform_url"]));
    let id = run_ids(o).pop().unwrap();
    let form = o.join("form.html");
    run_ok(linkstudy(o).args(["evalform", "--run", &id, "--out", form.to_str().unwrap()]));
    let html = std::fs::read_to_string(&form).unwrap();
    assert!(!html.contains("http://") && !html.contains("https://"));

    write_ratings(&form, &o.join("ratings"), 3);
    run_ok(linkstudy(o).args(["evalreport", "--ratings", o.join("ratings").to_str().unwrap()]));
    let report = read_json(&o.join("reports/quality-donation_platform_url.json"));
    assert_eq!(report["raters"], 3);
    assert_eq!(report["rejected"].as_array().unwrap().len(), 0);
    let o_row = &report["overall"];
    let sum: f64 = ["meets_all", "uninterpretable", "not_fitting", "too_specific"]
        .iter()
        .map(|k| o_row[k].as_f64().unwrap())
        .sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

fn config_schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/config.schema.json");
    jsonschema::validator_for(&read_json(&path)).unwrap()
}

fn toml_as_json(text: &str) -> Value {
    serde_json::to_value(toml::from_str::<toml::Value>(text).unwrap()).unwrap()
}

#[test]
fn fixture_config_matches_published_schema() {
    let text = std::fs::read_to_string(fixtures().join("linkstudy.toml")).unwrap();
    let errors: Vec<String> = config_schema().iter_errors(&toml_as_json(&text)).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn schema_and_loader_agree_on_rejections() {
    let schema = config_schema();
    for bad in ["out_dir = \"x\"\n", "seed = 1\ncolour = \"red\"\n", "seed = 1\n[llm]\nmodle = \"x\"\n"] {
        assert!(!schema.is_valid(&toml_as_json(bad)), "{bad}");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, bad).unwrap();
        assert!(linkstudy::config::WorkbenchConfig::load(&p).is_err(), "{bad}");
    }
}
