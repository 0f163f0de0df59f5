// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qng(cache: &Path, args: &[&str]) -> Run {
    let Output {
        status,
        stdout,
        stderr,
    } = Command::new(env!("CARGO_BIN_EXE_qng"))
        .args(args)
        .env("QNG_CACHE_DIR", cache)
        .output()
        .expect("qng runs");
    Run {
        code: status.code().expect("exited normally"),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn assert_valid(schema: &str, doc: &Value) {
    let text = fs::read_to_string(schema_dir().join(format!("{schema}.schema.json"))).unwrap();
    let validator = jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

fn json(run: &Run) -> Value {
    serde_json::from_str(&run.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}\n{}", run.stdout, run.stderr))
}

fn without_wall_time(mut v: Value) -> Value {
    v["manifest"].as_object_mut().unwrap().remove("wall_time_s");
    v
}

fn assessment<'a>(doc: &'a Value, kind: &str) -> &'a Value {
    doc["report"]["assessments"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["kind"] == kind)
        .unwrap()
}

fn scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn genuine_row_matches_reference_values() {
    let cache = TempDir::new().unwrap();
    let run = qng(
        cache.path(),
        &[
            "thresholds",
            "--pair",
            "0,1",
            "--pair",
            "0,2",
            "--pair",
            "0,3",
            "--pair",
            "0,4",
            "--pair",
            "0,6",
            "--kind",
            "genuine-n",
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let doc = json(&run);
    assert_valid("thresholds", &doc);
    for (key, want) in [
        ("0,1", 0.93),
        ("0,2", 0.86),
        ("0,3", 0.81),
        ("0,4", 0.80),
        ("0,6", 0.80),
    ] {
        let entry = &doc["table"][key]["genuine-n"];
        assert_eq!(entry["status"], "ok");
        let v = entry["value"].as_f64().unwrap();
        assert!((v - want).abs() <= 0.01, "{key}: {v}");
    }
}

#[test]
fn classical_single_phonon_threshold_matches_closed_form() {
    // best coherent state: 2|α|e^{-|α|²} peaks at |α|² = 1/2
    let oracle = 2f64.sqrt() * (-0.5f64).exp();
    let cache = TempDir::new().unwrap();
    let run = qng(
        cache.path(),
        &["thresholds", "--pair", "0,1", "--kind", "classical"],
    );
    assert_eq!(run.code, 0);
    let v = json(&run)["table"]["0,1"]["classical"]["value"]
        .as_f64()
        .unwrap();
    assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
    assert!((v - 0.8578).abs() < 1e-4);
}

#[test]
fn thresholds_without_pairs_is_a_usage_error() {
    let cache = TempDir::new().unwrap();
    let run = qng(cache.path(), &["thresholds"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("--pair"));
}

#[test]
fn malformed_arguments_exit_with_one() {
    let cache = TempDir::new().unwrap();
    assert_eq!(qng(cache.path(), &["thresholds", "--pair", "2,2"]).code, 1);
    assert_eq!(
        qng(
            cache.path(),
            &["thresholds", "--pair", "0,1", "--kind", "quantum"]
        )
        .code,
        1
    );
    assert_eq!(qng(cache.path(), &["bogus"]).code, 1);
    assert_eq!(qng(cache.path(), &["--help"]).code, 0);
    assert_eq!(qng(cache.path(), &["--version"]).code, 0);
}

#[test]
fn certify_four_phonon_measurement() {
    let cache = TempDir::new().unwrap();
    let run = qng(
        cache.path(),
        &[
            "certify",
            "--pair",
            "0,4",
            "--measured",
            "0.84",
            "--uncertainty",
            "0.04",
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let doc = json(&run);
    assert_valid("certify", &doc);
    let genuine = assessment(&doc, "genuine-n");
    assert_eq!(genuine["verdict"], true);
    let thr = genuine["threshold"].as_f64().unwrap();
    let depth = doc["depth"]["value"].as_f64().unwrap();
    assert!((depth - 2.0 / 16.0 * (0.84 / thr).ln()).abs() < 1e-12);
    assert!((depth - 0.01).abs() < 0.005, "depth {depth}");
    assert_eq!(doc["depth"]["kind"], "genuine-n");
}

#[test]
fn certify_six_phonon_measurement_is_marginal() {
    let cache = TempDir::new().unwrap();
    let run = qng(
        cache.path(),
        &[
            "certify",
            "--pair",
            "0,6",
            "--measured",
            "0.80",
            "--uncertainty",
            "0.05",
        ],
    );
    let doc = json(&run);
    assert_valid("certify", &doc);
    assert_eq!(assessment(&doc, "genuine-n")["marginal"], true);
}

#[test]
fn certify_exit_codes() {
    let cache = TempDir::new().unwrap();
    let out_of_range = qng(
        cache.path(),
        &["certify", "--pair", "0,1", "--measured", "1.5"],
    );
    assert_eq!(out_of_range.code, 1);
    assert!(out_of_range.stdout.is_empty());

    // below the classical bound of 0.8578
    let weak = qng(
        cache.path(),
        &["certify", "--pair", "0,1", "--measured", "0.5"],
    );
    assert_eq!(weak.code, 3);
    let doc = json(&weak);
    assert_valid("certify", &doc);
    assert!(doc["report"]["assessments"]
        .as_array()
        .unwrap()
        .iter()
        .all(|a| a["verdict"] == false));
}

#[test]
fn certify_depth_kind_is_selectable() {
    let cache = TempDir::new().unwrap();
    let run = qng(
        cache.path(),
        &[
            "certify",
            "--pair",
            "0,2",
            "--measured",
            "0.95",
            "--kind",
            "gaussian-min",
        ],
    );
    assert_eq!(run.code, 0);
    let doc = json(&run);
    assert_eq!(doc["depth"]["kind"], "gaussian-min");
    assert_eq!(
        doc["depth"]["value"],
        assessment(&doc, "gaussian-min")["depth"]
    );
}

#[test]
fn mc_verify_examples() {
    let cache = TempDir::new().unwrap();
    let run = qng(
        cache.path(),
        &[
            "mc-verify",
            "--kind",
            "genuine-n",
            "--pair",
            "0,3",
            "--samples",
            "100000",
            "--seed",
            "1",
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let doc = json(&run);
    assert_valid("mc-verify", &doc);
    assert_eq!(doc["report"]["violations"], 0);
    assert!((doc["report"]["threshold"].as_f64().unwrap() - 0.81).abs() < 0.01);

    let run = qng(
        cache.path(),
        &[
            "mc-verify",
            "--kind",
            "classical",
            "--pair",
            "0,1",
            "--samples",
            "10000",
            "--seed",
            "1",
        ],
    );
    assert_eq!(run.code, 0);
    assert!(json(&run)["report"]["max_observed"].as_f64().unwrap() <= 0.8578 + 1e-3);

    let run = qng(
        cache.path(),
        &[
            "mc-verify",
            "--kind",
            "gaussian-min",
            "--pair",
            "0,2",
            "--samples",
            "1000",
            "--seed",
            "1",
        ],
    );
    assert_eq!(run.code, 0);
    let doc = json(&run);
    assert_valid("mc-verify", &doc);
    assert!(doc["report"]["closest_approach"].as_f64().unwrap() > 0.0);
}

#[test]
fn mc_verify_rejects_small_sample_counts() {
    let cache = TempDir::new().unwrap();
    assert_eq!(
        qng(
            cache.path(),
            &["mc-verify", "--pair", "0,1", "--samples", "10"]
        )
        .code,
        1
    );
}

#[test]
fn simulate_ideal_two_phonon_contrast_is_one() {
    let dir = TempDir::new().unwrap();
    let config = scenario(dir.path(), "s.toml", "pair = [0, 2]\ndelays = [0.0]\n");
    let out = dir.path().join("out");
    let run = qng(
        dir.path(),
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_valid("simulate-summary", &summary);
    let c = summary["scans"][0]["points"][0]["contrast"]
        .as_f64()
        .unwrap();
    assert!((c - 1.0).abs() < 5e-4, "contrast {c}");

    let fringes = fs::read_to_string(out.join("fringes_0_2.csv")).unwrap();
    assert!(fringes.starts_with("delay,phase,p_e\n"));
    assert_eq!(fringes.lines().count(), 1 + 16);
    let depth = fs::read_to_string(out.join("depth_0_2.csv")).unwrap();
    assert!(depth.starts_with("delay,contrast,contrast_err,depth,thermal_limit_depth\n"));
}

#[test]
fn simulate_reads_json_scenarios() {
    let dir = TempDir::new().unwrap();
    let config = scenario(
        dir.path(),
        "s.json",
        r#"{"pairs": [[0, 1]], "delays": [0.0, 0.001], "phases": 8}"#,
    );
    let out = dir.path().join("out");
    let run = qng(
        dir.path(),
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(
        fs::read_to_string(out.join("fringes_0_1.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 2 * 8
    );
}

#[test]
fn simulate_four_phonon_depth_is_about_twice_six_phonon() {
    let dir = TempDir::new().unwrap();
    let config = scenario(
        dir.path(),
        "s.toml",
        "pairs = [[0, 4], [0, 6]]\ndelays = [0.0]\n",
    );
    let out = dir.path().join("out");
    let run = qng(
        dir.path(),
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let d = |i: usize| summary["scans"][i]["points"][0]["depth"].as_f64().unwrap();
    let ratio = d(0) / d(1);
    assert!((1.8..=2.4).contains(&ratio), "ratio {ratio}");
}

/// Recovers the contrast ratio between simulated and channel depths.
fn contrast_ratio(depth: f64, limit: f64, gap: f64) -> f64 {
    ((depth - limit) * gap * gap / 2.0).exp()
}

#[test]
fn simulate_heating_tracks_channel_limit_for_one_phonon_spacing() {
    let dir = TempDir::new().unwrap();
    let config = scenario(
        dir.path(),
        "s.toml",
        "pair = [1, 2]\ndelays = [0.0, 0.005, 0.01, 0.02, 0.03]\n[noise]\nheating_rate = 3.2\n",
    );
    let out = dir.path().join("out");
    let run = qng(
        dir.path(),
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let mut rows = csv::Reader::from_path(out.join("depth_1_2.csv")).unwrap();
    let mut count = 0;
    for row in rows.records() {
        let row = row.unwrap();
        let depth: f64 = row[3].parse().unwrap();
        let limit: f64 = row[4].parse().unwrap();
        let ratio = contrast_ratio(depth, limit, 1.0);
        assert!(
            (ratio - 1.0).abs() <= 0.01,
            "delay {}: ratio {ratio}",
            &row[0]
        );
        count += 1;
    }
    assert_eq!(count, 5);
}

#[test]
fn simulate_heating_keeps_vacuum_pair_above_channel_limit() {
    // heated populations keep interfering, so the single-phonon fringe
    // outlives the coherence of the heated ideal state
    let dir = TempDir::new().unwrap();
    let config = scenario(
        dir.path(),
        "s.toml",
        "pair = [0, 1]\ndelays = [0.0, 0.01, 0.03]\n[noise]\nheating_rate = 3.2\n",
    );
    let out = dir.path().join("out");
    let run = qng(
        dir.path(),
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let points = summary["scans"][0]["points"].as_array().unwrap();
    let at = |i: usize, key: &str| points[i][key].as_f64().unwrap();
    assert!((at(0, "depth") - at(0, "thermal_limit_depth")).abs() < 1e-9);
    for i in 1..points.len() {
        assert!(at(i, "depth") > at(i, "thermal_limit_depth"));
        assert!(at(i, "depth") < at(i - 1, "depth"));
    }
}

#[test]
fn simulate_failure_names_the_delay() {
    let dir = TempDir::new().unwrap();
    let config = scenario(
        dir.path(),
        "s.toml",
        "pair = [0, 6]\ndelays = [0.0, 0.001]\ntrunc_dim = 5\n",
    );
    let out = dir.path().join("out");
    let run = qng(
        dir.path(),
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("delay 0 s"), "{}", run.stderr);
    assert!(out.join("summary.json").exists());
}

#[test]
fn simulate_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    for (name, body) in [
        (
            "unknown.toml",
            "pair = [0, 2]\ndelays = [0.0]\ncolour = 3\n",
        ),
        ("unsorted.toml", "pair = [0, 2]\ndelays = [0.01, 0.0]\n"),
        ("nopair.toml", "delays = [0.0]\n"),
        (
            "negative.toml",
            "pair = [0, 2]\ndelays = [0.0]\n[noise]\nheating_rate = -1.0\n",
        ),
    ] {
        let config = scenario(dir.path(), name, body);
        let run = qng(
            dir.path(),
            &[
                "simulate",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
        );
        assert_eq!(run.code, 1, "{name}: {}", run.stderr);
    }
    let missing = dir.path().join("absent.toml");
    assert_eq!(
        qng(
            dir.path(),
            &[
                "simulate",
                "--config",
                missing.to_str().unwrap(),
                "--out",
                out.to_str().unwrap()
            ]
        )
        .code,
        1
    );
}

#[test]
fn reruns_reproduce_outputs() {
    let dir = TempDir::new().unwrap();
    let config = scenario(
        dir.path(),
        "s.toml",
        "pair = [0, 2]\ndelays = [0.0, 0.002]\nshots = 200\nseed = 11\n[noise]\ndephasing_rate = 20.0\npulse_error = 0.01\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = qng(
            dir.path(),
            &[
                "simulate",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
        );
        assert_eq!(run.code, 0, "{}", run.stderr);
    }
    for file in ["fringes_0_2.csv", "depth_0_2.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let summary = |d: &Path| -> Value {
        serde_json::from_str(&fs::read_to_string(d.join("summary.json")).unwrap()).unwrap()
    };
    let (sa, sb) = (
        without_wall_time(summary(&a)),
        without_wall_time(summary(&b)),
    );
    assert_eq!(sa["scans"], sb["scans"]);
    assert_eq!(sa["manifest"]["seeds"], serde_json::json!([11]));
    // only the output directory differs in the parameter echo
    assert_ne!(
        sa["manifest"]["parameters"]["out"],
        sb["manifest"]["parameters"]["out"]
    );

    let mc = || {
        without_wall_time(json(&qng(
            dir.path(),
            &[
                "mc-verify",
                "--pair",
                "0,2",
                "--samples",
                "5000",
                "--seed",
                "9",
            ],
        )))
    };
    assert_eq!(mc(), mc());
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let dir = TempDir::new().unwrap();
    let config = scenario(
        dir.path(),
        "s.toml",
        "pair = [0, 1]\ndelays = [0.0]\nshots = 100\nseed = 1\n",
    );
    let out = dir.path().join("out");
    let run = qng(
        dir.path(),
        &[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "5",
        ],
    );
    assert_eq!(run.code, 0);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"]["seed"], 5);
    assert_eq!(summary["manifest"]["seeds"], serde_json::json!([5]));
}

#[test]
fn threshold_cache_is_written_and_reused() {
    let cache = TempDir::new().unwrap();
    let first = qng(
        cache.path(),
        &[
            "thresholds",
            "--pair",
            "0,2",
            "--kind",
            "gaussian-min",
            "--trunc-dim",
            "96",
        ],
    );
    assert_eq!(first.code, 0);
    let file = cache.path().join("thresholds-trunc96.json");
    let stored: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(stored.as_array().unwrap().len(), 1);

    let second = qng(
        cache.path(),
        &[
            "thresholds",
            "--pair",
            "0,2",
            "--kind",
            "gaussian-min",
            "--trunc-dim",
            "96",
        ],
    );
    let (a, b) = (json(&first), json(&second));
    assert_eq!(a["table"], b["table"]);
    assert_eq!(b["manifest"]["trunc_dim"], 96);

    // a corrupt cache only warns
    fs::write(&file, "not json").unwrap();
    let third = qng(
        cache.path(),
        &[
            "thresholds",
            "--pair",
            "0,2",
            "--kind",
            "gaussian-min",
            "--trunc-dim",
            "96",
        ],
    );
    assert_eq!(third.code, 0);
    assert!(third.stderr.contains("warning"));
    assert_eq!(json(&third)["table"], a["table"]);
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("nested/report.json");
    let run = qng(
        dir.path(),
        &[
            "certify",
            "--pair",
            "0,1",
            "--measured",
            "0.99",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(run.code, 0);
    assert!(run.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_valid("certify", &doc);
    assert_eq!(doc["manifest"]["command"], "certify");
}
