//! End-to-end tests running the `viewmatch` binary: exit codes, report
//! content, determinism of generated artifacts, and JSON report conformance
//! to the schemas under `docs/`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn viewmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs")
        .join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

/// Minimal structural validator for the draft-07 subset the schemas use:
/// `type` (single or alternatives), `enum`, `properties` / `required` /
/// `additionalProperties: false`, `items`, `minItems` / `maxItems`.
fn validate(schema: &Value, value: &Value, path: &str, errors: &mut Vec<String>) {
    if let Some(types) = schema.get("type") {
        let allowed: Vec<&str> = match types {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => panic!("malformed schema at {path}"),
        };
        let matches_one = allowed.iter().any(|t| match *t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            other => panic!("unsupported type `{other}` at {path}"),
        });
        if !matches_one {
            errors.push(format!("{path}: expected {allowed:?}, got {value}"));
            return;
        }
    }
    if let Some(Value::Array(options)) = schema.get("enum") {
        if !options.contains(value) {
            errors.push(format!("{path}: {value} not in {options:?}"));
        }
    }
    if let Some(obj) = value.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        if let Some(Value::Array(required)) = schema.get("required") {
            for key in required.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    errors.push(format!("{path}: missing required key `{key}`"));
                }
            }
        }
        for (key, child) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(sub, child, &format!("{path}.{key}"), errors),
                None => {
                    if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                        errors.push(format!("{path}: unexpected key `{key}`"));
                    }
                }
            }
        }
    }
    if let Some(arr) = value.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (arr.len() as u64) < min {
                errors.push(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
            if (arr.len() as u64) > max {
                errors.push(format!("{path}: more than {max} items"));
            }
        }
        if let Some(items) = schema.get("items") {
            for (i, child) in arr.iter().enumerate() {
                validate(items, child, &format!("{path}[{i}]"), errors);
            }
        }
    }
}

fn assert_valid(schema_name: &str, json_text: &str) -> Value {
    let value: Value = serde_json::from_str(json_text)
        .unwrap_or_else(|e| panic!("invalid JSON from CLI: {e}\n{json_text}"));
    let mut errors = Vec::new();
    validate(&schema(schema_name), &value, "$", &mut errors);
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
    value
}

fn temp_dir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn gen_fixture(dir: &Path, kind: &str, seed: &str, name: &str) -> PathBuf {
    let out = dir.join(name);
    let run = viewmatch(&[
        "gen-fixture",
        kind,
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    out
}

#[test]
fn matching_fixture_scores_clean_with_exact_epipoles() {
    let dir = temp_dir();
    let fixture = gen_fixture(dir.path(), "match", "0", "match.txt");
    let run = viewmatch(&[
        "score-pair",
        fixture.to_str().unwrap(),
        "--epipoles",
        "gt",
        "--json",
    ]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    let report = assert_valid("score-pair.schema.json", &stdout(&run));
    let aggregate = report["aggregate"].as_f64().expect("aggregate present");
    assert!(aggregate < 1e-8, "matching fixture scored {aggregate}");
    assert_eq!(report["epipoles"]["mode"], "provided");
    assert_eq!(report["coplanar_warning"], Value::Bool(false));
}

#[test]
fn nonmatching_fixture_scores_far_above_matching() {
    let dir = temp_dir();
    let fixture = gen_fixture(dir.path(), "nonmatch", "0", "nonmatch.txt");
    let run = viewmatch(&[
        "score-pair",
        fixture.to_str().unwrap(),
        "--epipoles",
        "gt",
        "--json",
    ]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    let report = assert_valid("score-pair.schema.json", &stdout(&run));
    let aggregate = report["aggregate"].as_f64().unwrap();
    assert!(aggregate > 1e-2, "non-matching fixture scored only {aggregate}");
}

#[test]
fn fixture_generation_is_deterministic() {
    let dir = temp_dir();
    let a = gen_fixture(dir.path(), "noisy:1.5", "11", "a.txt");
    let b = gen_fixture(dir.path(), "noisy:1.5", "11", "b.txt");
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn fixture_survives_a_parse_and_rewrite_cycle_byte_for_byte() {
    let dir = temp_dir();
    let path = gen_fixture(dir.path(), "match", "4", "roundtrip.txt");
    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = viewmatch_core_roundtrip(&text);
    assert_eq!(parsed, text);
}

/// Parses and re-serializes through the library the CLI itself uses.
fn viewmatch_core_roundtrip(text: &str) -> String {
    viewmatch::fileio::CorrespondenceFile::parse(text)
        .expect("generated fixture parses")
        .to_text()
}

#[test]
fn planar_fixture_warns_and_signals_degeneracy() {
    let dir = temp_dir();
    let fixture = gen_fixture(dir.path(), "planar", "0", "planar.txt");
    let run = viewmatch(&["score-pair", fixture.to_str().unwrap(), "--epipoles", "gt"]);
    assert_eq!(exit_code(&run), 2, "{}", stderr(&run));
    let text = stdout(&run);
    assert!(
        text.contains("single plane"),
        "missing coplanarity warning in:\n{text}"
    );
}

#[test]
fn file_with_three_pairs_is_an_input_error() {
    let dir = temp_dir();
    let path = dir.path().join("short.txt");
    std::fs::write(
        &path,
        "viewmatch-correspondences v1\nreference t\nquery q\npairs 3\n\
         1 2 3 4\n5 6 7 8\n9 10 11 12\n",
    )
    .unwrap();
    let run = viewmatch(&["score-pair", path.to_str().unwrap()]);
    assert_eq!(exit_code(&run), 1);
    let err = stderr(&run);
    assert!(
        err.contains("line 4") && err.contains("at least 4 pairs"),
        "unhelpful message:\n{err}"
    );
}

#[test]
fn missing_file_is_an_input_error() {
    let run = viewmatch(&["score-pair", "/nonexistent/nowhere.txt"]);
    assert_eq!(exit_code(&run), 1);
}

#[test]
fn match_ranks_templates_and_reports_corrupt_files_as_skipped() {
    let dir = temp_dir();
    gen_fixture(dir.path(), "match", "0", "a.txt");
    gen_fixture(dir.path(), "nonmatch", "5", "b.txt");
    std::fs::write(dir.path().join("broken.txt"), "not a correspondence file\n").unwrap();
    let run = viewmatch(&["match", dir.path().to_str().unwrap(), "--epipoles", "gt", "--json"]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    let report = assert_valid("match.schema.json", &stdout(&run));
    assert_eq!(report["best_template"], "match-s0");

    let templates = report["templates"].as_array().unwrap();
    assert_eq!(templates.len(), 2);
    // Ascending: the matching template leads.
    assert_eq!(templates[0]["id"], "match-s0");
    let first = templates[0]["aggregate"].as_f64().unwrap();
    let second = templates[1]["aggregate"].as_f64().unwrap();
    assert!(first < second);

    let skipped = report["skipped_files"].as_array().unwrap();
    assert_eq!(skipped.len(), 1);
    assert_eq!(skipped[0]["file"], "broken.txt");
    assert!(skipped[0]["reason"].as_str().unwrap().contains("header"));
}

#[test]
fn match_with_only_corrupt_files_is_degenerate() {
    let dir = temp_dir();
    std::fs::write(dir.path().join("x.txt"), "junk\n").unwrap();
    let run = viewmatch(&["match", dir.path().to_str().unwrap()]);
    assert_eq!(exit_code(&run), 2);
}

#[test]
fn match_against_a_single_template_still_names_a_winner() {
    let dir = temp_dir();
    gen_fixture(dir.path(), "match", "3", "only.txt");
    let run = viewmatch(&["match", dir.path().to_str().unwrap(), "--epipoles", "gt", "--json"]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    let report = assert_valid("match.schema.json", &stdout(&run));
    assert_eq!(report["best_template"], "match-s3");
    assert_eq!(report["templates"].as_array().unwrap().len(), 1);
}

#[test]
fn match_fuses_class_scores_for_slash_separated_ids() {
    let dir = temp_dir();
    let a = gen_fixture(dir.path(), "match", "0", "a.txt");
    let b = gen_fixture(dir.path(), "nonmatch", "5", "b.txt");
    let c = gen_fixture(dir.path(), "nonmatch", "9", "c.txt");
    for (path, id) in [(&a, "mug/front"), (&b, "mug/back"), (&c, "stapler/front")] {
        let text = std::fs::read_to_string(path).unwrap();
        let mut parsed = viewmatch::fileio::CorrespondenceFile::parse(&text).unwrap();
        parsed.reference_id = id.to_owned();
        std::fs::write(path, parsed.to_text()).unwrap();
    }
    let run = viewmatch(&["match", dir.path().to_str().unwrap(), "--epipoles", "gt", "--json"]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    let report = assert_valid("match.schema.json", &stdout(&run));
    assert_eq!(report["best_template"], "mug/front");
    let classes = report["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 2);
    // Min fusion: the `mug` class inherits its matching view's tiny score.
    assert_eq!(classes[0]["class"], "mug");
    assert!(classes[0]["score"].as_f64().unwrap() < classes[1]["score"].as_f64().unwrap());
    assert_eq!(classes[0]["templates"], 2);
}

#[test]
fn duplicate_template_ids_keep_first_and_skip_the_rest() {
    let dir = temp_dir();
    gen_fixture(dir.path(), "match", "0", "a.txt");
    gen_fixture(dir.path(), "match", "0", "b.txt");
    let run = viewmatch(&["match", dir.path().to_str().unwrap(), "--epipoles", "gt", "--json"]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    let report = assert_valid("match.schema.json", &stdout(&run));
    assert_eq!(report["templates"].as_array().unwrap().len(), 1);
    let skipped = report["skipped_files"].as_array().unwrap();
    assert_eq!(skipped.len(), 1);
    assert!(skipped[0]["reason"].as_str().unwrap().contains("duplicate"));
}

#[test]
fn synth_surface_zero_noise_separates_and_reruns_identically() {
    let dir = temp_dir();
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "synth-surface".to_owned(),
            "--sigma".into(),
            "0".into(),
            "--yaw".into(),
            "-60:60:30".into(),
            "--pitch".into(),
            "0:60:30".into(),
            "--trials".into(),
            "2".into(),
            "--out".into(),
            out.to_str().unwrap().to_owned(),
            "--json".into(),
        ]
    };
    let run_a = viewmatch(&args(&csv_a).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(exit_code(&run_a), 0, "{}", stderr(&run_a));
    let summary = assert_valid("synth-surface.schema.json", &stdout(&run_a));
    assert!(summary["min_separation"].as_f64().unwrap() > 0.0);
    assert!(summary["mean_match"].as_f64().unwrap() < 1e-6);

    let run_b = viewmatch(&args(&csv_b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(exit_code(&run_b), 0, "{}", stderr(&run_b));
    assert_eq!(std::fs::read(&csv_a).unwrap(), std::fs::read(&csv_b).unwrap());

    // Every scored row keeps the matching surface at numerical zero and the
    // non-matching surface clear of it.
    let text = std::fs::read_to_string(&csv_a).unwrap();
    let mut scored = 0;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 7, "unexpected row: {line}");
        if cols[6] != "ok" {
            continue;
        }
        scored += 1;
        let m: f64 = cols[3].parse().unwrap();
        let n: f64 = cols[4].parse().unwrap();
        assert!(m < 1e-6, "match score {m} at {line}");
        assert!(n > m, "no separation at {line}");
    }
    assert!(scored >= 10, "only {scored} scored poses");
}

#[test]
fn synth_surface_refuses_an_unwritable_output_path() {
    let dir = temp_dir();
    let out = dir.path().join("no-such-dir").join("grid.csv");
    let run = viewmatch(&[
        "synth-surface",
        "--yaw",
        "0:30:30",
        "--pitch",
        "10:40:30",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 1, "{}", stdout(&run));
    assert!(stderr(&run).contains("error:"), "{}", stderr(&run));
}

#[test]
fn gen_fixture_json_report_matches_schema() {
    let dir = temp_dir();
    let out = dir.path().join("f.txt");
    let run = viewmatch(&[
        "gen-fixture",
        "noisy:2",
        "--count",
        "10",
        "--out",
        out.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(exit_code(&run), 0, "{}", stderr(&run));
    let report = assert_valid("gen-fixture.schema.json", &stdout(&run));
    assert_eq!(report["pairs"], 10);
    assert_eq!(report["ground_truth_epipoles"], Value::Bool(true));
}

#[test]
fn unknown_fixture_kind_is_an_input_error() {
    let run = viewmatch(&["gen-fixture", "wobble", "--out", "/tmp/never-written.txt"]);
    assert_eq!(exit_code(&run), 1);
    assert!(stderr(&run).contains("unknown fixture kind"));
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = temp_dir();
    let fixture = gen_fixture(dir.path(), "match", "0", "f.txt");
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "epipoles = \"gt\"\ncap = 500\n").unwrap();

    let with_config = viewmatch(&[
        "score-pair",
        fixture.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(exit_code(&with_config), 0, "{}", stderr(&with_config));
    let report = assert_valid("score-pair.schema.json", &stdout(&with_config));
    assert_eq!(report["epipoles"]["mode"], "provided");

    let overridden = viewmatch(&[
        "score-pair",
        fixture.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--epipoles",
        "estimate",
        "--json",
    ]);
    // Eight exact pairs: estimation succeeds and reports its mode.
    assert_eq!(exit_code(&overridden), 0, "{}", stderr(&overridden));
    let report = assert_valid("score-pair.schema.json", &stdout(&overridden));
    assert_eq!(report["epipoles"]["mode"], "estimated");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = temp_dir();
    let fixture = gen_fixture(dir.path(), "match", "0", "f.txt");
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "bogus = 1\n").unwrap();
    let run = viewmatch(&[
        "score-pair",
        fixture.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 1);
    assert!(stderr(&run).contains("bogus"));
}

#[test]
fn help_and_bad_flags_use_conventional_exit_codes() {
    assert_eq!(exit_code(&viewmatch(&["--help"])), 0);
    assert_eq!(exit_code(&viewmatch(&["score-pair", "--help"])), 0);
    assert_eq!(exit_code(&viewmatch(&["--definitely-not-a-flag"])), 1);
    assert_eq!(exit_code(&viewmatch(&[])), 1);
}
