use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn data_dir() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/dblp-acm-demo")
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_em-explain"))
        .args(args)
        .env_remove("EM_EXPLAIN_SEED")
        .output()
        .expect("run em-explain")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn train(dir: &Path) -> PathBuf {
    let model = dir.join("model.json");
    let out = run(&["train", "--dataset", &data_dir(), "--out", model.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    model
}

fn sha(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

#[test]
fn train_writes_model_and_f1_line() {
    let tmp = tempfile::tempdir().unwrap();
    let model = tmp.path().join("m1.json");
    let out = run(&["train", "--dataset", &data_dir(), "--out", model.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let line = json(&out);
    assert!(line["validation_f1"].as_f64().unwrap() > 0.6);
    let again = tmp.path().join("m2.json");
    run(&["train", "--dataset", &data_dir(), "--out", again.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(sha(&model), sha(&again));
}

#[test]
fn missing_dataset_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["train", "--dataset", "/no/such/dir", "--out", tmp.path().join("m").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["explain", "--bogus"]).status.code(), Some(2));
}

#[test]
fn explain_prints_both_sides() {
    let tmp = tempfile::tempdir().unwrap();
    let model = train(tmp.path());
    let out = run(&["explain", "--dataset", &data_dir(), "--matcher", model.to_str().unwrap(), "--pair-id", "17", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["pair_id"], "test/17");
    assert_eq!(v["for_a"]["side"], "a");
    assert_eq!(v["for_b"]["side"], "b");
    for side in ["for_a", "for_b"] {
        let e = &v[side];
        assert!(e["entries"].as_array().unwrap().len() <= 5);
        for key in ["granularity", "threshold", "score", "cfs_hat", "cfs_actual", "k_g", "seed"] {
            assert!(!e[key].is_null(), "missing {key}");
        }
    }
}

#[test]
fn ablations_shape_the_output() {
    let tmp = tempfile::tempdir().unwrap();
    let model = train(tmp.path());
    let base = ["explain", "--dataset", &data_dir(), "--matcher", model.to_str().unwrap(), "--pair-id", "test/4", "--seed", "1"];
    let mut a = base.to_vec();
    a.extend(["--ablate", "no-potential"]);
    let v = json(&run(&a));
    for side in ["for_a", "for_b"] {
        for e in v[side]["entries"].as_array().unwrap() {
            assert_eq!(e["p"].as_f64(), Some(0.0));
        }
    }
    let mut a = base.to_vec();
    a.extend(["--ablate", "no-dual"]);
    let v = json(&run(&a));
    assert_eq!(v["joint"]["side"], "both");
    assert!(v["joint"]["entries"].as_array().unwrap().len() <= 10);
    let mut a = base.to_vec();
    a.extend(["--ablate", "granularity=2"]);
    let v = json(&run(&a));
    assert_eq!(v["for_a"]["granularity"], 2);
    let mut a = base.to_vec();
    a.extend(["--ablate", "sideways"]);
    assert_eq!(run(&a).status.code(), Some(2));
}

const VOID: [&str; 6] = ["meta", "br", "img", "input", "link", "hr"];

/// Checks that every non-void element is closed in order; self-closing SVG
/// elements are accepted.
fn well_formed(html: &str) -> Result<(), String> {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = html;
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').ok_or("unterminated tag")? + start;
        let tag = &rest[start + 1..end];
        rest = &rest[end + 1..];
        if tag.starts_with('!') || tag.ends_with('/') {
            continue;
        }
        let name: String = tag
            .trim_start_matches('/')
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        if VOID.contains(&name.as_str()) {
            continue;
        }
        if tag.starts_with('/') {
            match stack.pop() {
                Some(open) if open == name => {}
                other => return Err(format!("</{name}> closes {other:?}")),
            }
        } else {
            stack.push(name);
        }
    }
    if stack.is_empty() {
        Ok(())
    } else {
        Err(format!("unclosed: {stack:?}"))
    }
}

#[test]
fn html_report_is_self_contained() {
    let tmp = tempfile::tempdir().unwrap();
    let model = train(tmp.path());
    let html = tmp.path().join("out/report.html");
    let out = run(&[
        "explain", "--dataset", &data_dir(), "--matcher", model.to_str().unwrap(), "--pair-id", "2", "--seed", "1",
        "--html", html.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&html).unwrap();
    assert!(text.starts_with("<!DOCTYPE html>"));
    assert_eq!(text.matches("<section").count(), 2);
    assert!(text.contains("<svg"));
    assert!(!text.contains("src=") && !text.contains("href="));
    well_formed(&text).unwrap();
}

#[test]
fn seed_from_env_and_required() {
    let tmp = tempfile::tempdir().unwrap();
    let model = train(tmp.path());
    let base = ["explain", "--dataset", &data_dir(), "--matcher", model.to_str().unwrap(), "--pair-id", "9"];
    assert_eq!(run(&base).status.code(), Some(2));
    let from_env = Command::new(env!("CARGO_BIN_EXE_em-explain"))
        .args(base)
        .env("EM_EXPLAIN_SEED", "4")
        .output()
        .unwrap();
    let mut a = base.to_vec();
    a.extend(["--seed", "4"]);
    assert_eq!(from_env.stdout, run(&a).stdout);
}

#[test]
fn config_file_mirrors_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let model = train(tmp.path());
    let config = tmp.path().join("run.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "dataset": data_dir(),
            "matcher": model,
            "seed": 3,
            "pair_id": "12",
            "ablate": ["no-dual"],
            "explainer": {"k": 2}
        })
        .to_string(),
    )
    .unwrap();
    let v = json(&run(&["--config", config.to_str().unwrap(), "explain"]));
    assert!(v["joint"]["entries"].as_array().unwrap().len() <= 4);
    // flags win over the file
    let v = json(&run(&["--config", config.to_str().unwrap(), "explain", "--ablate", "no-potential"]));
    assert!(v.get("for_a").is_some());
    std::fs::write(&config, r#"{"sed": 1}"#).unwrap();
    assert_eq!(run(&["--config", config.to_str().unwrap(), "explain"]).status.code(), Some(2));
}

#[test]
fn unreachable_matchers_exit_3() {
    for spec in ["cmd:true", "cmd:echo '{\"protocol\":\"other/9\"}'", "http://127.0.0.1:9"] {
        let out = run(&["explain", "--dataset", &data_dir(), "--matcher", spec, "--pair-id", "1", "--seed", "1"]);
        assert_eq!(out.status.code(), Some(3), "{spec}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["explain", "--dataset", &data_dir(), "--matcher", "/no/model.json", "--pair-id", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stdio_served_model_gives_identical_explanations() {
    let tmp = tempfile::tempdir().unwrap();
    let model = train(tmp.path());
    let m = model.to_str().unwrap();
    let served = format!("cmd:{} serve --matcher {m}", env!("CARGO_BIN_EXE_em-explain"));
    let local = run(&["explain", "--dataset", &data_dir(), "--matcher", m, "--pair-id", "30", "--seed", "2"]);
    let remote = run(&["explain", "--dataset", &data_dir(), "--matcher", &served, "--pair-id", "30", "--seed", "2"]);
    assert_eq!(remote.status.code(), Some(0), "{}", String::from_utf8_lossy(&remote.stderr));
    assert_eq!(local.stdout, remote.stdout);
}

#[test]
fn evaluate_metrics_write_csv_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let model = train(tmp.path());
    let m = model.to_str().unwrap();
    let out_dir = tmp.path().join("reports");
    let o = out_dir.to_str().unwrap();
    let common = ["evaluate", "--dataset", &data_dir(), "--matcher", m, "--seed", "1", "--out", o];

    let mut a = common.to_vec();
    a.extend(["--metric", "cf1", "--class", "nonmatch", "--n", "4"]);
    let v = json(&run(&a));
    assert_eq!(v["metric"], "cf1");
    assert_eq!(v["seed"], 1);
    assert_eq!(v["dataset_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["config"]["k"], 5);
    let row = &v["results"][0];
    assert_eq!(row["class"], "nonmatch");
    assert_eq!(row["pairs"], 4);
    for key in ["cr", "cp", "cf1"] {
        assert!(row.get(key).is_some());
    }
    let csv = std::fs::read_to_string(out_dir.join("cf1.csv")).unwrap();
    assert!(csv.starts_with("class,pairs,recalled,successful,cr,cp,cf1,seed,dataset_hash,config"));
    assert_eq!(csv.lines().count(), 2);

    let mut a = common.to_vec();
    a.extend(["--metric", "pe", "--class", "match", "--n", "3"]);
    let v = json(&run(&a));
    let row = &v["results"][0];
    assert!(row["mae"].as_f64().is_some() && row["pe"].as_f64().is_some());
    assert!(out_dir.join("pe.csv").exists());

    let mut a = common.to_vec();
    a.extend(["--metric", "stability", "--n", "2", "--seeds", "1,2", "--method", "lime"]);
    let v = json(&run(&a));
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    let mean = v["results"][0]["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));

    let mut a = common.to_vec();
    a.extend(["--metric", "sweep", "--axis", "k", "--values", "1,3", "--n", "2"]);
    let v = json(&run(&a));
    assert_eq!(v["results"]["rows"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with("seed,dataset_hash,config"));

    let mut a = common.to_vec();
    a.extend(["--metric", "accuracy"]);
    assert_eq!(run(&a).status.code(), Some(2));
    let mut a = common.to_vec();
    a.extend(["--metric", "stability", "--seeds", "1,2,3"]);
    assert_eq!(run(&a).status.code(), Some(2));
}
