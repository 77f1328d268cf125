mod common;

use std::process::Command;

use common::{cli, p, write_dataset};
use dcu::ingest::{write_embeddings, EmbeddingStore, QuestionRecord};
use dcu::synthetic::{generate, SyntheticConfig};
use dcu::vmf::{sample_vmf, UnitVector, VmfParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn store_with(dim: usize, entries: &[(&str, Vec<f32>)]) -> EmbeddingStore {
    let mut s = EmbeddingStore::new(dim).unwrap();
    for (k, v) in entries {
        s.insert(*k, v.clone()).unwrap();
    }
    s
}

fn record(v: Value) -> QuestionRecord {
    serde_json::from_value(v).unwrap()
}

#[test]
fn fit_identical_vectors_clamps() {
    let dir = tempfile::tempdir().unwrap();
    let keys: Vec<String> = (0..10).map(|i| format!("v{i}")).collect();
    let mut store = EmbeddingStore::new(3).unwrap();
    for k in &keys {
        store.insert(k.clone(), vec![0.3, -0.4, 1.2]).unwrap();
    }
    let path = dir.path().join("e.dcue");
    write_embeddings(&store, &path).unwrap();

    let out = cli(&["fit", "--embeddings", &p(&path)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let line = &out.lines()[0];
    assert_eq!(line["kappa"], json!(1e9));
    assert_eq!(line["solver"], "boundary_clamp");
    assert_eq!(line["n"], 10);
}

#[test]
fn fit_antipodal_pair_reports_no_mean_direction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.dcue");
    write_embeddings(
        &store_with(2, &[("a", vec![1.0, 0.0]), ("b", vec![-1.0, 0.0])]),
        &path,
    )
    .unwrap();
    let out = cli(&["fit", "--embeddings", &p(&path), "a", "b"]);
    assert_eq!(out.code, 1);
    assert_eq!(out.lines()[0]["error"]["kind"], "no_mean_direction");
}

#[test]
fn fit_groups_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut axis = vec![0.0; 16];
    axis[3] = 1.0;
    let batch = sample_vmf(
        &VmfParams::new(UnitVector::from_unit(axis).unwrap(), 50.0).unwrap(),
        5000,
        17,
    );
    let mut store = EmbeddingStore::new(16).unwrap();
    for (i, v) in batch.vectors().iter().enumerate() {
        store
            .insert(
                format!("s{i}"),
                v.as_slice().iter().map(|&x| x as f32).collect(),
            )
            .unwrap();
    }
    let path = dir.path().join("e.dcue");
    write_embeddings(&store, &path).unwrap();

    let out = cli(&["fit", "--embeddings", &p(&path)]);
    assert_eq!(out.code, 0);
    let kappa = out.lines()[0]["kappa"].as_f64().unwrap();
    assert!((kappa / 50.0 - 1.0).abs() < 0.05, "kappa {kappa}");

    let out = cli(&[
        "fit",
        "--embeddings",
        &p(&path),
        "--group",
        "s0,s1,s2",
        "--group",
        "s3,s4",
    ]);
    assert_eq!(out.code, 0);
    let lines = out.lines();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        (lines[0]["n"].as_u64(), lines[1]["n"].as_u64()),
        (Some(3), Some(2))
    );

    let out = cli(&["fit", "--embeddings", &p(&path), "s0", "nope"]);
    assert_eq!(out.code, 2);
    assert_eq!(out.lines()[0]["error"]["kind"], "missing_key");

    let out = cli(&["fit", "--embeddings", &p(&path), "s0"]);
    assert_eq!(out.code, 2);
    assert_eq!(out.lines()[0]["error"]["kind"], "too_few_samples");

    let out = cli(&["fit", "--embeddings", &p(&dir.path().join("absent.dcue"))]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("\"kind\":\"io\""));
}

fn small_dataset() -> (tempfile::TempDir, String, String) {
    let dir = tempfile::tempdir().unwrap();
    let records = vec![
        record(json!({"id": "same", "question": "Capital of France?",
            "generations": vec!["Paris"; 10], "references": ["Paris"]})),
        record(json!({"id": "mixed", "question": "Largest planet?",
            "generations": ["Jupiter", "Saturn", "jupiter", "Mars"], "references": ["Jupiter"]})),
    ];
    let mut store = EmbeddingStore::new(3).unwrap();
    for i in 0..10 {
        store
            .insert(format!("same#g{i}"), vec![1.0, 0.01 * i as f32, 0.0])
            .unwrap();
    }
    for (i, v) in [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.9, 0.1, 0.0],
        [0.0, 0.0, 1.0],
    ]
    .iter()
    .enumerate()
    {
        store.insert(format!("mixed#g{i}"), v.to_vec()).unwrap();
    }
    let (m, e) = write_dataset(dir.path(), &records, &store);
    (dir, p(&m), p(&e))
}

#[test]
fn score_lines_and_exact_match_entropy() {
    let (_dir, m, e) = small_dataset();
    let out = cli(&["score", "--manifest", &m, "--embeddings", &e, "--se"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let lines = out.lines();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["id"], "same");
    assert_eq!(lines[0]["se"], json!(0.0));
    assert_eq!(
        lines[0]["diagnostics"]["angles_deg"]
            .as_array()
            .unwrap()
            .len(),
        10
    );
    assert_eq!(lines[1]["diagnostics"]["se_clusters"], 3);
    for l in &lines {
        for key in ["dcu", "r_bar", "kappa"] {
            assert!(l[key].is_number(), "{key} in {l}");
        }
        assert!(l["diagnostics"]["solver"].is_string());
    }
    assert!(lines[0]["dcu"].as_f64() < lines[1]["dcu"].as_f64());

    let plain = cli(&["score", "--manifest", &m, "--embeddings", &e]);
    assert!(plain.lines()[0].get("se").is_none());
}

#[test]
fn score_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (records, store) = generate(&SyntheticConfig {
        records: 60,
        ..Default::default()
    })
    .unwrap();
    let (m, e) = write_dataset(dir.path(), &records, &store);
    let args = [
        "score",
        "--manifest",
        &p(&m),
        "--embeddings",
        &p(&e),
        "--se",
    ];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let ids: Vec<String> = a
        .lines()
        .iter()
        .map(|l| l["id"].as_str().unwrap().to_string())
        .collect();
    let expected: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    assert_eq!(ids, expected);
}

#[test]
fn score_reports_failures_inline_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let records = vec![
        record(
            json!({"id": "ok", "question": "q", "generations": ["a", "b"], "references": ["a"]}),
        ),
        record(
            json!({"id": "zero", "question": "q", "generations": ["a", "b"], "references": ["a"]}),
        ),
        record(
            json!({"id": "lost", "question": "q", "generations": ["a", "b"], "references": ["a"]}),
        ),
        record(
            json!({"id": "flat", "question": "q", "generations": ["a", "b"], "references": ["a"]}),
        ),
    ];
    let store = store_with(
        2,
        &[
            ("ok#g0", vec![1.0, 0.0]),
            ("ok#g1", vec![0.9, 0.1]),
            ("zero#g0", vec![0.0, 0.0]),
            ("zero#g1", vec![1.0, 0.0]),
            ("lost#g0", vec![1.0, 0.0]),
            ("flat#g0", vec![0.0, 1.0]),
            ("flat#g1", vec![0.0, -1.0]),
        ],
    );
    let (m, e) = write_dataset(dir.path(), &records, &store);
    let out = cli(&["score", "--manifest", &p(&m), "--embeddings", &p(&e)]);
    assert_eq!(out.code, 1);
    let lines = out.lines();
    assert_eq!(lines.len(), 4);
    assert!(lines[0]["dcu"].is_number());
    assert_eq!(lines[1]["error"]["kind"], "zero_vector");
    assert_eq!(lines[2]["error"]["kind"], "missing_key");
    assert_eq!(lines[3]["dcu"], json!(1e9));
    assert!(lines[3]["diagnostics"]["note"].is_string());
}

fn scored_synthetic(dir: &std::path::Path, cfg: &SyntheticConfig) -> (String, String) {
    let (records, store) = generate(cfg).unwrap();
    let (m, e) = write_dataset(dir, &records, &store);
    let scores = dir.join("scores.jsonl");
    let out = cli(&[
        "score",
        "--manifest",
        &p(&m),
        "--embeddings",
        &p(&e),
        "--out",
        &p(&scores),
    ]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    (p(&m), p(&scores))
}

#[test]
fn eval_separated_scores_and_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (m, s) = scored_synthetic(
        dir.path(),
        &SyntheticConfig {
            records: 100,
            ..Default::default()
        },
    );
    let out = cli(&[
        "eval",
        "--scores",
        &s,
        "--manifest",
        &m,
        "--replicates",
        "200",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let r = out.json();
    assert_eq!(r["seed"], 0);
    assert_eq!(r["auroc_dcu"]["mean"], json!(1.0));
    assert_eq!(r["auroc_dcu"]["half_width"], json!(0.0));
    assert_eq!(r["bootstrap_replicates"], 200);
    assert!(r["auroc_se"].is_null());
}

#[test]
fn eval_shuffled_scores_give_chance_auroc() {
    let dir = tempfile::tempdir().unwrap();
    let (m, s) = scored_synthetic(
        dir.path(),
        &SyntheticConfig {
            records: 300,
            ..Default::default()
        },
    );
    let mut lines: Vec<Value> = std::fs::read_to_string(&s)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let mut dcu: Vec<Value> = lines.iter().map(|l| l["dcu"].clone()).collect();
    dcu.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
    for (l, d) in lines.iter_mut().zip(dcu) {
        l["dcu"] = d;
    }
    let shuffled = dir.path().join("shuffled.jsonl");
    std::fs::write(
        &shuffled,
        lines.iter().map(|l| format!("{l}\n")).collect::<String>(),
    )
    .unwrap();
    let out = cli(&["eval", "--scores", &p(&shuffled), "--manifest", &m]);
    assert_eq!(out.code, 0);
    let auroc = out.json()["auroc_dcu"]["mean"].as_f64().unwrap();
    assert!((auroc - 0.5).abs() < 0.05, "auroc {auroc}");
}

#[test]
fn eval_csv_is_reproducible_and_config_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (m, s) = scored_synthetic(
        dir.path(),
        &SyntheticConfig {
            records: 80,
            label_noise: 0.5,
            ..Default::default()
        },
    );
    let csv = |name: &str, extra: &[&str]| {
        let path = dir.path().join(name);
        let mut args = vec![
            "eval",
            "--scores",
            &s,
            "--manifest",
            &m,
            "--replicates",
            "300",
        ];
        args.extend_from_slice(extra);
        let path_s = p(&path);
        args.extend_from_slice(&["--csv", &path_s]);
        let out = cli(&args);
        assert_eq!(out.code, 0, "{}", out.stderr);
        std::fs::read_to_string(path).unwrap()
    };
    let a = csv(
        "a.csv",
        &["--seed", "42", "--dataset", "syn", "--model", "m"],
    );
    let b = csv(
        "b.csv",
        &["--seed", "42", "--dataset", "syn", "--model", "m"],
    );
    assert_eq!(a, b);
    assert!(a.starts_with(
        "dataset,model,accuracy,accuracy_hw,auroc_dcu,auroc_dcu_hw,auroc_se,auroc_se_hw\nsyn,m,"
    ));

    let config = dir.path().join("dcu.toml");
    std::fs::write(
        &config,
        "[eval]\nseed = 42\ndataset = \"syn\"\nmodel = \"m\"\n",
    )
    .unwrap();
    let c = csv("c.csv", &["--config", &p(&config)]);
    assert_eq!(a, c);

    std::fs::write(&config, "[eval]\nsede = 42\n").unwrap();
    let out = cli(&[
        "eval",
        "--scores",
        &s,
        "--manifest",
        &m,
        "--config",
        &p(&config),
    ]);
    assert_eq!(out.code, 2);
}

#[test]
fn eval_degenerate_labels_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let (records, store) = generate(&SyntheticConfig {
        records: 10,
        ..Default::default()
    })
    .unwrap();
    let all_right: Vec<QuestionRecord> = records
        .into_iter()
        .map(|mut r| {
            r.generations[0] = "paris".into();
            r
        })
        .collect();
    let (m, e) = write_dataset(dir.path(), &all_right, &store);
    let scores = dir.path().join("s.jsonl");
    cli(&[
        "score",
        "--manifest",
        &p(&m),
        "--embeddings",
        &p(&e),
        "--out",
        &p(&scores),
    ]);
    let out = cli(&["eval", "--scores", &p(&scores), "--manifest", &p(&m)]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.is_empty());
    assert!(out.stderr.contains("degenerate_labels"));
}

#[test]
fn eval_rejects_unknown_score_ids() {
    let (dir, m, _) = small_dataset();
    let scores = dir.path().join("s.jsonl");
    std::fs::write(
        &scores,
        "{\"id\":\"same\",\"dcu\":0.1}\n{\"id\":\"ghost\",\"dcu\":0.2}\n",
    )
    .unwrap();
    let out = cli(&["eval", "--scores", &p(&scores), "--manifest", &m]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("ghost"));
}

#[test]
fn eval_mcq_uses_option_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = Vec::new();
    let mut store = EmbeddingStore::new(3).unwrap();
    let options = [[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut scores = String::new();
    for i in 0..6 {
        let id = format!("m{i}");
        // answer embedding points at option i % 3; ground truth is option 0
        records.push(record(
            json!({"id": id, "question": "Pick", "generations": ["x", "y"],
            "mcq": {"options": ["A", "B", "C"], "gt_index": 0}}),
        ));
        store
            .insert(format!("{id}#g0"), options[i % 3].to_vec())
            .unwrap();
        store
            .insert(format!("{id}#g1"), options[i % 3].to_vec())
            .unwrap();
        for (j, o) in options.iter().enumerate() {
            store.insert(format!("{id}#o{j}"), o.to_vec()).unwrap();
        }
        scores.push_str(&format!(
            "{{\"id\":\"{id}\",\"dcu\":{}}}\n",
            if i % 3 == 0 { 0.1 } else { 0.9 }
        ));
    }
    let (m, e) = write_dataset(dir.path(), &records, &store);
    let s = dir.path().join("s.jsonl");
    std::fs::write(&s, scores).unwrap();
    let out = cli(&[
        "eval",
        "--scores",
        &p(&s),
        "--manifest",
        &p(&m),
        "--mcq",
        "--embeddings",
        &p(&e),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let r = out.json();
    assert!((r["accuracy"]["full_sample"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(r["auroc_dcu"]["full_sample"], json!(1.0));

    let out = cli(&["eval", "--scores", &p(&s), "--manifest", &p(&m), "--mcq"]);
    assert_eq!(out.code, 2);
}

#[test]
fn simulate_reports() {
    let out = cli(&[
        "simulate", "--dim", "3", "--kappa", "0", "--n", "1000", "--trials", "20", "--seed", "1",
    ]);
    assert_eq!(out.code, 0);
    let r = out.json();
    assert!(r["median_r_bar"].as_f64().unwrap() < 3.0 / 1000f64.sqrt());
    assert!(r["median_abs_rel_error"].is_null());

    let out = cli(&[
        "simulate", "--dim", "16", "--kappa", "50", "--n", "10000", "--seed", "4",
    ]);
    let r = out.json();
    assert_eq!(r["trials"], 20);
    assert!(r["median_abs_rel_error"].as_f64().unwrap() < 0.05);
    assert!(r["min_mu_dot"].as_f64().unwrap() > 0.999);

    let out = cli(&[
        "simulate", "--dim", "1024", "--kappa", "200", "--n", "10", "--seed", "0",
    ]);
    assert_eq!(out.code, 0);
    let r = out.json();
    assert!(r["max_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["no_mean_direction"], 0);

    let again = cli(&[
        "simulate", "--dim", "1024", "--kappa", "200", "--n", "10", "--seed", "0",
    ]);
    assert_eq!(out.stdout, again.stdout);

    assert_eq!(
        cli(&["simulate", "--dim", "3", "--kappa", "-1", "--n", "10"]).code,
        2
    );
    assert_eq!(
        cli(&["simulate", "--dim", "1", "--kappa", "1", "--n", "10"]).code,
        2
    );
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dcu");
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("score"));

    let usage = Command::new(bin)
        .args(["eval", "--seed", "x"])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.dcue");
    write_embeddings(
        &store_with(2, &[("a", vec![0.0, 2.0]), ("b", vec![0.0, -2.0])]),
        &path,
    )
    .unwrap();
    let numeric = Command::new(bin)
        .args(["fit", "--embeddings", &p(&path)])
        .output()
        .unwrap();
    assert_eq!(numeric.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&numeric.stdout).contains("no_mean_direction"));
}
