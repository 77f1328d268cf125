//! The full pipeline through the command-line entry point: score a dataset,
//! then evaluate it with bootstrap intervals.

use dcu::ingest::{write_embeddings, write_manifest};
use dcu::synthetic::{generate, SyntheticConfig};

fn cli(args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = dcu::cli::run(args, &mut out, &mut err);
    eprint!("{}", String::from_utf8_lossy(&err));
    assert_eq!(code, 0, "dcu {}", args[1..].join(" "));
    String::from_utf8(out).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (records, store) = generate(&SyntheticConfig {
        records: 200,
        seed: 5,
        ..Default::default()
    })?;
    write_manifest(&records, path("manifest.jsonl"))?;
    write_embeddings(&store, path("emb.dcue"))?;

    let (manifest, emb, scores, csv) = (
        path("manifest.jsonl"),
        path("emb.dcue"),
        path("scores.jsonl"),
        path("table.csv"),
    );
    cli(&[
        "dcu",
        "score",
        "--manifest",
        &manifest,
        "--embeddings",
        &emb,
        "--se",
        "--out",
        &scores,
    ]);
    let first = std::fs::read_to_string(&scores)?
        .lines()
        .next()
        .unwrap()
        .to_string();
    println!("first score line:\n{first}\n");

    let report = cli(&[
        "dcu",
        "eval",
        "--scores",
        &scores,
        "--manifest",
        &manifest,
        "--seed",
        "42",
        "--dataset",
        "synthetic",
        "--model",
        "vmf-demo",
        "--csv",
        &csv,
    ]);
    println!("{report}");
    print!("{}", std::fs::read_to_string(&csv)?);

    println!(
        "\n{}",
        cli(&["dcu", "simulate", "--dim", "16", "--kappa", "50", "--n", "10000", "--seed", "3"])
    );
    Ok(())
}
