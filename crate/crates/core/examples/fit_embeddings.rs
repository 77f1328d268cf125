//! Fit a vMF to a handful of raw embeddings and read off the DCU score.

use dcu::vmf::{dcu_score, fit, EmbeddingBatch};

fn main() {
    // raw (unnormalized) vectors, as an encoder would emit them
    let raw: Vec<Vec<f64>> = vec![
        vec![2.0, 0.1, 0.0, 0.3],
        vec![1.8, -0.2, 0.1, 0.2],
        vec![2.2, 0.0, -0.1, 0.4],
        vec![1.9, 0.3, 0.2, 0.1],
    ];
    let batch = EmbeddingBatch::from_raw(&raw).expect("non-zero vectors of one dimension");
    let fit = fit(&batch).expect("well-defined mean direction");

    println!("mu      = {:?}", fit.params.mu.as_slice());
    println!("r_bar   = {:.6}", fit.r_bar);
    println!(
        "kappa   = {:.4} ({:?}, {} iterations)",
        fit.params.kappa, fit.solver, fit.iterations
    );
    println!("dcu     = {:.6}", dcu_score(&fit));
    println!("json    = {}", serde_json::to_string(&fit).unwrap());
}
