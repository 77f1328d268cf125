//! Semantic-entropy baseline with the exact-match oracle and a custom one.

use dcu::semantic::{cluster_generations, exact_match_oracle, semantic_entropy, OracleError};

fn main() {
    let question = "What is the capital of France?";
    let gens = [
        "Paris",
        "paris.",
        "Paris",
        "Lyon",
        "Marseille",
        "Paris ",
        "lyon",
    ];

    let clusters = cluster_generations(&gens, question, &exact_match_oracle()).unwrap();
    println!(
        "exact match: labels {:?}, sizes {:?}",
        clusters.labels(),
        clusters.sizes()
    );
    println!("             SE = {:.6} nats", semantic_entropy(&clusters));

    // any Fn(&str, &str, &str) -> Result<bool, OracleError> is an oracle
    let city_is_french = |a: &str, b: &str, _q: &str| -> Result<bool, OracleError> {
        let french = |s: &str| {
            ["paris", "lyon", "marseille"]
                .iter()
                .any(|c| s.to_lowercase().contains(c))
        };
        Ok(french(a) == french(b))
    };
    let coarse = cluster_generations(&gens, question, &city_is_french).unwrap();
    println!(
        "coarse:      sizes {:?}, SE = {:.6}",
        coarse.sizes(),
        semantic_entropy(&coarse)
    );
}
