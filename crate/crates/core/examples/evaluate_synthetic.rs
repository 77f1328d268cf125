//! Labels, AUROC and bootstrap intervals on a synthetic dataset where
//! tight batches are the correct ones.

use dcu::metrics::{auroc, bootstrap_report, label_correct_text, ScoredRecord};
use dcu::synthetic::{generate, SyntheticConfig};
use dcu::vmf::{score_batch, EmbeddingBatch};

fn main() {
    for noise in [0.0, 0.5] {
        let cfg = SyntheticConfig {
            label_noise: noise,
            seed: 11,
            ..Default::default()
        };
        let (records, store) = generate(&cfg).unwrap();
        let scored: Vec<ScoredRecord> = records
            .iter()
            .map(|r| {
                let raw: Vec<&[f32]> = (0..r.generations.len())
                    .map(|i| store.get(&r.generation_key(i)).unwrap())
                    .collect();
                let batch = EmbeddingBatch::from_raw_f32(&raw).unwrap();
                let refs = r.references.as_deref().unwrap();
                ScoredRecord {
                    question_id: r.id.clone(),
                    dcu: score_batch(&batch).unwrap().dcu,
                    se: None,
                    correct: label_correct_text(&r.generations[0], refs, 0.1).unwrap(),
                }
            })
            .collect();

        let dcu: Vec<f64> = scored.iter().map(|s| s.dcu).collect();
        let correct: Vec<bool> = scored.iter().map(|s| s.correct.correct).collect();
        let mut report = bootstrap_report(&scored, 1000, 42).unwrap();
        report.dataset = format!("synthetic-noise-{noise}");
        report.model = "vmf".into();
        println!(
            "label noise {noise}: full-sample AUROC {:.4}",
            auroc(&dcu, &correct).unwrap()
        );
        print!("{}", report.to_csv());
    }
}
