//! Correctness labeling, AUROC, accuracy, and bootstrap reports.

mod bootstrap;
mod rouge;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vmf::UnitVector;

pub use bootstrap::{bootstrap_report, Estimate, EvalReport, CSV_HEADER};
pub use rouge::{lcs_len, rouge_l_f1};

/// ROUGE-L F1 an answer must strictly exceed to count as correct.
pub const DEFAULT_ROUGE_THRESHOLD: f64 = 0.1;
pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("AUROC needs both correct and incorrect records")]
    DegenerateLabels,
    #[error("no records")]
    Empty,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("at least one reference answer is required")]
    NoReferences,
    #[error("multiple-choice labeling needs at least 2 options, got {0}")]
    TooFewOptions(usize),
    #[error("ground-truth index {index} out of range for {options} options")]
    GroundTruthOutOfRange { index: usize, options: usize },
    #[error("embedding dimension mismatch: {expected} vs {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bootstrap needs at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("replicate count must be positive")]
    NoReplicates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMethod {
    RougeThreshold,
    CosineArgmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessLabel {
    pub correct: bool,
    pub method: LabelMethod,
    /// Best ROUGE-L F1 over references, or the winning cosine similarity.
    pub evidence: f64,
    /// Option chosen by cosine argmax.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inferred: Option<usize>,
    /// Another option matched the winning similarity exactly.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
}

/// Uncertainty scores for one question alongside its correctness label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub question_id: String,
    pub dcu: f64,
    pub se: Option<f64>,
    pub correct: CorrectnessLabel,
}

/// Correct iff the best ROUGE-L F1 against any reference strictly exceeds
/// `threshold`.
pub fn label_correct_text(
    first_generation: &str,
    references: &[impl AsRef<str>],
    threshold: f64,
) -> Result<CorrectnessLabel, EvalError> {
    if references.is_empty() {
        return Err(EvalError::NoReferences);
    }
    let best = references
        .iter()
        .map(|r| rouge_l_f1(first_generation, r.as_ref()))
        .fold(0.0, f64::max);
    Ok(CorrectnessLabel {
        correct: best > threshold,
        method: LabelMethod::RougeThreshold,
        evidence: best,
        inferred: None,
        tie: false,
    })
}

/// Picks the option with the highest cosine similarity to the answer
/// embedding (lowest index on ties) and compares it with `gt_index`.
pub fn label_correct_mcq(
    answer: &UnitVector,
    options: &[UnitVector],
    gt_index: usize,
) -> Result<CorrectnessLabel, EvalError> {
    if options.len() < 2 {
        return Err(EvalError::TooFewOptions(options.len()));
    }
    if gt_index >= options.len() {
        return Err(EvalError::GroundTruthOutOfRange {
            index: gt_index,
            options: options.len(),
        });
    }
    if let Some(bad) = options.iter().find(|o| o.dim() != answer.dim()) {
        return Err(EvalError::DimensionMismatch {
            expected: answer.dim(),
            found: bad.dim(),
        });
    }
    let sims: Vec<f64> = options.iter().map(|o| answer.dot(o)).collect();
    let mut best = 0;
    for (i, &s) in sims.iter().enumerate().skip(1) {
        if s > sims[best] {
            best = i;
        }
    }
    let tie = sims
        .iter()
        .enumerate()
        .any(|(i, &s)| i != best && s == sims[best]);
    Ok(CorrectnessLabel {
        correct: best == gt_index,
        method: LabelMethod::CosineArgmax,
        evidence: sims[best],
        inferred: Some(best),
        tie,
    })
}

/// Probability that an incorrect answer carries strictly higher uncertainty
/// than a correct one, ties counted half (the Mann-Whitney statistic).
pub fn auroc(scores: &[f64], correct: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != correct.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: correct.len(),
        });
    }
    if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(bad));
    }
    let order = sort_by_score(scores);
    weighted_auroc(scores, correct, &order, &vec![1; scores.len()])
        .ok_or(EvalError::DegenerateLabels)
}

pub(crate) fn sort_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// AUROC where record `k` counts `weights[k]` times. `order` sorts the
/// records by score. `None` when a class has zero total weight.
pub(crate) fn weighted_auroc(
    scores: &[f64],
    correct: &[bool],
    order: &[usize],
    weights: &[u32],
) -> Option<f64> {
    let mut correct_below = 0.0;
    let mut won = 0.0;
    let (mut total_correct, mut total_incorrect) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let (mut w_correct, mut w_incorrect) = (0.0, 0.0);
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            let k = order[j];
            let w = f64::from(weights[k]);
            if correct[k] {
                w_correct += w;
            } else {
                w_incorrect += w;
            }
            j += 1;
        }
        won += w_incorrect * (correct_below + 0.5 * w_correct);
        correct_below += w_correct;
        total_correct += w_correct;
        total_incorrect += w_incorrect;
        i = j;
    }
    if total_correct == 0.0 || total_incorrect == 0.0 {
        return None;
    }
    Some(won / (total_correct * total_incorrect))
}

pub fn accuracy(correct: &[bool]) -> Result<f64, EvalError> {
    if correct.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(correct.iter().filter(|&&c| c).count() as f64 / correct.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uv(c: &[f64]) -> UnitVector {
        UnitVector::normalize(c).unwrap()
    }

    /// Direct enumeration over (incorrect, correct) pairs.
    fn auroc_pairs(scores: &[f64], correct: &[bool]) -> f64 {
        let mut won = 0.0;
        let mut pairs = 0.0;
        for (i, &ci) in correct.iter().enumerate() {
            for (j, &cj) in correct.iter().enumerate() {
                if !ci && cj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        won += 1.0;
                    } else if scores[i] == scores[j] {
                        won += 0.5;
                    }
                }
            }
        }
        won / pairs
    }

    #[test]
    fn text_label_examples() {
        let l = label_correct_text("paris", &["Paris"], 0.1).unwrap();
        assert!(l.correct);
        assert_eq!(l.evidence, 1.0);
        let l = label_correct_text("I don't know", &["Paris"], 0.1).unwrap();
        assert!(!l.correct);
        assert_eq!(l.evidence, 0.0);
        // best over references
        let l = label_correct_text("the cat sat", &["dog", "the cat"], 0.1).unwrap();
        assert!((l.evidence - 0.8).abs() < 1e-12);
        assert!(label_correct_text("x", &[] as &[&str], 0.1).is_err());
    }

    #[test]
    fn text_label_threshold_is_strict() {
        // F1 = 0.1 exactly: 1 common token, |cand| = 1, |ref| = 19
        let reference = std::iter::once("paris")
            .chain(std::iter::repeat("x").take(18))
            .collect::<Vec<_>>()
            .join(" ");
        let f1 = rouge_l_f1("paris", &reference);
        assert_eq!(f1, 0.1);
        let l = label_correct_text("paris", &[reference.as_str()], 0.1).unwrap();
        assert!(!l.correct);
    }

    #[test]
    fn mcq_examples() {
        let opts = vec![
            uv(&[1.0, 0.0, 0.0]),
            uv(&[0.0, 1.0, 0.0]),
            uv(&[0.0, 0.0, 1.0]),
        ];
        let l = label_correct_mcq(&opts[2].clone(), &opts, 2).unwrap();
        assert_eq!(l.inferred, Some(2));
        assert!(l.correct);
        assert_eq!(l.evidence, 1.0);

        let answer = uv(&[0.5, 0.0, 0.0, (0.75f64).sqrt()]);
        let opts = vec![
            uv(&[1.0, 0.0, 0.0, 0.0]),
            uv(&[0.0, 1.0, 0.0, 0.0]),
            uv(&[0.0, 0.0, 1.0, 0.0]),
        ];
        let l = label_correct_mcq(&answer, &opts, 1).unwrap();
        assert_eq!(l.inferred, Some(0));
        assert!((l.evidence - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mcq_tie_goes_to_lowest_index() {
        // answer = e0; options with dots 0.9, 0.9, 0.1
        let answer = uv(&[1.0, 0.0]);
        let s = |d: f64| UnitVector::from_unit(vec![d, (1.0 - d * d).sqrt()]).unwrap();
        let opts = vec![s(0.9), s(0.9), s(0.1)];
        let l = label_correct_mcq(&answer, &opts, 1).unwrap();
        assert_eq!(l.inferred, Some(0));
        assert!(l.tie);
        assert!(!l.correct);
    }

    #[test]
    fn mcq_rejects_bad_input() {
        let a = uv(&[1.0, 0.0]);
        assert_eq!(
            label_correct_mcq(&a, std::slice::from_ref(&a), 0),
            Err(EvalError::TooFewOptions(1))
        );
        assert!(matches!(
            label_correct_mcq(&a, &[a.clone(), a.clone()], 2),
            Err(EvalError::GroundTruthOutOfRange { .. })
        ));
        assert!(matches!(
            label_correct_mcq(&a, &[a.clone(), uv(&[1.0, 0.0, 0.0])], 0),
            Err(EvalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn auroc_examples() {
        let c = [false, false, true, true];
        assert_eq!(auroc(&[0.9, 0.8, 0.3, 0.2], &c).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 4], &c).unwrap(), 0.5);
        assert_eq!(auroc(&[0.9, 0.4, 0.6, 0.2], &c).unwrap(), 0.75);
        assert_eq!(auroc_pairs(&[0.9, 0.4, 0.6, 0.2], &c), 0.75);
    }

    #[test]
    fn auroc_needs_both_classes() {
        assert_eq!(
            auroc(&[0.1, 0.2], &[true, true]),
            Err(EvalError::DegenerateLabels)
        );
        assert_eq!(
            auroc(&[0.1, 0.2], &[false, false]),
            Err(EvalError::DegenerateLabels)
        );
        assert!(matches!(
            auroc(&[0.1], &[true, false]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            auroc(&[f64::NAN, 0.1], &[true, false]),
            Err(EvalError::NonFiniteScore(_))
        ));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[true; 4]).unwrap(), 1.0);
        assert_eq!(accuracy(&[true, false]).unwrap(), 0.5);
        let labels: Vec<bool> = (0..300).map(|i| i < 138).collect();
        assert_eq!(accuracy(&labels).unwrap(), 0.46);
        assert_eq!(accuracy(&[]), Err(EvalError::Empty));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
            (2usize..40).prop_flat_map(|n| {
                (
                    proptest::collection::vec(0u8..12, n).prop_map(|v| {
                        v.into_iter()
                            .map(|x| f64::from(x) / 4.0)
                            .collect::<Vec<_>>()
                    }),
                    proptest::collection::vec(any::<bool>(), n),
                )
            })
        }

        proptest! {
            #[test]
            fn matches_pair_enumeration((scores, correct) in scored()) {
                let both = correct.iter().any(|&c| c) && correct.iter().any(|&c| !c);
                prop_assume!(both);
                let fast = auroc(&scores, &correct).unwrap();
                prop_assert!((fast - auroc_pairs(&scores, &correct)).abs() < 1e-12);
            }

            #[test]
            fn invariant_under_increasing_transform((scores, correct) in scored()) {
                prop_assume!(correct.iter().any(|&c| c) && correct.iter().any(|&c| !c));
                let moved: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() + 7.0).collect();
                prop_assert_eq!(auroc(&scores, &correct), auroc(&moved, &correct));
            }

            #[test]
            fn flip_symmetry_without_ties(
                raw in proptest::collection::hash_set(0u32..100_000, 2..40),
                seed in any::<u64>(),
            ) {
                let scores: Vec<f64> = raw.into_iter().map(f64::from).collect();
                let correct: Vec<bool> = (0..scores.len()).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
                prop_assume!(correct.iter().any(|&c| c) && correct.iter().any(|&c| !c));
                let flipped: Vec<bool> = correct.iter().map(|c| !c).collect();
                let a = auroc(&scores, &correct).unwrap();
                let b = auroc(&scores, &flipped).unwrap();
                prop_assert!((a + b - 1.0).abs() < 1e-12);
                // reciprocal scores reverse the ranking
                let inv: Vec<f64> = scores.iter().map(|s| 1.0 / (s + 1.0)).collect();
                prop_assert!((auroc(&inv, &correct).unwrap() - (1.0 - a)).abs() < 1e-12);
            }

            #[test]
            fn rouge_bounded_and_one_only_for_identical(
                a in proptest::collection::vec(0u8..5, 0..8),
                b in proptest::collection::vec(0u8..5, 0..8),
            ) {
                let s = |v: &[u8]| v.iter().map(|x| format!("w{x}")).collect::<Vec<_>>().join(" ");
                let f1 = rouge_l_f1(&s(&a), &s(&b));
                prop_assert!((0.0..=1.0).contains(&f1));
                prop_assert_eq!(f1 == 1.0, !a.is_empty() && a == b);
            }
        }
    }
}
