//! Semantic-entropy baseline.
//!
//! Generations are grouped greedily by bidirectional equivalence under an
//! [`EquivalenceOracle`], and the entropy of the empirical cluster
//! frequencies is the uncertainty score.

mod oracle;

use thiserror::Error;

pub use oracle::{
    exact_match_oracle, remote_nli_oracle, ExactMatchOracle, NliLabel, RemoteNliOracle,
};

#[derive(Debug, Error)]
#[error("{message}")]
pub struct OracleError {
    pub message: String,
}

impl OracleError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SemanticError {
    #[error("no generations to cluster")]
    Empty,
    #[error("oracle failed comparing {a:?} with {b:?}: {source}")]
    OracleFailure {
        a: String,
        b: String,
        #[source]
        source: OracleError,
    },
}

/// Judges whether two answers to `context` mean the same thing.
///
/// Implementations must be deterministic for fixed inputs. Only one
/// direction is asked per call; callers check both.
pub trait EquivalenceOracle: Send + Sync {
    fn equivalent(&self, a: &str, b: &str, context: &str) -> Result<bool, OracleError>;
}

impl<F> EquivalenceOracle for F
where
    F: Fn(&str, &str, &str) -> Result<bool, OracleError> + Send + Sync,
{
    fn equivalent(&self, a: &str, b: &str, context: &str) -> Result<bool, OracleError> {
        self(a, b, context)
    }
}

/// Cluster ids per generation, numbered in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    sizes: Vec<usize>,
}

impl ClusterAssignment {
    /// Builds an assignment from labels. Returns `None` unless the labels are
    /// non-empty and form the contiguous range `0..K`.
    pub fn from_labels(labels: Vec<usize>) -> Option<Self> {
        let k = labels.iter().max()? + 1;
        let mut sizes = vec![0; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        if sizes.contains(&0) {
            return None;
        }
        Some(Self { labels, sizes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Cluster sizes indexed by cluster id.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Single greedy pass: each text is compared with the first member of every
/// existing cluster in creation order and joins the first one that is
/// equivalent in both directions, or founds a new cluster.
///
/// Byte-identical texts are equivalent without asking the oracle.
pub fn cluster_generations<O>(
    texts: &[impl AsRef<str>],
    question: &str,
    oracle: &O,
) -> Result<ClusterAssignment, SemanticError>
where
    O: EquivalenceOracle + ?Sized,
{
    if texts.is_empty() {
        return Err(SemanticError::Empty);
    }
    let mut representatives: Vec<&str> = Vec::new();
    let mut labels = Vec::with_capacity(texts.len());
    for text in texts {
        let text = text.as_ref();
        let mut joined = None;
        for (id, rep) in representatives.iter().enumerate() {
            if bidirectional(rep, text, question, oracle)? {
                joined = Some(id);
                break;
            }
        }
        let id = joined.unwrap_or_else(|| {
            representatives.push(text);
            representatives.len() - 1
        });
        labels.push(id);
    }
    Ok(ClusterAssignment::from_labels(labels).expect("greedy labels are contiguous"))
}

fn bidirectional<O>(a: &str, b: &str, question: &str, oracle: &O) -> Result<bool, SemanticError>
where
    O: EquivalenceOracle + ?Sized,
{
    if a == b {
        return Ok(true);
    }
    let ask = |x: &str, y: &str| {
        oracle
            .equivalent(x, y, question)
            .map_err(|source| SemanticError::OracleFailure {
                a: x.to_string(),
                b: y.to_string(),
                source,
            })
    };
    Ok(ask(a, b)? && ask(b, a)?)
}

/// `-sum_c (|c|/N) ln(|c|/N)` over the clusters.
pub fn semantic_entropy(assignment: &ClusterAssignment) -> f64 {
    entropy_from_sizes(assignment.sizes())
}

/// Natural-log entropy of the empirical distribution given by `sizes`.
/// Zero-sized entries are ignored.
pub fn entropy_from_sizes(sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}
