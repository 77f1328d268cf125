//! von Mises-Fisher fitting on the unit hypersphere and the inverse
//! concentration uncertainty score.
//!
//! Embeddings come in raw, are projected onto the sphere with
//! [`UnitVector::normalize`], grouped into an [`EmbeddingBatch`], and fitted
//! by maximum likelihood with [`fit`]. The score is [`dcu_score`], `1/kappa`.
//!
//! All arithmetic is `f64`; 32-bit inputs are widened on the way in.

mod bessel;
mod sampler;
mod solver;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bessel::{
    bessel_i_ratio, bessel_ratio, bessel_ratio_derivative, bessel_ratio_uniform, log_bessel_i,
    log_bessel_i_uniform,
};
pub use sampler::{sample_uniform_sphere, sample_vmf, sample_vmf_with_rng};
pub use solver::{solve_kappa, KappaSolution, Solver, RESIDUAL_TOL};

/// Mean resultant lengths at or below this fit as the uniform distribution.
pub const R_BAR_MIN: f64 = 1e-9;
/// Mean resultant lengths at or above this clamp the concentration.
pub const R_BAR_MAX: f64 = 1.0 - 1e-9;
/// Finite stand-in for infinite concentration.
pub const KAPPA_MAX: f64 = 1e9;
/// Score reported when the concentration is zero or the mean direction is
/// undefined.
pub const DCU_MAX: f64 = 1e9;

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;
const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmfError {
    #[error("vector has zero norm and cannot be normalized")]
    ZeroVector,
    #[error("vector is not unit length (norm {0})")]
    NotUnit(f64),
    #[error("vector contains a non-finite component")]
    NonFinite,
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("fitting needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("resultant vector is zero; mean direction is undefined")]
    NoMeanDirection,
    #[error("mean resultant length {0} is outside [0, 1]")]
    InvalidMeanResultant(f64),
    #[error("concentration {0} is outside [0, KAPPA_MAX]")]
    InvalidKappa(f64),
    #[error("concentration solver did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },
}

/// A point on the unit sphere `S^{d-1}`, `d >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Projects a raw vector onto the sphere.
    pub fn normalize(raw: &[f64]) -> Result<Self, VmfError> {
        if raw.len() < 2 {
            return Err(VmfError::DimensionTooSmall(raw.len()));
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(VmfError::NonFinite);
        }
        let norm = l2_norm(raw);
        if norm < ZERO_NORM {
            return Err(VmfError::ZeroVector);
        }
        Ok(Self(raw.iter().map(|x| x / norm).collect()))
    }

    /// Widens 32-bit components before normalizing.
    pub fn normalize_f32(raw: &[f32]) -> Result<Self, VmfError> {
        let wide: Vec<f64> = raw.iter().map(|&x| f64::from(x)).collect();
        Self::normalize(&wide)
    }

    /// Wraps components that are already unit length.
    pub fn from_unit(components: Vec<f64>) -> Result<Self, VmfError> {
        if components.len() < 2 {
            return Err(VmfError::DimensionTooSmall(components.len()));
        }
        if components.iter().any(|x| !x.is_finite()) {
            return Err(VmfError::NonFinite);
        }
        let norm = l2_norm(&components);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(VmfError::NotUnit(norm));
        }
        Ok(Self(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = VmfError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_unit(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Self {
        v.0
    }
}

/// Shorthand for [`UnitVector::normalize`].
pub fn normalize(raw: &[f64]) -> Result<UnitVector, VmfError> {
    UnitVector::normalize(raw)
}

/// The normalized embeddings of the `N` sampled outputs for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    vectors: Vec<UnitVector>,
    dim: usize,
}

impl EmbeddingBatch {
    pub fn new(vectors: Vec<UnitVector>) -> Result<Self, VmfError> {
        let dim = vectors.first().ok_or(VmfError::EmptyBatch)?.dim();
        if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(VmfError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { vectors, dim })
    }

    /// Normalizes each raw vector and collects them into a batch.
    pub fn from_raw<V: AsRef<[f64]>>(raw: &[V]) -> Result<Self, VmfError> {
        let vectors = raw
            .iter()
            .map(|v| UnitVector::normalize(v.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(vectors)
    }

    pub fn from_raw_f32<V: AsRef<[f32]>>(raw: &[V]) -> Result<Self, VmfError> {
        let vectors = raw
            .iter()
            .map(|v| UnitVector::normalize_f32(v.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(vectors)
    }

    pub fn vectors(&self) -> &[UnitVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmfParams {
    pub mu: UnitVector,
    pub kappa: f64,
}

impl VmfParams {
    pub fn new(mu: UnitVector, kappa: f64) -> Result<Self, VmfError> {
        if !(0.0..=KAPPA_MAX).contains(&kappa) {
            return Err(VmfError::InvalidKappa(kappa));
        }
        Ok(Self { mu, kappa })
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }
}

/// Fitted parameters plus solver diagnostics.
///
/// Serializes flat: `{mu, kappa, r_bar, n, dim, solver, iterations, residual}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmfFit {
    #[serde(flatten)]
    pub params: VmfParams,
    pub r_bar: f64,
    pub n: usize,
    pub dim: usize,
    pub solver: Solver,
    pub iterations: usize,
    pub residual: f64,
}

/// Sum of the batch vectors and its length divided by `N`.
pub fn resultant(batch: &EmbeddingBatch) -> (Vec<f64>, f64) {
    let mut sum = vec![0.0; batch.dim()];
    for v in batch.vectors() {
        for (s, x) in sum.iter_mut().zip(v.as_slice()) {
            *s += x;
        }
    }
    let r_bar = (l2_norm(&sum) / batch.len() as f64).min(1.0);
    (sum, r_bar)
}

/// Maximum-likelihood vMF fit: `mu = R/|R|`, `kappa` from [`solve_kappa`].
pub fn fit(batch: &EmbeddingBatch) -> Result<VmfFit, VmfError> {
    if batch.len() < 2 {
        return Err(VmfError::TooFewSamples(batch.len()));
    }
    let (sum, r_bar) = resultant(batch);
    let norm = l2_norm(&sum);
    if norm < ZERO_NORM {
        return Err(VmfError::NoMeanDirection);
    }
    let mu = UnitVector(sum.iter().map(|x| x / norm).collect());
    let sol = solve_kappa(r_bar, batch.dim())?;
    Ok(VmfFit {
        params: VmfParams {
            mu,
            kappa: sol.kappa,
        },
        r_bar,
        n: batch.len(),
        dim: batch.dim(),
        solver: sol.solver,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Inverse concentration. Zero concentration maps to [`DCU_MAX`].
pub fn dcu_score(fit: &VmfFit) -> f64 {
    kappa_to_dcu(fit.params.kappa)
}

pub(crate) fn kappa_to_dcu(kappa: f64) -> f64 {
    if kappa > 0.0 {
        (1.0 / kappa).min(DCU_MAX)
    } else {
        DCU_MAX
    }
}

/// Score for one batch, with [`VmfError::NoMeanDirection`] folded into
/// maximal uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchScore {
    pub dcu: f64,
    /// `None` when the mean direction was undefined.
    pub fit: Option<VmfFit>,
    pub r_bar: f64,
}

pub fn score_batch(batch: &EmbeddingBatch) -> Result<BatchScore, VmfError> {
    match fit(batch) {
        Ok(fit) => Ok(BatchScore {
            dcu: dcu_score(&fit),
            r_bar: fit.r_bar,
            fit: Some(fit),
        }),
        Err(VmfError::NoMeanDirection) => Ok(BatchScore {
            dcu: DCU_MAX,
            fit: None,
            r_bar: resultant(batch).1,
        }),
        Err(e) => Err(e),
    }
}

/// `log C_d(kappa) = (d/2-1) log kappa - (d/2) log 2pi - log I_{d/2-1}(kappa)`,
/// with the uniform-sphere limit at `kappa = 0`.
pub fn log_normalizer(dim: usize, kappa: f64) -> f64 {
    assert!(dim >= 2, "dimension must be at least 2, got {dim}");
    let half = dim as f64 / 2.0;
    if kappa == 0.0 {
        // minus the log surface area 2 pi^{d/2} / Gamma(d/2)
        return libm::lgamma(half) - std::f64::consts::LN_2 - half * PI.ln();
    }
    let nu = half - 1.0;
    nu * kappa.ln() - half * (2.0 * PI).ln() - log_bessel_i(nu, kappa)
}

/// Log density of `z` under `vMF(mu, kappa)`.
pub fn log_density(z: &UnitVector, params: &VmfParams) -> f64 {
    assert_eq!(z.dim(), params.dim(), "dimension mismatch");
    log_normalizer(z.dim(), params.kappa) + params.kappa * z.dot(&params.mu)
}

/// Total log-likelihood of a batch, `N log C_d(kappa) + kappa mu.R`.
pub fn log_likelihood(batch: &EmbeddingBatch, params: &VmfParams) -> f64 {
    assert_eq!(batch.dim(), params.dim(), "dimension mismatch");
    let (sum, _) = resultant(batch);
    batch.len() as f64 * log_normalizer(batch.dim(), params.kappa)
        + params.kappa * dot(&sum, params.mu.as_slice())
}

/// Angle in degrees between each batch vector and `mu`.
pub fn angles_to(batch: &EmbeddingBatch, mu: &UnitVector) -> Vec<f64> {
    batch
        .vectors()
        .iter()
        .map(|v| v.dot(mu).clamp(-1.0, 1.0).acos().to_degrees())
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    // scaled to avoid overflow on huge raw embeddings
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}
