//! Wood's rejection sampler for the von Mises-Fisher distribution.
//!
//! The component along `mu` is drawn by rejection from a transformed Beta
//! proposal; the tangent component is a uniform direction orthogonal to `mu`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::{l2_norm, EmbeddingBatch, UnitVector, VmfParams, ZERO_NORM};

/// `n` draws from `vMF(mu, kappa)`, deterministic for a given seed.
///
/// # Panics
///
/// If `n == 0`.
pub fn sample_vmf(params: &VmfParams, n: usize, seed: u64) -> EmbeddingBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_vmf_with_rng(params, n, &mut rng)
}

pub fn sample_vmf_with_rng<R: Rng + ?Sized>(
    params: &VmfParams,
    n: usize,
    rng: &mut R,
) -> EmbeddingBatch {
    assert!(n >= 1, "need at least one sample");
    let dim = params.dim();
    let vectors = if params.kappa == 0.0 {
        (0..n).map(|_| sample_uniform_sphere(dim, rng)).collect()
    } else {
        let wood = Wood::new(dim, params.kappa);
        (0..n)
            .map(|_| {
                let w = wood.sample_cosine(rng);
                let tangent = orthogonal_direction(&params.mu, rng);
                let s = (1.0 - w * w).max(0.0).sqrt();
                let z: Vec<f64> = params
                    .mu
                    .as_slice()
                    .iter()
                    .zip(&tangent)
                    .map(|(m, t)| w * m + s * t)
                    .collect();
                renormalize(z)
            })
            .collect()
    };
    EmbeddingBatch::new(vectors).expect("samples share the parameter dimension")
}

/// Uniform point on `S^{dim-1}` from a normalized Gaussian.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitVector {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = UnitVector::normalize(&g) {
            return u;
        }
    }
}

fn orthogonal_direction<R: Rng + ?Sized>(mu: &UnitVector, rng: &mut R) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..mu.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let along: f64 = g.iter().zip(mu.as_slice()).map(|(a, b)| a * b).sum();
        for (x, m) in g.iter_mut().zip(mu.as_slice()) {
            *x -= along * m;
        }
        let norm = l2_norm(&g);
        if norm > ZERO_NORM {
            g.iter_mut().for_each(|x| *x /= norm);
            return g;
        }
    }
}

fn renormalize(z: Vec<f64>) -> UnitVector {
    let norm = l2_norm(&z);
    UnitVector(z.into_iter().map(|x| x / norm).collect())
}

struct Wood {
    kappa: f64,
    dm1: f64,
    b: f64,
    x0: f64,
    c: f64,
    beta: Beta<f64>,
}

impl Wood {
    fn new(dim: usize, kappa: f64) -> Self {
        let dm1 = dim as f64 - 1.0;
        // (-2k + sqrt(4k^2 + (d-1)^2)) / (d-1), rationalized
        let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
        let beta = Beta::new(dm1 / 2.0, dm1 / 2.0).expect("positive shape parameters");
        Self {
            kappa,
            dm1,
            b,
            x0,
            c,
            beta,
        }
    }

    fn sample_cosine<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z = self.beta.sample(rng);
            let w = (1.0 - (1.0 + self.b) * z) / (1.0 - (1.0 - self.b) * z);
            let u: f64 = rng.random();
            let t = self.kappa * w + self.dm1 * (1.0 - self.x0 * w).ln() - self.c;
            if t >= u.ln() {
                return w.clamp(-1.0, 1.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vmf::{bessel_ratio, resultant};

    fn axis(dim: usize) -> UnitVector {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        UnitVector::from_unit(v).unwrap()
    }

    #[test]
    fn same_seed_same_batch() {
        let p = VmfParams::new(axis(5), 3.0).unwrap();
        assert_eq!(sample_vmf(&p, 50, 9), sample_vmf(&p, 50, 9));
        assert_ne!(sample_vmf(&p, 50, 9), sample_vmf(&p, 50, 10));
    }

    #[test]
    fn uniform_case_has_no_resultant() {
        let p = VmfParams::new(axis(3), 0.0).unwrap();
        let (_, r_bar) = resultant(&sample_vmf(&p, 100_000, 1));
        assert!(r_bar < 0.01, "{r_bar}");
    }

    #[test]
    fn empirical_resultant_matches_bessel_ratio() {
        let p = VmfParams::new(axis(16), 50.0).unwrap();
        let (_, r_bar) = resultant(&sample_vmf(&p, 100_000, 2));
        let expected = bessel_ratio(16, 50.0);
        assert!((r_bar - expected).abs() < 0.005, "{r_bar} vs {expected}");
    }

    #[test]
    fn samples_are_unit_length() {
        for (dim, kappa) in [(2, 0.5), (3, 1e4), (1024, 200.0)] {
            let p = VmfParams::new(axis(dim), kappa).unwrap();
            for v in sample_vmf(&p, 20, 3).vectors() {
                assert!((l2_norm(v.as_slice()) - 1.0).abs() < 1e-12);
            }
        }
    }
}
