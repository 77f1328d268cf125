//! Inverts `A_d(kappa) = r_bar` for the concentration.

use serde::{Deserialize, Serialize};

use super::bessel::{bessel_ratio, bessel_ratio_derivative};
use super::{VmfError, KAPPA_MAX, R_BAR_MAX, R_BAR_MIN};

/// Largest accepted `|A_d(kappa) - r_bar|` for a solved concentration.
pub const RESIDUAL_TOL: f64 = 1e-8;

const NEWTON_MAX_ITER: usize = 100;
const BISECTION_MAX_ITER: usize = 200;
const BISECTION_LOWER: f64 = 1e-8;
// Iteration keeps going past RESIDUAL_TOL while it is cheap to do so.
const TARGET_RESIDUAL: f64 = 1e-13;

/// Which route produced the concentration estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Newton,
    Bisection,
    BoundaryClamp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSolution {
    pub kappa: f64,
    pub solver: Solver,
    /// Newton iterations, plus bisection iterations when the fallback ran.
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A_d(kappa) = r_bar` for the maximum-likelihood concentration.
///
/// `r_bar <= R_BAR_MIN` gives `kappa = 0`. `r_bar >= R_BAR_MAX`, or any
/// `r_bar` whose root lies beyond `KAPPA_MAX`, gives `KAPPA_MAX`. Both are
/// reported as [`Solver::BoundaryClamp`]. Otherwise Newton
/// runs from `r(d - r^2)/(1 - r^2)` and hands over to bisection if a step
/// leaves `(0, KAPPA_MAX]`, turns non-finite, or the iteration cap is hit.
pub fn solve_kappa(r_bar: f64, dim: usize) -> Result<KappaSolution, VmfError> {
    if dim < 2 {
        return Err(VmfError::DimensionTooSmall(dim));
    }
    if !(0.0..=1.0).contains(&r_bar) {
        return Err(VmfError::InvalidMeanResultant(r_bar));
    }
    if r_bar <= R_BAR_MIN {
        return Ok(KappaSolution {
            kappa: 0.0,
            solver: Solver::BoundaryClamp,
            iterations: 0,
            residual: r_bar,
        });
    }
    // In high dimensions A_d(KAPPA_MAX) falls short of R_BAR_MAX, so roots
    // beyond the clamp are caught by the second test.
    let at_max = bessel_ratio(dim, KAPPA_MAX);
    if r_bar >= R_BAR_MAX || r_bar >= at_max {
        return Ok(KappaSolution {
            kappa: KAPPA_MAX,
            solver: Solver::BoundaryClamp,
            iterations: 0,
            residual: (at_max - r_bar).abs(),
        });
    }

    let (newton, newton_iters) = newton(r_bar, dim);
    if let Some(sol) = newton {
        return Ok(sol);
    }
    let mut sol = bisection(r_bar, dim)?;
    sol.iterations += newton_iters;
    Ok(sol)
}

fn initial_guess(r_bar: f64, dim: usize) -> f64 {
    let d = dim as f64;
    r_bar * (d - r_bar * r_bar) / (1.0 - r_bar * r_bar)
}

fn newton(r_bar: f64, dim: usize) -> (Option<KappaSolution>, usize) {
    let mut kappa = initial_guess(r_bar, dim);
    if !(kappa.is_finite() && kappa > 0.0 && kappa <= KAPPA_MAX) {
        return (None, 0);
    }
    let mut residual = bessel_ratio(dim, kappa) - r_bar;
    for iter in 1..=NEWTON_MAX_ITER {
        let slope = bessel_ratio_derivative(dim, kappa);
        if !(slope.is_finite() && slope > 0.0) {
            return (None, iter);
        }
        let next = kappa - residual / slope;
        if !(next.is_finite() && next > 0.0 && next <= KAPPA_MAX) {
            return (None, iter);
        }
        let step = (next - kappa).abs();
        kappa = next;
        residual = bessel_ratio(dim, kappa) - r_bar;
        if residual.abs() <= TARGET_RESIDUAL || step <= 4.0 * f64::EPSILON * kappa {
            if residual.abs() <= RESIDUAL_TOL {
                return (
                    Some(KappaSolution {
                        kappa,
                        solver: Solver::Newton,
                        iterations: iter,
                        residual: residual.abs(),
                    }),
                    iter,
                );
            }
            // stalled short of tolerance
            return (None, iter);
        }
    }
    (None, NEWTON_MAX_ITER)
}

fn bisection(r_bar: f64, dim: usize) -> Result<KappaSolution, VmfError> {
    let mut lo = BISECTION_LOWER;
    if bessel_ratio(dim, lo) >= r_bar {
        lo = 0.0;
    }
    let mut hi = 1.0_f64;
    while bessel_ratio(dim, hi) <= r_bar && hi < KAPPA_MAX {
        lo = hi;
        hi = (2.0 * hi).min(KAPPA_MAX);
    }

    let mut best = (f64::INFINITY, hi);
    for iter in 1..=BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let residual = bessel_ratio(dim, mid) - r_bar;
        if residual.abs() < best.0 {
            best = (residual.abs(), mid);
        }
        if residual.abs() <= TARGET_RESIDUAL || hi - lo <= 4.0 * f64::EPSILON * hi {
            return finish(best, iter);
        }
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    finish(best, BISECTION_MAX_ITER)
}

fn finish((residual, kappa): (f64, f64), iterations: usize) -> Result<KappaSolution, VmfError> {
    if residual <= RESIDUAL_TOL {
        Ok(KappaSolution {
            kappa,
            solver: Solver::Bisection,
            iterations,
            residual,
        })
    } else {
        Err(VmfError::NonConvergence { residual })
    }
}
