//! Modified Bessel functions of the first kind, evaluated in forms that stay
//! finite for the orders that show up on high-dimensional spheres.
//!
//! Nothing here evaluates `I_nu` directly. The ratio `I_{nu+1}/I_nu` comes
//! from a continued fraction, and `log I_nu` from a scaled power series or an
//! asymptotic expansion depending on the regime.

use std::f64::consts::PI;

const LENTZ_TINY: f64 = 1e-300;
const LENTZ_EPS: f64 = 1e-16;
const LENTZ_MAX_TERMS: usize = 20_000;

/// Below `nu + GAUSS_CUTOFF` the Gauss fraction converges in a few dozen
/// terms; above it the Perron fraction is faster and needs O(1) terms as
/// `x` grows.
const GAUSS_CUTOFF: f64 = 20.0;

/// Orders at or above this use the uniform (Debye) expansion for `log I_nu`.
const UNIFORM_MIN_ORDER: f64 = 50.0;
/// Arguments at or below this always use the power series.
const SERIES_MAX_ARG: f64 = 30.0;

/// Evaluates `b0 + a1/(b1 + a2/(b2 + ...))` with the modified Lentz method.
/// Returns the value and the number of terms consumed.
fn lentz<I>(b0: f64, terms: I) -> (f64, usize)
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut f = if b0 == 0.0 { LENTZ_TINY } else { b0 };
    let mut c = f;
    let mut d = 0.0;
    let mut used = 0;
    for (a, b) in terms.into_iter().take(LENTZ_MAX_TERMS) {
        used += 1;
        d = b + a * d;
        if d == 0.0 {
            d = LENTZ_TINY;
        }
        c = b + a / c;
        if c == 0.0 {
            c = LENTZ_TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < LENTZ_EPS {
            break;
        }
    }
    (f, used)
}

/// `I_{nu+1}(x) / I_nu(x)` by the Gauss continued fraction
/// `x / (2(nu+1) + x^2 / (2(nu+2) + x^2 / ...))`.
fn ratio_gauss(nu: f64, x: f64) -> (f64, usize) {
    let x2 = x * x;
    let (den, used) = lentz(
        2.0 * (nu + 1.0),
        (1..).map(move |k| (x2, 2.0 * (nu + 1.0 + k as f64))),
    );
    (x / den, used)
}

/// `I_{nu+1}(x) / I_nu(x)` by Perron's continued fraction, written for order
/// `n = nu + 1`: `x / (2n + x - (2n+1)x / (2n+1+2x - (2n+3)x / (2n+2+2x - ...)))`.
fn ratio_perron(nu: f64, x: f64) -> (f64, usize) {
    let n = nu + 1.0;
    let (den, used) = lentz(
        2.0 * n + x,
        (1..).map(move |k| {
            let k = k as f64;
            (-(2.0 * n + 2.0 * k - 1.0) * x, 2.0 * n + k + 2.0 * x)
        }),
    );
    (x / den, used)
}

/// `I_{nu+1}(x) / I_nu(x)` for `nu >= 0`, `x >= 0`.
pub fn bessel_i_ratio(nu: f64, x: f64) -> f64 {
    bessel_i_ratio_with_terms(nu, x).0
}

pub(crate) fn bessel_i_ratio_with_terms(nu: f64, x: f64) -> (f64, usize) {
    debug_assert!(nu >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return (0.0, 0);
    }
    if x.is_infinite() {
        return (1.0, 0);
    }
    if x <= nu + GAUSS_CUTOFF {
        ratio_gauss(nu, x)
    } else {
        ratio_perron(nu, x)
    }
}

/// Mean resultant length of a vMF distribution on the sphere in `R^dim`,
/// `A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa)`.
///
/// Strictly increasing in `kappa`, zero at `kappa = 0`, and below one for
/// every finite `kappa`.
pub fn bessel_ratio(dim: usize, kappa: f64) -> f64 {
    assert!(dim >= 2, "dimension must be at least 2, got {dim}");
    assert!(kappa >= 0.0, "kappa must be non-negative, got {kappa}");
    bessel_i_ratio(order(dim), kappa)
}

/// `dA_d/dkappa = 1 - A^2 - (d-1)/kappa * A`.
///
/// At `kappa = 0` this returns the limit `1/d`.
pub fn bessel_ratio_derivative(dim: usize, kappa: f64) -> f64 {
    assert!(dim >= 2, "dimension must be at least 2, got {dim}");
    if kappa == 0.0 {
        return 1.0 / dim as f64;
    }
    let a = bessel_ratio(dim, kappa);
    (1.0 - a) * (1.0 + a) - (dim as f64 - 1.0) / kappa * a
}

/// Order of the Bessel function in the vMF normalizer, `d/2 - 1`.
pub(crate) fn order(dim: usize) -> f64 {
    dim as f64 / 2.0 - 1.0
}

/// `log I_nu(x)` for `nu >= 0`, `x >= 0`.
///
/// Returns `-inf` at `x = 0` for positive orders and `0` for `nu = 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0, "order must be non-negative, got {nu}");
    assert!(x >= 0.0, "argument must be non-negative, got {x}");
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x <= SERIES_MAX_ARG {
        return log_bessel_i_series(nu, x);
    }
    if nu >= UNIFORM_MIN_ORDER {
        return log_bessel_i_uniform(nu, x);
    }
    if x >= (2.0 * nu * nu).max(40.0) {
        return log_bessel_i_large_arg(nu, x);
    }
    log_bessel_i_series(nu, x)
}

/// Power series `sum_k (x^2/4)^k / (k! (nu+1)_k)` summed with periodic
/// rescaling so the terms never overflow.
fn log_bessel_i_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut log_scale = 0.0;
    let half = 0.5 * x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (nu + k));
        sum += term;
        if sum > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            log_scale += 250.0 * std::f64::consts::LN_10;
        }
        if k > half && term < sum * 1e-17 {
            break;
        }
    }
    nu * half.ln() - libm::lgamma(nu + 1.0) + sum.ln() + log_scale
}

/// Hankel expansion `e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k`, summed
/// until the terms stop shrinking.
fn log_bessel_i_large_arg(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next == 0.0 {
            break;
        }
        if next.abs() >= term.abs() {
            break;
        }
        sum += next;
        term = next;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

// Polynomials u_k(t) of the uniform expansion, as (power, coefficient) pairs
// over a common denominator.
const UNIFORM_POLYS: [(&[(i32, f64)], f64); 6] = [
    (&[(1, 3.0), (3, -5.0)], 24.0),
    (&[(2, 81.0), (4, -462.0), (6, 385.0)], 1152.0),
    (
        &[(3, 30375.0), (5, -369603.0), (7, 765765.0), (9, -425425.0)],
        414720.0,
    ),
    (
        &[
            (4, 4465125.0),
            (6, -94121676.0),
            (8, 349922430.0),
            (10, -446185740.0),
            (12, 185910725.0),
        ],
        39813120.0,
    ),
    (
        &[
            (5, 1519035525.0),
            (7, -49286948607.0),
            (9, 284499769554.0),
            (11, -614135872350.0),
            (13, 566098157625.0),
            (15, -188699385875.0),
        ],
        6688604160.0,
    ),
    (
        &[
            (6, 2757049477875.0),
            (8, -127577298354750.0),
            (10, 1050760774457901.0),
            (12, -3369032068261860.0),
            (14, 5104696716244125.0),
            (16, -3685299006138750.0),
            (18, 1023694168371875.0),
        ],
        4815794995200.0,
    ),
];

/// Uniform asymptotic (Debye) expansion of `log I_nu(x)` through `u_6`.
///
/// Accurate to roughly `nu^-7` relative in `I_nu`, uniformly in `x`, so it
/// is only meaningful for large orders. Exposed as an independent check on
/// the main evaluation path.
pub fn log_bessel_i_uniform(nu: f64, x: f64) -> f64 {
    assert!(nu > 0.0, "uniform expansion needs a positive order");
    assert!(x > 0.0, "uniform expansion needs a positive argument");
    let r = nu.hypot(x);
    let t = nu / r;
    // nu * eta, with eta = sqrt(1+z^2) + ln(z / (1 + sqrt(1+z^2))), z = x/nu
    let nu_eta = r + nu * (x / (nu + r)).ln();
    let mut series = 1.0;
    let mut nu_pow = 1.0;
    for (terms, denom) in UNIFORM_POLYS {
        nu_pow *= nu;
        let u: f64 = terms.iter().map(|&(p, c)| c * t.powi(p)).sum::<f64>() / denom;
        series += u / nu_pow;
    }
    nu_eta - 0.5 * (2.0 * PI * r).ln() + series.ln()
}

/// `A_d(kappa)` from the uniform expansion of both Bessel functions. A
/// cross-check for the continued-fraction path at large `d`.
pub fn bessel_ratio_uniform(dim: usize, kappa: f64) -> f64 {
    let nu = order(dim);
    (log_bessel_i_uniform(nu + 1.0, kappa) - log_bessel_i_uniform(nu, kappa)).exp()
}
