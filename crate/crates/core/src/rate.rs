//! Achievable rate of the equivalent ISI channel and its closed-form
//! straight-line approximations. All rates are in bits per channel use.
//!
//! With `u = cos λ` the rate is
//! `(1/2π) ∫_{-1}^{1} log2(1 + f(u)) / sqrt(1 - u²) du`, which is exactly a
//! Chebyshev-weighted integral. Replacing the integrand by a line `s u + c`
//! integrates to `c / 2`, since the odd part vanishes against the weight.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly;
use crate::spectrum::SpectralRatio;

/// Node cap for the doubling Gauss–Chebyshev quadrature.
pub const MAX_QUADRATURE_NODES: usize = 1 << 16;

const INITIAL_NODES: usize = 8;

/// Grid size used when interior tangency points cannot be located.
pub const FALLBACK_GRID: usize = 4096;

/// Every rate estimate for one scaling vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub exact: f64,
    pub zeroth: f64,
    pub lower: f64,
    pub upper: f64,
    /// Slope of the chord through `u = ±1`, in bits.
    pub slope: f64,
    pub u_max: f64,
    pub u_min: f64,
}

/// Chord approximation and its slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZerothOrder {
    pub rate: f64,
    pub slope: f64,
}

/// Tangent lines of slope `s` through the highest and lowest points of
/// `log2(1 + f(u)) - s u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentBounds {
    pub lower: f64,
    pub upper: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// True when the dense-grid fallback replaced root isolation; the bounds
    /// are then only accurate to the grid spacing.
    pub grid_fallback: bool,
}

/// `n`-node Gauss–Chebyshev estimate: nodes `cos((2j-1)π/2n)`, weights `π/n`, scaled by `1/2π`.
pub fn gauss_chebyshev(sr: &SpectralRatio, n: usize) -> f64 {
    let sum: f64 = (1..=n)
        .map(|j| sr.log2_1pf(((2 * j - 1) as f64 * PI / (2 * n) as f64).cos()))
        .sum();
    sum / (2 * n) as f64
}

/// Rate by quadrature, doubling the node count until two successive
/// estimates agree to within `tol`.
pub fn exact_rate(sr: &SpectralRatio, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::NonPositive { what: "quadrature tolerance", value: tol });
    }
    let mut n = INITIAL_NODES;
    let mut prev = gauss_chebyshev(sr, n);
    let mut delta = f64::INFINITY;
    while n < MAX_QUADRATURE_NODES {
        n *= 2;
        let cur = gauss_chebyshev(sr, n);
        delta = (cur - prev).abs();
        if delta < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { nodes: n, delta })
}

/// `(1/4) log2[(1 + f(1))(1 + f(-1))]` and slope `(1/2) log2[(1 + f(1))/(1 + f(-1))]`.
pub fn zeroth_rate(sr: &SpectralRatio) -> ZerothOrder {
    let (hi, lo) = (sr.log2_1pf(1.0), sr.log2_1pf(-1.0));
    ZerothOrder {
        rate: (hi + lo) / 4.0,
        slope: (hi - lo) / 2.0,
    }
}

/// Power-basis form of `C'B - B'C - s·ln2·CB`, whose roots are the points
/// where `d/du log2(1 + f)` equals the slope `s`.
pub fn tangency_polynomial(sr: &SpectralRatio, slope: f64) -> Vec<f64> {
    let c = sr.combined().coeffs();
    let b = sr.denominator().coeffs();
    let cb = poly::mul(c, b);
    let lhs = poly::mul(&poly::derivative(c), b);
    let rhs = poly::mul(&poly::derivative(b), c);
    let q = poly::add_scaled(&lhs, &rhs, -1.0);
    poly::add_scaled(&q, &cb, -slope * LN_2)
}

/// Upper and lower tangent-line bounds of the rate.
///
/// Candidates are both endpoints plus every interior root of the tangency
/// polynomial. At the endpoints the detrended curve equals twice the chord
/// rate, so `lower <= zeroth <= upper` holds exactly.
pub fn tangent_bounds(sr: &SpectralRatio) -> TangentBounds {
    let ZerothOrder { rate: zeroth, slope } = zeroth_rate(sr);
    let endpoint = 2.0 * zeroth;
    let detrended = |u: f64| sr.log2_1pf(u) - slope * u;

    let q = tangency_polynomial(sr, slope);
    let roots = if q.iter().all(|c| c.is_finite()) {
        Some(poly::real_roots_in(&q, -1.0, 1.0))
    } else {
        None
    };
    let (interior, grid_fallback) = match roots {
        Some(r) if r.iter().all(|u| detrended(*u).is_finite()) => (r, false),
        _ => (
            (1..FALLBACK_GRID)
                .map(|j| -1.0 + 2.0 * j as f64 / FALLBACK_GRID as f64)
                .collect(),
            true,
        ),
    };

    let (mut u_max, mut phi_max) = (1.0, endpoint);
    let (mut u_min, mut phi_min) = (1.0, endpoint);
    for u in interior {
        let phi = detrended(u);
        if phi > phi_max {
            (u_max, phi_max) = (u, phi);
        }
        if phi < phi_min {
            (u_min, phi_min) = (u, phi);
        }
    }
    TangentBounds {
        lower: phi_min / 2.0,
        upper: phi_max / 2.0,
        u_min,
        u_max,
        grid_fallback,
    }
}

/// Exact rate (quadrature tolerance `tol`), chord approximation and tangent bounds.
pub fn evaluate(sr: &SpectralRatio, tol: f64) -> Result<RateReport> {
    let exact = exact_rate(sr, tol)?;
    let zeroth = zeroth_rate(sr);
    let bounds = tangent_bounds(sr);
    Ok(RateReport {
        exact,
        zeroth: zeroth.rate,
        lower: bounds.lower,
        upper: bounds.upper,
        slope: zeroth.slope,
        u_max: bounds.u_max,
        u_min: bounds.u_min,
    })
}
