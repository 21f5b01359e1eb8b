//! The rational spectral function `f(u) = (P_s/σ²) · A(u) / B(u)` in the
//! variable `u = cos λ`.
//!
//! `A(cos λ) = |H(λ)|²` comes from the source taps and
//! `B(cos λ) = 1 + Σ_m |H_m(λ)|²` from the relay-noise taps. Cross terms
//! `cos((d' - d)λ)` are rewritten as Chebyshev polynomials `T_{d'-d}(u)`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::gains::{modified_gains, DelayTaps, ScalingVector};
use crate::poly;
use crate::topology::ChainNetwork;

/// Top coefficients smaller than this fraction of the largest one are dropped.
pub const TRIM_TOL: f64 = 1e-14;

/// A polynomial `Σ c_i u^i` on `u ∈ [-1, 1]`, trailing near-zero terms trimmed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CosinePolynomial {
    coeffs: Vec<f64>,
}

impl CosinePolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        poly::trim(&mut coeffs, TRIM_TOL * scale);
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `u^i` (zero past the degree).
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, u: f64) -> f64 {
        poly::eval(&self.coeffs, u)
    }

    pub fn derivative(&self) -> Self {
        Self::new(poly::derivative(&self.coeffs))
    }

    /// `self + scale · other`.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Self {
        Self::new(poly::add_scaled(&self.coeffs, &other.coeffs, scale))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(poly::mul(&self.coeffs, &other.coeffs))
    }
}

/// `P(u)` with `P(cos λ) = |Σ_d h_d e^{-idλ}|²`.
pub fn squared_magnitude_poly(taps: &DelayTaps) -> CosinePolynomial {
    let entries: Vec<(usize, f64)> = taps.iter().collect();
    let span = match (entries.first(), entries.last()) {
        (Some(&(lo, _)), Some(&(hi, _))) => hi - lo,
        _ => return CosinePolynomial::default(),
    };
    let cheb = poly::chebyshev_t_table(span);
    let mut coeffs = vec![0.0; span + 1];
    for (a, &(d, h)) in entries.iter().enumerate() {
        coeffs[0] += h * h;
        for &(d2, h2) in &entries[a + 1..] {
            let w = 2.0 * h * h2;
            for (c, t) in coeffs.iter_mut().zip(&cheb[d2 - d]) {
                *c += w * t;
            }
        }
    }
    CosinePolynomial::new(coeffs)
}

/// `f(u) = snr_scale · A(u) / B(u)` together with `C = B + snr_scale · A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRatio {
    numerator: CosinePolynomial,
    denominator: CosinePolynomial,
    snr_scale: f64,
    combined: CosinePolynomial,
    combined_deriv: CosinePolynomial,
    denominator_deriv: CosinePolynomial,
}

impl SpectralRatio {
    pub fn from_parts(numerator: CosinePolynomial, denominator: CosinePolynomial, snr_scale: f64) -> Self {
        let combined = denominator.add_scaled(&numerator, snr_scale);
        Self {
            combined_deriv: combined.derivative(),
            denominator_deriv: denominator.derivative(),
            numerator,
            denominator,
            snr_scale,
            combined,
        }
    }

    /// Builds `A`, `B` and `C` for scaling vector `beta` at the destination.
    pub fn build(net: &ChainNetwork, beta: &ScalingVector) -> Result<Self> {
        if beta.len() != net.n_relays() {
            return Err(Error::DimensionMismatch {
                expected: net.n_relays(),
                got: beta.len(),
            });
        }
        let profile = modified_gains(net, beta, net.destination())?;
        let numerator = squared_magnitude_poly(&profile.source);
        let denominator = profile
            .noise
            .iter()
            .fold(CosinePolynomial::constant(1.0), |acc, taps| {
                acc.add_scaled(&squared_magnitude_poly(taps), 1.0)
            });
        Ok(Self::from_parts(numerator, denominator, net.snr_scale()))
    }

    /// `A(u)`.
    pub fn numerator(&self) -> &CosinePolynomial {
        &self.numerator
    }

    /// `B(u)`.
    pub fn denominator(&self) -> &CosinePolynomial {
        &self.denominator
    }

    /// `C(u) = B(u) + snr_scale · A(u)`.
    pub fn combined(&self) -> &CosinePolynomial {
        &self.combined
    }

    pub fn snr_scale(&self) -> f64 {
        self.snr_scale
    }

    /// `f(u)`; round-off below zero near spectral nulls is clamped.
    pub fn eval_f(&self, u: f64) -> f64 {
        (self.snr_scale * self.numerator.eval(u) / self.denominator.eval(u)).max(0.0)
    }

    /// `log2(1 + f(u))`.
    pub fn log2_1pf(&self, u: f64) -> f64 {
        self.eval_f(u).ln_1p() / LN_2
    }

    /// `d/du ln(1 + f(u)) = C'/C - B'/B` (natural log).
    pub fn dlog1pf_du(&self, u: f64) -> f64 {
        self.combined_deriv.eval(u) / self.combined.eval(u)
            - self.denominator_deriv.eval(u) / self.denominator.eval(u)
    }

    /// Checks `A >= 0` and `B >= 1` on a 1024-point grid plus both endpoints,
    /// with relative slack `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let scale_a = self.numerator.coeffs().iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        let scale_b = self.denominator.coeffs().iter().map(|c| c.abs()).sum::<f64>();
        for j in 0..=1025 {
            let u = (-1.0 + 2.0 * j as f64 / 1025.0).clamp(-1.0, 1.0);
            let a = self.numerator.eval(u);
            let b = self.denominator.eval(u);
            if a < -tol * scale_a {
                return Err(Error::Precondition(format!("A({u}) = {a} < 0")));
            }
            if b < 1.0 - tol * scale_b {
                return Err(Error::Precondition(format!("B({u}) = {b} < 1")));
            }
        }
        Ok(())
    }
}
