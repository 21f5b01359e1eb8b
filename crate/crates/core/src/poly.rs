//! Power-basis polynomial helpers: Horner evaluation, Chebyshev expansion and
//! real-root isolation on an interval.
//!
//! Coefficients are stored lowest degree first.

/// Evaluates `Σ c_i x^i`.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a + scale · b`.
pub fn add_scaled(a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (o, &x) in out.iter_mut().zip(a) {
        *o += x;
    }
    for (o, &y) in out.iter_mut().zip(b) {
        *o += scale * y;
    }
    out
}

/// Drops trailing coefficients with magnitude at most `tol`.
pub fn trim(coeffs: &mut Vec<f64>, tol: f64) {
    while coeffs.last().is_some_and(|c| c.abs() <= tol) {
        coeffs.pop();
    }
}

/// Power-basis coefficients of the Chebyshev polynomials `T_0..=T_max`,
/// built with `T_{n+1} = 2u T_n - T_{n-1}`.
pub fn chebyshev_t_table(max: usize) -> Vec<Vec<f64>> {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(max + 1);
    table.push(vec![1.0]);
    if max >= 1 {
        table.push(vec![0.0, 1.0]);
    }
    for n in 1..max {
        let mut next = vec![0.0; n + 2];
        for (i, &c) in table[n].iter().enumerate() {
            next[i + 1] += 2.0 * c;
        }
        for (i, &c) in table[n - 1].iter().enumerate() {
            next[i] -= c;
        }
        table.push(next);
    }
    table
}

fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = eval(coeffs, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(coeffs, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    polish(coeffs, root, lo, hi)
}

// One Newton step, kept only if it stays inside the bracket.
fn polish(coeffs: &[f64], x: f64, lo: f64, hi: f64) -> f64 {
    let f = eval(coeffs, x);
    let df = eval(&derivative(coeffs), x);
    if df != 0.0 {
        let next = x - f / df;
        if next.is_finite() && next >= lo && next <= hi && eval(coeffs, next).abs() <= f.abs() {
            return next;
        }
    }
    x
}

/// Real roots of the polynomial in the open interval `(lo, hi)` at which it
/// changes sign, in increasing order.
///
/// Roots are isolated recursively: the critical points of `p` (roots of
/// `p'`) split `[lo, hi]` into pieces on which `p` is monotone, and every
/// sign change across a piece is bracketed and bisected. Touching roots of
/// even multiplicity are only reported when they land exactly on zero.
pub fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let mut p: Vec<f64> = coeffs.iter().map(|c| c / scale).collect();
    trim(&mut p, 1e-300);
    roots_normalized(&p, lo, hi)
}

fn roots_normalized(p: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    match p.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let r = -p[0] / p[1];
            return if r > lo && r < hi { vec![r] } else { Vec::new() };
        }
        _ => {}
    }
    let mut breaks = vec![lo];
    breaks.extend(real_roots_in(&derivative(p), lo, hi));
    breaks.push(hi);

    let mut roots: Vec<f64> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(p, a), eval(p, b));
        if fa == 0.0 && a > lo {
            roots.push(a);
            continue;
        }
        if fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            roots.push(bisect(p, a, b));
        }
    }
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-14);
    roots
}
