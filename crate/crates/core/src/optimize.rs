//! Maximization of a rate objective over feasible scaling vectors.
//!
//! The feasible set is a nested box: the bound on `β_i` depends on
//! `β_1..β_{i-1}`. Searching in normalized coordinates `θ ∈ [0, 1]^N`, with
//! `β_i = θ_i · β_{i,max}(β_{<i})`, turns it into the unit cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gains::{beta_max, ScalingVector};
use crate::rate::{exact_rate, tangent_bounds, zeroth_rate};
use crate::spectrum::SpectralRatio;
use crate::topology::ChainNetwork;

/// Values closer than this are treated as ties, broken toward smaller `Σ θ_i`.
pub const TIE_TOL: f64 = 1e-12;

/// A full coordinate cycle improving less than this (bits) stops the ascent.
pub const CYCLE_TOL: f64 = 1e-9;

const MAX_CYCLES: usize = 200;
const SCAN_POINTS: usize = 8;
const GOLDEN_TOL: f64 = 1e-9;
const STATIONARY_SCAN: usize = 64;

/// Which rate expression is being maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Exact,
    Zeroth,
    Upper,
    Lower,
}

impl Objective {
    pub const ALL: [Objective; 4] = [Objective::Exact, Objective::Zeroth, Objective::Upper, Objective::Lower];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Exact => "exact",
            Objective::Zeroth => "zeroth",
            Objective::Upper => "upper",
            Objective::Lower => "lower",
        }
    }

    pub fn evaluate(self, sr: &SpectralRatio, quadrature_tol: f64) -> Result<f64> {
        Ok(match self {
            Objective::Exact => exact_rate(sr, quadrature_tol)?,
            Objective::Zeroth => zeroth_rate(sr).rate,
            Objective::Upper => tangent_bounds(sr).upper,
            Objective::Lower => tangent_bounds(sr).lower,
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown objective `{s}`")))
    }
}

/// Search strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Exhaustive grid with `resolution + 1` points per axis.
    Grid { resolution: usize },
    /// Cyclic coordinate ascent from the full-power corner and `starts` random points.
    MultistartAscent { starts: usize, seed: u64 },
    /// One coordinate at a time in relay order, restarted from every corner of
    /// `{0, 1}^N`; requires equal outgoing gains.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_evaluations: usize,
    pub quadrature_tol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_evaluations: 2_000_000,
            quadrature_tol: 1e-10,
        }
    }
}

/// A point of `[0, 1]^N`, mapped to `β` in relay order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPoint(Vec<f64>);

impl NormalizedPoint {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Precondition(format!("θ = {bad} outside [0, 1]")));
        }
        Ok(Self(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_scaling(&self, net: &ChainNetwork) -> Result<ScalingVector> {
        theta_to_beta(net, &self.0)
    }
}

fn theta_to_beta(net: &ChainNetwork, theta: &[f64]) -> Result<ScalingVector> {
    if theta.len() != net.n_relays() {
        return Err(Error::DimensionMismatch {
            expected: net.n_relays(),
            got: theta.len(),
        });
    }
    let mut beta = ScalingVector::default();
    for (idx, &t) in theta.iter().enumerate() {
        let max = beta_max(net, &beta, idx + 1)?;
        beta.push(t * max);
    }
    Ok(beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub beta_star: ScalingVector,
    pub theta_star: NormalizedPoint,
    pub value: f64,
    pub objective: Objective,
    pub evaluations: usize,
    pub converged: bool,
}

struct Evaluator<'a> {
    net: &'a ChainNetwork,
    objective: Objective,
    budget: Budget,
    evaluations: usize,
}

#[derive(Clone)]
struct Candidate {
    theta: Vec<f64>,
    value: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.value > other.value + TIE_TOL {
            return true;
        }
        self.value >= other.value - TIE_TOL && self.theta.iter().sum::<f64>() < other.theta.iter().sum::<f64>()
    }
}

impl<'a> Evaluator<'a> {
    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget.max_evaluations
    }

    fn eval(&mut self, theta: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let beta = theta_to_beta(self.net, theta)?;
        let sr = SpectralRatio::build(self.net, &beta)?;
        self.objective.evaluate(&sr, self.budget.quadrature_tol)
    }

    fn candidate(&mut self, theta: Vec<f64>) -> Result<Candidate> {
        let value = self.eval(&theta)?;
        Ok(Candidate { theta, value })
    }

    fn along(&mut self, base: &[f64], axis: usize, t: f64) -> Result<Candidate> {
        let mut theta = base.to_vec();
        theta[axis] = t;
        self.candidate(theta)
    }

    /// Best point on one axis: coarse scan, then golden section around the best scan point.
    fn line_search(&mut self, current: &Candidate, axis: usize) -> Result<Candidate> {
        let mut best = current.clone();
        let mut best_scan = (0usize, f64::NEG_INFINITY);
        for j in 0..=SCAN_POINTS {
            let c = self.along(&current.theta, axis, j as f64 / SCAN_POINTS as f64)?;
            if c.value > best_scan.1 {
                best_scan = (j, c.value);
            }
            if c.beats(&best) {
                best = c;
            }
        }
        let j = best_scan.0;
        let lo = j.saturating_sub(1) as f64 / SCAN_POINTS as f64;
        let hi = (j + 1).min(SCAN_POINTS) as f64 / SCAN_POINTS as f64;
        let c = self.golden(&current.theta, axis, lo, hi)?;
        if c.beats(&best) {
            best = c;
        }
        Ok(best)
    }

    fn golden(&mut self, base: &[f64], axis: usize, mut a: f64, mut b: f64) -> Result<Candidate> {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - ratio * (b - a);
        let mut x2 = a + ratio * (b - a);
        let mut c1 = self.along(base, axis, x1)?;
        let mut c2 = self.along(base, axis, x2)?;
        while b - a > GOLDEN_TOL && !self.exhausted() {
            if c1.value >= c2.value {
                b = x2;
                x2 = x1;
                c2 = c1;
                x1 = b - ratio * (b - a);
                c1 = self.along(base, axis, x1)?;
            } else {
                a = x1;
                x1 = x2;
                c1 = c2;
                x2 = a + ratio * (b - a);
                c2 = self.along(base, axis, x2)?;
            }
        }
        Ok(if c2.beats(&c1) { c2 } else { c1 })
    }

    /// Cyclic coordinate ascent; returns the final point and whether it converged.
    fn ascend(&mut self, start: Vec<f64>) -> Result<(Candidate, bool)> {
        let mut current = self.candidate(start)?;
        let dims = current.theta.len();
        for _ in 0..MAX_CYCLES {
            let before = current.value;
            for axis in 0..dims {
                if self.exhausted() {
                    return Ok((current, false));
                }
                current = self.line_search(&current, axis)?;
            }
            if current.value - before < CYCLE_TOL {
                return Ok((current, true));
            }
        }
        Ok((current, false))
    }

    /// Best among `{0, 1}`, the current value and every interior stationary point on one axis.
    fn stationary_search(&mut self, current: &Candidate, axis: usize) -> Result<Candidate> {
        let mut best = current.clone();
        let samples: Vec<Candidate> = (0..=STATIONARY_SCAN)
            .map(|j| self.along(&current.theta, axis, j as f64 / STATIONARY_SCAN as f64))
            .collect::<Result<_>>()?;
        for c in [&samples[0], &samples[STATIONARY_SCAN]] {
            if c.beats(&best) {
                best = c.clone();
            }
        }
        for j in 1..STATIONARY_SCAN {
            let left = samples[j].value - samples[j - 1].value;
            let right = samples[j + 1].value - samples[j].value;
            if (left > 0.0) != (right > 0.0) {
                let lo = (j - 1) as f64 / STATIONARY_SCAN as f64;
                let hi = (j + 1) as f64 / STATIONARY_SCAN as f64;
                let t = self.derivative_root(&current.theta, axis, lo, hi)?;
                let c = self.along(&current.theta, axis, t)?;
                if c.beats(&best) {
                    best = c;
                }
            }
        }
        Ok(best)
    }

    // Bisection on a central-difference derivative over [lo, hi].
    fn derivative_root(&mut self, base: &[f64], axis: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
        let step = 1e-7;
        let slope = |ev: &mut Self, t: f64| -> Result<f64> {
            let a = (t - step).max(0.0);
            let b = (t + step).min(1.0);
            Ok((ev.along(base, axis, b)?.value - ev.along(base, axis, a)?.value) / (b - a))
        };
        let s_lo = slope(self, lo)?;
        let s_hi = slope(self, hi)?;
        if (s_lo > 0.0) == (s_hi > 0.0) {
            // No sign change at this resolution; the bracket midpoint is the best estimate.
            return Ok(0.5 * (lo + hi));
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if (slope(self, mid)? > 0.0) == (s_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Maximizes `objective` over the feasible scaling vectors of `net`.
pub fn optimize(net: &ChainNetwork, objective: Objective, method: &Method, budget: Budget) -> Result<OptimizationResult> {
    let mut ev = Evaluator { net, objective, budget, evaluations: 0 };
    let dims = net.n_relays();
    let (best, converged) = match *method {
        Method::Grid { resolution } => grid(&mut ev, dims, resolution)?,
        Method::MultistartAscent { starts, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut origins = vec![vec![1.0; dims]];
            origins.extend((0..starts).map(|_| (0..dims).map(|_| rng.gen::<f64>()).collect()));
            let mut best: Option<Candidate> = None;
            let mut all_converged = true;
            for start in origins {
                if ev.exhausted() {
                    all_converged = false;
                    break;
                }
                let (c, conv) = ev.ascend(start)?;
                all_converged &= conv;
                if best.as_ref().is_none_or(|b| c.beats(b)) {
                    best = Some(c);
                }
            }
            (best.expect("at least one start"), all_converged)
        }
        Method::Sequential => sequential(&mut ev)?,
    };
    let theta_star = NormalizedPoint::new(best.theta)?;
    Ok(OptimizationResult {
        beta_star: theta_star.to_scaling(net)?,
        theta_star,
        value: best.value,
        objective,
        evaluations: ev.evaluations,
        converged,
    })
}

/// Coordinate ascent on `objective` from each point of `starts`, keeping the best.
///
/// The result is never worse than `objective` evaluated at any start, which lets
/// callers seed one objective with the optima of another.
pub fn ascend_from(
    net: &ChainNetwork,
    objective: Objective,
    starts: &[NormalizedPoint],
    budget: Budget,
) -> Result<OptimizationResult> {
    if starts.is_empty() {
        return Err(Error::Config("ascend_from needs at least one start".into()));
    }
    let mut ev = Evaluator { net, objective, budget, evaluations: 0 };
    let mut best: Option<Candidate> = None;
    let mut all_converged = true;
    for start in starts {
        if start.as_slice().len() != net.n_relays() {
            return Err(Error::DimensionMismatch { expected: net.n_relays(), got: start.as_slice().len() });
        }
        if ev.exhausted() {
            all_converged = false;
            break;
        }
        let seed = ev.candidate(start.as_slice().to_vec())?;
        let (c, conv) = ev.ascend(start.as_slice().to_vec())?;
        all_converged &= conv;
        for c in [seed, c] {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
    }
    let best = best.expect("at least one start");
    let theta_star = NormalizedPoint::new(best.theta)?;
    Ok(OptimizationResult {
        beta_star: theta_star.to_scaling(net)?,
        theta_star,
        value: best.value,
        objective,
        evaluations: ev.evaluations,
        converged: all_converged,
    })
}

fn grid(ev: &mut Evaluator<'_>, dims: usize, resolution: usize) -> Result<(Candidate, bool)> {
    if resolution == 0 {
        return Err(Error::Config("grid resolution must be at least 1".into()));
    }
    let mut index = vec![0usize; dims];
    let mut best: Option<Candidate> = None;
    loop {
        if ev.exhausted() {
            return Ok((best.expect("budget allows one evaluation"), false));
        }
        let theta = index.iter().map(|&j| j as f64 / resolution as f64).collect();
        let c = ev.candidate(theta)?;
        if best.as_ref().is_none_or(|b| c.beats(b)) {
            best = Some(c);
        }
        // Odometer increment, last axis fastest.
        let mut axis = dims;
        loop {
            if axis == 0 {
                return Ok((best.expect("grid is nonempty"), true));
            }
            axis -= 1;
            index[axis] += 1;
            if index[axis] <= resolution {
                break;
            }
            index[axis] = 0;
        }
    }
}

fn sequential(ev: &mut Evaluator<'_>) -> Result<(Candidate, bool)> {
    if !ev.net.has_equal_outgoing_gains(1e-12) {
        return Err(Error::Precondition(
            "sequential optimization needs equal gains on all outgoing edges of each node".into(),
        ));
    }
    if ev.objective != Objective::Zeroth {
        return Err(Error::Precondition(format!(
            "sequential optimization applies to the zeroth-order objective, not `{}`",
            ev.objective.name()
        )));
    }
    let dims = ev.net.n_relays();
    let mut best: Option<Candidate> = None;
    let mut all_converged = true;
    // Every corner of the cube is an initial assignment; the full-power corner goes first.
    for mask in (0..1usize << dims).rev() {
        let start = (0..dims).map(|i| ((mask >> i) & 1) as f64).collect();
        let (c, conv) = sequential_from(ev, start)?;
        all_converged &= conv;
        if best.as_ref().is_none_or(|b| c.beats(b)) {
            best = Some(c);
        }
        if ev.exhausted() {
            all_converged = false;
            break;
        }
    }
    Ok((best.expect("at least one corner"), all_converged))
}

fn sequential_from(ev: &mut Evaluator<'_>, start: Vec<f64>) -> Result<(Candidate, bool)> {
    let dims = start.len();
    let mut current = ev.candidate(start)?;
    for _ in 0..MAX_CYCLES {
        let before = current.value;
        for axis in 0..dims {
            if ev.exhausted() {
                return Ok((current, false));
            }
            current = ev.stationary_search(&current, axis)?;
        }
        if current.value - before < CYCLE_TOL {
            return Ok((current, true));
        }
    }
    Ok((current, false))
}

/// Convenience: optimize every objective in `objectives` with the same method and budget.
pub fn optimize_all(
    net: &ChainNetwork,
    objectives: &[Objective],
    method: &Method,
    budget: Budget,
) -> Result<Vec<OptimizationResult>> {
    objectives.iter().map(|&o| optimize(net, o, method, budget)).collect()
}

/// Relay-by-relay maximization of the zeroth-order objective on an
/// equal-outgoing-gain network.
pub fn optimize_sequential_equal_gains(net: &ChainNetwork, budget: Budget) -> Result<OptimizationResult> {
    optimize(net, Objective::Zeroth, &Method::Sequential, budget)
}
