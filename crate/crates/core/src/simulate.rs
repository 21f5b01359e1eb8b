//! Sample-level simulation of the relay chain.
//!
//! At every instant `n`, relay `i` transmits `x_i[n] = β_i y_i[n-1]` and each
//! receiving node observes `y_i[n] = Σ_j h_{ji} x_j[n] + z_i[n]`. Nothing here
//! uses the modified-gain recursion, so the simulator is an independent
//! check on it.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::gains::ScalingVector;
use crate::topology::{ChainNetwork, SOURCE};

/// Minimum Monte Carlo sample count accepted by the power estimators.
pub const MIN_SAMPLES: usize = 10_000;

const BATCHES: usize = 50;

/// Where a unit impulse is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// As the source symbol `x_s[0]`.
    Source,
    /// As the noise sample `z_m[0]` received by relay `m`.
    Relay(usize),
}

/// Input sequences driving one run: the source symbols and, per receiving
/// node `1..=N+1`, its additive noise (an empty sequence means noise off).
#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    pub source: Vec<f64>,
    pub noise: Vec<Vec<f64>>,
}

impl Excitation {
    pub fn silent(net: &ChainNetwork, horizon: usize) -> Self {
        Self {
            source: vec![0.0; horizon],
            noise: vec![Vec::new(); net.destination()],
        }
    }

    pub fn horizon(&self) -> usize {
        self.source.len()
    }

    fn noise_at(&self, node: usize, n: usize) -> f64 {
        self.noise[node - 1].get(n).copied().unwrap_or(0.0)
    }
}

/// Sample paths of every node over `0..horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub horizon: usize,
    /// `x[i][n]` for nodes `0..=N` (source and relays).
    pub x: Vec<Vec<f64>>,
    /// `y[i][n]` for nodes `1..=N+1`; `y[0]` is empty.
    pub y: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    /// `noise_enabled[i - 1]` for receiving node `i`.
    pub noise_enabled: Vec<bool>,
}

fn check_beta(net: &ChainNetwork, beta: &ScalingVector) -> Result<()> {
    if beta.len() != net.n_relays() {
        return Err(Error::DimensionMismatch {
            expected: net.n_relays(),
            got: beta.len(),
        });
    }
    Ok(())
}

/// Advances one instant. `y_prev` holds `y_i[n-1]`; on return `x` and `y` hold instant `n`.
fn step(
    net: &ChainNetwork,
    beta: &ScalingVector,
    source: f64,
    noise: impl Fn(usize) -> f64,
    y_prev: &[f64],
    x: &mut [f64],
    y: &mut [f64],
) {
    x[SOURCE] = source;
    for i in 1..=net.n_relays() {
        x[i] = beta.get(i) * y_prev[i];
    }
    for (i, yi) in y.iter_mut().enumerate().take(net.destination() + 1).skip(1) {
        *yi = net
            .incoming_neighbors(i)
            .map(|j| net.gain(j, i).expect("incoming edge exists") * x[j])
            .sum::<f64>()
            + noise(i);
    }
}

/// Runs the chain on an explicit excitation.
pub fn run(net: &ChainNetwork, beta: &ScalingVector, excitation: &Excitation) -> Result<Transcript> {
    check_beta(net, beta)?;
    if excitation.noise.len() != net.destination() {
        return Err(Error::DimensionMismatch {
            expected: net.destination(),
            got: excitation.noise.len(),
        });
    }
    let nodes = net.destination() + 1;
    let horizon = excitation.horizon();
    let mut xs = vec![Vec::with_capacity(horizon); nodes - 1];
    let mut ys = vec![Vec::with_capacity(horizon); nodes];
    let mut y_prev = vec![0.0; nodes];
    let mut x = vec![0.0; nodes];
    let mut y = vec![0.0; nodes];
    for n in 0..horizon {
        step(net, beta, excitation.source[n], |i| excitation.noise_at(i, n), &y_prev, &mut x, &mut y);
        for (i, xi) in x[..nodes - 1].iter().enumerate() {
            xs[i].push(*xi);
        }
        for i in 1..nodes {
            ys[i].push(y[i]);
        }
        std::mem::swap(&mut y_prev, &mut y);
    }
    Ok(Transcript {
        horizon,
        x: xs,
        y: ys,
        seed: None,
        noise_enabled: excitation.noise.iter().map(|z| !z.is_empty()).collect(),
    })
}

impl Transcript {
    /// Gaussian run: `x_s ~ N(0, P_s)`, `z_i ~ N(0, σ²)` at every node with `noise_enabled[i - 1]`.
    pub fn gaussian(
        net: &ChainNetwork,
        beta: &ScalingVector,
        horizon: usize,
        seed: u64,
        noise_enabled: &[bool],
    ) -> Result<Self> {
        if noise_enabled.len() != net.destination() {
            return Err(Error::DimensionMismatch {
                expected: net.destination(),
                got: noise_enabled.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = Normal::new(0.0, net.source_power().sqrt()).expect("positive power");
        let nz = Normal::new(0.0, net.noise_var().sqrt()).expect("positive variance");
        let source = (0..horizon).map(|_| src.sample(&mut rng)).collect();
        let noise = noise_enabled
            .iter()
            .map(|&on| if on { (0..horizon).map(|_| nz.sample(&mut rng)).collect() } else { Vec::new() })
            .collect();
        let mut t = run(net, beta, &Excitation { source, noise })?;
        t.seed = Some(seed);
        Ok(t)
    }

    /// Destination output `y_t[n]`.
    pub fn destination_output(&self) -> &[f64] {
        self.y.last().expect("destination row")
    }
}

/// Destination taps produced by a unit impulse at `origin` with all noise off.
///
/// Only nonzero taps are reported; they sit at the delays of the corresponding
/// modified gains.
pub fn impulse_response(net: &ChainNetwork, beta: &ScalingVector, origin: Origin) -> Result<BTreeMap<usize, f64>> {
    let horizon = net.destination() + 2;
    let mut ex = Excitation::silent(net, horizon);
    match origin {
        Origin::Source => ex.source[0] = 1.0,
        Origin::Relay(m) => {
            net.check_node(m, 1, net.n_relays())?;
            let mut z = vec![0.0; horizon];
            z[0] = 1.0;
            ex.noise[m - 1] = z;
        }
    }
    let t = run(net, beta, &ex)?;
    Ok(t.destination_output()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(d, &v)| (d, v))
        .collect())
}

/// Monte Carlo mean of a squared signal and its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Received power at every node `1..=N+1` and transmit power at every relay.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    /// `received[i - 1]` estimates `E[y_i²]`.
    pub received: Vec<PowerEstimate>,
    /// `transmit[i - 1]` estimates `E[x_i²]` for relay `i`.
    pub transmit: Vec<PowerEstimate>,
}

struct BatchMeans {
    batch_len: usize,
    sums: Vec<f64>,
    current: f64,
    filled: usize,
}

impl BatchMeans {
    fn new(samples: usize) -> Self {
        Self {
            batch_len: samples / BATCHES,
            sums: Vec::with_capacity(BATCHES),
            current: 0.0,
            filled: 0,
        }
    }

    fn push(&mut self, v: f64) {
        if self.sums.len() == BATCHES {
            return;
        }
        self.current += v;
        self.filled += 1;
        if self.filled == self.batch_len {
            self.sums.push(self.current / self.batch_len as f64);
            self.current = 0.0;
            self.filled = 0;
        }
    }

    // Batches absorb the short-range correlation that ISI introduces between
    // consecutive samples.
    fn finish(&self) -> PowerEstimate {
        let b = self.sums.len() as f64;
        let mean = self.sums.iter().sum::<f64>() / b;
        let var = self.sums.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
        PowerEstimate {
            mean,
            std_error: (var / b).sqrt(),
        }
    }
}

/// Streams `samples` steady-state instants (after `N + 1` warm-up samples)
/// with Gaussian source and all noises enabled.
pub fn estimate_powers(net: &ChainNetwork, beta: &ScalingVector, samples: usize, seed: u64) -> Result<PowerReport> {
    check_beta(net, beta)?;
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "power estimation needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = Normal::new(0.0, net.source_power().sqrt()).expect("positive power");
    let nz = Normal::new(0.0, net.noise_var().sqrt()).expect("positive variance");
    let nodes = net.destination() + 1;
    let warmup = net.n_relays() + 1;
    let mut y_prev = vec![0.0; nodes];
    let mut x = vec![0.0; nodes];
    let mut y = vec![0.0; nodes];
    let mut noise = vec![0.0; nodes];
    let mut received: Vec<BatchMeans> = (1..nodes).map(|_| BatchMeans::new(samples)).collect();
    let mut transmit: Vec<BatchMeans> = (1..nodes - 1).map(|_| BatchMeans::new(samples)).collect();
    for n in 0..warmup + samples {
        let s = src.sample(&mut rng);
        for z in noise.iter_mut().skip(1) {
            *z = nz.sample(&mut rng);
        }
        step(net, beta, s, |i| noise[i], &y_prev, &mut x, &mut y);
        if n >= warmup {
            for i in 1..nodes {
                received[i - 1].push(y[i] * y[i]);
            }
            for i in 1..nodes - 1 {
                transmit[i - 1].push(x[i] * x[i]);
            }
        }
        std::mem::swap(&mut y_prev, &mut y);
    }
    Ok(PowerReport {
        received: received.iter().map(BatchMeans::finish).collect(),
        transmit: transmit.iter().map(BatchMeans::finish).collect(),
    })
}

/// Monte Carlo estimate of `E[y_node²]` for a receiving node.
pub fn estimate_power(
    net: &ChainNetwork,
    beta: &ScalingVector,
    node: usize,
    samples: usize,
    seed: u64,
) -> Result<PowerEstimate> {
    net.check_node(node, 1, net.destination())?;
    Ok(estimate_powers(net, beta, samples, seed)?.received[node - 1])
}
