//! Modified channel gains, received powers and the nested power bounds on
//! the relay scaling factors.
//!
//! Gains are accumulated node by node over the DAG, one delay slot at a time,
//! so the cost is polynomial even though the number of paths is exponential
//! in `N`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::topology::{ChainNetwork, SOURCE};

/// Per-relay amplification factors `β_1..β_N` (stored 0-based, accessed 1-based).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalingVector(Vec<f64>);

impl ScalingVector {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        for (idx, &b) in beta.iter().enumerate() {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Infeasible {
                    relay: idx + 1,
                    value: b,
                    max: f64::INFINITY,
                });
            }
        }
        Ok(Self(beta))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// `β_i` for relay `i` (1-based).
    pub fn get(&self, i: usize) -> f64 {
        self.0[i - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn push(&mut self, b: f64) {
        self.0.push(b);
    }

    /// Checks `0 <= β_i <= beta_max(i)` in relay order, allowing `tol` of slack.
    pub fn check_feasible(&self, net: &ChainNetwork, tol: f64) -> Result<()> {
        if self.len() != net.n_relays() {
            return Err(Error::DimensionMismatch {
                expected: net.n_relays(),
                got: self.len(),
            });
        }
        for i in 1..=net.n_relays() {
            let max = beta_max(net, self, i)?;
            let value = self.get(i);
            if value > max * (1.0 + tol) + tol {
                return Err(Error::Infeasible { relay: i, value, max });
            }
        }
        Ok(())
    }
}

/// Delay-indexed gains. A delay is present iff at least one path of that delay exists,
/// so a present entry may still be `0.0` (e.g. when some `β` vanishes).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelayTaps(BTreeMap<usize, f64>);

impl DelayTaps {
    pub fn from_map(taps: BTreeMap<usize, f64>) -> Self {
        Self(taps)
    }

    pub fn get(&self, delay: usize) -> f64 {
        self.0.get(&delay).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0.iter().map(|(&d, &h)| (d, h))
    }

    pub fn delays(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ_d h_d²`.
    pub fn energy(&self) -> f64 {
        self.0.values().map(|h| h * h).sum()
    }

    pub fn as_map(&self) -> &BTreeMap<usize, f64> {
        &self.0
    }
}

/// Source and relay-noise gains seen at one target node.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub target: usize,
    /// `h_d`: source symbol delayed by `d`.
    pub source: DelayTaps,
    /// `noise[m - 1]` holds `h_{m,d}` for every relay `m` upstream of the target.
    pub noise: Vec<DelayTaps>,
}

impl DelayProfile {
    pub fn noise_from(&self, m: usize) -> &DelayTaps {
        &self.noise[m - 1]
    }
}

// Dense per-node accumulator; `None` marks a delay with no path at all.
type Slots = Vec<Option<f64>>;

fn add_shifted(acc: &mut Slots, from: &Slots, factor: f64) {
    for (d, v) in from.iter().enumerate() {
        if let Some(v) = v {
            let slot = &mut acc[d + 1];
            *slot = Some(slot.unwrap_or(0.0) + factor * v);
        }
    }
}

fn to_taps(slots: &Slots) -> DelayTaps {
    DelayTaps(
        slots
            .iter()
            .enumerate()
            .filter_map(|(d, v)| v.map(|v| (d, v)))
            .collect(),
    )
}

fn check_prefix(net: &ChainNetwork, beta: &ScalingVector, target: usize) -> Result<()> {
    net.check_node(target, 1, net.destination())?;
    if beta.len() + 1 < target.min(net.destination()) {
        return Err(Error::DimensionMismatch {
            expected: target - 1,
            got: beta.len(),
        });
    }
    Ok(())
}

/// Modified gains from the source and from each relay `m < target` to `target`.
pub fn modified_gains(net: &ChainNetwork, beta: &ScalingVector, target: usize) -> Result<DelayProfile> {
    check_prefix(net, beta, target)?;
    let width = net.destination() + 2;

    // Received-signal coefficients at every node 1..=target.
    let mut source: Vec<Slots> = vec![vec![None; width]; target + 1];
    for i in 1..=target {
        let mut acc = vec![None; width];
        for j in net.incoming_neighbors(i) {
            let h = net.gain(j, i).expect("incoming edge exists");
            if j == SOURCE {
                acc[0] = Some(acc[0].unwrap_or(0.0) + h);
            } else {
                add_shifted(&mut acc, &source[j], h * beta.get(j));
            }
        }
        source[i] = acc;
    }

    let mut noise = Vec::with_capacity(target.saturating_sub(1));
    for m in 1..target {
        let mut at: Vec<Slots> = vec![vec![None; width]; target + 1];
        at[m][0] = Some(1.0);
        for i in m + 1..=target {
            let mut acc = vec![None; width];
            for j in net.incoming_neighbors(i).filter(|&j| j >= m) {
                let h = net.gain(j, i).expect("incoming edge exists");
                add_shifted(&mut acc, &at[j], h * beta.get(j));
            }
            at[i] = acc;
        }
        noise.push(to_taps(&at[target]));
    }

    Ok(DelayProfile {
        target,
        source: to_taps(&source[target]),
        noise,
    })
}

/// Average received power `P_{R,i}` at node `i`, including its own noise.
pub fn received_power(net: &ChainNetwork, beta: &ScalingVector, i: usize) -> Result<f64> {
    let profile = modified_gains(net, beta, i)?;
    let sigma2 = net.noise_var();
    let relayed_noise: f64 = profile.noise.iter().map(DelayTaps::energy).sum();
    Ok(net.source_power() * profile.source.energy() + sigma2 * relayed_noise + sigma2)
}

/// Largest admissible `β_i` given `β_1..β_{i-1}`: `sqrt(P_i / P_{R,i})`.
pub fn beta_max(net: &ChainNetwork, beta_prefix: &ScalingVector, i: usize) -> Result<f64> {
    net.check_node(i, 1, net.n_relays())?;
    Ok((net.relay_power(i) / received_power(net, beta_prefix, i)?).sqrt())
}
