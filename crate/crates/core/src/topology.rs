//! `(N, k)` nonlinear chain topology and delay-indexed path bookkeeping.
//!
//! Nodes are numbered `0` (source), `1..=N` (relays) and `N + 1`
//! (destination). Edge `j -> i` exists exactly when `1 <= i - j <= k`.
//!
//! Two delay conventions are used throughout the crate:
//!
//! * a path leaving the **source** has delay equal to the number of relays it
//!   visits (each relay forwards with a one-sample lag),
//! * a path leaving **relay `m`** (carrying the noise that `m` received) has
//!   delay equal to its number of edges, since relay `m` itself already adds
//!   one sample of lag before the first hop.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the source node.
pub const SOURCE: usize = 0;

/// An `(N, k)` nonlinear chain with real channel gains and power budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainNetwork {
    n_relays: usize,
    reach: usize,
    // out_gains[j][o - 1] is the gain of edge j -> j + o.
    out_gains: Vec<Vec<f64>>,
    noise_var: f64,
    source_power: f64,
    relay_power: Vec<f64>,
}

/// One entry of an edge-gain listing, as read from and written to JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeGain {
    pub from: usize,
    pub to: usize,
    pub gain: f64,
}

fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive { what, value })
    }
}

impl ChainNetwork {
    /// Builds a chain with every edge gain set to `1.0`.
    pub fn new(
        n_relays: usize,
        reach: usize,
        noise_var: f64,
        source_power: f64,
        relay_power: Vec<f64>,
    ) -> Result<Self> {
        Self::from_gain_fn(n_relays, reach, noise_var, source_power, relay_power, |_, _| 1.0)
    }

    /// Builds a chain whose gain on edge `j -> i` is `gain(j, i)`.
    pub fn from_gain_fn(
        n_relays: usize,
        reach: usize,
        noise_var: f64,
        source_power: f64,
        relay_power: Vec<f64>,
        mut gain: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        if n_relays == 0 || reach == 0 || reach > n_relays + 1 {
            return Err(Error::InvalidTopology { n_relays, reach });
        }
        check_positive("noise variance", noise_var)?;
        check_positive("source power", source_power)?;
        if relay_power.len() != n_relays {
            return Err(Error::DimensionMismatch {
                expected: n_relays,
                got: relay_power.len(),
            });
        }
        for &p in &relay_power {
            check_positive("relay power", p)?;
        }
        let dest = n_relays + 1;
        let mut out_gains = Vec::with_capacity(dest);
        for j in 0..dest {
            let fan_out = reach.min(dest - j);
            let mut row = Vec::with_capacity(fan_out);
            for o in 1..=fan_out {
                let value = gain(j, j + o);
                if !value.is_finite() {
                    return Err(Error::NonFiniteGain { from: j, to: j + o, value });
                }
                row.push(value);
            }
            out_gains.push(row);
        }
        Ok(Self {
            n_relays,
            reach,
            out_gains,
            noise_var,
            source_power,
            relay_power,
        })
    }

    /// Builds a chain from an explicit edge list; every edge must be listed exactly once.
    pub fn from_edges(
        n_relays: usize,
        reach: usize,
        noise_var: f64,
        source_power: f64,
        relay_power: Vec<f64>,
        edges: &[EdgeGain],
    ) -> Result<Self> {
        let mut net = Self::new(n_relays, reach, noise_var, source_power, relay_power)?;
        let mut seen = vec![vec![false; reach]; n_relays + 1];
        for e in edges {
            net.set_gain(e.from, e.to, e.gain)?;
            seen[e.from][e.to - e.from - 1] = true;
        }
        for (j, row) in net.out_gains.iter().enumerate() {
            for o in 1..=row.len() {
                if !seen[j][o - 1] {
                    return Err(Error::Config(format!("missing gain for edge {j} -> {}", j + o)));
                }
            }
        }
        Ok(net)
    }

    pub fn n_relays(&self) -> usize {
        self.n_relays
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn destination(&self) -> usize {
        self.n_relays + 1
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn source_power(&self) -> f64 {
        self.source_power
    }

    /// Power budget of relay `i` (1-based).
    pub fn relay_power(&self, i: usize) -> f64 {
        self.relay_power[i - 1]
    }

    pub fn relay_powers(&self) -> &[f64] {
        &self.relay_power
    }

    pub fn set_source_power(&mut self, source_power: f64) -> Result<()> {
        check_positive("source power", source_power)?;
        self.source_power = source_power;
        Ok(())
    }

    pub fn set_relay_powers(&mut self, relay_power: Vec<f64>) -> Result<()> {
        if relay_power.len() != self.n_relays {
            return Err(Error::DimensionMismatch {
                expected: self.n_relays,
                got: relay_power.len(),
            });
        }
        for &p in &relay_power {
            check_positive("relay power", p)?;
        }
        self.relay_power = relay_power;
        Ok(())
    }

    /// `P_s / σ²`.
    pub fn snr_scale(&self) -> f64 {
        self.source_power / self.noise_var
    }

    /// Gain of edge `from -> to`, or `None` if the edge does not exist.
    pub fn gain(&self, from: usize, to: usize) -> Option<f64> {
        if to <= from {
            return None;
        }
        self.out_gains.get(from)?.get(to - from - 1).copied()
    }

    pub fn set_gain(&mut self, from: usize, to: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFiniteGain { from, to, value });
        }
        let slot = (to > from)
            .then(|| self.out_gains.get_mut(from)?.get_mut(to - from - 1))
            .flatten()
            .ok_or(Error::NoSuchEdge { from, to })?;
        *slot = value;
        Ok(())
    }

    /// All edges as `(from, to, gain)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.out_gains
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(o, &g)| (j, j + o + 1, g)))
    }

    pub fn edge_list(&self) -> Vec<EdgeGain> {
        self.edges()
            .map(|(from, to, gain)| EdgeGain { from, to, gain })
            .collect()
    }

    /// Nodes reachable in one hop from `i`: `{i + 1, ..., min(i + k, N + 1)}`.
    ///
    /// The destination (and anything past it) has no forward neighbors.
    pub fn forward_neighbors(&self, i: usize) -> Vec<usize> {
        let dest = self.destination();
        if i >= dest {
            return Vec::new();
        }
        (i + 1..=(i + self.reach).min(dest)).collect()
    }

    /// Nodes transmitting directly to `i`.
    pub fn incoming_neighbors(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.reach)..i.min(self.destination() + 1)
    }

    /// True when every node's outgoing edges all carry the same gain,
    /// compared with relative tolerance `rel_tol`.
    pub fn has_equal_outgoing_gains(&self, rel_tol: f64) -> bool {
        self.out_gains.iter().all(|row| {
            let first = row[0];
            row.iter()
                .all(|&g| (g - first).abs() <= rel_tol * first.abs().max(g.abs()))
        })
    }

    /// Common outgoing gain of node `j`, if the network is equal-outgoing-gain.
    pub fn outgoing_gain(&self, j: usize) -> Option<f64> {
        self.out_gains.get(j).map(|row| row[0])
    }

    pub(crate) fn check_node(&self, node: usize, lo: usize, hi: usize) -> Result<()> {
        if node < lo || node > hi {
            Err(Error::NodeOutOfRange { node, lo, hi })
        } else {
            Ok(())
        }
    }
}

/// A directed path through the chain and its delay.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub delay: usize,
}

impl Path {
    pub fn origin(&self) -> usize {
        self.nodes[0]
    }

    /// Relays strictly between the endpoints.
    pub fn intermediate(&self) -> &[usize] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Delay of a path with `edges` edges starting at `origin`.
pub fn path_delay(origin: usize, edges: usize) -> usize {
    if origin == SOURCE {
        edges - 1
    } else {
        edges
    }
}

/// All paths `origin -> dest`, grouped by delay.
///
/// Suffix lists are memoized per node, so each node's continuations are built once.
pub fn enumerate_paths(
    net: &ChainNetwork,
    origin: usize,
    dest: usize,
) -> Result<BTreeMap<usize, Vec<Path>>> {
    net.check_node(dest, 1, net.destination())?;
    net.check_node(origin, 0, dest.saturating_sub(1))?;
    if origin >= dest {
        return Err(Error::Precondition(format!(
            "path origin {origin} must precede destination {dest}"
        )));
    }
    // suffixes[v - origin] = every node sequence from v to dest (v excluded).
    let span = dest - origin;
    let mut suffixes: Vec<Vec<Vec<usize>>> = vec![Vec::new(); span + 1];
    suffixes[span] = vec![Vec::new()];
    for v in (origin..dest).rev() {
        let mut here = Vec::new();
        for w in net.forward_neighbors(v) {
            if w > dest {
                break;
            }
            for tail in &suffixes[w - origin] {
                let mut seq = Vec::with_capacity(tail.len() + 1);
                seq.push(w);
                seq.extend_from_slice(tail);
                here.push(seq);
            }
        }
        suffixes[v - origin] = here;
    }
    let mut grouped: BTreeMap<usize, Vec<Path>> = BTreeMap::new();
    for tail in suffixes.swap_remove(0) {
        let delay = path_delay(origin, tail.len());
        let mut nodes = Vec::with_capacity(tail.len() + 1);
        nodes.push(origin);
        nodes.extend(tail);
        grouped.entry(delay).or_default().push(Path { nodes, delay });
    }
    Ok(grouped)
}

/// Binomial coefficient with `C(n, r) = 0` whenever `n < 0`, `r < 0` or `r > n`.
pub fn binomial(n: i64, r: i64) -> i128 {
    if n < 0 || r < 0 || r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: i128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

/// Closed-form number of source-to-destination paths with delay `d`.
///
/// Inclusion–exclusion over the `d + 1` hop lengths, each in `1..=k`.
/// Returns 0 for `d` outside `[⌊N/k⌋, N]`.
pub fn count_source_paths(n: usize, k: usize, d: usize) -> u64 {
    if k == 0 || d < n / k || d > n {
        return 0;
    }
    let (n, k, d) = (n as i64, k as i64, d as i64);
    let total: i128 = (0..=d + 1)
        .map(|r| {
            let sign = if r % 2 == 0 { 1 } else { -1 };
            sign * binomial(d + 1, r) * binomial(n - r * k, d)
        })
        .sum();
    total as u64
}

/// Closed-form number of relay-`m`-to-destination paths with delay `d`.
///
/// Returns 0 for `m` outside `1..=N` or `d` outside `[⌊(N-m)/k⌋ + 1, N - m + 1]`.
pub fn count_relay_paths(n: usize, k: usize, m: usize, d: usize) -> u64 {
    if k == 0 || m == 0 || m > n || d < (n - m) / k + 1 || d > n - m + 1 {
        return 0;
    }
    let (n, k, m, d) = (n as i64, k as i64, m as i64, d as i64);
    let total: i128 = (0..=d)
        .map(|r| {
            let sign = if r % 2 == 0 { 1 } else { -1 };
            sign * binomial(d, r) * binomial(n - m - r * k, d - 1)
        })
        .sum();
    total as u64
}

/// Valid delay range of source paths, `⌊N/k⌋..=N`.
pub fn source_delay_range(n: usize, k: usize) -> std::ops::RangeInclusive<usize> {
    n / k..=n
}

/// Valid delay range of relay-`m` noise paths, `⌊(N-m)/k⌋ + 1..=N - m + 1`.
pub fn relay_delay_range(n: usize, k: usize, m: usize) -> std::ops::RangeInclusive<usize> {
    (n - m) / k + 1..=n - m + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, k: usize) -> ChainNetwork {
        ChainNetwork::new(n, k, 1.0, 1.0, vec![1.0; n]).unwrap()
    }

    fn node_lists(paths: &[Path]) -> Vec<Vec<usize>> {
        paths.iter().map(|p| p.nodes.clone()).collect()
    }

    #[test]
    fn forward_neighbors_clamp_at_destination() {
        assert_eq!(chain(2, 2).forward_neighbors(0), vec![1, 2]);
        assert_eq!(chain(2, 2).forward_neighbors(2), vec![3]);
        assert_eq!(chain(4, 3).forward_neighbors(3), vec![4, 5]);
        assert!(chain(2, 2).forward_neighbors(3).is_empty());
    }

    #[test]
    fn rejects_bad_topology_and_powers() {
        assert!(matches!(
            ChainNetwork::new(2, 4, 1.0, 1.0, vec![1.0; 2]),
            Err(Error::InvalidTopology { .. })
        ));
        assert!(ChainNetwork::new(0, 1, 1.0, 1.0, vec![]).is_err());
        assert!(ChainNetwork::new(2, 2, 0.0, 1.0, vec![1.0; 2]).is_err());
        assert!(ChainNetwork::new(2, 2, 1.0, 1.0, vec![1.0, -1.0]).is_err());
        assert!(ChainNetwork::new(2, 2, 1.0, 1.0, vec![1.0]).is_err());
    }

    #[test]
    fn edge_set_matches_reach_rule() {
        let net = chain(4, 2);
        let edges: Vec<_> = net.edges().map(|(j, i, _)| (j, i)).collect();
        let expected: Vec<_> = (0..=5usize)
            .flat_map(|j| (j + 1..=5).map(move |i| (j, i)))
            .filter(|&(j, i)| i - j <= 2)
            .collect();
        assert_eq!(edges, expected);
        assert_eq!(net.gain(0, 3), None);
        assert!(matches!(
            net.clone().set_gain(0, 3, 1.0),
            Err(Error::NoSuchEdge { from: 0, to: 3 })
        ));
    }

    #[test]
    fn two_two_paths_by_delay() {
        let net = chain(2, 2);
        let src = enumerate_paths(&net, 0, 3).unwrap();
        assert_eq!(node_lists(&src[&1]), vec![vec![0, 1, 3], vec![0, 2, 3]]);
        assert_eq!(node_lists(&src[&2]), vec![vec![0, 1, 2, 3]]);
        assert_eq!(src.len(), 2);

        let relay1 = enumerate_paths(&net, 1, 3).unwrap();
        assert_eq!(node_lists(&relay1[&1]), vec![vec![1, 3]]);
        assert_eq!(node_lists(&relay1[&2]), vec![vec![1, 2, 3]]);
        let relay2 = enumerate_paths(&net, 2, 3).unwrap();
        assert_eq!(node_lists(&relay2[&1]), vec![vec![2, 3]]);
    }

    #[test]
    fn reach_one_is_a_single_full_chain() {
        let net = chain(5, 1);
        let src = enumerate_paths(&net, 0, 6).unwrap();
        assert_eq!(src.len(), 1);
        assert_eq!(node_lists(&src[&5]), vec![(0..=6).collect::<Vec<_>>()]);
    }

    #[test]
    fn enumerate_rejects_reversed_endpoints() {
        assert!(enumerate_paths(&chain(3, 2), 2, 2).is_err());
        assert!(enumerate_paths(&chain(3, 2), 0, 9).is_err());
    }

    #[test]
    fn closed_form_counts_small_cases() {
        assert_eq!(count_source_paths(2, 2, 1), 2);
        assert_eq!(count_source_paths(2, 2, 2), 1);
        assert_eq!(count_source_paths(4, 2, 2), 3);
        assert_eq!(count_relay_paths(2, 2, 2, 1), 1);
        assert_eq!(count_relay_paths(2, 2, 1, 2), 1);
        // Only (1, 3, t) has two edges; (1, 2, 4, t) has three.
        assert_eq!(count_relay_paths(4, 2, 1, 2), 1);
        assert_eq!(count_relay_paths(4, 2, 1, 3), 3);
    }

    #[test]
    fn closed_form_counts_out_of_range_are_zero() {
        assert_eq!(count_source_paths(4, 2, 1), 0);
        assert_eq!(count_source_paths(4, 2, 5), 0);
        assert_eq!(count_relay_paths(4, 2, 1, 1), 0);
        assert_eq!(count_relay_paths(4, 2, 1, 5), 0);
        assert_eq!(count_relay_paths(4, 2, 0, 1), 0);
        assert_eq!(count_relay_paths(4, 2, 5, 1), 0);
    }

    #[test]
    fn direct_source_edge_has_delay_zero() {
        let net = chain(2, 3);
        let src = enumerate_paths(&net, 0, 3).unwrap();
        assert_eq!(node_lists(&src[&0]), vec![vec![0, 3]]);
        assert_eq!(count_source_paths(2, 3, 0), 1);
    }

    #[test]
    fn binomial_convention() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(-1, 0), 0);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(3, -1), 0);
        assert_eq!(binomial(0, 0), 1);
    }

    #[test]
    fn equal_outgoing_detection() {
        let mut net = chain(3, 2);
        assert!(net.has_equal_outgoing_gains(1e-12));
        net.set_gain(1, 3, 0.5).unwrap();
        assert!(!net.has_equal_outgoing_gains(1e-12));
    }
}
