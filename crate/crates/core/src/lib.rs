//! Amplify-and-forward (analog network coding) rates over `(N, k)` nonlinear
//! chain relay networks.
//!
//! Relays `1..=N` sit on a line between the source (node `0`) and the
//! destination (node `N + 1`); every node transmits to the next `k` nodes.
//! Relays scale and forward their noisy received signal, which turns the
//! end-to-end channel into an intersymbol-interference channel. This crate
//! computes:
//!
//! * path counts and delay-indexed path enumeration ([`topology`]),
//! * modified (delay-aggregated) channel gains and the nested power
//!   feasibility bounds on the scaling factors ([`gains`]),
//! * the rational spectral function `f(u)`, `u = cos λ` ([`spectrum`]),
//! * the exact rate by Gauss–Chebyshev quadrature, the chord (zeroth-order)
//!   approximation and the tangent-line bounds ([`rate`]),
//! * maximization of each objective over feasible scaling vectors
//!   ([`optimize`]),
//! * a time-domain simulator used as an independent check ([`simulate`]),
//! * the sweep harness behind the `anc-chain` binary ([`experiment`]).

pub mod error;
pub mod experiment;

pub mod gains;
pub mod optimize;
pub mod poly;
pub mod rate;
pub mod simulate;

pub mod spectrum;
pub mod topology;

pub use error::{Error, Result};
pub use gains::{DelayProfile, DelayTaps, ScalingVector};
pub use optimize::{Budget, Method, NormalizedPoint, Objective, OptimizationResult};
pub use rate::RateReport;
pub use spectrum::{CosinePolynomial, SpectralRatio};
pub use topology::{ChainNetwork, Path};
