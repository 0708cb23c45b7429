//! Topology analysis and flow-level simulation for comparing expander
//! (random regular graph) datacenter fabrics against fat-tree and
//! leaf-spine fabrics under oblivious routing.
//!
//! The crate is organised by subsystem:
//!
//! * [`topology`] builds fat trees, leaf-spines and equipment-equivalent
//!   random graphs, and computes NSR / UDF.
//! * [`routing`] computes ECMP next hops, shortest, k-shortest and
//!   k edge-disjoint path sets, and the two-segment expressibility check.
//! * [`traffic`] generates C-S model patterns, burst presets and
//!   trace-derived server-level patterns.
//! * [`simulate`] binds flows to paths and runs max-min fair allocation and
//!   the fluid flow-completion-time simulation.
//! * [`resilience`] computes transient loss under single failures with
//!   local convergence.
//! * [`expansion`] partitions switches into clusters and bounds edge
//!   expansion.
//! * [`experiment`] and [`config`] drive the sweeps behind the `dcfabric`
//!   binary.
//!
//! Numeric code in [`simulate`] and [`expansion`] is generic over
//! [`Scalar`]; the aliases below fix it to `f64`, which is what the
//! experiment runner uses.

pub mod config;
pub mod error;
pub mod expansion;
pub mod experiment;
pub mod hash;
pub mod resilience;
pub mod routing;
pub mod scalar;
pub mod simulate;
pub mod topology;
pub mod traffic;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact ratio used for NSR and UDF.
pub type Ratio = num_rational::Ratio<u64>;

/// Max-min allocation in double precision.
pub type Allocation = simulate::Allocation<f64>;
/// Max-min allocation in single precision.
pub type Allocation32 = simulate::Allocation<f32>;
/// Fluid flow-completion result in double precision.
pub type FctResult = simulate::FctResult<f64>;
/// Edge expansion report in double precision.
pub type ExpansionReport = expansion::ExpansionReport<f64>;
