//! Peak age-of-information analysis for large-scale uplink IoT networks
//! under time-triggered (TT) and event-triggered (ET) traffic.
//!
//! The crate couples two scales:
//!
//! * **Macroscopic** ([`geometry`], [`meta`]) — stochastic-geometry moments
//!   of the conditional transmission success probability over a Poisson
//!   network with fractional path-loss inversion, and the beta-approximated
//!   meta distribution quantized into QoS classes.
//! * **Microscopic** ([`queueing`]) — per-class PH/Geo/1 queues solved with
//!   matrix-analytic methods for TT traffic and Geo/Geo/1 closed forms for
//!   ET traffic.
//!
//! [`fixedpoint`] iterates the two scales to the self-consistent load factor,
//! [`paoi`] assembles peak-age reports and stability frontiers, and [`sim`]
//! provides an independent slot-level Monte Carlo simulator used to validate
//! the analytical pipeline end to end.

pub mod config;
pub mod error;
pub mod fixedpoint;
pub mod geometry;
pub mod meta;
pub mod paoi;
pub mod quad;
pub mod queueing;
pub mod sim;
pub mod special;

pub use config::{
    AnalysisParams, NetworkParams, RawConfig, SimParams, TrafficModel, ValidatedConfig,
};
pub use error::{
    AnalysisError, ConfigError, FixedPointError, GeometryError, MetaError, QueueError, SimError,
};
pub use fixedpoint::CoupledSolution;
pub use geometry::{LoadFactor, MomentPair};
pub use meta::{BetaFit, MetaDist, QosClasses};
pub use paoi::{AnalysisReport, PaoiReport, ParetoFrontier};
pub use queueing::{PhCounter, QbdModel, SteadyState, WaitingDist};
pub use sim::{Realization, SlotMetrics};
