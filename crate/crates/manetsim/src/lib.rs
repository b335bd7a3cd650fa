//! Seeded discrete-event simulator of a stateless flooding anycast protocol
//! in a mobile wireless ad hoc network.
//!
//! Mobile nodes roam a rectangular arena under an extended random-direction
//! model. One source node floods numbered anycast requests toward a group
//! of server nodes over radius-limited, orientation-dependent, unreliable
//! links; servers answer the first copy of each request with a unicast
//! reply that retraces the request's path. Runs are deterministic per
//! `(config, seed)` and report five performance metrics: response ratio,
//! average hops, relative traffic, average response time, and duplicate
//! ratio.
//!
//! The crate splits into the simulation core ([`config`], [`mobility`],
//! [`link`], [`protocol`], [`engine`], [`metrics`]) and the experiment
//! harness ([`sweep`], [`plot`], [`trace`]). The `manetsim` binary in the
//! companion CLI crate wraps the harness.

pub mod config;
pub mod engine;
pub mod link;
pub mod metrics;
pub mod mobility;
pub mod plot;
pub mod protocol;
pub mod streams;
pub mod sweep;
pub mod trace;

pub use config::{AreaConfig, NodeId, Position, Role, SimulationConfig};
pub use engine::{run, run_report, EngineError, RunOptions, RunReport};
pub use metrics::MetricsRecord;
pub use sweep::{sweep, SeedSpec, SweepError, SweepOutput, SweepSpec};
