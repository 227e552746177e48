//! Approximate projected consensus for distributed convex intersection.
//!
//! Each node of a time-varying directed network owns a closed convex set and
//! repeatedly replaces its state by a weighted average of its in-neighbours'
//! *approximate* projections. An approximate projection may deviate from the
//! exact projection direction by an angle `θ_k` and may stop short of the
//! supporting hyperplane by a depth factor `α_{i,k}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`convex`]: bodies with exact projection, distance and membership.
//! * [`approx_proj`]: the cone/half-space approximate projection sets and
//!   seeded selection policies.
//! * [`schedule`]: angle and depth schedules, with summability classification.
//! * [`network`]: row-stochastic digraphs, graph schedules, UJSC checks and
//!   transition-matrix products.
//! * [`oracle`]: centralised ground truth for the distance to the intersection.
//! * [`engine`]: the consensus recursion and its metric trace.

pub mod approx_proj;
pub mod convex;
pub mod engine;
pub mod network;
pub mod oracle;
pub mod schedule;
pub mod trace;

mod rng;

pub use approx_proj::SelectionPolicy;
pub use convex::{ConvexBody, GeometryError, HalfSpace, Point, EPS};
pub use engine::{run, EngineError, InitialCondition, NetworkState, RunConfig, Simulation};
pub use network::{Digraph, GraphSchedule, GraphSpec, NetworkError};
pub use oracle::{IntersectionOracle, OracleError, OracleSpec};
pub use schedule::{AngleSchedule, DepthSchedule};
pub use trace::{Trace, TraceRecord};
