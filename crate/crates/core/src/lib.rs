//! Observer effect optimization.
//!
//! A cluster-based metaheuristic whose three adaptive parameters decide how
//! much accumulated knowledge steers the search: A gates global versus local
//! search, B flattens the cluster selection distribution, and G picks
//! rule-based over random placement inside a cluster (per cluster in the
//! M-OEO variant). The crate also ships PSO and Bat baselines, benchmark
//! landscapes, generalized-eigenvalue numerics, and a weighted-CSP objective
//! with a hybrid gradient-descent driver.

pub mod baselines;
pub mod benchmarks;
pub mod cluster;
pub mod engine;
pub mod error;
pub mod numerics;
pub mod objective;
pub mod policies;
pub mod space;
pub mod trace;
pub mod wgtcsp;

pub use cluster::Cluster;
pub use engine::{run as run_oeo, ARule, Branch, GBranch, IterationOutcome, Mode, ObserverState, OeoConfig, OeoEngine};
pub use error::{OeoError, Result};
pub use objective::{FnObjective, Objective};
pub use policies::{EffectivenessMetric, UpdateMethod};
pub use space::{seeded_stream, Bounds, RunRng, Solution};
pub use trace::{RunResult, TraceRecord, TRACE_HEADER};
