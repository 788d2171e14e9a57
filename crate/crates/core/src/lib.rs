//! Negative controls for evaluating causal discovery outputs.
//!
//! The crate compares estimated graphs with ground truth and asks whether
//! the estimate does better than random guessing with a matched edge count:
//!
//! - [`hypergeom`]: exact null of adjacency true positives, closed-form
//!   expectations and quantiles of precision, recall, F1, NPV and
//!   specificity, and the exact skeleton-fit test.
//! - [`metrics`]: SHD, adjacency/orientation confusion tables, v-structure
//!   recovery and SID (bounded for CPDAG estimates).
//! - [`pipeline`]: simulation-based negative controls with paired p-values,
//!   for multi-truth studies and for a single known truth.
//! - [`graph`], [`random`], [`sem`], [`pc`], [`io`]: the graph types,
//!   samplers, data generation, a reference PC implementation and graph/data
//!   file formats these rest on.

pub mod error;
pub mod graph;
pub mod hypergeom;
pub mod io;
pub mod metrics;
pub mod pc;
pub mod pipeline;
pub mod random;
pub mod sem;

pub use error::{Error, Result};
pub use graph::{Cpdag, Dag, Graph, GraphKind, Pdag, VStructure};
pub use hypergeom::{ConfusionCounts, HyperParams, MetricId, MetricValue};
pub use metrics::{Direction, Metric, MetricReport, SidBounds};
pub use random::RngSeed;
