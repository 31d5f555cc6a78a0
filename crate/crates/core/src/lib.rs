//! Compile-time design-space exploration for structured LLM workflows.
//!
//! A workflow is a composition tree over sub-agent roles. Each role is
//! profiled under a set of `(model, reasoning budget)` configurations, and the
//! profiles are lifted to workflow-level `(accuracy, latency)` estimates by a
//! structure-aware analytical proxy. The explorer enumerates the pruned
//! configuration space and keeps the non-dominated trade-off set, which is
//! saved as a reusable artifact and consumed at deployment time by the
//! selectors. A seeded Monte-Carlo simulator stands in for real workflow
//! execution when validating the proxy.
//!
//! Module map:
//!
//! - [`workflow`]: graph IR, structural choices, loop unrolling.
//! - [`profile`]: per-role profile tables and dominance pruning.
//! - [`proxy`]: compositional accuracy/latency estimation.
//! - [`explorer`]: enumeration, frontier construction, compiled artifacts.
//! - [`simulator`]: counter-based Monte-Carlo execution and proxy validation.
//! - [`selector`]: budget, preference, and KNN-routing selection.
//! - [`metrics`]: rank correlation, pairwise agreement, calibrated MAE, hypervolume.

pub mod explorer;
pub mod metrics;
pub mod profile;
pub mod proxy;
pub mod selector;
pub mod simulator;
pub mod workflow;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use explorer::{
    count_configurations, explore, nondominated_sort_2d, CompiledEntry, CompiledSet,
    ExploreOptions, ExplorerError, Restriction, WorkflowConfiguration,
};
pub use profile::{Profile, ProfileError, ProfileTable, PrunedOptionSet, SubAgentConfig};
pub use proxy::{Estimate, ExecutionModel, ProxyError, RoleAssignment};
pub use workflow::{ChoiceId, RoleId, WorkflowError, WorkflowNode, WorkflowSpec};

/// Version string stamped into every emitted artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
