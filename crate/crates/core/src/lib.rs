//! Hierarchical planning when the initial state is uncertain.
//!
//! Evidence about the world is held as Dempster-Shafer mass distributions.
//! Each possible initial world is planned for with a hierarchical planner;
//! plans are reused across worlds where they still work, and the surviving
//! plans are merged into a single branching super-plan with
//! knowledge-acquisition steps at the branch points.

pub mod cputime;
pub mod domain;
pub mod evidence;
pub mod fixtures;
pub mod pipeline;
pub mod planner;
pub mod reuse;
pub mod scenario;
pub mod superplan;
pub mod validate;
pub mod worlds;

pub use domain::{load_domain, DomainError, DomainSpec};
pub use evidence::{EvidentialInterval, Frame, MassDistribution, Proposition};
pub use pipeline::{prepare, Prepared};
pub use planner::{plan, LinearPlan, PlanError, PlanOutcome};
pub use reuse::{plan_all, UplanRun};
pub use superplan::{insert_ka, merge, SuperPlan};
pub use worlds::{generate_pstates, PState};
