//! Multi-armed bandits with graph-structured side-observations and
//! stochastically available actions.
//!
//! A bipartite graph links actions to base-arms: pulling an action reveals
//! samples for every base-arm it observes, while its reward depends on a
//! subset of them. Each round only a random *activation set* of actions is
//! available. The [`policy::EliminationUcb`] policy (`ucb-lp-a`) schedules
//! exploration with weights from the observability LP in [`lp`], so that
//! coverage of all base-arms is bought at minimum expected sampling cost
//! even when the informative actions are offline most of the time.
//!
//! The crate also ships the adapted baselines (`ucb-e`, `ucb-n`, `ucb-maxn`,
//! `ucb1`), closed-form regret bound calculators in [`bounds`], and a
//! seeded multi-trial experiment harness in [`harness`] that emits CSV and
//! SVG regret curves.

pub mod bounds;
pub mod env;
pub mod graph;
pub mod harness;
pub mod ledger;
pub mod lp;
pub mod policy;

// pub use env::{Environment, RewardKind};
// pub use graph::{ActivationStructure, RoutingNetwork, SideObsGraph};
// pub use ledger::ObservationLedger;
// pub use lp::{LpProblem, LpSolution};
