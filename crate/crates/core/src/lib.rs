//! Stochastic submodular maximization with dependent item states.
//!
//! The crate covers the full non-adaptive pipeline (optimistic continuous
//! greedy over a constraint polytope, followed by matroid swap rounding), the
//! two degrees of independence of a joint prior, exact adaptive-policy
//! oracles, and an experiment harness that checks the resulting guarantees on
//! small enumerable instances.

pub mod constraints;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod independence;
pub mod itemset;
pub mod model;
pub mod multilinear;
pub mod policies;
pub mod rounding;

pub use constraints::{alpha_for, Constraint, LpSolution};
pub use error::{Error, Result};
pub use itemset::ItemSet;
pub use model::{Instance, JointDistribution, PartialRealization, Realization, UtilityFunction};
pub use multilinear::{Estimate, FractionalPoint, Multilinear};
