//! Items, states, the joint prior and the utility oracle.

pub mod distribution;
pub mod instance;
pub mod io;
pub mod prob;
pub mod utility;

pub use distribution::{ConditionalDistribution, JointDistribution, PartialRealization, Realization};
pub use instance::Instance;
pub use io::InstanceDocument;
pub use utility::{ExplicitTable, UtilityFunction, ValidationReport, Violation, WeightedCoverage};
