//! Instance generators, scenario orchestration and report emission.

pub mod generators;
pub mod pipeline;
pub mod report;
pub mod scenario;
