pub mod corpus;
pub mod dist;
pub mod error;
pub mod lm;
pub mod metrics;
pub mod properties;
pub mod solver;
pub mod sweep;
pub mod transforms;

pub use dist::{entropy, SortedDistribution, TokenId, TransformedDistribution};
pub use error::{Error, Result};
pub use solver::{attainable_entropy_range, solve_temperature, SolverResult};
pub use transforms::{apply, TransformSpec};
