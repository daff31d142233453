//! ABAC policy workbench: the `.abac` policy language, an evaluation
//! engine, policy analytics, synthetic access logs, dataset generators and
//! policy import/export.

pub mod analytics;
pub mod batch;
pub mod datasets;
pub mod eval;
pub mod exchange;
pub mod loggen;
pub mod policy;
pub mod rng;

mod csvout;

pub use analytics::{statistics, PolicyStats};
pub use eval::{all_permissions, evaluate, query, Decision, EvalError, Permission};
pub use policy::{parse_policy, serialize_policy, Policy};
