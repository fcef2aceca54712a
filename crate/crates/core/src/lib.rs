//! Software model of a pipelined, range-gated CAM engine for multi-pattern
//! deep packet inspection.

pub mod camcore;
pub mod compiler;
pub mod engine;
pub mod exec;
pub mod fixed1s;
pub mod metrics;
pub mod oracle;
pub mod phase3;
pub mod rulespec;
