//! Scenario files, deterministic reports and the batch driver for
//! `nsdual-core`.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod output;
pub mod run;
pub mod scenario;
