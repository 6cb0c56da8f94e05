//! Test-driven program debloating for MiniC programs.

pub mod minic;
pub mod runtime;
pub mod advisor;
pub mod llm;
pub mod decision;
pub mod augment;
pub mod pipeline;
pub mod metrics;
pub mod experiment;
pub mod cli;
