//! The debloating and security advisors.

pub mod dataflow;
pub mod debloat;
pub mod security;

pub use debloat::{suggest, DebloatSuggestion, DeletionCandidate, FunctionSuggestions, Reason};
pub use security::{analyze, analyze_function, diff, rewrite_messages, Checker, DiffError, DiffReport, Finding, Severity};
