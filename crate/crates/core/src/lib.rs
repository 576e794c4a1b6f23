//! Hybrid secure-computation DSL: parser, label checker, evaluation engine
//! and the clear, simulated-FHE and simulated-TEE backends.

pub mod backends;
pub mod batch;
pub mod bench;
pub mod checker;
pub mod context;
pub mod engine;
pub mod syntax;
