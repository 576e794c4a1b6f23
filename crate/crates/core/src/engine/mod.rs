//! Backend-parametric tree-walking evaluator.
//!
//! One flat environment is seeded from the input context. Loop binders
//! shadow outer variables for the duration of their loop only. Integer
//! arithmetic wraps at 64 bits and division truncates toward zero. An
//! if-else with an encrypted condition evaluates both branches and combines
//! them with the backend's multiplexer.

mod eval;
mod value;

pub use eval::{evaluate, EvalError, Evaluation, RuntimeCode, RuntimeError};
pub use value::{AlgebraError, AlgebraResult, Value, ValueAlgebra};
