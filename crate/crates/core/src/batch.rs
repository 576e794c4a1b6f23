//! Data-parallel evaluation over many independent inputs.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! thread pool; without it the same functions run sequentially. Each
//! evaluation stays single-threaded and owns its algebra instance.

use crate::backends::{evaluate_on, BackendConfig, BackendKind, RunError};
use crate::context::Context;
use crate::engine::Evaluation;
use crate::syntax::Program;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to every item, in parallel when the feature is enabled.
/// Output order matches input order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Evaluates one program against each input context.
pub fn evaluate_batch(
    backend: BackendKind,
    program: &Program,
    inputs: &[Context],
    config: &BackendConfig,
) -> Vec<Result<Evaluation, RunError>> {
    map(inputs, |input| evaluate_on(backend, program, input, config))
}

/// Sequential counterpart of [`evaluate_batch`].
pub fn evaluate_batch_sequential(
    backend: BackendKind,
    program: &Program,
    inputs: &[Context],
    config: &BackendConfig,
) -> Vec<Result<Evaluation, RunError>> {
    map_sequential(inputs, |input| evaluate_on(backend, program, input, config))
}
