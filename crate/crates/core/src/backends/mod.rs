//! The three value algebras and a runtime selector over them.

pub mod cost;
mod fhe;
mod plain;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::context::{Context, ContextKey};
use crate::engine::{evaluate, EvalError, Evaluation};
use crate::syntax::Program;

pub use cost::{CostEntry, CostTable, CostTableError, OpCounts, OpReport, Prim, PrimCounts};
pub use fhe::{fhe_sim_algebra, FheSimAlgebra, SimCipher, FRESH_BUDGET};
pub use plain::{clear_algebra, tee_sim_algebra, ClearAlgebra, TeeAlgebra};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendKind {
    Clear,
    FheSim,
    TeeSim,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [BackendKind::Clear, BackendKind::FheSim, BackendKind::TeeSim];

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Clear => "clear",
            BackendKind::FheSim => "fhe-sim",
            BackendKind::TeeSim => "tee-sim",
        }
    }

    pub fn needs_key(self) -> bool {
        !matches!(self, BackendKind::Clear)
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for BackendKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown backend `{0}` (expected clear, fhe-sim or tee-sim)")]
pub struct UnknownBackend(pub String);

impl FromStr for BackendKind {
    type Err = UnknownBackend;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BackendKind::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| UnknownBackend(s.to_string()))
    }
}

/// Everything needed to build a fresh algebra for one evaluation.
#[derive(Debug, Clone)]
pub struct BackendConfig {
    pub key: Option<ContextKey>,
    pub cost_table: CostTable,
    pub fresh_budget: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            key: None,
            cost_table: CostTable::default(),
            fresh_budget: FRESH_BUDGET,
        }
    }
}

impl BackendConfig {
    pub fn with_key(key: ContextKey) -> Self {
        BackendConfig {
            key: Some(key),
            ..BackendConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("backend {0} requires a key")]
    MissingKey(BackendKind),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::MissingKey(_) => "MISSING_KEY",
            RunError::Eval(e) => e.code(),
        }
    }
}

/// Evaluates on the selected backend with a freshly constructed algebra.
pub fn evaluate_on(
    backend: BackendKind,
    program: &Program,
    input: &Context,
    config: &BackendConfig,
) -> Result<Evaluation, RunError> {
    let key = || {
        config
            .key
            .clone()
            .ok_or(RunError::MissingKey(backend))
    };
    let result = match backend {
        BackendKind::Clear => {
            let mut alg = ClearAlgebra::new(config.key.clone(), config.cost_table);
            evaluate(program, input, &mut alg)
        }
        BackendKind::FheSim => {
            let mut alg = FheSimAlgebra::new(key()?, config.cost_table, config.fresh_budget);
            evaluate(program, input, &mut alg)
        }
        BackendKind::TeeSim => {
            let mut alg = TeeAlgebra::new(key()?, config.cost_table);
            evaluate(program, input, &mut alg)
        }
    };
    Ok(result?)
}
