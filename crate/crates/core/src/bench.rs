//! Repeated evaluation across backends with output cross-checking.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::backends::{evaluate_on, BackendConfig, BackendKind, OpCounts, RunError};
use crate::checker::{check, Violation};
use crate::context::{Context, ContextError, Revealed};
use crate::syntax::Program;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub backend: BackendKind,
    pub repetitions: u32,
    #[serde(serialize_with = "micros")]
    pub mean_wall_time: Duration,
    #[serde(serialize_with = "micros")]
    pub min_wall_time: Duration,
    pub counts: OpCounts,
    pub total_cost: u64,
}

fn micros<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_micros() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    ZeroReps,
    #[error("program rejected with {} violation(s)", .0.len())]
    Rejected(Vec<Violation>),
    #[error("{backend}: {source}")]
    Run { backend: BackendKind, source: RunError },
    #[error("{backend}: cannot open output: {source}")]
    Reveal { backend: BackendKind, source: ContextError },
    #[error("MISMATCH: backends {reference} and {backend} disagree on `{variable}`")]
    Mismatch {
        variable: String,
        reference: BackendKind,
        backend: BackendKind,
    },
}

impl BenchError {
    pub fn code(&self) -> &'static str {
        match self {
            BenchError::ZeroReps => "USAGE",
            BenchError::Rejected(_) => "REJECTED",
            BenchError::Run { source, .. } => source.code(),
            BenchError::Reveal { .. } => "AUTH_FAILURE",
            BenchError::Mismatch { .. } => "MISMATCH",
        }
    }
}

/// Runs `program` `repetitions` times on each backend in turn. Repetitions
/// run sequentially so timings are not perturbed by each other.
pub fn run_bench(
    program: &Program,
    input: &Context,
    backends: &[BackendKind],
    repetitions: u32,
    config: &BackendConfig,
) -> Result<Vec<BenchRow>, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::ZeroReps);
    }
    let violations = check(program, &input.derive_signature());
    if !violations.is_empty() {
        return Err(BenchError::Rejected(violations));
    }
    let mut rows = Vec::with_capacity(backends.len());
    let mut reference: Option<(BackendKind, BTreeMap<String, Revealed>)> = None;
    for &backend in backends {
        let mut total = Duration::ZERO;
        let mut min = Duration::MAX;
        let mut last = None;
        for _ in 0..repetitions {
            let eval = evaluate_on(backend, program, input, config)
                .map_err(|source| BenchError::Run { backend, source })?;
            total += eval.report.wall_time;
            min = min.min(eval.report.wall_time);
            last = Some(eval);
        }
        let eval = last.expect("at least one repetition");
        let revealed = eval
            .output
            .reveal(config.key.as_ref())
            .map_err(|source| BenchError::Reveal { backend, source })?;
        match &reference {
            None => reference = Some((backend, revealed)),
            Some((ref_backend, expected)) => {
                if let Some(variable) = first_difference(expected, &revealed) {
                    return Err(BenchError::Mismatch {
                        variable,
                        reference: *ref_backend,
                        backend,
                    });
                }
            }
        }
        rows.push(BenchRow {
            backend,
            repetitions,
            mean_wall_time: total / repetitions,
            min_wall_time: min,
            counts: eval.report.counts,
            total_cost: eval.report.total_cost,
        });
    }
    Ok(rows)
}

/// First variable name, in sorted order, whose value or presence differs.
pub fn first_difference(
    a: &BTreeMap<String, Revealed>,
    b: &BTreeMap<String, Revealed>,
) -> Option<String> {
    a.keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .min()
        .cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{keygen, ContextVar};
    use crate::syntax::parse;

    fn covariance() -> Program {
        parse(include_str!("../corpus/covariance.hsl")).unwrap()
    }

    #[test]
    fn three_backends_five_reps() {
        let key = keygen();
        let input = Context::new()
            .with("xVec", ContextVar::secret_vector(vec![1, 2, 3]))
            .with("yVec", ContextVar::secret_vector(vec![2, 4, 6]))
            .seal(&key)
            .unwrap();
        let rows = run_bench(&covariance(), &input, &BackendKind::ALL, 5, &BackendConfig::with_key(key)).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].total_cost > rows[0].total_cost);
        assert_eq!(rows[0].counts, rows[2].counts);
        assert!(rows.iter().all(|r| r.min_wall_time <= r.mean_wall_time));
    }

    #[test]
    fn single_row_matches_evaluate() {
        let input = Context::new()
            .with("xVec", ContextVar::clear_vector(vec![1, 2]))
            .with("yVec", ContextVar::clear_vector(vec![3, 1]));
        let config = BackendConfig::default();
        let rows = run_bench(&covariance(), &input, &[BackendKind::Clear], 1, &config).unwrap();
        let eval = evaluate_on(BackendKind::Clear, &covariance(), &input, &config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].counts, eval.report.counts);
        assert_eq!(rows[0].total_cost, eval.report.total_cost);
    }

    #[test]
    fn trivial_program_costs_nothing() {
        let key = keygen();
        let rows = run_bench(
            &parse("a = 1").unwrap(),
            &Context::new(),
            &BackendKind::ALL,
            2,
            &BackendConfig::with_key(key),
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.total_cost == 0));
    }

    #[test]
    fn rejects_zero_reps_and_bad_programs() {
        let p = parse("a = 1").unwrap();
        let config = BackendConfig::default();
        assert_eq!(run_bench(&p, &Context::new(), &[BackendKind::Clear], 0, &config), Err(BenchError::ZeroReps));
        let p = parse("a = b").unwrap();
        let err = run_bench(&p, &Context::new(), &[BackendKind::Clear], 1, &config).unwrap_err();
        assert_eq!(err.code(), "REJECTED");
    }

    #[test]
    fn difference_is_first_in_name_order() {
        let a = BTreeMap::from([
            ("b".to_string(), Revealed::Scalar(1)),
            ("c".to_string(), Revealed::Scalar(2)),
        ]);
        let mut b = a.clone();
        assert_eq!(first_difference(&a, &b), None);
        b.insert("c".into(), Revealed::Scalar(3));
        b.insert("a".into(), Revealed::Scalar(0));
        assert_eq!(first_difference(&a, &b), Some("a".into()));
    }
}
