use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::time::Instant;

use thiserror::Error;

use crate::backends::cost::{OpReport, Prim};
use crate::checker::{analyze, Label};
use crate::context::{Context, ContextError, ContextVar};
use crate::syntax::{BinOp, Builtin, Expr, ExprKind, Program, Span, Stmt, StmtKind};

use super::value::{AlgebraError, Value, ValueAlgebra};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuntimeCode {
    DivByZero,
    EmptyRangeNegative,
    IndexOutOfBounds,
    Capability,
    NoiseExhausted,
    KeyMismatch,
    /// Only reachable for programs that were not checked first.
    UndefinedVar,
    /// Only reachable for programs that were not checked first.
    KindMismatch,
}

impl RuntimeCode {
    pub fn as_str(self) -> &'static str {
        match self {
            RuntimeCode::DivByZero => "DIV_BY_ZERO",
            RuntimeCode::EmptyRangeNegative => "EMPTY_RANGE_NEGATIVE",
            RuntimeCode::IndexOutOfBounds => "INDEX_OUT_OF_BOUNDS",
            RuntimeCode::Capability => "CAPABILITY",
            RuntimeCode::NoiseExhausted => "NOISE_EXHAUSTED",
            RuntimeCode::KeyMismatch => "KEY_MISMATCH",
            RuntimeCode::UndefinedVar => "UNDEFINED_VAR",
            RuntimeCode::KindMismatch => "KIND_MISMATCH",
        }
    }
}

impl fmt::Display for RuntimeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub code: RuntimeCode,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

/// Renders as `CODE line:col message`.
impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:{} {}", self.code, self.line, self.col, self.message)
    }
}

impl std::error::Error for RuntimeError {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    /// The input context could not be brought across the backend boundary.
    #[error("{backend}: {source}")]
    Import {
        backend: &'static str,
        source: ContextError,
    },
    #[error("{0}")]
    Runtime(#[from] RuntimeError),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::Import {
                backend: "tee-sim",
                source: ContextError::AuthFailure { .. },
            } => "UNSEAL_FAILURE",
            EvalError::Import { source, .. } => match source {
                ContextError::AuthFailure { .. } => "AUTH_FAILURE",
                ContextError::KeyMismatch { .. } => "KEY_MISMATCH",
                ContextError::MissingKey(_) => "MISSING_KEY",
                ContextError::NotSealed(_) => "NOT_SEALED",
                ContextError::Format(_) => "FORMAT",
            },
            EvalError::Runtime(e) => e.code.as_str(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub output: Context,
    pub report: OpReport,
}

/// Executes `program` against `input` on the given backend.
///
/// The program is expected to have passed [`check`](crate::checker::check)
/// against `input.derive_signature()`; unchecked programs still fail cleanly
/// with `UNDEFINED_VAR` or `KIND_MISMATCH` runtime errors. Output variables
/// carry the labels the checker infers for the end of the program.
pub fn evaluate<A: ValueAlgebra>(
    program: &Program,
    input: &Context,
    algebra: &mut A,
) -> Result<Evaluation, EvalError> {
    let start = Instant::now();
    let backend = algebra.name();
    let import_err = |source| EvalError::Import { backend, source };
    if let Some(key) = algebra.key() {
        input.check_key(key).map_err(import_err)?;
    }
    let mut env = BTreeMap::new();
    for (name, var) in &input.variables {
        let value = algebra.import(name, var).map_err(import_err)?;
        env.insert(name.clone(), value);
    }

    let mut machine = Machine { algebra, env };
    for stmt in &program.statements {
        machine.stmt(stmt)?;
    }
    let Machine { algebra, env } = machine;

    // a variable keeps its static label even when the run never reached the
    // assignment that made it encrypted (e.g. a loop over an empty vector)
    let labels = analyze(program, &input.derive_signature()).table;
    let mut output = Context::new();
    for (name, value) in env {
        let promote = labels.label(&name) == Some(Label::Encrypted);
        let lifted = lift(Span::default());
        let var = match value {
            Value::ClearInt(v) if promote => {
                let c = algebra.encrypt_clear(v).map_err(lifted)?;
                algebra.export_encrypted(&name, std::slice::from_ref(&c), false)
            }
            Value::ClearVec(v) if promote => {
                let cs = v
                    .iter()
                    .map(|&x| algebra.encrypt_clear(x))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(lifted)?;
                algebra.export_encrypted(&name, &cs, true)
            }
            Value::ClearInt(v) => ContextVar::clear_scalar(v),
            Value::ClearVec(v) => ContextVar::clear_vector(v.to_vec()),
            Value::Cipher(c) => algebra.export_encrypted(&name, std::slice::from_ref(&c), false),
            Value::CipherVec(cs) => algebra.export_encrypted(&name, &cs, true),
            Value::ClearBool(_) | Value::CipherBool(_) => {
                return Err(RuntimeError {
                    code: RuntimeCode::KindMismatch,
                    line: 0,
                    col: 0,
                    message: format!("`{name}` holds a boolean, which a context cannot store"),
                }
                .into())
            }
        };
        output.variables.insert(name, var);
    }
    if output.has_sealed() {
        output.key_id = algebra.output_key_id();
    }
    let counts = *algebra.counts();
    let report = OpReport {
        backend: algebra.name().to_string(),
        counts,
        total_cost: counts.cost(algebra.cost_table()),
        wall_time: start.elapsed(),
    };
    Ok(Evaluation { output, report })
}

type Res<T> = Result<T, RuntimeError>;

enum LoopSource<C> {
    Range(i64),
    Clear(Rc<[i64]>),
    Cipher(Rc<[C]>),
}

struct Machine<'a, A: ValueAlgebra> {
    algebra: &'a mut A,
    env: BTreeMap<String, Value<A::Cipher>>,
}

fn fail<T>(code: RuntimeCode, span: Span, message: impl Into<String>) -> Res<T> {
    Err(RuntimeError {
        code,
        line: span.line,
        col: span.col,
        message: message.into(),
    })
}

fn lift(span: Span) -> impl Fn(AlgebraError) -> RuntimeError {
    move |e| {
        let code = match e {
            AlgebraError::NoiseExhausted { .. } => RuntimeCode::NoiseExhausted,
            AlgebraError::KeyMismatch(..) => RuntimeCode::KeyMismatch,
            AlgebraError::Capability(_) => RuntimeCode::Capability,
        };
        RuntimeError {
            code,
            line: span.line,
            col: span.col,
            message: e.to_string(),
        }
    }
}

impl<A: ValueAlgebra> Machine<'_, A> {
    fn stmt(&mut self, stmt: &Stmt) -> Res<()> {
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let v = self.expr(value)?;
                self.env.insert(target.clone(), v);
            }
            StmtKind::ForIn {
                binder,
                iterable,
                body,
            } => {
                let source = self.loop_source(iterable)?;
                let shadowed = self.env.remove(binder);
                let result = self.iterate(binder, source, body);
                match shadowed {
                    Some(v) => self.env.insert(binder.clone(), v),
                    None => self.env.remove(binder),
                };
                result?;
            }
        }
        Ok(())
    }

    fn loop_source(&mut self, iterable: &Expr) -> Res<LoopSource<A::Cipher>> {
        // `range(n)` is iterated without materializing the vector
        if let ExprKind::Call {
            builtin: Builtin::Range,
            arg,
        } = &iterable.kind
        {
            return Ok(LoopSource::Range(self.range_bound(arg)?));
        }
        match self.expr(iterable)? {
            Value::ClearVec(items) => Ok(LoopSource::Clear(items)),
            Value::CipherVec(items) => Ok(LoopSource::Cipher(items)),
            other => fail(
                RuntimeCode::KindMismatch,
                iterable.span,
                format!("cannot iterate over {}", other.describe()),
            ),
        }
    }

    fn iterate(&mut self, binder: &str, source: LoopSource<A::Cipher>, body: &[Stmt]) -> Res<()> {
        let bind = |this: &mut Self, v| {
            this.env.insert(binder.to_string(), v);
            this.block(body)
        };
        match source {
            LoopSource::Range(n) => (0..n).try_for_each(|i| bind(self, Value::ClearInt(i))),
            LoopSource::Clear(items) => items.iter().try_for_each(|&x| bind(self, Value::ClearInt(x))),
            LoopSource::Cipher(items) => items
                .iter()
                .try_for_each(|x| bind(self, Value::Cipher(x.clone()))),
        }
    }

    fn block(&mut self, body: &[Stmt]) -> Res<()> {
        body.iter().try_for_each(|s| self.stmt(s))
    }

    fn range_bound(&mut self, arg: &Expr) -> Res<i64> {
        match self.expr(arg)? {
            Value::ClearInt(n) if n < 0 => fail(
                RuntimeCode::EmptyRangeNegative,
                arg.span,
                format!("range bound {n} is negative"),
            ),
            Value::ClearInt(n) => Ok(n),
            Value::Cipher(_) => fail(
                RuntimeCode::Capability,
                arg.span,
                "range bound is encrypted",
            ),
            other => fail(
                RuntimeCode::KindMismatch,
                arg.span,
                format!("range expects an integer, found {}", other.describe()),
            ),
        }
    }

    fn expr(&mut self, expr: &Expr) -> Res<Value<A::Cipher>> {
        let span = expr.span;
        match &expr.kind {
            ExprKind::Int(v) => Ok(Value::ClearInt(*v)),
            ExprKind::Bool(b) => Ok(Value::ClearBool(*b)),
            ExprKind::Var(name) => match self.env.get(name) {
                Some(v) => Ok(v.clone()),
                None => fail(
                    RuntimeCode::UndefinedVar,
                    span,
                    format!("`{name}` is not defined"),
                ),
            },
            ExprKind::Neg(operand) => {
                // negation is multiplication by the clear constant -1
                let v = self.expr(operand)?;
                self.arith(BinOp::Mul, v, Value::ClearInt(-1), span)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs)?;
                let r = self.expr(rhs)?;
                if op.is_comparison() {
                    self.compare(*op, l, r, span)
                } else {
                    self.arith(*op, l, r, span)
                }
            }
            ExprKind::Index { vector, index } => {
                let v = self.expr(vector)?;
                let i = match self.expr(index)? {
                    Value::ClearInt(i) => i,
                    Value::Cipher(_) => {
                        return fail(RuntimeCode::Capability, index.span, "index is encrypted")
                    }
                    other => {
                        return fail(
                            RuntimeCode::KindMismatch,
                            index.span,
                            format!("index must be an integer, found {}", other.describe()),
                        )
                    }
                };
                let len = match &v {
                    Value::ClearVec(items) => items.len(),
                    Value::CipherVec(items) => items.len(),
                    other => {
                        return fail(
                            RuntimeCode::KindMismatch,
                            vector.span,
                            format!("cannot index {}", other.describe()),
                        )
                    }
                };
                let Some(pos) = usize::try_from(i).ok().filter(|&p| p < len) else {
                    return fail(
                        RuntimeCode::IndexOutOfBounds,
                        index.span,
                        format!("index {i} out of bounds for length {len}"),
                    );
                };
                Ok(match v {
                    Value::ClearVec(items) => Value::ClearInt(items[pos]),
                    Value::CipherVec(items) => Value::Cipher(items[pos].clone()),
                    _ => unreachable!("checked above"),
                })
            }
            ExprKind::Call { builtin, arg } => match builtin {
                Builtin::Len => match self.expr(arg)? {
                    Value::ClearVec(items) => Ok(Value::ClearInt(items.len() as i64)),
                    Value::CipherVec(items) => Ok(Value::ClearInt(items.len() as i64)),
                    other => fail(
                        RuntimeCode::KindMismatch,
                        arg.span,
                        format!("len expects a vector, found {}", other.describe()),
                    ),
                },
                Builtin::Range => {
                    let n = self.range_bound(arg)?;
                    Ok(Value::ClearVec((0..n).collect::<Vec<_>>().into()))
                }
            },
            ExprKind::IfElse {
                cond,
                then,
                otherwise,
            } => match self.expr(cond)? {
                Value::ClearBool(true) => self.expr(then),
                Value::ClearBool(false) => self.expr(otherwise),
                Value::CipherBool(c) => {
                    // both branches run; the condition picks homomorphically
                    let a = self.expr(then)?;
                    let b = self.expr(otherwise)?;
                    let a = self.to_cipher(a, then.span)?;
                    let b = self.to_cipher(b, otherwise.span)?;
                    let m = self.algebra.mux(&c, &a, &b).map_err(lift(span))?;
                    Ok(Value::Cipher(m))
                }
                other => fail(
                    RuntimeCode::KindMismatch,
                    cond.span,
                    format!("if condition must be a boolean, found {}", other.describe()),
                ),
            },
        }
    }

    /// Promotes a scalar integer to a ciphertext.
    fn to_cipher(&mut self, v: Value<A::Cipher>, span: Span) -> Res<A::Cipher> {
        match v {
            Value::Cipher(c) => Ok(c),
            Value::ClearInt(x) => self.algebra.encrypt_clear(x).map_err(lift(span)),
            Value::CipherBool(_) => fail(
                RuntimeCode::Capability,
                span,
                "encrypted booleans can only be used as conditions",
            ),
            other => fail(
                RuntimeCode::KindMismatch,
                span,
                format!("expected an integer, found {}", other.describe()),
            ),
        }
    }

    fn arith(
        &mut self,
        op: BinOp,
        l: Value<A::Cipher>,
        r: Value<A::Cipher>,
        span: Span,
    ) -> Res<Value<A::Cipher>> {
        let lifted = lift(span);
        match (l, r) {
            (Value::ClearInt(a), Value::ClearInt(b)) => {
                let (prim, v) = match op {
                    BinOp::Add => (Prim::Add, a.wrapping_add(b)),
                    BinOp::Sub => (Prim::Sub, a.wrapping_sub(b)),
                    BinOp::Mul => (Prim::Mul, a.wrapping_mul(b)),
                    BinOp::Div if b == 0 => return fail(RuntimeCode::DivByZero, span, "division by zero"),
                    BinOp::Div => (Prim::Div, a.wrapping_div(b)),
                    _ => unreachable!("comparisons handled separately"),
                };
                self.algebra.counts_mut().clear.bump(prim);
                Ok(Value::ClearInt(v))
            }
            (Value::Cipher(a), Value::ClearInt(b)) => {
                let c = match op {
                    BinOp::Mul => self.algebra.mul_clear(&a, b),
                    BinOp::Div if b == 0 => return fail(RuntimeCode::DivByZero, span, "division by zero"),
                    BinOp::Div => self.algebra.div_clear(&a, b),
                    BinOp::Add | BinOp::Sub => {
                        let b = self.algebra.encrypt_clear(b).map_err(&lifted)?;
                        if op == BinOp::Add {
                            self.algebra.add(&a, &b)
                        } else {
                            self.algebra.sub(&a, &b)
                        }
                    }
                    _ => unreachable!("comparisons handled separately"),
                };
                Ok(Value::Cipher(c.map_err(lifted)?))
            }
            (Value::ClearInt(a), Value::Cipher(b)) => {
                let c = match op {
                    BinOp::Mul => self.algebra.mul_clear(&b, a),
                    BinOp::Div => {
                        return fail(RuntimeCode::Capability, span, "division by an encrypted divisor")
                    }
                    BinOp::Add | BinOp::Sub => {
                        let a = self.algebra.encrypt_clear(a).map_err(&lifted)?;
                        if op == BinOp::Add {
                            self.algebra.add(&a, &b)
                        } else {
                            self.algebra.sub(&a, &b)
                        }
                    }
                    _ => unreachable!("comparisons handled separately"),
                };
                Ok(Value::Cipher(c.map_err(lifted)?))
            }
            (Value::Cipher(a), Value::Cipher(b)) => {
                let c = match op {
                    BinOp::Add => self.algebra.add(&a, &b),
                    BinOp::Sub => self.algebra.sub(&a, &b),
                    BinOp::Mul => self.algebra.mul(&a, &b),
                    BinOp::Div => self.algebra.div(&a, &b),
                    _ => unreachable!("comparisons handled separately"),
                };
                Ok(Value::Cipher(c.map_err(lifted)?))
            }
            (l, r) if matches!(l, Value::CipherBool(_)) || matches!(r, Value::CipherBool(_)) => fail(
                RuntimeCode::Capability,
                span,
                "encrypted booleans can only be used as conditions",
            ),
            (l, r) => fail(
                RuntimeCode::KindMismatch,
                span,
                format!(
                    "`{}` needs integers, found {} and {}",
                    op.symbol(),
                    l.describe(),
                    r.describe()
                ),
            ),
        }
    }

    fn compare(
        &mut self,
        op: BinOp,
        l: Value<A::Cipher>,
        r: Value<A::Cipher>,
        span: Span,
    ) -> Res<Value<A::Cipher>> {
        if let (Value::ClearInt(a), Value::ClearInt(b)) = (&l, &r) {
            self.algebra.counts_mut().clear.bump(Prim::Cmp);
            return Ok(Value::ClearBool(op.compare(*a, *b).unwrap_or(false)));
        }
        if l.label() == Label::Clear && r.label() == Label::Clear {
            return fail(
                RuntimeCode::KindMismatch,
                span,
                format!("cannot compare {} and {}", l.describe(), r.describe()),
            );
        }
        let a = self.to_cipher(l, span)?;
        let b = self.to_cipher(r, span)?;
        let c = self.algebra.cmp(op, &a, &b).map_err(lift(span))?;
        Ok(Value::CipherBool(c))
    }
}
