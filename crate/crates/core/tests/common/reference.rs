//! Independent reference interpreter.
//!
//! Runs a program on plain integers while tracking, for every encrypted
//! value, how much of the simulated noise budget its computation has used
//! under the default cost table. Written against the language semantics,
//! not against the engine, so the two can be compared.

use std::collections::BTreeMap;

use hybridsl_core::checker::{Kind, Label};
use hybridsl_core::context::{Context, Revealed, VarData};
use hybridsl_core::syntax::{BinOp, Builtin, Expr, ExprKind, Program, Stmt, StmtKind};

pub const BUDGET: u32 = 100;
const ADD: u32 = 1;
const MUL: u32 = 10;
const MUL_CLEAR: u32 = 2;
const DIV_CLEAR: u32 = 2;
const CMP: u32 = 15;
const MUX: u32 = 12;

/// `noise` is `Some(used)` for encrypted values and `None` for clear ones.
#[derive(Debug, Clone)]
enum V {
    Int(i64, Option<u32>),
    Bool(bool, Option<u32>),
    Vec(Vec<i64>, Option<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefError {
    DivByZero,
    OutOfBounds,
    NegativeRange,
    NoiseExhausted,
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefOutput {
    pub values: BTreeMap<String, Revealed>,
    /// Largest noise any encrypted value consumed.
    pub peak_noise: u32,
}

pub fn run(program: &Program, input: &Context) -> Result<RefOutput, RefError> {
    let mut env = BTreeMap::new();
    for (name, var) in &input.variables {
        let VarData::Plain(values) = &var.data else {
            return Err(RefError::Invalid("reference needs plain inputs".into()));
        };
        let noise = (var.label == Label::Encrypted).then_some(0);
        let v = match var.kind {
            Kind::Scalar => V::Int(values[0], noise),
            Kind::Vector => V::Vec(values.clone(), noise),
        };
        env.insert(name.clone(), v);
    }
    let mut r = Ref { env, peak: 0 };
    for s in &program.statements {
        r.stmt(s)?;
    }
    let values = r
        .env
        .into_iter()
        .map(|(n, v)| match v {
            V::Int(x, _) => Ok((n, Revealed::Scalar(x))),
            V::Vec(xs, _) => Ok((n, Revealed::Vector(xs))),
            V::Bool(..) => Err(RefError::Invalid(format!("{n} holds a boolean"))),
        })
        .collect::<Result<_, _>>()?;
    Ok(RefOutput {
        values,
        peak_noise: r.peak,
    })
}

struct Ref {
    env: BTreeMap<String, V>,
    peak: u32,
}

fn join(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (None, None) => None,
        _ => Some(a.unwrap_or(0).max(b.unwrap_or(0))),
    }
}

impl Ref {
    fn charge(&mut self, used: Option<u32>, cost: u32) -> Result<Option<u32>, RefError> {
        let Some(u) = used else { return Ok(None) };
        let total = u + cost;
        if total > BUDGET {
            return Err(RefError::NoiseExhausted);
        }
        self.peak = self.peak.max(total);
        Ok(Some(total))
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), RefError> {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = self.expr(value)?;
                self.env.insert(target.clone(), v);
            }
            StmtKind::ForIn {
                binder,
                iterable,
                body,
            } => {
                let items: Vec<V> = match self.expr(iterable)? {
                    V::Vec(xs, noise) => xs.into_iter().map(|x| V::Int(x, noise)).collect(),
                    other => return Err(RefError::Invalid(format!("iterate {other:?}"))),
                };
                let saved = self.env.remove(binder);
                for item in items {
                    self.env.insert(binder.clone(), item);
                    for s in body {
                        self.stmt(s)?;
                    }
                }
                self.env.remove(binder);
                if let Some(v) = saved {
                    self.env.insert(binder.clone(), v);
                }
            }
        }
        Ok(())
    }

    fn int(&mut self, e: &Expr) -> Result<(i64, Option<u32>), RefError> {
        match self.expr(e)? {
            V::Int(x, n) => Ok((x, n)),
            other => Err(RefError::Invalid(format!("expected int, got {other:?}"))),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<V, RefError> {
        Ok(match &e.kind {
            ExprKind::Int(v) => V::Int(*v, None),
            ExprKind::Bool(b) => V::Bool(*b, None),
            ExprKind::Var(n) => self
                .env
                .get(n)
                .cloned()
                .ok_or_else(|| RefError::Invalid(format!("undefined {n}")))?,
            ExprKind::Neg(inner) => {
                let (x, n) = self.int(inner)?;
                V::Int(x.wrapping_neg(), self.charge(n, MUL_CLEAR)?)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let (a, na) = self.int(lhs)?;
                let (b, nb) = self.int(rhs)?;
                if let Some(result) = compare(*op, a, b) {
                    let noise = self.charge(join(na, nb), CMP)?;
                    return Ok(V::Bool(result, noise));
                }
                let (value, cost) = match op {
                    BinOp::Add => (a.wrapping_add(b), ADD),
                    BinOp::Sub => (a.wrapping_sub(b), ADD),
                    BinOp::Mul if na.is_some() && nb.is_some() => (a.wrapping_mul(b), MUL),
                    BinOp::Mul => (a.wrapping_mul(b), MUL_CLEAR),
                    BinOp::Div => {
                        if nb.is_some() {
                            return Err(RefError::Invalid("encrypted divisor".into()));
                        }
                        if b == 0 {
                            return Err(RefError::DivByZero);
                        }
                        (a.wrapping_div(b), DIV_CLEAR)
                    }
                    _ => unreachable!(),
                };
                V::Int(value, self.charge(join(na, nb), cost)?)
            }
            ExprKind::Index { vector, index } => {
                let (i, ni) = self.int(index)?;
                if ni.is_some() {
                    return Err(RefError::Invalid("encrypted index".into()));
                }
                match self.expr(vector)? {
                    V::Vec(xs, n) => {
                        let x = usize::try_from(i)
                            .ok()
                            .and_then(|i| xs.get(i).copied())
                            .ok_or(RefError::OutOfBounds)?;
                        V::Int(x, n)
                    }
                    other => return Err(RefError::Invalid(format!("index {other:?}"))),
                }
            }
            ExprKind::Call { builtin, arg } => match (builtin, self.expr(arg)?) {
                (Builtin::Len, V::Vec(xs, _)) => V::Int(xs.len() as i64, None),
                (Builtin::Range, V::Int(n, None)) if n < 0 => return Err(RefError::NegativeRange),
                (Builtin::Range, V::Int(n, None)) => V::Vec((0..n).collect(), None),
                (_, other) => return Err(RefError::Invalid(format!("call on {other:?}"))),
            },
            ExprKind::IfElse {
                cond,
                then,
                otherwise,
            } => match self.expr(cond)? {
                V::Bool(c, None) => {
                    if c {
                        self.expr(then)?
                    } else {
                        self.expr(otherwise)?
                    }
                }
                V::Bool(c, Some(nc)) => {
                    let (a, na) = self.int(then)?;
                    let (b, nb) = self.int(otherwise)?;
                    let noise = join(Some(nc), join(na, nb));
                    V::Int(if c { a } else { b }, self.charge(noise, MUX)?)
                }
                other => return Err(RefError::Invalid(format!("condition {other:?}"))),
            },
        })
    }
}

fn compare(op: BinOp, a: i64, b: i64) -> Option<bool> {
    Some(match op {
        BinOp::Eq => a == b,
        BinOp::Ne => a != b,
        BinOp::Lt => a < b,
        BinOp::Le => a <= b,
        BinOp::Gt => a > b,
        BinOp::Ge => a >= b,
        _ => return None,
    })
}
