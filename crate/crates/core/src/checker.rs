//! Privacy-label inference and enforcement of the FHE-compatibility rules.
//!
//! Every variable carries a [`Label`] from the two-point lattice
//! `Clear ⊑ Encrypted`. Labels flow forward through assignments and are
//! joined at loop heads until they stop changing. A program is accepted when
//! loop bounds, `range` arguments, indices and divisors are all `Clear`,
//! every read happens after a write, and values are used at the right kind.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{BinOp, Builtin, Expr, ExprKind, Program, Span, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Clear,
    Encrypted,
}

impl Label {
    /// Least upper bound.
    pub fn join(self, other: Label) -> Label {
        self.max(other)
    }

    pub fn is_encrypted(self) -> bool {
        self == Label::Encrypted
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Clear => "clear",
            Label::Encrypted => "encrypted",
        })
    }
}

/// Shape of a variable: a single integer or a vector of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Scalar,
    Vector,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Scalar => "scalar",
            Kind::Vector => "vector",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarType {
    pub label: Label,
    pub kind: Kind,
}

impl VarType {
    pub fn new(label: Label, kind: Kind) -> Self {
        VarType { label, kind }
    }
}

/// Label and kind of every input variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signature(pub BTreeMap<String, VarType>);

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    pub fn with(mut self, name: impl Into<String>, label: Label, kind: Kind) -> Self {
        self.0.insert(name.into(), VarType::new(label, kind));
        self
    }

    pub fn get(&self, name: &str) -> Option<VarType> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &VarType)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    EncLoopBound,
    EncIndex,
    EncDivisor,
    EncRangeArg,
    UndefinedVar,
    KindMismatch,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EncLoopBound => "ENC_LOOP_BOUND",
            ViolationCode::EncIndex => "ENC_INDEX",
            ViolationCode::EncDivisor => "ENC_DIVISOR",
            ViolationCode::EncRangeArg => "ENC_RANGE_ARG",
            ViolationCode::UndefinedVar => "UNDEFINED_VAR",
            ViolationCode::KindMismatch => "KIND_MISMATCH",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

/// Renders as `CODE line:col message`.
impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:{} {}", self.code, self.line, self.col, self.message)
    }
}

/// Final label and kind of every variable alive after the program.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelTable {
    pub vars: BTreeMap<String, VarType>,
}

impl LabelTable {
    pub fn label(&self, name: &str) -> Option<Label> {
        self.vars.get(name).map(|t| t.label)
    }

    pub fn encrypted(&self) -> impl Iterator<Item = &str> {
        self.vars
            .iter()
            .filter(|(_, t)| t.label.is_encrypted())
            .map(|(n, _)| n.as_str())
    }
}

/// Full result of the analysis: labels are computed even when violations
/// are present.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub table: LabelTable,
    pub violations: Vec<Violation>,
    /// Largest number of body passes any loop needed to reach its fixpoint.
    pub max_loop_passes: usize,
}

pub fn analyze(program: &Program, signature: &Signature) -> Analysis {
    let mut env: Env = signature
        .iter()
        .map(|(name, ty)| {
            (
                name.clone(),
                VarState {
                    ty: *ty,
                    definite: true,
                },
            )
        })
        .collect();
    let mut checker = Checker::default();
    checker.block(&mut env, &program.statements);
    let mut violations = checker.violations;
    violations.sort_by_key(|v| (v.line, v.col));
    Analysis {
        table: LabelTable {
            vars: env.into_iter().map(|(n, s)| (n, s.ty)).collect(),
        },
        violations,
        max_loop_passes: checker.max_passes,
    }
}

/// Infers labels for every variable, or returns the violations if the
/// program breaks any rule.
pub fn infer_labels(program: &Program, signature: &Signature) -> Result<LabelTable, Vec<Violation>> {
    let analysis = analyze(program, signature);
    if analysis.violations.is_empty() {
        Ok(analysis.table)
    } else {
        Err(analysis.violations)
    }
}

/// Violations in source order; empty means the program is accepted.
pub fn check(program: &Program, signature: &Signature) -> Vec<Violation> {
    analyze(program, signature).violations
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct VarState {
    ty: VarType,
    /// False when the variable is only assigned on some paths (inside a
    /// loop body that may run zero times).
    definite: bool,
}

type Env = BTreeMap<String, VarState>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
    Vector,
}

impl Ty {
    fn describe(self) -> &'static str {
        match self {
            Ty::Int => "a scalar",
            Ty::Bool => "a boolean",
            Ty::Vector => "a vector",
        }
    }
}

impl From<Kind> for Ty {
    fn from(k: Kind) -> Ty {
        match k {
            Kind::Scalar => Ty::Int,
            Kind::Vector => Ty::Vector,
        }
    }
}

#[derive(Default)]
struct Checker {
    violations: Vec<Violation>,
    max_passes: usize,
    /// Set while typing a loop's iterable, where a vector chosen by an
    /// encrypted condition would make the iteration count secret.
    in_loop_header: bool,
}

fn join_env(head: &Env, body_end: &Env) -> Env {
    let mut out = head.clone();
    for (name, state) in body_end {
        match out.get_mut(name) {
            Some(existing) => {
                existing.ty.label = existing.ty.label.join(state.ty.label);
                existing.definite &= state.definite;
            }
            None => {
                out.insert(
                    name.clone(),
                    VarState {
                        ty: state.ty,
                        definite: false,
                    },
                );
            }
        }
    }
    out
}

impl Checker {
    fn report(&mut self, code: ViolationCode, span: Span, message: String) {
        self.violations.push(Violation {
            code,
            line: span.line,
            col: span.col,
            message,
        });
    }

    fn block(&mut self, env: &mut Env, stmts: &[Stmt]) {
        for stmt in stmts {
            self.stmt(env, stmt);
        }
    }

    fn stmt(&mut self, env: &mut Env, stmt: &Stmt) {
        match &stmt.kind {
            StmtKind::Assign { target, value } => {
                let (ty, label) = self.expr(env, value);
                let kind = match ty {
                    Ty::Int => Kind::Scalar,
                    Ty::Vector => Kind::Vector,
                    Ty::Bool => {
                        self.report(
                            ViolationCode::KindMismatch,
                            value.span,
                            format!("cannot store a boolean in `{target}`; booleans are only valid as if conditions"),
                        );
                        Kind::Scalar
                    }
                };
                if let Some(prev) = env.get(target) {
                    if prev.ty.kind != kind {
                        self.report(
                            ViolationCode::KindMismatch,
                            stmt.span,
                            format!("`{target}` holds a {}, cannot assign a {kind}", prev.ty.kind),
                        );
                    }
                }
                env.insert(
                    target.clone(),
                    VarState {
                        ty: VarType::new(label, kind),
                        definite: true,
                    },
                );
            }
            StmtKind::ForIn {
                binder,
                iterable,
                body,
            } => {
                self.in_loop_header = true;
                let (ty, label) = self.expr(env, iterable);
                self.in_loop_header = false;
                if ty != Ty::Vector {
                    self.report(
                        ViolationCode::KindMismatch,
                        iterable.span,
                        format!("cannot iterate over {}", ty.describe()),
                    );
                }
                self.fixpoint(env, binder, VarType::new(label, Kind::Scalar), body);
            }
        }
    }

    /// Re-analyses the loop body from the joined loop-head state until the
    /// head stops changing. Only the final pass's violations are kept.
    fn fixpoint(&mut self, env: &mut Env, binder: &str, element: VarType, body: &[Stmt]) {
        let mut head = env.clone();
        let mut passes = 0;
        loop {
            passes += 1;
            let mark = self.violations.len();
            let mut inner = head.clone();
            inner.insert(
                binder.to_string(),
                VarState {
                    ty: element,
                    definite: true,
                },
            );
            self.block(&mut inner, body);
            match head.get(binder) {
                Some(outer) => inner.insert(binder.to_string(), *outer),
                None => inner.remove(binder),
            };
            let next = join_env(&head, &inner);
            if next == head {
                break;
            }
            head = next;
            self.violations.truncate(mark);
        }
        self.max_passes = self.max_passes.max(passes);
        *env = head;
    }

    fn expr(&mut self, env: &Env, expr: &Expr) -> (Ty, Label) {
        use ViolationCode::*;
        match &expr.kind {
            ExprKind::Int(_) => (Ty::Int, Label::Clear),
            ExprKind::Bool(_) => (Ty::Bool, Label::Clear),
            ExprKind::Var(name) => match env.get(name) {
                Some(state) => {
                    if !state.definite {
                        self.report(
                            UndefinedVar,
                            expr.span,
                            format!("`{name}` may be read before it is assigned"),
                        );
                    }
                    (state.ty.kind.into(), state.ty.label)
                }
                None => {
                    self.report(
                        UndefinedVar,
                        expr.span,
                        format!("`{name}` is read before it is assigned"),
                    );
                    (Ty::Int, Label::Clear)
                }
            },
            ExprKind::Neg(operand) => {
                let (ty, label) = self.expr(env, operand);
                self.expect_int(ty, operand, "negation");
                (Ty::Int, label)
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let (lt, ll) = self.expr(env, lhs);
                let (rt, rl) = self.expr(env, rhs);
                let what = if op.is_comparison() {
                    "comparison"
                } else {
                    "arithmetic"
                };
                self.expect_int(lt, lhs, what);
                self.expect_int(rt, rhs, what);
                if *op == BinOp::Div && rl.is_encrypted() {
                    self.report(
                        EncDivisor,
                        rhs.span,
                        "divisor must be clear; encrypted values cannot divide".into(),
                    );
                }
                let ty = if op.is_comparison() { Ty::Bool } else { Ty::Int };
                (ty, ll.join(rl))
            }
            ExprKind::Index { vector, index } => {
                let (vt, vl) = self.expr(env, vector);
                let (it, il) = self.expr(env, index);
                if vt != Ty::Vector {
                    self.report(
                        KindMismatch,
                        vector.span,
                        format!("cannot index {}", vt.describe()),
                    );
                }
                self.expect_int(it, index, "an index");
                if il.is_encrypted() {
                    self.report(
                        EncIndex,
                        index.span,
                        "index must be clear; encrypted indexing is not supported".into(),
                    );
                }
                (Ty::Int, vl)
            }
            ExprKind::Call { builtin, arg } => {
                let (at, al) = self.expr(env, arg);
                match builtin {
                    Builtin::Len => {
                        if at != Ty::Vector {
                            self.report(
                                KindMismatch,
                                arg.span,
                                format!("len expects a vector, found {}", at.describe()),
                            );
                        }
                        // vector sizes are public metadata
                        (Ty::Int, Label::Clear)
                    }
                    Builtin::Range => {
                        self.expect_int(at, arg, "range");
                        if al.is_encrypted() {
                            self.report(
                                EncRangeArg,
                                arg.span,
                                "range bound must be clear; loop counts cannot depend on encrypted data".into(),
                            );
                        }
                        (Ty::Vector, Label::Clear)
                    }
                }
            }
            ExprKind::IfElse {
                cond,
                then,
                otherwise,
            } => {
                let (ct, cl) = self.expr(env, cond);
                let (tt, tl) = self.expr(env, then);
                let (ot, ol) = self.expr(env, otherwise);
                if ct != Ty::Bool {
                    self.report(
                        KindMismatch,
                        cond.span,
                        format!("if condition must be a boolean, found {}", ct.describe()),
                    );
                }
                if tt != ot {
                    self.report(
                        KindMismatch,
                        otherwise.span,
                        format!(
                            "if branches differ: {} and {}",
                            tt.describe(),
                            ot.describe()
                        ),
                    );
                } else if cl.is_encrypted() && tt == Ty::Vector && self.in_loop_header {
                    self.report(
                        EncLoopBound,
                        cond.span,
                        "loop length would depend on an encrypted condition".into(),
                    );
                } else if cl.is_encrypted() && tt != Ty::Int {
                    self.report(
                        KindMismatch,
                        then.span,
                        format!(
                            "an encrypted condition can only select between scalars, found {}",
                            tt.describe()
                        ),
                    );
                }
                let label = if cl.is_encrypted() {
                    Label::Encrypted
                } else {
                    tl.join(ol)
                };
                (tt, label)
            }
        }
    }

    fn expect_int(&mut self, ty: Ty, expr: &Expr, context: &str) {
        if ty != Ty::Int {
            self.report(
                ViolationCode::KindMismatch,
                expr.span,
                format!("{context} expects a scalar, found {}", ty.describe()),
            );
        }
    }
}
