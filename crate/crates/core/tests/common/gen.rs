//! Random programs and contexts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybridsl_core::checker::{Kind, Label};
use hybridsl_core::context::{Context, ContextVar, VarData};
use hybridsl_core::syntax::{BinOp, Builtin, Expr, ExprKind, Program, Stmt};

use super::reference;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr::bare(ExprKind::Binary {
        op,
        lhs: b(lhs),
        rhs: b(rhs),
    })
}

fn call(builtin: Builtin, arg: Expr) -> Expr {
    Expr::bare(ExprKind::Call { builtin, arg: b(arg) })
}

fn if_else(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
    Expr::bare(ExprKind::IfElse {
        cond: b(cond),
        then: b(then),
        otherwise: b(otherwise),
    })
}

fn index(vector: Expr, idx: Expr) -> Expr {
    Expr::bare(ExprKind::Index {
        vector: b(vector),
        index: b(idx),
    })
}

const COMPARISONS: [BinOp; 6] = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge];

// ---------------------------------------------------------------------------
// Syntactic generator: any tree the grammar can express.

const NAMES: [&str; 10] = ["a", "b", "xVec", "x_1", "_t", "forx", "iff", "lenx", "range2", "Z9"];

pub fn random_ast(rng: &mut impl Rng) -> Program {
    let n = rng.gen_range(1..=6);
    Program {
        statements: (0..n).map(|_| any_stmt(rng, 0)).collect(),
    }
}

fn any_name(rng: &mut impl Rng) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

fn any_stmt(rng: &mut impl Rng, depth: u32) -> Stmt {
    if depth < 3 && rng.gen_bool(0.25) {
        let n = rng.gen_range(1..=3);
        Stmt::for_in(
            any_name(rng),
            any_expr(rng, 2),
            (0..n).map(|_| any_stmt(rng, depth + 1)).collect(),
        )
    } else {
        Stmt::assign(any_name(rng), any_expr(rng, 4))
    }
}

pub fn any_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => Expr::int(rng.gen_range(0..=9)),
            1 => Expr::int(rng.gen_range(0..=i64::MAX)),
            2 => Expr::bare(ExprKind::Bool(rng.gen())),
            _ => Expr::var(any_name(rng)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => Expr::bare(ExprKind::Neg(b(any_expr(rng, d)))),
        1 | 2 => binary(*BinOp::ALL.choose(rng).unwrap(), any_expr(rng, d), any_expr(rng, d)),
        3 => index(any_expr(rng, d), any_expr(rng, d)),
        4 => {
            let builtin = if rng.gen() { Builtin::Len } else { Builtin::Range };
            call(builtin, any_expr(rng, d))
        }
        _ => if_else(any_expr(rng, d), any_expr(rng, d), any_expr(rng, d)),
    }
}

// ---------------------------------------------------------------------------
// Contexts.

pub fn random_context(rng: &mut impl Rng) -> Context {
    let mut ctx = Context::new();
    let n = rng.gen_range(0..=5);
    for k in 0..n {
        let label = if rng.gen() { Label::Clear } else { Label::Encrypted };
        let kind = if rng.gen() { Kind::Scalar } else { Kind::Vector };
        let values: Vec<i64> = match kind {
            Kind::Scalar => vec![rng.gen()],
            Kind::Vector => (0..rng.gen_range(0..=5)).map(|_| rng.gen()).collect(),
        };
        ctx.variables.insert(
            format!("{}{k}", NAMES[k % NAMES.len()]),
            ContextVar {
                label,
                kind,
                data: VarData::Plain(values),
            },
        );
    }
    ctx
}

// ---------------------------------------------------------------------------
// Checked generator: programs that pass the checker and run without runtime
// errors, over contexts whose vectors all share one length.

#[derive(Debug, Clone)]
pub struct Case {
    pub program: Program,
    pub input: Context,
    pub expected: reference::RefOutput,
}

/// Draws programs until one runs cleanly in the reference interpreter
/// within the noise budget; returns the case and the number of rejected
/// draws.
pub fn checked_case(rng: &mut impl Rng) -> (Case, usize) {
    let mut rejected = 0;
    loop {
        let (program, input) = ProgramGen::draw(rng);
        match reference::run(&program, &input) {
            Ok(expected) => {
                return (
                    Case {
                        program,
                        input,
                        expected,
                    },
                    rejected,
                )
            }
            Err(reference::RefError::NoiseExhausted) => rejected += 1,
            Err(e) => panic!("generator produced a failing program ({e:?}):\n{program:?}"),
        }
    }
}

#[derive(Clone)]
struct Scope {
    /// Scalars readable here.
    scalars: Vec<String>,
    /// Loop binders usable as in-bounds indices.
    indices: Vec<String>,
}

struct ProgramGen<'r, R: Rng> {
    rng: &'r mut R,
    vectors: Vec<String>,
    len: i64,
    fresh: usize,
}

impl<'r, R: Rng> ProgramGen<'r, R> {
    fn draw(rng: &'r mut R) -> (Program, Context) {
        let len = rng.gen_range(1..=4);
        let mut input = Context::new();
        let label = |rng: &mut R| if rng.gen() { Label::Clear } else { Label::Encrypted };
        let nv = rng.gen_range(1..=3);
        let mut vectors = Vec::new();
        for k in 0..nv {
            let name = format!("v{k}");
            let values = (0..len).map(|_| rng.gen_range(-50..=50)).collect();
            let l = label(rng);
            input.variables.insert(name.clone(), plain(l, Kind::Vector, values));
            vectors.push(name);
        }
        let mut scope = Scope {
            scalars: Vec::new(),
            indices: Vec::new(),
        };
        for k in 0..rng.gen_range(0..=3) {
            let name = format!("s{k}");
            let l = label(rng);
            input
                .variables
                .insert(name.clone(), plain(l, Kind::Scalar, vec![rng.gen_range(-50..=50)]));
            scope.scalars.push(name);
        }
        let mut g = ProgramGen {
            rng,
            vectors,
            len,
            fresh: 0,
        };
        let n = g.rng.gen_range(2..=7);
        let statements = g.block(&mut scope, n, 0);
        (Program { statements }, input)
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn block(&mut self, scope: &mut Scope, n: usize, depth: u32) -> Vec<Stmt> {
        (0..n).map(|_| self.stmt(scope, depth)).collect()
    }

    fn stmt(&mut self, scope: &mut Scope, depth: u32) -> Stmt {
        if depth < 2 && self.rng.gen_bool(0.3) {
            return self.for_in(scope, depth);
        }
        let value = self.int(scope, 3);
        // loop binders (`i…`) are never assigned
        let writable: Vec<String> = scope
            .scalars
            .iter()
            .filter(|n| !n.starts_with('i'))
            .cloned()
            .collect();
        let target = if !writable.is_empty() && self.rng.gen_bool(0.5) {
            writable.choose(self.rng).unwrap().clone()
        } else {
            let t = self.name("t");
            scope.scalars.push(t.clone());
            t
        };
        Stmt::assign(target, value)
    }

    fn for_in(&mut self, scope: &mut Scope, depth: u32) -> Stmt {
        let binder = self.name("i");
        let mut inner = scope.clone();
        let iterable = match self.rng.gen_range(0..4) {
            0 => {
                inner.indices.push(binder.clone());
                call(Builtin::Range, call(Builtin::Len, self.vector(scope)))
            }
            1 => {
                let k = self.rng.gen_range(0..=self.len);
                inner.indices.push(binder.clone());
                call(Builtin::Range, Expr::int(k))
            }
            _ => self.vector(scope),
        };
        // loop binders are read-only scalars inside the body
        inner.scalars.push(binder.clone());
        let n = self.rng.gen_range(1..=3);
        // names first assigned in the body stay in `inner`: they are not
        // definitely assigned once the loop is over
        let body = self.block(&mut inner, n, depth + 1);
        Stmt::for_in(binder, iterable, body)
    }

    fn vector(&mut self, scope: &Scope) -> Expr {
        let pick = |g: &mut Self| Expr::var(g.vectors.choose(g.rng).unwrap().clone());
        if self.vectors.len() > 1 && self.rng.gen_bool(0.15) {
            let cond = self.clear_cond(scope);
            if_else(cond, pick(self), pick(self))
        } else {
            pick(self)
        }
    }

    /// Integer expression that is always Clear, whatever the labels.
    fn clear_int(&mut self, scope: &Scope) -> Expr {
        match self.rng.gen_range(0..3) {
            0 if !scope.indices.is_empty() => Expr::var(scope.indices.choose(self.rng).unwrap().clone()),
            1 => call(Builtin::Len, Expr::var(self.vectors.choose(self.rng).unwrap().clone())),
            _ => Expr::int(self.rng.gen_range(0..=5)),
        }
    }

    fn clear_cond(&mut self, scope: &Scope) -> Expr {
        let op = *COMPARISONS.choose(self.rng).unwrap();
        binary(op, self.clear_int(scope), self.clear_int(scope))
    }

    fn cond(&mut self, scope: &Scope, depth: u32) -> Expr {
        if self.rng.gen_bool(0.1) {
            return Expr::bare(ExprKind::Bool(self.rng.gen()));
        }
        let op = *COMPARISONS.choose(self.rng).unwrap();
        binary(op, self.int(scope, depth), self.int(scope, depth))
    }

    fn safe_index(&mut self, scope: &Scope) -> Expr {
        if !scope.indices.is_empty() && self.rng.gen_bool(0.7) {
            Expr::var(scope.indices.choose(self.rng).unwrap().clone())
        } else {
            Expr::int(self.rng.gen_range(0..self.len))
        }
    }

    fn divisor(&mut self) -> Expr {
        if self.rng.gen() {
            call(Builtin::Len, Expr::var(self.vectors.choose(self.rng).unwrap().clone()))
        } else {
            let d = Expr::int(self.rng.gen_range(1..=7));
            if self.rng.gen_bool(0.3) {
                Expr::bare(ExprKind::Neg(b(d)))
            } else {
                d
            }
        }
    }

    fn int(&mut self, scope: &Scope, depth: u32) -> Expr {
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        if leaf {
            return match self.rng.gen_range(0..4) {
                0 | 1 if !scope.scalars.is_empty() => {
                    Expr::var(scope.scalars.choose(self.rng).unwrap().clone())
                }
                2 => {
                    let v = self.vector(scope);
                    let i = self.safe_index(scope);
                    index(v, i)
                }
                _ => Expr::int(self.rng.gen_range(0..=20)),
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 => Expr::bare(ExprKind::Neg(b(self.int(scope, d)))),
            1 | 2 => binary(BinOp::Add, self.int(scope, d), self.int(scope, d)),
            3 => binary(BinOp::Sub, self.int(scope, d), self.int(scope, d)),
            4 => binary(BinOp::Mul, self.int(scope, d), self.int(scope, d)),
            5 => {
                let divisor = self.divisor();
                binary(BinOp::Div, self.int(scope, d), divisor)
            }
            6 => call(Builtin::Len, self.vector(scope)),
            7 => {
                let v = self.vector(scope);
                let i = self.safe_index(scope);
                index(v, i)
            }
            _ => {
                let cond = self.cond(scope, d);
                if_else(cond, self.int(scope, d), self.int(scope, d))
            }
        }
    }
}

fn plain(label: Label, kind: Kind, values: Vec<i64>) -> ContextVar {
    ContextVar {
        label,
        kind,
        data: VarData::Plain(values),
    }
}
