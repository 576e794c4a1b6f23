use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hybridsl_core::backends::{evaluate_on, BackendConfig, BackendKind, CostTable, RunError};
use hybridsl_core::bench::{run_bench, BenchError, BenchRow};
use hybridsl_core::checker::{self, Kind, Signature, Violation};
use hybridsl_core::context::{
    keygen as new_key, load_context, save_context, Context, ContextError, ContextKey,
};
use hybridsl_core::engine::EvalError;
use hybridsl_core::syntax::{is_identifier, parse, Expr, ExprKind, Program, Stmt, StmtKind, SyntaxError};

pub struct Failure {
    pub status: u8,
    pub message: String,
}

type CmdResult = Result<(), Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        status: 2,
        message: message.into(),
    }
}

fn domain(message: impl Into<String>) -> Failure {
    Failure {
        status: 1,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| usage(format!("ERROR IO {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CmdResult {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| usage(format!("ERROR IO {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| usage(format!("ERROR IO stdout: {e}")))
        }
    }
}

fn syntax_error(e: &SyntaxError) -> Failure {
    let (line, col) = e.position();
    let (code, detail) = match e {
        SyntaxError::Lex(e) => ("LEX_ERROR", format!("unexpected character {:?}", e.found)),
        SyntaxError::Parse(e) => {
            let text = e.to_string();
            let detail = text.split_once(": ").map_or(text.clone(), |(_, rest)| rest.to_string());
            ("PARSE_ERROR", detail)
        }
    };
    usage(format!("ERROR {code} {line}:{col} {detail}"))
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    let bytes = read(path)?;
    let source = String::from_utf8(bytes).map_err(|_| usage(format!("ERROR IO {}: not UTF-8", path.display())))?;
    parse(&source).map_err(|e| syntax_error(&e))
}

fn load_ctx(path: &Path) -> Result<Context, Failure> {
    load_context(&read(path)?).map_err(|e| usage(format!("ERROR FORMAT {e}")))
}

/// Accepts either a path to a key file or the 64 hex characters themselves.
fn load_key(key: Option<String>) -> Result<Option<ContextKey>, Failure> {
    let Some(arg) = key else { return Ok(None) };
    let path = Path::new(&arg);
    let text = if path.is_file() {
        String::from_utf8(read(path)?).map_err(|_| usage("ERROR KEY key file is not UTF-8"))?
    } else {
        arg.clone()
    };
    ContextKey::from_key_file(&text)
        .map(Some)
        .map_err(|e| usage(format!("ERROR KEY {e}")))
}

fn require_key(key: Option<String>) -> Result<ContextKey, Failure> {
    load_key(key)?.ok_or_else(|| usage("ERROR MISSING_KEY a key is required (--key or HYBRIDSL_KEY)"))
}

fn load_cost_table(path: Option<&Path>) -> Result<CostTable, Failure> {
    match path {
        None => Ok(CostTable::default()),
        Some(p) => CostTable::from_json(&read(p)?).map_err(|e| usage(format!("ERROR FORMAT {e}"))),
    }
}

fn violation_lines(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n")
}

fn load_signature(path: &Path) -> Result<Signature, Failure> {
    let bytes = read(path)?;
    let doc: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| usage(format!("ERROR FORMAT {}: {e}", path.display())))?;
    if doc.get("variables").is_some() {
        return Ok(load_ctx(path)?.derive_signature());
    }
    let sig: Signature = serde_json::from_value(doc)
        .map_err(|e| usage(format!("ERROR FORMAT {}: not a context or signature: {e}", path.display())))?;
    if let Some(bad) = sig.iter().map(|(n, _)| n).find(|n| !is_identifier(n)) {
        return Err(usage(format!("ERROR FORMAT {}: `{bad}` is not an identifier", path.display())));
    }
    Ok(sig)
}

pub fn check(program: &Path, input: &Path, json: bool) -> CmdResult {
    let program = load_program(program)?;
    let sig = load_signature(input)?;
    let violations = checker::check(&program, &sig);
    if json {
        let doc = serde_json::to_string(&violations).expect("violations serialize");
        println!("{doc}");
    } else if !violations.is_empty() {
        println!("{}", violation_lines(&violations));
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(domain(format!("{} violation(s)", violations.len())))
    }
}

/// Loads, checks and warns; shared by `run` and `bench`.
fn prepare(program: &Path, context: &Path) -> Result<(Program, Context), Failure> {
    let program = load_program(program)?;
    let input = load_ctx(context)?;
    let violations = checker::check(&program, &input.derive_signature());
    if !violations.is_empty() {
        println!("{}", violation_lines(&violations));
        return Err(domain(format!("{} violation(s)", violations.len())));
    }
    let lengths: Vec<(&String, usize)> = input
        .variables
        .iter()
        .filter(|(_, v)| v.kind == Kind::Vector)
        .map(|(n, v)| (n, v.len()))
        .collect();
    if lengths.windows(2).any(|w| w[0].1 != w[1].1) {
        let listing: Vec<String> = lengths.iter().map(|(n, l)| format!("{n}: {l}")).collect();
        eprintln!("warning: input vectors differ in length ({})", listing.join(", "));
    }
    Ok((program, input))
}

fn run_error(e: &RunError) -> Failure {
    match e {
        RunError::MissingKey(b) => usage(format!("ERROR MISSING_KEY backend {b} requires --key or HYBRIDSL_KEY")),
        RunError::Eval(EvalError::Runtime(r)) => domain(format!("ERROR {r}")),
        RunError::Eval(EvalError::Import { source, .. }) => {
            let line = format!("ERROR {} {source}", e.code());
            match source {
                ContextError::AuthFailure { .. } | ContextError::KeyMismatch { .. } => domain(line),
                _ => usage(line),
            }
        }
    }
}

pub struct RunArgs {
    pub program: PathBuf,
    pub context: PathBuf,
    pub backend: BackendKind,
    pub key: Option<String>,
    pub out: Option<PathBuf>,
    pub only: Option<Vec<String>>,
    pub cost_table: Option<PathBuf>,
}

pub fn run(args: RunArgs) -> CmdResult {
    let (program, input) = prepare(&args.program, &args.context)?;
    let key = if args.backend.needs_key() {
        Some(require_key(args.key)?)
    } else {
        load_key(args.key)?
    };
    let config = BackendConfig {
        key,
        cost_table: load_cost_table(args.cost_table.as_deref())?,
        ..BackendConfig::default()
    };
    let eval = evaluate_on(args.backend, &program, &input, &config).map_err(|e| run_error(&e))?;
    let mut output = eval.output;
    if let Some(only) = &args.only {
        if let Some(missing) = only.iter().find(|n| output.get(n).is_none()) {
            return Err(usage(format!("ERROR USAGE --only names `{missing}`, which is not in the output")));
        }
        output.retain_only(only);
    }
    eprintln!("{}", serde_json::to_string(&eval.report).expect("report serializes"));
    write_output(args.out.as_deref(), &save_context(&output))
}

pub struct BenchArgs {
    pub program: PathBuf,
    pub context: PathBuf,
    pub backends: Vec<BackendKind>,
    pub reps: u32,
    pub key: Option<String>,
    pub cost_table: Option<PathBuf>,
    pub json: bool,
}

pub fn bench(args: BenchArgs) -> CmdResult {
    let (program, input) = prepare(&args.program, &args.context)?;
    if args.backends.is_empty() {
        return Err(usage("ERROR USAGE no backends given"));
    }
    let key = if args.backends.iter().any(|b| b.needs_key()) {
        Some(require_key(args.key)?)
    } else {
        load_key(args.key)?
    };
    let config = BackendConfig {
        key,
        cost_table: load_cost_table(args.cost_table.as_deref())?,
        ..BackendConfig::default()
    };
    let rows = run_bench(&program, &input, &args.backends, args.reps, &config).map_err(|e| match e {
        BenchError::ZeroReps => usage("ERROR USAGE --reps must be at least 1"),
        BenchError::Run { source, .. } => run_error(&source),
        other => domain(format!("ERROR {} {other}", other.code())),
    })?;
    if args.json {
        println!("{}", serde_json::to_string(&rows).expect("rows serialize"));
    } else {
        print!("{}", table(&rows));
    }
    Ok(())
}

fn table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<8} {:>5} {:>14} {:>14} {:>10} {:>10} {:>12}\n",
        "backend", "reps", "mean_us", "min_us", "clear_ops", "enc_ops", "cost"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:>5} {:>14} {:>14} {:>10} {:>10} {:>12}\n",
            r.backend.name(),
            r.repetitions,
            r.mean_wall_time.as_micros(),
            r.min_wall_time.as_micros(),
            r.counts.clear.total(),
            r.counts.encrypted.total(),
            r.total_cost
        ));
    }
    out
}

pub fn dump_ast(path: &Path, json: bool) -> CmdResult {
    let program = load_program(path)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&program).expect("AST serializes"));
    } else {
        let mut out = String::new();
        for s in &program.statements {
            tree_stmt(&mut out, s, 0);
        }
        print!("{out}");
    }
    Ok(())
}

fn tree_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    let at = format!("@{}", stmt.span);
    match &stmt.kind {
        StmtKind::Assign { target, value } => {
            out.push_str(&format!("{pad}Assign {target} {at}\n"));
            tree_expr(out, value, depth + 1);
        }
        StmtKind::ForIn { binder, iterable, body } => {
            out.push_str(&format!("{pad}ForIn {binder} {at}\n"));
            tree_expr(out, iterable, depth + 1);
            out.push_str(&format!("{pad}  Body\n"));
            for s in body {
                tree_stmt(out, s, depth + 2);
            }
        }
    }
}

fn tree_expr(out: &mut String, expr: &Expr, depth: usize) {
    let pad = "  ".repeat(depth);
    let at = format!("@{}", expr.span);
    let (head, children): (String, Vec<&Expr>) = match &expr.kind {
        ExprKind::Int(v) => (format!("Int {v}"), vec![]),
        ExprKind::Bool(b) => (format!("Bool {b}"), vec![]),
        ExprKind::Var(n) => (format!("Var {n}"), vec![]),
        ExprKind::Neg(x) => ("Neg".into(), vec![x]),
        ExprKind::Binary { op, lhs, rhs } => (format!("Binary {}", op.symbol()), vec![lhs, rhs]),
        ExprKind::Index { vector, index } => ("Index".into(), vec![vector, index]),
        ExprKind::Call { builtin, arg } => (format!("Call {}", builtin.name()), vec![arg]),
        ExprKind::IfElse { cond, then, otherwise } => ("IfElse".into(), vec![cond, then, otherwise]),
    };
    out.push_str(&format!("{pad}{head} {at}\n"));
    for c in children {
        tree_expr(out, c, depth + 1);
    }
}

pub fn keygen(out: Option<&Path>) -> CmdResult {
    let key = new_key();
    eprintln!("key_id {}", key.id());
    match out {
        Some(path) => fs::write(path, key.to_key_file()).map_err(|e| usage(format!("ERROR IO {}: {e}", path.display()))),
        None => {
            print!("{}", key.to_key_file());
            Ok(())
        }
    }
}

pub fn seal(key: Option<String>, input: &Path, out: Option<&Path>, sealing: bool) -> CmdResult {
    let key = require_key(key)?;
    let ctx = load_ctx(input)?;
    let result = if sealing { ctx.seal(&key) } else { ctx.unseal(&key) };
    let ctx = result.map_err(|e| match e {
        ContextError::AuthFailure { .. } => domain(format!("ERROR AUTH_FAILURE {e}")),
        ContextError::KeyMismatch { .. } => domain(format!("ERROR KEY_MISMATCH {e}")),
        other => usage(format!("ERROR FORMAT {other}")),
    })?;
    write_output(out, &save_context(&ctx))
}
