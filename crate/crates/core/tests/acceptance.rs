//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;

use hybridsl_core::backends::{evaluate_on, BackendConfig, BackendKind, OpReport};
use hybridsl_core::bench::run_bench;
use hybridsl_core::checker::{analyze, check, Kind, Label, Signature};
use hybridsl_core::context::{
    keygen, load_context, save_context, seal_value, unseal_value, Context, ContextVar, EnvelopeError,
    Revealed, SealedEnvelope,
};
use hybridsl_core::syntax::{parse, pretty_print, Expr, ExprKind, Program, Stmt, StmtKind, SyntaxError};

use common::gen;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 8] = [
        ("1 covariance end-to-end", Some(Duration::from_secs(5)), covariance_end_to_end),
        ("2 backend equivalence", Some(Duration::from_secs(60)), backend_equivalence),
        ("3 restriction enforcement", None, restriction_enforcement),
        ("4 overhead structure", None, overhead_structure),
        ("5 noise model", None, noise_model),
        ("6 sealing soundness", Some(Duration::from_secs(10)), sealing_soundness),
        ("7 syntax and context round trip", None, round_trip),
        ("8 checker fixpoint", None, checker_fixpoint),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed >= limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({elapsed:.2?})"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason} ({elapsed:.2?})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs on all three backends (clear on the plain context, the others on
/// its sealed form) and returns the revealed outputs.
fn run_everywhere(program: &Program, input: &Context) -> Result<Vec<BTreeMap<String, Revealed>>, String> {
    Ok(run_with_reports(program, input)?.into_iter().map(|(out, _)| out).collect())
}

fn run_with_reports(
    program: &Program,
    input: &Context,
) -> Result<Vec<(BTreeMap<String, Revealed>, OpReport)>, String> {
    let key = keygen();
    let config = BackendConfig::with_key(key.clone());
    let sealed = input.seal(&key).map_err(|e| e.to_string())?;
    BackendKind::ALL
        .into_iter()
        .map(|backend| {
            let ctx = if backend == BackendKind::Clear { input } else { &sealed };
            let eval = evaluate_on(backend, program, ctx, &config).map_err(|e| format!("{backend}: {e}"))?;
            let out = eval.output.reveal(Some(&key)).map_err(|e| format!("{backend}: {e}"))?;
            Ok((out, eval.report))
        })
        .collect()
}

fn covariance_end_to_end() -> Outcome {
    let program = parse(common::COVARIANCE).map_err(|e| e.to_string())?;
    let sig = Signature::new()
        .with("xVec", Label::Encrypted, Kind::Vector)
        .with("yVec", Label::Encrypted, Kind::Vector);
    let violations = check(&program, &sig);
    ensure(violations.is_empty(), || format!("violations: {violations:?}"))?;
    let mut rng = gen::rng(1);
    for case in 0..50 {
        let n = rng.gen_range(1..=16);
        let x: Vec<i64> = (0..n).map(|_| rng.gen_range(-100..=100)).collect();
        let y: Vec<i64> = (0..n).map(|_| rng.gen_range(-100..=100)).collect();
        let want = common::covariance_oracle(&x, &y);
        let input = Context::new()
            .with("xVec", ContextVar::secret_vector(x.clone()))
            .with("yVec", ContextVar::secret_vector(y.clone()));
        for (backend, out) in BackendKind::ALL.iter().zip(run_everywhere(&program, &input)?) {
            let got = out.get("covariance");
            ensure(got == Some(&Revealed::Scalar(want)), || {
                format!("case {case} {backend}: x={x:?} y={y:?} want {want}, got {got:?}")
            })?;
        }
    }
    Ok("50 vector pairs x 3 backends match the reference".into())
}

fn backend_equivalence() -> Outcome {
    let mut rng = gen::rng(2);
    let programs = 200;
    let mut rejected = 0;
    let mut muxed = 0;
    let mut seen = BTreeMap::new();
    for n in 0..programs {
        let (case, r) = gen::checked_case(&mut rng);
        rejected += r;
        let violations = check(&case.program, &case.input.derive_signature());
        ensure(violations.is_empty(), || {
            format!("program {n} rejected: {violations:?}\n{}", pretty_print(&case.program))
        })?;
        for node in node_kinds(&case.program) {
            *seen.entry(node).or_insert(0usize) += 1;
        }
        let results = run_with_reports(&case.program, &case.input)
            .map_err(|e| format!("program {n}: {e}\n{}", pretty_print(&case.program)))?;
        if results[1].1.counts.encrypted.muxes > 0 {
            muxed += 1;
        }
        for (backend, (out, _)) in BackendKind::ALL.iter().zip(&results) {
            ensure(out == &case.expected.values, || {
                format!(
                    "program {n} on {backend} differs from the reference\n{}\nwant {:?}\ngot  {:?}",
                    pretty_print(&case.program),
                    case.expected.values,
                    out
                )
            })?;
        }
    }
    let missing: Vec<_> = GRAMMAR.iter().filter(|k| !seen.contains_key(*k)).collect();
    ensure(missing.is_empty(), || format!("generator never produced {missing:?}"))?;
    ensure(muxed > 0, || "no program exercised an encrypted if-else".into())?;
    Ok(format!(
        "{programs} checked programs agree on all backends and the reference; {muxed} ran an encrypted mux; {rejected} over-budget draws resampled"
    ))
}

const GRAMMAR: [&str; 20] = [
    "assign", "for", "int", "bool", "var", "neg", "+", "-", "*", "/", "==", "!=", "<", "<=", ">",
    ">=", "index", "len", "range", "if",
];

fn node_kinds(program: &Program) -> Vec<&'static str> {
    fn stmt(s: &Stmt, out: &mut Vec<&'static str>) {
        match &s.kind {
            StmtKind::Assign { value, .. } => {
                out.push("assign");
                expr(value, out);
            }
            StmtKind::ForIn { iterable, body, .. } => {
                out.push("for");
                expr(iterable, out);
                body.iter().for_each(|s| stmt(s, out));
            }
        }
    }
    fn expr(e: &Expr, out: &mut Vec<&'static str>) {
        match &e.kind {
            ExprKind::Int(_) => out.push("int"),
            ExprKind::Bool(_) => out.push("bool"),
            ExprKind::Var(_) => out.push("var"),
            ExprKind::Neg(x) => {
                out.push("neg");
                expr(x, out);
            }
            ExprKind::Binary { op, lhs, rhs } => {
                out.push(op.symbol());
                expr(lhs, out);
                expr(rhs, out);
            }
            ExprKind::Index { vector, index } => {
                out.push("index");
                expr(vector, out);
                expr(index, out);
            }
            ExprKind::Call { builtin, arg } => {
                out.push(builtin.name());
                expr(arg, out);
            }
            ExprKind::IfElse { cond, then, otherwise } => {
                out.push("if");
                [cond, then, otherwise].into_iter().for_each(|x| expr(x, out));
            }
        }
    }
    let mut out = Vec::new();
    program.statements.iter().for_each(|s| stmt(s, &mut out));
    out
}

fn outcome_code(source: &str, sig: &Signature) -> Vec<String> {
    match parse(source) {
        Err(SyntaxError::Parse(_)) => vec!["PARSE_ERROR".into()],
        Err(SyntaxError::Lex(_)) => vec!["LEX_ERROR".into()],
        Ok(p) => check(&p, sig).iter().map(|v| v.code.as_str().to_string()).collect(),
    }
}

fn restriction_enforcement() -> Outcome {
    let manifest = common::manifest();
    ensure(manifest.reject.len() >= 10, || "negative corpus too small".into())?;
    for entry in &manifest.reject {
        let expected = entry.expect.clone().ok_or(format!("{} has no expectation", entry.file))?;
        let got = outcome_code(&entry.source(), &entry.signature);
        ensure(got == [expected.clone()], || {
            format!("{}: expected [{expected}], got {got:?}", entry.file)
        })?;
    }
    Ok(format!("{} negative programs yield exactly their expected code", manifest.reject.len()))
}

fn overhead_structure() -> Outcome {
    let program = parse(common::COVARIANCE).map_err(|e| e.to_string())?;
    let key = keygen();
    let input = Context::new()
        .with("xVec", ContextVar::secret_vector(vec![1, 2, 3, 4, 5, 6]))
        .with("yVec", ContextVar::secret_vector(vec![2, -4, 6, 0, 3, 1]))
        .seal(&key)
        .map_err(|e| e.to_string())?;
    let rows = run_bench(&program, &input, &BackendKind::ALL, 5, &BackendConfig::with_key(key))
        .map_err(|e| e.to_string())?;
    let [clear, fhe, tee] = [&rows[0], &rows[1], &rows[2]];
    ensure(fhe.total_cost > clear.total_cost, || {
        format!("fhe-sim cost {} not above clear cost {}", fhe.total_cost, clear.total_cost)
    })?;
    ensure(tee.counts == clear.counts, || {
        format!("tee-sim counts {:?} differ from clear {:?}", tee.counts, clear.counts)
    })?;
    ensure(tee.total_cost == clear.total_cost, || "tee-sim and clear costs differ".into())?;
    Ok(format!(
        "cost clear {} / tee-sim {} / fhe-sim {}",
        clear.total_cost, tee.total_cost, fhe.total_cost
    ))
}

fn mul_chain(k: usize) -> String {
    let mut src = String::from("p = a");
    for _ in 0..k {
        src.push_str("\np = p * b");
    }
    src
}

fn noise_model() -> Outcome {
    let key = keygen();
    let input = Context::new()
        .with("a", ContextVar::secret_scalar(3))
        .with("b", ContextVar::secret_scalar(-1))
        .seal(&key)
        .map_err(|e| e.to_string())?;
    let config = BackendConfig::with_key(key.clone());
    let run = |k| evaluate_on(BackendKind::FheSim, &parse(&mul_chain(k)).unwrap(), &input, &config);
    let ten = run(10).map_err(|e| format!("k=10 failed: {e}"))?;
    let p = ten.output.reveal(Some(&key)).map_err(|e| e.to_string())?;
    ensure(p.get("p") == Some(&Revealed::Scalar(3)), || format!("k=10 result {p:?}"))?;
    ensure(ten.report.counts.encrypted.muls == 10, || "k=10 mul count".into())?;
    match run(11) {
        Err(e) if e.code() == "NOISE_EXHAUSTED" => Ok("k=10 succeeds, k=11 raises NOISE_EXHAUSTED".into()),
        Err(e) => Err(format!("k=11 raised {}", e.code())),
        Ok(_) => Err("k=11 succeeded".into()),
    }
}

fn sealing_soundness() -> Outcome {
    let mut rng = gen::rng(6);
    let key = keygen();
    let names = ["xVec", "yVec", "covariance", "a", "_t1"];
    for _ in 0..1000 {
        let v: i64 = rng.gen();
        let name = names[rng.gen_range(0..names.len())];
        let index: u32 = rng.gen_range(0..64);
        let env = seal_value(&key, name, index, v);
        let back = unseal_value(&key, name, index, &env).map_err(|e| e.to_string())?;
        ensure(back == v, || format!("{v} came back as {back}"))?;
    }
    let value: i64 = rng.gen();
    let env = seal_value(&key, "xVec", 0, value);
    let bytes = env.to_bytes();
    let bits = bytes.len() * 8;
    for _ in 0..100 {
        let bit = rng.gen_range(0..bits);
        let mut flipped = bytes.clone();
        flipped[bit / 8] ^= 1 << (bit % 8);
        let tampered = SealedEnvelope::from_bytes(&flipped).map_err(|e| e.to_string())?;
        let r = unseal_value(&key, "xVec", 0, &tampered);
        ensure(r == Err(EnvelopeError::AuthFailure), || format!("bit {bit}: {r:?}"))?;
    }
    for (name, index) in [("xVec", 1), ("yVec", 0), ("xVe", 0), ("xVecx", 0)] {
        let r = unseal_value(&key, name, index, &env);
        ensure(r == Err(EnvelopeError::AuthFailure), || format!("({name}, {index}): {r:?}"))?;
    }
    let r = unseal_value(&keygen(), "xVec", 0, &env);
    ensure(r == Err(EnvelopeError::AuthFailure), || format!("foreign key: {r:?}"))?;
    Ok(format!("1000 round trips; 100 random flips over {bits} envelope bits, name/index swaps and a foreign key all rejected"))
}

fn round_trip() -> Outcome {
    let manifest = common::manifest();
    let mut corpus = 0;
    for entry in &manifest.programs {
        let p = parse(&entry.source()).map_err(|e| format!("{}: {e}", entry.file))?;
        let again = parse(&pretty_print(&p)).map_err(|e| format!("{} reprint: {e}", entry.file))?;
        ensure(again == p, || format!("{} changed on round trip", entry.file))?;
        corpus += 1;
    }
    let mut rng = gen::rng(7);
    for n in 0..500 {
        let ast = gen::random_ast(&mut rng);
        let text = pretty_print(&ast);
        let back = parse(&text).map_err(|e| format!("ast {n}: {e}\n{text}"))?;
        ensure(back == ast, || format!("ast {n} changed on round trip:\n{text}"))?;
    }
    let key = keygen();
    for n in 0..200 {
        let mut ctx = gen::random_context(&mut rng);
        if n % 2 == 1 {
            ctx = ctx.seal(&key).map_err(|e| e.to_string())?;
        }
        let first = save_context(&ctx);
        let loaded = load_context(&first).map_err(|e| format!("context {n}: {e}"))?;
        ensure(loaded == ctx, || format!("context {n} changed on load"))?;
        ensure(save_context(&loaded) == first, || format!("context {n} not canonical"))?;
    }
    Ok(format!("{corpus} corpus programs, 500 random ASTs, 200 contexts"))
}

fn checker_fixpoint() -> Outcome {
    let manifest = common::manifest();
    let mut worst = 0;
    for entry in &manifest.programs {
        let p = parse(&entry.source()).map_err(|e| format!("{}: {e}", entry.file))?;
        let a = analyze(&p, &entry.signature);
        ensure(a.violations.is_empty(), || format!("{}: {:?}", entry.file, a.violations))?;
        ensure(a.max_loop_passes <= 2, || {
            format!("{} needed {} passes", entry.file, a.max_loop_passes)
        })?;
        worst = worst.max(a.max_loop_passes);
    }
    let p = parse(common::COVARIANCE).map_err(|e| e.to_string())?;
    let sig = Signature::new()
        .with("xVec", Label::Encrypted, Kind::Vector)
        .with("yVec", Label::Encrypted, Kind::Vector);
    let table = analyze(&p, &sig).table;
    for name in ["xSum", "ySum", "xMean", "yMean", "sum", "covariance"] {
        ensure(table.label(name) == Some(Label::Encrypted), || {
            format!("{name} is {:?}", table.label(name))
        })?;
    }
    Ok(format!(
        "{} corpus programs converge in at most {worst} passes; covariance variables all encrypted",
        manifest.programs.len()
    ))
}
