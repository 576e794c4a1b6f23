use std::fmt::Write;

use super::ast::*;

// Binding strengths used to decide where parentheses are needed.
const PREC_IF: u8 = 0;
const PREC_UNARY: u8 = 4;
const PREC_POSTFIX: u8 = 5;
const PREC_ATOM: u8 = 6;

/// Renders a program in canonical form: one statement per line, two-space
/// indentation inside `for` blocks, and only the parentheses the structure
/// requires.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for stmt in &program.statements {
        write_stmt(&mut out, stmt, 0);
    }
    out
}

pub fn print_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let indent = "  ".repeat(depth);
    match &stmt.kind {
        StmtKind::Assign { target, value } => {
            let _ = writeln!(out, "{indent}{target} = {}", print_expr(value));
        }
        StmtKind::ForIn {
            binder,
            iterable,
            body,
        } => {
            let _ = writeln!(out, "{indent}for {binder} in {} {{", print_expr(iterable));
            for s in body {
                write_stmt(out, s, depth + 1);
            }
            let _ = writeln!(out, "{indent}}}");
        }
    }
}

fn precedence(expr: &Expr) -> u8 {
    match &expr.kind {
        ExprKind::IfElse { .. } => PREC_IF,
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Neg(_) => PREC_UNARY,
        ExprKind::Index { .. } => PREC_POSTFIX,
        _ => PREC_ATOM,
    }
}

fn write_operand(out: &mut String, expr: &Expr, parenthesize: bool) {
    if parenthesize {
        out.push('(');
        write_expr(out, expr);
        out.push(')');
    } else {
        write_expr(out, expr);
    }
}

fn write_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Neg(operand) => {
            out.push('-');
            write_operand(out, operand, precedence(operand) < PREC_UNARY);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // comparisons are non-associative, so a comparison operand on
            // either side needs parentheses
            let lhs_parens = if op.is_comparison() {
                precedence(lhs) <= p
            } else {
                precedence(lhs) < p
            };
            write_operand(out, lhs, lhs_parens);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, precedence(rhs) <= p);
        }
        ExprKind::Index { vector, index } => {
            write_operand(out, vector, precedence(vector) < PREC_POSTFIX);
            out.push('[');
            write_expr(out, index);
            out.push(']');
        }
        ExprKind::Call { builtin, arg } => {
            out.push_str(builtin.name());
            out.push('(');
            write_expr(out, arg);
            out.push(')');
        }
        ExprKind::IfElse {
            cond,
            then,
            otherwise,
        } => {
            out.push_str("if ");
            write_expr(out, cond);
            out.push_str(" { ");
            write_expr(out, then);
            out.push_str(" } else { ");
            write_expr(out, otherwise);
            out.push_str(" }");
        }
    }
}
