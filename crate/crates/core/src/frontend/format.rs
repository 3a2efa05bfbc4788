//! Canonical rendering of specifications.
//!
//! One declaration per line: inputs first, then outputs, then triggers.
//! Parentheses are emitted only where precedence or associativity requires them.

use std::fmt::Write;

use super::ast::*;

/// Renders `ast` canonically. `parse_spec(&format_spec(&ast))` equals `ast`.
pub fn format_spec(ast: &SpecificationAst) -> String {
    let mut out = String::new();
    for input in &ast.inputs {
        let _ = writeln!(out, "input {}: {}", input.name.name, input.ty);
    }
    for output in &ast.outputs {
        out.push_str("output ");
        out.push_str(&output.name.name);
        if let Some(ty) = output.ty {
            let _ = write!(out, ": {ty}");
        }
        if let Some(freq) = &output.frequency {
            let _ = write!(out, " @{}Hz", freq.text);
        }
        out.push_str(" := ");
        out.push_str(&format_expr(&output.expr));
        out.push('\n');
    }
    for trigger in &ast.triggers {
        out.push_str("trigger ");
        if let Some(freq) = &trigger.frequency {
            let _ = write!(out, "@{}Hz ", freq.text);
        }
        out.push_str(&format_expr(&trigger.condition));
        out.push(' ');
        out.push_str(&quote(&trigger.message));
        out.push('\n');
    }
    out
}

pub fn format_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

fn quote(message: &str) -> String {
    let mut s = String::with_capacity(message.len() + 2);
    s.push('"');
    for c in message.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

const UNARY_PREC: u8 = 6;
const ATOM_PREC: u8 = 7;

fn precedence(expr: &Expr) -> u8 {
    match &expr.kind {
        ExprKind::If { .. } => 0,
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { op: UnaryOp::Neg | UnaryOp::Not, .. } => UNARY_PREC,
        _ => ATOM_PREC,
    }
}

fn write_operand(out: &mut String, expr: &Expr, min_prec: u8) {
    // `if` extends as far right as possible, so it is always wrapped as an operand.
    if precedence(expr) < min_prec || matches!(expr.kind, ExprKind::If { .. }) {
        out.push('(');
        write_expr(out, expr);
        out.push(')');
    } else {
        write_expr(out, expr);
    }
}

fn write_defaults(out: &mut String, default: &Option<Box<Expr>>) {
    if let Some(d) = default {
        out.push_str(".defaults(to: ");
        write_expr(out, d);
        out.push(')');
    }
}

fn write_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::Literal(Literal::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Literal(Literal::Int(t)) | ExprKind::Literal(Literal::Float(t)) => out.push_str(t),
        ExprKind::Stream(id) => out.push_str(&id.name),
        ExprKind::Offset { stream, by, default } => {
            let _ = write!(out, "{}.offset(by: -{by})", stream.name);
            write_defaults(out, default);
        }
        ExprKind::Hold { stream, default } => {
            let _ = write!(out, "{}.hold()", stream.name);
            write_defaults(out, default);
        }
        ExprKind::Window { stream, duration, function, default } => {
            let over = match duration {
                WindowDuration::Finite { text, unit } => format!("{text}{}", unit.suffix()),
                WindowDuration::Infinite => "∞".to_string(),
            };
            let _ = write!(out, "{}.aggregate(over: {over}, using: {function})", stream.name);
            write_defaults(out, default);
        }
        ExprKind::Unary { op, operand } => match op {
            UnaryOp::Neg | UnaryOp::Not => {
                out.push(if *op == UnaryOp::Neg { '-' } else { '!' });
                write_operand(out, operand, UNARY_PREC);
            }
            UnaryOp::Abs | UnaryOp::Sqrt => {
                out.push_str(if *op == UnaryOp::Abs { "abs(" } else { "sqrt(" });
                write_expr(out, operand);
                out.push(')');
            }
        },
        ExprKind::Cast { kind, operand } => {
            out.push_str(kind.name());
            out.push('(');
            write_expr(out, operand);
            out.push(')');
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // Comparisons do not associate; everything else is left-associative.
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_operand(out, lhs, left_min);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, p + 1);
        }
        ExprKind::If { cond, then, otherwise } => {
            out.push_str("if ");
            write_expr(out, cond);
            out.push_str(" then ");
            write_expr(out, then);
            out.push_str(" else ");
            write_expr(out, otherwise);
        }
    }
}
