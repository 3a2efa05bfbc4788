//! Expression evaluation over 64-bit values.

use crate::analysis::Ir;
use crate::frontend::{BinaryOp, UnaryOp};
use crate::types::{SemType, TypeKind, Value};

/// A runtime fault inside an expression; reported as a verdict, never a panic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    DivisionByZero,
}

impl std::fmt::Display for Fault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fault::DivisionByZero => f.write_str("division by zero"),
        }
    }
}

/// Access to stream values during one evaluation cycle.
pub trait Context {
    fn load(&mut self, stream: usize) -> Option<Value>;
    fn offset(&mut self, stream: usize, by: u32) -> Option<Value>;
    fn hold(&mut self, stream: usize) -> Option<Value>;
    fn window(&mut self, window: usize) -> Option<Value>;
}

/// `Ok(None)` means no value exists (for example a synchronous access to a
/// stream that was not evaluated in this cycle).
pub fn evaluate(ir: &Ir, ctx: &mut impl Context) -> Result<Option<Value>, Fault> {
    Ok(match ir {
        Ir::Const(v) => Some(*v),
        Ir::Load(s) => ctx.load(s.0),
        Ir::Offset { target, by, default } => match ctx.offset(target.0, *by) {
            Some(v) => Some(v),
            None => evaluate(default, ctx)?,
        },
        Ir::Hold { target, default } => match ctx.hold(target.0) {
            Some(v) => Some(v),
            None => evaluate(default, ctx)?,
        },
        Ir::Window { window, default } => match (ctx.window(*window), default) {
            (Some(v), _) => Some(v),
            (None, Some(d)) => evaluate(d, ctx)?,
            (None, None) => None,
        },
        Ir::Unary { op, operand, ty } => match evaluate(operand, ctx)? {
            Some(v) => Some(unary(*op, v, *ty)),
            None => None,
        },
        Ir::Binary { op, lhs, rhs, ty } => {
            let l = evaluate(lhs, ctx)?;
            let r = evaluate(rhs, ctx)?;
            match (l, r) {
                (Some(l), Some(r)) => Some(binary(*op, l, r, *ty)?),
                _ => None,
            }
        }
        Ir::If { cond, then, otherwise } => match evaluate(cond, ctx)? {
            Some(Value::Bool(true)) => evaluate(then, ctx)?,
            Some(_) => evaluate(otherwise, ctx)?,
            None => None,
        },
        Ir::Convert { operand, to } => evaluate(operand, ctx)?.map(|v| v.convert(*to)),
    })
}

fn unary(op: UnaryOp, v: Value, ty: SemType) -> Value {
    match (op, v) {
        (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
        (UnaryOp::Neg, Value::Signed(x)) => ty.normalize(Value::Signed(x.wrapping_neg())),
        (UnaryOp::Neg, Value::Float(x)) => Value::Float(-x),
        (UnaryOp::Abs, Value::Signed(x)) => ty.normalize(Value::Signed(x.wrapping_abs())),
        (UnaryOp::Abs, Value::Float(x)) => Value::Float(x.abs()),
        (UnaryOp::Abs, v @ Value::Unsigned(_)) => v,
        (UnaryOp::Sqrt, v) => Value::Float(v.as_f64().sqrt()),
        (op, v) => unreachable!("type analysis rejects {op:?} on {v:?}"),
    }
}

fn binary(op: BinaryOp, l: Value, r: Value, ty: SemType) -> Result<Value, Fault> {
    use BinaryOp::*;
    let l = l.convert(ty);
    let r = r.convert(ty);
    Ok(match op {
        And => Value::Bool(l.as_bool() == Some(true) && r.as_bool() == Some(true)),
        Or => Value::Bool(l.as_bool() == Some(true) || r.as_bool() == Some(true)),
        Eq | Ne | Lt | Le | Gt | Ge => {
            let ord = match (l, r) {
                (Value::Unsigned(a), Value::Unsigned(b)) => a.partial_cmp(&b),
                (Value::Signed(a), Value::Signed(b)) => a.partial_cmp(&b),
                (Value::Float(a), Value::Float(b)) => a.partial_cmp(&b),
                (Value::Bool(a), Value::Bool(b)) => a.partial_cmp(&b),
                _ => unreachable!("operands share a type"),
            };
            use std::cmp::Ordering::*;
            Value::Bool(match op {
                Eq => ord == Some(Equal),
                Ne => ord != Some(Equal),
                Lt => ord == Some(Less),
                Le => matches!(ord, Some(Less | Equal)),
                Gt => ord == Some(Greater),
                _ => matches!(ord, Some(Greater | Equal)),
            })
        }
        Add | Sub | Mul | Div => match ty.kind() {
            TypeKind::Float => {
                let (a, b) = (l.as_f64(), r.as_f64());
                Value::Float(match op {
                    Add => a + b,
                    Sub => a - b,
                    Mul => a * b,
                    _ if b == 0.0 => return Err(Fault::DivisionByZero),
                    _ => a / b,
                })
            }
            TypeKind::Unsigned => {
                let (Value::Unsigned(a), Value::Unsigned(b)) = (l, r) else { unreachable!() };
                ty.normalize(Value::Unsigned(match op {
                    Add => a.wrapping_add(b),
                    Sub => a.wrapping_sub(b),
                    Mul => a.wrapping_mul(b),
                    _ => a.checked_div(b).ok_or(Fault::DivisionByZero)?,
                }))
            }
            TypeKind::Signed => {
                let (Value::Signed(a), Value::Signed(b)) = (l, r) else { unreachable!() };
                if op == Div && b == 0 {
                    return Err(Fault::DivisionByZero);
                }
                ty.normalize(Value::Signed(match op {
                    Add => a.wrapping_add(b),
                    Sub => a.wrapping_sub(b),
                    Mul => a.wrapping_mul(b),
                    _ => a.wrapping_div(b),
                }))
            }
            TypeKind::Bool => unreachable!("type analysis rejects arithmetic on Bool"),
        },
    })
}
