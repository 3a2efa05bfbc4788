//! Resolved, type-annotated expressions evaluated by the engine.

use crate::frontend::{BinaryOp, UnaryOp};
use crate::types::{SemType, Value};

use super::StreamId;

#[derive(Debug, Clone, PartialEq)]
pub enum Ir {
    Const(Value),
    /// Synchronous access to the value produced in the current evaluation cycle.
    Load(StreamId),
    Offset { target: StreamId, by: u32, default: Box<Ir> },
    Hold { target: StreamId, default: Box<Ir> },
    Window { window: usize, default: Option<Box<Ir>> },
    /// `ty` is the type of the result.
    Unary { op: UnaryOp, operand: Box<Ir>, ty: SemType },
    /// `ty` is the common type of both operands.
    Binary { op: BinaryOp, lhs: Box<Ir>, rhs: Box<Ir>, ty: SemType },
    If { cond: Box<Ir>, then: Box<Ir>, otherwise: Box<Ir> },
    Convert { operand: Box<Ir>, to: SemType },
}
