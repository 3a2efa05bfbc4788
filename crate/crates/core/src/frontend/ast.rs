//! Abstract syntax of specifications.
//!
//! Spans are carried for diagnostics but never participate in equality, so two
//! trees compare equal whenever they are structurally identical.

use std::fmt;
use std::hash::{Hash, Hasher};

use crate::time::{Decimal, Timestamp, NANOS_PER_SEC};
use crate::types::SemType;

/// Byte range plus 1-based line/column of the first byte.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident { name: name.into(), span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpecificationAst {
    pub inputs: Vec<InputDecl>,
    pub outputs: Vec<OutputDecl>,
    pub triggers: Vec<TriggerDecl>,
}

impl SpecificationAst {
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty() && self.outputs.is_empty() && self.triggers.is_empty()
    }

    pub fn declaration_count(&self) -> usize {
        self.inputs.len() + self.outputs.len() + self.triggers.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub name: Ident,
    pub ty: SemType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputDecl {
    pub name: Ident,
    pub ty: Option<SemType>,
    pub frequency: Option<Frequency>,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerDecl {
    pub frequency: Option<Frequency>,
    pub condition: Expr,
    pub message: String,
    pub span: Span,
}

/// An `@<number>Hz` annotation; the decimal text is kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frequency {
    pub text: String,
}

impl Frequency {
    pub fn hz(&self) -> f64 {
        Decimal::parse(&self.text).map(|d| d.to_f64()).unwrap_or(f64::NAN)
    }

    /// Period in nanoseconds, if it is a whole number of nanoseconds.
    pub fn period_ns(&self) -> Option<Timestamp> {
        Decimal::parse(&self.text)?.divide_exact(NANOS_PER_SEC)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeUnit {
    Seconds,
    Minutes,
    Hours,
}

impl TimeUnit {
    pub fn nanos(self) -> u64 {
        match self {
            TimeUnit::Seconds => NANOS_PER_SEC,
            TimeUnit::Minutes => 60 * NANOS_PER_SEC,
            TimeUnit::Hours => 3600 * NANOS_PER_SEC,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            TimeUnit::Seconds => "s",
            TimeUnit::Minutes => "min",
            TimeUnit::Hours => "h",
        }
    }

    pub fn from_suffix(s: &str) -> Option<Self> {
        match s {
            "s" => Some(TimeUnit::Seconds),
            "min" => Some(TimeUnit::Minutes),
            "h" => Some(TimeUnit::Hours),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WindowDuration {
    Finite { text: String, unit: TimeUnit },
    Infinite,
}

impl WindowDuration {
    /// Length in nanoseconds; `None` for the unbounded window.
    pub fn nanos(&self) -> Option<Timestamp> {
        match self {
            WindowDuration::Finite { text, unit } => Decimal::parse(text)?.scale_exact(unit.nanos()),
            WindowDuration::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFunction {
    Count,
    Sum,
    Avg,
    Min,
    Max,
    Integral,
}

impl WindowFunction {
    pub const ALL: [WindowFunction; 6] = [
        WindowFunction::Count,
        WindowFunction::Sum,
        WindowFunction::Avg,
        WindowFunction::Min,
        WindowFunction::Max,
        WindowFunction::Integral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindowFunction::Count => "count",
            WindowFunction::Sum => "sum",
            WindowFunction::Avg => "avg",
            WindowFunction::Min => "min",
            WindowFunction::Max => "max",
            WindowFunction::Integral => "integral",
        }
    }

    /// Whether an empty window has a defined result.
    pub fn has_neutral(self) -> bool {
        matches!(self, WindowFunction::Count | WindowFunction::Sum | WindowFunction::Integral)
    }
}

impl fmt::Display for WindowFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
    Abs,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Or => 1,
            And => 2,
            Eq | Ne | Lt | Le | Gt | Ge => 3,
            Add | Sub => 4,
            Mul | Div => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }

    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            And => "and",
            Or => "or",
            Eq => "=",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
        }
    }
}

/// Explicit conversions: `Int(e)`, `Float(e)` and the target-inferred `cast(e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CastKind {
    Int,
    Float,
    Cast,
}

impl CastKind {
    pub fn name(self) -> &'static str {
        match self {
            CastKind::Int => "Int",
            CastKind::Float => "Float",
            CastKind::Cast => "cast",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Bool(bool),
    /// Unsigned integer literal, decimal text kept verbatim.
    Int(String),
    /// Decimal literal with a fractional part or exponent, text kept verbatim.
    Float(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Stream(Ident),
    /// `s.offset(by: -n)`; `by` holds `n >= 1`.
    Offset { stream: Ident, by: u32, default: Option<Box<Expr>> },
    Hold { stream: Ident, default: Option<Box<Expr>> },
    Window {
        stream: Ident,
        duration: WindowDuration,
        function: WindowFunction,
        default: Option<Box<Expr>>,
    },
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    If { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
    Cast { kind: CastKind, operand: Box<Expr> },
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default() }
    }

    /// Visits this node and all descendants in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Literal(_) | ExprKind::Stream(_) => {}
            ExprKind::Offset { default, .. }
            | ExprKind::Hold { default, .. }
            | ExprKind::Window { default, .. } => {
                if let Some(d) = default {
                    d.walk(f);
                }
            }
            ExprKind::Unary { operand, .. } | ExprKind::Cast { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::If { cond, then, otherwise } => {
                cond.walk(f);
                then.walk(f);
                otherwise.walk(f);
            }
        }
    }
}
