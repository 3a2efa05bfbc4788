//! Type inference.
//!
//! Literals and explicit conversions are flexible: they take the type demanded
//! by their context (the other operand, the declared type of the stream, the
//! default of an access). Implicit conversions only widen within one kind.
//! Narrowing or changing kind requires `cast`, `Int` or `Float`.

use crate::frontend::{BinaryOp, CastKind, Expr, ExprKind, Literal, Span, UnaryOp, WindowFunction};
use crate::types::{SemType, TypeKind, Value};

use super::ir::Ir;
use super::{AnalysisError, Resolved, StreamId};

/// Result of type inference: a type for every stream and a lowered expression
/// for every output and trigger.
#[derive(Debug, Clone)]
pub struct TypeTable {
    pub stream_types: Vec<SemType>,
    pub exprs: Vec<Option<Ir>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct KindSet(u8);

impl KindSet {
    const UNSIGNED: u8 = 1;
    const SIGNED: u8 = 2;
    const FLOAT: u8 = 4;
    const NUMERIC: KindSet = KindSet(Self::UNSIGNED | Self::SIGNED | Self::FLOAT);
    const INTEGER: KindSet = KindSet(Self::UNSIGNED | Self::SIGNED);
    const FLOATS: KindSet = KindSet(Self::FLOAT);

    fn bit(kind: TypeKind) -> u8 {
        match kind {
            TypeKind::Bool => 0,
            TypeKind::Unsigned => Self::UNSIGNED,
            TypeKind::Signed => Self::SIGNED,
            TypeKind::Float => Self::FLOAT,
        }
    }

    fn contains(self, kind: TypeKind) -> bool {
        self.0 & Self::bit(kind) != 0
    }

    fn intersect(self, other: KindSet) -> KindSet {
        KindSet(self.0 & other.0)
    }

    fn is_empty(self) -> bool {
        self.0 == 0
    }

    fn fallback(self) -> SemType {
        if self.contains(TypeKind::Signed) {
            SemType::Int64
        } else if self.contains(TypeKind::Float) {
            SemType::Float64
        } else {
            SemType::UInt64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Known(SemType),
    /// Adopts any type whose kind is in the set; `default` when unconstrained.
    Flex { kinds: KindSet, default: SemType },
    /// Type of a stream whose own inference is still in progress (offset self-reference).
    Unknown,
}

impl Ty {
    fn resolve(self) -> Option<SemType> {
        match self {
            Ty::Known(t) => Some(t),
            Ty::Flex { default, .. } => Some(default),
            Ty::Unknown => None,
        }
    }

    fn describe(self) -> String {
        match self {
            Ty::Known(t) => t.to_string(),
            Ty::Flex { kinds, .. } if kinds == KindSet::FLOATS => "a float literal".into(),
            Ty::Flex { kinds, .. } if kinds == KindSet::INTEGER => "an integer conversion".into(),
            Ty::Flex { .. } => "a numeric literal".into(),
            Ty::Unknown => "an unknown type".into(),
        }
    }

    fn restrict(self, kinds: KindSet) -> Option<Ty> {
        match self {
            Ty::Known(t) => kinds.contains(t.kind()).then_some(self),
            Ty::Flex { kinds: k, default } => {
                let k = k.intersect(kinds);
                if k.is_empty() {
                    None
                } else {
                    let default = if k.contains(default.kind()) { default } else { k.fallback() };
                    Some(Ty::Flex { kinds: k, default })
                }
            }
            Ty::Unknown => Some(Ty::Unknown),
        }
    }
}

/// Common type of two operands, or `None` if they cannot be reconciled.
fn unify(a: Ty, b: Ty) -> Option<Ty> {
    match (a, b) {
        (Ty::Unknown, x) | (x, Ty::Unknown) => Some(x),
        (Ty::Known(x), Ty::Known(y)) => {
            if x.kind() != y.kind() {
                None
            } else if x.bits() >= y.bits() {
                Some(Ty::Known(x))
            } else {
                Some(Ty::Known(y))
            }
        }
        (Ty::Known(x), flex @ Ty::Flex { .. }) | (flex @ Ty::Flex { .. }, Ty::Known(x)) => {
            flex.restrict(KindSet(KindSet::bit(x.kind()))).map(|_| Ty::Known(x))
        }
        (Ty::Flex { kinds, default }, other @ Ty::Flex { .. }) => {
            other.restrict(kinds).map(|t| match t {
                Ty::Flex { kinds, .. } if kinds.contains(default.kind()) => Ty::Flex { kinds, default },
                t => t,
            })
        }
    }
}

/// Whether a value of type `value` may be stored into `target` without an explicit conversion.
fn assignable(value: Ty, target: SemType) -> bool {
    match value {
        Ty::Known(t) => t.widens_to(target),
        Ty::Flex { kinds, .. } => kinds.contains(target.kind()),
        Ty::Unknown => true,
    }
}

/// Result type of a window aggregation over values of type `input`.
pub fn window_result_type(function: WindowFunction, input: SemType) -> Option<SemType> {
    let kind = input.kind();
    if kind == TypeKind::Bool && function != WindowFunction::Count {
        return None;
    }
    Some(match function {
        WindowFunction::Count => SemType::UInt64,
        WindowFunction::Sum => {
            if kind == TypeKind::Float {
                input
            } else {
                input.widest()
            }
        }
        WindowFunction::Min | WindowFunction::Max => input,
        WindowFunction::Avg | WindowFunction::Integral => {
            if kind == TypeKind::Float {
                input
            } else {
                SemType::Float64
            }
        }
    })
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Pending,
    InProgress,
    Done(SemType),
    Failed,
}

struct Checker<'r, 'a> {
    resolved: &'r Resolved<'a>,
    states: Vec<State>,
}

type TyResult = Result<Ty, (String, Span)>;

impl<'r, 'a> Checker<'r, 'a> {
    fn stream_ty(&mut self, id: StreamId) -> Ty {
        if let Some(t) = self.resolved.declared_type(id) {
            return Ty::Known(t);
        }
        match self.states[id.0] {
            State::Done(t) => Ty::Known(t),
            State::InProgress | State::Failed => Ty::Unknown,
            State::Pending => {
                self.states[id.0] = State::InProgress;
                let expr = self.resolved.expr(id).expect("outputs have expressions");
                let inferred = self.infer(expr).ok().and_then(Ty::resolve);
                self.states[id.0] = inferred.map_or(State::Failed, State::Done);
                inferred.map_or(Ty::Unknown, Ty::Known)
            }
        }
    }

    fn lookup(&self, name: &str) -> StreamId {
        self.resolved.by_name[name]
    }

    fn infer(&mut self, expr: &Expr) -> TyResult {
        let span = expr.span;
        let err = |msg: String| Err((msg, span));
        match &expr.kind {
            ExprKind::Literal(Literal::Bool(_)) => Ok(Ty::Known(SemType::Bool)),
            ExprKind::Literal(Literal::Int(_)) => Ok(Ty::Flex { kinds: KindSet::NUMERIC, default: SemType::Int64 }),
            ExprKind::Literal(Literal::Float(_)) => {
                Ok(Ty::Flex { kinds: KindSet::FLOATS, default: SemType::Float64 })
            }
            ExprKind::Stream(id) => Ok(self.stream_ty(self.lookup(&id.name))),
            ExprKind::Offset { stream, default, .. } | ExprKind::Hold { stream, default } => {
                let ty = self.stream_ty(self.lookup(&stream.name));
                if let Some(d) = default {
                    let dt = self.infer(d)?;
                    if let Some(target) = ty.resolve() {
                        if !assignable(dt, target) {
                            return Err((
                                format!(
                                    "default of type {} does not fit stream `{}` of type {target}",
                                    dt.describe(),
                                    stream.name
                                ),
                                d.span,
                            ));
                        }
                    }
                }
                Ok(ty)
            }
            ExprKind::Window { stream, function, default, .. } => {
                let input = self.stream_ty(self.lookup(&stream.name));
                let result = match input.resolve() {
                    Some(t) => match window_result_type(*function, t) {
                        Some(r) => Ty::Known(r),
                        None => return err(format!("cannot aggregate {t} stream `{}` using {function}", stream.name)),
                    },
                    None => Ty::Unknown,
                };
                if let Some(d) = default {
                    let dt = self.infer(d)?;
                    if let Some(r) = result.resolve() {
                        if !assignable(dt, r) {
                            return Err((
                                format!("default of type {} does not fit aggregation result {r}", dt.describe()),
                                d.span,
                            ));
                        }
                    }
                }
                Ok(result)
            }
            ExprKind::Unary { op, operand } => {
                let t = self.infer(operand)?;
                let allowed = match op {
                    UnaryOp::Not => {
                        return match t {
                            Ty::Known(SemType::Bool) | Ty::Unknown => Ok(Ty::Known(SemType::Bool)),
                            other => err(format!("`!` expects Bool, found {}", other.describe())),
                        }
                    }
                    UnaryOp::Neg => KindSet(KindSet::SIGNED | KindSet::FLOAT),
                    UnaryOp::Abs => KindSet::NUMERIC,
                    UnaryOp::Sqrt => KindSet::FLOATS,
                };
                let name = match op {
                    UnaryOp::Neg => "negation",
                    UnaryOp::Abs => "abs",
                    _ => "sqrt",
                };
                t.restrict(allowed).ok_or_else(|| (format!("{name} is not defined for {}", t.describe()), span))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.infer(lhs)?;
                let r = self.infer(rhs)?;
                let mismatch = || {
                    (format!("operator `{}` cannot combine {} and {}", op.symbol(), l.describe(), r.describe()), span)
                };
                match op {
                    BinaryOp::And | BinaryOp::Or => {
                        for t in [l, r] {
                            if !matches!(t, Ty::Known(SemType::Bool) | Ty::Unknown) {
                                return Err(mismatch());
                            }
                        }
                        Ok(Ty::Known(SemType::Bool))
                    }
                    BinaryOp::Eq | BinaryOp::Ne => {
                        unify(l, r).ok_or_else(mismatch)?;
                        Ok(Ty::Known(SemType::Bool))
                    }
                    BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                        let u = unify(l, r).ok_or_else(mismatch)?;
                        u.restrict(KindSet::NUMERIC).ok_or_else(mismatch)?;
                        Ok(Ty::Known(SemType::Bool))
                    }
                    BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => {
                        let u = unify(l, r).ok_or_else(mismatch)?;
                        u.restrict(KindSet::NUMERIC).ok_or_else(mismatch)
                    }
                }
            }
            ExprKind::If { cond, then, otherwise } => {
                let c = self.infer(cond)?;
                if !matches!(c, Ty::Known(SemType::Bool) | Ty::Unknown) {
                    return Err((format!("condition must be Bool, found {}", c.describe()), cond.span));
                }
                let a = self.infer(then)?;
                let b = self.infer(otherwise)?;
                unify(a, b).ok_or_else(|| {
                    (format!("branches have incompatible types {} and {}", a.describe(), b.describe()), span)
                })
            }
            ExprKind::Cast { kind, operand } => {
                let o = self.infer(operand)?;
                match kind {
                    CastKind::Int => Ok(Ty::Flex { kinds: KindSet::INTEGER, default: SemType::Int64 }),
                    CastKind::Float => Ok(Ty::Flex { kinds: KindSet::FLOATS, default: SemType::Float64 }),
                    CastKind::Cast => {
                        let default = match o.resolve() {
                            Some(t) if t.is_numeric() => t,
                            _ => SemType::UInt8,
                        };
                        Ok(Ty::Flex { kinds: KindSet::NUMERIC, default })
                    }
                }
            }
        }
    }

    /// A missing default is a pacing error; the placeholder is never evaluated.
    fn lower_default(&mut self, default: Option<&Expr>, ty: SemType, windows: &mut std::slice::Iter<'_, usize>) -> Ir {
        match default {
            Some(d) => self.lower(d, ty, windows),
            None => Ir::Const(ty.normalize(Value::Unsigned(0)).convert(ty)),
        }
    }

    /// Lowers `expr` to IR. `context` is the type demanded by the surrounding
    /// expression; flexible nodes adopt it.
    fn lower(&mut self, expr: &Expr, context: SemType, windows: &mut std::slice::Iter<'_, usize>) -> Ir {
        let own = self.infer(expr).expect("lowering follows a successful inference");
        let node_ty = match own {
            Ty::Known(t) => t,
            Ty::Flex { kinds, default } => {
                if kinds.contains(context.kind()) {
                    context
                } else {
                    default
                }
            }
            Ty::Unknown => context,
        };
        match &expr.kind {
            ExprKind::Literal(lit) => Ir::Const(literal_value(lit, node_ty)),
            ExprKind::Stream(id) => Ir::Load(self.lookup(&id.name)),
            ExprKind::Offset { stream, by, default } => {
                let target = self.lookup(&stream.name);
                let ty = self.stream_ty(target).resolve().expect("typed");
                let default = self.lower_default(default.as_deref(), ty, windows);
                Ir::Offset { target, by: *by, default: Box::new(default) }
            }
            ExprKind::Hold { stream, default } => {
                let target = self.lookup(&stream.name);
                let ty = self.stream_ty(target).resolve().expect("typed");
                let default = self.lower_default(default.as_deref(), ty, windows);
                Ir::Hold { target, default: Box::new(default) }
            }
            ExprKind::Window { default, .. } => {
                let window = *windows.next().expect("window order matches resolution order");
                let default = default.as_ref().map(|d| Box::new(self.lower(d, node_ty, windows)));
                Ir::Window { window, default }
            }
            ExprKind::Unary { op, operand } => {
                let operand_ctx = if *op == UnaryOp::Not { SemType::Bool } else { node_ty };
                Ir::Unary { op: *op, operand: Box::new(self.lower(operand, operand_ctx, windows)), ty: node_ty }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let operand_ty = match op {
                    BinaryOp::And | BinaryOp::Or => SemType::Bool,
                    BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => node_ty,
                    _ => {
                        let l = self.infer(lhs).expect("inferred");
                        let r = self.infer(rhs).expect("inferred");
                        unify(l, r).and_then(Ty::resolve).unwrap_or(SemType::Int64)
                    }
                };
                Ir::Binary {
                    op: *op,
                    lhs: Box::new(self.lower(lhs, operand_ty, windows)),
                    rhs: Box::new(self.lower(rhs, operand_ty, windows)),
                    ty: operand_ty,
                }
            }
            ExprKind::If { cond, then, otherwise } => Ir::If {
                cond: Box::new(self.lower(cond, SemType::Bool, windows)),
                then: Box::new(self.lower(then, node_ty, windows)),
                otherwise: Box::new(self.lower(otherwise, node_ty, windows)),
            },
            ExprKind::Cast { operand, .. } => {
                let o = self.infer(operand).expect("inferred");
                let from = o.resolve().unwrap_or(node_ty);
                Ir::Convert { operand: Box::new(self.lower(operand, from, windows)), to: node_ty }
            }
        }
    }
}

fn literal_value(lit: &Literal, ty: SemType) -> Value {
    match lit {
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Int(text) => {
            let v: u64 = text.parse().expect("parser checked range");
            match ty.kind() {
                TypeKind::Float => Value::Float(v as f64),
                TypeKind::Signed => ty.normalize(Value::Signed(v as i64)),
                _ => ty.normalize(Value::Unsigned(v)),
            }
        }
        Literal::Float(text) => Value::Float(text.parse().expect("lexer produced a valid number")),
    }
}

/// Infers a type for every stream and lowers every expression.
pub fn infer_types(resolved: &Resolved<'_>) -> Result<TypeTable, Vec<AnalysisError>> {
    let mut checker = Checker { resolved, states: vec![State::Pending; resolved.len()] };
    let mut errors = Vec::new();
    let mut stream_types = Vec::with_capacity(resolved.len());
    let mut exprs = Vec::with_capacity(resolved.len());
    let mut window_ids = Vec::new();
    for (i, w) in resolved.windows.iter().enumerate() {
        window_ids.push((w.0, i));
    }

    for id in resolved.ids() {
        let Some(expr) = resolved.expr(id) else {
            stream_types.push(resolved.declared_type(id).expect("inputs are typed"));
            exprs.push(None);
            continue;
        };
        let inferred = match checker.infer(expr) {
            Ok(t) => t,
            Err((message, span)) => {
                errors.push(AnalysisError::Type { message, span });
                stream_types.push(SemType::Bool);
                exprs.push(None);
                continue;
            }
        };
        let target = match resolved.declared_type(id) {
            Some(declared) => {
                if !assignable(inferred, declared) {
                    let what = if resolved.kinds[id.0] == super::StreamKind::Trigger {
                        "trigger condition must be Bool".to_string()
                    } else {
                        format!("stream `{}` is declared {declared}", resolved.names[id.0])
                    };
                    errors.push(AnalysisError::Type {
                        message: format!(
                            "{what} but its expression has type {}; use an explicit cast",
                            inferred.describe()
                        ),
                        span: expr.span,
                    });
                    stream_types.push(declared);
                    exprs.push(None);
                    continue;
                }
                declared
            }
            None => match checker.stream_ty(id).resolve() {
                Some(t) => t,
                None => {
                    errors.push(AnalysisError::Type {
                        message: format!(
                            "cannot infer the type of `{}`; add a type annotation",
                            resolved.names[id.0]
                        ),
                        span: resolved.spans[id.0],
                    });
                    stream_types.push(SemType::Bool);
                    exprs.push(None);
                    continue;
                }
            },
        };
        stream_types.push(target);
        // Lowered below, once every stream type is final.
        exprs.push(None);
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    for id in resolved.ids() {
        let Some(expr) = resolved.expr(id) else { continue };
        let target = stream_types[id.0];
        let ids: Vec<usize> = window_ids.iter().filter(|(e, _)| *e == id).map(|(_, i)| *i).collect();
        let mut iter = ids.iter();
        exprs[id.0] = Some(checker.lower(expr, target, &mut iter));
    }
    Ok(TypeTable { stream_types, exprs })
}
