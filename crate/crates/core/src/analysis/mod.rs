//! Static analysis: name resolution, type inference, pacing inference,
//! evaluation layering and memory bounds.
//!
//! [`analyze`] runs all sub-analyses and returns every error it finds rather
//! than stopping at the first one. Name errors are reported alone since the
//! later passes cannot interpret unresolved references.

mod ir;
mod layering;
mod memory;
mod pacing;
mod scaling;
mod typing;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::frontend::{Expr, ExprKind, Span, SpecificationAst, WindowDuration, WindowFunction};
use crate::time::Timestamp;
use crate::types::SemType;

pub use ir::Ir;
pub use layering::compute_layers;
pub use memory::{compute_memory_bounds, pane_state_bytes, ResourceReport, StreamResource, WindowResource};
pub use pacing::{infer_pacing, PacingType};
pub use scaling::{face_scaling_report, render_scaling_table, scaling_spec, ScalingRow};
pub use typing::{infer_types, window_result_type, TypeTable};

/// Dense index over all declarations: inputs, then outputs, then triggers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct StreamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamKind {
    Input,
    Output,
    Trigger,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{span}: name error: unknown stream `{name}`")]
    Name { name: String, span: Span },
    #[error("{span}: type error: {message}")]
    Type { message: String, span: Span },
    #[error("{span}: pacing error: {message}")]
    Pacing { message: String, span: Span },
    #[error("{span}: cycle error: zero-offset dependency cycle {}", path.join(" -> "))]
    Cycle { path: Vec<String>, span: Span },
}

impl AnalysisError {
    pub fn class(&self) -> &'static str {
        match self {
            AnalysisError::Name { .. } => "NameError",
            AnalysisError::Type { .. } => "TypeError",
            AnalysisError::Pacing { .. } => "PacingError",
            AnalysisError::Cycle { .. } => "CycleError",
        }
    }
}

/// How one stream reads another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Sync,
    Offset(u32),
    Hold,
    Window(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct Access {
    pub target: StreamId,
    pub kind: AccessKind,
    pub span: Span,
}

/// One sliding-window aggregation and the stream that evaluates it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WindowDescriptor {
    pub target: StreamId,
    pub evaluator: StreamId,
    /// `None` for the unbounded window.
    pub duration_ns: Option<Timestamp>,
    pub function: WindowFunction,
    /// Type of the target stream's values.
    pub input_type: SemType,
    /// Type of the aggregation result.
    pub result_type: SemType,
    /// Evaluation period of the evaluating stream; pane width for finite windows.
    pub period_ns: Timestamp,
    /// Number of panes in the ring; 0 for unbounded windows.
    pub pane_count: usize,
}

/// Declarations resolved to dense ids, with every access collected.
#[derive(Debug, Clone)]
pub struct Resolved<'a> {
    pub ast: &'a SpecificationAst,
    pub names: Vec<String>,
    pub kinds: Vec<StreamKind>,
    pub spans: Vec<Span>,
    pub by_name: HashMap<String, StreamId>,
    /// Per stream, the accesses made by its expression in pre-order.
    pub accesses: Vec<Vec<Access>>,
    /// Window nodes in pre-order per stream, stream order overall.
    pub windows: Vec<(StreamId, StreamId, Option<Timestamp>, WindowFunction)>,
}

impl<'a> Resolved<'a> {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn input_count(&self) -> usize {
        self.ast.inputs.len()
    }

    pub fn expr(&self, id: StreamId) -> Option<&'a Expr> {
        let i = id.0;
        let n_in = self.ast.inputs.len();
        let n_out = self.ast.outputs.len();
        if i < n_in {
            None
        } else if i < n_in + n_out {
            Some(&self.ast.outputs[i - n_in].expr)
        } else {
            Some(&self.ast.triggers[i - n_in - n_out].condition)
        }
    }

    pub fn declared_type(&self, id: StreamId) -> Option<SemType> {
        let i = id.0;
        let n_in = self.ast.inputs.len();
        let n_out = self.ast.outputs.len();
        if i < n_in {
            Some(self.ast.inputs[i].ty)
        } else if i < n_in + n_out {
            self.ast.outputs[i - n_in].ty
        } else {
            Some(SemType::Bool)
        }
    }

    pub fn frequency(&self, id: StreamId) -> Option<&'a crate::frontend::Frequency> {
        let i = id.0;
        let n_in = self.ast.inputs.len();
        let n_out = self.ast.outputs.len();
        if i < n_in {
            None
        } else if i < n_in + n_out {
            self.ast.outputs[i - n_in].frequency.as_ref()
        } else {
            self.ast.triggers[i - n_in - n_out].frequency.as_ref()
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = StreamId> {
        (0..self.names.len()).map(StreamId)
    }
}

/// Resolves every stream reference; returns all unknown names.
pub fn resolve(ast: &SpecificationAst) -> Result<Resolved<'_>, Vec<AnalysisError>> {
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    let mut spans = Vec::new();
    for i in &ast.inputs {
        names.push(i.name.name.clone());
        kinds.push(StreamKind::Input);
        spans.push(i.span);
    }
    for o in &ast.outputs {
        names.push(o.name.name.clone());
        kinds.push(StreamKind::Output);
        spans.push(o.span);
    }
    for (k, t) in ast.triggers.iter().enumerate() {
        names.push(format!("trigger#{k}"));
        kinds.push(StreamKind::Trigger);
        spans.push(t.span);
    }
    let by_name: HashMap<String, StreamId> = names
        .iter()
        .zip(&kinds)
        .enumerate()
        .filter(|(_, (_, k))| **k != StreamKind::Trigger)
        .map(|(i, (n, _))| (n.clone(), StreamId(i)))
        .collect();

    let mut resolved = Resolved {
        ast,
        names,
        kinds,
        spans,
        by_name,
        accesses: Vec::new(),
        windows: Vec::new(),
    };
    let mut errors = Vec::new();
    let ids: Vec<StreamId> = resolved.ids().collect();
    for id in ids {
        let mut accesses = Vec::new();
        if let Some(expr) = resolved.expr(id) {
            expr.walk(&mut |e: &Expr| {
                let (ident, kind) = match &e.kind {
                    ExprKind::Stream(s) => (s, AccessKind::Sync),
                    ExprKind::Offset { stream, by, .. } => (stream, AccessKind::Offset(*by)),
                    ExprKind::Hold { stream, .. } => (stream, AccessKind::Hold),
                    ExprKind::Window { stream, .. } => (stream, AccessKind::Window(usize::MAX)),
                    _ => return,
                };
                match resolved.by_name.get(&ident.name) {
                    Some(&target) => {
                        let kind = if let ExprKind::Window { duration, function, .. } = &e.kind {
                            resolved.windows.push((id, target, window_nanos(duration), *function));
                            AccessKind::Window(resolved.windows.len() - 1)
                        } else {
                            kind
                        };
                        accesses.push(Access { target, kind, span: ident.span });
                    }
                    None => errors.push(AnalysisError::Name { name: ident.name.clone(), span: ident.span }),
                }
            });
        }
        resolved.accesses.push(accesses);
    }
    if errors.is_empty() {
        Ok(resolved)
    } else {
        Err(errors)
    }
}

fn window_nanos(d: &WindowDuration) -> Option<Timestamp> {
    d.nanos()
}

/// Per-stream results of the analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamInfo {
    pub name: String,
    pub kind: StreamKind,
    pub ty: SemType,
    pub pacing: PacingType,
    pub layer: usize,
    /// Values retained: 1 plus the deepest offset used on this stream. Triggers keep none.
    pub slots: usize,
    /// Trigger message; empty for other streams.
    pub message: String,
    pub span: Span,
}

/// A specification that passed every check, ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedSpec {
    pub ast: SpecificationAst,
    pub streams: Vec<StreamInfo>,
    /// Expression per stream; `None` for inputs.
    pub exprs: Vec<Option<Ir>>,
    pub windows: Vec<WindowDescriptor>,
    /// Evaluation order: every stream appears in exactly one layer; layer 0 holds the inputs.
    pub layers: Vec<Vec<StreamId>>,
    pub report: ResourceReport,
}

impl AnalyzedSpec {
    pub fn stream(&self, name: &str) -> Option<StreamId> {
        self.streams.iter().position(|s| s.name == name && s.kind != StreamKind::Trigger).map(StreamId)
    }

    pub fn inputs(&self) -> impl Iterator<Item = (StreamId, &StreamInfo)> {
        self.streams.iter().enumerate().filter(|(_, s)| s.kind == StreamKind::Input).map(|(i, s)| (StreamId(i), s))
    }

    pub fn input_count(&self) -> usize {
        self.ast.inputs.len()
    }

    pub fn trigger_count(&self) -> usize {
        self.ast.triggers.len()
    }

    /// Stream id of the `k`-th trigger.
    pub fn trigger_stream(&self, k: usize) -> StreamId {
        StreamId(self.ast.inputs.len() + self.ast.outputs.len() + k)
    }

    pub fn types(&self) -> BTreeMap<String, SemType> {
        self.streams.iter().map(|s| (s.name.clone(), s.ty)).collect()
    }

    pub fn pacing(&self) -> BTreeMap<String, PacingType> {
        self.streams.iter().map(|s| (s.name.clone(), s.pacing.clone())).collect()
    }

    pub fn layer_of(&self, id: StreamId) -> usize {
        self.streams[id.0].layer
    }

    pub fn name(&self, id: StreamId) -> &str {
        &self.streams[id.0].name
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Runs every analysis on a parsed specification.
pub fn analyze(ast: &SpecificationAst) -> Result<AnalyzedSpec, Vec<AnalysisError>> {
    let resolved = resolve(ast)?;
    let mut errors = Vec::new();

    let types = infer_types(&resolved);
    let pacing = infer_pacing(&resolved);
    let layers = compute_layers(&resolved);

    let types = types.map_err(|e| errors.extend(e)).ok();
    let pacing = pacing.map_err(|e| errors.extend(e)).ok();
    let layers = layers.map_err(|e| errors.extend(e)).ok();
    let (Some(types), Some(pacing), Some(layers)) = (types, pacing, layers) else {
        errors.sort_by_key(|e| match e {
            AnalysisError::Name { span, .. }
            | AnalysisError::Type { span, .. }
            | AnalysisError::Pacing { span, .. }
            | AnalysisError::Cycle { span, .. } => (span.line, span.column),
        });
        return Err(errors);
    };

    let mut slots = vec![1usize; resolved.len()];
    for accesses in &resolved.accesses {
        for a in accesses {
            if let AccessKind::Offset(n) = a.kind {
                slots[a.target.0] = slots[a.target.0].max(n as usize + 1);
            }
        }
    }

    let mut layer_of = vec![0usize; resolved.len()];
    for (l, members) in layers.iter().enumerate() {
        for id in members {
            layer_of[id.0] = l;
        }
    }

    let streams: Vec<StreamInfo> = resolved
        .ids()
        .map(|id| {
            let kind = resolved.kinds[id.0];
            let message = match kind {
                StreamKind::Trigger => ast.triggers[id.0 - ast.inputs.len() - ast.outputs.len()].message.clone(),
                _ => String::new(),
            };
            StreamInfo {
                name: resolved.names[id.0].clone(),
                kind,
                ty: types.stream_types[id.0],
                pacing: pacing[id.0].clone(),
                layer: layer_of[id.0],
                slots: if kind == StreamKind::Trigger { 0 } else { slots[id.0] },
                message,
                span: resolved.spans[id.0],
            }
        })
        .collect();

    let windows: Vec<WindowDescriptor> = resolved
        .windows
        .iter()
        .map(|&(evaluator, target, duration_ns, function)| {
            let period_ns = match &pacing[evaluator.0] {
                PacingType::Periodic { period_ns, .. } => *period_ns,
                PacingType::EventBased(_) => unreachable!("pacing analysis rejects event-based windows"),
            };
            let pane_count = duration_ns.map_or(0, |d| d.div_ceil(period_ns) as usize);
            let input_type = types.stream_types[target.0];
            WindowDescriptor {
                target,
                evaluator,
                duration_ns,
                function,
                input_type,
                result_type: typing::window_result_type(function, input_type)
                    .expect("type analysis accepted the window"),
                period_ns,
                pane_count,
            }
        })
        .collect();

    let mut spec = AnalyzedSpec {
        ast: ast.clone(),
        streams,
        exprs: types.exprs,
        windows,
        layers,
        report: ResourceReport::default(),
    };
    spec.report = compute_memory_bounds(&spec);
    Ok(spec)
}

/// Parses and analyzes in one step, rendering errors as text.
pub fn analyze_source(source: &str) -> Result<AnalyzedSpec, String> {
    let ast = crate::frontend::parse_spec(source).map_err(|e| format!("parse error: {e}"))?;
    analyze(&ast).map_err(|errs| errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))
}
