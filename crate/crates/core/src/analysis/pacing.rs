//! Pacing inference: when is each stream evaluated?
//!
//! Inputs are event-based on themselves. Annotated streams are periodic.
//! An unannotated stream inherits the pacing of its synchronous and offset
//! dependencies: event-based pacings combine by union of their input sets
//! (the stream is evaluated when all of them arrive together), periodic ones
//! must agree on the period. Anything else needs `hold`.

use std::collections::BTreeSet;
use std::fmt;

use crate::time::Timestamp;

use super::{AccessKind, AnalysisError, Resolved, StreamId, StreamKind};
use crate::frontend::{Expr, ExprKind};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum PacingType {
    /// Evaluated whenever every listed input receives a value in the same event.
    EventBased(BTreeSet<StreamId>),
    Periodic { period_ns: Timestamp, hz: f64 },
}

impl PacingType {
    pub fn period_ns(&self) -> Option<Timestamp> {
        match self {
            PacingType::Periodic { period_ns, .. } => Some(*period_ns),
            PacingType::EventBased(_) => None,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, PacingType::Periodic { .. })
    }

    /// Human-readable form using stream names.
    pub fn describe(&self, names: &[String]) -> String {
        match self {
            PacingType::EventBased(deps) => {
                let deps: Vec<&str> = deps.iter().map(|d| names[d.0].as_str()).collect();
                format!("event({})", deps.join(" & "))
            }
            PacingType::Periodic { hz, .. } => format!("periodic({hz}Hz)"),
        }
    }
}

impl fmt::Display for PacingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PacingType::EventBased(deps) => {
                let deps: Vec<String> = deps.iter().map(|d| d.to_string()).collect();
                write!(f, "event({})", deps.join(" & "))
            }
            PacingType::Periodic { hz, .. } => write!(f, "periodic({hz}Hz)"),
        }
    }
}

fn combine(deps: impl Iterator<Item = PacingType>) -> Option<PacingType> {
    let mut events: Option<BTreeSet<StreamId>> = None;
    let mut periodic = None;
    for p in deps {
        match p {
            PacingType::EventBased(set) => events.get_or_insert_with(BTreeSet::new).extend(set),
            p @ PacingType::Periodic { .. } => {
                periodic.get_or_insert(p);
            }
        }
    }
    // Mixed dependencies are reported by the access check.
    events.map(PacingType::EventBased).or(periodic)
}

/// Infers a pacing for every stream and checks every access against it.
pub fn infer_pacing(resolved: &Resolved<'_>) -> Result<Vec<PacingType>, Vec<AnalysisError>> {
    let n = resolved.len();
    let mut errors = Vec::new();
    let mut pacing: Vec<Option<PacingType>> = vec![None; n];
    let mut fixed = vec![false; n];

    for id in resolved.ids() {
        if resolved.kinds[id.0] == StreamKind::Input {
            pacing[id.0] = Some(PacingType::EventBased([id].into_iter().collect()));
            fixed[id.0] = true;
        } else if let Some(freq) = resolved.frequency(id) {
            fixed[id.0] = true;
            match freq.period_ns() {
                Some(period_ns) if period_ns > 0 => {
                    pacing[id.0] = Some(PacingType::Periodic { period_ns, hz: freq.hz() });
                }
                _ => errors.push(AnalysisError::Pacing {
                    message: format!(
                        "frequency {}Hz does not have a period of a whole number of nanoseconds",
                        freq.text
                    ),
                    span: resolved.spans[id.0],
                }),
            }
        }
    }

    // Fixpoint: event sets only grow, so this terminates.
    loop {
        let mut changed = false;
        for id in resolved.ids() {
            if fixed[id.0] {
                continue;
            }
            let deps = resolved.accesses[id.0]
                .iter()
                .filter(|a| matches!(a.kind, AccessKind::Sync | AccessKind::Offset(_)) && a.target != id)
                .filter_map(|a| pacing[a.target.0].clone());
            let new = combine(deps);
            if new.is_some() && new != pacing[id.0] {
                pacing[id.0] = new;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    for id in resolved.ids() {
        if pacing[id.0].is_none() && !fixed[id.0] {
            let what = match resolved.kinds[id.0] {
                StreamKind::Trigger => "trigger".to_string(),
                _ => format!("stream `{}`", resolved.names[id.0]),
            };
            errors.push(AnalysisError::Pacing {
                message: format!(
                    "cannot infer pacing of {what}: it has no synchronous dependency; add a frequency annotation"
                ),
                span: resolved.spans[id.0],
            });
        }
    }

    for id in resolved.ids() {
        let Some(own) = &pacing[id.0] else { continue };
        let src = describe_stream(resolved, id);
        if let Some(expr) = resolved.expr(id) {
            check_defaults(expr, &src, &mut errors);
        }
        for access in &resolved.accesses[id.0] {
            let Some(target) = &pacing[access.target.0] else { continue };
            let tgt = &resolved.names[access.target.0];
            let message = match access.kind {
                AccessKind::Hold => None,
                AccessKind::Window(_) => match own {
                    PacingType::EventBased(_) => Some(format!(
                        "{src} -> {tgt}: a window needs a periodic evaluating stream; add a frequency annotation"
                    )),
                    PacingType::Periodic { .. } => None,
                },
                AccessKind::Sync | AccessKind::Offset(_) => {
                    if access.target == id {
                        None
                    } else {
                        incompatible(own, target).then(|| {
                            format!(
                                "{src} -> {tgt}: {} stream cannot access {} stream synchronously; use `.hold().defaults(to: ...)`",
                                own.describe(&resolved.names),
                                target.describe(&resolved.names)
                            )
                        })
                    }
                }
            };
            if let Some(message) = message {
                errors.push(AnalysisError::Pacing { message, span: access.span });
            }
        }
    }

    if errors.is_empty() {
        Ok(pacing.into_iter().map(|p| p.expect("all pacings inferred")).collect())
    } else {
        Err(errors)
    }
}

fn describe_stream(resolved: &Resolved<'_>, id: StreamId) -> String {
    match resolved.kinds[id.0] {
        StreamKind::Trigger => format!("trigger at {}", resolved.spans[id.0]),
        _ => resolved.names[id.0].clone(),
    }
}

/// Whether a stream paced `own` may not read the current value of a stream paced `target`.
fn incompatible(own: &PacingType, target: &PacingType) -> bool {
    match (own, target) {
        (PacingType::EventBased(a), PacingType::EventBased(b)) => !b.is_subset(a),
        (PacingType::Periodic { period_ns: a, .. }, PacingType::Periodic { period_ns: b, .. }) => a != b,
        _ => true,
    }
}

/// Offsets and holds may find no value, so they must supply a default.
fn check_defaults(expr: &Expr, src: &str, errors: &mut Vec<AnalysisError>) {
    expr.walk(&mut |e: &Expr| {
        let (stream, what) = match &e.kind {
            ExprKind::Offset { stream, default: None, .. } => (stream, "offset"),
            ExprKind::Hold { stream, default: None } => (stream, "hold"),
            _ => return,
        };
        errors.push(AnalysisError::Pacing {
            message: format!(
                "{src} -> {}: value of {what} access may not exist; add `.defaults(to: ...)`",
                stream.name
            ),
            span: e.span,
        });
    });
}
