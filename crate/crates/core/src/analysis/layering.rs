//! Evaluation layers over the zero-offset dependency graph.
//!
//! Synchronous, hold and window accesses read values of the current instant
//! and order the reader after the target. Offset accesses read strictly older
//! values and impose no order, which is what breaks recursive definitions.

use std::collections::BTreeSet;

use super::{AccessKind, AnalysisError, Resolved, StreamId, StreamKind};

fn zero_weight(kind: AccessKind) -> bool {
    !matches!(kind, AccessKind::Offset(_))
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    White,
    Gray,
    Black,
}

/// Returns the layers (layer 0 holds the inputs) or every zero-weight cycle found.
pub fn compute_layers(resolved: &Resolved<'_>) -> Result<Vec<Vec<StreamId>>, Vec<AnalysisError>> {
    let n = resolved.len();
    let mut marks = vec![Mark::White; n];
    let mut layer = vec![0usize; n];
    let mut stack: Vec<StreamId> = Vec::new();
    let mut seen_cycles: BTreeSet<BTreeSet<StreamId>> = BTreeSet::new();
    let mut errors = Vec::new();

    // Iterative DFS would avoid deep recursion, but specifications are small.
    fn visit(
        id: StreamId,
        resolved: &Resolved<'_>,
        marks: &mut [Mark],
        layer: &mut [usize],
        stack: &mut Vec<StreamId>,
        seen: &mut BTreeSet<BTreeSet<StreamId>>,
        errors: &mut Vec<AnalysisError>,
    ) {
        marks[id.0] = Mark::Gray;
        stack.push(id);
        let mut own = if resolved.kinds[id.0] == StreamKind::Input { 0 } else { 1 };
        for access in &resolved.accesses[id.0] {
            if !zero_weight(access.kind) {
                continue;
            }
            let t = access.target;
            match marks[t.0] {
                Mark::White => visit(t, resolved, marks, layer, stack, seen, errors),
                Mark::Gray => {
                    let start = stack.iter().position(|s| *s == t).expect("gray streams are on the stack");
                    let cycle = &stack[start..];
                    if seen.insert(cycle.iter().copied().collect()) {
                        let mut path: Vec<String> = cycle.iter().map(|s| resolved.names[s.0].clone()).collect();
                        path.push(resolved.names[t.0].clone());
                        errors.push(AnalysisError::Cycle { path, span: access.span });
                    }
                    continue;
                }
                Mark::Black => {}
            }
            own = own.max(layer[t.0] + 1);
        }
        layer[id.0] = own;
        stack.pop();
        marks[id.0] = Mark::Black;
    }

    for id in resolved.ids() {
        if marks[id.0] == Mark::White {
            visit(id, resolved, &mut marks, &mut layer, &mut stack, &mut seen_cycles, &mut errors);
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let depth = layer.iter().copied().max().map_or(0, |m| m + 1);
    let mut layers = vec![Vec::new(); depth];
    for id in resolved.ids() {
        layers[layer[id.0]].push(id);
    }
    Ok(layers)
}
