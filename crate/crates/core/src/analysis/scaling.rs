//! Memory bound of generated geo-fence specifications as a function of the face count.

use serde::Serialize;

use crate::fence::{self, FaceParams, Polygon};
use crate::frontend::parse_spec;

use super::analyze;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScalingRow {
    pub faces: usize,
    pub streams: usize,
    pub triggers: usize,
    pub total_bytes: u64,
}

/// Specification checking `n` faces of a synthetic fence. For `n >= 3` this is
/// the closed `n`-gon; smaller counts use an open prefix of a triangle.
pub fn scaling_spec(n: usize, eps: f64) -> String {
    if n >= 3 {
        let poly = crate::synth::fence_polygon(n, 0);
        return fence::generate_fence_spec(&poly, eps).expect("synthetic polygons are valid");
    }
    let poly: Polygon = crate::synth::fence_polygon(3, 0);
    let faces: Vec<(usize, usize, FaceParams)> = poly
        .faces(eps)
        .expect("synthetic polygons are valid")
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(k, f)| (k + 1, k + 2, f))
        .collect();
    fence::generate_faces_spec(&faces, eps)
}

/// Generates, analyzes and measures a fence specification for each face count.
pub fn face_scaling_report(sizes: &[usize]) -> Result<Vec<ScalingRow>, String> {
    sizes
        .iter()
        .map(|&n| {
            let text = scaling_spec(n, fence::DEFAULT_EPSILON);
            let ast = parse_spec(&text).map_err(|e| format!("{n} faces: {e}"))?;
            let spec = analyze(&ast).map_err(|errs| {
                let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
                format!("{n} faces: {}", msgs.join("; "))
            })?;
            Ok(ScalingRow {
                faces: n,
                streams: spec.streams.len(),
                triggers: spec.trigger_count(),
                total_bytes: spec.report.total_bytes,
            })
        })
        .collect()
}

pub fn render_scaling_table(rows: &[ScalingRow]) -> String {
    let mut out = String::from("faces  streams  triggers  total_bytes\n");
    for r in rows {
        out.push_str(&format!("{:>5}  {:>7}  {:>8}  {:>11}\n", r.faces, r.streams, r.triggers, r.total_bytes));
    }
    out
}
