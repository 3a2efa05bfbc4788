//! Static memory bounds for stream values and window state.
//!
//! Sizes use the declared value widths (Bool counts one byte). Timestamps and
//! counters are eight bytes. Only value storage is counted, not code.

use std::fmt::Write as _;

use serde::Serialize;

use crate::frontend::WindowFunction;
use crate::time::Timestamp;
use crate::types::{SemType, TypeKind};

use super::{AnalyzedSpec, StreamKind, WindowDescriptor};

const COUNTER_BYTES: u64 = 8;
const TIMESTAMP_BYTES: u64 = 8;
const FLAG_BYTES: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamResource {
    pub name: String,
    pub kind: StreamKind,
    pub ty: String,
    pub slots: usize,
    pub value_bytes: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowResource {
    pub index: usize,
    pub target: String,
    pub evaluator: String,
    pub function: WindowFunction,
    /// `None` for the unbounded window.
    pub duration_ns: Option<Timestamp>,
    /// 0 for the unbounded window, which keeps a single running state.
    pub panes: usize,
    pub pane_bytes: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ResourceReport {
    pub streams: Vec<StreamResource>,
    pub windows: Vec<WindowResource>,
    pub stream_bytes: u64,
    pub window_bytes: u64,
    pub total_bytes: u64,
}

/// Bytes of one pane (or of the single running state of an unbounded window).
pub fn pane_state_bytes(w: &WindowDescriptor) -> u64 {
    let value = w.input_type.bytes();
    let result = w.result_type.bytes();
    match w.function {
        WindowFunction::Count => COUNTER_BYTES,
        WindowFunction::Sum => result,
        WindowFunction::Avg => {
            let sum = if w.input_type.kind() == TypeKind::Float { value } else { SemType::Float64.bytes() };
            sum + COUNTER_BYTES
        }
        WindowFunction::Min | WindowFunction::Max => value,
        WindowFunction::Integral => {
            let sample = value + TIMESTAMP_BYTES;
            match w.duration_ns {
                // Area plus first and last sample, so adjacent panes can be joined.
                Some(_) => result + 2 * sample + FLAG_BYTES,
                None => result + sample + FLAG_BYTES,
            }
        }
    }
}

pub fn compute_memory_bounds(spec: &AnalyzedSpec) -> ResourceReport {
    let streams: Vec<StreamResource> = spec
        .streams
        .iter()
        .map(|s| {
            let value_bytes = s.ty.bytes();
            StreamResource {
                name: s.name.clone(),
                kind: s.kind,
                ty: s.ty.to_string(),
                slots: s.slots,
                value_bytes,
                bytes: s.slots as u64 * value_bytes,
            }
        })
        .collect();
    let windows: Vec<WindowResource> = spec
        .windows
        .iter()
        .enumerate()
        .map(|(index, w)| {
            let pane_bytes = pane_state_bytes(w);
            WindowResource {
                index,
                target: spec.streams[w.target.0].name.clone(),
                evaluator: spec.streams[w.evaluator.0].name.clone(),
                function: w.function,
                duration_ns: w.duration_ns,
                panes: w.pane_count,
                pane_bytes,
                bytes: pane_bytes * w.pane_count.max(1) as u64,
            }
        })
        .collect();
    let stream_bytes = streams.iter().map(|s| s.bytes).sum();
    let window_bytes = windows.iter().map(|w| w.bytes).sum();
    ResourceReport { streams, windows, stream_bytes, window_bytes, total_bytes: stream_bytes + window_bytes }
}

impl ResourceReport {
    /// Aligned plain-text table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let width = self.streams.iter().map(|s| s.name.chars().count()).max().unwrap_or(6).max(6);
        let _ = writeln!(out, "{:<width$}  {:<7}  {:<7}  {:>5}  {:>5}", "stream", "kind", "type", "slots", "bytes");
        for s in &self.streams {
            let kind = match s.kind {
                StreamKind::Input => "input",
                StreamKind::Output => "output",
                StreamKind::Trigger => "trigger",
            };
            let _ = writeln!(out, "{:<width$}  {:<7}  {:<7}  {:>5}  {:>5}", s.name, kind, s.ty, s.slots, s.bytes);
        }
        if !self.windows.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:<3}  {:<16}  {:<16}  {:<8}  {:>9}  {:>5}  {:>10}  {:>5}",
                "win", "target", "evaluator", "function", "duration", "panes", "pane_bytes", "bytes"
            );
            for w in &self.windows {
                let duration = w.duration_ns.map_or("inf".to_string(), crate::time::format_secs);
                let _ = writeln!(
                    out,
                    "{:<3}  {:<16}  {:<16}  {:<8}  {:>9}  {:>5}  {:>10}  {:>5}",
                    w.index, w.target, w.evaluator, w.function.name(), duration, w.panes, w.pane_bytes, w.bytes
                );
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "stream bytes: {}", self.stream_bytes);
        let _ = writeln!(out, "window bytes: {}", self.window_bytes);
        let _ = writeln!(out, "total bytes:  {}", self.total_bytes);
        out
    }

    /// One JSON object per line: `stream` records, then `window` records, then one `total`.
    pub fn render_json_lines(&self) -> String {
        #[derive(Serialize)]
        #[serde(tag = "record", rename_all = "lowercase")]
        enum Record<'a> {
            Stream(&'a StreamResource),
            Window(&'a WindowResource),
            Total { stream_bytes: u64, window_bytes: u64, total_bytes: u64 },
        }
        let records = self
            .streams
            .iter()
            .map(Record::Stream)
            .chain(self.windows.iter().map(Record::Window))
            .chain(std::iter::once(Record::Total {
                stream_bytes: self.stream_bytes,
                window_bytes: self.window_bytes,
                total_bytes: self.total_bytes,
            }));
        let mut out = String::new();
        for r in records {
            out.push_str(&serde_json::to_string(&r).expect("report records serialize"));
            out.push('\n');
        }
        out
    }
}
