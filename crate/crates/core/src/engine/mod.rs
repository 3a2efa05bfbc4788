//! Online evaluation of an analyzed specification.
//!
//! The monitor processes two kinds of evaluation cycles: an input event, and
//! a group of periodic deadlines that fall due at the same instant. Deadlines
//! due at or before an event's timestamp run first. Within a cycle, streams are
//! evaluated layer by layer; streams in one layer never read each other.

mod eval;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{pane_state_bytes, AnalyzedSpec, Ir, PacingType, StreamId, StreamKind};
use crate::time::Timestamp;
use crate::types::{TypeKind, Value};
use crate::window::WindowState;

pub use eval::{evaluate, Context, Fault};

/// One timestamped bundle of input updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: Timestamp,
    pub updates: Vec<(StreamId, Value)>,
}

impl Event {
    pub fn new(t: Timestamp, updates: Vec<(StreamId, Value)>) -> Event {
        Event { t, updates }
    }

    /// Builds an event from input names; values are converted to the declared types.
    pub fn named(spec: &AnalyzedSpec, t: Timestamp, updates: &[(&str, Value)]) -> Result<Event, MonitorError> {
        let updates = updates
            .iter()
            .map(|(name, v)| {
                let id = spec
                    .stream(name)
                    .filter(|id| spec.streams[id.0].kind == StreamKind::Input)
                    .ok_or_else(|| MonitorError::UnknownInput(name.to_string()))?;
                Ok((id, v.convert(spec.streams[id.0].ty)))
            })
            .collect::<Result<Vec<_>, MonitorError>>()?;
        Ok(Event { t, updates })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Event,
    Periodic,
    /// A runtime fault such as a division by zero.
    Fault,
}

/// A trigger firing, or a runtime fault.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(rename = "t_ns")]
    pub t: Timestamp,
    /// Index of the trigger in declaration order; `None` for faults.
    pub trigger: Option<usize>,
    pub message: String,
    pub kind: VerdictKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("event at {t} ns precedes the current time {now} ns")]
    NonMonotone { t: Timestamp, now: Timestamp },
    #[error("event has no updates")]
    EmptyEvent,
    #[error("`{0}` is not an input stream")]
    UnknownInput(String),
    #[error("value {value} does not match type {ty} of input `{stream}`")]
    TypeMismatch { stream: String, ty: String, value: String },
    #[error("input `{0}` updated twice in one event")]
    DuplicateUpdate(String),
}

/// Peak storage observed during a run, measured with the declared widths used by the resource report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StorageStats {
    pub stream_bytes: u64,
    pub window_bytes: u64,
    pub total_bytes: u64,
}

/// Ring of the most recent values of one stream, each stamped with its cycle.
#[derive(Debug, Clone)]
struct Buffer {
    entries: Vec<(u64, Value)>,
    /// Index of the most recent entry.
    head: usize,
    len: usize,
}

impl Buffer {
    fn new(slots: usize) -> Buffer {
        Buffer { entries: vec![(0, Value::Bool(false)); slots], head: 0, len: 0 }
    }

    fn push(&mut self, cycle: u64, v: Value) {
        let cap = self.entries.len();
        if cap == 0 {
            return;
        }
        self.head = (self.head + 1) % cap;
        self.entries[self.head] = (cycle, v);
        self.len = (self.len + 1).min(cap);
    }

    /// `k`-th most recent entry, 0 being the latest.
    fn get(&self, k: usize) -> Option<(u64, Value)> {
        let cap = self.entries.len();
        (k < self.len).then(|| self.entries[(self.head + cap - k) % cap])
    }
}

struct Cycle<'m> {
    buffers: &'m [Buffer],
    windows: &'m mut [WindowState],
    cycle: u64,
    now: Timestamp,
    #[cfg(debug_assertions)]
    pending: &'m [bool],
}

impl Context for Cycle<'_> {
    fn load(&mut self, stream: usize) -> Option<Value> {
        #[cfg(debug_assertions)]
        assert!(!self.pending[stream], "layering violated: stream {stream} read before it was evaluated");
        match self.buffers[stream].get(0) {
            Some((c, v)) if c == self.cycle => Some(v),
            _ => None,
        }
    }

    fn offset(&mut self, stream: usize, by: u32) -> Option<Value> {
        let b = &self.buffers[stream];
        let skip = match b.get(0) {
            Some((c, _)) if c == self.cycle => 1,
            _ => 0,
        };
        b.get(skip + by as usize - 1).map(|(_, v)| v)
    }

    fn hold(&mut self, stream: usize) -> Option<Value> {
        self.buffers[stream].get(0).map(|(_, v)| v)
    }

    fn window(&mut self, window: usize) -> Option<Value> {
        self.windows[window].evaluate(self.now)
    }
}

/// A running monitor for one specification.
pub struct Monitor {
    spec: AnalyzedSpec,
    start: Timestamp,
    now: Timestamp,
    cycle: u64,
    buffers: Vec<Buffer>,
    windows: Vec<WindowState>,
    windows_by_target: Vec<Vec<usize>>,
    pane_bytes: Vec<u64>,
    /// Event-based outputs and triggers per layer, with their input sets.
    event_layers: Vec<Vec<(StreamId, Vec<StreamId>)>>,
    deadlines: BinaryHeap<Reverse<(Timestamp, usize)>>,
    rng: Option<ChaCha8Rng>,
    #[cfg(debug_assertions)]
    pending: Vec<bool>,
    peak: StorageStats,
    events: u64,
}

impl Monitor {
    /// Creates a monitor whose first periodic evaluations fall at `start + period`.
    pub fn new(spec: &AnalyzedSpec, start: Timestamp) -> Monitor {
        let spec = spec.clone();
        let n = spec.streams.len();
        let buffers = spec.streams.iter().map(|s| Buffer::new(s.slots)).collect();
        let windows: Vec<WindowState> = spec.windows.iter().map(|w| WindowState::new(w, start)).collect();
        let mut windows_by_target = vec![Vec::new(); n];
        for (i, w) in spec.windows.iter().enumerate() {
            windows_by_target[w.target.0].push(i);
        }
        let pane_bytes = spec.windows.iter().map(pane_state_bytes).collect();
        let mut event_layers = vec![Vec::new(); spec.layers.len()];
        let mut deadlines = BinaryHeap::new();
        for (i, s) in spec.streams.iter().enumerate() {
            match &s.pacing {
                PacingType::EventBased(deps) if s.kind != StreamKind::Input => {
                    event_layers[s.layer].push((StreamId(i), deps.iter().copied().collect()));
                }
                PacingType::Periodic { period_ns, .. } => deadlines.push(Reverse((start + period_ns, i))),
                _ => {}
            }
        }
        Monitor {
            spec,
            start,
            now: start,
            cycle: 0,
            buffers,
            windows,
            windows_by_target,
            pane_bytes,
            event_layers,
            deadlines,
            rng: None,
            #[cfg(debug_assertions)]
            pending: vec![false; n],
            peak: StorageStats::default(),
            events: 0,
        }
    }

    /// Shuffles the evaluation order inside every layer, per cycle. Verdicts must not change.
    pub fn with_layer_permutation(mut self, seed: u64) -> Monitor {
        self.rng = Some(ChaCha8Rng::seed_from_u64(seed));
        self
    }

    pub fn spec(&self) -> &AnalyzedSpec {
        &self.spec
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    /// Pending deadlines as `(due, stream)`, earliest first.
    pub fn deadlines(&self) -> Vec<(Timestamp, StreamId)> {
        let mut d: Vec<(Timestamp, StreamId)> = self.deadlines.iter().map(|Reverse((t, s))| (*t, StreamId(*s))).collect();
        d.sort();
        d
    }

    /// Most recent value of a stream, if it ever produced one.
    pub fn latest(&self, id: StreamId) -> Option<Value> {
        self.buffers.get(id.0)?.get(0).map(|(_, v)| v)
    }

    /// Peak storage observed so far.
    pub fn peak_storage(&self) -> StorageStats {
        self.peak
    }

    /// Storage currently occupied.
    pub fn current_storage(&self) -> StorageStats {
        let stream_bytes = self
            .buffers
            .iter()
            .zip(&self.spec.streams)
            .map(|(b, s)| b.len as u64 * s.ty.bytes())
            .sum();
        let window_bytes = self
            .windows
            .iter()
            .zip(&self.pane_bytes)
            .map(|(w, bytes)| if w.pane_capacity() == 0 { *bytes } else { w.live_panes() as u64 * bytes })
            .sum();
        StorageStats { stream_bytes, window_bytes, total_bytes: stream_bytes + window_bytes }
    }

    fn record_storage(&mut self) {
        let now = self.current_storage();
        debug_assert!(
            now.total_bytes <= self.spec.report.total_bytes,
            "storage {} exceeds the static bound {}",
            now.total_bytes,
            self.spec.report.total_bytes
        );
        self.peak.stream_bytes = self.peak.stream_bytes.max(now.stream_bytes);
        self.peak.window_bytes = self.peak.window_bytes.max(now.window_bytes);
        self.peak.total_bytes = self.peak.total_bytes.max(now.total_bytes);
    }

    /// Processes all deadlines due at or before `t` without delivering input.
    pub fn advance_to(&mut self, t: Timestamp) -> Vec<Verdict> {
        let mut verdicts = Vec::new();
        while let Some(&Reverse((due, _))) = self.deadlines.peek() {
            if due > t {
                break;
            }
            let mut group = Vec::new();
            while let Some(&Reverse((d, s))) = self.deadlines.peek() {
                if d != due {
                    break;
                }
                self.deadlines.pop();
                group.push(StreamId(s));
            }
            self.now = due;
            self.cycle += 1;
            group.sort_by_key(|s| (self.spec.streams[s.0].layer, s.0));
            let mut layers: Vec<Vec<StreamId>> = Vec::new();
            for s in &group {
                let l = self.spec.streams[s.0].layer;
                match layers.last_mut() {
                    Some(last) if self.spec.streams[last[0].0].layer == l => last.push(*s),
                    _ => layers.push(vec![*s]),
                }
            }
            self.run_layers(layers, VerdictKind::Periodic, &mut verdicts);
            for s in group {
                let period = self.spec.streams[s.0].pacing.period_ns().expect("periodic");
                self.deadlines.push(Reverse((due + period, s.0)));
            }
            self.record_storage();
        }
        self.now = self.now.max(t);
        verdicts
    }

    /// Processes deadlines up to `e.t`, then the event itself.
    pub fn accept_event(&mut self, e: &Event) -> Result<Vec<Verdict>, MonitorError> {
        if e.t < self.now {
            return Err(MonitorError::NonMonotone { t: e.t, now: self.now });
        }
        if e.updates.is_empty() {
            return Err(MonitorError::EmptyEvent);
        }
        let mut updated = vec![false; self.spec.streams.len()];
        for (id, v) in &e.updates {
            let info = self
                .spec
                .streams
                .get(id.0)
                .filter(|s| s.kind == StreamKind::Input)
                .ok_or_else(|| MonitorError::UnknownInput(id.to_string()))?;
            let kind_ok = match info.ty.kind() {
                TypeKind::Bool => matches!(v, Value::Bool(_)),
                TypeKind::Unsigned => matches!(v, Value::Unsigned(_)),
                TypeKind::Signed => matches!(v, Value::Signed(_)),
                TypeKind::Float => matches!(v, Value::Float(_)),
            };
            if !kind_ok || info.ty.normalize(*v) != *v {
                return Err(MonitorError::TypeMismatch {
                    stream: info.name.clone(),
                    ty: info.ty.to_string(),
                    value: v.to_string(),
                });
            }
            if std::mem::replace(&mut updated[id.0], true) {
                return Err(MonitorError::DuplicateUpdate(info.name.clone()));
            }
        }

        let mut verdicts = self.advance_to(e.t);
        self.now = e.t;
        self.cycle += 1;
        self.events += 1;
        for (id, v) in &e.updates {
            self.produce(*id, *v);
        }
        let layers: Vec<Vec<StreamId>> = self
            .event_layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .filter(|(_, deps)| deps.iter().all(|d| updated[d.0]))
                    .map(|(s, _)| *s)
                    .collect::<Vec<_>>()
            })
            .filter(|l| !l.is_empty())
            .collect();
        self.run_layers(layers, VerdictKind::Event, &mut verdicts);
        self.record_storage();
        Ok(verdicts)
    }

    fn produce(&mut self, id: StreamId, v: Value) {
        self.buffers[id.0].push(self.cycle, v);
        for &w in &self.windows_by_target[id.0] {
            self.windows[w].insert(self.now, v).expect("the monitor enforces monotone time");
        }
    }

    fn run_layers(&mut self, mut layers: Vec<Vec<StreamId>>, kind: VerdictKind, out: &mut Vec<Verdict>) {
        let mut fired: Vec<(StreamId, Verdict)> = Vec::new();
        #[cfg(debug_assertions)]
        for layer in &layers {
            for s in layer {
                self.pending[s.0] = true;
            }
        }
        for layer in layers.iter_mut() {
            if let Some(rng) = self.rng.as_mut() {
                layer.shuffle(rng);
            }
            for &s in layer.iter() {
                let info = &self.spec.streams[s.0];
                let ir: &Ir = self.spec.exprs[s.0].as_ref().expect("outputs have expressions");
                let mut ctx = Cycle {
                    buffers: &self.buffers,
                    windows: &mut self.windows,
                    cycle: self.cycle,
                    now: self.now,
                    #[cfg(debug_assertions)]
                    pending: &self.pending,
                };
                let result = evaluate(ir, &mut ctx);
                #[cfg(debug_assertions)]
                {
                    self.pending[s.0] = false;
                }
                match result {
                    Ok(Some(v)) if info.kind == StreamKind::Trigger => {
                        if v == Value::Bool(true) {
                            let k = s.0 + self.spec.trigger_count() - self.spec.streams.len();
                            fired.push((s, Verdict { t: self.now, trigger: Some(k), message: info.message.clone(), kind }));
                        }
                    }
                    Ok(Some(v)) => {
                        let v = v.convert(info.ty);
                        self.produce(s, v);
                    }
                    Ok(None) => {}
                    Err(fault) => {
                        let what = match info.kind {
                            StreamKind::Trigger => format!("trigger at {}", info.span),
                            _ => format!("`{}`", info.name),
                        };
                        fired.push((
                            s,
                            Verdict {
                                t: self.now,
                                trigger: None,
                                message: format!("FAULT: {fault} in {what}"),
                                kind: VerdictKind::Fault,
                            },
                        ));
                    }
                }
            }
        }
        fired.sort_by_key(|(s, _)| *s);
        out.extend(fired.into_iter().map(|(_, v)| v));
    }
}
