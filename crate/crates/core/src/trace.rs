//! Trace ingestion, replay and verdict sinks.
//!
//! Traces are CSV files with a header row. One column holds timestamps; the
//! others bind to input streams, by name unless an explicit binding is given.
//! Empty cells mean "no update" and rows without any update are skipped.
//! Verdicts are written as JSON lines with the fields `t_ns`, `trigger`,
//! `message` and `kind`, in that order.

use std::collections::HashMap;
use std::io::{self, BufRead, Read, Write};
use std::str::FromStr;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::analysis::{AnalyzedSpec, StreamId};
use crate::engine::{Event, Monitor, MonitorError, StorageStats, Verdict, VerdictKind};
use crate::time::{decimal_to_nanos, Timestamp};
use crate::types::SemType;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("line {line}, column `{column}`: {message}")]
    Format { line: u64, column: String, message: String },
    #[error("malformed trace: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("monitor rejected event: {0}")]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeUnit {
    #[default]
    Seconds,
    Millis,
    Micros,
    Nanos,
}

impl TimeUnit {
    pub fn nanos(self) -> u64 {
        match self {
            TimeUnit::Seconds => 1_000_000_000,
            TimeUnit::Millis => 1_000_000,
            TimeUnit::Micros => 1_000,
            TimeUnit::Nanos => 1,
        }
    }
}

impl FromStr for TimeUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" => Ok(TimeUnit::Seconds),
            "ms" => Ok(TimeUnit::Millis),
            "us" => Ok(TimeUnit::Micros),
            "ns" => Ok(TimeUnit::Nanos),
            other => Err(format!("unknown time unit `{other}` (expected s, ms, us or ns)")),
        }
    }
}

/// How trace columns map onto the specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSchema {
    pub time_column: String,
    pub unit: TimeUnit,
    /// Explicit `(column, input stream)` bindings; other columns bind by name.
    pub bindings: Vec<(String, String)>,
}

impl Default for TraceSchema {
    fn default() -> Self {
        TraceSchema { time_column: "time".into(), unit: TimeUnit::Seconds, bindings: Vec::new() }
    }
}

/// Parses `column=stream`.
pub fn parse_binding(text: &str) -> Result<(String, String), String> {
    match text.split_once('=') {
        Some((c, s)) if !c.trim().is_empty() && !s.trim().is_empty() => Ok((c.trim().into(), s.trim().into())),
        _ => Err(format!("invalid binding `{text}` (expected column=stream)")),
    }
}

struct Column {
    index: usize,
    name: String,
    stream: StreamId,
    ty: SemType,
}

/// Streaming reader producing one [`Event`] per non-empty row.
pub struct TraceReader<R: Read> {
    csv: csv::Reader<R>,
    record: csv::StringRecord,
    time_index: usize,
    time_name: String,
    unit: TimeUnit,
    columns: Vec<Column>,
    last_t: Option<Timestamp>,
    rows: u64,
}

impl<R: Read> TraceReader<R> {
    pub fn new(reader: R, spec: &AnalyzedSpec, schema: &TraceSchema) -> Result<TraceReader<R>, TraceError> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = csv.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let time_index = find(&schema.time_column)
            .ok_or_else(|| TraceError::Config(format!("time column `{}` not found", schema.time_column)))?;

        let explicit: HashMap<&str, &str> =
            schema.bindings.iter().map(|(c, s)| (c.as_str(), s.as_str())).collect();
        for (c, _) in &schema.bindings {
            if find(c).is_none() {
                return Err(TraceError::Config(format!("bound column `{c}` not found in the trace header")));
            }
        }
        let mut columns = Vec::new();
        for (index, header) in headers.iter().enumerate() {
            if index == time_index {
                continue;
            }
            let target = explicit.get(header).copied().unwrap_or(header);
            let input = spec.inputs().find(|(_, s)| s.name == target);
            match input {
                Some((stream, info)) => {
                    columns.push(Column { index, name: header.to_string(), stream, ty: info.ty })
                }
                None if explicit.contains_key(header) => {
                    return Err(TraceError::Config(format!("column `{header}` is bound to unknown input `{target}`")))
                }
                None => {}
            }
        }
        for (id, info) in spec.inputs() {
            let hits = columns.iter().filter(|c| c.stream == id).count();
            if hits == 0 {
                return Err(TraceError::Config(format!("input `{}` is not bound to any trace column", info.name)));
            }
            if hits > 1 {
                return Err(TraceError::Config(format!("input `{}` is bound to several columns", info.name)));
            }
        }
        Ok(TraceReader {
            csv,
            record: csv::StringRecord::new(),
            time_index,
            time_name: schema.time_column.clone(),
            unit: schema.unit,
            columns,
            last_t: None,
            rows: 0,
        })
    }

    /// Data rows read so far, including skipped ones.
    pub fn rows_read(&self) -> u64 {
        self.rows
    }

    /// Next event, or `None` at the end of the trace.
    pub fn next_event(&mut self) -> Result<Option<Event>, TraceError> {
        loop {
            if !self.csv.read_record(&mut self.record)? {
                return Ok(None);
            }
            self.rows += 1;
            let line = self.record.position().map_or(0, |p| p.line());
            let cell = self.record.get(self.time_index).unwrap_or("");
            let t = decimal_to_nanos(cell, self.unit.nanos()).ok_or_else(|| TraceError::Format {
                line,
                column: self.time_name.clone(),
                message: format!("invalid timestamp `{cell}`"),
            })?;
            if let Some(last) = self.last_t {
                if t < last {
                    return Err(TraceError::Format {
                        line,
                        column: self.time_name.clone(),
                        message: format!("timestamp {cell} goes back in time"),
                    });
                }
            }
            self.last_t = Some(t);
            let mut updates = Vec::new();
            for c in &self.columns {
                let text = self.record.get(c.index).unwrap_or("");
                if text.is_empty() {
                    continue;
                }
                let v = c.ty.parse_value(text).ok_or_else(|| TraceError::Format {
                    line,
                    column: c.name.clone(),
                    message: format!("`{text}` is not a valid {}", c.ty),
                })?;
                updates.push((c.stream, v));
            }
            if !updates.is_empty() {
                return Ok(Some(Event::new(t, updates)));
            }
        }
    }
}

/// Receives verdicts in emission order.
pub trait VerdictSink {
    fn emit(&mut self, verdict: &Verdict) -> io::Result<()>;
}

impl VerdictSink for Vec<Verdict> {
    fn emit(&mut self, verdict: &Verdict) -> io::Result<()> {
        self.push(verdict.clone());
        Ok(())
    }
}

/// Writes one JSON object per verdict.
pub struct JsonLinesSink<W: Write> {
    out: W,
}

impl<W: Write> JsonLinesSink<W> {
    pub fn new(out: W) -> Self {
        JsonLinesSink { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> VerdictSink for JsonLinesSink<W> {
    fn emit(&mut self, verdict: &Verdict) -> io::Result<()> {
        writeln!(self.out, "{}", verdict_line(verdict))
    }
}

/// Discards verdicts; the summary still counts them.
pub struct NullSink;

impl VerdictSink for NullSink {
    fn emit(&mut self, _: &Verdict) -> io::Result<()> {
        Ok(())
    }
}

pub fn verdict_line(v: &Verdict) -> String {
    serde_json::to_string(v).expect("verdicts serialize")
}

/// Parses verdicts written by [`JsonLinesSink`]; blank lines are ignored.
pub fn read_verdicts(input: impl BufRead) -> Result<Vec<Verdict>, TraceError> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| TraceError::Format {
            line: k as u64 + 1,
            column: "verdict".into(),
            message: e.to_string(),
        })?;
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplayMode {
    /// Events back to back.
    #[default]
    Fast,
    /// Events delivered at their recorded spacing.
    Realtime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayOptions {
    pub mode: ReplayMode,
    /// Read the trace on a separate thread connected by a bounded channel.
    pub pipeline: bool,
    /// Shuffle evaluation order within layers with this seed.
    pub permutation_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub events: u64,
    pub verdicts: u64,
    /// Verdict count per trigger, in declaration order.
    pub per_trigger: Vec<u64>,
    pub faults: u64,
    pub peak_storage: StorageStats,
    pub wall_clock: Duration,
    /// Worst lateness of an event delivery in realtime mode.
    pub max_jitter: Option<Duration>,
    /// Time of the last processed event.
    pub end: Option<Timestamp>,
}

impl ReplaySummary {
    /// Human-readable summary table.
    pub fn render(&self, spec: &AnalyzedSpec) -> String {
        let mut out = String::new();
        out.push_str(&format!("events:   {}\nverdicts: {}\n", self.events, self.verdicts));
        for (k, n) in self.per_trigger.iter().enumerate() {
            let msg = &spec.streams[spec.trigger_stream(k).0].message;
            out.push_str(&format!("  trigger {k:>3}: {n:>8}  {msg}\n"));
        }
        if self.faults > 0 {
            out.push_str(&format!("  faults:      {:>8}\n", self.faults));
        }
        out.push_str(&format!(
            "peak storage: {} bytes (static bound {})\nwall clock: {:.3} s\n",
            self.peak_storage.total_bytes,
            spec.report.total_bytes,
            self.wall_clock.as_secs_f64()
        ));
        if let Some(j) = self.max_jitter {
            out.push_str(&format!("max jitter: {:.3} ms\n", j.as_secs_f64() * 1e3));
        }
        out
    }
}

struct Driver<'s> {
    monitor: Monitor,
    sink: &'s mut dyn VerdictSink,
    per_trigger: Vec<u64>,
    faults: u64,
    verdicts: u64,
    mode: ReplayMode,
    wall_start: Option<(Instant, Timestamp)>,
    spin: Duration,
    max_jitter: Option<Duration>,
    end: Option<Timestamp>,
}

impl Driver<'_> {
    fn emit(&mut self, verdicts: Vec<Verdict>) -> Result<(), TraceError> {
        for v in verdicts {
            self.verdicts += 1;
            match (v.kind, v.trigger) {
                (VerdictKind::Fault, _) | (_, None) => self.faults += 1,
                (_, Some(k)) => self.per_trigger[k] += 1,
            }
            self.sink.emit(&v)?;
        }
        Ok(())
    }

    fn deliver(&mut self, e: Event) -> Result<(), TraceError> {
        if self.mode == ReplayMode::Realtime {
            let (wall0, t0) = *self.wall_start.get_or_insert((Instant::now(), e.t));
            let target = wall0 + Duration::from_nanos(e.t - t0);
            wait_until(target, &mut self.spin);
            let late = Instant::now().saturating_duration_since(target);
            self.max_jitter = Some(self.max_jitter.map_or(late, |j| j.max(late)));
        }
        let verdicts = self.monitor.accept_event(&e)?;
        self.end = Some(e.t);
        self.emit(verdicts)
    }

    fn finish(mut self, started: Instant) -> Result<ReplaySummary, TraceError> {
        if let Some(end) = self.end {
            let verdicts = self.monitor.advance_to(end);
            self.emit(verdicts)?;
        }
        Ok(ReplaySummary {
            events: self.monitor.events_processed(),
            verdicts: self.verdicts,
            per_trigger: self.per_trigger,
            faults: self.faults,
            peak_storage: self.monitor.peak_storage(),
            wall_clock: started.elapsed(),
            max_jitter: self.max_jitter,
            end: self.end,
        })
    }
}

/// Busy-wait window before each delivery. Sleep overshoot of a few
/// milliseconds is common, and at high sample rates sleeping saves little.
const MIN_SPIN: Duration = Duration::from_millis(20);
const MAX_SPIN: Duration = Duration::from_millis(50);

/// Sleeps most of the way, then spins to the target instant. The spin margin
/// grows to cover the sleep overshoot observed on this host.
fn wait_until(target: Instant, spin: &mut Duration) {
    loop {
        let now = Instant::now();
        if now >= target {
            return;
        }
        let left = target - now;
        if left > *spin {
            let wake = now + (left - *spin);
            std::thread::sleep(left - *spin);
            let overshoot = Instant::now().saturating_duration_since(wake);
            if overshoot >= *spin / 2 {
                *spin = (overshoot * 2).min(MAX_SPIN);
            }
        } else {
            std::hint::spin_loop();
        }
    }
}

/// Replays a trace into a fresh monitor started at time 0 and flushes the
/// deadlines up to the last event.
pub fn replay<R: Read + Send>(
    spec: &AnalyzedSpec,
    mut reader: TraceReader<R>,
    options: ReplayOptions,
    sink: &mut dyn VerdictSink,
) -> Result<ReplaySummary, TraceError> {
    let started = Instant::now();
    let mut monitor = Monitor::new(spec, 0);
    if let Some(seed) = options.permutation_seed {
        monitor = monitor.with_layer_permutation(seed);
    }
    let mut driver = Driver {
        monitor,
        sink,
        per_trigger: vec![0; spec.trigger_count()],
        faults: 0,
        verdicts: 0,
        mode: options.mode,
        wall_start: None,
        spin: MIN_SPIN,
        max_jitter: None,
        end: None,
    };
    if options.pipeline {
        std::thread::scope(|scope| -> Result<(), TraceError> {
            let (tx, rx) = mpsc::sync_channel::<Result<Event, TraceError>>(1024);
            scope.spawn(move || loop {
                match reader.next_event() {
                    Ok(Some(e)) => {
                        if tx.send(Ok(e)).is_err() {
                            return;
                        }
                    }
                    Ok(None) => return,
                    Err(err) => {
                        let _ = tx.send(Err(err));
                        return;
                    }
                }
            });
            for item in rx {
                driver.deliver(item?)?;
            }
            Ok(())
        })?;
    } else {
        while let Some(e) = reader.next_event()? {
            driver.deliver(e)?;
        }
    }
    driver.finish(started)
}

/// Convenience: replays CSV text with the default schema in fast mode.
pub fn replay_csv(spec: &AnalyzedSpec, csv: &str, sink: &mut dyn VerdictSink) -> Result<ReplaySummary, TraceError> {
    let reader = TraceReader::new(csv.as_bytes(), spec, &TraceSchema::default())?;
    replay(spec, reader, ReplayOptions::default(), sink)
}
