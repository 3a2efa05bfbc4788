//! Seeded synthetic traces and fences.
//!
//! Every generator is deterministic for a given seed, so traces built here can
//! back golden tests.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::AnalyzedSpec;
use crate::engine::Event;
use crate::fence::{Point, Polygon};
use crate::time::{format_secs, Timestamp, NANOS_PER_SEC};
use crate::types::{SemType, TypeKind, Value};

/// Center of the synthetic fences, in degrees.
pub const FENCE_CENTER: Point = (52.3105, 10.5608);
/// Nominal radius of the synthetic fences, in degrees.
pub const FENCE_RADIUS: f64 = 0.004;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: Timestamp,
    /// One cell per column; `None` means no update.
    pub values: Vec<Option<f64>>,
}

/// A table of timestamped sensor readings.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrace {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl SyntheticTrace {
    /// Writes CSV with a `time` column in seconds followed by one column per stream.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            line.push_str(&format_secs(row.t));
            for v in &row.values {
                line.push(',');
                if let Some(v) = v {
                    line.push_str(&v.to_string());
                }
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory cannot fail");
        String::from_utf8(out).expect("CSV output is UTF-8")
    }

    /// Converts rows to events, binding columns to inputs by name. Columns
    /// without a matching input are ignored; rows without updates are skipped.
    pub fn events(&self, spec: &AnalyzedSpec) -> Vec<Event> {
        let bound: Vec<Option<(crate::analysis::StreamId, SemType)>> = self
            .columns
            .iter()
            .map(|c| spec.inputs().find(|(_, s)| &s.name == c).map(|(id, s)| (id, s.ty)))
            .collect();
        self.rows
            .iter()
            .filter_map(|row| {
                let updates: Vec<_> = row
                    .values
                    .iter()
                    .zip(&bound)
                    .filter_map(|(v, b)| match (v, b) {
                        (Some(v), Some((id, ty))) => Some((*id, typed(*v, *ty))),
                        _ => None,
                    })
                    .collect();
                (!updates.is_empty()).then(|| Event::new(row.t, updates))
            })
            .collect()
    }
}

fn typed(v: f64, ty: SemType) -> Value {
    match ty.kind() {
        TypeKind::Float => Value::Float(v),
        TypeKind::Bool => Value::Bool(v != 0.0),
        _ => Value::Float(v).convert(ty),
    }
}

fn period(hz: u64) -> Timestamp {
    NANOS_PER_SEC / hz
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A linear ramp `start + slope * t` sampled at `hz` for `secs` seconds.
pub fn ramp(column: &str, hz: u64, secs: u64, start: f64, slope: f64) -> SyntheticTrace {
    let p = period(hz);
    let rows = (0..hz * secs)
        .map(|i| {
            let t = i * p;
            Row { t, values: vec![Some(start + slope * t as f64 / NANOS_PER_SEC as f64)] }
        })
        .collect();
    SyntheticTrace { columns: vec![column.to_string()], rows }
}

/// Random readings for the given inputs: floats follow a random walk, integers
/// and booleans are drawn uniformly. Each cell is present with probability
/// `presence`; timestamps are jittered within each sampling period.
pub fn random_trace(inputs: &[(&str, SemType)], hz: u64, secs: u64, presence: f64, seed: u64) -> SyntheticTrace {
    let mut r = rng(seed);
    let p = period(hz);
    let mut walk = vec![0.0f64; inputs.len()];
    let mut rows = Vec::new();
    let mut last_t = None;
    for i in 0..hz * secs {
        let t = i * p + r.gen_range(0..p / 2);
        let values: Vec<Option<f64>> = inputs
            .iter()
            .enumerate()
            .map(|(k, (_, ty))| {
                if !r.gen_bool(presence) {
                    return None;
                }
                Some(match ty.kind() {
                    TypeKind::Float => {
                        walk[k] += r.gen_range(-1.0..1.0);
                        walk[k]
                    }
                    TypeKind::Unsigned => r.gen_range(0..20) as f64,
                    TypeKind::Signed => r.gen_range(-10..10) as f64,
                    TypeKind::Bool => f64::from(u8::from(r.gen_bool(0.5))),
                })
            })
            .collect();
        if last_t != Some(t) {
            rows.push(Row { t, values });
            last_t = Some(t);
        }
    }
    SyntheticTrace { columns: inputs.iter().map(|(n, _)| n.to_string()).collect(), rows }
}

/// GPS speed readings (`speed_h`, `speed_v`) with a smooth profile and
/// injected horizontal spikes at the given sample indices.
pub fn spike_trace(hz: u64, secs: u64, spikes: &[u64], seed: u64) -> SyntheticTrace {
    let mut r = rng(seed);
    let p = period(hz);
    let rows = (0..hz * secs)
        .map(|i| {
            let ts = i as f64 / hz as f64;
            let mut h = 0.8 + 0.2 * (ts / 20.0).sin() + r.gen_range(-0.02..0.02);
            if spikes.contains(&i) {
                h += 1.0;
            }
            let v = 0.1 * (ts / 7.0).cos() + r.gen_range(-0.02..0.02);
            Row { t: i * p, values: vec![Some(h), Some(v)] }
        })
        .collect();
    SyntheticTrace { columns: vec!["speed_h".into(), "speed_v".into()], rows }
}

/// GPS speeds and IMU accelerations for the cross-validation specification.
pub fn cross_validation_trace(hz: u64, secs: u64, seed: u64) -> SyntheticTrace {
    let mut r = rng(seed);
    let p = period(hz);
    let rows = (0..hz * secs)
        .map(|i| {
            let ts = i as f64 / hz as f64;
            let speed_h = 1.0 + 0.5 * (ts / 30.0).sin() + r.gen_range(-0.05..0.05);
            let speed_v = 0.2 * (ts / 11.0).cos() + r.gen_range(-0.05..0.05);
            let acc_x = 0.3 * (ts / 5.0).sin() + r.gen_range(-0.1..0.1);
            let acc_y = 0.3 * (ts / 6.0).cos() + r.gen_range(-0.1..0.1);
            let acc_z = 9.81 + r.gen_range(-0.1..0.1);
            Row { t: i * p, values: [speed_h, speed_v, acc_x, acc_y, acc_z].map(Some).to_vec() }
        })
        .collect();
    SyntheticTrace {
        columns: ["speed_h", "speed_v", "acc_x", "acc_y", "acc_z"].map(String::from).to_vec(),
        rows,
    }
}

/// A convex `n`-gon around [`FENCE_CENTER`], rotated and slightly perturbed so
/// that no face is axis-aligned. Vertices run counter-clockwise.
pub fn fence_polygon(n: usize, seed: u64) -> Polygon {
    let mut r = rng(seed ^ 0x5eed_f0e0);
    let step = std::f64::consts::TAU / n as f64;
    let rotation = 0.1234 + r.gen_range(0.0..0.05);
    let vertices = (0..n)
        .map(|k| {
            let a = rotation + k as f64 * step + r.gen_range(-0.08..0.08) * step;
            let radius = FENCE_RADIUS * (1.0 + r.gen_range(-0.015..0.015));
            (FENCE_CENTER.0 + radius * a.cos(), FENCE_CENTER.1 + radius * a.sin())
        })
        .collect();
    Polygon::new(vertices).expect("generated vertices are distinct")
}

fn scale_from(center: Point, p: Point, factor: f64) -> Point {
    (center.0 + factor * (p.0 - center.0), center.1 + factor * (p.1 - center.1))
}

/// Waypoints (degrees) of a path that leaves the fence through face `2j` and
/// re-enters through face `2j + 1`, for every `j`. For an even `n` this gives
/// exactly `n` crossings.
pub fn crossing_waypoints(poly: &Polygon) -> Vec<Point> {
    let v = &poly.vertices;
    let n = v.len();
    let c = (v.iter().map(|p| p.0).sum::<f64>() / n as f64, v.iter().map(|p| p.1).sum::<f64>() / n as f64);
    let mid = |k: usize| {
        let (a, b) = (v[k % n], v[(k + 1) % n]);
        ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
    };
    let mut points = Vec::new();
    for j in 0..n / 2 {
        let (out_face, in_face) = (2 * j, 2 * j + 1);
        points.push(scale_from(c, mid(out_face), 0.85));
        points.push(scale_from(c, mid(out_face), 1.15));
        points.push(scale_from(c, v[(2 * j + 1) % n], 1.35));
        points.push(scale_from(c, mid(in_face), 1.15));
        points.push(scale_from(c, mid(in_face), 0.85));
    }
    points
}

/// Linear interpolation with `steps` samples per leg; the last waypoint is included.
pub fn sample_path(waypoints: &[Point], steps: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for w in waypoints.windows(2) {
        for s in 0..steps {
            let f = s as f64 / steps as f64;
            out.push((w[0].0 + f * (w[1].0 - w[0].0), w[0].1 + f * (w[1].1 - w[0].1)));
        }
    }
    out.extend(waypoints.last().copied());
    out
}

/// Position samples (`lat_in_degree`, `lon_in_degree`) at `hz`.
pub fn trajectory_trace(points: &[Point], hz: u64) -> SyntheticTrace {
    let p = period(hz);
    let rows = points
        .iter()
        .enumerate()
        .map(|(i, (lat, lon))| Row { t: i as u64 * p, values: vec![Some(*lat), Some(*lon)] })
        .collect();
    SyntheticTrace { columns: vec!["lat_in_degree".into(), "lon_in_degree".into()], rows }
}
