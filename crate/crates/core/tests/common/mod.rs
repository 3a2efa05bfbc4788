#![allow(dead_code)]

use flightmon::analysis::{analyze_source, window_result_type, AnalyzedSpec};
use flightmon::frontend::WindowFunction;
use flightmon::time::{Timestamp, NANOS_PER_SEC};
use flightmon::types::{SemType, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const S: Timestamp = NANOS_PER_SEC;

pub fn spec(src: &str) -> AnalyzedSpec {
    analyze_source(src).unwrap_or_else(|e| panic!("spec failed to analyze:\n{e}\n---\n{src}"))
}

/// Relative error against the expected value, absolute below magnitude 1.
pub fn close(actual: f64, expected: f64, tol: f64) -> bool {
    if actual.is_nan() || expected.is_nan() {
        return actual.is_nan() && expected.is_nan();
    }
    (actual - expected).abs() <= tol * expected.abs().max(1.0)
}

/// Exact for integers and booleans, `tol`-relative for floats.
pub fn values_match(actual: Option<Value>, expected: Option<Value>, tol: f64) -> bool {
    match (actual, expected) {
        (None, None) => true,
        (Some(Value::Float(a)), Some(Value::Float(b))) => close(a, b, tol),
        (a, b) => a == b,
    }
}

/// Direct recomputation of a window aggregate from the raw samples whose
/// timestamps fall in `(lo, hi]` (`lo = None` means unbounded), in order.
pub fn brute_force(
    samples: &[(Timestamp, Value)],
    lo: Option<Timestamp>,
    hi: Timestamp,
    function: WindowFunction,
    input: SemType,
) -> Option<Value> {
    let result = window_result_type(function, input).expect("valid window");
    let live: Vec<(Timestamp, Value)> = samples
        .iter()
        .copied()
        .filter(|(t, _)| *t <= hi && lo.is_none_or(|lo| *t > lo))
        .collect();
    match function {
        WindowFunction::Count => Some(Value::Unsigned(live.len() as u64)),
        WindowFunction::Sum => Some(match result {
            SemType::Float16 | SemType::Float32 | SemType::Float64 => {
                Value::Float(live.iter().map(|(_, v)| v.as_f64()).sum())
            }
            SemType::Int64 => Value::Signed(live.iter().fold(0i64, |a, (_, v)| match v {
                Value::Signed(x) => a.wrapping_add(*x),
                other => panic!("signed sum over {other:?}"),
            })),
            _ => Value::Unsigned(live.iter().fold(0u64, |a, (_, v)| match v {
                Value::Unsigned(x) => a.wrapping_add(*x),
                other => panic!("unsigned sum over {other:?}"),
            })),
        }),
        WindowFunction::Avg => (!live.is_empty())
            .then(|| Value::Float(live.iter().map(|(_, v)| v.as_f64()).sum::<f64>() / live.len() as f64)),
        WindowFunction::Min | WindowFunction::Max => {
            let mut best: Option<Value> = None;
            for (_, v) in &live {
                let better = match best {
                    None => true,
                    Some(b) => {
                        let ord = compare(*v, b);
                        if function == WindowFunction::Min {
                            ord == std::cmp::Ordering::Less
                        } else {
                            ord == std::cmp::Ordering::Greater
                        }
                    }
                };
                if better {
                    best = Some(*v);
                }
            }
            best
        }
        WindowFunction::Integral => Some(Value::Float(
            live.windows(2)
                .map(|w| {
                    let dt = (w[1].0 - w[0].0) as f64 / NANOS_PER_SEC as f64;
                    (w[0].1.as_f64() + w[1].1.as_f64()) / 2.0 * dt
                })
                .sum(),
        )),
    }
}

fn compare(a: Value, b: Value) -> std::cmp::Ordering {
    match (a, b) {
        (Value::Unsigned(x), Value::Unsigned(y)) => x.cmp(&y),
        (Value::Signed(x), Value::Signed(y)) => x.cmp(&y),
        (x, y) => x.as_f64().partial_cmp(&y.as_f64()).expect("no NaN in generated traces"),
    }
}

/// Random samples of the given type: up to `hz` per second over `secs`
/// seconds, with jittered timestamps, gaps, and occasional bursts sharing an
/// instant. Integer values span the full range so sums wrap.
pub fn random_samples(rng: &mut ChaCha8Rng, ty: SemType, hz: u64, secs: u64) -> Vec<(Timestamp, Value)> {
    let period = S / hz;
    let mut out = Vec::new();
    let mut walk = 0.0f64;
    let presence = rng.gen_range(0.3..1.0);
    for i in 0..hz * secs {
        if !rng.gen_bool(presence) {
            continue;
        }
        let t = i * period + rng.gen_range(0..period);
        let repeats = if rng.gen_bool(0.02) { 2 } else { 1 };
        for _ in 0..repeats {
            let v = match ty {
                SemType::Float16 | SemType::Float32 | SemType::Float64 => {
                    walk += rng.gen_range(-5.0..5.0);
                    Value::Float(walk)
                }
                SemType::UInt64 => Value::Unsigned(if rng.gen_bool(0.1) { rng.gen() } else { rng.gen_range(0..1000) }),
                SemType::Int64 => Value::Signed(if rng.gen_bool(0.1) { rng.gen() } else { rng.gen_range(-1000..1000) }),
                SemType::UInt8 => Value::Unsigned(rng.gen_range(0..=255)),
                SemType::Int16 => Value::Signed(rng.gen_range(-32768..=32767)),
                other => panic!("no sample generator for {other}"),
            };
            out.push((t, v));
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random events covering every input of `spec`.
pub fn random_events(spec: &AnalyzedSpec, hz: u64, secs: u64, presence: f64, seed: u64) -> Vec<flightmon::Event> {
    let inputs: Vec<(&str, SemType)> = spec.inputs().map(|(_, s)| (s.name.as_str(), s.ty)).collect();
    flightmon::synth::random_trace(&inputs, hz, secs, presence, seed).events(spec)
}

/// Feeds all events, then flushes deadlines up to the last one.
pub fn run(m: &mut flightmon::Monitor, events: &[flightmon::Event]) -> Vec<flightmon::Verdict> {
    let mut out = Vec::new();
    for e in events {
        out.extend(m.accept_event(e).expect("valid event"));
    }
    if let Some(last) = events.last() {
        out.extend(m.advance_to(last.t));
    }
    out
}
