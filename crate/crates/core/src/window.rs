//! Sliding-window aggregation over real-time durations with bounded memory.
//!
//! A finite window of duration `d` evaluated every `p` nanoseconds keeps a ring
//! of `⌈d/p⌉` panes. Pane `k` covers `(origin + (k-1)p, origin + kp]`, so pane
//! boundaries fall on the evaluation grid. An evaluation at `now` merges the
//! panes covering `(now - d, now]`. Unbounded windows keep one running state.

use crate::analysis::WindowDescriptor;
use crate::frontend::WindowFunction;
use crate::time::{Timestamp, NANOS_PER_SEC};
use crate::types::{SemType, TypeKind, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowError {
    #[error("sample at {t} ns precedes the previous sample at {last} ns")]
    NonMonotone { t: Timestamp, last: Timestamp },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Sum {
    Unsigned(u64),
    Signed(i64),
    Float(f64),
}

impl Sum {
    fn zero(kind: TypeKind) -> Sum {
        match kind {
            TypeKind::Signed => Sum::Signed(0),
            TypeKind::Float => Sum::Float(0.0),
            _ => Sum::Unsigned(0),
        }
    }

    fn add(self, v: Value) -> Sum {
        match (self, v) {
            (Sum::Unsigned(a), Value::Unsigned(b)) => Sum::Unsigned(a.wrapping_add(b)),
            (Sum::Signed(a), Value::Signed(b)) => Sum::Signed(a.wrapping_add(b)),
            (Sum::Float(a), v) => Sum::Float(a + v.as_f64()),
            (s, v) => unreachable!("sum {s:?} cannot take {v:?}"),
        }
    }

    fn merge(self, other: Sum) -> Sum {
        match (self, other) {
            (Sum::Unsigned(a), Sum::Unsigned(b)) => Sum::Unsigned(a.wrapping_add(b)),
            (Sum::Signed(a), Sum::Signed(b)) => Sum::Signed(a.wrapping_add(b)),
            (Sum::Float(a), Sum::Float(b)) => Sum::Float(a + b),
            _ => unreachable!("sums of one window share a kind"),
        }
    }

    fn value(self) -> Value {
        match self {
            Sum::Unsigned(v) => Value::Unsigned(v),
            Sum::Signed(v) => Value::Signed(v),
            Sum::Float(v) => Value::Float(v),
        }
    }

    fn as_f64(self) -> f64 {
        self.value().as_f64()
    }
}

fn less(a: Value, b: Value) -> bool {
    match (a, b) {
        (Value::Unsigned(x), Value::Unsigned(y)) => x < y,
        (Value::Signed(x), Value::Signed(y)) => x < y,
        (Value::Float(x), Value::Float(y)) => x < y,
        (Value::Bool(x), Value::Bool(y)) => !x & y,
        _ => a.as_f64() < b.as_f64(),
    }
}

/// Partial aggregate of the samples of one pane. Only the fields relevant to
/// the window's function are kept up to date.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Partial {
    count: u64,
    sum: Sum,
    extremum: Option<Value>,
    area: f64,
    first: Option<(Timestamp, f64)>,
    last: Option<(Timestamp, f64)>,
}

impl Partial {
    fn empty(kind: TypeKind) -> Partial {
        Partial { count: 0, sum: Sum::zero(kind), extremum: None, area: 0.0, first: None, last: None }
    }
}

fn trapezoid(a: (Timestamp, f64), b: (Timestamp, f64)) -> f64 {
    let dt = (b.0 - a.0) as f64 / NANOS_PER_SEC as f64;
    (a.1 + b.1) * dt / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowState {
    function: WindowFunction,
    duration_ns: Option<Timestamp>,
    period_ns: Timestamp,
    input_type: SemType,
    result_type: SemType,
    origin: Timestamp,
    /// Ring of `(pane index, partial)`; empty for unbounded windows.
    panes: Vec<Option<(u64, Partial)>>,
    running: Partial,
    last_t: Option<Timestamp>,
}

impl WindowState {
    pub fn new(desc: &WindowDescriptor, origin: Timestamp) -> WindowState {
        Self::with_params(desc.function, desc.duration_ns, desc.period_ns, desc.input_type, desc.result_type, origin)
    }

    /// `period_ns` is the evaluation period, which is also the pane width.
    pub fn with_params(
        function: WindowFunction,
        duration_ns: Option<Timestamp>,
        period_ns: Timestamp,
        input_type: SemType,
        result_type: SemType,
        origin: Timestamp,
    ) -> WindowState {
        assert!(period_ns > 0, "pane width must be positive");
        let pane_count = duration_ns.map_or(0, |d| d.div_ceil(period_ns) as usize);
        WindowState {
            function,
            duration_ns,
            period_ns,
            input_type,
            result_type,
            origin,
            panes: vec![None; pane_count],
            running: Partial::empty(Self::sum_kind(function, input_type)),
            last_t: None,
        }
    }

    fn sum_kind(function: WindowFunction, input: SemType) -> TypeKind {
        match function {
            WindowFunction::Avg => TypeKind::Float,
            _ => input.kind(),
        }
    }

    pub fn function(&self) -> WindowFunction {
        self.function
    }

    /// Ring capacity; 0 for unbounded windows.
    pub fn pane_capacity(&self) -> usize {
        self.panes.len()
    }

    /// Panes currently holding data.
    pub fn live_panes(&self) -> usize {
        self.panes.iter().filter(|p| p.is_some()).count()
    }

    fn pane_index(&self, t: Timestamp) -> u64 {
        t.saturating_sub(self.origin).div_ceil(self.period_ns)
    }

    fn fold(&self, p: &mut Partial, t: Timestamp, v: Value) {
        match self.function {
            WindowFunction::Count => p.count += 1,
            WindowFunction::Sum => p.sum = p.sum.add(v),
            WindowFunction::Avg => {
                p.count += 1;
                p.sum = p.sum.add(Value::Float(v.as_f64()));
            }
            WindowFunction::Min => {
                if p.extremum.is_none_or(|e| less(v, e)) {
                    p.extremum = Some(v);
                }
            }
            WindowFunction::Max => {
                if p.extremum.is_none_or(|e| less(e, v)) {
                    p.extremum = Some(v);
                }
            }
            WindowFunction::Integral => {
                let sample = (t, v.as_f64());
                if let Some(last) = p.last {
                    p.area += trapezoid(last, sample);
                }
                if p.first.is_none() {
                    p.first = Some(sample);
                }
                p.last = Some(sample);
            }
        }
    }

    /// Folds a sample into the pane covering `t`; timestamps must not decrease.
    pub fn insert(&mut self, t: Timestamp, v: Value) -> Result<(), WindowError> {
        if let Some(last) = self.last_t {
            if t < last {
                return Err(WindowError::NonMonotone { t, last });
            }
        }
        self.last_t = Some(t);
        let v = v.convert(self.input_type);
        if self.duration_ns.is_none() {
            let mut running = self.running;
            // The unbounded state needs no first sample.
            running.first = None;
            self.fold(&mut running, t, v);
            running.first = None;
            self.running = running;
            return Ok(());
        }
        let k = self.pane_index(t);
        let slot = (k % self.panes.len() as u64) as usize;
        let mut partial = match self.panes[slot] {
            Some((epoch, p)) if epoch == k => p,
            _ => Partial::empty(Self::sum_kind(self.function, self.input_type)),
        };
        self.fold(&mut partial, t, v);
        self.panes[slot] = Some((k, partial));
        Ok(())
    }

    fn merge(&self, acc: &mut Partial, p: &Partial) {
        acc.count += p.count;
        acc.sum = acc.sum.merge(p.sum);
        if let Some(e) = p.extremum {
            let replace = match (self.function, acc.extremum) {
                (_, None) => true,
                (WindowFunction::Min, Some(a)) => less(e, a),
                (_, Some(a)) => less(a, e),
            };
            if replace {
                acc.extremum = Some(e);
            }
        }
        if p.first.is_some() {
            if let (Some(last), Some(first)) = (acc.last, p.first) {
                acc.area += trapezoid(last, first);
            }
            acc.area += p.area;
            if acc.first.is_none() {
                acc.first = p.first;
            }
            acc.last = p.last;
        }
    }

    /// Aggregate over `(now - d, now]`, evicting panes that left the window.
    /// `None` for an empty avg, min or max.
    pub fn evaluate(&mut self, now: Timestamp) -> Option<Value> {
        let acc = match self.duration_ns {
            None => self.running,
            Some(_) => {
                let k_now = self.pane_index(now);
                let n = self.panes.len() as u64;
                let oldest = k_now.saturating_sub(n - 1);
                let mut live: Vec<(u64, Partial)> = Vec::with_capacity(self.panes.len());
                for slot in self.panes.iter_mut() {
                    match *slot {
                        Some((epoch, p)) if epoch >= oldest && epoch <= k_now => live.push((epoch, p)),
                        Some((epoch, _)) if epoch < oldest => *slot = None,
                        _ => {}
                    }
                }
                live.sort_by_key(|(epoch, _)| *epoch);
                let mut acc = Partial::empty(Self::sum_kind(self.function, self.input_type));
                for (_, p) in &live {
                    self.merge(&mut acc, p);
                }
                acc
            }
        };
        self.result(&acc)
    }

    fn result(&self, acc: &Partial) -> Option<Value> {
        match self.function {
            WindowFunction::Count => Some(Value::Unsigned(acc.count)),
            WindowFunction::Sum => Some(acc.sum.value().convert(self.result_type)),
            WindowFunction::Avg => {
                (acc.count > 0).then(|| Value::Float(acc.sum.as_f64() / acc.count as f64))
            }
            WindowFunction::Min | WindowFunction::Max => acc.extremum,
            WindowFunction::Integral => Some(Value::Float(acc.area)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: Timestamp = NANOS_PER_SEC;

    fn window(f: WindowFunction, d: Option<Timestamp>, ty: SemType) -> WindowState {
        let result = crate::analysis::window_result_type(f, ty).unwrap();
        WindowState::with_params(f, d, S, ty, result, 0)
    }

    #[test]
    fn single_trapezoid() {
        let mut w = window(WindowFunction::Integral, None, SemType::Float64);
        w.insert(0, Value::Float(0.0)).unwrap();
        w.insert(S, Value::Float(2.0)).unwrap();
        assert_eq!(w.evaluate(S), Some(Value::Float(1.0)));
        let mut w = window(WindowFunction::Integral, Some(10 * S), SemType::Float64);
        w.insert(0, Value::Float(0.0)).unwrap();
        w.insert(S, Value::Float(2.0)).unwrap();
        assert_eq!(w.evaluate(S), Some(Value::Float(1.0)));
    }

    #[test]
    fn count_in_one_pane() {
        let mut w = window(WindowFunction::Count, Some(3 * S), SemType::UInt8);
        for t in [S / 4, S / 2, 3 * S / 4] {
            w.insert(t, Value::Unsigned(1)).unwrap();
        }
        assert_eq!(w.live_panes(), 1);
        assert_eq!(w.evaluate(S), Some(Value::Unsigned(3)));
    }

    #[test]
    fn empty_window_results() {
        for f in WindowFunction::ALL {
            let mut w = window(f, Some(5 * S), SemType::Float32);
            let r = w.evaluate(S);
            assert_eq!(r.is_some(), f.has_neutral(), "{f}");
        }
        assert_eq!(window(WindowFunction::Count, Some(3 * S), SemType::Bool).evaluate(S), Some(Value::Unsigned(0)));
    }

    #[test]
    fn half_open_boundary() {
        let mut w = window(WindowFunction::Count, Some(3 * S), SemType::Int32);
        w.insert(2 * S, Value::Signed(1)).unwrap();
        w.insert(5 * S, Value::Signed(1)).unwrap();
        // now = 5 s: 2 s is excluded, 5 s is included.
        assert_eq!(w.evaluate(5 * S), Some(Value::Unsigned(1)));
    }

    #[test]
    fn eviction_and_ring_reuse() {
        let mut w = window(WindowFunction::Sum, Some(2 * S), SemType::UInt8);
        w.insert(S / 2, Value::Unsigned(200)).unwrap();
        w.insert(3 * S / 2, Value::Unsigned(100)).unwrap();
        assert_eq!(w.evaluate(2 * S), Some(Value::Unsigned(300)));
        w.insert(5 * S / 2, Value::Unsigned(1)).unwrap();
        assert_eq!(w.evaluate(3 * S), Some(Value::Unsigned(101)));
        assert_eq!(w.evaluate(10 * S), Some(Value::Unsigned(0)));
        assert_eq!(w.live_panes(), 0);
    }

    #[test]
    fn integral_joins_panes() {
        let mut w = window(WindowFunction::Integral, Some(3 * S), SemType::Float32);
        w.insert(S / 2, Value::Float(1.0)).unwrap();
        w.insert(3 * S / 2, Value::Float(3.0)).unwrap();
        w.insert(5 * S / 2, Value::Float(3.0)).unwrap();
        // 2.0 + 3.0
        assert_eq!(w.evaluate(3 * S), Some(Value::Float(5.0)));
        // The first sample left the window: only the 1.5 s to 2.5 s segment remains.
        assert_eq!(w.evaluate(4 * S), Some(Value::Float(3.0)));
    }

    #[test]
    fn min_max_avg() {
        let mut mn = window(WindowFunction::Min, Some(5 * S), SemType::Int16);
        let mut mx = window(WindowFunction::Max, Some(5 * S), SemType::Int16);
        let mut av = window(WindowFunction::Avg, Some(5 * S), SemType::Int16);
        for (i, v) in [3i64, -7, 12, 0].into_iter().enumerate() {
            let t = (i as u64 + 1) * S / 2;
            for w in [&mut mn, &mut mx, &mut av] {
                w.insert(t, Value::Signed(v)).unwrap();
            }
        }
        assert_eq!(mn.evaluate(2 * S), Some(Value::Signed(-7)));
        assert_eq!(mx.evaluate(2 * S), Some(Value::Signed(12)));
        assert_eq!(av.evaluate(2 * S), Some(Value::Float(2.0)));
    }

    #[test]
    fn rejects_time_travel() {
        let mut w = window(WindowFunction::Count, Some(S), SemType::UInt8);
        w.insert(5, Value::Unsigned(1)).unwrap();
        assert_eq!(w.insert(4, Value::Unsigned(1)), Err(WindowError::NonMonotone { t: 4, last: 5 }));
        w.insert(5, Value::Unsigned(1)).unwrap();
    }

    #[test]
    fn pane_count_bound() {
        let mut w = window(WindowFunction::Count, Some(120 * S), SemType::Float32);
        assert_eq!(w.pane_capacity(), 120);
        for i in 0..1000u64 {
            w.insert(i * S / 3, Value::Float(1.0)).unwrap();
            assert!(w.live_panes() <= 120);
        }
        assert_eq!(w.evaluate(333 * S), Some(Value::Unsigned(360)));
    }
}
