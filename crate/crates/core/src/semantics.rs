//! Boolean satisfaction of STL formulas over finite discrete-time traces.
//!
//! One trace sample is one time unit, so an interval `[a, b]` selects sample
//! offsets `ceil(a)..=floor(b)`. Quantifier windows are clipped to the trace:
//! an existential over an empty window is false and a universal is vacuously
//! true. `Rise`/`Fall` are false at index 0, which has no predecessor.
//!
//! Evaluation is bottom-up: each subformula becomes a boolean signal over
//! all indices, and window operators are answered with prefix counts, so a
//! formula is checked in `O(nodes * len)`.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::ast::{Interval, Predicate, StlNode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("signal `{0}` is not present in the trace")]
    UnknownSignal(String),
    #[error("time index {index} is outside the trace (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace has no samples")]
    Empty,
    #[error("signal `{signal}` has {got} samples, expected {expected}")]
    LengthMismatch {
        signal: String,
        expected: usize,
        got: usize,
    },
    #[error("row {row}, column `{signal}`: `{value}` is not a number")]
    BadValue {
        row: usize,
        signal: String,
        value: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A finite trace `s_0 .. s_T`: named real-valued signals of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    signals: BTreeMap<String, Vec<f64>>,
    len: usize,
}

impl Trace {
    pub fn new(
        signals: impl IntoIterator<Item = (impl Into<String>, Vec<f64>)>,
    ) -> Result<Trace, TraceError> {
        let signals: BTreeMap<String, Vec<f64>> =
            signals.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let len = signals.values().next().map(Vec::len).unwrap_or(0);
        if len == 0 {
            return Err(TraceError::Empty);
        }
        for (name, values) in &signals {
            if values.len() != len {
                return Err(TraceError::LengthMismatch {
                    signal: name.clone(),
                    expected: len,
                    got: values.len(),
                });
            }
        }
        Ok(Trace { signals, len })
    }

    /// CSV with a header row of signal names and one row per sample.
    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Trace, TraceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            for (col, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| TraceError::BadValue {
                    row: row + 1,
                    signal: names[col].clone(),
                    value: field.to_string(),
                })?;
                columns[col].push(value);
            }
        }
        Trace::new(names.into_iter().zip(columns))
    }

    /// JSON object `{signal: [samples]}`.
    pub fn from_json_str(text: &str) -> Result<Trace, TraceError> {
        let map: BTreeMap<String, Vec<f64>> = serde_json::from_str(text)?;
        Trace::new(map)
    }

    /// Loads a `.json` trace, or CSV for any other extension.
    pub fn load(path: &Path) -> Result<Trace, TraceError> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Trace::from_json_str(&text)
        } else {
            Trace::from_csv_reader(text.as_bytes())
        }
    }

    /// Number of samples, `T + 1`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn signal(&self, name: &str) -> Option<&[f64]> {
        self.signals.get(name).map(Vec::as_slice)
    }

    pub fn signal_names(&self) -> impl Iterator<Item = &str> {
        self.signals.keys().map(String::as_str)
    }
}

/// Whether `(trace, k) ⊨ formula`.
pub fn satisfies(formula: &StlNode, trace: &Trace, k: usize) -> Result<bool, EvalError> {
    if k >= trace.len() {
        return Err(EvalError::IndexOutOfRange {
            index: k,
            len: trace.len(),
        });
    }
    Ok(evaluate(formula, trace)?[k])
}

/// Whether `trace ⊨ formula`, i.e. satisfaction at index 0.
pub fn satisfies_trace(formula: &StlNode, trace: &Trace) -> Result<bool, EvalError> {
    satisfies(formula, trace, 0)
}

/// Satisfaction of `formula` at every index of `trace`.
pub fn evaluate(formula: &StlNode, trace: &Trace) -> Result<Vec<bool>, EvalError> {
    for (p, _) in formula.predicates() {
        if trace.signal(&p.signal).is_none() {
            return Err(EvalError::UnknownSignal(p.signal.clone()));
        }
    }
    Ok(eval_node(formula, trace))
}

fn atom_signal(p: &Predicate, trace: &Trace) -> Vec<bool> {
    trace
        .signal(&p.signal)
        .expect("signals checked before evaluation")
        .iter()
        .map(|&v| p.holds(v))
        .collect()
}

/// Integer sample offsets `[ceil(a), floor(b)]` covered by an interval.
fn offsets(i: Interval, len: usize) -> (i64, i64) {
    let cap = len as f64;
    (i.lo().ceil().min(cap) as i64, i.hi().floor().min(cap) as i64)
}

/// Prefix counts of true samples: `counts[j]` = number of trues in `[0, j)`.
struct Counts(Vec<usize>);

impl Counts {
    fn new(sig: &[bool]) -> Counts {
        let mut c = Vec::with_capacity(sig.len() + 1);
        c.push(0);
        for &b in sig {
            c.push(c.last().unwrap() + b as usize);
        }
        Counts(c)
    }

    /// Trues in the closed range `[lo, hi]`, clipped to the signal. `None` when empty.
    fn in_range(&self, lo: i64, hi: i64) -> Option<(usize, usize)> {
        let n = self.0.len() as i64 - 1;
        let (lo, hi) = (lo.max(0), hi.min(n - 1));
        if lo > hi {
            return None;
        }
        let trues = self.0[hi as usize + 1] - self.0[lo as usize];
        Some((trues, (hi - lo + 1) as usize))
    }

    fn any(&self, lo: i64, hi: i64) -> bool {
        self.in_range(lo, hi).is_some_and(|(t, _)| t > 0)
    }

    fn all(&self, lo: i64, hi: i64) -> bool {
        self.in_range(lo, hi).is_none_or(|(t, n)| t == n)
    }
}

fn eval_node(node: &StlNode, trace: &Trace) -> Vec<bool> {
    let n = trace.len();
    let idx = |k: usize| k as i64;
    match node {
        StlNode::True => vec![true; n],
        StlNode::Atom(p) => atom_signal(p, trace),
        StlNode::Rise(p) | StlNode::Fall(p) => {
            let base = atom_signal(p, trace);
            let rise = matches!(node, StlNode::Rise(_));
            (0..n)
                .map(|k| k > 0 && base[k] == rise && base[k - 1] != rise)
                .collect()
        }
        StlNode::Not(c) => eval_node(c, trace).into_iter().map(|b| !b).collect(),
        StlNode::And(cs) => cs.iter().fold(vec![true; n], |acc, c| {
            acc.iter().zip(eval_node(c, trace)).map(|(a, b)| *a && b).collect()
        }),
        StlNode::Or(cs) => cs.iter().fold(vec![false; n], |acc, c| {
            acc.iter().zip(eval_node(c, trace)).map(|(a, b)| *a || b).collect()
        }),
        StlNode::Imply(l, r) => eval_node(l, trace)
            .into_iter()
            .zip(eval_node(r, trace))
            .map(|(a, b)| !a || b)
            .collect(),
        StlNode::Finally(i, c) | StlNode::Globally(i, c) => {
            let counts = Counts::new(&eval_node(c, trace));
            let (lo, hi) = offsets(*i, n);
            let exists = matches!(node, StlNode::Finally(..));
            (0..n)
                .map(|k| {
                    let (a, b) = (idx(k) + lo, idx(k) + hi);
                    if exists {
                        counts.any(a, b)
                    } else {
                        counts.all(a, b)
                    }
                })
                .collect()
        }
        StlNode::Once(i, c) | StlNode::Historically(i, c) => {
            let counts = Counts::new(&eval_node(c, trace));
            let (lo, hi) = offsets(*i, n);
            let exists = matches!(node, StlNode::Once(..));
            (0..n)
                .map(|k| {
                    let (a, b) = (idx(k) - hi, idx(k) - lo);
                    if exists {
                        counts.any(a, b)
                    } else {
                        counts.all(a, b)
                    }
                })
                .collect()
        }
        StlNode::Until(i, l, r) => {
            let left = eval_node(l, trace);
            let right = Counts::new(&eval_node(r, trace));
            let (lo, hi) = offsets(*i, n);
            // next_false[k]: first index >= k where the left side fails.
            let mut next_false = vec![n; n + 1];
            for k in (0..n).rev() {
                next_false[k] = if left[k] { next_false[k + 1] } else { k };
            }
            (0..n)
                .map(|k| {
                    let end = (idx(k) + hi).min(idx(next_false[k]));
                    right.any(idx(k) + lo, end)
                })
                .collect()
        }
        StlNode::Since(i, l, r) => {
            let left = eval_node(l, trace);
            let right = Counts::new(&eval_node(r, trace));
            let (lo, hi) = offsets(*i, n);
            // prev_false: last index <= k where the left side fails, -1 if none.
            let mut prev_false = -1i64;
            (0..n)
                .map(|k| {
                    if !left[k] {
                        prev_false = idx(k);
                    }
                    let start = (idx(k) - hi).max(prev_false);
                    right.any(start, idx(k) - lo)
                })
                .collect()
        }
    }
}
