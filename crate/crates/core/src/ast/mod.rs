//! STL formula trees, the JSON wire schema, and canonicalization.
//!
//! A formula is an [`StlNode`]: internal nodes are temporal or Boolean
//! operators and leaves are atomic [`Predicate`]s. The enum shape fixes the
//! arity of every operator, so a constructed tree can only violate the
//! remaining invariants (interval ordering, finite thresholds, at least two
//! children under `and`/`or`), which [`StlNode::validate`] checks.
//!
//! On the wire a formula is a JSON object rooted at `STL`, with node keys
//! `Operation`, `Time`, `Leftaction`, `Rightaction` and `SubQueries`. Atomic
//! predicates are always written as leaf strings such as `altitude>3048.0`.

mod json;
mod predicate;
mod vocab;

use std::fmt;

use thiserror::Error;

pub use json::{parse_stl_json, parse_stl_value, serialize_stl_json, serialize_stl_value};
pub use predicate::{format_number, parse_predicate, Comparator, Predicate, EQ_SAMPLE_TOLERANCE};
pub use vocab::{SignalVocabulary, CANONICAL_SIGNALS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("missing field `{field}` at {path}")]
    MissingField { field: String, path: String },
    #[error("unknown operation `{name}` at {path}")]
    UnknownOperator { name: String, path: String },
    #[error("bad arity for `{operation}` at {path}: {detail}")]
    BadArity {
        operation: String,
        path: String,
        detail: String,
    },
    #[error("bad interval at {path}: {detail}")]
    BadInterval { path: String, detail: String },
    #[error("bad predicate `{text}` at byte {position}: {reason}")]
    BadPredicate {
        text: String,
        position: usize,
        reason: String,
    },
}

/// Operator kind of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operator {
    Globally,
    Finally,
    Until,
    Since,
    Historically,
    Once,
    Rise,
    Fall,
    Imply,
    And,
    Or,
    Not,
    Atom,
    /// The constant `⊤`.
    True,
}

impl Operator {
    pub const ALL: [Operator; 14] = [
        Operator::Globally,
        Operator::Finally,
        Operator::Until,
        Operator::Since,
        Operator::Historically,
        Operator::Once,
        Operator::Rise,
        Operator::Fall,
        Operator::Imply,
        Operator::And,
        Operator::Or,
        Operator::Not,
        Operator::Atom,
        Operator::True,
    ];

    /// Name as written in the `Operation` field.
    pub fn name(self) -> &'static str {
        match self {
            Operator::Globally => "Globally",
            Operator::Finally => "Finally",
            Operator::Until => "Until",
            Operator::Since => "Since",
            Operator::Historically => "Historically",
            Operator::Once => "Once",
            Operator::Rise => "Rise",
            Operator::Fall => "Fall",
            Operator::Imply => "imply",
            Operator::And => "and",
            Operator::Or => "or",
            Operator::Not => "Not",
            Operator::Atom => "Atom",
            Operator::True => "true",
        }
    }

    /// Resolves an operator name or one of its common aliases, case-insensitively.
    pub fn from_name(name: &str) -> Option<Operator> {
        let folded = name.trim().to_ascii_lowercase();
        let op = match folded.as_str() {
            "globally" | "always" | "g" => Operator::Globally,
            "finally" | "eventually" | "f" => Operator::Finally,
            "until" | "u" => Operator::Until,
            "since" | "s" => Operator::Since,
            "historically" | "h" => Operator::Historically,
            "once" | "o" => Operator::Once,
            "rise" | "rising" => Operator::Rise,
            "fall" | "falling" => Operator::Fall,
            "imply" | "implies" | "implication" | "->" | "=>" => Operator::Imply,
            "and" | "&&" | "&" | "conjunction" => Operator::And,
            "or" | "||" | "|" | "disjunction" => Operator::Or,
            "not" | "!" | "\u{ac}" | "negation" => Operator::Not,
            "atom" | "predicate" => Operator::Atom,
            "true" | "\u{22a4}" | "top" => Operator::True,
            _ => return None,
        };
        Some(op)
    }

    /// Operators that carry a `Time` interval.
    pub fn is_temporal(self) -> bool {
        matches!(
            self,
            Operator::Globally
                | Operator::Finally
                | Operator::Until
                | Operator::Since
                | Operator::Historically
                | Operator::Once
        )
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, Operator::And | Operator::Or)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed time interval `[lo, hi]` in canonical time units, `0 <= lo <= hi`.
///
/// Bounds are stored as reals so predicted trees with slightly off bounds
/// (e.g. `1800.05`) can still be compared under tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval, SchemaError> {
        let bad = |detail: String| SchemaError::BadInterval {
            path: String::from("Time"),
            detail,
        };
        if !lo.is_finite() || !hi.is_finite() {
            return Err(bad(format!("bounds must be finite, got [{lo}, {hi}]")));
        }
        if lo < 0.0 {
            return Err(bad(format!("lower bound {lo} is negative")));
        }
        if lo > hi {
            return Err(bad(format!("lower bound {lo} exceeds upper bound {hi}")));
        }
        // -0.0 normalizes to 0.0.
        Ok(Interval { lo: lo + 0.0, hi: hi + 0.0 })
    }

    /// The fixed interval every bound collapses to under skeleton masking.
    pub fn placeholder() -> Interval {
        Interval { lo: 0.0, hi: 0.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_integral(&self) -> bool {
        self.lo.fract() == 0.0 && self.hi.fract() == 0.0
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// One node of a structured STL formula.
#[derive(Debug, Clone, PartialEq)]
pub enum StlNode {
    True,
    Atom(Predicate),
    Not(Box<StlNode>),
    Rise(Predicate),
    Fall(Predicate),
    And(Vec<StlNode>),
    Or(Vec<StlNode>),
    Imply(Box<StlNode>, Box<StlNode>),
    Globally(Interval, Box<StlNode>),
    Finally(Interval, Box<StlNode>),
    Historically(Interval, Box<StlNode>),
    Once(Interval, Box<StlNode>),
    Until(Interval, Box<StlNode>, Box<StlNode>),
    Since(Interval, Box<StlNode>, Box<StlNode>),
}

impl StlNode {
    pub fn atom(signal: impl Into<String>, comparator: Comparator, threshold: f64) -> StlNode {
        StlNode::Atom(Predicate::new(signal, comparator, threshold))
    }

    pub fn not(child: StlNode) -> StlNode {
        StlNode::Not(Box::new(child))
    }

    pub fn imply(cond: StlNode, then: StlNode) -> StlNode {
        StlNode::Imply(Box::new(cond), Box::new(then))
    }

    pub fn globally(interval: Interval, child: StlNode) -> StlNode {
        StlNode::Globally(interval, Box::new(child))
    }

    pub fn finally(interval: Interval, child: StlNode) -> StlNode {
        StlNode::Finally(interval, Box::new(child))
    }

    pub fn historically(interval: Interval, child: StlNode) -> StlNode {
        StlNode::Historically(interval, Box::new(child))
    }

    pub fn once(interval: Interval, child: StlNode) -> StlNode {
        StlNode::Once(interval, Box::new(child))
    }

    pub fn until(interval: Interval, left: StlNode, right: StlNode) -> StlNode {
        StlNode::Until(interval, Box::new(left), Box::new(right))
    }

    pub fn since(interval: Interval, left: StlNode, right: StlNode) -> StlNode {
        StlNode::Since(interval, Box::new(left), Box::new(right))
    }

    pub fn operator(&self) -> Operator {
        match self {
            StlNode::True => Operator::True,
            StlNode::Atom(_) => Operator::Atom,
            StlNode::Not(_) => Operator::Not,
            StlNode::Rise(_) => Operator::Rise,
            StlNode::Fall(_) => Operator::Fall,
            StlNode::And(_) => Operator::And,
            StlNode::Or(_) => Operator::Or,
            StlNode::Imply(..) => Operator::Imply,
            StlNode::Globally(..) => Operator::Globally,
            StlNode::Finally(..) => Operator::Finally,
            StlNode::Historically(..) => Operator::Historically,
            StlNode::Once(..) => Operator::Once,
            StlNode::Until(..) => Operator::Until,
            StlNode::Since(..) => Operator::Since,
        }
    }

    pub fn interval(&self) -> Option<Interval> {
        match self {
            StlNode::Globally(i, _)
            | StlNode::Finally(i, _)
            | StlNode::Historically(i, _)
            | StlNode::Once(i, _)
            | StlNode::Until(i, _, _)
            | StlNode::Since(i, _, _) => Some(*i),
            _ => None,
        }
    }

    /// The predicate carried directly by this node (`Atom`, `Rise`, `Fall`).
    pub fn predicate(&self) -> Option<&Predicate> {
        match self {
            StlNode::Atom(p) | StlNode::Rise(p) | StlNode::Fall(p) => Some(p),
            _ => None,
        }
    }

    /// Child formulas in positional order (left before right).
    pub fn children(&self) -> Vec<&StlNode> {
        match self {
            StlNode::True | StlNode::Atom(_) | StlNode::Rise(_) | StlNode::Fall(_) => vec![],
            StlNode::Not(c)
            | StlNode::Globally(_, c)
            | StlNode::Finally(_, c)
            | StlNode::Historically(_, c)
            | StlNode::Once(_, c) => vec![c],
            StlNode::And(cs) | StlNode::Or(cs) => cs.iter().collect(),
            StlNode::Imply(l, r) | StlNode::Until(_, l, r) | StlNode::Since(_, l, r) => {
                vec![l, r]
            }
        }
    }

    /// Rebuilds the node with every child replaced by `f(child)`.
    pub fn map_children<E>(
        &self,
        f: &mut impl FnMut(&StlNode) -> Result<StlNode, E>,
    ) -> Result<StlNode, E> {
        let mut b = |c: &StlNode| f(c).map(Box::new);
        Ok(match self {
            StlNode::True => StlNode::True,
            StlNode::Atom(p) => StlNode::Atom(p.clone()),
            StlNode::Rise(p) => StlNode::Rise(p.clone()),
            StlNode::Fall(p) => StlNode::Fall(p.clone()),
            StlNode::Not(c) => StlNode::Not(b(c)?),
            StlNode::Globally(i, c) => StlNode::Globally(*i, b(c)?),
            StlNode::Finally(i, c) => StlNode::Finally(*i, b(c)?),
            StlNode::Historically(i, c) => StlNode::Historically(*i, b(c)?),
            StlNode::Once(i, c) => StlNode::Once(*i, b(c)?),
            StlNode::Imply(l, r) => StlNode::Imply(b(l)?, b(r)?),
            StlNode::Until(i, l, r) => StlNode::Until(*i, b(l)?, b(r)?),
            StlNode::Since(i, l, r) => StlNode::Since(*i, b(l)?, b(r)?),
            StlNode::And(cs) => StlNode::And(cs.iter().map(|c| f(c)).collect::<Result<_, _>>()?),
            StlNode::Or(cs) => StlNode::Or(cs.iter().map(|c| f(c)).collect::<Result<_, _>>()?),
        })
    }

    /// Depth of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Number of operator nodes, counting `Rise`/`Fall` but not leaves.
    pub fn operator_count(&self) -> usize {
        let own = match self {
            StlNode::Atom(_) | StlNode::True => 0,
            _ => 1,
        };
        own + self.children().iter().map(|c| c.operator_count()).sum::<usize>()
    }

    /// All predicates in depth-first, left-to-right order, with the edge
    /// operator wrapping them if any.
    pub fn predicates(&self) -> Vec<(&Predicate, Option<Operator>)> {
        let mut out = Vec::new();
        self.collect_predicates(&mut out);
        out
    }

    fn collect_predicates<'a>(&'a self, out: &mut Vec<(&'a Predicate, Option<Operator>)>) {
        match self {
            StlNode::Atom(p) => out.push((p, None)),
            StlNode::Rise(p) => out.push((p, Some(Operator::Rise))),
            StlNode::Fall(p) => out.push((p, Some(Operator::Fall))),
            _ => {
                for c in self.children() {
                    c.collect_predicates(out);
                }
            }
        }
    }

    /// All intervals in depth-first order.
    pub fn intervals(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let Some(i) = n.interval() {
                out.push(i);
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a StlNode)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Checks the invariants the enum shape cannot express.
    pub fn validate(&self) -> Result<(), SchemaError> {
        self.validate_at("STL")
    }

    fn validate_at(&self, path: &str) -> Result<(), SchemaError> {
        if let Some(p) = self.predicate() {
            if !p.threshold.is_finite() {
                return Err(SchemaError::BadPredicate {
                    text: p.to_string(),
                    position: p.signal.len(),
                    reason: "threshold must be finite".into(),
                });
            }
        }
        if let Some(i) = self.interval() {
            Interval::new(i.lo, i.hi).map_err(|e| match e {
                SchemaError::BadInterval { detail, .. } => SchemaError::BadInterval {
                    path: path.to_string(),
                    detail,
                },
                other => other,
            })?;
        }
        match self {
            StlNode::And(cs) | StlNode::Or(cs) if cs.len() < 2 => {
                return Err(SchemaError::BadArity {
                    operation: self.operator().name().into(),
                    path: path.to_string(),
                    detail: format!("needs at least 2 SubQueries, got {}", cs.len()),
                })
            }
            _ => {}
        }
        for (idx, c) in self.children().into_iter().enumerate() {
            c.validate_at(&format!("{path}/{idx}"))?;
        }
        Ok(())
    }
}

/// Normalizes signal aliases and numeric fields; the result is a fixed point.
///
/// No algebraic rewriting is done: `Not(Not(x))` stays as written, and
/// nested same-kind `and`/`or` nodes are not flattened.
pub fn canonicalize(node: &StlNode) -> Result<StlNode, SchemaError> {
    canonicalize_with(node, SignalVocabulary::standard())
}

pub fn canonicalize_with(node: &StlNode, vocab: &SignalVocabulary) -> Result<StlNode, SchemaError> {
    let canon_pred = |p: &Predicate| -> Result<Predicate, SchemaError> {
        if !p.threshold.is_finite() || p.signal.is_empty() {
            return Err(SchemaError::BadPredicate {
                text: p.to_string(),
                position: 0,
                reason: "predicate cannot be normalized".into(),
            });
        }
        Ok(Predicate::new(
            vocab.normalize(&p.signal),
            p.comparator,
            p.threshold + 0.0,
        ))
    };
    node.validate()?;
    fn go(
        n: &StlNode,
        canon_pred: &impl Fn(&Predicate) -> Result<Predicate, SchemaError>,
    ) -> Result<StlNode, SchemaError> {
        match n {
            StlNode::Atom(p) => Ok(StlNode::Atom(canon_pred(p)?)),
            StlNode::Rise(p) => Ok(StlNode::Rise(canon_pred(p)?)),
            StlNode::Fall(p) => Ok(StlNode::Fall(canon_pred(p)?)),
            other => other.map_children(&mut |c| go(c, canon_pred)),
        }
    }
    go(node, &canon_pred)
}

impl fmt::Display for StlNode {
    /// Compact mathematical rendering for logs and debugging.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StlNode::True => f.write_str("\u{22a4}"),
            StlNode::Atom(p) => write!(f, "({p})"),
            StlNode::Rise(p) => write!(f, "rise({p})"),
            StlNode::Fall(p) => write!(f, "fall({p})"),
            StlNode::Not(c) => write!(f, "\u{ac}{c}"),
            StlNode::And(cs) | StlNode::Or(cs) => {
                let sep = if matches!(self, StlNode::And(_)) {
                    " \u{2227} "
                } else {
                    " \u{2228} "
                };
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            StlNode::Imply(l, r) => write!(f, "({l} \u{2192} {r})"),
            StlNode::Globally(i, c) => write!(f, "G{i}{c}"),
            StlNode::Finally(i, c) => write!(f, "F{i}{c}"),
            StlNode::Historically(i, c) => write!(f, "H{i}{c}"),
            StlNode::Once(i, c) => write!(f, "O{i}{c}"),
            StlNode::Until(i, l, r) => write!(f, "({l} U{i} {r})"),
            StlNode::Since(i, l, r) => write!(f, "({l} S{i} {r})"),
        }
    }
}
