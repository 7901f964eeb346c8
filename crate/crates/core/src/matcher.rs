//! Tolerance-aware recursive tree matching and the skeleton/formula metrics.
//!
//! Scoring is top-down. A node whose operator kind (or interval, for
//! temporal nodes) disagrees with the reference scores 0 together with its
//! whole subtree. Otherwise the node's score is the mean of its children's
//! scores; `and`/`or` children are first aligned by an optimal assignment
//! and unmatched children count as 0 against the larger arity. Leaves score
//! 1 iff signal, comparator and threshold (within tolerance) agree.
//!
//! `value == 1.0` holds exactly iff every node matched, since every mean
//! involved is a mean of exact ones.

use serde::{Deserialize, Serialize};

use crate::ast::{parse_stl_json, Interval, Predicate, SchemaError, StlNode};

/// Numeric tolerance for time bounds and thresholds.
pub const DEFAULT_TOLERANCE: f64 = 0.1;

// Absorbs decimal representation error, e.g. 0.3 - 0.2 > 0.1 in binary.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub numeric_tolerance: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            numeric_tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl MatchConfig {
    pub fn with_tolerance(numeric_tolerance: f64) -> Self {
        assert!(numeric_tolerance >= 0.0, "tolerance must be non-negative");
        MatchConfig { numeric_tolerance }
    }

    /// `|a - b| <= tolerance`, symmetric in its arguments.
    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.numeric_tolerance + ROUNDING_SLACK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub value: f64,
    pub exact: bool,
}

impl MatchScore {
    fn from_value(value: f64) -> Self {
        MatchScore {
            value,
            exact: value == 1.0,
        }
    }
}

/// Compares a predicted tree against a reference tree.
pub fn tree_match(predicted: &StlNode, reference: &StlNode, cfg: &MatchConfig) -> MatchScore {
    MatchScore::from_value(node_score(predicted, reference, cfg))
}

/// Parses both documents and matches them; the convenience entry point for
/// callers holding raw JSON strings.
pub fn tree_match_json(
    predicted_json: &str,
    reference_json: &str,
    cfg: &MatchConfig,
) -> Result<MatchScore, SchemaError> {
    let p = parse_stl_json(predicted_json)?;
    let r = parse_stl_json(reference_json)?;
    Ok(tree_match(&p, &r, cfg))
}

fn predicates_match(p: &Predicate, r: &Predicate, cfg: &MatchConfig) -> bool {
    p.signal == r.signal && p.comparator == r.comparator && cfg.close(p.threshold, r.threshold)
}

fn intervals_match(p: Interval, r: Interval, cfg: &MatchConfig) -> bool {
    cfg.close(p.lo(), r.lo()) && cfg.close(p.hi(), r.hi())
}

fn node_score(p: &StlNode, r: &StlNode, cfg: &MatchConfig) -> f64 {
    if p.operator() != r.operator() {
        return 0.0;
    }
    if let (Some(pi), Some(ri)) = (p.interval(), r.interval()) {
        if !intervals_match(pi, ri, cfg) {
            return 0.0;
        }
    }
    match (p, r) {
        (StlNode::True, StlNode::True) => 1.0,
        (StlNode::Atom(a), StlNode::Atom(b))
        | (StlNode::Rise(a), StlNode::Rise(b))
        | (StlNode::Fall(a), StlNode::Fall(b)) => {
            if predicates_match(a, b, cfg) {
                1.0
            } else {
                0.0
            }
        }
        (StlNode::And(ps), StlNode::And(rs)) | (StlNode::Or(ps), StlNode::Or(rs)) => {
            commutative_score(ps, rs, cfg)
        }
        _ => {
            let (pc, rc) = (p.children(), r.children());
            debug_assert_eq!(pc.len(), rc.len());
            let total: f64 = pc
                .iter()
                .zip(&rc)
                .map(|(a, b)| node_score(a, b, cfg))
                .sum();
            total / pc.len() as f64
        }
    }
}

fn commutative_score(ps: &[StlNode], rs: &[StlNode], cfg: &MatchConfig) -> f64 {
    let scores: Vec<Vec<f64>> = ps
        .iter()
        .map(|p| rs.iter().map(|r| node_score(p, r, cfg)).collect())
        .collect();
    let pairs = best_assignment(&scores);
    let total: f64 = pairs.iter().map(|&(i, j)| scores[i][j]).sum();
    total / ps.len().max(rs.len()) as f64
}

/// Maximum-weight assignment between rows and columns of a score matrix
/// (Hungarian algorithm on the padded square cost matrix). Returns the
/// matched `(row, col)` pairs; with unequal sides, the extra rows or columns
/// stay unmatched.
pub fn best_assignment(scores: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = scores.len();
    let cols = scores.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return vec![];
    }
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -scores[i][j]
        } else {
            0.0
        }
    };
    // 1-indexed potentials; way/matching arrays as in the classic O(n^3) formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter_map(|j| {
            let i = col_owner[j];
            (i >= 1 && i <= rows && j <= cols).then(|| (i - 1, j - 1))
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Replaces every predicate, interval and threshold with a fixed placeholder,
/// keeping operator kinds and tree shape.
pub fn mask_tree(node: &StlNode) -> StlNode {
    match node {
        StlNode::Atom(_) => StlNode::Atom(Predicate::placeholder()),
        StlNode::Rise(_) => StlNode::Rise(Predicate::placeholder()),
        StlNode::Fall(_) => StlNode::Fall(Predicate::placeholder()),
        other => {
            let masked = other
                .map_children::<std::convert::Infallible>(&mut |c| Ok(mask_tree(c)))
                .unwrap();
            let p = Interval::placeholder();
            match masked {
                StlNode::Globally(_, c) => StlNode::Globally(p, c),
                StlNode::Finally(_, c) => StlNode::Finally(p, c),
                StlNode::Historically(_, c) => StlNode::Historically(p, c),
                StlNode::Once(_, c) => StlNode::Once(p, c),
                StlNode::Until(_, l, r) => StlNode::Until(p, l, r),
                StlNode::Since(_, l, r) => StlNode::Since(p, l, r),
                x => x,
            }
        }
    }
}

/// Per-sample outcome of the two accuracy metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub valid: bool,
    pub format_match: bool,
    pub formula_match: bool,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format_accuracy: f64,
    pub formula_accuracy: f64,
    pub per_sample: Vec<SampleMetrics>,
}

/// Scores one raw model output against its reference.
pub fn score_sample(raw_output: &str, reference: &StlNode, cfg: &MatchConfig) -> SampleMetrics {
    match parse_stl_json(raw_output.trim()) {
        Ok(pred) => {
            let full = tree_match(&pred, reference, cfg);
            let skeleton = tree_match(&mask_tree(&pred), &mask_tree(reference), cfg);
            SampleMetrics {
                id: None,
                valid: true,
                format_match: skeleton.exact,
                formula_match: full.exact,
                score: full.value,
                error: None,
            }
        }
        Err(e) => SampleMetrics {
            id: None,
            valid: false,
            format_match: false,
            formula_match: false,
            score: 0.0,
            error: Some(e.to_string()),
        },
    }
}

/// Computes both metrics over `(id, raw_output, reference)` triples.
pub fn evaluate_batch<'a>(
    items: impl IntoIterator<Item = (Option<String>, &'a str, &'a StlNode)>,
    cfg: &MatchConfig,
) -> MetricsReport {
    let per_sample: Vec<SampleMetrics> = items
        .into_iter()
        .map(|(id, raw, reference)| SampleMetrics {
            id,
            ..score_sample(raw, reference, cfg)
        })
        .collect();
    let n = per_sample.len();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    MetricsReport {
        format_accuracy: frac(per_sample.iter().filter(|s| s.format_match).count()),
        formula_accuracy: frac(per_sample.iter().filter(|s| s.formula_match).count()),
        per_sample,
    }
}

/// Fraction of outputs that parse and whose masked tree matches the masked reference.
pub fn format_accuracy(pairs: &[(String, StlNode)], cfg: &MatchConfig) -> f64 {
    evaluate_batch(pairs.iter().map(|(o, r)| (None, o.as_str(), r)), cfg).format_accuracy
}

/// Fraction of outputs that parse and match the reference exactly under tolerance.
pub fn formula_accuracy(pairs: &[(String, StlNode)], cfg: &MatchConfig) -> f64 {
    evaluate_batch(pairs.iter().map(|(o, r)| (None, o.as_str(), r)), cfg).formula_accuracy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{serialize_stl_json, Comparator};

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn a(sig: &str, t: f64) -> StlNode {
        StlNode::atom(sig, Comparator::Gt, t)
    }

    fn listing() -> StlNode {
        StlNode::finally(
            iv(0.0, 1800.0),
            StlNode::And(vec![
                a("altitude", 3048.0),
                StlNode::atom("speed", Comparator::Ge, 102.89),
            ]),
        )
    }

    fn cfg() -> MatchConfig {
        MatchConfig::default()
    }

    #[test]
    fn identity_and_commutativity() {
        assert_eq!(tree_match(&listing(), &listing(), &cfg()).value, 1.0);
        let ab = StlNode::And(vec![a("x", 1.0), a("y", 2.0)]);
        let ba = StlNode::And(vec![a("y", 2.0), a("x", 1.0)]);
        assert!(tree_match(&ab, &ba, &cfg()).exact);
    }

    #[test]
    fn interval_tolerance_gates_the_subtree() {
        let p = a("x", 1.0);
        let reference = StlNode::finally(iv(0.0, 1800.0), p.clone());
        let close = StlNode::finally(iv(0.0, 1800.05), p.clone());
        let far = StlNode::finally(iv(0.0, 1801.0), p);
        assert_eq!(tree_match(&close, &reference, &cfg()).value, 1.0);
        assert_eq!(tree_match(&far, &reference, &cfg()).value, 0.0);
    }

    #[test]
    fn wrong_temporal_operator_earns_nothing() {
        let child = a("altitude", 3048.0);
        let g = StlNode::globally(iv(0.0, 10.0), child.clone());
        let f = StlNode::finally(iv(0.0, 10.0), child);
        assert_eq!(tree_match(&g, &f, &cfg()).value, 0.0);
    }

    #[test]
    fn partial_credit_aggregation() {
        // One of two conjuncts wrong: 0.5 at the and-node, carried up by Finally.
        let pred = StlNode::finally(iv(0.0, 1800.0), StlNode::And(vec![a("altitude", 3048.0), a("speed", 1.0)]));
        let s = tree_match(&pred, &listing(), &cfg());
        assert_eq!(s.value, 0.5);
        assert!(!s.exact);
        // Arity mismatch: 2 matched of max(3, 2).
        let three = StlNode::And(vec![a("x", 1.0), a("y", 1.0), a("z", 1.0)]);
        let two = StlNode::And(vec![a("y", 1.0), a("x", 1.0)]);
        assert!((tree_match(&three, &two, &cfg()).value - 2.0 / 3.0).abs() < 1e-12);
        // Until averages its two positional children.
        let u1 = StlNode::until(iv(0.0, 5.0), a("x", 1.0), a("y", 1.0));
        let u2 = StlNode::until(iv(0.0, 5.0), a("x", 1.0), a("y", 9.0));
        assert_eq!(tree_match(&u1, &u2, &cfg()).value, 0.5);
        // Non-commutative children are not re-aligned.
        let i1 = StlNode::imply(a("x", 1.0), a("y", 1.0));
        let i2 = StlNode::imply(a("y", 1.0), a("x", 1.0));
        assert_eq!(tree_match(&i1, &i2, &cfg()).value, 0.0);
    }

    #[test]
    fn assignment_finds_the_optimum() {
        let m = vec![vec![0.9, 1.0], vec![0.0, 0.95]];
        // Greedy row-wise would take (0,1) then (1,0) = 1.0; optimum is 1.85.
        assert_eq!(best_assignment(&m), vec![(0, 0), (1, 1)]);
        let wide = vec![vec![0.0, 0.0, 1.0]];
        assert_eq!(best_assignment(&wide), vec![(0, 2)]);
        let tall = vec![vec![0.2], vec![0.7], vec![0.1]];
        assert_eq!(best_assignment(&tall), vec![(1, 0)]);
    }

    #[test]
    fn masking() {
        let masked = mask_tree(&listing());
        let expected = StlNode::finally(
            Interval::placeholder(),
            StlNode::And(vec![StlNode::Atom(Predicate::placeholder()), StlNode::Atom(Predicate::placeholder())]),
        );
        assert_eq!(masked, expected);
        assert_eq!(mask_tree(&masked), masked);
        let shifted = StlNode::finally(
            iv(5.0, 60.0),
            StlNode::And(vec![a("pressure", 1.0), StlNode::atom("speed", Comparator::Lt, 7.0)]),
        );
        assert_eq!(mask_tree(&shifted), masked);
    }

    #[test]
    fn metrics_split_skeleton_from_content() {
        let reference = listing();
        let right = serialize_stl_json(&reference);
        let wrong_threshold = serialize_stl_json(&StlNode::finally(
            iv(0.0, 1800.0),
            StlNode::And(vec![a("altitude", 3000.0), StlNode::atom("speed", Comparator::Ge, 102.89)]),
        ));
        let pairs = vec![
            (right, reference.clone()),
            (wrong_threshold, reference.clone()),
            (String::new(), reference.clone()),
            ("not json".to_string(), reference),
        ];
        assert_eq!(format_accuracy(&pairs, &cfg()), 0.5);
        assert_eq!(formula_accuracy(&pairs, &cfg()), 0.25);
        assert_eq!(format_accuracy(&[], &cfg()), 0.0);
    }

    #[test]
    fn small_threshold_shifts_stay_exact() {
        let shifted = StlNode::finally(
            iv(0.0, 1800.0),
            StlNode::And(vec![a("altitude", 3048.05), StlNode::atom("speed", Comparator::Ge, 102.94)]),
        );
        let pairs = vec![(serialize_stl_json(&shifted), listing())];
        assert_eq!(formula_accuracy(&pairs, &cfg()), 1.0);
    }

    #[test]
    fn json_entry_point() {
        let text = serialize_stl_json(&listing());
        let s = tree_match_json(&text, &text, &cfg()).unwrap();
        assert_eq!(s, MatchScore { value: 1.0, exact: true });
        assert!(tree_match_json("nope", &text, &cfg()).is_err());
    }
}
