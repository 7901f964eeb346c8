#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stlforge::ast::{Comparator, Interval, Predicate, StlNode};
use stlforge::bench::{Domain, Language, Sample};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of the random trees produced by [`random_tree`].
#[derive(Debug, Clone)]
pub struct TreeGen {
    /// Depth counted in nodes, so a lone atom has depth 1.
    pub max_depth: usize,
    pub signals: Vec<&'static str>,
    pub thresholds: Vec<f64>,
    pub max_bound: u32,
    pub integral_bounds: bool,
    pub past_operators: bool,
    pub and_or_only: bool,
}

impl TreeGen {
    /// Arbitrary well-formed trees over canonical signals.
    pub fn wide(max_depth: usize) -> TreeGen {
        TreeGen {
            max_depth,
            signals: vec!["altitude", "speed", "pitch", "temp", "x_pos", "pressure"],
            thresholds: Vec::new(),
            max_bound: 3600,
            integral_bounds: true,
            past_operators: true,
            and_or_only: false,
        }
    }

    /// Small formulas over two 0/1 signals, for exhaustive trace checks.
    pub fn boolean(max_depth: usize, max_bound: u32) -> TreeGen {
        TreeGen {
            max_depth,
            signals: vec!["x_pos", "y_pos"],
            thresholds: vec![0.5],
            max_bound,
            integral_bounds: true,
            past_operators: true,
            and_or_only: false,
        }
    }
}

fn random_predicate(rng: &mut ChaCha8Rng, g: &TreeGen) -> Predicate {
    let signal = *g.signals.choose(rng).unwrap();
    let comparator = *Comparator::ALL.choose(rng).unwrap();
    let threshold = match g.thresholds.choose(rng) {
        Some(t) => *t,
        None => rng.gen_range(-400..20_000) as f64 / 4.0,
    };
    // `==` against 0.5 never holds on a 0/1 trace, so use a reachable value.
    let threshold = if comparator == Comparator::Eq && !g.thresholds.is_empty() {
        1.0
    } else {
        threshold
    };
    Predicate::new(signal, comparator, threshold)
}

fn random_interval(rng: &mut ChaCha8Rng, g: &TreeGen) -> Interval {
    let a = rng.gen_range(0..=g.max_bound);
    let b = rng.gen_range(a..=g.max_bound);
    if g.integral_bounds {
        Interval::new(a as f64, b as f64).unwrap()
    } else {
        let lo = a as f64 + rng.gen_range(0..4) as f64 * 0.25;
        Interval::new(lo, b as f64 + 1.5).unwrap()
    }
}

pub fn random_tree(rng: &mut ChaCha8Rng, g: &TreeGen) -> StlNode {
    tree_at(rng, g, g.max_depth)
}

fn tree_at(rng: &mut ChaCha8Rng, g: &TreeGen, depth: usize) -> StlNode {
    if depth <= 1 || rng.gen_bool(0.25) {
        return StlNode::Atom(random_predicate(rng, g));
    }
    let sub = |rng: &mut ChaCha8Rng| tree_at(rng, g, depth - 1);
    let many = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(2..=4);
        (0..n).map(|_| tree_at(rng, g, depth - 1)).collect::<Vec<_>>()
    };
    if g.and_or_only {
        return if rng.gen_bool(0.5) {
            StlNode::And(many(rng))
        } else {
            StlNode::Or(many(rng))
        };
    }
    let choices = if g.past_operators { 13 } else { 10 };
    match rng.gen_range(0..choices) {
        0 => StlNode::not(sub(rng)),
        1 => StlNode::Rise(random_predicate(rng, g)),
        2 => StlNode::Fall(random_predicate(rng, g)),
        3 => StlNode::And(many(rng)),
        4 => StlNode::Or(many(rng)),
        5 => StlNode::imply(sub(rng), sub(rng)),
        6 => StlNode::globally(random_interval(rng, g), sub(rng)),
        7 => StlNode::finally(random_interval(rng, g), sub(rng)),
        8 => StlNode::until(random_interval(rng, g), sub(rng), sub(rng)),
        9 => StlNode::And(many(rng)),
        10 => StlNode::historically(random_interval(rng, g), sub(rng)),
        11 => StlNode::once(random_interval(rng, g), sub(rng)),
        _ => StlNode::since(random_interval(rng, g), sub(rng), sub(rng)),
    }
}

/// Rebuilds a tree bottom-up, applying `f` to every node after its children.
pub fn rebuild(node: &StlNode, f: &mut impl FnMut(StlNode) -> StlNode) -> StlNode {
    rebuild_dyn(node, f)
}

fn rebuild_dyn(node: &StlNode, f: &mut dyn FnMut(StlNode) -> StlNode) -> StlNode {
    let mut r = |c: &StlNode| Box::new(rebuild_dyn(c, &mut *f));
    let out = match node {
        StlNode::True | StlNode::Atom(_) | StlNode::Rise(_) | StlNode::Fall(_) => node.clone(),
        StlNode::Not(c) => StlNode::Not(r(c)),
        StlNode::And(cs) => StlNode::And(cs.iter().map(|c| *r(c)).collect()),
        StlNode::Or(cs) => StlNode::Or(cs.iter().map(|c| *r(c)).collect()),
        StlNode::Imply(a, b) => StlNode::Imply(r(a), r(b)),
        StlNode::Globally(i, c) => StlNode::Globally(*i, r(c)),
        StlNode::Finally(i, c) => StlNode::Finally(*i, r(c)),
        StlNode::Historically(i, c) => StlNode::Historically(*i, r(c)),
        StlNode::Once(i, c) => StlNode::Once(*i, r(c)),
        StlNode::Until(i, a, b) => StlNode::Until(*i, r(a), r(b)),
        StlNode::Since(i, a, b) => StlNode::Since(*i, r(a), r(b)),
    };
    f(out)
}

/// Shuffles the children of every `and`/`or` node.
pub fn permute(node: &StlNode, rng: &mut ChaCha8Rng) -> StlNode {
    rebuild(node, &mut |n| match n {
        StlNode::And(mut cs) => {
            cs.shuffle(rng);
            StlNode::And(cs)
        }
        StlNode::Or(mut cs) => {
            cs.shuffle(rng);
            StlNode::Or(cs)
        }
        other => other,
    })
}

fn shift_predicate(p: &Predicate, delta: f64) -> Predicate {
    Predicate::new(p.signal.clone(), p.comparator, p.threshold + delta)
}

/// Adds `delta` to every threshold and both ends of every interval.
pub fn shift_numbers(node: &StlNode, delta: f64) -> StlNode {
    let iv = |i: Interval| Interval::new(i.lo() + delta, i.hi() + delta).unwrap();
    rebuild(node, &mut |n| match n {
        StlNode::Atom(p) => StlNode::Atom(shift_predicate(&p, delta)),
        StlNode::Rise(p) => StlNode::Rise(shift_predicate(&p, delta)),
        StlNode::Fall(p) => StlNode::Fall(shift_predicate(&p, delta)),
        StlNode::Globally(i, c) => StlNode::Globally(iv(i), c),
        StlNode::Finally(i, c) => StlNode::Finally(iv(i), c),
        StlNode::Historically(i, c) => StlNode::Historically(iv(i), c),
        StlNode::Once(i, c) => StlNode::Once(iv(i), c),
        StlNode::Until(i, a, b) => StlNode::Until(iv(i), a, b),
        StlNode::Since(i, a, b) => StlNode::Since(iv(i), a, b),
        other => other,
    })
}

/// A different operator with the same children, used to break the root.
pub fn swap_root(node: &StlNode) -> StlNode {
    match node.clone() {
        StlNode::Globally(i, c) => StlNode::Finally(i, c),
        StlNode::Finally(i, c) => StlNode::Globally(i, c),
        StlNode::Historically(i, c) => StlNode::Once(i, c),
        StlNode::Once(i, c) => StlNode::Historically(i, c),
        StlNode::Until(i, a, b) => StlNode::Since(i, a, b),
        StlNode::Since(i, a, b) => StlNode::Until(i, a, b),
        StlNode::And(cs) => StlNode::Or(cs),
        StlNode::Or(cs) => StlNode::And(cs),
        StlNode::Imply(a, b) => StlNode::And(vec![*a, *b]),
        StlNode::Rise(p) => StlNode::Fall(p),
        StlNode::Fall(p) => StlNode::Rise(p),
        StlNode::Not(c) => *c,
        other @ (StlNode::True | StlNode::Atom(_)) => StlNode::not(other),
    }
}

pub type Signals = BTreeMap<String, Vec<f64>>;

/// Satisfaction by direct quantifier expansion over every candidate index.
/// Bounds must be integral.
pub fn oracle(node: &StlNode, s: &Signals, k: usize) -> bool {
    let n = s.values().next().unwrap().len() as i64;
    let k = k as i64;
    let holds = |p: &Predicate, j: i64| {
        let v = s[&p.signal][j as usize];
        let t = p.threshold;
        match p.comparator {
            Comparator::Gt => v > t,
            Comparator::Ge => v >= t,
            Comparator::Lt => v < t,
            Comparator::Le => v <= t,
            Comparator::Eq => (v - t).abs() <= 1e-9,
        }
    };
    let bounds = |i: &Interval| {
        assert!(i.is_integral(), "oracle needs integral bounds");
        (i.lo() as i64, i.hi() as i64)
    };
    let sat = |c: &StlNode, j: i64| oracle(c, s, j as usize);
    let inside = |j: &i64| (0..n).contains(j);
    match node {
        StlNode::True => true,
        StlNode::Atom(p) => holds(p, k),
        StlNode::Rise(p) => k >= 1 && holds(p, k) && !holds(p, k - 1),
        StlNode::Fall(p) => k >= 1 && !holds(p, k) && holds(p, k - 1),
        StlNode::Not(c) => !sat(c, k),
        StlNode::And(cs) => cs.iter().all(|c| sat(c, k)),
        StlNode::Or(cs) => cs.iter().any(|c| sat(c, k)),
        StlNode::Imply(a, b) => !sat(a, k) || sat(b, k),
        StlNode::Finally(i, c) => {
            let (a, b) = bounds(i);
            (k + a..=k + b).filter(inside).any(|j| sat(c, j))
        }
        StlNode::Globally(i, c) => {
            let (a, b) = bounds(i);
            (k + a..=k + b).filter(inside).all(|j| sat(c, j))
        }
        StlNode::Once(i, c) => {
            let (a, b) = bounds(i);
            (k - b..=k - a).filter(inside).any(|j| sat(c, j))
        }
        StlNode::Historically(i, c) => {
            let (a, b) = bounds(i);
            (k - b..=k - a).filter(inside).all(|j| sat(c, j))
        }
        StlNode::Until(i, l, r) => {
            let (a, b) = bounds(i);
            (k + a..=k + b)
                .filter(inside)
                .any(|j| sat(r, j) && (k..j).all(|m| sat(l, m)))
        }
        StlNode::Since(i, l, r) => {
            let (a, b) = bounds(i);
            (k - b..=k - a)
                .filter(inside)
                .any(|j| sat(r, j) && (j + 1..=k).all(|m| sat(l, m)))
        }
    }
}

/// Bit `j` of `pattern` becomes sample `j` (1.0 or 0.0).
pub fn bits(pattern: u32, len: usize) -> Vec<f64> {
    (0..len).map(|j| ((pattern >> j) & 1) as f64).collect()
}

pub fn sample(id: &str, nl: &str, reference: StlNode) -> Sample {
    Sample {
        id: id.into(),
        language: Language::En,
        domain: Domain::AerospaceSystems,
        scenario: "altitude hold".into(),
        nl_text: nl.into(),
        complexity: 1,
        reference,
        tool_annotations: Vec::new(),
        split: None,
    }
}

/// A transcript with one call/result pair per entry, then the final answer.
pub fn transcript(think: &str, stages: &[(&str, &str)], answer: &str) -> String {
    let mut t = format!("<think>\n{think}\n</think>\n");
    for (call, result) in stages {
        t.push_str(&format!(
            "<tool_call>\n{call}\n</tool_call>\n<tool_result>\n{result}\n</tool_result>\n"
        ));
    }
    t.push_str(answer);
    t
}

/// A corpus with heavy repetition: surface variants of a few texts paired
/// with permuted copies of a few trees.
pub fn noisy_corpus(seed: u64, n: usize) -> Vec<Sample> {
    let mut r = rng(seed);
    let texts: Vec<String> = (0..40).map(|i| format!("Requirement number {i} must hold at all times.")).collect();
    let trees: Vec<_> = (0..30).map(|_| random_tree(&mut r, &TreeGen::wide(4))).collect();
    (0..n)
        .map(|i| {
            let mut text = texts.choose(&mut r).unwrap().clone();
            if r.gen_bool(0.3) {
                text = format!("  {}", text.to_uppercase().replace(' ', "   "));
            }
            let tree = permute(trees.choose(&mut r).unwrap(), &mut r);
            let mut s = sample(&format!("s{i}"), &text, tree);
            s.complexity = r.gen_range(1..=6);
            s
        })
        .collect()
}

/// One generator template per domain.
pub fn templates() -> Vec<stlforge::bench::TemplateSpec> {
    let specs = [
        r#"{"scenario": "ACC", "time_range": [5, 600], "edge_events": true,
            "tools": ["parse_duration", "convert_unit", "eval_math_expr", "calc_time_diff"],
            "signals": [
              {"name": "speed", "min": 5, "max": 40, "unit": "m/s", "source_units": ["km/h", "mph"]},
              {"name": "distance", "min": 2, "max": 150, "unit": "m", "source_units": ["ft"]},
              {"name": "throttle", "min": 0, "max": 100, "unit": "%"}]}"#,
        r#"{"scenario": "welding", "time_range": [2, 120], "operators": ["Globally", "Finally", "Until"],
            "tools": ["parse_duration", "eval_math_expr"],
            "signals": [
              {"name": "temperature", "min": 200, "max": 1600, "unit": "C"},
              {"name": "current", "min": 50, "max": 400, "unit": "A"},
              {"name": "x_pos", "min": 0, "max": 2, "unit": "m", "source_units": ["mm", "cm"]}]}"#,
        r#"{"scenario": "hydraulic press", "time_range": [10, 1800], "edge_events": true,
            "tools": ["convert_unit", "calc_time_diff"],
            "signals": [
              {"name": "pressure", "min": 100, "max": 30000, "unit": "kPa", "source_units": ["psi", "bar"]},
              {"name": "load", "min": 0, "max": 500, "unit": "kN"},
              {"name": "strain", "min": 0, "max": 3, "unit": "%"}]}"#,
        r#"{"scenario": "greenhouse", "time_range": [60, 7200], "operators": ["Globally", "Finally", "Historically", "Once"],
            "tools": ["parse_duration", "calc_time_diff"], "languages": ["zh"],
            "signals": [
              {"name": "humidity", "min": 20, "max": 95, "unit": "%"},
              {"name": "temp", "min": 5, "max": 40, "unit": "C"},
              {"name": "co2_level", "min": 300, "max": 2000, "unit": "ppm"}]}"#,
        r#"{"scenario": "battery management", "time_range": [1, 3600], "tool_rate": 0.9,
            "tools": ["parse_duration", "eval_math_expr", "convert_unit"],
            "signals": [
              {"name": "voltage", "min": 2, "max": 5, "unit": "V"},
              {"name": "current", "min": 0, "max": 200, "unit": "A"},
              {"name": "temperature", "min": -20, "max": 60, "unit": "C"},
              {"name": "power", "min": 0, "max": 5000, "unit": "W"}]}"#,
        r#"{"scenario": "altitude hold", "time_range": [10, 3600], "edge_events": true,
            "operators": ["Globally", "Finally", "Until", "Since"],
            "tools": ["parse_duration", "convert_unit", "eval_math_expr", "calc_time_diff"],
            "signals": [
              {"name": "altitude", "min": 300, "max": 6000, "unit": "m", "source_units": ["ft"]},
              {"name": "speed", "min": 40, "max": 200, "unit": "m/s", "source_units": ["kn", "km/h"]},
              {"name": "pitch", "min": -10, "max": 10, "unit": "deg"}]}"#,
    ];
    specs
        .iter()
        .map(|s| stlforge::bench::TemplateSpec::from_json(s).unwrap())
        .collect()
}
