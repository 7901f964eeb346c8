use std::collections::{HashMap, HashSet};

use super::Sample;
use crate::ast::{format_number, StlNode};

/// Case-folded text with whitespace runs collapsed to single spaces.
pub fn nl_key(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Structural key of a tree including its predicates and bounds.
///
/// Children of `and`/`or` are sorted, so operand order does not matter.
pub fn tree_key(node: &StlNode) -> String {
    let head = match node.interval() {
        Some(i) => format!(
            "{}[{},{}]",
            node.operator().name(),
            format_number(i.lo()),
            format_number(i.hi())
        ),
        None => node.operator().name().to_string(),
    };
    if let Some(p) = node.predicate() {
        return format!("{head}({p})");
    }
    let mut parts: Vec<String> = node.children().into_iter().map(tree_key).collect();
    if node.operator().is_commutative() {
        parts.sort();
    }
    format!("{head}({})", parts.join(","))
}

/// Drops samples whose (normalized text, tree key) pair was already seen,
/// keeping the first occurrence in input order.
pub fn symbolic_dedup(samples: &[Sample]) -> Vec<Sample> {
    let mut seen = HashSet::new();
    samples
        .iter()
        .filter(|s| seen.insert((nl_key(&s.nl_text), tree_key(&s.reference))))
        .cloned()
        .collect()
}

/// Keeps one sample per externally supplied similarity cluster.
///
/// The survivor is the highest-complexity member, earliest on ties. Samples
/// not named in any cluster are kept. Output preserves input order.
pub fn apply_similarity_clusters(samples: &[Sample], clusters: &[Vec<String>]) -> Vec<Sample> {
    let position: HashMap<&str, usize> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();
    let mut dropped = HashSet::new();
    for cluster in clusters {
        let members: Vec<usize> = cluster
            .iter()
            .filter_map(|id| position.get(id.as_str()).copied())
            .collect();
        let keep = members
            .iter()
            .copied()
            .max_by_key(|&i| (samples[i].complexity, std::cmp::Reverse(i)));
        dropped.extend(members.into_iter().filter(|&i| Some(i) != keep));
    }
    samples
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(i))
        .map(|(_, s)| s.clone())
        .collect()
}
