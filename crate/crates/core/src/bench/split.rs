use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{scenario_domain, ConfigError, Domain, Language, Sample, Split, SCENARIOS};

const CYCLE: [Split; 10] = [
    Split::Train,
    Split::Train,
    Split::Train,
    Split::Train,
    Split::Train,
    Split::Train,
    Split::Train,
    Split::Train,
    Split::Val,
    Split::Test,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMode {
    Standard,
    ScenarioHeldOut { scenarios: Vec<String> },
}

/// Split label for each input sample, index-aligned with the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub splits: Vec<Split>,
}

impl SplitAssignment {
    pub fn count(&self, split: Split) -> usize {
        self.splits.iter().filter(|s| **s == split).count()
    }

    /// Copies of the samples with their `split` field filled in.
    pub fn apply(&self, samples: &[Sample]) -> Vec<Sample> {
        samples
            .iter()
            .zip(&self.splits)
            .map(|(s, sp)| Sample {
                split: Some(*sp),
                ..s.clone()
            })
            .collect()
    }
}

/// Coarse tool-use category: `none`, the single tool's name, or `chained`.
pub fn tool_use_type(s: &Sample) -> String {
    match s.tool_annotations.as_slice() {
        [] => "none".to_string(),
        [one] => one.tool.clone(),
        _ => "chained".to_string(),
    }
}

type Stratum = (Language, Domain, u8, String);

fn stratum(s: &Sample) -> Stratum {
    (s.language, s.domain, s.complexity, tool_use_type(s))
}

fn check_held_out(samples: &[Sample], held: &BTreeSet<&str>) -> Result<(), ConfigError> {
    for name in held {
        if scenario_domain(name).is_none() {
            return Err(ConfigError::Invalid(format!("unknown held-out scenario `{name}`")));
        }
    }
    for d in Domain::ALL {
        let all_held = SCENARIOS
            .iter()
            .filter(|(_, sd)| *sd == d)
            .all(|(s, _)| held.contains(s));
        let present = samples.iter().any(|s| s.domain == d);
        let trainable = samples
            .iter()
            .any(|s| s.domain == d && !held.contains(s.scenario.as_str()));
        if all_held || (present && !trainable) {
            return Err(ConfigError::Invalid(format!(
                "held-out scenarios leave no training data for domain `{d}`"
            )));
        }
    }
    Ok(())
}

/// Assigns every sample to train, val or test.
///
/// Samples are grouped by (language, domain, complexity, tool-use type),
/// shuffled within each group, and dealt along one continuous 8:1:1 cycle so
/// both the overall and the per-group ratios stay close to 8:1:1. In
/// held-out mode the named scenarios are dealt alternately to val and test.
pub fn make_splits(samples: &[Sample], mode: &SplitMode, seed: u64) -> Result<SplitAssignment, ConfigError> {
    let held: BTreeSet<&str> = match mode {
        SplitMode::Standard => BTreeSet::new(),
        SplitMode::ScenarioHeldOut { scenarios } => scenarios.iter().map(String::as_str).collect(),
    };
    if !held.is_empty() {
        check_held_out(samples, &held)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<Stratum, Vec<usize>> = BTreeMap::new();
    let mut held_idx = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if held.contains(s.scenario.as_str()) {
            held_idx.push(i);
        } else {
            strata.entry(stratum(s)).or_default().push(i);
        }
    }
    let mut splits = vec![Split::Train; samples.len()];
    let mut slot = rng.gen_range(0..CYCLE.len());
    for idx in strata.values_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter() {
            splits[i] = CYCLE[slot];
            slot = (slot + 1) % CYCLE.len();
        }
    }
    held_idx.shuffle(&mut rng);
    let flip = rng.gen_bool(0.5) as usize;
    for (n, &i) in held_idx.iter().enumerate() {
        splits[i] = if (n + flip) % 2 == 0 { Split::Val } else { Split::Test };
    }
    Ok(SplitAssignment { splits })
}
