//! Benchmark-format datasets: sample records, rule-based validation,
//! symbolic deduplication, split construction and a template generator.

mod dedup;
mod generate;
mod split;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ast::StlNode;

pub use dedup::{apply_similarity_clusters, nl_key, symbolic_dedup, tree_key};
pub use generate::{
    generate_samples, SignalTemplate, TemplateSpec, ToolUse, COMPLEXITY_RATIOS,
};
pub use split::{make_splits, tool_use_type, SplitAssignment, SplitMode};
pub use validate::{validate_record, validate_sample, Violation, NL_MAX_CHARS, NL_MIN_CHARS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    AutonomousDriving,
    Robotics,
    IndustrialControl,
    EnvironmentalMonitoring,
    ElectricalSystems,
    AerospaceSystems,
}

impl Domain {
    pub const ALL: [Domain; 6] = [
        Domain::AutonomousDriving,
        Domain::Robotics,
        Domain::IndustrialControl,
        Domain::EnvironmentalMonitoring,
        Domain::ElectricalSystems,
        Domain::AerospaceSystems,
    ];

    pub fn scenarios(self) -> impl Iterator<Item = &'static str> {
        SCENARIOS
            .iter()
            .filter(move |(_, d)| *d == self)
            .map(|(s, _)| *s)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).unwrap();
        f.write_str(v.as_str().unwrap())
    }
}

/// The 33 scenario identifiers and the domain each belongs to.
pub const SCENARIOS: [(&str, Domain); 33] = [
    ("AEB", Domain::AutonomousDriving),
    ("ACC", Domain::AutonomousDriving),
    ("lane keeping", Domain::AutonomousDriving),
    ("parking", Domain::AutonomousDriving),
    ("fuel monitoring", Domain::AutonomousDriving),
    ("traction control", Domain::AutonomousDriving),
    ("pick-and-place", Domain::Robotics),
    ("welding", Domain::Robotics),
    ("collision avoidance", Domain::Robotics),
    ("assembly", Domain::Robotics),
    ("mobile navigation", Domain::Robotics),
    ("reactor control", Domain::IndustrialControl),
    ("CNC machining", Domain::IndustrialControl),
    ("conveyor belt", Domain::IndustrialControl),
    ("hydraulic press", Domain::IndustrialControl),
    ("boiler system", Domain::IndustrialControl),
    ("structural monitoring", Domain::IndustrialControl),
    ("indoor climate", Domain::EnvironmentalMonitoring),
    ("water quality", Domain::EnvironmentalMonitoring),
    ("air quality", Domain::EnvironmentalMonitoring),
    ("greenhouse", Domain::EnvironmentalMonitoring),
    ("noise monitoring", Domain::EnvironmentalMonitoring),
    ("battery management", Domain::ElectricalSystems),
    ("motor drive", Domain::ElectricalSystems),
    ("power grid", Domain::ElectricalSystems),
    ("solar panel", Domain::ElectricalSystems),
    ("signal processing", Domain::ElectricalSystems),
    ("altitude hold", Domain::AerospaceSystems),
    ("takeoff landing", Domain::AerospaceSystems),
    ("drone survey", Domain::AerospaceSystems),
    ("satellite attitude", Domain::AerospaceSystems),
    ("flight envelope", Domain::AerospaceSystems),
    ("UAV delivery", Domain::AerospaceSystems),
];

pub fn scenario_domain(scenario: &str) -> Option<Domain> {
    SCENARIOS
        .iter()
        .find(|(s, _)| *s == scenario)
        .map(|(_, d)| *d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Where an annotated tool output lands in the reference formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetField {
    /// A temporal interval bound.
    #[serde(rename = "Time", alias = "time", alias = "time bound")]
    Time,
    /// A predicate threshold.
    #[serde(rename = "threshold", alias = "predicate threshold")]
    Threshold,
    /// Consumed by a later tool in a chain, not by the formula.
    #[serde(rename = "intermediate")]
    Intermediate,
}

/// One annotated tool step: which tool, with what arguments, producing what,
/// and where the value is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolAnnotation {
    pub tool: String,
    pub args: Value,
    pub expected_output: f64,
    pub target_field: TargetField,
}

/// One benchmark record: a requirement and its reference formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub language: Language,
    pub domain: Domain,
    pub scenario: String,
    pub nl_text: String,
    pub reference: StlNode,
    pub complexity: u8,
    #[serde(default)]
    pub tool_annotations: Vec<ToolAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

/// Reads a JSONL dataset, one sample per non-empty line.
pub fn read_jsonl(text: &str) -> Result<Vec<Sample>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

pub fn write_jsonl(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("samples serialize"));
        out.push('\n');
    }
    out
}
