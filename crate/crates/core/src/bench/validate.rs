use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{scenario_domain, Domain, Language, Sample, Split, TargetField, ToolAnnotation};
use crate::ast::{parse_stl_value, SchemaError, SignalVocabulary, StlNode};
use crate::matcher::DEFAULT_TOLERANCE;
use crate::tools::{run_tool, ToolName};

pub const NL_MIN_CHARS: usize = 10;
pub const NL_MAX_CHARS: usize = 400;

const REQUIRED_FIELDS: [&str; 7] = [
    "id",
    "language",
    "domain",
    "scenario",
    "nl_text",
    "reference",
    "complexity",
];

/// One failed check from the dataset checklist.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    NlLength { chars: usize },
    Json { detail: String },
    MissingField { field: String },
    Malformed { field: String, detail: String },
    BadArity { detail: String },
    BadInterval { detail: String },
    BadPredicate { detail: String },
    UnknownSignal { signal: String },
    UnknownScenario { scenario: String },
    ScenarioDomainMismatch { scenario: String, domain: String },
    BadComplexity { complexity: u8 },
    ToolNotExecutable { index: usize, detail: String },
    UnitConversionMismatch { index: usize, expected: f64, actual: f64 },
    ArithmeticMismatch { index: usize, expected: f64, actual: f64 },
    ToolOutputMismatch { index: usize, expected: f64, actual: f64 },
    ToolFormulaMismatch { index: usize, value: f64, field: TargetField },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::NlLength { .. } => "NlLength",
            Violation::Json { .. } => "Json",
            Violation::MissingField { .. } => "MissingField",
            Violation::Malformed { .. } => "Malformed",
            Violation::BadArity { .. } => "BadArity",
            Violation::BadInterval { .. } => "BadInterval",
            Violation::BadPredicate { .. } => "BadPredicate",
            Violation::UnknownSignal { .. } => "UnknownSignal",
            Violation::UnknownScenario { .. } => "UnknownScenario",
            Violation::ScenarioDomainMismatch { .. } => "ScenarioDomainMismatch",
            Violation::BadComplexity { .. } => "BadComplexity",
            Violation::ToolNotExecutable { .. } => "ToolNotExecutable",
            Violation::UnitConversionMismatch { .. } => "UnitConversionMismatch",
            Violation::ArithmeticMismatch { .. } => "ArithmeticMismatch",
            Violation::ToolOutputMismatch { .. } => "ToolOutputMismatch",
            Violation::ToolFormulaMismatch { .. } => "ToolFormulaMismatch",
        }
    }
}

fn schema_violation(e: SchemaError) -> Violation {
    let detail = e.to_string();
    match e {
        SchemaError::Json(_) => Violation::Json { detail },
        SchemaError::MissingField { field, .. } => Violation::MissingField { field },
        SchemaError::UnknownOperator { .. } => Violation::Malformed {
            field: "reference".into(),
            detail,
        },
        SchemaError::BadArity { .. } => Violation::BadArity { detail },
        SchemaError::BadInterval { .. } => Violation::BadInterval { detail },
        SchemaError::BadPredicate { .. } => Violation::BadPredicate { detail },
    }
}

fn check_tree(tree: &StlNode, out: &mut Vec<Violation>) {
    if let Err(e) = tree.validate() {
        out.push(schema_violation(e));
        return;
    }
    for i in tree.intervals() {
        if !i.is_integral() {
            out.push(Violation::BadInterval {
                detail: format!("non-integer bounds {i}"),
            });
        }
    }
    let vocab = SignalVocabulary::standard();
    let mut seen = Vec::new();
    for (p, _) in tree.predicates() {
        if !vocab.is_canonical(&p.signal) && !seen.contains(&p.signal) {
            seen.push(p.signal.clone());
            out.push(Violation::UnknownSignal {
                signal: p.signal.clone(),
            });
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEFAULT_TOLERANCE + 1e-9
}

fn check_tools(s: &Sample, out: &mut Vec<Violation>) {
    let endpoints: Vec<f64> = s
        .reference
        .intervals()
        .iter()
        .flat_map(|i| [i.lo(), i.hi()])
        .collect();
    let thresholds: Vec<f64> = s.reference.predicates().iter().map(|(p, _)| p.threshold).collect();
    for (index, ann) in s.tool_annotations.iter().enumerate() {
        let result = match run_tool(&ann.tool, &ann.args) {
            Ok(r) => r,
            Err(e) => {
                out.push(Violation::ToolNotExecutable {
                    index,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        if !result.agrees_with(ann.expected_output, DEFAULT_TOLERANCE) {
            let (expected, actual) = (ann.expected_output, result.value);
            out.push(match result.tool {
                ToolName::ConvertUnit => Violation::UnitConversionMismatch { index, expected, actual },
                ToolName::EvalMathExpr => Violation::ArithmeticMismatch { index, expected, actual },
                _ => Violation::ToolOutputMismatch { index, expected, actual },
            });
            continue;
        }
        let pool = match ann.target_field {
            TargetField::Time => &endpoints,
            TargetField::Threshold => &thresholds,
            TargetField::Intermediate => continue,
        };
        if !pool.iter().any(|&x| close(x, ann.expected_output)) {
            out.push(Violation::ToolFormulaMismatch {
                index,
                value: ann.expected_output,
                field: ann.target_field,
            });
        }
    }
}

/// Runs the full checklist on a typed sample. An empty list means valid.
pub fn validate_sample(s: &Sample) -> Vec<Violation> {
    let mut out = Vec::new();
    let chars = s.nl_text.trim().chars().count();
    if !(NL_MIN_CHARS..=NL_MAX_CHARS).contains(&chars) {
        out.push(Violation::NlLength { chars });
    }
    if s.id.trim().is_empty() {
        out.push(Violation::MissingField { field: "id".into() });
    }
    match scenario_domain(&s.scenario) {
        None => out.push(Violation::UnknownScenario {
            scenario: s.scenario.clone(),
        }),
        Some(d) if d != s.domain => out.push(Violation::ScenarioDomainMismatch {
            scenario: s.scenario.clone(),
            domain: s.domain.to_string(),
        }),
        Some(_) => {}
    }
    if !(1..=6).contains(&s.complexity) {
        out.push(Violation::BadComplexity {
            complexity: s.complexity,
        });
    }
    check_tree(&s.reference, &mut out);
    check_tools(s, &mut out);
    out
}

/// Checks one raw JSONL line, reporting syntax and schema problems that
/// would stop it from loading as a [`Sample`].
///
/// Returns the sample id when one could be read.
pub fn validate_record(line: &str) -> (Option<String>, Vec<Violation>) {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return (
                None,
                vec![Violation::Json {
                    detail: e.to_string(),
                }],
            )
        }
    };
    let Some(obj) = value.as_object() else {
        return (
            None,
            vec![Violation::Json {
                detail: "record is not a JSON object".into(),
            }],
        );
    };
    let id = obj.get("id").and_then(|v| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    });
    let mut out: Vec<Violation> = REQUIRED_FIELDS
        .iter()
        .filter(|f| obj.get(**f).map_or(true, Value::is_null))
        .map(|f| Violation::MissingField {
            field: (*f).to_string(),
        })
        .collect();
    if !out.is_empty() {
        return (id, out);
    }
    if let Err(e) = parse_stl_value(&obj["reference"]) {
        out.push(schema_violation(e));
        return (id, out);
    }
    let typed: [(&str, fn(&Value) -> Result<(), serde_json::Error>); 8] = [
        ("id", |v| String::deserialize(v).map(drop)),
        ("language", |v| Language::deserialize(v).map(drop)),
        ("domain", |v| Domain::deserialize(v).map(drop)),
        ("scenario", |v| String::deserialize(v).map(drop)),
        ("nl_text", |v| String::deserialize(v).map(drop)),
        ("complexity", |v| u8::deserialize(v).map(drop)),
        ("tool_annotations", |v| Vec::<ToolAnnotation>::deserialize(v).map(drop)),
        ("split", |v| Option::<Split>::deserialize(v).map(drop)),
    ];
    for (field, check) in typed {
        if let Some(Err(e)) = obj.get(field).map(check) {
            out.push(Violation::Malformed {
                field: field.to_string(),
                detail: e.to_string(),
            });
        }
    }
    if !out.is_empty() {
        return (id, out);
    }
    match serde_json::from_value::<Sample>(value.clone()) {
        Ok(s) => out.extend(validate_sample(&s)),
        Err(e) => out.push(Violation::Malformed {
            field: "record".into(),
            detail: e.to_string(),
        }),
    }
    (id, out)
}
