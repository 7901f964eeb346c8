use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use super::{Rollout, Stage};
use crate::ast::{parse_stl_value, Operator, StlNode};
use crate::bench::{Sample, ToolAnnotation};
use crate::tools::{ToolName, ToolOutput};

/// What a rollout is judged against: the reference formula and, when
/// known, the tool steps annotated for the requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub formula: StlNode,
    pub tool_annotations: Vec<ToolAnnotation>,
    /// Whether the requirement names an explicit transition. Defaults to
    /// whether the formula contains Rise/Fall.
    pub edge_events: bool,
}

impl Reference {
    pub fn formula(formula: StlNode) -> Reference {
        Reference {
            edge_events: has_edges(&formula),
            formula,
            tool_annotations: Vec::new(),
        }
    }

    /// Accepts a bare `{"STL": …}` document or a full dataset sample.
    pub fn from_value(v: &Value) -> Result<Reference, String> {
        if v.get("STL").is_some() {
            return parse_stl_value(v).map(Reference::formula).map_err(|e| e.to_string());
        }
        let s: Sample = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        Ok(Reference::from(&s))
    }
}

impl From<&Sample> for Reference {
    fn from(s: &Sample) -> Reference {
        Reference {
            tool_annotations: s.tool_annotations.clone(),
            ..Reference::formula(s.reference.clone())
        }
    }
}

impl<'de> Deserialize<'de> for Reference {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Reference::from_value(&v).map_err(D::Error::custom)
    }
}

fn has_edges(node: &StlNode) -> bool {
    node.predicates().iter().any(|(_, edge)| edge.is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageFailure {
    BadToolName,
    BadArgs,
    ExecFailed,
    Inconsistent,
    BadPredicateGrounding,
    UnjustifiedEventOp,
}

/// Binary correctness of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageVerdict {
    pub correct: bool,
    pub failure: Option<StageFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl StageVerdict {
    pub fn ok() -> StageVerdict {
        StageVerdict {
            correct: true,
            failure: None,
            detail: None,
        }
    }

    pub fn fail(failure: StageFailure, detail: impl Into<String>) -> StageVerdict {
        StageVerdict {
            correct: false,
            failure: Some(failure),
            detail: Some(detail.into()),
        }
    }
}

fn numbers_in(v: &Value, out: &mut Vec<f64>) {
    match v {
        Value::Number(n) => out.extend(n.as_f64()),
        Value::String(s) => out.extend(
            s.split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
                .filter_map(|t| t.parse::<f64>().ok()),
        ),
        Value::Array(xs) => xs.iter().for_each(|x| numbers_in(x, out)),
        Value::Object(m) => m.values().for_each(|x| numbers_in(x, out)),
        _ => {}
    }
}

/// Numbers passed as arguments to stages after `stage`.
fn later_arguments(stage: &Stage, rollout: &Rollout) -> Vec<f64> {
    let mut out = Vec::new();
    for later in rollout.stages.iter().filter(|s| s.index > stage.index) {
        if let Ok(raw) = &later.call {
            raw.args.positional.iter().for_each(|v| numbers_in(v, &mut out));
            raw.args.named.values().for_each(|v| numbers_in(v, &mut out));
        }
    }
    out
}

fn check_events(formula: &StlNode, reference: &Reference) -> Result<(), StageVerdict> {
    let reference_edges: Vec<(Operator, &str)> = reference
        .formula
        .predicates()
        .into_iter()
        .filter_map(|(p, e)| e.map(|e| (e, p.signal.as_str())))
        .collect();
    for (p, edge) in formula.predicates() {
        let Some(edge) = edge else { continue };
        if !reference.edge_events || !reference_edges.contains(&(edge, p.signal.as_str())) {
            return Err(StageVerdict::fail(
                StageFailure::UnjustifiedEventOp,
                format!("{}({p}) has no explicit transition in the requirement", edge.name()),
            ));
        }
    }
    Ok(())
}

fn check_grounding(
    out: &ToolOutput,
    formula: &StlNode,
    reference: &Reference,
    tolerance: f64,
) -> Result<(), StageVerdict> {
    let landed: Vec<_> = formula
        .predicates()
        .into_iter()
        .filter(|(p, _)| out.agrees_with(p.threshold, tolerance))
        .collect();
    if landed.is_empty() {
        return Ok(());
    }
    let refs = reference.formula.predicates();
    let grounded = landed.iter().any(|(p, _)| {
        refs.iter().any(|(q, _)| {
            q.signal == p.signal
                && q.comparator == p.comparator
                && (q.threshold - p.threshold).abs() <= tolerance + 1e-9
        })
    });
    if grounded {
        Ok(())
    } else {
        Err(StageVerdict::fail(
            StageFailure::BadPredicateGrounding,
            format!("{} lands on a predicate absent from the requirement", landed[0].0),
        ))
    }
}

/// Checks one stage: tool choice, argument schema, execution, agreement
/// with the reported result, use of the value in the final formula,
/// predicate grounding and edge-operator justification.
pub fn validate_stage(stage: &Stage, rollout: &Rollout, reference: &Reference, tolerance: f64) -> StageVerdict {
    use StageFailure::*;
    let raw = match &stage.call {
        Ok(raw) => raw,
        Err(e) => return StageVerdict::fail(BadToolName, format!("unreadable tool call: {e}")),
    };
    let Some(tool) = ToolName::parse(&raw.name) else {
        return StageVerdict::fail(BadToolName, format!("`{}` is not an available tool", raw.name));
    };
    if !reference.tool_annotations.is_empty()
        && !reference.tool_annotations.iter().any(|a| a.tool == tool.as_str())
    {
        return StageVerdict::fail(BadToolName, format!("`{tool}` is not needed for this requirement"));
    }
    let call = match raw.to_call() {
        Ok(c) => c,
        Err(e) => return StageVerdict::fail(BadArgs, e.to_string()),
    };
    let out = match call.execute() {
        Ok(o) => o,
        Err(e) => return StageVerdict::fail(ExecFailed, e.to_string()),
    };
    match stage.result_text.parse::<f64>() {
        Ok(x) if out.agrees_with(x, tolerance) => {}
        _ => {
            return StageVerdict::fail(
                Inconsistent,
                format!("reported `{}` but the tool gives {}", stage.result_text, out.render()),
            )
        }
    }
    let Some(formula) = &rollout.parsed_final else {
        return StageVerdict::fail(Inconsistent, "no final formula to carry the value");
    };
    let endpoints: Vec<f64> = formula.intervals().iter().flat_map(|i| [i.lo(), i.hi()]).collect();
    let thresholds: Vec<f64> = formula.predicates().iter().map(|(p, _)| p.threshold).collect();
    let mut pool: Vec<f64> = match tool {
        ToolName::ParseDuration | ToolName::CalcTimeDiff => endpoints,
        ToolName::ConvertUnit => thresholds,
        ToolName::EvalMathExpr => endpoints.into_iter().chain(thresholds).collect(),
    };
    pool.extend(later_arguments(stage, rollout));
    if !pool.iter().any(|&x| out.agrees_with(x, tolerance)) {
        return StageVerdict::fail(
            Inconsistent,
            format!("{} does not appear in the final formula", out.render()),
        );
    }
    if let Err(v) = check_grounding(&out, formula, reference, tolerance) {
        return v;
    }
    if let Err(v) = check_events(formula, reference) {
        return v;
    }
    StageVerdict::ok()
}

pub fn validate_stages(rollout: &Rollout, reference: &Reference, tolerance: f64) -> Vec<StageVerdict> {
    rollout
        .stages
        .iter()
        .map(|s| validate_stage(s, rollout, reference, tolerance))
        .collect()
}
