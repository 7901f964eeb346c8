//! The deterministic tool set and its call protocol.
//!
//! Four tools cover temporal normalization, unit conversion, arithmetic and
//! timestamp differences. Each is a pure function. [`protocol`] handles the
//! `<tool_call>` / `<tool_result>` wire format used inside transcripts.

mod duration;
mod expr;
pub mod protocol;
mod timediff;
mod units;

use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

pub use duration::parse_duration;
pub use expr::eval_math_expr;
pub use timediff::{calc_time_diff, calc_time_diff_pair};
pub use units::{convert_unit, supported_units, Dimension};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ToolError {
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("{0}")]
    Exec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ToolName {
    ParseDuration,
    ConvertUnit,
    EvalMathExpr,
    CalcTimeDiff,
}

impl ToolName {
    pub const ALL: [ToolName; 4] = [
        ToolName::ParseDuration,
        ToolName::ConvertUnit,
        ToolName::EvalMathExpr,
        ToolName::CalcTimeDiff,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolName::ParseDuration => "parse_duration",
            ToolName::ConvertUnit => "convert_unit",
            ToolName::EvalMathExpr => "eval_math_expr",
            ToolName::CalcTimeDiff => "calc_time_diff",
        }
    }

    pub fn parse(name: &str) -> Option<ToolName> {
        ToolName::ALL.into_iter().find(|t| t.as_str() == name.trim())
    }
}

impl fmt::Display for ToolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeSpan {
    Text(String),
    Pair { start: String, end: String },
}

/// A typed, schema-checked tool invocation.
#[derive(Debug, Clone, PartialEq)]
pub enum ToolCall {
    ParseDuration { text: String },
    ConvertUnit { value: f64, from_unit: String, to_unit: String },
    EvalMathExpr { expression: String },
    CalcTimeDiff(TimeSpan),
}

/// A successful tool result in canonical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolOutput {
    pub tool: ToolName,
    /// Reported value (unit conversions are rounded half-up to 2 decimals).
    pub value: f64,
    pub unrounded: f64,
}

impl ToolOutput {
    /// Text placed inside a `<tool_result>` block.
    pub fn render(&self) -> String {
        match self.tool {
            ToolName::ConvertUnit => crate::ast::format_number(self.value),
            _ if self.value.fract() == 0.0 && self.value.abs() < 9.0e15 => {
                format!("{}", self.value as i64)
            }
            _ => format!("{}", self.value),
        }
    }

    /// Whether `x` agrees with either the reported or the unrounded value.
    pub fn agrees_with(&self, x: f64, tolerance: f64) -> bool {
        (x - self.value).abs() <= tolerance + 1e-9 || (x - self.unrounded).abs() <= tolerance + 1e-9
    }
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Positional and named arguments as written by the caller.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolArgs {
    pub positional: Vec<Value>,
    pub named: Map<String, Value>,
}

impl ToolArgs {
    pub fn from_value(v: &Value) -> ToolArgs {
        match v {
            Value::Object(m) => ToolArgs {
                positional: vec![],
                named: m.clone(),
            },
            Value::Array(items) => ToolArgs {
                positional: items.clone(),
                named: Map::new(),
            },
            Value::Null => ToolArgs::default(),
            other => ToolArgs {
                positional: vec![other.clone()],
                named: Map::new(),
            },
        }
    }

    fn get(&self, pos: usize, keys: &[&str]) -> Option<&Value> {
        keys.iter()
            .find_map(|k| self.named.get(*k))
            .or_else(|| self.positional.get(pos))
    }

    fn string(&self, pos: usize, keys: &[&str]) -> Result<String, ToolError> {
        match self.get(pos, keys) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Number(n)) => Ok(n.to_string()),
            Some(other) => Err(ToolError::BadArgs(format!("`{}` must be a string, got {other}", keys[0]))),
            None => Err(ToolError::BadArgs(format!("missing argument `{}`", keys[0]))),
        }
    }

    fn number(&self, pos: usize, keys: &[&str]) -> Result<f64, ToolError> {
        let v = self
            .get(pos, keys)
            .ok_or_else(|| ToolError::BadArgs(format!("missing argument `{}`", keys[0])))?;
        let n = match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        };
        n.filter(|x: &f64| x.is_finite())
            .ok_or_else(|| ToolError::BadArgs(format!("`{}` must be a finite number, got {v}", keys[0])))
    }

    fn arity(&self) -> usize {
        self.positional.len() + self.named.len()
    }
}

const TEXT_KEYS: &[&str] = &["text", "duration", "expression", "input", "value"];

impl ToolCall {
    /// Checks a named tool and its arguments against the tool's schema.
    pub fn from_parts(name: &str, args: &ToolArgs) -> Result<ToolCall, ToolError> {
        let tool = ToolName::parse(name).ok_or_else(|| ToolError::UnknownTool(name.to_string()))?;
        let call = match tool {
            ToolName::ParseDuration => ToolCall::ParseDuration {
                text: args.string(0, TEXT_KEYS)?,
            },
            ToolName::ConvertUnit => ToolCall::ConvertUnit {
                value: args.number(0, &["value", "amount", "quantity"])?,
                from_unit: args.string(1, &["from_unit", "from", "source_unit"])?,
                to_unit: args.string(2, &["to_unit", "to", "target_unit"])?,
            },
            ToolName::EvalMathExpr => ToolCall::EvalMathExpr {
                expression: args.string(0, &["expression", "expr", "input", "text"])?,
            },
            ToolName::CalcTimeDiff => {
                if args.named.contains_key("start") || args.positional.len() == 2 {
                    ToolCall::CalcTimeDiff(TimeSpan::Pair {
                        start: args.string(0, &["start"])?,
                        end: args.string(1, &["end"])?,
                    })
                } else {
                    ToolCall::CalcTimeDiff(TimeSpan::Text(args.string(0, TEXT_KEYS)?))
                }
            }
        };
        let expected = match &call {
            ToolCall::ConvertUnit { .. } => 3,
            ToolCall::CalcTimeDiff(TimeSpan::Pair { .. }) => 2,
            _ => 1,
        };
        if args.arity() > expected {
            return Err(ToolError::BadArgs(format!(
                "{tool} takes {expected} argument(s), got {}",
                args.arity()
            )));
        }
        Ok(call)
    }

    /// Same as [`ToolCall::from_parts`] with a JSON argument value.
    pub fn from_json(name: &str, args: &Value) -> Result<ToolCall, ToolError> {
        ToolCall::from_parts(name, &ToolArgs::from_value(args))
    }

    pub fn name(&self) -> ToolName {
        match self {
            ToolCall::ParseDuration { .. } => ToolName::ParseDuration,
            ToolCall::ConvertUnit { .. } => ToolName::ConvertUnit,
            ToolCall::EvalMathExpr { .. } => ToolName::EvalMathExpr,
            ToolCall::CalcTimeDiff(_) => ToolName::CalcTimeDiff,
        }
    }

    /// Canonical named-argument object.
    pub fn args_json(&self) -> Value {
        match self {
            ToolCall::ParseDuration { text } => json!({ "text": text }),
            ToolCall::ConvertUnit { value, from_unit, to_unit } => {
                json!({ "value": value, "from_unit": from_unit, "to_unit": to_unit })
            }
            ToolCall::EvalMathExpr { expression } => json!({ "expression": expression }),
            ToolCall::CalcTimeDiff(TimeSpan::Text(t)) => json!({ "text": t }),
            ToolCall::CalcTimeDiff(TimeSpan::Pair { start, end }) => {
                json!({ "start": start, "end": end })
            }
        }
    }

    pub fn execute(&self) -> Result<ToolOutput, ToolError> {
        let tool = self.name();
        let raw = match self {
            ToolCall::ParseDuration { text } => parse_duration(text)?,
            ToolCall::ConvertUnit { value, from_unit, to_unit } => {
                convert_unit(*value, from_unit, to_unit)?
            }
            ToolCall::EvalMathExpr { expression } => eval_math_expr(expression)?,
            ToolCall::CalcTimeDiff(TimeSpan::Text(t)) => calc_time_diff(t)?,
            ToolCall::CalcTimeDiff(TimeSpan::Pair { start, end }) => calc_time_diff_pair(start, end)?,
        };
        let value = if tool == ToolName::ConvertUnit { round2(raw) } else { raw };
        Ok(ToolOutput {
            tool,
            value,
            unrounded: raw,
        })
    }
}

/// Looks up a tool by name and runs it on JSON arguments.
pub fn run_tool(name: &str, args: &Value) -> Result<ToolOutput, ToolError> {
    ToolCall::from_json(name, args)?.execute()
}
