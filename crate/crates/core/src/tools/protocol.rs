//! Tool-call wire protocol.
//!
//! A model emits `<tool_call>…</tool_call>` containing either a call
//! expression such as `convert_unit(10000, "ft", "m")` or a JSON object
//! `{"name": …, "arguments": {…}}`. The environment answers with a
//! `<tool_result>…</tool_result>` block holding the rendered value.

use serde_json::{Map, Value};

use super::{ToolArgs, ToolCall, ToolError};

pub const CALL_OPEN: &str = "<tool_call>";
pub const CALL_CLOSE: &str = "</tool_call>";
pub const RESULT_OPEN: &str = "<tool_result>";
pub const RESULT_CLOSE: &str = "</tool_result>";

/// Upper bound on tool rounds in one rollout.
pub const DEFAULT_MAX_TOOL_ROUNDS: usize = 5;

/// A call as written, before schema checking.
#[derive(Debug, Clone, PartialEq)]
pub struct RawToolCall {
    pub name: String,
    pub args: ToolArgs,
}

impl RawToolCall {
    pub fn to_call(&self) -> Result<ToolCall, ToolError> {
        ToolCall::from_parts(&self.name, &self.args)
    }
}

/// Parses the body of a `<tool_call>` block.
///
/// Fails with [`ToolError::BadArgs`] when no tool name can be recovered.
pub fn parse_call_text(body: &str) -> Result<RawToolCall, ToolError> {
    let body = body.trim();
    if body.starts_with('{') {
        return parse_json_call(body);
    }
    let open = body
        .find('(')
        .ok_or_else(|| ToolError::BadArgs(format!("expected name(args), got `{body}`")))?;
    if !body.ends_with(')') {
        return Err(ToolError::BadArgs(format!("unterminated call `{body}`")));
    }
    let name = body[..open].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(ToolError::BadArgs(format!("bad tool name `{name}`")));
    }
    let inner = body[open + 1..body.len() - 1].trim();
    let args = if inner.starts_with('{') {
        let v: Value = serde_json::from_str(inner)
            .map_err(|e| ToolError::BadArgs(format!("argument object: {e}")))?;
        ToolArgs::from_value(&v)
    } else {
        parse_arg_list(inner)?
    };
    Ok(RawToolCall {
        name: name.to_string(),
        args,
    })
}

fn parse_json_call(body: &str) -> Result<RawToolCall, ToolError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| ToolError::BadArgs(format!("call object: {e}")))?;
    let name = ["name", "tool", "function"]
        .iter()
        .find_map(|k| v.get(*k).and_then(Value::as_str))
        .ok_or_else(|| ToolError::BadArgs("call object has no `name`".into()))?;
    let args = ["arguments", "args", "parameters", "params"]
        .iter()
        .find_map(|k| v.get(*k))
        .cloned()
        .unwrap_or(Value::Null);
    // Some emitters encode the argument object as a JSON string.
    let args = match args {
        Value::String(s) if s.trim_start().starts_with('{') => serde_json::from_str(&s)
            .map_err(|e| ToolError::BadArgs(format!("argument string: {e}")))?,
        other => other,
    };
    Ok(RawToolCall {
        name: name.to_string(),
        args: ToolArgs::from_value(&args),
    })
}

fn split_top_level(text: &str) -> Result<Vec<String>, ToolError> {
    let mut parts = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut depth = 0i32;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                cur.push(c);
                if c == '\\' {
                    if let Some(n) = chars.next() {
                        cur.push(n);
                    }
                } else if c == q {
                    quote = None;
                }
            }
            None => match c {
                '"' | '\'' => {
                    quote = Some(c);
                    cur.push(c);
                }
                '(' | '[' => {
                    depth += 1;
                    cur.push(c);
                }
                ')' | ']' => {
                    depth -= 1;
                    cur.push(c);
                }
                ',' if depth == 0 => parts.push(std::mem::take(&mut cur)),
                _ => cur.push(c),
            },
        }
    }
    if quote.is_some() {
        return Err(ToolError::BadArgs("unterminated string literal".into()));
    }
    if !cur.trim().is_empty() || !parts.is_empty() {
        parts.push(cur);
    }
    Ok(parts)
}

fn literal(text: &str) -> Result<Value, ToolError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(ToolError::BadArgs("empty argument".into()));
    }
    let first = t.chars().next().unwrap();
    if first == '"' || first == '\'' {
        if t.len() < 2 || !t.ends_with(first) {
            return Err(ToolError::BadArgs(format!("bad string literal {t}")));
        }
        let inner = &t[1..t.len() - 1];
        let unescaped = inner
            .replace(&format!("\\{first}"), &first.to_string())
            .replace("\\\\", "\\");
        return Ok(Value::String(unescaped));
    }
    if let Ok(n) = t.parse::<f64>() {
        if let Some(num) = serde_json::Number::from_f64(n) {
            return Ok(Value::Number(num));
        }
    }
    Ok(Value::String(t.to_string()))
}

fn parse_arg_list(inner: &str) -> Result<ToolArgs, ToolError> {
    let mut args = ToolArgs {
        positional: Vec::new(),
        named: Map::new(),
    };
    for part in split_top_level(inner)? {
        let p = part.trim();
        let key_len = p
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(p.len());
        let rest = p[key_len..].trim_start();
        if key_len > 0 && rest.starts_with('=') && !rest.starts_with("==") {
            let key = &p[..key_len];
            args.named.insert(key.to_string(), literal(&rest[1..])?);
        } else {
            if !args.named.is_empty() {
                return Err(ToolError::BadArgs("positional argument after keyword argument".into()));
            }
            args.positional.push(literal(p)?);
        }
    }
    Ok(args)
}

/// What the environment should do after the model's latest output.
#[derive(Debug, Clone, PartialEq)]
pub enum HarnessStep {
    /// Append this `<tool_result>` block and continue generation.
    Respond(String),
    /// The round budget is spent; stop generation.
    RoundLimitReached,
    /// No pending tool call.
    Idle,
}

/// Executes pending tool calls on a growing transcript.
#[derive(Debug, Clone)]
pub struct ToolHarness {
    pub max_rounds: usize,
}

impl Default for ToolHarness {
    fn default() -> Self {
        ToolHarness {
            max_rounds: DEFAULT_MAX_TOOL_ROUNDS,
        }
    }
}

impl ToolHarness {
    pub fn step(&self, transcript: &str) -> HarnessStep {
        let Some(call_start) = transcript.rfind(CALL_OPEN) else {
            return HarnessStep::Idle;
        };
        let after = &transcript[call_start + CALL_OPEN.len()..];
        let Some(close) = after.find(CALL_CLOSE) else {
            return HarnessStep::Idle;
        };
        if after[close..].contains(RESULT_OPEN) {
            return HarnessStep::Idle;
        }
        let answered = transcript.matches(RESULT_OPEN).count();
        if answered >= self.max_rounds {
            return HarnessStep::RoundLimitReached;
        }
        let body = &after[..close];
        let text = match parse_call_text(body).and_then(|raw| raw.to_call()).and_then(|c| c.execute()) {
            Ok(out) => out.render(),
            Err(e) => format!("error: {e}"),
        };
        HarnessStep::Respond(format!("\n{RESULT_OPEN}\n{text}\n{RESULT_CLOSE}\n"))
    }
}
