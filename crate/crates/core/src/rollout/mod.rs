//! Tool-augmented transcripts: segmentation into reasoning, tool calls,
//! tool results and the final answer, plus per-stage validation.

mod stage;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ast::{parse_stl_value, StlNode};
use crate::tools::protocol::{
    parse_call_text, RawToolCall, CALL_CLOSE, CALL_OPEN, DEFAULT_MAX_TOOL_ROUNDS, RESULT_CLOSE,
    RESULT_OPEN,
};
use crate::tools::{ToolError, ToolName};

pub use stage::{validate_stage, validate_stages, Reference, StageFailure, StageVerdict};

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unbalanced tags at byte {position}: {detail}")]
    UnbalancedTags { position: usize, detail: String },
    #[error("no final answer after the last tool result")]
    NoFinalAnswer,
    #[error("{count} tool rounds exceed the limit of {limit}")]
    TooManyToolRounds { count: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Reasoning,
    ToolCall,
    ToolResult,
    FinalAnswer,
}

/// A contiguous byte range of the transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub span: Range<usize>,
}

/// Which computation a stage performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageCategory {
    DurationParsing,
    UnitConversion,
    ArithmeticEvaluation,
    TimestampDifference,
    UnknownTool,
}

impl StageCategory {
    fn of(tool: &str) -> StageCategory {
        match ToolName::parse(tool) {
            Some(ToolName::ParseDuration) => StageCategory::DurationParsing,
            Some(ToolName::ConvertUnit) => StageCategory::UnitConversion,
            Some(ToolName::EvalMathExpr) => StageCategory::ArithmeticEvaluation,
            Some(ToolName::CalcTimeDiff) => StageCategory::TimestampDifference,
            None => StageCategory::UnknownTool,
        }
    }
}

/// Alignment key used to compare stages across rollouts of one group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StageRole {
    pub category: StageCategory,
    pub tool: String,
    /// 1-based count of this tool name so far in the rollout.
    pub ordinal: usize,
}

impl fmt::Display for StageRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cat = serde_json::to_value(self.category).unwrap();
        write!(f, "{}/{}#{}", cat.as_str().unwrap(), self.tool, self.ordinal)
    }
}

/// One intermediate stage: the reasoning leading to a tool call, the call,
/// and the environment's answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    /// 1-based.
    pub index: usize,
    pub role: StageRole,
    pub reasoning: Option<usize>,
    pub call_segment: usize,
    pub result_segment: usize,
    /// The call body, or why it could not be read.
    pub call: Result<RawToolCall, ToolError>,
    /// Text inside the `<tool_result>` block.
    pub result_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub transcript: String,
    pub segments: Vec<Segment>,
    pub stages: Vec<Stage>,
    pub parsed_final: Option<StlNode>,
    /// Why the final answer did not yield a formula.
    pub final_error: Option<String>,
}

impl Rollout {
    pub fn text(&self, segment: usize) -> &str {
        &self.transcript[self.segments[segment].span.clone()]
    }

    pub fn segment_at(&self, byte: usize) -> Option<usize> {
        self.segments.iter().position(|s| s.span.contains(&byte))
    }
}

fn unbalanced(position: usize, detail: impl Into<String>) -> ParseError {
    ParseError::UnbalancedTags {
        position,
        detail: detail.into(),
    }
}

const TAGS: [&str; 8] = [
    CALL_OPEN,
    CALL_CLOSE,
    RESULT_OPEN,
    RESULT_CLOSE,
    THINK_OPEN,
    THINK_CLOSE,
    ANSWER_OPEN,
    ANSWER_CLOSE,
];

fn next_tag(text: &str, from: usize) -> Option<(usize, &'static str)> {
    TAGS.iter()
        .filter_map(|t| text[from..].find(t).map(|p| (from + p, *t)))
        .min()
}

fn skip_ws(text: &str, from: usize) -> usize {
    from + (text[from..].len() - text[from..].trim_start().len())
}

/// Byte ranges of `{...}` spans that parse as JSON objects with an `STL` key.
fn stl_objects(text: &str) -> Vec<(Range<usize>, Value)> {
    let mut found = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    while let Some(off) = text[start..].find('{') {
        let open = start + off;
        let mut depth = 0usize;
        let mut in_str = false;
        let mut escaped = false;
        let mut end = None;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i + 1);
                        break;
                    }
                }
                _ => {}
            }
        }
        let Some(end) = end else { break };
        match serde_json::from_str::<Value>(&text[open..end]) {
            Ok(v) if v.get("STL").is_some() => {
                found.push((open..end, v));
                start = end;
            }
            _ => start = open + 1,
        }
    }
    found
}

fn split_final(text: &str, base: usize, segments: &mut Vec<Segment>) -> (Option<StlNode>, Option<String>) {
    let answer = text.find(ANSWER_OPEN);
    let objects = stl_objects(text);
    let answer_start = match (answer, objects.last()) {
        (Some(a), _) => a,
        (None, Some((r, _))) => {
            let line = text[..r.start].rfind('\n').map_or(0, |p| p + 1);
            if text[line..r.start].trim().is_empty() {
                line
            } else {
                r.start
            }
        }
        (None, None) => text.rfind(THINK_CLOSE).map_or(0, |p| p + THINK_CLOSE.len()),
    };
    let answer_start = if text[answer_start..].trim().is_empty() { 0 } else { answer_start };
    if answer_start > 0 {
        segments.push(Segment {
            kind: SegmentKind::Reasoning,
            span: base..base + answer_start,
        });
    }
    segments.push(Segment {
        kind: SegmentKind::FinalAnswer,
        span: base + answer_start..base + text.len(),
    });
    let scoped = &text[answer_start..];
    let scoped = match (scoped.find(ANSWER_OPEN), scoped.find(ANSWER_CLOSE)) {
        (Some(a), Some(b)) if b > a => &scoped[a + ANSWER_OPEN.len()..b],
        (Some(a), None) => &scoped[a + ANSWER_OPEN.len()..],
        _ => scoped,
    };
    let candidates = stl_objects(scoped);
    match candidates.last() {
        None => (None, Some("no STL JSON object in the final answer".into())),
        Some((_, v)) => match parse_stl_value(v) {
            Ok(node) => (Some(node), None),
            Err(e) => (None, Some(e.to_string())),
        },
    }
}

/// Splits a transcript with the default tool-round limit.
pub fn parse_rollout(transcript: &str) -> Result<Rollout, ParseError> {
    parse_rollout_with(transcript, DEFAULT_MAX_TOOL_ROUNDS)
}

/// Splits a transcript into contiguous segments and stages.
///
/// Each `<tool_call>` must be followed (after whitespace) by a
/// `<tool_result>`. Everything after the last result is the final
/// construction: leading reasoning plus the answer holding the STL JSON.
pub fn parse_rollout_with(transcript: &str, max_tool_rounds: usize) -> Result<Rollout, ParseError> {
    let t = transcript;
    let mut segments = Vec::new();
    let mut stages: Vec<Stage> = Vec::new();
    let mut cursor = 0;
    let mut seg_start = 0;
    let mut in_think = false;
    let mut counts: Vec<(String, usize)> = Vec::new();
    loop {
        let Some((pos, tag)) = next_tag(t, cursor) else { break };
        match tag {
            THINK_OPEN if !in_think => {
                in_think = true;
                cursor = pos + tag.len();
            }
            THINK_CLOSE if in_think => {
                in_think = false;
                cursor = pos + tag.len();
            }
            THINK_OPEN | THINK_CLOSE => return Err(unbalanced(pos, format!("unexpected {tag}"))),
            _ if in_think => cursor = pos + tag.len(),
            CALL_OPEN => {
                let body_start = pos + tag.len();
                let close = match next_tag(t, body_start) {
                    Some((c, CALL_CLOSE)) => c,
                    Some((c, other)) => return Err(unbalanced(c, format!("{other} inside a tool call"))),
                    None => return Err(ParseError::NoFinalAnswer),
                };
                let call_end = close + CALL_CLOSE.len();
                let res_open = skip_ws(t, call_end);
                if res_open == t.len() {
                    return Err(ParseError::NoFinalAnswer);
                }
                if !t[res_open..].starts_with(RESULT_OPEN) {
                    return Err(unbalanced(res_open, "tool call without a tool result"));
                }
                let body = res_open + RESULT_OPEN.len();
                let res_close = match next_tag(t, body) {
                    Some((c, RESULT_CLOSE)) => c,
                    Some((c, other)) => return Err(unbalanced(c, format!("{other} inside a tool result"))),
                    None => return Err(unbalanced(res_open, "unterminated tool result")),
                };
                let mut res_end = res_close + RESULT_CLOSE.len();
                if t[res_end..].starts_with('\n') {
                    res_end += 1;
                }
                let reasoning = if pos > seg_start {
                    segments.push(Segment {
                        kind: SegmentKind::Reasoning,
                        span: seg_start..pos,
                    });
                    Some(segments.len() - 1)
                } else {
                    None
                };
                segments.push(Segment {
                    kind: SegmentKind::ToolCall,
                    span: pos..call_end,
                });
                segments.push(Segment {
                    kind: SegmentKind::ToolResult,
                    span: call_end..res_end,
                });
                let call = parse_call_text(&t[body_start..close]);
                let name = match &call {
                    Ok(raw) => raw.name.clone(),
                    Err(_) => String::new(),
                };
                let ordinal = match counts.iter_mut().find(|(n, _)| *n == name) {
                    Some((_, c)) => {
                        *c += 1;
                        *c
                    }
                    None => {
                        counts.push((name.clone(), 1));
                        1
                    }
                };
                stages.push(Stage {
                    index: stages.len() + 1,
                    role: StageRole {
                        category: StageCategory::of(&name),
                        tool: name,
                        ordinal,
                    },
                    reasoning,
                    call_segment: segments.len() - 2,
                    result_segment: segments.len() - 1,
                    call,
                    result_text: t[body..res_close].trim().to_string(),
                });
                if stages.len() > max_tool_rounds {
                    return Err(ParseError::TooManyToolRounds {
                        count: stages.len(),
                        limit: max_tool_rounds,
                    });
                }
                cursor = res_end;
                seg_start = res_end;
            }
            RESULT_OPEN => return Err(unbalanced(pos, "tool result without a preceding tool call")),
            ANSWER_OPEN => {
                cursor = match t[pos..].find(ANSWER_CLOSE) {
                    Some(c) => pos + c + ANSWER_CLOSE.len(),
                    None => t.len(),
                };
            }
            _ => return Err(unbalanced(pos, format!("unexpected {tag}"))),
        }
    }
    if in_think {
        return Err(unbalanced(t.len(), "unterminated <think>"));
    }
    if t[seg_start..].trim().is_empty() {
        return Err(ParseError::NoFinalAnswer);
    }
    let (parsed_final, final_error) = split_final(&t[seg_start..], seg_start, &mut segments);
    Ok(Rollout {
        transcript: t.to_string(),
        segments,
        stages,
        parsed_final,
        final_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LISTING: &str = "<think>\nThe requirement uses \"30 minutes\", which should be converted to seconds.\n</think>\n<tool_call>\nparse_duration(\"30 minutes\")\n</tool_call>\n<tool_result>\n1800\n</tool_result>\n";

    fn with_answer(answer: &str) -> String {
        format!("{LISTING}<think>\nNow build the formula.\n</think>\n{answer}")
    }

    #[test]
    fn listing_has_one_stage() {
        let r = parse_rollout(&with_answer(
            r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Leftaction":null,"Rightaction":"altitude>3048.0"}}"#,
        ))
        .unwrap();
        assert_eq!(r.stages.len(), 1);
        let s = &r.stages[0];
        assert_eq!(s.result_text, "1800");
        assert_eq!(s.role.to_string(), "duration_parsing/parse_duration#1");
        assert_eq!(r.text(s.result_segment), "\n<tool_result>\n1800\n</tool_result>\n");
        let kinds: Vec<_> = r.segments.iter().map(|s| s.kind).collect();
        use SegmentKind::*;
        assert_eq!(kinds, vec![Reasoning, ToolCall, ToolResult, Reasoning, FinalAnswer]);
        assert!(r.parsed_final.is_some());
        let mut end = 0;
        for seg in &r.segments {
            assert_eq!(seg.span.start, end);
            end = seg.span.end;
        }
        assert_eq!(end, r.transcript.len());
    }

    #[test]
    fn answer_only() {
        let r = parse_rollout(r#"{"STL":"temperature>25.0"}"#).unwrap();
        assert!(r.stages.is_empty());
        assert_eq!(r.segments.len(), 1);
        assert_eq!(r.segments[0].kind, SegmentKind::FinalAnswer);
        assert!(r.parsed_final.is_some());
    }

    #[test]
    fn answer_tags_and_bad_json() {
        let r = parse_rollout("<answer>\n{\"STL\": \"speed<3.0\"}\n</answer>").unwrap();
        assert_eq!(r.parsed_final.unwrap().to_string(), "(speed<3.0)");
        let r = parse_rollout("I think it is G[0,5] speed<3").unwrap();
        assert!(r.parsed_final.is_none());
        assert!(r.final_error.is_some());
        let r = parse_rollout(r#"{"STL":{"Operation":"and","SubQueries":["speed<3.0"]}}"#).unwrap();
        assert!(r.parsed_final.is_none());
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_rollout("<tool_result>\n1800\n</tool_result>\n{\"STL\":\"x_pos>1.0\"}"),
            Err(ParseError::UnbalancedTags { position: 0, .. })
        ));
        assert_eq!(parse_rollout(LISTING), Err(ParseError::NoFinalAnswer));
        assert_eq!(parse_rollout("<tool_call>\nparse_duration(\"1 h\")\n</tool_call>"), Err(ParseError::NoFinalAnswer));
        assert!(matches!(parse_rollout("<think> unterminated"), Err(ParseError::UnbalancedTags { .. })));
        assert!(matches!(
            parse_rollout("<tool_call>x()</tool_call> text {\"STL\":\"x_pos>1.0\"}"),
            Err(ParseError::UnbalancedTags { .. })
        ));
        let six = LISTING.repeat(6) + "{\"STL\":\"x_pos>1.0\"}";
        assert_eq!(
            parse_rollout(&six),
            Err(ParseError::TooManyToolRounds { count: 6, limit: 5 })
        );
        assert!(parse_rollout_with(&six, 6).is_ok());
    }

    #[test]
    fn ordinals_count_per_tool() {
        let call = |b: &str, r: &str| format!("<tool_call>{b}</tool_call>\n<tool_result>{r}</tool_result>\n");
        let t = call("parse_duration(\"1 h\")", "3600")
            + &call("convert_unit(1, \"ft\", \"m\")", "0.3")
            + &call("parse_duration(\"2 h\")", "7200")
            + &call("not a call", "error")
            + "{\"STL\":\"x_pos>1.0\"}";
        let r = parse_rollout(&t).unwrap();
        let roles: Vec<String> = r.stages.iter().map(|s| s.role.to_string()).collect();
        assert_eq!(
            roles,
            vec![
                "duration_parsing/parse_duration#1",
                "unit_conversion/convert_unit#1",
                "duration_parsing/parse_duration#2",
                "unknown_tool/#1"
            ]
        );
        assert!(r.stages[3].call.is_err());
    }

    #[test]
    fn tags_inside_think_are_text() {
        let r = parse_rollout("<think>I could emit <tool_call> here but won't.</think>\n{\"STL\":\"x_pos>1.0\"}").unwrap();
        assert!(r.stages.is_empty());
        assert_eq!(r.segments[0].kind, SegmentKind::Reasoning);
    }
}
