//! Outcome rewards, outcome-bounded process rewards, group-relative
//! advantages and per-token advantage/mask labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ast::StlNode;
use crate::bench::Sample;
use crate::matcher::{tree_match, MatchConfig, DEFAULT_TOLERANCE};
use crate::rollout::{
    parse_rollout_with, validate_stages, ParseError, Reference, Rollout, SegmentKind, StageVerdict,
};
use crate::tools::protocol::DEFAULT_MAX_TOOL_ROUNDS;

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_KAPPA: f64 = 0.3;
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_GROUP_SIZE: usize = 8;
pub const DEFAULT_MAX_NEW_TOKENS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("group of {size} rollouts is too small for relative advantages")]
    DegenerateGroup { size: usize },
    #[error("invalid reward config: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Process-reward factor applied when the final formula is wrong.
    pub tau: f64,
    /// Cap on partial tree-match credit.
    pub kappa: f64,
    pub tolerance: f64,
    pub epsilon: f64,
    pub group_size: usize,
    pub max_tool_rounds: usize,
    /// Generation budget; a rollout with no answer that reaches it is truncated.
    pub max_new_tokens: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            tau: DEFAULT_TAU,
            kappa: DEFAULT_KAPPA,
            tolerance: DEFAULT_TOLERANCE,
            epsilon: DEFAULT_EPSILON,
            group_size: DEFAULT_GROUP_SIZE,
            max_tool_rounds: DEFAULT_MAX_TOOL_ROUNDS,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |m: &str| Err(RewardError::Config(m.to_string()));
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0,1)");
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad("kappa must lie in (0,1)");
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be a finite non-negative number");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if self.group_size == 0 {
            return bad("group size must be at least 1");
        }
        Ok(())
    }

    pub fn match_config(&self) -> MatchConfig {
        MatchConfig::with_tolerance(self.tolerance)
    }
}

/// Outcome-level scores of one rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub r_fmt: u8,
    pub s_tree: f64,
    pub r_cnt: f64,
    pub r_out: f64,
    pub c_final: u8,
}

impl Outcome {
    pub const ZERO: Outcome = Outcome {
        r_fmt: 0,
        s_tree: 0.0,
        r_cnt: 0.0,
        r_out: 0.0,
        c_final: 0,
    };
}

/// Format validity, tree-match score, capped content reward and final
/// correctness for a parsed rollout.
pub fn score_outcome(rollout: &Rollout, reference: &StlNode, cfg: &RewardConfig) -> Outcome {
    let Some(pred) = &rollout.parsed_final else {
        return Outcome::ZERO;
    };
    let m = tree_match(pred, reference, &cfg.match_config());
    let r_cnt = if m.exact { 1.0 } else { cfg.kappa * m.value };
    Outcome {
        r_fmt: 1,
        s_tree: m.value,
        r_cnt,
        r_out: r_cnt,
        c_final: m.exact as u8,
    }
}

/// Per-stage process rewards: the prefix product of earlier verdicts,
/// times 1 or `tau` depending on final correctness, times the stage's own
/// verdict.
pub fn process_rewards(verdicts: &[bool], c_final: bool, cfg: &RewardConfig) -> Vec<f64> {
    let bound = if c_final { 1.0 } else { cfg.tau };
    let mut prefix = true;
    verdicts
        .iter()
        .map(|&c| {
            let r = if prefix && c { bound } else { 0.0 };
            prefix &= c;
            r
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub index: usize,
    /// Alignment key, e.g. `unit_conversion/convert_unit#1`.
    pub role: String,
    #[serde(flatten)]
    pub verdict: StageVerdict,
}

/// Rewards, advantages and token labels for one rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<String>,
    pub index: usize,
    pub r_fmt: u8,
    pub s_tree: f64,
    pub r_cnt: f64,
    pub r_out: f64,
    pub c_final: u8,
    pub stages: Vec<StageReport>,
    pub r_proc: Vec<f64>,
    pub a_out: f64,
    pub a_proc: Vec<f64>,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    pub token_advantages: Vec<f64>,
    pub token_mask: Vec<u8>,
}

impl RewardReport {
    fn new(index: usize, outcome: Outcome) -> RewardReport {
        RewardReport {
            group_id: None,
            index,
            r_fmt: outcome.r_fmt,
            s_tree: outcome.s_tree,
            r_cnt: outcome.r_cnt,
            r_out: outcome.r_out,
            c_final: outcome.c_final,
            stages: Vec::new(),
            r_proc: Vec::new(),
            a_out: 0.0,
            a_proc: Vec::new(),
            truncated: false,
            parse_error: None,
            token_advantages: Vec::new(),
            token_mask: Vec::new(),
        }
    }

    pub fn outcome(&self) -> Outcome {
        Outcome {
            r_fmt: self.r_fmt,
            s_tree: self.s_tree,
            r_cnt: self.r_cnt,
            r_out: self.r_out,
            c_final: self.c_final,
        }
    }
}

/// `(x - mean) / (std + eps)` with population std. A single value, or a
/// set of identical values, maps to zeros.
pub fn normalize(values: &[f64], epsilon: f64) -> Vec<f64> {
    if values.len() < 2 || values.iter().all(|v| *v == values[0]) {
        return vec![0.0; values.len()];
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    values.iter().map(|v| (v - mean) / (std + epsilon)).collect()
}

/// Fills `a_out` and `a_proc` for one group of rollouts answering the same
/// requirement.
///
/// Outcome rewards are normalized across the group. Each stage's process
/// reward is normalized among the stages sharing its role key; a role held
/// by one rollout only gets 0.
pub fn group_advantages(reports: &mut [RewardReport], cfg: &RewardConfig) -> Result<(), RewardError> {
    if reports.len() < 2 {
        return Err(RewardError::DegenerateGroup { size: reports.len() });
    }
    let outs: Vec<f64> = reports.iter().map(|r| r.r_out).collect();
    for (r, a) in reports.iter_mut().zip(normalize(&outs, cfg.epsilon)) {
        r.a_out = a;
        r.a_proc = vec![0.0; r.r_proc.len()];
    }
    let mut groups: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, r) in reports.iter().enumerate() {
        for (k, s) in r.stages.iter().enumerate() {
            groups.entry(s.role.as_str()).or_default().push((i, k));
        }
    }
    let updates: Vec<((usize, usize), f64)> = groups
        .values()
        .flat_map(|members| {
            let vals: Vec<f64> = members.iter().map(|&(i, k)| reports[i].r_proc[k]).collect();
            members.iter().copied().zip(normalize(&vals, cfg.epsilon)).collect::<Vec<_>>()
        })
        .collect();
    for ((i, k), a) in updates {
        reports[i].a_proc[k] = a;
    }
    Ok(())
}

/// Whitespace-delimited byte spans, a stand-in when no tokenizer is given.
pub fn whitespace_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Per-token advantages and masks over caller-supplied byte spans.
///
/// A token belongs to the segment containing its first byte. Tokens of a
/// stage's reasoning and call carry that stage's process advantage; tokens
/// of the final construction carry the outcome advantage. Masked tokens
/// (tool results, stages after a failed stage, truncated rollouts, spans
/// that do not fit the transcript) get mask 0 and advantage 0. A rollout
/// that failed to parse is labelled as one final-construction segment.
pub fn token_labels(
    rollout: Option<&Rollout>,
    report: &RewardReport,
    spans: &[(usize, usize)],
    transcript_len: usize,
) -> (Vec<f64>, Vec<u8>) {
    let mut adv = vec![0.0; spans.len()];
    let mut mask = vec![0u8; spans.len()];
    if report.truncated {
        return (adv, mask);
    }
    let stage_of_segment = |seg: usize| -> Option<usize> {
        let r = rollout?;
        r.stages
            .iter()
            .position(|s| s.call_segment == seg || s.reasoning == Some(seg))
    };
    let first_failure = report.stages.iter().position(|s| !s.verdict.correct);
    for (t, &(start, end)) in spans.iter().enumerate() {
        if start >= end || end > transcript_len {
            continue;
        }
        let Some(r) = rollout else {
            adv[t] = report.a_out;
            mask[t] = 1;
            continue;
        };
        let Some(seg) = r.segment_at(start) else { continue };
        if r.segments[seg].kind == SegmentKind::ToolResult {
            continue;
        }
        match stage_of_segment(seg) {
            Some(k) => {
                if first_failure.is_some_and(|f| f < k) {
                    continue;
                }
                adv[t] = report.a_proc.get(k).copied().unwrap_or(0.0);
                mask[t] = 1;
            }
            None => {
                adv[t] = report.a_out;
                mask[t] = 1;
            }
        }
    }
    (adv, mask)
}

/// One rollout to score.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutInput {
    pub transcript: String,
    /// Byte spans of the generated tokens; whitespace tokens when absent.
    pub token_spans: Option<Vec<(usize, usize)>>,
    pub truncated: bool,
}

impl RolloutInput {
    pub fn new(transcript: impl Into<String>) -> RolloutInput {
        RolloutInput {
            transcript: transcript.into(),
            token_spans: None,
            truncated: false,
        }
    }

    fn spans(&self) -> Vec<(usize, usize)> {
        self.token_spans
            .clone()
            .unwrap_or_else(|| whitespace_spans(&self.transcript))
    }
}

fn score_one(
    index: usize,
    input: &RolloutInput,
    reference: &Reference,
    cfg: &RewardConfig,
) -> (RewardReport, Option<Rollout>) {
    let spans = input.spans();
    let parsed = parse_rollout_with(&input.transcript, cfg.max_tool_rounds);
    let truncated = input.truncated
        || (parsed == Err(ParseError::NoFinalAnswer) && spans.len() >= cfg.max_new_tokens);
    let rollout = match parsed {
        Ok(r) if !truncated => r,
        Ok(_) => {
            let mut rep = RewardReport::new(index, Outcome::ZERO);
            rep.truncated = true;
            return (rep, None);
        }
        Err(e) => {
            let mut rep = RewardReport::new(index, Outcome::ZERO);
            rep.truncated = truncated;
            rep.parse_error = Some(e.to_string());
            return (rep, None);
        }
    };
    let outcome = score_outcome(&rollout, &reference.formula, cfg);
    let verdicts = validate_stages(&rollout, reference, cfg.tolerance);
    let flags: Vec<bool> = verdicts.iter().map(|v| v.correct).collect();
    let mut rep = RewardReport::new(index, outcome);
    rep.r_proc = process_rewards(&flags, outcome.c_final == 1, cfg);
    rep.a_proc = vec![0.0; rep.r_proc.len()];
    rep.stages = rollout
        .stages
        .iter()
        .zip(verdicts)
        .map(|(s, verdict)| StageReport {
            index: s.index,
            role: s.role.to_string(),
            verdict,
        })
        .collect();
    (rep, Some(rollout))
}

/// Scores one group of rollouts end to end: parsing, outcome and process
/// rewards, group-relative advantages and token labels.
///
/// A group of fewer than two rollouts gets zero advantages.
pub fn score_inputs(
    inputs: &[RolloutInput],
    references: &[Reference],
    cfg: &RewardConfig,
) -> Result<Vec<RewardReport>, RewardError> {
    cfg.validate()?;
    if inputs.len() != references.len() {
        return Err(RewardError::Input(format!(
            "{} rollouts but {} references",
            inputs.len(),
            references.len()
        )));
    }
    let scored: Vec<(RewardReport, Option<Rollout>)> = inputs
        .iter()
        .zip(references)
        .enumerate()
        .map(|(i, (inp, r))| score_one(i, inp, r, cfg))
        .collect();
    let (mut reports, rollouts): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
    match group_advantages(&mut reports, cfg) {
        Ok(()) | Err(RewardError::DegenerateGroup { .. }) => {}
        Err(e) => return Err(e),
    }
    for ((rep, rollout), inp) in reports.iter_mut().zip(&rollouts).zip(inputs) {
        let (a, m) = token_labels(rollout.as_ref(), rep, &inp.spans(), inp.transcript.len());
        rep.token_advantages = a;
        rep.token_mask = m;
    }
    Ok(reports)
}

/// [`score_inputs`] over parallel lists of transcripts, token spans and
/// references.
pub fn score_group(
    transcripts: &[&str],
    token_spans: &[Vec<(usize, usize)>],
    references: &[Reference],
    cfg: &RewardConfig,
) -> Result<Vec<RewardReport>, RewardError> {
    if transcripts.len() != token_spans.len() {
        return Err(RewardError::Input(format!(
            "{} transcripts but {} span lists",
            transcripts.len(),
            token_spans.len()
        )));
    }
    let inputs: Vec<RolloutInput> = transcripts
        .iter()
        .zip(token_spans)
        .map(|(t, s)| RolloutInput {
            transcript: t.to_string(),
            token_spans: Some(s.clone()),
            truncated: false,
        })
        .collect();
    score_inputs(&inputs, references, cfg)
}

/// One line of a rollout file.
#[derive(Debug, Clone, Deserialize)]
pub struct RolloutRecord {
    pub group_id: Value,
    pub rollout_transcript: String,
    #[serde(default)]
    pub token_spans: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    pub reference: Option<Value>,
    #[serde(default)]
    pub sample_id: Option<String>,
    #[serde(default)]
    pub truncated: bool,
}

fn group_key(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Scores a JSONL rollout file. Records are grouped by `group_id`; each
/// names its reference inline or by `sample_id` in `dataset`. Reports come
/// back in input order.
pub fn score_jsonl(text: &str, dataset: &[Sample], cfg: &RewardConfig) -> Result<Vec<RewardReport>, RewardError> {
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: RolloutRecord = serde_json::from_str(line)
            .map_err(|e| RewardError::Input(format!("line {}: {e}", n + 1)))?;
        let reference = match (&rec.reference, &rec.sample_id) {
            (Some(v), _) => Reference::from_value(v)
                .map_err(|e| RewardError::Input(format!("line {}: reference: {e}", n + 1)))?,
            (None, Some(id)) => dataset
                .iter()
                .find(|s| &s.id == id)
                .map(Reference::from)
                .ok_or_else(|| RewardError::Input(format!("line {}: unknown sample id `{id}`", n + 1)))?,
            (None, None) => {
                return Err(RewardError::Input(format!(
                    "line {}: needs `reference` or `sample_id`",
                    n + 1
                )))
            }
        };
        records.push((rec, reference));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, (rec, _)) in records.iter().enumerate() {
        let key = group_key(&rec.group_id);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(i);
    }
    let mut out: Vec<Option<RewardReport>> = vec![None; records.len()];
    for key in order {
        let members = &groups[&key];
        let inputs: Vec<RolloutInput> = members
            .iter()
            .map(|&i| RolloutInput {
                transcript: records[i].0.rollout_transcript.clone(),
                token_spans: records[i].0.token_spans.clone(),
                truncated: records[i].0.truncated,
            })
            .collect();
        let refs: Vec<Reference> = members.iter().map(|&i| records[i].1.clone()).collect();
        for (rep, &i) in score_inputs(&inputs, &refs, cfg)?.into_iter().zip(members) {
            out[i] = Some(RewardReport {
                group_id: Some(key.clone()),
                index: i,
                ..rep
            });
        }
    }
    Ok(out.into_iter().map(|r| r.expect("every record scored")).collect())
}
