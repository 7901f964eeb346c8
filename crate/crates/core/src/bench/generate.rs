use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{scenario_domain, validate_sample, ConfigError, Language, Sample, TargetField, ToolAnnotation};
use crate::ast::{format_number, Comparator, Interval, Operator, Predicate, SignalVocabulary, StlNode};
use crate::tools::{convert_unit, round2, ToolName};

/// Default share of each complexity level, levels 1 through 6.
pub const COMPLEXITY_RATIOS: [f64; 6] = [0.25, 0.25, 0.20, 0.15, 0.10, 0.05];

const MAX_ATTEMPTS: usize = 200;

/// An admissible signal and its value range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalTemplate {
    pub name: String,
    pub min: f64,
    pub max: f64,
    /// Unit of the threshold as it appears in the formula.
    #[serde(default)]
    pub unit: Option<String>,
    /// Units the requirement text may state instead, converted with `convert_unit`.
    #[serde(default)]
    pub source_units: Vec<String>,
    #[serde(default)]
    pub comparators: Vec<Comparator>,
}

/// Tools a template may annotate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolUse {
    ParseDuration,
    ConvertUnit,
    EvalMathExpr,
    CalcTimeDiff,
}

fn default_operators() -> Vec<String> {
    vec!["Globally".into(), "Finally".into()]
}

fn default_tool_rate() -> f64 {
    0.5
}

fn default_languages() -> Vec<Language> {
    vec![Language::En, Language::Zh]
}

/// A scenario-conditioned template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSpec {
    pub scenario: String,
    #[serde(default)]
    pub id_prefix: Option<String>,
    pub signals: Vec<SignalTemplate>,
    /// Temporal operators the templates may place in temporal slots.
    #[serde(default = "default_operators")]
    pub operators: Vec<String>,
    /// Range of upper interval bounds, in seconds.
    pub time_range: [u32; 2],
    #[serde(default)]
    pub tools: Vec<ToolUse>,
    /// Chance that an eligible slot is stated in a form needing a tool.
    #[serde(default = "default_tool_rate")]
    pub tool_rate: f64,
    /// Whether requirements may name explicit transitions (Rise/Fall).
    #[serde(default)]
    pub edge_events: bool,
    /// Fixes every sample to one level instead of sampling by ratio.
    #[serde(default)]
    pub complexity: Option<u8>,
    #[serde(default)]
    pub complexity_ratios: Option<[f64; 6]>,
    #[serde(default = "default_languages")]
    pub languages: Vec<Language>,
}

impl TemplateSpec {
    pub fn from_json(text: &str) -> Result<TemplateSpec, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Invalid(format!("template: {e}")))
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if scenario_domain(&self.scenario).is_none() {
            return bad(format!("unknown scenario `{}`", self.scenario));
        }
        if self.signals.is_empty() {
            return bad("no admissible signals".into());
        }
        let vocab = SignalVocabulary::standard();
        for s in &self.signals {
            if !vocab.is_canonical(&s.name) {
                return bad(format!("signal `{}` is not in the vocabulary", s.name));
            }
            if !(s.min.is_finite() && s.max.is_finite() && s.min <= s.max) {
                return bad(format!("empty range for signal `{}`", s.name));
            }
            for u in &s.source_units {
                let to = s.unit.as_deref().unwrap_or_default();
                if convert_unit(1.0, u, to).is_err() {
                    return bad(format!("cannot convert `{u}` to `{to}` for `{}`", s.name));
                }
            }
        }
        let [lo, hi] = self.time_range;
        if lo == 0 || lo > hi {
            return bad(format!("empty time range [{lo},{hi}]"));
        }
        if self.unary_ops().is_empty() {
            return bad("no unary temporal operator among `operators`".into());
        }
        for o in &self.operators {
            match Operator::from_name(o) {
                Some(op) if op.is_temporal() => {}
                _ => return bad(format!("`{o}` is not a temporal operator")),
            }
        }
        if let Some(c) = self.complexity {
            if !(1..=6).contains(&c) {
                return bad(format!("complexity {c} outside 1..=6"));
            }
        }
        if let Some(r) = self.complexity_ratios {
            if r.iter().any(|x| !x.is_finite() || *x < 0.0) || r.iter().sum::<f64>() <= 0.0 {
                return bad("complexity ratios must be non-negative with a positive sum".into());
            }
        }
        if self.languages.is_empty() {
            return bad("no languages".into());
        }
        if !(0.0..=1.0).contains(&self.tool_rate) {
            return bad("tool_rate must be in [0,1]".into());
        }
        Ok(())
    }

    fn unary_ops(&self) -> Vec<Operator> {
        self.temporal(|o| {
            matches!(o, Operator::Globally | Operator::Finally | Operator::Historically | Operator::Once)
        })
    }

    fn binary_ops(&self) -> Vec<Operator> {
        self.temporal(|o| matches!(o, Operator::Until | Operator::Since))
    }

    fn temporal(&self, keep: impl Fn(Operator) -> bool) -> Vec<Operator> {
        let mut ops: Vec<Operator> = self
            .operators
            .iter()
            .filter_map(|o| Operator::from_name(o))
            .filter(|o| keep(*o))
            .collect();
        ops.dedup();
        ops
    }

    fn allows(&self, t: ToolUse) -> bool {
        self.tools.contains(&t)
    }
}

/// Integer quotas per level by largest remainder, so the ratios hold exactly
/// up to rounding.
fn level_quotas(ratios: &[f64; 6], count: usize) -> [usize; 6] {
    let total: f64 = ratios.iter().sum();
    let exact: Vec<f64> = ratios.iter().map(|r| r / total * count as f64).collect();
    let mut q = [0usize; 6];
    for (i, e) in exact.iter().enumerate() {
        q[i] = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let short = count - q.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        q[i] += 1;
    }
    q
}

struct Builder<'a> {
    spec: &'a TemplateSpec,
    lang: Language,
    rng: &'a mut ChaCha8Rng,
    annotations: Vec<ToolAnnotation>,
    time_tool_used: bool,
    edge_pending: bool,
    chain: bool,
}

fn seconds_text(n: u32, lang: Language) -> String {
    match lang {
        Language::En if n == 1 => "1 second".into(),
        Language::En => format!("{n} seconds"),
        Language::Zh => format!("{n}秒"),
    }
}

fn clock(secs: u32) -> String {
    format!("{}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
}

impl Builder<'_> {
    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(self.rng).expect("non-empty choice")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p.clamp(0.0, 1.0))
    }

    fn threshold(&mut self, s: &SignalTemplate) -> (f64, String) {
        let convertible: Vec<&String> = s.source_units.iter().collect();
        if self.spec.allows(ToolUse::ConvertUnit) && !convertible.is_empty() && self.chance(self.spec.tool_rate) {
            let from = convertible[self.rng.gen_range(0..convertible.len())].clone();
            let to = s.unit.clone().unwrap_or_default();
            let a = convert_unit(s.min, &to, &from).unwrap_or(s.min);
            let b = convert_unit(s.max, &to, &from).unwrap_or(s.max);
            let (lo, hi) = (a.min(b).ceil(), a.max(b).floor());
            if lo <= hi {
                let step = if hi - lo >= 1000.0 { 100.0 } else if hi - lo >= 100.0 { 10.0 } else { 1.0 };
                let k = self.rng.gen_range(0..=((hi - lo) / step) as u64);
                let v = ((lo / step).ceil() * step + k as f64 * step).min(hi);
                if let Ok(raw) = convert_unit(v, &from, &to) {
                    let out = round2(raw);
                    self.annotations.push(ToolAnnotation {
                        tool: ToolName::ConvertUnit.as_str().into(),
                        args: json!({"value": v, "from_unit": from, "to_unit": to}),
                        expected_output: out,
                        target_field: TargetField::Threshold,
                    });
                    return (out, format!("{} {from}", format_number(v).trim_end_matches(".0")));
                }
            }
        }
        let span = s.max - s.min;
        let raw = s.min + self.rng.gen::<f64>() * span;
        let v = if span >= 20.0 {
            raw.round().clamp(s.min.ceil(), s.max.floor().max(s.min.ceil()))
        } else {
            (raw * 10.0).round() / 10.0
        };
        let v = if v < s.min || v > s.max { s.min } else { v };
        let unit = s.unit.as_deref().map_or(String::new(), |u| format!(" {u}"));
        (v + 0.0, format!("{}{unit}", format_number(v + 0.0).trim_end_matches(".0")))
    }

    fn predicate(&mut self) -> (Predicate, String) {
        let s = self.spec.signals[self.rng.gen_range(0..self.spec.signals.len())].clone();
        let cmps = if s.comparators.is_empty() {
            vec![Comparator::Gt, Comparator::Ge, Comparator::Lt, Comparator::Le]
        } else {
            s.comparators.clone()
        };
        let cmp = self.pick(&cmps);
        let (value, value_text) = self.threshold(&s);
        let name = s.name.replace('_', " ");
        let text = match self.lang {
            Language::En => {
                let verb = match cmp {
                    Comparator::Gt => "is above",
                    Comparator::Ge => "is at least",
                    Comparator::Lt => "is below",
                    Comparator::Le => "is at most",
                    Comparator::Eq => "equals",
                };
                format!("the {name} {verb} {value_text}")
            }
            Language::Zh => {
                let verb = match cmp {
                    Comparator::Gt => "高于",
                    Comparator::Ge => "不低于",
                    Comparator::Lt => "低于",
                    Comparator::Le => "不高于",
                    Comparator::Eq => "等于",
                };
                format!("{name}{verb}{value_text}")
            }
        };
        (Predicate::new(s.name, cmp, value), text)
    }

    fn leaf(&mut self) -> (StlNode, String) {
        let (p, text) = self.predicate();
        if !std::mem::take(&mut self.edge_pending) {
            return (StlNode::Atom(p), text);
        }
        let rise = self.chance(0.5);
        let text = match (self.lang, rise) {
            (Language::En, true) => format!("the moment {text} starts to hold"),
            (Language::En, false) => format!("the moment {text} stops holding"),
            (Language::Zh, true) => format!("{text}开始成立时"),
            (Language::Zh, false) => format!("{text}不再成立时"),
        };
        (if rise { StlNode::Rise(p) } else { StlNode::Fall(p) }, text)
    }

    fn leaves(&mut self, n: usize) -> Vec<(StlNode, String)> {
        (0..n).map(|_| self.leaf()).collect()
    }

    /// Upper bound and its surface text, possibly stated in a tool-needing form.
    fn upper_bound(&mut self) -> (u32, String) {
        let [lo, hi] = self.spec.time_range;
        let lang = self.lang;
        let mut options = Vec::new();
        let first = !self.time_tool_used;
        if self.chain && first {
            if let Some(x) = self.chained_bound(lo, hi) {
                return x;
            }
        }
        if first && self.chance(self.spec.tool_rate) {
            for t in [ToolUse::ParseDuration, ToolUse::EvalMathExpr, ToolUse::CalcTimeDiff] {
                if self.spec.allows(t) {
                    options.push(t);
                }
            }
        }
        if let Some(&t) = options.choose(self.rng) {
            let made = match t {
                ToolUse::ParseDuration => self.duration_bound(lo, hi),
                ToolUse::EvalMathExpr => self.product_bound(lo, hi),
                _ => self.clock_bound(lo, hi),
            };
            if let Some(x) = made {
                self.time_tool_used = true;
                return x;
            }
        }
        let b = self.rng.gen_range(lo..=hi);
        (b, seconds_text(b, lang))
    }

    fn duration_bound(&mut self, lo: u32, hi: u32) -> Option<(u32, String)> {
        let (secs, text, arg) = self.duration_surface(lo, hi)?;
        self.annotations.push(ToolAnnotation {
            tool: ToolName::ParseDuration.as_str().into(),
            args: json!({ "text": arg }),
            expected_output: secs as f64,
            target_field: TargetField::Time,
        });
        Some((secs, text))
    }

    /// A whole number of minutes or hours inside [lo, hi].
    fn duration_surface(&mut self, lo: u32, hi: u32) -> Option<(u32, String, String)> {
        let mut units = Vec::new();
        for (size, en, zh) in [(3600u32, "hour", "小时"), (60, "minute", "分钟")] {
            let (a, b) = (lo.div_ceil(size), hi / size);
            if a <= b && b > 0 {
                units.push((size, en, zh, a.max(1), b));
            }
        }
        let &(size, en, zh, a, b) = units.choose(self.rng)?;
        let n = self.rng.gen_range(a..=b);
        let arg = format!("{n} {en}{}", if n == 1 { "" } else { "s" });
        let text = match self.lang {
            Language::En => arg.clone(),
            Language::Zh => format!("{n}{zh}"),
        };
        Some((n * size, text, arg))
    }

    fn product_bound(&mut self, lo: u32, hi: u32) -> Option<(u32, String)> {
        let f = self.rng.gen_range(2..=4u32);
        let (a, b) = (lo.div_ceil(f).max(1), hi / f);
        if a > b {
            return None;
        }
        let m = self.rng.gen_range(a..=b);
        self.annotations.push(ToolAnnotation {
            tool: ToolName::EvalMathExpr.as_str().into(),
            args: json!({ "expression": format!("{f}*{m}") }),
            expected_output: (f * m) as f64,
            target_field: TargetField::Time,
        });
        let text = match self.lang {
            Language::En => format!("{f} consecutive cycles of {}", seconds_text(m, Language::En)),
            Language::Zh => format!("{f}个{m}秒周期"),
        };
        Some((f * m, text))
    }

    fn clock_bound(&mut self, lo: u32, hi: u32) -> Option<(u32, String)> {
        let hi = hi.min(12 * 3600);
        if lo > hi {
            return None;
        }
        let d = self.rng.gen_range(lo..=hi);
        let start = self.rng.gen_range(6 * 3600..=11 * 3600) / 60 * 60;
        let day = self.rng.gen_range(1..=28);
        let (s, e) = (clock(start), clock(start + d));
        self.annotations.push(ToolAnnotation {
            tool: ToolName::CalcTimeDiff.as_str().into(),
            args: json!({ "text": format!("time interval between 2025-08-{day:02} {s} and 2025-08-{day:02} {e}") }),
            expected_output: d as f64,
            target_field: TargetField::Time,
        });
        let text = match self.lang {
            Language::En => format!("the window from {s} to {e}"),
            Language::Zh => format!("从{s}到{e}的时段"),
        };
        Some((d, text))
    }

    /// A duration fed through `parse_duration` and then multiplied.
    fn chained_bound(&mut self, lo: u32, hi: u32) -> Option<(u32, String)> {
        if !(self.spec.allows(ToolUse::ParseDuration) && self.spec.allows(ToolUse::EvalMathExpr)) {
            return None;
        }
        let f = self.rng.gen_range(2..=4u32);
        let (secs, surface, arg) = self.duration_surface(lo.div_ceil(f), hi / f)?;
        self.annotations.push(ToolAnnotation {
            tool: ToolName::ParseDuration.as_str().into(),
            args: json!({ "text": arg }),
            expected_output: secs as f64,
            target_field: TargetField::Intermediate,
        });
        self.annotations.push(ToolAnnotation {
            tool: ToolName::EvalMathExpr.as_str().into(),
            args: json!({ "expression": format!("{f}*{secs}") }),
            expected_output: (f * secs) as f64,
            target_field: TargetField::Time,
        });
        self.time_tool_used = true;
        let text = match self.lang {
            Language::En => format!("{f} consecutive cycles of {surface}"),
            Language::Zh => format!("{f}个{surface}的周期"),
        };
        Some((f * secs, text))
    }

    fn interval(&mut self) -> (Interval, String, bool) {
        let (b, b_text) = self.upper_bound();
        if b > 1 && self.chance(0.25) {
            let a = self.rng.gen_range(1..b);
            let a_text = seconds_text(a, self.lang);
            let text = match self.lang {
                Language::En => format!("between {a_text} and {b_text}"),
                Language::Zh => format!("{a_text}到{b_text}之间"),
            };
            return (Interval::new(a as f64, b as f64).unwrap(), text, true);
        }
        (Interval::new(0.0, b as f64).unwrap(), b_text, false)
    }

    fn temporal(&mut self, body: (StlNode, String)) -> (StlNode, String) {
        let ops = self.spec.unary_ops();
        let op = self.pick(&ops);
        let (iv, span, ranged) = self.interval();
        let (node, text) = body;
        let text = match (self.lang, op, ranged) {
            (Language::En, Operator::Globally, false) => format!("at all times within {span}, {text}"),
            (Language::En, Operator::Globally, true) => format!("at all times {span} from now, {text}"),
            (Language::En, Operator::Finally, false) => format!("at some point within {span}, {text}"),
            (Language::En, Operator::Finally, true) => format!("at some point {span} from now, {text}"),
            (Language::En, Operator::Historically, false) => format!("throughout the last {span}, {text}"),
            (Language::En, Operator::Historically, true) => format!("throughout the period {span} ago, {text}"),
            (Language::En, _, false) => format!("at least once in the last {span}, {text}"),
            (Language::En, _, true) => format!("at least once {span} ago, {text}"),
            (Language::Zh, Operator::Globally, _) => format!("在{span}内始终满足{text}"),
            (Language::Zh, Operator::Finally, _) => format!("在{span}内某一时刻满足{text}"),
            (Language::Zh, Operator::Historically, _) => format!("在过去{span}内一直满足{text}"),
            (Language::Zh, _, _) => format!("在过去{span}内曾经满足{text}"),
        };
        let node = match op {
            Operator::Globally => StlNode::globally(iv, node),
            Operator::Finally => StlNode::finally(iv, node),
            Operator::Historically => StlNode::historically(iv, node),
            _ => StlNode::once(iv, node),
        };
        (node, text)
    }

    fn binary_temporal(&mut self, op: Operator, left: (StlNode, String), right: (StlNode, String)) -> (StlNode, String) {
        let (iv, span, _) = self.interval();
        let text = match (self.lang, op) {
            (Language::En, Operator::Until) => format!("{} must hold until {}, within {span}", left.1, right.1),
            (Language::En, _) => format!("{} has held ever since {}, within the last {span}", left.1, right.1),
            (Language::Zh, Operator::Until) => format!("在{span}内{}一直保持直到{}", left.1, right.1),
            (Language::Zh, _) => format!("在过去{span}内自{}以来{}一直成立", right.1, left.1),
        };
        let node = if op == Operator::Until {
            StlNode::until(iv, left.0, right.0)
        } else {
            StlNode::since(iv, left.0, right.0)
        };
        (node, text)
    }

    fn junction(&mut self, conj: bool, parts: Vec<(StlNode, String)>) -> (StlNode, String) {
        let (nodes, texts): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        let text = match (self.lang, conj) {
            (Language::En, true) => {
                let (last, init) = texts.split_last().unwrap();
                format!("{} and {last}", init.join(", "))
            }
            (Language::En, false) => {
                let (last, init) = texts.split_last().unwrap();
                format!("either {} or {last}", init.join(", "))
            }
            (Language::Zh, true) => texts.join("并且"),
            (Language::Zh, false) => texts.join("或"),
        };
        (if conj { StlNode::And(nodes) } else { StlNode::Or(nodes) }, text)
    }

    fn imply(&mut self, cond: (StlNode, String), then: (StlNode, String)) -> (StlNode, String) {
        let text = match self.lang {
            Language::En => format!("if {}, then {}", cond.1, then.1),
            Language::Zh => format!("如果{}，则{}", cond.1, then.1),
        };
        (StlNode::imply(cond.0, then.0), text)
    }

    fn group(&mut self, n: usize, conj: bool) -> (StlNode, String) {
        if n == 1 {
            return self.leaf();
        }
        let parts = self.leaves(n);
        self.junction(conj, parts)
    }

    fn level(&mut self, level: u8) -> (StlNode, String) {
        self.edge_pending = level >= 2 && self.spec.edge_events && self.chance(0.5);
        self.chain = level == 6;
        match level {
            1 => {
                let p = self.leaf();
                self.temporal(p)
            }
            2 => {
                let n = self.rng.gen_range(2..=3);
                let binary = self.spec.binary_ops();
                if !binary.is_empty() && self.chance(0.5) {
                    let op = self.pick(&binary);
                    let left = self.leaf();
                    let right = self.group(n - 1, true);
                    self.binary_temporal(op, left, right)
                } else {
                    let conj = self.chance(0.6);
                    let g = self.group(n, conj);
                    self.temporal(g)
                }
            }
            3 => {
                let n = self.rng.gen_range(3..=5);
                let cond = self.leaf();
                let rest = self.group(n - 1, true);
                let body = if self.chance(0.5) {
                    self.imply(cond, rest)
                } else {
                    self.junction(false, vec![cond, rest])
                };
                self.temporal(body)
            }
            4 => {
                let n = self.rng.gen_range(4..=6);
                if self.chance(0.5) {
                    let cond = self.group(2, true);
                    let inner = self.group(n - 2, true);
                    let inner = self.temporal(inner);
                    let body = self.imply(cond, inner);
                    self.temporal(body)
                } else {
                    let first = self.group(2, true);
                    let first = self.temporal(first);
                    let second = self.group(n - 2, true);
                    let second = self.temporal(second);
                    self.junction(true, vec![first, second])
                }
            }
            _ => {
                let (lo, hi) = if level == 5 { (5, 7) } else { (6, 8) };
                let n = self.rng.gen_range(lo..=hi);
                let c = if level == 5 { 1 } else { 2 };
                let cond = self.group(c, true);
                let a = self.group(2, true);
                let a = self.temporal(a);
                let b = self.group(n - c - 2, false);
                let b = self.temporal(b);
                let then = self.junction(true, vec![a, b]);
                let body = self.imply(cond, then);
                self.temporal(body)
            }
        }
    }
}

fn finish(text: String, lang: Language) -> String {
    let mut chars = text.chars();
    let first = chars.next().map(|c| c.to_uppercase().collect::<String>()).unwrap_or_default();
    match lang {
        Language::En => format!("{first}{}.", chars.as_str()),
        Language::Zh => format!("{first}{}。", chars.as_str()),
    }
}

/// Generates `count` samples from a template.
///
/// The reference formula and tool annotations are fixed first and the text
/// is filled from them. Candidates that fail validation (for instance text
/// over the length limit) are redrawn. Output is identical for a given seed.
pub fn generate_samples(spec: &TemplateSpec, count: usize, seed: u64) -> Result<Vec<Sample>, ConfigError> {
    spec.check()?;
    let domain = scenario_domain(&spec.scenario).expect("checked");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels: Vec<u8> = match spec.complexity {
        Some(c) => vec![c; count],
        None => {
            let q = level_quotas(&spec.complexity_ratios.unwrap_or(COMPLEXITY_RATIOS), count);
            (1..=6u8).flat_map(|l| std::iter::repeat(l).take(q[l as usize - 1])).collect()
        }
    };
    levels.shuffle(&mut rng);
    let prefix = spec
        .id_prefix
        .clone()
        .unwrap_or_else(|| spec.scenario.replace(' ', "_").to_lowercase());
    let mut out = Vec::with_capacity(count);
    for (i, level) in levels.into_iter().enumerate() {
        let lang = spec.languages[rng.gen_range(0..spec.languages.len())];
        let mut made = None;
        for _ in 0..MAX_ATTEMPTS {
            let mut b = Builder {
                spec,
                lang,
                rng: &mut rng,
                annotations: Vec::new(),
                time_tool_used: false,
                edge_pending: false,
                chain: false,
            };
            let (reference, text) = b.level(level);
            let sample = Sample {
                id: format!("{prefix}-{i:05}"),
                language: lang,
                domain,
                scenario: spec.scenario.clone(),
                nl_text: finish(text, lang),
                reference,
                complexity: level,
                tool_annotations: b.annotations,
                split: None,
            };
            if validate_sample(&sample).is_empty() {
                made = Some(sample);
                break;
            }
        }
        out.push(made.ok_or_else(|| {
            ConfigError::Invalid(format!("template cannot produce a valid level-{level} sample"))
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn altitude_spec() -> TemplateSpec {
        TemplateSpec::from_json(
            r#"{
                "scenario": "altitude hold",
                "signals": [
                    {"name": "altitude", "min": 300, "max": 6000, "unit": "m", "source_units": ["ft"]},
                    {"name": "speed", "min": 40, "max": 200, "unit": "m/s", "source_units": ["kn"]},
                    {"name": "pitch", "min": -10, "max": 10}
                ],
                "operators": ["Globally", "Finally", "Until"],
                "time_range": [10, 3600],
                "tools": ["parse_duration", "convert_unit", "eval_math_expr", "calc_time_diff"],
                "edge_events": true
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn level_one_globally() {
        let spec = TemplateSpec {
            scenario: "boiler system".into(),
            signals: vec![SignalTemplate {
                name: "temperature".into(),
                min: 20.0,
                max: 90.0,
                unit: Some("C".into()),
                source_units: vec![],
                comparators: vec![],
            }],
            operators: vec!["Globally".into()],
            time_range: [10, 100],
            complexity: Some(1),
            tools: vec![],
            ..altitude_spec()
        };
        for s in generate_samples(&spec, 20, 3).unwrap() {
            assert_eq!(s.reference.operator(), Operator::Globally);
            assert_eq!(s.reference.operator_count(), 1);
            assert_eq!(s.reference.predicates().len(), 1);
            assert!(s.tool_annotations.is_empty());
        }
    }

    #[test]
    fn all_generated_samples_validate() {
        let xs = generate_samples(&altitude_spec(), 600, 11).unwrap();
        assert_eq!(xs.len(), 600);
        for s in &xs {
            assert_eq!(validate_sample(s), vec![], "{}", s.nl_text);
        }
        let chained = xs
            .iter()
            .filter(|s| s.tool_annotations.iter().any(|a| a.target_field == TargetField::Intermediate))
            .count();
        assert!(chained > 0);
        assert!(xs.iter().any(|s| s.language == Language::Zh));
    }

    #[test]
    fn ratios_and_determinism() {
        let a = generate_samples(&altitude_spec(), 200, 5).unwrap();
        let b = generate_samples(&altitude_spec(), 200, 5).unwrap();
        assert_eq!(super::super::write_jsonl(&a), super::super::write_jsonl(&b));
        let per_level: Vec<usize> = (1..=6).map(|l| a.iter().filter(|s| s.complexity == l).count()).collect();
        assert_eq!(per_level, vec![50, 50, 40, 30, 20, 10]);
    }

    #[test]
    fn bad_templates() {
        let mut spec = altitude_spec();
        spec.signals[0].min = 10.0;
        spec.signals[0].max = 5.0;
        assert!(generate_samples(&spec, 1, 0).is_err());
        let mut spec = altitude_spec();
        spec.scenario = "moon base".into();
        assert!(generate_samples(&spec, 1, 0).is_err());
        let mut spec = altitude_spec();
        spec.signals.clear();
        assert!(generate_samples(&spec, 1, 0).is_err());
    }

    #[test]
    fn converted_threshold_slot() {
        let spec = TemplateSpec {
            signals: vec![SignalTemplate {
                name: "altitude".into(),
                min: 3048.0,
                max: 3048.0,
                unit: Some("m".into()),
                source_units: vec!["ft".into()],
                comparators: vec![Comparator::Gt],
            }],
            tools: vec![ToolUse::ConvertUnit],
            tool_rate: 1.0,
            complexity: Some(1),
            ..altitude_spec()
        };
        let s = &generate_samples(&spec, 1, 0).unwrap()[0];
        assert_eq!(s.tool_annotations[0].expected_output, 3048.0);
        assert_eq!(s.tool_annotations[0].args["value"], json!(10000.0));
        assert_eq!(s.reference.predicates()[0].0.to_string(), "altitude>3048.0");
        assert!(s.nl_text.contains("10000 ft"));
    }
}
