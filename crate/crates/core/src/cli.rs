//! Command-line front end. [`run`] holds all logic so it can be driven
//! from tests; the binary only forwards process arguments.
//!
//! Exit codes: 0 success or SAT, 1 a negative domain answer (UNSAT,
//! invalid samples, failed tool, metric below threshold), 2 an
//! operational error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::ast::parse_stl_json;
use crate::bench::{generate_samples, read_jsonl, validate_record, TemplateSpec};
use crate::matcher::{evaluate_batch, MatchConfig, DEFAULT_TOLERANCE};
use crate::reward::{score_jsonl, RewardConfig, DEFAULT_GROUP_SIZE, DEFAULT_KAPPA, DEFAULT_TAU};
use crate::rollout::Reference;
use crate::semantics::{evaluate, Trace};
use crate::tools::protocol::DEFAULT_MAX_TOOL_ROUNDS;
use crate::tools::{run_tool, ToolArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Numeric tolerance for bounds and thresholds.
    #[arg(long, global = true, env = "STLFORGE_TOLERANCE", default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Process-reward factor when the final formula is wrong.
    #[arg(long, global = true, env = "STLFORGE_TAU", default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Cap on partial tree-match credit.
    #[arg(long, global = true, env = "STLFORGE_KAPPA", default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,
    /// Expected rollouts per group.
    #[arg(long, global = true, env = "STLFORGE_GROUP_SIZE", default_value_t = DEFAULT_GROUP_SIZE)]
    pub group_size: usize,
    #[arg(long, global = true, env = "STLFORGE_MAX_TOOL_ROUNDS", default_value_t = DEFAULT_MAX_TOOL_ROUNDS)]
    pub max_tool_rounds: usize,
    #[arg(long, global = true, env = "STLFORGE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, env = "STLFORGE_FORMAT", value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Write data here instead of stdout.
    #[arg(long, global = true, env = "STLFORGE_OUTPUT")]
    pub output: Option<PathBuf>,
}

impl GlobalOpts {
    pub fn reward_config(&self) -> RewardConfig {
        RewardConfig {
            tau: self.tau,
            kappa: self.kappa,
            tolerance: self.tolerance,
            group_size: self.group_size,
            max_tool_rounds: self.max_tool_rounds,
            ..RewardConfig::default()
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stlforge", version, about = "Structured STL toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a JSONL dataset and report violations by sample id.
    Validate { dataset: PathBuf },
    /// Format and formula accuracy of predictions against references.
    Metrics {
        predictions: PathBuf,
        references: PathBuf,
        /// Exit 1 when formula accuracy falls below this value.
        #[arg(long)]
        min_formula_accuracy: Option<f64>,
    },
    /// Evaluate a formula on a trace (CSV or JSON).
    Monitor {
        formula: PathBuf,
        trace: PathBuf,
        #[arg(long, default_value_t = 0)]
        at: usize,
    },
    /// Score rollouts and emit one reward report per line.
    Reward {
        rollouts: PathBuf,
        /// Dataset used to resolve `sample_id` references.
        dataset: Option<PathBuf>,
    },
    /// Run one tool. Arguments are a JSON value, or words where numbers
    /// stay numeric and `key=value` is a named argument.
    Tool {
        name: String,
        #[arg(allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// Generate samples from a JSON template.
    Gen {
        template: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    output: Option<PathBuf>,
}

impl Io<'_> {
    fn emit(&mut self, data: &str) -> Result<(), String> {
        match &self.output {
            Some(p) => fs::write(p, data).map_err(|e| format!("{}: {e}", p.display())),
            None => self.out.write_all(data.as_bytes()).map_err(|e| e.to_string()),
        }
    }

    fn note(&mut self, msg: &str) {
        let _ = writeln!(self.err, "{msg}");
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn lines_of<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| serde_json::to_string(&x).expect("serializable") + "\n")
        .collect()
}

/// Parses arguments and runs, writing data to `out` and diagnostics to `err`.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            code
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_from(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut io = Io {
        out,
        err,
        output: cli.global.output.clone(),
    };
    let g = &cli.global;
    if let Err(e) = g.reward_config().validate() {
        io.note(&format!("error: {e}"));
        return EXIT_ERROR;
    }
    let result = match &cli.command {
        Command::Validate { dataset } => cmd_validate(dataset, g, &mut io),
        Command::Metrics {
            predictions,
            references,
            min_formula_accuracy,
        } => cmd_metrics(predictions, references, *min_formula_accuracy, g, &mut io),
        Command::Monitor { formula, trace, at } => cmd_monitor(formula, trace, *at, &mut io),
        Command::Reward { rollouts, dataset } => cmd_reward(rollouts, dataset.as_deref(), g, &mut io),
        Command::Tool { name, args } => cmd_tool(name, args, &mut io),
        Command::Gen { template, count } => cmd_gen(template, *count, g, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            io.note(&format!("error: {msg}"));
            EXIT_ERROR
        }
    }
}

fn cmd_validate(dataset: &Path, g: &GlobalOpts, io: &mut Io) -> Result<i32, String> {
    let text = read(dataset)?;
    let mut report = Map::new();
    let mut total = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let (id, violations) = validate_record(line);
        if !violations.is_empty() {
            let key = id.unwrap_or_else(|| format!("line:{}", n + 1));
            report.insert(key, serde_json::to_value(violations).expect("serializable"));
        }
    }
    io.note(&format!("{} of {total} samples invalid", report.len()));
    let code = if report.is_empty() { EXIT_OK } else { EXIT_NEGATIVE };
    match g.format {
        OutputFormat::Json => io.emit(&pretty(&report))?,
        OutputFormat::Jsonl => io.emit(&lines_of(
            report.into_iter().map(|(id, v)| json!({"id": id, "violations": v})),
        ))?,
    }
    Ok(code)
}

/// A prediction line: raw model text, a bare STL document, or an object
/// with a `prediction` field.
fn prediction_text(line: &str) -> String {
    let Ok(v) = serde_json::from_str::<Value>(line) else {
        return line.to_string();
    };
    match &v {
        Value::String(s) => s.clone(),
        Value::Object(m) if m.contains_key("prediction") => match &m["prediction"] {
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        },
        _ => line.to_string(),
    }
}

fn prediction_id(line: &str) -> Option<String> {
    let v: Value = serde_json::from_str(line).ok()?;
    match v.get("id")? {
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

fn cmd_metrics(
    predictions: &Path,
    references: &Path,
    min_formula: Option<f64>,
    g: &GlobalOpts,
    io: &mut Io,
) -> Result<i32, String> {
    let pred_text = read(predictions)?;
    let ref_text = read(references)?;
    let mut refs = Vec::new();
    for (n, line) in ref_text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).map_err(|e| format!("references line {}: {e}", n + 1))?;
        let id = v.get("id").map(|x| x.as_str().map_or_else(|| x.to_string(), String::from));
        let formula = match v.get("reference") {
            Some(r) => Reference::from_value(r),
            None => Reference::from_value(&v),
        }
        .map_err(|e| format!("references line {}: {e}", n + 1))?
        .formula;
        refs.push((id, formula));
    }
    let pred_lines: Vec<&str> = pred_text.lines().collect();
    if pred_lines.len() != refs.len() {
        return Err(format!(
            "{} predictions but {} references",
            pred_lines.len(),
            refs.len()
        ));
    }
    let items: Vec<(Option<String>, String, &crate::ast::StlNode)> = pred_lines
        .iter()
        .zip(&refs)
        .map(|(line, (id, f))| (prediction_id(line).or_else(|| id.clone()), prediction_text(line), f))
        .collect();
    let report = evaluate_batch(
        items.iter().map(|(id, t, f)| (id.clone(), t.as_str(), *f)),
        &MatchConfig::with_tolerance(g.tolerance),
    );
    match g.format {
        OutputFormat::Json => io.emit(&pretty(&json!({
            "format_accuracy": report.format_accuracy,
            "formula_accuracy": report.formula_accuracy,
        })))?,
        OutputFormat::Jsonl => io.emit(&lines_of(&report.per_sample))?,
    }
    let below = min_formula.is_some_and(|m| report.formula_accuracy < m);
    Ok(if below { EXIT_NEGATIVE } else { EXIT_OK })
}

fn cmd_monitor(formula: &Path, trace: &Path, at: usize, io: &mut Io) -> Result<i32, String> {
    let f = parse_stl_json(&read(formula)?).map_err(|e| e.to_string())?;
    let t = Trace::load(trace).map_err(|e| e.to_string())?;
    if at >= t.len() {
        return Err(format!("index {at} is outside a trace of length {}", t.len()));
    }
    let verdicts = evaluate(&f, &t).map_err(|e| e.to_string())?;
    let sat = verdicts[at];
    io.emit(if sat { "SAT\n" } else { "UNSAT\n" })?;
    Ok(if sat { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_reward(rollouts: &Path, dataset: Option<&Path>, g: &GlobalOpts, io: &mut Io) -> Result<i32, String> {
    let text = read(rollouts)?;
    let samples = match dataset {
        Some(p) => read_jsonl(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?,
        None => Vec::new(),
    };
    let cfg = g.reward_config();
    let reports = score_jsonl(&text, &samples, &cfg).map_err(|e| e.to_string())?;
    let mut sizes: Vec<(&str, usize)> = Vec::new();
    for r in &reports {
        let id = r.group_id.as_deref().unwrap_or_default();
        match sizes.iter_mut().find(|(g, _)| *g == id) {
            Some((_, n)) => *n += 1,
            None => sizes.push((id, 1)),
        }
    }
    for (id, n) in sizes.iter().filter(|(_, n)| *n != cfg.group_size) {
        io.note(&format!("group `{id}` has {n} rollouts, expected {}", cfg.group_size));
    }
    io.emit(&lines_of(&reports))?;
    Ok(EXIT_OK)
}

/// Turns command-line words into tool arguments.
pub fn tool_args(words: &[String]) -> ToolArgs {
    if let [one] = words {
        if let Ok(v @ (Value::Object(_) | Value::Array(_))) = serde_json::from_str::<Value>(one) {
            return ToolArgs::from_value(&v);
        }
    }
    let scalar = |w: &str| match w.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => json!(w),
    };
    let mut args = ToolArgs::default();
    for w in words {
        match w.split_once('=') {
            Some((k, v)) if !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                args.named.insert(k.to_string(), scalar(v));
            }
            _ => args.positional.push(scalar(w)),
        }
    }
    args
}

fn cmd_tool(name: &str, words: &[String], io: &mut Io) -> Result<i32, String> {
    let args = tool_args(words);
    let value = Value::Array(args.positional.clone());
    let result = if args.named.is_empty() {
        run_tool(name, &value)
    } else {
        crate::tools::ToolCall::from_parts(name, &args).and_then(|c| c.execute())
    };
    match result {
        Ok(out) => {
            io.emit(&format!("{}\n", out.render()))?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            io.note(&format!("error: {e}"));
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn cmd_gen(template: &Path, count: usize, g: &GlobalOpts, io: &mut Io) -> Result<i32, String> {
    let spec = TemplateSpec::from_json(&read(template)?).map_err(|e| e.to_string())?;
    let samples = generate_samples(&spec, count, g.seed).map_err(|e| e.to_string())?;
    io.emit(&lines_of(&samples))?;
    Ok(EXIT_OK)
}
