//! Score a group of rollouts for one requirement: rewards, advantages and
//! per-token labels.

use stlforge::ast::parse_stl_json;
use stlforge::reward::{score_inputs, whitespace_spans, RewardConfig, RolloutInput};
use stlforge::rollout::Reference;

const ANSWER: &str = r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Leftaction":null,"Rightaction":"altitude>3048.0"}}"#;

fn stage(call: &str, result: &str) -> String {
    format!("<tool_call>\n{call}\n</tool_call>\n<tool_result>\n{result}\n</tool_result>\n")
}

fn main() {
    let reference = Reference::formula(parse_stl_json(ANSWER).unwrap());
    let think = "<think>\nConvert the duration and the altitude.\n</think>\n";
    let exact = format!(
        "{think}{}{}{ANSWER}",
        stage("parse_duration(\"30 minutes\")", "1800"),
        stage("convert_unit(10000, \"ft\", \"m\")", "3048.0")
    );
    let wrong_bound = format!(
        "{think}{}{ANSWER}",
        stage("parse_duration(\"20 minutes\")", "1200")
    )
    .replace("[0,1800]", "[0,1200]");
    let bad_tool = format!(
        "{think}{}{}",
        stage("lookup_altitude(\"10000 ft\")", "error: unknown tool"),
        ANSWER.replace("3048.0", "3000.0")
    );
    let no_tools = ANSWER.to_string();
    let broken = "<tool_result>\n1800\n</tool_result>\nI am done.".to_string();

    let inputs: Vec<RolloutInput> = [exact, wrong_bound, bad_tool, no_tools, broken]
        .into_iter()
        .map(RolloutInput::new)
        .collect();
    let refs = vec![reference; inputs.len()];
    let reports = score_inputs(&inputs, &refs, &RewardConfig::default()).unwrap();

    for (input, r) in inputs.iter().zip(&reports) {
        println!(
            "rollout {}: r_fmt {} s_tree {:.3} r_out {:.3} c_final {}  A_out {:+.3}",
            r.index, r.r_fmt, r.s_tree, r.r_out, r.c_final, r.a_out
        );
        for (s, (p, a)) in r.stages.iter().zip(r.r_proc.iter().zip(&r.a_proc)) {
            let why = s.verdict.failure.map_or(String::from("ok"), |f| format!("{f:?}"));
            println!("    stage {} {:<36} {:<14} r_proc {p:.1}  A_proc {a:+.3}", s.index, s.role, why);
        }
        if let Some(e) = &r.parse_error {
            println!("    parse error: {e}");
        }
        let tokens = whitespace_spans(&input.transcript).len();
        let live = r.token_mask.iter().filter(|m| **m == 1).count();
        println!("    tokens {tokens}, trained {live}");
    }
}
