//! Run the computation tools directly and through the transcript harness.

use serde_json::json;
use stlforge::tools::protocol::{HarnessStep, ToolHarness};
use stlforge::tools::run_tool;

fn main() {
    let calls = [
        ("parse_duration", json!("30 minutes")),
        ("convert_unit", json!([10000, "ft", "m"])),
        ("convert_unit", json!({"value": 200, "from_unit": "kn", "to_unit": "m/s"})),
        ("eval_math_expr", json!({"expression": "2*900"})),
        ("calc_time_diff", json!("time interval between 2025-08-01 8:00:00 and 2025-08-01 8:15:00")),
        ("convert_unit", json!([1, "parsec", "m"])),
    ];
    for (name, args) in &calls {
        match run_tool(name, args) {
            Ok(out) => println!("{name}({args}) = {}", out.render()),
            Err(e) => println!("{name}({args}) failed: {e}"),
        }
    }

    // A scripted "model" that emits one call, waits for the result, then answers.
    let harness = ToolHarness::default();
    let mut transcript = String::from(
        "<think>\nThe requirement uses \"30 minutes\", which should be converted to seconds.\n</think>\n\
         <tool_call>\nparse_duration(\"30 minutes\")\n</tool_call>",
    );
    loop {
        match harness.step(&transcript) {
            HarnessStep::Respond(block) => transcript.push_str(&block),
            HarnessStep::RoundLimitReached => break,
            HarnessStep::Idle => {
                if !transcript.contains("\"STL\"") {
                    transcript.push_str(
                        r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Leftaction":null,"Rightaction":"altitude>3048.0"}}"#,
                    );
                }
                break;
            }
        }
    }
    println!("--- transcript ---\n{transcript}");
}
