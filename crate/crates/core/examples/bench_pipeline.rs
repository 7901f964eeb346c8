//! Generate a small dataset from a template, then validate, deduplicate
//! and split it.

use stlforge::bench::{
    generate_samples, make_splits, symbolic_dedup, validate_sample, write_jsonl, Split, SplitMode,
    TemplateSpec,
};

fn main() {
    let spec = TemplateSpec::from_json(include_str!("data/altitude_template.json")).unwrap();
    let mut samples = generate_samples(&spec, 40, 7).unwrap();
    let mut other = spec.clone();
    other.scenario = "takeoff landing".into();
    samples.extend(generate_samples(&other, 40, 8).unwrap());

    let invalid = samples.iter().filter(|s| !validate_sample(s).is_empty()).count();
    println!("generated {} samples, {invalid} invalid", samples.len());
    for s in samples.iter().take(3) {
        println!("  [{}] L{} {}\n       {}", s.id, s.complexity, s.nl_text, s.reference);
    }

    let mut with_copy = samples.clone();
    let mut copy = samples[0].clone();
    copy.id = "copy".into();
    copy.nl_text = format!("  {}  ", copy.nl_text.to_uppercase());
    with_copy.push(copy);
    let unique = symbolic_dedup(&with_copy);
    println!("dedup: {} -> {}", with_copy.len(), unique.len());

    let held = SplitMode::ScenarioHeldOut {
        scenarios: vec!["takeoff landing".into()],
    };
    let assignment = make_splits(&unique, &held, 42).unwrap();
    println!(
        "held-out split: train {} / val {} / test {}",
        assignment.count(Split::Train),
        assignment.count(Split::Val),
        assignment.count(Split::Test)
    );
    let labelled = assignment.apply(&unique);
    let first_line = write_jsonl(&labelled[..1]);
    println!("first record: {}", first_line.trim_end());
}
