mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use common::{noisy_corpus, permute, random_tree, rng, templates, TreeGen};
use stlforge::bench::{
    apply_similarity_clusters, generate_samples, make_splits, nl_key, read_jsonl,
    symbolic_dedup, tool_use_type, tree_key, validate_record, validate_sample, write_jsonl,
    Domain, Sample, Split, SplitMode, COMPLEXITY_RATIOS,
};

fn pair_key(s: &Sample) -> (String, String) {
    (nl_key(&s.nl_text), tree_key(&s.reference))
}

#[test]
fn dedup_reaches_a_fixpoint() {
    for seed in 0..3 {
        let corpus = noisy_corpus(seed, 2000);
        let once = symbolic_dedup(&corpus);
        assert_eq!(symbolic_dedup(&once), once);

        let keys: BTreeSet<_> = corpus.iter().map(pair_key).collect();
        assert_eq!(once.len(), keys.len());
        let kept: BTreeSet<_> = once.iter().map(pair_key).collect();
        assert_eq!(kept, keys);

        // First occurrences survive, in input order.
        let mut seen = BTreeSet::new();
        let firsts: Vec<&str> = corpus
            .iter()
            .filter(|s| seen.insert(pair_key(s)))
            .map(|s| s.id.as_str())
            .collect();
        let ids: Vec<&str> = once.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, firsts);
    }
}

#[test]
fn clusters_keep_their_most_complex_member() {
    let corpus = noisy_corpus(9, 60);
    let clusters: Vec<Vec<String>> = corpus
        .chunks(6)
        .map(|c| c.iter().map(|s| s.id.clone()).collect())
        .collect();
    let kept = apply_similarity_clusters(&corpus, &clusters);
    assert_eq!(kept.len(), clusters.len());
    for (chunk, s) in corpus.chunks(6).zip(&kept) {
        let max = chunk.iter().map(|c| c.complexity).max().unwrap();
        let first = chunk.iter().find(|c| c.complexity == max).unwrap();
        assert_eq!(s.id, first.id);
    }
}

fn generated() -> Vec<Sample> {
    templates()
        .iter()
        .enumerate()
        .flat_map(|(i, t)| generate_samples(t, 200, i as u64).unwrap())
        .collect()
}

#[test]
fn generator_output_is_valid_and_serializable() {
    let samples = generated();
    assert_eq!(samples.len(), 1200);
    for s in &samples {
        assert_eq!(validate_sample(s), vec![], "{}: {}", s.id, s.nl_text);
    }
    let text = write_jsonl(&samples);
    for line in text.lines() {
        let (id, violations) = validate_record(line);
        assert!(id.is_some());
        assert!(violations.is_empty(), "{line}: {violations:?}");
    }
    assert_eq!(read_jsonl(&text).unwrap(), samples);

    let domains: BTreeSet<Domain> = samples.iter().map(|s| s.domain).collect();
    assert_eq!(domains.len(), 6);
    let tools: BTreeSet<String> = samples.iter().map(tool_use_type).collect();
    for t in ["none", "parse_duration", "convert_unit", "eval_math_expr", "calc_time_diff", "chained"] {
        assert!(tools.contains(t), "{t}");
    }
}

#[test]
fn generator_follows_level_ratios() {
    for spec in templates() {
        let samples = generate_samples(&spec, 400, 3).unwrap();
        let mut counts = [0usize; 6];
        for s in &samples {
            counts[s.complexity as usize - 1] += 1;
        }
        let want: Vec<usize> = COMPLEXITY_RATIOS.iter().map(|r| (r * 400.0).round() as usize).collect();
        assert_eq!(counts.to_vec(), want);
        assert_eq!(generate_samples(&spec, 400, 3).unwrap(), samples);
    }
}

#[test]
fn corrupted_records_name_their_violation() {
    let good = write_jsonl(&generated()[..1]);
    let v: serde_json::Value = serde_json::from_str(good.trim()).unwrap();
    let kinds = |edit: &dyn Fn(&mut serde_json::Value)| {
        let mut doc = v.clone();
        edit(&mut doc);
        let (_, vs) = validate_record(&doc.to_string());
        vs.iter().map(|x| x.kind()).collect::<Vec<_>>()
    };
    assert_eq!(kinds(&|d| d["nl_text"] = "short".into()), vec!["NlLength"]);
    assert_eq!(kinds(&|d| d["scenario"] = "moon base".into()), vec!["UnknownScenario"]);
    assert_eq!(kinds(&|d| d["scenario"] = "welding".into()), vec!["ScenarioDomainMismatch"]);
    assert_eq!(kinds(&|d| d["complexity"] = 9.into()), vec!["BadComplexity"]);
    assert!(kinds(&|d| {
        d["reference"] = serde_json::json!({"STL": "wingspan>3.0"});
    })
    .contains(&"UnknownSignal"));
    assert!(kinds(&|d| {
        d["reference"] = serde_json::json!({"STL": {"Operation": "Globally", "Time": [9, 1], "Rightaction": "speed>1.0"}});
    })
    .contains(&"BadInterval"));
    assert_eq!(kinds(&|d| { d.as_object_mut().unwrap().remove("reference"); }), vec!["MissingField"]);
    assert_eq!(validate_record("{not json").1[0].kind(), "Json");
}

#[test]
fn standard_split_is_stratified() {
    let samples = generated();
    let a = make_splits(&samples, &SplitMode::Standard, 42).unwrap();
    assert_eq!(a.splits.len(), samples.len());
    assert_eq!(make_splits(&samples, &SplitMode::Standard, 42).unwrap(), a);
    assert_ne!(make_splits(&samples, &SplitMode::Standard, 43).unwrap(), a);

    let mut strata: BTreeMap<_, [usize; 3]> = BTreeMap::new();
    for (s, sp) in samples.iter().zip(&a.splits) {
        let key = (s.language, s.domain, s.complexity, tool_use_type(s));
        strata.entry(key).or_default()[*sp as usize] += 1;
    }
    for (key, [train, val, test]) in strata {
        let n = (train + val + test) as f64;
        assert!((val as f64 - 0.1 * n).abs() < 1.0, "{key:?}");
        assert!((test as f64 - 0.1 * n).abs() < 1.0, "{key:?}");
        assert!((train as f64 - 0.8 * n).abs() < 2.0, "{key:?}");
    }
    let n = samples.len() as f64;
    assert!((a.count(Split::Val) as f64 - 0.1 * n).abs() < 1.0);
    assert!((a.count(Split::Test) as f64 - 0.1 * n).abs() < 1.0);
}

#[test]
fn held_out_scenarios_never_reach_training() {
    let mut samples = generated();
    let mut landing = templates().pop().unwrap();
    landing.scenario = "takeoff landing".into();
    samples.extend(generate_samples(&landing, 100, 77).unwrap());
    let held = ["takeoff landing"];
    let mode = SplitMode::ScenarioHeldOut {
        scenarios: held.iter().map(|s| s.to_string()).collect(),
    };
    let a = make_splits(&samples, &mode, 5).unwrap();
    for (s, sp) in samples.iter().zip(&a.splits) {
        if held.contains(&s.scenario.as_str()) {
            assert_ne!(*sp, Split::Train, "{}", s.id);
        }
    }
    let held_count = samples.iter().filter(|s| held.contains(&s.scenario.as_str())).count();
    assert_eq!(held_count, 100);
    assert!(a.count(Split::Val) + a.count(Split::Test) >= held_count);

    let only_driving = SplitMode::ScenarioHeldOut { scenarios: vec!["ACC".into()] };
    assert!(make_splits(&samples, &only_driving, 5).is_err());

    let unknown = SplitMode::ScenarioHeldOut { scenarios: vec!["moon base".into()] };
    assert!(make_splits(&samples, &unknown, 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_key_ignores_operand_order(seed in any::<u64>()) {
        let t = random_tree(&mut rng(seed), &TreeGen::wide(6));
        prop_assert_eq!(tree_key(&permute(&t, &mut rng(!seed))), tree_key(&t));
    }
}
