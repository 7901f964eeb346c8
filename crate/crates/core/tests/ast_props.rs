mod common;

use proptest::prelude::*;
use serde_json::{json, Map, Value};

use common::{random_tree, rng, TreeGen};
use stlforge::ast::{
    canonicalize, parse_predicate, parse_stl_json, parse_stl_value, serialize_stl_json, Comparator,
    SchemaError, StlNode,
};

fn arb_tree(depth: usize, integral: bool) -> impl Strategy<Value = StlNode> {
    any::<u64>().prop_map(move |seed| {
        let mut g = TreeGen::wide(depth);
        g.integral_bounds = integral;
        random_tree(&mut rng(seed), &g)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialize_then_parse_is_identity(t in arb_tree(6, true)) {
        let back = parse_stl_json(&serialize_stl_json(&t)).unwrap();
        prop_assert_eq!(&back, &canonicalize(&t).unwrap());
        prop_assert_eq!(back, t);
    }

    #[test]
    fn fractional_bounds_survive_round_trip(t in arb_tree(4, false)) {
        prop_assert_eq!(parse_stl_json(&serialize_stl_json(&t)).unwrap(), t);
    }

    #[test]
    fn canonicalize_is_idempotent(t in arb_tree(6, true)) {
        let once = canonicalize(&t).unwrap();
        prop_assert_eq!(canonicalize(&once).unwrap(), once);
    }

    #[test]
    fn serialized_intervals_are_ordered(t in arb_tree(6, true)) {
        let v: Value = serde_json::from_str(&serialize_stl_json(&t)).unwrap();
        let mut stack = vec![&v];
        while let Some(node) = stack.pop() {
            match node {
                Value::Object(m) => {
                    if let Some(Value::Array(b)) = m.get("Time") {
                        prop_assert!(b[0].as_f64().unwrap() <= b[1].as_f64().unwrap());
                    }
                    stack.extend(m.values());
                }
                Value::Array(items) => stack.extend(items),
                _ => {}
            }
        }
    }

    #[test]
    fn thresholds_round_trip_through_text(x in -1.0e6f64..1.0e6) {
        let t = StlNode::atom("speed", Comparator::Ge, x);
        prop_assert_eq!(parse_stl_json(&serialize_stl_json(&t)).unwrap(), t);
    }
}

const FIELDS: [&str; 5] = ["Time", "Leftaction", "Rightaction", "SubQueries", "Predicate"];

fn expected_shape(op: &str) -> [bool; 5] {
    match op {
        "Globally" | "Finally" | "Historically" | "Once" => [true, false, true, false, false],
        "Until" | "Since" => [true, true, true, false, false],
        "imply" => [false, true, true, false, false],
        "and" | "or" => [false, false, false, true, false],
        "Not" | "Rise" | "Fall" => [false, false, true, false, false],
        "Atom" => [false, false, false, false, true],
        _ => unreachable!(),
    }
}

#[test]
fn every_operator_accepts_exactly_one_shape() {
    let ops = [
        "Globally", "Finally", "Until", "Since", "Historically", "Once", "Rise", "Fall", "imply",
        "and", "or", "Not", "Atom",
    ];
    let values = [
        json!([0, 5]),
        json!("x_pos>1.0"),
        json!("y_pos<2.0"),
        json!(["x_pos>1.0", "y_pos<2.0"]),
        json!("x_pos>1.0"),
    ];
    for op in ops {
        let mut accepted = Vec::new();
        for mask in 0u32..32 {
            let mut m = Map::new();
            m.insert("Operation".into(), json!(op));
            let shape: [bool; 5] = std::array::from_fn(|f| mask >> f & 1 == 1);
            for (f, on) in shape.iter().enumerate() {
                if *on {
                    m.insert(FIELDS[f].into(), values[f].clone());
                }
            }
            let result = parse_stl_value(&json!({ "STL": Value::Object(m) }));
            if result.is_ok() {
                accepted.push(shape);
            } else {
                assert!(
                    matches!(
                        result,
                        Err(SchemaError::BadArity { .. } | SchemaError::MissingField { .. })
                    ),
                    "{op} {shape:?}: {result:?}"
                );
            }
        }
        assert_eq!(accepted, vec![expected_shape(op)], "{op}");
    }
}

#[test]
fn reversed_or_negative_intervals_are_rejected() {
    for time in [json!([5, 2]), json!([-1, 3]), json!(["x", 3])] {
        let doc = json!({"STL": {"Operation": "Globally", "Time": time, "Rightaction": "speed>1.0"}});
        let err = parse_stl_value(&doc).unwrap_err();
        assert!(matches!(err, SchemaError::BadInterval { .. }), "{err:?}");
    }
}

#[test]
fn wire_forms() {
    let root_atom = StlNode::atom("temp", Comparator::Gt, 25.0);
    assert_eq!(serialize_stl_json(&root_atom), r#"{"STL":"temp>25.0"}"#);
    assert_eq!(parse_stl_json(r#"{"STL":"altitude>0"}"#).unwrap(), StlNode::atom("altitude", Comparator::Gt, 0.0));

    let and3 = parse_stl_json(
        r#"{"STL":{"Operation":"and","SubQueries":["speed>1","temp<2","pitch>=3"]}}"#,
    )
    .unwrap();
    let v: Value = serde_json::from_str(&serialize_stl_json(&and3)).unwrap();
    assert_eq!(v["STL"]["SubQueries"], json!(["speed>1.0", "temp<2.0", "pitch>=3.0"]));

    let g = parse_stl_json(r#"{"STL":{"Operation":"FINALLY","Time":[0,9],"Rightaction":"speed>1"}}"#).unwrap();
    let v: Value = serde_json::from_str(&serialize_stl_json(&g)).unwrap();
    assert_eq!(v["STL"]["Operation"], "Finally");
    assert_eq!(v["STL"]["Leftaction"], Value::Null);
}

#[test]
fn predicate_text() {
    let p = parse_predicate("altitude>3048.0").unwrap();
    assert_eq!((p.signal.as_str(), p.comparator, p.threshold), ("altitude", Comparator::Gt, 3048.0));
    let p = parse_predicate("speed>=102.89").unwrap();
    assert_eq!((p.comparator, p.threshold), (Comparator::Ge, 102.89));
    assert_eq!(parse_predicate("velocity >= 3").unwrap().to_string(), "velocity>=3.0");
    assert!(matches!(parse_predicate("x>>5"), Err(SchemaError::BadPredicate { .. })));
}

#[test]
fn malformed_text_is_a_json_error() {
    assert!(matches!(parse_stl_json("{\"STL\": "), Err(SchemaError::Json(_))));
    assert!(matches!(parse_stl_json("{}"), Err(SchemaError::MissingField { .. })));
}
