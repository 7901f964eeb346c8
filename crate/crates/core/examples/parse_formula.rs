//! Parse an STL JSON tree, inspect it, and write it back out.

use stlforge::ast::{canonicalize, parse_stl_json, serialize_stl_json, StlNode};

fn main() {
    let text = r#"{
        "STL": {
            "Operation": "Globally",
            "Time": [0, 120],
            "Rightaction": {
                "Operation": "imply",
                "Leftaction": {"Operation": "Rise", "Rightaction": "Airspeed>=102.89"},
                "Rightaction": {
                    "Operation": "Finally",
                    "Time": ["0", "30"],
                    "Rightaction": {"Operation": "and", "SubQueries": ["pitch<15", "altitude > 3048"]}
                }
            }
        }
    }"#;

    let tree = parse_stl_json(text).expect("well-formed tree");
    println!("formula:    {tree}");
    println!("depth:      {}", tree.depth());
    println!("operators:  {}", tree.operator_count());
    for (p, edge) in tree.predicates() {
        let edge = edge.map_or(String::new(), |e| format!(" (under {})", e.name()));
        println!("predicate:  {p}{edge}");
    }

    let wire = serialize_stl_json(&tree);
    println!("wire form:  {wire}");
    let again = parse_stl_json(&wire).unwrap();
    assert_eq!(again, tree);
    assert_eq!(canonicalize(&again).unwrap(), tree);

    let bad = r#"{"STL": {"Operation": "and", "SubQueries": ["speed<3.0"]}}"#;
    match parse_stl_json(bad) {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected:   {e}"),
    }

    let built = StlNode::finally(
        stlforge::Interval::new(0.0, 1800.0).unwrap(),
        StlNode::atom("altitude", stlforge::ast::Comparator::Gt, 3048.0),
    );
    println!("built:      {}", serialize_stl_json(&built));
}
