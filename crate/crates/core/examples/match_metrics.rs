//! Compare predictions with references and compute format and formula accuracy.

use stlforge::ast::parse_stl_json;
use stlforge::matcher::{evaluate_batch, mask_tree, tree_match, MatchConfig};

const REFERENCE: &str = r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Rightaction":{"Operation":"and","SubQueries":["altitude>3048.0","speed>=102.89"]}}}"#;

fn main() {
    let cfg = MatchConfig::default();
    let reference = parse_stl_json(REFERENCE).unwrap();
    let predictions = [
        ("swapped operands", r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Rightaction":{"Operation":"and","SubQueries":["speed>=102.89","altitude>3048.0"]}}}"#),
        ("within tolerance", r#"{"STL":{"Operation":"Finally","Time":[0,1800.05],"Rightaction":{"Operation":"and","SubQueries":["altitude>3048.05","speed>=102.89"]}}}"#),
        ("wrong bound", r#"{"STL":{"Operation":"Finally","Time":[0,1900],"Rightaction":{"Operation":"and","SubQueries":["altitude>3048.0","speed>=102.89"]}}}"#),
        ("wrong signal", r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Rightaction":{"Operation":"and","SubQueries":["altitude>3048.0","pitch>=102.89"]}}}"#),
        ("wrong root", r#"{"STL":{"Operation":"Globally","Time":[0,1800],"Rightaction":{"Operation":"and","SubQueries":["altitude>3048.0","speed>=102.89"]}}}"#),
        ("not json", "F[0,1800](altitude > 3048)"),
    ];

    for (label, text) in &predictions {
        match parse_stl_json(text) {
            Ok(p) => {
                let s = tree_match(&p, &reference, &cfg);
                let skeleton = tree_match(&mask_tree(&p), &mask_tree(&reference), &cfg);
                println!("{label:<17} score {:.3}  exact {:<5}  skeleton {}", s.value, s.exact, skeleton.exact);
            }
            Err(e) => println!("{label:<17} unparseable: {e}"),
        }
    }

    let report = evaluate_batch(
        predictions.iter().map(|(label, text)| (Some(label.to_string()), *text, &reference)),
        &cfg,
    );
    println!("format accuracy:  {:.3}", report.format_accuracy);
    println!("formula accuracy: {:.3}", report.formula_accuracy);
}
