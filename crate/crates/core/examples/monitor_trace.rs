//! Evaluate formulas over a sampled trace.

use stlforge::ast::parse_stl_json;
use stlforge::semantics::{evaluate, satisfies, Trace};

fn main() {
    let csv = "\
altitude,speed
2900,95
3000,99
3100,103
3150,104
3080,101
3020,98
";
    let trace = Trace::from_csv_reader(csv.as_bytes()).unwrap();

    let climb = parse_stl_json(
        r#"{"STL":{"Operation":"Finally","Time":[0,3],"Rightaction":{"Operation":"and","SubQueries":["altitude>3048.0","speed>=102.89"]}}}"#,
    )
    .unwrap();
    let hold = parse_stl_json(
        r#"{"STL":{"Operation":"Until","Time":[1,4],"Leftaction":"speed>90.0","Rightaction":"altitude<3050.0"}}"#,
    )
    .unwrap();
    let edge = parse_stl_json(r#"{"STL":{"Operation":"Rise","Rightaction":"speed>=102.89"}}"#).unwrap();
    let memory = parse_stl_json(
        r#"{"STL":{"Operation":"Once","Time":[0,2],"Rightaction":"speed>=103.0"}}"#,
    )
    .unwrap();

    for (name, f) in [("climb", &climb), ("hold", &hold), ("edge", &edge), ("memory", &memory)] {
        let row: String = evaluate(f, &trace)
            .unwrap()
            .iter()
            .map(|b| if *b { '1' } else { '.' })
            .collect();
        println!("{name:<7} {row}   {f}");
    }
    println!("climb at 0: {}", satisfies(&climb, &trace, 0).unwrap());

    let unknown = parse_stl_json(r#"{"STL":"heading>1.0"}"#).unwrap();
    println!("unknown signal: {}", satisfies(&unknown, &trace, 0).unwrap_err());
}
