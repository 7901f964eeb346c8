use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{canonicalize, parse_predicate, Interval, Operator, Predicate, SchemaError, StlNode};

const KEY_ROOT: &str = "STL";
const KEY_OP: &str = "Operation";
const KEY_TIME: &str = "Time";
const KEY_LEFT: &str = "Leftaction";
const KEY_RIGHT: &str = "Rightaction";
const KEY_SUBS: &str = "SubQueries";
const KEY_PRED: &str = "Predicate";

/// Parses a `{"STL": ...}` document into a canonical tree.
pub fn parse_stl_json(text: &str) -> Result<StlNode, SchemaError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SchemaError::Json(e.to_string()))?;
    parse_stl_value(&value)
}

/// Same as [`parse_stl_json`] for an already-decoded JSON value.
pub fn parse_stl_value(value: &Value) -> Result<StlNode, SchemaError> {
    let root = match value {
        Value::Object(map) => map.get(KEY_ROOT).ok_or_else(|| SchemaError::MissingField {
            field: KEY_ROOT.into(),
            path: "$".into(),
        })?,
        _ => return Err(SchemaError::Json("top level must be a JSON object".into())),
    };
    let node = node_from_value(root, KEY_ROOT)?;
    canonicalize(&node)
}

/// Compact JSON text for a tree, field order as in the wire schema.
pub fn serialize_stl_json(node: &StlNode) -> String {
    serialize_stl_value(node).to_string()
}

pub fn serialize_stl_value(node: &StlNode) -> Value {
    let mut root = Map::new();
    root.insert(KEY_ROOT.into(), node_to_value(node));
    Value::Object(root)
}

impl Serialize for StlNode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_stl_value(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StlNode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        parse_stl_value(&value).map_err(serde::de::Error::custom)
    }
}

fn present<'a>(map: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    match map.get(key) {
        None | Some(Value::Null) => None,
        Some(Value::Array(a)) if a.is_empty() && key == KEY_SUBS => None,
        Some(v) => Some(v),
    }
}

fn number_field(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn parse_interval(v: &Value, path: &str) -> Result<Interval, SchemaError> {
    let bad = |detail: String| SchemaError::BadInterval {
        path: path.to_string(),
        detail,
    };
    let items = v
        .as_array()
        .ok_or_else(|| bad(format!("expected [a, b], got {v}")))?;
    if items.len() != 2 {
        return Err(bad(format!("expected 2 bounds, got {}", items.len())));
    }
    let lo = number_field(&items[0]).ok_or_else(|| bad(format!("non-numeric bound {}", items[0])))?;
    let hi = number_field(&items[1]).ok_or_else(|| bad(format!("non-numeric bound {}", items[1])))?;
    Interval::new(lo, hi).map_err(|e| match e {
        SchemaError::BadInterval { detail, .. } => bad(detail),
        other => other,
    })
}

fn predicate_leaf(text: &str) -> Result<StlNode, SchemaError> {
    if Operator::from_name(text) == Some(Operator::True) {
        return Ok(StlNode::True);
    }
    parse_predicate(text).map(StlNode::Atom)
}

fn node_from_value(v: &Value, path: &str) -> Result<StlNode, SchemaError> {
    let map = match v {
        Value::String(s) => return predicate_leaf(s),
        Value::Object(map) => map,
        other => {
            return Err(SchemaError::BadArity {
                operation: String::from("?"),
                path: path.to_string(),
                detail: format!("expected an operator object or predicate string, got {other}"),
            })
        }
    };
    let op_name = match map.get(KEY_OP) {
        Some(Value::String(s)) => s.as_str(),
        Some(other) => {
            return Err(SchemaError::UnknownOperator {
                name: other.to_string(),
                path: path.to_string(),
            })
        }
        None => {
            return Err(SchemaError::MissingField {
                field: KEY_OP.into(),
                path: path.to_string(),
            })
        }
    };
    let op = Operator::from_name(op_name).ok_or_else(|| SchemaError::UnknownOperator {
        name: op_name.to_string(),
        path: path.to_string(),
    })?;

    let arity = |detail: &str| SchemaError::BadArity {
        operation: op.name().to_string(),
        path: path.to_string(),
        detail: detail.to_string(),
    };
    let missing = |field: &str| SchemaError::MissingField {
        field: field.to_string(),
        path: path.to_string(),
    };

    let time = present(map, KEY_TIME);
    let left = present(map, KEY_LEFT);
    let right = present(map, KEY_RIGHT);
    let subs = present(map, KEY_SUBS);
    let pred = present(map, KEY_PRED);

    // Shape gate: each operator kind accepts exactly one combination of child fields.
    let (want_left, want_right, want_subs) = match op {
        Operator::Until | Operator::Since | Operator::Imply => (true, true, false),
        Operator::And | Operator::Or => (false, false, true),
        Operator::Atom | Operator::True => (false, false, false),
        _ => (false, true, false),
    };
    if left.is_some() && !want_left {
        return Err(arity("unexpected Leftaction"));
    }
    if right.is_some() && !want_right {
        return Err(arity("unexpected Rightaction"));
    }
    if subs.is_some() && !want_subs {
        return Err(arity("unexpected SubQueries"));
    }
    if pred.is_some() && op != Operator::Atom {
        return Err(arity("unexpected Predicate"));
    }
    if time.is_some() && !op.is_temporal() {
        return Err(arity("Time is only allowed on temporal operators"));
    }
    let interval = if op.is_temporal() {
        let t = time.ok_or_else(|| missing(KEY_TIME))?;
        Some(parse_interval(t, &format!("{path}.{KEY_TIME}"))?)
    } else {
        None
    };
    let child = |v: Option<&Value>, key: &str| -> Result<Box<StlNode>, SchemaError> {
        let v = v.ok_or_else(|| missing(key))?;
        node_from_value(v, &format!("{path}.{key}")).map(Box::new)
    };
    let edge_predicate = || -> Result<Predicate, SchemaError> {
        match *child(right, KEY_RIGHT)? {
            StlNode::Atom(p) => Ok(p),
            _ => Err(arity("Rise/Fall take a single atomic predicate")),
        }
    };

    Ok(match op {
        Operator::True => StlNode::True,
        Operator::Atom => {
            let text = pred
                .and_then(Value::as_str)
                .ok_or_else(|| missing(KEY_PRED))?;
            StlNode::Atom(parse_predicate(text)?)
        }
        Operator::And | Operator::Or => {
            let items = subs
                .ok_or_else(|| missing(KEY_SUBS))?
                .as_array()
                .ok_or_else(|| arity("SubQueries must be a list"))?;
            if items.len() < 2 {
                return Err(arity(&format!(
                    "needs at least 2 SubQueries, got {}",
                    items.len()
                )));
            }
            let children = items
                .iter()
                .enumerate()
                .map(|(i, c)| node_from_value(c, &format!("{path}.{KEY_SUBS}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            if op == Operator::And {
                StlNode::And(children)
            } else {
                StlNode::Or(children)
            }
        }
        Operator::Not => StlNode::Not(child(right, KEY_RIGHT)?),
        Operator::Rise => StlNode::Rise(edge_predicate()?),
        Operator::Fall => StlNode::Fall(edge_predicate()?),
        Operator::Imply => StlNode::Imply(child(left, KEY_LEFT)?, child(right, KEY_RIGHT)?),
        Operator::Globally => StlNode::Globally(interval.unwrap(), child(right, KEY_RIGHT)?),
        Operator::Finally => StlNode::Finally(interval.unwrap(), child(right, KEY_RIGHT)?),
        Operator::Historically => {
            StlNode::Historically(interval.unwrap(), child(right, KEY_RIGHT)?)
        }
        Operator::Once => StlNode::Once(interval.unwrap(), child(right, KEY_RIGHT)?),
        Operator::Until => StlNode::Until(
            interval.unwrap(),
            child(left, KEY_LEFT)?,
            child(right, KEY_RIGHT)?,
        ),
        Operator::Since => StlNode::Since(
            interval.unwrap(),
            child(left, KEY_LEFT)?,
            child(right, KEY_RIGHT)?,
        ),
    })
}

fn bound_to_value(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        Value::from(x)
    }
}

fn node_to_value(node: &StlNode) -> Value {
    let mut m = Map::new();
    let op = node.operator();
    match node {
        StlNode::True => return Value::String(op.name().into()),
        StlNode::Atom(p) => return Value::String(p.to_string()),
        _ => {}
    }
    m.insert(KEY_OP.into(), Value::String(op.name().into()));
    if let Some(i) = node.interval() {
        m.insert(
            KEY_TIME.into(),
            Value::Array(vec![bound_to_value(i.lo()), bound_to_value(i.hi())]),
        );
    }
    match node {
        StlNode::And(cs) | StlNode::Or(cs) => {
            m.insert(KEY_SUBS.into(), Value::Array(cs.iter().map(node_to_value).collect()));
        }
        StlNode::Rise(p) | StlNode::Fall(p) => {
            m.insert(KEY_LEFT.into(), Value::Null);
            m.insert(KEY_RIGHT.into(), Value::String(p.to_string()));
        }
        StlNode::Imply(l, r) | StlNode::Until(_, l, r) | StlNode::Since(_, l, r) => {
            m.insert(KEY_LEFT.into(), node_to_value(l));
            m.insert(KEY_RIGHT.into(), node_to_value(r));
        }
        StlNode::Not(c)
        | StlNode::Globally(_, c)
        | StlNode::Finally(_, c)
        | StlNode::Historically(_, c)
        | StlNode::Once(_, c) => {
            m.insert(KEY_LEFT.into(), Value::Null);
            m.insert(KEY_RIGHT.into(), node_to_value(c));
        }
        StlNode::True | StlNode::Atom(_) => unreachable!(),
    }
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Comparator;
    use serde_json::json;

    const LISTING: &str = r#"{
  "STL": {
    "Operation": "Finally",
    "Time": [0, 1800],
    "Leftaction": null,
    "Rightaction": {
      "Operation": "and",
      "SubQueries": [
        "altitude>3048.0",
        "speed>=102.89"
      ]
    }
  }
}"#;

    fn listing_tree() -> StlNode {
        StlNode::finally(
            Interval::new(0.0, 1800.0).unwrap(),
            StlNode::And(vec![
                StlNode::atom("altitude", Comparator::Gt, 3048.0),
                StlNode::atom("speed", Comparator::Ge, 102.89),
            ]),
        )
    }

    #[test]
    fn parses_the_schema_listing() {
        assert_eq!(parse_stl_json(LISTING).unwrap(), listing_tree());
    }

    #[test]
    fn serializes_the_schema_listing_field_for_field() {
        let expected: Value = serde_json::from_str(LISTING).unwrap();
        assert_eq!(serialize_stl_value(&listing_tree()), expected);
        assert_eq!(
            serialize_stl_json(&listing_tree()),
            r#"{"STL":{"Operation":"Finally","Time":[0,1800],"Leftaction":null,"Rightaction":{"Operation":"and","SubQueries":["altitude>3048.0","speed>=102.89"]}}}"#
        );
    }

    #[test]
    fn atom_root_serializes_as_bare_string() {
        let t = StlNode::atom("temp", Comparator::Gt, 25.0);
        assert_eq!(serialize_stl_json(&t), r#"{"STL":"temp>25.0"}"#);
        assert_eq!(parse_stl_json(r#"{"STL":"altitude>0"}"#).unwrap(), StlNode::atom("altitude", Comparator::Gt, 0.0));
    }

    #[test]
    fn boolean_children_keep_order() {
        let t = StlNode::Or(vec![
            StlNode::atom("a_pos", Comparator::Gt, 1.0),
            StlNode::atom("b_pos", Comparator::Gt, 2.0),
            StlNode::atom("c_pos", Comparator::Gt, 3.0),
        ]);
        let v = serialize_stl_value(&t);
        assert_eq!(
            v["STL"]["SubQueries"],
            json!(["a_pos>1.0", "b_pos>2.0", "c_pos>3.0"])
        );
    }

    #[test]
    fn operator_names_are_case_folded() {
        let t = parse_stl_json(
            r#"{"STL":{"Operation":"FINALLY","Time":[0,5],"Rightaction":"velocity >= 3"}}"#,
        )
        .unwrap();
        assert_eq!(
            t,
            StlNode::finally(
                Interval::new(0.0, 5.0).unwrap(),
                StlNode::atom("velocity", Comparator::Ge, 3.0)
            )
        );
    }

    #[test]
    fn reversed_interval_is_rejected() {
        let err = parse_stl_json(
            r#"{"STL":{"Operation":"Globally","Time":[5,2],"Leftaction":null,"Rightaction":"x>1"}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, SchemaError::BadInterval { .. }), "{err:?}");
        let err = parse_stl_json(r#"{"STL":{"Operation":"Globally","Time":[-1,2],"Rightaction":"x>1"}}"#)
            .unwrap_err();
        assert!(matches!(err, SchemaError::BadInterval { .. }), "{err:?}");
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(parse_stl_json("{"), Err(SchemaError::Json(_))));
        assert!(matches!(parse_stl_json("[]"), Err(SchemaError::Json(_))));
        assert!(matches!(parse_stl_json("{}"), Err(SchemaError::MissingField { .. })));
        assert!(matches!(
            parse_stl_json(r#"{"STL":{"Time":[0,1]}}"#),
            Err(SchemaError::MissingField { .. })
        ));
        assert!(matches!(
            parse_stl_json(r#"{"STL":{"Operation":"Globally","Rightaction":"x>1"}}"#),
            Err(SchemaError::MissingField { .. })
        ));
        assert!(matches!(
            parse_stl_json(r#"{"STL":{"Operation":"and","SubQueries":["x>1"]}}"#),
            Err(SchemaError::BadArity { .. })
        ));
        assert!(matches!(
            parse_stl_json(r#"{"STL":{"Operation":"and","SubQueries":["x>1","y>>2"]}}"#),
            Err(SchemaError::BadPredicate { .. })
        ));
        assert!(matches!(
            parse_stl_json(r#"{"STL":{"Operation":"Next","Rightaction":"x>1"}}"#),
            Err(SchemaError::UnknownOperator { .. })
        ));
        assert!(matches!(
            parse_stl_json(r#"{"STL":{"Operation":"Rise","Rightaction":{"Operation":"Not","Rightaction":"x>1"}}}"#),
            Err(SchemaError::BadArity { .. })
        ));
        assert!(matches!(
            parse_stl_json(r#"{"STL":{"Operation":"imply","Time":[0,1],"Leftaction":"x>1","Rightaction":"y>1"}}"#),
            Err(SchemaError::BadArity { .. })
        ));
    }

    #[test]
    fn numeric_strings_in_time_are_converted() {
        let t = parse_stl_json(r#"{"STL":{"Operation":"Once","Time":["0","30"],"Rightaction":"x>1"}}"#)
            .unwrap();
        assert_eq!(t.interval(), Some(Interval::new(0.0, 30.0).unwrap()));
    }

    #[test]
    fn object_atoms_and_true_leaves() {
        let t = parse_stl_json(
            r#"{"STL":{"Operation":"Until","Time":[0,3],"Leftaction":"true","Rightaction":{"Operation":"Atom","Predicate":"x>0"}}}"#,
        )
        .unwrap();
        assert_eq!(
            t,
            StlNode::until(
                Interval::new(0.0, 3.0).unwrap(),
                StlNode::True,
                StlNode::atom("x", Comparator::Gt, 0.0)
            )
        );
    }

    #[test]
    fn fractional_bounds_survive_round_trip() {
        let t = StlNode::finally(Interval::new(0.0, 1800.05).unwrap(), StlNode::atom("x", Comparator::Gt, 1.0));
        let text = serialize_stl_json(&t);
        assert!(text.contains("1800.05"), "{text}");
        assert_eq!(parse_stl_json(&text).unwrap(), t);
    }
}
