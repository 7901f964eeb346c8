use std::fmt;

use serde::{Deserialize, Serialize};

use super::SchemaError;

/// Comparison direction of an atomic predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
}

/// Absolute tolerance used when evaluating `==` on samples.
pub const EQ_SAMPLE_TOLERANCE: f64 = 1e-9;

impl Comparator {
    pub const ALL: [Comparator; 5] = [
        Comparator::Gt,
        Comparator::Ge,
        Comparator::Lt,
        Comparator::Le,
        Comparator::Eq,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Eq => "==",
        }
    }

    /// Whether `lhs <cmp> rhs` holds.
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => (lhs - rhs).abs() <= EQ_SAMPLE_TOLERANCE,
        }
    }

    // Longest spellings first so `>=` never splits into `>` followed by `=`.
    const SPELLINGS: [(&'static str, Comparator); 8] = [
        (">=", Comparator::Ge),
        ("<=", Comparator::Le),
        ("==", Comparator::Eq),
        ("\u{2265}", Comparator::Ge),
        ("\u{2264}", Comparator::Le),
        (">", Comparator::Gt),
        ("<", Comparator::Lt),
        ("=", Comparator::Eq),
    ];

    fn strip_prefix(text: &str) -> Option<(Comparator, &str)> {
        Self::SPELLINGS
            .iter()
            .find_map(|(spelling, cmp)| text.strip_prefix(spelling).map(|rest| (*cmp, rest)))
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A parsed atomic constraint `signal <cmp> threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub signal: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

impl Predicate {
    pub fn new(signal: impl Into<String>, comparator: Comparator, threshold: f64) -> Self {
        Predicate {
            signal: signal.into(),
            comparator,
            threshold,
        }
    }

    /// The atom every predicate collapses to under skeleton masking.
    pub fn placeholder() -> Self {
        Predicate::new(PLACEHOLDER_SIGNAL, Comparator::Gt, 0.0)
    }

    pub fn is_placeholder(&self) -> bool {
        self.signal == PLACEHOLDER_SIGNAL
    }

    /// Whether the predicate holds for a single sample value.
    pub fn holds(&self, sample: f64) -> bool {
        self.comparator.holds(sample, self.threshold)
    }
}

pub(crate) const PLACEHOLDER_SIGNAL: &str = "_P_";

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.signal,
            self.comparator,
            format_number(self.threshold)
        )
    }
}

/// Shortest round-trip decimal rendering with a forced decimal point.
///
/// `3048.0` renders as `3048.0`, `102.89` as `102.89`, `-0.0` as `0.0`.
pub fn format_number(value: f64) -> String {
    let value = if value == 0.0 { 0.0 } else { value };
    let mut text = format!("{value}");
    if value.is_finite() && !text.contains('.') {
        text.push_str(".0");
    }
    text
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Parses the predicate-leaf string form, e.g. `altitude>3048.0` or `velocity >= 3`.
pub fn parse_predicate(text: &str) -> Result<Predicate, SchemaError> {
    let bad = |position: usize, reason: &str| SchemaError::BadPredicate {
        text: text.to_string(),
        position,
        reason: reason.to_string(),
    };

    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    let mut chars = body.char_indices();
    match chars.next() {
        Some((_, c)) if is_ident_start(c) => {}
        _ => return Err(bad(lead, "expected a signal identifier")),
    }
    let signal_end = chars
        .find(|(_, c)| !is_ident_continue(*c))
        .map(|(i, _)| i)
        .unwrap_or(body.len());
    let signal = &body[..signal_end];

    let after_signal = &body[signal_end..];
    let cmp_text = after_signal.trim_start();
    let cmp_pos = lead + signal_end + (after_signal.len() - cmp_text.len());
    let (comparator, rest) =
        Comparator::strip_prefix(cmp_text).ok_or_else(|| bad(cmp_pos, "expected a comparator"))?;

    let number = rest.trim();
    let num_pos = cmp_pos + (cmp_text.len() - rest.len()) + (rest.len() - rest.trim_start().len());
    if number.is_empty() {
        return Err(bad(num_pos, "missing threshold"));
    }
    let threshold: f64 = number
        .parse()
        .map_err(|_| bad(num_pos, "threshold is not a decimal number"))?;
    if !threshold.is_finite() {
        return Err(bad(num_pos, "threshold must be finite"));
    }
    Ok(Predicate::new(signal, comparator, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_listing_predicates() {
        let p = parse_predicate("altitude>3048.0").unwrap();
        assert_eq!(p, Predicate::new("altitude", Comparator::Gt, 3048.0));
        let p = parse_predicate("speed>=102.89").unwrap();
        assert_eq!(p, Predicate::new("speed", Comparator::Ge, 102.89));
    }

    #[test]
    fn whitespace_and_integer_thresholds_normalize() {
        let p = parse_predicate("  velocity >= 3 ").unwrap();
        assert_eq!(p.to_string(), "velocity>=3.0");
        assert_eq!(parse_predicate("temp<-5").unwrap().to_string(), "temp<-5.0");
        assert_eq!(parse_predicate("x = 2").unwrap().comparator, Comparator::Eq);
        assert_eq!(parse_predicate("x\u{2264}2").unwrap().comparator, Comparator::Le);
    }

    #[test]
    fn rejects_malformed_predicates() {
        for bad in ["x>>5", "", ">5", "x", "x>", "x>abc", "x>inf", "x>5 and y<3", "3x>1"] {
            assert!(
                matches!(parse_predicate(bad), Err(SchemaError::BadPredicate { .. })),
                "{bad:?} should be rejected"
            );
        }
    }

    #[test]
    fn failure_position_points_at_the_bad_part() {
        match parse_predicate("x>>5") {
            Err(SchemaError::BadPredicate { position, .. }) => assert_eq!(position, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn number_formatting_forces_a_decimal_point() {
        assert_eq!(format_number(3048.0), "3048.0");
        assert_eq!(format_number(102.89), "102.89");
        assert_eq!(format_number(-0.0), "0.0");
        assert_eq!(format_number(1e21), "1000000000000000000000.0");
        assert_eq!(format_number(0.1 + 0.2), "0.30000000000000004");
    }
}
