//! `parse_duration`: natural-language durations to seconds.

use super::ToolError;

fn unit_seconds(unit: &str) -> Option<f64> {
    let s = match unit {
        "ms" | "msec" | "millisecond" | "milliseconds" => 0.001,
        "s" | "sec" | "secs" | "second" | "seconds" => 1.0,
        "min" | "mins" | "minute" | "minutes" => 60.0,
        "h" | "hr" | "hrs" | "hour" | "hours" => 3600.0,
        "d" | "day" | "days" => 86_400.0,
        _ => return None,
    };
    Some(s)
}

fn number_word(word: &str) -> Option<f64> {
    let n = match word {
        "a" | "an" | "one" => 1.0,
        "two" => 2.0,
        "three" => 3.0,
        "four" => 4.0,
        "five" => 5.0,
        "six" => 6.0,
        "seven" => 7.0,
        "eight" => 8.0,
        "nine" => 9.0,
        "ten" => 10.0,
        "fifteen" => 15.0,
        "twenty" => 20.0,
        "thirty" => 30.0,
        "forty" => 40.0,
        "fifty" => 50.0,
        "sixty" => 60.0,
        _ => return None,
    };
    Some(n)
}

/// Splits `30min` / `1.5h` into number and unit parts.
fn split_glued(token: &str) -> Option<(f64, &str)> {
    let idx = token.find(|c: char| c.is_ascii_alphabetic())?;
    if idx == 0 {
        return None;
    }
    let n: f64 = token[..idx].parse().ok()?;
    Some((n, &token[idx..]))
}

fn parse_phrase(phrase: &str) -> Result<f64, ToolError> {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    let fail = |detail: &str| ToolError::Exec(format!("{detail} in duration phrase `{phrase}`"));
    let (count, unit_word) = match words.as_slice() {
        ["half", "a" | "an", unit] => (0.5, *unit),
        [single] => split_glued(single).ok_or_else(|| fail("no numeric token"))?,
        [num, unit] => {
            let n = num
                .parse::<f64>()
                .ok()
                .or_else(|| number_word(num))
                .ok_or_else(|| fail("no numeric token"))?;
            (n, *unit)
        }
        [] => return Err(fail("empty phrase")),
        _ => return Err(fail("unrecognized phrase")),
    };
    let unit = unit_seconds(unit_word)
        .ok_or_else(|| ToolError::Exec(format!("unrecognized duration unit `{unit_word}`")))?;
    if !count.is_finite() || count < 0.0 {
        return Err(fail("negative or non-finite amount"));
    }
    Ok(count * unit)
}

/// Total seconds for phrases like `30 minutes`, `half an hour` or
/// `1 hour and 15 minutes`.
pub fn parse_duration(text: &str) -> Result<f64, ToolError> {
    let lowered = text
        .trim()
        .trim_matches(|c| c == '"' || c == '\'')
        .to_lowercase()
        .replace(',', " and ");
    let mut total = 0.0;
    let mut any = false;
    for phrase in lowered.split(" and ") {
        let phrase = phrase.trim();
        if phrase.is_empty() {
            continue;
        }
        total += parse_phrase(phrase)?;
        any = true;
    }
    if !any {
        return Err(ToolError::Exec(format!("no duration found in `{text}`")));
    }
    Ok(total)
}
