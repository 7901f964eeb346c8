//! `calc_time_diff`: seconds between two naive timestamps.

use std::sync::OnceLock;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use regex::Regex;

use super::ToolError;

fn timestamp_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?:(\d{4})-(\d{1,2})-(\d{1,2})(?:[ T]+))?\b(\d{1,2}):(\d{2})(?::(\d{2}))?\b")
            .expect("valid timestamp regex")
    })
}

#[derive(Debug, Clone, Copy)]
struct Stamp {
    date: Option<NaiveDate>,
    time: NaiveTime,
}

fn extract(text: &str) -> Result<Vec<Stamp>, ToolError> {
    let mut out = Vec::new();
    for caps in timestamp_re().captures_iter(text) {
        let num = |i: usize| caps.get(i).map(|m| m.as_str().parse::<u32>().unwrap_or(u32::MAX));
        let date = match (num(1), num(2), num(3)) {
            (Some(y), Some(m), Some(d)) => Some(
                NaiveDate::from_ymd_opt(y as i32, m, d)
                    .ok_or_else(|| ToolError::Exec(format!("invalid date {y}-{m}-{d}")))?,
            ),
            _ => None,
        };
        let (h, mi, s) = (num(4).unwrap(), num(5).unwrap(), num(6).unwrap_or(0));
        let time = NaiveTime::from_hms_opt(h, mi, s)
            .ok_or_else(|| ToolError::Exec(format!("invalid time {h}:{mi:02}:{s:02}")))?;
        out.push(Stamp { date, time });
    }
    Ok(out)
}

fn difference(start: Stamp, end: Stamp) -> Result<f64, ToolError> {
    // A missing date borrows the other timestamp's date (same day).
    let fallback = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    let sd = start.date.or(end.date).unwrap_or(fallback);
    let ed = end.date.or(start.date).unwrap_or(fallback);
    let diff = NaiveDateTime::new(ed, end.time) - NaiveDateTime::new(sd, start.time);
    let secs = diff.num_milliseconds() as f64 / 1000.0;
    if secs < 0.0 {
        return Err(ToolError::Exec(format!(
            "end precedes start by {} s",
            -secs
        )));
    }
    Ok(secs)
}

/// Seconds from the first to the second timestamp found in `text`.
pub fn calc_time_diff(text: &str) -> Result<f64, ToolError> {
    let stamps = extract(text)?;
    if stamps.len() < 2 {
        return Err(ToolError::Exec(format!(
            "expected two timestamps, found {} in `{text}`",
            stamps.len()
        )));
    }
    difference(stamps[0], stamps[1])
}

/// Seconds between an explicit `(start, end)` pair.
pub fn calc_time_diff_pair(start: &str, end: &str) -> Result<f64, ToolError> {
    let one = |t: &str| -> Result<Stamp, ToolError> {
        extract(t)?
            .into_iter()
            .next()
            .ok_or_else(|| ToolError::Exec(format!("no timestamp in `{t}`")))
    };
    difference(one(start)?, one(end)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_sentence() {
        let s = "time interval between 2025-08-01 8:00:00 and 2025-08-01 8:15:00";
        assert_eq!(calc_time_diff(s).unwrap(), 900.0);
    }

    #[test]
    fn identical_and_cross_midnight() {
        assert_eq!(calc_time_diff("from 10:00:00 to 10:00:00").unwrap(), 0.0);
        assert_eq!(
            calc_time_diff("between 2025-08-01 23:50:00 and 2025-08-02 00:10:00").unwrap(),
            1200.0
        );
        assert_eq!(calc_time_diff("08:00 until 09:30").unwrap(), 5400.0);
        assert_eq!(calc_time_diff_pair("2025-08-01 8:00:00", "2025-08-01 8:15:00").unwrap(), 900.0);
    }

    #[test]
    fn failures() {
        assert!(calc_time_diff("at 10:00:00").is_err());
        assert!(calc_time_diff("from 10:00:00 to 09:00:00").is_err());
        assert!(calc_time_diff("from 25:00:00 to 26:00:00").is_err());
        assert!(calc_time_diff("nothing here").is_err());
    }
}
