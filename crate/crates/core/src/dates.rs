//! Calendar text forms used by the trace and worksheet formats.
//!
//! Accepted: `Mon DD YY`, `Mon DD YY HH:MM:SS` and `Mon DD YY HH:MM:SS.mmm`,
//! all UTC. Two-digit years pivot into 1970-2069; four-digit years are taken
//! as written.

use chrono::{DateTime, Datelike, NaiveDate, NaiveTime, Timelike};

use crate::model::Timestamp;

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

pub(crate) fn month_number(token: &str) -> Option<u32> {
    MONTHS
        .iter()
        .position(|m| m.eq_ignore_ascii_case(token))
        .map(|i| i as u32 + 1)
}

pub(crate) fn is_month(token: &str) -> bool {
    month_number(token).is_some()
}

fn parse_year(token: &str) -> Option<i32> {
    if !token.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let value: i32 = token.parse().ok()?;
    match token.len() {
        2 if value >= 70 => Some(1900 + value),
        2 => Some(2000 + value),
        4 => Some(value),
        _ => None,
    }
}

fn parse_time(token: &str) -> Option<NaiveTime> {
    let (hms, frac) = match token.split_once('.') {
        Some((hms, frac)) => (hms, Some(frac)),
        None => (token, None),
    };
    let mut parts = hms.split(':');
    let mut next = || -> Option<u32> {
        let p = parts.next()?;
        if p.len() != 2 || !p.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        p.parse().ok()
    };
    let (h, m, s) = (next()?, next()?, next()?);
    if parts.next().is_some() {
        return None;
    }
    let milli = match frac {
        None => 0,
        Some(f) if f.len() == 3 && f.bytes().all(|b| b.is_ascii_digit()) => f.parse().ok()?,
        Some(_) => return None,
    };
    NaiveTime::from_hms_milli_opt(h, m, s, milli)
}

/// Parses a calendar timestamp whose parts are already split on whitespace.
pub(crate) fn parse_calendar(text: &str) -> Option<Timestamp> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let (month, day, year, time) = match parts.as_slice() {
        [m, d, y] => (*m, *d, *y, None),
        [m, d, y, t] => (*m, *d, *y, Some(*t)),
        _ => return None,
    };
    let month = month_number(month)?;
    if day.is_empty() || day.len() > 2 || !day.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let day: u32 = day.parse().ok()?;
    let year = parse_year(year)?;
    let date = NaiveDate::from_ymd_opt(year, month, day)?;
    let time = match time {
        Some(t) => parse_time(t)?,
        None => NaiveTime::MIN,
    };
    let ms = date.and_time(time).and_utc().timestamp_millis();
    Timestamp::from_epoch_ms(ms).ok()
}

fn to_datetime(ts: Timestamp) -> DateTime<chrono::Utc> {
    DateTime::from_timestamp_millis(ts.epoch_ms()).expect("Timestamp range is within chrono's")
}

fn year_text(year: i32) -> String {
    if (1970..=2069).contains(&year) {
        format!("{:02}", year % 100)
    } else {
        format!("{:04}", year)
    }
}

/// `Mon DD YY`, dropping the time of day.
pub fn render_day(ts: Timestamp) -> String {
    let dt = to_datetime(ts);
    format!(
        "{} {:02} {}",
        MONTHS[dt.month0() as usize],
        dt.day(),
        year_text(dt.year())
    )
}

/// `Mon DD YY HH:MM:SS.mmm`; reads back to the same millisecond.
pub fn render_full(ts: Timestamp) -> String {
    let dt = to_datetime(ts);
    format!(
        "{} {:02}:{:02}:{:02}.{:03}",
        render_day(ts),
        dt.hour(),
        dt.minute(),
        dt.second(),
        dt.timestamp_subsec_millis()
    )
}
