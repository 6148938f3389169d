//! Duration parsing. Internal time is integer nanoseconds.

use crate::error::{Error, Result};

/// Parses `250ns`, `12.57us`, `1ms`, `2s` or a bare nanosecond count.
/// Fractional nanoseconds are rounded to the nearest integer.
pub fn parse_duration_ns(s: &str) -> Result<u64> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic() || c == 'µ').unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let scale = match unit {
        "" | "ns" => 1.0,
        "us" | "µs" => 1e3,
        "ms" => 1e6,
        "s" => 1e9,
        _ => return Err(Error::Domain(format!("unknown duration unit in {s:?}"))),
    };
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Domain(format!("bad duration {s:?}")))?;
    let ns = value * scale;
    if !ns.is_finite() || ns < 0.0 || ns > u64::MAX as f64 {
        return Err(Error::Domain(format!("duration out of range: {s:?}")));
    }
    Ok(ns.round() as u64)
}

pub fn parse_duration_us(s: &str) -> Result<f64> {
    parse_duration_ns(s).map(|ns| ns as f64 / 1e3)
}
