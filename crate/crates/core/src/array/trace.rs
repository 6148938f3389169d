//! Access-trace replay.
//!
//! Traces are CSV with header `t_ns,op,bank,row,col,value_hex`. `op` is `R`
//! (read), `W` (write) or `F` (refresh the addressed row; `col` is ignored).
//! `value_hex` is the raw INT8 value as two hex digits; it is required for
//! writes and optional for reads, where it is compared with the read-back
//! value.

use std::io::{Read, Write};

use serde::Serialize;

use super::{Address, MixedArray};
use crate::codec::{self, EncodedByte};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceOp {
    Read,
    Write,
    Refresh,
}

impl TraceOp {
    fn as_char(self) -> char {
        match self {
            TraceOp::Read => 'R',
            TraceOp::Write => 'W',
            TraceOp::Refresh => 'F',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub t_ns: u64,
    pub op: TraceOp,
    pub addr: Address,
    pub value: Option<i8>,
}

fn parse_hex_byte(s: &str) -> Option<i8> {
    let s = s.trim();
    let s = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    if s.is_empty() || s.len() > 2 {
        return None;
    }
    u8::from_str_radix(s, 16).ok().map(|b| b as i8)
}

pub fn parse_trace<R: Read>(input: R, name: &str) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header_ok = rdr
        .headers()
        .map(|h| h.iter().take(5).eq(["t_ns", "op", "bank", "row", "col"]))
        .unwrap_or(false);
    if !header_ok {
        return Err(Error::parse(name, 1, "expected header t_ns,op,bank,row,col,value_hex"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(name, line, e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize, what: &str| -> Result<u64> {
            field(k)
                .parse::<u64>()
                .map_err(|_| Error::parse(name, line, format!("bad {what} {:?}", field(k))))
        };
        let t_ns = num(0, "t_ns")?;
        let op = match field(1) {
            "R" | "r" => TraceOp::Read,
            "W" | "w" => TraceOp::Write,
            "F" | "f" => TraceOp::Refresh,
            other => return Err(Error::parse(name, line, format!("unknown op {other:?}"))),
        };
        let addr = Address::new(
            num(2, "bank")? as usize,
            num(3, "row")? as usize,
            num(4, "col")? as usize,
        );
        let value = match field(5) {
            "" => None,
            s => Some(parse_hex_byte(s).ok_or_else(|| Error::parse(name, line, format!("bad value_hex {s:?}")))?),
        };
        if op == TraceOp::Write && value.is_none() {
            return Err(Error::parse(name, line, "write without value_hex"));
        }
        out.push(TraceRecord { t_ns, op, addr, value });
    }
    Ok(out)
}

/// One line of the replay log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayEvent {
    pub t_ns: u64,
    pub op: char,
    pub bank: usize,
    pub row: usize,
    pub col: usize,
    pub value_hex: String,
    pub sensed_hex: String,
    pub mismatch: bool,
    /// Scheduled row refreshes run before this access.
    pub refresh_events: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub reads: u64,
    pub writes: u64,
    pub explicit_refreshes: u64,
    pub scheduled_refreshes: u64,
    pub mismatches: u64,
    pub duration_ns: u64,
    /// Zero fraction of all stored bits written by the trace.
    pub written_zero_fraction: f64,
}

/// Replays `records` against `array`. With `encoder` off, raw bytes are
/// stored without the conditional flip.
pub fn replay(
    array: &mut MixedArray,
    records: &[TraceRecord],
    encoder: bool,
) -> Result<(Vec<ReplayEvent>, ReplaySummary)> {
    let to_cells = |v: i8| {
        if encoder {
            codec::encode(v)
        } else {
            codec::map_unencoded(v)
        }
    };
    let from_cells = |e: EncodedByte| {
        if encoder {
            codec::decode(e)
        } else {
            codec::unmap_unencoded(e)
        }
    };

    let mut events = Vec::with_capacity(records.len());
    let mut summary = ReplaySummary::default();
    let mut zero_bits = 0u64;
    for rec in records {
        let refresh_events = array.advance(rec.t_ns)?;
        summary.scheduled_refreshes += refresh_events;
        let mut sensed_hex = String::new();
        let mut mismatch = false;
        match rec.op {
            TraceOp::Write => {
                let v = rec.value.expect("checked at parse time");
                let cells = to_cells(v);
                zero_bits += u64::from(cells.to_bits().count_zeros());
                array.write(rec.addr, cells, rec.t_ns)?;
                summary.writes += 1;
            }
            TraceOp::Read => {
                let got = from_cells(array.read(rec.addr, rec.t_ns)?);
                sensed_hex = format!("{:02x}", got as u8);
                mismatch = rec.value.is_some_and(|v| v != got);
                summary.reads += 1;
                summary.mismatches += u64::from(mismatch);
            }
            TraceOp::Refresh => {
                array.refresh_row(rec.addr.bank, rec.addr.row, rec.t_ns)?;
                summary.explicit_refreshes += 1;
            }
        }
        summary.duration_ns = summary.duration_ns.max(rec.t_ns);
        events.push(ReplayEvent {
            t_ns: rec.t_ns,
            op: rec.op.as_char(),
            bank: rec.addr.bank,
            row: rec.addr.row,
            col: rec.addr.col,
            value_hex: rec.value.map(|v| format!("{:02x}", v as u8)).unwrap_or_default(),
            sensed_hex,
            mismatch,
            refresh_events,
        });
    }
    if summary.writes > 0 {
        summary.written_zero_fraction = zero_bits as f64 / (summary.writes * 8) as f64;
    }
    Ok((events, summary))
}

pub fn write_event_log<W: Write>(events: &[ReplayEvent], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(e)?;
    }
    if events.is_empty() {
        w.write_record([
            "t_ns",
            "op",
            "bank",
            "row",
            "col",
            "value_hex",
            "sensed_hex",
            "mismatch",
            "refresh_events",
        ])?;
    }
    w.flush()?;
    Ok(())
}
