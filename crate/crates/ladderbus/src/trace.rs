//! Per-step trace log: one line per simulator step,
//!
//! ```text
//! step=4 scenario=1 active=R0,R1,S1.0 delivered=3
//! ```
//!
//! `scenario` is the index issued by controller 0. `active` lists the driven
//! rungs (`R<col>`) and segments (`S<lane>.<col>`); `delivered` lists path
//! ids. An empty list is written as `-`.

use std::fmt::Write as _;

use ladderbus_core::sim::TraceRecord;
use ladderbus_core::Resource;

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items.iter().map(f).collect::<Vec<_>>().join(",")
    }
}

pub fn write_trace(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        writeln!(
            out,
            "step={} scenario={} active={} delivered={}",
            r.step,
            r.scenario,
            list(&r.active, |a| a.to_string()),
            list(&r.delivered, |d| d.to_string())
        )
        .unwrap();
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, String> {
    text.lines()
        .enumerate()
        .map(|(i, line)| parse_line(line).ok_or_else(|| format!("line {}: malformed record", i + 1)))
        .collect()
}

fn parse_line(line: &str) -> Option<TraceRecord> {
    let mut it = line.split(' ');
    let mut field = |key: &str| it.next()?.strip_prefix(key)?.strip_prefix('=');
    let step = field("step")?.parse().ok()?;
    let scenario = field("scenario")?.parse().ok()?;
    let active = field("active")?;
    let delivered = field("delivered")?;
    let split = |s: &'_ str| -> Vec<String> {
        if s == "-" {
            Vec::new()
        } else {
            s.split(',').map(str::to_string).collect()
        }
    };
    Some(TraceRecord {
        step,
        scenario,
        active: split(active)
            .iter()
            .map(|a| Resource::parse(a))
            .collect::<Option<_>>()?,
        delivered: split(delivered)
            .iter()
            .map(|d| d.parse().ok())
            .collect::<Option<_>>()?,
    })
}
