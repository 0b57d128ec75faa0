//! Controller program text files.
//!
//! ```text
//! ladderbus-ctrl 1
//! region 1 columns 4 8 lanes 3
//! word_bits 24
//! scenarios 2
//! memory
//! 0 0d0000
//! 1 000340
//! schedule
//! (0, 1)
//! (1, 1)
//! cond(7, 0)
//! end
//! ```
//!
//! `columns a b` is the half-open column block. Memory lines hold one word
//! per scenario as hex bytes in address order; byte `i` carries switches
//! `4i..4i+4` of the region, lowest bits first. Schedule lines are
//! `(scenario, repeat)` in frame order, optionally followed by one
//! `cond(flag, scenario)` guard.

use std::fmt::Write as _;

use ladderbus_core::controlgen::{Guard, ScheduleEntry};
use ladderbus_core::{ControllerProgram, ControllerRegion, Schedule};
use thiserror::Error;

const MAGIC: &str = "ladderbus-ctrl 1";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct CtrlFileError {
    pub line: usize,
    pub message: String,
}

pub fn write_program(p: &ControllerProgram) -> String {
    let r = &p.region;
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(
        out,
        "region {} columns {} {} lanes {}",
        r.id, r.col_start, r.col_end, r.n_lanes
    )
    .unwrap();
    writeln!(out, "word_bits {}", p.word_bits()).unwrap();
    writeln!(out, "scenarios {}", p.memory.len()).unwrap();
    writeln!(out, "memory").unwrap();
    for (k, word) in p.memory.iter().enumerate() {
        write!(out, "{k} ").unwrap();
        for b in word {
            write!(out, "{b:02x}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "schedule").unwrap();
    for e in &p.schedule.entries {
        writeln!(out, "({}, {})", e.scenario, e.repeat).unwrap();
    }
    if let Some(g) = p.schedule.guard {
        writeln!(out, "cond({}, {})", g.flag, g.scenario).unwrap();
    }
    writeln!(out, "end").unwrap();
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, CtrlFileError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim_end())
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> CtrlFileError {
        CtrlFileError {
            line: self.line,
            message: message.into(),
        }
    }

    /// Reads `key v1 v2 ...` and returns the values.
    fn keyed(&mut self, key: &str, n: usize) -> Result<Vec<usize>, CtrlFileError> {
        let l = self.next()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        let vals = it
            .map(|t| t.parse::<usize>().map_err(|_| self.err(format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != n {
            return Err(self.err(format!("`{key}` takes {n} values")));
        }
        Ok(vals)
    }
}

fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

pub fn parse_program(text: &str) -> Result<ControllerProgram, CtrlFileError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err(format!("expected `{MAGIC}`")));
    }
    let l = lines.next()?;
    let t: Vec<&str> = l.split_whitespace().collect();
    let region = match t.as_slice() {
        ["region", id, "columns", a, b, "lanes", n] => {
            let num = |s: &str| s.parse::<usize>().map_err(|_| lines.err(format!("bad number `{s}`")));
            ControllerRegion {
                id: num(id)?,
                col_start: num(a)?,
                col_end: num(b)?,
                n_lanes: num(n)?,
            }
        }
        _ => return Err(lines.err("expected `region <id> columns <a> <b> lanes <n>`")),
    };
    if region.col_end <= region.col_start {
        return Err(lines.err("empty column block"));
    }
    let word_bits = lines.keyed("word_bits", 1)?[0];
    if word_bits != region.word_bits() {
        return Err(lines.err(format!(
            "word_bits {word_bits} does not match region ({})",
            region.word_bits()
        )));
    }
    let n_scen = lines.keyed("scenarios", 1)?[0];
    if lines.next()? != "memory" {
        return Err(lines.err("expected `memory`"));
    }
    let mut memory = Vec::with_capacity(n_scen);
    for k in 0..n_scen {
        let l = lines.next()?;
        let (idx, hex) = l
            .split_once(' ')
            .ok_or_else(|| lines.err("expected `<index> <hex>`"))?;
        if idx.parse::<usize>().ok() != Some(k) {
            return Err(lines.err(format!("expected word {k}")));
        }
        if hex.len() != 2 * region.word_bytes() {
            return Err(lines.err(format!(
                "word has {} hex digits, expected {}",
                hex.len(),
                2 * region.word_bytes()
            )));
        }
        let word = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16))
            .collect::<Result<Vec<u8>, _>>()
            .map_err(|_| lines.err("bad hex digit"))?;
        memory.push(word);
    }
    if lines.next()? != "schedule" {
        return Err(lines.err("expected `schedule`"));
    }
    let mut schedule = Schedule {
        entries: Vec::new(),
        guard: None,
    };
    loop {
        let l = lines.next()?;
        if l == "end" {
            break;
        }
        if schedule.guard.is_some() {
            return Err(lines.err("nothing but `end` may follow the guard"));
        }
        if let Some(body) = l.strip_prefix("cond(").and_then(|r| r.strip_suffix(')')) {
            let (flag, scenario) = parse_pair(body).ok_or_else(|| lines.err("bad guard"))?;
            let flag = u32::try_from(flag).map_err(|_| lines.err("flag out of range"))?;
            schedule.guard = Some(Guard { flag, scenario });
        } else if let Some(body) = l.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let (scenario, repeat) = parse_pair(body).ok_or_else(|| lines.err("bad entry"))?;
            schedule.entries.push(ScheduleEntry { scenario, repeat });
        } else {
            return Err(lines.err("expected `(idx, repeat)`, `cond(flag, idx)` or `end`"));
        }
    }
    if let Some((i, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(CtrlFileError {
            line: i + 1,
            message: "trailing content after `end`".into(),
        });
    }
    let program = ControllerProgram {
        region,
        memory,
        schedule,
    };
    program.check().map_err(|e| CtrlFileError {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ladderbus_core::controlgen::{build_schedule, encode_scenarios, partition_regions};
    use ladderbus_core::grouping::group_greedy;
    use ladderbus_core::placement::place_greedy;
    use ladderbus_core::routing::extract_paths;
    use ladderbus_core::{appgraph::generate_synthetic, LadderTopology};

    fn programs() -> Vec<ControllerProgram> {
        let g = generate_synthetic(14, 30, 2).unwrap();
        let t = LadderTopology::build(14, None).unwrap();
        let p = place_greedy(&g, &t).unwrap();
        let paths = extract_paths(&g, &t, &p).unwrap();
        let (set, _) = group_greedy(&t, &paths).unwrap();
        let regions = partition_regions(&t, 3).unwrap();
        let sched = build_schedule(set.len(), None).unwrap().with_guard(4, 1);
        encode_scenarios(&t, &set, &regions, &sched).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for p in programs() {
            let text = write_program(&p);
            let back = parse_program(&text).unwrap();
            assert_eq!(back, p);
            assert_eq!(write_program(&back), text);
        }
    }

    #[test]
    fn documented_example_parses() {
        let text = "ladderbus-ctrl 1\nregion 1 columns 4 8 lanes 3\nword_bits 24\nscenarios 2\n\
                    memory\n0 0d0000\n1 000340\nschedule\n(0, 1)\n(1, 1)\ncond(7, 0)\nend\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.region.n_switches(), 12);
        assert_eq!(p.memory[0], vec![0x0d, 0, 0]);
        assert_eq!(p.schedule.guard, Some(Guard { flag: 7, scenario: 0 }));
        assert_eq!(write_program(&p), text);
    }

    #[test]
    fn errors_name_the_line() {
        let good = write_program(&programs()[0]);
        let bad = good.replacen("word_bits", "word_bit", 1);
        assert_eq!(parse_program(&bad).unwrap_err().line, 3);
        let short: String = good.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(parse_program(&short).is_err());
        let unknown = good.replace("(1, 1)", "(99, 1)");
        assert!(parse_program(&unknown).is_err());
        let trailing = format!("{good}junk\n");
        assert!(parse_program(&trailing).is_err());
    }
}
