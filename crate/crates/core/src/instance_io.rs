//! Instance and solution text formats.
//!
//! Instance files are whitespace-separated integers, one value per line in
//! the published files:
//!
//! ```text
//! E R F S                      header
//! C_r                          R lines, room capacities
//! attends(s, e)                S*E lines, student-major
//! has_feature(r, f)            R*F lines
//! needs_feature(e, f)          E*F lines
//! available(e, t)              E*T lines      (with-availability format only)
//! before(e1, e2)               E*E lines      (with-availability format only)
//! ```
//!
//! The precedence matrix holds `1` when the row event must come before the
//! column event, `-1` for the converse and `0` otherwise.
//!
//! Solution files have one `timeslot room` line per event, 0-based, with
//! `-1 -1` for an unscheduled event.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{
    Formulation, Instance, InstanceData, ModelError, PUBLIC_DAYS, PUBLIC_TIMESLOTS,
};

/// Which of the two published layouts a file uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceFormat {
    /// ITC 2007 layout, with availability and precedence blocks.
    WithAvailability,
    /// ITC 2002, Metaheuristics Network and Lewis & Paechter layout.
    Plain,
}

impl InstanceFormat {
    pub fn for_formulation(formulation: Formulation) -> Self {
        match formulation {
            Formulation::Full => InstanceFormat::WithAvailability,
            Formulation::Original | Formulation::HardOnly => InstanceFormat::Plain,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceFormat::WithAvailability => "with-availability",
            InstanceFormat::Plain => "plain",
        }
    }
}

impl fmt::Display for InstanceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "with-availability" | "itc2007" | "full" => Ok(InstanceFormat::WithAvailability),
            "plain" | "itc2002" => Ok(InstanceFormat::Plain),
            other => Err(format!(
                "unknown instance format `{other}` (expected with-availability or plain)"
            )),
        }
    }
}

/// A room booking in a completed timetable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Booking {
    pub timeslot: usize,
    pub room: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{block}, line {line}: {message}")]
    Syntax {
        block: &'static str,
        line: usize,
        message: String,
    },
    #[error("{block}: file ends early (expected {expected} more values)")]
    Truncated {
        block: &'static str,
        expected: usize,
    },
    #[error("line {line}: trailing data after the last block")]
    Trailing { line: usize },
    #[error("solution has {got} lines, expected {expected}")]
    SolutionLength { expected: usize, got: usize },
    #[error("inconsistent instance: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
}

struct Tokens<'a> {
    iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let iter = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |tok| (i + 1, tok)));
        Tokens {
            iter: Box::new(iter),
        }
    }

    fn int(&mut self, block: &'static str, remaining: usize) -> Result<(usize, i64), ParseError> {
        let (line, tok) = self.iter.next().ok_or(ParseError::Truncated {
            block,
            expected: remaining,
        })?;
        let value = tok.parse::<i64>().map_err(|_| ParseError::Syntax {
            block,
            line,
            message: format!("`{tok}` is not an integer"),
        })?;
        Ok((line, value))
    }

    fn count(&mut self, block: &'static str) -> Result<usize, ParseError> {
        let (line, v) = self.int(block, 1)?;
        usize::try_from(v).map_err(|_| ParseError::Syntax {
            block,
            line,
            message: format!("expected a non-negative count, got {v}"),
        })
    }

    fn bit(&mut self, block: &'static str, remaining: usize) -> Result<bool, ParseError> {
        let (line, v) = self.int(block, remaining)?;
        match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(ParseError::Syntax {
                block,
                line,
                message: format!("expected 0 or 1, got {v}"),
            }),
        }
    }

    fn matrix(
        &mut self,
        block: &'static str,
        rows: usize,
        cols: usize,
    ) -> Result<Vec<Vec<bool>>, ParseError> {
        let total = rows * cols;
        let mut out = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut row = Vec::with_capacity(cols);
            for c in 0..cols {
                row.push(self.bit(block, total - (r * cols + c))?);
            }
            out.push(row);
        }
        Ok(out)
    }
}

/// Parses an instance file. `T` and `D` are fixed to the public 45/5 layout.
pub fn parse_instance(
    text: &str,
    format: InstanceFormat,
    formulation: Formulation,
) -> Result<Instance, ParseError> {
    let mut tokens = Tokens::new(text);
    let num_events = tokens.count("header")?;
    let num_rooms = tokens.count("header")?;
    let num_features = tokens.count("header")?;
    let num_students = tokens.count("header")?;
    let num_timeslots = PUBLIC_TIMESLOTS;

    let mut room_capacity = Vec::with_capacity(num_rooms);
    for r in 0..num_rooms {
        let (line, c) = tokens.int("room capacities", num_rooms - r)?;
        let c = usize::try_from(c).map_err(|_| ParseError::Syntax {
            block: "room capacities",
            line,
            message: format!("negative capacity {c}"),
        })?;
        room_capacity.push(c);
    }

    // Student-major in the published files.
    let attends = tokens.matrix("enrolment", num_students, num_events)?;
    let mut enrolment = vec![Vec::new(); num_events];
    for (s, row) in attends.iter().enumerate() {
        for (e, &bit) in row.iter().enumerate() {
            if bit {
                enrolment[e].push(s);
            }
        }
    }

    let room_features = tokens.matrix("room features", num_rooms, num_features)?;
    let event_features = tokens.matrix("event features", num_events, num_features)?;

    let mut availability = Vec::new();
    let mut precedences = Vec::new();
    if format == InstanceFormat::WithAvailability {
        availability = tokens.matrix("availability", num_events, num_timeslots)?;
        let total = num_events * num_events;
        for a in 0..num_events {
            for b in 0..num_events {
                let (line, v) = tokens.int("precedences", total - (a * num_events + b))?;
                match v {
                    0 => {}
                    1 if a != b => precedences.push((a, b)),
                    -1 if a != b => precedences.push((b, a)),
                    _ => {
                        return Err(ParseError::Syntax {
                            block: "precedences",
                            line,
                            message: format!("invalid entry {v} for events ({a}, {b})"),
                        })
                    }
                }
            }
        }
    }

    if let Some((line, _)) = tokens.iter.next() {
        return Err(ParseError::Trailing { line });
    }

    // Plain files say nothing about availability or precedences; any
    // formulation may be run on them.
    if format == InstanceFormat::WithAvailability && !formulation.has_availability()
        && (availability.iter().flatten().any(|a| !a) || !precedences.is_empty()) {
            return Err(ModelError::Formulation(
                formulation,
                "availability or precedence restrictions",
            )
            .into());
        }

    let data = InstanceData {
        num_students,
        num_features,
        num_timeslots,
        num_days: PUBLIC_DAYS,
        room_capacity,
        enrolment,
        room_features,
        event_features,
        availability,
        precedences,
    };
    Ok(Instance::new(data, formulation)?)
}

/// Serialises an instance in the given layout, one value per line.
pub fn write_instance(inst: &Instance, format: InstanceFormat) -> String {
    let (e_n, r_n, f_n, s_n) = (
        inst.num_events(),
        inst.num_rooms(),
        inst.num_features(),
        inst.num_students(),
    );
    let mut out = String::new();
    let _ = writeln!(out, "{e_n} {r_n} {f_n} {s_n}");
    for &c in inst.room_capacities() {
        let _ = writeln!(out, "{c}");
    }
    let bit = |b: bool| if b { "1\n" } else { "0\n" };
    for s in 0..s_n {
        let events = inst.events_of(s);
        for e in 0..e_n {
            out.push_str(bit(events.binary_search(&e).is_ok()));
        }
    }
    for r in 0..r_n {
        for f in 0..f_n {
            out.push_str(bit(inst.room_has_feature(r, f)));
        }
    }
    for e in 0..e_n {
        for f in 0..f_n {
            out.push_str(bit(inst.event_needs_feature(e, f)));
        }
    }
    if format == InstanceFormat::WithAvailability {
        for e in 0..e_n {
            for t in 0..inst.num_timeslots() {
                out.push_str(bit(inst.is_available(e, t)));
            }
        }
        let prec = inst.precedences();
        for a in 0..e_n {
            for b in 0..e_n {
                let v = if prec.binary_search(&(a, b)).is_ok() {
                    "1\n"
                } else if prec.binary_search(&(b, a)).is_ok() {
                    "-1\n"
                } else {
                    "0\n"
                };
                out.push_str(v);
            }
        }
    }
    out
}

/// Renders a completed timetable as a solution file.
pub fn write_solution(timetable: &[Option<Booking>]) -> String {
    let mut out = String::with_capacity(timetable.len() * 6);
    for b in timetable {
        match b {
            Some(b) => {
                let _ = writeln!(out, "{} {}", b.timeslot, b.room);
            }
            None => out.push_str("-1 -1\n"),
        }
    }
    out
}

/// Parses a solution file against `inst`. Blank lines are ignored.
pub fn parse_solution(text: &str, inst: &Instance) -> Result<Vec<Option<Booking>>, ParseError> {
    const BLOCK: &str = "solution";
    let mut out = Vec::with_capacity(inst.num_events());
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut fields = raw.split_whitespace();
        let Some(first) = fields.next() else {
            continue;
        };
        let syntax = |message: String| ParseError::Syntax {
            block: BLOCK,
            line,
            message,
        };
        let second = fields
            .next()
            .ok_or_else(|| syntax("expected `timeslot room`".into()))?;
        if fields.next().is_some() {
            return Err(syntax("expected exactly two values".into()));
        }
        let t: i64 = first
            .parse()
            .map_err(|_| syntax(format!("`{first}` is not an integer")))?;
        let r: i64 = second
            .parse()
            .map_err(|_| syntax(format!("`{second}` is not an integer")))?;
        let booking = match (t, r) {
            (-1, -1) => None,
            (t, r) if t < 0 || r < 0 => {
                return Err(syntax(format!(
                    "`{t} {r}`: an unscheduled event must be `-1 -1`"
                )))
            }
            (t, r) => {
                let (t, r) = (t as usize, r as usize);
                if t >= inst.num_timeslots() {
                    return Err(syntax(format!("timeslot {t} out of range")));
                }
                if r >= inst.num_rooms() {
                    return Err(syntax(format!("room {r} out of range")));
                }
                Some(Booking {
                    timeslot: t,
                    room: r,
                })
            }
        };
        out.push(booking);
    }
    if out.len() != inst.num_events() {
        return Err(ParseError::SolutionLength {
            expected: inst.num_events(),
            got: out.len(),
        });
    }
    Ok(out)
}

pub fn load_instance(
    path: &Path,
    format: InstanceFormat,
    formulation: Formulation,
) -> Result<Instance, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_instance(&text, format, formulation).map_err(|source| IoError::Parse {
        path: path.to_owned(),
        source,
    })
}

pub fn load_solution(path: &Path, inst: &Instance) -> Result<Vec<Option<Booking>>, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_solution(&text, inst).map_err(|source| IoError::Parse {
        path: path.to_owned(),
        source,
    })
}

pub fn save_solution(path: &Path, timetable: &[Option<Booking>]) -> Result<(), IoError> {
    fs::write(path, write_solution(timetable)).map_err(|source| IoError::Write {
        path: path.to_owned(),
        source,
    })
}
