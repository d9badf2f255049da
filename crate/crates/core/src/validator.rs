//! Independent solution certifier.
//!
//! Everything here is recomputed from the raw [`Instance`] (capacities,
//! features, raw availability, enrolments); nothing is taken from
//! preprocessing or from the incremental evaluator, so the two can be
//! checked against each other.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use thiserror::Error;

use crate::instance_io::{load_instance, load_solution, Booking, InstanceFormat, IoError};
use crate::model::{Formulation, Instance};

/// Default cap on listed violations; totals are always exact.
pub const DEFAULT_MAX_LISTED: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    /// H1, events sharing students in one timeslot.
    Conflict,
    /// H2, room too small or missing a feature.
    Compatibility,
    /// H3, several events in one room and timeslot.
    Occupancy,
    /// H4
    Availability,
    /// H5
    Precedence,
    /// H6
    Unscheduled,
    /// S1
    LateEvent,
    /// S2
    ConsecutiveEvents,
    /// S3
    IsolatedEvent,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 9] = [
        ViolationKind::Conflict,
        ViolationKind::Compatibility,
        ViolationKind::Occupancy,
        ViolationKind::Availability,
        ViolationKind::Precedence,
        ViolationKind::Unscheduled,
        ViolationKind::LateEvent,
        ViolationKind::ConsecutiveEvents,
        ViolationKind::IsolatedEvent,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ViolationKind::Conflict => "H1",
            ViolationKind::Compatibility => "H2",
            ViolationKind::Occupancy => "H3",
            ViolationKind::Availability => "H4",
            ViolationKind::Precedence => "H5",
            ViolationKind::Unscheduled => "H6",
            ViolationKind::LateEvent => "S1",
            ViolationKind::ConsecutiveEvents => "S2",
            ViolationKind::IsolatedEvent => "S3",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::Conflict => "conflicts",
            ViolationKind::Compatibility => "compatibility",
            ViolationKind::Occupancy => "occupancy",
            ViolationKind::Availability => "availability",
            ViolationKind::Precedence => "precedences",
            ViolationKind::Unscheduled => "unscheduled",
            ViolationKind::LateEvent => "late",
            ViolationKind::ConsecutiveEvents => "consecutive",
            ViolationKind::IsolatedEvent => "isolated",
        }
    }

    /// Violations of this kind make a timetable invalid.
    pub fn breaks_validity(self) -> bool {
        matches!(
            self,
            ViolationKind::Conflict
                | ViolationKind::Compatibility
                | ViolationKind::Occupancy
                | ViolationKind::Availability
                | ViolationKind::Precedence
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub events: Vec<usize>,
    /// Student and day for the per-student soft constraints.
    pub student_day: Option<(usize, usize)>,
    pub cost: i64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindTotal {
    pub count: usize,
    pub cost: i64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidateError {
    #[error("assignment has {got} entries, instance has {expected} events")]
    Length { expected: usize, got: usize },
    #[error("event {event}: timeslot {timeslot} or room {room} out of range")]
    OutOfRange {
        event: usize,
        timeslot: usize,
        room: usize,
    },
}

#[derive(Debug, Error)]
pub enum ValidateFileError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationReport {
    formulation: Formulation,
    violations: Vec<Violation>,
    truncated: bool,
    totals: [KindTotal; 9],
}

impl ViolationReport {
    fn record(&mut self, v: Violation, cap: usize) {
        let t = &mut self.totals[v.kind.index()];
        t.count += 1;
        t.cost += v.cost;
        if self.violations.len() < cap {
            self.violations.push(v);
        } else {
            self.truncated = true;
        }
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// True when the list hit its cap; totals are still complete.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn total(&self, kind: ViolationKind) -> KindTotal {
        self.totals[kind.index()]
    }

    /// Students of unscheduled events.
    pub fn distance(&self) -> i64 {
        self.total(ViolationKind::Unscheduled).cost
    }

    pub fn unscheduled_events(&self) -> usize {
        self.total(ViolationKind::Unscheduled).count
    }

    pub fn conflicts(&self) -> i64 {
        self.total(ViolationKind::Conflict).cost
    }

    pub fn precedences(&self) -> i64 {
        self.total(ViolationKind::Precedence).cost
    }

    pub fn late(&self) -> i64 {
        self.total(ViolationKind::LateEvent).cost
    }

    pub fn consecutive(&self) -> i64 {
        self.total(ViolationKind::ConsecutiveEvents).cost
    }

    pub fn isolated(&self) -> i64 {
        self.total(ViolationKind::IsolatedEvent).cost
    }

    pub fn objective(&self) -> i64 {
        self.late() + self.consecutive() + self.isolated()
    }

    pub fn is_valid(&self) -> bool {
        ViolationKind::ALL
            .iter()
            .filter(|k| k.breaks_validity())
            .all(|&k| self.total(k).count == 0)
    }

    pub fn is_feasible(&self) -> bool {
        self.is_valid() && self.unscheduled_events() == 0
    }

    /// `(primary, secondary)`: students unscheduled and objective, or for
    /// the hard-only formulation the number of unscheduled events and 0.
    pub fn score(&self) -> (i64, i64) {
        match self.formulation {
            Formulation::HardOnly => (self.unscheduled_events() as i64, 0),
            Formulation::Full | Formulation::Original => (self.distance(), self.objective()),
        }
    }

    /// Machine-readable summary, one `key=value` per line.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let (primary, secondary) = self.score();
        let _ = writeln!(out, "formulation={}", self.formulation);
        let _ = writeln!(out, "valid={}", self.is_valid());
        let _ = writeln!(out, "feasible={}", self.is_feasible());
        let _ = writeln!(out, "score_primary={primary}");
        let _ = writeln!(out, "score_secondary={secondary}");
        let _ = writeln!(out, "distance={}", self.distance());
        let _ = writeln!(out, "unscheduled_events={}", self.unscheduled_events());
        let _ = writeln!(out, "objective={}", self.objective());
        for kind in ViolationKind::ALL {
            let t = self.total(kind);
            let _ = writeln!(out, "{}_count={}", kind.name(), t.count);
            let _ = writeln!(out, "{}_cost={}", kind.name(), t.cost);
        }
        out
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Formulation: {}", self.formulation)?;
        for v in &self.violations {
            let events: Vec<String> = v.events.iter().map(|e| (e + 1).to_string()).collect();
            write!(
                f,
                "[{}] {} event(s) {}",
                v.kind.tag(),
                v.kind.name(),
                events.join(", ")
            )?;
            if let Some((s, d)) = v.student_day {
                write!(f, " student {} day {}", s + 1, d + 1)?;
            }
            writeln!(f, " cost {}", v.cost)?;
        }
        if self.truncated {
            writeln!(f, "(violation list truncated; totals below are complete)")?;
        }
        writeln!(f)?;
        for kind in ViolationKind::ALL {
            let t = self.total(kind);
            writeln!(
                f,
                "{} {:<14} count {:>6}  cost {:>7}",
                kind.tag(),
                kind.name(),
                t.count,
                t.cost
            )?;
        }
        let (p, s) = self.score();
        writeln!(f, "Distance to feasibility: {}", self.distance())?;
        writeln!(f, "Unscheduled events: {}", self.unscheduled_events())?;
        writeln!(f, "Objective: {}", self.objective())?;
        writeln!(f, "Score: ({p}, {s})")?;
        write!(
            f,
            "Timetable is {}",
            match (self.is_valid(), self.is_feasible()) {
                (true, true) => "valid and feasible",
                (true, false) => "valid but not feasible",
                _ => "not valid",
            }
        )
    }
}

fn shared_students(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

pub fn validate(
    inst: &Instance,
    assignment: &[Option<Booking>],
) -> Result<ViolationReport, ValidateError> {
    validate_capped(inst, assignment, DEFAULT_MAX_LISTED)
}

/// Like [`validate`] with an explicit cap on the listed violations.
pub fn validate_capped(
    inst: &Instance,
    assignment: &[Option<Booking>],
    cap: usize,
) -> Result<ViolationReport, ValidateError> {
    let ne = inst.num_events();
    if assignment.len() != ne {
        return Err(ValidateError::Length {
            expected: ne,
            got: assignment.len(),
        });
    }
    for (e, b) in assignment.iter().enumerate() {
        if let Some(b) = b {
            if b.timeslot >= inst.num_timeslots() || b.room >= inst.num_rooms() {
                return Err(ValidateError::OutOfRange {
                    event: e,
                    timeslot: b.timeslot,
                    room: b.room,
                });
            }
        }
    }
    let formulation = inst.formulation();
    let mut report = ViolationReport {
        formulation,
        violations: Vec::new(),
        truncated: false,
        totals: [KindTotal::default(); 9],
    };
    let size = |e: usize| inst.students_of(e).len() as i64;
    let violation = |kind, events: Vec<usize>, cost| Violation {
        kind,
        events,
        student_day: None,
        cost,
    };

    let mut rooms: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (e, b) in assignment.iter().enumerate() {
        match b {
            None => report.record(violation(ViolationKind::Unscheduled, vec![e], size(e)), cap),
            Some(b) => {
                rooms.entry((b.timeslot, b.room)).or_default().push(e);
                let fits = inst.room_capacity(b.room) >= inst.students_of(e).len()
                    && (0..inst.num_features()).all(|f| {
                        !inst.event_needs_feature(e, f) || inst.room_has_feature(b.room, f)
                    });
                if !fits {
                    report.record(violation(ViolationKind::Compatibility, vec![e], 1), cap);
                }
                if formulation.has_availability() && !inst.is_available(e, b.timeslot) {
                    report.record(violation(ViolationKind::Availability, vec![e], 1), cap);
                }
            }
        }
    }
    let mut shared: Vec<_> = rooms.into_iter().filter(|(_, v)| v.len() > 1).collect();
    shared.sort();
    for (_, events) in shared {
        let cost = events.len() as i64 - 1;
        report.record(violation(ViolationKind::Occupancy, events, cost), cap);
    }

    // Conflicts, pair by pair in the same timeslot.
    for a in 0..ne {
        let Some(ba) = assignment[a] else { continue };
        for (b, booking) in assignment.iter().enumerate().skip(a + 1) {
            let Some(bb) = *booking else { continue };
            if ba.timeslot == bb.timeslot
                && shared_students(inst.students_of(a), inst.students_of(b))
            {
                let cost = size(a).min(size(b)).max(1);
                report.record(violation(ViolationKind::Conflict, vec![a, b], cost), cap);
            }
        }
    }

    if formulation.has_precedences() {
        for &(a, b) in inst.precedences() {
            if let (Some(ba), Some(bb)) = (assignment[a], assignment[b]) {
                if ba.timeslot >= bb.timeslot {
                    let cost = size(a).min(size(b)).max(1);
                    report.record(violation(ViolationKind::Precedence, vec![a, b], cost), cap);
                }
            }
        }
    }

    if formulation.has_soft() {
        let spd = inst.slots_per_day();
        for (e, b) in assignment.iter().enumerate() {
            if let Some(b) = b {
                if b.timeslot % spd == spd - 1 && size(e) > 0 {
                    report.record(violation(ViolationKind::LateEvent, vec![e], size(e)), cap);
                }
            }
        }
        for s in 0..inst.num_students() {
            // (timeslot, event) pairs of the student's scheduled events
            let mut attended: Vec<(usize, usize)> = inst
                .events_of(s)
                .iter()
                .filter_map(|&e| assignment[e].map(|b| (b.timeslot, e)))
                .collect();
            attended.sort_unstable();
            for day in 0..inst.num_days() {
                let todays: Vec<(usize, usize)> = attended
                    .iter()
                    .copied()
                    .filter(|&(t, _)| t / spd == day)
                    .collect();
                if todays.len() == 1 {
                    report.record(
                        Violation {
                            kind: ViolationKind::IsolatedEvent,
                            events: vec![todays[0].1],
                            student_day: Some((s, day)),
                            cost: 1,
                        },
                        cap,
                    );
                }
                let mut slots: Vec<usize> = todays.iter().map(|&(t, _)| t).collect();
                slots.dedup();
                let mut start = 0;
                while start < slots.len() {
                    let mut end = start + 1;
                    while end < slots.len() && slots[end] == slots[end - 1] + 1 {
                        end += 1;
                    }
                    let run = end - start;
                    if run > 2 {
                        let run_slots = &slots[start..end];
                        let events = todays
                            .iter()
                            .filter(|(t, _)| run_slots.contains(t))
                            .map(|&(_, e)| e)
                            .collect();
                        report.record(
                            Violation {
                                kind: ViolationKind::ConsecutiveEvents,
                                events,
                                student_day: Some((s, day)),
                                cost: run as i64 - 2,
                            },
                            cap,
                        );
                    }
                    start = end;
                }
            }
        }
    }
    Ok(report)
}

/// Loads both files and validates.
pub fn validate_file(
    instance_path: &Path,
    solution_path: &Path,
    format: InstanceFormat,
    formulation: Formulation,
) -> Result<ViolationReport, ValidateFileError> {
    let inst = load_instance(instance_path, format, formulation)?;
    let assignment = load_solution(solution_path, &inst)?;
    Ok(validate(&inst, &assignment)?)
}
