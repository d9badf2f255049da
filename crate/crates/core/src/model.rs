//! Immutable problem data for post-enrolment course timetabling.
//!
//! All ids are 0-based inside the library. Text formats that talk to the
//! outside world (solution files, reports) do their own conversion.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Timeslots per day in the public instances.
pub const PUBLIC_SLOTS_PER_DAY: usize = 9;
/// Days per week in the public instances.
pub const PUBLIC_DAYS: usize = 5;
/// Timeslots per week in the public instances.
pub const PUBLIC_TIMESLOTS: usize = PUBLIC_DAYS * PUBLIC_SLOTS_PER_DAY;
/// Upper bound on timeslots per day accepted by [`Instance::new`].
pub const MAX_SLOTS_PER_DAY: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("event id {0} out of range (instance has {1} events)")]
    EventOutOfRange(usize, usize),
    #[error("timeslot id {0} out of range (instance has {1} timeslots)")]
    TimeslotOutOfRange(usize, usize),
    #[error("{0} timeslots cannot be split evenly into {1} days")]
    UnevenDays(usize, usize),
    #[error("{0} timeslots per day exceeds the supported maximum of {MAX_SLOTS_PER_DAY}")]
    DayTooLong(usize),
    #[error("{block}: expected {expected} entries, got {got}")]
    Shape {
        block: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("student {student} out of range in enrolment of event {event}")]
    StudentOutOfRange { event: usize, student: usize },
    #[error("precedence ({0}, {0}) is a self-pair")]
    SelfPrecedence(usize),
    #[error("precedence ({0}, {1}) references an unknown event")]
    PrecedenceOutOfRange(usize, usize),
    #[error("formulation {0} does not allow {1}")]
    Formulation(Formulation, &'static str),
}

/// Which constraints a problem variant switches on.
///
/// | variant  | H1-H3 | H4-H5 | H6 | S1-S3 |
/// |----------|-------|-------|----|-------|
/// | Full     | yes   | yes   | yes| yes   |
/// | Original | yes   | no    | no | yes   |
/// | HardOnly | yes   | no    | yes| no    |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Full,
    Original,
    HardOnly,
}

impl Formulation {
    pub fn has_availability(self) -> bool {
        matches!(self, Formulation::Full)
    }

    pub fn has_precedences(self) -> bool {
        matches!(self, Formulation::Full)
    }

    /// Whether unscheduled events are tolerated in reported solutions.
    pub fn allows_unscheduled(self) -> bool {
        !matches!(self, Formulation::Original)
    }

    pub fn has_soft(self) -> bool {
        !matches!(self, Formulation::HardOnly)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Full => "full",
            Formulation::Original => "original",
            Formulation::HardOnly => "hard-only",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Formulation::Full),
            "original" => Ok(Formulation::Original),
            "hard-only" | "hardonly" | "hard_only" => Ok(Formulation::HardOnly),
            other => Err(format!(
                "unknown formulation `{other}` (expected full, original or hard-only)"
            )),
        }
    }
}

/// Problem data. Built once, then shared read-only by every solver run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    num_students: usize,
    num_features: usize,
    num_timeslots: usize,
    num_days: usize,
    room_capacity: Vec<usize>,
    event_students: Vec<Vec<usize>>,
    student_events: Vec<Vec<usize>>,
    room_features: Vec<Vec<bool>>,
    event_features: Vec<Vec<bool>>,
    availability: Vec<Vec<bool>>,
    precedences: Vec<(usize, usize)>,
    formulation: Formulation,
}

/// Raw ingredients for [`Instance::new`].
///
/// `availability` may be left empty to mean "every event in every slot".
#[derive(Debug, Clone, Default)]
pub struct InstanceData {
    pub num_students: usize,
    pub num_features: usize,
    pub num_timeslots: usize,
    pub num_days: usize,
    pub room_capacity: Vec<usize>,
    /// Per event, the students attending it.
    pub enrolment: Vec<Vec<usize>>,
    /// Per room, one flag per feature.
    pub room_features: Vec<Vec<bool>>,
    /// Per event, one flag per feature.
    pub event_features: Vec<Vec<bool>>,
    /// Per event, one flag per timeslot.
    pub availability: Vec<Vec<bool>>,
    /// `(a, b)` means `a` must be held strictly before `b`.
    pub precedences: Vec<(usize, usize)>,
}

impl Instance {
    pub fn new(data: InstanceData, formulation: Formulation) -> Result<Self, ModelError> {
        let InstanceData {
            num_students,
            num_features,
            num_timeslots,
            num_days,
            room_capacity,
            enrolment,
            room_features,
            event_features,
            mut availability,
            precedences,
        } = data;
        let num_events = enrolment.len();
        let num_rooms = room_capacity.len();

        if num_days == 0 || num_timeslots % num_days != 0 {
            return Err(ModelError::UnevenDays(num_timeslots, num_days));
        }
        if num_timeslots / num_days > MAX_SLOTS_PER_DAY {
            return Err(ModelError::DayTooLong(num_timeslots / num_days));
        }
        check_len("room features", room_features.len(), num_rooms)?;
        for row in &room_features {
            check_len("room features", row.len(), num_features)?;
        }
        check_len("event features", event_features.len(), num_events)?;
        for row in &event_features {
            check_len("event features", row.len(), num_features)?;
        }
        if availability.is_empty() {
            availability = vec![vec![true; num_timeslots]; num_events];
        }
        check_len("availability", availability.len(), num_events)?;
        for row in &availability {
            check_len("availability", row.len(), num_timeslots)?;
        }

        let mut event_students = Vec::with_capacity(num_events);
        let mut student_events = vec![Vec::new(); num_students];
        for (e, students) in enrolment.into_iter().enumerate() {
            let mut students = students;
            students.sort_unstable();
            students.dedup();
            for &s in &students {
                if s >= num_students {
                    return Err(ModelError::StudentOutOfRange {
                        event: e,
                        student: s,
                    });
                }
                student_events[s].push(e);
            }
            event_students.push(students);
        }

        let mut precedences = precedences;
        for &(a, b) in &precedences {
            if a >= num_events || b >= num_events {
                return Err(ModelError::PrecedenceOutOfRange(a, b));
            }
            if a == b {
                return Err(ModelError::SelfPrecedence(a));
            }
        }
        precedences.sort_unstable();
        precedences.dedup();

        if !formulation.has_precedences() && !precedences.is_empty() {
            return Err(ModelError::Formulation(formulation, "precedences"));
        }
        if !formulation.has_availability() && availability.iter().flatten().any(|&a| !a) {
            return Err(ModelError::Formulation(
                formulation,
                "restricted availability",
            ));
        }

        Ok(Instance {
            num_students,
            num_features,
            num_timeslots,
            num_days,
            room_capacity,
            event_students,
            student_events,
            room_features,
            event_features,
            availability,
            precedences,
            formulation,
        })
    }

    pub fn num_events(&self) -> usize {
        self.event_students.len()
    }

    pub fn num_rooms(&self) -> usize {
        self.room_capacity.len()
    }

    pub fn num_students(&self) -> usize {
        self.num_students
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_timeslots(&self) -> usize {
        self.num_timeslots
    }

    pub fn num_days(&self) -> usize {
        self.num_days
    }

    pub fn slots_per_day(&self) -> usize {
        self.num_timeslots / self.num_days
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn room_capacity(&self, room: usize) -> usize {
        self.room_capacity[room]
    }

    pub fn room_capacities(&self) -> &[usize] {
        &self.room_capacity
    }

    /// Students attending `event`, sorted ascending.
    pub fn students_of(&self, event: usize) -> &[usize] {
        &self.event_students[event]
    }

    /// Events attended by `student`, sorted ascending.
    pub fn events_of(&self, student: usize) -> &[usize] {
        &self.student_events[student]
    }

    pub fn room_has_feature(&self, room: usize, feature: usize) -> bool {
        self.room_features[room][feature]
    }

    pub fn event_needs_feature(&self, event: usize, feature: usize) -> bool {
        self.event_features[event][feature]
    }

    pub fn is_available(&self, event: usize, timeslot: usize) -> bool {
        self.availability[event][timeslot]
    }

    pub fn precedences(&self) -> &[(usize, usize)] {
        &self.precedences
    }

    /// Number of students attending `event`; the unit of the unscheduled-event cost.
    pub fn enrolment_count(&self, event: usize) -> Result<usize, ModelError> {
        self.event_students
            .get(event)
            .map(Vec::len)
            .ok_or(ModelError::EventOutOfRange(event, self.num_events()))
    }

    /// Day holding `timeslot`.
    pub fn day_of(&self, timeslot: usize) -> Result<usize, ModelError> {
        if timeslot >= self.num_timeslots {
            return Err(ModelError::TimeslotOutOfRange(timeslot, self.num_timeslots));
        }
        Ok(timeslot / self.slots_per_day())
    }

    /// True for the final timeslot of each day.
    pub fn is_last_of_day(&self, timeslot: usize) -> bool {
        timeslot % self.slots_per_day() == self.slots_per_day() - 1
    }
}

fn check_len(block: &'static str, got: usize, expected: usize) -> Result<(), ModelError> {
    if got == expected {
        Ok(())
    } else {
        Err(ModelError::Shape {
            block,
            expected,
            got,
        })
    }
}
