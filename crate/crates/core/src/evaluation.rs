//! Cost of a search state and exact incremental deltas.
//!
//! Hard violations tolerated during search are conflicts, precedences and
//! unscheduled events. An unscheduled event costs its enrolment; a violated
//! conflict or precedence costs the smaller enrolment of the two events.
//! Soft costs follow the late/consecutive/isolated rules, one point per
//! student and violation. Unscheduled events contribute only their
//! unscheduled cost. Violated pairs cost at least 1, and unscheduled events
//! without students are counted separately so that search still sees them.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use crate::model::{Formulation, Instance};
use crate::preprocess::PreprocessedInstance;
use crate::search::{Move, SearchState};

/// Whether conflict and precedence costs are doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalPhase {
    Normal,
    Endgame,
}

impl EvalPhase {
    fn hard_multiplier(self) -> i64 {
        match self {
            EvalPhase::Normal => 1,
            EvalPhase::Endgame => 2,
        }
    }
}

/// Cost components of a state. Also used for signed differences between
/// two states, in which case the components may be negative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CostBreakdown {
    /// Students of unscheduled events.
    pub distance: i64,
    /// Unscheduled events without students.
    pub empty_unscheduled: i64,
    pub conflicts: i64,
    pub precedences: i64,
    pub late: i64,
    pub consecutive: i64,
    pub isolated: i64,
}

impl CostBreakdown {
    pub fn objective(&self) -> i64 {
        self.late + self.consecutive + self.isolated
    }

    /// Conflicts plus precedences, the violations that make a timetable invalid.
    pub fn violations(&self) -> i64 {
        self.conflicts + self.precedences
    }

    pub fn hard(&self, phase: EvalPhase) -> i64 {
        self.distance + self.empty_unscheduled + phase.hard_multiplier() * self.violations()
    }

    /// Search cost `W * hard + objective`.
    pub fn scalar(&self, phase: EvalPhase, weight: i64) -> i64 {
        weight * self.hard(phase) + self.objective()
    }

    /// Flat `key=value` record.
    pub fn to_record(&self) -> String {
        format!(
            "distance={} empty_unscheduled={} conflicts={} precedences={} late={} consecutive={} isolated={} objective={}",
            self.distance,
            self.empty_unscheduled,
            self.conflicts,
            self.precedences,
            self.late,
            self.consecutive,
            self.isolated,
            self.objective()
        )
    }
}

impl fmt::Display for CostBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

impl Add for CostBreakdown {
    type Output = CostBreakdown;

    fn add(self, o: CostBreakdown) -> CostBreakdown {
        CostBreakdown {
            distance: self.distance + o.distance,
            empty_unscheduled: self.empty_unscheduled + o.empty_unscheduled,
            conflicts: self.conflicts + o.conflicts,
            precedences: self.precedences + o.precedences,
            late: self.late + o.late,
            consecutive: self.consecutive + o.consecutive,
            isolated: self.isolated + o.isolated,
        }
    }
}

impl AddAssign for CostBreakdown {
    fn add_assign(&mut self, o: CostBreakdown) {
        *self = *self + o;
    }
}

impl Sub for CostBreakdown {
    type Output = CostBreakdown;

    fn sub(self, o: CostBreakdown) -> CostBreakdown {
        CostBreakdown {
            distance: self.distance - o.distance,
            empty_unscheduled: self.empty_unscheduled - o.empty_unscheduled,
            conflicts: self.conflicts - o.conflicts,
            precedences: self.precedences - o.precedences,
            late: self.late - o.late,
            consecutive: self.consecutive - o.consecutive,
            isolated: self.isolated - o.isolated,
        }
    }
}

/// Score used to compare reported solutions: `(primary, secondary)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReportedScore {
    pub primary: i64,
    pub secondary: i64,
}

/// Reported score of a state. Full and Original report students of
/// unscheduled events and the objective; HardOnly reports the number of
/// unscheduled events and nothing else, while its search still works on
/// students.
pub fn reported_score(state: &SearchState<'_>) -> ReportedScore {
    let cost = state.cost();
    match state.instance().formulation() {
        Formulation::Full | Formulation::Original => ReportedScore {
            primary: cost.distance,
            secondary: cost.objective(),
        },
        Formulation::HardOnly => ReportedScore {
            primary: state.unscheduled_count() as i64,
            secondary: 0,
        },
    }
}

/// Consecutive and isolated cost of one student-day given the number of
/// attended events in each slot of the day.
#[inline]
pub(crate) fn day_soft(counts: &[u16]) -> (i64, i64) {
    let mut run = 0i64;
    let mut consecutive = 0i64;
    let mut total = 0u32;
    for &c in counts {
        total += c as u32;
        if c > 0 {
            run += 1;
        } else {
            consecutive += (run - 2).max(0);
            run = 0;
        }
    }
    consecutive += (run - 2).max(0);
    (consecutive, (total == 1) as i64)
}

/// Same as [`day_soft`] from the occupied-slot mask and the event count:
/// a run of `L` occupied slots holds `L - 2` windows of three.
#[inline]
fn mask_soft(mask: u64, total: i32) -> (i64, i64) {
    (
        (mask & (mask >> 1) & (mask >> 2)).count_ones() as i64,
        (total == 1) as i64,
    )
}

/// Students per last-slot-of-day placement.
pub fn soft_late(state: &SearchState<'_>) -> i64 {
    if !state.instance().formulation().has_soft() {
        return 0;
    }
    late_from(state.preprocessed(), |e| state.timeslot(e))
}

pub fn soft_consecutive(state: &SearchState<'_>) -> i64 {
    if !state.instance().formulation().has_soft() {
        return 0;
    }
    student_days_from(state.instance(), |e| state.timeslot(e)).0
}

pub fn soft_isolated(state: &SearchState<'_>) -> i64 {
    if !state.instance().formulation().has_soft() {
        return 0;
    }
    student_days_from(state.instance(), |e| state.timeslot(e)).1
}

/// `(unscheduled, conflicts, precedences)`, the latter two doubled in
/// Endgame. The first term counts empty unscheduled events as 1.
pub fn hard_costs(state: &SearchState<'_>, phase: EvalPhase) -> (i64, i64, i64) {
    let c = full_cost(state.preprocessed(), |e| state.timeslot(e));
    let m = phase.hard_multiplier();
    (
        c.distance + c.empty_unscheduled,
        m * c.conflicts,
        m * c.precedences,
    )
}

pub fn scalar_cost(breakdown: &CostBreakdown, phase: EvalPhase, weight: i64) -> i64 {
    breakdown.scalar(phase, weight)
}

fn late_from(pre: &PreprocessedInstance, slot: impl Fn(usize) -> Option<usize>) -> i64 {
    let inst = pre.instance();
    (0..pre.num_events())
        .filter(|&e| slot(e).is_some_and(|t| inst.is_last_of_day(t)))
        .map(|e| pre.enrolment(e) as i64)
        .sum()
}

fn student_days_from(inst: &Instance, slot: impl Fn(usize) -> Option<usize>) -> (i64, i64) {
    let spd = inst.slots_per_day();
    let mut counts = vec![0u16; inst.num_timeslots()];
    let (mut consecutive, mut isolated) = (0, 0);
    for s in 0..inst.num_students() {
        counts.iter_mut().for_each(|c| *c = 0);
        for &e in inst.events_of(s) {
            if let Some(t) = slot(e) {
                counts[t] += 1;
            }
        }
        for day in counts.chunks(spd) {
            let (c, i) = day_soft(day);
            consecutive += c;
            isolated += i;
        }
    }
    (consecutive, isolated)
}

/// Full recomputation from an event-to-timeslot map. Rooms never affect cost.
pub fn full_cost(
    pre: &PreprocessedInstance,
    slot: impl Fn(usize) -> Option<usize>,
) -> CostBreakdown {
    let inst = pre.instance();
    let ne = pre.num_events();
    let mut cost = CostBreakdown::default();
    let mut by_slot: Vec<Vec<usize>> = vec![Vec::new(); inst.num_timeslots()];
    for e in 0..ne {
        match slot(e) {
            Some(t) => by_slot[t].push(e),
            None => {
                cost.distance += pre.enrolment(e) as i64;
                cost.empty_unscheduled += (pre.enrolment(e) == 0) as i64;
            }
        }
    }
    for events in &by_slot {
        for (i, &a) in events.iter().enumerate() {
            for &b in &events[i + 1..] {
                if pre.conflicting(a, b) {
                    cost.conflicts += pre.pair_violation_cost(a, b) as i64;
                }
            }
        }
    }
    for &(a, b) in inst.precedences() {
        if let (Some(ta), Some(tb)) = (slot(a), slot(b)) {
            if ta >= tb {
                cost.precedences += pre.pair_violation_cost(a, b) as i64;
            }
        }
    }
    if inst.formulation().has_soft() {
        cost.late = late_from(pre, &slot);
        let (c, i) = student_days_from(inst, &slot);
        cost.consecutive = c;
        cost.isolated = i;
    }
    cost
}

/// Component-wise cost change `cost(after) - cost(before)` of an admissible
/// move, touching only the moved events, their timeslots and their students.
pub fn move_delta(state: &SearchState<'_>, mv: &Move) -> CostBreakdown {
    let pre = state.preprocessed();
    let inst = pre.instance();
    let changes = mv.changes();
    let is_moved = |e: usize| changes.iter().position(|c| c.event == e);
    let new_slot = |e: usize| match is_moved(e) {
        Some(i) => changes[i].to.timeslot,
        None => state.timeslot(e),
    };
    let mut d = CostBreakdown::default();
    let soft = inst.formulation().has_soft();

    for c in changes {
        let e = c.event;
        let n = pre.enrolment(e) as i64;
        if c.from.timeslot.is_none() {
            d.distance -= n;
            d.empty_unscheduled -= (n == 0) as i64;
        }
        if c.to.timeslot.is_none() {
            d.distance += n;
            d.empty_unscheduled += (n == 0) as i64;
        }
        if let Some(t) = c.from.timeslot {
            for &f in state.events_at(t) {
                if is_moved(f).is_none() && pre.conflicting(e, f) {
                    d.conflicts -= pre.pair_violation_cost(e, f) as i64;
                }
            }
            if soft && inst.is_last_of_day(t) {
                d.late -= n;
            }
        }
        if let Some(t) = c.to.timeslot {
            for &f in state.events_at(t) {
                if is_moved(f).is_none() && pre.conflicting(e, f) {
                    d.conflicts += pre.pair_violation_cost(e, f) as i64;
                }
            }
            if soft && inst.is_last_of_day(t) {
                d.late += n;
            }
        }
    }
    if let [a, b] = changes {
        if pre.conflicting(a.event, b.event) {
            let cost = pre.pair_violation_cost(a.event, b.event) as i64;
            let same = |x: Option<usize>, y: Option<usize>| x.is_some() && x == y;
            d.conflicts += cost
                * (same(a.to.timeslot, b.to.timeslot) as i64
                    - same(a.from.timeslot, b.from.timeslot) as i64);
        }
    }

    for (i, c) in changes.iter().enumerate() {
        for &(other, first) in pre.precedence_links(c.event) {
            if is_moved(other).is_some_and(|j| j < i) {
                continue;
            }
            let (a, b) = if first {
                (c.event, other)
            } else {
                (other, c.event)
            };
            let violated = |ta: Option<usize>, tb: Option<usize>| match (ta, tb) {
                (Some(x), Some(y)) => x >= y,
                _ => false,
            };
            let before = violated(state.timeslot(a), state.timeslot(b)) as i64;
            let after = violated(new_slot(a), new_slot(b)) as i64;
            d.precedences += (after - before) * pre.pair_violation_cost(a, b) as i64;
        }
    }

    if soft {
        let spd = inst.slots_per_day();
        for (i, c) in changes.iter().enumerate() {
            for &s in inst.students_of(c.event) {
                if changes[..i].iter().any(|p| pre.attends(p.event, s)) {
                    continue;
                }
                // net attendance change per touched timeslot
                let mut touched = [(0usize, 0i32); 4];
                let mut nt = 0;
                for k in changes.iter().filter(|k| pre.attends(k.event, s)) {
                    for (t, dv) in [(k.from.timeslot, -1), (k.to.timeslot, 1)] {
                        let Some(t) = t else { continue };
                        match touched[..nt].iter_mut().find(|(x, _)| *x == t) {
                            Some(entry) => entry.1 += dv,
                            None => {
                                touched[nt] = (t, dv);
                                nt += 1;
                            }
                        }
                    }
                }
                let mut seen = [usize::MAX; 4];
                let mut nd = 0;
                for j in 0..nt {
                    let day = touched[j].0 / spd;
                    if seen[..nd].contains(&day) {
                        continue;
                    }
                    seen[nd] = day;
                    nd += 1;
                    let (mask, total) = state.day_summary(s, day);
                    let (mut m, mut tot) = (mask, total as i32);
                    for &(t, dv) in touched[..nt].iter().filter(|(t, _)| t / spd == day) {
                        let bit = 1u64 << (t % spd);
                        if state.attendance(s, t) as i32 + dv > 0 {
                            m |= bit;
                        } else {
                            m &= !bit;
                        }
                        tot += dv;
                    }
                    let (c0, i0) = mask_soft(mask, total as i32);
                    let (c1, i1) = mask_soft(m, tot);
                    d.consecutive += c1 - c0;
                    d.isolated += i1 - i0;
                }
            }
        }
    }
    d
}

/// Scalar `ΔF` of an admissible move.
pub fn delta_cost(state: &SearchState<'_>, mv: &Move, phase: EvalPhase, weight: i64) -> i64 {
    move_delta(state, mv).scalar(phase, weight)
}
