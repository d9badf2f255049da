//! Search space, initial solutions and the move/swap neighbourhood.
//!
//! Every state kept here satisfies room compatibility, availability (after
//! window restriction) and room occupancy, and never puts more events in a
//! timeslot than there are rooms. Events compatible with every room are held
//! without a room and only get one in [`SearchState::postprocess_all_rooms`].

use rand::Rng;
use thiserror::Error;

use crate::evaluation::{full_cost, move_delta, CostBreakdown};
use crate::instance_io::Booking;
use crate::model::Instance;
use crate::preprocess::PreprocessedInstance;

/// Draw cap for [`SearchState::random_move`].
pub const DEFAULT_DRAW_CAP: usize = 1_000;
/// Redraws per event for the `I1` construction.
pub const DEFAULT_RETRY_BUDGET: usize = 100;

/// Where an event sits. `timeslot: None` is the dummy timeslot and always
/// comes with `room: None`. A scheduled event without a room is an all-room
/// event waiting for post-processing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Placement {
    pub timeslot: Option<usize>,
    pub room: Option<usize>,
}

impl Placement {
    pub const UNSCHEDULED: Placement = Placement {
        timeslot: None,
        room: None,
    };

    pub fn at(timeslot: usize, room: Option<usize>) -> Self {
        Placement {
            timeslot: Some(timeslot),
            room,
        }
    }

    pub fn is_scheduled(&self) -> bool {
        self.timeslot.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    MoveEvent,
    SwapEvents,
}

/// One event's relocation inside a move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Change {
    pub event: usize,
    pub from: Placement,
    pub to: Placement,
}

/// A move resolved against a specific state version, rooms included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    kind: MoveKind,
    changes: [Change; 2],
    version: u64,
}

impl Move {
    fn move_event(change: Change, version: u64) -> Self {
        Move {
            kind: MoveKind::MoveEvent,
            changes: [change; 2],
            version,
        }
    }

    pub fn kind(&self) -> MoveKind {
        self.kind
    }

    pub fn changes(&self) -> &[Change] {
        match self.kind {
            MoveKind::MoveEvent => &self.changes[..1],
            MoveKind::SwapEvents => &self.changes,
        }
    }

    /// The move restoring the positions this one leaves, valid right after
    /// this move has been applied.
    pub fn inverse(&self) -> Move {
        let flip = |c: Change| Change {
            event: c.event,
            from: c.to,
            to: c.from,
        };
        Move {
            kind: self.kind,
            changes: self.changes.map(flip),
            version: self.version + 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("move was resolved against state version {move_version}, state is at {state_version}")]
    StaleMove {
        move_version: u64,
        state_version: u64,
    },
    #[error("no admissible move found in {0} draws")]
    Stall(usize),
    #[error("event {event}: {reason}")]
    InvalidPlacement { event: usize, reason: String },
    #[error("expected {expected} placements, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("audit failed: {0}")]
    Audit(String),
}

/// Mutable solver state over a shared preprocessed instance.
#[derive(Debug, Clone)]
pub struct SearchState<'a> {
    pre: &'a PreprocessedInstance,
    placement: Vec<Placement>,
    slot_events: Vec<Vec<usize>>,
    room_busy: Vec<bool>,
    /// Per student and timeslot, number of attended events.
    attendance: Vec<u16>,
    /// Per student and day, bit `i` set when slot `i` of the day is attended.
    day_mask: Vec<u64>,
    /// Per student and day, number of attended events.
    day_total: Vec<u16>,
    cost: CostBreakdown,
    unscheduled: usize,
    version: u64,
}

impl<'a> SearchState<'a> {
    /// Every event unscheduled.
    pub fn empty(pre: &'a PreprocessedInstance) -> Self {
        let inst = pre.instance();
        let mut state = SearchState {
            pre,
            placement: vec![Placement::UNSCHEDULED; pre.num_events()],
            slot_events: vec![Vec::new(); inst.num_timeslots()],
            room_busy: vec![false; inst.num_timeslots() * inst.num_rooms()],
            attendance: vec![0; inst.num_students() * inst.num_timeslots()],
            day_mask: vec![0; inst.num_students() * inst.num_days()],
            day_total: vec![0; inst.num_students() * inst.num_days()],
            cost: CostBreakdown::default(),
            unscheduled: pre.num_events(),
            version: 0,
        };
        state.recompute_cost();
        state
    }

    /// Builds a state from explicit placements, rejecting anything outside
    /// the search space.
    pub fn from_placements(
        pre: &'a PreprocessedInstance,
        placements: &[Placement],
    ) -> Result<Self, SearchError> {
        if placements.len() != pre.num_events() {
            return Err(SearchError::WrongLength {
                expected: pre.num_events(),
                got: placements.len(),
            });
        }
        let mut state = SearchState::empty(pre);
        for (e, &p) in placements.iter().enumerate() {
            state.check_placeable(e, p)?;
            state.place(e, p);
        }
        state.recompute_cost();
        Ok(state)
    }

    fn check_placeable(&self, e: usize, p: Placement) -> Result<(), SearchError> {
        let bad = |reason: String| Err(SearchError::InvalidPlacement { event: e, reason });
        let pre = self.pre;
        let Some(t) = p.timeslot else {
            return match p.room {
                None => Ok(()),
                Some(r) => bad(format!("dummy timeslot paired with room {r}")),
            };
        };
        if t >= pre.num_timeslots() {
            return bad(format!("timeslot {t} out of range"));
        }
        if !pre.is_available(e, t) {
            return bad(format!("timeslot {t} not available"));
        }
        if self.slot_events[t].len() >= pre.num_rooms() {
            return bad(format!(
                "timeslot {t} already holds {} events",
                pre.num_rooms()
            ));
        }
        match (pre.is_all_room(e), p.room) {
            (true, None) => Ok(()),
            (true, Some(_)) => bad("all-room event must stay roomless during search".into()),
            (false, None) => bad("missing room".into()),
            (false, Some(r)) if r >= pre.num_rooms() || !pre.compatible(e, r) => {
                bad(format!("room {r} not compatible"))
            }
            (false, Some(r)) if self.room_busy[t * pre.num_rooms() + r] => {
                bad(format!("room {r} busy in timeslot {t}"))
            }
            (false, Some(_)) => Ok(()),
        }
    }

    pub fn preprocessed(&self) -> &'a PreprocessedInstance {
        self.pre
    }

    pub fn instance(&self) -> &'a Instance {
        self.pre.instance()
    }

    pub fn placement(&self, e: usize) -> Placement {
        self.placement[e]
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placement
    }

    #[inline]
    pub fn timeslot(&self, e: usize) -> Option<usize> {
        self.placement[e].timeslot
    }

    /// Events currently in timeslot `t`, in no particular order.
    #[inline]
    pub fn events_at(&self, t: usize) -> &[usize] {
        &self.slot_events[t]
    }

    pub fn slot_occupancy(&self, t: usize) -> usize {
        self.slot_events[t].len()
    }

    #[inline]
    pub fn room_busy(&self, t: usize, r: usize) -> bool {
        self.room_busy[t * self.pre.num_rooms() + r]
    }

    #[inline]
    pub(crate) fn attendance(&self, s: usize, t: usize) -> u16 {
        self.attendance[s * self.pre.num_timeslots() + t]
    }

    /// Occupied-slot mask and event count of a student-day.
    #[inline]
    pub(crate) fn day_summary(&self, s: usize, day: usize) -> (u64, u16) {
        let i = s * self.pre.instance().num_days() + day;
        (self.day_mask[i], self.day_total[i])
    }

    /// Running cost, kept in step with every applied move.
    pub fn cost(&self) -> CostBreakdown {
        self.cost
    }

    pub fn unscheduled_count(&self) -> usize {
        self.unscheduled
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    fn recompute_cost(&mut self) {
        self.cost = full_cost(self.pre, |e| self.placement[e].timeslot);
    }

    /// Updates structures for `e` moving to `p`; the cost is left alone.
    fn place(&mut self, e: usize, p: Placement) {
        let inst = self.pre.instance();
        let (nt, nr) = (inst.num_timeslots(), inst.num_rooms());
        let (nd, spd) = (inst.num_days(), inst.slots_per_day());
        let old = self.placement[e];
        if let Some(t) = old.timeslot {
            let list = &mut self.slot_events[t];
            let pos = list
                .iter()
                .position(|&x| x == e)
                .expect("event listed in its slot");
            list.swap_remove(pos);
            if let Some(r) = old.room {
                self.room_busy[t * nr + r] = false;
            }
            let bit = 1u64 << (t % spd);
            for &s in inst.students_of(e) {
                let a = &mut self.attendance[s * nt + t];
                *a -= 1;
                let d = s * nd + t / spd;
                self.day_total[d] -= 1;
                if *a == 0 {
                    self.day_mask[d] &= !bit;
                }
            }
        } else {
            self.unscheduled -= 1;
        }
        if let Some(t) = p.timeslot {
            self.slot_events[t].push(e);
            if let Some(r) = p.room {
                self.room_busy[t * nr + r] = true;
            }
            let bit = 1u64 << (t % spd);
            for &s in inst.students_of(e) {
                self.attendance[s * nt + t] += 1;
                let d = s * nd + t / spd;
                self.day_total[d] += 1;
                self.day_mask[d] |= bit;
            }
        } else {
            self.unscheduled += 1;
        }
        self.placement[e] = p;
    }

    /// First free compatible room of `e` in `t`, least attractive first.
    /// `vacated` is treated as free.
    fn free_room(&self, e: usize, t: usize, vacated: Option<usize>) -> Option<usize> {
        let nr = self.pre.num_rooms();
        self.pre
            .compatible_rooms(e)
            .iter()
            .copied()
            .find(|&r| !self.room_busy[t * nr + r] || Some(r) == vacated)
    }

    /// Resolves `MoveEvent(e, target)`; `None` targets the dummy timeslot.
    /// With `restricted` set, moves to the dummy timeslot are refused.
    pub fn admissible_me(&self, e: usize, target: Option<usize>, restricted: bool) -> Option<Move> {
        let from = self.placement[e];
        if target == from.timeslot {
            return None;
        }
        let to = match target {
            None if restricted => return None,
            None => Placement::UNSCHEDULED,
            Some(t) => {
                if !self.pre.is_available(e, t) || self.slot_events[t].len() >= self.pre.num_rooms()
                {
                    return None;
                }
                if self.pre.is_all_room(e) {
                    Placement::at(t, None)
                } else {
                    Placement::at(t, Some(self.free_room(e, t, None)?))
                }
            }
        };
        Some(Move::move_event(
            Change { event: e, from, to },
            self.version,
        ))
    }

    /// Resolves `SwapEvents(e1, e2)`: each event takes the other's timeslot,
    /// and the room the other leaves counts as free.
    pub fn admissible_se(&self, e1: usize, e2: usize) -> Option<Move> {
        if e1 == e2 {
            return None;
        }
        let (p1, p2) = (self.placement[e1], self.placement[e2]);
        if p1.timeslot == p2.timeslot {
            return None;
        }
        let resolve = |e: usize, target: Placement| -> Option<Placement> {
            let Some(t) = target.timeslot else {
                return Some(Placement::UNSCHEDULED);
            };
            if !self.pre.is_available(e, t) {
                return None;
            }
            if self.pre.is_all_room(e) {
                return Some(Placement::at(t, None));
            }
            Some(Placement::at(t, Some(self.free_room(e, t, target.room)?)))
        };
        let to1 = resolve(e1, p2)?;
        let to2 = resolve(e2, p1)?;
        Some(Move {
            kind: MoveKind::SwapEvents,
            changes: [
                Change {
                    event: e1,
                    from: p1,
                    to: to1,
                },
                Change {
                    event: e2,
                    from: p2,
                    to: to2,
                },
            ],
            version: self.version,
        })
    }

    /// Draws moves until one is admissible or `draw_cap` draws are spent.
    ///
    /// With probability `swap_rate` a draw is a swap of two distinct uniform
    /// events; otherwise a uniform event goes to a uniform timeslot among its
    /// available ones plus the dummy timeslot (unless `restricted`).
    pub fn random_move<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        swap_rate: f64,
        restricted: bool,
        draw_cap: usize,
    ) -> Result<Move, SearchError> {
        let ne = self.pre.num_events();
        if ne == 0 {
            return Err(SearchError::Stall(0));
        }
        for _ in 0..draw_cap {
            let candidate = match draw_kind(rng, swap_rate) {
                MoveKind::SwapEvents => {
                    if ne < 2 {
                        continue;
                    }
                    let e1 = rng.gen_range(0..ne);
                    let mut e2 = rng.gen_range(0..ne - 1);
                    if e2 >= e1 {
                        e2 += 1;
                    }
                    self.admissible_se(e1, e2)
                }
                MoveKind::MoveEvent => {
                    let e = rng.gen_range(0..ne);
                    let slots = self.pre.available_slots(e);
                    let n = slots.len() + usize::from(!restricted);
                    if n == 0 {
                        continue;
                    }
                    let i = rng.gen_range(0..n);
                    self.admissible_me(e, slots.get(i).copied(), restricted)
                }
            };
            if let Some(mv) = candidate {
                return Ok(mv);
            }
        }
        Err(SearchError::Stall(draw_cap))
    }

    fn check_fresh(&self, mv: &Move) -> Result<(), SearchError> {
        if mv.version != self.version {
            return Err(SearchError::StaleMove {
                move_version: mv.version,
                state_version: self.version,
            });
        }
        Ok(())
    }

    /// Applies a move resolved against the current state and returns the
    /// cost change it incurred.
    pub fn apply(&mut self, mv: &Move) -> Result<CostBreakdown, SearchError> {
        self.check_fresh(mv)?;
        let delta = move_delta(self, mv);
        self.commit(mv, delta);
        Ok(delta)
    }

    /// Applies a move whose delta was already computed with [`move_delta`].
    pub fn apply_with_delta(&mut self, mv: &Move, delta: CostBreakdown) -> Result<(), SearchError> {
        self.check_fresh(mv)?;
        self.commit(mv, delta);
        Ok(())
    }

    fn commit(&mut self, mv: &Move, delta: CostBreakdown) {
        // Vacate first so a swap never sees its own target room busy.
        for c in mv.changes() {
            debug_assert_eq!(self.placement[c.event], c.from);
            self.place(c.event, Placement::UNSCHEDULED);
        }
        for c in mv.changes() {
            self.place(c.event, c.to);
        }
        self.cost += delta;
        self.version += 1;
    }

    /// Rebuilds every incremental structure from the placements and compares.
    pub fn audit(&self) -> Result<(), SearchError> {
        let rebuilt = SearchState::from_placements(self.pre, &self.placement)?;
        let fail = |what: &str| Err(SearchError::Audit(what.to_string()));
        if rebuilt.room_busy != self.room_busy {
            return fail("room occupancy differs from rebuild");
        }
        if rebuilt.attendance != self.attendance {
            return fail("attendance differs from rebuild");
        }
        if rebuilt.day_mask != self.day_mask || rebuilt.day_total != self.day_total {
            return fail("student-day summaries differ from rebuild");
        }
        for (t, (a, b)) in rebuilt
            .slot_events
            .iter()
            .zip(&self.slot_events)
            .enumerate()
        {
            let (mut a, mut b) = (a.clone(), b.clone());
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return fail(&format!("event list of timeslot {t} differs from rebuild"));
            }
        }
        if rebuilt.unscheduled != self.unscheduled {
            return fail("unscheduled count differs from rebuild");
        }
        if rebuilt.cost != self.cost {
            return Err(SearchError::Audit(format!(
                "running cost {} differs from recomputed {}",
                self.cost, rebuilt.cost
            )));
        }
        Ok(())
    }

    /// Gives every scheduled all-room event a distinct free room of its
    /// timeslot, lowest id first, and returns the completed timetable.
    pub fn postprocess_all_rooms(&self) -> Vec<Option<Booking>> {
        let nr = self.pre.num_rooms();
        let mut out: Vec<Option<Booking>> = self
            .placement
            .iter()
            .map(|p| match (p.timeslot, p.room) {
                (Some(t), Some(r)) => Some(Booking {
                    timeslot: t,
                    room: r,
                }),
                _ => None,
            })
            .collect();
        for (t, events) in self.slot_events.iter().enumerate() {
            let mut roomless: Vec<usize> = events
                .iter()
                .copied()
                .filter(|&e| self.placement[e].room.is_none())
                .collect();
            if roomless.is_empty() {
                continue;
            }
            roomless.sort_unstable();
            let mut free = (0..nr).filter(|&r| !self.room_busy[t * nr + r]);
            for e in roomless {
                let r = free
                    .next()
                    .expect("occupancy bound leaves a free room for every all-room event");
                out[e] = Some(Booking {
                    timeslot: t,
                    room: r,
                });
            }
        }
        out
    }
}

/// First draw of [`SearchState::random_move`]: swap with probability `swap_rate`.
pub fn draw_kind<R: Rng + ?Sized>(rng: &mut R, swap_rate: f64) -> MoveKind {
    if rng.gen::<f64>() < swap_rate {
        MoveKind::SwapEvents
    } else {
        MoveKind::MoveEvent
    }
}

/// Greedy random construction; returns the state and the number of timeslot draws.
fn construct<'a, R: Rng + ?Sized>(
    pre: &'a PreprocessedInstance,
    rng: &mut R,
    retries: usize,
) -> (SearchState<'a>, usize) {
    let mut state = SearchState::empty(pre);
    let nr = pre.num_rooms();
    let mut draws = 0;
    for e in 0..pre.num_events() {
        let candidates: Vec<usize> = pre
            .available_slots(e)
            .iter()
            .copied()
            .filter(|&t| state.slot_events[t].len() < nr)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        for _ in 0..=retries {
            let t = candidates[rng.gen_range(0..candidates.len())];
            draws += 1;
            let placement = if pre.is_all_room(e) {
                Some(Placement::at(t, None))
            } else {
                state
                    .free_room(e, t, None)
                    .map(|r| Placement::at(t, Some(r)))
            };
            if let Some(p) = placement {
                state.place(e, p);
                break;
            }
        }
    }
    state.recompute_cost();
    (state, draws)
}

/// `I0`: each event, in id order, takes a random available timeslot that
/// still has room and the least attractive free compatible room there, or
/// stays unscheduled.
pub fn init_i0<'a, R: Rng + ?Sized>(pre: &'a PreprocessedInstance, rng: &mut R) -> SearchState<'a> {
    construct(pre, rng, 0).0
}

/// `I1`: like `I0`, but a timeslot without a free room is redrawn up to
/// `retry_budget` times before the event is left unscheduled.
pub fn init_i1<'a, R: Rng + ?Sized>(
    pre: &'a PreprocessedInstance,
    rng: &mut R,
    retry_budget: usize,
) -> SearchState<'a> {
    construct(pre, rng, retry_budget).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Formulation, InstanceData};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pre(
        caps: Vec<usize>,
        sizes: &[usize],
        timeslots: usize,
        days: usize,
    ) -> PreprocessedInstance {
        let mut next = 0;
        let enrolment = sizes
            .iter()
            .map(|&n| {
                let v: Vec<usize> = (next..next + n).collect();
                next += n;
                v
            })
            .collect();
        let inst = Instance::new(
            InstanceData {
                num_students: next,
                num_timeslots: timeslots,
                num_days: days,
                room_features: vec![vec![]; caps.len()],
                room_capacity: caps,
                event_features: vec![vec![]; sizes.len()],
                enrolment,
                ..Default::default()
            },
            Formulation::Full,
        )
        .unwrap();
        PreprocessedInstance::new(inst)
    }

    #[test]
    fn i0_single_event_always_scheduled() {
        let p = pre(vec![5], &[3], 10, 2);
        for seed in 0..20 {
            let s = init_i0(&p, &mut ChaCha8Rng::seed_from_u64(seed));
            assert!(s.placement(0).is_scheduled());
            s.audit().unwrap();
        }
    }

    #[test]
    fn pigeonhole_leaves_events_unscheduled() {
        let p = pre(vec![5], &[1; 5], 4, 2);
        let s = init_i1(&p, &mut ChaCha8Rng::seed_from_u64(1), 50);
        assert_eq!(s.unscheduled_count(), 1);
        s.audit().unwrap();
    }

    #[test]
    fn i1_zero_budget_equals_i0() {
        let p = pre(vec![5, 2, 1], &[4, 2, 1, 0, 3, 1, 2], 6, 2);
        for seed in 0..10 {
            let a = init_i0(&p, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = init_i1(&p, &mut ChaCha8Rng::seed_from_u64(seed), 0);
            assert_eq!(a.placements(), b.placements());
        }
    }

    #[test]
    fn i1_gives_up_after_budget() {
        // capacity 1 room, 3-student event: no compatible room at all
        let p = pre(vec![1], &[3], 10, 2);
        let (s, draws) = construct(&p, &mut ChaCha8Rng::seed_from_u64(0), 7);
        assert_eq!(s.placement(0), Placement::UNSCHEDULED);
        assert_eq!(draws, 8);
    }

    #[test]
    fn me_rules() {
        // rooms: 0 seats 10, 1 seats 2; event 0 (5 students) fits room 0 only;
        // event 1 (1 student) fits both; event 2 (1 student) fits both.
        let p = pre(vec![10, 2], &[5, 1, 1], 4, 2);
        let mut s = SearchState::empty(&p);
        assert!(p.is_all_room(1));
        let mv = s.admissible_me(0, Some(0), false).unwrap();
        assert_eq!(mv.changes()[0].to, Placement::at(0, Some(0)));
        s.apply(&mv).unwrap();
        // null move
        assert!(s.admissible_me(0, Some(0), false).is_none());
        // restricted: no move to the dummy timeslot
        assert!(s.admissible_me(0, None, true).is_none());
        assert!(s.admissible_me(0, None, false).is_some());
        // all-room events take no room but count towards occupancy
        let mv = s.admissible_me(1, Some(0), false).unwrap();
        assert_eq!(mv.changes()[0].to, Placement::at(0, None));
        s.apply(&mv).unwrap();
        assert!(s.admissible_me(2, Some(0), false).is_none());
        s.audit().unwrap();
    }

    #[test]
    fn me_window_and_busy_rooms() {
        // events 0 and 1 only fit room 1; event 2 fits both rooms
        let inst = Instance::new(
            InstanceData {
                num_students: 2,
                num_timeslots: 4,
                num_days: 2,
                room_capacity: vec![1, 5],
                room_features: vec![vec![], vec![]],
                event_features: vec![vec![]; 3],
                enrolment: vec![vec![0, 1], vec![0, 1], vec![]],
                availability: vec![vec![true, true, false, true], vec![true; 4], vec![true; 4]],
                ..Default::default()
            },
            Formulation::Full,
        )
        .unwrap();
        let p = PreprocessedInstance::new(inst);
        let mut s = SearchState::empty(&p);
        assert!(s.admissible_me(0, Some(2), false).is_none());
        let mv = s.admissible_me(0, Some(0), false).unwrap();
        assert_eq!(mv.changes()[0].to, Placement::at(0, Some(1)));
        s.apply(&mv).unwrap();
        assert!(s.admissible_me(1, Some(0), false).is_none());
        assert_eq!(
            s.admissible_me(1, Some(1), false).unwrap().changes()[0].to,
            Placement::at(1, Some(1))
        );
        assert!(p.is_all_room(2));
        assert_eq!(
            s.admissible_me(2, Some(0), false).unwrap().changes()[0].to,
            Placement::at(0, None)
        );
    }

    #[test]
    fn room_choice_follows_attractiveness() {
        // room 2 seats nobody, room 1 fits events 0 and 1, room 0 fits all six
        let p = pre(vec![10, 3, 0], &[2, 2, 5, 5, 5, 5], 4, 2);
        assert_eq!(p.room_order(), &[2, 1, 0]);
        let s = SearchState::empty(&p);
        let mv = s.admissible_me(0, Some(1), false).unwrap();
        assert_eq!(mv.changes()[0].to.room, Some(1));
    }

    #[test]
    fn se_rules() {
        let p = pre(vec![10, 10], &[2, 2, 2], 4, 2);
        let mut s = SearchState::from_placements(
            &p,
            &[
                Placement::at(0, None),
                Placement::at(0, None),
                Placement::at(1, None),
            ],
        )
        .unwrap();
        assert!(s.admissible_se(0, 1).is_none());
        assert!(s.admissible_se(0, 0).is_none());
        let mv = s.admissible_se(0, 2).unwrap();
        let before = s.cost();
        let d = s.apply(&mv).unwrap();
        assert_eq!(s.timeslot(0), Some(1));
        assert_eq!(s.timeslot(2), Some(0));
        assert_eq!(s.cost(), before + d);
        s.audit().unwrap();
        s.apply(&mv.inverse()).unwrap();
        assert_eq!(s.cost(), before);
        s.audit().unwrap();
    }

    #[test]
    fn se_uses_vacated_room_in_full_slot() {
        // events 0 and 1 only fit room 0; event 2 fits both and fills slot 1
        let p = pre(vec![10, 1], &[5, 5, 1], 2, 1);
        let s = SearchState::from_placements(
            &p,
            &[
                Placement::at(0, Some(0)),
                Placement::at(1, Some(0)),
                Placement::at(1, None),
            ],
        )
        .unwrap();
        let mv = s.admissible_se(0, 1).unwrap();
        assert_eq!(mv.changes()[0].to, Placement::at(1, Some(0)));
        assert_eq!(mv.changes()[1].to, Placement::at(0, Some(0)));
    }

    #[test]
    fn se_with_unscheduled_event() {
        let p = pre(vec![10], &[4, 1], 2, 1);
        // single room: both events are all-room
        let mut s =
            SearchState::from_placements(&p, &[Placement::at(0, None), Placement::UNSCHEDULED])
                .unwrap();
        let before = s.cost();
        let mv = s.admissible_se(0, 1).unwrap();
        let d = s.apply(&mv).unwrap();
        assert_eq!(d.distance, 4 - 1);
        assert_eq!(s.cost(), before + d);
        s.audit().unwrap();
    }

    #[test]
    fn stale_moves_rejected() {
        let p = pre(vec![10], &[1, 1], 4, 2);
        let mut s = SearchState::empty(&p);
        let a = s.admissible_me(0, Some(0), false).unwrap();
        let b = s.admissible_me(1, Some(1), false).unwrap();
        s.apply(&a).unwrap();
        assert!(matches!(s.apply(&b), Err(SearchError::StaleMove { .. })));
    }

    #[test]
    fn degenerate_swap_rates() {
        let p = pre(vec![10, 10], &[1, 2, 3, 1], 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = init_i0(&p, &mut rng);
        for _ in 0..500 {
            let mv = s
                .random_move(&mut rng, 0.0, false, DEFAULT_DRAW_CAP)
                .unwrap();
            assert_eq!(mv.kind(), MoveKind::MoveEvent);
            s.apply(&mv).unwrap();
            let mv = s
                .random_move(&mut rng, 1.0, false, DEFAULT_DRAW_CAP)
                .unwrap();
            assert_eq!(mv.kind(), MoveKind::SwapEvents);
            s.apply(&mv).unwrap();
        }
        s.audit().unwrap();
    }

    #[test]
    fn swap_draw_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let swaps = (0..n)
            .filter(|_| draw_kind(&mut rng, 0.4) == MoveKind::SwapEvents)
            .count();
        let frac = swaps as f64 / n as f64;
        assert!((0.38..=0.42).contains(&frac), "{frac}");
    }

    #[test]
    fn stall_reported() {
        // one event that can never move anywhere under the restriction
        let p = pre(vec![1], &[3], 4, 2);
        let s = SearchState::empty(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            s.random_move(&mut rng, 0.0, true, 50),
            Err(SearchError::Stall(50))
        );
    }

    #[test]
    fn postprocess_distributes_leftover_rooms() {
        let p = pre(vec![10, 10, 10], &[1, 1, 1], 2, 1);
        assert!((0..3).all(|e| p.is_all_room(e)));
        let s = SearchState::from_placements(&p, &[Placement::at(0, None); 3]).unwrap();
        let tt = s.postprocess_all_rooms();
        let mut rooms: Vec<usize> = tt.iter().map(|b| b.unwrap().room).collect();
        rooms.sort_unstable();
        assert_eq!(rooms, vec![0, 1, 2]);
    }

    #[test]
    fn postprocess_identity_without_all_room_events() {
        let p = pre(vec![10, 1], &[5, 5], 2, 1);
        let s = SearchState::from_placements(
            &p,
            &[Placement::at(0, Some(0)), Placement::at(1, Some(0))],
        )
        .unwrap();
        assert_eq!(
            s.postprocess_all_rooms(),
            vec![
                Some(Booking {
                    timeslot: 0,
                    room: 0
                }),
                Some(Booking {
                    timeslot: 1,
                    room: 0
                })
            ]
        );
    }

    #[test]
    fn from_placements_rejects_outside_search_space() {
        let p = pre(vec![10, 1], &[5, 1], 2, 1);
        assert!(SearchState::from_placements(
            &p,
            &[Placement::at(0, Some(1)), Placement::UNSCHEDULED]
        )
        .is_err());
        assert!(SearchState::from_placements(
            &p,
            &[Placement::at(0, None), Placement::UNSCHEDULED]
        )
        .is_err());
        assert!(SearchState::from_placements(
            &p,
            &[Placement::UNSCHEDULED, Placement::at(0, Some(0))]
        )
        .is_err());
        assert!(SearchState::from_placements(
            &p,
            &[
                Placement {
                    timeslot: None,
                    room: Some(0)
                },
                Placement::UNSCHEDULED
            ]
        )
        .is_err());
        assert!(SearchState::from_placements(&p, &[Placement::UNSCHEDULED]).is_err());
    }
}
