//! Derived structures the search runs on.
//!
//! Building a [`PreprocessedInstance`] performs, in order:
//!
//! 1. the event/room compatibility matrix and the student-conflict matrix;
//! 2. precedence propagation into per-event timeslot windows;
//! 3. extra conflicts between events that can only use the same single room;
//! 4. detection of events compatible with every room, which the search keeps
//!    roomless until post-processing;
//! 5. a room order of ascending attractiveness, the number of compatible
//!    events that are not of the kind in step 4.
//!
//! After this point the search never looks at capacities or features again.

use std::collections::HashMap;

use log::warn;

use crate::model::Instance;

/// Dense row-major boolean matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = v;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Inclusive range of timeslots an event may take, or empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotWindow {
    pub min: usize,
    pub max: usize,
    pub empty: bool,
}

impl SlotWindow {
    pub fn contains(&self, t: usize) -> bool {
        !self.empty && self.min <= t && t <= self.max
    }
}

/// Result of precedence propagation.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub windows: Vec<SlotWindow>,
    /// Events on or downstream of a precedence cycle; their windows are empty.
    pub cyclic_events: Vec<usize>,
}

/// Computes each event's window from the longest precedence chains through it.
///
/// For an acyclic relation the window of `e` is `[in(e), T-1-out(e)]` where
/// `in`/`out` are the lengths in arcs of the longest chains ending/starting
/// at `e`. Events that Kahn's algorithm cannot order in either direction sit
/// on or behind a cycle and get an empty window.
pub fn propagate_precedences(
    num_events: usize,
    num_timeslots: usize,
    precedences: &[(usize, usize)],
) -> Propagation {
    let mut succ = vec![Vec::new(); num_events];
    let mut pred = vec![Vec::new(); num_events];
    for &(a, b) in precedences {
        succ[a].push(b);
        pred[b].push(a);
    }
    let longest = |out: &[Vec<usize>], inc: &[Vec<usize>]| -> Vec<Option<usize>> {
        let mut indeg: Vec<usize> = inc.iter().map(Vec::len).collect();
        let mut depth: Vec<Option<usize>> = vec![None; num_events];
        let mut stack: Vec<usize> = (0..num_events).filter(|&e| indeg[e] == 0).collect();
        let mut best = vec![0usize; num_events];
        while let Some(e) = stack.pop() {
            let d = best[e];
            depth[e] = Some(d);
            for &n in &out[e] {
                best[n] = best[n].max(d + 1);
                indeg[n] -= 1;
                if indeg[n] == 0 {
                    stack.push(n);
                }
            }
        }
        depth
    };
    let chain_in = longest(&succ, &pred);
    let chain_out = longest(&pred, &succ);

    let mut cyclic_events = Vec::new();
    let windows = (0..num_events)
        .map(|e| match (chain_in[e], chain_out[e]) {
            (Some(i), Some(o)) if i + o < num_timeslots => SlotWindow {
                min: i,
                max: num_timeslots - 1 - o,
                empty: false,
            },
            (Some(_), Some(_)) => SlotWindow {
                min: 0,
                max: 0,
                empty: true,
            },
            _ => {
                cyclic_events.push(e);
                SlotWindow {
                    min: 0,
                    max: 0,
                    empty: true,
                }
            }
        })
        .collect();
    if !cyclic_events.is_empty() {
        warn!(
            "precedence cycle: {} events can only stay unscheduled ({:?})",
            cyclic_events.len(),
            cyclic_events
        );
    }
    Propagation {
        windows,
        cyclic_events,
    }
}

/// Compatibility by capacity and features, conflicts by shared students.
pub fn build_matrices(inst: &Instance) -> (BitMatrix, BitMatrix) {
    let (ne, nr) = (inst.num_events(), inst.num_rooms());
    let mut theta_r = BitMatrix::new(ne, nr);
    for e in 0..ne {
        let size = inst.students_of(e).len();
        for r in 0..nr {
            let ok = inst.room_capacity(r) >= size
                && (0..inst.num_features())
                    .all(|f| !inst.event_needs_feature(e, f) || inst.room_has_feature(r, f));
            theta_r.set(e, r, ok);
        }
    }
    let mut theta_e = BitMatrix::new(ne, ne);
    for s in 0..inst.num_students() {
        let evs = inst.events_of(s);
        for (i, &a) in evs.iter().enumerate() {
            for &b in &evs[i + 1..] {
                theta_e.set(a, b, true);
                theta_e.set(b, a, true);
            }
        }
    }
    (theta_r, theta_e)
}

fn compatible_count(theta_r: &BitMatrix, e: usize) -> usize {
    theta_r.row(e).iter().filter(|&&b| b).count()
}

/// Events compatible with every room.
pub fn identify_all_room_events(theta_r: &BitMatrix) -> Vec<bool> {
    (0..theta_r.rows())
        .map(|e| theta_r.row(e).iter().all(|&b| b))
        .collect()
}

/// Events with exactly one compatible room. Pairs sharing that room
/// become conflicting in `theta_e`. Events already classed as all-room are
/// left out, which only matters when there is a single room.
pub fn identify_one_room_events(
    theta_r: &BitMatrix,
    theta_e: &mut BitMatrix,
    all_room: &[bool],
) -> HashMap<usize, usize> {
    let mut one_room = HashMap::new();
    let mut by_room: Vec<Vec<usize>> = vec![Vec::new(); theta_r.cols()];
    for (e, &everywhere) in all_room.iter().enumerate() {
        if everywhere || compatible_count(theta_r, e) != 1 {
            continue;
        }
        let r = theta_r
            .row(e)
            .iter()
            .position(|&b| b)
            .expect("one compatible room");
        one_room.insert(e, r);
        by_room[r].push(e);
    }
    for events in &by_room {
        for (i, &a) in events.iter().enumerate() {
            for &b in &events[i + 1..] {
                theta_e.set(a, b, true);
                theta_e.set(b, a, true);
            }
        }
    }
    one_room
}

/// Rooms sorted by ascending attractiveness, ties by id.
pub fn rank_rooms(theta_r: &BitMatrix, all_room: &[bool]) -> Vec<usize> {
    let mut counts = vec![0usize; theta_r.cols()];
    for e in (0..theta_r.rows()).filter(|&e| !all_room[e]) {
        for (r, &ok) in theta_r.row(e).iter().enumerate() {
            counts[r] += ok as usize;
        }
    }
    let mut order: Vec<usize> = (0..theta_r.cols()).collect();
    order.sort_by_key(|&r| (counts[r], r));
    order
}

/// An instance plus everything the search derives from it.
#[derive(Debug, Clone)]
pub struct PreprocessedInstance {
    instance: Instance,
    theta_r: BitMatrix,
    theta_e: BitMatrix,
    windows: Vec<SlotWindow>,
    cyclic_events: Vec<usize>,
    /// Restricted availability as explicit slot lists.
    available_slots: Vec<Vec<usize>>,
    available: BitMatrix,
    all_room: Vec<bool>,
    one_room: HashMap<usize, usize>,
    room_order: Vec<usize>,
    /// Per event, compatible rooms in `room_order` order.
    compatible_rooms: Vec<Vec<usize>>,
    enrolment: Vec<usize>,
    /// Per event, `(other, self_is_first)` for every precedence touching it.
    precedence_links: Vec<Vec<(usize, bool)>>,
    attends: BitMatrix,
}

impl PreprocessedInstance {
    pub fn new(instance: Instance) -> Self {
        let (ne, nt) = (instance.num_events(), instance.num_timeslots());
        let (theta_r, mut theta_e) = build_matrices(&instance);
        let prop = propagate_precedences(ne, nt, instance.precedences());
        let all_room = identify_all_room_events(&theta_r);
        let one_room = identify_one_room_events(&theta_r, &mut theta_e, &all_room);
        let room_order = rank_rooms(&theta_r, &all_room);

        let mut available = BitMatrix::new(ne, nt);
        let mut available_slots = Vec::with_capacity(ne);
        for e in 0..ne {
            let slots: Vec<usize> = (0..nt)
                .filter(|&t| instance.is_available(e, t) && prop.windows[e].contains(t))
                .collect();
            for &t in &slots {
                available.set(e, t, true);
            }
            available_slots.push(slots);
        }
        let compatible_rooms = (0..ne)
            .map(|e| {
                room_order
                    .iter()
                    .copied()
                    .filter(|&r| theta_r.get(e, r))
                    .collect()
            })
            .collect();
        let enrolment = (0..ne).map(|e| instance.students_of(e).len()).collect();
        let mut precedence_links = vec![Vec::new(); ne];
        for &(a, b) in instance.precedences() {
            precedence_links[a].push((b, true));
            precedence_links[b].push((a, false));
        }
        let mut attends = BitMatrix::new(ne, instance.num_students());
        for e in 0..ne {
            for &s in instance.students_of(e) {
                attends.set(e, s, true);
            }
        }
        PreprocessedInstance {
            instance,
            theta_r,
            theta_e,
            windows: prop.windows,
            cyclic_events: prop.cyclic_events,
            available_slots,
            available,
            all_room,
            one_room,
            room_order,
            compatible_rooms,
            enrolment,
            precedence_links,
            attends,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn num_events(&self) -> usize {
        self.instance.num_events()
    }

    pub fn num_rooms(&self) -> usize {
        self.instance.num_rooms()
    }

    pub fn num_timeslots(&self) -> usize {
        self.instance.num_timeslots()
    }

    pub fn theta_r(&self) -> &BitMatrix {
        &self.theta_r
    }

    pub fn theta_e(&self) -> &BitMatrix {
        &self.theta_e
    }

    #[inline]
    pub fn compatible(&self, e: usize, r: usize) -> bool {
        self.theta_r.get(e, r)
    }

    #[inline]
    pub fn conflicting(&self, a: usize, b: usize) -> bool {
        self.theta_e.get(a, b)
    }

    pub fn slot_window(&self, e: usize) -> SlotWindow {
        self.windows[e]
    }

    pub fn cyclic_events(&self) -> &[usize] {
        &self.cyclic_events
    }

    /// Availability after window restriction.
    #[inline]
    pub fn is_available(&self, e: usize, t: usize) -> bool {
        self.available.get(e, t)
    }

    pub fn available_slots(&self, e: usize) -> &[usize] {
        &self.available_slots[e]
    }

    #[inline]
    pub fn is_all_room(&self, e: usize) -> bool {
        self.all_room[e]
    }

    pub fn all_room_events(&self) -> impl Iterator<Item = usize> + '_ {
        self.all_room
            .iter()
            .enumerate()
            .filter_map(|(e, &a)| a.then_some(e))
    }

    pub fn one_room_events(&self) -> &HashMap<usize, usize> {
        &self.one_room
    }

    pub fn room_order(&self) -> &[usize] {
        &self.room_order
    }

    /// Compatible rooms of `e`, least attractive first.
    #[inline]
    pub fn compatible_rooms(&self, e: usize) -> &[usize] {
        &self.compatible_rooms[e]
    }

    #[inline]
    pub fn enrolment(&self, e: usize) -> usize {
        self.enrolment[e]
    }

    /// Cost of a violated conflict or precedence between two events: the
    /// smaller enrolment, at least 1.
    #[inline]
    pub fn pair_violation_cost(&self, a: usize, b: usize) -> usize {
        self.enrolment[a].min(self.enrolment[b]).max(1)
    }

    #[inline]
    pub fn precedence_links(&self, e: usize) -> &[(usize, bool)] {
        &self.precedence_links[e]
    }

    #[inline]
    pub fn attends(&self, e: usize, s: usize) -> bool {
        self.attends.get(e, s)
    }
}
