//! Random small instances for tests and experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Formulation, Instance, InstanceData, ModelError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub events: usize,
    pub rooms: usize,
    pub features: usize,
    pub students: usize,
    pub slots_per_day: usize,
    pub days: usize,
    /// Probability that a student attends a given event.
    pub attendance: f64,
    /// Probability that an event requires a given feature.
    pub feature_need: f64,
    /// Probability that an event is unavailable in a given timeslot.
    pub unavailability: f64,
    /// Probability of an ordered pair `(a, b)` with `a < b`.
    pub precedence: f64,
    pub formulation: Formulation,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            events: 20,
            rooms: 3,
            features: 2,
            students: 15,
            slots_per_day: 9,
            days: 5,
            attendance: 0.15,
            feature_need: 0.2,
            unavailability: 0.1,
            precedence: 0.02,
            formulation: Formulation::Full,
        }
    }
}

/// Builds a random instance. Precedences always form a DAG and are only
/// generated, like restricted availability, for the full formulation.
pub fn generate<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    rng: &mut R,
) -> Result<Instance, ModelError> {
    let full = spec.formulation == Formulation::Full;
    let num_timeslots = spec.slots_per_day * spec.days;
    let enrolment: Vec<Vec<usize>> = (0..spec.events)
        .map(|_| {
            (0..spec.students)
                .filter(|_| rng.gen_bool(spec.attendance))
                .collect()
        })
        .collect();
    let largest = enrolment.iter().map(Vec::len).max().unwrap_or(0);
    let room_capacity: Vec<usize> = (0..spec.rooms)
        .map(|_| rng.gen_range(largest / 2..=largest + 2))
        .collect();
    let room_features: Vec<Vec<bool>> = (0..spec.rooms)
        .map(|_| (0..spec.features).map(|_| rng.gen_bool(0.6)).collect())
        .collect();
    let event_features: Vec<Vec<bool>> = (0..spec.events)
        .map(|_| {
            (0..spec.features)
                .map(|_| rng.gen_bool(spec.feature_need))
                .collect()
        })
        .collect();
    let availability = if full && spec.unavailability > 0.0 {
        (0..spec.events)
            .map(|_| {
                (0..num_timeslots)
                    .map(|_| !rng.gen_bool(spec.unavailability))
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut precedences = Vec::new();
    if full && spec.precedence > 0.0 {
        let mut order: Vec<usize> = (0..spec.events).collect();
        order.shuffle(rng);
        for i in 0..spec.events {
            for j in i + 1..spec.events {
                if rng.gen_bool(spec.precedence) {
                    precedences.push((order[i], order[j]));
                }
            }
        }
    }
    Instance::new(
        InstanceData {
            num_students: spec.students,
            num_features: spec.features,
            num_timeslots,
            num_days: spec.days,
            room_capacity,
            enrolment,
            room_features,
            event_features,
            availability,
            precedences,
        },
        spec.formulation,
    )
}

/// Shape of an instance built around a hidden feasible timetable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    pub events: usize,
    pub rooms: usize,
    pub features: usize,
    pub students: usize,
    /// Events attended by each student, at most one per timeslot.
    pub events_per_student: usize,
    pub unavailability: f64,
    pub precedences: usize,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            events: 400,
            rooms: 10,
            features: 10,
            students: 300,
            events_per_student: 20,
            unavailability: 0.1,
            precedences: 20,
        }
    }
}

/// Builds a full-formulation instance on the 45-slot week together with a
/// timetable that satisfies every hard constraint.
pub fn generate_planted<R: Rng + ?Sized>(
    spec: &PlantedSpec,
    rng: &mut R,
) -> Result<(Instance, Vec<(usize, usize)>), ModelError> {
    const SLOTS: usize = 45;
    let mut cells: Vec<(usize, usize)> = (0..SLOTS)
        .flat_map(|t| (0..spec.rooms).map(move |r| (t, r)))
        .collect();
    cells.shuffle(rng);
    cells.truncate(spec.events);
    let mut by_slot: Vec<Vec<usize>> = vec![Vec::new(); SLOTS];
    for (e, &(t, _)) in cells.iter().enumerate() {
        by_slot[t].push(e);
    }
    let busy: Vec<usize> = (0..SLOTS).filter(|&t| !by_slot[t].is_empty()).collect();

    let mut enrolment = vec![Vec::new(); cells.len()];
    for s in 0..spec.students {
        let mut slots = busy.clone();
        slots.shuffle(rng);
        for &t in slots.iter().take(spec.events_per_student) {
            let e = *by_slot[t].choose(rng).expect("busy slot");
            enrolment[e].push(s);
        }
    }
    let mut room_capacity = vec![0usize; spec.rooms];
    for (e, &(_, r)) in cells.iter().enumerate() {
        room_capacity[r] = room_capacity[r].max(enrolment[e].len());
    }
    for c in &mut room_capacity {
        *c += rng.gen_range(0..=5);
    }
    let room_features: Vec<Vec<bool>> = (0..spec.rooms)
        .map(|_| (0..spec.features).map(|_| rng.gen_bool(0.5)).collect())
        .collect();
    let event_features: Vec<Vec<bool>> = cells
        .iter()
        .map(|&(_, r)| {
            room_features[r]
                .iter()
                .map(|&has| has && rng.gen_bool(0.3))
                .collect()
        })
        .collect();
    let availability: Vec<Vec<bool>> = cells
        .iter()
        .map(|&(planted, _)| {
            (0..SLOTS)
                .map(|t| t == planted || !rng.gen_bool(spec.unavailability))
                .collect()
        })
        .collect();
    let mut precedences = Vec::new();
    while precedences.len() < spec.precedences && cells.len() >= 2 {
        let a = rng.gen_range(0..cells.len());
        let b = rng.gen_range(0..cells.len());
        if cells[a].0 < cells[b].0 {
            precedences.push((a, b));
        }
    }
    let inst = Instance::new(
        InstanceData {
            num_students: spec.students,
            num_features: spec.features,
            num_timeslots: SLOTS,
            num_days: 5,
            room_capacity,
            enrolment,
            room_features,
            event_features,
            availability,
            precedences,
        },
        Formulation::Full,
    )?;
    Ok((inst, cells))
}
