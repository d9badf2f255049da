#![allow(dead_code)]

use pectt::instance_io::Booking;
use pectt::model::{Formulation, Instance};
use pectt::synthetic::{generate, SyntheticSpec};
use pectt::validator::validate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// At most four events over two days of three timeslots.
pub fn tiny_instance(seed: u64, events: usize) -> Instance {
    let spec = SyntheticSpec {
        events,
        rooms: 2,
        features: 1,
        students: 6,
        slots_per_day: 3,
        days: 2,
        attendance: 0.45,
        feature_need: 0.3,
        unavailability: 0.2,
        precedence: 0.3,
        formulation: Formulation::Full,
    };
    generate(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Small instance within `E <= 12, R <= 3, T <= 15, S <= 20`.
pub fn small_instance(seed: u64, formulation: Formulation) -> Instance {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = SyntheticSpec {
        events: rng.gen_range(2..=12),
        rooms: rng.gen_range(1..=3),
        features: rng.gen_range(0..=2),
        students: rng.gen_range(1..=20),
        slots_per_day: rng.gen_range(2..=5),
        days: 3,
        attendance: rng.gen_range(0.1..0.5),
        feature_need: 0.2,
        unavailability: 0.15,
        precedence: 0.08,
        formulation,
    };
    generate(&spec, &mut rng).unwrap()
}

fn assign_rooms(inst: &Instance, slots: &[Option<usize>]) -> Option<Vec<Option<Booking>>> {
    fn fits(inst: &Instance, e: usize, r: usize) -> bool {
        inst.room_capacity(r) >= inst.students_of(e).len()
            && (0..inst.num_features())
                .all(|f| !inst.event_needs_feature(e, f) || inst.room_has_feature(r, f))
    }
    fn go(
        inst: &Instance,
        slots: &[Option<usize>],
        e: usize,
        out: &mut Vec<Option<Booking>>,
    ) -> bool {
        if e == slots.len() {
            return true;
        }
        let Some(t) = slots[e] else {
            out.push(None);
            if go(inst, slots, e + 1, out) {
                return true;
            }
            out.pop();
            return false;
        };
        for r in 0..inst.num_rooms() {
            let taken = out.iter().any(|b| {
                *b == Some(Booking {
                    timeslot: t,
                    room: r,
                })
            });
            if !taken && fits(inst, e, r) {
                out.push(Some(Booking {
                    timeslot: t,
                    room: r,
                }));
                if go(inst, slots, e + 1, out) {
                    return true;
                }
                out.pop();
            }
        }
        false
    }
    let mut out = Vec::new();
    go(inst, slots, 0, &mut out).then_some(out)
}

/// Best `(distance, objective)` over every valid timetable, by enumeration
/// of all timeslot vectors (the dummy timeslot included).
pub fn enumerate_optimum(inst: &Instance) -> (i64, i64) {
    let ne = inst.num_events();
    let choices = inst.num_timeslots() + 1;
    let mut best = (i64::MAX, i64::MAX);
    let mut code = vec![0usize; ne];
    loop {
        let slots: Vec<Option<usize>> = code.iter().map(|&c| (c > 0).then(|| c - 1)).collect();
        if let Some(timetable) = assign_rooms(inst, &slots) {
            let report = validate(inst, &timetable).unwrap();
            if report.is_valid() {
                best = best.min(report.score());
            }
        }
        let mut i = 0;
        while i < ne {
            code[i] += 1;
            if code[i] < choices {
                break;
            }
            code[i] = 0;
            i += 1;
        }
        if i == ne {
            break;
        }
    }
    best
}
