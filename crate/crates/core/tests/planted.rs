//! Desk-scale runs on instances with a hidden feasible timetable.

use pectt::annealer::{run, Family};
use pectt::preprocess::PreprocessedInstance;
use pectt::synthetic::{generate_planted, PlantedSpec};
use pectt::validator::validate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[test]
fn itc_sized_planted_instances_become_feasible() {
    let spec = PlantedSpec {
        events_per_student: 15,
        ..Default::default()
    };
    let results: Vec<_> = (0..2u64)
        .into_par_iter()
        .map(|seed| {
            let (inst, _) = generate_planted(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let pre = PreprocessedInstance::new(inst);
            let preset = Family::Itc2007.preset();
            let mut params = preset.params();
            params.iterations = 10_000_000;
            params.seed = seed;
            let out = run(&pre, preset.variant, &params, false).unwrap();
            let report = validate(pre.instance(), &out.timetable).unwrap();
            (seed, report.is_feasible(), report.objective())
        })
        .collect();
    for (seed, feasible, objective) in results {
        assert!(
            feasible,
            "instance {seed} not solved (objective {objective})"
        );
    }
}
