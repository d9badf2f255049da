//! Acceptance gate. Prints one `[PASS]`/`[FAIL]`/`[SKIP]` line per criterion
//! and exits non-zero if any criterion fails.
//!
//! Benchmark data is read from `$PECTT_DATA_DIR` (default `<workspace>/data`):
//! `itc2007/comp-2007-2-{5,6,7,8}.tim` and `lewis-small/*.tim` (20 files).
//! The full-budget check runs only with `PECTT_LONG=1`.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use pectt::annealer::{
    run, samples_per_level, Family, SaParams, SolverVariant, DEFAULT_ITERATIONS,
};
use pectt::bench::{run_benchmark, BenchConfig, BenchEntry};
use pectt::evaluation::{full_cost, move_delta, EvalPhase};
use pectt::instance_io::{write_instance, InstanceFormat};
use pectt::model::{Formulation, Instance, InstanceData};
use pectt::preprocess::{propagate_precedences, PreprocessedInstance};
use pectt::search::{init_i0, Placement, SearchState};
use pectt::synthetic::{generate, SyntheticSpec};
use pectt::validator::{validate, ViolationKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C1_INSTANCES: u64 = 20;
const C1_MOVES: usize = 10_000;
const C4_INSTANCES: u64 = 5;
const C4_SEEDS: u64 = 5;
const C4_MIN_HITS: usize = 4;
const C4_ITERATIONS: u64 = 1_000_000;
const C5_ITERATIONS: u64 = 10_000_000;
const C5_RUNS: usize = 10;
const C5_MIN_FEASIBLE: usize = 8;
const C6_RUNS: usize = 10;
const C6_MAX_BEST_OBJECTIVE: i64 = 5;
const C7_ITERATIONS: u64 = 10_000_000;
const C7_RUNS: usize = 5;
const C7_INSTANCES: usize = 20;
const C8_PAIRS: usize = 10;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn data_dir() -> PathBuf {
    std::env::var_os("PECTT_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn c1_c2() -> (Verdict, Verdict) {
    let mut delta_mismatch = 0usize;
    let mut validator_mismatch = 0usize;
    let mut audit_failures = 0usize;
    let mut room_violations = 0usize;
    let mut moves = 0usize;
    let formulations = [
        Formulation::Full,
        Formulation::Original,
        Formulation::HardOnly,
    ];
    for seed in 0..C1_INSTANCES {
        let formulation = formulations[seed as usize % 3];
        let inst = common::small_instance(seed, formulation);
        let pre = PreprocessedInstance::new(inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = init_i0(&pre, &mut rng);
        let restricted = seed % 2 == 1;
        for _ in 0..C1_MOVES {
            let Ok(mv) = state.random_move(&mut rng, 0.4, restricted, 1000) else {
                continue;
            };
            let before = state.cost();
            let predicted = move_delta(&state, &mv);
            state.apply(&mv).unwrap();
            moves += 1;
            let recomputed = full_cost(&pre, |e| state.timeslot(e));
            if recomputed - before != predicted || recomputed != state.cost() {
                delta_mismatch += 1;
            }
            if state.audit().is_err() {
                audit_failures += 1;
            }
            let timetable = state.postprocess_all_rooms();
            let report = validate(pre.instance(), &timetable).unwrap();
            let c = state.cost();
            let empty = (0..pre.num_events())
                .filter(|&e| timetable[e].is_none() && pre.enrolment(e) == 0)
                .count() as i64;
            let agrees = report.distance() == c.distance
                && empty == c.empty_unscheduled
                && report.conflicts() == c.conflicts
                && report.precedences() == c.precedences
                && report.late() == c.late
                && report.consecutive() == c.consecutive
                && report.isolated() == c.isolated;
            if !agrees {
                validator_mismatch += 1;
            }
            let rooms_ok = [
                ViolationKind::Compatibility,
                ViolationKind::Occupancy,
                ViolationKind::Availability,
            ]
            .iter()
            .all(|&k| report.total(k).count == 0);
            if !rooms_ok {
                room_violations += 1;
            }
        }
    }
    let c1 = format!(
        "{C1_INSTANCES} instances, {moves} moves: {delta_mismatch} delta mismatches, {validator_mismatch} validator mismatches (tolerance 0)"
    );
    let c2 = format!(
        "{moves} moves: {audit_failures} audit failures, {room_violations} post-processed timetables with H2/H3/H4 violations (tolerance 0)"
    );
    let v1 = if delta_mismatch == 0
        && validator_mismatch == 0
        && moves >= C1_INSTANCES as usize * C1_MOVES / 2
    {
        Verdict::Pass(c1)
    } else {
        Verdict::Fail(c1)
    };
    let v2 = if audit_failures == 0 && room_violations == 0 {
        Verdict::Pass(c2)
    } else {
        Verdict::Fail(c2)
    };
    (v1, v2)
}

fn two_events(sizes: [usize; 2], shared: bool, precedence: bool) -> Instance {
    let a: Vec<usize> = (0..sizes[0]).collect();
    let start = if shared { sizes[0] - 1 } else { sizes[0] };
    let b: Vec<usize> = (start..start + sizes[1]).collect();
    Instance::new(
        InstanceData {
            num_students: start + sizes[1],
            num_timeslots: 45,
            num_days: 5,
            room_capacity: vec![100, 100],
            room_features: vec![vec![], vec![]],
            event_features: vec![vec![], vec![]],
            enrolment: vec![a, b],
            precedences: if precedence { vec![(0, 1)] } else { vec![] },
            ..Default::default()
        },
        Formulation::Full,
    )
    .unwrap()
}

fn c3() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;

    let s2 = Instance::new(
        InstanceData {
            num_students: 3,
            num_timeslots: 45,
            num_days: 5,
            room_capacity: vec![10],
            room_features: vec![vec![]],
            event_features: vec![vec![]; 4],
            enrolment: vec![vec![0, 1, 2]; 4],
            ..Default::default()
        },
        Formulation::Full,
    )
    .unwrap();
    let pre = PreprocessedInstance::new(s2);
    let placements: Vec<Placement> = (0..4).map(|t| Placement::at(t, None)).collect();
    let state = SearchState::from_placements(&pre, &placements).unwrap();
    let report = validate(pre.instance(), &state.postprocess_all_rooms()).unwrap();
    ok &= state.cost().consecutive == 6 && report.consecutive() == 6;
    notes.push(format!(
        "S2 = {}/{} (expected 6)",
        state.cost().consecutive,
        report.consecutive()
    ));

    let prop = propagate_precedences(2, 45, &[(0, 1)]);
    let (w0, w1) = (prop.windows[0], prop.windows[1]);
    ok &= (w0.min, w0.max, w1.min, w1.max) == (0, 43, 1, 44);
    notes.push(format!(
        "windows [{},{}]/[{},{}] (expected [1,44]/[2,45])",
        w0.min + 1,
        w0.max + 1,
        w1.min + 1,
        w1.max + 1
    ));

    let pre = PreprocessedInstance::new(two_events([3, 5], true, false));
    let state =
        SearchState::from_placements(&pre, &[Placement::at(0, None), Placement::at(0, None)])
            .unwrap();
    let c = state.cost();
    let conflict = (
        c.conflicts,
        c.hard(EvalPhase::Normal),
        c.hard(EvalPhase::Endgame),
    );
    ok &= conflict == (3, 3, 6);
    notes.push(format!(
        "conflict cost/F/F_endgame = {conflict:?} (expected (3, 3, 6))"
    ));

    let pre = PreprocessedInstance::new(two_events([4, 2], false, true));
    let mut state =
        SearchState::from_placements(&pre, &[Placement::at(5, None), Placement::at(7, None)])
            .unwrap();
    let mv = state.admissible_me(0, Some(7), false).unwrap();
    let d = move_delta(&state, &mv);
    state.apply(&mv).unwrap();
    let precedence = (
        d.precedences,
        d.hard(EvalPhase::Normal),
        d.hard(EvalPhase::Endgame),
    );
    ok &= precedence == (2, 2, 4);
    notes.push(format!(
        "precedence delta/hard/hard_endgame = {precedence:?} (expected (2, 2, 4))"
    ));

    let text = notes.join("; ");
    if ok {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

fn c4() -> Verdict {
    let mut per_instance = Vec::new();
    let mut ok = true;
    let mut seed = 0u64;
    let mut used = 0u64;
    while used < C4_INSTANCES {
        let inst = common::tiny_instance(1000 + seed, 2 + (seed as usize % 3));
        seed += 1;
        let optimum = common::enumerate_optimum(&inst);
        // skip instances whose optimum is the empty timetable
        if optimum.0
            == (0..inst.num_events())
                .map(|e| inst.students_of(e).len() as i64)
                .sum::<i64>()
        {
            continue;
        }
        used += 1;
        let pre = PreprocessedInstance::new(inst);
        let mut hits = 0;
        for s in 0..C4_SEEDS {
            let mut params = Family::MetaheuristicsNetwork.preset().params();
            params.iterations = C4_ITERATIONS;
            params.seed = s;
            let out = run(&pre, SolverVariant::I0MeSe, &params, false).unwrap();
            let report = validate(pre.instance(), &out.timetable).unwrap();
            if report.is_valid() && report.score() == optimum {
                hits += 1;
            }
        }
        ok &= hits >= C4_MIN_HITS;
        per_instance.push(format!(
            "E={} opt={:?} hits {hits}/{C4_SEEDS}",
            pre.num_events(),
            optimum
        ));
    }
    let text = format!(
        "{} (need >= {C4_MIN_HITS}/{C4_SEEDS} each)",
        per_instance.join(", ")
    );
    if ok {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

fn itc_entries(numbers: &[usize]) -> Result<Vec<BenchEntry>, String> {
    let dir = data_dir().join("itc2007");
    numbers
        .iter()
        .map(|n| {
            let p = dir.join(format!("comp-2007-2-{n}.tim"));
            if p.is_file() {
                Ok(BenchEntry::new(p, Family::Itc2007))
            } else {
                Err(format!("missing {}", p.display()))
            }
        })
        .collect()
}

fn c5() -> Verdict {
    let entries = match itc_entries(&[5, 6, 7, 8]) {
        Ok(e) => e,
        Err(m) => return Verdict::Fail(format!("ITC 2007 data unavailable: {m}")),
    };
    let config = BenchConfig {
        runs: C5_RUNS,
        iterations: Some(C5_ITERATIONS),
        jobs: jobs(),
        ..Default::default()
    };
    let records = match run_benchmark(&entries, &config) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let rows = pectt::bench::aggregate(&records);
    let ok = rows.iter().all(|r| r.feasible_runs >= C5_MIN_FEASIBLE);
    let text: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{} feasible {}/{} avg objective {:.1}",
                r.instance, r.feasible_runs, r.runs, r.avg_objective
            )
        })
        .collect();
    let text = format!("{} (need >= {C5_MIN_FEASIBLE}/{C5_RUNS})", text.join(", "));
    if ok {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

fn c6() -> Verdict {
    if std::env::var("PECTT_LONG").as_deref() != Ok("1") {
        return Verdict::Skip("full budget run, set PECTT_LONG=1 to enable".into());
    }
    let entries = match itc_entries(&[8]) {
        Ok(e) => e,
        Err(m) => return Verdict::Fail(format!("ITC 2007 data unavailable: {m}")),
    };
    let config = BenchConfig {
        runs: C6_RUNS,
        iterations: Some(DEFAULT_ITERATIONS),
        jobs: jobs(),
        ..Default::default()
    };
    let records = match run_benchmark(&entries, &config) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let row = &pectt::bench::aggregate(&records)[0];
    let text = format!(
        "feasible {}/{}, best objective {:?} (need all feasible, best <= {C6_MAX_BEST_OBJECTIVE})",
        row.feasible_runs, row.runs, row.best_feasible_objective
    );
    if row.feasible_runs == row.runs
        && row
            .best_feasible_objective
            .is_some_and(|o| o <= C6_MAX_BEST_OBJECTIVE)
    {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

fn c7() -> Verdict {
    let dir = data_dir().join("lewis-small");
    let entries = match pectt::bench::scan_dir(&dir, Family::LewisSmall) {
        Ok(e) if e.len() == C7_INSTANCES => e,
        Ok(e) => {
            return Verdict::Fail(format!(
                "Lewis small data unavailable: {} holds {} of {C7_INSTANCES} instances",
                dir.display(),
                e.len()
            ))
        }
        Err(e) => return Verdict::Fail(format!("Lewis small data unavailable: {e}")),
    };
    let config = BenchConfig {
        runs: C7_RUNS,
        iterations: Some(C7_ITERATIONS),
        jobs: jobs(),
        ..Default::default()
    };
    let records = match run_benchmark(&entries, &config) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    let failed = records.iter().filter(|r| !r.feasible).count();
    let text = format!(
        "{failed} of {} runs left events unscheduled (tolerance 0)",
        records.len()
    );
    if failed == 0 {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

fn c8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0f64;
    let mut ok = true;
    for _ in 0..C8_PAIRS {
        let params = SaParams::new(rng.gen_range(1.0..=100.0), rng.gen_range(10.0..=1000.0));
        let s = samples_per_level(&params).unwrap();
        let gap = s.total().abs_diff(params.iterations);
        ok &= gap <= s.levels;
        worst = worst.max(gap as f64 / s.levels as f64);
    }
    let text = format!("{C8_PAIRS} (T0, rho) pairs, worst |K*N - I| / K = {worst:.3} (need <= 1)");
    if ok {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

fn c9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        events: 40,
        rooms: 4,
        students: 30,
        ..Default::default()
    };
    let inst = generate(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let inst_path = dir.path().join("det.tim");
    std::fs::write(
        &inst_path,
        write_instance(&inst, InstanceFormat::WithAvailability),
    )
    .unwrap();
    let manifest = dir.path().join("manifest.txt");
    std::fs::write(&manifest, "det.tim itc2007\n").unwrap();

    let exe = env!("CARGO_BIN_EXE_pectt");
    let solve = |tag: &str| -> Vec<u8> {
        let out = dir.path().join(format!("{tag}.sln"));
        let status = Command::new(exe)
            .args(["solve", "--instance"])
            .arg(&inst_path)
            .args(["--iterations", "200000", "--seed", "17", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.code().is_some_and(|c| c <= 1), "{status:?}");
        std::fs::read(out).unwrap()
    };
    let bench = |tag: &str| -> Vec<String> {
        let csv = dir.path().join(format!("{tag}.csv"));
        let status = Command::new(exe)
            .args(["bench", "--manifest"])
            .arg(&manifest)
            .args([
                "--runs",
                "3",
                "--jobs",
                "3",
                "--iterations",
                "100000",
                "--seed",
                "5",
                "--csv",
            ])
            .arg(&csv)
            .output()
            .unwrap();
        assert!(status.status.code().is_some_and(|c| c <= 1), "{status:?}");
        std::fs::read_to_string(csv)
            .unwrap()
            .lines()
            .map(|l| {
                l.rsplit_once(',')
                    .map(|(head, _)| head.to_string())
                    .unwrap_or_default()
            })
            .collect()
    };
    let same_solution = solve("a") == solve("b");
    let same_rows = bench("a") == bench("b");
    let text = format!(
        "solution files identical: {same_solution}; CSV rows identical except wall_ms: {same_rows}"
    );
    if same_solution && same_rows {
        Verdict::Pass(text)
    } else {
        Verdict::Fail(text)
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    let mut report = |id: &str, title: &str, start: Instant, v: Verdict| {
        let secs = start.elapsed().as_secs_f64();
        let (tag, text) = match v {
            Verdict::Pass(t) => ("PASS", t),
            Verdict::Fail(t) => {
                failed += 1;
                ("FAIL", t)
            }
            Verdict::Skip(t) => ("SKIP", t),
        };
        println!("[{tag}] {id} {title}: {text} ({secs:.1}s)");
    };

    let t = Instant::now();
    let (v1, v2) = c1_c2();
    report(
        "C1",
        "incremental cost equals recomputation and validator",
        t,
        v1,
    );
    report("C2", "search-space invariants", t, v2);
    let t = Instant::now();
    report("C3", "worked examples", t, c3());
    let t = Instant::now();
    report("C4", "tiny-instance optimality", t, c4());
    let t = Instant::now();
    report("C5", "ITC 2007 instances 5-8 feasibility at 1e7", t, c5());
    let t = Instant::now();
    report("C6", "ITC 2007 instance 8 at full budget", t, c6());
    let t = Instant::now();
    report("C7", "Lewis small instances fully scheduled", t, c7());
    let t = Instant::now();
    report("C8", "iteration budget invariance", t, c8());
    let t = Instant::now();
    report("C9", "determinism across processes", t, c9());

    println!("{failed} criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
