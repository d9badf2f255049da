use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use pectt::annealer::{run, Family, SaParams, SolverVariant};
use pectt::bench::{
    aggregate, aggregate_csv, parse_manifest, run_benchmark, runs_csv, scan_dir, trace_csv,
    write_file, BenchConfig, BenchError,
};
use pectt::instance_io::{load_instance, save_solution, InstanceFormat};
use pectt::model::Formulation;
use pectt::preprocess::PreprocessedInstance;
use pectt::validator::{validate, validate_file, ValidateFileError};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pectt",
    version,
    about = "Post-enrolment course timetabling solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the best timetable.
    Solve(SolveArgs),
    /// Check a timetable and report violations and score.
    Validate(ValidateArgs),
    /// Seeded replications over many instances with CSV output.
    Bench(BenchArgs),
    /// Print preprocessing results for an instance.
    PreprocessDump(InstanceArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Constraint set; defaults to the family's formulation or `full`.
    #[arg(long)]
    formulation: Option<Formulation>,
    /// File layout; defaults to the one matching the formulation.
    #[arg(long)]
    format: Option<InstanceFormat>,
    /// Instance family, used for defaults.
    #[arg(long)]
    family: Option<Family>,
}

impl InstanceArgs {
    fn resolve(&self) -> (Formulation, InstanceFormat) {
        let formulation = self
            .formulation
            .or(self.family.map(Family::formulation))
            .unwrap_or(Formulation::Full);
        let format = self
            .format
            .unwrap_or(InstanceFormat::for_formulation(formulation));
        (formulation, format)
    }
}

#[derive(Args)]
struct SaArgs {
    /// Take variant and temperatures from this family's tuned setting.
    #[arg(long)]
    preset: Option<Family>,
    #[arg(long)]
    variant: Option<SolverVariant>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iterations: Option<u64>,
    /// Probability of proposing a swap.
    #[arg(long)]
    sr: Option<f64>,
    #[arg(long)]
    weight: Option<i64>,
    #[arg(long)]
    endgame_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SaArgs {
    fn explicit(&self) -> bool {
        self.t0.is_some()
            || self.rho.is_some()
            || self.beta.is_some()
            || self.sr.is_some()
            || self.weight.is_some()
            || self.endgame_fraction.is_some()
    }

    fn resolve(&self, family: Option<Family>) -> (SolverVariant, SaParams) {
        let preset = self.preset.or(family).unwrap_or(Family::Itc2007).preset();
        let mut p = preset.params();
        if let Some(v) = self.t0 {
            p.t0 = v;
        }
        if let Some(v) = self.rho {
            p.rho = v;
        }
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.iterations {
            p.iterations = v;
        }
        if let Some(v) = self.sr {
            p.swap_rate = v;
        }
        if let Some(v) = self.weight {
            p.weight = v;
        }
        if let Some(v) = self.endgame_fraction {
            p.endgame_fraction = v;
        }
        p.seed = self.seed;
        (self.variant.unwrap_or(preset.variant), p)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[command(flatten)]
    sa: SaArgs,
    /// Solution file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-level trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long)]
    solution: PathBuf,
    /// Print `key=value` lines instead of the report.
    #[arg(long)]
    summary: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Lines of `path family [formulation]`.
    #[arg(long, conflicts_with = "dir", required_unless_present = "dir")]
    manifest: Option<PathBuf>,
    /// Every `*.tim` file in this directory, with `--family`.
    #[arg(long, requires = "family")]
    dir: Option<PathBuf>,
    #[arg(long)]
    family: Option<Family>,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Per-run CSV; the aggregate goes next to it with an `_aggregate` suffix.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for solution files (and traces with `--trace`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    sa: SaArgs,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<pectt::instance_io::IoError> for Failure {
    fn from(e: pectt::instance_io::IoError) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Params(p) => Failure::Usage(p.to_string()),
            BenchError::Manifest { .. } => Failure::Usage(e.to_string()),
            other => Failure::Io(other.to_string()),
        }
    }
}

fn solve(args: &SolveArgs) -> Result<bool, Failure> {
    let (variant, params) = args.sa.resolve(args.input.family);
    params
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let (formulation, format) = args.input.resolve();
    let inst = load_instance(&args.input.instance, format, formulation)?;
    let pre = PreprocessedInstance::new(inst);
    info!(
        "{} events, {} rooms, {} students, variant {variant}, t0 {}, rho {}",
        pre.num_events(),
        pre.num_rooms(),
        pre.instance().num_students(),
        params.t0,
        params.rho
    );
    let outcome = run(&pre, variant, &params, args.trace.is_some())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let report =
        validate(pre.instance(), &outcome.timetable).map_err(|e| Failure::Io(e.to_string()))?;
    match &args.out {
        Some(path) => save_solution(path, &outcome.timetable)?,
        None => print!("{}", pectt::instance_io::write_solution(&outcome.timetable)),
    }
    if let Some(path) = &args.trace {
        write_file(path, &trace_csv(&outcome.trace))?;
    }
    let (p, s) = report.score();
    eprintln!(
        "iterations={} distance={} objective={} feasible={} score=({p},{s})",
        outcome.iterations,
        report.distance(),
        report.objective(),
        report.is_feasible()
    );
    Ok(report.is_feasible())
}

fn validate_cmd(args: &ValidateArgs) -> Result<bool, Failure> {
    let (formulation, format) = args.input.resolve();
    let report =
        validate_file(&args.input.instance, &args.solution, format, formulation).map_err(|e| {
            match e {
                ValidateFileError::Io(e) => Failure::Io(e.to_string()),
                ValidateFileError::Validate(e) => Failure::Io(e.to_string()),
            }
        })?;
    if args.summary {
        print!("{}", report.summary());
    } else {
        println!("{report}");
    }
    Ok(report.is_feasible())
}

fn aggregate_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}_aggregate.csv"))
}

fn bench(args: &BenchArgs) -> Result<bool, Failure> {
    let entries = match (&args.manifest, &args.dir) {
        (Some(m), _) => {
            let text = std::fs::read_to_string(m)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", m.display())))?;
            let base = m.parent().unwrap_or(Path::new("."));
            parse_manifest(&text, base)?
        }
        (None, Some(d)) => scan_dir(d, args.family.expect("clap enforces --family"))?,
        (None, None) => unreachable!("clap enforces --manifest or --dir"),
    };
    if entries.is_empty() {
        warn!("no instances to run");
    }
    let explicit = args.sa.explicit();
    let (variant, params) = args.sa.resolve(args.family);
    if explicit {
        params
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let config = BenchConfig {
        runs: args.runs,
        base_seed: args.sa.seed,
        jobs: args.jobs,
        variant: args.sa.variant.or(explicit.then_some(variant)),
        params: explicit.then_some(params),
        iterations: args.sa.iterations,
        out_dir: args.out_dir.clone(),
        trace: args.trace,
    };
    let records = run_benchmark(&entries, &config)?;
    let rows = aggregate(&records);
    match &args.csv {
        Some(path) => {
            write_file(path, &runs_csv(&records))?;
            write_file(&aggregate_path(path), &aggregate_csv(&rows))?;
        }
        None => {
            print!("{}", runs_csv(&records));
            eprint!("{}", aggregate_csv(&rows));
        }
    }
    if let (true, Some(dir)) = (args.trace, &args.out_dir) {
        for r in &records {
            write_file(
                &dir.join(format!("{}_{}_trace.csv", r.instance, r.seed)),
                &trace_csv(&r.trace),
            )?;
        }
    }
    Ok(records.iter().all(|r| r.feasible))
}

fn preprocess_dump(args: &InstanceArgs) -> Result<bool, Failure> {
    let (formulation, format) = args.resolve();
    let inst = load_instance(&args.instance, format, formulation)?;
    let pre = PreprocessedInstance::new(inst);
    let ne = pre.num_events();
    println!(
        "events={ne} rooms={} timeslots={}",
        pre.num_rooms(),
        pre.num_timeslots()
    );
    let all_room: Vec<usize> = pre.all_room_events().collect();
    println!("all_room_events={}", all_room.len());
    let mut one_room: Vec<_> = pre
        .one_room_events()
        .iter()
        .map(|(&e, &r)| (e, r))
        .collect();
    one_room.sort_unstable();
    println!("one_room_events={}", one_room.len());
    println!("cyclic_events={}", pre.cyclic_events().len());
    println!("room_order={:?}", pre.room_order());
    println!("event,enrolment,compatible_rooms,conflicts,window_min,window_max,available_slots");
    for e in 0..ne {
        let w = pre.slot_window(e);
        let conflicts = (0..ne).filter(|&o| o != e && pre.conflicting(e, o)).count();
        let (lo, hi) = if w.empty {
            ("-".to_string(), "-".to_string())
        } else {
            (w.min.to_string(), w.max.to_string())
        };
        println!(
            "{e},{},{},{conflicts},{lo},{hi},{}",
            pre.enrolment(e),
            pre.compatible_rooms(e).len(),
            pre.available_slots(e).len()
        );
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Validate(a) => validate_cmd(a),
        Command::Bench(a) => bench(a),
        Command::PreprocessDump(a) => preprocess_dump(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_INFEASIBLE),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}
