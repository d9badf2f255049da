//! Seeded benchmark harness: several independent runs per instance, each
//! re-certified by the validator, with per-run and aggregate CSV output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::annealer::{run, Family, ParamError, SaParams, SolverVariant, TraceRow};
use crate::instance_io::{load_instance, save_solution, InstanceFormat, IoError};
use crate::model::Formulation;
use crate::preprocess::PreprocessedInstance;
use crate::validator::{validate, ValidateError};

pub const RUNS_HEADER: &str =
    "instance,family,variant,seed,iterations,distance,objective,feasible,wall_ms";
pub const AGGREGATE_HEADER: &str =
    "instance,family,variant,runs,feasible_runs,pct_feasible,avg_distance,avg_objective,best_feasible_objective";
pub const TRACE_HEADER: &str = "level,temperature,current_f,best_distance,best_objective";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{instance}: validator rejected the solver output: {source}")]
    Validate {
        instance: String,
        source: ValidateError,
    },
    #[error("cannot build thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchEntry {
    pub path: PathBuf,
    pub family: Family,
    pub formulation: Formulation,
}

impl BenchEntry {
    pub fn new(path: PathBuf, family: Family) -> Self {
        BenchEntry {
            path,
            family,
            formulation: family.formulation(),
        }
    }

    pub fn name(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.display().to_string())
    }
}

/// Parses `path family [formulation]` lines; `#` starts a comment.
/// Relative paths are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<BenchEntry>, BenchError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| BenchError::Manifest {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!(
                "expected `path family [formulation]`, got `{line}`"
            )));
        }
        let family: Family = fields[1].parse().map_err(err)?;
        let mut entry = BenchEntry::new(base.join(fields[0]), family);
        if let Some(f) = fields.get(2) {
            entry.formulation = f.parse().map_err(err)?;
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// All `*.tim` files of a directory, sorted by name, tagged with one family.
pub fn scan_dir(dir: &Path, family: Family) -> Result<Vec<BenchEntry>, BenchError> {
    let read = fs::read_dir(dir).map_err(|source| BenchError::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tim"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| BenchEntry::new(p, family))
        .collect())
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs: usize,
    pub base_seed: u64,
    pub jobs: usize,
    /// Overrides the family's tuned variant.
    pub variant: Option<SolverVariant>,
    /// Overrides the family's tuned temperatures and budget when set.
    pub params: Option<SaParams>,
    pub iterations: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub trace: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            runs: 10,
            base_seed: 0,
            jobs: 1,
            variant: None,
            params: None,
            iterations: None,
            out_dir: None,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub family: Family,
    pub variant: SolverVariant,
    pub seed: u64,
    pub iterations: u64,
    /// Score primary component from the validator.
    pub distance: i64,
    pub objective: i64,
    pub feasible: bool,
    pub wall_ms: u128,
    pub trace: Vec<TraceRow>,
}

impl RunRecord {
    /// CSV row without the wall-clock column, stable across repeated runs.
    pub fn deterministic_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.instance,
            self.family,
            self.variant,
            self.seed,
            self.iterations,
            self.distance,
            self.objective,
            self.feasible
        )
    }

    pub fn csv_row(&self) -> String {
        format!("{},{}", self.deterministic_row(), self.wall_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub instance: String,
    pub family: Family,
    pub variant: SolverVariant,
    pub runs: usize,
    pub feasible_runs: usize,
    pub avg_distance: f64,
    /// Mean objective over all runs, feasible or not.
    pub avg_objective: f64,
    pub best_feasible_objective: Option<i64>,
}

impl AggregateRow {
    pub fn pct_feasible(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            100.0 * self.feasible_runs as f64 / self.runs as f64
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.1},{:.2},{:.2},{}",
            self.instance,
            self.family,
            self.variant,
            self.runs,
            self.feasible_runs,
            self.pct_feasible(),
            self.avg_distance,
            self.avg_objective,
            self.best_feasible_objective
                .map(|o| o.to_string())
                .unwrap_or_default()
        )
    }
}

/// Groups consecutive records of the same instance.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let mut rows: Vec<AggregateRow> = Vec::new();
    for chunk in records.chunk_by(|a, b| a.instance == b.instance && a.family == b.family) {
        let n = chunk.len();
        rows.push(AggregateRow {
            instance: chunk[0].instance.clone(),
            family: chunk[0].family,
            variant: chunk[0].variant,
            runs: n,
            feasible_runs: chunk.iter().filter(|r| r.feasible).count(),
            avg_distance: chunk.iter().map(|r| r.distance as f64).sum::<f64>() / n as f64,
            avg_objective: chunk.iter().map(|r| r.objective as f64).sum::<f64>() / n as f64,
            best_feasible_objective: chunk
                .iter()
                .filter(|r| r.feasible)
                .map(|r| r.objective)
                .min(),
        });
    }
    rows
}

fn run_one(
    entry: &BenchEntry,
    pre: &PreprocessedInstance,
    config: &BenchConfig,
    replication: usize,
) -> Result<RunRecord, BenchError> {
    let preset = entry.family.preset();
    let variant = config.variant.unwrap_or(preset.variant);
    let mut params = config.params.unwrap_or_else(|| preset.params());
    if let Some(i) = config.iterations {
        params.iterations = i;
    }
    params.seed = config.base_seed + replication as u64;
    let name = entry.name();

    let start = Instant::now();
    let outcome = run(pre, variant, &params, config.trace)?;
    let wall_ms = start.elapsed().as_millis();

    let report =
        validate(pre.instance(), &outcome.timetable).map_err(|source| BenchError::Validate {
            instance: name.clone(),
            source,
        })?;
    if let Some(dir) = &config.out_dir {
        let path = dir.join(format!("{name}_{}.sln", params.seed));
        save_solution(&path, &outcome.timetable)?;
    }
    let (distance, objective) = report.score();
    Ok(RunRecord {
        instance: name,
        family: entry.family,
        variant,
        seed: params.seed,
        iterations: outcome.iterations,
        distance,
        objective,
        feasible: report.is_feasible(),
        wall_ms,
        trace: outcome.trace,
    })
}

/// Runs every entry `config.runs` times with seeds `base_seed + i`.
/// Records come back ordered by entry, then replication, whatever `jobs` is.
pub fn run_benchmark(
    entries: &[BenchEntry],
    config: &BenchConfig,
) -> Result<Vec<RunRecord>, BenchError> {
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).map_err(|source| BenchError::Write {
            path: dir.clone(),
            source,
        })?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let mut records = Vec::with_capacity(entries.len() * config.runs);
    for entry in entries {
        let format = InstanceFormat::for_formulation(entry.formulation);
        let inst = load_instance(&entry.path, format, entry.formulation)?;
        let pre = PreprocessedInstance::new(inst);
        let batch: Vec<Result<RunRecord, BenchError>> = pool.install(|| {
            (0..config.runs)
                .into_par_iter()
                .map(|i| run_one(entry, &pre, config, i))
                .collect()
        });
        for r in batch {
            let r = r?;
            log::info!("{}", r.csv_row());
            records.push(r);
        }
    }
    Ok(records)
}

pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.level, t.temperature, t.current_f, t.best_distance, t.best_objective
        );
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), BenchError> {
    fs::write(path, contents).map_err(|source| BenchError::Write {
        path: path.to_path_buf(),
        source,
    })
}
