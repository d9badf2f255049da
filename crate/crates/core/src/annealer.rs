//! Simulated annealing with geometric cooling over a fixed iteration budget.
//!
//! The temperature starts at `t0` and is multiplied by `beta` after every
//! level until it reaches `t0 / rho`. The number of levels follows from
//! those three values, and the number of samples per level is chosen so the
//! whole run makes (up to rounding) the same number of proposals for any
//! temperature setting.

use std::fmt;
use std::str::FromStr;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::evaluation::{move_delta, CostBreakdown, EvalPhase};
use crate::instance_io::Booking;
use crate::model::Formulation;
use crate::preprocess::PreprocessedInstance;
use crate::search::{
    init_i0, init_i1, Placement, SearchError, SearchState, DEFAULT_DRAW_CAP, DEFAULT_RETRY_BUDGET,
};

pub const DEFAULT_BETA: f64 = 0.9999;
pub const DEFAULT_ITERATIONS: u64 = 114_000_000;
pub const DEFAULT_SWAP_RATE: f64 = 0.4;
pub const DEFAULT_WEIGHT: i64 = 1;
pub const DEFAULT_ENDGAME_FRACTION: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("start temperature must be positive, got {0}")]
    StartTemperature(f64),
    #[error("temperature ratio rho must exceed 1, got {0}")]
    Ratio(f64),
    #[error("cooling rate beta must lie in (0, 1), got {0}")]
    CoolingRate(f64),
    #[error("iteration budget must be at least 1")]
    Iterations,
    #[error("swap rate must lie in [0, 1], got {0}")]
    SwapRate(f64),
    #[error("hard-constraint weight must be at least 1, got {0}")]
    Weight(i64),
    #[error("endgame fraction must lie in [0, 1], got {0}")]
    EndgameFraction(f64),
}

/// Annealing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaParams {
    pub t0: f64,
    /// `t0 / t_min`.
    pub rho: f64,
    pub beta: f64,
    pub iterations: u64,
    pub swap_rate: f64,
    pub weight: i64,
    pub endgame_fraction: f64,
    pub seed: u64,
}

impl SaParams {
    pub fn new(t0: f64, rho: f64) -> Self {
        SaParams {
            t0,
            rho,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            swap_rate: DEFAULT_SWAP_RATE,
            weight: DEFAULT_WEIGHT,
            endgame_fraction: DEFAULT_ENDGAME_FRACTION,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(ParamError::StartTemperature(self.t0));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(ParamError::Ratio(self.rho));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ParamError::CoolingRate(self.beta));
        }
        if self.iterations == 0 {
            return Err(ParamError::Iterations);
        }
        if !(0.0..=1.0).contains(&self.swap_rate) {
            return Err(ParamError::SwapRate(self.swap_rate));
        }
        if self.weight < 1 {
            return Err(ParamError::Weight(self.weight));
        }
        if !(0.0..=1.0).contains(&self.endgame_fraction) {
            return Err(ParamError::EndgameFraction(self.endgame_fraction));
        }
        Ok(())
    }

    pub fn t_min(&self) -> f64 {
        self.t0 / self.rho
    }
}

/// Shape of the cooling schedule derived from [`SaParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    /// Temperature levels.
    pub levels: u64,
    /// Proposals per level.
    pub samples_per_level: u64,
}

impl Schedule {
    pub fn total(&self) -> u64 {
        self.levels * self.samples_per_level
    }
}

/// Levels `K = round(ln rho / ln(1/beta))` and samples `N = round(I / K)`,
/// both at least 1. The log base `beta` of `t0/t_min` is negative; its
/// magnitude is the number of cooling steps.
pub fn samples_per_level(params: &SaParams) -> Result<Schedule, ParamError> {
    params.validate()?;
    let levels = (params.rho.ln() / (1.0 / params.beta).ln())
        .round()
        .max(1.0) as u64;
    let samples = ((params.iterations as f64 / levels as f64).round() as u64).max(1);
    Ok(Schedule {
        levels,
        samples_per_level: samples,
    })
}

/// Metropolis rule: improvements and ties always pass, a worsening of
/// `delta` passes with probability `exp(-delta / temperature)`.
pub fn accept<R: Rng + ?Sized>(delta: i64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0 {
        return true;
    }
    let p = (-(delta as f64) / temperature).exp();
    p > 0.0 && rng.gen::<f64>() < p
}

/// The three solver configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverVariant {
    /// `I0` start, unrestricted move and swap.
    I0MeSe,
    /// `I0` start, moves never unschedule an event.
    I0MeMinusSe,
    /// `I1` start, moves never unschedule an event.
    I1MeMinusSe,
}

impl SolverVariant {
    pub fn restricted(self) -> bool {
        !matches!(self, SolverVariant::I0MeSe)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolverVariant::I0MeSe => "i0-me-se",
            SolverVariant::I0MeMinusSe => "i0-meminus-se",
            SolverVariant::I1MeMinusSe => "i1-meminus-se",
        }
    }
}

impl fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "i0-me-se" => Ok(SolverVariant::I0MeSe),
            "i0-me--se" | "i0-meminus-se" => Ok(SolverVariant::I0MeMinusSe),
            "i1-me--se" | "i1-meminus-se" => Ok(SolverVariant::I1MeMinusSe),
            other => Err(format!(
                "unknown variant `{other}` (expected i0-me-se, i0-meminus-se or i1-meminus-se)"
            )),
        }
    }
}

/// Instance families with tuned settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Itc2007,
    /// Small Lewis & Paechter instances; no tuned setting of their own, they
    /// reuse the medium one.
    LewisSmall,
    LewisMedium,
    LewisBig,
    Itc2002,
    MetaheuristicsNetwork,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Itc2007,
        Family::LewisSmall,
        Family::LewisMedium,
        Family::LewisBig,
        Family::Itc2002,
        Family::MetaheuristicsNetwork,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Itc2007 => "itc2007",
            Family::LewisSmall => "lewis-small",
            Family::LewisMedium => "lewis-medium",
            Family::LewisBig => "lewis-big",
            Family::Itc2002 => "itc2002",
            Family::MetaheuristicsNetwork => "metaheuristics-network",
        }
    }

    pub fn formulation(self) -> Formulation {
        match self {
            Family::Itc2007 => Formulation::Full,
            Family::LewisSmall | Family::LewisMedium | Family::LewisBig => Formulation::HardOnly,
            Family::Itc2002 | Family::MetaheuristicsNetwork => Formulation::Original,
        }
    }

    pub fn preset(self) -> FamilyPreset {
        let (variant, t0, rho) = match self {
            Family::Itc2007 => (SolverVariant::I0MeMinusSe, 20.41, 33.88),
            Family::LewisSmall | Family::LewisMedium => (SolverVariant::I0MeSe, 31.62, 257.63),
            Family::LewisBig => (SolverVariant::I0MeSe, 36.30, 295.12),
            Family::Itc2002 => (SolverVariant::I1MeMinusSe, 3.89, 31.62),
            Family::MetaheuristicsNetwork => (SolverVariant::I0MeSe, 3.89, 31.62),
        };
        FamilyPreset { variant, t0, rho }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == key)
            .or(match key.as_str() {
                "lewis-med" => Some(Family::LewisMedium),
                "mn" | "metaheuristics" => Some(Family::MetaheuristicsNetwork),
                _ => None,
            })
            .ok_or_else(|| {
                let names: Vec<_> = Family::ALL.iter().map(|f| f.as_str()).collect();
                format!(
                    "unknown family `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Tuned solver and temperatures for a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyPreset {
    pub variant: SolverVariant,
    pub t0: f64,
    pub rho: f64,
}

impl FamilyPreset {
    pub fn params(&self) -> SaParams {
        SaParams::new(self.t0, self.rho)
    }
}

/// One line of the optional per-level trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub level: u64,
    pub temperature: f64,
    pub current_f: i64,
    pub best_distance: i64,
    pub best_objective: i64,
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome<'a> {
    /// Best state seen, before room post-processing.
    pub best: SearchState<'a>,
    /// Best state with all-room events given concrete rooms.
    pub timetable: Vec<Option<Booking>>,
    pub final_state: SearchState<'a>,
    pub initial_cost: CostBreakdown,
    pub schedule: Schedule,
    /// Proposals made, stalled draws included.
    pub iterations: u64,
    pub stalls: u64,
    pub accepted: u64,
    pub trace: Vec<TraceRow>,
}

/// Lexicographic key for the best state of a run. Invalid states rank last;
/// valid ones follow the reported score, ties going to fewer unscheduled
/// events.
fn rank(state: &SearchState<'_>) -> (i64, i64, i64, i64) {
    let c = state.cost();
    match state.instance().formulation() {
        Formulation::Full | Formulation::Original => (
            c.violations(),
            c.distance,
            c.empty_unscheduled,
            c.objective(),
        ),
        Formulation::HardOnly => (
            c.violations(),
            state.unscheduled_count() as i64,
            c.distance,
            0,
        ),
    }
}

/// Runs one annealing trajectory. Identical inputs give identical outputs.
pub fn run<'a>(
    pre: &'a PreprocessedInstance,
    variant: SolverVariant,
    params: &SaParams,
    with_trace: bool,
) -> Result<RunOutcome<'a>, ParamError> {
    let schedule = samples_per_level(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut state = match variant {
        SolverVariant::I0MeSe | SolverVariant::I0MeMinusSe => init_i0(pre, &mut rng),
        SolverVariant::I1MeMinusSe => init_i1(pre, &mut rng, DEFAULT_RETRY_BUDGET),
    };
    let initial_cost = state.cost();
    let restricted = variant.restricted();

    let mut best_key = rank(&state);
    let mut best: Vec<Placement> = state.placements().to_vec();
    let mut best_cost = state.cost();

    let total = schedule.total();
    let endgame_len = (params.endgame_fraction * total as f64).ceil() as u64;
    let endgame_start = total.saturating_sub(endgame_len);

    let mut iterations = 0u64;
    let mut stalls = 0u64;
    let mut accepted = 0u64;
    let mut trace = Vec::new();
    let mut temperature = params.t0;

    if pre.num_events() > 0 {
        for level in 0..schedule.levels {
            for _ in 0..schedule.samples_per_level {
                let phase = if iterations >= endgame_start {
                    EvalPhase::Endgame
                } else {
                    EvalPhase::Normal
                };
                iterations += 1;
                let mv = match state.random_move(
                    &mut rng,
                    params.swap_rate,
                    restricted,
                    DEFAULT_DRAW_CAP,
                ) {
                    Ok(mv) => mv,
                    Err(SearchError::Stall(_)) => {
                        stalls += 1;
                        continue;
                    }
                    Err(e) => unreachable!("random_move only stalls: {e}"),
                };
                let delta = move_delta(&state, &mv);
                if accept(delta.scalar(phase, params.weight), temperature, &mut rng) {
                    state
                        .apply_with_delta(&mv, delta)
                        .expect("move resolved against current state");
                    accepted += 1;
                    let key = rank(&state);
                    if key < best_key {
                        best_key = key;
                        best.copy_from_slice(state.placements());
                        best_cost = state.cost();
                    }
                }
            }
            if with_trace {
                let phase = if iterations > endgame_start {
                    EvalPhase::Endgame
                } else {
                    EvalPhase::Normal
                };
                trace.push(TraceRow {
                    level,
                    temperature,
                    current_f: state.cost().scalar(phase, params.weight),
                    best_distance: best_cost.distance,
                    best_objective: best_cost.objective(),
                });
            }
            temperature *= params.beta;
        }
    }
    debug!(
        "run finished: {iterations} proposals, {accepted} accepted, {stalls} stalls, best {best_cost}"
    );

    let best = SearchState::from_placements(pre, &best).expect("snapshot of a reachable state");
    let timetable = best.postprocess_all_rooms();
    Ok(RunOutcome {
        best,
        timetable,
        final_state: state,
        initial_cost,
        schedule,
        iterations,
        stalls,
        accepted,
        trace,
    })
}
