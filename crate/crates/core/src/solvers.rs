//! Classical QUBO solvers and the multi-shot harness.
//!
//! Every stochastic solver runs `shots` independent chains; shot `i` is
//! seeded with `seed ^ i`. The lowest-energy sample across shots is the
//! result, ties going to the lower shot index.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qubo::{bits_to_index, index_to_bits, QuboError, QuboProblem};

/// Largest dimension accepted by [`solve_exhaustive`].
pub const MAX_EXHAUSTIVE_DIM: usize = 24;

// Incremental energies drift; re-evaluate exactly this often.
const RESYNC_INTERVAL: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exhaustive,
    #[serde(alias = "sa")]
    SimulatedAnnealing,
    Tabu,
}

impl std::str::FromStr for SolverKind {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "sa" | "simulated_annealing" | "simulated-annealing" => Ok(Self::SimulatedAnnealing),
            "tabu" => Ok(Self::Tabu),
            other => Err(SolverError::InvalidConfig(format!("unknown solver kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub solver_kind: SolverKind,
    pub shots: usize,
    pub seed: u64,
    pub sa_sweeps: usize,
    pub sa_temp_initial: f64,
    pub sa_temp_final: f64,
    /// Interpret the SA temperatures as multiples of the problem's largest
    /// absolute coefficient instead of absolute energies.
    pub sa_scale_temperatures: bool,
    pub tabu_tenure: usize,
    pub tabu_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            solver_kind: SolverKind::SimulatedAnnealing,
            shots: 10,
            seed: 0,
            sa_sweeps: 1000,
            sa_temp_initial: 10.0,
            sa_temp_final: 0.05,
            sa_scale_temperatures: false,
            tabu_tenure: 8,
            tabu_iterations: 200,
        }
    }
}

impl SolverConfig {
    /// Named presets: `default`, `digital` (large-budget annealing standing
    /// in for a digital annealer), `short` (a deliberately small budget) and
    /// `tabu`.
    pub fn preset(name: &str) -> Result<Self, SolverError> {
        let base = Self::default();
        match name {
            "default" => Ok(base),
            "digital" => Ok(Self {
                shots: 10,
                sa_sweeps: 2000,
                sa_temp_initial: 1.0,
                sa_temp_final: 1e-4,
                sa_scale_temperatures: true,
                ..base
            }),
            "short" => Ok(Self {
                shots: 1,
                sa_sweeps: 10,
                sa_temp_initial: 1.0,
                sa_temp_final: 1e-4,
                sa_scale_temperatures: true,
                ..base
            }),
            "tabu" => Ok(Self {
                solver_kind: SolverKind::Tabu,
                ..base
            }),
            other => Err(SolverError::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if self.shots == 0 {
            return bad("shots must be at least 1");
        }
        if self.sa_sweeps == 0 {
            return bad("sa_sweeps must be positive");
        }
        if !(self.sa_temp_final > 0.0 && self.sa_temp_initial > self.sa_temp_final)
            || !self.sa_temp_initial.is_finite()
        {
            return bad("temperatures must satisfy sa_temp_initial > sa_temp_final > 0");
        }
        if self.tabu_tenure == 0 || self.tabu_iterations == 0 {
            return bad("tabu_tenure and tabu_iterations must be positive");
        }
        Ok(())
    }
}

/// One solver output: a bit assignment and its energy under
/// [`QuboProblem::evaluate_energy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitstringSample {
    pub bits: Vec<u8>,
    pub energy: f64,
    pub shot_index: usize,
    pub solver_id: String,
}

impl BitstringSample {
    pub fn new(
        problem: &QuboProblem,
        bits: Vec<u8>,
        shot_index: usize,
        solver_id: &str,
    ) -> Result<Self, QuboError> {
        let energy = problem.evaluate_energy(&bits)?;
        Ok(Self {
            bits,
            energy,
            shot_index,
            solver_id: solver_id.to_string(),
        })
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub best: BitstringSample,
    pub all_samples: Vec<BitstringSample>,
    #[serde(with = "durations_as_secs")]
    pub shot_wall_times: Vec<Duration>,
}

impl SolveResult {
    fn from_shots(shots: Vec<(BitstringSample, Duration)>) -> Self {
        let (all_samples, shot_wall_times): (Vec<_>, Vec<_>) = shots.into_iter().unzip();
        let best = all_samples
            .iter()
            .min_by(|a, b| {
                a.energy
                    .total_cmp(&b.energy)
                    .then(a.shot_index.cmp(&b.shot_index))
            })
            .expect("at least one shot")
            .clone();
        Self {
            best,
            all_samples,
            shot_wall_times,
        }
    }
}

mod durations_as_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(v: &[Duration], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(Duration::as_secs_f64))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Duration>, D::Error> {
        let secs = Vec::<f64>::deserialize(d)?;
        Ok(secs.into_iter().map(|s| Duration::from_secs_f64(s.max(0.0))).collect())
    }
}

/// Dispatches on `config.solver_kind`.
pub fn solve(problem: &QuboProblem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    match config.solver_kind {
        SolverKind::Exhaustive => solve_exhaustive(problem),
        SolverKind::SimulatedAnnealing => solve_simulated_annealing(problem, config),
        SolverKind::Tabu => solve_tabu(problem, config),
    }
}

/// Global optimum by Gray-code enumeration of all `2^dim` states.
///
/// Ties go to the smallest little-endian integer value. Incremental
/// energies only shortlist candidates; the winner is chosen on exact
/// [`QuboProblem::evaluate_energy`] values.
pub fn solve_exhaustive(problem: &QuboProblem) -> Result<SolveResult, SolverError> {
    let n = problem.dim();
    if n > MAX_EXHAUSTIVE_DIM {
        return Err(QuboError::TooLarge {
            dim: n,
            limit: MAX_EXHAUSTIVE_DIM,
        }
        .into());
    }
    let start = Instant::now();
    let scale = problem.max_abs_coefficient() * (n * n + n) as f64 + problem.offset().abs();
    let tol = 1e-9 * (1.0 + scale);

    let mut bits = vec![0u8; n];
    let mut field = vec![0.0; n];
    let mut energy = problem.offset();
    let mut best_approx = energy;
    let mut pending: Vec<(u64, f64)> = vec![(0, energy)];
    let mut exact_best: Option<(f64, u64)> = None;

    let flush = |pending: &mut Vec<(u64, f64)>, best_approx: f64, exact_best: &mut Option<(f64, u64)>| {
        for &(idx, approx) in pending.iter() {
            if approx > best_approx + tol {
                continue;
            }
            let e = problem
                .evaluate_energy(&index_to_bits(idx, n))
                .expect("dimension matches");
            let better = match exact_best {
                None => true,
                Some((be, bi)) => e < *be || (e == *be && idx < *bi),
            };
            if better {
                *exact_best = Some((e, idx));
            }
        }
        pending.clear();
    };

    let total = 1u64 << n;
    for t in 1..total {
        let j = t.trailing_zeros() as usize;
        energy += problem.flip_delta(&bits, &field, j);
        problem.apply_flip(&mut bits, &mut field, j);
        if t % RESYNC_INTERVAL == 0 {
            field = problem.local_field(&bits);
            energy = problem.evaluate_energy(&bits)?;
        }
        if energy <= best_approx + tol {
            if energy < best_approx {
                best_approx = energy;
            }
            pending.push((t ^ (t >> 1), energy));
            if pending.len() >= 1 << 16 {
                flush(&mut pending, best_approx, &mut exact_best);
            }
        }
    }
    flush(&mut pending, best_approx, &mut exact_best);

    let (energy, index) = exact_best.expect("state space is non-empty");
    let best = BitstringSample {
        bits: index_to_bits(index, n),
        energy,
        shot_index: 0,
        solver_id: "exhaustive".into(),
    };
    Ok(SolveResult::from_shots(vec![(best, start.elapsed())]))
}

/// Metropolis single-flip annealing with a geometric temperature schedule.
pub fn solve_simulated_annealing(
    problem: &QuboProblem,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let scale = if config.sa_scale_temperatures {
        let m = problem.max_abs_coefficient();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    } else {
        1.0
    };
    let t0 = config.sa_temp_initial * scale;
    let tf = config.sa_temp_final * scale;
    let shots = run_shots(config, |shot| anneal_shot(problem, config, shot, t0, tf))?;
    Ok(SolveResult::from_shots(shots))
}

fn anneal_shot(
    problem: &QuboProblem,
    config: &SolverConfig,
    shot: usize,
    t0: f64,
    tf: f64,
) -> Result<(BitstringSample, Duration), SolverError> {
    let start = Instant::now();
    let n = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ shot as u64);
    let mut bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
    let mut field = problem.local_field(&bits);
    let mut energy = problem.evaluate_energy(&bits)?;
    let mut best_bits = bits.clone();
    let mut best_energy = energy;

    let sweeps = config.sa_sweeps;
    let ratio = if sweeps > 1 {
        (tf / t0).powf(1.0 / (sweeps - 1) as f64)
    } else {
        1.0
    };
    let mut temperature = t0;
    for _ in 0..sweeps {
        let beta = 1.0 / temperature;
        for j in 0..n {
            let delta = problem.flip_delta(&bits, &field, j);
            if delta <= 0.0 || rng.gen::<f64>() < (-delta * beta).exp() {
                problem.apply_flip(&mut bits, &mut field, j);
                energy += delta;
                if energy < best_energy {
                    best_energy = energy;
                    best_bits.copy_from_slice(&bits);
                }
            }
        }
        temperature *= ratio;
    }
    let sample = BitstringSample::new(problem, best_bits, shot, "sa")?;
    Ok((sample, start.elapsed()))
}

/// Steepest-descent tabu search over single-bit flips.
///
/// Each iteration takes the best admissible flip. A flip is admissible when
/// its variable is off the tabu list or when it would beat the best energy
/// seen so far. A shot stops after `tabu_iterations` consecutive iterations
/// without a new best.
pub fn solve_tabu(problem: &QuboProblem, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let shots = run_shots(config, |shot| tabu_shot(problem, config, shot))?;
    Ok(SolveResult::from_shots(shots))
}

fn tabu_shot(
    problem: &QuboProblem,
    config: &SolverConfig,
    shot: usize,
) -> Result<(BitstringSample, Duration), SolverError> {
    let start = Instant::now();
    let n = problem.dim();
    let tenure = config.tabu_tenure.min(n.saturating_sub(1));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ shot as u64);
    let mut bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
    let mut field = problem.local_field(&bits);
    let mut energy = problem.evaluate_energy(&bits)?;
    let mut best_bits = bits.clone();
    let mut best_energy = energy;
    let mut tabu_until = vec![0u64; n];

    let mut iteration = 0u64;
    let mut stale = 0usize;
    while stale < config.tabu_iterations {
        let threshold = best_energy - 1e-12 * (1.0 + best_energy.abs());
        let mut chosen: Option<(usize, f64)> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for j in 0..n {
            let delta = problem.flip_delta(&bits, &field, j);
            if fallback.map_or(true, |(_, d)| delta < d) {
                fallback = Some((j, delta));
            }
            let admissible = tabu_until[j] <= iteration || energy + delta < threshold;
            if admissible && chosen.map_or(true, |(_, d)| delta < d) {
                chosen = Some((j, delta));
            }
        }
        let (j, delta) = chosen.or(fallback).expect("dim >= 1");
        problem.apply_flip(&mut bits, &mut field, j);
        energy += delta;
        tabu_until[j] = iteration + 1 + tenure as u64;
        iteration += 1;
        if iteration % RESYNC_INTERVAL == 0 {
            field = problem.local_field(&bits);
            energy = problem.evaluate_energy(&bits)?;
        }
        if energy < threshold {
            best_energy = energy;
            best_bits.copy_from_slice(&bits);
            stale = 0;
        } else {
            stale += 1;
        }
    }
    let sample = BitstringSample::new(problem, best_bits, shot, "tabu")?;
    Ok((sample, start.elapsed()))
}

fn run_shots<F>(config: &SolverConfig, shot: F) -> Result<Vec<(BitstringSample, Duration)>, SolverError>
where
    F: Fn(usize) -> Result<(BitstringSample, Duration), SolverError> + Sync,
{
    (0..config.shots).into_par_iter().map(|s| shot(s)).collect()
}

/// Exhaustive optimum energy, for tests and benchmarks that need a reference.
pub fn exhaustive_optimum(problem: &QuboProblem) -> Result<f64, SolverError> {
    Ok(solve_exhaustive(problem)?.best.energy)
}

/// Little-endian index of a sample's bitstring.
pub fn sample_index(sample: &BitstringSample) -> u64 {
    bits_to_index(&sample.bits)
}
