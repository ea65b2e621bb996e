//! Generational evolutionary algorithm with task-specific, prediction
//! (surprise-minimizing), and hybrid fitness functions, using the paired
//! pattern/inverse evaluation protocol with minimum aggregation.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::arena::Color;
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::neural::{Genome, PredictionLog};
use crate::seeds::{derive, stream, tag};
use crate::sim::{Scenario, SimParams, Simulation};

/// Roulette-wheel shift so selection stays total on all-zero populations.
const SELECTION_EPSILON: f64 = 1e-6;

/// Which fitness drives selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitnessKind {
    /// Reward correct opinions in the last evaluation step.
    TaskSpecific,
    /// Reward sensor-prediction accuracy only.
    MinimizeSurprise,
    /// Prediction accuracy scaled by task success.
    Hybrid,
}

impl FitnessKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ts" => Ok(FitnessKind::TaskSpecific),
            "ms" => Ok(FitnessKind::MinimizeSurprise),
            "hb" => Ok(FitnessKind::Hybrid),
            other => Err(Error::Config(format!(
                "unknown fitness kind {other:?}, expected ts, ms, or hb"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FitnessKind::TaskSpecific => "ts",
            FitnessKind::MinimizeSurprise => "ms",
            FitnessKind::Hybrid => "hb",
        }
    }

    /// Surprise-based rewards evolve decision/prediction network pairs.
    pub fn needs_predictor(self) -> bool {
        !matches!(self, FitnessKind::TaskSpecific)
    }
}

/// Evolutionary-run parameters.
#[derive(Clone, Debug)]
pub struct EvoConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub evaluations_per_genome: usize,
    pub evaluation_length_s: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub fitness: FitnessKind,
    pub kappa: f64,
    pub difficulty: f64,
    pub swarm_size: usize,
    pub predictor_hidden: usize,
    pub sim: SimParams,
}

impl Default for EvoConfig {
    fn default() -> Self {
        EvoConfig {
            population_size: 50,
            max_generations: 600,
            evaluations_per_genome: 6,
            evaluation_length_s: 200.0,
            mutation_rate: 0.2,
            mutation_sigma: 0.4,
            fitness: FitnessKind::TaskSpecific,
            kappa: 2.0,
            difficulty: 0.25,
            swarm_size: 20,
            predictor_hidden: crate::neural::DEFAULT_PREDICTOR_HIDDEN,
            sim: SimParams::default(),
        }
    }
}

/// The fixed evaluation scenarios of one evolutionary run: seeded patterns
/// at the configured difficulty plus their inverses, so the majority color
/// is black in half the scenarios and white in the other half.
#[derive(Clone, Debug)]
pub struct EvaluationSet {
    scenarios: Vec<Scenario>,
}

impl EvaluationSet {
    pub fn build(master_seed: u64, cfg: &EvoConfig) -> Result<EvaluationSet> {
        if cfg.evaluations_per_genome == 0 || cfg.evaluations_per_genome % 2 != 0 {
            return Err(Error::Config(format!(
                "evaluations per genome must be even (pattern/inverse pairs), got {}",
                cfg.evaluations_per_genome
            )));
        }
        let pairs = cfg.evaluations_per_genome / 2;
        let mut scenarios = Vec::with_capacity(cfg.evaluations_per_genome);
        for pair in 0..pairs {
            let seed = derive(master_seed, &[tag::SCENARIO, pair as u64]);
            scenarios.push(Scenario::from_run_seed(
                seed,
                cfg.difficulty,
                Color::Black,
                false,
            )?);
            scenarios.push(Scenario::from_run_seed(
                seed,
                cfg.difficulty,
                Color::Black,
                true,
            )?);
        }
        Ok(EvaluationSet { scenarios })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }
}

/// Task fitness: fraction of robots holding the majority opinion at the
/// last recorded time step.
pub fn fitness_ts(final_opinions: &[Color], majority: Color) -> f64 {
    let best = final_opinions.iter().filter(|o| **o == majority).count();
    best as f64 / final_opinions.len() as f64
}

/// Prediction fitness: mean per-sensor prediction accuracy over every
/// scored propagation of every robot (a single streaming pass). Returns 0
/// when no propagation was scored, which marks a degenerate run.
pub fn fitness_ms(logs: &[&PredictionLog], sensors: usize) -> f64 {
    let mut sum = 0.0;
    let mut scored = 0usize;
    for log in logs {
        for pair in log.pairs() {
            for r in 0..sensors {
                sum += 1.0 - (pair.prediction[r] - pair.actual[r]).abs();
            }
        }
        scored += log.len();
    }
    if scored == 0 {
        return 0.0;
    }
    sum / (sensors * scored) as f64
}

/// Hybrid fitness: prediction accuracy scaled by task success, with the
/// penalty capped at 1 - 1/kappa for fully wrong consensus.
pub fn fitness_hb(f_ts: f64, f_ms: f64, kappa: f64) -> f64 {
    ((1.0 - f_ts) / kappa + f_ts) * f_ms
}

/// Both fitness components of one evaluation; `surprise` is present only
/// when the genome carries a predictor.
#[derive(Clone, Copy, Debug)]
pub struct FitnessComponents {
    pub task: f64,
    pub surprise: Option<f64>,
}

/// Per-evaluation fitness values and their minimum aggregate.
#[derive(Clone, Debug)]
pub struct FitnessRecord {
    pub per_evaluation: Vec<f64>,
    pub components: Vec<FitnessComponents>,
    pub aggregate: f64,
}

/// Runs the full evaluation protocol for one genome: one simulation per
/// scenario, per-evaluation fitness per the configured kind, aggregated by
/// minimum. Prediction state starts fresh in every evaluation.
pub fn evaluate_genome(
    genome: &Genome,
    eval_set: &EvaluationSet,
    cfg: &EvoConfig,
) -> Result<FitnessRecord> {
    let mechanism = Arc::new(Mechanism::from_genome(genome));
    let mut per_evaluation = Vec::with_capacity(eval_set.scenarios.len());
    let mut components = Vec::with_capacity(eval_set.scenarios.len());
    for scenario in &eval_set.scenarios {
        let majority = scenario
            .grid
            .majority()
            .ok_or_else(|| Error::Config("evaluation grids need a strict majority".into()))?;
        let mut sim = Simulation::new(scenario, Arc::clone(&mechanism), cfg.swarm_size, &cfg.sim)?;
        sim.run_for(cfg.evaluation_length_s);

        let task = fitness_ts(&sim.final_opinions(), majority);
        let surprise = genome
            .has_predictor()
            .then(|| fitness_ms(&sim.prediction_logs(), crate::neural::PREDICTED_SENSOR_COUNT));
        let fitness = match cfg.fitness {
            FitnessKind::TaskSpecific => task,
            FitnessKind::MinimizeSurprise => surprise.unwrap_or(0.0),
            FitnessKind::Hybrid => fitness_hb(task, surprise.unwrap_or(0.0), cfg.kappa),
        };
        per_evaluation.push(fitness);
        components.push(FitnessComponents { task, surprise });
    }
    let aggregate = per_evaluation.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FitnessRecord {
        per_evaluation,
        components,
        aggregate,
    })
}

/// Fitness-proportionate (roulette-wheel) selection over shifted fitness.
pub fn select_parent(fitnesses: &[f64], rng: &mut impl Rng) -> usize {
    debug_assert!(!fitnesses.is_empty());
    let total: f64 = fitnesses.iter().map(|f| f + SELECTION_EPSILON).sum();
    let mut target = rng.random_range(0.0..total);
    for (index, fitness) in fitnesses.iter().enumerate() {
        target -= fitness + SELECTION_EPSILON;
        if target < 0.0 {
            return index;
        }
    }
    fitnesses.len() - 1
}

/// Generational replacement: the best genome survives verbatim in slot 0
/// (ties break toward the lowest index) and every other slot is a mutated
/// copy of a roulette-selected parent.
pub fn next_generation(
    population: &[Genome],
    fitnesses: &[f64],
    cfg: &EvoConfig,
    rng: &mut impl Rng,
) -> Vec<Genome> {
    let elite = best_index(fitnesses);
    let mut next = Vec::with_capacity(population.len());
    next.push(population[elite].clone());
    while next.len() < population.len() {
        let parent = select_parent(fitnesses, rng);
        next.push(population[parent].mutated(cfg.mutation_rate, cfg.mutation_sigma, rng));
    }
    next
}

/// Index of the highest fitness, lowest index on ties.
pub fn best_index(fitnesses: &[f64]) -> usize {
    let mut best = 0;
    for (index, fitness) in fitnesses.iter().enumerate().skip(1) {
        if *fitness > fitnesses[best] {
            best = index;
        }
    }
    best
}

/// One history row of an evolutionary run.
#[derive(Clone, Debug)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_index: usize,
}

/// Output of one evolutionary run.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub history: Vec<GenerationStats>,
    pub best_per_generation: Vec<Genome>,
    pub best_genome: Genome,
    pub best_fitness: f64,
}

/// Runs the configured number of generations. The elite keeps its recorded
/// fitness instead of being re-evaluated; with the fixed evaluation set this
/// equals what a re-evaluation would produce, and saves six simulations per
/// generation. `on_generation` observes each finished generation (progress
/// reporting).
pub fn run_evolution(
    cfg: &EvoConfig,
    master_seed: u64,
    mut on_generation: impl FnMut(&GenerationStats),
) -> Result<EvolutionResult> {
    if cfg.population_size == 0 {
        return Err(Error::Config("population size must be positive".into()));
    }
    let eval_set = EvaluationSet::build(master_seed, cfg)?;
    let mut init_rng = stream(master_seed, &[tag::INIT_POPULATION]);
    let mut population: Vec<Genome> = (0..cfg.population_size)
        .map(|_| {
            Genome::random(
                &mut init_rng,
                cfg.fitness.needs_predictor(),
                cfg.predictor_hidden,
            )
        })
        .collect();

    let mut history = Vec::with_capacity(cfg.max_generations);
    let mut best_per_generation = Vec::with_capacity(cfg.max_generations);
    let mut carried_elite_fitness: Option<f64> = None;

    for generation in 0..cfg.max_generations {
        let fitnesses: Vec<f64> = population
            .par_iter()
            .enumerate()
            .map(|(index, genome)| {
                if index == 0 {
                    if let Some(fitness) = carried_elite_fitness {
                        return Ok(fitness);
                    }
                }
                Ok(evaluate_genome(genome, &eval_set, cfg)?.aggregate)
            })
            .collect::<Result<_>>()?;

        let best = best_index(&fitnesses);
        let stats = GenerationStats {
            generation,
            best_fitness: fitnesses[best],
            mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            best_index: best,
        };
        on_generation(&stats);
        history.push(stats);
        best_per_generation.push(population[best].clone());

        if generation + 1 < cfg.max_generations {
            let mut gen_rng = stream(master_seed, &[tag::EVOLUTION_STEP, generation as u64]);
            population = next_generation(&population, &fitnesses, cfg, &mut gen_rng);
            carried_elite_fitness = Some(fitnesses[best]);
        }
    }

    let last = history.last().expect("at least one generation");
    Ok(EvolutionResult {
        best_genome: best_per_generation[last.generation].clone(),
        best_fitness: last.best_fitness,
        history,
        best_per_generation,
    })
}
