//! Experiment configuration: a versioned plain-text key-value file holding
//! every tunable, validated against the simulator's preconditions.
//!
//! Format: the first line is the header `# evoperc config v1`; every other
//! non-empty line is either a `#` comment or `key = value`. Unknown and
//! duplicate keys are rejected. Dumping writes keys in a canonical order so
//! dump -> load -> dump is the identity.

use std::path::Path;

use crate::arena::minority_cells_for_label;
use crate::error::{Error, Result};
use crate::evolution::{EvoConfig, FitnessKind};
use crate::metrics::BenchmarkConfig;
use crate::sim::SimParams;

const HEADER: &str = "# evoperc config v1";

/// Sensor cadences and comms periods the tick length must divide.
const SCHEDULED_PERIODS_S: [f64; 5] = [0.15, 0.2, 1.0, 3.0, 1.0];

/// All workbench tunables with their paper defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dt_s: f64,
    pub rotation_speed_rad_per_s: f64,
    pub t_send_mean_s: f64,
    pub predictor_hidden_units: usize,
    pub sensor_count: usize,
    pub fitness: FitnessKind,
    pub population_size: usize,
    pub max_generations: usize,
    pub evaluations_per_genome: usize,
    pub evaluation_length_s: f64,
    pub elitism: usize,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub kappa: f64,
    pub evolution_difficulty: f64,
    pub swarm_size: usize,
    pub benchmark_difficulties: Vec<f64>,
    pub benchmark_runs: usize,
    pub benchmark_run_length_s: f64,
    pub master_seed: u64,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dt_s: 0.05,
            rotation_speed_rad_per_s: std::f64::consts::FRAC_PI_2,
            t_send_mean_s: 10.0,
            predictor_hidden_units: 8,
            sensor_count: 3,
            fitness: FitnessKind::TaskSpecific,
            population_size: 50,
            max_generations: 600,
            evaluations_per_genome: 6,
            evaluation_length_s: 200.0,
            elitism: 1,
            mutation_rate: 0.2,
            mutation_sigma: 0.4,
            kappa: 2.0,
            evolution_difficulty: 0.25,
            swarm_size: 20,
            benchmark_difficulties: vec![0.25, 0.52, 0.67, 0.82],
            benchmark_runs: 1000,
            benchmark_run_length_s: 400.0,
            master_seed: 1,
            out_dir: "out".to_string(),
        }
    }
}

fn join_difficulties(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    /// Canonical text form, starting with the version header.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        let mut kv = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        kv("dt_s", self.dt_s.to_string());
        kv(
            "rotation_speed_rad_per_s",
            self.rotation_speed_rad_per_s.to_string(),
        );
        kv("t_send_mean_s", self.t_send_mean_s.to_string());
        kv(
            "predictor_hidden_units",
            self.predictor_hidden_units.to_string(),
        );
        kv("sensor_count", self.sensor_count.to_string());
        kv("fitness", self.fitness.as_str().to_string());
        kv("population_size", self.population_size.to_string());
        kv("max_generations", self.max_generations.to_string());
        kv(
            "evaluations_per_genome",
            self.evaluations_per_genome.to_string(),
        );
        kv("evaluation_length_s", self.evaluation_length_s.to_string());
        kv("elitism", self.elitism.to_string());
        kv("mutation_rate", self.mutation_rate.to_string());
        kv("mutation_sigma", self.mutation_sigma.to_string());
        kv("kappa", self.kappa.to_string());
        kv(
            "evolution_difficulty",
            self.evolution_difficulty.to_string(),
        );
        kv("swarm_size", self.swarm_size.to_string());
        kv(
            "benchmark_difficulties",
            join_difficulties(&self.benchmark_difficulties),
        );
        kv("benchmark_runs", self.benchmark_runs.to_string());
        kv(
            "benchmark_run_length_s",
            self.benchmark_run_length_s.to_string(),
        );
        kv("master_seed", self.master_seed.to_string());
        kv("out_dir", self.out_dir.clone());
        out
    }

    /// Parses the text form; the defaults fill in any omitted key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(line) if line.trim() == HEADER => {}
            other => {
                return Err(Error::Config(format!(
                    "config must start with {HEADER:?}, got {other:?}"
                )))
            }
        }
        let mut config = ExperimentConfig::default();
        let mut seen = Vec::new();
        for (number, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value, got {line:?}", number + 2))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.contains(&key.to_string()) {
                return Err(Error::Config(format!("duplicate config key {key:?}")));
            }
            seen.push(key.to_string());
            config.apply(key, value)?;
        }
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for key {key:?}")))
        }
        match key {
            "dt_s" => self.dt_s = num(key, value)?,
            "rotation_speed_rad_per_s" => self.rotation_speed_rad_per_s = num(key, value)?,
            "t_send_mean_s" => self.t_send_mean_s = num(key, value)?,
            "predictor_hidden_units" => self.predictor_hidden_units = num(key, value)?,
            "sensor_count" => self.sensor_count = num(key, value)?,
            "fitness" => self.fitness = FitnessKind::parse(value)?,
            "population_size" => self.population_size = num(key, value)?,
            "max_generations" => self.max_generations = num(key, value)?,
            "evaluations_per_genome" => self.evaluations_per_genome = num(key, value)?,
            "evaluation_length_s" => self.evaluation_length_s = num(key, value)?,
            "elitism" => self.elitism = num(key, value)?,
            "mutation_rate" => self.mutation_rate = num(key, value)?,
            "mutation_sigma" => self.mutation_sigma = num(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "evolution_difficulty" => self.evolution_difficulty = num(key, value)?,
            "swarm_size" => self.swarm_size = num(key, value)?,
            "benchmark_difficulties" => {
                let mut difficulties = Vec::new();
                for part in value.split(',') {
                    difficulties.push(num(key, part.trim())?);
                }
                self.benchmark_difficulties = difficulties;
            }
            "benchmark_runs" => self.benchmark_runs = num(key, value)?,
            "benchmark_run_length_s" => self.benchmark_run_length_s = num(key, value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            "out_dir" => self.out_dir = value.to_string(),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.dump())?;
        Ok(())
    }

    /// Checks every module precondition the file could violate.
    pub fn validate(&self) -> Result<()> {
        if self.dt_s <= 0.0 {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt_s)));
        }
        for period in SCHEDULED_PERIODS_S {
            let ticks = period / self.dt_s;
            if (ticks - ticks.round()).abs() > 1e-9 || ticks < 1.0 {
                return Err(Error::Config(format!(
                    "dt = {} s must divide the {period} s schedule",
                    self.dt_s
                )));
            }
        }
        if self.rotation_speed_rad_per_s <= 0.0 {
            return Err(Error::Config("rotation speed must be positive".into()));
        }
        if self.t_send_mean_s < 0.0 {
            return Err(Error::Config("t_send mean must be non-negative".into()));
        }
        if self.predictor_hidden_units == 0 {
            return Err(Error::Config("predictor needs at least one hidden unit".into()));
        }
        if self.sensor_count != crate::neural::PREDICTED_SENSOR_COUNT {
            return Err(Error::Config(format!(
                "sensor count is fixed at {} (s0, s1, s2), got {}",
                crate::neural::PREDICTED_SENSOR_COUNT,
                self.sensor_count
            )));
        }
        if self.population_size == 0 {
            return Err(Error::Config("population size must be positive".into()));
        }
        if self.elitism != 1 {
            return Err(Error::Config(format!(
                "only elitism = 1 is supported, got {}",
                self.elitism
            )));
        }
        if self.max_generations == 0 {
            return Err(Error::Config("need at least one generation".into()));
        }
        if self.evaluations_per_genome == 0 || self.evaluations_per_genome % 2 != 0 {
            return Err(Error::Config(format!(
                "evaluations per genome must be even (pattern/inverse pairs), got {}",
                self.evaluations_per_genome
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::Config(format!(
                "mutation rate must lie in [0, 1], got {}",
                self.mutation_rate
            )));
        }
        if self.mutation_sigma < 0.0 {
            return Err(Error::Config("mutation sigma must be non-negative".into()));
        }
        if self.kappa <= 1.0 {
            return Err(Error::Config(format!(
                "penalty factor kappa must exceed 1, got {}",
                self.kappa
            )));
        }
        if self.swarm_size == 0 || self.swarm_size % 2 != 0 {
            return Err(Error::Config(format!(
                "swarm size must be even for the balanced opinion split, got {}",
                self.swarm_size
            )));
        }
        for length in [self.evaluation_length_s, self.benchmark_run_length_s] {
            let samples = length / crate::sim::TRACE_INTERVAL_S;
            if length <= 0.0 || (samples - samples.round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "run lengths must be whole seconds, got {length}"
                )));
            }
        }
        if self.benchmark_runs == 0 {
            return Err(Error::Config("benchmark needs at least one run".into()));
        }
        minority_cells_for_label(self.evolution_difficulty)?;
        if self.evolution_difficulty >= 1.0 {
            return Err(Error::Config(
                "evolution difficulty must leave a strict majority (< 1.0)".into(),
            ));
        }
        for &difficulty in &self.benchmark_difficulties {
            minority_cells_for_label(difficulty)?;
            if difficulty >= 1.0 {
                return Err(Error::Config(
                    "benchmark difficulties must leave a strict majority (< 1.0)".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            dt_s: self.dt_s,
            rotation_speed_radps: self.rotation_speed_rad_per_s,
            t_send_mean_s: self.t_send_mean_s,
        }
    }

    pub fn evo_config(&self) -> EvoConfig {
        EvoConfig {
            population_size: self.population_size,
            max_generations: self.max_generations,
            evaluations_per_genome: self.evaluations_per_genome,
            evaluation_length_s: self.evaluation_length_s,
            mutation_rate: self.mutation_rate,
            mutation_sigma: self.mutation_sigma,
            fitness: self.fitness,
            kappa: self.kappa,
            difficulty: self.evolution_difficulty,
            swarm_size: self.swarm_size,
            predictor_hidden: self.predictor_hidden_units,
            sim: self.sim_params(),
        }
    }

    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            difficulties: self.benchmark_difficulties.clone(),
            runs_per_cell: self.benchmark_runs,
            run_length_s: self.benchmark_run_length_s,
            swarm_size: self.swarm_size,
            sim: self.sim_params(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn dump_load_dump_is_identity() {
        let config = ExperimentConfig::default();
        let dumped = config.dump();
        let parsed = ExperimentConfig::parse(&dumped).unwrap();
        assert_eq!(parsed, config);
        assert_eq!(parsed.dump(), dumped);
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(matches!(
            ExperimentConfig::parse("dt_s = 0.05\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let unknown = format!("{HEADER}\nwarp_speed = 9\n");
        assert!(matches!(
            ExperimentConfig::parse(&unknown),
            Err(Error::Config(_))
        ));
        let duplicate = format!("{HEADER}\ndt_s = 0.05\ndt_s = 0.1\n");
        assert!(matches!(
            ExperimentConfig::parse(&duplicate),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn comments_and_partial_files_are_accepted() {
        let text = format!("{HEADER}\n# benchmark scale\nbenchmark_runs = 25\n\n");
        let config = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(config.benchmark_runs, 25);
        assert_eq!(config.dt_s, 0.05);
    }

    #[test]
    fn validation_rejects_misaligned_ticks() {
        let config = ExperimentConfig {
            dt_s: 0.04, // does not divide 0.15 s
            ..ExperimentConfig::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn validation_rejects_bad_domain_values() {
        for mutate in [
            |c: &mut ExperimentConfig| c.kappa = 1.0,
            |c: &mut ExperimentConfig| c.mutation_rate = 1.5,
            |c: &mut ExperimentConfig| c.swarm_size = 7,
            |c: &mut ExperimentConfig| c.evaluations_per_genome = 5,
            |c: &mut ExperimentConfig| c.evolution_difficulty = 0.33,
            |c: &mut ExperimentConfig| c.benchmark_difficulties = vec![1.0],
            |c: &mut ExperimentConfig| c.elitism = 2,
            |c: &mut ExperimentConfig| c.sensor_count = 4,
        ] {
            let mut config = ExperimentConfig::default();
            mutate(&mut config);
            assert!(config.validate().is_err());
        }
    }

    #[test]
    fn difficulty_lists_parse() {
        let text = format!("{HEADER}\nbenchmark_difficulties = 0.25, 0.52\n");
        let config = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(config.benchmark_difficulties, vec![0.25, 0.52]);
    }
}
