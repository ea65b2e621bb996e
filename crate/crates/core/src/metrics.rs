//! Consensus detection, speed/accuracy aggregation, and the shared-seed
//! benchmark harness.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::arena::Color;
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::seeds::{derive, tag};
use crate::sim::{OpinionTrace, Scenario, SimParams, Simulation};

/// First time the whole swarm shared one opinion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Consensus {
    pub time_s: f64,
    pub color: Color,
}

/// Earliest trace sample at which all opinions are equal.
pub fn consensus_time(trace: &OpinionTrace) -> Option<Consensus> {
    for (index, sample) in trace.samples().iter().enumerate() {
        let first = sample[0];
        if sample.iter().all(|o| *o == first) {
            return Some(Consensus {
                time_s: trace.time_of(index),
                color: first,
            });
        }
    }
    None
}

/// One benchmark run: did the swarm reach a first consensus, when, and was
/// it for the majority color.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub mechanism: String,
    pub difficulty: f64,
    pub seed: u64,
    pub consensus: Option<Consensus>,
    pub correct: bool,
}

/// One summary row per (mechanism, difficulty) cell.
#[derive(Clone, Debug)]
pub struct BenchmarkRow {
    pub mechanism: String,
    pub difficulty: f64,
    pub runs: usize,
    /// Mean consensus time over the runs that reached any consensus; absent
    /// when none did.
    pub mean_consensus_time_s: Option<f64>,
    /// Percentage of all runs whose first consensus was for the majority.
    pub exit_probability_pct: f64,
}

/// Aggregates records sharing one (mechanism, difficulty) cell.
pub fn aggregate(records: &[RunRecord]) -> BenchmarkRow {
    debug_assert!(!records.is_empty());
    let times: Vec<f64> = records
        .iter()
        .filter_map(|r| r.consensus.map(|c| c.time_s))
        .collect();
    let correct = records.iter().filter(|r| r.correct).count();
    BenchmarkRow {
        mechanism: records[0].mechanism.clone(),
        difficulty: records[0].difficulty,
        runs: records.len(),
        mean_consensus_time_s: (!times.is_empty())
            .then(|| times.iter().sum::<f64>() / times.len() as f64),
        exit_probability_pct: 100.0 * correct as f64 / records.len() as f64,
    }
}

/// Benchmark harness parameters.
#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub difficulties: Vec<f64>,
    pub runs_per_cell: usize,
    pub run_length_s: f64,
    pub swarm_size: usize,
    pub sim: SimParams,
}

/// The run seed shared by every mechanism for one benchmark cell entry, and
/// accepted directly by the replay path.
pub fn run_seed_for(master_seed: u64, difficulty: f64, run_index: usize) -> u64 {
    let difficulty_key = (difficulty * 1_000_000.0).round() as u64;
    derive(master_seed, &[tag::BENCH_RUN, difficulty_key, run_index as u64])
}

/// Simulates one benchmark run and scores it against the majority color.
pub fn benchmark_run(
    mechanism_id: &str,
    mechanism: &Arc<Mechanism>,
    difficulty: f64,
    run_seed: u64,
    cfg: &BenchmarkConfig,
) -> Result<RunRecord> {
    let scenario = Scenario::from_run_seed(run_seed, difficulty, Color::Black, false)?;
    let majority = scenario
        .grid
        .majority()
        .ok_or_else(|| Error::Config("benchmark grids need a strict majority".into()))?;
    let mut sim = Simulation::new(&scenario, Arc::clone(mechanism), cfg.swarm_size, &cfg.sim)?;
    sim.run_for(cfg.run_length_s);
    let consensus = consensus_time(sim.trace());
    Ok(RunRecord {
        mechanism: mechanism_id.to_string(),
        difficulty,
        seed: run_seed,
        consensus,
        correct: consensus.is_some_and(|c| c.color == majority),
    })
}

/// Runs every mechanism on the same scenarios (identical patterns, poses,
/// opinions, and robot streams per run seed) with black as the majority,
/// and aggregates one summary row per cell. Runs execute in parallel and
/// reduce in deterministic order.
pub fn run_benchmark(
    mechanisms: &[(String, Arc<Mechanism>)],
    cfg: &BenchmarkConfig,
    master_seed: u64,
) -> Result<(Vec<RunRecord>, Vec<BenchmarkRow>)> {
    let mut jobs = Vec::new();
    for (mech_index, _) in mechanisms.iter().enumerate() {
        for &difficulty in &cfg.difficulties {
            for run in 0..cfg.runs_per_cell {
                jobs.push((mech_index, difficulty, run_seed_for(master_seed, difficulty, run)));
            }
        }
    }
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(mech_index, difficulty, run_seed)| {
            let (id, mechanism) = &mechanisms[mech_index];
            benchmark_run(id, mechanism, difficulty, run_seed, cfg)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (mech_index, _) in mechanisms.iter().enumerate() {
        for &difficulty in &cfg.difficulties {
            let cell_start = mech_index * cfg.difficulties.len() * cfg.runs_per_cell;
            let offset = cfg
                .difficulties
                .iter()
                .position(|d| *d == difficulty)
                .expect("difficulty from the same list")
                * cfg.runs_per_cell;
            let cell = &records[cell_start + offset..cell_start + offset + cfg.runs_per_cell];
            rows.push(aggregate(cell));
        }
    }
    Ok((records, rows))
}

/// Per-run CSV, one row per (mechanism, difficulty, seed).
pub fn write_results_csv(records: &[RunRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "mechanism,difficulty,seed,consensus_time_s,consensus_color,correct"
    )?;
    for r in records {
        let (time, color) = match r.consensus {
            Some(c) => (
                c.time_s.to_string(),
                match c.color {
                    Color::Black => "black".to_string(),
                    Color::White => "white".to_string(),
                },
            ),
            None => ("NA".to_string(), "NA".to_string()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.mechanism, r.difficulty, r.seed, time, color, r.correct
        )?;
    }
    Ok(())
}

/// Summary CSV: one row per benchmark cell.
pub fn write_summary_csv(rows: &[BenchmarkRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "mechanism,difficulty,runs,T_bar_s,E_N_percent")?;
    for row in rows {
        let t_bar = row
            .mean_consensus_time_s
            .map_or("NA".to_string(), |t| t.to_string());
        writeln!(
            out,
            "{},{},{},{},{}",
            row.mechanism, row.difficulty, row.runs, t_bar, row.exit_probability_pct
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(samples: Vec<Vec<Color>>) -> OpinionTrace {
        let mut trace = OpinionTrace::new(1.0);
        for s in samples {
            trace.push_sample(s);
        }
        trace
    }

    const B: Color = Color::Black;
    const W: Color = Color::White;

    #[test]
    fn consensus_from_the_start_is_time_zero() {
        let trace = trace_of(vec![vec![W, W, W]]);
        assert_eq!(
            consensus_time(&trace),
            Some(Consensus {
                time_s: 0.0,
                color: W
            })
        );
    }

    #[test]
    fn no_consensus_is_absent() {
        let trace = trace_of(vec![vec![B, W], vec![W, B], vec![B, W]]);
        assert_eq!(consensus_time(&trace), None);
    }

    #[test]
    fn first_consensus_at_thirty_seven_seconds() {
        let mut samples = vec![vec![B, W, B]; 37];
        samples.push(vec![B, B, B]);
        samples.push(vec![B, W, B]); // later disagreement does not matter
        let trace = trace_of(samples);
        assert_eq!(
            consensus_time(&trace),
            Some(Consensus {
                time_s: 37.0,
                color: B
            })
        );
    }

    #[test]
    fn consensus_detection_is_monotone_under_appended_samples() {
        let mut samples = vec![vec![B, W], vec![W, W]];
        let first = consensus_time(&trace_of(samples.clone()));
        samples.push(vec![B, B]);
        samples.push(vec![B, W]);
        assert_eq!(consensus_time(&trace_of(samples)), first);
    }

    fn record(time: Option<f64>, correct: bool) -> RunRecord {
        RunRecord {
            mechanism: "voter".into(),
            difficulty: 0.25,
            seed: 0,
            consensus: time.map(|t| Consensus {
                time_s: t,
                color: if correct { B } else { W },
            }),
            correct,
        }
    }

    #[test]
    fn aggregation_hand_example() {
        // wrong consensus still contributes its time to the mean
        let records = vec![record(Some(10.0), true), record(Some(20.0), false), record(None, false)];
        let row = aggregate(&records);
        assert_eq!(row.mean_consensus_time_s, Some(15.0));
        assert!((row.exit_probability_pct - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(row.runs, 3);
    }

    #[test]
    fn aggregation_without_consensus_reports_absent_time() {
        let records = vec![record(None, false), record(None, false)];
        let row = aggregate(&records);
        assert_eq!(row.mean_consensus_time_s, None);
        assert_eq!(row.exit_probability_pct, 0.0);
    }

    #[test]
    fn aggregation_all_correct_at_one_time() {
        let records = vec![record(Some(42.0), true); 5];
        let row = aggregate(&records);
        assert_eq!(row.mean_consensus_time_s, Some(42.0));
        assert_eq!(row.exit_probability_pct, 100.0);
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let mut records = vec![
            record(Some(10.0), true),
            record(Some(30.0), false),
            record(None, false),
            record(Some(20.0), true),
        ];
        let forward = aggregate(&records);
        records.reverse();
        let backward = aggregate(&records);
        assert_eq!(forward.mean_consensus_time_s, backward.mean_consensus_time_s);
        assert_eq!(forward.exit_probability_pct, backward.exit_probability_pct);
    }

    #[test]
    fn shared_seeds_give_identical_setups_across_mechanisms() {
        let cfg = BenchmarkConfig {
            difficulties: vec![0.25],
            runs_per_cell: 3,
            run_length_s: 10.0,
            swarm_size: 10,
            sim: SimParams::default(),
        };
        let mechanisms = vec![
            ("voter".to_string(), Arc::new(Mechanism::Voter)),
            ("majority".to_string(), Arc::new(Mechanism::Majority)),
        ];
        let (records, rows) = run_benchmark(&mechanisms, &cfg, 3).unwrap();
        assert_eq!(records.len(), 6);
        assert_eq!(rows.len(), 2);
        for run in 0..3 {
            assert_eq!(records[run].seed, records[3 + run].seed);
        }
        // same seed implies the same scenario; spot-check the pattern
        let a = Scenario::from_run_seed(records[0].seed, 0.25, Color::Black, false).unwrap();
        let b = Scenario::from_run_seed(records[3].seed, 0.25, Color::Black, false).unwrap();
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.spawn_seed, b.spawn_seed);
    }

    #[test]
    fn benchmark_is_deterministic_and_csv_stable() {
        let cfg = BenchmarkConfig {
            difficulties: vec![0.25],
            runs_per_cell: 2,
            run_length_s: 20.0,
            swarm_size: 8,
            sim: SimParams::default(),
        };
        let mechanisms = vec![("voter".to_string(), Arc::new(Mechanism::Voter))];
        let (records_a, rows_a) = run_benchmark(&mechanisms, &cfg, 9).unwrap();
        let (records_b, rows_b) = run_benchmark(&mechanisms, &cfg, 9).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_results_csv(&records_a, &mut csv_a).unwrap();
        write_results_csv(&records_b, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        let mut summary_a = Vec::new();
        let mut summary_b = Vec::new();
        write_summary_csv(&rows_a, &mut summary_a).unwrap();
        write_summary_csv(&rows_b, &mut summary_b).unwrap();
        assert_eq!(summary_a, summary_b);
    }
}
