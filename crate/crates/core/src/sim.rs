//! Full-run simulation: one world, per-robot motion and decision
//! controllers, synchronous local broadcast, and opinion/trajectory traces.
//!
//! Tick order is fixed for determinism: motion controllers emit wheel
//! commands in robot-id order, decision controllers run in robot-id order
//! with broadcasts delivered synchronously to open receive windows
//! (ascending receiver id), then the world advances and due sensor caches
//! refresh. The opinion trace is sampled every simulated second.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arena::{Color, TileGrid};
use crate::comms::{recipients_in_range, MessageQueue, OpinionMessage};
use crate::decision::{DecisionConfig, DecisionState};
use crate::error::{Error, Result};
use crate::mechanisms::{decide, AnnRuntime, DecisionContext, Mechanism};
use crate::motion::{MotionConfig, MotionState};
use crate::neural::PredictionLog;
use crate::seeds::{derive, stream, tag};
use crate::world::World;

/// Simulator tunables shared by every run.
#[derive(Clone, Copy, Debug)]
pub struct SimParams {
    pub dt_s: f64,
    pub rotation_speed_radps: f64,
    pub t_send_mean_s: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt_s: 0.05,
            rotation_speed_radps: std::f64::consts::FRAC_PI_2,
            t_send_mean_s: crate::decision::DEFAULT_T_SEND_S,
        }
    }
}

/// A fully specified run setup. The pattern and its inverse share the spawn
/// and opinion seeds, so paired evaluations differ only in the majority
/// color.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: Arc<TileGrid>,
    pub spawn_seed: u64,
    pub opinion_seed: u64,
    /// Base for the per-robot motion/decision/mechanism streams.
    pub stream_seed: u64,
}

impl Scenario {
    /// Builds the scenario identified by a run seed: the seeded pattern at
    /// the given difficulty (optionally inverted) plus derived placement,
    /// opinion, and robot streams.
    pub fn from_run_seed(
        run_seed: u64,
        difficulty: f64,
        majority: Color,
        invert: bool,
    ) -> Result<Scenario> {
        let mut grid = TileGrid::generate(difficulty, majority, derive(run_seed, &[tag::PATTERN]))?;
        if invert {
            grid = grid.inverted();
        }
        Ok(Scenario {
            grid: Arc::new(grid),
            spawn_seed: derive(run_seed, &[tag::SPAWN]),
            opinion_seed: derive(run_seed, &[tag::OPINION]),
            stream_seed: run_seed,
        })
    }
}

/// Swarm opinions sampled at a fixed interval; sample k is at time
/// k * interval.
#[derive(Clone, Debug, PartialEq)]
pub struct OpinionTrace {
    interval_s: f64,
    samples: Vec<Vec<Color>>,
}

impl OpinionTrace {
    pub fn new(interval_s: f64) -> Self {
        OpinionTrace {
            interval_s,
            samples: Vec::new(),
        }
    }

    pub fn push_sample(&mut self, opinions: Vec<Color>) {
        self.samples.push(opinions);
    }

    pub fn interval_s(&self) -> f64 {
        self.interval_s
    }

    pub fn samples(&self) -> &[Vec<Color>] {
        &self.samples
    }

    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 * self.interval_s
    }

    pub fn last_sample(&self) -> &[Color] {
        self.samples.last().expect("trace holds the spawn sample")
    }
}

/// One trajectory-dump row.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub robot: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub opinion: Color,
}

struct RobotController {
    motion: MotionState,
    decision: DecisionState,
    queue: MessageQueue,
    motion_rng: ChaCha8Rng,
    decision_rng: ChaCha8Rng,
    mechanism_rng: ChaCha8Rng,
    ann: Option<AnnRuntime>,
}

/// A running simulation of one scenario under one decision mechanism.
pub struct Simulation {
    world: World,
    controllers: Vec<RobotController>,
    mechanism: Arc<Mechanism>,
    motion_cfg: MotionConfig,
    decision_cfg: DecisionConfig,
    ticks_per_trace: u64,
    trace: OpinionTrace,
    trajectory: Option<Vec<TrajectoryRow>>,
    positions: Vec<(f64, f64)>,
}

/// Opinion trace sampling interval in seconds.
pub const TRACE_INTERVAL_S: f64 = 1.0;

impl Simulation {
    pub fn new(
        scenario: &Scenario,
        mechanism: Arc<Mechanism>,
        swarm_size: usize,
        params: &SimParams,
    ) -> Result<Simulation> {
        let ticks_per_trace = (TRACE_INTERVAL_S / params.dt_s).round();
        if ((TRACE_INTERVAL_S / params.dt_s) - ticks_per_trace).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "dt = {} s does not divide the {TRACE_INTERVAL_S} s trace interval",
                params.dt_s
            )));
        }
        let world = World::spawn_swarm(
            Arc::clone(&scenario.grid),
            swarm_size,
            scenario.spawn_seed,
            params.dt_s,
        )?;

        // balanced initial opinions by seeded shuffle
        let mut opinions: Vec<Color> = (0..swarm_size)
            .map(|i| {
                if i < swarm_size / 2 {
                    Color::Black
                } else {
                    Color::White
                }
            })
            .collect();
        let mut opinion_rng = ChaCha8Rng::seed_from_u64(scenario.opinion_seed);
        opinions.shuffle(&mut opinion_rng);

        let controllers = opinions
            .iter()
            .enumerate()
            .map(|(id, &opinion)| {
                let mut motion_rng = stream(scenario.stream_seed, &[tag::MOTION, id as u64]);
                let mut decision_rng = stream(scenario.stream_seed, &[tag::DECISION, id as u64]);
                let motion = MotionState::new(&mut motion_rng);
                let decision = DecisionState::new(opinion, &mut decision_rng);
                RobotController {
                    motion,
                    decision,
                    queue: MessageQueue::new(),
                    motion_rng,
                    decision_rng,
                    mechanism_rng: stream(scenario.stream_seed, &[tag::MECHANISM, id as u64]),
                    ann: mechanism.new_runtime(),
                }
            })
            .collect();

        let mut sim = Simulation {
            world,
            controllers,
            mechanism,
            motion_cfg: MotionConfig {
                rotation_speed_radps: params.rotation_speed_radps,
            },
            decision_cfg: DecisionConfig {
                t_send_mean_s: params.t_send_mean_s,
            },
            ticks_per_trace: ticks_per_trace as u64,
            trace: OpinionTrace::new(TRACE_INTERVAL_S),
            trajectory: None,
            positions: Vec::with_capacity(swarm_size),
        };
        sim.trace.push_sample(sim.opinions());
        Ok(sim)
    }

    /// Enables the per-tick trajectory dump (replay support).
    pub fn record_trajectory(&mut self) {
        let mut rows = Vec::new();
        push_trajectory_rows(&self.world, &self.controllers, &mut rows);
        self.trajectory = Some(rows);
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn trace(&self) -> &OpinionTrace {
        &self.trace
    }

    pub fn trajectory(&self) -> Option<&[TrajectoryRow]> {
        self.trajectory.as_deref()
    }

    pub fn opinions(&self) -> Vec<Color> {
        self.controllers
            .iter()
            .map(|c| c.decision.opinion())
            .collect()
    }

    pub fn final_opinions(&self) -> Vec<Color> {
        self.trace.last_sample().to_vec()
    }

    pub fn prediction_logs(&self) -> Vec<&PredictionLog> {
        self.controllers
            .iter()
            .filter_map(|c| c.ann.as_ref().map(|rt| rt.log()))
            .collect()
    }

    pub fn propagation_counts(&self) -> Vec<u64> {
        self.controllers
            .iter()
            .map(|c| c.decision.propagation_count())
            .collect()
    }

    /// Runs for the given duration (must be a whole number of ticks).
    pub fn run_for(&mut self, seconds: f64) {
        let ticks = (seconds / self.world.dt_s()).round() as u64;
        for _ in 0..ticks {
            self.step_tick();
        }
    }

    pub fn step_tick(&mut self) {
        let dt = self.world.dt_s();
        let mechanism = Arc::clone(&self.mechanism);

        for id in 0..self.controllers.len() {
            let prox = *self.world.proximity(id);
            let c = &mut self.controllers[id];
            let command = c.motion.step(&prox, &self.motion_cfg, &mut c.motion_rng, dt);
            self.world.set_command(id, command);
        }

        self.world.positions_into(&mut self.positions);
        for id in 0..self.controllers.len() {
            let ground = self.world.ground(id);
            let outcome = {
                let RobotController {
                    decision,
                    queue,
                    decision_rng,
                    mechanism_rng,
                    ann,
                    ..
                } = &mut self.controllers[id];
                decision.step(
                    ground,
                    queue,
                    &self.decision_cfg,
                    decision_rng,
                    dt,
                    |own, queue, ground| {
                        let vs = queue.virtual_sensors();
                        let ctx = DecisionContext {
                            own_opinion: own,
                            queue,
                            s0: vs.s0,
                            s1: vs.s1,
                            s2: ground.as_sensor_value(),
                        };
                        decide(&mechanism, &ctx, mechanism_rng, ann)
                    },
                )
            };
            if outcome.broadcast {
                let message = OpinionMessage {
                    sender: id,
                    opinion: self.controllers[id].decision.opinion(),
                };
                for receiver in recipients_in_range(&self.positions, id) {
                    let target = &mut self.controllers[receiver];
                    if target.decision.is_receiving() {
                        target.queue.push(message);
                    }
                }
            }
        }

        self.world.step();

        if self.world.tick() % self.ticks_per_trace == 0 {
            let opinions = self.opinions();
            self.trace.push_sample(opinions);
        }
        if let Some(rows) = &mut self.trajectory {
            push_trajectory_rows(&self.world, &self.controllers, rows);
        }
    }
}

fn push_trajectory_rows(
    world: &World,
    controllers: &[RobotController],
    rows: &mut Vec<TrajectoryRow>,
) {
    for (body, controller) in world.robots().iter().zip(controllers) {
        rows.push(TrajectoryRow {
            tick: world.tick(),
            robot: body.id,
            x: body.x,
            y: body.y,
            heading: body.heading,
            opinion: controller.decision.opinion(),
        });
    }
}
