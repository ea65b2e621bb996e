//! Robot bodies, the fixed-tick clock, kinematics, collision resolution,
//! and sample-and-hold sensor service.
//!
//! Bodies are kinematic discs. Each tick applies exact differential-drive
//! arc integration, then removes robot-wall and robot-robot overlaps by
//! minimal translation with zero restitution. Proximity and ground readings
//! are recomputed only on their refresh boundaries (0.15 s and 0.2 s) and
//! held constant in between.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arena::{Color, TileGrid, ARENA_SIZE_M};
use crate::error::{Error, Result};
use crate::motion::WheelCommand;

/// Robot body radius in meters (7 cm diameter).
pub const ROBOT_RADIUS_M: f64 = 0.035;
/// Proximity sensor range in meters, measured from the robot rim.
pub const PROXIMITY_RANGE_M: f64 = 0.10;
/// Proximity refresh period in seconds.
pub const PROXIMITY_PERIOD_S: f64 = 0.15;
/// Ground sampling period in seconds.
pub const GROUND_PERIOD_S: f64 = 0.2;
/// Ray headings of the five frontal proximity sensors, relative to the
/// robot heading; positive offsets point left.
pub const PROXIMITY_RAY_OFFSETS_RAD: [f64; 5] = [
    -60.0 * std::f64::consts::PI / 180.0,
    -30.0 * std::f64::consts::PI / 180.0,
    0.0,
    30.0 * std::f64::consts::PI / 180.0,
    60.0 * std::f64::consts::PI / 180.0,
];

const PLACEMENT_ATTEMPTS: usize = 10_000;
const RESOLUTION_PASSES: usize = 64;
const SEPARATION_SLACK_M: f64 = 1e-9;

/// Five frontal readings in [0, 1]; 0 means nothing within range along the
/// ray, 1 means contact at the rim.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProximityReadings {
    values: [f64; 5],
}

impl ProximityReadings {
    pub fn new(values: [f64; 5]) -> Self {
        ProximityReadings { values }
    }

    pub fn values(&self) -> &[f64; 5] {
        &self.values
    }

    pub fn obstacle_detected(&self) -> bool {
        self.values.iter().any(|v| *v > 0.0)
    }
}

/// A robot body: pose plus the wheel command applied on the next step.
#[derive(Clone, Debug)]
pub struct RobotBody {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub command: WheelCommand,
}

/// All robot bodies plus the simulation clock.
#[derive(Clone, Debug)]
pub struct World {
    grid: Arc<TileGrid>,
    bodies: Vec<RobotBody>,
    dt_s: f64,
    tick: u64,
    ticks_per_proximity: u64,
    ticks_per_ground: u64,
    proximity_cache: Vec<ProximityReadings>,
    ground_cache: Vec<Color>,
}

fn ticks_for_period(period_s: f64, dt_s: f64) -> Result<u64> {
    let ticks = period_s / dt_s;
    if (ticks - ticks.round()).abs() > 1e-9 || ticks.round() < 1.0 {
        return Err(Error::Config(format!(
            "period {period_s} s is not an integer multiple of dt = {dt_s} s"
        )));
    }
    Ok(ticks.round() as u64)
}

impl World {
    /// Places `n` robots at uniformly random non-overlapping poses with
    /// random headings; deterministic per seed.
    pub fn spawn_swarm(grid: Arc<TileGrid>, n: usize, seed: u64, dt_s: f64) -> Result<World> {
        if dt_s <= 0.0 {
            return Err(Error::Config(format!("dt must be positive, got {dt_s}")));
        }
        let ticks_per_proximity = ticks_for_period(PROXIMITY_PERIOD_S, dt_s)?;
        let ticks_per_ground = ticks_for_period(GROUND_PERIOD_S, dt_s)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = ROBOT_RADIUS_M;
        let hi = ARENA_SIZE_M - ROBOT_RADIUS_M;
        let mut bodies: Vec<RobotBody> = Vec::with_capacity(n);
        for id in 0..n {
            let mut placed = false;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let x = rng.random_range(lo..=hi);
                let y = rng.random_range(lo..=hi);
                let heading = rng.random_range(0.0..std::f64::consts::TAU);
                let overlaps = bodies.iter().any(|b| {
                    let (dx, dy) = (b.x - x, b.y - y);
                    dx * dx + dy * dy < (2.0 * ROBOT_RADIUS_M) * (2.0 * ROBOT_RADIUS_M)
                });
                if !overlaps {
                    bodies.push(RobotBody {
                        id,
                        x,
                        y,
                        heading,
                        command: WheelCommand {
                            linear_mps: 0.0,
                            angular_radps: 0.0,
                        },
                    });
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Setup(format!(
                    "could not place robot {id} after {PLACEMENT_ATTEMPTS} attempts"
                )));
            }
        }

        let mut world = World {
            grid,
            bodies,
            dt_s,
            tick: 0,
            ticks_per_proximity,
            ticks_per_ground,
            proximity_cache: Vec::new(),
            ground_cache: Vec::new(),
        };
        world.proximity_cache = (0..n).map(|id| world.compute_proximity(id)).collect();
        world.ground_cache = (0..n).map(|id| world.compute_ground(id)).collect();
        Ok(world)
    }

    pub fn robot_count(&self) -> usize {
        self.bodies.len()
    }

    pub fn robots(&self) -> &[RobotBody] {
        &self.bodies
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn time_s(&self) -> f64 {
        self.tick as f64 * self.dt_s
    }

    pub fn grid(&self) -> &TileGrid {
        &self.grid
    }

    pub fn position(&self, id: usize) -> (f64, f64) {
        let b = &self.bodies[id];
        (b.x, b.y)
    }

    /// Copies all positions into `out` (cleared first).
    pub fn positions_into(&self, out: &mut Vec<(f64, f64)>) {
        out.clear();
        out.extend(self.bodies.iter().map(|b| (b.x, b.y)));
    }

    /// Sets the wheel command applied on the next step; linear speed is
    /// clamped to the drive's limits.
    pub fn set_command(&mut self, id: usize, command: WheelCommand) {
        let body = &mut self.bodies[id];
        body.command = WheelCommand {
            linear_mps: command
                .linear_mps
                .clamp(0.0, crate::motion::MAX_LINEAR_SPEED_MPS),
            angular_radps: command.angular_radps,
        };
    }

    /// Held proximity readings for the current refresh window.
    pub fn proximity(&self, id: usize) -> &ProximityReadings {
        &self.proximity_cache[id]
    }

    /// Held ground color for the current sampling window.
    pub fn ground(&self, id: usize) -> Color {
        self.ground_cache[id]
    }

    /// Advances all bodies by one tick, resolves collisions, and refreshes
    /// any sensor caches whose boundary falls on the new tick.
    pub fn step(&mut self) {
        let dt = self.dt_s;
        for body in &mut self.bodies {
            let v = body.command.linear_mps;
            let w = body.command.angular_radps;
            if w.abs() < 1e-9 {
                body.x += v * body.heading.cos() * dt;
                body.y += v * body.heading.sin() * dt;
            } else {
                let radius = v / w;
                let next_heading = body.heading + w * dt;
                body.x += radius * (next_heading.sin() - body.heading.sin());
                body.y -= radius * (next_heading.cos() - body.heading.cos());
                body.heading = next_heading;
            }
        }
        self.resolve_collisions();
        self.tick += 1;
        if self.tick % self.ticks_per_proximity == 0 {
            self.proximity_cache = (0..self.bodies.len())
                .map(|id| self.compute_proximity(id))
                .collect();
        }
        if self.tick % self.ticks_per_ground == 0 {
            self.ground_cache = (0..self.bodies.len())
                .map(|id| self.compute_ground(id))
                .collect();
        }
    }

    fn resolve_collisions(&mut self) {
        let lo = ROBOT_RADIUS_M;
        let hi = ARENA_SIZE_M - ROBOT_RADIUS_M;
        for body in &mut self.bodies {
            body.x = body.x.clamp(lo, hi);
            body.y = body.y.clamp(lo, hi);
        }
        let min_sep = 2.0 * ROBOT_RADIUS_M;
        let overlap_sep = min_sep - SEPARATION_SLACK_M;
        let n = self.bodies.len();
        for _ in 0..RESOLUTION_PASSES {
            let mut moved = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    let dx = self.bodies[j].x - self.bodies[i].x;
                    let dy = self.bodies[j].y - self.bodies[i].y;
                    let dist_sq = dx * dx + dy * dy;
                    if dist_sq >= overlap_sep * overlap_sep {
                        continue;
                    }
                    let dist = dist_sq.sqrt();
                    let (ux, uy) = if dist < 1e-12 {
                        (1.0, 0.0)
                    } else {
                        (dx / dist, dy / dist)
                    };
                    let push = (min_sep - dist) / 2.0;
                    self.bodies[i].x = (self.bodies[i].x - ux * push).clamp(lo, hi);
                    self.bodies[i].y = (self.bodies[i].y - uy * push).clamp(lo, hi);
                    self.bodies[j].x = (self.bodies[j].x + ux * push).clamp(lo, hi);
                    self.bodies[j].y = (self.bodies[j].y + uy * push).clamp(lo, hi);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }

    fn compute_ground(&self, id: usize) -> Color {
        let body = &self.bodies[id];
        self.grid
            .color_at(body.x, body.y)
            .expect("robot centers stay inside the arena")
    }

    fn compute_proximity(&self, id: usize) -> ProximityReadings {
        let body = &self.bodies[id];
        // a neighbor disc can intersect a ray only if its center is within
        // ray length (radius + range) plus its own radius
        let reach = ROBOT_RADIUS_M + PROXIMITY_RANGE_M + ROBOT_RADIUS_M;
        let candidates: Vec<(f64, f64)> = self
            .bodies
            .iter()
            .filter(|b| {
                b.id != id && {
                    let (dx, dy) = (b.x - body.x, b.y - body.y);
                    dx * dx + dy * dy <= reach * reach
                }
            })
            .map(|b| (b.x, b.y))
            .collect();

        let mut values = [0.0; 5];
        for (ray, offset) in PROXIMITY_RAY_OFFSETS_RAD.iter().enumerate() {
            let dir = body.heading + offset;
            let (ux, uy) = (dir.cos(), dir.sin());
            let mut nearest = ray_to_walls(body.x, body.y, ux, uy);
            for &(cx, cy) in &candidates {
                if let Some(t) = ray_to_disc(body.x, body.y, ux, uy, cx, cy, ROBOT_RADIUS_M) {
                    nearest = nearest.min(t);
                }
            }
            let rim_distance = (nearest - ROBOT_RADIUS_M).max(0.0);
            values[ray] = (1.0 - rim_distance / PROXIMITY_RANGE_M).clamp(0.0, 1.0);
        }
        ProximityReadings { values }
    }
}

/// Distance along the ray to the nearest arena wall; finite because the
/// arena is bounded.
fn ray_to_walls(px: f64, py: f64, ux: f64, uy: f64) -> f64 {
    let mut nearest = f64::INFINITY;
    if ux > 0.0 {
        nearest = nearest.min((ARENA_SIZE_M - px) / ux);
    } else if ux < 0.0 {
        nearest = nearest.min(-px / ux);
    }
    if uy > 0.0 {
        nearest = nearest.min((ARENA_SIZE_M - py) / uy);
    } else if uy < 0.0 {
        nearest = nearest.min(-py / uy);
    }
    nearest
}

/// Distance along the ray to a disc, if hit; 0 when the origin is inside.
fn ray_to_disc(px: f64, py: f64, ux: f64, uy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let (mx, my) = (cx - px, cy - py);
    let b = mx * ux + my * uy;
    let c = mx * mx + my * my - r * r;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 || b < 0.0 {
        return None;
    }
    let t = b - disc.sqrt();
    (t >= 0.0).then_some(t)
}
