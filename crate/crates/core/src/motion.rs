//! Random-walk motion controller: straight runs, timed rotations, obstacle
//! avoidance, and the unstuck escape driven by the rotation-budget buffer.

use rand::Rng;

use crate::sampling::sample_exp;
use crate::world::ProximityReadings;

/// Maximum linear speed in m/s.
pub const MAX_LINEAR_SPEED_MPS: f64 = 0.10;
/// Mean straight-run duration in seconds (exponential, uncapped).
pub const STRAIGHT_MEAN_S: f64 = 40.0;
/// Rotation durations are uniform on [0, ROTATION_MAX_S].
pub const ROTATION_MAX_S: f64 = 4.5;
/// Rotation-budget buffer cap in seconds.
pub const ZETA_MAX_S: f64 = 7.5;
/// Base avoidance turn of 180 degrees.
const AVOIDANCE_BASE_RAD: f64 = std::f64::consts::PI;
/// Avoidance jitter of +-25 degrees.
const AVOIDANCE_JITTER_RAD: f64 = 25.0 * std::f64::consts::PI / 180.0;

/// Speed pair sent to the differential drive. The controller emits either
/// pure translation or pure rotation, never both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WheelCommand {
    pub linear_mps: f64,
    pub angular_radps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionMode {
    Straight,
    Rotation,
    Avoidance,
    Unstuck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TurnDirection {
    Clockwise,
    CounterClockwise,
}

impl TurnDirection {
    fn sign(self) -> f64 {
        match self {
            TurnDirection::Clockwise => -1.0,
            TurnDirection::CounterClockwise => 1.0,
        }
    }

    fn random(rng: &mut impl Rng) -> Self {
        if rng.random::<bool>() {
            TurnDirection::CounterClockwise
        } else {
            TurnDirection::Clockwise
        }
    }
}

/// Tunables the motion controller does not pin down itself.
#[derive(Clone, Copy, Debug)]
pub struct MotionConfig {
    /// Angular speed used in all rotating modes, rad/s.
    pub rotation_speed_radps: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            rotation_speed_radps: std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Straight-run duration: exponential with mean 40 s.
pub fn sample_straight_duration(rng: &mut impl Rng) -> f64 {
    sample_exp(rng, STRAIGHT_MEAN_S)
}

/// Rotation duration: uniform on [0, 4.5] s.
pub fn sample_rotation_duration(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.0..=ROTATION_MAX_S)
}

/// Per-robot motion state.
#[derive(Clone, Debug)]
pub struct MotionState {
    mode: MotionMode,
    mode_timer_s: f64,
    avoidance_remaining_rad: f64,
    turn_direction: TurnDirection,
    zeta_s: f64,
}

impl MotionState {
    /// Spawns in straight motion with a fresh run duration and a full
    /// rotation budget.
    pub fn new(rng: &mut impl Rng) -> Self {
        MotionState {
            mode: MotionMode::Straight,
            mode_timer_s: sample_straight_duration(rng),
            avoidance_remaining_rad: 0.0,
            turn_direction: TurnDirection::CounterClockwise,
            zeta_s: ZETA_MAX_S,
        }
    }

    pub fn mode(&self) -> MotionMode {
        self.mode
    }

    pub fn zeta(&self) -> f64 {
        self.zeta_s
    }

    /// Advances the controller one tick and returns the wheel command.
    ///
    /// The rotation budget is charged to the mode that was active at the
    /// start of the tick; transitions are evaluated next, and the command is
    /// emitted for the resulting mode.
    pub fn step(
        &mut self,
        prox: &ProximityReadings,
        cfg: &MotionConfig,
        rng: &mut impl Rng,
        dt: f64,
    ) -> WheelCommand {
        match self.mode {
            MotionMode::Straight => self.zeta_s += dt,
            MotionMode::Rotation | MotionMode::Avoidance => self.zeta_s -= dt,
            MotionMode::Unstuck => {}
        }
        self.zeta_s = self.zeta_s.clamp(-ZETA_MAX_S, ZETA_MAX_S);

        if matches!(self.mode, MotionMode::Rotation | MotionMode::Avoidance) && self.zeta_s < 0.0 {
            self.mode = MotionMode::Unstuck;
            self.turn_direction = TurnDirection::random(rng);
        }

        match self.mode {
            MotionMode::Straight => {
                if prox.obstacle_detected() {
                    self.mode = MotionMode::Avoidance;
                    self.avoidance_remaining_rad = AVOIDANCE_BASE_RAD
                        + rng.random_range(-AVOIDANCE_JITTER_RAD..=AVOIDANCE_JITTER_RAD);
                    self.turn_direction = turn_away_from(prox);
                } else if self.mode_timer_s <= 0.0 {
                    self.mode = MotionMode::Rotation;
                    self.mode_timer_s = sample_rotation_duration(rng);
                    self.turn_direction = TurnDirection::random(rng);
                }
            }
            MotionMode::Rotation => {
                if self.mode_timer_s <= 0.0 {
                    self.enter_straight(rng);
                }
            }
            MotionMode::Avoidance => {
                if self.avoidance_remaining_rad <= 0.0 {
                    self.enter_straight(rng);
                }
            }
            MotionMode::Unstuck => {
                if !prox.obstacle_detected() {
                    self.enter_straight(rng);
                    self.zeta_s = ZETA_MAX_S;
                }
            }
        }

        match self.mode {
            MotionMode::Straight => {
                self.mode_timer_s -= dt;
                WheelCommand {
                    linear_mps: MAX_LINEAR_SPEED_MPS,
                    angular_radps: 0.0,
                }
            }
            MotionMode::Rotation => {
                self.mode_timer_s -= dt;
                self.rotate(cfg)
            }
            MotionMode::Avoidance => {
                self.avoidance_remaining_rad -= cfg.rotation_speed_radps * dt;
                self.rotate(cfg)
            }
            MotionMode::Unstuck => self.rotate(cfg),
        }
    }

    fn enter_straight(&mut self, rng: &mut impl Rng) {
        self.mode = MotionMode::Straight;
        self.mode_timer_s = sample_straight_duration(rng);
    }

    fn rotate(&self, cfg: &MotionConfig) -> WheelCommand {
        WheelCommand {
            linear_mps: 0.0,
            angular_radps: self.turn_direction.sign() * cfg.rotation_speed_radps,
        }
    }
}

/// Turn toward the side with less summed proximity (the clearer side);
/// positive ray offsets are to the robot's left.
fn turn_away_from(prox: &ProximityReadings) -> TurnDirection {
    let values = prox.values();
    let right = values[0] + values[1];
    let left = values[3] + values[4];
    if left <= right {
        TurnDirection::CounterClockwise
    } else {
        TurnDirection::Clockwise
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DT: f64 = 0.05;

    fn clear() -> ProximityReadings {
        ProximityReadings::new([0.0; 5])
    }

    fn blocked() -> ProximityReadings {
        ProximityReadings::new([0.0, 0.0, 0.8, 0.0, 0.0])
    }

    #[test]
    fn straight_timer_expiry_enters_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = MotionState::new(&mut rng);
        state.mode_timer_s = 0.0;
        let cmd = state.step(&clear(), &MotionConfig::default(), &mut rng, DT);
        assert_eq!(state.mode(), MotionMode::Rotation);
        assert!(state.mode_timer_s >= -DT && state.mode_timer_s <= ROTATION_MAX_S);
        assert_eq!(cmd.linear_mps, 0.0);
        assert_eq!(cmd.angular_radps.abs(), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn obstacle_enters_avoidance_with_jittered_half_turn() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut state = MotionState::new(&mut rng);
        let cmd = state.step(&blocked(), &MotionConfig::default(), &mut rng, DT);
        assert_eq!(state.mode(), MotionMode::Avoidance);
        let beta_deg = state.avoidance_remaining_rad.to_degrees()
            + (MotionConfig::default().rotation_speed_radps * DT).to_degrees();
        assert!((155.0..=205.0).contains(&beta_deg), "beta {beta_deg}");
        assert_eq!(cmd.linear_mps, 0.0);
    }

    #[test]
    fn avoidance_completes_into_straight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = MotionState::new(&mut rng);
        state.step(&blocked(), &MotionConfig::default(), &mut rng, DT);
        // rays clear once the turn starts; finish the commanded turn
        for _ in 0..10_000 {
            if state.mode() == MotionMode::Straight {
                break;
            }
            state.step(&clear(), &MotionConfig::default(), &mut rng, DT);
        }
        assert_eq!(state.mode(), MotionMode::Straight);
    }

    #[test]
    fn corner_trap_drives_unstuck_then_recovers() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut state = MotionState::new(&mut rng);
        state.zeta_s = 0.04; // nearly exhausted budget
        state.step(&blocked(), &MotionConfig::default(), &mut rng, DT);
        assert_eq!(state.mode(), MotionMode::Avoidance);
        // a few avoidance ticks charge the budget below zero
        for _ in 0..10 {
            if state.mode() == MotionMode::Unstuck {
                break;
            }
            state.step(&blocked(), &MotionConfig::default(), &mut rng, DT);
        }
        assert_eq!(state.mode(), MotionMode::Unstuck);
        let zeta_in_unstuck = state.zeta();
        assert!(zeta_in_unstuck < 0.0);
        // budget frozen while escaping
        state.step(&blocked(), &MotionConfig::default(), &mut rng, DT);
        assert_eq!(state.mode(), MotionMode::Unstuck);
        assert_eq!(state.zeta(), zeta_in_unstuck);
        // rays clear: back to straight with a full budget
        state.step(&clear(), &MotionConfig::default(), &mut rng, DT);
        assert_eq!(state.mode(), MotionMode::Straight);
        assert_eq!(state.zeta(), ZETA_MAX_S);
    }

    #[test]
    fn avoidance_turns_toward_the_clearer_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut state = MotionState::new(&mut rng);
        let left_blocked = ProximityReadings::new([0.0, 0.0, 0.4, 0.6, 0.2]);
        state.step(&left_blocked, &MotionConfig::default(), &mut rng, DT);
        assert_eq!(state.turn_direction, TurnDirection::Clockwise);

        let mut state = MotionState::new(&mut rng);
        let right_blocked = ProximityReadings::new([0.2, 0.6, 0.4, 0.0, 0.0]);
        state.step(&right_blocked, &MotionConfig::default(), &mut rng, DT);
        assert_eq!(state.turn_direction, TurnDirection::CounterClockwise);
    }

    #[test]
    fn straight_duration_sampler_has_mean_forty() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws: Vec<f64> = (0..10_000).map(|_| sample_straight_duration(&mut rng)).collect();
        assert!(draws.iter().all(|d| *d >= 0.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 40.0).abs() < 2.0, "mean {mean}");
    }

    #[test]
    fn rotation_duration_sampler_is_uniform_on_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<f64> = (0..10_000).map(|_| sample_rotation_duration(&mut rng)).collect();
        assert!(draws.iter().all(|d| (0.0..=ROTATION_MAX_S).contains(d)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 2.25).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn samplers_are_seed_reproducible() {
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            (0..32).map(|_| sample_straight_duration(&mut rng)).collect()
        };
        let b: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            (0..32).map(|_| sample_straight_duration(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn lone_robot_never_avoids_and_commands_stay_legal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = MotionConfig::default();
        let mut state = MotionState::new(&mut rng);
        for _ in 0..100_000 {
            let cmd = state.step(&clear(), &cfg, &mut rng, DT);
            assert!(matches!(
                state.mode(),
                MotionMode::Straight | MotionMode::Rotation
            ));
            let translating =
                cmd.linear_mps == MAX_LINEAR_SPEED_MPS && cmd.angular_radps == 0.0;
            let rotating = cmd.linear_mps == 0.0
                && cmd.angular_radps.abs() == cfg.rotation_speed_radps;
            assert!(translating || rotating);
            assert!((-ZETA_MAX_S..=ZETA_MAX_S).contains(&state.zeta()));
        }
    }
}
