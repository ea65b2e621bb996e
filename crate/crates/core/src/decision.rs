//! Four-state decision behavior with direct modulation of positive feedback:
//! exploration and dissemination per opinion color, a quality estimate from
//! ground sampling, and a pluggable decision mechanism applied at the end of
//! each dissemination cycle.

use rand::Rng;

use crate::arena::Color;
use crate::comms::MessageQueue;
use crate::sampling::sample_exp;

/// Mean exploration duration in seconds (exponential).
pub const EXPLORATION_MEAN_S: f64 = 10.0;
/// Lower clamp on exploration draws so the quality estimate is always
/// defined (one ground-sample period).
pub const MIN_EXPLORATION_S: f64 = 0.2;
/// Fixed receive window after the send phase, seconds.
pub const RECEIVE_WINDOW_S: f64 = 3.0;
/// Opinion broadcast period during the send phase, seconds.
pub const BROADCAST_PERIOD_S: f64 = 1.0;
/// Default scale of the quality-modulated send phase, seconds.
pub const DEFAULT_T_SEND_S: f64 = 10.0;
/// Timer-expiry slack so accumulated rounding cannot stretch a phase whose
/// duration is an exact multiple of the tick by one extra tick.
const TIMER_EPS_S: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Exploration,
    DisseminationSend,
    DisseminationReceive,
}

/// Decision-behavior tunables.
#[derive(Clone, Copy, Debug)]
pub struct DecisionConfig {
    /// Mean send duration is `t_send_mean_s` times the quality estimate.
    pub t_send_mean_s: f64,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            t_send_mean_s: DEFAULT_T_SEND_S,
        }
    }
}

/// What a decision step did, for the simulation to act on.
#[derive(Clone, Copy, Debug, Default)]
pub struct DecisionOutcome {
    /// Broadcast the robot's opinion to its neighborhood this tick.
    pub broadcast: bool,
    /// The decision mechanism ran this tick.
    pub decided: bool,
}

/// Quality estimate: fraction of exploration time the ground color matched
/// the robot's opinion.
pub fn quality_estimate(match_time_s: f64, elapsed_s: f64) -> f64 {
    debug_assert!(elapsed_s > 0.0);
    match_time_s / elapsed_s
}

/// Per-robot decision state.
#[derive(Clone, Debug)]
pub struct DecisionState {
    phase: Phase,
    opinion: Color,
    phase_timer_s: f64,
    explore_elapsed_s: f64,
    explore_match_s: f64,
    quality: f64,
    broadcast_countdown_s: f64,
    propagation_count: u64,
}

impl DecisionState {
    /// Starts exploring with a freshly sampled duration, desynchronizing the
    /// swarm naturally.
    pub fn new(opinion: Color, rng: &mut impl Rng) -> Self {
        DecisionState {
            phase: Phase::Exploration,
            opinion,
            phase_timer_s: sample_exploration(rng),
            explore_elapsed_s: 0.0,
            explore_match_s: 0.0,
            quality: 0.0,
            broadcast_countdown_s: 0.0,
            propagation_count: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn opinion(&self) -> Color {
        self.opinion
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    /// Number of completed dissemination cycles (decision-mechanism runs).
    pub fn propagation_count(&self) -> u64 {
        self.propagation_count
    }

    /// Deliveries are only stored while the receive window is open.
    pub fn is_receiving(&self) -> bool {
        self.phase == Phase::DisseminationReceive
    }

    /// Advances the behavior one tick. `decide` is called exactly at
    /// receive-window expiry with (own opinion, queue, held ground) and
    /// returns the updated opinion.
    pub fn step(
        &mut self,
        ground: Color,
        queue: &mut MessageQueue,
        cfg: &DecisionConfig,
        rng: &mut impl Rng,
        dt: f64,
        decide: impl FnOnce(Color, &MessageQueue, Color) -> Color,
    ) -> DecisionOutcome {
        let mut outcome = DecisionOutcome::default();
        match self.phase {
            Phase::Exploration => {
                if self.phase_timer_s <= 0.0 {
                    self.quality = quality_estimate(self.explore_match_s, self.explore_elapsed_s);
                    self.phase = Phase::DisseminationSend;
                    self.phase_timer_s = sample_exp(rng, cfg.t_send_mean_s * self.quality);
                    self.broadcast_countdown_s = 0.0;
                } else {
                    if ground == self.opinion {
                        self.explore_match_s += dt;
                    }
                    self.explore_elapsed_s += dt;
                    self.phase_timer_s -= dt;
                    return outcome;
                }
            }
            Phase::DisseminationSend => {}
            Phase::DisseminationReceive => {}
        }

        match self.phase {
            Phase::DisseminationSend => {
                if self.phase_timer_s <= 0.0 {
                    // queue reflects only the upcoming window
                    queue.clear();
                    self.phase = Phase::DisseminationReceive;
                    self.phase_timer_s = RECEIVE_WINDOW_S;
                } else {
                    if self.broadcast_countdown_s <= 0.0 {
                        outcome.broadcast = true;
                        self.broadcast_countdown_s += BROADCAST_PERIOD_S;
                    }
                    self.broadcast_countdown_s -= dt;
                    self.phase_timer_s -= dt;
                }
            }
            Phase::DisseminationReceive => {
                if self.phase_timer_s <= 0.0 {
                    self.opinion = decide(self.opinion, queue, ground);
                    self.propagation_count += 1;
                    outcome.decided = true;
                    self.phase = Phase::Exploration;
                    self.phase_timer_s = sample_exploration(rng);
                    self.explore_elapsed_s = 0.0;
                    self.explore_match_s = 0.0;
                } else {
                    self.phase_timer_s -= dt;
                }
            }
            Phase::Exploration => {}
        }
        outcome
    }
}

fn sample_exploration(rng: &mut impl Rng) -> f64 {
    sample_exp(rng, EXPLORATION_MEAN_S).max(MIN_EXPLORATION_S)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DT: f64 = 0.05;

    fn keep_own(own: Color, _q: &MessageQueue, _g: Color) -> Color {
        own
    }

    /// Runs one full cycle (exploration through decision) under a constant
    /// ground color; returns (quality, send ticks, receive ticks).
    fn run_cycle(state: &mut DecisionState, ground: Color, rng: &mut ChaCha8Rng) -> (f64, u64, u64) {
        let cfg = DecisionConfig::default();
        let mut queue = MessageQueue::new();
        let mut send_ticks = 0;
        let mut receive_ticks = 0;
        for _ in 0..1_000_000 {
            let before = state.phase();
            let outcome = state.step(ground, &mut queue, &cfg, rng, DT, keep_own);
            match before {
                Phase::DisseminationSend => send_ticks += 1,
                Phase::DisseminationReceive => receive_ticks += 1,
                Phase::Exploration => {}
            }
            if outcome.decided {
                return (state.quality(), send_ticks, receive_ticks);
            }
        }
        panic!("cycle did not complete");
    }

    #[test]
    fn matching_ground_gives_full_quality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = DecisionState::new(Color::Black, &mut rng);
        let (quality, _, _) = run_cycle(&mut state, Color::Black, &mut rng);
        assert_eq!(quality, 1.0);
    }

    #[test]
    fn opposite_ground_gives_zero_quality_and_skips_the_send_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut state = DecisionState::new(Color::Black, &mut rng);
        let (quality, send_ticks, receive_ticks) = run_cycle(&mut state, Color::White, &mut rng);
        assert_eq!(quality, 0.0);
        // zero-length send: straight into the 3 s receive window, no broadcast
        assert_eq!(send_ticks, 0);
        assert_eq!(receive_ticks, 61);
    }

    #[test]
    fn quality_estimate_examples() {
        assert_eq!(quality_estimate(5.0, 10.0), 0.5);
        assert_eq!(quality_estimate(0.0, 4.0), 0.0);
        assert_eq!(quality_estimate(10.0, 10.0), 1.0);
    }

    #[test]
    fn full_quality_dissemination_averages_thirteen_seconds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = DecisionState::new(Color::Black, &mut rng);
        let cycles = 10_000;
        let mut dissemination_ticks = 0u64;
        for _ in 0..cycles {
            let (quality, send, receive) = run_cycle(&mut state, Color::Black, &mut rng);
            assert_eq!(quality, 1.0);
            dissemination_ticks += send + receive;
        }
        let mean_s = dissemination_ticks as f64 * DT / cycles as f64;
        assert!((mean_s - 13.0).abs() < 0.5, "mean dissemination {mean_s} s");
    }

    #[test]
    fn send_duration_grows_with_quality() {
        // positive feedback: higher quality -> longer mean send phase
        let mut mean_send = |quality_target: f64, seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = DecisionConfig::default();
            let mut total = 0.0;
            for _ in 0..4000 {
                total += sample_exp(&mut rng, cfg.t_send_mean_s * quality_target);
            }
            total / 4000.0
        };
        let low = mean_send(0.25, 4);
        let mid = mean_send(0.5, 5);
        let high = mean_send(1.0, 6);
        assert!(low < mid && mid < high, "{low} {mid} {high}");
        assert!((low - 2.5).abs() < 0.3);
        assert!((mid - 5.0).abs() < 0.5);
        assert!((high - 10.0).abs() < 0.7);
    }

    #[test]
    fn broadcasts_fire_at_one_hertz_during_send() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut state = DecisionState::new(Color::Black, &mut rng);
        let cfg = DecisionConfig::default();
        let mut queue = MessageQueue::new();
        let mut broadcast_ticks = Vec::new();
        let mut entered_send_at = None;
        for tick in 0u64..100_000 {
            let before = state.phase();
            let outcome = state.step(Color::Black, &mut queue, &cfg, &mut rng, DT, keep_own);
            if before == Phase::Exploration
                && state.phase() != Phase::Exploration
                && entered_send_at.is_none()
            {
                entered_send_at = Some(tick);
            }
            if outcome.broadcast {
                broadcast_ticks.push(tick);
            }
            if outcome.decided {
                break;
            }
        }
        // the first broadcast goes out the moment the send phase opens
        assert_eq!(broadcast_ticks.first().copied(), entered_send_at);
        for pair in broadcast_ticks.windows(2) {
            assert_eq!(pair[1] - pair[0], 20, "1 Hz at dt = 0.05 s");
        }
    }

    #[test]
    fn opinion_changes_only_at_decisions_and_counts_propagations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut state = DecisionState::new(Color::Black, &mut rng);
        let cfg = DecisionConfig::default();
        let mut queue = MessageQueue::new();
        let mut decisions = 0u64;
        for _ in 0..200_000 {
            let before = state.opinion();
            let outcome = state.step(Color::Black, &mut queue, &cfg, &mut rng, DT, |own, _, _| {
                own.inverted()
            });
            if outcome.decided {
                decisions += 1;
                assert_eq!(state.opinion(), before.inverted());
            } else {
                assert_eq!(state.opinion(), before);
            }
        }
        assert!(decisions > 0);
        assert_eq!(state.propagation_count(), decisions);
    }

    #[test]
    fn queue_is_cleared_when_the_receive_window_opens() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = DecisionState::new(Color::Black, &mut rng);
        let cfg = DecisionConfig::default();
        let mut queue = MessageQueue::new();
        queue.push(crate::comms::OpinionMessage {
            sender: 9,
            opinion: Color::White,
        });
        let mut saw_receive = false;
        for _ in 0..1_000_000 {
            state.step(Color::Black, &mut queue, &cfg, &mut rng, DT, keep_own);
            if state.is_receiving() {
                saw_receive = true;
                break;
            }
        }
        assert!(saw_receive);
        assert!(queue.is_empty(), "stale opinions must not leak across cycles");
    }
}
