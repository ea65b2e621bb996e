//! Pluggable decision mechanisms: voter model, majority rule, and evolved
//! networks with an optional prediction side channel.

use rand::Rng;

use crate::arena::Color;
use crate::comms::MessageQueue;
use crate::error::{Error, Result};
use crate::neural::{DecisionNet, Genome, PredictionLog, PredictionNet, PredictionState};

/// Inputs available to a mechanism at invocation time.
#[derive(Clone, Copy, Debug)]
pub struct DecisionContext<'a> {
    pub own_opinion: Color,
    pub queue: &'a MessageQueue,
    /// Share of white opinions in the queue.
    pub s0: f64,
    /// Queue fill level.
    pub s1: f64,
    /// Held ground reading as 0 (black) / 1 (white).
    pub s2: f64,
}

/// Mechanism selection, matching the CLI/config string form
/// `voter | majority | ann:<genome-file>`.
#[derive(Clone, Debug)]
pub enum MechanismKind {
    Voter,
    Majority,
    EvolvedAnn(Genome),
}

impl MechanismKind {
    pub fn parse_spec(spec: &str) -> Result<Self> {
        match spec {
            "voter" => Ok(MechanismKind::Voter),
            "majority" => Ok(MechanismKind::Majority),
            other => {
                if let Some(path) = other.strip_prefix("ann:") {
                    Ok(MechanismKind::EvolvedAnn(Genome::from_file(path)?))
                } else {
                    Err(Error::Config(format!(
                        "unknown mechanism {other:?}, expected \"voter\", \"majority\", \
                         or \"ann:<genome-file>\""
                    )))
                }
            }
        }
    }

    pub fn decode(&self) -> Mechanism {
        match self {
            MechanismKind::Voter => Mechanism::Voter,
            MechanismKind::Majority => Mechanism::Majority,
            MechanismKind::EvolvedAnn(genome) => Mechanism::from_genome(genome),
        }
    }
}

/// A decoded mechanism, shareable read-only across the robots of a run.
#[derive(Clone, Debug)]
pub enum Mechanism {
    Voter,
    Majority,
    Ann {
        decision: DecisionNet,
        predictor: Option<PredictionNet>,
    },
}

impl Mechanism {
    pub fn from_genome(genome: &Genome) -> Mechanism {
        let (decision, predictor) = genome.decode();
        Mechanism::Ann {
            decision,
            predictor,
        }
    }

    /// Per-robot mutable state; only evolved mechanisms with a predictor
    /// carry any.
    pub fn new_runtime(&self) -> Option<AnnRuntime> {
        match self {
            Mechanism::Ann {
                predictor: Some(net),
                ..
            } => Some(AnnRuntime::new(net)),
            _ => None,
        }
    }
}

/// Mutable per-robot side of the evolved mechanism: recurrent predictor
/// state, the prediction awaiting its next-step actuals, and the scored log.
#[derive(Clone, Debug)]
pub struct AnnRuntime {
    state: PredictionState,
    pending: Option<[f64; 3]>,
    log: PredictionLog,
}

impl AnnRuntime {
    pub fn new(net: &PredictionNet) -> Self {
        AnnRuntime {
            state: net.initial_state(),
            pending: None,
            log: PredictionLog::new(),
        }
    }

    pub fn log(&self) -> &PredictionLog {
        &self.log
    }
}

/// Adopt the opinion of one uniformly random queued neighbor; keep the own
/// opinion when nobody was heard.
pub fn voter_decide(ctx: &DecisionContext, rng: &mut impl Rng) -> Color {
    if ctx.queue.is_empty() {
        return ctx.own_opinion;
    }
    let pick = rng.random_range(0..ctx.queue.len());
    ctx.queue.entries()[pick].opinion
}

/// Adopt the strict majority among the queue plus the own vote; ties keep
/// the own opinion.
pub fn majority_decide(ctx: &DecisionContext) -> Color {
    let mut white = ctx
        .queue
        .entries()
        .iter()
        .filter(|e| e.opinion == Color::White)
        .count();
    let mut black = ctx.queue.len() - white;
    match ctx.own_opinion {
        Color::White => white += 1,
        Color::Black => black += 1,
    }
    match white.cmp(&black) {
        std::cmp::Ordering::Greater => Color::White,
        std::cmp::Ordering::Less => Color::Black,
        std::cmp::Ordering::Equal => ctx.own_opinion,
    }
}

/// Evolved mechanism: thresholds the decision network's output (>= 0.5 maps
/// to white) and, when a predictor is present, closes out the pending
/// prediction against this propagation's actuals before predicting the next.
pub fn ann_decide(
    decision: &DecisionNet,
    predictor: Option<&PredictionNet>,
    ctx: &DecisionContext,
    runtime: &mut Option<AnnRuntime>,
) -> Color {
    let d_prev = ctx.own_opinion.as_sensor_value();
    let output = decision.forward([ctx.s0, ctx.s1, ctx.s2, d_prev]);
    let updated = if output >= 0.5 {
        Color::White
    } else {
        Color::Black
    };
    if let (Some(net), Some(rt)) = (predictor, runtime.as_mut()) {
        let actuals = [ctx.s0, ctx.s1, ctx.s2];
        if let Some(pending) = rt.pending.take() {
            rt.log.push(pending, actuals);
        }
        let prediction = net.forward([ctx.s0, ctx.s1, ctx.s2, updated.as_sensor_value()], &mut rt.state);
        rt.pending = Some(prediction);
    }
    updated
}

/// Dispatches to the mechanism implementation.
pub fn decide(
    mechanism: &Mechanism,
    ctx: &DecisionContext,
    rng: &mut impl Rng,
    runtime: &mut Option<AnnRuntime>,
) -> Color {
    match mechanism {
        Mechanism::Voter => voter_decide(ctx, rng),
        Mechanism::Majority => majority_decide(ctx),
        Mechanism::Ann {
            decision,
            predictor,
        } => ann_decide(decision, predictor.as_ref(), ctx, runtime),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::OpinionMessage;
    use crate::neural::DECISION_PARAM_COUNT;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn queue_of(opinions: &[Color]) -> MessageQueue {
        let mut q = MessageQueue::new();
        for (sender, &opinion) in opinions.iter().enumerate() {
            q.push(OpinionMessage { sender, opinion });
        }
        q
    }

    fn ctx<'a>(own: Color, queue: &'a MessageQueue, ground: Color) -> DecisionContext<'a> {
        let vs = queue.virtual_sensors();
        DecisionContext {
            own_opinion: own,
            queue,
            s0: vs.s0,
            s1: vs.s1,
            s2: ground.as_sensor_value(),
        }
    }

    #[test]
    fn voter_adopts_a_lone_neighbor() {
        let queue = queue_of(&[Color::White]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            voter_decide(&ctx(Color::Black, &queue, Color::Black), &mut rng),
            Color::White
        );
    }

    #[test]
    fn voter_keeps_own_opinion_without_neighbors() {
        let queue = MessageQueue::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            voter_decide(&ctx(Color::Black, &queue, Color::White), &mut rng),
            Color::Black
        );
    }

    #[test]
    fn voter_picks_uniformly() {
        let queue = queue_of(&[Color::White, Color::White, Color::Black, Color::Black]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut white = 0u32;
        for _ in 0..10_000 {
            if voter_decide(&ctx(Color::Black, &queue, Color::Black), &mut rng) == Color::White {
                white += 1;
            }
        }
        let freq = white as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "white frequency {freq}");
    }

    #[test]
    fn majority_counts_the_own_vote() {
        let three_white = queue_of(&[Color::White, Color::White, Color::White]);
        assert_eq!(
            majority_decide(&ctx(Color::Black, &three_white, Color::Black)),
            Color::White
        );
        // own black vote breaks 1W/1B toward black
        let split = queue_of(&[Color::White, Color::Black]);
        assert_eq!(
            majority_decide(&ctx(Color::Black, &split, Color::Black)),
            Color::Black
        );
        // 2W/2B queue plus own white vote: white wins 3-2
        let even = queue_of(&[Color::Black, Color::Black, Color::White, Color::White]);
        assert_eq!(
            majority_decide(&ctx(Color::White, &even, Color::Black)),
            Color::White
        );
    }

    #[test]
    fn majority_tie_keeps_own_opinion() {
        let queue = queue_of(&[Color::White]);
        // 1W vs own B: tie at 1-1 keeps black
        assert_eq!(
            majority_decide(&ctx(Color::Black, &queue, Color::White)),
            Color::Black
        );
        let empty = MessageQueue::new();
        assert_eq!(
            majority_decide(&ctx(Color::Black, &empty, Color::White)),
            Color::Black
        );
    }

    #[test]
    fn zero_network_outputs_white_by_the_threshold_convention() {
        let genome = Genome::new(vec![0.0; DECISION_PARAM_COUNT], 8).unwrap();
        let mech = Mechanism::from_genome(&genome);
        let queue = MessageQueue::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut runtime = mech.new_runtime();
        let out = decide(
            &mech,
            &ctx(Color::Black, &queue, Color::Black),
            &mut rng,
            &mut runtime,
        );
        assert_eq!(out, Color::White);
    }

    /// Weights that saturate the output toward the previous opinion.
    fn copy_own_opinion_genome() -> Genome {
        let mut w = vec![0.0; DECISION_PARAM_COUNT];
        w[3] = 5.0; // hidden 0 reads d_prev
        w[12] = -2.5; // bias centers tanh between the two opinions
        w[15] = 5.0; // hidden 0 drives the output
        Genome::new(w, 8).unwrap()
    }

    #[test]
    fn copy_weights_make_the_ann_an_identity_on_opinions() {
        let mech = Mechanism::from_genome(&copy_own_opinion_genome());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for own in [Color::Black, Color::White] {
            for queue in [
                MessageQueue::new(),
                queue_of(&[Color::White, Color::Black, Color::White]),
            ] {
                for ground in [Color::Black, Color::White] {
                    let mut runtime = mech.new_runtime();
                    let out = decide(&mech, &ctx(own, &queue, ground), &mut rng, &mut runtime);
                    assert_eq!(out, own);
                }
            }
        }
    }

    #[test]
    fn predictor_log_pairs_predictions_with_next_actuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let genome = Genome::random(&mut rng, true, 8);
        let mech = Mechanism::from_genome(&genome);
        let mut runtime = mech.new_runtime();
        assert!(runtime.is_some());

        let queue = queue_of(&[Color::White, Color::Black]);
        let grounds = [Color::Black, Color::White, Color::Black];
        for ground in grounds {
            decide(&mech, &ctx(Color::Black, &queue, ground), &mut rng, &mut runtime);
        }
        let rt = runtime.unwrap();
        // three propagations score two pairs; the last prediction is pending
        assert_eq!(rt.log().len(), 2);
        assert!(rt.pending.is_some());
        let vs = queue.virtual_sensors();
        for (pair, ground) in rt.log().pairs().iter().zip(&grounds[1..]) {
            assert_eq!(pair.actual, [vs.s0, vs.s1, ground.as_sensor_value()]);
        }
    }

    #[test]
    fn parse_spec_recognizes_the_builtins() {
        assert!(matches!(
            MechanismKind::parse_spec("voter"),
            Ok(MechanismKind::Voter)
        ));
        assert!(matches!(
            MechanismKind::parse_spec("majority"),
            Ok(MechanismKind::Majority)
        ));
        assert!(MechanismKind::parse_spec("bayes").is_err());
        assert!(MechanismKind::parse_spec("ann:/nonexistent/genome").is_err());
    }
}
