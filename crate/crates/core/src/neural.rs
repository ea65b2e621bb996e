//! Fixed-topology decision and prediction networks with a flat genome codec.
//!
//! The decision network is a 4-3-1 feed-forward net (tanh hidden, logistic
//! output). The prediction network is a 4-H-3 net whose hidden units carry
//! one self-recurrent connection each; its state persists across
//! propagations within one evaluation.
//!
//! Genome layout (all weights clamped to [-5, 5]):
//!
//! ```text
//! [0..12)        decision input->hidden, hidden-major (w[h][i] at 4h + i)
//! [12..15)       decision hidden biases
//! [15..18)       decision hidden->output weights
//! [18]           decision output bias
//! [19..19+4H)    prediction input->hidden, hidden-major
//! [.. +H)        prediction hidden self-recurrent weights
//! [.. +H)        prediction hidden biases
//! [.. +3H)       prediction hidden->output, output-major (w[r][h] at Hr + h)
//! [.. +3)        prediction output biases
//! ```
//!
//! The prediction segment (9H + 3 weights) is absent for genomes evolved
//! without a predictor.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Parameter count of the decision network.
pub const DECISION_PARAM_COUNT: usize = 19;
/// Number of predicted sensors (s0, s1, s2).
pub const PREDICTED_SENSOR_COUNT: usize = 3;
/// Weights are clamped into [-WEIGHT_BOUND, WEIGHT_BOUND].
pub const WEIGHT_BOUND: f64 = 5.0;
/// Default prediction-network hidden size.
pub const DEFAULT_PREDICTOR_HIDDEN: usize = 8;

const DECISION_INPUTS: usize = 4;
const DECISION_HIDDEN: usize = 3;

/// Parameter count of a prediction network with `hidden` units.
pub fn predictor_param_count(hidden: usize) -> usize {
    9 * hidden + PREDICTED_SENSOR_COUNT
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Feed-forward decision network (4 inputs, 3 hidden, 1 output).
#[derive(Clone, Debug)]
pub struct DecisionNet {
    w_ih: [[f64; DECISION_INPUTS]; DECISION_HIDDEN],
    b_h: [f64; DECISION_HIDDEN],
    w_ho: [f64; DECISION_HIDDEN],
    b_o: f64,
}

impl DecisionNet {
    /// Output in (0, 1) for inputs (s0, s1, s2, previous opinion).
    pub fn forward(&self, inputs: [f64; 4]) -> f64 {
        let mut acc = self.b_o;
        for h in 0..DECISION_HIDDEN {
            let mut a = self.b_h[h];
            for (w, x) in self.w_ih[h].iter().zip(inputs.iter()) {
                a += w * x;
            }
            acc += self.w_ho[h] * a.tanh();
        }
        logistic(acc)
    }

    /// Analytic gradient of the output with respect to each input.
    pub fn input_gradient(&self, inputs: [f64; 4]) -> [f64; 4] {
        let mut hidden = [0.0; DECISION_HIDDEN];
        let mut acc = self.b_o;
        for h in 0..DECISION_HIDDEN {
            let mut a = self.b_h[h];
            for (w, x) in self.w_ih[h].iter().zip(inputs.iter()) {
                a += w * x;
            }
            hidden[h] = a.tanh();
            acc += self.w_ho[h] * hidden[h];
        }
        let out = logistic(acc);
        let d_out = out * (1.0 - out);
        let mut grad = [0.0; 4];
        for h in 0..DECISION_HIDDEN {
            let d_hidden = self.w_ho[h] * (1.0 - hidden[h] * hidden[h]);
            for (g, w) in grad.iter_mut().zip(self.w_ih[h].iter()) {
                *g += d_out * d_hidden * w;
            }
        }
        grad
    }
}

/// Hidden state of a prediction network; zeros at the start of an evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionState {
    h: Vec<f64>,
}

/// Recurrent prediction network (4 inputs, H self-recurrent hidden, 3 outputs).
#[derive(Clone, Debug)]
pub struct PredictionNet {
    w_in: Vec<[f64; 4]>,
    w_self: Vec<f64>,
    b_h: Vec<f64>,
    w_out: Vec<Vec<f64>>,
    b_out: [f64; PREDICTED_SENSOR_COUNT],
}

impl PredictionNet {
    pub fn hidden_units(&self) -> usize {
        self.w_self.len()
    }

    pub fn initial_state(&self) -> PredictionState {
        PredictionState {
            h: vec![0.0; self.hidden_units()],
        }
    }

    /// One propagation: updates the recurrent state and returns the three
    /// sensor predictions, each in (0, 1).
    pub fn forward(&self, inputs: [f64; 4], state: &mut PredictionState) -> [f64; 3] {
        debug_assert_eq!(state.h.len(), self.hidden_units());
        for (j, h) in state.h.iter_mut().enumerate() {
            let mut a = self.b_h[j] + self.w_self[j] * *h;
            for (w, x) in self.w_in[j].iter().zip(inputs.iter()) {
                a += w * x;
            }
            *h = a.tanh();
        }
        let mut out = [0.0; PREDICTED_SENSOR_COUNT];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = self.b_out[r];
            for (w, h) in self.w_out[r].iter().zip(state.h.iter()) {
                acc += w * h;
            }
            *o = logistic(acc);
        }
        out
    }
}

/// Flat weight vector decoding to a decision net and an optional
/// prediction net.
#[derive(Clone, Debug, PartialEq)]
pub struct Genome {
    weights: Vec<f64>,
    hidden_units: usize,
}

impl Genome {
    /// Wraps a weight vector, validating length and weight bounds.
    pub fn new(weights: Vec<f64>, hidden_units: usize) -> Result<Self> {
        let with_predictor = DECISION_PARAM_COUNT + predictor_param_count(hidden_units);
        if weights.len() != DECISION_PARAM_COUNT && weights.len() != with_predictor {
            return Err(Error::Config(format!(
                "genome has {} weights, expected {DECISION_PARAM_COUNT} (decision only) \
                 or {with_predictor} (decision + predictor with H={hidden_units})",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || w.abs() > WEIGHT_BOUND) {
            return Err(Error::Config(format!(
                "genome weight {w} outside [-{WEIGHT_BOUND}, {WEIGHT_BOUND}]"
            )));
        }
        Ok(Genome {
            weights,
            hidden_units,
        })
    }

    /// Random genome with weights i.i.d. uniform on [-1, 1].
    pub fn random(rng: &mut impl Rng, with_predictor: bool, hidden_units: usize) -> Self {
        let len = if with_predictor {
            DECISION_PARAM_COUNT + predictor_param_count(hidden_units)
        } else {
            DECISION_PARAM_COUNT
        };
        let weights = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Genome {
            weights,
            hidden_units,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden_units
    }

    pub fn has_predictor(&self) -> bool {
        self.weights.len() > DECISION_PARAM_COUNT
    }

    /// Slices the flat vector into networks per the documented layout.
    pub fn decode(&self) -> (DecisionNet, Option<PredictionNet>) {
        let w = &self.weights;
        let mut w_ih = [[0.0; DECISION_INPUTS]; DECISION_HIDDEN];
        for h in 0..DECISION_HIDDEN {
            w_ih[h].copy_from_slice(&w[DECISION_INPUTS * h..DECISION_INPUTS * (h + 1)]);
        }
        let decision = DecisionNet {
            w_ih,
            b_h: [w[12], w[13], w[14]],
            w_ho: [w[15], w[16], w[17]],
            b_o: w[18],
        };
        if !self.has_predictor() {
            return (decision, None);
        }
        let hidden = self.hidden_units;
        let mut at = DECISION_PARAM_COUNT;
        let mut w_in = Vec::with_capacity(hidden);
        for _ in 0..hidden {
            w_in.push([w[at], w[at + 1], w[at + 2], w[at + 3]]);
            at += 4;
        }
        let w_self = w[at..at + hidden].to_vec();
        at += hidden;
        let b_h = w[at..at + hidden].to_vec();
        at += hidden;
        let mut w_out = Vec::with_capacity(PREDICTED_SENSOR_COUNT);
        for _ in 0..PREDICTED_SENSOR_COUNT {
            w_out.push(w[at..at + hidden].to_vec());
            at += hidden;
        }
        let b_out = [w[at], w[at + 1], w[at + 2]];
        (
            decision,
            Some(PredictionNet {
                w_in,
                w_self,
                b_h,
                w_out,
                b_out,
            }),
        )
    }

    /// Per-weight mutation: with probability `rate` a weight is perturbed by
    /// zero-mean Gaussian noise with standard deviation `sigma`, then clamped.
    pub fn mutated(&self, rate: f64, sigma: f64, rng: &mut impl Rng) -> Genome {
        let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
        let weights = self
            .weights
            .iter()
            .map(|&w| {
                if rng.random::<f64>() < rate {
                    (w + noise.sample(rng)).clamp(-WEIGHT_BOUND, WEIGHT_BOUND)
                } else {
                    w
                }
            })
            .collect();
        Genome {
            weights,
            hidden_units: self.hidden_units,
        }
    }

    /// Text form: a single header line then one weight per line with full
    /// round-trip precision.
    pub fn to_text(&self) -> String {
        let predictor = self.len() - DECISION_PARAM_COUNT;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "evoperc-genome v1 decision={DECISION_PARAM_COUNT} predictor={predictor} H={}",
            self.hidden_units
        );
        for w in &self.weights {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Config("empty genome file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "evoperc-genome" || fields[1] != "v1" {
            return Err(Error::Config(format!(
                "bad genome header {header:?}, expected \
                 \"evoperc-genome v1 decision=19 predictor=<0|9H+3> H=<H>\""
            )));
        }
        let field_value = |field: &str, key: &str| -> Result<usize> {
            field
                .strip_prefix(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config(format!("bad genome header field {field:?}")))
        };
        let decision = field_value(fields[2], "decision=")?;
        let predictor = field_value(fields[3], "predictor=")?;
        let hidden = field_value(fields[4], "H=")?;
        if decision != DECISION_PARAM_COUNT {
            return Err(Error::Config(format!(
                "unsupported decision parameter count {decision}, expected {DECISION_PARAM_COUNT}"
            )));
        }
        if predictor != 0 && predictor != predictor_param_count(hidden) {
            return Err(Error::Config(format!(
                "predictor parameter count {predictor} does not match H={hidden} \
                 (expected 0 or {})",
                predictor_param_count(hidden)
            )));
        }
        let mut weights = Vec::with_capacity(decision + predictor);
        for line in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let w: f64 = trimmed
                .parse()
                .map_err(|_| Error::Config(format!("bad genome weight line {trimmed:?}")))?;
            weights.push(w);
        }
        if weights.len() != decision + predictor {
            return Err(Error::Config(format!(
                "genome file has {} weights, header declares {}",
                weights.len(),
                decision + predictor
            )));
        }
        Genome::new(weights, hidden)
    }

    pub fn to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Genome::from_reader(std::io::BufReader::new(file))
    }
}

/// One scored prediction: the triple predicted at propagation i paired with
/// the actual sensor values observed at propagation i + 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictionPair {
    pub prediction: [f64; PREDICTED_SENSOR_COUNT],
    pub actual: [f64; PREDICTED_SENSOR_COUNT],
}

/// Per-robot record of scored prediction/actual pairs. The final prediction
/// of a run has no next observation and is never recorded here.
#[derive(Clone, Debug, Default)]
pub struct PredictionLog {
    pairs: Vec<PredictionPair>,
}

impl PredictionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, prediction: [f64; 3], actual: [f64; 3]) {
        self.pairs.push(PredictionPair { prediction, actual });
    }

    /// Number of scored propagations (i_n in the surprise fitness).
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[PredictionPair] {
        &self.pairs
    }
}
