//! Per-user Elman network for scaled next-day mood.
//!
//! Forward pass: `h_t = sigmoid(x_t W_in + h_{t-1} W_rec + b_h)` with
//! `h_0 = 0`, prediction `sigmoid(h_L . w_out + b_out)`. Training is plain
//! SGD over a seeded shuffle of the user's examples, with exact
//! backpropagation through time of the squared error through every step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SequenceExample;
use crate::ingest::MOOD;
use crate::matrix::{dot, Matrix};
use crate::parallel;
use crate::preprocess::ScalingParams;
use crate::seeds::rng_for;

pub const RNN_MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RnnConfig {
    /// Hidden units in the single recurrent layer.
    pub hidden_dim: usize,
    pub learning_rate: f64,
    /// Full passes over the user's training examples.
    pub epochs: usize,
    /// Days per input window.
    pub seq_len: usize,
    /// Base seed for weight initialization and the epoch shuffles; every
    /// user's training starts from the same seed.
    pub seed: u64,
    pub test_fraction: f64,
    /// Initial weights are uniform on [-init_half_width, +init_half_width].
    pub init_half_width: f64,
}

impl Default for RnnConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 4,
            learning_rate: 0.07,
            epochs: 10_000,
            seq_len: 5,
            seed: 2204,
            test_fraction: 0.3,
            init_half_width: 0.5,
        }
    }
}

impl RnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.epochs == 0 || self.seq_len == 0 {
            return Err(Error::Config(
                "hidden_dim, epochs and seq_len must be positive".into(),
            ));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.init_half_width < 0.0 {
            return Err(Error::Config("init_half_width must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnnModel {
    pub schema_version: u32,
    pub user_id: Option<String>,
    /// Input-to-hidden weights, D x H.
    pub w_in: Matrix,
    /// Hidden-to-hidden recurrence, H x H.
    pub w_rec: Matrix,
    pub b_h: Vec<f64>,
    /// Hidden-to-output weights.
    pub w_out: Vec<f64>,
    pub b_out: f64,
    /// Needed to map predictions back to the mood scale.
    pub scaling: Option<ScalingParams>,
    pub config: RnnConfig,
}

/// Per-epoch mean squared error on the training set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingTrace {
    pub epoch_mse: Vec<f64>,
}

impl TrainingTrace {
    pub fn write_csv<W: std::io::Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "epoch,mse")?;
        for (epoch, mse) in self.epoch_mse.iter().enumerate() {
            writeln!(writer, "{},{}", epoch + 1, mse)?;
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Seeded uniform initialization; biases start at zero. Draw order is
/// w_in row-major, then w_rec row-major, then w_out.
pub fn init_rnn(input_dim: usize, config: &RnnConfig) -> RnnModel {
    let hidden = config.hidden_dim;
    let mut rng = rng_for(config.seed, "rnn-init");
    let half = config.init_half_width;
    let mut draw = move || {
        if half == 0.0 {
            0.0
        } else {
            rng.random_range(-half..=half)
        }
    };
    let mut fill = |rows: usize, cols: usize| {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.data_mut() {
            *v = draw();
        }
        m
    };
    let w_in = fill(input_dim, hidden);
    let w_rec = fill(hidden, hidden);
    let w_out = (0..hidden).map(|_| draw()).collect();
    RnnModel {
        schema_version: RNN_MODEL_SCHEMA_VERSION,
        user_id: None,
        w_in,
        w_rec,
        b_h: vec![0.0; hidden],
        w_out,
        b_out: 0.0,
        scaling: None,
        config: *config,
    }
}

/// Gradients of the squared-error loss with respect to every parameter.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub w_in: Matrix,
    pub w_rec: Matrix,
    pub b_h: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl RnnModel {
    pub fn input_dim(&self) -> usize {
        self.w_in.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_in.cols()
    }

    /// Run the network over an L x D window. Returns the scaled prediction
    /// and the L x H matrix of hidden states.
    pub fn forward(&self, inputs: &Matrix) -> Result<(f64, Matrix)> {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        if inputs.cols() != d || inputs.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected a non-empty Lx{} input window, got {}x{}",
                d,
                inputs.rows(),
                inputs.cols()
            )));
        }
        let steps = inputs.rows();
        let mut hidden = Matrix::zeros(steps, h);
        let mut previous = vec![0.0; h];
        for t in 0..steps {
            let x = inputs.row(t);
            for unit in 0..h {
                let mut z = self.b_h[unit];
                for (i, xv) in x.iter().enumerate() {
                    z += xv * self.w_in.get(i, unit);
                }
                for (i, hv) in previous.iter().enumerate() {
                    z += hv * self.w_rec.get(i, unit);
                }
                hidden.set(t, unit, sigmoid(z));
            }
            previous.copy_from_slice(hidden.row(t));
        }
        let prediction = sigmoid(dot(&previous, &self.w_out) + self.b_out);
        Ok((prediction, hidden))
    }

    /// Loss `0.5 (prediction - target)^2` and its exact gradients via
    /// backpropagation through every time step.
    pub fn loss_and_gradients(&self, inputs: &Matrix, target: f64) -> Result<(f64, Gradients)> {
        let (prediction, hidden) = self.forward(inputs)?;
        let (d, h) = (self.input_dim(), self.hidden_dim());
        let steps = inputs.rows();
        let error = prediction - target;
        let loss = 0.5 * error * error;

        let delta_out = error * prediction * (1.0 - prediction);
        let last = hidden.row(steps - 1);
        let mut grads = Gradients {
            w_in: Matrix::zeros(d, h),
            w_rec: Matrix::zeros(h, h),
            b_h: vec![0.0; h],
            w_out: last.iter().map(|hv| delta_out * hv).collect(),
            b_out: delta_out,
        };

        // dL/dh_t, seeded at the output layer and propagated backwards.
        let mut dh: Vec<f64> = self.w_out.iter().map(|w| delta_out * w).collect();
        let zeros = vec![0.0; h];
        for t in (0..steps).rev() {
            let h_t = hidden.row(t);
            let h_prev = if t > 0 { hidden.row(t - 1) } else { &zeros };
            let x_t = inputs.row(t);
            let delta: Vec<f64> = (0..h).map(|u| dh[u] * h_t[u] * (1.0 - h_t[u])).collect();
            for (i, xv) in x_t.iter().enumerate() {
                for (u, dv) in delta.iter().enumerate() {
                    grads.w_in.add_at(i, u, xv * dv);
                }
            }
            for (i, hv) in h_prev.iter().enumerate() {
                for (u, dv) in delta.iter().enumerate() {
                    grads.w_rec.add_at(i, u, hv * dv);
                }
            }
            for (u, dv) in delta.iter().enumerate() {
                grads.b_h[u] += dv;
            }
            let mut dh_prev = vec![0.0; h];
            for (i, slot) in dh_prev.iter_mut().enumerate() {
                for (u, dv) in delta.iter().enumerate() {
                    *slot += dv * self.w_rec.get(i, u);
                }
            }
            dh = dh_prev;
        }
        Ok((loss, grads))
    }

    fn apply_update(&mut self, grads: &Gradients, rate: f64) {
        for (w, g) in self.w_in.data_mut().iter_mut().zip(grads.w_in.data()) {
            *w -= rate * g;
        }
        for (w, g) in self.w_rec.data_mut().iter_mut().zip(grads.w_rec.data()) {
            *w -= rate * g;
        }
        for (b, g) in self.b_h.iter_mut().zip(&grads.b_h) {
            *b -= rate * g;
        }
        for (w, g) in self.w_out.iter_mut().zip(&grads.w_out) {
            *w -= rate * g;
        }
        self.b_out -= rate * grads.b_out;
    }

    /// Scaled forward prediction mapped back to the original mood scale.
    pub fn predict_mood(&self, inputs: &Matrix) -> Result<f64> {
        let scaling = self.scaling.as_ref().ok_or(Error::ScalingMissing)?;
        let (prediction, _) = self.forward(inputs)?;
        scaling.invert(MOOD, prediction)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.schema_version != RNN_MODEL_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported rnn model schema_version {}",
                model.schema_version
            )));
        }
        Ok(model)
    }
}

/// Train one user's network with SGD over seeded epoch shuffles.
/// Deterministic given the config seed; a non-finite loss aborts with the
/// epoch index rather than clipping.
pub fn train_rnn(
    examples: &[SequenceExample],
    config: &RnnConfig,
) -> Result<(RnnModel, TrainingTrace)> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("no sequence examples to train on"));
    }
    let user = &examples[0].user_id;
    let d = examples[0].inputs.cols();
    for example in examples {
        if example.user_id != *user {
            return Err(Error::Config(
                "train_rnn takes examples of a single user".into(),
            ));
        }
        if example.inputs.cols() != d {
            return Err(Error::DimensionMismatch(
                "inconsistent input dimensions across examples".into(),
            ));
        }
    }

    let mut model = init_rnn(d, config);
    model.user_id = Some(user.clone());
    let mut shuffle_rng = rng_for(config.seed, "rnn-shuffle");
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut trace = TrainingTrace {
        epoch_mse: Vec::with_capacity(config.epochs),
    };

    for epoch in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);
        let mut sum_sq = 0.0;
        for &idx in &order {
            let example = &examples[idx];
            let (loss, grads) = model.loss_and_gradients(&example.inputs, example.target)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            sum_sq += 2.0 * loss;
            model.apply_update(&grads, config.learning_rate);
        }
        trace.epoch_mse.push(sum_sq / examples.len() as f64);
    }
    Ok((model, trace))
}

/// One user's trained network with its training trace.
#[derive(Clone, Debug)]
pub struct UserRnn {
    pub user_id: String,
    pub model: RnnModel,
    pub trace: TrainingTrace,
}

/// Train every user's network; units are independent and run in parallel,
/// each seeded identically from the config, so batch results equal
/// one-at-a-time results.
pub fn train_all_users(
    examples_by_user: &std::collections::BTreeMap<String, Vec<SequenceExample>>,
    config: &RnnConfig,
    scaling: &ScalingParams,
) -> Result<Vec<UserRnn>> {
    let units: Vec<(&String, &Vec<SequenceExample>)> = examples_by_user.iter().collect();
    parallel::try_map(units, |(user, examples)| {
        let (mut model, trace) = train_rnn(examples, config)?;
        model.scaling = Some(scaling.clone());
        Ok(UserRnn {
            user_id: user.clone(),
            model,
            trace,
        })
    })
}
