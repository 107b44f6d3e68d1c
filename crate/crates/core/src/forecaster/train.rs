use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{predict_all, representation_rmse, ForecastModel, ModelConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::transform::SlidingWindow;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Stream offset so shuffling draws differ from the initialization draws.
const SHUFFLE_STREAM: u64 = 0x5eed_5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingResult {
    /// Mean per-window training MSE of each epoch.
    pub epoch_losses: Vec<f64>,
    pub train_rmse: f64,
    pub val_rmse: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

struct Adam<T> {
    lr: T,
    step: i32,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> Adam<T> {
    fn new(lr: f64, len: usize) -> Self {
        Self { lr: T::lit(lr), step: 0, m: vec![T::zero(); len], v: vec![T::zero(); len] }
    }

    fn update(&mut self, params: &mut [T], grads: &[T]) {
        self.step += 1;
        let (b1, b2, eps) = (T::lit(BETA1), T::lit(BETA2), T::lit(ADAM_EPS));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

impl<T: Scalar> ForecastModel<T> {
    /// Per-window MSE and its parameter gradient.
    pub(crate) fn loss_and_gradient(&self, window: &SlidingWindow<T>) -> Result<(T, Vec<T>)> {
        let input = self.check_input(window.input.view())?;
        let input = input.as_slice().expect("standard layout");
        if window.target.len() != self.horizon() {
            return Err(Error::shape(self.horizon(), window.target.len()));
        }
        let trace = self.run(input);
        let n = T::from_count(self.horizon());
        let mut loss = T::zero();
        let d_output: Vec<T> = trace
            .output
            .iter()
            .zip(&window.target)
            .map(|(&y, &t)| {
                loss += (y - t) * (y - t);
                T::lit(2.0) * (y - t) / n
            })
            .collect();
        let mut grads = vec![T::zero(); self.parameter_count()];
        self.backward(input, &trace, &d_output, &mut grads);
        Ok((loss / n, grads))
    }
}

/// Mini-batch Adam on mean-squared error.
///
/// Batch order is reshuffled every epoch from a generator seeded by
/// `config.seed`. Per-window gradients may be computed in parallel but are
/// summed in batch order, so results are bit-reproducible.
pub fn train<T: Scalar>(
    mut model: ForecastModel<T>,
    train_windows: &[SlidingWindow<T>],
    val_windows: &[SlidingWindow<T>],
    config: &ModelConfig,
) -> Result<(ForecastModel<T>, TrainingResult)> {
    let (w, _) = model.input_shape();
    config.validate(w)?;
    if train_windows.is_empty() || val_windows.is_empty() {
        return Err(Error::TooFewWindows(train_windows.len() + val_windows.len()));
    }
    let started = Instant::now();
    let mut adam = Adam::new(config.learning_rate, model.parameter_count());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_windows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = T::zero();
        for batch in order.chunks(config.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| model.loss_and_gradient(&train_windows[i]))
                .collect::<Result<Vec<_>>>()?;
            let scale = T::one() / T::from_count(batch.len());
            let mut grads = vec![T::zero(); model.parameter_count()];
            for (loss, g) in &results {
                epoch_loss += *loss;
                for (acc, &gi) in grads.iter_mut().zip(g) {
                    *acc += gi * scale;
                }
            }
            if !epoch_loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergedLoss { epoch });
            }
            adam.update(model.parameters_mut(), &grads);
        }
        let mean_loss = epoch_loss / T::from_count(train_windows.len());
        log::debug!("epoch {epoch}: loss {mean_loss}");
        epoch_losses.push(mean_loss.as_f64());
    }

    let rmse_of = |windows: &[SlidingWindow<T>]| -> Result<f64> {
        let predictions = predict_all(&model, windows).map_err(|e| match e {
            Error::NonFiniteActivation => Error::DivergedLoss { epoch: config.epochs },
            e => e,
        })?;
        Ok(representation_rmse(&predictions, windows)?.as_f64())
    };
    let result = TrainingResult {
        epoch_losses,
        train_rmse: rmse_of(train_windows)?,
        val_rmse: rmse_of(val_windows)?,
        wall_time: started.elapsed(),
    };
    Ok((model, result))
}
