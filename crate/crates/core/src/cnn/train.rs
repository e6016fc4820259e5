use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::{mse, Cnn};
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 32,
            max_epochs: 100,
            patience: 3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Invalid(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.patience < 1 || self.batch_size < 1 || self.max_epochs < 1 {
            return Err(Error::Invalid(
                "patience, batch size and epoch count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Paired network inputs and targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset<T> {
    pub inputs: Vec<Vec<T>>,
    pub targets: Vec<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Vec<Vec<T>>, targets: Vec<Vec<T>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch(inputs.len(), targets.len()));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn check(&self, model: &Cnn<T>, what: &str) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Invalid(format!("{what} set is empty")));
        }
        let (n_in, n_out) = (model.architecture().input_len(), model.output_dim());
        if let Some(i) = self.inputs.iter().position(|x| x.len() != n_in) {
            return Err(Error::InvalidInput(format!(
                "{what} sample {i}: {} inputs, network takes {n_in}",
                self.inputs[i].len()
            )));
        }
        if let Some(i) = self.targets.iter().position(|t| t.len() != n_out) {
            return Err(Error::InvalidInput(format!(
                "{what} sample {i}: {} targets, network outputs {n_out}",
                self.targets[i].len()
            )));
        }
        Ok(())
    }
}

/// Eval-mode MSE averaged over samples, computed in parallel.
pub fn evaluate<T: Scalar>(model: &Cnn<T>, data: &Dataset<T>) -> Result<f64> {
    let losses: Vec<f64> = data
        .inputs
        .par_iter()
        .zip(&data.targets)
        .map(|(x, t)| model.forward(x).map(|y| mse(&y, t)))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
}

/// Patience rule on a stream of validation losses: a loss counts as an
/// improvement only if strictly below the best so far.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    /// 1-based epoch of the best loss.
    pub best_epoch: usize,
    pub best_loss: f64,
    epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_epoch: 0,
            best_loss: f64::INFINITY,
            epochs: 0,
        }
    }

    /// Records the next epoch's loss; returns true if it is a new best.
    pub fn observe(&mut self, loss: f64) -> bool {
        self.epochs += 1;
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = self.epochs;
            true
        } else {
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.epochs - self.best_epoch >= self.patience
    }

    /// Epoch at which the rule stops on `losses` and the epoch it restores.
    pub fn replay(patience: usize, losses: &[f64]) -> (usize, usize) {
        let mut es = Self::new(patience);
        for &l in losses {
            es.observe(l);
            if es.should_stop() {
                break;
            }
        }
        (es.epochs, es.best_epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Train-mode MSE averaged over the epoch's samples.
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights the model holds after training.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    /// `epoch\ttrain_mse\tval_mse` lines.
    pub fn to_log(&self) -> String {
        let mut s = String::new();
        for e in &self.epochs {
            writeln!(s, "{}\t{:.8}\t{:.8}", e.epoch, e.train_mse, e.val_mse).unwrap();
        }
        s
    }

    pub fn save_log(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_log()).map_err(|e| Error::io(path, e))
    }
}

/// One SGD pass over `data` in a seeded random order. Returns the mean
/// train-mode loss.
fn run_epoch<T: Scalar>(model: &mut Cnn<T>, data: &Dataset<T>, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for batch in order.chunks(cfg.batch_size) {
        // one dropout stream per sample keeps results independent of threads
        let seeds: Vec<u64> = batch.iter().map(|_| rng.random()).collect();
        let per: Vec<(f64, _)> = batch
            .par_iter()
            .zip(&seeds)
            .map(|(&i, &s)| {
                let mut r = ChaCha8Rng::seed_from_u64(s);
                let cache = model.forward_train(&data.inputs[i], &mut r)?;
                let loss = mse(&cache.output, &data.targets[i]);
                Ok((loss, model.backward_sample(&cache, &data.targets[i])?))
            })
            .collect::<Result<_>>()?;
        let (losses, grads): (Vec<f64>, Vec<_>) = per.into_iter().unzip();
        let batch_loss: f64 = losses.iter().sum();
        if !batch_loss.is_finite() {
            return Ok(f64::NAN);
        }
        total += batch_loss;
        let g = model.reduce(&grads);
        model.apply_gradients(&g, T::of(cfg.learning_rate / batch.len() as f64));
    }
    Ok(total / data.len() as f64)
}

/// SGD on mean squared error with early stopping on validation loss.
/// Weights of the best validation epoch are restored at the end.
pub fn train<T: Scalar>(
    model: &mut Cnn<T>,
    data: &Dataset<T>,
    val: &Dataset<T>,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    val.check(model, "validation")?;
    train_with(model, data, cfg, |m, _| evaluate(m, val), |_, _| {})
}

/// [`train`] with the validation loss supplied by `validate(model, epoch)`
/// and `on_epoch` called after each epoch with the record and the current
/// weights.
pub fn train_with<T, V, E>(
    model: &mut Cnn<T>,
    data: &Dataset<T>,
    cfg: &TrainConfig,
    mut validate: V,
    mut on_epoch: E,
) -> Result<TrainHistory>
where
    T: Scalar,
    V: FnMut(&Cnn<T>, usize) -> Result<f64>,
    E: FnMut(&EpochRecord, &Cnn<T>),
{
    cfg.validate()?;
    data.check(model, "training")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stop = EarlyStopping::new(cfg.patience);
    let mut best = model.clone();
    let mut history = TrainHistory::default();
    for epoch in 1..=cfg.max_epochs {
        let train_mse = run_epoch(model, data, cfg, &mut rng)?;
        if !train_mse.is_finite() || !model.all_finite() {
            return Err(Error::Diverged { epoch });
        }
        let val_mse = validate(model, epoch)?;
        if !val_mse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let rec = EpochRecord {
            epoch,
            train_mse,
            val_mse,
        };
        log::info!("epoch {epoch}: train {train_mse:.6} val {val_mse:.6}");
        history.epochs.push(rec);
        on_epoch(&rec, model);
        if stop.observe(val_mse) {
            best.load_weights(model);
        }
        if stop.should_stop() {
            history.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    model.load_weights(&best);
    model.mark_trained();
    history.best_epoch = stop.best_epoch;
    Ok(history)
}
