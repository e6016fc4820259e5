//! Convolutional regressor from ultrasound images to acoustic feature
//! vectors: forward and backward passes, SGD with early stopping, and the
//! model file.

mod io;
mod layers;
mod model;
mod scalar;
mod train;

use rayon::prelude::*;

pub use io::{decode_model, encode_model, load_model, save_model};
pub use layers::{swish, swish_grad};
pub use model::{mse, Cnn, CnnArchitecture, ForwardCache, Gradients, Layer};
pub use scalar::Scalar;
pub use train::{evaluate, train, train_with, Dataset, EarlyStopping, EpochRecord, TrainConfig, TrainHistory};

use crate::error::{Error, Result};
use crate::ingest::{resize_unclamped, ResizedFrame, RESIZED_COLS, RESIZED_ROWS};
use crate::matrix::Matrix;

/// The model type that is trained, saved and loaded.
pub type CnnModel = Cnn<f32>;

/// Runs the trained model on every frame (in parallel) and maps the outputs
/// back to feature units with the model's target normalizer.
pub fn predict_sequence<F: AsRef<[f64]> + Sync>(model: &CnnModel, frames: &[F]) -> Result<Matrix> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    let d = model.output_dim();
    let rows: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|f| {
            let x: Vec<f32> = f.as_ref().iter().map(|&v| v as f32).collect();
            let mut y: Vec<f64> = model.forward(&x)?.into_iter().map(f64::from).collect();
            if let Some(n) = &model.target_norm {
                n.invert_row(&mut y);
            }
            Ok(y)
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_vec(rows.len(), d, rows.concat()))
}

/// A 64x128 frame at the network's input resolution (bicubic, clamped to
/// [0, 1]); unchanged when the network takes 64x128 images.
pub fn fit_input(frame: &ResizedFrame, arch: &CnnArchitecture) -> Result<Vec<f64>> {
    if (arch.input_rows, arch.input_cols) == (RESIZED_ROWS, RESIZED_COLS) {
        return Ok(frame.pixels.clone());
    }
    let v = resize_unclamped(
        &frame.pixels,
        RESIZED_ROWS,
        RESIZED_COLS,
        arch.input_rows,
        arch.input_cols,
    )?;
    Ok(v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
}
