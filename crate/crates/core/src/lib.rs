//! Ultrasound tongue imaging to speech.
//!
//! The crate covers the full desk-scale pipeline: reading ultrasound frames
//! and audio, extracting mel-spectrogram and continuous-vocoder targets,
//! training a convolutional regressor from 64x128 ultrasound images to
//! acoustic features, turning predictions back into audio, and scoring the
//! result with mel-cepstral distortion and rank-sum tests.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positives
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod binio;
pub mod cnn;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
mod interp;
mod linalg;
pub mod matrix;
pub mod postproc;
pub mod toy;
pub mod vocoder;

pub use error::{Error, Result};
pub use matrix::Matrix;
