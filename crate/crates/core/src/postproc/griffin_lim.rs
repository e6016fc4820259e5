//! Mel inversion by nonnegative least squares followed by Griffin-Lim phase
//! reconstruction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::features::{
    istft, stft, MelFilterbank, MelSpectrogram, Padding, Spectrogram, StftConfig, LOG_FLOOR, SPECTRUM_POWER,
};
use crate::ingest::Waveform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GriffinLimConfig {
    pub iterations: usize,
    pub seed: u64,
    pub fft_size: usize,
    /// Projected-gradient steps of the per-frame mel inversion.
    pub nnls_iterations: usize,
}

impl Default for GriffinLimConfig {
    fn default() -> Self {
        Self {
            iterations: 60,
            seed: 0,
            fft_size: 1024,
            nnls_iterations: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GriffinLimOutput {
    pub wav: Waveform,
    /// Spectral convergence `|| |STFT(x_i)| - S || / ||S||` after each iteration.
    pub residuals: Vec<f64>,
}

/// Filterbank rows stored by their nonzero span.
struct SparseRows {
    rows: Vec<(usize, Vec<f64>)>,
    n_bins: usize,
    lipschitz: f64,
}

impl SparseRows {
    fn new(fb: &MelFilterbank) -> Self {
        let w = fb.weights();
        let rows: Vec<(usize, Vec<f64>)> = w
            .iter_rows()
            .map(|r| {
                let first = r.iter().position(|&v| v > 0.0).unwrap_or(0);
                let last = r.iter().rposition(|&v| v > 0.0).unwrap_or(0);
                (first, r[first..=last].to_vec())
            })
            .collect();
        let mut s = Self {
            rows,
            n_bins: w.cols(),
            lipschitz: 0.0,
        };
        // largest eigenvalue of W^T W by power iteration
        let mut v = vec![1.0; s.n_bins];
        let mut lambda = 0.0;
        for _ in 0..100 {
            let u = s.adjoint(&s.forward(&v));
            lambda = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if lambda == 0.0 {
                break;
            }
            v = u.iter().map(|x| x / lambda).collect();
        }
        s.lipschitz = lambda * 1.01;
        s
    }

    fn forward(&self, s: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(start, w)| w.iter().zip(&s[*start..]).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn adjoint(&self, e: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_bins];
        for ((start, w), ev) in self.rows.iter().zip(e) {
            for (o, a) in out[*start..].iter_mut().zip(w) {
                *o += a * ev;
            }
        }
        out
    }

    /// Projected gradient for `min ||W s - e||^2, s >= 0`.
    fn nnls(&self, e: &[f64], iterations: usize) -> Vec<f64> {
        let mut s = vec![0.0; self.n_bins];
        if e.iter().all(|&v| v == 0.0) || self.lipschitz == 0.0 {
            return s;
        }
        for _ in 0..iterations {
            let r: Vec<f64> = self.forward(&s).iter().zip(e).map(|(a, b)| a - b).collect();
            let g = self.adjoint(&r);
            for (x, gk) in s.iter_mut().zip(&g) {
                *x = (*x - gk / self.lipschitz).max(0.0);
            }
        }
        s
    }
}

/// Linear STFT magnitudes recovered from a log-mel spectrogram. Cells at
/// the log floor are treated as empty.
pub fn mel_to_linear(mel: &MelSpectrogram, fb: &MelFilterbank, iterations: usize) -> Result<Vec<Vec<f64>>> {
    if mel.n_mels() != fb.n_mels() {
        return Err(Error::Invalid(format!(
            "mel has {} bands, filterbank {}",
            mel.n_mels(),
            fb.n_mels()
        )));
    }
    let sparse = SparseRows::new(fb);
    let floor = LOG_FLOOR.ln() + 1e-9;
    Ok(mel
        .values
        .iter_rows()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|row| {
            let e: Vec<f64> = row.iter().map(|&v| if v <= floor { 0.0 } else { v.exp() }).collect();
            sparse
                .nnls(&e, iterations)
                .into_iter()
                .map(|v| v.powf(1.0 / SPECTRUM_POWER))
                .collect()
        })
        .collect())
}

fn weighted_norm(frames: &Spectrogram, f: impl Fn(usize, usize) -> f64) -> f64 {
    // one-sided bins weighted to match the full-spectrum norm
    let nb = frames.n_bins;
    let mut acc = 0.0;
    for t in 0..frames.n_frames {
        for k in 0..nb {
            let w = if k == 0 || k == nb - 1 { 1.0 } else { 2.0 };
            acc += w * f(t, k).powi(2);
        }
    }
    acc.sqrt()
}

/// Griffin-Lim reconstruction of a log-mel spectrogram at its own hop.
pub fn griffin_lim(mel: &MelSpectrogram, cfg: &GriffinLimConfig) -> Result<GriffinLimOutput> {
    if cfg.iterations < 1 {
        return Err(Error::Invalid("Griffin-Lim needs at least one iteration".into()));
    }
    if mel.n_frames() == 0 {
        return Err(Error::EmptySignal);
    }
    let stft_cfg = StftConfig {
        fft_size: cfg.fft_size,
        win_size: cfg.fft_size,
        hop: mel.hop as usize,
        padding: Padding::Zero,
    };
    stft_cfg.validate()?;
    let fb = MelFilterbank::new(
        crate::features::MEL_FMIN,
        crate::features::MEL_FMAX,
        mel.n_mels(),
        cfg.fft_size,
        mel.sample_rate,
    )?;
    let target = mel_to_linear(mel, &fb, cfg.nnls_iterations)?;
    let n_frames = mel.n_frames();
    let n_bins = stft_cfg.n_bins();
    // `n_frames` centered frames cover this many samples
    let n_samples = (n_frames - 1) * stft_cfg.hop + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut spec = Spectrogram {
        n_frames,
        n_bins,
        data: target
            .iter()
            .flat_map(|row| row.to_vec())
            .map(|m| Complex64::from_polar(m, rng.random_range(0.0..std::f64::consts::TAU)))
            .collect(),
    };
    let target_norm = weighted_norm(&spec, |t, k| target[t][k]);
    let mut residuals = Vec::with_capacity(cfg.iterations);
    let mut x = Vec::new();
    for _ in 0..cfg.iterations {
        x = istft(&spec, &stft_cfg, n_samples);
        let rebuilt = stft(&x, &stft_cfg)?;
        let r = weighted_norm(&rebuilt, |t, k| rebuilt.frame(t)[k].norm() - target[t][k]);
        residuals.push(if target_norm > 0.0 { r / target_norm } else { 0.0 });
        for (i, c) in rebuilt.data.iter().enumerate() {
            let m = target[i / n_bins][i % n_bins];
            let norm = c.norm();
            spec.data[i] = if norm > 0.0 {
                c * (m / norm)
            } else {
                Complex64::new(m, 0.0)
            };
        }
    }
    Ok(GriffinLimOutput {
        wav: Waveform::new(x, mel.sample_rate)?,
        residuals,
    })
}
