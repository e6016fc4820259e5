use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::ingest::HOP;

/// How the signal is extended by `fft_size / 2` samples on each side so that
/// frame `t` is centered on sample `t * hop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Reflect,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub fft_size: usize,
    pub win_size: usize,
    pub hop: usize,
    pub padding: Padding,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            win_size: 1024,
            hop: HOP,
            padding: Padding::Reflect,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.win_size == 0 || self.win_size > self.fft_size || self.hop == 0 || !self.fft_size.is_multiple_of(2) {
            return Err(Error::Invalid(format!("bad STFT configuration {self:?}")));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        n_samples / self.hop + 1
    }

    /// Periodic Hann window of `win_size`, zero-padded to `fft_size` and centered.
    pub fn window(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.fft_size];
        let off = (self.fft_size - self.win_size) / 2;
        for (i, v) in hann(self.win_size).into_iter().enumerate() {
            w[off + i] = v;
        }
        w
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Index into `x` for a position that may lie outside `[0, n)`, mirroring
/// about the end samples without repeating them.
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut k = i.rem_euclid(period);
    if k >= n as isize {
        k = period - k;
    }
    k as usize
}

/// Complex one-sided short-time spectrum, `frames x bins`.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub n_frames: usize,
    pub n_bins: usize,
    pub data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm()).collect()
    }
}

pub(crate) struct FrameAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    cfg: StftConfig,
}

impl FrameAnalyzer {
    pub fn new(cfg: StftConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Self {
            fft,
            window: cfg.window(),
            cfg,
        }
    }

    /// Windowed samples of frame `t` (centered on `t * hop`).
    pub fn windowed(&self, x: &[f64], t: usize) -> Vec<f64> {
        let half = (self.cfg.fft_size / 2) as isize;
        let start = (t * self.cfg.hop) as isize - half;
        let n = x.len();
        (0..self.cfg.fft_size)
            .map(|k| {
                let i = start + k as isize;
                let v = if i >= 0 && (i as usize) < n {
                    x[i as usize]
                } else {
                    match self.cfg.padding {
                        Padding::Reflect => x[reflect_index(i, n)],
                        Padding::Zero => 0.0,
                    }
                };
                v * self.window[k]
            })
            .collect()
    }

    pub fn spectrum(&self, frame: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = frame.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        buf.truncate(self.cfg.n_bins());
        buf
    }
}

/// Centered short-time Fourier transform with a Hann window.
pub fn stft(x: &[f64], cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n_frames = cfg.n_frames(x.len());
    let an = FrameAnalyzer::new(*cfg);
    let frames: Vec<Vec<Complex64>> = (0..n_frames)
        .into_par_iter()
        .map(|t| an.spectrum(&an.windowed(x, t)))
        .collect();
    Ok(Spectrogram {
        n_frames,
        n_bins: cfg.n_bins(),
        data: frames.concat(),
    })
}

/// Least-squares inverse of a zero-padded [`stft`]: weighted overlap-add
/// with the analysis window, normalized by the summed squared window.
/// Returns `n_samples` samples.
pub fn istft(spec: &Spectrogram, cfg: &StftConfig, n_samples: usize) -> Vec<f64> {
    let n = cfg.fft_size;
    let half = n / 2;
    let window = cfg.window();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let frames: Vec<Vec<f64>> = (0..spec.n_frames)
        .into_par_iter()
        .map(|t| {
            let one = spec.frame(t);
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            buf[..one.len()].copy_from_slice(one);
            for k in 1..half {
                buf[n - k] = one[k].conj();
            }
            buf[0].im = 0.0;
            buf[half].im = 0.0;
            ifft.process(&mut buf);
            buf.iter().zip(&window).map(|(c, w)| c.re / n as f64 * w).collect()
        })
        .collect();

    let padded_len = n_samples + n;
    let mut out = vec![0.0; padded_len];
    let mut norm = vec![0.0; padded_len];
    for (t, f) in frames.iter().enumerate() {
        let start = t * cfg.hop;
        for k in 0..n {
            if start + k < padded_len {
                out[start + k] += f[k];
                norm[start + k] += window[k] * window[k];
            }
        }
    }
    (0..n_samples)
        .map(|i| {
            let d = norm[i + half];
            if d > 1e-10 {
                out[i + half] / d
            } else {
                0.0
            }
        })
        .collect()
}
