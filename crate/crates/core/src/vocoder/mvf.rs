//! Maximum voiced frequency from harmonic peak prominence.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::features::hann;
use crate::ingest::{Waveform, HOP, SAMPLE_RATE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvfConfig {
    pub hop: usize,
    /// Analysis window length in pitch periods.
    pub periods: f64,
    pub min_window: usize,
    pub max_window: usize,
    pub fft_size: usize,
    /// Peak-to-valley ratio (dB) for a harmonic to count as voiced.
    pub prominence_db: f64,
    /// The upward scan stops after this many consecutive non-prominent harmonics.
    pub max_misses: usize,
    pub median_len: usize,
    pub min_hz: f64,
    pub max_hz: f64,
}

impl Default for MvfConfig {
    fn default() -> Self {
        Self {
            hop: HOP,
            periods: 5.0,
            min_window: 256,
            max_window: 4096,
            fft_size: 8192,
            prominence_db: 6.0,
            max_misses: 2,
            median_len: 5,
            min_hz: 500.0,
            max_hz: 11025.0,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

/// Highest prominent harmonic of one power spectrum, in Hz (0 if none).
fn highest_harmonic(power: &[f64], f0: f64, sr: f64, cfg: &MvfConfig) -> f64 {
    let df = sr / cfg.fft_size as f64;
    let nyq = power.len() - 1;
    let bin = |hz: f64| ((hz / df).round().max(0.0) as usize).min(nyq);
    let threshold = 10f64.powf(cfg.prominence_db / 10.0);
    let (mut last, mut misses) = (0.0, 0);
    // expected position of the next harmonic, re-anchored on every peak found
    let mut expect = f0;
    while expect + 0.5 * f0 < sr / 2.0 {
        let (lo, hi) = (bin(expect - 0.15 * f0), bin(expect + 0.15 * f0));
        let peak_bin = (lo..=hi).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
        let peak = power[peak_bin];
        let left = &power[bin(expect - 0.5 * f0)..=bin(expect - 0.35 * f0)];
        let right = &power[bin(expect + 0.35 * f0)..=bin(expect + 0.5 * f0)];
        let valley = 0.5 * (mean(left) + mean(right));
        if peak > threshold * valley && peak > 0.0 {
            last = peak_bin as f64 * df;
            expect = last + f0;
            misses = 0;
        } else {
            misses += 1;
            if misses >= cfg.max_misses {
                break;
            }
            expect += f0;
        }
    }
    last
}

fn median_filter(x: &[f64], len: usize) -> Vec<f64> {
    let half = len / 2;
    (0..x.len())
        .map(|i| {
            let mut w: Vec<f64> = x[i.saturating_sub(half)..(i + half + 1).min(x.len())].to_vec();
            w.sort_by(f64::total_cmp);
            w[w.len() / 2]
        })
        .collect()
}

/// Natural-log MVF for every frame, guided by the log-F0 contour.
pub fn estimate_mvf(wav: &Waveform, log_f0: &[f64], cfg: &MvfConfig) -> Result<Vec<f64>> {
    if wav.sample_rate != SAMPLE_RATE {
        return Err(Error::SampleRate(wav.sample_rate));
    }
    if wav.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n_frames = wav.len() / cfg.hop + 1;
    if log_f0.len() != n_frames {
        return Err(Error::LengthMismatch(log_f0.len(), n_frames));
    }
    let sr = wav.sample_rate as f64;
    let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
    let x = &wav.samples;
    let raw: Vec<f64> = (0..n_frames)
        .into_par_iter()
        .map(|t| {
            let f0 = log_f0[t].exp();
            let len =
                ((cfg.periods * sr / f0).round() as usize).clamp(cfg.min_window, cfg.max_window.min(cfg.fft_size));
            let w = hann(len);
            let start = (t * cfg.hop) as isize - (len / 2) as isize;
            let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
            for (k, wk) in w.iter().enumerate() {
                let i = start + k as isize;
                if i >= 0 && (i as usize) < x.len() {
                    buf[k] = Complex64::new(x[i as usize] * wk, 0.0);
                }
            }
            fft.process(&mut buf);
            let power: Vec<f64> = buf[..=cfg.fft_size / 2].iter().map(|c| c.norm_sqr()).collect();
            highest_harmonic(&power, f0, sr, cfg)
        })
        .collect();
    Ok(median_filter(&raw, cfg.median_len)
        .into_iter()
        .map(|v| v.clamp(cfg.min_hz, cfg.max_hz).ln())
        .collect())
}
