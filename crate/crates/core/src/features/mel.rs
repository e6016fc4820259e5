use super::stft::{stft, StftConfig};
use crate::error::{Error, Result};
use crate::ingest::Waveform;
use crate::matrix::Matrix;

pub const N_MELS: usize = 80;
pub const MEL_FMIN: f64 = 0.0;
pub const MEL_FMAX: f64 = 8000.0;
/// Floor applied before the logarithm.
pub const LOG_FLOOR: f64 = 1e-5;
/// Exponent applied to STFT magnitudes before the mel projection
/// (1 = magnitude, 2 = power).
pub const SPECTRUM_POWER: f64 = 1.0;

/// HTK mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filters over the one-sided FFT bins, each row scaled to
/// unit area in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Matrix,
    pub fmin: f64,
    pub fmax: f64,
    pub sample_rate: u32,
    pub n_fft: usize,
    /// Lower edge, center and upper edge of every filter, `n_mels + 2` values.
    edges: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(fmin: f64, fmax: f64, n_mels: usize, n_fft: usize, sample_rate: u32) -> Result<Self> {
        if !(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate as f64 / 2.0) {
            return Err(Error::InvalidRange { fmin, fmax });
        }
        if n_mels == 0 || n_fft < 2 {
            return Err(Error::Invalid(format!("n_mels={n_mels}, n_fft={n_fft}")));
        }
        let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let n_bins = n_fft / 2 + 1;
        let df = sample_rate as f64 / n_fft as f64;
        let mut weights = Matrix::zeros(n_mels, n_bins);
        for m in 0..n_mels {
            let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let row = weights.row_mut(m);
            for (k, w) in row.iter_mut().enumerate() {
                let f = k as f64 * df;
                let up = (f - lo) / (c - lo);
                let down = (hi - f) / (hi - c);
                *w = up.min(down).max(0.0);
            }
            // Normalize by the filter's area as sampled on the FFT grid so the
            // row integrates to one over Hz.
            let area = row.iter().sum::<f64>() * df;
            if area <= 0.0 {
                return Err(Error::Invalid(format!(
                    "mel filter {m} ({lo:.1}-{hi:.1} Hz) covers no FFT bin; use fewer mels or a longer FFT"
                )));
            }
            row.iter_mut().for_each(|w| *w /= area);
        }
        Ok(Self {
            weights,
            fmin,
            fmax,
            sample_rate,
            n_fft,
            edges,
        })
    }

    /// The 80-band 0-8 kHz filterbank for 1024-point FFTs at 22 050 Hz.
    pub fn standard() -> Self {
        Self::new(MEL_FMIN, MEL_FMAX, N_MELS, 1024, crate::ingest::SAMPLE_RATE)
            .expect("standard filterbank parameters are valid")
    }

    pub fn n_mels(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn center_frequencies(&self) -> Vec<f64> {
        self.edges[1..self.edges.len() - 1].to_vec()
    }

    /// Projects one spectral frame (already raised to [`SPECTRUM_POWER`]).
    pub fn project(&self, spectrum: &[f64]) -> Vec<f64> {
        self.weights
            .iter_rows()
            .map(|w| w.iter().zip(spectrum).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Log-compressed mel energies, `frames x n_mels`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Matrix,
    pub hop: u32,
    pub sample_rate: u32,
}

impl MelSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.values.rows()
    }

    pub fn n_mels(&self) -> usize {
        self.values.cols()
    }
}

/// `ln(max(fb * |STFT|, 1e-5))` per frame.
pub fn mel_spectrogram(wav: &Waveform, cfg: &StftConfig, fb: &MelFilterbank) -> Result<MelSpectrogram> {
    if wav.sample_rate != crate::ingest::SAMPLE_RATE {
        return Err(Error::SampleRate(wav.sample_rate));
    }
    if fb.n_bins() != cfg.n_bins() {
        return Err(Error::Invalid(format!(
            "filterbank has {} bins, STFT has {}",
            fb.n_bins(),
            cfg.n_bins()
        )));
    }
    let spec = stft(&wav.samples, cfg)?;
    let mut values = Matrix::zeros(spec.n_frames, fb.n_mels());
    for t in 0..spec.n_frames {
        let mag: Vec<f64> = spec.frame(t).iter().map(|c| c.norm().powf(SPECTRUM_POWER)).collect();
        for (dst, e) in values.row_mut(t).iter_mut().zip(fb.project(&mag)) {
            *dst = e.max(LOG_FLOOR).ln();
        }
    }
    Ok(MelSpectrogram {
        values,
        hop: cfg.hop as u32,
        sample_rate: wav.sample_rate,
    })
}
