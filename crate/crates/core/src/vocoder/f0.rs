//! Continuous F0: normalized cross-correlation candidates smoothed by a
//! random-walk Kalman filter and Rauch-Tung-Striebel smoother in log F0.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{Waveform, HOP, SAMPLE_RATE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F0Config {
    pub fmin: f64,
    pub fmax: f64,
    /// Correlation window in samples.
    pub window: usize,
    pub hop: usize,
    /// Minimum correlation for a frame to yield a measurement.
    pub voicing_threshold: f64,
    /// Score penalty per octave of lag, favoring the shortest period.
    pub octave_cost: f64,
    /// Random-walk standard deviation of log F0 per frame.
    pub process_std: f64,
    pub prior_hz: f64,
    pub prior_std: f64,
    /// Largest allowed |log f0[t+1] - log f0[t]|.
    pub max_log_step: f64,
}

impl Default for F0Config {
    fn default() -> Self {
        Self {
            fmin: 50.0,
            fmax: 400.0,
            window: 512,
            hop: HOP,
            voicing_threshold: 0.3,
            octave_cost: 0.05,
            process_std: 0.05,
            prior_hz: 141.4,
            prior_std: 1.0,
            max_log_step: 0.1,
        }
    }
}

/// A per-frame pitch measurement: log F0 and its standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Measurement {
    log_f0: f64,
    std: f64,
}

fn nccf(x: &[f64], start: isize, len: usize, lag: usize) -> f64 {
    let at = |i: isize| {
        if i >= 0 && (i as usize) < x.len() {
            x[i as usize]
        } else {
            0.0
        }
    };
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for n in 0..len as isize {
        let a = at(start + n);
        let b = at(start + n + lag as isize);
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    let d = (xx * yy).sqrt();
    if d > 1e-12 {
        xy / d
    } else {
        0.0
    }
}

fn measure(x: &[f64], t: usize, cfg: &F0Config, sr: f64) -> Option<Measurement> {
    let lag_min = (sr / cfg.fmax).floor() as usize;
    let lag_max = (sr / cfg.fmin).ceil() as usize;
    let start = (t * cfg.hop) as isize - ((cfg.window + lag_max) / 2) as isize;
    let r: Vec<f64> = (lag_min - 1..=lag_max + 1)
        .map(|lag| nccf(x, start, cfg.window, lag))
        .collect();
    let mut best: Option<(f64, f64, f64)> = None; // (score, lag, strength)
    for i in 1..r.len() - 1 {
        if r[i] < cfg.voicing_threshold || r[i] < r[i - 1] || r[i] < r[i + 1] {
            continue;
        }
        let denom = r[i - 1] - 2.0 * r[i] + r[i + 1];
        let delta = if denom < 0.0 {
            (0.5 * (r[i - 1] - r[i + 1]) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let lag = (lag_min - 1 + i) as f64 + delta;
        let score = r[i] - cfg.octave_cost * (lag / lag_min as f64).log2();
        if best.is_none_or(|b| score > b.0) {
            best = Some((score, lag, r[i]));
        }
    }
    best.map(|(_, lag, s)| Measurement {
        log_f0: (sr / lag).ln(),
        std: 0.01 + 0.2 * (1.0 - s.min(1.0)),
    })
}

/// Kalman filter and RTS smoother for a random walk with optional
/// measurements.
fn smooth(meas: &[Option<Measurement>], cfg: &F0Config) -> Vec<f64> {
    let n = meas.len();
    let q = cfg.process_std * cfg.process_std;
    let mut xf = vec![0.0; n];
    let mut pf = vec![0.0; n];
    let (mut x, mut p) = (cfg.prior_hz.ln(), cfg.prior_std * cfg.prior_std);
    for t in 0..n {
        if t > 0 {
            p += q;
        }
        if let Some(m) = meas[t] {
            let r = m.std * m.std;
            let k = p / (p + r);
            x += k * (m.log_f0 - x);
            p *= 1.0 - k;
        }
        xf[t] = x;
        pf[t] = p;
    }
    let mut xs = xf.clone();
    for t in (0..n.saturating_sub(1)).rev() {
        let g = pf[t] / (pf[t] + q);
        xs[t] = xf[t] + g * (xs[t + 1] - xf[t]);
    }
    xs
}

/// Limits the per-frame step symmetrically: the mean of a forward and a
/// backward slew-limited pass, each of which respects the bound.
fn limit_slew(x: &[f64], step: f64) -> Vec<f64> {
    let n = x.len();
    let mut fwd = x.to_vec();
    for t in 1..n {
        fwd[t] = fwd[t].clamp(fwd[t - 1] - step, fwd[t - 1] + step);
    }
    let mut bwd = x.to_vec();
    for t in (0..n.saturating_sub(1)).rev() {
        bwd[t] = bwd[t].clamp(bwd[t + 1] - step, bwd[t + 1] + step);
    }
    fwd.iter().zip(&bwd).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Natural-log F0 for every frame centered on `t * hop`, defined for
/// unvoiced and silent frames too.
pub fn track_contf0(wav: &Waveform, cfg: &F0Config) -> Result<Vec<f64>> {
    if wav.sample_rate != SAMPLE_RATE {
        return Err(Error::SampleRate(wav.sample_rate));
    }
    if wav.is_empty() {
        return Err(Error::EmptySignal);
    }
    if !(cfg.fmin > 0.0 && cfg.fmin < cfg.fmax && cfg.fmax < wav.sample_rate as f64 / 4.0) {
        return Err(Error::InvalidRange {
            fmin: cfg.fmin,
            fmax: cfg.fmax,
        });
    }
    let sr = wav.sample_rate as f64;
    let n_frames = wav.len() / cfg.hop + 1;
    let meas: Vec<Option<Measurement>> = (0..n_frames)
        .into_par_iter()
        .map(|t| measure(&wav.samples, t, cfg, sr))
        .collect();
    let (lo, hi) = (cfg.fmin.ln(), cfg.fmax.ln());
    Ok(limit_slew(&smooth(&meas, cfg), cfg.max_log_step)
        .into_iter()
        .map(|v| v.clamp(lo, hi))
        .collect())
}
