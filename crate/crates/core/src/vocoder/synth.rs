//! Pitch-synchronous mixed excitation through a cascaded MGLSA filter.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::{Waveform, SAMPLE_RATE};

use super::lsp::lsp_to_mgc;
use super::params::ContParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub hop: usize,
    /// Length of the zero-phase lowpass that splits voiced and noise bands.
    pub fir_taps: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            alpha: 0.455,
            gamma: -1.0 / 3.0,
            hop: crate::ingest::HOP,
            fir_taps: 257,
            seed: 0,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Zero-phase Blackman-windowed sinc lowpass with unit DC gain.
pub(crate) fn lowpass(cutoff: f64, sr: f64, taps: usize) -> Vec<f64> {
    let half = (taps / 2) as isize;
    let fc = (cutoff / sr).min(0.5);
    let mut h: Vec<f64> = (-half..=half)
        .map(|k| {
            let x = (k + half) as f64 / (2 * half) as f64;
            let w = 0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos();
            2.0 * fc * sinc(2.0 * fc * k as f64) * w
        })
        .collect();
    let s: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= s);
    h
}

/// Linear interpolation of per-frame values to per-sample values, frame `t`
/// sitting at sample `t * hop`.
fn per_sample(values: &[f64], hop: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let pos = i as f64 / hop as f64;
            let t = pos.floor() as usize;
            if t + 1 >= values.len() {
                values[values.len() - 1]
            } else {
                let f = pos - t as f64;
                values[t] * (1.0 - f) + values[t + 1] * f
            }
        })
        .collect()
}

/// Unit-power pulse train: pitch marks from integrating `f0`, each pulse a
/// band-limited impulse at the fractional mark under a two-period Hann
/// window scaled to the local period.
pub(crate) fn pulse_train(f0: &[f64], sr: f64) -> Vec<f64> {
    let n = f0.len();
    let mut out = vec![0.0; n];
    let mut marks = vec![0.0];
    let mut phase = 0.0;
    for (i, f) in f0.iter().enumerate().skip(1) {
        let next = phase + f / sr;
        if next >= 1.0 {
            marks.push(i as f64 - 1.0 + (1.0 - phase) / (next - phase));
            phase = next - 1.0;
        } else {
            phase = next;
        }
    }
    for m in marks {
        let period = sr / f0[(m.round() as usize).min(n - 1)];
        let amp = period.sqrt();
        let lo = (m - period).ceil().max(0.0) as usize;
        let hi = ((m + period).floor() as usize).min(n - 1);
        for (i, o) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let d = i as f64 - m;
            if d.abs() < period {
                *o += amp * 0.5 * (1.0 + (PI * d / period).cos()) * sinc(d);
            }
        }
    }
    out
}

/// One `1 / A(z~)` section in the modified structure without delay-free
/// loops.
#[derive(Clone)]
struct Section {
    u: Vec<f64>,
    y_prev: f64,
}

pub(crate) struct Mglsa {
    alpha: f64,
    gamma: f64,
    b: Vec<f64>,
    beta0: f64,
    sections: Vec<Section>,
}

impl Mglsa {
    pub fn new(order: usize, alpha: f64, gamma: f64) -> Self {
        let stages = (-1.0 / gamma).round() as usize;
        Self {
            alpha,
            gamma,
            b: vec![0.0; order],
            beta0: 0.0,
            sections: vec![
                Section {
                    u: vec![0.0; order],
                    y_prev: 0.0
                };
                stages
            ],
        }
    }

    /// Loads normalized coefficients `c_1..c_M`.
    pub fn set_coefs(&mut self, c: &[f64]) {
        let m = c.len();
        let mut next = 0.0;
        for j in (0..m).rev() {
            self.b[j] = c[j] - self.alpha * next;
            next = self.b[j];
        }
        self.beta0 = if m > 0 { -self.alpha * self.b[0] } else { 0.0 };
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let (a, g) = (self.alpha, self.gamma);
        let mut v = x;
        for s in &mut self.sections {
            let mut prev_lower = s.y_prev; // u_{m-1}[n-1], starting from y
            let mut cur_lower = 0.0; // u_{m-1}[n]
            let mut acc = 0.0;
            for (m, u) in s.u.iter_mut().enumerate() {
                let old = *u;
                *u = if m == 0 {
                    a * old + (1.0 - a * a) * prev_lower
                } else {
                    -a * cur_lower + prev_lower + a * old
                };
                acc += self.b[m] * *u;
                prev_lower = old;
                cur_lower = *u;
            }
            let y = (v - g * acc) / (1.0 + g * self.beta0);
            s.y_prev = y;
            v = y;
        }
        v
    }
}

/// Mixed excitation: the pulse train lowpassed at each frame's MVF plus
/// seeded unit-variance noise highpassed at the same frequency.
pub fn excitation(params: &ContParams, cfg: &SynthConfig) -> Vec<f64> {
    let n = params.len() * cfg.hop;
    if n == 0 {
        return Vec::new();
    }
    let sr = SAMPLE_RATE as f64;
    let f0: Vec<f64> = params.frames.iter().map(|f| f.log_f0.exp()).collect();
    let voiced = pulse_train(&per_sample(&f0, cfg.hop, n), sr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let filters: Vec<Vec<f64>> = params
        .frames
        .iter()
        .map(|f| lowpass(f.log_mvf.exp(), sr, cfg.fir_taps))
        .collect();
    let half = (cfg.fir_taps / 2) as isize;
    (0..n)
        .map(|i| {
            let t = ((i as f64 / cfg.hop as f64).round() as usize).min(params.len() - 1);
            let h = &filters[t];
            let (mut lv, mut ln) = (0.0, 0.0);
            for (k, hk) in h.iter().enumerate() {
                let j = i as isize + half - k as isize;
                if j >= 0 && (j as usize) < n {
                    lv += hk * voiced[j as usize];
                    ln += hk * noise[j as usize];
                }
            }
            lv + noise[i] - ln
        })
        .collect()
}

/// Synthesizes `T * hop` samples from validated parameters.
pub fn synthesize(params: &ContParams, cfg: &SynthConfig) -> Result<Waveform> {
    params.validate()?;
    if params.is_empty() {
        return Err(Error::InvalidParams("no frames".into()));
    }
    let exc = excitation(params, cfg);
    let gain: Vec<f64> = params.frames.iter().map(|f| f.gain.exp()).collect();
    let gain = per_sample(&gain, cfg.hop, exc.len());
    let mut filter = Mglsa::new(params.order(), cfg.alpha, cfg.gamma);
    let mut out = Vec::with_capacity(exc.len());
    let mut current = usize::MAX;
    for (i, (e, k)) in exc.iter().zip(&gain).enumerate() {
        let t = ((i as f64 / cfg.hop as f64).round() as usize).min(params.len() - 1);
        if t != current {
            filter.set_coefs(&lsp_to_mgc(&params.frames[t].lsp, cfg.gamma));
            current = t;
        }
        out.push(filter.process(e * k));
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("synthesis filter diverged".into()));
    }
    Waveform::new(out, SAMPLE_RATE)
}
