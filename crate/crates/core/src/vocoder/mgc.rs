//! Mel-generalized cepstral analysis.
//!
//! The spectral model is `H(z) = K * A(z~)^(1/gamma)` with
//! `A(z~) = 1 + gamma * sum_{m=1..M} c_m z~^-m` and `z~^-1` the first-order
//! all-pass `(z^-1 - alpha) / (1 - alpha z^-1)`. For `gamma < 0` the
//! normalized coefficients minimize `mean_w I(w) |A|^(-2/gamma)` and
//! `K^2` is the minimum value; for `gamma = 0` the model becomes
//! `log H = sum_{m=0..M} c_m z~^-m` and the coefficients minimize the
//! unbiased log-spectral criterion `mean_w [exp R - R - 1]`,
//! `R = log I - log |H|^2`. Both criteria are convex; they are minimized by
//! Newton steps with backtracking.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{FrameAnalyzer, Padding, StftConfig};
use crate::ingest::{Waveform, HOP};
use crate::linalg::cholesky_solve;
use crate::matrix::Matrix;

/// Gain assigned to frames whose windowed energy is below [`SILENCE_ENERGY`].
pub const GAIN_FLOOR: f64 = -11.512925464970229; // 0.5 * ln(1e-10)
pub const SILENCE_ENERGY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgcConfig {
    pub order: usize,
    pub alpha: f64,
    pub gamma: f64,
    /// Hann analysis window length in samples.
    pub frame_len: usize,
    pub fft_size: usize,
    pub hop: usize,
    pub max_iter: usize,
    /// Relative change of the criterion that counts as converged.
    pub tol: f64,
}

impl Default for MgcConfig {
    fn default() -> Self {
        Self {
            order: 24,
            alpha: 0.455,
            gamma: -1.0 / 3.0,
            frame_len: 2 * HOP,
            fft_size: 1024,
            hop: HOP,
            max_iter: 30,
            tol: 1e-4,
        }
    }
}

impl MgcConfig {
    /// Order-24 mel-cepstrum (`gamma = 0`) with the same warping and framing.
    pub fn mel_cepstrum() -> Self {
        Self {
            gamma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.order == 0 {
            return bad("order must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.gamma != 0.0 {
            let stages = -1.0 / self.gamma;
            if !(self.gamma > -1.0 && self.gamma < 0.0) || (stages - stages.round()).abs() > 1e-9 {
                return bad(format!("gamma {} must be 0 or -1/n for an integer n > 1", self.gamma));
            }
        }
        if self.frame_len == 0 || self.frame_len > self.fft_size || self.hop == 0 {
            return bad(format!(
                "frame_len {} / fft_size {} / hop {}",
                self.frame_len, self.fft_size, self.hop
            ));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return bad("max_iter and tol must be positive".into());
        }
        Ok(())
    }

    /// Number of cascaded `1/A` stages in synthesis, `1 / |gamma|`.
    pub fn stages(&self) -> usize {
        (-1.0 / self.gamma).round() as usize
    }

    pub(crate) fn stft(&self) -> StftConfig {
        StftConfig {
            fft_size: self.fft_size,
            win_size: self.frame_len,
            hop: self.hop,
            padding: Padding::Reflect,
        }
    }
}

/// Frequency warping of the first-order all-pass.
pub fn warp(omega: f64, alpha: f64) -> f64 {
    omega + 2.0 * (alpha * omega.sin() / (1.0 - alpha * omega.cos())).atan()
}

/// `cos(m beta_k)`, `sin(m beta_k)` on the one-sided FFT grid plus
/// quadrature weights (summing to one) for integrals over warped frequency.
pub(crate) struct WarpedGrid {
    pub k: usize,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WarpedGrid {
    pub fn new(order: usize, alpha: f64, fft_size: usize) -> Self {
        let k = fft_size / 2 + 1;
        let mut cos = vec![0.0; (order + 1) * k];
        let mut sin = vec![0.0; (order + 1) * k];
        for i in 0..k {
            let beta = warp(std::f64::consts::PI * i as f64 / (k - 1) as f64, alpha);
            for m in 0..=order {
                cos[m * k + i] = (m as f64 * beta).cos();
                sin[m * k + i] = (m as f64 * beta).sin();
            }
        }
        // the criteria are integrals over warped frequency, so each linear
        // bin is weighted by d(beta)/d(omega)
        let mut weights: Vec<f64> = (0..k)
            .map(|i| {
                let w = std::f64::consts::PI * i as f64 / (k - 1) as f64;
                let edge = if i == 0 || i == k - 1 { 0.5 } else { 1.0 };
                edge * (1.0 - alpha * alpha) / (1.0 - 2.0 * alpha * w.cos() + alpha * alpha)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { k, cos, sin, weights }
    }

    #[inline]
    pub fn cos(&self, m: usize) -> &[f64] {
        &self.cos[m * self.k..(m + 1) * self.k]
    }

    #[inline]
    pub fn sin(&self, m: usize) -> &[f64] {
        &self.sin[m * self.k..(m + 1) * self.k]
    }

    /// Real and imaginary part of `A = 1 + gamma sum c_m e^{-j m beta}`.
    fn polynomial(&self, coefs: &[f64], gamma: f64) -> (Vec<f64>, Vec<f64>) {
        let mut re = vec![1.0; self.k];
        let mut im = vec![0.0; self.k];
        for (m, &c) in coefs.iter().enumerate() {
            let g = gamma * c;
            if g == 0.0 {
                continue;
            }
            let (cs, sn) = (self.cos(m + 1), self.sin(m + 1));
            for i in 0..self.k {
                re[i] += g * cs[i];
                im[i] -= g * sn[i];
            }
        }
        (re, im)
    }
}

/// One analyzed frame: `gain = ln K` and the normalized coefficients
/// `c_1..c_M`. For `gamma = 0` the gain is the cepstral `c_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MgcFrame {
    pub gain: f64,
    pub coefs: Vec<f64>,
}

impl MgcFrame {
    pub fn silent(order: usize) -> Self {
        Self {
            gain: GAIN_FLOOR,
            coefs: vec![0.0; order],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.gain).chain(self.coefs.iter().copied()).collect()
    }
}

/// Per-frame periodograms `|X|^2 / sum(w^2)` and windowed energies.
pub(crate) fn periodograms(x: &[f64], cfg: &MgcConfig) -> Vec<(Vec<f64>, f64)> {
    let scfg = cfg.stft();
    let an = FrameAnalyzer::new(scfg);
    let wsum: f64 = scfg.window().iter().map(|w| w * w).sum();
    (0..scfg.n_frames(x.len()))
        .into_par_iter()
        .map(|t| {
            let fr = an.windowed(x, t);
            let energy: f64 = fr.iter().map(|v| v * v).sum();
            let p = an.spectrum(&fr).iter().map(|c| c.norm_sqr() / wsum).collect();
            (p, energy)
        })
        .collect()
}

pub(crate) struct MgcFitter {
    cfg: MgcConfig,
    grid: WarpedGrid,
    /// Gram matrix of the cosine basis, used to seed the gamma = 0 fit.
    gram: Vec<f64>,
}

impl MgcFitter {
    pub fn new(cfg: MgcConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = WarpedGrid::new(cfg.order, cfg.alpha, cfg.fft_size);
        let n = cfg.order + 1;
        let mut gram = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                gram[a * n + b] = (0..grid.k)
                    .map(|i| grid.weights[i] * grid.cos(a)[i] * grid.cos(b)[i])
                    .sum();
            }
        }
        Ok(Self { cfg, grid, gram })
    }

    /// Fits one periodogram. `energy` is the windowed frame energy used for
    /// the silence rule.
    pub fn fit(&self, periodogram: &[f64], energy: f64) -> MgcFrame {
        if energy < SILENCE_ENERGY {
            return MgcFrame::silent(self.cfg.order);
        }
        let mean = periodogram
            .iter()
            .zip(&self.grid.weights)
            .map(|(p, w)| p * w)
            .sum::<f64>();
        if !(mean > 0.0) {
            return MgcFrame::silent(self.cfg.order);
        }
        let spec: Vec<f64> = periodogram.iter().map(|p| (p / mean).max(1e-12)).collect();
        if self.cfg.gamma == 0.0 {
            let mut c = self.fit_mel_cepstrum(&spec);
            c[0] += 0.5 * mean.ln();
            MgcFrame {
                gain: c[0],
                coefs: c[1..].to_vec(),
            }
        } else {
            let (coefs, eps) = self.fit_generalized(&spec);
            MgcFrame {
                gain: 0.5 * (eps.ln() + mean.ln()),
                coefs,
            }
        }
    }

    #[cfg(test)]
    /// Value of the minimized criterion for `frame` against `periodogram`.
    /// For `gamma < 0` this is `mean I |A|^(-2/gamma)` with the gain
    /// ignored; for `gamma = 0` it is the log-spectral criterion.
    pub fn criterion(&self, periodogram: &[f64], frame: &MgcFrame) -> f64 {
        if self.cfg.gamma == 0.0 {
            let c: Vec<f64> = frame.to_vec();
            self.uels(periodogram, &c)
        } else {
            self.generalized_eps(periodogram, &frame.coefs)
        }
    }

    fn generalized_eps(&self, spec: &[f64], coefs: &[f64]) -> f64 {
        let p = -1.0 / self.cfg.gamma;
        let (re, im) = self.grid.polynomial(coefs, self.cfg.gamma);
        (0..self.grid.k)
            .map(|i| self.grid.weights[i] * spec[i] * (re[i] * re[i] + im[i] * im[i]).powf(p))
            .sum()
    }

    fn fit_generalized(&self, spec: &[f64]) -> (Vec<f64>, f64) {
        let m = self.cfg.order;
        let g = self.cfg.gamma;
        let p = -1.0 / g;
        let grid = &self.grid;
        let mut c = vec![0.0; m];
        let mut eps = self.generalized_eps(spec, &c);
        let mut grad = vec![0.0; m];
        let mut hess = vec![0.0; m * m];
        let mut gm = vec![0.0; m * grid.k];
        let mut toeplitz = vec![0.0; m];

        for _ in 0..self.cfg.max_iter {
            let (re, im) = grid.polynomial(&c, g);
            let mut w1 = vec![0.0; grid.k]; // first-order weight
            let mut w2 = vec![0.0; grid.k]; // rank-one weight
            for i in 0..grid.k {
                let u = re[i] * re[i] + im[i] * im[i];
                let base = grid.weights[i] * spec[i];
                w1[i] = base * p * u.powf(p - 1.0);
                w2[i] = base * p * (p - 1.0) * u.powf(p - 2.0);
            }
            for mm in 0..m {
                let (cs, sn) = (grid.cos(mm + 1), grid.sin(mm + 1));
                let row = &mut gm[mm * grid.k..(mm + 1) * grid.k];
                for i in 0..grid.k {
                    row[i] = cs[i] * re[i] - sn[i] * im[i];
                }
                grad[mm] = 2.0 * g * row.iter().zip(&w1).map(|(a, b)| a * b).sum::<f64>();
            }
            for (d, t) in toeplitz.iter_mut().enumerate() {
                *t = 2.0 * g * g * grid.cos(d).iter().zip(&w1).map(|(a, b)| a * b).sum::<f64>();
            }
            for a in 0..m {
                let ra = &gm[a * grid.k..(a + 1) * grid.k];
                for b in 0..=a {
                    let rb = &gm[b * grid.k..(b + 1) * grid.k];
                    let mut s = 0.0;
                    for i in 0..grid.k {
                        s += w2[i] * ra[i] * rb[i];
                    }
                    let h = 4.0 * g * g * s + toeplitz[a - b];
                    hess[a * m + b] = h;
                    hess[b * m + a] = h;
                }
            }
            let Some(step) = cholesky_solve(&hess, &grad) else {
                break;
            };
            let (next, next_eps) = self.line_search(&c, &step, eps, |x| self.generalized_eps(spec, x));
            let done = (eps - next_eps).abs() <= self.cfg.tol * eps;
            if next_eps <= eps {
                c = next;
                eps = next_eps;
            }
            if done {
                break;
            }
        }
        (c, eps)
    }

    fn uels(&self, spec: &[f64], c: &[f64]) -> f64 {
        let grid = &self.grid;
        let mut logh = vec![0.0; grid.k];
        for (m, &cm) in c.iter().enumerate() {
            for (l, cs) in logh.iter_mut().zip(grid.cos(m)) {
                *l += 2.0 * cm * cs;
            }
        }
        (0..grid.k)
            .map(|i| {
                let r = spec[i].ln() - logh[i];
                grid.weights[i] * (r.exp() - r - 1.0)
            })
            .sum()
    }

    fn fit_mel_cepstrum(&self, spec: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let n = self.cfg.order + 1;
        // least-squares fit of the log spectrum as a starting point
        let rhs: Vec<f64> = (0..n)
            .map(|m| {
                (0..grid.k)
                    .map(|i| grid.weights[i] * 0.5 * spec[i].ln() * grid.cos(m)[i])
                    .sum()
            })
            .collect();
        let mut c = cholesky_solve(&self.gram, &rhs).unwrap_or_else(|| vec![0.0; n]);
        let mut e = self.uels(spec, &c);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        for _ in 0..self.cfg.max_iter {
            let mut logh = vec![0.0; grid.k];
            for (m, &cm) in c.iter().enumerate() {
                for (l, cs) in logh.iter_mut().zip(grid.cos(m)) {
                    *l += 2.0 * cm * cs;
                }
            }
            let er: Vec<f64> = (0..grid.k)
                .map(|i| grid.weights[i] * (spec[i].ln() - logh[i]).exp())
                .collect();
            for a in 0..n {
                let ca = grid.cos(a);
                grad[a] = -2.0 * (0..grid.k).map(|i| (er[i] - grid.weights[i]) * ca[i]).sum::<f64>();
                for b in 0..=a {
                    let cb = grid.cos(b);
                    let h = 4.0 * (0..grid.k).map(|i| er[i] * ca[i] * cb[i]).sum::<f64>();
                    hess[a * n + b] = h;
                    hess[b * n + a] = h;
                }
            }
            let Some(step) = cholesky_solve(&hess, &grad) else {
                break;
            };
            let (next, next_e) = self.line_search(&c, &step, e, |x| self.uels(spec, x));
            let done = (e - next_e).abs() <= self.cfg.tol * e.max(1e-12);
            if next_e <= e {
                c = next;
                e = next_e;
            }
            if done {
                break;
            }
        }
        c
    }

    fn line_search(&self, c: &[f64], step: &[f64], f0: f64, f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
        let mut s = 1.0;
        loop {
            let x: Vec<f64> = c.iter().zip(step).map(|(a, d)| a - s * d).collect();
            let fx = f(&x);
            if fx <= f0 || s < 1e-6 {
                return (x, fx);
            }
            s *= 0.5;
        }
    }

    #[cfg(test)]
    /// Model log power spectrum `ln |H(e^{jw})|^2` on the FFT grid.
    pub fn log_spectrum(&self, frame: &MgcFrame) -> Vec<f64> {
        let grid = &self.grid;
        if self.cfg.gamma == 0.0 {
            let c = frame.to_vec();
            let mut out = vec![0.0; grid.k];
            for (m, &cm) in c.iter().enumerate() {
                for (o, cs) in out.iter_mut().zip(grid.cos(m)) {
                    *o += 2.0 * cm * cs;
                }
            }
            out
        } else {
            let (re, im) = grid.polynomial(&frame.coefs, self.cfg.gamma);
            (0..grid.k)
                .map(|i| 2.0 * frame.gain + (re[i] * re[i] + im[i] * im[i]).ln() / self.cfg.gamma)
                .collect()
        }
    }
}

/// Mel-generalized cepstral analysis at `cfg.hop`. Row `t` holds
/// `[gain, c_1, ..., c_M]` for the frame centered on sample `t * hop`.
pub fn analyze_mgc(wav: &Waveform, cfg: &MgcConfig) -> Result<Matrix> {
    if wav.sample_rate != crate::ingest::SAMPLE_RATE {
        return Err(Error::SampleRate(wav.sample_rate));
    }
    if wav.is_empty() {
        return Err(Error::EmptySignal);
    }
    let fitter = MgcFitter::new(*cfg)?;
    let frames: Vec<Vec<f64>> = periodograms(&wav.samples, cfg)
        .into_par_iter()
        .map(|(p, e)| fitter.fit(&p, e).to_vec())
        .collect();
    Ok(Matrix::from_rows(&frames))
}
