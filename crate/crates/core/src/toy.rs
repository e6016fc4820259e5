//! Synthetic signals and a small synthetic ultrasound-plus-speech corpus for
//! tests, demos and smoke runs.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ingest::{write_ultrasound, write_wav, UltrasoundSequence, Waveform, HOP, SAMPLE_RATE, ULTRASOUND_FPS};
use crate::vocoder::pulse_train;

/// Formant frequencies and bandwidths (Hz) of an /a/-like vowel.
pub const VOWEL_A: [(f64, f64); 3] = [(700.0, 80.0), (1200.0, 100.0), (2600.0, 150.0)];

/// Applies a cascade of two-pole resonators with unit gain at DC.
pub fn resonate(x: &[f64], formants: &[(f64, f64)]) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    let mut y = x.to_vec();
    for &(f, bw) in formants {
        let r = (-PI * bw / sr).exp();
        let th = 2.0 * PI * f / sr;
        let (a1, a2) = (-2.0 * r * th.cos(), r * r);
        let g = 1.0 + a1 + a2;
        let (mut y1, mut y2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let out = g * *v - a1 * y1 - a2 * y2;
            y2 = y1;
            y1 = out;
            *v = out;
        }
    }
    y
}

/// A steady vowel: band-limited glottal pulses at `f0` through the given
/// formants, scaled to `peak` absolute amplitude.
pub fn vowel(f0: f64, formants: &[(f64, f64)], n: usize, peak: f64) -> Vec<f64> {
    let src = pulse_train(&vec![f0; n], SAMPLE_RATE as f64);
    scale_peak(resonate(&src, formants), peak)
}

/// Sawtooth wave in [-amp, amp].
pub fn sawtooth(f0: f64, n: usize, amp: f64) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    (0..n)
        .map(|i| amp * (2.0 * ((i as f64 * f0 / sr) % 1.0) - 1.0))
        .collect()
}

pub fn sine(freq: f64, n: usize, amp: f64) -> Vec<f64> {
    let sr = SAMPLE_RATE as f64;
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / sr).sin()).collect()
}

fn scale_peak(mut x: Vec<f64>, peak: f64) -> Vec<f64> {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
    x
}

/// Shape of a synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    /// Ultrasound frames (= 270-sample audio hops) per utterance.
    pub frames: usize,
    pub num_vectors: usize,
    pub pix_per_vector: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            frames: 120,
            num_vectors: 64,
            pix_per_vector: 96,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyUtterance {
    pub id: String,
    pub ultrasound: UltrasoundSequence,
    pub wav: Waveform,
}

/// Slowly varying value in [0, 1]: a sum of two sinusoids with random rates
/// (0.5-2.5 Hz) and phases.
struct Trajectory([(f64, f64); 2]);

impl Trajectory {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut one = || (rng.random_range(0.5..2.5), rng.random_range(0.0..2.0 * PI));
        Self([one(), one()])
    }

    fn at(&self, t: f64) -> f64 {
        let s: f64 = self.0.iter().map(|(r, ph)| (2.0 * PI * r * t + ph).sin()).sum();
        0.5 + 0.22 * s
    }
}

/// One utterance whose tongue image and formants follow the same two
/// articulatory trajectories (tongue height and frontness), so the acoustics
/// are predictable from the images.
pub fn toy_utterance(index: usize, cfg: &ToyConfig) -> Result<ToyUtterance> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64));
    let height = Trajectory::random(&mut rng);
    let front = Trajectory::random(&mut rng);
    let pitch = Trajectory::random(&mut rng);
    let sr = SAMPLE_RATE as f64;
    let n = cfg.frames * HOP;

    let f0: Vec<f64> = (0..n).map(|i| 100.0 + 60.0 * pitch.at(i as f64 / sr)).collect();
    let src = pulse_train(&f0, sr);
    let formants = |t: f64| {
        let (h, f) = (height.at(t), front.at(t));
        [
            (250.0 + 550.0 * (1.0 - h), 80.0),
            (800.0 + 1400.0 * f, 100.0),
            (2600.0 + 300.0 * f, 150.0),
        ]
    };
    let mut y = src;
    for k in 0..3 {
        let (mut y1, mut y2) = (0.0, 0.0);
        for (i, v) in y.iter_mut().enumerate() {
            let (fc, bw) = formants(i as f64 / sr)[k];
            let r = (-PI * bw / sr).exp();
            let (a1, a2) = (-2.0 * r * (2.0 * PI * fc / sr).cos(), r * r);
            let out = (1.0 + a1 + a2) * *v - a1 * y1 - a2 * y2;
            y2 = y1;
            y1 = out;
            *v = out;
        }
    }
    // 50 ms fades and a little breath noise
    let fade = (0.05 * sr) as usize;
    let mut y = scale_peak(y, 0.5);
    for (i, v) in y.iter_mut().enumerate() {
        let g = (i.min(n - 1 - i) as f64 / fade as f64).min(1.0);
        *v = *v * g + rng.random_range(-0.002..0.002);
    }
    let wav = Waveform::new(y, SAMPLE_RATE)?;

    let (nv, ppv) = (cfg.num_vectors, cfg.pix_per_vector);
    let mut data = Vec::with_capacity(cfg.frames * nv * ppv);
    for t in 0..cfg.frames {
        let time = t as f64 * HOP as f64 / sr;
        let (h, f) = (height.at(time), front.at(time));
        for v in 0..nv {
            // contour depth along the scanline: raised by height, tilted by frontness
            let u = v as f64 / (nv - 1).max(1) as f64 - 0.5;
            let depth = ppv as f64 * (0.65 - 0.3 * h * (1.0 - 2.0 * u * u) + 0.15 * (f - 0.5) * u);
            for p in 0..ppv {
                let d = (p as f64 - depth) / (0.04 * ppv as f64);
                let ridge = 200.0 * (-d * d).exp();
                let shadow = if (p as f64) > depth { 10.0 } else { 30.0 };
                let px = ridge + shadow + rng.random_range(0.0..25.0);
                data.push(px.clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(ToyUtterance {
        id: format!("toy{index:03}"),
        ultrasound: UltrasoundSequence::new(data, nv, ppv, ULTRASOUND_FPS)?,
        wav,
    })
}

/// Writes `n` utterances as `<id>.bin`, `<id>.meta` and `<id>.wav` into
/// `dir` (created if needed) and returns the identifiers.
pub fn write_toy_corpus(dir: &Path, n: usize, cfg: &ToyConfig) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let u = toy_utterance(i, cfg)?;
        write_ultrasound(
            &u.ultrasound,
            &dir.join(format!("{}.bin", u.id)),
            &dir.join(format!("{}.meta", u.id)),
        )?;
        write_wav(&u.wav, &dir.join(format!("{}.wav", u.id)))?;
        ids.push(u.id);
    }
    Ok(ids)
}
