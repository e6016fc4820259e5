//! Ultrasound containers, WAV audio, frame alignment and dataset splits.

mod resize;
mod split;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use resize::{
    read_frames, resize_bicubic, resize_unclamped, write_frames, ResizedFrame, RESIZED_COLS, RESIZED_ROWS,
};
pub use split::{read_split_manifest, split_dataset, write_split_manifest, DatasetSplit, Subset};

/// Audio sample rate used throughout the toolkit.
pub const SAMPLE_RATE: u32 = 22_050;
/// Nominal ultrasound frame rate of the recording setup.
pub const ULTRASOUND_FPS: f64 = 81.67;
/// Analysis hop that keeps one audio frame per ultrasound frame.
pub const HOP: usize = 270;

/// Hop size in samples that matches one frame of a `fps` video stream.
pub fn hop_from_rate(sample_rate: u32, fps: f64) -> Result<usize> {
    if !(fps > 0.0) || sample_rate == 0 {
        return Err(Error::Invalid(format!(
            "cannot derive hop from {sample_rate} Hz / {fps} fps"
        )));
    }
    Ok((sample_rate as f64 / fps).round() as usize)
}

/// Number of centered analysis frames for `n_samples` at `hop`.
pub fn frame_count(n_samples: usize, hop: usize) -> usize {
    if n_samples == 0 {
        0
    } else {
        n_samples / hop + 1
    }
}

/// Raw scanline frames from the ultrasound device.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrasoundSequence {
    data: Vec<u8>,
    n_frames: usize,
    pub num_vectors: usize,
    pub pix_per_vector: usize,
    pub fps: f64,
}

impl UltrasoundSequence {
    pub fn new(data: Vec<u8>, num_vectors: usize, pix_per_vector: usize, fps: f64) -> Result<Self> {
        let frame_len = num_vectors * pix_per_vector;
        if frame_len == 0 {
            return Err(Error::InvalidMetadata("zero frame size".into()));
        }
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(Error::InvalidMetadata(format!("FramesPerSec must be > 0, got {fps}")));
        }
        if !data.len().is_multiple_of(frame_len) {
            return Err(Error::MalformedContainer(format!(
                "{} bytes is not a multiple of the {num_vectors}x{pix_per_vector} frame size",
                data.len()
            )));
        }
        if data.is_empty() {
            return Err(Error::MalformedContainer("container holds no frames".into()));
        }
        Ok(Self {
            n_frames: data.len() / frame_len,
            data,
            num_vectors,
            pix_per_vector,
            fps,
        })
    }

    pub fn len(&self) -> usize {
        self.n_frames
    }

    pub fn is_empty(&self) -> bool {
        self.n_frames == 0
    }

    pub fn frame_len(&self) -> usize {
        self.num_vectors * self.pix_per_vector
    }

    /// Frame `i`, row-major with `num_vectors` rows of `pix_per_vector` samples.
    pub fn frame(&self, i: usize) -> &[u8] {
        let n = self.frame_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.frame_len())
    }

    /// Keeps the first `t` frames.
    pub fn truncated(&self, t: usize) -> Self {
        let t = t.min(self.n_frames);
        Self {
            data: self.data[..t * self.frame_len()].to_vec(),
            n_frames: t,
            ..*self
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

fn parse_meta(text: &str) -> Result<(usize, usize, f64)> {
    let mut nv = None;
    let mut ppv = None;
    let mut fps = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        let v = v.trim();
        let bad = |k: &str| Error::InvalidMetadata(format!("cannot parse {k}={v}"));
        match k.trim() {
            "NumVectors" => nv = Some(v.parse::<usize>().map_err(|_| bad("NumVectors"))?),
            "PixPerVector" => ppv = Some(v.parse::<usize>().map_err(|_| bad("PixPerVector"))?),
            "FramesPerSec" => fps = Some(v.parse::<f64>().map_err(|_| bad("FramesPerSec"))?),
            _ => {}
        }
    }
    let missing = |k: &str| Error::InvalidMetadata(format!("missing key {k}"));
    Ok((
        nv.ok_or_else(|| missing("NumVectors"))?,
        ppv.ok_or_else(|| missing("PixPerVector"))?,
        fps.ok_or_else(|| missing("FramesPerSec"))?,
    ))
}

/// Reads a raw uint8 frame container and its `key=value` metadata sidecar.
pub fn read_ultrasound(container: &Path, meta: &Path) -> Result<UltrasoundSequence> {
    let text = fs::read_to_string(meta).map_err(|e| Error::io(meta, e))?;
    let (nv, ppv, fps) = parse_meta(&text)?;
    let data = fs::read(container).map_err(|e| Error::io(container, e))?;
    UltrasoundSequence::new(data, nv, ppv, fps)
}

pub fn write_ultrasound(us: &UltrasoundSequence, container: &Path, meta: &Path) -> Result<()> {
    fs::write(container, &us.data).map_err(|e| Error::io(container, e))?;
    let text = format!(
        "NumVectors={}\nPixPerVector={}\nFramesPerSec={}\n",
        us.num_vectors, us.pix_per_vector, us.fps
    );
    fs::write(meta, text).map_err(|e| Error::io(meta, e))
}

/// Mono audio at [`SAMPLE_RATE`].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::SampleRate(sample_rate));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("waveform contains non-finite samples".into()));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}

/// Reads a 16-bit PCM mono WAV file; samples are scaled to [-1, 1).
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut reader = hound::WavReader::open(path).map_err(|e| Error::Wav(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Wav(format!(
            "{}: expected 16-bit PCM mono, got {} channel(s) at {} bits",
            path.display(),
            spec.channels,
            spec.bits_per_sample
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Wav(e.to_string()))?;
    Waveform::new(samples, spec.sample_rate)
}

/// Writes 16-bit PCM mono; samples outside [-1, 1] are clipped.
pub fn write_wav(wav: &Waveform, path: &Path) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wav.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let werr = |e: hound::Error| Error::Wav(format!("{}: {e}", path.display()));
    let mut writer = hound::WavWriter::create(path, spec).map_err(werr)?;
    for &x in &wav.samples {
        let v = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(werr)?;
    }
    writer.finalize().map_err(werr)
}

/// Number of frames shared by the ultrasound stream and the audio analysed
/// at [`HOP`]. Both streams are assumed to start at time zero.
pub fn align_frames(us_frames: usize, n_samples: usize) -> Result<usize> {
    let t = us_frames.min(frame_count(n_samples, HOP));
    if t == 0 {
        return Err(Error::EmptyOverlap);
    }
    Ok(t)
}
