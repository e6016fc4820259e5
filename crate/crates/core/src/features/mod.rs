//! STFT, HTK-scale mel-spectrograms and feature normalization.

mod mel;
mod normalize;
mod stft;

use std::path::Path;

pub use mel::{
    hz_to_mel, mel_spectrogram, mel_to_hz, MelFilterbank, MelSpectrogram, LOG_FLOOR, MEL_FMAX, MEL_FMIN, N_MELS,
    SPECTRUM_POWER,
};
pub use normalize::{FeatureNormalizer, STD_FLOOR};
pub use stft::{hann, istft, stft, Padding, Spectrogram, StftConfig};
pub(crate) use stft::{reflect_index, FrameAnalyzer};

use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::error::Result;
use crate::matrix::Matrix;

/// Writes a `MEL1` file: the magic followed by `T`, `dims`, `hop` and
/// `sample_rate` as little-endian u32, then `T * dims` little-endian f32
/// values in row-major order.
pub fn write_mel(mel: &MelSpectrogram, path: &Path) -> Result<()> {
    let mut w = ByteWriter::default();
    w.magic(b"MEL1")
        .u32(mel.n_frames() as u32)
        .u32(mel.n_mels() as u32)
        .u32(mel.hop)
        .u32(mel.sample_rate)
        .f32s(mel.values.as_slice().iter().map(|&v| v as f32));
    w.save(path)
}

pub fn read_mel(path: &Path) -> Result<MelSpectrogram> {
    let buf = read_file(path)?;
    let mut r = ByteReader::new(&buf, "MEL1");
    r.expect_magic(b"MEL1")?;
    let t = r.u32()? as usize;
    let dims = r.u32()? as usize;
    let hop = r.u32()?;
    let sample_rate = r.u32()?;
    let data = r.f32s(t * dims)?.into_iter().map(f64::from).collect();
    r.finish()?;
    Ok(MelSpectrogram {
        values: Matrix::from_vec(t, dims, data),
        hop,
        sample_rate,
    })
}
