use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::MelSpectrogram;
use crate::interp::Taps;
use crate::matrix::Matrix;

/// Target hop of the neural-vocoder conditioning.
pub const CONDITIONING_HOP: u32 = 256;

/// Frame count after changing the hop: `ceil(T * from / to)`.
pub fn resampled_len(t: usize, from_hop: u32, to_hop: u32) -> usize {
    (t as u64 * from_hop as u64).div_ceil(to_hop as u64) as usize
}

/// Re-times every channel with Keys cubic convolution. Frame `t` of the
/// input sits at sample `t * from_hop`, output frame `j` at `j * to_hop`;
/// positions beyond the ends are edge-clamped.
pub fn resample_frames(m: &Matrix, from_hop: u32, to_hop: u32) -> Result<Matrix> {
    if m.rows() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: m.rows(),
        });
    }
    if from_hop == 0 || to_hop == 0 {
        return Err(Error::Invalid("hop must be positive".into()));
    }
    let out_len = resampled_len(m.rows(), from_hop, to_hop);
    let ratio = to_hop as f64 / from_hop as f64;
    let rows: Vec<Vec<f64>> = (0..out_len)
        .into_par_iter()
        .map(|j| {
            let taps = Taps::at(j as f64 * ratio, m.rows());
            (0..m.cols()).map(|c| taps.apply(|i| m.get(i, c))).collect()
        })
        .collect();
    Ok(Matrix::from_rows(&rows))
}

/// Converts a mel-spectrogram to a new hop (270 to 256 for conditioning).
pub fn resample_hop(mel: &MelSpectrogram, to_hop: u32) -> Result<MelSpectrogram> {
    Ok(MelSpectrogram {
        values: resample_frames(&mel.values, mel.hop, to_hop)?,
        hop: to_hop,
        sample_rate: mel.sample_rate,
    })
}
