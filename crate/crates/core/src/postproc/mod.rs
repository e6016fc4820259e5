//! From predicted mel-spectrograms to audio: hop conversion, smoothing,
//! conditioning export, and a Griffin-Lim fallback.

mod griffin_lim;
mod resample;
mod savgol;

use std::path::Path;

pub use griffin_lim::{griffin_lim, mel_to_linear, GriffinLimConfig, GriffinLimOutput};
pub use resample::{resample_frames, resample_hop, resampled_len, CONDITIONING_HOP};
pub use savgol::{savgol_coefficients, savgol_smooth, SmoothingConfig};

use crate::error::{Error, Result};
use crate::features::{write_mel, MelSpectrogram};

/// Writes a 256-hop log-mel spectrogram as a `MEL1` conditioning file.
pub fn export_conditioning(mel: &MelSpectrogram, path: &Path) -> Result<()> {
    if mel.hop != CONDITIONING_HOP {
        return Err(Error::WrongHop {
            expected: CONDITIONING_HOP,
            got: mel.hop,
        });
    }
    write_mel(mel, path)
}

/// Hop conversion to 256 followed by Savitzky-Golay smoothing along time.
pub fn prepare_conditioning(mel: &MelSpectrogram, smoothing: &SmoothingConfig) -> Result<MelSpectrogram> {
    let resampled = resample_hop(mel, CONDITIONING_HOP)?;
    Ok(MelSpectrogram {
        values: savgol_smooth(&resampled.values, smoothing)?,
        ..resampled
    })
}
