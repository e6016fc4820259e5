//! Continuous vocoder: mel-generalized cepstral analysis in line-spectral
//! form, a continuous F0 contour, maximum voiced frequency, and
//! pitch-synchronous mixed-excitation synthesis.

mod f0;
mod lsp;
mod mgc;
mod mvf;
mod params;
mod synth;

pub use f0::{track_contf0, F0Config};
pub use lsp::{is_minimum_phase, is_valid_lsp, lsp_to_mgc, mgc_to_lsp};
#[cfg(test)]
pub(crate) use mgc::MgcFitter;
pub use mgc::{analyze_mgc, warp, MgcConfig, MgcFrame, GAIN_FLOOR, SILENCE_ENERGY};
pub use mvf::{estimate_mvf, MvfConfig};
pub use params::{read_params, write_params, ContFrame, ContParams, F0_MAX, F0_MIN, MVF_MAX, MVF_MIN};
pub(crate) use synth::pulse_train;
pub use synth::{excitation, synthesize, SynthConfig};

use crate::error::{Error, Result};
use crate::ingest::Waveform;

/// Everything needed for analysis and copy synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VocoderConfig {
    pub mgc: MgcConfig,
    pub f0: F0Config,
    pub mvf: MvfConfig,
    pub seed: u64,
}

impl VocoderConfig {
    pub fn synth(&self) -> SynthConfig {
        SynthConfig {
            alpha: self.mgc.alpha,
            gamma: self.mgc.gamma,
            hop: self.mgc.hop,
            seed: self.seed,
            ..Default::default()
        }
    }
}

/// Gain, LSPs, log F0 and log MVF for every frame of `wav`.
pub fn analyze(wav: &Waveform, cfg: &VocoderConfig) -> Result<ContParams> {
    if cfg.mgc.gamma == 0.0 {
        return Err(Error::Invalid("line spectral pairs need gamma < 0".into()));
    }
    if cfg.f0.hop != cfg.mgc.hop || cfg.mvf.hop != cfg.mgc.hop {
        return Err(Error::Invalid("analysis stages use different hops".into()));
    }
    let mgc = analyze_mgc(wav, &cfg.mgc)?;
    let log_f0 = track_contf0(wav, &cfg.f0)?;
    let log_mvf = estimate_mvf(wav, &log_f0, &cfg.mvf)?;
    let frames = mgc
        .iter_rows()
        .zip(log_f0.iter().zip(&log_mvf))
        .map(|(row, (&f, &m))| {
            Ok(ContFrame {
                gain: row[0],
                lsp: mgc_to_lsp(&row[1..], cfg.mgc.gamma)?,
                log_f0: f,
                log_mvf: m,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContParams { frames })
}
