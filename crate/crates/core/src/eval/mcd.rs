use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::Waveform;
use crate::matrix::Matrix;
use crate::vocoder::{analyze_mgc, MgcConfig};

/// `10 / ln 10 * sqrt(2)`: the dB distortion of a unit difference in one
/// cepstral coefficient.
pub const MCD_SCALE: f64 = 6.141_851_463_713_754;

/// Mean over frames of `(10 / ln 10) sqrt(2 sum_{d>=1} (r_d - t_d)^2)`.
/// Column 0 (energy) is excluded.
pub fn mcd(reference: &Matrix, test: &Matrix) -> Result<f64> {
    if reference.rows() != test.rows() {
        return Err(Error::LengthMismatch(reference.rows(), test.rows()));
    }
    if reference.cols() != test.cols() {
        return Err(Error::Invalid(format!(
            "cepstra have {} and {} coefficients",
            reference.cols(),
            test.cols()
        )));
    }
    if reference.rows() == 0 || reference.cols() < 2 {
        return Err(Error::Invalid(
            "need at least one frame and one non-energy coefficient".into(),
        ));
    }
    let total: f64 = reference
        .iter_rows()
        .zip(test.iter_rows())
        .map(|(r, t)| {
            let d2: f64 = r[1..].iter().zip(&t[1..]).map(|(a, b)| (a - b) * (a - b)).sum();
            10.0 / std::f64::consts::LN_10 * (2.0 * d2).sqrt()
        })
        .sum();
    Ok(total / reference.rows() as f64)
}

/// Order-24 mel-cepstra (`gamma = 0`, `alpha = 0.455`) at the 270-sample hop.
pub fn waveform_to_melcepstra(wav: &Waveform) -> Result<Matrix> {
    analyze_mgc(wav, &MgcConfig::mel_cepstrum())
}

/// MCD between two waveforms after truncating both cepstrum sequences to
/// the shorter one. Returns the distortion and the frame count used.
pub fn mcd_waveforms(reference: &Waveform, test: &Waveform) -> Result<(f64, usize)> {
    let r = waveform_to_melcepstra(reference)?;
    let t = waveform_to_melcepstra(test)?;
    let n = r.rows().min(t.rows());
    Ok((mcd(&r.truncated(n), &t.truncated(n))?, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdEntry {
    pub utterance: String,
    pub mcd_db: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct McdReport {
    pub entries: Vec<McdEntry>,
}

impl McdReport {
    pub fn push(&mut self, utterance: impl Into<String>, mcd_db: f64, frames: usize) {
        self.entries.push(McdEntry {
            utterance: utterance.into(),
            mcd_db,
            frames,
        });
    }

    /// Arithmetic mean of the utterance values (NaN when empty).
    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|e| e.mcd_db).sum::<f64>() / self.entries.len() as f64
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("utterance\tmcd_db\tframes\n");
        for e in &self.entries {
            writeln!(s, "{}\t{:.6}\t{}", e.utterance, e.mcd_db, e.frames).unwrap();
        }
        let frames: usize = self.entries.iter().map(|e| e.frames).sum();
        writeln!(s, "mean\t{:.6}\t{}", self.mean(), frames).unwrap();
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}
