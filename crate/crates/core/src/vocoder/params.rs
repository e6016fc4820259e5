use std::f64::consts::PI;
use std::path::Path;

use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::lsp::is_valid_lsp;
use super::mgc::GAIN_FLOOR;

pub const F0_MIN: f64 = 50.0;
pub const F0_MAX: f64 = 400.0;
pub const MVF_MIN: f64 = 500.0;
pub const MVF_MAX: f64 = 11025.0;

/// Smallest LSP spacing enforced by [`ContParams::sanitize`].
const MIN_LSP_GAP: f64 = 1e-3;

/// One analysis frame of the continuous vocoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ContFrame {
    pub gain: f64,
    pub lsp: Vec<f64>,
    pub log_f0: f64,
    pub log_mvf: f64,
}

/// Continuous vocoder parameters at the 270-sample frame shift.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContParams {
    pub frames: Vec<ContFrame>,
}

impl ContParams {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// LSP order, taken from the first frame (0 when empty).
    pub fn order(&self) -> usize {
        self.frames.first().map_or(0, |f| f.lsp.len())
    }

    /// Checks every frame invariant.
    pub fn validate(&self) -> Result<()> {
        let order = self.order();
        for (t, f) in self.frames.iter().enumerate() {
            let bad = |what: &str| Err(Error::InvalidParams(format!("frame {t}: {what}")));
            if f.lsp.len() != order {
                return bad(&format!("{} LSPs, expected {order}", f.lsp.len()));
            }
            if !f.gain.is_finite() {
                return bad("gain is not finite");
            }
            if !is_valid_lsp(&f.lsp) {
                return bad("LSPs not strictly ascending in (0, pi)");
            }
            let f0 = f.log_f0.exp();
            if !(F0_MIN * (1.0 - 1e-9)..=F0_MAX * (1.0 + 1e-9)).contains(&f0) {
                return bad(&format!("f0 {f0} Hz outside [{F0_MIN}, {F0_MAX}]"));
            }
            let mvf = f.log_mvf.exp();
            if !(MVF_MIN * (1.0 - 1e-9)..=MVF_MAX * (1.0 + 1e-9)).contains(&mvf) {
                return bad(&format!("mvf {mvf} Hz outside [{MVF_MIN}, {MVF_MAX}]"));
            }
        }
        Ok(())
    }

    /// Forces arbitrary (e.g. predicted) values into the valid domain:
    /// clamps F0 and MVF, sorts and spaces the LSPs, and replaces
    /// non-finite values.
    pub fn sanitize(&mut self) {
        let order = self.order();
        for f in &mut self.frames {
            if !f.gain.is_finite() {
                f.gain = GAIN_FLOOR;
            }
            f.log_f0 = if f.log_f0.is_finite() {
                f.log_f0
            } else {
                (F0_MIN * F0_MAX).sqrt().ln()
            }
            .clamp(F0_MIN.ln(), F0_MAX.ln());
            f.log_mvf = if f.log_mvf.is_finite() { f.log_mvf } else { MVF_MIN.ln() }.clamp(MVF_MIN.ln(), MVF_MAX.ln());
            f.lsp.resize(order, 0.0);
            for (k, w) in f.lsp.iter_mut().enumerate() {
                if !w.is_finite() {
                    *w = (k + 1) as f64 * PI / (order + 1) as f64;
                }
            }
            f.lsp.sort_by(f64::total_cmp);
            let mut prev = 0.0;
            for w in f.lsp.iter_mut() {
                *w = w.max(prev + MIN_LSP_GAP);
                prev = *w;
            }
            let mut next = PI;
            for w in f.lsp.iter_mut().rev() {
                *w = w.min(next - MIN_LSP_GAP);
                next = *w;
            }
        }
    }

    /// `T x (order + 3)` rows of `[gain, lsp..., log_f0, log_mvf]`.
    pub fn to_matrix(&self) -> Matrix {
        let rows: Vec<Vec<f64>> = self
            .frames
            .iter()
            .map(|f| {
                std::iter::once(f.gain)
                    .chain(f.lsp.iter().copied())
                    .chain([f.log_f0, f.log_mvf])
                    .collect()
            })
            .collect();
        if rows.is_empty() {
            return Matrix::zeros(0, 0);
        }
        Matrix::from_rows(&rows)
    }

    /// Inverse of [`to_matrix`](Self::to_matrix); does not validate.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.rows() > 0 && m.cols() < 4 {
            return Err(Error::InvalidParams(format!("{} columns is too few", m.cols())));
        }
        let c = m.cols();
        Ok(Self {
            frames: m
                .iter_rows()
                .map(|r| ContFrame {
                    gain: r[0],
                    lsp: r[1..c - 2].to_vec(),
                    log_f0: r[c - 2],
                    log_mvf: r[c - 1],
                })
                .collect(),
        })
    }
}

/// Writes a `CVP1` file: magic, `T` and `order` as little-endian u32, then
/// one f32 record `[gain, lsp x order, log_f0, log_mvf]` per frame.
pub fn write_params(p: &ContParams, path: &Path) -> Result<()> {
    let mut w = ByteWriter::default();
    w.magic(b"CVP1").u32(p.len() as u32).u32(p.order() as u32);
    for f in &p.frames {
        if f.lsp.len() != p.order() {
            return Err(Error::InvalidParams("frames have different orders".into()));
        }
        w.f32(f.gain as f32)
            .f32s(f.lsp.iter().map(|&v| v as f32))
            .f32(f.log_f0 as f32)
            .f32(f.log_mvf as f32);
    }
    w.save(path)
}

pub fn read_params(path: &Path) -> Result<ContParams> {
    let buf = read_file(path)?;
    let mut r = ByteReader::new(&buf, "CVP1");
    r.expect_magic(b"CVP1")?;
    let t = r.u32()? as usize;
    let order = r.u32()? as usize;
    let data = r.f32s(t * (order + 3))?;
    r.finish()?;
    let frames = data
        .chunks_exact(order + 3)
        .map(|c| ContFrame {
            gain: c[0] as f64,
            lsp: c[1..=order].iter().map(|&v| v as f64).collect(),
            log_f0: c[order + 1] as f64,
            log_mvf: c[order + 2] as f64,
        })
        .collect();
    Ok(ContParams { frames })
}
