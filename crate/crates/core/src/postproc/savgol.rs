use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::reflect_index;
use crate::linalg::solve;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingConfig {
    pub window: usize,
    pub order: usize,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self { window: 5, order: 3 }
    }
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window.is_multiple_of(2) || self.order >= self.window {
            return Err(Error::Invalid(format!(
                "Savitzky-Golay window {} must be odd and larger than order {}",
                self.window, self.order
            )));
        }
        Ok(())
    }
}

/// Center-point smoothing weights of a least-squares polynomial fit of
/// degree `order` over `window` samples.
pub fn savgol_coefficients(cfg: &SmoothingConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let half = (cfg.window / 2) as i64;
    let p = cfg.order + 1;
    // normal equations of the Vandermonde system; the smoothed value is the
    // fitted constant term
    let mut gram = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            gram[i * p + j] = (-half..=half).map(|x| (x as f64).powi((i + j) as i32)).sum();
        }
    }
    let mut e0 = vec![0.0; p];
    e0[0] = 1.0;
    let row = solve(&gram, &e0).ok_or_else(|| Error::Invalid("singular Savitzky-Golay system".into()))?;
    Ok((-half..=half)
        .map(|x| (0..p).map(|k| row[k] * (x as f64).powi(k as i32)).sum())
        .collect())
}

/// Smooths every column along time with mirrored edges.
pub fn savgol_smooth(m: &Matrix, cfg: &SmoothingConfig) -> Result<Matrix> {
    let h = savgol_coefficients(cfg)?;
    let t = m.rows();
    if t < cfg.window {
        return Err(Error::TooShort {
            needed: cfg.window,
            got: t,
        });
    }
    let half = (cfg.window / 2) as isize;
    let rows: Vec<Vec<f64>> = (0..t)
        .into_par_iter()
        .map(|i| {
            (0..m.cols())
                .map(|c| {
                    h.iter()
                        .enumerate()
                        .map(|(k, w)| w * m.get(reflect_index(i as isize + k as isize - half, t), c))
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(Matrix::from_rows(&rows))
}
