use std::path::Path;

use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension zero-mean / unit-variance scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNormalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Dimensions whose standard deviation was floored.
    pub constant_dims: Vec<usize>,
}

impl FeatureNormalizer {
    /// Fits mean and population standard deviation over the rows of all
    /// training matrices.
    pub fn fit<'a, I>(mats: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Matrix>,
    {
        let mats: Vec<&Matrix> = mats.into_iter().collect();
        let dims = mats.first().map_or(0, |m| m.cols());
        if mats.iter().any(|m| m.cols() != dims) {
            return Err(Error::Invalid("feature matrices differ in dimension".into()));
        }
        let n: usize = mats.iter().map(|m| m.rows()).sum();
        if n < 2 {
            return Err(Error::Invalid(format!("need at least 2 training frames, got {n}")));
        }
        let mut mean = vec![0.0; dims];
        for row in mats.iter().flat_map(|m| m.iter_rows()) {
            for (a, v) in mean.iter_mut().zip(row) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= n as f64);
        let mut var = vec![0.0; dims];
        for row in mats.iter().flat_map(|m| m.iter_rows()) {
            for ((a, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                *a += (v - mu) * (v - mu);
            }
        }
        let mut constant_dims = Vec::new();
        let std = var
            .into_iter()
            .enumerate()
            .map(|(d, v)| {
                let s = (v / n as f64).sqrt();
                if s < STD_FLOOR {
                    constant_dims.push(d);
                    STD_FLOOR
                } else {
                    s
                }
            })
            .collect();
        if !constant_dims.is_empty() {
            log::warn!("constant feature dimensions {constant_dims:?}; std floored at {STD_FLOOR}");
        }
        Ok(Self {
            mean,
            std,
            constant_dims,
        })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, m: &Matrix) -> Result<()> {
        if m.cols() != self.dims() {
            return Err(Error::Invalid(format!(
                "normalizer has {} dims, features have {}",
                self.dims(),
                m.cols()
            )));
        }
        Ok(())
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn invert_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = *v * s + m;
        }
    }

    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        self.check(m)?;
        let mut out = m.clone();
        for r in 0..out.rows() {
            self.apply_row(out.row_mut(r));
        }
        Ok(out)
    }

    pub fn invert(&self, m: &Matrix) -> Result<Matrix> {
        self.check(m)?;
        let mut out = m.clone();
        for r in 0..out.rows() {
            self.invert_row(out.row_mut(r));
        }
        Ok(out)
    }

    pub(crate) fn encode(&self, w: &mut ByteWriter) {
        w.magic(b"NRM1")
            .u32(self.dims() as u32)
            .f32s(self.mean.iter().map(|&v| v as f32))
            .f32s(self.std.iter().map(|&v| v as f32));
    }

    pub(crate) fn decode(r: &mut ByteReader) -> Result<Self> {
        r.expect_magic(b"NRM1")?;
        let dims = r.u32()? as usize;
        let mean: Vec<f64> = r.f32s(dims)?.into_iter().map(f64::from).collect();
        let std: Vec<f64> = r.f32s(dims)?.into_iter().map(f64::from).collect();
        if std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Format("normalizer std must be positive".into()));
        }
        let constant_dims = std
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= STD_FLOOR)
            .map(|(d, _)| d)
            .collect();
        Ok(Self {
            mean,
            std,
            constant_dims,
        })
    }

    /// Writes the `NRM1` file: magic, `dims` (u32 LE), then `dims` f32 means
    /// and `dims` f32 standard deviations.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = ByteWriter::default();
        self.encode(&mut w);
        w.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = read_file(path)?;
        let mut r = ByteReader::new(&buf, "NRM1");
        let n = Self::decode(&mut r)?;
        r.finish()?;
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn two_point_case() {
        let m = Matrix::from_vec(2, 1, vec![1.0, 3.0]);
        let n = FeatureNormalizer::fit([&m]).unwrap();
        assert_eq!(n.mean, vec![2.0]);
        assert_eq!(n.std, vec![1.0]);
        assert_eq!(n.apply(&m).unwrap().as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_column_is_flagged() {
        let m = Matrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]);
        let n = FeatureNormalizer::fit([&m]).unwrap();
        assert_eq!(n.constant_dims, vec![1]);
        assert_eq!(n.std[1], STD_FLOOR);
        assert!(n.apply(&m).unwrap().column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_few_frames() {
        let m = Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]);
        assert!(FeatureNormalizer::fit([&m]).is_err());
    }

    #[test]
    fn training_set_statistics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = Matrix::from_vec(40, 5, (0..200).map(|_| rng.random_range(-3.0..7.0)).collect());
        let b = Matrix::from_vec(25, 5, (0..125).map(|_| rng.random_range(10.0..12.0)).collect());
        let n = FeatureNormalizer::fit([&a, &b]).unwrap();
        let (na, nb) = (n.apply(&a).unwrap(), n.apply(&b).unwrap());
        for d in 0..5 {
            let col: Vec<f64> = na.column(d).into_iter().chain(nb.column(d)).collect();
            let mu = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!(mu.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.nrm");
        let m = Matrix::from_rows(&[[0.5, 1.0], [1.5, -2.0], [4.0, 0.25]]);
        let n = FeatureNormalizer::fit([&m]).unwrap();
        n.save(&p).unwrap();
        let back = FeatureNormalizer::load(&p).unwrap();
        for (a, b) in n.mean.iter().zip(&back.mean) {
            assert_eq!(*a as f32, *b as f32);
        }
        assert_eq!(back.dims(), 2);
    }

    proptest::proptest! {
        #[test]
        fn apply_invert_identity(seed in proptest::num::u64::ANY, rows in 2usize..30, cols in 1usize..8) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-100.0..100.0)).collect());
            let n = FeatureNormalizer::fit([&m]).unwrap();
            let back = n.invert(&n.apply(&m).unwrap()).unwrap();
            for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
                proptest::prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
