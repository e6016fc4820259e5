use std::path::Path;

use rayon::prelude::*;

use super::UltrasoundSequence;
use crate::binio::{read_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::interp::{center_aligned, Taps};

pub const RESIZED_ROWS: usize = 64;
pub const RESIZED_COLS: usize = 128;

/// A 64x128 network input image with intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ResizedFrame {
    pub pixels: Vec<f64>,
}

impl ResizedFrame {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * RESIZED_COLS + c]
    }
}

/// Separable bicubic resize of a row-major `rows x cols` image to
/// `out_rows x out_cols`, without any clamping of the result.
pub fn resize_unclamped(src: &[f64], rows: usize, cols: usize, out_rows: usize, out_cols: usize) -> Result<Vec<f64>> {
    if rows < 4 || cols < 4 {
        return Err(Error::TooSmallInput { rows, cols });
    }
    assert_eq!(src.len(), rows * cols, "image buffer does not match its dimensions");

    let col_taps: Vec<Taps> = (0..out_cols)
        .map(|j| Taps::at(center_aligned(j, cols, out_cols), cols))
        .collect();
    let row_taps: Vec<Taps> = (0..out_rows)
        .map(|i| Taps::at(center_aligned(i, rows, out_rows), rows))
        .collect();

    // horizontal pass: rows x out_cols
    let mut tmp = vec![0.0; rows * out_cols];
    for r in 0..rows {
        let line = &src[r * cols..(r + 1) * cols];
        for (j, t) in col_taps.iter().enumerate() {
            tmp[r * out_cols + j] = t.apply(|c| line[c]);
        }
    }
    let mut out = vec![0.0; out_rows * out_cols];
    for (i, t) in row_taps.iter().enumerate() {
        for j in 0..out_cols {
            out[i * out_cols + j] = t.apply(|r| tmp[r * out_cols + j]);
        }
    }
    Ok(out)
}

/// Resizes one ultrasound frame to 64x128, scales by 1/255 and clamps to [0, 1].
pub fn resize_bicubic(frame: &[u8], num_vectors: usize, pix_per_vector: usize) -> Result<ResizedFrame> {
    let src: Vec<f64> = frame.iter().map(|&b| b as f64).collect();
    let out = resize_unclamped(&src, num_vectors, pix_per_vector, RESIZED_ROWS, RESIZED_COLS)?;
    Ok(ResizedFrame {
        pixels: out.into_iter().map(|v| (v / 255.0).clamp(0.0, 1.0)).collect(),
    })
}

impl UltrasoundSequence {
    /// Resizes every frame, in parallel.
    pub fn resized(&self) -> Result<Vec<ResizedFrame>> {
        let (nv, ppv) = (self.num_vectors, self.pix_per_vector);
        (0..self.len())
            .into_par_iter()
            .map(|i| resize_bicubic(self.frame(i), nv, ppv))
            .collect()
    }
}

/// Writes the `FRM1` file: magic, `T`, rows, cols (u32 LE), then `T`
/// row-major frames as f32.
pub fn write_frames(frames: &[ResizedFrame], path: &Path) -> Result<()> {
    let mut w = ByteWriter::default();
    w.magic(b"FRM1")
        .u32(frames.len() as u32)
        .u32(RESIZED_ROWS as u32)
        .u32(RESIZED_COLS as u32);
    for f in frames {
        w.f32s(f.pixels.iter().map(|&v| v as f32));
    }
    w.save(path)
}

pub fn read_frames(path: &Path) -> Result<Vec<ResizedFrame>> {
    let buf = read_file(path)?;
    let mut r = ByteReader::new(&buf, "FRM1");
    r.expect_magic(b"FRM1")?;
    let t = r.u32()? as usize;
    let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
    if (rows, cols) != (RESIZED_ROWS, RESIZED_COLS) {
        return Err(Error::Format(format!(
            "FRM1: frames are {rows}x{cols}, expected 64x128"
        )));
    }
    let frames = (0..t)
        .map(|_| {
            r.f32s(rows * cols).map(|v| ResizedFrame {
                pixels: v.into_iter().map(f64::from).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::keys_kernel;
    use rand::{Rng, SeedableRng};

    /// Direct 2-D evaluation of the cubic convolution sum at one output pixel.
    fn oracle(src: &[f64], rows: usize, cols: usize, i: usize, j: usize) -> f64 {
        let y = (i as f64 + 0.5) * rows as f64 / RESIZED_ROWS as f64 - 0.5;
        let x = (j as f64 + 0.5) * cols as f64 / RESIZED_COLS as f64 - 0.5;
        let mut acc = 0.0;
        for r in (y.floor() as i64 - 3)..=(y.floor() as i64 + 3) {
            let ky = keys_kernel(y - r as f64);
            if ky == 0.0 {
                continue;
            }
            for c in (x.floor() as i64 - 3)..=(x.floor() as i64 + 3) {
                let kx = keys_kernel(x - c as f64);
                let rr = r.clamp(0, rows as i64 - 1) as usize;
                let cc = c.clamp(0, cols as i64 - 1) as usize;
                acc += ky * kx * src[rr * cols + cc];
            }
        }
        acc
    }

    #[test]
    fn constant_image() {
        let f = vec![128u8; 64 * 842];
        let out = resize_bicubic(&f, 64, 842).unwrap();
        assert_eq!(out.pixels.len(), RESIZED_ROWS * RESIZED_COLS);
        for v in out.pixels {
            assert!((v - 128.0 / 255.0).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_ramp_stays_linear() {
        let (rows, cols) = (64, 842);
        let src: Vec<f64> = (0..rows * cols).map(|k| 0.25 * (k % cols) as f64).collect();
        let out = resize_unclamped(&src, rows, cols, RESIZED_ROWS, RESIZED_COLS).unwrap();
        let step = out[1] - out[0];
        for i in 0..RESIZED_ROWS {
            for j in 0..RESIZED_COLS {
                let expect = out[0] + step * j as f64;
                assert!((out[i * RESIZED_COLS + j] - expect).abs() < 1e-6);
            }
        }
        assert!((step - 0.25 * 842.0 / 128.0).abs() < 1e-9);
    }

    #[test]
    fn matches_direct_kernel_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (rows, cols) = (64, 842);
        let f: Vec<u8> = (0..rows * cols).map(|_| rng.random()).collect();
        let src: Vec<f64> = f.iter().map(|&b| b as f64).collect();
        let out = resize_unclamped(&src, rows, cols, RESIZED_ROWS, RESIZED_COLS).unwrap();
        for i in 0..RESIZED_ROWS {
            for j in 0..RESIZED_COLS {
                let o = oracle(&src, rows, cols, i, j);
                assert!((out[i * RESIZED_COLS + j] - o).abs() < 1e-9, "pixel {i},{j}");
            }
        }
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            resize_bicubic(&[0; 12], 3, 4),
            Err(Error::TooSmallInput { rows: 3, cols: 4 })
        ));
    }

    proptest::proptest! {
        #[test]
        fn commutes_with_affine_maps(seed in 0u64..1000, a in -3.0f64..3.0, b in -50.0f64..50.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (rows, cols) = (9, 23);
            let x: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(0.0..255.0)).collect();
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let rx = resize_unclamped(&x, rows, cols, 16, 32).unwrap();
            let ry = resize_unclamped(&y, rows, cols, 16, 32).unwrap();
            for (u, v) in rx.iter().zip(&ry) {
                proptest::prop_assert!((a * u + b - v).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn frames_file_round_trip() {
        let frames: Vec<ResizedFrame> = (0..3)
            .map(|t| ResizedFrame {
                pixels: (0..RESIZED_ROWS * RESIZED_COLS)
                    .map(|i| ((i + t) % 255) as f64 / 255.0)
                    .collect(),
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.frm");
        write_frames(&frames, &p).unwrap();
        let back = read_frames(&p).unwrap();
        for (a, b) in frames.iter().zip(&back) {
            for (x, y) in a.pixels.iter().zip(&b.pixels) {
                assert_eq!(*y, *x as f32 as f64);
            }
        }
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_frames(&p), Err(Error::Format(_))));
    }
}
