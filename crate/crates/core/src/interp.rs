//! Cubic convolution (Keys, a = -0.5) used for both image resizing and
//! frame-rate conversion of feature sequences.

pub const KEYS_A: f64 = -0.5;

/// The Keys cubic convolution kernel.
pub fn keys_kernel(x: f64) -> f64 {
    let a = KEYS_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Four source taps (edge-clamped indices) and their weights for one output
/// sample.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Taps {
    pub idx: [usize; 4],
    pub w: [f64; 4],
}

impl Taps {
    pub fn at(pos: f64, len: usize) -> Self {
        let base = pos.floor();
        let frac = pos - base;
        let base = base as isize;
        let last = len as isize - 1;
        let mut idx = [0usize; 4];
        let mut w = [0.0; 4];
        for k in 0..4 {
            let i = base - 1 + k as isize;
            idx[k] = i.clamp(0, last) as usize;
            w[k] = keys_kernel(frac - (k as f64 - 1.0));
        }
        Taps { idx, w }
    }

    #[inline]
    pub fn apply(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.w.iter().zip(self.idx.iter()).map(|(w, &i)| w * f(i)).sum()
    }
}

/// Source coordinate of output sample `j` when mapping `src_len` samples onto
/// `dst_len` with pixel-center alignment.
pub(crate) fn center_aligned(j: usize, src_len: usize, dst_len: usize) -> f64 {
    let scale = src_len as f64 / dst_len as f64;
    (j as f64 + 0.5) * scale - 0.5
}
