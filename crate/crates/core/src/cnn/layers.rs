//! Single-sample kernels. Feature maps are channel-major `[c, h, w]`.

use super::scalar::{matmul, Scalar};

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

pub fn swish<T: Scalar>(x: T) -> T {
    x * sigmoid(x)
}

pub fn swish_grad<T: Scalar>(x: T) -> T {
    let s = sigmoid(x);
    s + x * s * (T::one() - s)
}

/// Geometry of a same-padded square convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvShape {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub h: usize,
    pub w: usize,
}

impl ConvShape {
    pub fn patch(&self) -> usize {
        self.cin * self.k * self.k
    }

    pub fn pixels(&self) -> usize {
        self.h * self.w
    }

    pub fn weights(&self) -> usize {
        self.cout * self.patch()
    }

    /// Unfolds `x` into a `[cin*k*k, h*w]` patch matrix, zero outside the image.
    pub fn im2col<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let (h, w, k) = (self.h, self.w, self.k);
        let pad = k / 2;
        let mut col = vec![T::zero(); self.patch() * self.pixels()];
        for c in 0..self.cin {
            let plane = &x[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = &mut col[((c * k + ki) * k + kj) * h * w..][..h * w];
                    // output columns whose source column is inside the image
                    let x0 = pad.saturating_sub(kj);
                    let x1 = (w + pad).saturating_sub(kj).min(w);
                    for y in 0..h {
                        let sy = y + ki;
                        if sy < pad || sy - pad >= h || x0 >= x1 {
                            continue;
                        }
                        let src = &plane[(sy - pad) * w..][..w];
                        let dst = &mut row[y * w..][..w];
                        for xo in x0..x1 {
                            dst[xo] = src[xo + kj - pad];
                        }
                    }
                }
            }
        }
        col
    }

    /// Adjoint of [`im2col`](Self::im2col): scatters patch gradients back.
    pub fn col2im<T: Scalar>(&self, col: &[T]) -> Vec<T> {
        let (h, w, k) = (self.h, self.w, self.k);
        let pad = k / 2;
        let mut x = vec![T::zero(); self.cin * h * w];
        for c in 0..self.cin {
            let plane = &mut x[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = &col[((c * k + ki) * k + kj) * h * w..][..h * w];
                    let x0 = pad.saturating_sub(kj);
                    let x1 = (w + pad).saturating_sub(kj).min(w);
                    for y in 0..h {
                        let sy = y + ki;
                        if sy < pad || sy - pad >= h || x0 >= x1 {
                            continue;
                        }
                        let dst = &mut plane[(sy - pad) * w..][..w];
                        let src = &row[y * w..][..w];
                        for xo in x0..x1 {
                            dst[xo + kj - pad] = dst[xo + kj - pad] + src[xo];
                        }
                    }
                }
            }
        }
        x
    }

    pub fn forward<T: Scalar>(&self, weight: &[T], bias: &[T], x: &[T]) -> Vec<T> {
        let col = self.im2col(x);
        let hw = self.pixels();
        let mut y = vec![T::zero(); self.cout * hw];
        for (o, b) in bias.iter().enumerate() {
            y[o * hw..(o + 1) * hw].fill(*b);
        }
        matmul(
            self.cout,
            self.patch(),
            hw,
            weight,
            false,
            &col,
            false,
            T::one(),
            &mut y,
        );
        y
    }

    /// Returns `(dW, db, dx)`; `dx` is skipped when not needed.
    pub fn backward<T: Scalar>(
        &self,
        weight: &[T],
        x: &[T],
        dy: &[T],
        need_dx: bool,
    ) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
        let col = self.im2col(x);
        let hw = self.pixels();
        let db = dy
            .chunks_exact(hw)
            .map(|r| r.iter().fold(T::zero(), |a, &v| a + v))
            .collect();
        let mut dw = vec![T::zero(); self.weights()];
        matmul(self.cout, hw, self.patch(), dy, false, &col, true, T::zero(), &mut dw);
        let dx = need_dx.then(|| {
            let mut dcol = vec![T::zero(); self.patch() * hw];
            matmul(
                self.patch(),
                self.cout,
                hw,
                weight,
                true,
                dy,
                false,
                T::zero(),
                &mut dcol,
            );
            self.col2im(&dcol)
        });
        (dw, db, dx)
    }
}

/// 2x2 max pooling with stride 2. Returns the pooled map and, per output,
/// the flat input index of its maximum (first one on ties).
pub(crate) fn maxpool<T: Scalar>(x: &[T], c: usize, h: usize, w: usize) -> (Vec<T>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut y = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for i in 0..oh {
            for j in 0..ow {
                let base = ch * h * w + 2 * i * w + 2 * j;
                let mut best = base;
                for idx in [base + 1, base + w, base + w + 1] {
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                y.push(x[best]);
                arg.push(best as u32);
            }
        }
    }
    (y, arg)
}

pub(crate) fn maxpool_backward<T: Scalar>(dy: &[T], arg: &[u32], input_len: usize) -> Vec<T> {
    let mut dx = vec![T::zero(); input_len];
    for (g, &i) in dy.iter().zip(arg) {
        dx[i as usize] = dx[i as usize] + *g;
    }
    dx
}
