use alloc::vec;

use super::{check_rank, Graph, Op, Sink, Var};
use crate::{Error, Result, Scalar, Tensor};

const NORM_EPS: f64 = 1e-5;

impl<T: Scalar> Graph<T> {
    /// Layer normalisation across the channel axis of `[B, C, T]`, applied
    /// independently at every time step, followed by a per-channel affine map.
    pub fn channel_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let xv = self.val(x);
        check_rank("channel_norm", xv.shape(), 3)?;
        let (b, c, t) = (xv.dim(0), xv.dim(1), xv.dim(2));
        for p in [gain, bias] {
            if self.val(p).numel() != c {
                return Err(Error::ShapeMismatch {
                    op: "channel_norm",
                    dim: "affine parameter length",
                    expected: c,
                    got: self.val(p).numel(),
                });
            }
        }
        let gs = self.val(gain).data();
        let bs = self.val(bias).data();
        let xs = xv.data();
        let inv_c = T::one() / T::of(c as f64);
        let eps = T::of(NORM_EPS);
        let mut xhat = vec![T::zero(); xs.len()];
        let mut inv_std = vec![T::zero(); b * t];
        let mut out = vec![T::zero(); xs.len()];
        let mut mean = vec![T::zero(); t];
        let mut var = vec![T::zero(); t];
        for bi in 0..b {
            let block = &xs[bi * c * t..(bi + 1) * c * t];
            mean.iter_mut().for_each(|v| *v = T::zero());
            var.iter_mut().for_each(|v| *v = T::zero());
            for row in block.chunks(t) {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m = *m + v;
                }
            }
            mean.iter_mut().for_each(|m| *m = *m * inv_c);
            for row in block.chunks(t) {
                for ((s, &m), &v) in var.iter_mut().zip(&mean).zip(row) {
                    let d = v - m;
                    *s = *s + d * d;
                }
            }
            let istd = &mut inv_std[bi * t..(bi + 1) * t];
            for (is, &s) in istd.iter_mut().zip(&var) {
                *is = T::one() / (s * inv_c + eps).sqrt();
            }
            for ci in 0..c {
                let off = (bi * c + ci) * t;
                for ti in 0..t {
                    let h = (block[ci * t + ti] - mean[ti]) * istd[ti];
                    xhat[off + ti] = h;
                    out[off + ti] = h * gs[ci] + bs[ci];
                }
            }
        }
        Ok(self.push(
            Tensor::from_parts(xv.shape().to_vec(), out),
            Op::ChannelNorm {
                input: x.0,
                gain: gain.0,
                bias: bias.0,
                xhat,
                inv_std,
            },
            &[x.0, gain.0, bias.0],
        ))
    }
}

pub(super) fn channel_norm_backward<T: Scalar>(
    input: usize,
    gain: usize,
    bias: usize,
    xhat: &[T],
    inv_std: &[T],
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let shape = sink.value(input).shape();
    let (b, c, t) = (shape[0], shape[1], shape[2]);
    let gs = sink.value(gain).data();
    if let Some(db) = sink.acc(bias) {
        for bi in 0..b {
            for (ci, d) in db.iter_mut().enumerate() {
                let mut s = T::zero();
                for &v in &g[(bi * c + ci) * t..(bi * c + ci + 1) * t] {
                    s = s + v;
                }
                *d = *d + s;
            }
        }
    }
    if let Some(dg) = sink.acc(gain) {
        for bi in 0..b {
            for (ci, d) in dg.iter_mut().enumerate() {
                let off = (bi * c + ci) * t;
                let mut s = T::zero();
                for (&gv, &h) in g[off..off + t].iter().zip(&xhat[off..off + t]) {
                    s = s + gv * h;
                }
                *d = *d + s;
            }
        }
    }
    if let Some(dx) = sink.acc(input) {
        let inv_c = T::one() / T::of(c as f64);
        let mut m1 = vec![T::zero(); t];
        let mut m2 = vec![T::zero(); t];
        for bi in 0..b {
            m1.iter_mut().for_each(|v| *v = T::zero());
            m2.iter_mut().for_each(|v| *v = T::zero());
            for ci in 0..c {
                let off = (bi * c + ci) * t;
                for ti in 0..t {
                    let dh = g[off + ti] * gs[ci];
                    m1[ti] = m1[ti] + dh;
                    m2[ti] = m2[ti] + dh * xhat[off + ti];
                }
            }
            let istd = &inv_std[bi * t..(bi + 1) * t];
            for ci in 0..c {
                let off = (bi * c + ci) * t;
                for ti in 0..t {
                    let dh = g[off + ti] * gs[ci];
                    let v = istd[ti] * (dh - m1[ti] * inv_c - xhat[off + ti] * m2[ti] * inv_c);
                    dx[off + ti] = dx[off + ti] + v;
                }
            }
        }
    }
}
