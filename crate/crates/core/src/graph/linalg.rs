use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{gemm, transpose};
use super::{Graph, Op, Sink, Var};
use crate::{Error, Result, Scalar, Tensor};

/// (batch, rows, cols) view of a rank-2 or rank-3 shape.
fn mat_dims(op: &'static str, shape: &[usize]) -> Result<(usize, usize, usize)> {
    match *shape {
        [r, c] => Ok((1, r, c)),
        [b, r, c] => Ok((b, r, c)),
        _ => Err(Error::Rank {
            op,
            expected: 3,
            shape: shape.to_vec(),
        }),
    }
}

impl<T: Scalar> Graph<T> {
    /// Swaps the last two axes of a rank-2 or rank-3 tensor.
    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let x = self.val(a);
        let (b, r, c) = mat_dims("transpose", x.shape())?;
        let mut data = Vec::with_capacity(x.numel());
        for bi in 0..b {
            data.extend(transpose(&x.data()[bi * r * c..(bi + 1) * r * c], r, c));
        }
        let mut shape = x.shape().to_vec();
        let n = shape.len();
        shape.swap(n - 2, n - 1);
        Ok(self.push(
            Tensor::from_parts(shape, data),
            Op::Transpose { input: a.0 },
            &[a.0],
        ))
    }

    /// Batched matrix product `[B, n, k] × [B, k, m] → [B, n, m]` (rank 2 is
    /// treated as a batch of one).
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let x = self.val(a);
        let y = self.val(b);
        let (ba, n, k) = mat_dims("matmul", x.shape())?;
        let (bb, k2, m) = mat_dims("matmul", y.shape())?;
        if x.rank() != y.rank() || ba != bb {
            return Err(Error::Incompatible {
                op: "matmul",
                lhs: x.shape().to_vec(),
                rhs: y.shape().to_vec(),
            });
        }
        if k != k2 {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                dim: "inner dimension",
                expected: k,
                got: k2,
            });
        }
        let mut out = vec![T::zero(); ba * n * m];
        for bi in 0..ba {
            gemm(
                &x.data()[bi * n * k..(bi + 1) * n * k],
                &y.data()[bi * k * m..(bi + 1) * k * m],
                &mut out[bi * n * m..(bi + 1) * n * m],
                n,
                k,
                m,
            );
        }
        let shape = if x.rank() == 2 {
            vec![n, m]
        } else {
            vec![ba, n, m]
        };
        self.macs += (ba * n * k * m) as u64;
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::MatMul { lhs: a.0, rhs: b.0 },
            &[a.0, b.0],
        ))
    }

    /// Softmax over the last axis, stabilised by subtracting the row maximum.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let x = self.val(a);
        let n = *x.shape().last().expect("tensor rank >= 1");
        let mut out = x.data().to_vec();
        for row in out.chunks_mut(n) {
            let mx = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
            let mut s = T::zero();
            for v in row.iter_mut() {
                *v = (*v - mx).exp();
                s = s + *v;
            }
            let inv = T::one() / s;
            row.iter_mut().for_each(|v| *v = *v * inv);
        }
        Ok(self.push(
            Tensor::from_parts(x.shape().to_vec(), out),
            Op::Softmax { input: a.0 },
            &[a.0],
        ))
    }
}

pub(super) fn transpose_backward<T: Scalar>(input: usize, g: &[T], sink: &mut Sink<'_, T>) {
    let shape = sink.value(input).shape();
    let (b, r, c) = match *shape {
        [r, c] => (1, r, c),
        [b, r, c] => (b, r, c),
        _ => unreachable!(),
    };
    let Some(dst) = sink.acc(input) else {
        return;
    };
    for bi in 0..b {
        let gb = &g[bi * r * c..(bi + 1) * r * c];
        let db = &mut dst[bi * r * c..(bi + 1) * r * c];
        // g is laid out [c, r]
        for ri in 0..r {
            for ci in 0..c {
                db[ri * c + ci] = db[ri * c + ci] + gb[ci * r + ri];
            }
        }
    }
}

pub(super) fn matmul_backward<T: Scalar>(lhs: usize, rhs: usize, g: &[T], sink: &mut Sink<'_, T>) {
    let x = sink.value(lhs);
    let y = sink.value(rhs);
    let (b, n, k) = match *x.shape() {
        [r, c] => (1, r, c),
        [b, r, c] => (b, r, c),
        _ => unreachable!(),
    };
    let m = *y.shape().last().unwrap();
    if let Some(dx) = sink.acc(lhs) {
        // dX = G · Yᵀ
        for bi in 0..b {
            let yt = transpose(&y.data()[bi * k * m..(bi + 1) * k * m], k, m);
            gemm(
                &g[bi * n * m..(bi + 1) * n * m],
                &yt,
                &mut dx[bi * n * k..(bi + 1) * n * k],
                n,
                m,
                k,
            );
        }
    }
    if let Some(dy) = sink.acc(rhs) {
        // dY = Xᵀ · G
        for bi in 0..b {
            let xt = transpose(&x.data()[bi * n * k..(bi + 1) * n * k], n, k);
            gemm(
                &xt,
                &g[bi * n * m..(bi + 1) * n * m],
                &mut dy[bi * k * m..(bi + 1) * k * m],
                k,
                n,
                m,
            );
        }
    }
}

pub(super) fn softmax_backward<T: Scalar>(
    input: usize,
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let Some(dst) = sink.acc(input) else {
        return;
    };
    let n = *out.shape().last().unwrap();
    for ((d, y), gr) in dst.chunks_mut(n).zip(out.data().chunks(n)).zip(g.chunks(n)) {
        let mut dot = T::zero();
        for (&yv, &gv) in y.iter().zip(gr) {
            dot = dot + yv * gv;
        }
        for ((dv, &yv), &gv) in d.iter_mut().zip(y).zip(gr) {
            *dv = *dv + yv * (gv - dot);
        }
    }
}
