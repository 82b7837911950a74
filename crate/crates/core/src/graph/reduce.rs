use alloc::vec;
use alloc::vec::Vec;

use super::{split_axis, Graph, Op, Sink, Var};
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    Max,
}

impl<T: Scalar> Graph<T> {
    /// Reduces `axis` away. A rank-1 input reduces to shape `[1]`.
    pub fn reduce(&mut self, op: ReduceOp, a: Var, axis: usize) -> Result<Var> {
        let x = self.val(a);
        let rank = x.rank();
        if axis >= rank {
            return Err(Error::AxisOutOfRange {
                op: "reduce",
                axis,
                rank,
            });
        }
        let (outer, n, inner) = split_axis(x.shape(), axis);
        let xs = x.data();
        let mut out = vec![T::zero(); outer * inner];
        let mut argmax = Vec::new();
        match op {
            ReduceOp::Sum | ReduceOp::Mean => {
                for o in 0..outer {
                    let dst = &mut out[o * inner..(o + 1) * inner];
                    for k in 0..n {
                        let src = &xs[(o * n + k) * inner..(o * n + k + 1) * inner];
                        for (d, &s) in dst.iter_mut().zip(src) {
                            *d = *d + s;
                        }
                    }
                }
                if op == ReduceOp::Mean {
                    let inv = T::one() / T::of(n as f64);
                    out.iter_mut().for_each(|v| *v = *v * inv);
                }
            }
            ReduceOp::Max => {
                argmax = vec![0; outer * inner];
                for o in 0..outer {
                    for i in 0..inner {
                        let mut best = 0;
                        let mut bv = xs[o * n * inner + i];
                        for k in 1..n {
                            let v = xs[(o * n + k) * inner + i];
                            if v > bv {
                                bv = v;
                                best = k;
                            }
                        }
                        out[o * inner + i] = bv;
                        argmax[o * inner + i] = best;
                    }
                }
            }
        }
        let mut shape: Vec<usize> = x.shape().to_vec();
        shape.remove(axis);
        if shape.is_empty() {
            shape.push(1);
        }
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Reduce {
                op,
                input: a.0,
                axis,
                argmax,
            },
            &[a.0],
        ))
    }

    pub fn sum(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.reduce(ReduceOp::Sum, a, axis)
    }

    pub fn mean(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.reduce(ReduceOp::Mean, a, axis)
    }

    pub fn max(&mut self, a: Var, axis: usize) -> Result<Var> {
        self.reduce(ReduceOp::Max, a, axis)
    }

    /// Sum of every element, shape `[1]`.
    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        self.reduce_all(a, false)
    }

    /// Mean of every element, shape `[1]`.
    pub fn mean_all(&mut self, a: Var) -> Result<Var> {
        self.reduce_all(a, true)
    }

    fn reduce_all(&mut self, a: Var, mean: bool) -> Result<Var> {
        let x = self.val(a);
        let mut s = T::zero();
        for &v in x.data() {
            s = s + v;
        }
        if mean {
            s = s / T::of(x.numel() as f64);
        }
        Ok(self.push(
            Tensor::scalar(s),
            Op::ReduceAll { mean, input: a.0 },
            &[a.0],
        ))
    }
}

pub(super) fn reduce_backward<T: Scalar>(
    op: ReduceOp,
    input: usize,
    axis: usize,
    argmax: &[usize],
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let shape = sink.value(input).shape();
    let (outer, n, inner) = split_axis(shape, axis);
    let Some(dst) = sink.acc(input) else {
        return;
    };
    match op {
        ReduceOp::Sum | ReduceOp::Mean => {
            let scale = if op == ReduceOp::Mean {
                T::one() / T::of(n as f64)
            } else {
                T::one()
            };
            for o in 0..outer {
                let src = &g[o * inner..(o + 1) * inner];
                for k in 0..n {
                    let d = &mut dst[(o * n + k) * inner..(o * n + k + 1) * inner];
                    for (d, &s) in d.iter_mut().zip(src) {
                        *d = *d + s * scale;
                    }
                }
            }
        }
        ReduceOp::Max => {
            for o in 0..outer {
                for i in 0..inner {
                    let k = argmax[o * inner + i];
                    let d = &mut dst[(o * n + k) * inner + i];
                    *d = *d + g[o * inner + i];
                }
            }
        }
    }
}

pub(super) fn reduce_all_backward<T: Scalar>(
    mean: bool,
    input: usize,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let Some(dst) = sink.acc(input) else {
        return;
    };
    let v = if mean {
        g[0] / T::of(dst.len() as f64)
    } else {
        g[0]
    };
    dst.iter_mut().for_each(|d| *d = *d + v);
}
