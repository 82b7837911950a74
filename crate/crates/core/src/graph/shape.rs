use alloc::vec::Vec;

use super::{add_into, split_axis, Graph, Op, Sink, Var};
use crate::{Error, Result, Scalar, Tensor};

/// Source position of output sample `j` for endpoint-aligned resampling from
/// `src` to `dst` samples: (left index, right weight).
#[inline]
fn interp_coord(j: usize, src: usize, dst: usize) -> (usize, f64) {
    if dst == 1 || src == 1 {
        return (0, 0.0);
    }
    let num = j * (src - 1);
    let den = dst - 1;
    let i0 = num / den;
    let frac = (num % den) as f64 / den as f64;
    if i0 >= src - 1 {
        (src - 1, 0.0)
    } else {
        (i0, frac)
    }
}

impl<T: Scalar> Graph<T> {
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let x = self.val(a);
        let n: usize = shape.iter().product();
        if n != x.numel() || shape.contains(&0) {
            return Err(Error::Incompatible {
                op: "reshape",
                lhs: x.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        let value = Tensor::from_parts(shape.to_vec(), x.data().to_vec());
        Ok(self.push(value, Op::Reshape { input: a.0 }, &[a.0]))
    }

    /// Endpoint-aligned linear resampling of the last axis to `target_len`
    /// samples. The first and last samples are preserved, and equal lengths
    /// give an exact copy.
    pub fn interpolate_linear(&mut self, a: Var, target_len: usize) -> Result<Var> {
        if target_len == 0 {
            return Err(Error::invalid(
                "interpolate_linear: target length must be >= 1",
            ));
        }
        let x = self.val(a);
        let src = *x.shape().last().expect("rank >= 1");
        let rows = x.numel() / src;
        let mut out = Vec::with_capacity(rows * target_len);
        for row in x.data().chunks(src) {
            if src == target_len {
                out.extend_from_slice(row);
                continue;
            }
            for j in 0..target_len {
                let (i0, f) = interp_coord(j, src, target_len);
                if f == 0.0 {
                    out.push(row[i0]);
                } else {
                    let f = T::of(f);
                    out.push(row[i0] * (T::one() - f) + row[i0 + 1] * f);
                }
            }
        }
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = target_len;
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Interpolate { input: a.0 },
            &[a.0],
        ))
    }

    /// Keeps every `step`-th sample of the last axis, starting at 0.
    pub fn subsample_last(&mut self, a: Var, step: usize) -> Result<Var> {
        if step == 0 {
            return Err(Error::invalid("subsample_last: step must be >= 1"));
        }
        let x = self.val(a);
        let src = *x.shape().last().unwrap();
        let dst = src.div_ceil(step);
        let mut out = Vec::with_capacity(x.numel() / src * dst);
        for row in x.data().chunks(src) {
            out.extend(row.iter().step_by(step).copied());
        }
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = dst;
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Subsample { input: a.0, step },
            &[a.0],
        ))
    }

    /// Repeats a trailing axis of extent 1 `n` times.
    pub fn repeat_last(&mut self, a: Var, n: usize) -> Result<Var> {
        let x = self.val(a);
        if *x.shape().last().unwrap() != 1 || n == 0 {
            return Err(Error::ShapeMismatch {
                op: "repeat_last",
                dim: "last axis",
                expected: 1,
                got: *x.shape().last().unwrap(),
            });
        }
        let mut out = Vec::with_capacity(x.numel() * n);
        for &v in x.data() {
            out.extend(core::iter::repeat_n(v, n));
        }
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = n;
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::RepeatLast { input: a.0 },
            &[a.0],
        ))
    }

    /// `len` consecutive entries of `axis` starting at `start`.
    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let x = self.val(a);
        if axis >= x.rank() {
            return Err(Error::AxisOutOfRange {
                op: "slice",
                axis,
                rank: x.rank(),
            });
        }
        let (outer, n, inner) = split_axis(x.shape(), axis);
        if len == 0 || start + len > n {
            return Err(Error::ShapeMismatch {
                op: "slice",
                dim: "slice end",
                expected: n,
                got: start + len,
            });
        }
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            out.extend_from_slice(
                &x.data()[(o * n + start) * inner..(o * n + start + len) * inner],
            );
        }
        let mut shape = x.shape().to_vec();
        shape[axis] = len;
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Slice {
                input: a.0,
                axis,
                start,
            },
            &[a.0],
        ))
    }

    /// Concatenates along `axis`; all other extents must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = self.val(
            *parts
                .first()
                .ok_or_else(|| Error::invalid("concat: no inputs"))?,
        );
        if axis >= first.rank() {
            return Err(Error::AxisOutOfRange {
                op: "concat",
                axis,
                rank: first.rank(),
            });
        }
        let mut shape = first.shape().to_vec();
        let mut total = 0;
        for &p in parts {
            let s = self.val(p).shape();
            let same_rest = s.len() == shape.len()
                && s.iter()
                    .zip(&shape)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !same_rest {
                return Err(Error::Incompatible {
                    op: "concat",
                    lhs: shape.clone(),
                    rhs: s.to_vec(),
                });
            }
            total += s[axis];
        }
        shape[axis] = total;
        let (outer, _, inner) = split_axis(&shape, axis);
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &p in parts {
                let v = self.val(p);
                let n = v.dim(axis);
                out.extend_from_slice(&v.data()[o * n * inner..(o + 1) * n * inner]);
            }
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.0).collect();
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::Concat {
                inputs: ids.clone(),
                axis,
            },
            &ids,
        ))
    }

    /// Appends `after` zeros to the last axis.
    pub fn pad_last(&mut self, a: Var, after: usize) -> Result<Var> {
        let x = self.val(a);
        let src = *x.shape().last().unwrap();
        let mut out = Vec::with_capacity(x.numel() / src * (src + after));
        for row in x.data().chunks(src) {
            out.extend_from_slice(row);
            out.extend(core::iter::repeat_n(T::zero(), after));
        }
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = src + after;
        Ok(self.push(
            Tensor::from_parts(shape, out),
            Op::PadLast { input: a.0 },
            &[a.0],
        ))
    }
}

pub(super) fn interpolate_backward<T: Scalar>(
    input: usize,
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let src = *sink.value(input).shape().last().unwrap();
    let dst_len = *out.shape().last().unwrap();
    let Some(dst) = sink.acc(input) else {
        return;
    };
    for (d, gr) in dst.chunks_mut(src).zip(g.chunks(dst_len)) {
        if src == dst_len {
            add_into(d, gr);
            continue;
        }
        for (j, &gv) in gr.iter().enumerate() {
            let (i0, f) = interp_coord(j, src, dst_len);
            if f == 0.0 {
                d[i0] = d[i0] + gv;
            } else {
                let f = T::of(f);
                d[i0] = d[i0] + gv * (T::one() - f);
                d[i0 + 1] = d[i0 + 1] + gv * f;
            }
        }
    }
}

pub(super) fn subsample_backward<T: Scalar>(
    input: usize,
    step: usize,
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let src = *sink.value(input).shape().last().unwrap();
    let n = *out.shape().last().unwrap();
    let Some(dst) = sink.acc(input) else {
        return;
    };
    for (d, gr) in dst.chunks_mut(src).zip(g.chunks(n)) {
        for (dv, &gv) in d.iter_mut().step_by(step).zip(gr) {
            *dv = *dv + gv;
        }
    }
}

pub(super) fn repeat_last_backward<T: Scalar>(
    input: usize,
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let n = *out.shape().last().unwrap();
    let Some(dst) = sink.acc(input) else {
        return;
    };
    for (d, gr) in dst.iter_mut().zip(g.chunks(n)) {
        let mut s = T::zero();
        for &v in gr {
            s = s + v;
        }
        *d = *d + s;
    }
}

pub(super) fn slice_backward<T: Scalar>(
    input: usize,
    axis: usize,
    start: usize,
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let (outer, n, inner) = split_axis(sink.value(input).shape(), axis);
    let len = out.dim(axis);
    let Some(dst) = sink.acc(input) else {
        return;
    };
    for o in 0..outer {
        add_into(
            &mut dst[(o * n + start) * inner..(o * n + start + len) * inner],
            &g[o * len * inner..(o + 1) * len * inner],
        );
    }
}

pub(super) fn concat_backward<T: Scalar>(
    inputs: &[usize],
    axis: usize,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let extents: Vec<usize> = inputs.iter().map(|&i| sink.value(i).dim(axis)).collect();
    let total: usize = extents.iter().sum();
    let (outer, _, inner) = split_axis(sink.value(inputs[0]).shape(), axis);
    let mut offset = 0;
    for (&id, &n) in inputs.iter().zip(&extents) {
        if let Some(dst) = sink.acc(id) {
            for o in 0..outer {
                let src = &g[(o * total + offset) * inner..(o * total + offset + n) * inner];
                add_into(&mut dst[o * n * inner..(o + 1) * n * inner], src);
            }
        }
        offset += n;
    }
}

pub(super) fn pad_last_backward<T: Scalar>(
    input: usize,
    out: &Tensor<T>,
    g: &[T],
    sink: &mut Sink<'_, T>,
) {
    let src = *sink.value(input).shape().last().unwrap();
    let n = *out.shape().last().unwrap();
    let Some(dst) = sink.acc(input) else {
        return;
    };
    for (d, gr) in dst.chunks_mut(src).zip(g.chunks(n)) {
        add_into(d, &gr[..src]);
    }
}
