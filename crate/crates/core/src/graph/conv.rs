use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{gemm, transpose};
use super::{check_rank, sum_slice, Graph, Op, Sink, Var};
use crate::{Error, Result, Scalar, Tensor};

#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    batch: usize,
    cin: usize,
    cout: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    groups: usize,
    t_in: usize,
    t_out: usize,
}

/// Output positions `o` in `[lo, hi)` whose source index `o*stride + k - padding`
/// falls inside `[0, len)`; `start` is the source index of `lo`.
struct Tap {
    lo: usize,
    hi: usize,
    start: usize,
}

fn taps(
    len: usize,
    n_out: usize,
    stride: usize,
    kernel: usize,
    padding: usize,
) -> Vec<Option<Tap>> {
    (0..kernel)
        .map(|k| {
            if len + padding <= k {
                return None;
            }
            let lo = if padding > k {
                (padding - k).div_ceil(stride)
            } else {
                0
            };
            let hi = ((len - 1 + padding - k) / stride + 1).min(n_out);
            (lo < hi).then(|| Tap {
                lo,
                hi,
                start: lo * stride + k - padding,
            })
        })
        .collect()
}

fn mismatch(op: &'static str, dim: &'static str, expected: usize, got: usize) -> Error {
    Error::ShapeMismatch {
        op,
        dim,
        expected,
        got,
    }
}

impl<T: Scalar> Graph<T> {
    /// 1-D cross-correlation over `[B, Cin, T]` with weight
    /// `[Cout, Cin/groups, K]` and optional bias `[Cout]`.
    pub fn conv1d(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
        groups: usize,
    ) -> Result<Var> {
        const OP: &str = "conv1d";
        let x = self.val(input);
        let w = self.val(weight);
        check_rank(OP, x.shape(), 3)?;
        check_rank(OP, w.shape(), 3)?;
        if stride == 0 || groups == 0 {
            return Err(Error::invalid("conv1d: stride and groups must be positive"));
        }
        let (batch, cin, t_in) = (x.dim(0), x.dim(1), x.dim(2));
        let (cout, cin_g, kernel) = (w.dim(0), w.dim(1), w.dim(2));
        if cin % groups != 0 {
            return Err(mismatch(
                OP,
                "input channels (divisibility by groups)",
                groups * (cin / groups),
                cin,
            ));
        }
        if cout % groups != 0 {
            return Err(mismatch(
                OP,
                "output channels (divisibility by groups)",
                groups * (cout / groups),
                cout,
            ));
        }
        if cin_g != cin / groups {
            return Err(mismatch(OP, "weight input channels", cin / groups, cin_g));
        }
        if let Some(b) = bias {
            let b = self.val(b);
            if b.numel() != cout {
                return Err(mismatch(OP, "bias length", cout, b.numel()));
            }
        }
        if t_in + 2 * padding < kernel {
            return Err(mismatch(
                OP,
                "padded input length",
                kernel,
                t_in + 2 * padding,
            ));
        }
        let t_out = (t_in + 2 * padding - kernel) / stride + 1;
        let geom = ConvGeom {
            batch,
            cin,
            cout,
            kernel,
            stride,
            padding,
            groups,
            t_in,
            t_out,
        };
        let out = conv_forward(x.data(), w.data(), bias.map(|b| self.val(b).data()), &geom);
        self.macs += (batch * cout * cin_g * kernel * t_out) as u64;
        let mut ids = vec![input.0, weight.0];
        ids.extend(bias.map(|b| b.0));
        Ok(self.push(
            Tensor::from_parts(vec![batch, cout, t_out], out),
            Op::Conv {
                input: input.0,
                weight: weight.0,
                bias: bias.map(|b| b.0),
                geom,
            },
            &ids,
        ))
    }

    /// Transposed 1-D convolution with weight `[Cin, Cout, K]`; the adjoint of
    /// [`conv1d`](Self::conv1d) for the same weight tensor.
    pub fn conv1d_transposed(
        &mut self,
        input: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        const OP: &str = "conv1d_transposed";
        let x = self.val(input);
        let w = self.val(weight);
        check_rank(OP, x.shape(), 3)?;
        check_rank(OP, w.shape(), 3)?;
        if stride == 0 {
            return Err(Error::invalid("conv1d_transposed: stride must be positive"));
        }
        let (batch, cin, t_in) = (x.dim(0), x.dim(1), x.dim(2));
        let (w_cin, cout, kernel) = (w.dim(0), w.dim(1), w.dim(2));
        if w_cin != cin {
            return Err(mismatch(OP, "weight input channels", cin, w_cin));
        }
        if let Some(b) = bias {
            let b = self.val(b);
            if b.numel() != cout {
                return Err(mismatch(OP, "bias length", cout, b.numel()));
            }
        }
        let full = (t_in - 1) * stride + kernel;
        if full <= 2 * padding {
            return Err(mismatch(OP, "output length", 2 * padding + 1, full));
        }
        let t_out = full - 2 * padding;
        let geom = ConvGeom {
            batch,
            cin,
            cout,
            kernel,
            stride,
            padding,
            groups: 1,
            t_in,
            t_out,
        };
        let out =
            conv_transpose_forward(x.data(), w.data(), bias.map(|b| self.val(b).data()), &geom);
        self.macs += (batch * cin * cout * kernel * t_in) as u64;
        let mut ids = vec![input.0, weight.0];
        ids.extend(bias.map(|b| b.0));
        Ok(self.push(
            Tensor::from_parts(vec![batch, cout, t_out], out),
            Op::ConvTranspose {
                input: input.0,
                weight: weight.0,
                bias: bias.map(|b| b.0),
                geom,
            },
            &ids,
        ))
    }
}

/// `col[(c, k), o] = src[c][o*stride + k - padding]`, zero outside the row.
fn im2col<T: Scalar>(
    src: &[T],
    channels: usize,
    len: usize,
    n_out: usize,
    stride: usize,
    taps: &[Option<Tap>],
) -> Vec<T> {
    let kernel = taps.len();
    let mut col = vec![T::zero(); channels * kernel * n_out];
    for (c, row) in src[..channels * len].chunks(len).enumerate() {
        for (k, tap) in taps.iter().enumerate() {
            if let Some(tp) = tap {
                let dst = &mut col[(c * kernel + k) * n_out..][..n_out];
                for (d, &v) in dst[tp.lo..tp.hi]
                    .iter_mut()
                    .zip(row[tp.start..].iter().step_by(stride))
                {
                    *d = v;
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: scatters `col` back onto rows of length `len`.
fn col2im<T: Scalar>(
    col: &[T],
    dst: &mut [T],
    channels: usize,
    len: usize,
    n_out: usize,
    stride: usize,
    taps: &[Option<Tap>],
) {
    let kernel = taps.len();
    for (c, row) in dst[..channels * len].chunks_mut(len).enumerate() {
        for (k, tap) in taps.iter().enumerate() {
            if let Some(tp) = tap {
                let src = &col[(c * kernel + k) * n_out..][..n_out];
                for (d, &v) in row[tp.start..]
                    .iter_mut()
                    .step_by(stride)
                    .zip(&src[tp.lo..tp.hi])
                {
                    *d = *d + v;
                }
            }
        }
    }
}

impl ConvGeom {
    /// A 1×1 convolution reads its input rows directly as the column matrix.
    fn is_pointwise(&self) -> bool {
        self.kernel == 1 && self.stride == 1 && self.padding == 0
    }

    fn is_depthwise(&self) -> bool {
        self.groups == self.cin
            && self.groups == self.cout
            && self.stride == 1
            && self.padding < self.kernel
    }
}

const TILE: usize = 16;

/// `out[o] += Σ_k w[k] · x[o + k - pad]` over the in-range samples of `x`.
fn correlate_row<T: Scalar>(x: &[T], w: &[T], pad: usize, out: &mut [T]) {
    let (len, kernel) = (x.len(), w.len());
    let mut j = 0;
    while j < out.len() {
        let n = TILE.min(out.len() - j);
        if n == TILE && j >= pad && j + TILE + kernel - 1 <= len + pad {
            let mut acc = [T::zero(); TILE];
            for (k, &wk) in w.iter().enumerate() {
                let xs: &[T; TILE] = x[j + k - pad..][..TILE].try_into().expect("tile width");
                for q in 0..TILE {
                    acc[q] = acc[q] + wk * xs[q];
                }
            }
            for (o, &a) in out[j..j + TILE].iter_mut().zip(&acc) {
                *o = *o + a;
            }
        } else {
            for o in j..j + n {
                let mut acc = T::zero();
                for (k, &wk) in w.iter().enumerate() {
                    if let Some(&xv) = (o + k).checked_sub(pad).and_then(|i| x.get(i)) {
                        acc = acc + wk * xv;
                    }
                }
                out[o] = out[o] + acc;
            }
        }
        j += n;
    }
}

/// Dot product with independent partial sums.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); TILE];
    let mut ca = a.chunks_exact(TILE);
    let mut cb = b.chunks_exact(TILE);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for q in 0..TILE {
            acc[q] = acc[q] + x[q] * y[q];
        }
    }
    let tail = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .fold(T::zero(), |s, (&x, &y)| s + x * y);
    acc.iter().fold(tail, |s, &v| s + v)
}

fn fill_bias<T: Scalar>(out: &mut [T], bias: Option<&[T]>, channels: usize, len: usize) {
    if let Some(bias) = bias {
        for (r, row) in out.chunks_mut(len).enumerate() {
            row.iter_mut().for_each(|v| *v = bias[r % channels]);
        }
    }
}

fn add_bias_grad<T: Scalar>(db: &mut [T], grad: &[T], channels: usize, len: usize) {
    for (r, row) in grad.chunks(len).enumerate() {
        db[r % channels] = db[r % channels] + sum_slice(row);
    }
}

fn conv_forward<T: Scalar>(x: &[T], w: &[T], bias: Option<&[T]>, g: &ConvGeom) -> Vec<T> {
    let (cin_g, cout_g) = (g.cin / g.groups, g.cout / g.groups);
    let kk = cin_g * g.kernel;
    let taps = taps(g.t_in, g.t_out, g.stride, g.kernel, g.padding);
    let mut out = vec![T::zero(); g.batch * g.cout * g.t_out];
    fill_bias(&mut out, bias, g.cout, g.t_out);
    if g.is_depthwise() {
        for (r, dst) in out.chunks_mut(g.t_out).enumerate() {
            let c = r % g.cout;
            correlate_row(
                &x[r * g.t_in..][..g.t_in],
                &w[c * g.kernel..][..g.kernel],
                g.padding,
                dst,
            );
        }
        return out;
    }
    for b in 0..g.batch {
        for grp in 0..g.groups {
            let src = &x[(b * g.cin + grp * cin_g) * g.t_in..][..cin_g * g.t_in];
            let dst = &mut out[(b * g.cout + grp * cout_g) * g.t_out..][..cout_g * g.t_out];
            let w_grp = &w[grp * cout_g * kk..][..cout_g * kk];
            if g.is_pointwise() {
                gemm(w_grp, src, dst, cout_g, kk, g.t_out);
            } else {
                let col = im2col(src, cin_g, g.t_in, g.t_out, g.stride, &taps);
                gemm(w_grp, &col, dst, cout_g, kk, g.t_out);
            }
        }
    }
    out
}

pub(super) fn conv_backward<T: Scalar>(
    input: usize,
    weight: usize,
    bias: Option<usize>,
    g: &ConvGeom,
    grad: &[T],
    sink: &mut Sink<'_, T>,
) {
    let (cin_g, cout_g) = (g.cin / g.groups, g.cout / g.groups);
    let kk = cin_g * g.kernel;
    let taps = taps(g.t_in, g.t_out, g.stride, g.kernel, g.padding);
    if let Some(db) = bias.and_then(|b| sink.acc(b)) {
        add_bias_grad(db, grad, g.cout, g.t_out);
    }
    if g.is_depthwise() {
        depthwise_backward(input, weight, g, grad, sink);
        return;
    }
    if sink.wants(weight) {
        let x = sink.value(input).data();
        let dw = sink.acc(weight).expect("checked");
        for b in 0..g.batch {
            for grp in 0..g.groups {
                let src = &x[(b * g.cin + grp * cin_g) * g.t_in..][..cin_g * g.t_in];
                let g_blk = &grad[(b * g.cout + grp * cout_g) * g.t_out..][..cout_g * g.t_out];
                let col_t = if g.is_pointwise() {
                    transpose(src, kk, g.t_out)
                } else {
                    transpose(
                        &im2col(src, cin_g, g.t_in, g.t_out, g.stride, &taps),
                        kk,
                        g.t_out,
                    )
                };
                gemm(
                    g_blk,
                    &col_t,
                    &mut dw[grp * cout_g * kk..][..cout_g * kk],
                    cout_g,
                    g.t_out,
                    kk,
                );
            }
        }
    }
    if sink.wants(input) {
        let w = sink.value(weight).data();
        let w_t: Vec<Vec<T>> = (0..g.groups)
            .map(|grp| transpose(&w[grp * cout_g * kk..], cout_g, kk))
            .collect();
        let dx = sink.acc(input).expect("checked");
        let mut dcol = vec![T::zero(); kk * g.t_out];
        for b in 0..g.batch {
            for (grp, w_t) in w_t.iter().enumerate() {
                let g_blk = &grad[(b * g.cout + grp * cout_g) * g.t_out..][..cout_g * g.t_out];
                let dst = &mut dx[(b * g.cin + grp * cin_g) * g.t_in..][..cin_g * g.t_in];
                if g.is_pointwise() {
                    gemm(w_t, g_blk, dst, kk, cout_g, g.t_out);
                } else {
                    dcol.iter_mut().for_each(|v| *v = T::zero());
                    gemm(w_t, g_blk, &mut dcol, kk, cout_g, g.t_out);
                    col2im(&dcol, dst, cin_g, g.t_in, g.t_out, g.stride, &taps);
                }
            }
        }
    }
}

fn depthwise_backward<T: Scalar>(
    input: usize,
    weight: usize,
    g: &ConvGeom,
    grad: &[T],
    sink: &mut Sink<'_, T>,
) {
    let k_len = g.kernel;
    if sink.wants(weight) {
        let x = sink.value(input).data();
        let dw = sink.acc(weight).expect("checked");
        for (r, g_row) in grad.chunks(g.t_out).enumerate() {
            let x_row = &x[r * g.t_in..][..g.t_in];
            let dw_row = &mut dw[(r % g.cout) * k_len..][..k_len];
            for (k, d) in dw_row.iter_mut().enumerate() {
                // o + k - p must lie in [0, t_in)
                let lo = g.padding.saturating_sub(k);
                let hi = (g.t_in + g.padding).saturating_sub(k).min(g.t_out);
                if lo < hi {
                    *d = *d
                        + dot(
                            &g_row[lo..hi],
                            &x_row[lo + k - g.padding..hi + k - g.padding],
                        );
                }
            }
        }
    }
    if sink.wants(input) {
        let w = sink.value(weight).data();
        let w_rev: Vec<T> = w
            .chunks(k_len)
            .flat_map(|row| row.iter().rev().copied())
            .collect();
        let dx = sink.acc(input).expect("checked");
        for (r, dst) in dx.chunks_mut(g.t_in).enumerate() {
            let c = r % g.cout;
            correlate_row(
                &grad[r * g.t_out..][..g.t_out],
                &w_rev[c * k_len..][..k_len],
                k_len - 1 - g.padding,
                dst,
            );
        }
    }
}

// The transposed convolution scatters `W'ᵀ · x` through the same taps, where
// `W'` is the weight viewed as `[Cin, Cout*K]`; input position `i` lands on
// output `i*stride + k - padding`.

fn conv_transpose_forward<T: Scalar>(x: &[T], w: &[T], bias: Option<&[T]>, g: &ConvGeom) -> Vec<T> {
    let ck = g.cout * g.kernel;
    let taps = taps(g.t_out, g.t_in, g.stride, g.kernel, g.padding);
    let w_t = transpose(w, g.cin, ck);
    let mut out = vec![T::zero(); g.batch * g.cout * g.t_out];
    fill_bias(&mut out, bias, g.cout, g.t_out);
    let mut col = vec![T::zero(); ck * g.t_in];
    for b in 0..g.batch {
        col.iter_mut().for_each(|v| *v = T::zero());
        gemm(&w_t, &x[b * g.cin * g.t_in..], &mut col, ck, g.cin, g.t_in);
        let dst = &mut out[b * g.cout * g.t_out..][..g.cout * g.t_out];
        col2im(&col, dst, g.cout, g.t_out, g.t_in, g.stride, &taps);
    }
    out
}

pub(super) fn conv_transpose_backward<T: Scalar>(
    input: usize,
    weight: usize,
    bias: Option<usize>,
    g: &ConvGeom,
    grad: &[T],
    sink: &mut Sink<'_, T>,
) {
    let ck = g.cout * g.kernel;
    let taps = taps(g.t_out, g.t_in, g.stride, g.kernel, g.padding);
    if let Some(db) = bias.and_then(|b| sink.acc(b)) {
        add_bias_grad(db, grad, g.cout, g.t_out);
    }
    let want_w = sink.wants(weight);
    let want_x = sink.wants(input);
    if !want_w && !want_x {
        return;
    }
    let cols: Vec<Vec<T>> = (0..g.batch)
        .map(|b| {
            im2col(
                &grad[b * g.cout * g.t_out..],
                g.cout,
                g.t_out,
                g.t_in,
                g.stride,
                &taps,
            )
        })
        .collect();
    if want_w {
        let x = sink.value(input).data();
        let dw = sink.acc(weight).expect("checked");
        for (b, col) in cols.iter().enumerate() {
            let col_t = transpose(col, ck, g.t_in);
            gemm(&x[b * g.cin * g.t_in..], &col_t, dw, g.cin, g.t_in, ck);
        }
    }
    if want_x {
        let w = sink.value(weight).data();
        let dx = sink.acc(input).expect("checked");
        for (b, col) in cols.iter().enumerate() {
            gemm(w, col, &mut dx[b * g.cin * g.t_in..], g.cin, ck, g.t_in);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_depthwise(x: &[f64], w: &[f64], c: usize, t: usize, k: usize, p: usize) -> Vec<f64> {
        let t_out = t + 2 * p + 1 - k;
        let mut out = vec![0.0; c * t_out];
        for ci in 0..c {
            for o in 0..t_out {
                for kk in 0..k {
                    let i = (o + kk) as isize - p as isize;
                    if (0..t as isize).contains(&i) {
                        out[ci * t_out + o] += w[ci * k + kk] * x[ci * t + i as usize];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn depthwise_matches_direct_sums() {
        let c = 3;
        for t in [1, 3, 17, 40] {
            for k in [1, 3, 7] {
                for p in 0..k {
                    if t + 2 * p < k {
                        continue;
                    }
                    let x: Vec<f64> = (0..c * t).map(|i| (i as f64 * 0.7).sin()).collect();
                    let w: Vec<f64> = (0..c * k).map(|i| (i as f64 * 0.3).cos()).collect();
                    let mut g = Graph::new();
                    let xv = g.leaf(Tensor::from_parts(vec![1, c, t], x.clone()), true);
                    let wv = g.leaf(Tensor::from_parts(vec![c, 1, k], w.clone()), true);
                    let y = g.conv1d(xv, wv, None, 1, p, c).unwrap();
                    let want = naive_depthwise(&x, &w, c, t, k, p);
                    for (a, b) in g.value(y).data().iter().zip(&want) {
                        assert!((a - b).abs() < 1e-12, "t={t} k={k} p={p}");
                    }
                    let seed: Vec<f64> = (0..want.len()).map(|i| (i as f64 * 0.13).sin()).collect();
                    let gs = g.constant(Tensor::from_parts(g.shape(y).to_vec(), seed.clone()));
                    let l = g.mul(y, gs).unwrap();
                    let l = g.sum_all(l).unwrap();
                    g.backward(l).unwrap();
                    let (dx, dw) = (g.grad(xv).unwrap(), g.grad(wv).unwrap());
                    let t_out = want.len() / c;
                    let mut ndx = vec![0.0; c * t];
                    let mut ndw = vec![0.0; c * k];
                    for ci in 0..c {
                        for o in 0..t_out {
                            for kk in 0..k {
                                let i = (o + kk) as isize - p as isize;
                                if (0..t as isize).contains(&i) {
                                    let i = i as usize;
                                    ndx[ci * t + i] += w[ci * k + kk] * seed[ci * t_out + o];
                                    ndw[ci * k + kk] += x[ci * t + i] * seed[ci * t_out + o];
                                }
                            }
                        }
                    }
                    for (a, b) in dx.data().iter().zip(&ndx).chain(dw.data().iter().zip(&ndw)) {
                        assert!((a - b).abs() < 1e-12, "t={t} k={k} p={p}");
                    }
                }
            }
        }
    }
}
