//! Register-tiled dense products shared by matmul and the convolutions.

use alloc::vec;
use alloc::vec::Vec;

use crate::Scalar;

const MR: usize = 4;
const NR: usize = 16;

/// `c += a · b` for row-major `n×k`, `k×m` and `n×m` blocks.
pub(crate) fn gemm<T: Scalar>(a: &[T], b: &[T], c: &mut [T], n: usize, k: usize, m: usize) {
    let (a, b, c) = (&a[..n * k], &b[..k * m], &mut c[..n * m]);
    let mut i = 0;
    while i + MR <= n {
        rows::<T, MR>(a, b, c, i, k, m);
        i += MR;
    }
    while i < n {
        rows::<T, 1>(a, b, c, i, k, m);
        i += 1;
    }
}

#[inline(always)]
fn rows<T: Scalar, const R: usize>(a: &[T], b: &[T], c: &mut [T], i: usize, k: usize, m: usize) {
    let a_rows: [&[T]; R] = core::array::from_fn(|r| &a[(i + r) * k..][..k]);
    let mut j = 0;
    while j + NR <= m {
        let mut acc = [[T::zero(); NR]; R];
        for p in 0..k {
            let bp: &[T; NR] = b[p * m + j..][..NR].try_into().expect("tile width");
            for r in 0..R {
                let av = a_rows[r][p];
                for q in 0..NR {
                    acc[r][q] = acc[r][q] + av * bp[q];
                }
            }
        }
        for (r, acc_r) in acc.iter().enumerate() {
            let cr = &mut c[(i + r) * m + j..][..NR];
            for (cv, &v) in cr.iter_mut().zip(acc_r) {
                *cv = *cv + v;
            }
        }
        j += NR;
    }
    if j < m {
        let w = m - j;
        let mut acc = [[T::zero(); NR]; R];
        for p in 0..k {
            let bp = &b[p * m + j..][..w];
            for r in 0..R {
                let av = a_rows[r][p];
                for (q, &bv) in bp.iter().enumerate() {
                    acc[r][q] = acc[r][q] + av * bv;
                }
            }
        }
        for (r, acc_r) in acc.iter().enumerate() {
            let cr = &mut c[(i + r) * m + j..][..w];
            for (cv, &v) in cr.iter_mut().zip(acc_r) {
                *cv = *cv + v;
            }
        }
    }
}

/// Row-major transpose of a `rows×cols` block.
pub(crate) fn transpose<T: Scalar>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); rows * cols];
    for (r, row) in src[..rows * cols].chunks(cols).enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out[c * rows + r] = v;
        }
    }
    out
}
