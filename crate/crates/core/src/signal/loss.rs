use alloc::vec::Vec;

use super::StftConfig;
use crate::{Error, Graph, Result, Scalar, Var};

/// Offset inside the log-magnitude term, also used to guard the
/// spectral-convergence denominator against an all-zero reference.
pub const MAG_EPS: f64 = 1e-7;

/// Flattens `[B, 1, T]` or `[B, T]` to `[B, T]`.
fn as_rows<T: Scalar>(g: &mut Graph<T>, x: Var) -> Result<Var> {
    match *g.shape(x) {
        [_, _] => Ok(x),
        [b, 1, t] => g.reshape(x, &[b, t]),
        ref s => Err(Error::Rank {
            op: "waveform loss",
            expected: 2,
            shape: s.to_vec(),
        }),
    }
}

fn check_same(g: &Graph<impl Scalar>, a: Var, b: Var, op: &'static str) -> Result<()> {
    if g.shape(a) != g.shape(b) {
        return Err(Error::Incompatible {
            op,
            lhs: g.shape(a).to_vec(),
            rhs: g.shape(b).to_vec(),
        });
    }
    Ok(())
}

/// Mean absolute difference.
pub fn l1_loss<T: Scalar>(g: &mut Graph<T>, est: Var, reference: Var) -> Result<Var> {
    check_same(g, est, reference, "l1_loss")?;
    let d = g.sub(est, reference)?;
    let a = g.abs(d)?;
    g.mean_all(a)
}

/// Multi-resolution STFT loss: for each resolution, spectral convergence
/// `‖|S_ref| − |S_est|‖_F / ‖|S_ref|‖_F` plus the mean absolute log-magnitude
/// difference; averaged over batch rows and resolutions.
pub fn mrstft_loss<T: Scalar>(
    g: &mut Graph<T>,
    est: Var,
    reference: Var,
    resolutions: &[StftConfig],
) -> Result<Var> {
    check_same(g, est, reference, "mrstft_loss")?;
    if resolutions.is_empty() {
        return Err(Error::invalid("mrstft_loss: no resolutions"));
    }
    let est = as_rows(g, est)?;
    let reference = as_rows(g, reference)?;
    let batch = g.shape(est)[0];
    let eps = T::of(MAG_EPS);
    let mut terms = Vec::with_capacity(resolutions.len());
    for cfg in resolutions {
        let me = g.stft_magnitude(est, cfg)?;
        let mr = g.stft_magnitude(reference, cfg)?;
        let cells = g.value(me).numel() / batch;

        let diff = g.sub(mr, me)?;
        let diff = g.reshape(diff, &[batch, cells])?;
        let num = g.pow(diff, T::of(2.0))?;
        let num = g.sum(num, 1)?;
        let num = g.pow(num, T::of(0.5))?;
        let den = g.reshape(mr, &[batch, cells])?;
        let den = g.pow(den, T::of(2.0))?;
        let den = g.sum(den, 1)?;
        let den = g.pow(den, T::of(0.5))?;
        let den = g.shift(den, eps)?;
        let sc = g.div(num, den)?;
        let sc = g.mean_all(sc)?;

        let le = g.shift(me, eps)?;
        let le = g.log(le)?;
        let lr = g.shift(mr, eps)?;
        let lr = g.log(lr)?;
        let ld = g.sub(lr, le)?;
        let ld = g.abs(ld)?;
        let lm = g.mean_all(ld)?;

        terms.push(g.add(sc, lm)?);
    }
    let mut total = terms[0];
    for &t in &terms[1..] {
        total = g.add(total, t)?;
    }
    g.scale(total, T::one() / T::of(resolutions.len() as f64))
}

/// `mean-ℓ1(est, ref) + mrstft_loss(est, ref)`, the waveform objective used
/// for both supervision and output distillation.
pub fn waveform_loss<T: Scalar>(
    g: &mut Graph<T>,
    est: Var,
    reference: Var,
    resolutions: &[StftConfig],
) -> Result<Var> {
    let l1 = l1_loss(g, est, reference)?;
    let mr = mrstft_loss(g, est, reference, resolutions)?;
    g.add(l1, mr)
}
