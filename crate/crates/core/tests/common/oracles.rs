//! Reference implementations written directly from the definitions, with no
//! use of the crate's engine, FFT or window code.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

/// Magnitude spectrogram via a direct DFT: frame `f` covers samples
/// `f*hop .. f*hop+win`, weighted by a periodic Hann window and zero-padded
/// to `n_fft`; bins `0..=n_fft/2`.
pub fn dft_magnitudes(x: &[f64], n_fft: usize, hop: usize, win: usize) -> Vec<Vec<f64>> {
    let frames = 1 + (x.len() - win) / hop;
    (0..frames)
        .map(|f| {
            (0..=n_fft / 2)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for n in 0..win {
                        let w = 0.5 - 0.5 * (2.0 * PI * n as f64 / win as f64).cos();
                        let v = w * x[f * hop + n];
                        let ang = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                        re += v * ang.cos();
                        im += v * ang.sin();
                    }
                    (re * re + im * im).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Spectral convergence plus mean absolute log-magnitude difference, with
/// both guarded by `eps`; averaged over rows then over resolutions.
pub fn mrstft(
    est: &[Vec<f64>],
    reference: &[Vec<f64>],
    resolutions: &[(usize, usize, usize)],
    eps: f64,
) -> f64 {
    let mut total = 0.0;
    for &(n_fft, hop, win) in resolutions {
        let mut sc = 0.0;
        let mut log_sum = 0.0;
        let mut cells = 0usize;
        for (e, r) in est.iter().zip(reference) {
            let me = dft_magnitudes(e, n_fft, hop, win);
            let mr = dft_magnitudes(r, n_fft, hop, win);
            let (mut num, mut den) = (0.0, 0.0);
            for (fe, fr) in me.iter().zip(&mr) {
                for (&a, &b) in fe.iter().zip(fr) {
                    num += (b - a) * (b - a);
                    den += b * b;
                    log_sum += ((b + eps).ln() - (a + eps).ln()).abs();
                    cells += 1;
                }
            }
            sc += num.sqrt() / (den.sqrt() + eps);
        }
        total += sc / est.len() as f64 + log_sum / cells as f64;
    }
    total / resolutions.len() as f64
}

/// Temporal attention map of one `[C][t]` activation.
pub fn tam(a: &[Vec<f64>], p: f64, eps: f64) -> Vec<f64> {
    let t = a[0].len();
    let f: Vec<f64> = (0..t)
        .map(|j| a.iter().map(|row| row[j].abs().powf(p)).sum())
        .collect();
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    f.iter().map(|v| v / (norm + eps)).collect()
}

pub fn at_distance(t: &[f64], s: &[f64], p_loss: u8) -> f64 {
    match p_loss {
        1 => t.iter().zip(s).map(|(a, b)| (a - b).abs()).sum(),
        _ => t
            .iter()
            .zip(s)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Endpoint-aligned linear resampling followed by unit-norm rescaling.
pub fn resample_normalized(x: &[f64], n: usize, eps: f64) -> Vec<f64> {
    if x.len() == n {
        return x.to_vec();
    }
    let r = resample(x, n);
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    r.iter().map(|v| v / (norm + eps)).collect()
}

/// Endpoint-aligned linear resampling.
pub fn resample(x: &[f64], n: usize) -> Vec<f64> {
    let m = x.len();
    (0..n)
        .map(|i| {
            if n == 1 || m == 1 {
                return x[0];
            }
            let pos = i as f64 * (m - 1) as f64 / (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(m - 1);
            let w = pos - lo as f64;
            x[lo] * (1.0 - w) + x[hi] * w
        })
        .collect()
}

/// Every (side, student level, teacher level) admitted by the pairing rule,
/// found by testing all candidate triples.
pub fn dual_depth_pairs(
    l_t: usize,
    l_s: usize,
    placement: &[usize],
    dual: bool,
) -> BTreeSet<(u8, usize, usize)> {
    let mut out = BTreeSet::new();
    for side in 0..2u8 {
        for s in 1..=l_s {
            for t in 1..=l_t {
                let placed = placement.contains(&s);
                let same = s == t;
                let absorbed = dual && s == l_s && t > l_s;
                if placed && (same || absorbed) {
                    out.insert((side, s, t));
                }
            }
        }
    }
    out
}
