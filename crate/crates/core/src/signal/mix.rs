use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use super::clip::{mean_power, AudioClip};
use crate::{Error, Result};

/// Peak magnitude a mixture is rescaled to when it would otherwise clip.
const CLIP_HEADROOM: f64 = 0.99;

/// A noisy mixture together with the exact components it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    pub noisy: AudioClip,
    /// Clean component as it appears in `noisy`.
    pub clean: AudioClip,
    /// Scaled noise component as it appears in `noisy`.
    pub noise: AudioClip,
    /// Gain applied to the noise before any joint rescale.
    pub noise_gain: f64,
    /// Joint factor applied to both components (1 when nothing clipped).
    pub rescale: f64,
}

/// Adds `noise` to `clean` at `snr_db`.
///
/// The noise is scaled by `g` with `10·log10(P_clean / (g²·P_noise)) = snr_db`.
/// If the sum or the scaled noise would leave `[-1, 1]`, both components are
/// scaled down together, which leaves the SNR unchanged.
pub fn mix_at_snr(clean: &AudioClip, noise: &AudioClip, snr_db: f64) -> Result<Mixture> {
    if clean.len() != noise.len() {
        return Err(Error::ShapeMismatch {
            op: "mix_at_snr",
            dim: "noise length",
            expected: clean.len(),
            got: noise.len(),
        });
    }
    if clean.sample_rate() != noise.sample_rate() {
        return Err(Error::invalid("mix_at_snr: sample rates differ"));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("mix_at_snr: snr must be finite"));
    }
    let (pc, pn) = (clean.power(), noise.power());
    if pc <= 0.0 || pn <= 0.0 {
        return Err(Error::Domain {
            op: "mix_at_snr",
            detail: "zero-power input",
        });
    }
    let gain = (pc / (pn * 10f64.powf(snr_db / 10.0))).sqrt();
    let mut c: Vec<f64> = clean.samples().to_vec();
    let mut n: Vec<f64> = noise.samples().iter().map(|v| v * gain).collect();
    let peak = c
        .iter()
        .zip(&n)
        .fold(0.0f64, |m, (a, b)| m.max((a + b).abs()).max(b.abs()));
    let rescale = if peak > 1.0 {
        CLIP_HEADROOM / peak
    } else {
        1.0
    };
    if rescale != 1.0 {
        c.iter_mut().for_each(|v| *v *= rescale);
        n.iter_mut().for_each(|v| *v *= rescale);
    }
    let noisy: Vec<f64> = c.iter().zip(&n).map(|(a, b)| a + b).collect();
    let sr = clean.sample_rate();
    Ok(Mixture {
        noisy: AudioClip::new(noisy, sr)?,
        clean: AudioClip::new(c, sr)?,
        noise: AudioClip::new(n, sr)?,
        noise_gain: gain,
        rescale,
    })
}

/// SNR of a mixture recomputed from its retained components.
pub fn measured_snr_db(m: &Mixture) -> f64 {
    10.0 * (mean_power(m.clean.samples()) / mean_power(m.noise.samples())).log10()
}
