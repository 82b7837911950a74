use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::clip::{peak_normalize, AudioClip, SAMPLE_RATE};
use super::synth::{synth_voice, VoiceModel};
use super::NoiseKind;
use crate::Result;

const BABBLE_TALKERS: u64 = 6;

/// Noise clip of `len` samples, peak-normalised to 0.5. Deterministic in
/// `seed`.
pub fn synth_noise(kind: NoiseKind, seed: u64, len: usize) -> Result<AudioClip> {
    let mut x = match kind {
        NoiseKind::White => white(seed, len),
        NoiseKind::Pink => pink(seed, len),
        NoiseKind::FilteredBabble => babble(seed, len)?,
    };
    peak_normalize(&mut x, 0.5)?;
    AudioClip::new(x, SAMPLE_RATE)
}

fn white(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Paul Kellet's economy pinking filter over white noise.
fn pink(seed: u64, len: usize) -> Vec<f64> {
    let w = white(seed, len);
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    w.iter()
        .map(|&x| {
            b0 = 0.99765 * b0 + x * 0.0990460;
            b1 = 0.96300 * b1 + x * 0.2965164;
            b2 = 0.57000 * b2 + x * 1.0526913;
            b0 + b1 + b2 + x * 0.1848
        })
        .collect()
}

/// Several synthetic talkers summed and low-passed.
fn babble(seed: u64, len: usize) -> Result<Vec<f64>> {
    let duration = len as f64 / SAMPLE_RATE as f64;
    let mut sum = vec![0.0; len];
    for talker in 0..BABBLE_TALKERS {
        let s = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(talker + 1);
        let v = synth_voice(s, duration, &VoiceModel::default())?;
        for (d, &x) in sum.iter_mut().zip(v.clip.samples()) {
            *d += x;
        }
    }
    // two cascaded one-pole low-passes, cutoff ~1.5 kHz
    let a = (-2.0 * core::f64::consts::PI * 1500.0 / SAMPLE_RATE as f64).exp();
    for _ in 0..2 {
        let mut y = 0.0;
        for v in sum.iter_mut() {
            y = (1.0 - a) * *v + a * y;
            *v = y;
        }
    }
    Ok(sum)
}
