use alloc::vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::clip::{peak_normalize, AudioClip, SAMPLE_RATE};
use super::MixSpec;
use crate::{Error, Result};

/// Shape of the synthetic voice generator.
#[derive(Clone, Debug, PartialEq)]
pub struct VoiceModel {
    pub min_harmonics: usize,
    pub max_harmonics: usize,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Relative depth of the sinusoidal pitch vibrato.
    pub vibrato_depth: f64,
    /// Depth of the sinusoidal amplitude tremolo.
    pub tremolo_depth: f64,
    /// Max relative pitch excursion of a voiced segment's glide.
    pub glide: f64,
    /// Alternate voiced segments with silences; otherwise one sustained tone.
    pub segmented: bool,
    /// RMS of a white noise floor in dB relative to the peak, like the room
    /// tone of a real recording. `None` leaves silences digitally silent.
    pub floor_db: Option<f64>,
}

impl Default for VoiceModel {
    fn default() -> Self {
        Self {
            min_harmonics: 3,
            max_harmonics: 8,
            f0_min_hz: 80.0,
            f0_max_hz: 300.0,
            vibrato_depth: 0.03,
            tremolo_depth: 0.3,
            glide: 0.15,
            segmented: true,
            floor_db: Some(-60.0),
        }
    }
}

impl VoiceModel {
    /// A single steady sinusoid at a random fundamental.
    pub fn pure_tone() -> Self {
        Self {
            min_harmonics: 1,
            max_harmonics: 1,
            vibrato_depth: 0.0,
            tremolo_depth: 0.0,
            glide: 0.0,
            segmented: false,
            floor_db: None,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesizedVoice {
    pub clip: AudioClip,
    pub f0_hz: f64,
    pub harmonics: usize,
}

/// Speech-like clean signal for `spec.clean_seed` with the default voice.
pub fn synth_clean(spec: &MixSpec) -> Result<AudioClip> {
    Ok(synth_voice(spec.clean_seed, spec.duration_s, &VoiceModel::default())?.clip)
}

/// Harmonic voice with modulated envelopes, peak-normalised to 0.5.
/// Deterministic in `seed`.
pub fn synth_voice(seed: u64, duration_s: f64, model: &VoiceModel) -> Result<SynthesizedVoice> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::invalid("duration must be positive"));
    }
    if model.min_harmonics == 0
        || model.min_harmonics > model.max_harmonics
        || model.f0_min_hz > model.f0_max_hz
    {
        return Err(Error::invalid("inconsistent voice model"));
    }
    let sr = SAMPLE_RATE as f64;
    let n = (duration_s * sr).round() as usize;
    if n == 0 {
        return Err(Error::invalid("duration shorter than one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = rng.random_range(model.f0_min_hz..=model.f0_max_hz);
    let harmonics = rng.random_range(model.min_harmonics..=model.max_harmonics);
    let amps: alloc::vec::Vec<f64> = (1..=harmonics)
        .map(|k| rng.random_range(0.4..1.0) / k as f64)
        .collect();
    let phases: alloc::vec::Vec<f64> = (0..harmonics)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let vib_rate = rng.random_range(4.0..6.5);
    let trem_rate = rng.random_range(2.0..5.0);

    // Envelope and pitch-ratio tracks.
    let mut env = vec![0.0f64; n];
    let mut ratio = vec![1.0f64; n];
    if model.segmented {
        // leading silence, kept short enough that brief clips are voiced
        let mut pos = rng.random_range(0..((0.05 * sr) as usize).min(n / 4).max(1));
        while pos < n {
            let voiced = rng.random_range((0.08 * sr) as usize..(0.35 * sr) as usize);
            let level = rng.random_range(0.5..1.0);
            let r0 = 1.0 + rng.random_range(-model.glide..=model.glide);
            let r1 = 1.0 + rng.random_range(-model.glide..=model.glide);
            for i in 0..voiced.min(n - pos) {
                let u = i as f64 / voiced as f64;
                env[pos + i] = level * (PI * u).sin().sqrt();
                ratio[pos + i] = r0 + (r1 - r0) * u;
            }
            pos += voiced + rng.random_range((0.03 * sr) as usize..(0.1 * sr) as usize);
        }
    } else {
        env.iter_mut().for_each(|e| *e = 1.0);
    }

    let mut samples = vec![0.0f64; n];
    let mut phase = 0.0f64;
    for (i, s) in samples.iter_mut().enumerate() {
        let t = i as f64 / sr;
        let f = f0 * ratio[i] * (1.0 + model.vibrato_depth * (2.0 * PI * vib_rate * t).sin());
        let am = 1.0 + model.tremolo_depth * (2.0 * PI * trem_rate * t).sin();
        let mut v = 0.0;
        for (k, (&a, &p)) in amps.iter().zip(&phases).enumerate() {
            let h = (k + 1) as f64;
            if h * f < sr / 2.0 {
                v += a * (h * phase + p).sin();
            }
        }
        *s = env[i] * am * v;
        phase += 2.0 * PI * f / sr;
        if phase >= 2.0 * PI {
            phase -= 2.0 * PI;
        }
    }
    peak_normalize(&mut samples, 0.5)?;
    if let Some(db) = model.floor_db {
        let half_width = 0.5 * 10f64.powf(db / 20.0) * 3f64.sqrt();
        for s in samples.iter_mut() {
            *s += rng.random_range(-half_width..=half_width);
        }
        peak_normalize(&mut samples, 0.5)?;
    }
    Ok(SynthesizedVoice {
        clip: AudioClip::new(samples, SAMPLE_RATE)?,
        f0_hz: f0,
        harmonics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Fft;
    use alloc::vec::Vec;
    use num_complex::Complex64;

    #[test]
    fn same_seed_is_bit_identical() {
        let a = synth_voice(7, 0.5, &VoiceModel::default()).unwrap();
        let b = synth_voice(7, 0.5, &VoiceModel::default()).unwrap();
        assert_eq!(a, b);
        let c = synth_voice(8, 0.5, &VoiceModel::default()).unwrap();
        assert_ne!(a.clip, c.clip);
    }

    #[test]
    fn peak_is_exactly_one_half() {
        for seed in 0..5 {
            let v = synth_voice(seed, 0.3, &VoiceModel::default()).unwrap();
            assert_eq!(v.clip.peak(), 0.5);
            assert!((3..=8).contains(&v.harmonics));
            assert!((80.0..=300.0).contains(&v.f0_hz));
        }
    }

    #[test]
    fn floor_fills_the_silences() {
        let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        let bare = VoiceModel {
            floor_db: None,
            ..VoiceModel::default()
        };
        let v = synth_voice(3, 0.5, &bare).unwrap();
        let lead = v.clip.samples().iter().take_while(|s| **s == 0.0).count();
        assert!(lead > 0);
        let floored = synth_voice(3, 0.5, &VoiceModel::default()).unwrap();
        let head = &floored.clip.samples()[..lead];
        assert!(head.iter().all(|s| *s != 0.0));
        let db = 20.0 * (rms(head) / 0.5).log10();
        assert!((db + 60.0).abs() < 3.0, "{db}");
    }

    #[test]
    fn pure_tone_peaks_at_fundamental() {
        let n_fft = 16384;
        for seed in 0..4 {
            let v = synth_voice(seed, 1.0, &VoiceModel::pure_tone()).unwrap();
            let mut buf: Vec<Complex64> = (0..n_fft)
                .map(|i| Complex64::new(v.clip.samples().get(i).copied().unwrap_or(0.0), 0.0))
                .collect();
            Fft::new(n_fft).unwrap().forward(&mut buf);
            let peak = (0..n_fft / 2)
                .max_by(|&a, &b| buf[a].norm().partial_cmp(&buf[b].norm()).unwrap())
                .unwrap();
            let expected = v.f0_hz * n_fft as f64 / SAMPLE_RATE as f64;
            assert!(
                (peak as f64 - expected).abs() <= 1.0,
                "seed {seed}: bin {peak} vs {expected}"
            );
        }
    }
}
