use alloc::vec::Vec;

use crate::{Error, Result};

/// Sample rate of every clip in this crate.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono waveform with samples in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::invalid(alloc::format!(
                "audio samples must be finite and within [-1, 1], found {v}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Scales `x` so that its peak magnitude is exactly `peak`.
pub(crate) fn peak_normalize(x: &mut [f64], peak: f64) -> Result<()> {
    let (idx, m) = x.iter().enumerate().fold((0, 0.0f64), |(bi, bm), (i, v)| {
        if v.abs() > bm {
            (i, v.abs())
        } else {
            (bi, bm)
        }
    });
    if m == 0.0 {
        return Err(Error::invalid("cannot normalise an all-zero signal"));
    }
    let s = peak / m;
    x.iter_mut().for_each(|v| *v *= s);
    x[idx] = peak.copysign(x[idx]);
    Ok(())
}
