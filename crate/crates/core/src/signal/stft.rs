use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use super::fft::Fft;
use crate::{Error, Result};

/// One STFT resolution: Hann window of `window_len` samples, advanced by
/// `hop`, zero-padded to `fft_size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window_len: usize,
}

impl StftConfig {
    pub const fn new(fft_size: usize, hop: usize, window_len: usize) -> Self {
        Self {
            fft_size,
            hop,
            window_len,
        }
    }

    /// The three resolutions used for the multi-resolution STFT loss.
    pub const DEFAULT_RESOLUTIONS: [StftConfig; 3] = [
        StftConfig::new(512, 50, 240),
        StftConfig::new(1024, 120, 600),
        StftConfig::new(2048, 240, 1200),
    ];

    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.hop > self.window_len || self.window_len > self.fft_size {
            return Err(Error::invalid(alloc::format!(
                "stft config must satisfy 0 < hop <= window_len <= fft_size, got {self:?}"
            )));
        }
        if !self.fft_size.is_power_of_two() {
            return Err(Error::invalid(alloc::format!(
                "fft_size {} is not a power of two",
                self.fft_size
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// `1 + floor((len - window_len) / hop)`, or an error for clips shorter
    /// than one window.
    pub fn frames(&self, len: usize) -> Result<usize> {
        if len < self.window_len {
            return Err(Error::ShapeMismatch {
                op: "stft",
                dim: "signal length (shorter than one window)",
                expected: self.window_len,
                got: len,
            });
        }
        Ok(1 + (len - self.window_len) / self.hop)
    }

    /// Periodic Hann window.
    pub fn window(&self) -> Vec<f64> {
        let n = self.window_len as f64;
        (0..self.window_len)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos())
            .collect()
    }
}

/// Complex spectrogram, row-major `[frames, bins]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn frame(&self, f: usize) -> &[Complex64] {
        &self.data[f * self.bins..(f + 1) * self.bins]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm()).collect()
    }
}

/// Short-time Fourier transform of a real signal.
pub fn stft(samples: &[f64], cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let frames = cfg.frames(samples.len())?;
    let fft = Fft::new(cfg.fft_size)?;
    let window = cfg.window();
    let bins = cfg.bins();
    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
    for f in 0..frames {
        load_frame(
            &mut buf,
            &samples[f * cfg.hop..f * cfg.hop + cfg.window_len],
            &window,
        );
        fft.forward(&mut buf);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(Spectrogram { frames, bins, data })
}

pub(crate) fn load_frame(buf: &mut [Complex64], frame: &[f64], window: &[f64]) {
    for (i, b) in buf.iter_mut().enumerate() {
        *b = if i < window.len() {
            Complex64::new(frame[i] * window[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
}
