//! Audio clips, synthetic corpora, spectral transforms and the waveform losses
//! and metrics built on them.

mod clip;
mod dataset;
pub(crate) mod fft;
mod loss;
mod metrics;
mod mix;
mod noise;
pub(crate) mod stft;
mod synth;

pub use clip::{AudioClip, SAMPLE_RATE};
pub use dataset::{corpus, render, CorpusConfig, MixSpec, NoiseKind, SampleRecord, Split};
pub use fft::Fft;
pub use loss::{l1_loss, mrstft_loss, waveform_loss, MAG_EPS};
pub use metrics::{si_sdr, SI_SDR_CAP_DB};
pub use mix::{measured_snr_db, mix_at_snr, Mixture};
pub use noise::synth_noise;
pub use stft::{stft, Spectrogram, StftConfig};
pub use synth::{synth_clean, synth_voice, SynthesizedVoice, VoiceModel};
