//! Core numerics for multi-view attention transfer between time-domain
//! speech-enhancement networks.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation:
//!
//! - [`graph`]: a tape-based reverse-mode autodiff engine over dense tensors,
//!   with the 1-D convolution, attention and spectral primitives the model and
//!   losses need.
//! - [`signal`]: synthetic speech and noise, SNR-controlled mixing, STFT,
//!   multi-resolution STFT loss and SI-SDR.
//! - [`model`]: a compact encoder/decoder denoiser with multi-view attention
//!   blocks, plus parameter and FLOP accounting.
//! - [`distill`]: temporal attention maps, attention-transfer losses,
//!   dual-depth layer pairing and the combined distillation objective.
//! - [`optim`]: Adam and global-norm gradient clipping.
//! - [`gradcheck`]: finite-difference verification of the engine.
//!
//! File formats, the training loop and the command line live in the `mvat`
//! crate.
#![no_std]

extern crate alloc;

pub mod distill;
mod error;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod optim;
mod scalar;
pub mod signal;
mod tensor;

pub use error::{Error, Result};
pub use graph::{Graph, Var};
pub use scalar::Scalar;
pub use tensor::Tensor;
