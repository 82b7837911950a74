//! Compact time-domain encoder/decoder denoiser.
//!
//! Each encoder level runs a strided Down conv, a residual conformer-style
//! block and, where configured, a multi-view attention block whose channel,
//! global and local branch outputs are recorded for distillation. Decoder
//! levels mirror this in reverse with additive skip connections, and a
//! sigmoid·tanh mask gate followed by a pointwise conv produces the waveform.

mod blocks;
mod config;
mod count;
mod net;
mod params;

pub use blocks::{Conv, MaBlock, MaskGate, ResCon, Views};
pub use config::{ModelConfig, Role, ATTN_STRIDE, IN_KERNEL, LOCAL_KERNEL, RESCON_KERNEL};
pub use count::{conv_flops, count_flops, count_params};
pub use net::{ForwardTrace, Manner, MultiViewActivations, Side};
pub use params::{Init, LayoutBuilder, ParamSpec, ParamStore};
