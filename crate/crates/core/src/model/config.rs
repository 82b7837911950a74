use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Kernel of the input conv that expands the waveform to `base_channels`.
pub const IN_KERNEL: usize = 3;
/// Depthwise kernel inside the residual conformer block.
pub const RESCON_KERNEL: usize = 31;
/// Depthwise kernel of the local attention branch.
pub const LOCAL_KERNEL: usize = 7;
/// Time stride of the global attention branch.
pub const ATTN_STRIDE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Role {
    Teacher,
    Student,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ModelConfig {
    pub depth: usize,
    pub base_channels: usize,
    #[cfg_attr(feature = "serde", serde(default = "defaults::growth"))]
    pub channel_growth: usize,
    #[cfg_attr(feature = "serde", serde(default = "defaults::max_channels"))]
    pub max_channels: usize,
    #[cfg_attr(feature = "serde", serde(default = "defaults::kernel"))]
    pub kernel: usize,
    #[cfg_attr(feature = "serde", serde(default = "defaults::stride"))]
    pub stride: usize,
    /// Levels (1-based) that carry a multi-view attention block.
    pub ma_placement: Vec<usize>,
    pub role: Role,
}

#[cfg(feature = "serde")]
mod defaults {
    pub fn growth() -> usize {
        2
    }
    pub fn max_channels() -> usize {
        512
    }
    pub fn kernel() -> usize {
        8
    }
    pub fn stride() -> usize {
        4
    }
}

impl ModelConfig {
    /// MA block at every level.
    pub fn teacher(depth: usize, base_channels: usize) -> Self {
        Self {
            depth,
            base_channels,
            channel_growth: 2,
            max_channels: 512,
            kernel: 8,
            stride: 4,
            ma_placement: (1..=depth).collect(),
            role: Role::Teacher,
        }
    }

    /// MA block only at the deepest level.
    pub fn student(depth: usize, base_channels: usize) -> Self {
        Self {
            ma_placement: alloc::vec![depth],
            role: Role::Student,
            ..Self::teacher(depth, base_channels)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: alloc::string::String| Err(Error::Config(m));
        if self.depth == 0 {
            return fail(format!("depth must be >= 1, got {}", self.depth));
        }
        if self.base_channels == 0 || self.channel_growth == 0 || self.max_channels == 0 {
            return fail(format!("channel settings must be positive: {self:?}"));
        }
        if self.stride == 0
            || self.kernel < self.stride
            || !(self.kernel - self.stride).is_multiple_of(2)
        {
            return fail(format!(
                "kernel {} and stride {} must satisfy kernel >= stride with an even difference",
                self.kernel, self.stride
            ));
        }
        let mut prev = 0;
        for &l in &self.ma_placement {
            if l == 0 || l > self.depth {
                return fail(format!("ma level {l} outside 1..={}", self.depth));
            }
            if l <= prev {
                return fail(format!(
                    "ma_placement must be strictly increasing: {:?}",
                    self.ma_placement
                ));
            }
            prev = l;
            let c = self.channels(l);
            if !c.is_multiple_of(3) {
                return fail(format!(
                    "level {l} has {c} channels, not divisible by 3 (three views)"
                ));
            }
        }
        Ok(())
    }

    /// Channel width after level `level`; level 0 is the input conv.
    pub fn channels(&self, level: usize) -> usize {
        if level <= 1 {
            return self.base_channels.min(self.max_channels);
        }
        let mut c = self.base_channels;
        for _ in 1..level {
            c = c.saturating_mul(self.channel_growth);
            if c >= self.max_channels {
                return self.max_channels;
            }
        }
        c
    }

    pub fn has_ma(&self, level: usize) -> bool {
        self.ma_placement.contains(&level)
    }

    /// Symmetric padding that makes the Down/Up convs divide/multiply the
    /// length by exactly `stride`.
    pub fn padding(&self) -> usize {
        (self.kernel - self.stride) / 2
    }

    /// Total length reduction of the encoder.
    pub fn total_stride(&self) -> usize {
        self.stride.pow(self.depth as u32)
    }

    /// Input length after right-padding to a multiple of the total stride.
    pub fn padded_len(&self, t: usize) -> usize {
        let s = self.total_stride();
        t.max(1).div_ceil(s) * s
    }

    /// Time length at `level` for a padded input length.
    pub fn level_len(&self, padded: usize, level: usize) -> usize {
        padded / self.stride.pow(level as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes_are_valid() {
        ModelConfig::teacher(4, 60).validate().unwrap();
        for c in [12, 24, 30] {
            ModelConfig::student(3, c).validate().unwrap();
        }
        ModelConfig::teacher(3, 24).validate().unwrap();
        ModelConfig::student(2, 6).validate().unwrap();
    }

    #[test]
    fn channel_growth_is_capped() {
        let c = ModelConfig::teacher(4, 60);
        assert_eq!(
            [c.channels(1), c.channels(2), c.channels(3), c.channels(4)],
            [60, 120, 240, 480]
        );
        let mut big = ModelConfig::student(4, 192);
        big.ma_placement = alloc::vec![1];
        assert_eq!(big.channels(3), 512);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ModelConfig::student(3, 10);
        assert!(c.validate().is_err());
        c.base_channels = 12;
        c.ma_placement = alloc::vec![4];
        assert!(c.validate().is_err());
        c.ma_placement = alloc::vec![];
        c.depth = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn padding_rounds_up_to_total_stride() {
        let c = ModelConfig::student(3, 12);
        assert_eq!(c.padded_len(1), 64);
        assert_eq!(c.padded_len(64), 64);
        assert_eq!(c.padded_len(977), 1024);
        assert_eq!(c.level_len(1024, 2), 64);
    }
}
