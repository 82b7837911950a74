#![allow(dead_code)]

use mvat::checkpoint::Checkpoint;
use mvat::config::RunConfig;
use mvat::trainer::{LogRecord, Splits, StepRecord};
use mvat::Result;

pub const TINY: &str = "
[model.teacher]
depth = 2
base_channels = 6

[model.student]
depth = 2
base_channels = 6

[train]
epochs = 2
seed = 7
segment_len = 2048

[data]
seed = 3
train_clips = 8
val_clips = 4
test_clips = 4
duration_s = 0.25
";

pub fn tiny() -> RunConfig {
    RunConfig::parse(TINY).unwrap()
}

pub fn tiny_with(extra: &str) -> RunConfig {
    RunConfig::parse(&format!("{TINY}\n{extra}")).unwrap()
}

pub fn splits(cfg: &RunConfig) -> Splits {
    Splits::render(&cfg.data).unwrap()
}

pub fn ignore(_: &LogRecord) -> Result<()> {
    Ok(())
}

/// Collects every step record.
pub fn steps_into(out: &mut Vec<StepRecord>) -> impl FnMut(&LogRecord) -> Result<()> + '_ {
    move |rec| {
        if let LogRecord::Step(s) = rec {
            out.push(s.clone());
        }
        Ok(())
    }
}

pub fn bytes(ckpt: &Checkpoint) -> Vec<u8> {
    ckpt.to_bytes().unwrap()
}

pub fn param_bits(ckpt: &Checkpoint) -> Vec<u32> {
    ckpt.params
        .tensors()
        .iter()
        .flat_map(|t| t.data().iter().map(|v| v.to_bits()))
        .collect()
}
