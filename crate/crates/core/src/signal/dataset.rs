use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use super::{mix_at_snr, synth_clean, synth_noise, Mixture};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum NoiseKind {
    White,
    Pink,
    FilteredBabble,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Pink, NoiseKind::FilteredBabble];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::FilteredBabble => "filtered-babble",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown noise kind `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn code(self) -> u64 {
        match self {
            Split::Train => 1,
            Split::Val => 2,
            Split::Test => 3,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::invalid(alloc::format!("unknown split `{s}`"))),
        }
    }
}

/// Recipe for one noisy example.
#[derive(Clone, Debug, PartialEq)]
pub struct MixSpec {
    pub snr_db: f64,
    pub clean_seed: u64,
    pub noise_seed: u64,
    pub noise_kind: NoiseKind,
    pub duration_s: f64,
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invalid("duration_s must be positive"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (self.duration_s * super::SAMPLE_RATE as f64).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One row of a corpus manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub split: Split,
    pub index: usize,
    pub spec: MixSpec,
}

/// Synthetic corpus layout.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CorpusConfig {
    pub seed: u64,
    pub train_clips: usize,
    pub val_clips: usize,
    pub test_clips: usize,
    pub duration_s: f64,
    pub snrs_db: Vec<f64>,
    /// Noise kinds of the train and validation splits.
    pub train_noise: Vec<NoiseKind>,
    /// Noise kinds of the test split; disjoint from `train_noise`.
    pub test_noise: Vec<NoiseKind>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train_clips: 200,
            val_clips: 40,
            test_clips: 40,
            duration_s: 1.0,
            snrs_db: alloc::vec![0.0, 5.0, 10.0, 15.0],
            train_noise: alloc::vec![NoiseKind::White, NoiseKind::FilteredBabble],
            test_noise: alloc::vec![NoiseKind::Pink],
        }
    }
}

const INDEX_BITS: u32 = 27;

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snrs_db.is_empty() || self.train_noise.is_empty() || self.test_noise.is_empty() {
            return Err(Error::invalid(
                "corpus needs at least one snr and noise kind per split",
            ));
        }
        if self.train_noise.iter().any(|k| self.test_noise.contains(k)) {
            return Err(Error::invalid(
                "test noise kinds must be disjoint from train noise kinds",
            ));
        }
        let max = self.train_clips.max(self.val_clips).max(self.test_clips);
        if max >= 1 << INDEX_BITS {
            return Err(Error::invalid("too many clips in one split"));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::invalid("duration_s must be positive"));
        }
        Ok(())
    }

    pub fn clips(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_clips,
            Split::Val => self.val_clips,
            Split::Test => self.test_clips,
        }
    }

    fn kinds(&self, split: Split) -> &[NoiseKind] {
        match split {
            Split::Test => &self.test_noise,
            _ => &self.train_noise,
        }
    }
}

/// Seed of sample `index` of `split`. The split code and index occupy
/// distinct bit fields, so seed ranges never overlap across splits or between
/// the clean and noise streams.
fn sample_seed(global: u64, split: Split, index: usize, stream: u64) -> u64 {
    ((global & 0xFFFF_FFFF) << 32)
        | (split.code() << (INDEX_BITS + 1))
        | ((index as u64) << 1)
        | stream
}

/// Manifest records of one split. Each record depends only on
/// `(seed, split, index)`, so generation order is irrelevant.
pub fn corpus(cfg: &CorpusConfig, split: Split) -> Result<Vec<SampleRecord>> {
    cfg.validate()?;
    let kinds = cfg.kinds(split);
    Ok((0..cfg.clips(split))
        .map(|index| SampleRecord {
            split,
            index,
            spec: MixSpec {
                snr_db: cfg.snrs_db[(index / kinds.len()) % cfg.snrs_db.len()],
                clean_seed: sample_seed(cfg.seed, split, index, 0),
                noise_seed: sample_seed(cfg.seed, split, index, 1),
                noise_kind: kinds[index % kinds.len()],
                duration_s: cfg.duration_s,
            },
        })
        .collect())
}

/// Synthesises the clean signal and noise of `spec` and mixes them.
pub fn render(spec: &MixSpec) -> Result<Mixture> {
    spec.validate()?;
    let clean = synth_clean(spec)?;
    let noise = synth_noise(spec.noise_kind, spec.noise_seed, clean.len())?;
    mix_at_snr(&clean, &noise, spec.snr_db)
}

impl fmt::Display for SampleRecord {
    /// Tab-separated manifest line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.split,
            self.index,
            self.spec.clean_seed,
            self.spec.noise_seed,
            self.spec.snr_db,
            self.spec.noise_kind,
            self.spec.duration_s
        )
    }
}

impl FromStr for SampleRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(Error::invalid(alloc::format!(
                "manifest line needs 7 tab-separated fields, got {}",
                fields.len()
            )));
        }
        let num = |s: &str, what: &str| -> Result<String> {
            if s.is_empty() {
                Err(Error::invalid(alloc::format!("empty {what}")))
            } else {
                Ok(String::from(s))
            }
        };
        let bad = |what: &str| Error::invalid(alloc::format!("bad {what} in manifest line"));
        let record = SampleRecord {
            split: fields[0].parse()?,
            index: num(fields[1], "index")?.parse().map_err(|_| bad("index"))?,
            spec: MixSpec {
                clean_seed: fields[2].parse().map_err(|_| bad("clean seed"))?,
                noise_seed: fields[3].parse().map_err(|_| bad("noise seed"))?,
                snr_db: fields[4].parse().map_err(|_| bad("snr"))?,
                noise_kind: fields[5].parse()?,
                duration_s: fields[6].parse().map_err(|_| bad("duration"))?,
            },
        };
        record.spec.validate()?;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::string::ToString;

    #[test]
    fn seeds_are_disjoint_across_splits_and_streams() {
        let cfg = CorpusConfig::default();
        let mut seen = BTreeSet::new();
        for split in [Split::Train, Split::Val, Split::Test] {
            for r in corpus(&cfg, split).unwrap() {
                assert!(seen.insert(r.spec.clean_seed));
                assert!(seen.insert(r.spec.noise_seed));
            }
        }
    }

    #[test]
    fn test_noise_is_unseen() {
        let cfg = CorpusConfig::default();
        let train: BTreeSet<_> = corpus(&cfg, Split::Train)
            .unwrap()
            .iter()
            .map(|r| r.spec.noise_kind)
            .collect();
        let test: BTreeSet<_> = corpus(&cfg, Split::Test)
            .unwrap()
            .iter()
            .map(|r| r.spec.noise_kind)
            .collect();
        assert!(train.is_disjoint(&test));
        let mut bad = cfg.clone();
        bad.test_noise = alloc::vec![NoiseKind::White];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn manifest_line_round_trips() {
        let r = corpus(&CorpusConfig::default(), Split::Val)
            .unwrap()
            .remove(5);
        let back: SampleRecord = r.to_string().parse().unwrap();
        assert_eq!(back, r);
        assert!("train\t1\t2".parse::<SampleRecord>().is_err());
    }

    #[test]
    fn every_snr_level_is_used() {
        let recs = corpus(&CorpusConfig::default(), Split::Train).unwrap();
        for snr in [0.0, 5.0, 10.0, 15.0] {
            assert!(recs.iter().any(|r| r.spec.snr_db == snr));
        }
    }
}
