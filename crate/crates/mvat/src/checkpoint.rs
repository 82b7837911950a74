//! Checkpoint files.
//!
//! A checkpoint is one file: a UTF-8 header terminated by a line `end`, then
//! the run configuration as TOML, then a blob of little-endian `f32` values.
//!
//! ```text
//! mvat-checkpoint 1
//! role student
//! progress <epochs_done> <global_step>
//! best <epoch> <si-sdr as f64 bits in hex> | best none
//! rng <seed> <next_epoch>
//! adam <step> | adam none
//! config <bytes>
//! blob <bytes> <fnv1a-64 of the blob in hex>
//! tensor <name> <d0>x<d1>x... <byte offset>
//! ...
//! end
//! ```
//!
//! Parameters come first in layout order, then Adam first moments
//! (`adam.m:<name>`) and second moments (`adam.v:<name>`).

use std::fmt::Write as _;
use std::path::Path;

use mvat_core::model::{Manner, ModelConfig, ParamStore, Role};
use mvat_core::Tensor;

use crate::config::RunConfig;
use crate::{Error, Result};

pub const MAGIC: &str = "mvat-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
}

/// Best validation score so far.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Best {
    pub epoch: usize,
    pub val_si_sdr: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Progress {
    pub epochs_done: usize,
    pub global_step: u64,
    pub best: Option<Best>,
}

/// Shuffles and crops of epoch `e` are drawn from a stream keyed by
/// `(seed, e)`, so this pair is the whole sampler state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
    pub next_epoch: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub role: Role,
    pub config: RunConfig,
    pub params: ParamStore<f32>,
    pub optimizer: Option<OptimizerState>,
    pub progress: Progress,
    pub rng: RngState,
}

fn role_str(role: Role) -> &'static str {
    match role {
        Role::Teacher => "teacher",
        Role::Student => "student",
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

impl Checkpoint {
    /// Model configuration of the stored parameters.
    pub fn model_config(&self) -> Result<&ModelConfig> {
        match self.role {
            Role::Teacher => self.config.teacher(),
            Role::Student => self.config.student(),
        }
    }

    pub fn model(&self) -> Result<Manner> {
        Ok(Manner::new(self.model_config()?.clone())?)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let config = self.config.to_toml()?;
        let mut tensors: Vec<(String, &[usize], &[f32])> = self
            .params
            .iter()
            .map(|(n, t)| (n.to_string(), t.shape(), t.data()))
            .collect();
        if let Some(opt) = &self.optimizer {
            if opt.m.len() != self.params.len() || opt.v.len() != self.params.len() {
                return Err(Error::checkpoint(
                    "optimizer state does not match the parameter list",
                ));
            }
            for (prefix, moments) in [("adam.m", &opt.m), ("adam.v", &opt.v)] {
                for ((name, t), mom) in self.params.iter().zip(moments.iter()) {
                    if mom.len() != t.numel() {
                        return Err(Error::checkpoint(format!(
                            "{prefix}:{name} has {} values, expected {}",
                            mom.len(),
                            t.numel()
                        )));
                    }
                    tensors.push((format!("{prefix}:{name}"), t.shape(), mom));
                }
            }
        }
        let mut blob = Vec::with_capacity(tensors.iter().map(|t| t.2.len() * 4).sum());
        let mut listing = String::new();
        for (name, shape, data) in &tensors {
            let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
            writeln!(listing, "tensor {name} {} {}", dims.join("x"), blob.len())
                .expect("write to string");
            for v in data.iter() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut head = format!("{MAGIC} {VERSION}\nrole {}\n", role_str(self.role));
        let p = &self.progress;
        writeln!(head, "progress {} {}", p.epochs_done, p.global_step).expect("write to string");
        match p.best {
            Some(b) => writeln!(head, "best {} {:016x}", b.epoch, b.val_si_sdr.to_bits()),
            None => writeln!(head, "best none"),
        }
        .expect("write to string");
        writeln!(head, "rng {} {}", self.rng.seed, self.rng.next_epoch).expect("write to string");
        match &self.optimizer {
            Some(o) => writeln!(head, "adam {}", o.step),
            None => writeln!(head, "adam none"),
        }
        .expect("write to string");
        writeln!(head, "config {}", config.len()).expect("write to string");
        writeln!(head, "blob {} {:016x}", blob.len(), fnv1a(&blob)).expect("write to string");
        head.push_str(&listing);
        head.push_str("end\n");
        let mut out = head.into_bytes();
        out.extend_from_slice(config.as_bytes());
        out.extend_from_slice(&blob);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Parser::parse(bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, bytes).map_err(Error::io(&tmp))?;
        std::fs::rename(&tmp, path).map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(Error::io(path))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

struct Parser<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

fn bad(line: usize, what: impl std::fmt::Display) -> Error {
    Error::checkpoint(format!("corrupt header line {line}: {what}"))
}

impl<'a> Parser<'a> {
    /// Next line split into words; the first must equal `key`.
    fn field(&mut self, key: &str) -> Result<Vec<&'a str>> {
        self.line_no += 1;
        let line = self
            .lines
            .next()
            .ok_or_else(|| bad(self.line_no, format!("expected `{key}`, header ended")))?;
        let mut words = line.split(' ');
        if words.next() != Some(key) {
            return Err(bad(self.line_no, format!("expected `{key}`, got `{line}`")));
        }
        Ok(words.collect())
    }

    fn num<N: std::str::FromStr>(&self, s: &str) -> Result<N> {
        s.parse()
            .map_err(|_| bad(self.line_no, format!("`{s}` is not a number")))
    }

    fn arity<'w>(&self, words: &'w [&'a str], n: usize) -> Result<&'w [&'a str]> {
        if words.len() == n {
            Ok(words)
        } else {
            Err(bad(
                self.line_no,
                format!("expected {n} values, got {}", words.len()),
            ))
        }
    }

    fn parse(bytes: &[u8]) -> Result<Checkpoint> {
        const END: &[u8] = b"\nend\n";
        let head_len = bytes
            .windows(END.len())
            .position(|w| w == END)
            .map(|i| i + END.len())
            .ok_or_else(|| {
                Error::checkpoint("header terminator not found (truncated or not a checkpoint)")
            })?;
        let head = std::str::from_utf8(&bytes[..head_len])
            .map_err(|_| Error::checkpoint("header is not UTF-8"))?;
        let mut p = Parser {
            lines: head.lines(),
            line_no: 0,
        };

        let magic = p
            .field(MAGIC)
            .map_err(|_| Error::checkpoint("not an mvat checkpoint"))?;
        let version: u32 = p.num(p.arity(&magic, 1)?[0])?;
        if version != VERSION {
            return Err(Error::checkpoint(format!(
                "unsupported version {version} (this build reads {VERSION})"
            )));
        }
        let role = match p.field("role")?.as_slice() {
            ["teacher"] => Role::Teacher,
            ["student"] => Role::Student,
            other => return Err(bad(p.line_no, format!("unknown role {other:?}"))),
        };
        let w = p.field("progress")?;
        let w = p.arity(&w, 2)?;
        let (epochs_done, global_step) = (p.num(w[0])?, p.num(w[1])?);
        let best = match p.field("best")?.as_slice() {
            ["none"] => None,
            [epoch, bits] => Some(Best {
                epoch: p.num(epoch)?,
                val_si_sdr: f64::from_bits(
                    u64::from_str_radix(bits, 16).map_err(|_| bad(p.line_no, "bad score bits"))?,
                ),
            }),
            _ => return Err(bad(p.line_no, "malformed best record")),
        };
        let w = p.field("rng")?;
        let w = p.arity(&w, 2)?;
        let rng = RngState {
            seed: p.num(w[0])?,
            next_epoch: p.num(w[1])?,
        };
        let adam_step: Option<u64> = match p.field("adam")?.as_slice() {
            ["none"] => None,
            [step] => Some(p.num(step)?),
            _ => return Err(bad(p.line_no, "malformed adam record")),
        };
        let w = p.field("config")?;
        let config_len: usize = p.num(p.arity(&w, 1)?[0])?;
        let w = p.field("blob")?;
        let w = p.arity(&w, 2)?;
        let blob_len: usize = p.num(w[0])?;
        let checksum = u64::from_str_radix(w[1], 16).map_err(|_| bad(p.line_no, "bad checksum"))?;

        let expected = head_len
            .checked_add(config_len)
            .and_then(|n| n.checked_add(blob_len));
        match expected {
            Some(n) if n == bytes.len() => {}
            Some(n) if n > bytes.len() => {
                return Err(Error::checkpoint(format!(
                    "truncated: {} bytes, header promises {n}",
                    bytes.len()
                )))
            }
            _ => return Err(Error::checkpoint("trailing bytes after blob")),
        }
        let config_text = std::str::from_utf8(&bytes[head_len..head_len + config_len])
            .map_err(|_| Error::checkpoint("config echo is not UTF-8"))?;
        let config = RunConfig::parse(config_text)
            .map_err(|e| Error::checkpoint(format!("config echo: {e}")))?;
        let blob = &bytes[head_len + config_len..];
        if fnv1a(blob) != checksum {
            return Err(Error::checkpoint("blob checksum mismatch"));
        }

        let mut named: Vec<(String, Vec<usize>, Vec<f32>)> = Vec::new();
        let mut offset = 0usize;
        loop {
            p.line_no += 1;
            let line = p
                .lines
                .next()
                .ok_or_else(|| bad(p.line_no, "missing `end`"))?;
            if line == "end" {
                break;
            }
            let words: Vec<&str> = line.split(' ').collect();
            if words.len() != 4 || words[0] != "tensor" {
                return Err(bad(
                    p.line_no,
                    format!("expected a tensor record, got `{line}`"),
                ));
            }
            let shape = words[2]
                .split('x')
                .map(|d| p.num::<usize>(d))
                .collect::<Result<Vec<usize>>>()?;
            let at: usize = p.num(words[3])?;
            if at != offset {
                return Err(bad(
                    p.line_no,
                    format!("tensor {} at offset {at}, expected {offset}", words[1]),
                ));
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| bad(p.line_no, "shape overflow"))?;
            let end = numel
                .checked_mul(4)
                .and_then(|n| n.checked_add(offset))
                .filter(|&e| e <= blob.len())
                .ok_or_else(|| bad(p.line_no, format!("tensor {} runs past the blob", words[1])))?;
            let data = blob[offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            offset = end;
            if named.iter().any(|(n, _, _)| n == words[1]) {
                return Err(bad(p.line_no, format!("duplicate tensor {}", words[1])));
            }
            named.push((words[1].to_string(), shape, data));
        }
        if offset != blob.len() {
            return Err(Error::checkpoint(format!(
                "blob has {} unreferenced bytes",
                blob.len() - offset
            )));
        }

        let model_cfg = match role {
            Role::Teacher => config.teacher(),
            Role::Student => config.student(),
        }
        .map_err(|e| Error::checkpoint(format!("config echo: {e}")))?;
        let layout = Manner::new(model_cfg.clone())?.layout().clone();
        let n = layout.specs().len();
        let expected_tensors = if adam_step.is_some() { 3 * n } else { n };
        if named.len() != expected_tensors {
            return Err(Error::checkpoint(format!(
                "{} tensors stored, model layout needs {expected_tensors}",
                named.len()
            )));
        }
        let mut rest = named.into_iter();
        let mut params = Vec::with_capacity(n);
        for spec in layout.specs() {
            let (name, shape, data) = rest.next().expect("counted");
            if name != spec.name || shape != spec.shape {
                return Err(Error::checkpoint(format!(
                    "tensor {name} {shape:?} does not match layout entry {} {:?}",
                    spec.name, spec.shape
                )));
            }
            params.push((name, Tensor::new(shape, data)?));
        }
        let optimizer = match adam_step {
            None => None,
            Some(step) => {
                let mut moments = |prefix: &str| -> Result<Vec<Vec<f32>>> {
                    layout
                        .specs()
                        .iter()
                        .map(|spec| {
                            let (name, shape, data) = rest.next().expect("counted");
                            if name != format!("{prefix}:{}", spec.name) || shape != spec.shape {
                                return Err(Error::checkpoint(format!(
                                    "unexpected optimizer tensor {name}"
                                )));
                            }
                            Ok(data)
                        })
                        .collect()
                };
                let m = moments("adam.m")?;
                let v = moments("adam.v")?;
                Some(OptimizerState { step, m, v })
            }
        };
        Ok(Checkpoint {
            role,
            config,
            params: ParamStore::from_named(params),
            optimizer,
            progress: Progress {
                epochs_done,
                global_step,
                best,
            },
            rng,
        })
    }
}
