//! Supervised training, distillation and evaluation loops.

use mvat_core::distill::{dual_depth_map, total_training_loss, PairMap};
use mvat_core::model::{Manner, ParamStore, Role};
use mvat_core::optim::{clip_grad_norm, Adam, AdamConfig};
use mvat_core::signal::{
    corpus, render, si_sdr, waveform_loss, AudioClip, CorpusConfig, SampleRecord, Split,
    StftConfig, SAMPLE_RATE,
};
use mvat_core::{Graph, Tensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Best, Checkpoint, OptimizerState, Progress, RngState};
use crate::config::RunConfig;
use crate::{Error, Result};

/// Clips per forward pass during evaluation.
const EVAL_BATCH: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub index: usize,
    pub noisy: Vec<f32>,
    pub clean: Vec<f32>,
}

/// Rendered noisy/clean pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
}

fn to_f32(x: &[f64]) -> Vec<f32> {
    x.iter().map(|&v| v as f32).collect()
}

impl Dataset {
    pub fn from_records(records: &[SampleRecord]) -> Result<Self> {
        let examples = records
            .iter()
            .map(|r| {
                let m = render(&r.spec)?;
                Ok(Example {
                    index: r.index,
                    noisy: to_f32(m.noisy.samples()),
                    clean: to_f32(m.clean.samples()),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { examples })
    }

    pub fn split(cfg: &CorpusConfig, split: Split) -> Result<Self> {
        Self::from_records(&corpus(cfg, split)?)
    }

    pub fn from_examples(examples: Vec<Example>) -> Result<Self> {
        for e in &examples {
            if e.noisy.len() != e.clean.len() || e.noisy.is_empty() {
                return Err(Error::Invalid(format!(
                    "example {}: noisy ({}) and clean ({}) lengths must match and be non-zero",
                    e.index,
                    e.noisy.len(),
                    e.clean.len()
                )));
            }
        }
        Ok(Self { examples })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Train, validation and test splits of one corpus.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn render(cfg: &CorpusConfig) -> Result<Self> {
        Ok(Self {
            train: Dataset::split(cfg, Split::Train)?,
            val: Dataset::split(cfg, Split::Val)?,
            test: Dataset::split(cfg, Split::Test)?,
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `(example, crop offset)` for every example of epoch `epoch`, in visiting order.
pub fn epoch_plan(
    data: &Dataset,
    segment_len: usize,
    seed: u64,
    epoch: u64,
) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(epoch)));
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    order
        .into_iter()
        .map(|i| {
            let len = data.examples[i].noisy.len();
            let offset = if len > segment_len {
                rng.random_range(0..=len - segment_len)
            } else {
                0
            };
            (i, offset)
        })
        .collect()
}

/// Stacks crops into `[B, 1, segment_len]` inputs and targets; short clips are
/// zero-padded at the end.
fn assemble(
    data: &Dataset,
    batch: &[(usize, usize)],
    segment_len: usize,
) -> (Tensor<f32>, Tensor<f32>) {
    let mut x = vec![0.0f32; batch.len() * segment_len];
    let mut y = vec![0.0f32; batch.len() * segment_len];
    for (b, &(i, off)) in batch.iter().enumerate() {
        let e = &data.examples[i];
        let n = segment_len.min(e.noisy.len() - off);
        x[b * segment_len..][..n].copy_from_slice(&e.noisy[off..off + n]);
        y[b * segment_len..][..n].copy_from_slice(&e.clean[off..off + n]);
    }
    let shape = vec![batch.len(), 1, segment_len];
    (
        Tensor::new(shape.clone(), x).expect("sized"),
        Tensor::new(shape, y).expect("sized"),
    )
}

/// One optimizer step. Loss parts are the weighted contributions to
/// `loss_total`, so `loss_total = loss_sup + Σ loss_at_* + loss_kd` up to
/// rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: u64,
    pub loss_total: f64,
    pub loss_sup: f64,
    pub loss_at_channel: f64,
    pub loss_at_global: f64,
    pub loss_at_local: f64,
    pub loss_kd: f64,
    pub lr: f64,
}

/// Means of the step losses over one epoch plus validation SI-SDR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub steps: usize,
    pub loss_total: f64,
    pub loss_sup: f64,
    pub loss_at_channel: f64,
    pub loss_at_global: f64,
    pub loss_at_local: f64,
    pub loss_kd: f64,
    pub lr: f64,
    pub val_si_sdr: f64,
    pub best: bool,
}

impl EpochSummary {
    /// Attention-transfer contribution summed over views.
    pub fn loss_at(&self) -> f64 {
        self.loss_at_channel + self.loss_at_global + self.loss_at_local
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Step(StepRecord),
    Epoch(EpochSummary),
}

pub type Observer<'a> = dyn FnMut(&LogRecord) -> Result<()> + 'a;

pub struct Outcome {
    pub last: Checkpoint,
    /// Checkpoint of the best validation epoch reached in this run.
    pub best: Option<Checkpoint>,
    pub epochs: Vec<EpochSummary>,
}

struct Frozen {
    model: Manner,
    params: ParamStore<f32>,
    pair_map: PairMap,
}

/// Training state of one model, optionally distilled from a frozen teacher.
pub struct Trainer {
    config: RunConfig,
    role: Role,
    model: Manner,
    params: ParamStore<f32>,
    adam: Adam<f32>,
    progress: Progress,
    teacher: Option<Frozen>,
}

fn adam_config(lr: f64) -> AdamConfig {
    AdamConfig {
        lr,
        ..AdamConfig::default()
    }
}

impl Trainer {
    /// Fresh supervised training of the `role` model of `config`.
    pub fn new(config: RunConfig, role: Role) -> Result<Self> {
        config.validate()?;
        let model_cfg = match role {
            Role::Teacher => config.teacher()?,
            Role::Student => config.student()?,
        };
        let model = Manner::new(model_cfg.clone())?;
        let params = model.init_params::<f32>(config.train.seed);
        let adam = Adam::new(adam_config(config.train.learning_rate), params.tensors());
        Ok(Self {
            config,
            role,
            model,
            params,
            adam,
            progress: Progress::default(),
            teacher: None,
        })
    }

    /// Fresh distillation of the student of `config` from `teacher`.
    pub fn with_teacher(mut config: RunConfig, teacher: &Checkpoint) -> Result<Self> {
        let t_cfg = teacher.model_config()?.clone();
        match &config.model.teacher {
            Some(c) if *c != t_cfg => return Err(Error::Config(
                "[model.teacher] differs from the configuration stored in the teacher checkpoint"
                    .into(),
            )),
            _ => config.model.teacher = Some(t_cfg),
        }
        let mut t = Self::new(config, Role::Student)?;
        t.attach_teacher(teacher)?;
        Ok(t)
    }

    /// Continues from `ckpt`; distillation runs need the same teacher again.
    pub fn from_checkpoint(ckpt: Checkpoint, teacher: Option<&Checkpoint>) -> Result<Self> {
        let model = ckpt.model()?;
        let adam = match ckpt.optimizer {
            Some(o) => Adam::from_state(
                adam_config(ckpt.config.train.learning_rate),
                o.step,
                o.m,
                o.v,
            )?,
            None => Adam::new(
                adam_config(ckpt.config.train.learning_rate),
                ckpt.params.tensors(),
            ),
        };
        if ckpt.rng.seed != ckpt.config.train.seed
            || ckpt.rng.next_epoch != ckpt.progress.epochs_done as u64
        {
            return Err(Error::checkpoint(
                "sampler state disagrees with the stored progress",
            ));
        }
        let mut t = Self {
            config: ckpt.config,
            role: ckpt.role,
            model,
            params: ckpt.params,
            adam,
            progress: ckpt.progress,
            teacher: None,
        };
        if let Some(teacher) = teacher {
            if t.config.model.teacher.as_ref() != Some(teacher.model_config()?) {
                return Err(Error::Config(
                    "teacher checkpoint does not match the run's [model.teacher]".into(),
                ));
            }
            t.attach_teacher(teacher)?;
        }
        Ok(t)
    }

    fn attach_teacher(&mut self, teacher: &Checkpoint) -> Result<()> {
        let t_model = teacher.model()?;
        let (t_cfg, s_cfg) = (t_model.config(), self.model.config());
        if t_cfg.kernel != s_cfg.kernel || t_cfg.stride != s_cfg.stride {
            return Err(Error::Config(format!(
                "teacher kernel/stride {}/{} differ from student {}/{}; same-level lengths would not match",
                t_cfg.kernel, t_cfg.stride, s_cfg.kernel, s_cfg.stride
            )));
        }
        let pair_map = dual_depth_map(
            t_cfg.depth,
            s_cfg.depth,
            &s_cfg.ma_placement,
            self.config.distill.dual_depth,
        )?;
        for e in &pair_map.entries {
            if let Some(&l) = e.teacher_levels.iter().find(|l| !t_cfg.has_ma(**l)) {
                return Err(Error::Config(format!(
                    "teacher has no MA block at level {l}, needed by student level {}",
                    e.student_level
                )));
            }
        }
        self.teacher = Some(Frozen {
            model: t_model,
            params: teacher.params.clone(),
            pair_map,
        });
        Ok(())
    }

    pub fn params(&self) -> &ParamStore<f32> {
        &self.params
    }

    pub fn model(&self) -> &Manner {
        &self.model
    }

    /// Weights of the attached teacher.
    pub fn teacher_params(&self) -> Option<&ParamStore<f32>> {
        self.teacher.as_ref().map(|t| &t.params)
    }

    pub fn progress(&self) -> Progress {
        self.progress
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            role: self.role,
            config: self.config.clone(),
            params: self.params.clone(),
            optimizer: Some(OptimizerState {
                step: self.adam.step_count(),
                m: self.adam.first_moments().to_vec(),
                v: self.adam.second_moments().to_vec(),
            }),
            progress: self.progress,
            rng: RngState {
                seed: self.config.train.seed,
                next_epoch: self.progress.epochs_done as u64,
            },
        }
    }

    /// Whether the loss has any teacher-dependent term.
    fn distilling(&self) -> bool {
        let d = &self.config.distill;
        self.teacher.is_some()
            && d.lambda_distill != 0.0
            && (d.lambda_at != 0.0 || d.lambda_kd != 0.0)
    }

    fn step(
        &mut self,
        x: Tensor<f32>,
        y: Tensor<f32>,
        epoch: usize,
        lr: f64,
    ) -> Result<StepRecord> {
        let step = self.progress.global_step + 1;
        self.try_step(x, y, epoch, lr).map_err(|e| match e {
            Error::Core(mvat_core::Error::NonFinite(_)) => Error::Diverged {
                epoch: epoch + 1,
                step: step as usize,
                loss: f64::NAN,
            },
            e => e,
        })
    }

    fn try_step(
        &mut self,
        x: Tensor<f32>,
        y: Tensor<f32>,
        epoch: usize,
        lr: f64,
    ) -> Result<StepRecord> {
        let step = self.progress.global_step + 1;
        let mut g = Graph::<f32>::new();
        let vars = self.params.bind(&mut g, true);
        let xv = g.constant(x);
        let yv = g.constant(y);
        let trace_s = self.model.forward(&mut g, &vars, xv)?;
        let empty = PairMap::default();
        let (trace_t, pair_map) = match &self.teacher {
            Some(t) if self.distilling() => {
                let tv = t.params.bind(&mut g, false);
                (Some(t.model.forward(&mut g, &tv, xv)?), &t.pair_map)
            }
            _ => (None, &empty),
        };
        let d = &self.config.distill;
        let terms = total_training_loss(
            &mut g,
            yv,
            &trace_s,
            trace_t.as_ref(),
            pair_map,
            d,
            &self.config.train.resolutions,
        )?;
        let value = |v| g.value(v).data()[0] as f64;
        let mut rec = StepRecord {
            epoch: epoch + 1,
            step,
            loss_total: value(terms.total),
            loss_sup: value(terms.sup),
            loss_at_channel: 0.0,
            loss_at_global: 0.0,
            loss_at_local: 0.0,
            loss_kd: 0.0,
            lr,
        };
        if let Some(dt) = &terms.distill {
            let w_at = d.lambda_distill * d.lambda_at;
            rec.loss_at_channel = w_at * dt.at_views[0];
            rec.loss_at_global = w_at * dt.at_views[1];
            rec.loss_at_local = w_at * dt.at_views[2];
            rec.loss_kd = dt
                .kd
                .map_or(0.0, |k| d.lambda_distill * d.lambda_kd * value(k));
        }
        let diverged = |loss| Error::Diverged {
            epoch: epoch + 1,
            step: step as usize,
            loss,
        };
        if !rec.loss_total.is_finite() {
            return Err(diverged(rec.loss_total));
        }
        g.backward(terms.total)?;
        let mut grads: Vec<Option<Tensor<f32>>> = vars.iter().map(|&v| g.grad(v)).collect();
        let norm = clip_grad_norm(&mut grads, self.config.train.clip_norm);
        if !norm.is_finite() {
            return Err(diverged(norm));
        }
        self.adam.config.lr = lr;
        self.adam.step(self.params.tensors_mut(), &grads)?;
        self.progress.global_step = step;
        Ok(rec)
    }

    /// Runs one epoch and validates on `val`.
    pub fn run_epoch(
        &mut self,
        train: &Dataset,
        val: &Dataset,
        observe: &mut Observer<'_>,
    ) -> Result<EpochSummary> {
        if train.is_empty() || val.is_empty() {
            return Err(Error::Invalid(
                "training and validation sets must be non-empty".into(),
            ));
        }
        let epoch = self.progress.epochs_done;
        let tc = self.config.train.clone();
        let lr = tc.lr_at(epoch);
        let plan = epoch_plan(train, tc.segment_len, tc.seed, epoch as u64);
        let mut sums = [0.0f64; 6];
        let mut steps = 0;
        for batch in plan.chunks(tc.batch_size) {
            let (x, y) = assemble(train, batch, tc.segment_len);
            let rec = self.step(x, y, epoch, lr)?;
            for (s, v) in sums.iter_mut().zip([
                rec.loss_total,
                rec.loss_sup,
                rec.loss_at_channel,
                rec.loss_at_global,
                rec.loss_at_local,
                rec.loss_kd,
            ]) {
                *s += v;
            }
            steps += 1;
            observe(&LogRecord::Step(rec))?;
        }
        let val_si_sdr = evaluate(&self.model, &self.params, val, &[])?.mean_enhanced;
        self.progress.epochs_done += 1;
        let best = self.progress.best.is_none_or(|b| val_si_sdr > b.val_si_sdr);
        if best {
            self.progress.best = Some(Best {
                epoch: epoch + 1,
                val_si_sdr,
            });
        }
        let n = steps as f64;
        let summary = EpochSummary {
            epoch: epoch + 1,
            steps,
            loss_total: sums[0] / n,
            loss_sup: sums[1] / n,
            loss_at_channel: sums[2] / n,
            loss_at_global: sums[3] / n,
            loss_at_local: sums[4] / n,
            loss_kd: sums[5] / n,
            lr,
            val_si_sdr,
            best,
        };
        observe(&LogRecord::Epoch(summary.clone()))?;
        Ok(summary)
    }

    /// Trains until `until_epoch` epochs are done in total.
    pub fn run(
        &mut self,
        train: &Dataset,
        val: &Dataset,
        until_epoch: usize,
        observe: &mut Observer<'_>,
    ) -> Result<Outcome> {
        let mut best = None;
        let mut epochs = Vec::new();
        while self.progress.epochs_done < until_epoch {
            let s = self.run_epoch(train, val, observe)?;
            if s.best {
                best = Some(self.checkpoint());
            }
            epochs.push(s);
        }
        Ok(Outcome {
            last: self.checkpoint(),
            best,
            epochs,
        })
    }
}

/// Supervised training of the `role` model for `config.train.epochs` epochs.
pub fn train(
    config: &RunConfig,
    role: Role,
    data: &Splits,
    observe: &mut Observer<'_>,
) -> Result<Outcome> {
    let mut t = Trainer::new(config.clone(), role)?;
    t.run(&data.train, &data.val, config.train.epochs, observe)
}

/// Distills the student of `config` from a frozen teacher.
pub fn distill(
    config: &RunConfig,
    teacher: &Checkpoint,
    data: &Splits,
    observe: &mut Observer<'_>,
) -> Result<Outcome> {
    let mut t = Trainer::with_teacher(config.clone(), teacher)?;
    t.run(&data.train, &data.val, config.train.epochs, observe)
}

/// Runs the model on clips of equal length.
pub fn enhance_batch(
    model: &Manner,
    params: &ParamStore<f32>,
    clips: &[&[f32]],
) -> Result<Vec<Vec<f32>>> {
    let Some(len) = clips.first().map(|c| c.len()) else {
        return Ok(Vec::new());
    };
    if clips.iter().any(|c| c.len() != len) {
        return Err(Error::Invalid(
            "enhance_batch needs clips of equal length".into(),
        ));
    }
    let mut g = Graph::<f32>::new();
    let vars = params.bind(&mut g, false);
    let x = g.constant(Tensor::new(vec![clips.len(), 1, len], clips.concat())?);
    let trace = model.forward(&mut g, &vars, x)?;
    Ok(g.value(trace.enhanced)
        .data()
        .chunks(len)
        .map(<[f32]>::to_vec)
        .collect())
}

pub fn enhance(model: &Manner, params: &ParamStore<f32>, noisy: &[f32]) -> Result<Vec<f32>> {
    Ok(enhance_batch(model, params, &[noisy])?
        .pop()
        .expect("one clip"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipScore {
    pub index: usize,
    pub si_sdr_enhanced: f64,
    pub si_sdr_noisy: f64,
    pub improvement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub clips: Vec<ClipScore>,
    pub mean_enhanced: f64,
    pub mean_noisy: f64,
    pub mean_improvement: f64,
    /// Mean supervised loss; absent when no resolutions are given or a clip is
    /// shorter than an STFT window.
    pub sup_loss: Option<f64>,
}

fn clip64(x: &[f32]) -> Result<AudioClip> {
    Ok(AudioClip::new(
        x.iter().map(|&v| v as f64).collect(),
        SAMPLE_RATE,
    )?)
}

/// SI-SDR of enhanced and noisy inputs against the clean references.
pub fn evaluate(
    model: &Manner,
    params: &ParamStore<f32>,
    data: &Dataset,
    resolutions: &[StftConfig],
) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::Invalid("evaluation set is empty".into()));
    }
    let max_window = resolutions.iter().map(|r| r.window_len).max().unwrap_or(0);
    let mut sup = (!resolutions.is_empty()).then_some(0.0);
    let mut clips = Vec::with_capacity(data.len());
    let ex = &data.examples;
    let mut start = 0;
    while start < ex.len() {
        let len = ex[start].noisy.len();
        let mut end = start + 1;
        while end < ex.len() && end - start < EVAL_BATCH && ex[end].noisy.len() == len {
            end += 1;
        }
        let batch = &ex[start..end];
        let mut g = Graph::<f32>::new();
        let vars = params.bind(&mut g, false);
        let x = g.constant(Tensor::new(
            vec![batch.len(), 1, len],
            batch.iter().flat_map(|e| e.noisy.iter().copied()).collect(),
        )?);
        let trace = model.forward(&mut g, &vars, x)?;
        if len >= max_window && sup.is_some() {
            let y = g.constant(Tensor::new(
                vec![batch.len(), 1, len],
                batch.iter().flat_map(|e| e.clean.iter().copied()).collect(),
            )?);
            let l = waveform_loss(&mut g, trace.enhanced, y, resolutions)?;
            sup = sup.map(|s| s + g.value(l).data()[0] as f64 * batch.len() as f64);
        } else {
            sup = None;
        }
        for (e, est) in batch.iter().zip(g.value(trace.enhanced).data().chunks(len)) {
            let clean = clip64(&e.clean)?;
            let si_sdr_enhanced = si_sdr(&clip64(est)?, &clean)?;
            let si_sdr_noisy = si_sdr(&clip64(&e.noisy)?, &clean)?;
            clips.push(ClipScore {
                index: e.index,
                si_sdr_enhanced,
                si_sdr_noisy,
                improvement: si_sdr_enhanced - si_sdr_noisy,
            });
        }
        start = end;
    }
    let n = clips.len() as f64;
    let mean = |f: fn(&ClipScore) -> f64| clips.iter().map(f).sum::<f64>() / n;
    Ok(EvalReport {
        mean_enhanced: mean(|c| c.si_sdr_enhanced),
        mean_noisy: mean(|c| c.si_sdr_noisy),
        mean_improvement: mean(|c| c.improvement),
        sup_loss: sup.map(|s| s / n),
        clips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, len: usize) -> Dataset {
        Dataset::from_examples(
            (0..n)
                .map(|i| Example {
                    index: i,
                    noisy: (0..len)
                        .map(|t| ((t + i) as f32 * 0.05).sin() * 0.3)
                        .collect(),
                    clean: (0..len)
                        .map(|t| ((t + i) as f32 * 0.05).sin() * 0.2)
                        .collect(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn epoch_plan_is_a_seeded_permutation_with_valid_crops() {
        let data = toy(9, 100);
        let plan = epoch_plan(&data, 40, 3, 0);
        let mut seen: Vec<usize> = plan.iter().map(|p| p.0).collect();
        seen.sort();
        assert_eq!(seen, (0..9).collect::<Vec<_>>());
        assert!(plan.iter().all(|&(_, off)| off <= 60));
        assert_eq!(plan, epoch_plan(&data, 40, 3, 0));
        assert_ne!(plan, epoch_plan(&data, 40, 3, 1));
        assert_ne!(plan, epoch_plan(&data, 40, 4, 0));
        assert!(epoch_plan(&data, 200, 3, 0)
            .iter()
            .all(|&(_, off)| off == 0));
    }

    #[test]
    fn assemble_pads_short_clips() {
        let data = toy(2, 10);
        let (x, y) = assemble(&data, &[(1, 0), (0, 4)], 8);
        assert_eq!(x.shape(), &[2, 1, 8]);
        assert_eq!(&x.data()[..8], &data.examples[1].noisy[..8]);
        assert_eq!(&y.data()[8..14], &data.examples[0].clean[4..10]);
        assert_eq!(&x.data()[14..], &[0.0, 0.0]);
    }

    #[test]
    fn dataset_rejects_mismatched_pairs() {
        let bad = Example {
            index: 0,
            noisy: vec![0.0; 3],
            clean: vec![0.0; 2],
        };
        assert!(Dataset::from_examples(vec![bad]).is_err());
    }
}
