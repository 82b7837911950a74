//! Finite-difference cases for every differentiable primitive and for the
//! combined distillation objective on a toy teacher/student pair.

#![allow(dead_code)]

use mvat_core::distill::{dual_depth_map, total_training_loss, DistillConfig, PLoss};
use mvat_core::gradcheck::{check_gradients, GradCheckConfig, GradCheckReport, Probe};
use mvat_core::model::{LayoutBuilder, MaBlock, Manner, MaskGate, ModelConfig, ResCon};
use mvat_core::signal::{l1_loss, mrstft_loss, StftConfig};
use mvat_core::{distill, Graph, Result, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Build = Box<dyn Fn(&mut Graph<f64>, &[Var]) -> Result<Var>>;

pub struct Case {
    pub name: &'static str,
    pub inputs: Vec<Tensor<f64>>,
    pub build: Build,
    pub probe: Probe,
}

impl Case {
    pub fn run(&self) -> Result<GradCheckReport> {
        let cfg = GradCheckConfig {
            probe: self.probe,
            ..GradCheckConfig::default()
        };
        check_gradients(&self.inputs, cfg, &self.build)
    }
}

pub const TOLERANCE: f64 = 1e-4;

pub fn small_resolutions() -> Vec<StftConfig> {
    vec![StftConfig::new(64, 16, 32), StftConfig::new(128, 32, 64)]
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `[-1, 1]`, pushed away from zero by `gap`.
pub fn rand_tensor(shape: &[usize], seed: u64, gap: f64) -> Tensor<f64> {
    let mut r = rng(seed);
    Tensor::from_fn(shape.to_vec(), |_| {
        let v: f64 = r.random_range(-1.0..1.0);
        v.signum() * (gap + (1.0 - gap) * v.abs())
    })
}

fn positive(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut r = rng(seed);
    Tensor::from_fn(shape.to_vec(), |_| r.random_range(0.5..2.0))
}

/// Reduces `y` to a scalar with fixed pseudo-random weights so that no
/// gradient direction cancels by symmetry.
pub fn project(g: &mut Graph<f64>, y: Var, seed: u64) -> Result<Var> {
    let w = rand_tensor(g.shape(y), seed ^ 0x5eed, 0.1);
    let w = g.constant(w);
    let p = g.mul(y, w)?;
    g.sum_all(p)
}

fn case(
    name: &'static str,
    inputs: Vec<Tensor<f64>>,
    build: impl Fn(&mut Graph<f64>, &[Var]) -> Result<Var> + 'static,
) -> Case {
    Case {
        name,
        inputs,
        build: Box::new(build),
        probe: Probe::All,
    }
}

macro_rules! unary {
    ($name:literal, $input:expr, |$g:ident, $x:ident| $body:expr) => {
        case($name, vec![$input], |$g, v| {
            let $x = v[0];
            let y = $body?;
            project($g, y, 1)
        })
    };
}

macro_rules! binary {
    ($name:literal, $a:expr, $b:expr, $method:ident) => {
        case($name, vec![$a, $b], |g, v| {
            let y = g.$method(v[0], v[1])?;
            project(g, y, 2)
        })
    };
}

pub fn primitive_cases() -> Vec<Case> {
    let s = [2, 3, 5];
    let mut cases = vec![
        binary!("add", rand_tensor(&s, 1, 0.0), rand_tensor(&s, 2, 0.0), add),
        binary!("sub", rand_tensor(&s, 3, 0.0), rand_tensor(&s, 4, 0.0), sub),
        binary!("mul", rand_tensor(&s, 5, 0.0), rand_tensor(&s, 6, 0.0), mul),
        binary!("div", rand_tensor(&s, 7, 0.0), positive(&s, 8), div),
        binary!(
            "add (scalar broadcast)",
            rand_tensor(&s, 9, 0.0),
            rand_tensor(&[1], 10, 0.2),
            add
        ),
        binary!(
            "mul (scalar broadcast)",
            rand_tensor(&[1], 11, 0.2),
            rand_tensor(&s, 12, 0.0),
            mul
        ),
        binary!(
            "div (scalar broadcast)",
            rand_tensor(&s, 13, 0.0),
            positive(&[1], 14),
            div
        ),
        unary!("neg", rand_tensor(&s, 15, 0.0), |g, x| g.neg(x)),
        unary!("abs", rand_tensor(&s, 16, 0.1), |g, x| g.abs(x)),
        unary!("pow 2.5", positive(&s, 17), |g, x| g.pow(x, 2.5)),
        unary!("pow 0.5", positive(&s, 18), |g, x| g.pow(x, 0.5)),
        unary!("pow 3 (negative base)", rand_tensor(&s, 19, 0.1), |g, x| g
            .pow(x, 3.0)),
        unary!("sigmoid", rand_tensor(&s, 20, 0.0), |g, x| g.sigmoid(x)),
        unary!("tanh", rand_tensor(&s, 21, 0.0), |g, x| g.tanh(x)),
        unary!("relu", rand_tensor(&s, 22, 0.1), |g, x| g.relu(x)),
        unary!("exp", rand_tensor(&s, 23, 0.0), |g, x| g.exp(x)),
        unary!("log", positive(&s, 24), |g, x| g.log(x)),
        unary!("scale", rand_tensor(&s, 25, 0.0), |g, x| g.scale(x, -1.7)),
        unary!("shift", rand_tensor(&s, 26, 0.0), |g, x| g.shift(x, 0.3)),
        unary!("swish", rand_tensor(&s, 27, 0.0), |g, x| g.swish(x)),
        unary!("sum axis 1", rand_tensor(&s, 28, 0.0), |g, x| g.sum(x, 1)),
        unary!("mean axis 2", rand_tensor(&s, 29, 0.0), |g, x| g.mean(x, 2)),
        unary!("max axis 0", rand_tensor(&s, 30, 0.0), |g, x| g.max(x, 0)),
        unary!("sum_all", rand_tensor(&s, 31, 0.0), |g, x| g.sum_all(x)),
        unary!("mean_all", rand_tensor(&s, 32, 0.0), |g, x| g.mean_all(x)),
        unary!("reshape", rand_tensor(&s, 33, 0.0), |g, x| g
            .reshape(x, &[6, 5])),
        unary!("transpose", rand_tensor(&s, 34, 0.0), |g, x| g.transpose(x)),
        binary!(
            "matmul rank 2",
            rand_tensor(&[3, 4], 35, 0.0),
            rand_tensor(&[4, 2], 36, 0.0),
            matmul
        ),
        binary!(
            "matmul batched",
            rand_tensor(&[2, 3, 4], 37, 0.0),
            rand_tensor(&[2, 4, 5], 38, 0.0),
            matmul
        ),
        unary!("softmax", rand_tensor(&s, 39, 0.0), |g, x| g.softmax(x)),
        unary!(
            "interpolate up",
            rand_tensor(&[2, 3, 5], 40, 0.0),
            |g, x| g.interpolate_linear(x, 13)
        ),
        unary!(
            "interpolate down",
            rand_tensor(&[2, 3, 9], 41, 0.0),
            |g, x| g.interpolate_linear(x, 4)
        ),
        unary!("subsample", rand_tensor(&[2, 3, 11], 42, 0.0), |g, x| g
            .subsample_last(x, 4)),
        unary!("repeat_last", rand_tensor(&[2, 3, 1], 43, 0.0), |g, x| g
            .repeat_last(x, 6)),
        unary!("slice", rand_tensor(&s, 44, 0.0), |g, x| g
            .slice(x, 1, 1, 2)),
        unary!("pad_last", rand_tensor(&s, 45, 0.0), |g, x| g
            .pad_last(x, 3)),
    ];
    cases.push(case(
        "concat",
        vec![
            rand_tensor(&[2, 1, 5], 46, 0.0),
            rand_tensor(&[2, 3, 5], 47, 0.0),
        ],
        |g, v| {
            let y = g.concat(&[v[0], v[1], v[0]], 1)?;
            project(g, y, 3)
        },
    ));
    cases.push(case(
        "conv1d strided, padded, bias",
        vec![
            rand_tensor(&[2, 3, 17], 48, 0.0),
            rand_tensor(&[4, 3, 8], 49, 0.0),
            rand_tensor(&[4], 50, 0.0),
        ],
        |g, v| {
            let y = g.conv1d(v[0], v[1], Some(v[2]), 4, 2, 1)?;
            project(g, y, 4)
        },
    ));
    cases.push(case(
        "conv1d grouped",
        vec![
            rand_tensor(&[2, 6, 12], 51, 0.0),
            rand_tensor(&[6, 2, 5], 52, 0.0),
        ],
        |g, v| {
            let y = g.conv1d(v[0], v[1], None, 1, 2, 3)?;
            project(g, y, 5)
        },
    ));
    cases.push(case(
        "conv1d depthwise",
        vec![
            rand_tensor(&[1, 4, 20], 53, 0.0),
            rand_tensor(&[4, 1, 7], 54, 0.0),
            rand_tensor(&[4], 55, 0.0),
        ],
        |g, v| {
            let y = g.conv1d(v[0], v[1], Some(v[2]), 1, 3, 4)?;
            project(g, y, 6)
        },
    ));
    cases.push(case(
        "conv1d_transposed",
        vec![
            rand_tensor(&[2, 4, 5], 56, 0.0),
            rand_tensor(&[4, 3, 8], 57, 0.0),
            rand_tensor(&[3], 58, 0.0),
        ],
        |g, v| {
            let y = g.conv1d_transposed(v[0], v[1], Some(v[2]), 4, 2)?;
            project(g, y, 7)
        },
    ));
    cases.push(case(
        "channel_norm",
        vec![
            rand_tensor(&[2, 5, 7], 59, 0.0),
            rand_tensor(&[5], 60, 0.2),
            rand_tensor(&[5], 61, 0.0),
        ],
        |g, v| {
            let y = g.channel_norm(v[0], v[1], v[2])?;
            project(g, y, 8)
        },
    ));
    cases.push(case(
        "stft_magnitude",
        vec![rand_tensor(&[2, 200], 62, 0.0)],
        |g, v| {
            let cfg = StftConfig::new(64, 16, 40);
            let y = g.stft_magnitude(v[0], &cfg)?;
            project(g, y, 9)
        },
    ));
    cases.push(case(
        "attention",
        vec![
            rand_tensor(&[2, 3, 6], 63, 0.0),
            rand_tensor(&[2, 3, 6], 64, 0.0),
            rand_tensor(&[2, 3, 6], 65, 0.0),
        ],
        |g, v| {
            let qt = g.transpose(v[0])?;
            let scores = g.matmul(qt, v[1])?;
            let scores = g.scale(scores, 1.0 / 3f64.sqrt())?;
            let attn = g.softmax(scores)?;
            let attn_t = g.transpose(attn)?;
            let y = g.matmul(v[2], attn_t)?;
            project(g, y, 10)
        },
    ));
    cases
}

pub fn composite_cases() -> Vec<Case> {
    let mut cases = Vec::new();
    cases.push(case(
        "l1_loss",
        vec![
            rand_tensor(&[2, 1, 100], 70, 0.0),
            rand_tensor(&[2, 1, 100], 71, 0.0),
        ],
        |g, v| l1_loss(g, v[0], v[1]),
    ));
    cases.push(case(
        "mrstft_loss",
        vec![
            rand_tensor(&[2, 1, 256], 72, 0.0),
            rand_tensor(&[2, 1, 256], 73, 0.0),
        ],
        |g, v| mrstft_loss(g, v[0], v[1], &small_resolutions()),
    ));
    cases.push(case(
        "compute_tam",
        vec![rand_tensor(&[2, 4, 9], 74, 0.0)],
        |g, v| {
            let t = distill::compute_tam(g, v[0], &distill::TamParams::default())?;
            project(g, t, 11)
        },
    ));
    for (name, p) in [("at_loss l1", PLoss::L1), ("at_loss l2", PLoss::L2)] {
        cases.push(case(
            name,
            vec![
                rand_tensor(&[2, 4, 9], 75, 0.0),
                rand_tensor(&[2, 3, 9], 76, 0.0),
            ],
            move |g, v| {
                let params = distill::TamParams {
                    p_loss: p,
                    ..Default::default()
                };
                let t = distill::compute_tam(g, v[0], &params)?;
                let s = distill::compute_tam(g, v[1], &params)?;
                distill::at_loss(g, t, s, &params)
            },
        ));
    }
    cases.push(case(
        "align_lengths",
        vec![rand_tensor(&[2, 3, 4], 77, 0.0)],
        |g, v| {
            let t = distill::compute_tam(g, v[0], &distill::TamParams::default())?;
            let a = distill::align_lengths(g, t, 11, 1e-8)?;
            project(g, a, 12)
        },
    ));
    cases.push(block_case("resconformer block", 6, 24, |lb| {
        let b = ResCon::new(lb, "r", 6);
        Box::new(move |g, p, x| b.forward(g, p, x))
    }));
    cases.push(block_case("multi-view attention block", 6, 24, |lb| {
        let b = MaBlock::new(lb, "ma", 6);
        Box::new(move |g, p, x| b.forward(g, p, x).map(|(y, _)| y))
    }));
    cases.push(block_case("mask gate", 4, 16, |lb| {
        let b = MaskGate::new(lb, "m", 4);
        Box::new(move |g, p, x| b.forward(g, p, x))
    }));
    cases
}

type BlockFn = Box<dyn Fn(&mut Graph<f64>, &[Var], Var) -> Result<Var>>;

/// Input plus every block parameter as gradient-checked leaves.
fn block_case(
    name: &'static str,
    channels: usize,
    t: usize,
    make: impl FnOnce(&mut LayoutBuilder) -> BlockFn,
) -> Case {
    let mut lb = LayoutBuilder::new();
    let f = make(&mut lb);
    let params = lb.init::<f64>(90);
    let mut inputs = vec![rand_tensor(&[2, channels, t], 91, 0.0)];
    inputs.extend(params.tensors().iter().cloned());
    case(name, inputs, move |g, v| {
        let y = f(g, &v[1..], v[0])?;
        project(g, y, 13)
    })
}

/// The full training objective (supervised + attention transfer + output
/// KD) for an L=3, C=12 teacher and an L=2, C=6 student on 256 samples,
/// differentiated with respect to every student parameter.
pub fn full_loss_case(p_loss: PLoss) -> Case {
    let teacher = Manner::new(ModelConfig::teacher(3, 12)).unwrap();
    let student = Manner::new(ModelConfig::student(2, 6)).unwrap();
    let teacher_params = teacher.init_params::<f64>(5);
    let student_params = student.init_params::<f64>(6);
    let noisy = rand_tensor(&[1, 1, 256], 80, 0.0);
    let clean = rand_tensor(&[1, 1, 256], 81, 0.0);
    let pairs = dual_depth_map(3, 2, &[2], true).unwrap();
    let cfg = DistillConfig {
        p_loss,
        ..DistillConfig::default()
    };
    let name = match p_loss {
        PLoss::L1 => "full distillation objective (l1 maps)",
        PLoss::L2 => "full distillation objective (l2 maps)",
    };
    Case {
        name,
        inputs: student_params.tensors().to_vec(),
        build: Box::new(move |g, v| {
            let tp = teacher_params.bind(g, false);
            let x = g.constant(noisy.clone());
            let y = g.constant(clean.clone());
            let tt = teacher.forward(g, &tp, x)?;
            let ts = student.forward(g, v, x)?;
            let terms =
                total_training_loss(g, y, &ts, Some(&tt), &pairs, &cfg, &small_resolutions())?;
            Ok(terms.total)
        }),
        probe: Probe::Strided(3),
    }
}
