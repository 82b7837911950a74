//! Central finite-difference check of analytic gradients in `f64`.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use crate::{Error, Graph, Result, Tensor, Var};

/// Which coordinates of each input to perturb.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    All,
    /// At most this many coordinates per input, evenly strided.
    Strided(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckConfig {
    pub step: f64,
    /// Denominator floor of the relative error, for near-zero gradients.
    pub floor: f64,
    pub probe: Probe,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            floor: 1e-6,
            probe: Probe::All,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_err: f64,
    pub worst_input: usize,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub probes: usize,
}

/// Builds the scalar `f(inputs)` with every input as a trainable leaf,
/// backpropagates, and compares each probed coordinate with
/// `(f(x + h) − f(x − h)) / 2h`.
pub fn check_gradients<F>(
    inputs: &[Tensor<f64>],
    config: GradCheckConfig,
    f: F,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let eval = |xs: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = xs.iter().map(|t| g.leaf(t.clone(), false)).collect();
        let y = f(&mut g, &vars)?;
        g.value(y)
            .item()
            .ok_or_else(|| Error::NotScalar(g.shape(y).to_vec()))
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let y = f(&mut g, &vars)?;
    g.backward(y)?;
    let grads: Vec<Tensor<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, t)| {
            g.grad(v)
                .unwrap_or_else(|| Tensor::zeros(t.shape().to_vec()))
        })
        .collect();
    drop(g);

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_input: 0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        probes: 0,
    };
    let mut xs = inputs.to_vec();
    let h = config.step;
    for i in 0..xs.len() {
        let n = xs[i].numel();
        let stride = match config.probe {
            Probe::All => 1,
            Probe::Strided(k) => n.div_ceil(k.max(1)).max(1),
        };
        for j in (0..n).step_by(stride) {
            let orig = xs[i].data()[j];
            xs[i].data_mut()[j] = orig + h;
            let fp = eval(&xs)?;
            xs[i].data_mut()[j] = orig - h;
            let fm = eval(&xs)?;
            xs[i].data_mut()[j] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let analytic = grads[i].data()[j];
            let denom = analytic.abs().max(numeric.abs()).max(config.floor);
            let err = (analytic - numeric).abs() / denom;
            report.probes += 1;
            if err > report.max_rel_err || err.is_nan() {
                report = GradCheckReport {
                    max_rel_err: if err.is_nan() { f64::INFINITY } else { err },
                    worst_input: i,
                    worst_index: j,
                    analytic,
                    numeric,
                    probes: report.probes,
                };
            }
        }
    }
    Ok(report)
}
