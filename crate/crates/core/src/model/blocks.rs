use alloc::format;
use alloc::vec;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

use super::config::{ATTN_STRIDE, LOCAL_KERNEL, RESCON_KERNEL};
use super::params::{Init, LayoutBuilder};
use crate::{Graph, Result, Scalar, Var};

/// Conv layer referencing its tensors by layout index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conv {
    pub weight: usize,
    pub bias: Option<usize>,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
    pub transposed: bool,
}

impl Conv {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lb: &mut LayoutBuilder,
        name: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        groups: usize,
        bias: bool,
    ) -> Self {
        let fan_in = cin / groups * kernel;
        let weight = lb.add(
            format!("{name}.weight"),
            vec![cout, cin / groups, kernel],
            Init::fan_in(fan_in),
        );
        let bias = bias.then(|| lb.add(format!("{name}.bias"), vec![cout], Init::fan_in(fan_in)));
        Self {
            weight,
            bias,
            stride,
            padding,
            groups,
            transposed: false,
        }
    }

    pub fn pointwise(
        lb: &mut LayoutBuilder,
        name: &str,
        cin: usize,
        cout: usize,
        bias: bool,
    ) -> Self {
        Self::new(lb, name, cin, cout, 1, 1, 0, 1, bias)
    }

    /// Transposed conv, weight `[cin, cout, kernel]`.
    pub fn transposed(
        lb: &mut LayoutBuilder,
        name: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let fan_in = cout * kernel;
        let weight = lb.add(
            format!("{name}.weight"),
            vec![cin, cout, kernel],
            Init::fan_in(fan_in),
        );
        let bias = Some(lb.add(format!("{name}.bias"), vec![cout], Init::fan_in(fan_in)));
        Self {
            weight,
            bias,
            stride,
            padding,
            groups: 1,
            transposed: true,
        }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, p: &[Var], x: Var) -> Result<Var> {
        let bias = self.bias.map(|b| p[b]);
        if self.transposed {
            g.conv1d_transposed(x, p[self.weight], bias, self.stride, self.padding)
        } else {
            g.conv1d(
                x,
                p[self.weight],
                bias,
                self.stride,
                self.padding,
                self.groups,
            )
        }
    }
}

/// Residual conformer-style block: pointwise expand, depthwise conv,
/// channel norm, swish, pointwise project, residual add.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResCon {
    expand: Conv,
    depthwise: Conv,
    norm_gain: usize,
    norm_bias: usize,
    project: Conv,
}

impl ResCon {
    pub fn new(lb: &mut LayoutBuilder, name: &str, channels: usize) -> Self {
        let wide = 2 * channels;
        let expand = Conv::pointwise(lb, &format!("{name}.expand"), channels, wide, true);
        let depthwise = Conv::new(
            lb,
            &format!("{name}.depthwise"),
            wide,
            wide,
            RESCON_KERNEL,
            1,
            RESCON_KERNEL / 2,
            wide,
            true,
        );
        let norm_gain = lb.add(format!("{name}.norm.gain"), vec![wide], Init::Const(1.0));
        let norm_bias = lb.add(format!("{name}.norm.bias"), vec![wide], Init::Const(0.0));
        let project = Conv::pointwise(lb, &format!("{name}.project"), wide, channels, true);
        Self {
            expand,
            depthwise,
            norm_gain,
            norm_bias,
            project,
        }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, p: &[Var], x: Var) -> Result<Var> {
        let h = self.expand.forward(g, p, x)?;
        let h = self.depthwise.forward(g, p, h)?;
        let h = g.channel_norm(h, p[self.norm_gain], p[self.norm_bias])?;
        let h = g.swish(h)?;
        let h = self.project.forward(g, p, h)?;
        g.add(x, h)
    }
}

/// Branch outputs of one multi-view attention block, each `[B, C/3, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Views {
    pub channel: Var,
    pub global: Var,
    pub local: Var,
}

/// Multi-view attention: the channels are split into three equal groups,
/// processed by a channel gate, a strided self-attention and a gated
/// depthwise conv, then concatenated and fused back residually.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaBlock {
    group: usize,
    squeeze: Conv,
    excite: Conv,
    query: Conv,
    key: Conv,
    value: Conv,
    local_value: Conv,
    local_gate: Conv,
    fuse: Conv,
}

impl MaBlock {
    /// `channels` must be divisible by 3.
    pub fn new(lb: &mut LayoutBuilder, name: &str, channels: usize) -> Self {
        let v = channels / 3;
        let hidden = (v / 2).max(1);
        let pad = LOCAL_KERNEL / 2;
        Self {
            group: v,
            squeeze: Conv::pointwise(lb, &format!("{name}.channel.squeeze"), v, hidden, true),
            excite: Conv::pointwise(lb, &format!("{name}.channel.excite"), hidden, v, true),
            query: Conv::pointwise(lb, &format!("{name}.global.query"), v, v, false),
            key: Conv::pointwise(lb, &format!("{name}.global.key"), v, v, false),
            value: Conv::pointwise(lb, &format!("{name}.global.value"), v, v, false),
            local_value: Conv::new(
                lb,
                &format!("{name}.local.value"),
                v,
                v,
                LOCAL_KERNEL,
                1,
                pad,
                v,
                false,
            ),
            local_gate: Conv::new(
                lb,
                &format!("{name}.local.gate"),
                v,
                v,
                LOCAL_KERNEL,
                1,
                pad,
                v,
                true,
            ),
            fuse: Conv::pointwise(lb, &format!("{name}.fuse"), 3 * v, 3 * v, true),
        }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, p: &[Var], x: Var) -> Result<(Var, Views)> {
        let shape = g.shape(x).to_vec();
        crate::graph::check_rank("ma_block", &shape, 3)?;
        if shape[1] != 3 * self.group {
            return Err(crate::Error::ShapeMismatch {
                op: "ma_block",
                dim: "channels",
                expected: 3 * self.group,
                got: shape[1],
            });
        }
        let (b, t) = (shape[0], shape[2]);
        let v = self.group;
        let xc = g.slice(x, 1, 0, v)?;
        let xg = g.slice(x, 1, v, v)?;
        let xl = g.slice(x, 1, 2 * v, v)?;

        let pooled = g.mean(xc, 2)?;
        let pooled = g.reshape(pooled, &[b, v, 1])?;
        let s = self.squeeze.forward(g, p, pooled)?;
        let s = g.relu(s)?;
        let s = self.excite.forward(g, p, s)?;
        let s = g.sigmoid(s)?;
        let s = g.repeat_last(s, t)?;
        let channel = g.mul(xc, s)?;

        let xs = g.subsample_last(xg, ATTN_STRIDE)?;
        let q = self.query.forward(g, p, xs)?;
        let k = self.key.forward(g, p, xs)?;
        let val = self.value.forward(g, p, xs)?;
        let qt = g.transpose(q)?;
        let scores = g.matmul(qt, k)?;
        let scores = g.scale(scores, T::of(1.0 / (v as f64).sqrt()))?;
        let attn = g.softmax(scores)?;
        let attn_t = g.transpose(attn)?;
        let out = g.matmul(val, attn_t)?;
        let global = g.interpolate_linear(out, t)?;

        let lv = self.local_value.forward(g, p, xl)?;
        let lg = self.local_gate.forward(g, p, xl)?;
        let lg = g.sigmoid(lg)?;
        let local = g.mul(lv, lg)?;

        let cat = g.concat(&[channel, global, local], 1)?;
        let fused = self.fuse.forward(g, p, cat)?;
        let y = g.add(x, fused)?;
        Ok((
            y,
            Views {
                channel,
                global,
                local,
            },
        ))
    }
}

/// Output head: `conv_out((sigmoid(a(d)) * tanh(b(d))) * d)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskGate {
    gate_a: Conv,
    gate_b: Conv,
    out: Conv,
}

impl MaskGate {
    pub fn new(lb: &mut LayoutBuilder, name: &str, channels: usize) -> Self {
        Self {
            gate_a: Conv::pointwise(
                lb,
                &format!("{name}.gate_sigmoid"),
                channels,
                channels,
                true,
            ),
            gate_b: Conv::pointwise(lb, &format!("{name}.gate_tanh"), channels, channels, true),
            out: Conv::pointwise(lb, &format!("{name}.out"), channels, 1, false),
        }
    }

    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, p: &[Var], d: Var) -> Result<Var> {
        let a = self.gate_a.forward(g, p, d)?;
        let a = g.sigmoid(a)?;
        let b = self.gate_b.forward(g, p, d)?;
        let b = g.tanh(b)?;
        let m = g.mul(a, b)?;
        let masked = g.mul(m, d)?;
        self.out.forward(g, p, masked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;
    use alloc::vec::Vec;

    fn setup(c: usize, t: usize) -> (Graph<f64>, Vec<Var>, MaBlock, Var) {
        let mut lb = LayoutBuilder::new();
        let ma = MaBlock::new(&mut lb, "ma", c);
        let params = lb.init::<f64>(3);
        let mut g = Graph::new();
        let p = params.bind(&mut g, true);
        let x = Tensor::from_fn(vec![2, c, t], |i| ((i * 37 % 23) as f64 / 11.0) - 1.0);
        let x = g.leaf(x, true);
        (g, p, ma, x)
    }

    #[test]
    fn ma_views_have_group_shape() {
        let (mut g, p, ma, x) = setup(12, 40);
        let (y, views) = ma.forward(&mut g, &p, x).unwrap();
        assert_eq!(g.shape(y), &[2, 12, 40]);
        for v in [views.channel, views.global, views.local] {
            assert_eq!(g.shape(v), &[2, 4, 40]);
        }
    }

    #[test]
    fn channel_view_is_a_constant_gate_per_channel() {
        let (mut g, p, ma, x) = setup(6, 16);
        let (_, views) = ma.forward(&mut g, &p, x).unwrap();
        let xv = g.value(x).clone();
        let cv = g.value(views.channel).clone();
        for b in 0..2 {
            for c in 0..2 {
                let base = (b * 6 + c) * 16;
                let out = (b * 2 + c) * 16;
                let ratios: Vec<f64> = (0..16)
                    .filter(|&k| xv.data()[base + k].abs() > 1e-6)
                    .map(|k| cv.data()[out + k] / xv.data()[base + k])
                    .collect();
                assert!(ratios
                    .iter()
                    .all(|r| (r - ratios[0]).abs() < 1e-12 && *r > 0.0 && *r < 1.0));
            }
        }
    }

    #[test]
    fn ma_rejects_wrong_channels() {
        let (mut g, p, ma, _) = setup(6, 16);
        let bad = g.constant(Tensor::zeros(vec![1, 9, 16]));
        assert!(ma.forward(&mut g, &p, bad).is_err());
    }

    #[test]
    fn rescon_preserves_shape() {
        let mut lb = LayoutBuilder::new();
        let block = ResCon::new(&mut lb, "r", 5);
        let params = lb.init::<f32>(1);
        let mut g = Graph::new();
        let p = params.bind(&mut g, false);
        let x = g.constant(Tensor::full(vec![1, 5, 33], 0.25f32));
        let y = block.forward(&mut g, &p, x).unwrap();
        assert_eq!(g.shape(y), &[1, 5, 33]);
    }
}
