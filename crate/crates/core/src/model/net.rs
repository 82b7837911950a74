use alloc::format;
use alloc::vec::Vec;

use super::blocks::{Conv, MaBlock, MaskGate, ResCon};
use super::config::{ModelConfig, IN_KERNEL};
use super::params::{LayoutBuilder, ParamStore};
use crate::{Error, Graph, Result, Scalar, Var};

/// Encoder or decoder half of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Encoder,
    Decoder,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Encoder => "encoder",
            Side::Decoder => "decoder",
        }
    }
}

/// The three branch outputs of the MA block at one (side, level).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiViewActivations {
    pub side: Side,
    pub level: usize,
    pub channel: Var,
    pub global: Var,
    pub local: Var,
}

#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// `[B, 1, T]`, same length as the input.
    pub enhanced: Var,
    /// Encoder levels ascending, then decoder levels descending.
    pub activations: Vec<MultiViewActivations>,
}

impl ForwardTrace {
    pub fn get(&self, side: Side, level: usize) -> Option<&MultiViewActivations> {
        self.activations
            .iter()
            .find(|a| a.side == side && a.level == level)
    }
}

#[derive(Clone, Debug)]
struct Level {
    down: Conv,
    enc_rescon: ResCon,
    enc_ma: Option<MaBlock>,
    dec_ma: Option<MaBlock>,
    dec_rescon: ResCon,
    up: Conv,
}

/// Network structure; parameters live in a separate [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Manner {
    config: ModelConfig,
    layout: LayoutBuilder,
    in_conv: Conv,
    levels: Vec<Level>,
    bottleneck: Conv,
    mask: MaskGate,
}

impl Manner {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut lb = LayoutBuilder::new();
        let c0 = config.channels(0);
        let (k, s, pad) = (config.kernel, config.stride, config.padding());
        let in_conv = Conv::new(
            &mut lb,
            "in_conv",
            1,
            c0,
            IN_KERNEL,
            1,
            IN_KERNEL / 2,
            1,
            true,
        );
        let mut downs = Vec::new();
        for l in 1..=config.depth {
            let (cp, c) = (config.channels(l - 1), config.channels(l));
            let down = Conv::new(
                &mut lb,
                &format!("encoder.{l}.down"),
                cp,
                c,
                k,
                s,
                pad,
                1,
                true,
            );
            let rescon = ResCon::new(&mut lb, &format!("encoder.{l}.rescon"), c);
            let ma = config
                .has_ma(l)
                .then(|| MaBlock::new(&mut lb, &format!("encoder.{l}.ma"), c));
            downs.push((down, rescon, ma));
        }
        let cl = config.channels(config.depth);
        let bottleneck = Conv::pointwise(&mut lb, "bottleneck", cl, cl, true);
        let mut ups = Vec::new();
        for l in (1..=config.depth).rev() {
            let (cp, c) = (config.channels(l - 1), config.channels(l));
            let ma = config
                .has_ma(l)
                .then(|| MaBlock::new(&mut lb, &format!("decoder.{l}.ma"), c));
            let rescon = ResCon::new(&mut lb, &format!("decoder.{l}.rescon"), c);
            let up = Conv::transposed(&mut lb, &format!("decoder.{l}.up"), c, cp, k, s, pad);
            ups.push((ma, rescon, up));
        }
        ups.reverse();
        let mask = MaskGate::new(&mut lb, "mask", c0);
        let levels = downs
            .into_iter()
            .zip(ups)
            .map(
                |((down, enc_rescon, enc_ma), (dec_ma, dec_rescon, up))| Level {
                    down,
                    enc_rescon,
                    enc_ma,
                    dec_ma,
                    dec_rescon,
                    up,
                },
            )
            .collect();
        Ok(Self {
            config,
            layout: lb,
            in_conv,
            levels,
            bottleneck,
            mask,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &LayoutBuilder {
        &self.layout
    }

    pub fn init_params<T: Scalar>(&self, seed: u64) -> ParamStore<T> {
        self.layout.init(seed)
    }

    /// Runs the network on `x` (`[B, 1, T]`) with parameters bound by
    /// [`ParamStore::bind`]. The input is right-padded with zeros to a
    /// multiple of the total stride and the output trimmed back to `T`.
    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        params: &[Var],
        x: Var,
    ) -> Result<ForwardTrace> {
        if params.len() != self.layout.specs().len() {
            return Err(Error::invalid(format!(
                "expected {} bound parameters, got {}",
                self.layout.specs().len(),
                params.len()
            )));
        }
        let shape = g.shape(x).to_vec();
        crate::graph::check_rank("manner", &shape, 3)?;
        if shape[1] != 1 {
            return Err(Error::ShapeMismatch {
                op: "manner",
                dim: "channels",
                expected: 1,
                got: shape[1],
            });
        }
        crate::graph::ensure_finite("manner input", g.value(x).data())?;
        let t = shape[2];
        let padded = self.config.padded_len(t);
        let xp = if padded > t {
            g.pad_last(x, padded - t)?
        } else {
            x
        };

        let mut activations = Vec::new();
        let mut h = self.in_conv.forward(g, params, xp)?;
        let mut skips = Vec::with_capacity(self.levels.len());
        for (i, lvl) in self.levels.iter().enumerate() {
            h = lvl.down.forward(g, params, h)?;
            h = lvl.enc_rescon.forward(g, params, h)?;
            if let Some(ma) = &lvl.enc_ma {
                let (y, v) = ma.forward(g, params, h)?;
                activations.push(record(Side::Encoder, i + 1, v));
                h = y;
            }
            skips.push(h);
        }
        h = self.bottleneck.forward(g, params, h)?;
        for (i, lvl) in self.levels.iter().enumerate().rev() {
            h = g.add(h, skips[i])?;
            if let Some(ma) = &lvl.dec_ma {
                let (y, v) = ma.forward(g, params, h)?;
                activations.push(record(Side::Decoder, i + 1, v));
                h = y;
            }
            h = lvl.dec_rescon.forward(g, params, h)?;
            h = lvl.up.forward(g, params, h)?;
        }
        let mut y = self.mask.forward(g, params, h)?;
        if padded > t {
            y = g.slice(y, 2, 0, t)?;
        }
        Ok(ForwardTrace {
            enhanced: y,
            activations,
        })
    }
}

fn record(side: Side, level: usize, v: super::blocks::Views) -> MultiViewActivations {
    MultiViewActivations {
        side,
        level,
        channel: v.channel,
        global: v.global,
        local: v.local,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::count_params;
    use crate::Tensor;
    use alloc::vec;

    #[test]
    fn forward_keeps_length_and_records_views() {
        let cfg = ModelConfig::teacher(2, 6);
        let net = Manner::new(cfg.clone()).unwrap();
        let params = net.init_params::<f32>(0);
        assert_eq!(params.numel() as u64, count_params(&cfg).unwrap());
        let mut g = Graph::new();
        let p = params.bind(&mut g, true);
        let x = g.constant(Tensor::from_fn(vec![2, 1, 50], |i| {
            (i as f32 * 0.3).sin() * 0.5
        }));
        let tr = net.forward(&mut g, &p, x).unwrap();
        assert_eq!(g.shape(tr.enhanced), &[2, 1, 50]);
        let order: Vec<(Side, usize)> = tr.activations.iter().map(|a| (a.side, a.level)).collect();
        assert_eq!(
            order,
            [
                (Side::Encoder, 1),
                (Side::Encoder, 2),
                (Side::Decoder, 2),
                (Side::Decoder, 1)
            ]
        );
        let a = tr.get(Side::Decoder, 1).unwrap();
        assert_eq!(g.shape(a.global), &[2, 2, 16]);
        assert!(g.value(tr.enhanced).is_finite());
    }

    #[test]
    fn student_has_views_only_at_deepest_level() {
        let net = Manner::new(ModelConfig::student(3, 12)).unwrap();
        let params = net.init_params::<f32>(0);
        let mut g = Graph::new();
        let p = params.bind(&mut g, false);
        let x = g.constant(Tensor::zeros(vec![1, 1, 64]));
        let tr = net.forward(&mut g, &p, x).unwrap();
        let levels: Vec<(Side, usize)> = tr.activations.iter().map(|a| (a.side, a.level)).collect();
        assert_eq!(levels, [(Side::Encoder, 3), (Side::Decoder, 3)]);
    }

    #[test]
    fn rejects_bad_input() {
        let net = Manner::new(ModelConfig::student(1, 3)).unwrap();
        let params = net.init_params::<f32>(0);
        let mut g = Graph::new();
        let p = params.bind(&mut g, false);
        let x = g.constant(Tensor::zeros(vec![1, 2, 64]));
        assert!(net.forward(&mut g, &p, x).is_err());
        let x = g.constant(Tensor::new(vec![1, 1, 2], vec![0.0, f32::NAN]).unwrap());
        assert!(net.forward(&mut g, &p, x).is_err());
    }
}
