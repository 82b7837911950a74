//! Closed-form parameter and FLOP counts. These are written against the
//! block definitions rather than the layout so the two can be cross-checked.

use super::config::{ModelConfig, ATTN_STRIDE, IN_KERNEL, LOCAL_KERNEL, RESCON_KERNEL};
use crate::Result;

fn conv_params(cin: u64, cout: u64, k: u64, groups: u64, bias: bool) -> u64 {
    cout * (cin / groups) * k + if bias { cout } else { 0 }
}

fn rescon_params(c: u64) -> u64 {
    let w = 2 * c;
    conv_params(c, w, 1, 1, true)
        + conv_params(w, w, RESCON_KERNEL as u64, w, true)
        + 2 * w
        + conv_params(w, c, 1, 1, true)
}

fn ma_params(c: u64) -> u64 {
    let v = c / 3;
    let h = (v / 2).max(1);
    let k = LOCAL_KERNEL as u64;
    conv_params(v, h, 1, 1, true)
        + conv_params(h, v, 1, 1, true)
        + 3 * conv_params(v, v, 1, 1, false)
        + conv_params(v, v, k, v, false)
        + conv_params(v, v, k, v, true)
        + conv_params(c, c, 1, 1, true)
}

/// Number of trainable scalars for `config`.
pub fn count_params(config: &ModelConfig) -> Result<u64> {
    config.validate()?;
    let ch = |l: usize| config.channels(l) as u64;
    let k = config.kernel as u64;
    let mut n = conv_params(1, ch(0), IN_KERNEL as u64, 1, true);
    for l in 1..=config.depth {
        let (cp, c) = (ch(l - 1), ch(l));
        // down conv, up conv (transposed: weight [c, cp, k], bias [cp])
        n += conv_params(cp, c, k, 1, true) + c * cp * k + cp;
        n += 2 * rescon_params(c);
        if config.has_ma(l) {
            n += 2 * ma_params(c);
        }
    }
    let cl = ch(config.depth);
    n += conv_params(cl, cl, 1, 1, true);
    n += 2 * conv_params(ch(0), ch(0), 1, 1, true) + conv_params(ch(0), 1, 1, 1, false);
    Ok(n)
}

/// Floating-point operations (2 per multiply-accumulate) of a conv producing
/// `t_out` frames.
pub fn conv_flops(cin: u64, cout: u64, k: u64, groups: u64, t_out: u64) -> u64 {
    2 * cout * (cin / groups) * k * t_out
}

fn rescon_flops(c: u64, t: u64) -> u64 {
    let w = 2 * c;
    conv_flops(c, w, 1, 1, t)
        + conv_flops(w, w, RESCON_KERNEL as u64, w, t)
        + conv_flops(w, c, 1, 1, t)
}

fn ma_flops(c: u64, t: u64) -> u64 {
    let v = c / 3;
    let h = (v / 2).max(1);
    let ts = t.div_ceil(ATTN_STRIDE as u64);
    let k = LOCAL_KERNEL as u64;
    conv_flops(v, h, 1, 1, 1)
        + conv_flops(h, v, 1, 1, 1)
        + 3 * conv_flops(v, v, 1, 1, ts)
        + 2 * (2 * ts * v * ts)
        + 2 * conv_flops(v, v, k, v, t)
        + conv_flops(c, c, 1, 1, t)
}

/// Multiply-accumulate FLOPs of one forward pass on a single clip of
/// `input_len` samples, counted at the padded length. Elementwise work,
/// norms and activations are excluded.
pub fn count_flops(config: &ModelConfig, input_len: usize) -> Result<u64> {
    config.validate()?;
    let ch = |l: usize| config.channels(l) as u64;
    let p = config.padded_len(input_len);
    let len = |l: usize| config.level_len(p, l) as u64;
    let k = config.kernel as u64;
    let mut f = conv_flops(1, ch(0), IN_KERNEL as u64, 1, p as u64);
    for l in 1..=config.depth {
        let (cp, c, t) = (ch(l - 1), ch(l), len(l));
        f += conv_flops(cp, c, k, 1, t);
        // transposed conv: every input frame scatters cin*cout*k products
        f += 2 * c * cp * k * t;
        f += 2 * rescon_flops(c, t);
        if config.has_ma(l) {
            f += 2 * ma_flops(c, t);
        }
    }
    let cl = ch(config.depth);
    f += conv_flops(cl, cl, 1, 1, len(config.depth));
    f += 2 * conv_flops(ch(0), ch(0), 1, 1, p as u64) + conv_flops(ch(0), 1, 1, 1, p as u64);
    Ok(f)
}
