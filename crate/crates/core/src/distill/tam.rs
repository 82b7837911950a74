use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

use crate::model::{MultiViewActivations, Side};
use crate::{Error, Graph, Result, Scalar, Var};

/// One of the three MA branch outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum View {
    Channel,
    Global,
    Local,
}

impl View {
    pub const ALL: [View; 3] = [View::Channel, View::Global, View::Local];

    pub fn as_str(self) -> &'static str {
        match self {
            View::Channel => "channel",
            View::Global => "global",
            View::Local => "local",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn select(self, a: &MultiViewActivations) -> Var {
        match self {
            View::Channel => a.channel,
            View::Global => a.global,
            View::Local => a.local,
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        View::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown view {s:?}")))
    }
}

/// Distance used between two maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub enum PLoss {
    /// Sum of absolute differences.
    L1,
    /// Euclidean norm of the difference.
    L2,
}

impl TryFrom<u8> for PLoss {
    type Error = Error;

    fn try_from(p: u8) -> Result<Self> {
        match p {
            1 => Ok(PLoss::L1),
            2 => Ok(PLoss::L2),
            _ => Err(Error::Config(alloc::format!(
                "p_loss must be 1 or 2, got {p}"
            ))),
        }
    }
}

impl From<PLoss> for u8 {
    fn from(p: PLoss) -> u8 {
        match p {
            PLoss::L1 => 1,
            PLoss::L2 => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TamParams {
    pub p_map: f64,
    pub p_loss: PLoss,
    pub eps: f64,
}

impl Default for TamParams {
    fn default() -> Self {
        Self {
            p_map: 2.0,
            p_loss: PLoss::L1,
            eps: 1e-8,
        }
    }
}

impl TamParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_map > 0.0 && self.p_map.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "p_map must be positive, got {}",
                self.p_map
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(alloc::format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// A map of shape `[B, t]` (one row per batch element) tagged with where it
/// came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tam {
    pub values: Var,
    pub view: View,
    pub side: Side,
    pub level: usize,
}

/// `F = Σ_c |A_c|^p` per time step, then `F / (‖F‖₂ + eps)` per batch row.
/// Accepts `[B, C, t]` or `[C, t]`; returns `[B, t]` (`[1, t]` for rank 2).
pub fn compute_tam<T: Scalar>(g: &mut Graph<T>, a: Var, params: &TamParams) -> Result<Var> {
    params.validate()?;
    let a = match *g.shape(a) {
        [c, t] => g.reshape(a, &[1, c, t])?,
        [_, _, _] => a,
        ref s => {
            return Err(Error::Rank {
                op: "compute_tam",
                expected: 3,
                shape: s.to_vec(),
            })
        }
    };
    let abs = g.abs(a)?;
    let powered = if params.p_map == 1.0 {
        abs
    } else {
        g.pow(abs, T::of(params.p_map))?
    };
    let f = g.sum(powered, 1)?;
    normalize_rows(g, f, params.eps)
}

fn normalize_rows<T: Scalar>(g: &mut Graph<T>, f: Var, eps: f64) -> Result<Var> {
    let (b, t) = (g.shape(f)[0], g.shape(f)[1]);
    let sq = g.mul(f, f)?;
    let ss = g.sum(sq, 1)?;
    let norm = g.pow(ss, T::of(0.5))?;
    let norm = g.shift(norm, T::of(eps))?;
    let norm = g.reshape(norm, &[b, 1])?;
    let norm = g.repeat_last(norm, t)?;
    g.div(f, norm)
}

/// TAM of one view of a recorded MA block.
pub fn tam_of<T: Scalar>(
    g: &mut Graph<T>,
    act: &MultiViewActivations,
    view: View,
    params: &TamParams,
) -> Result<Tam> {
    let values = compute_tam(g, view.select(act), params)?;
    Ok(Tam {
        values,
        view,
        side: act.side,
        level: act.level,
    })
}

/// Distance between two `[B, t]` maps, averaged over the batch.
pub fn at_loss<T: Scalar>(
    g: &mut Graph<T>,
    tam_t: Var,
    tam_s: Var,
    params: &TamParams,
) -> Result<Var> {
    if g.shape(tam_t) != g.shape(tam_s) {
        return Err(Error::Incompatible {
            op: "at_loss",
            lhs: g.shape(tam_t).to_vec(),
            rhs: g.shape(tam_s).to_vec(),
        });
    }
    crate::graph::check_rank("at_loss", g.shape(tam_s), 2)?;
    let d = g.sub(tam_t, tam_s)?;
    let per_row = match params.p_loss {
        PLoss::L1 => {
            let a = g.abs(d)?;
            g.sum(a, 1)?
        }
        PLoss::L2 => {
            let sq = g.mul(d, d)?;
            let s = g.sum(sq, 1)?;
            g.pow(s, T::of(0.5))?
        }
    };
    g.mean(per_row, 0)
}

/// Linearly resamples a `[B, t]` map to `target_len` and renormalizes each
/// row. Returns `tam` itself when the length already matches.
pub fn align_lengths<T: Scalar>(
    g: &mut Graph<T>,
    tam: Var,
    target_len: usize,
    eps: f64,
) -> Result<Var> {
    crate::graph::check_rank("align_lengths", g.shape(tam), 2)?;
    if target_len == 0 {
        return Err(Error::invalid(
            "align_lengths: target length must be >= 1".to_string(),
        ));
    }
    if g.shape(tam)[1] == target_len {
        return Ok(tam);
    }
    let r = g.interpolate_linear(tam, target_len)?;
    normalize_rows(g, r, eps)
}
