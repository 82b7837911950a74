use alloc::format;

use super::pairing::PairMap;
use super::tam::{align_lengths, at_loss, compute_tam, PLoss, TamParams, View};
use crate::model::{ForwardTrace, MultiViewActivations, Side};
use crate::signal::{waveform_loss, StftConfig};
use crate::{Error, Graph, Result, Scalar, Var};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DistillConfig {
    pub lambda_at: f64,
    pub lambda_kd: f64,
    pub lambda_distill: f64,
    /// Restrict attention transfer to one view.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub single_view: Option<View>,
    pub dual_depth: bool,
    pub p_map: f64,
    pub p_loss: PLoss,
    pub eps: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        let tam = TamParams::default();
        Self {
            lambda_at: 1.0,
            lambda_kd: 1.0,
            lambda_distill: 1.0,
            single_view: None,
            dual_depth: true,
            p_map: tam.p_map,
            p_loss: tam.p_loss,
            eps: tam.eps,
        }
    }
}

impl DistillConfig {
    pub fn tam(&self) -> TamParams {
        TamParams {
            p_map: self.p_map,
            p_loss: self.p_loss,
            eps: self.eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("lambda_at", self.lambda_at),
            ("lambda_kd", self.lambda_kd),
            ("lambda_distill", self.lambda_distill),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be a finite non-negative weight, got {w}"
                )));
            }
        }
        self.tam().validate()
    }

    /// Views that contribute to the attention-transfer term.
    pub fn views(&self) -> &'static [View] {
        match self.single_view {
            None => &View::ALL,
            Some(View::Channel) => &[View::Channel],
            Some(View::Global) => &[View::Global],
            Some(View::Local) => &[View::Local],
        }
    }
}

/// Sum of per-view attention-transfer losses between two MA blocks. The
/// teacher maps are resampled to the student length first.
pub fn mv_at_loss<T: Scalar>(
    g: &mut Graph<T>,
    views_t: &MultiViewActivations,
    views_s: &MultiViewActivations,
    params: &TamParams,
    single_view: Option<View>,
) -> Result<Var> {
    let views: &[View] = match single_view {
        None => &View::ALL,
        Some(ref v) => core::slice::from_ref(v),
    };
    let mut total: Option<Var> = None;
    for &view in views {
        let term = view_term(g, views_t, views_s, view, params)?;
        total = Some(match total {
            None => term,
            Some(acc) => g.add(acc, term)?,
        });
    }
    total.ok_or_else(|| Error::invalid("mv_at_loss: no views selected"))
}

fn view_term<T: Scalar>(
    g: &mut Graph<T>,
    views_t: &MultiViewActivations,
    views_s: &MultiViewActivations,
    view: View,
    params: &TamParams,
) -> Result<Var> {
    let s = compute_tam(g, view.select(views_s), params)?;
    let t = compute_tam(g, view.select(views_t), params)?;
    let t = align_lengths(g, t, g.shape(s)[1], params.eps)?;
    at_loss(g, t, s, params)
}

/// Output-matching loss of the student against the (detached) teacher
/// output: mean absolute error plus multi-resolution STFT loss.
pub fn kd_loss<T: Scalar>(
    g: &mut Graph<T>,
    y_hat_t: Var,
    y_hat_s: Var,
    resolutions: &[StftConfig],
) -> Result<Var> {
    waveform_loss(g, y_hat_s, y_hat_t, resolutions)
}

/// Distillation loss and its parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistillTerms {
    /// `lambda_at * at + lambda_kd * kd`.
    pub total: Var,
    /// Unweighted attention-transfer sum over all pairs and views.
    pub at: Option<Var>,
    /// Unweighted attention-transfer value per view, summed over pairs.
    pub at_views: [f64; 3],
    pub kd: Option<Var>,
}

fn accumulate<T: Scalar>(g: &mut Graph<T>, acc: Option<Var>, term: Var) -> Result<Option<Var>> {
    Ok(Some(match acc {
        None => term,
        Some(a) => g.add(a, term)?,
    }))
}

fn find(
    trace: &ForwardTrace,
    side: Side,
    level: usize,
    who: &'static str,
) -> Result<MultiViewActivations> {
    trace
        .get(side, level)
        .copied()
        .ok_or(Error::MissingActivations {
            side: match (who, side) {
                ("teacher", Side::Encoder) => "teacher encoder",
                ("teacher", Side::Decoder) => "teacher decoder",
                (_, Side::Encoder) => "student encoder",
                (_, Side::Decoder) => "student decoder",
            },
            level,
        })
}

/// `lambda_at · Σ_pairs Σ_views at_loss + lambda_kd · kd_loss`. Terms whose
/// weight is zero are not built at all.
pub fn distill_loss<T: Scalar>(
    g: &mut Graph<T>,
    trace_t: &ForwardTrace,
    trace_s: &ForwardTrace,
    pair_map: &PairMap,
    config: &DistillConfig,
    resolutions: &[StftConfig],
) -> Result<DistillTerms> {
    config.validate()?;
    let params = config.tam();
    let mut at = None;
    let mut at_views = [0.0; 3];
    if config.lambda_at != 0.0 {
        for entry in &pair_map.entries {
            let s = find(trace_s, entry.side, entry.student_level, "student")?;
            for &tl in &entry.teacher_levels {
                let t = find(trace_t, entry.side, tl, "teacher")?;
                let mut pair_total = None;
                for &view in config.views() {
                    let term = view_term(g, &t, &s, view, &params)?;
                    at_views[view.index()] += g.value(term).data()[0].as_f64();
                    pair_total = accumulate(g, pair_total, term)?;
                }
                if let Some(p) = pair_total {
                    at = accumulate(g, at, p)?;
                }
            }
        }
    }
    let kd = if config.lambda_kd != 0.0 {
        Some(kd_loss(g, trace_t.enhanced, trace_s.enhanced, resolutions)?)
    } else {
        None
    };
    let mut total = None;
    if let Some(a) = at {
        let w = g.scale(a, T::of(config.lambda_at))?;
        total = accumulate(g, total, w)?;
    }
    if let Some(k) = kd {
        let w = g.scale(k, T::of(config.lambda_kd))?;
        total = accumulate(g, total, w)?;
    }
    let total = match total {
        Some(t) => t,
        None => g.constant(crate::Tensor::scalar(T::zero())),
    };
    Ok(DistillTerms {
        total,
        at,
        at_views,
        kd,
    })
}

/// Supervised loss plus, when a teacher trace is given, the weighted
/// distillation loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms {
    pub total: Var,
    pub sup: Var,
    pub distill: Option<DistillTerms>,
}

pub fn total_training_loss<T: Scalar>(
    g: &mut Graph<T>,
    y: Var,
    trace_s: &ForwardTrace,
    trace_t: Option<&ForwardTrace>,
    pair_map: &PairMap,
    config: &DistillConfig,
    resolutions: &[StftConfig],
) -> Result<LossTerms> {
    let sup = waveform_loss(g, trace_s.enhanced, y, resolutions)?;
    let Some(trace_t) = trace_t else {
        return Ok(LossTerms {
            total: sup,
            sup,
            distill: None,
        });
    };
    if config.lambda_distill == 0.0 {
        config.validate()?;
        return Ok(LossTerms {
            total: sup,
            sup,
            distill: None,
        });
    }
    let d = distill_loss(g, trace_t, trace_s, pair_map, config, resolutions)?;
    if d.at.is_none() && d.kd.is_none() {
        return Ok(LossTerms {
            total: sup,
            sup,
            distill: Some(d),
        });
    }
    let w = g.scale(d.total, T::of(config.lambda_distill))?;
    let total = g.add(sup, w)?;
    Ok(LossTerms {
        total,
        sup,
        distill: Some(d),
    })
}
