//! Temporal attention maps, attention-transfer losses over the three MA
//! views, teacher/student level pairing and the combined training loss.

mod loss;
mod pairing;
mod tam;

pub use loss::{
    distill_loss, kd_loss, mv_at_loss, total_training_loss, DistillConfig, DistillTerms, LossTerms,
};
pub use pairing::{dual_depth_map, Pair, PairMap};
pub use tam::{align_lengths, at_loss, compute_tam, tam_of, PLoss, Tam, TamParams, View};
