use alloc::format;
use alloc::vec::Vec;

use crate::model::Side;
use crate::{Error, Result};

/// One student MA block and the teacher levels it learns from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pair {
    pub student_level: usize,
    pub side: Side,
    pub teacher_levels: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairMap {
    pub entries: Vec<Pair>,
}

impl PairMap {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Number of (student, teacher) level pairs, counting each teacher level
    /// of a dual-depth entry separately.
    pub fn pair_count(&self) -> usize {
        self.entries.iter().map(|e| e.teacher_levels.len()).sum()
    }

    /// Teacher levels for `student_level` on `side`.
    pub fn teacher_levels(&self, side: Side, student_level: usize) -> Option<&[usize]> {
        self.entries
            .iter()
            .find(|e| e.side == side && e.student_level == student_level)
            .map(|e| e.teacher_levels.as_slice())
    }
}

/// Pairs each student MA level with teacher levels. Shallower student levels
/// map to the teacher level of the same index; the deepest student level
/// `l_s` maps to teacher levels `l_s..=l_t` (or just `l_s` with
/// `dual_depth == false`). Encoder entries come first, then decoder.
pub fn dual_depth_map(
    l_t: usize,
    l_s: usize,
    student_placement: &[usize],
    dual_depth: bool,
) -> Result<PairMap> {
    if l_s == 0 || l_s > l_t {
        return Err(Error::Config(format!(
            "student depth {l_s} must be between 1 and the teacher depth {l_t}"
        )));
    }
    let mut levels = student_placement.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if let Some(&bad) = levels.iter().find(|&&l| l == 0 || l > l_s) {
        return Err(Error::Config(format!(
            "student MA level {bad} outside 1..={l_s}"
        )));
    }
    let mut entries = Vec::with_capacity(2 * levels.len());
    for side in [Side::Encoder, Side::Decoder] {
        for &l in &levels {
            let teacher_levels = if l == l_s && dual_depth {
                (l_s..=l_t).collect()
            } else {
                alloc::vec![l]
            };
            entries.push(Pair {
                student_level: l,
                side,
                teacher_levels,
            });
        }
    }
    Ok(PairMap { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn shallower_student_absorbs_deeper_teacher_levels() {
        let m = dual_depth_map(4, 3, &[1, 2, 3], true).unwrap();
        for side in [Side::Encoder, Side::Decoder] {
            assert_eq!(m.teacher_levels(side, 1).unwrap(), &[1]);
            assert_eq!(m.teacher_levels(side, 2).unwrap(), &[2]);
            assert_eq!(m.teacher_levels(side, 3).unwrap(), &[3, 4]);
        }
        assert_eq!(m.len(), 6);
        let m = dual_depth_map(3, 2, &[2], true).unwrap();
        assert_eq!(m.teacher_levels(Side::Decoder, 2).unwrap(), &[2, 3]);
        assert_eq!(m.pair_count(), 4);
    }

    #[test]
    fn without_dual_depth_pairs_one_to_one() {
        let m = dual_depth_map(4, 3, &[3], false).unwrap();
        assert_eq!(
            m.entries,
            vec![
                Pair {
                    student_level: 3,
                    side: Side::Encoder,
                    teacher_levels: vec![3]
                },
                Pair {
                    student_level: 3,
                    side: Side::Decoder,
                    teacher_levels: vec![3]
                },
            ]
        );
    }

    #[test]
    fn rejects_deeper_student() {
        assert!(dual_depth_map(2, 3, &[3], true).is_err());
        assert!(dual_depth_map(3, 2, &[3], true).is_err());
        assert!(dual_depth_map(3, 0, &[], true).is_err());
    }
}
