use super::clip::AudioClip;
use crate::{Error, Result};

#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;

/// Bound applied to SI-SDR values in both directions.
pub const SI_SDR_CAP_DB: f64 = 60.0;

/// Scale-invariant signal-to-distortion ratio of `est` against `reference`,
/// clamped to `±SI_SDR_CAP_DB`.
pub fn si_sdr(est: &AudioClip, reference: &AudioClip) -> Result<f64> {
    si_sdr_slices(est.samples(), reference.samples())
}

pub(crate) fn si_sdr_slices(est: &[f64], reference: &[f64]) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::ShapeMismatch {
            op: "si_sdr",
            dim: "length",
            expected: reference.len(),
            got: est.len(),
        });
    }
    let ref_energy: f64 = reference.iter().map(|r| r * r).sum();
    if ref_energy <= 0.0 {
        return Err(Error::Domain {
            op: "si_sdr",
            detail: "zero-power reference",
        });
    }
    let dot: f64 = est.iter().zip(reference).map(|(e, r)| e * r).sum();
    let alpha = dot / ref_energy;
    let mut target = 0.0;
    let mut residual = 0.0;
    for (&e, &r) in est.iter().zip(reference) {
        let t = alpha * r;
        target += t * t;
        residual += (e - t) * (e - t);
    }
    if target == 0.0 {
        return Ok(-SI_SDR_CAP_DB);
    }
    if residual == 0.0 {
        return Ok(SI_SDR_CAP_DB);
    }
    Ok((10.0 * (target / residual).log10()).clamp(-SI_SDR_CAP_DB, SI_SDR_CAP_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn clip(x: Vec<f64>) -> AudioClip {
        AudioClip::new(x, 16000).unwrap()
    }

    #[test]
    fn identical_and_scaled_hit_the_cap() {
        let r: Vec<f64> = (0..100).map(|i| (i as f64 * 0.1).sin() * 0.4).collect();
        assert_eq!(si_sdr(&clip(r.clone()), &clip(r.clone())).unwrap(), 60.0);
        let twice: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert_eq!(si_sdr(&clip(twice), &clip(r)).unwrap(), 60.0);
    }

    #[test]
    fn orthogonal_noise_at_power_ratio_100_is_20_db() {
        // alternating-sign noise is orthogonal to a constant-pair reference
        let r: Vec<f64> = (0..200)
            .map(|i| if (i / 2) % 2 == 0 { 0.5 } else { -0.5 })
            .collect();
        let n: Vec<f64> = (0..200)
            .map(|i| if i % 2 == 0 { 0.05 } else { -0.05 })
            .collect();
        let dot: f64 = r.iter().zip(&n).map(|(a, b)| a * b).sum();
        assert_eq!(dot, 0.0);
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + b).collect();
        let v = si_sdr(&clip(est), &clip(r)).unwrap();
        assert!((v - 20.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn zero_reference_is_an_error() {
        assert!(si_sdr(&clip(alloc::vec![0.1; 4]), &clip(alloc::vec![0.0; 4])).is_err());
    }

    #[test]
    fn zero_estimate_sits_at_the_floor() {
        assert_eq!(
            si_sdr(
                &clip(alloc::vec![0.0; 4]),
                &clip(alloc::vec![0.3, 0.1, 0.0, 0.2])
            )
            .unwrap(),
            -60.0
        );
    }
}
