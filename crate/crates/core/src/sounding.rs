//! Downlink sounding of the selected path gains and quantized feedback.
//!
//! After path selection the BS still needs the complex gains of the selected
//! paths. It sounds them directly: one pilot slot per selected path, with the
//! slot's transmit beamformer and RIS profile matched to that path's steering
//! structure so the path's gain arrives with a known real coefficient while
//! every other path contributes only residual interference. The UE rescales
//! the received samples into a gain estimate and feeds its direction back
//! through a shared random codebook, plus the magnitude.
//!
//! Features:
//! - per-slot matched pilot beamformers and their per-path response vector
//! - physical pilot reception through the full channel chain (the response
//!   vector is used by tests as an oracle, never to synthesize samples)
//! - the closed-form rescaling estimator and the codebook feedback round trip

use crate::channel::{received_symbol, ChannelRealization};
use crate::numerics::CVec;
use crate::rng::RandomSource;
use crate::rvq::{Codebook, RvqError};
use num_complex::Complex64;
use thiserror::Error;

// ── Types ────────────────────────────────────────────────────────────────────

/// Outcome of the estimate → quantize → reconstruct round trip.
#[derive(Debug, Clone)]
pub struct GainFeedback {
    /// UE-side estimate of the selected-path gains.
    pub estimate: CVec,
    /// BS-side reconstruction: ‖estimate‖ · codeword.
    pub reconstructed: CVec,
    /// Index of the chosen codeword.
    pub codeword: usize,
}

#[derive(Debug, Error)]
pub enum SoundingError {
    #[error("pilot slot {slot} out of range for {count} selected paths")]
    SlotOutOfRange { slot: usize, count: usize },
    #[error("pilot power must be positive, got {0}")]
    BadPower(f64),
    #[error(transparent)]
    Rvq(#[from] RvqError),
}

// ── Pilot design ─────────────────────────────────────────────────────────────

/// Matched beamformers for pilot slot `t` (0-based position in `kept`):
/// the transmit vector is the sounded path's BS steering column (unit norm)
/// and the RIS profile is N_R times the conjugated RIS coupling column
/// (unit-modulus entries).
pub fn pilot_beamformers(
    realization: &ChannelRealization,
    kept: &[usize],
    t: usize,
) -> Result<(CVec, CVec), SoundingError> {
    let Some(&path) = kept.get(t) else {
        return Err(SoundingError::SlotOutOfRange {
            slot: t,
            count: kept.len(),
        });
    };
    let f_e = realization.bs_dict.column(path).into_owned();
    let n_r = Complex64::new(realization.geometry.n_r() as f64, 0.0);
    let psi = realization.ris_dict.column(path).map(|z| z.conj() * n_r);
    Ok((f_e, psi))
}

/// Per-path pilot response κ ∈ C^L for given beamformers:
/// κ_l = √(P_e·N_B·N_R²/L) · (f_eᵀ conj(ã_B,l)) · (ψᵀ ã_R,l), so the noiseless
/// received pilot is κᵀg.
pub fn pilot_response(realization: &ChannelRealization, f_e: &CVec, psi: &CVec, p_e: f64) -> CVec {
    let scale = Complex64::new(p_e.sqrt() * realization.geometry.gain_scale(), 0.0);
    let through_bs = realization.bs_dict.adjoint() * f_e;
    let through_ris = realization.ris_dict.transpose() * psi;
    CVec::from_fn(realization.geometry.n_paths(), |l, _| {
        scale * through_bs[l] * through_ris[l]
    })
}

/// Run the pilot phase: one slot per selected path, pilot symbol 1, received
/// through the full physical channel chain with fresh noise per slot.
pub fn sound_paths(
    realization: &ChannelRealization,
    kept: &[usize],
    p_e: f64,
    noise_var: f64,
    rng: &mut RandomSource,
) -> Result<CVec, SoundingError> {
    if p_e <= 0.0 {
        return Err(SoundingError::BadPower(p_e));
    }
    let mut y = CVec::zeros(kept.len());
    for t in 0..kept.len() {
        let (f_e, psi) = pilot_beamformers(realization, kept, t)?;
        let h = realization.cascaded_channel(&psi);
        y[t] = received_symbol(&h, &f_e, p_e, Complex64::new(1.0, 0.0), noise_var, rng);
    }
    Ok(y)
}

// ── Estimation and feedback ──────────────────────────────────────────────────

/// Rescale the received pilots into the gain estimate:
/// ĝ_s = √(L/(P_e·N_B·N_R²)) · y. Inverts the matched-slot coefficient, so the
/// estimate is exact when interference and noise vanish.
pub fn estimate_gains(
    y: &CVec,
    p_e: f64,
    realization: &ChannelRealization,
) -> Result<CVec, SoundingError> {
    if p_e <= 0.0 {
        return Err(SoundingError::BadPower(p_e));
    }
    let scale = 1.0 / (p_e.sqrt() * realization.geometry.gain_scale());
    Ok(y * Complex64::new(scale, 0.0))
}

/// Quantize the estimate's direction through the shared codebook and rebuild
/// the BS-side gain vector as ‖estimate‖ · codeword.
pub fn feedback_gains(estimate: &CVec, codebook: &Codebook) -> Result<GainFeedback, SoundingError> {
    let (codeword, reconstructed) = codebook.quantize(estimate)?;
    Ok(GainFeedback {
        estimate: estimate.clone(),
        reconstructed,
        codeword,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        build_realization, sample_angles, sample_gains, sample_realization, PathGains,
        SystemGeometry,
    };

    fn small_geometry() -> SystemGeometry {
        SystemGeometry {
            nb_v: 2,
            nb_h: 2,
            nr_v: 4,
            nr_h: 2,
            l_rb: 2,
            l_ru: 3,
        }
    }

    fn paper_geometry() -> SystemGeometry {
        SystemGeometry {
            nb_v: 4,
            nb_h: 4,
            nr_v: 16,
            nr_h: 16,
            l_rb: 2,
            l_ru: 3,
        }
    }

    // 1. Pilot beamformers are feasible: unit-norm transmit vector,
    //    unit-modulus profile entries.
    #[test]
    fn pilot_beamformers_are_feasible() {
        let mut rng = RandomSource::from_seed(51);
        let re = sample_realization(small_geometry(), &mut rng);
        let kept = [0usize, 2, 5];
        for t in 0..kept.len() {
            let (f_e, psi) = pilot_beamformers(&re, &kept, t).unwrap();
            assert!((f_e.norm() - 1.0).abs() <= 1e-12);
            for z in psi.iter() {
                assert!((z.norm() - 1.0).abs() <= 1e-12);
            }
        }
        assert!(pilot_beamformers(&re, &kept, 3).is_err());
    }

    // 2. Matched-slot response: the sounded path's response entry equals
    //    √(P_e·N_B·N_R²/L) — including the documented large-array value.
    #[test]
    fn matched_slot_response_is_exact() {
        let mut rng = RandomSource::from_seed(52);
        for (geometry, p_e) in [(small_geometry(), 3.0), (paper_geometry(), 1.0)] {
            let re = sample_realization(geometry, &mut rng);
            let kept = [0usize, 1, 4];
            let expected = (p_e * geometry.n_b() as f64 * (geometry.n_r() as f64).powi(2)
                / geometry.n_paths() as f64)
                .sqrt();
            for t in 0..kept.len() {
                let (f_e, psi) = pilot_beamformers(&re, &kept, t).unwrap();
                let kappa = pilot_response(&re, &f_e, &psi, p_e);
                let matched = kappa[kept[t]];
                assert!(
                    (matched - Complex64::new(expected, 0.0)).norm() <= 1e-9 * expected,
                    "slot {t}: response {matched} vs {expected}"
                );
            }
        }
        // 16 antennas, 256 elements, 6 paths at unit power → √(16·256²/6).
        let value = (16.0 * 65536.0 / 6.0f64).sqrt();
        assert!((value - 418.0462).abs() < 1e-3);
    }

    // 3. Physical reception equals the response-vector form: noiseless slots
    //    satisfy y(t) = κ(t)ᵀ g.
    #[test]
    fn physical_chain_matches_response_form() {
        let mut rng = RandomSource::from_seed(53);
        let re = sample_realization(small_geometry(), &mut rng);
        let kept = [1usize, 3, 4];
        let p_e = 2.5;
        let y = sound_paths(&re, &kept, p_e, 0.0, &mut rng).unwrap();
        for t in 0..kept.len() {
            let (f_e, psi) = pilot_beamformers(&re, &kept, t).unwrap();
            let kappa = pilot_response(&re, &f_e, &psi, p_e);
            let oracle = (kappa.transpose() * &re.gains.cascaded)[(0, 0)];
            assert!(
                (y[t] - oracle).norm() <= 1e-9 * oracle.norm().max(1.0),
                "slot {t}: {} vs {}",
                y[t],
                oracle
            );
        }
    }

    // 4. Interference decomposition: subtracting the matched term leaves the
    //    loop-oracle sum over the other paths.
    #[test]
    fn interference_matches_loop_oracle() {
        let mut rng = RandomSource::from_seed(54);
        let re = sample_realization(small_geometry(), &mut rng);
        let kept = [0usize, 2];
        let p_e = 1.0;
        let y = sound_paths(&re, &kept, p_e, 0.0, &mut rng).unwrap();
        for t in 0..kept.len() {
            let (f_e, psi) = pilot_beamformers(&re, &kept, t).unwrap();
            let kappa = pilot_response(&re, &f_e, &psi, p_e);
            let matched = kappa[kept[t]] * re.gains.cascaded[kept[t]];
            let mut interference = Complex64::new(0.0, 0.0);
            for l in 0..re.geometry.n_paths() {
                if l != kept[t] {
                    interference += kappa[l] * re.gains.cascaded[l];
                }
            }
            assert!((y[t] - matched - interference).norm() <= 1e-9 * y[t].norm().max(1.0));
        }
    }

    // 5. When only the sounded path carries gain and noise is off, the
    //    estimator returns that gain exactly — the matched coefficient and
    //    its inverse rescaling cancel to machine precision.
    #[test]
    fn noiseless_interference_free_recovery_is_exact() {
        let geometry = small_geometry();
        let mut rng = RandomSource::from_seed(55);
        let angles = sample_angles(geometry, &mut rng);
        let full = sample_gains(geometry, &mut rng);
        let kept = [1usize, 4];
        let p_e = 4.0;

        for (t, &l) in kept.iter().enumerate() {
            // Zero every cascaded entry but the sounded path's (alpha/beta
            // stay as drawn; only `cascaded` feeds the chain).
            let mut cascaded = CVec::zeros(geometry.n_paths());
            cascaded[l] = full.cascaded[l];
            let gains = PathGains {
                alpha: full.alpha.clone(),
                beta: full.beta.clone(),
                cascaded,
            };
            let re = build_realization(geometry, angles.clone(), gains);
            let y = sound_paths(&re, &kept, p_e, 0.0, &mut rng).unwrap();
            let estimate = estimate_gains(&y, p_e, &re).unwrap();
            let truth = full.cascaded[l];
            assert!(
                (estimate[t] - truth).norm() <= 1e-9 * truth.norm(),
                "slot {t}: {} vs {}",
                estimate[t],
                truth
            );
            assert!(estimate_gains(&y, 0.0, &re).is_err());
            assert!(sound_paths(&re, &kept, -1.0, 0.0, &mut rng).is_err());
        }
    }

    // 6. Noise samples injected by the pilot phase carry the configured
    //    variance.
    #[test]
    fn pilot_noise_has_configured_variance() {
        let mut rng = RandomSource::from_seed(56);
        let re = sample_realization(small_geometry(), &mut rng);
        let kept = [0usize, 3];
        let p_e = 1.0;
        let noise_var = 0.7;
        let clean = sound_paths(&re, &kept, p_e, 0.0, &mut rng).unwrap();
        let runs = 50_000usize;
        let mut acc = 0.0;
        for _ in 0..runs {
            let noisy = sound_paths(&re, &kept, p_e, noise_var, &mut rng).unwrap();
            acc += (&noisy - &clean).norm_squared();
        }
        let measured = acc / (runs * kept.len()) as f64;
        assert!(
            (measured - noise_var).abs() <= 0.02 * noise_var,
            "sample variance {measured} vs {noise_var}"
        );
    }

    // 7. Feedback round trip: reconstruction is ‖estimate‖·codeword and an
    //    estimate lying on a codeword direction is recovered exactly.
    #[test]
    fn feedback_round_trip_preserves_magnitude() {
        let mut rng = RandomSource::from_seed(57);
        let codebook = Codebook::generate(3, 6, 99).unwrap();
        for _ in 0..20 {
            let estimate = CVec::from_fn(3, |_, _| rng.complex_normal());
            let fb = feedback_gains(&estimate, &codebook).unwrap();
            assert!((fb.reconstructed.norm() - estimate.norm()).abs() <= 1e-12);
            let word = codebook.word(fb.codeword);
            let aligned = word * Complex64::new(estimate.norm(), 0.0);
            assert!((&fb.reconstructed - aligned).norm() <= 1e-12);
        }

        let on_word = codebook.word(17) * Complex64::new(2.0, 0.0);
        let fb = feedback_gains(&on_word, &codebook).unwrap();
        assert_eq!(fb.codeword, 17);
        assert!((on_word.dotc(&fb.reconstructed).norm() - on_word.norm_squared()).abs() <= 1e-9);
    }
}
