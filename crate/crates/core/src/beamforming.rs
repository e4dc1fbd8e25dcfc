//! Data-transmission beamformer refresh from fed-back path gains.
//!
//! Once the BS holds (quantized) gains for the selected paths, the transmit
//! beamformer and RIS profile are re-optimized against a sharper objective
//! than the gain-free selection stage: the selected paths contribute through
//! their known gains, while the removed paths enter only through their
//! second-order statistics. The resulting mean effective gain
//! ‖A_rᴴf_t‖² + |g_sᵀA_sᴴf_t|² is alternately maximized in f_t (leading
//! eigenvector) and ψ (manifold ascent), mirroring the selection-stage loop.
//!
//! Features:
//! - the known-gain mean effective gain and its Monte Carlo contract
//! - quadratic forms in f_t (dense, N_B square) and in ψ (factored rank-one
//!   sum with one term per removed path plus one aggregated selected term)
//! - the alternating update loop with optional profile warm start

use crate::channel::ChannelRealization;
use crate::manifold::{self, HermitianForm, ManifoldError, ManifoldOptions, RankOneSum};
use crate::numerics::{self, CMat, CVec, NumericsError};
use num_complex::Complex64;
use thiserror::Error;

// ── Types ────────────────────────────────────────────────────────────────────

/// Converged output of the post-feedback alternating update.
#[derive(Debug, Clone)]
pub struct Updated {
    /// Transmit beamformer f_t, unit norm.
    pub transmit: CVec,
    /// RIS profile ψ, unit-modulus entries.
    pub profile: CVec,
    /// Final mean-gain objective value.
    pub objective: f64,
    /// Objective after each completed round (non-decreasing within rounding).
    pub round_objectives: Vec<f64>,
}

/// Stopping rules for the transmit/profile alternation.
#[derive(Debug, Clone)]
pub struct UpdateOptions {
    /// Relative objective-change threshold between rounds.
    pub objective_tol: f64,
    pub max_rounds: usize,
    pub manifold: ManifoldOptions,
}

impl Default for UpdateOptions {
    fn default() -> Self {
        Self {
            objective_tol: 1e-6,
            max_rounds: 30,
            manifold: ManifoldOptions::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BeamformingError {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

// ── Closed-form mean gain ────────────────────────────────────────────────────

fn check_shapes(a_s: &CMat, a_r: &CMat, g_s: &CVec, f_t: &CVec) -> Result<(), BeamformingError> {
    if a_s.ncols() != g_s.len() {
        return Err(BeamformingError::Shape(format!(
            "{} selected-path columns vs {} gains",
            a_s.ncols(),
            g_s.len()
        )));
    }
    if a_s.nrows() != f_t.len() || (a_r.ncols() > 0 && a_r.nrows() != f_t.len()) {
        return Err(BeamformingError::Shape(format!(
            "path matrices with {}/{} rows vs beamformer length {}",
            a_s.nrows(),
            a_r.nrows(),
            f_t.len()
        )));
    }
    Ok(())
}

/// Mean effective gain E[|hᴴf_t|²] with the selected gains known and the
/// removed gains zero-mean unit-covariance: ‖A_rᴴf_t‖² + |g_sᵀA_sᴴf_t|².
pub fn expected_gain(
    a_s: &CMat,
    a_r: &CMat,
    g_s: &CVec,
    f_t: &CVec,
) -> Result<f64, BeamformingError> {
    check_shapes(a_s, a_r, g_s, f_t)?;
    let through_selected = a_s.adjoint() * f_t;
    Ok((a_r.adjoint() * f_t).norm_squared() + g_s.dot(&through_selected).norm_sqr())
}

// ── Quadratic-form representations ───────────────────────────────────────────

/// Mean gain as a quadratic form in f_t: A_rA_rᴴ + ccᴴ with c = A_s·conj(g_s).
/// Hermitian PSD, N_B square.
pub fn precoder_form(a_s: &CMat, a_r: &CMat, g_s: &CVec) -> CMat {
    let n_b = a_s.nrows();
    let one = Complex64::new(1.0, 0.0);
    let mut j = CMat::zeros(n_b, n_b);
    if a_r.ncols() > 0 {
        j.gemm(one, a_r, &a_r.adjoint(), one);
    }
    let c = a_s * g_s.map(|z| z.conj());
    j.gerc(one, &c, &c, one);
    j
}

/// Leading-eigenvector transmit beamformer and the attained objective.
pub fn best_precoder(j: &CMat) -> Result<(CVec, f64), BeamformingError> {
    let (value, mut vector) = numerics::hermitian_max_eigenpair(j, 1e-9, 10_000)?;
    vector /= Complex64::new(vector.norm(), 0.0);
    Ok((vector, value))
}

/// Mean gain as a quadratic form in ψ, kept factored: one unit-weight term
/// B_jᵀconj(f_t) per removed path plus the aggregated selected-path term
/// Σ_i conj(g_s,i)·B_iᵀconj(f_t).
pub fn phase_form(
    realization: &ChannelRealization,
    kept: &[usize],
    dropped: &[usize],
    g_s: &CVec,
    f_t: &CVec,
) -> RankOneSum {
    let n_r = realization.geometry.n_r();
    let f_conj = f_t.map(|z| z.conj());
    let mut form = RankOneSum::new(n_r);
    for &l in dropped {
        form.push(1.0, realization.coupling_t_apply(l, &f_conj));
    }
    let mut aggregated = CVec::zeros(n_r);
    for (i, &l) in kept.iter().enumerate() {
        let w = realization.coupling_t_apply(l, &f_conj) * g_s[i].conj();
        aggregated += w;
    }
    form.push(1.0, aggregated);
    form
}

// ── Alternating update ───────────────────────────────────────────────────────

/// Alternate the eigenvector transmit step and the manifold profile step
/// until the mean-gain objective stalls. The profile starts all-ones unless a
/// warm start is supplied. Each round re-optimizes f_t at the current ψ and
/// then ψ at the new f_t, so the objective never decreases across rounds.
pub fn alternate_update(
    realization: &ChannelRealization,
    kept: &[usize],
    dropped: &[usize],
    g_s: &CVec,
    warm_start: Option<&CVec>,
    opts: &UpdateOptions,
) -> Result<Updated, BeamformingError> {
    let geometry = realization.geometry;
    if kept.len() != g_s.len() {
        return Err(BeamformingError::Shape(format!(
            "{} selected paths vs {} gains",
            kept.len(),
            g_s.len()
        )));
    }
    let mut psi = warm_start
        .cloned()
        .unwrap_or_else(|| CVec::from_element(geometry.n_r(), Complex64::new(1.0, 0.0)));
    let mut transmit = CVec::zeros(geometry.n_b());
    let mut round_objectives = Vec::new();

    for _ in 0..opts.max_rounds {
        let a_s = realization.path_columns(kept, &psi);
        let a_r = realization.path_columns(dropped, &psi);
        let j_act = precoder_form(&a_s, &a_r, g_s);
        let (f_t, _) = best_precoder(&j_act)?;

        let j_pass = phase_form(realization, kept, dropped, g_s, &f_t);
        let (psi_new, _) = manifold::minimize(&j_pass, &psi, &opts.manifold)?;
        let objective = j_pass.quad(&psi_new);

        psi = psi_new;
        transmit = f_t;
        let stalled = round_objectives.last().is_some_and(|&prev: &f64| {
            (objective - prev).abs() <= opts.objective_tol * prev.abs().max(f64::MIN_POSITIVE)
        });
        round_objectives.push(objective);
        if stalled {
            break;
        }
    }

    let objective = round_objectives.last().copied().unwrap_or(0.0);
    Ok(Updated {
        transmit,
        profile: psi,
        objective,
        round_objectives,
    })
}
