//! Angle-domain dominant-path selection with alternating beamforming.
//!
//! Before any gain information exists, the BS ranks cascaded paths purely by
//! their angle structure: the mean effective beamforming gain E[|hᴴf_t|²] over
//! random path gains has a closed form in the steering geometry, and each
//! path's contribution to it can be isolated. The greedy selector starts from
//! the full path set and repeatedly removes the weakest contributor after
//! re-optimizing both beamformers.
//!
//! Features:
//! - fourth-moment factor of the coupled Kronecker gains and the closed-form
//!   mean gain it parameterizes
//! - quadratic-form representations of the mean gain in the vectorized
//!   precoder (dense) and in the RIS profile (factored rank-one sum)
//! - eigenvector precoder step and manifold profile step, alternated to
//!   convergence
//! - per-path contribution scores and the greedy removal loop
//!
//! Everything here reads only steering geometry — never the realized gains —
//! so selections are reproducible from angle information alone.

use crate::channel::ChannelRealization;
use crate::manifold::{self, HermitianForm, ManifoldError, ManifoldOptions, RankOneSum};
use crate::numerics::{self, CMat, CVec, NumericsError};
use num_complex::Complex64;
use thiserror::Error;

// ── Types ────────────────────────────────────────────────────────────────────

/// Partition of the cascaded-path indices into selected and removed sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Selected path indices, ascending.
    pub kept: Vec<usize>,
    /// Removed path indices, ascending.
    pub dropped: Vec<usize>,
}

/// Converged output of one alternating optimization run.
#[derive(Debug, Clone)]
pub struct Converged {
    /// Precoder basis V (N_B × |kept|), unit Frobenius norm.
    pub precoder: CMat,
    /// RIS profile ψ, unit modulus entries.
    pub profile: CVec,
    /// Final mean-gain objective value.
    pub objective: f64,
    /// Objective after each completed round (non-decreasing within rounding).
    pub round_objectives: Vec<f64>,
}

/// Stopping rules for the precoder/profile alternation.
#[derive(Debug, Clone)]
pub struct AlternationOptions {
    /// Relative objective-change threshold between rounds.
    pub objective_tol: f64,
    pub max_rounds: usize,
    pub manifold: ManifoldOptions,
}

impl Default for AlternationOptions {
    fn default() -> Self {
        Self {
            objective_tol: 1e-6,
            max_rounds: 50,
            manifold: ManifoldOptions::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("need at least two cascaded paths, got {0}")]
    TooFewPaths(usize),
    #[error("target path count {requested} outside 1..={available}")]
    BadTarget { requested: usize, available: usize },
    #[error("path position {position} out of range for {count} selected paths")]
    BadPosition { position: usize, count: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

// ── Closed-form mean gain ────────────────────────────────────────────────────

/// Fourth-moment factor of the coupled Kronecker gains:
/// (L + L_RB + L_RU − 3)/(L − 1) with L = L_RB·L_RU. Requires L ≥ 2.
pub fn moment_factor(l_rb: usize, l_ru: usize) -> Result<f64, SelectionError> {
    let l = l_rb * l_ru;
    if l < 2 {
        return Err(SelectionError::TooFewPaths(l));
    }
    Ok((l + l_rb + l_ru - 3) as f64 / (l - 1) as f64)
}

fn check_gain_shapes(a_s: &CMat, a_r: &CMat, v: &CMat) -> Result<(), SelectionError> {
    if a_s.nrows() != v.nrows() || a_s.ncols() != v.ncols() {
        return Err(SelectionError::Shape(format!(
            "selected-path matrix {}x{} incompatible with precoder {}x{}",
            a_s.nrows(),
            a_s.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    if a_r.ncols() > 0 && a_r.nrows() != v.nrows() {
        return Err(SelectionError::Shape(format!(
            "removed-path matrix has {} rows, precoder has {}",
            a_r.nrows(),
            v.nrows()
        )));
    }
    Ok(())
}

/// Mean effective beamforming gain E[|hᴴf_t|²] over random path gains, as a
/// closed form in the path matrices:
/// (4−2Q)‖diag(A_sᴴV)‖² + Q|tr(A_sᴴV)|² + Q‖A_sᴴV‖_F² + Q‖A_rᴴV‖_F².
pub fn expected_gain(a_s: &CMat, a_r: &CMat, v: &CMat, q: f64) -> Result<f64, SelectionError> {
    check_gain_shapes(a_s, a_r, v)?;
    let cross = a_s.adjoint() * v;
    let diag = cross.diagonal();
    let trace: Complex64 = diag.sum();
    Ok((4.0 - 2.0 * q) * diag.norm_squared()
        + q * trace.norm_sqr()
        + q * cross.norm_squared()
        + q * (a_r.adjoint() * v).norm_squared())
}

// ── Quadratic-form representations ───────────────────────────────────────────

/// Mean gain as a quadratic form in vec(V): dense Hermitian matrix of size
/// N_B·L_s. Block i of the diagonal carries (4−2Q)a_i a_iᴴ + Q(A_sA_sᴴ +
/// A_rA_rᴴ); one global rank-one term Q·vec(A_s)vec(A_s)ᴴ completes it.
pub fn precoder_form(a_s: &CMat, a_r: &CMat, q: f64) -> CMat {
    let n_b = a_s.nrows();
    let l_s = a_s.ncols();
    let n = n_b * l_s;
    let one = Complex64::new(1.0, 0.0);

    let mut gram = CMat::zeros(n_b, n_b);
    gram.gemm(Complex64::new(q, 0.0), a_s, &a_s.adjoint(), one);
    if a_r.ncols() > 0 {
        gram.gemm(Complex64::new(q, 0.0), a_r, &a_r.adjoint(), one);
    }

    let mut j = CMat::zeros(n, n);
    for i in 0..l_s {
        let mut block = gram.clone();
        block.gerc(
            Complex64::new(4.0 - 2.0 * q, 0.0),
            &a_s.column(i).into_owned(),
            &a_s.column(i).into_owned(),
            one,
        );
        j.view_mut((i * n_b, i * n_b), (n_b, n_b)).copy_from(&block);
    }

    let stacked = numerics::vec_of(a_s);
    j.gerc(Complex64::new(q, 0.0), &stacked, &stacked, one);
    j
}

/// Leading-eigenvector precoder: V = invec(u_max)/‖u_max‖ for the given
/// quadratic form, plus the attained objective (the leading eigenvalue).
pub fn best_precoder(j_act: &CMat, n_b: usize) -> Result<(CMat, f64), SelectionError> {
    if n_b == 0 || !j_act.nrows().is_multiple_of(n_b) {
        return Err(SelectionError::Shape(format!(
            "form size {} is not a multiple of {} antennas",
            j_act.nrows(),
            n_b
        )));
    }
    let (value, mut vector) = numerics::hermitian_max_eigenpair(j_act, 1e-9, 10_000)?;
    vector /= Complex64::new(vector.norm(), 0.0);
    Ok((numerics::unvec(&vector, n_b)?, value))
}

/// Same result as `best_precoder(&precoder_form(a_s, a_r, q), n_b)`, computed
/// through the form's low-rank factorization J = WWᴴ: the leading eigenpair
/// comes from the m×m Gram matrix WᴴW with m = L_s(L+1)+1 factor columns,
/// which is much smaller than the N_B·L_s dense form at realistic antenna
/// counts. Falls back to the dense route when the Gram matrix would not be
/// smaller or the form is degenerate.
pub fn best_precoder_from_paths(
    a_s: &CMat,
    a_r: &CMat,
    q: f64,
) -> Result<(CMat, f64), SelectionError> {
    let n_b = a_s.nrows();
    let l_s = a_s.ncols();
    let l = l_s + a_r.ncols();
    let m = l_s + 1 + l_s * l;
    if l_s == 0 || m >= n_b * l_s {
        return best_precoder(&precoder_form(a_s, a_r, q), n_b);
    }

    // W's columns: √(4−2Q)·e_i⊗a_s,i for each selected i, √Q·vec(A_s), and
    // √Q·e_i⊗p_l over every (selected i, path l) with P = [A_s A_r]. All
    // inner products reduce to entries of PᴴP.
    let s4 = (4.0 - 2.0 * q).max(0.0);
    let mut paths = CMat::zeros(n_b, l);
    paths.view_mut((0, 0), (n_b, l_s)).copy_from(a_s);
    if a_r.ncols() > 0 {
        paths.view_mut((0, l_s), (n_b, a_r.ncols())).copy_from(a_r);
    }
    let mut gram_p = paths.adjoint() * &paths;
    let sym = (&gram_p + gram_p.adjoint()) * Complex64::new(0.5, 0.0);
    gram_p.copy_from(&sym);

    let rs4 = s4.sqrt();
    let rq = q.sqrt();
    let kron_col = |i: usize, path: usize| l_s + 1 + i * l + path;
    let mut gram = CMat::zeros(m, m);
    for i in 0..l_s {
        gram[(i, i)] = gram_p[(i, i)] * s4;
        gram[(i, l_s)] = gram_p[(i, i)] * (rs4 * rq);
        for path in 0..l {
            gram[(i, kron_col(i, path))] = gram_p[(i, path)] * (rs4 * rq);
        }
    }
    gram[(l_s, l_s)] = (0..l_s).map(|k| gram_p[(k, k)]).sum::<Complex64>() * q;
    for j in 0..l_s {
        for path in 0..l {
            gram[(l_s, kron_col(j, path))] = gram_p[(j, path)] * q;
        }
    }
    for i in 0..l_s {
        for a in 0..l {
            for b in 0..l {
                gram[(kron_col(i, a), kron_col(i, b))] = gram_p[(a, b)] * q;
            }
        }
    }
    for r in 0..m {
        for c in 0..r {
            gram[(r, c)] = gram[(c, r)].conj();
        }
    }

    let (value, weights) = numerics::hermitian_max_eigenpair(&gram, 1e-9, 10_000)?;
    let mut v = CMat::zeros(n_b, l_s);
    for b in 0..l_s {
        let own = weights[b] * rs4 + weights[l_s] * rq;
        let mut column = a_s.column(b) * own;
        for path in 0..l {
            column.axpy(
                weights[kron_col(b, path)] * rq,
                &paths.column(path),
                Complex64::new(1.0, 0.0),
            );
        }
        v.set_column(b, &column);
    }
    let norm = v.norm();
    if norm.is_nan() || norm <= 1e-12 {
        // Degenerate form (zero paths); the dense route handles it.
        return best_precoder(&precoder_form(a_s, a_r, q), n_b);
    }
    v /= Complex64::new(norm, 0.0);
    Ok((v, value))
}

/// Mean gain as a quadratic form in ψ, kept factored: with w_l = B_lᵀv_l* the
/// terms are (4−2Q)Σ w_l w_lᴴ, Q(Σw_l)(Σw_l)ᴴ, and one Q·(N_BN_R²/L)·‖Vᴴã_B,l‖²
/// weighted outer product of conj(ã_R,l) per path (selected and removed).
pub fn phase_form(
    realization: &ChannelRealization,
    kept: &[usize],
    dropped: &[usize],
    v: &CMat,
    q: f64,
) -> RankOneSum {
    let n_r = realization.geometry.n_r();
    let power_scale = realization.geometry.gain_scale().powi(2);
    let mut form = RankOneSum::new(n_r);
    let mut total = CVec::zeros(n_r);
    for (i, &l) in kept.iter().enumerate() {
        let w = realization.coupling_t_apply(l, &v.column(i).map(|z| z.conj()));
        total += &w;
        form.push(4.0 - 2.0 * q, w);
    }
    form.push(q, total);
    for &l in kept.iter().chain(dropped.iter()) {
        let through = v.adjoint() * realization.bs_dict.column(l);
        let weight = q * power_scale * through.norm_squared();
        form.push(weight, realization.ris_dict.column(l).map(|z| z.conj()));
    }
    form
}

// ── Per-path contributions ───────────────────────────────────────────────────

/// Contribution of the selected path at `position` to the mean gain:
/// (4−2Q)|a_pᴴv_p|² + Q(|a_pᴴv_p|² + 2Re[conj(a_pᴴv_p)·Σ_{i≠p} a_iᴴv_i])
/// + Q‖A_sᴴv_p‖² + Q‖A_rᴴv_p‖².
pub fn path_score(
    position: usize,
    a_s: &CMat,
    a_r: &CMat,
    v: &CMat,
    q: f64,
) -> Result<f64, SelectionError> {
    check_gain_shapes(a_s, a_r, v)?;
    if position >= a_s.ncols() {
        return Err(SelectionError::BadPosition {
            position,
            count: a_s.ncols(),
        });
    }
    let diag = (a_s.adjoint() * v).diagonal();
    let own = diag[position];
    let others: Complex64 = diag.sum() - own;
    let column = v.column(position);
    Ok((4.0 - 2.0 * q) * own.norm_sqr()
        + q * (own.norm_sqr() + 2.0 * (own.conj() * others).re)
        + q * (a_s.adjoint() * column).norm_squared()
        + q * (a_r.adjoint() * column).norm_squared())
}

// ── Alternating optimization and greedy removal ──────────────────────────────

/// Alternate the eigenvector precoder step and the manifold profile step until
/// the mean-gain objective stalls. Each round first re-optimizes V at the
/// current ψ, then re-optimizes ψ at the new V, so the objective never
/// decreases across rounds (up to rounding).
pub fn converge_beamformers(
    realization: &ChannelRealization,
    kept: &[usize],
    dropped: &[usize],
    psi0: &CVec,
    opts: &AlternationOptions,
) -> Result<Converged, SelectionError> {
    let geometry = realization.geometry;
    let q = moment_factor(geometry.l_rb, geometry.l_ru)?;
    let n_b = geometry.n_b();
    let mut psi = psi0.clone();
    let mut precoder = CMat::zeros(n_b, kept.len());
    let mut round_objectives = Vec::new();

    for _ in 0..opts.max_rounds {
        let a_s = realization.path_columns(kept, &psi);
        let a_r = realization.path_columns(dropped, &psi);
        let (v, _) = best_precoder_from_paths(&a_s, &a_r, q)?;

        let j_pass = phase_form(realization, kept, dropped, &v, q);
        let (psi_new, _) = manifold::minimize(&j_pass, &psi, &opts.manifold)?;
        let objective = j_pass.quad(&psi_new);

        psi = psi_new;
        precoder = v;
        let stalled = round_objectives.last().is_some_and(|&prev: &f64| {
            (objective - prev).abs() <= opts.objective_tol * prev.abs().max(f64::MIN_POSITIVE)
        });
        round_objectives.push(objective);
        if stalled {
            break;
        }
    }

    let objective = round_objectives.last().copied().unwrap_or(0.0);
    Ok(Converged {
        precoder,
        profile: psi,
        objective,
        round_objectives,
    })
}

/// Greedy dominant-path selection: start from all L paths and an all-ones ψ,
/// alternate the beamformers to convergence, remove the path with the smallest
/// contribution score (ties → lowest index), and repeat until `l_target` paths
/// remain. The profile warm-starts each round; the final set is re-optimized
/// before returning. Uses only steering geometry, never realized gains.
pub fn select_paths(
    realization: &ChannelRealization,
    l_target: usize,
    opts: &AlternationOptions,
) -> Result<(Selection, Converged), SelectionError> {
    let geometry = realization.geometry;
    let l = geometry.n_paths();
    if l_target == 0 || l_target > l {
        return Err(SelectionError::BadTarget {
            requested: l_target,
            available: l,
        });
    }
    let q = moment_factor(geometry.l_rb, geometry.l_ru)?;
    let mut kept: Vec<usize> = (0..l).collect();
    let mut dropped: Vec<usize> = Vec::new();
    let mut psi = CVec::from_element(geometry.n_r(), Complex64::new(1.0, 0.0));

    loop {
        let converged = converge_beamformers(realization, &kept, &dropped, &psi, opts)?;
        psi = converged.profile.clone();
        if kept.len() == l_target {
            return Ok((Selection { kept, dropped }, converged));
        }

        let a_s = realization.path_columns(&kept, &psi);
        let a_r = realization.path_columns(&dropped, &psi);
        let mut weakest = 0usize;
        let mut weakest_score = f64::INFINITY;
        for position in 0..kept.len() {
            let score = path_score(position, &a_s, &a_r, &converged.precoder, q)?;
            if score < weakest_score {
                weakest_score = score;
                weakest = position;
            }
        }
        let removed = kept.remove(weakest);
        let at = dropped.partition_point(|&x| x < removed);
        dropped.insert(at, removed);
    }
}
