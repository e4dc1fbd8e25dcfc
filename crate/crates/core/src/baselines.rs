//! Comparison schemes: whole-gain estimators with random pilots, the
//! closed-form alternating beamformer on the reconstructed channel matrix,
//! and random/exhaustive path selection.
//!
//! These baselines deliberately ignore the structure the main pipeline
//! exploits. The estimators sound all paths with randomly drawn beamformers
//! and recover the full gain vector at the BS from the fed-back received
//! samples; the beamformer works on a dense channel matrix rebuilt from a
//! gain estimate; the selection baselines bracket the greedy strategy from
//! below (uniform subsets) and above (exhaustive search).
//!
//! Features:
//! - random pilot batches with their sensing matrix, plus physical reception
//! - least-squares and MMSE gain estimators on the fed-back samples
//! - channel-matrix reconstruction and the two-step alternating beamformer
//! - partial-random gain fill-in and random/exhaustive path selection

use crate::channel::{received_symbol, ChannelRealization};
use crate::numerics::{self, CMat, CVec, NumericsError};
use crate::rng::RandomSource;
use crate::selection::{self, AlternationOptions, Converged, Selection, SelectionError};
use crate::sounding;
use num_complex::Complex64;
use thiserror::Error;

// ── Types ────────────────────────────────────────────────────────────────────

/// Randomly drawn pilot beamformers for `T` slots and the L×T sensing matrix
/// they induce; column t maps the gain vector to the slot-t noiseless sample.
#[derive(Debug, Clone)]
pub struct RandomPilotBatch {
    /// Pilot power shared by all slots.
    pub power: f64,
    /// Per-slot transmit beamformers, unit norm.
    pub transmit: Vec<CVec>,
    /// Per-slot RIS profiles, unit-modulus entries.
    pub profiles: Vec<CVec>,
    /// Sensing matrix D with y = Dᵀg + n.
    pub sensing: CMat,
}

impl RandomPilotBatch {
    pub fn slots(&self) -> usize {
        self.transmit.len()
    }
}

/// Converged output of the closed-form alternating beamformer.
#[derive(Debug, Clone)]
pub struct AlternatingRun {
    /// Transmit beamformer, unit norm.
    pub transmit: CVec,
    /// RIS profile, unit-modulus entries.
    pub profile: CVec,
    /// Final |ψᵀHf_t|² value.
    pub objective: f64,
    /// Objective after each completed round (non-decreasing within rounding).
    pub round_objectives: Vec<f64>,
}

/// Stopping rules for the closed-form alternation.
#[derive(Debug, Clone)]
pub struct AlternatingOptions {
    /// Relative objective-change threshold between rounds.
    pub objective_tol: f64,
    pub max_rounds: usize,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        Self {
            objective_tol: 1e-6,
            max_rounds: 100,
        }
    }
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("pilot batch needs at least one slot")]
    NoSlots,
    #[error("{slots} pilot slots cannot identify {paths} path gains")]
    Underdetermined { slots: usize, paths: usize },
    #[error("sensing gram matrix is ill-conditioned: condition number {0:.3e}")]
    IllConditioned(f64),
    #[error("noise variance must be non-negative, got {0}")]
    BadNoise(f64),
    #[error("channel matrix is zero; alternation has no ascent direction")]
    ZeroChannel,
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("{subsets} candidate subsets exceed the exhaustive budget {budget}")]
    BudgetExceeded { subsets: usize, budget: usize },
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Condition-number ceiling for the least-squares gram matrix.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Largest subset count the exhaustive search will enumerate.
pub const EXHAUSTIVE_BUDGET: usize = 10_000;

// ── Random pilots and whole-gain estimators ──────────────────────────────────

/// Draw `t_slots` random pilot beamformers — transmit vectors as normalized
/// complex-normal draws, profiles with i.i.d. uniform phases — and assemble
/// the sensing matrix column by column.
pub fn random_pilot_matrix(
    realization: &ChannelRealization,
    t_slots: usize,
    power: f64,
    rng: &mut RandomSource,
) -> Result<RandomPilotBatch, BaselineError> {
    if t_slots == 0 {
        return Err(BaselineError::NoSlots);
    }
    let geometry = realization.geometry;
    let mut transmit = Vec::with_capacity(t_slots);
    let mut profiles = Vec::with_capacity(t_slots);
    let mut sensing = CMat::zeros(geometry.n_paths(), t_slots);
    for t in 0..t_slots {
        let mut f_e = CVec::from_fn(geometry.n_b(), |_, _| rng.complex_normal());
        f_e /= Complex64::new(f_e.norm(), 0.0);
        let psi = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        sensing.set_column(t, &sounding::pilot_response(realization, &f_e, &psi, power));
        transmit.push(f_e);
        profiles.push(psi);
    }
    Ok(RandomPilotBatch {
        power,
        transmit,
        profiles,
        sensing,
    })
}

/// Draw pilot batches until the least-squares gram matrix is well
/// conditioned, returning the batch and how many draws were discarded.
/// Batches too short for least squares are returned as drawn.
pub fn conditioned_pilot_matrix(
    realization: &ChannelRealization,
    t_slots: usize,
    power: f64,
    rng: &mut RandomSource,
) -> Result<(RandomPilotBatch, usize), BaselineError> {
    const MAX_REDRAWS: usize = 64;
    let mut discarded = 0;
    loop {
        let batch = random_pilot_matrix(realization, t_slots, power, rng)?;
        if t_slots < realization.geometry.n_paths()
            || ls_gram_condition(&batch.sensing) < GRAM_CONDITION_LIMIT
            || discarded >= MAX_REDRAWS
        {
            return Ok((batch, discarded));
        }
        discarded += 1;
    }
}

/// Receive the pilot slots through the full physical chain with fresh noise.
pub fn receive_pilots(
    realization: &ChannelRealization,
    batch: &RandomPilotBatch,
    noise_var: f64,
    rng: &mut RandomSource,
) -> CVec {
    let mut y = CVec::zeros(batch.slots());
    for t in 0..batch.slots() {
        let h = realization.cascaded_channel(&batch.profiles[t]);
        y[t] = received_symbol(
            &h,
            &batch.transmit[t],
            batch.power,
            Complex64::new(1.0, 0.0),
            noise_var,
            rng,
        );
    }
    y
}

fn ls_gram_condition(sensing: &CMat) -> f64 {
    let gram = sensing.map(|z| z.conj()) * sensing.transpose();
    numerics::condition_number(&gram)
}

/// Least-squares gain estimate ĝ = (D*Dᵀ)⁻¹D*ỹ. Needs at least as many
/// slots as paths and a well-conditioned gram matrix.
pub fn ls_estimate(sensing: &CMat, y_tilde: &CVec) -> Result<CVec, BaselineError> {
    let (paths, slots) = sensing.shape();
    if slots < paths {
        return Err(BaselineError::Underdetermined { slots, paths });
    }
    if y_tilde.len() != slots {
        return Err(BaselineError::Shape(format!(
            "{} fed-back samples vs {slots} slots",
            y_tilde.len()
        )));
    }
    let conj = sensing.map(|z| z.conj());
    let gram = &conj * sensing.transpose();
    let condition = numerics::condition_number(&gram);
    if !condition.is_finite() || condition >= GRAM_CONDITION_LIMIT {
        return Err(BaselineError::IllConditioned(condition));
    }
    let rhs = conj * y_tilde;
    gram.lu()
        .solve(&rhs)
        .ok_or(BaselineError::IllConditioned(condition))
}

/// MMSE gain estimate ĝ = D*(DᵀD* + σ²I_T)⁻¹ỹ. The regularized system is
/// solvable for any positive noise variance and any slot count.
pub fn mmse_estimate(
    sensing: &CMat,
    y_tilde: &CVec,
    noise_var: f64,
) -> Result<CVec, BaselineError> {
    if noise_var < 0.0 {
        return Err(BaselineError::BadNoise(noise_var));
    }
    let (_, slots) = sensing.shape();
    if y_tilde.len() != slots {
        return Err(BaselineError::Shape(format!(
            "{} fed-back samples vs {slots} slots",
            y_tilde.len()
        )));
    }
    let conj = sensing.map(|z| z.conj());
    let mut gram = sensing.transpose() * &conj;
    for t in 0..slots {
        gram[(t, t)] += Complex64::new(noise_var, 0.0);
    }
    let filtered = gram
        .lu()
        .solve(y_tilde)
        .ok_or(BaselineError::IllConditioned(f64::INFINITY))?;
    Ok(conj * filtered)
}

// ── Channel-matrix beamforming ───────────────────────────────────────────────

/// Dense channel matrix H = √(N_B N_R²/L)·Ã_R·diag(g)·Ã_Bᴴ rebuilt from a
/// gain vector, satisfying ψᵀHf = h(ψ)ᴴf for the channel carrying those
/// gains.
pub fn channel_matrix(
    realization: &ChannelRealization,
    gains: &CVec,
) -> Result<CMat, BaselineError> {
    let geometry = realization.geometry;
    if gains.len() != geometry.n_paths() {
        return Err(BaselineError::Shape(format!(
            "{} gains vs {} paths",
            gains.len(),
            geometry.n_paths()
        )));
    }
    let scale = Complex64::new(geometry.gain_scale(), 0.0);
    let mut weighted = realization.ris_dict.clone();
    for (l, mut column) in weighted.column_iter_mut().enumerate() {
        column *= gains[l] * scale;
    }
    Ok(weighted * realization.bs_dict.adjoint())
}

/// Alternate the two closed-form updates f_t = Hᴴψ*/‖Hᴴψ*‖ and
/// ψ = H*f_t*/|Hf_t| from the all-ones profile until |ψᵀHf_t|² stalls.
/// Profile entries whose |Hf_t| coordinate vanishes keep their previous
/// phase.
pub fn alternating_beamforming(
    h: &CMat,
    opts: &AlternatingOptions,
) -> Result<AlternatingRun, BaselineError> {
    if h.norm() == 0.0 {
        return Err(BaselineError::ZeroChannel);
    }
    let (n_r, n_b) = h.shape();
    let mut psi = CVec::from_element(n_r, Complex64::new(1.0, 0.0));
    let mut transmit = CVec::zeros(n_b);
    let mut round_objectives = Vec::new();

    for _ in 0..opts.max_rounds {
        let matched = h.adjoint() * psi.map(|z| z.conj());
        let norm = matched.norm();
        if norm < 1e-14 {
            // ψ landed in the left null space; any unit transmit vector
            // scores zero, so keep the previous one and stop.
            round_objectives.push(0.0);
            break;
        }
        transmit = matched / Complex64::new(norm, 0.0);

        let through = h * &transmit;
        for i in 0..n_r {
            let magnitude = through[i].norm();
            if magnitude >= 1e-14 {
                psi[i] = through[i].conj() / Complex64::new(magnitude, 0.0);
            }
        }

        let objective = psi.dot(&through).norm_sqr();
        let stalled = round_objectives.last().is_some_and(|&prev: &f64| {
            (objective - prev).abs() <= opts.objective_tol * prev.abs().max(f64::MIN_POSITIVE)
        });
        round_objectives.push(objective);
        if stalled {
            break;
        }
    }

    let objective = round_objectives.last().copied().unwrap_or(0.0);
    Ok(AlternatingRun {
        transmit,
        profile: psi,
        objective,
        round_objectives,
    })
}

// ── Gain fill-in and selection baselines ─────────────────────────────────────

/// Build a full-length gain vector from fed-back selected-path gains: the
/// selected positions carry the feedback, every other position an
/// independent CN(0,1) draw.
pub fn partial_random_gains(
    fed_back: &CVec,
    kept: &[usize],
    n_paths: usize,
    rng: &mut RandomSource,
) -> Result<CVec, BaselineError> {
    if fed_back.len() != kept.len() {
        return Err(BaselineError::Shape(format!(
            "{} fed-back gains vs {} selected paths",
            fed_back.len(),
            kept.len()
        )));
    }
    let mut gains = CVec::from_fn(n_paths, |_, _| rng.complex_normal());
    for (i, &l) in kept.iter().enumerate() {
        if l >= n_paths {
            return Err(BaselineError::Shape(format!(
                "selected path {l} out of range for {n_paths} paths"
            )));
        }
        gains[l] = fed_back[i];
    }
    Ok(gains)
}

/// Keep a uniformly random subset of `l_target` paths.
pub fn random_selection(
    n_paths: usize,
    l_target: usize,
    rng: &mut RandomSource,
) -> Result<Selection, BaselineError> {
    if l_target == 0 || l_target > n_paths {
        return Err(BaselineError::Shape(format!(
            "cannot keep {l_target} of {n_paths} paths"
        )));
    }
    // Partial Fisher–Yates: the first l_target entries are a uniform subset.
    let mut order: Vec<usize> = (0..n_paths).collect();
    for i in 0..l_target {
        let j = i + rng.index(n_paths - i);
        order.swap(i, j);
    }
    let mut kept = order[..l_target].to_vec();
    let mut dropped = order[l_target..].to_vec();
    kept.sort_unstable();
    dropped.sort_unstable();
    Ok(Selection { kept, dropped })
}

/// Walk `indices` to the next k-combination of {0..n}; false when exhausted.
fn next_combination(indices: &mut [usize], n: usize) -> bool {
    let k = indices.len();
    for i in (0..k).rev() {
        if indices[i] < n - k + i {
            indices[i] += 1;
            for j in i + 1..k {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn subset_count(n: usize, k: usize) -> usize {
    // C(n, k) with early saturation well above the enumeration budget.
    let mut count = 1usize;
    for i in 0..k.min(n - k) {
        count = count.saturating_mul(n - i) / (i + 1);
        if count > 100 * EXHAUSTIVE_BUDGET {
            return count;
        }
    }
    count
}

/// Try every size-`l_target` subset, alternately optimizing the beamformers
/// for each, and keep the subset with the best converged mean-gain objective.
/// Ties resolve to the lexicographically first subset.
pub fn exhaustive_selection(
    realization: &ChannelRealization,
    l_target: usize,
    opts: &AlternationOptions,
) -> Result<(Selection, Converged), BaselineError> {
    let n_paths = realization.geometry.n_paths();
    if l_target == 0 || l_target > n_paths {
        return Err(BaselineError::Shape(format!(
            "cannot keep {l_target} of {n_paths} paths"
        )));
    }
    let subsets = subset_count(n_paths, l_target);
    if subsets > EXHAUSTIVE_BUDGET {
        return Err(BaselineError::BudgetExceeded {
            subsets,
            budget: EXHAUSTIVE_BUDGET,
        });
    }

    let ones = CVec::from_element(realization.geometry.n_r(), Complex64::new(1.0, 0.0));
    let mut kept: Vec<usize> = (0..l_target).collect();
    let mut best: Option<(Selection, Converged)> = None;
    loop {
        let dropped: Vec<usize> = (0..n_paths).filter(|l| !kept.contains(l)).collect();
        let run = selection::converge_beamformers(realization, &kept, &dropped, &ones, opts)?;
        if best
            .as_ref()
            .is_none_or(|(_, b)| run.objective > b.objective)
        {
            best = Some((
                Selection {
                    kept: kept.clone(),
                    dropped,
                },
                run,
            ));
        }
        if !next_combination(&mut kept, n_paths) {
            break;
        }
    }
    Ok(best.expect("at least one subset was scored"))
}
