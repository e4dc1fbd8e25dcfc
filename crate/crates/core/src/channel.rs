//! Geometric RIS-assisted mmWave channel synthesis.
//!
//! The link is BS → RIS → UE with no direct path. Both arrays are uniform
//! planar arrays with half-wavelength spacing. A channel realization is a set
//! of BS–RIS paths and RIS–UE paths; every (BS–RIS, RIS–UE) pair forms one
//! cascaded path whose complex gain is the product of the two segment gains.
//!
//! Features:
//! - vertical/horizontal array response factors and their UPA Kronecker product
//! - per-side steering matrices and the cascaded-path dictionaries indexed by
//!   the flattened pair index l = q·L_RB + p (0-based)
//! - fast application of the per-path coupling matrix B_l without forming it
//! - received downlink symbols and spectral efficiency

use crate::numerics::{CMat, CVec};
use crate::rng::RandomSource;
use num_complex::Complex64;
use std::f64::consts::PI;

// ── Geometry and realization types ──────────────────────────────────────────

/// Array sizes and path counts of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemGeometry {
    /// BS antenna rows (vertical).
    pub nb_v: usize,
    /// BS antenna columns (horizontal).
    pub nb_h: usize,
    /// RIS element rows (vertical).
    pub nr_v: usize,
    /// RIS element columns (horizontal).
    pub nr_h: usize,
    /// Number of BS–RIS paths.
    pub l_rb: usize,
    /// Number of RIS–UE paths.
    pub l_ru: usize,
}

impl SystemGeometry {
    /// Total BS antennas N_B.
    pub fn n_b(&self) -> usize {
        self.nb_v * self.nb_h
    }

    /// Total RIS elements N_R.
    pub fn n_r(&self) -> usize {
        self.nr_v * self.nr_h
    }

    /// Total cascaded paths L = L_RB·L_RU.
    pub fn n_paths(&self) -> usize {
        self.l_rb * self.l_ru
    }

    /// Amplitude scale √(N_B·N_R²/L) shared by every cascaded-path term.
    pub fn gain_scale(&self) -> f64 {
        ((self.n_b() * self.n_r() * self.n_r()) as f64 / self.n_paths() as f64).sqrt()
    }

    /// Split a flattened cascaded-path index into (BS–RIS path p, RIS–UE path q).
    pub fn path_pair(&self, l: usize) -> (usize, usize) {
        (l % self.l_rb, l / self.l_rb)
    }
}

/// Zenith/azimuth angle pair of one propagation path at one array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    /// Vertical (zenith) angle in radians, in (0, π].
    pub zenith: f64,
    /// Horizontal (azimuth) angle in radians, in (0, π].
    pub azimuth: f64,
}

/// All path angles of one realization. Angles are reciprocal between uplink
/// and downlink, so the BS is assumed to know them exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAngles {
    /// Departure angles at the BS, one per BS–RIS path.
    pub bs_departure: Vec<AnglePair>,
    /// Arrival angles at the RIS, one per BS–RIS path.
    pub ris_arrival: Vec<AnglePair>,
    /// Departure angles at the RIS, one per RIS–UE path.
    pub ris_departure: Vec<AnglePair>,
}

/// Small-scale path gains of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGains {
    /// BS–RIS segment gains, CN(0, 1).
    pub alpha: CVec,
    /// RIS–UE segment gains, CN(0, 1).
    pub beta: CVec,
    /// Cascaded gains: `cascaded[q·L_RB + p] = beta[q]·alpha[p]` (β ⊗ α).
    pub cascaded: CVec,
}

/// One immutable channel realization with all derived steering structure.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub geometry: SystemGeometry,
    pub angles: PathAngles,
    pub gains: PathGains,
    /// N_B × L_RB steering matrix at the BS (unit-norm columns).
    pub bs_steering: CMat,
    /// N_R × L_RB steering matrix of RIS arrivals (unit-norm columns).
    pub ris_arrival_steering: CMat,
    /// N_R × L_RU steering matrix of RIS departures (unit-norm columns).
    pub ris_departure_steering: CMat,
    /// N_B × L dictionary: column l repeats the BS steering vector of path p(l).
    pub bs_dict: CMat,
    /// N_R × L dictionary: column l is conj(a_RU,q) ⊙ a_RB,p; every entry has
    /// magnitude 1/N_R.
    pub ris_dict: CMat,
}

// ── Array responses ──────────────────────────────────────────────────────────

/// Vertical array response factor: entry k = exp(jπ·k·cos θ_v)/√n.
pub fn array_response_v(n: usize, zenith: f64) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    let step = PI * zenith.cos();
    CVec::from_fn(n, |k, _| Complex64::from_polar(scale, step * k as f64))
}

/// Horizontal array response factor: entry k = exp(jπ·k·sin θ_v·sin θ_h)/√n.
pub fn array_response_h(n: usize, zenith: f64, azimuth: f64) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    let step = PI * zenith.sin() * azimuth.sin();
    CVec::from_fn(n, |k, _| Complex64::from_polar(scale, step * k as f64))
}

/// Full UPA response: Kronecker product of the vertical and horizontal factors.
pub fn upa_response(rows: usize, cols: usize, angles: AnglePair) -> CVec {
    let v = array_response_v(rows, angles.zenith);
    let h = array_response_h(cols, angles.zenith, angles.azimuth);
    CVec::from_column_slice(v.kronecker(&h).as_slice())
}

fn steering_matrix(rows: usize, cols: usize, angles: &[AnglePair]) -> CMat {
    let mut m = CMat::zeros(rows * cols, angles.len());
    for (i, &pair) in angles.iter().enumerate() {
        m.set_column(i, &upa_response(rows, cols, pair));
    }
    m
}

// ── Realization construction ─────────────────────────────────────────────────

/// Draw all six angle families i.i.d. uniform on (0, π].
pub fn sample_angles(geometry: SystemGeometry, rng: &mut RandomSource) -> PathAngles {
    let mut draw = |count: usize| -> Vec<AnglePair> {
        (0..count)
            .map(|_| AnglePair {
                zenith: rng.angle(),
                azimuth: rng.angle(),
            })
            .collect()
    };
    PathAngles {
        bs_departure: draw(geometry.l_rb),
        ris_arrival: draw(geometry.l_rb),
        ris_departure: draw(geometry.l_ru),
    }
}

/// Draw i.i.d. CN(0, 1) segment gains and form the cascaded products.
pub fn sample_gains(geometry: SystemGeometry, rng: &mut RandomSource) -> PathGains {
    let alpha = CVec::from_fn(geometry.l_rb, |_, _| rng.complex_normal());
    let beta = CVec::from_fn(geometry.l_ru, |_, _| rng.complex_normal());
    let cascaded = cascade_gains(&alpha, &beta);
    PathGains {
        alpha,
        beta,
        cascaded,
    }
}

/// Kronecker products of the segment gains: entry q·L_RB + p is β_q·α_p.
pub fn cascade_gains(alpha: &CVec, beta: &CVec) -> CVec {
    CVec::from_column_slice(beta.kronecker(alpha).as_slice())
}

/// Assemble a realization from given angles and gains. Deterministic, so
/// angle-only properties can be probed by swapping in fresh gains.
pub fn build_realization(
    geometry: SystemGeometry,
    angles: PathAngles,
    gains: PathGains,
) -> ChannelRealization {
    let bs_steering = steering_matrix(geometry.nb_v, geometry.nb_h, &angles.bs_departure);
    let ris_arrival_steering = steering_matrix(geometry.nr_v, geometry.nr_h, &angles.ris_arrival);
    let ris_departure_steering =
        steering_matrix(geometry.nr_v, geometry.nr_h, &angles.ris_departure);

    let l = geometry.n_paths();
    let mut bs_dict = CMat::zeros(geometry.n_b(), l);
    let mut ris_dict = CMat::zeros(geometry.n_r(), l);
    for idx in 0..l {
        let (p, q) = geometry.path_pair(idx);
        bs_dict.set_column(idx, &bs_steering.column(p).into_owned());
        let col = ris_departure_steering
            .column(q)
            .map(|z| z.conj())
            .component_mul(&ris_arrival_steering.column(p));
        ris_dict.set_column(idx, &col);
    }

    ChannelRealization {
        geometry,
        angles,
        gains,
        bs_steering,
        ris_arrival_steering,
        ris_departure_steering,
        bs_dict,
        ris_dict,
    }
}

/// Draw a full random realization: angles, then gains, then dictionaries.
pub fn sample_realization(geometry: SystemGeometry, rng: &mut RandomSource) -> ChannelRealization {
    let angles = sample_angles(geometry, rng);
    let gains = sample_gains(geometry, rng);
    build_realization(geometry, angles, gains)
}

// ── Cascaded channel and per-path structure ─────────────────────────────────

impl ChannelRealization {
    /// Effective downlink channel h ∈ C^{N_B} for RIS profile `psi`:
    /// h = √(N_B N_R²/L) · Ã_B · conj(g ⊙ (Ã_Rᵀ ψ)).
    pub fn cascaded_channel(&self, psi: &CVec) -> CVec {
        let couplings = self.ris_dict.transpose() * psi;
        let weights = couplings
            .component_mul(&self.gains.cascaded)
            .map(|z| z.conj());
        (&self.bs_dict * weights) * Complex64::new(self.geometry.gain_scale(), 0.0)
    }

    /// Column l of the path matrix A for profile `psi`:
    /// a_l = B_l·conj(ψ) = √(N_B N_R²/L)·conj(ã_R,lᵀ ψ)·ã_B,l.
    pub fn path_column(&self, l: usize, psi: &CVec) -> CVec {
        let coupling = self.ris_dict.column(l).transpose() * psi;
        let w = coupling[(0, 0)].conj() * Complex64::new(self.geometry.gain_scale(), 0.0);
        self.bs_dict.column(l) * w
    }

    /// Path matrix restricted to `paths` (columns in the given order).
    pub fn path_columns(&self, paths: &[usize], psi: &CVec) -> CMat {
        let mut m = CMat::zeros(self.geometry.n_b(), paths.len());
        for (i, &l) in paths.iter().enumerate() {
            m.set_column(i, &self.path_column(l, psi));
        }
        m
    }

    /// Apply the transposed coupling matrix without forming it:
    /// B_lᵀ x = √(N_B N_R²/L)·(ã_B,lᵀ x)·conj(ã_R,l).
    pub fn coupling_t_apply(&self, l: usize, x: &CVec) -> CVec {
        let inner = self.bs_dict.column(l).transpose() * x;
        let w = inner[(0, 0)] * Complex64::new(self.geometry.gain_scale(), 0.0);
        self.ris_dict.column(l).map(|z| z.conj() * w)
    }

    /// Dense per-path coupling matrix B_l = √(N_B N_R²/L)·ã_B,l ã_R,lᴴ·diag-free
    /// outer-product form (N_B × N_R, rank 1). Built on demand; the simulator
    /// hot paths use [`Self::coupling_t_apply`] instead.
    pub fn coupling_matrix(&self, l: usize) -> CMat {
        let scale = Complex64::new(self.geometry.gain_scale(), 0.0);
        let left = self.bs_dict.column(l) * scale;
        // Row j of the right factor is conj(ã_R,l)_j — so B_l·conj(ψ) matches
        // the path_column weights.
        let right = self.ris_dict.column(l).map(|z| z.conj()).transpose();
        left * right
    }
}

// ── Link-level primitives ────────────────────────────────────────────────────

/// One received downlink symbol: y = √power·hᴴf·s + n with n ~ CN(0, noise_var).
pub fn received_symbol(
    h: &CVec,
    f: &CVec,
    power: f64,
    symbol: Complex64,
    noise_var: f64,
    rng: &mut RandomSource,
) -> Complex64 {
    let signal = h.dotc(f) * symbol * Complex64::new(power.sqrt(), 0.0);
    let noise = if noise_var > 0.0 {
        rng.complex_normal() * Complex64::new(noise_var.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    signal + noise
}

/// Spectral efficiency log₂(1 + dnr·gain) for effective gain |hᴴf|².
pub fn spectral_efficiency(effective_gain: f64, dnr_linear: f64) -> f64 {
    (1.0 + dnr_linear * effective_gain).log2()
}

/// Convenience: decibels to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
