//! Experiment orchestration: seeded Monte Carlo sweeps and validation.
//!
//! Features:
//! - flat TOML-backed [`RunConfig`] with strict validation and scheme filters
//! - five sweep runners producing [`MetricRecord`] rows: estimation error
//!   against pilot SNR or feedback bits, and spectral efficiency against
//!   selected-path count, feedback bits, or data SNR
//! - worker-count independence: realization `i` draws only from substreams
//!   derived as (master seed, tag, i, ...), and results reduce in index order,
//!   so reruns are byte-identical no matter how work is scheduled
//! - CSV output with a mandatory header and locale-independent number
//!   formatting
//! - a seeded validation suite that re-runs every module's numerical oracle
//!   and reports measured errors

use crate::baselines::{self, AlternatingOptions, BaselineError};
use crate::beamforming::{self, BeamformingError, UpdateOptions};
use crate::channel::{
    self, db_to_linear, sample_realization, spectral_efficiency, ChannelRealization, SystemGeometry,
};
use crate::manifold::{self, HermitianForm, ManifoldError, ManifoldOptions};
use crate::numerics::{self, CMat, CVec};
use crate::rng::RandomSource;
use crate::rvq::{Codebook, RvqError, MAX_BITS};
use crate::selection::{self, AlternationOptions, SelectionError};
use crate::sounding::{self, SoundingError};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

// ── Errors ───────────────────────────────────────────────────────────────────

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("metric is not finite: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Sounding(#[from] SoundingError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Rvq(#[from] RvqError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

// ── Configuration ────────────────────────────────────────────────────────────

/// Scenario configuration: flat keys, loadable from a TOML file, with strict
/// validation. Defaults follow the reference scenario (4×4 transmit array,
/// 16×16 surface, 2 forward × 3 user-side paths, 1000 realizations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// BS antenna rows.
    pub nb_v: usize,
    /// BS antenna columns.
    pub nb_h: usize,
    /// RIS element rows.
    pub nr_v: usize,
    /// RIS element columns.
    pub nr_h: usize,
    /// BS–RIS path count.
    pub l_rb: usize,
    /// RIS–UE path count.
    pub l_ru: usize,
    /// Paths kept by the selection stage.
    pub selected_paths: usize,
    /// Monte Carlo realizations per sweep point.
    pub realizations: usize,
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    /// Worker threads (0 = one per core). Never changes results.
    pub workers: usize,
    /// Pilot power.
    pub pilot_power: f64,
    /// Pilot-SNR grid in dB for the estimation sweep.
    pub pnr_db: Vec<f64>,
    /// Pilot SNR in dB for the estimation-vs-bits sweep.
    pub pnr_fixed_db: f64,
    /// Pilot SNR in dB for the spectral-efficiency sweeps.
    pub se_pnr_db: f64,
    /// Data-SNR grid in dB.
    pub dnr_db: Vec<f64>,
    /// Data SNR in dB for the fixed-SNR spectral-efficiency sweeps.
    pub dnr_fixed_db: f64,
    /// Feedback-bit grid.
    pub bits: Vec<u32>,
    /// Kept-path grid for the path-count sweep.
    pub path_counts: Vec<usize>,
    /// Slot count for the long random-pilot estimator.
    pub mmse_slots: usize,
    /// Feedback bits for the selected-path scheme in the data-SNR sweep.
    pub dpgi_bits: u32,
    /// Feedback bits for the whole-vector schemes in the data-SNR sweep.
    pub pgi_bits: u32,
    /// Scheme-name filter; empty selects every scheme a sweep defines.
    pub schemes: Vec<String>,
    /// Relative stall threshold shared by the alternating optimizers.
    pub alternation_tol: f64,
    /// Round cap shared by the alternating optimizers.
    pub alternation_rounds: usize,
    /// Validation suite: instances per oracle check.
    pub validation_instances: usize,
    /// Validation suite: draws per Monte Carlo oracle (tolerances widen
    /// as the square root when this shrinks below the reference sizes).
    pub validation_draws: usize,
    /// Validation suite: probes per identity check.
    pub validation_probes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nb_v: 4,
            nb_h: 4,
            nr_v: 16,
            nr_h: 16,
            l_rb: 2,
            l_ru: 3,
            selected_paths: 4,
            realizations: 1000,
            seed: 1,
            workers: 0,
            pilot_power: 1.0,
            pnr_db: vec![-15.0, -10.0, -5.0, 0.0],
            pnr_fixed_db: 0.0,
            se_pnr_db: -15.0,
            dnr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            dnr_fixed_db: 0.0,
            bits: vec![1, 2, 3, 4, 6, 8, 12, 16],
            path_counts: vec![2, 3, 4, 5],
            mmse_slots: 24,
            dpgi_bits: 8,
            pgi_bits: 16,
            schemes: Vec::new(),
            alternation_tol: 1e-6,
            alternation_rounds: 50,
            validation_instances: 5,
            validation_draws: 200_000,
            validation_probes: 50,
        }
    }
}

impl RunConfig {
    /// Parse a TOML config file. Unknown keys are rejected; missing keys take
    /// their defaults. Call [`RunConfig::validate`] before running sweeps.
    pub fn from_toml_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    /// Array geometry block of the config.
    pub fn geometry(&self) -> SystemGeometry {
        SystemGeometry {
            nb_v: self.nb_v,
            nb_h: self.nb_h,
            nr_v: self.nr_v,
            nr_h: self.nr_h,
            l_rb: self.l_rb,
            l_ru: self.l_ru,
        }
    }

    /// Every scheme name the sweeps can emit under this config.
    pub fn known_schemes(&self) -> Vec<String> {
        let l = self.geometry().n_paths();
        let k = self.selected_paths;
        let mut names = vec![
            format!("proposed-t{k}"),
            format!("proposed-t{l}"),
            format!("ls-t{l}"),
            format!("mmse-t{l}"),
            format!("mmse-t{}", self.mmse_slots),
            "optimal-paths".to_string(),
            "selected-paths".to_string(),
            "random-paths".to_string(),
            "partial-random".to_string(),
            "perfect-pgi".to_string(),
            "perfect-dpgi".to_string(),
            format!("proposed-t{k}-b{}", self.dpgi_bits),
            format!("proposed-t{l}-b{}", self.pgi_bits),
            format!("mmse-t{}-b{}", self.mmse_slots, self.pgi_bits),
        ];
        if k + 1 < l {
            names.push(format!("proposed-t{}", k + 1));
        }
        names.sort();
        names.dedup();
        names
    }

    /// Reject invalid or inconsistent settings with a description.
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if self.nb_v == 0 || self.nb_h == 0 || self.nr_v == 0 || self.nr_h == 0 {
            return fail("array dimensions must be positive".into());
        }
        if self.l_rb == 0 || self.l_ru == 0 {
            return fail("path counts must be positive".into());
        }
        let l = self.geometry().n_paths();
        if l < 2 {
            return fail("at least two cascaded paths are required".into());
        }
        if self.selected_paths == 0 || self.selected_paths > l {
            return fail(format!(
                "selected_paths must be in 1..={l}, got {}",
                self.selected_paths
            ));
        }
        if self.realizations == 0 {
            return fail("realizations must be at least 1".into());
        }
        if !(self.pilot_power.is_finite() && self.pilot_power > 0.0) {
            return fail(format!(
                "pilot_power must be positive, got {}",
                self.pilot_power
            ));
        }
        for (name, list) in [("pnr_db", &self.pnr_db), ("dnr_db", &self.dnr_db)] {
            if list.is_empty() {
                return fail(format!("{name} must not be empty"));
            }
            if list.iter().any(|v| !v.is_finite()) {
                return fail(format!("{name} entries must be finite"));
            }
        }
        for (name, v) in [
            ("pnr_fixed_db", self.pnr_fixed_db),
            ("se_pnr_db", self.se_pnr_db),
            ("dnr_fixed_db", self.dnr_fixed_db),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite, got {v}"));
            }
        }
        if self.bits.is_empty() {
            return fail("bits must not be empty".into());
        }
        for &b in &self.bits {
            if b == 0 || b > MAX_BITS {
                return fail(format!("bits entries must be in 1..={MAX_BITS}, got {b}"));
            }
        }
        for &b in [self.dpgi_bits, self.pgi_bits].iter() {
            if b == 0 || b > MAX_BITS {
                return fail(format!("codebook bits must be in 1..={MAX_BITS}, got {b}"));
            }
        }
        if self.path_counts.is_empty() {
            return fail("path_counts must not be empty".into());
        }
        for &k in &self.path_counts {
            if k == 0 || k > l {
                return fail(format!("path_counts entries must be in 1..={l}, got {k}"));
            }
        }
        if self.mmse_slots == 0 {
            return fail("mmse_slots must be at least 1".into());
        }
        if !(self.alternation_tol.is_finite() && self.alternation_tol > 0.0) {
            return fail(format!(
                "alternation_tol must be positive, got {}",
                self.alternation_tol
            ));
        }
        if self.alternation_rounds == 0 {
            return fail("alternation_rounds must be at least 1".into());
        }
        if self.validation_instances == 0
            || self.validation_draws == 0
            || self.validation_probes == 0
        {
            return fail("validation sizing fields must be at least 1".into());
        }
        let known = self.known_schemes();
        for name in &self.schemes {
            if !known.iter().any(|k| k == name) {
                return fail(format!(
                    "unknown scheme \"{name}\"; known schemes: {}",
                    known.join(" ")
                ));
            }
        }
        Ok(())
    }

    /// True when `name` passes the scheme filter.
    fn wants(&self, name: &str) -> bool {
        self.schemes.is_empty() || self.schemes.iter().any(|s| s == name)
    }

    fn alternation(&self) -> AlternationOptions {
        AlternationOptions {
            objective_tol: self.alternation_tol,
            max_rounds: self.alternation_rounds,
            ..AlternationOptions::default()
        }
    }

    fn update_opts(&self) -> UpdateOptions {
        UpdateOptions {
            objective_tol: self.alternation_tol,
            max_rounds: self.alternation_rounds,
            ..UpdateOptions::default()
        }
    }

    fn ao_opts(&self) -> AlternatingOptions {
        AlternatingOptions {
            objective_tol: self.alternation_tol,
            max_rounds: self.alternation_rounds,
        }
    }
}

// ── Metric records and CSV ───────────────────────────────────────────────────

/// One aggregated sweep result: a (scheme, sweep point) pair with its metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub scheme: String,
    /// Sweep variable name: "pnr_db", "bits", "paths", or "dnr_db".
    pub sweep_var: String,
    /// Sweep point; infinity encodes the unquantized-feedback reference.
    pub sweep_value: f64,
    /// "nmse_db" or "se_bps_hz".
    pub metric: String,
    pub value: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

/// Shortest round-trip decimal form; `inf` for the unquantized reference.
fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Render records as CSV with the mandatory header. Formatting is
/// locale-independent and byte-stable for identical inputs.
pub fn metrics_csv(records: &[MetricRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str("scheme,sweep_var,sweep_value,metric,value,n_realizations,seed\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme,
            r.sweep_var,
            fmt_num(r.sweep_value),
            r.metric,
            fmt_num(r.value),
            r.n_realizations,
            r.seed
        );
    }
    out
}

/// Write records to a CSV file.
pub fn write_metrics(path: &Path, records: &[MetricRecord]) -> Result<(), SimError> {
    std::fs::write(path, metrics_csv(records))?;
    Ok(())
}

fn nmse_record(
    config: &RunConfig,
    scheme: &str,
    sweep_var: &str,
    sweep_value: f64,
    mean_ratio: f64,
) -> Result<MetricRecord, SimError> {
    let value = 10.0 * mean_ratio.log10();
    if !value.is_finite() {
        return Err(SimError::NonFinite(format!(
            "{scheme} estimation error at {sweep_var}={sweep_value}"
        )));
    }
    Ok(MetricRecord {
        scheme: scheme.to_string(),
        sweep_var: sweep_var.to_string(),
        sweep_value,
        metric: "nmse_db".to_string(),
        value,
        n_realizations: config.realizations,
        seed: config.seed,
    })
}

fn se_record(
    config: &RunConfig,
    scheme: &str,
    sweep_var: &str,
    sweep_value: f64,
    value: f64,
) -> Result<MetricRecord, SimError> {
    if !value.is_finite() || value < 0.0 {
        return Err(SimError::NonFinite(format!(
            "{scheme} spectral efficiency at {sweep_var}={sweep_value}"
        )));
    }
    Ok(MetricRecord {
        scheme: scheme.to_string(),
        sweep_var: sweep_var.to_string(),
        sweep_value,
        metric: "se_bps_hz".to_string(),
        value,
        n_realizations: config.realizations,
        seed: config.seed,
    })
}

// ── Random substreams ────────────────────────────────────────────────────────

// Top-level stream tags; every random quantity in a sweep hangs off
// (master seed, tag, realization index, ...), so scheduling cannot reorder
// draws within a stream.
const STREAM_CHANNEL: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_PILOT: u64 = 3;
const STREAM_SUBSET: u64 = 4;
const STREAM_FILL: u64 = 5;
/// Offset distinguishing random-pilot observations from dictionary sounding.
const PILOT_OBS: u64 = 1000;

/// Noise stream for one observation: keyed by realization, the pilot SNR (in
/// millibels, so equal SNRs share draws across sweeps), and an observation
/// tag. Sounding with T slots tags as T; random-pilot batches as 1000+T.
fn noise_stream(seed: u64, realization: u64, pnr_db: f64, observation: u64) -> RandomSource {
    let db = (pnr_db * 1000.0).round() as i64 as u64;
    RandomSource::derive(seed, &[STREAM_NOISE, realization, db, observation])
}

fn channel_stream(seed: u64, realization: u64) -> RandomSource {
    RandomSource::derive(seed, &[STREAM_CHANNEL, realization])
}

/// Codebook seed for a (dimension, bits) pair, independent of every other
/// stream derived from the master seed.
fn codebook_seed(master: u64, dim: usize, bits: u32) -> u64 {
    master
        ^ (dim as u64).wrapping_mul(0xA24B_AED4_963E_E407)
        ^ (bits as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn build_codebooks(
    master: u64,
    dims: &[usize],
    bits: &[u32],
) -> Result<BTreeMap<(usize, u32), Codebook>, SimError> {
    let mut map = BTreeMap::new();
    for &dim in dims {
        for &b in bits {
            if let Entry::Vacant(slot) = map.entry((dim, b)) {
                slot.insert(Codebook::generate(dim, b, codebook_seed(master, dim, b))?);
            }
        }
    }
    Ok(map)
}

// ── Worker pool ──────────────────────────────────────────────────────────────

/// Map realization indices through `job` on the configured pool and collect
/// results in index order, so aggregation is schedule-independent.
fn run_indexed<T, F>(config: &RunConfig, job: F) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(usize) -> Result<T, SimError> + Sync,
{
    let body = || {
        (0..config.realizations)
            .into_par_iter()
            .map(&job)
            .collect::<Result<Vec<T>, SimError>>()
    };
    if config.workers == 0 {
        body()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        pool.install(body)
    }
}

// ── Shared pipeline helpers ──────────────────────────────────────────────────

/// True-channel effective gain |h(ψ)ᴴ f|².
fn realized_gain(re: &ChannelRealization, profile: &CVec, transmit: &CVec) -> f64 {
    re.cascaded_channel(profile).dotc(transmit).norm_sqr()
}

/// Squared-error ratio ‖estimate − truth‖²/‖truth‖².
fn relative_error(estimate: &CVec, truth: &CVec) -> f64 {
    (estimate - truth).norm_squared() / truth.norm_squared()
}

/// True cascaded gains at the given path indices.
fn gains_at(re: &ChannelRealization, paths: &[usize]) -> CVec {
    CVec::from_fn(paths.len(), |t, _| re.gains.cascaded[paths[t]])
}

fn ones(n: usize) -> CVec {
    CVec::from_element(n, Complex64::new(1.0, 0.0))
}

/// Mean of one slot across realizations at one sweep point.
fn mean_slot<const K: usize>(rows: &[Vec<[f64; K]>], point: usize, slot: usize) -> f64 {
    let sum: f64 = rows.iter().map(|row| row[point][slot]).sum();
    sum / rows.len() as f64
}

/// Mean spectral efficiency of one gain slot at a fixed data SNR.
fn se_mean<const K: usize>(rows: &[Vec<[f64; K]>], point: usize, slot: usize, dnr: f64) -> f64 {
    let sum: f64 = rows
        .iter()
        .map(|row| spectral_efficiency(row[point][slot], dnr))
        .sum();
    sum / rows.len() as f64
}

/// Sound the given paths and rescale into the gain estimate.
fn sound_and_estimate(
    re: &ChannelRealization,
    kept: &[usize],
    p_e: f64,
    noise_var: f64,
    rng: &mut RandomSource,
) -> Result<CVec, SimError> {
    let y = sounding::sound_paths(re, kept, p_e, noise_var, rng)?;
    Ok(sounding::estimate_gains(&y, p_e, re)?)
}

// ── NMSE against pilot SNR ───────────────────────────────────────────────────

/// Estimation-error sweep against pilot SNR with perfect feedback.
///
/// Schemes: dictionary sounding on the selected paths (T = `selected_paths`
/// slots) and on all paths (T = L), against least-squares and MMSE estimation
/// from a shared random-pilot observation (T = L). Error ratios are measured
/// against the selected-path gains or the full gain vector, averaged across
/// realizations, then converted to dB.
pub fn run_nmse_vs_pnr(config: &RunConfig) -> Result<Vec<MetricRecord>, SimError> {
    config.validate()?;
    let geometry = config.geometry();
    let l = geometry.n_paths();
    let k = config.selected_paths;
    let opts = config.alternation();
    let p_e = config.pilot_power;
    let points = config.pnr_db.clone();

    let rows = run_indexed(config, |i| {
        let idx = i as u64;
        let re = sample_realization(geometry, &mut channel_stream(config.seed, idx));
        let (sel, _) = selection::select_paths(&re, k, &opts)?;
        let g_sel = gains_at(&re, &sel.kept);
        let g_all = re.gains.cascaded.clone();
        let every: Vec<usize> = (0..l).collect();
        let (batch, redraws) = baselines::conditioned_pilot_matrix(
            &re,
            l,
            p_e,
            &mut RandomSource::derive(config.seed, &[STREAM_PILOT, idx, l as u64]),
        )?;

        let mut errs = Vec::with_capacity(points.len());
        for &pnr in &points {
            let noise_var = p_e * db_to_linear(-pnr);
            let est = sound_and_estimate(
                &re,
                &sel.kept,
                p_e,
                noise_var,
                &mut noise_stream(config.seed, idx, pnr, k as u64),
            )?;
            let e_sel = relative_error(&est, &g_sel);

            let est = sound_and_estimate(
                &re,
                &every,
                p_e,
                noise_var,
                &mut noise_stream(config.seed, idx, pnr, l as u64),
            )?;
            let e_all = relative_error(&est, &g_all);

            let y = baselines::receive_pilots(
                &re,
                &batch,
                noise_var,
                &mut noise_stream(config.seed, idx, pnr, PILOT_OBS + l as u64),
            );
            let e_ls = relative_error(&baselines::ls_estimate(&batch.sensing, &y)?, &g_all);
            let e_mmse = relative_error(
                &baselines::mmse_estimate(&batch.sensing, &y, noise_var)?,
                &g_all,
            );
            errs.push([e_sel, e_all, e_ls, e_mmse]);
        }
        Ok((errs, redraws))
    })?;

    let redraws: usize = rows.iter().map(|r| r.1).sum();
    if redraws > 0 {
        eprintln!("redrew {redraws} ill-conditioned random pilot batches");
    }
    let rows: Vec<Vec<[f64; 4]>> = rows.into_iter().map(|r| r.0).collect();

    let schemes = [
        (format!("proposed-t{k}"), 0usize),
        (format!("proposed-t{l}"), 1),
        (format!("ls-t{l}"), 2),
        (format!("mmse-t{l}"), 3),
    ];
    let mut records = Vec::new();
    for (name, slot) in &schemes {
        if !config.wants(name) {
            continue;
        }
        for (pi, &pnr) in points.iter().enumerate() {
            records.push(nmse_record(
                config,
                name,
                "pnr_db",
                pnr,
                mean_slot(&rows, pi, *slot),
            )?);
        }
    }
    Ok(records)
}

// ── NMSE against feedback bits ───────────────────────────────────────────────

/// Estimation-error sweep against feedback bits at a fixed pilot SNR.
///
/// The UE quantizes its estimate's direction through a shared random
/// codebook (the magnitude is fed back losslessly) and the error is measured
/// at the BS-side reconstruction. The long random-pilot scheme feeds back the
/// raw observations instead and estimates at the BS. An infinite-bits point
/// (unquantized feedback) is appended as the reference.
pub fn run_nmse_vs_bits(config: &RunConfig) -> Result<Vec<MetricRecord>, SimError> {
    config.validate()?;
    let geometry = config.geometry();
    let l = geometry.n_paths();
    let k = config.selected_paths;
    let t_long = config.mmse_slots;
    let opts = config.alternation();
    let p_e = config.pilot_power;
    let pnr = config.pnr_fixed_db;
    let noise_var = p_e * db_to_linear(-pnr);
    let points: Vec<Option<u32>> = config
        .bits
        .iter()
        .copied()
        .map(Some)
        .chain(std::iter::once(None))
        .collect();
    let codebooks = build_codebooks(config.seed, &[k, l, t_long], &config.bits)?;

    let rows = run_indexed(config, |i| {
        let idx = i as u64;
        let re = sample_realization(geometry, &mut channel_stream(config.seed, idx));
        let (sel, _) = selection::select_paths(&re, k, &opts)?;
        let g_sel = gains_at(&re, &sel.kept);
        let g_all = re.gains.cascaded.clone();
        let every: Vec<usize> = (0..l).collect();

        let est_sel = sound_and_estimate(
            &re,
            &sel.kept,
            p_e,
            noise_var,
            &mut noise_stream(config.seed, idx, pnr, k as u64),
        )?;
        let est_all = sound_and_estimate(
            &re,
            &every,
            p_e,
            noise_var,
            &mut noise_stream(config.seed, idx, pnr, l as u64),
        )?;
        let batch = baselines::random_pilot_matrix(
            &re,
            t_long,
            p_e,
            &mut RandomSource::derive(config.seed, &[STREAM_PILOT, idx, t_long as u64]),
        )?;
        let y_long = baselines::receive_pilots(
            &re,
            &batch,
            noise_var,
            &mut noise_stream(config.seed, idx, pnr, PILOT_OBS + t_long as u64),
        );

        let mut errs = Vec::with_capacity(points.len());
        for point in &points {
            let row = match point {
                Some(b) => {
                    let r_sel = sounding::feedback_gains(&est_sel, &codebooks[&(k, *b)])?;
                    let r_all = sounding::feedback_gains(&est_all, &codebooks[&(l, *b)])?;
                    let (_, y_rec) = codebooks[&(t_long, *b)].quantize(&y_long)?;
                    let est = baselines::mmse_estimate(&batch.sensing, &y_rec, noise_var)?;
                    [
                        relative_error(&r_sel.reconstructed, &g_sel),
                        relative_error(&r_all.reconstructed, &g_all),
                        relative_error(&est, &g_all),
                    ]
                }
                None => {
                    let est = baselines::mmse_estimate(&batch.sensing, &y_long, noise_var)?;
                    [
                        relative_error(&est_sel, &g_sel),
                        relative_error(&est_all, &g_all),
                        relative_error(&est, &g_all),
                    ]
                }
            };
            errs.push(row);
        }
        Ok(errs)
    })?;

    let schemes = [
        (format!("proposed-t{k}"), 0usize),
        (format!("proposed-t{l}"), 1),
        (format!("mmse-t{t_long}"), 2),
    ];
    let mut records = Vec::new();
    for (name, slot) in &schemes {
        if !config.wants(name) {
            continue;
        }
        for (pi, point) in points.iter().enumerate() {
            let value = point.map_or(f64::INFINITY, f64::from);
            records.push(nmse_record(
                config,
                name,
                "bits",
                value,
                mean_slot(&rows, pi, *slot),
            )?);
        }
    }
    Ok(records)
}

// ── Spectral efficiency against selected paths ───────────────────────────────

/// Spectral-efficiency sweep against the kept-path count with ideal
/// estimation and feedback of the selected-path gains.
///
/// Selection schemes (exhaustive, greedy, uniformly random) are each followed
/// by the gain-aware alternating beamformer update; the partial-random scheme
/// fills the unselected gains with fresh draws and runs the closed-form
/// whole-matrix alternation instead. Efficiency is evaluated on the true
/// channel at a fixed data SNR.
pub fn run_se_vs_paths(config: &RunConfig) -> Result<Vec<MetricRecord>, SimError> {
    config.validate()?;
    let geometry = config.geometry();
    let l = geometry.n_paths();
    let opts = config.alternation();
    let uopts = config.update_opts();
    let aopts = config.ao_opts();
    let dnr = db_to_linear(config.dnr_fixed_db);
    let counts = config.path_counts.clone();
    let want = [
        config.wants("optimal-paths"),
        config.wants("selected-paths"),
        config.wants("random-paths"),
        config.wants("partial-random"),
    ];

    let rows = run_indexed(config, |i| {
        let idx = i as u64;
        let re = sample_realization(geometry, &mut channel_stream(config.seed, idx));
        let start = ones(geometry.n_r());
        let mut per_count = Vec::with_capacity(counts.len());
        for &count in &counts {
            let mut gains = [f64::NAN; 4];
            if want[0] {
                let (sel, conv) = baselines::exhaustive_selection(&re, count, &opts)?;
                let up = beamforming::alternate_update(
                    &re,
                    &sel.kept,
                    &sel.dropped,
                    &gains_at(&re, &sel.kept),
                    Some(&conv.profile),
                    &uopts,
                )?;
                gains[0] = realized_gain(&re, &up.profile, &up.transmit);
            }
            if want[1] || want[3] {
                let (sel, conv) = selection::select_paths(&re, count, &opts)?;
                if want[1] {
                    let up = beamforming::alternate_update(
                        &re,
                        &sel.kept,
                        &sel.dropped,
                        &gains_at(&re, &sel.kept),
                        Some(&conv.profile),
                        &uopts,
                    )?;
                    gains[1] = realized_gain(&re, &up.profile, &up.transmit);
                }
                if want[3] {
                    let filled = baselines::partial_random_gains(
                        &gains_at(&re, &sel.kept),
                        &sel.kept,
                        l,
                        &mut RandomSource::derive(config.seed, &[STREAM_FILL, idx, count as u64]),
                    )?;
                    let h = baselines::channel_matrix(&re, &filled)?;
                    let run = baselines::alternating_beamforming(&h, &aopts)?;
                    gains[3] = realized_gain(&re, &run.profile, &run.transmit);
                }
            }
            if want[2] {
                let sel = baselines::random_selection(
                    l,
                    count,
                    &mut RandomSource::derive(config.seed, &[STREAM_SUBSET, idx, count as u64]),
                )?;
                let conv =
                    selection::converge_beamformers(&re, &sel.kept, &sel.dropped, &start, &opts)?;
                let up = beamforming::alternate_update(
                    &re,
                    &sel.kept,
                    &sel.dropped,
                    &gains_at(&re, &sel.kept),
                    Some(&conv.profile),
                    &uopts,
                )?;
                gains[2] = realized_gain(&re, &up.profile, &up.transmit);
            }
            per_count.push(gains);
        }
        Ok(per_count)
    })?;

    let schemes = [
        ("optimal-paths", 0usize),
        ("selected-paths", 1),
        ("random-paths", 2),
        ("partial-random", 3),
    ];
    let mut records = Vec::new();
    for (name, slot) in &schemes {
        if !config.wants(name) {
            continue;
        }
        for (pi, &count) in counts.iter().enumerate() {
            records.push(se_record(
                config,
                name,
                "paths",
                count as f64,
                se_mean(&rows, pi, *slot, dnr),
            )?);
        }
    }
    Ok(records)
}

// ── Spectral efficiency against feedback bits ────────────────────────────────

/// Spectral-efficiency sweep against feedback bits at fixed pilot and data
/// SNR.
///
/// Selected-path schemes sound T = `selected_paths` or T+1 paths, feed the
/// quantized gains back, and run the gain-aware update. The whole-vector
/// scheme sounds every path, reconstructs the full gain vector, and runs the
/// closed-form whole-matrix alternation, as does the long random-pilot MMSE
/// scheme (which feeds back its quantized observations). An infinite-bits
/// point is appended as the unquantized reference.
pub fn run_se_vs_bits(config: &RunConfig) -> Result<Vec<MetricRecord>, SimError> {
    config.validate()?;
    let geometry = config.geometry();
    let l = geometry.n_paths();
    let k = config.selected_paths;
    let mid = (k + 1 < l).then_some(k + 1);
    let t_long = config.mmse_slots;
    let opts = config.alternation();
    let uopts = config.update_opts();
    let aopts = config.ao_opts();
    let p_e = config.pilot_power;
    let pnr = config.se_pnr_db;
    let noise_var = p_e * db_to_linear(-pnr);
    let dnr = db_to_linear(config.dnr_fixed_db);
    let points: Vec<Option<u32>> = config
        .bits
        .iter()
        .copied()
        .map(Some)
        .chain(std::iter::once(None))
        .collect();

    let mut dims = vec![k, l, t_long];
    if let Some(m) = mid {
        dims.push(m);
    }
    let codebooks = build_codebooks(config.seed, &dims, &config.bits)?;

    let names = [
        format!("proposed-t{k}"),
        mid.map_or(String::new(), |m| format!("proposed-t{m}")),
        format!("proposed-t{l}"),
        format!("mmse-t{t_long}"),
    ];
    let want = [
        config.wants(&names[0]),
        mid.is_some() && config.wants(&names[1]),
        config.wants(&names[2]),
        config.wants(&names[3]),
    ];

    let rows = run_indexed(config, |i| {
        let idx = i as u64;
        let re = sample_realization(geometry, &mut channel_stream(config.seed, idx));
        let every: Vec<usize> = (0..l).collect();

        // One selection + sounding pass per selected-path scheme.
        let mut selected = [None, None];
        for (slot, count) in [(0usize, Some(k)), (1, mid)] {
            if let Some(count) = count.filter(|_| want[slot]) {
                let (sel, conv) = selection::select_paths(&re, count, &opts)?;
                let est = sound_and_estimate(
                    &re,
                    &sel.kept,
                    p_e,
                    noise_var,
                    &mut noise_stream(config.seed, idx, pnr, count as u64),
                )?;
                selected[slot] = Some((sel, conv, est, count));
            }
        }
        let est_all = if want[2] {
            Some(sound_and_estimate(
                &re,
                &every,
                p_e,
                noise_var,
                &mut noise_stream(config.seed, idx, pnr, l as u64),
            )?)
        } else {
            None
        };
        let observed = if want[3] {
            let batch = baselines::random_pilot_matrix(
                &re,
                t_long,
                p_e,
                &mut RandomSource::derive(config.seed, &[STREAM_PILOT, idx, t_long as u64]),
            )?;
            let y = baselines::receive_pilots(
                &re,
                &batch,
                noise_var,
                &mut noise_stream(config.seed, idx, pnr, PILOT_OBS + t_long as u64),
            );
            Some((batch, y))
        } else {
            None
        };

        let mut per_point = Vec::with_capacity(points.len());
        for point in &points {
            let mut gains = [f64::NAN; 4];
            for (slot, entry) in selected.iter().enumerate() {
                if let Some((sel, conv, est, count)) = entry {
                    let fed = match point {
                        Some(b) => {
                            sounding::feedback_gains(est, &codebooks[&(*count, *b)])?.reconstructed
                        }
                        None => est.clone(),
                    };
                    let up = beamforming::alternate_update(
                        &re,
                        &sel.kept,
                        &sel.dropped,
                        &fed,
                        Some(&conv.profile),
                        &uopts,
                    )?;
                    gains[slot] = realized_gain(&re, &up.profile, &up.transmit);
                }
            }
            if let Some(est) = &est_all {
                let fed = match point {
                    Some(b) => sounding::feedback_gains(est, &codebooks[&(l, *b)])?.reconstructed,
                    None => est.clone(),
                };
                let h = baselines::channel_matrix(&re, &fed)?;
                let run = baselines::alternating_beamforming(&h, &aopts)?;
                gains[2] = realized_gain(&re, &run.profile, &run.transmit);
            }
            if let Some((batch, y)) = &observed {
                let fed = match point {
                    Some(b) => codebooks[&(t_long, *b)].quantize(y)?.1,
                    None => y.clone(),
                };
                let est = baselines::mmse_estimate(&batch.sensing, &fed, noise_var)?;
                let h = baselines::channel_matrix(&re, &est)?;
                let run = baselines::alternating_beamforming(&h, &aopts)?;
                gains[3] = realized_gain(&re, &run.profile, &run.transmit);
            }
            per_point.push(gains);
        }
        Ok(per_point)
    })?;

    let mut records = Vec::new();
    for (slot, name) in names.iter().enumerate() {
        if !want[slot] {
            continue;
        }
        for (pi, point) in points.iter().enumerate() {
            let value = point.map_or(f64::INFINITY, f64::from);
            records.push(se_record(
                config,
                name,
                "bits",
                value,
                se_mean(&rows, pi, slot, dnr),
            )?);
        }
    }
    Ok(records)
}

// ── Spectral efficiency against data SNR ─────────────────────────────────────

/// Spectral-efficiency sweep against data SNR at a fixed pilot SNR.
///
/// Beamformers do not depend on the data SNR, so each scheme's effective gain
/// is computed once per realization and swept through the SNR grid. Perfect
/// whole-vector and selected-path references bracket their quantized
/// counterparts; the long random-pilot MMSE scheme rounds out the set.
pub fn run_se_vs_dnr(config: &RunConfig) -> Result<Vec<MetricRecord>, SimError> {
    config.validate()?;
    let geometry = config.geometry();
    let l = geometry.n_paths();
    let k = config.selected_paths;
    let t_long = config.mmse_slots;
    let opts = config.alternation();
    let uopts = config.update_opts();
    let aopts = config.ao_opts();
    let p_e = config.pilot_power;
    let pnr = config.se_pnr_db;
    let noise_var = p_e * db_to_linear(-pnr);
    let points = config.dnr_db.clone();

    let names = [
        "perfect-pgi".to_string(),
        format!("proposed-t{l}-b{}", config.pgi_bits),
        "perfect-dpgi".to_string(),
        format!("proposed-t{k}-b{}", config.dpgi_bits),
        format!("mmse-t{t_long}-b{}", config.pgi_bits),
    ];
    let want: Vec<bool> = names.iter().map(|n| config.wants(n)).collect();

    let mut codebooks = build_codebooks(config.seed, &[k], &[config.dpgi_bits])?;
    codebooks.extend(build_codebooks(
        config.seed,
        &[l, t_long],
        &[config.pgi_bits],
    )?);

    let rows = run_indexed(config, |i| {
        let idx = i as u64;
        let re = sample_realization(geometry, &mut channel_stream(config.seed, idx));
        let every: Vec<usize> = (0..l).collect();
        let mut gains = [f64::NAN; 5];

        if want[0] {
            let h = baselines::channel_matrix(&re, &re.gains.cascaded)?;
            let run = baselines::alternating_beamforming(&h, &aopts)?;
            gains[0] = realized_gain(&re, &run.profile, &run.transmit);
        }
        if want[1] {
            let est = sound_and_estimate(
                &re,
                &every,
                p_e,
                noise_var,
                &mut noise_stream(config.seed, idx, pnr, l as u64),
            )?;
            let fed = sounding::feedback_gains(&est, &codebooks[&(l, config.pgi_bits)])?;
            let h = baselines::channel_matrix(&re, &fed.reconstructed)?;
            let run = baselines::alternating_beamforming(&h, &aopts)?;
            gains[1] = realized_gain(&re, &run.profile, &run.transmit);
        }
        if want[2] || want[3] {
            let (sel, conv) = selection::select_paths(&re, k, &opts)?;
            if want[2] {
                let up = beamforming::alternate_update(
                    &re,
                    &sel.kept,
                    &sel.dropped,
                    &gains_at(&re, &sel.kept),
                    Some(&conv.profile),
                    &uopts,
                )?;
                gains[2] = realized_gain(&re, &up.profile, &up.transmit);
            }
            if want[3] {
                let est = sound_and_estimate(
                    &re,
                    &sel.kept,
                    p_e,
                    noise_var,
                    &mut noise_stream(config.seed, idx, pnr, k as u64),
                )?;
                let fed = sounding::feedback_gains(&est, &codebooks[&(k, config.dpgi_bits)])?;
                let up = beamforming::alternate_update(
                    &re,
                    &sel.kept,
                    &sel.dropped,
                    &fed.reconstructed,
                    Some(&conv.profile),
                    &uopts,
                )?;
                gains[3] = realized_gain(&re, &up.profile, &up.transmit);
            }
        }
        if want[4] {
            let batch = baselines::random_pilot_matrix(
                &re,
                t_long,
                p_e,
                &mut RandomSource::derive(config.seed, &[STREAM_PILOT, idx, t_long as u64]),
            )?;
            let y = baselines::receive_pilots(
                &re,
                &batch,
                noise_var,
                &mut noise_stream(config.seed, idx, pnr, PILOT_OBS + t_long as u64),
            );
            let (_, y_rec) = codebooks[&(t_long, config.pgi_bits)].quantize(&y)?;
            let est = baselines::mmse_estimate(&batch.sensing, &y_rec, noise_var)?;
            let h = baselines::channel_matrix(&re, &est)?;
            let run = baselines::alternating_beamforming(&h, &aopts)?;
            gains[4] = realized_gain(&re, &run.profile, &run.transmit);
        }
        Ok(gains)
    })?;

    let mut records = Vec::new();
    for (slot, name) in names.iter().enumerate() {
        if !want[slot] {
            continue;
        }
        for &dnr_db in &points {
            let dnr = db_to_linear(dnr_db);
            let sum: f64 = rows.iter().map(|g| spectral_efficiency(g[slot], dnr)).sum();
            records.push(se_record(
                config,
                name,
                "dnr_db",
                dnr_db,
                sum / rows.len() as f64,
            )?);
        }
    }
    Ok(records)
}

// ── Validation suite ─────────────────────────────────────────────────────────

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Measured error (or margin, where noted in `detail`).
    pub measured: f64,
    /// Acceptance threshold the measurement is compared against.
    pub limit: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn within(name: &str, measured: f64, limit: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= limit,
            measured,
            limit,
            detail,
        }
    }
}

/// All validation outcomes plus CSV rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Render as CSV with a mandatory header; byte-stable per seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,passed,measured,limit,detail\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.name,
                c.passed,
                fmt_num(c.measured),
                fmt_num(c.limit),
                c.detail
            );
        }
        out
    }
}

/// Widen a reference tolerance when fewer draws than the reference count are
/// configured: Monte Carlo error scales as the inverse square root.
fn scaled_tol(base: f64, reference_draws: usize, draws: usize) -> f64 {
    base * (reference_draws as f64 / draws as f64).sqrt().max(1.0)
}

/// Per-path weights of the statistical link gain for one instance: the gain
/// through path `l` into precoder column `j` is `m[(l, j)]`, so the squared
/// link value of a gain draw is |Σ_{l,j} m[(l,j)]·g_l·g_kept[j]|².
fn selection_gain_weights(re: &ChannelRealization, psi: &CVec, v: &CMat) -> CMat {
    let couplings = re.ris_dict.transpose() * psi;
    let inner = re.bs_dict.adjoint() * v;
    let scale = Complex64::new(re.geometry.gain_scale(), 0.0);
    CMat::from_fn(re.geometry.n_paths(), v.ncols(), |li, j| {
        scale * couplings[li] * inner[(li, j)]
    })
}

/// Exact mean of |Σ_{l,j} m[(l,j)]·g_l·g_kept[j]|² over coupled Kronecker
/// gains, by direct fourth-moment enumeration: each Gaussian segment pairs
/// as E[x_a·x_b·x̄_c·x̄_d] = [a=c][b=d] + [a=d][b=c], and a quadruple of path
/// indices contributes the product of its two segment pairings.
fn exact_selection_gain(geometry: SystemGeometry, m: &CMat, kept: &[usize]) -> f64 {
    let l = geometry.n_paths();
    let mut total = 0.0;
    for (j, &kj) in kept.iter().enumerate() {
        let (pb, qb) = geometry.path_pair(kj);
        for li in 0..l {
            let (pa, qa) = geometry.path_pair(li);
            for (j2, &kj2) in kept.iter().enumerate() {
                let (pd, qd) = geometry.path_pair(kj2);
                for li2 in 0..l {
                    let (pc, qc) = geometry.path_pair(li2);
                    let forward = u32::from(pa == pc && pb == pd) + u32::from(pa == pd && pb == pc);
                    if forward == 0 {
                        continue;
                    }
                    let user = u32::from(qa == qc && qb == qd) + u32::from(qa == qd && qb == qc);
                    if user == 0 {
                        continue;
                    }
                    let weight = (forward * user) as f64;
                    total += weight * (m[(li, j)] * m[(li2, j2)].conj()).re;
                }
            }
        }
    }
    total
}

/// The same enumeration under an (incorrect) independence assumption: whole
/// path gains pair only when their full indices coincide. Used by the canary
/// to prove the sampled oracle can detect a missing segment coupling.
fn exact_selection_gain_uncoupled(m: &CMat, kept: &[usize]) -> f64 {
    let l = m.nrows();
    let mut total = 0.0;
    for (j, &kj) in kept.iter().enumerate() {
        for li in 0..l {
            for (j2, &kj2) in kept.iter().enumerate() {
                for li2 in 0..l {
                    let weight =
                        u32::from(li == li2 && kj == kj2) + u32::from(li == kj2 && kj == li2);
                    if weight == 0 {
                        continue;
                    }
                    total += weight as f64 * (m[(li, j)] * m[(li2, j2)].conj()).re;
                }
            }
        }
    }
    total
}

/// Mean squared statistical link gain, estimated by conditional Monte Carlo
/// over the coupled gain model: the forward segment is drawn each round and
/// the user-side segment is integrated exactly (a bilinear form in circular
/// Gaussians has mean squared modulus 2‖(D + Dᵀ)/2‖²_F), so the estimate
/// converges far faster than raw sampling while the coupling stays empirical.
fn sampled_selection_gain(
    geometry: SystemGeometry,
    m: &CMat,
    kept: &[usize],
    draws: usize,
    rng: &mut RandomSource,
) -> f64 {
    let l = geometry.n_paths();
    let l_ru = geometry.l_ru;
    let mut alpha = vec![Complex64::new(0.0, 0.0); geometry.l_rb];
    let mut d = CMat::zeros(l_ru, l_ru);
    let mut acc = 0.0;
    for _ in 0..draws {
        for a in alpha.iter_mut() {
            *a = rng.complex_normal();
        }
        d.fill(Complex64::new(0.0, 0.0));
        for (j, &kj) in kept.iter().enumerate() {
            let (pk, qk) = geometry.path_pair(kj);
            let ak = alpha[pk];
            for li in 0..l {
                let (p, q) = geometry.path_pair(li);
                d[(q, qk)] += m[(li, j)] * alpha[p] * ak;
            }
        }
        let mut sum = 0.0;
        for a in 0..l_ru {
            for b in 0..l_ru {
                let s = (d[(a, b)] + d[(b, a)]) * Complex64::new(0.5, 0.0);
                sum += s.norm_sqr();
            }
        }
        acc += 2.0 * sum;
    }
    acc / draws as f64
}

/// Exact fourth-moment mean gain of the selection stage against a
/// conditional Monte Carlo sample of the coupled gain model. This validates
/// the coupled-gain computation chain end to end; the statistical surrogate
/// the optimizer uses is compared separately, because it averages pair
/// moments and is not an exact per-instance expectation.
pub fn check_selection_gain_oracle(
    geometry: SystemGeometry,
    instances: usize,
    draws: usize,
    tol: f64,
    master: u64,
) -> Result<CheckOutcome, SimError> {
    let l = geometry.n_paths();
    let mut worst = 0.0f64;
    for inst in 0..instances {
        let mut rng = RandomSource::derive(master, &[21, inst as u64]);
        let re = sample_realization(geometry, &mut rng);
        let psi = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        let kept_count = 1 + inst % (l - 1);
        let sel = baselines::random_selection(l, kept_count, &mut rng)?;
        let mut v = CMat::from_fn(geometry.n_b(), kept_count, |_, _| rng.complex_normal());
        v /= Complex64::new(v.norm(), 0.0);

        let m = selection_gain_weights(&re, &psi, &v);
        let exact = exact_selection_gain(geometry, &m, &sel.kept);
        let sampled = sampled_selection_gain(geometry, &m, &sel.kept, draws, &mut rng);
        worst = worst.max((sampled - exact).abs() / exact.abs());
    }
    Ok(CheckOutcome::within(
        "selection-gain-oracle",
        worst,
        tol,
        format!("instances={instances} draws={draws}"),
    ))
}

/// Gap between the selection stage's statistical surrogate objective and the
/// exact coupled-gain mean. The surrogate replaces pair-specific fourth
/// moments with their path-ensemble average, so it tracks the exact mean
/// only approximately; this check reports the gap and guards against gross
/// regressions in either expression.
pub fn check_selection_surrogate_gap(
    geometry: SystemGeometry,
    instances: usize,
    limit: f64,
    master: u64,
) -> Result<CheckOutcome, SimError> {
    let l = geometry.n_paths();
    let q = selection::moment_factor(geometry.l_rb, geometry.l_ru)?;
    let mut worst = 0.0f64;
    for inst in 0..instances {
        let mut rng = RandomSource::derive(master, &[29, inst as u64]);
        let re = sample_realization(geometry, &mut rng);
        let psi = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        let kept_count = 1 + inst % (l - 1);
        let sel = baselines::random_selection(l, kept_count, &mut rng)?;
        let mut v = CMat::from_fn(geometry.n_b(), kept_count, |_, _| rng.complex_normal());
        v /= Complex64::new(v.norm(), 0.0);

        let a_s = re.path_columns(&sel.kept, &psi);
        let a_r = re.path_columns(&sel.dropped, &psi);
        let surrogate = selection::expected_gain(&a_s, &a_r, &v, q)?;
        let m = selection_gain_weights(&re, &psi, &v);
        let exact = exact_selection_gain(geometry, &m, &sel.kept);
        worst = worst.max((surrogate - exact).abs() / exact.abs());
    }
    Ok(CheckOutcome::within(
        "selection-surrogate-gap",
        worst,
        limit,
        format!("instances={instances}; approximation gap, not an error bound"),
    ))
}

/// Closed-form mean gain of the data-transmission update against Monte
/// Carlo: selected gains held fixed, removed gains redrawn each draw.
pub fn check_update_gain_oracle(
    geometry: SystemGeometry,
    instances: usize,
    draws: usize,
    tol: f64,
    master: u64,
) -> Result<CheckOutcome, SimError> {
    let l = geometry.n_paths();
    let mut worst = 0.0f64;
    for inst in 0..instances {
        let mut rng = RandomSource::derive(master, &[22, inst as u64]);
        let re = sample_realization(geometry, &mut rng);
        let psi = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        let kept_count = 1 + inst % (l - 1);
        let sel = baselines::random_selection(l, kept_count, &mut rng)?;
        let mut f = CVec::from_fn(geometry.n_b(), |_, _| rng.complex_normal());
        f /= Complex64::new(f.norm(), 0.0);
        let g_s = gains_at(&re, &sel.kept);

        let a_s = re.path_columns(&sel.kept, &psi);
        let a_r = re.path_columns(&sel.dropped, &psi);
        let closed = beamforming::expected_gain(&a_s, &a_r, &g_s, &f)?;

        let fixed = g_s.dot(&(a_s.adjoint() * &f));
        let w = a_r.adjoint() * &f;
        let mut acc = 0.0;
        for _ in 0..draws {
            let mut z = fixed;
            for wi in w.iter() {
                z += rng.complex_normal() * wi;
            }
            acc += z.norm_sqr();
        }
        let sampled = acc / draws as f64;
        worst = worst.max((sampled - closed).abs() / closed.abs());
    }
    Ok(CheckOutcome::within(
        "update-gain-oracle",
        worst,
        tol,
        format!("instances={instances} draws={draws}"),
    ))
}

/// Fourth-moment table of the cascaded gains: per-entry fourth moments and
/// every pair product, classified by whether the paths share a segment.
pub fn check_gain_moments(
    geometry: SystemGeometry,
    draws: usize,
    tol: f64,
    master: u64,
) -> Result<CheckOutcome, SimError> {
    let l = geometry.n_paths();
    let mut rng = RandomSource::derive(master, &[23]);
    let mut quartic = vec![0.0f64; l];
    let mut cross = vec![0.0f64; l * l];
    for _ in 0..draws {
        let g = channel::sample_gains(geometry, &mut rng).cascaded;
        let p: Vec<f64> = g.iter().map(|z| z.norm_sqr()).collect();
        for i in 0..l {
            quartic[i] += p[i] * p[i];
            for j in (i + 1)..l {
                cross[i * l + j] += p[i] * p[j];
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..l {
        worst = worst.max((quartic[i] / draws as f64 - 4.0).abs() / 4.0);
        let (pi, qi) = geometry.path_pair(i);
        for j in (i + 1)..l {
            let (pj, qj) = geometry.path_pair(j);
            let target = if pi == pj || qi == qj { 2.0 } else { 1.0 };
            worst = worst.max((cross[i * l + j] / draws as f64 - target).abs() / target);
        }
    }
    Ok(CheckOutcome::within(
        "cascade-moments",
        worst,
        tol,
        format!("draws={draws} paths={l}"),
    ))
}

/// Matched-slot pilot coefficient: the sounded path's coefficient must equal
/// √(power·N_B·N_R²/L) exactly, for every slot, across seeds and powers.
pub fn check_pilot_coefficient(
    geometry: SystemGeometry,
    instances: usize,
    tol: f64,
    master: u64,
) -> Result<CheckOutcome, SimError> {
    let l = geometry.n_paths();
    let powers = [0.5, 1.0, 2.0, 4.0];
    let mut worst = 0.0f64;
    for inst in 0..instances {
        let mut rng = RandomSource::derive(master, &[24, inst as u64]);
        let re = sample_realization(geometry, &mut rng);
        let kept_count = 1 + inst % l;
        let sel = baselines::random_selection(l, kept_count, &mut rng)?;
        let p_e = powers[inst % powers.len()];
        let target =
            (p_e * (geometry.n_b() * geometry.n_r() * geometry.n_r()) as f64 / l as f64).sqrt();
        for t in 0..kept_count {
            let (f_e, psi) = sounding::pilot_beamformers(&re, &sel.kept, t)?;
            let kappa = sounding::pilot_response(&re, &f_e, &psi, p_e);
            let dev = (kappa[sel.kept[t]] - Complex64::new(target, 0.0)).norm() / target;
            worst = worst.max(dev);
        }
    }
    Ok(CheckOutcome::within(
        "pilot-coefficient",
        worst,
        tol,
        format!("instances={instances}"),
    ))
}

/// The four quadratic-form identities: each stage's precoder-space and
/// profile-space operators must reproduce the closed-form mean gain on
/// random probes.
pub fn check_quadratic_identities(
    geometry: SystemGeometry,
    probes: usize,
    tol: f64,
    master: u64,
) -> Result<Vec<CheckOutcome>, SimError> {
    let l = geometry.n_paths();
    let q = selection::moment_factor(geometry.l_rb, geometry.l_ru)?;
    let mut worst = [0.0f64; 4];
    for probe in 0..probes {
        let mut rng = RandomSource::derive(master, &[25, probe as u64]);
        let re = sample_realization(geometry, &mut rng);
        let psi = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        let psi2 = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        let kept_count = 1 + probe % (l - 1);
        let sel = baselines::random_selection(l, kept_count, &mut rng)?;
        let mut v = CMat::from_fn(geometry.n_b(), kept_count, |_, _| rng.complex_normal());
        v /= Complex64::new(v.norm(), 0.0);
        let mut f = CVec::from_fn(geometry.n_b(), |_, _| rng.complex_normal());
        f /= Complex64::new(f.norm(), 0.0);
        let g_s = gains_at(&re, &sel.kept);

        let a_s = re.path_columns(&sel.kept, &psi);
        let a_r = re.path_columns(&sel.dropped, &psi);
        let a_s2 = re.path_columns(&sel.kept, &psi2);
        let a_r2 = re.path_columns(&sel.dropped, &psi2);

        let closed = selection::expected_gain(&a_s, &a_r, &v, q)?;
        let form = selection::precoder_form(&a_s, &a_r, q);
        let quad = HermitianForm::quad(&form, &numerics::vec_of(&v));
        worst[0] = worst[0].max((quad - closed).abs() / closed.abs());

        let closed2 = selection::expected_gain(&a_s2, &a_r2, &v, q)?;
        let pform = selection::phase_form(&re, &sel.kept, &sel.dropped, &v, q);
        worst[1] = worst[1].max((pform.quad(&psi2) - closed2).abs() / closed2.abs());

        let closed = beamforming::expected_gain(&a_s, &a_r, &g_s, &f)?;
        let form = beamforming::precoder_form(&a_s, &a_r, &g_s);
        let quad = HermitianForm::quad(&form, &f);
        worst[2] = worst[2].max((quad - closed).abs() / closed.abs());

        let closed2 = beamforming::expected_gain(&a_s2, &a_r2, &g_s, &f)?;
        let pform = beamforming::phase_form(&re, &sel.kept, &sel.dropped, &g_s, &f);
        worst[3] = worst[3].max((pform.quad(&psi2) - closed2).abs() / closed2.abs());
    }
    let names = [
        "selection-precoder-identity",
        "selection-profile-identity",
        "update-precoder-identity",
        "update-profile-identity",
    ];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(name, w)| CheckOutcome::within(name, w, tol, format!("probes={probes}")))
        .collect())
}

/// Manifold solver invariants on random PSD forms: the solved value must not
/// trail the best random feasible probe, iterates stay unit-modulus, and the
/// internal objective descends monotonically.
pub fn check_manifold_solver(
    dim: usize,
    instances: usize,
    probes: usize,
    master: u64,
) -> Result<Vec<CheckOutcome>, SimError> {
    let gap_tol = 1e-6;
    let unit_tol = 1e-12;
    let monotone_tol = 1e-10;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_unit = 0.0f64;
    let mut worst_rise = 0.0f64;
    for inst in 0..instances {
        let mut rng = RandomSource::derive(master, &[26, inst as u64]);
        let g = CMat::from_fn(dim, dim, |_, _| rng.complex_normal());
        let j = g.adjoint() * &g;
        let start = CVec::from_fn(dim, |_, _| rng.unit_phase());
        let (solved, trace) = manifold::minimize(&j, &start, &ManifoldOptions::default())?;
        let value = HermitianForm::quad(&j, &solved);

        let mut best = f64::NEG_INFINITY;
        for _ in 0..probes {
            let probe = CVec::from_fn(dim, |_, _| rng.unit_phase());
            best = best.max(HermitianForm::quad(&j, &probe));
        }
        worst_gap = worst_gap.max((best - value) / best.abs());
        worst_unit = worst_unit.max(trace.unit_error);
        let scale = trace.objectives.iter().fold(0.0f64, |m, &o| m.max(o.abs()));
        for w in trace.objectives.windows(2) {
            worst_rise = worst_rise.max((w[1] - w[0]) / scale.max(f64::MIN_POSITIVE));
        }
    }
    Ok(vec![
        CheckOutcome::within(
            "manifold-probe-gap",
            worst_gap,
            gap_tol,
            format!("dim={dim} instances={instances} probes={probes}"),
        ),
        CheckOutcome::within(
            "manifold-unit-modulus",
            worst_unit,
            unit_tol,
            format!("dim={dim} instances={instances}"),
        ),
        CheckOutcome::within(
            "manifold-monotone-descent",
            worst_rise,
            monotone_tol,
            format!("dim={dim} instances={instances}"),
        ),
    ])
}

/// Noiseless interference-free recovery: with one nonzero gain per sounded
/// path, the estimate of that path is exact in its slot.
pub fn check_sounding_recovery(
    geometry: SystemGeometry,
    instances: usize,
    tol: f64,
    master: u64,
) -> Result<CheckOutcome, SimError> {
    let l = geometry.n_paths();
    let mut worst = 0.0f64;
    for inst in 0..instances {
        let mut rng = RandomSource::derive(master, &[27, inst as u64]);
        let angles = channel::sample_angles(geometry, &mut rng);
        let gains = channel::sample_gains(geometry, &mut rng);
        let kept_count = 1 + inst % l;
        let sel = baselines::random_selection(l, kept_count, &mut rng)?;
        for (t, &path) in sel.kept.iter().enumerate() {
            let mut isolated = CVec::zeros(l);
            isolated[path] = gains.cascaded[path];
            let re = channel::build_realization(
                geometry,
                angles.clone(),
                channel::PathGains {
                    alpha: gains.alpha.clone(),
                    beta: gains.beta.clone(),
                    cascaded: isolated,
                },
            );
            let y = sounding::sound_paths(&re, &sel.kept, 1.0, 0.0, &mut rng)?;
            let est = sounding::estimate_gains(&y, 1.0, &re)?;
            let truth = gains.cascaded[path];
            worst = worst.max((est[t] - truth).norm() / truth.norm());
        }
    }
    Ok(CheckOutcome::within(
        "sounding-exact-recovery",
        worst,
        tol,
        format!("instances={instances}"),
    ))
}

/// Sensitivity canary: evaluating the exact enumeration with the segment
/// coupling deliberately removed must disagree with the sampled mean beyond
/// the agreement band on at least one instance, proving the oracle pair can
/// actually catch a moment-structure error.
pub fn check_coupling_canary(
    geometry: SystemGeometry,
    instances: usize,
    draws: usize,
    band: f64,
    master: u64,
) -> Result<CheckOutcome, SimError> {
    let l = geometry.n_paths();
    let mut largest = 0.0f64;
    for inst in 0..instances {
        let mut rng = RandomSource::derive(master, &[28, inst as u64]);
        let re = sample_realization(geometry, &mut rng);
        let psi = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        let kept_count = 1 + inst % (l - 1);
        let sel = baselines::random_selection(l, kept_count, &mut rng)?;
        let mut v = CMat::from_fn(geometry.n_b(), kept_count, |_, _| rng.complex_normal());
        v /= Complex64::new(v.norm(), 0.0);

        let m = selection_gain_weights(&re, &psi, &v);
        let corrupted = exact_selection_gain_uncoupled(&m, &sel.kept);
        let sampled = sampled_selection_gain(geometry, &m, &sel.kept, draws, &mut rng);
        largest = largest.max((sampled - corrupted).abs() / corrupted.abs());
    }
    Ok(CheckOutcome {
        name: "segment-coupling-canary".to_string(),
        passed: largest > band,
        measured: largest,
        limit: band,
        detail: format!(
            "instances={instances} draws={draws}; largest disagreement must exceed the band"
        ),
    })
}

/// Run the full validation suite at the config's sizing. Monte Carlo bands
/// widen as the inverse square root when the configured draw counts fall
/// below the reference sizes (2·10⁶ for the gain oracles, 10⁶ for the moment
/// table). The suite is sequential, so worker settings cannot affect it.
pub fn run_validation(config: &RunConfig) -> Result<ValidationReport, SimError> {
    config.validate()?;
    let geometry = config.geometry();
    let seed = config.seed;
    let instances = config.validation_instances;
    let draws = config.validation_draws;
    let probes = config.validation_probes;
    let lemma_tol = scaled_tol(0.01, 2_000_000, draws);
    let moment_tol = scaled_tol(0.03, 1_000_000, draws);

    let mut checks = vec![check_selection_gain_oracle(
        geometry, instances, draws, lemma_tol, seed,
    )?];
    checks.push(check_selection_surrogate_gap(
        geometry, instances, 1.0, seed,
    )?);
    checks.push(check_update_gain_oracle(
        geometry, instances, draws, lemma_tol, seed,
    )?);
    checks.push(check_gain_moments(geometry, draws, moment_tol, seed)?);
    checks.push(check_pilot_coefficient(
        geometry,
        instances.max(8),
        1e-9,
        seed,
    )?);
    checks.extend(check_quadratic_identities(geometry, probes, 1e-9, seed)?);
    checks.extend(check_manifold_solver(4, instances, probes * 100, seed)?);
    checks.push(check_sounding_recovery(geometry, instances, 1e-9, seed)?);
    checks.push(check_coupling_canary(
        geometry, instances, draws, lemma_tol, seed,
    )?);
    Ok(ValidationReport { checks })
}

// ── tests ────────────────────────────────────────────────────────────────────
