//! Acceptance suite: every stated guarantee of the simulator, exercised at
//! its full documented scale. One test per criterion, numbered so a suite
//! run reads as a checklist. Everything is seeded, so a failure reproduces
//! bit-for-bit.
//!
//! Scales and tolerances:
//! - closed-form mean gains against 2·10⁶-draw Monte Carlo, 1% relative
//! - gain moment table at 10⁶ draws, 3%
//! - pilot coefficients and quadratic-form identities at 1e−9 over 100 seeds
//! - manifold solver against 10⁵ random probes per instance
//! - figure-level curve orderings and gap bounds at 1000 realizations
//! - byte-identical CSV output across worker counts
//!
//! The full suite is Monte Carlo heavy and takes tens of minutes on one
//! core; individual criteria can be run by name.

use rislink::baselines;
use rislink::channel::{self, build_realization, sample_realization, SystemGeometry};
use rislink::numerics::{CMat, CVec, Complex64};
use rislink::rng::RandomSource;
use rislink::selection::{self, AlternationOptions};
use rislink::sim::{
    check_gain_moments, check_manifold_solver, check_pilot_coefficient, check_quadratic_identities,
    check_update_gain_oracle, metrics_csv, run_nmse_vs_bits, run_nmse_vs_pnr, run_se_vs_bits,
    run_se_vs_dnr, run_se_vs_paths, run_validation, CheckOutcome, MetricRecord, RunConfig,
    SimError,
};

/// Master seed for the oracle criteria; each test derives its own substreams.
const MASTER: u64 = 20_240_611;

/// Reference geometry for the closed-form criteria: 16-antenna BS (4×4),
/// 64-element RIS (8×8), 2×3 cascaded paths.
fn reference_geometry() -> SystemGeometry {
    SystemGeometry {
        nb_v: 4,
        nb_h: 4,
        nr_v: 8,
        nr_h: 8,
        l_rb: 2,
        l_ru: 3,
    }
}

/// Print an outcome line and assert it passed.
fn assert_outcome(outcome: &CheckOutcome) {
    println!(
        "{}: measured {:.3e}, limit {:.3e} ({})",
        outcome.name, outcome.measured, outcome.limit, outcome.detail
    );
    assert!(
        outcome.passed,
        "{} failed: measured {:.6e} against limit {:.6e} ({})",
        outcome.name, outcome.measured, outcome.limit, outcome.detail
    );
}

/// Look up one sweep value, panicking with a readable message if absent.
fn metric(records: &[MetricRecord], scheme: &str, sweep_value: f64) -> f64 {
    records
        .iter()
        .find(|r| r.scheme == scheme && r.sweep_value == sweep_value)
        .unwrap_or_else(|| panic!("no record for scheme {scheme} at sweep value {sweep_value}"))
        .value
}

// ── Closed-form mean gains against Monte Carlo ───────────────────────────────

/// Selection-stage mean gain: closed form against a 2·10⁶-draw Monte Carlo of
/// |hᴴ V conj(g_s)|² with the full coupled gain vector redrawn every draw
/// (both the channel h and the fed-back subvector g_s come from the same
/// draw). 20 instances, 1% relative.
///
/// The selection objective replaces pair-specific fourth moments of the
/// coupled gains with their ensemble average, so it is a statistical
/// surrogate for this expectation rather than an exact expression; the
/// validation suite's `selection-surrogate-gap` check measures the same
/// deviation. See README.md, "The selection objective is a surrogate".
#[test]
fn criterion_01_selection_gain_formula_vs_coupled_draws() {
    let geometry = reference_geometry();
    let l = geometry.n_paths();
    let q = selection::moment_factor(geometry.l_rb, geometry.l_ru).unwrap();
    let instances = 20usize;
    let draws = 2_000_000usize;
    let mut deviations = Vec::with_capacity(instances);

    for inst in 0..instances {
        let mut rng = RandomSource::derive(MASTER, &[1, inst as u64]);
        let re = sample_realization(geometry, &mut rng);
        let psi = CVec::from_fn(geometry.n_r(), |_, _| rng.unit_phase());
        let kept_count = 1 + inst % (l - 1);
        let sel = baselines::random_selection(l, kept_count, &mut rng).unwrap();
        let mut v = CMat::from_fn(geometry.n_b(), kept_count, |_, _| rng.complex_normal());
        v /= Complex64::new(v.norm(), 0.0);

        let a_s = re.path_columns(&sel.kept, &psi);
        let a_r = re.path_columns(&sel.dropped, &psi);
        let closed = selection::expected_gain(&a_s, &a_r, &v, q).unwrap();

        // |hᴴ V conj(g_s)|² factored through the path weights
        // m[(l, j)] = √c · (ris_dictᵀ ψ)_l · (bs_dictᴴ v_j)_l, so each draw
        // costs O(L·|kept|) instead of rebuilding the channel.
        let couplings = re.ris_dict.transpose() * &psi;
        let directions = re.bs_dict.adjoint() * &v;
        let scale = Complex64::new(geometry.gain_scale(), 0.0);
        let m = CMat::from_fn(l, kept_count, |row, col| {
            scale * couplings[row] * directions[(row, col)]
        });

        // The factored evaluator must reproduce the assembled channel's
        // hᴴ V conj(g_s) before it is trusted for the long run.
        for _ in 0..100 {
            let gains = channel::sample_gains(geometry, &mut rng);
            let direct = {
                let re_draw = build_realization(geometry, re.angles.clone(), gains.clone());
                let h = re_draw.cascaded_channel(&psi);
                let u = v.adjoint() * &h;
                sel.kept
                    .iter()
                    .zip(u.iter())
                    .map(|(&path, ui)| ui.conj() * gains.cascaded[path])
                    .sum::<Complex64>()
                    .norm_sqr()
            };
            let factored = draw_value(&m, &sel.kept, &gains.cascaded);
            assert!(
                (direct - factored).abs() <= 1e-9 * direct.abs().max(1.0),
                "factored draw value {factored:.12e} disagrees with assembled channel {direct:.12e}"
            );
        }

        let mut acc = 0.0f64;
        for _ in 0..draws {
            let gains = channel::sample_gains(geometry, &mut rng);
            acc += draw_value(&m, &sel.kept, &gains.cascaded);
        }
        let sampled = acc / draws as f64;
        let rel = (sampled - closed).abs() / closed.abs();
        println!(
            "instance {inst:2}: kept={kept_count} closed={closed:.6e} sampled={sampled:.6e} rel={rel:.4}"
        );
        deviations.push(rel);
    }

    let worst = deviations.iter().cloned().fold(0.0f64, f64::max);
    assert!(
        worst <= 0.01,
        "selection mean-gain formula deviated from the coupled-draw Monte Carlo \
         reference by {worst:.4} relative (worst over {instances} instances, {draws} \
         draws each; per-instance: {deviations:.4?}). The formula averages the \
         fourth-moment coupling across path pairs, so it tracks this expectation \
         only as a surrogate — see README.md (\"The selection objective is a \
         surrogate\") and the validation checks selection-gain-oracle / \
         selection-surrogate-gap for the exact-reference split of the same quantity."
    );
}

/// |Σ_j (mᵀ g)_j · g_kept(j)|² for one draw of the cascaded gains.
fn draw_value(m: &CMat, kept: &[usize], g: &CVec) -> f64 {
    let mut z = Complex64::new(0.0, 0.0);
    for (j, &path) in kept.iter().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for row in 0..m.nrows() {
            s += m[(row, j)] * g[row];
        }
        z += s * g[path];
    }
    z.norm_sqr()
}

/// Data-transmission mean gain: closed form against 2·10⁶ draws of the
/// removed gains from the estimator's model (selected gains held fixed).
/// 20 instances, 1% relative.
#[test]
fn criterion_02_update_gain_formula_vs_model_draws() {
    let outcome =
        check_update_gain_oracle(reference_geometry(), 20, 2_000_000, 0.01, MASTER).unwrap();
    assert_outcome(&outcome);
}

/// Fourth-moment table of the coupled cascaded gains at 10⁶ draws: per-entry
/// fourth moment 4, pair products 2 when the paths share a segment and 1
/// when they share none, each within 3%.
#[test]
fn criterion_03_cascaded_gain_moment_table() {
    let outcome = check_gain_moments(reference_geometry(), 1_000_000, 0.03, MASTER).unwrap();
    assert_outcome(&outcome);
}

// ── Exact algebraic identities ───────────────────────────────────────────────

/// Matched-slot pilot coefficient equals √(P_e·N_B·N_R²/L) to 1e−9 relative
/// for every slot across 100 seeded instances.
#[test]
fn criterion_04_pilot_coefficient_exact() {
    let outcome = check_pilot_coefficient(reference_geometry(), 100, 1e-9, MASTER).unwrap();
    assert_outcome(&outcome);
}

/// The four quadratic-form identities (each stage's precoder-space and
/// profile-space operators against the closed-form mean gain) hold to 1e−9
/// relative over 100 random probes.
#[test]
fn criterion_05_quadratic_form_identities() {
    let outcomes = check_quadratic_identities(reference_geometry(), 100, 1e-9, MASTER).unwrap();
    assert_eq!(outcomes.len(), 4);
    for outcome in &outcomes {
        assert_outcome(outcome);
    }
}

/// Unit-modulus manifold solver on 100 random PSD forms of dimension 4:
/// solved value within 1e−6 of the best of 10⁵ random feasible probes,
/// iterates unit-modulus within 1e−12, objective monotone within 1e−10.
#[test]
fn criterion_06_manifold_solver_quality() {
    let outcomes = check_manifold_solver(4, 100, 100_000, MASTER).unwrap();
    assert_eq!(outcomes.len(), 3);
    for outcome in &outcomes {
        assert_outcome(outcome);
    }
}

// ── Figure-level behavior at full scale ──────────────────────────────────────

/// Estimation-error curves at the default scenario, 1000 realizations:
/// selected-path sounding (T=4) beats whole-dictionary sounding (T=6), which
/// beats MMSE (T=6), which beats LS (T=6) at every pilot SNR in
/// {−15, −10, −5, 0} dB; and both proposed curves flatten at high SNR
/// (|NMSE(0) − NMSE(−5)| < 2 dB).
///
/// Every leg is evaluated before asserting, so a failure reports the whole
/// table. Note that the first leg compares T=4 against T=6 under perfect
/// feedback, where both schemes have identical per-entry error power and the
/// averaged error ratio favors the longer gain vector (its norm concentrates
/// harder); see README.md ("Error-curve orderings") for the measured margins.
#[test]
fn criterion_07_error_curve_ordering() {
    let config = RunConfig::default();
    let records = run_nmse_vs_pnr(&config).unwrap();
    let mut violations = Vec::new();
    for &pnr in &[-15.0, -10.0, -5.0, 0.0] {
        let sel = metric(&records, "proposed-t4", pnr);
        let all = metric(&records, "proposed-t6", pnr);
        let mmse = metric(&records, "mmse-t6", pnr);
        let ls = metric(&records, "ls-t6", pnr);
        println!(
            "pnr {pnr:5} dB: proposed-t4 {sel:8.3} proposed-t6 {all:8.3} \
             mmse-t6 {mmse:8.3} ls-t6 {ls:8.3}"
        );
        if sel >= all {
            violations.push(format!(
                "pnr {pnr} dB: proposed-t4 {sel:.3} not below proposed-t6 {all:.3}"
            ));
        }
        if all >= mmse {
            violations.push(format!(
                "pnr {pnr} dB: proposed-t6 {all:.3} not below mmse-t6 {mmse:.3}"
            ));
        }
        if mmse >= ls {
            violations.push(format!(
                "pnr {pnr} dB: mmse-t6 {mmse:.3} not below ls-t6 {ls:.3}"
            ));
        }
    }
    for scheme in ["proposed-t4", "proposed-t6"] {
        let flat = (metric(&records, scheme, 0.0) - metric(&records, scheme, -5.0)).abs();
        println!("{scheme}: |NMSE(0) - NMSE(-5)| = {flat:.3} dB");
        if flat >= 2.0 {
            violations.push(format!(
                "{scheme} does not flatten: |NMSE(0) - NMSE(-5)| = {flat:.3} dB"
            ));
        }
    }
    assert!(
        violations.is_empty(),
        "error-curve claims violated:\n  {}",
        violations.join("\n  ")
    );
}

/// Spectral efficiency against the number of selected paths with perfect
/// selected-gain feedback, 1000 realizations: exhaustive subset ≥ greedy
/// selection ≥ random subset at every count in {2,3,4,5}, and greedy
/// selection with the gain-aware update beats the partial-random scheme.
///
/// Every leg is evaluated before asserting, so a failure reports the whole
/// table. Note that the exhaustive scheme maximizes the converged
/// statistical (angle-only) objective per subset; that objective's subset
/// ranking does not transfer to realized efficiency at this geometry, so
/// the exhaustive-above-greedy legs measure that transfer rather than the
/// search itself (the objective-level dominance of the exhaustive search is
/// pinned by the library tests). See README.md ("Selection orderings").
#[test]
fn criterion_08_path_subset_ordering() {
    let config = RunConfig::default();
    let records = run_se_vs_paths(&config).unwrap();
    let mut violations = Vec::new();
    for &count in &[2.0, 3.0, 4.0, 5.0] {
        let optimal = metric(&records, "optimal-paths", count);
        let selected = metric(&records, "selected-paths", count);
        let random = metric(&records, "random-paths", count);
        let partial = metric(&records, "partial-random", count);
        println!(
            "paths {count}: optimal {optimal:.4} selected {selected:.4} \
             random {random:.4} partial-random {partial:.4}"
        );
        if optimal < selected {
            violations.push(format!(
                "paths {count}: exhaustive subset {optimal:.4} below greedy {selected:.4}"
            ));
        }
        if selected < random {
            violations.push(format!(
                "paths {count}: greedy selection {selected:.4} below random {random:.4}"
            ));
        }
        if selected <= partial {
            violations.push(format!(
                "paths {count}: greedy selection {selected:.4} not above \
                 partial-random {partial:.4}"
            ));
        }
    }
    assert!(
        violations.is_empty(),
        "path-subset ordering claims violated:\n  {}",
        violations.join("\n  ")
    );
}

/// Quantized-feedback gaps at pilot SNR −15 dB, 1000 realizations: across
/// data SNR in {−10, −5, 0, 5, 10} dB, whole-vector feedback at 16 bits
/// stays within 0.4 bps/Hz of the perfect whole-vector reference, and
/// selected-path feedback at 8 bits stays within 0.4 bps/Hz of the perfect
/// selected-gain reference.
#[test]
fn criterion_09_feedback_gap_bounds() {
    let config = RunConfig {
        schemes: vec![
            "perfect-pgi".into(),
            "proposed-t6-b16".into(),
            "perfect-dpgi".into(),
            "proposed-t4-b8".into(),
        ],
        ..RunConfig::default()
    };
    let records = run_se_vs_dnr(&config).unwrap();
    for &dnr in &[-10.0, -5.0, 0.0, 5.0, 10.0] {
        let whole_gap =
            (metric(&records, "perfect-pgi", dnr) - metric(&records, "proposed-t6-b16", dnr)).abs();
        let selected_gap =
            (metric(&records, "perfect-dpgi", dnr) - metric(&records, "proposed-t4-b8", dnr)).abs();
        println!("dnr {dnr:5} dB: whole-vector gap {whole_gap:.4} selected gap {selected_gap:.4}");
        assert!(
            whole_gap <= 0.4,
            "whole-vector feedback gap {whole_gap:.4} bps/Hz exceeds 0.4 at dnr {dnr} dB"
        );
        assert!(
            selected_gap <= 0.4,
            "selected-path feedback gap {selected_gap:.4} bps/Hz exceeds 0.4 at dnr {dnr} dB"
        );
    }
}

// ── Determinism ──────────────────────────────────────────────────────────────

/// Every sweep and the validation suite produce byte-identical CSV when
/// rerun with the same config and seed, regardless of worker count.
#[test]
fn criterion_10_worker_count_determinism() {
    let base = RunConfig {
        realizations: 8,
        validation_instances: 2,
        validation_draws: 20_000,
        validation_probes: 8,
        ..RunConfig::default()
    };
    let with_workers = |workers: usize| RunConfig {
        workers,
        ..base.clone()
    };

    type Runner = fn(&RunConfig) -> Result<Vec<MetricRecord>, SimError>;
    let runners: [(&str, Runner); 5] = [
        ("nmse-pnr", run_nmse_vs_pnr),
        ("nmse-bits", run_nmse_vs_bits),
        ("se-paths", run_se_vs_paths),
        ("se-bits", run_se_vs_bits),
        ("se-dnr", run_se_vs_dnr),
    ];
    for (name, runner) in runners {
        let serial = metrics_csv(&runner(&with_workers(1)).unwrap());
        let pooled = metrics_csv(&runner(&with_workers(3)).unwrap());
        let rerun = metrics_csv(&runner(&with_workers(3)).unwrap());
        assert!(serial == pooled, "{name}: 1-worker and 3-worker CSV differ");
        assert!(pooled == rerun, "{name}: repeated 3-worker runs differ");
        println!("{name}: byte-identical across worker counts and reruns");
    }

    let first = run_validation(&with_workers(1)).unwrap().to_csv();
    let second = run_validation(&with_workers(3)).unwrap().to_csv();
    assert!(
        first == second,
        "validation CSV differs across worker counts"
    );
    println!("validate: byte-identical across worker counts");
}

/// Path selection depends only on the steering geometry: realizations that
/// share angles but have independently resampled gains select identical
/// path sets at every target count.
#[test]
fn criterion_11_selection_depends_only_on_angles() {
    let geometry = RunConfig::default().geometry();
    let opts = AlternationOptions::default();
    for seed in 0..5u64 {
        let mut rng = RandomSource::derive(MASTER, &[11, seed]);
        let angles = channel::sample_angles(geometry, &mut rng);
        let first = build_realization(
            geometry,
            angles.clone(),
            channel::sample_gains(geometry, &mut rng),
        );
        let second = build_realization(geometry, angles, channel::sample_gains(geometry, &mut rng));
        for target in [2usize, 3, 4, 5] {
            let (sel_first, _) = selection::select_paths(&first, target, &opts).unwrap();
            let (sel_second, _) = selection::select_paths(&second, target, &opts).unwrap();
            assert_eq!(
                sel_first, sel_second,
                "selection changed under resampled gains (seed {seed}, target {target})"
            );
        }
    }
    println!("selection invariant under gain resampling for 5 seeds x 4 target counts");
}
