//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (run with `--nocapture` to see them
//! on success).

use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use rand_core::{RngCore, SeedableRng};

use biphoton::bell::{self, ChInputs};
use biphoton::cli;
use biphoton::closed_form;
use biphoton::events;
use biphoton::hardy::{self, HardyConfiguration};
use biphoton::ifm;
use biphoton::lhv;
use biphoton::optics::{self, OpticalSetting, SettingPair, Side1Outcome, Side2Outcome};

const TOL: f64 = 1e-12;

fn unit(rng: &mut rand_chacha::ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xACCE01);
    let mut max_diff = 0.0f64;
    for _ in 0..1000 {
        let s1 = OpticalSetting::side1(20.0 * unit(&mut rng) - 10.0, unit(&mut rng)).unwrap();
        let s2 =
            OpticalSetting::side2(20.0 * unit(&mut rng) - 10.0, unit(&mut rng), unit(&mut rng))
                .unwrap();
        let oracle = optics::joint_table(&s1, &s2);
        let closed = closed_form::joint_probability_table(&s1, &s2);
        for &o1 in &Side1Outcome::ALL {
            for &o2 in &Side2Outcome::ALL {
                let diff = (oracle.probability(o1, o2) - closed.probability(o1, o2)).abs();
                max_diff = max_diff.max(diff);
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        max_diff <= TOL,
        "max propagation/closed-form gap {max_diff:e}"
    );
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "1000-tuple equivalence sweep took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 1 PASS: oracle equivalence over 1000 tuples, max gap {max_diff:.3e}, {elapsed:?}"
    );
}

#[test]
fn criterion_2_extreme_point() {
    let solution = hardy::solve(&HardyConfiguration::diagonal(1.0).unwrap()).unwrap();
    assert!((solution.hardy_probability - 0.5).abs() <= TOL);
    assert!(solution.u.abs() <= TOL);
    assert!((solution.configuration.u_prime - 1.0).abs() <= TOL);
    assert!((solution.t1_prime - 1.0).abs() <= TOL);
    assert!((solution.r2_prime - 1.0).abs() <= TOL);
    println!(
        "ACCEPTANCE 2 PASS: q = 1 gives target probability {} at u = {}",
        solution.hardy_probability, solution.u
    );
}

#[test]
fn criterion_3_standard_setup_saturation() {
    for (n1, n2, n3) in [(1i64, 1i64, 1i64), (3, 1, -1), (5, -3, 7)] {
        let report = hardy::check_standard_infeasibility(n1, n2, n3).unwrap();
        for e in report.correlations.values() {
            assert!(
                (e + 1.0).abs() <= TOL,
                "correlation {e} at ({n1},{n2},{n3})"
            );
        }
        assert!((report.chsh.lhs - 2.0).abs() <= TOL);
        assert!(!report.chsh.violated);
        assert!(report.target_coincidence.abs() <= TOL);
    }

    // On the feasibility boundary the absorber is fully transmitting and the
    // target probability collapses to zero.
    for i in 1..40 {
        let a = 0.2 + 0.79 * i as f64 / 40.0;
        let b = (1.0 - a * a).sqrt();
        if b <= 0.0 {
            continue;
        }
        let solution = hardy::solve(&HardyConfiguration {
            t1_prime: a,
            r2_prime: b,
            u_prime: 1.0,
            phi0: 0.0,
            n1: 1,
            n2: 1,
            n3: 1,
        })
        .unwrap();
        assert!(
            (solution.u - 1.0).abs() <= 1e-7,
            "u = {} off boundary",
            solution.u
        );
        assert!(
            solution.hardy_probability <= TOL,
            "boundary target probability {}",
            solution.hardy_probability
        );
    }
    println!("ACCEPTANCE 3 PASS: standard setup saturates the correlation bound (|S| = 2), boundary target probability 0");
}

#[test]
fn criterion_4_postselection_contrast() {
    // Extreme point: postselected margin +1/2, full-ensemble margin 0.
    let optimum = hardy::solve(&HardyConfiguration::diagonal(1.0).unwrap()).unwrap();
    let audit = cli::audit_solution(&optimum).unwrap();
    assert!((audit.ch_postselected.margin - 0.5).abs() <= TOL);
    assert!(audit.ch_postselected.violated);
    assert!(audit.ch_total.margin.abs() <= TOL);
    assert!(!audit.ch_total.violated);

    // q^2 = 3/4: +1/8 postselected, -5/24 full-ensemble, via closed form,
    // amplitude propagation, and Monte Carlo.
    let q = (0.75f64).sqrt();
    let solution = hardy::solve(&HardyConfiguration::diagonal(q).unwrap()).unwrap();
    let audit = cli::audit_solution(&solution).unwrap();
    assert!((audit.ch_postselected.margin - 0.125).abs() <= TOL);
    assert!((audit.ch_total.margin + 5.0 / 24.0).abs() <= TOL);

    let oracle_tables = solution.oracle_tables();
    let inputs = ChInputs::from_tables(&oracle_tables, "amplitude-propagation");
    let p_abs = bell::absorption_probability(&oracle_tables[0]);
    let oracle_post = bell::ch_postselected(&inputs).unwrap();
    let oracle_total = bell::ch_total(&inputs, p_abs).unwrap();
    assert!((oracle_post.margin - 0.125).abs() <= TOL);
    assert!((oracle_total.margin + 5.0 / 24.0).abs() <= TOL);

    let events = events::sample_events(&solution, 200_000, 0xC4, [1.0; 4]).unwrap();
    let empirical = events::empirical_audit(&events).unwrap();
    let se_post = empirical.postselected_ch.margin_std_error;
    let se_total = empirical.ch_total.margin_std_error;
    assert!((empirical.postselected_ch.report.margin - 0.125).abs() <= 4.0 * se_post);
    assert!((empirical.ch_total.report.margin + 5.0 / 24.0).abs() <= 4.0 * se_total);
    println!(
        "ACCEPTANCE 4 PASS: postselected margin +0.5 vs full-ensemble 0 at the extreme point; \
         +1/8 vs -5/24 at q^2 = 3/4 (closed form, propagation, Monte Carlo {:.5}/{:.5})",
        empirical.postselected_ch.report.margin, empirical.ch_total.report.margin
    );
}

#[test]
fn criterion_5_no_full_ensemble_violation() {
    let start = Instant::now();
    let rows = cli::sweep_feasible(110).unwrap();
    assert!(rows.len() >= 10_000, "only {} grid points", rows.len());
    let mut max_total_margin = f64::NEG_INFINITY;
    let mut max_simplified_lhs = f64::NEG_INFINITY;
    for row in &rows {
        max_total_margin = max_total_margin.max(row.ch_total_margin);
        if row.u < 1.0 {
            let report = bell::ch_simplified_bound(1.0, row.t1_prime, row.r2_prime, row.u).unwrap();
            max_simplified_lhs = max_simplified_lhs.max(report.lhs);
            assert!(!report.violated);
        }
    }
    let elapsed = start.elapsed();
    assert!(
        max_total_margin <= TOL,
        "full-ensemble margin {max_total_margin:e} positive somewhere"
    );
    assert!(max_simplified_lhs <= 1.0 + TOL);
    assert!(elapsed.as_secs_f64() < 10.0, "sweep took {elapsed:?}");
    println!(
        "ACCEPTANCE 5 PASS: {} feasible points, max full-ensemble margin {:.3e}, max simplified lhs {:.6}, {:?}",
        rows.len(),
        max_total_margin,
        max_simplified_lhs,
        elapsed
    );
}

#[test]
fn criterion_6_lhv_exhaustion() {
    let report = lhv::verify_ch_total_all();
    assert_eq!(report.vertices.len(), 36);
    assert!(report.max_ch_total_margin <= TOL);
    assert!(report.max_ch_total_margin >= -TOL, "bound is tight at 0");

    let mut max_post = f64::NEG_INFINITY;
    for audit in &report.vertices {
        max_post = max_post.max(audit.postselected_margin);
        if audit.postselected_margin > TOL {
            assert_eq!(
                audit.strategy.response2(false),
                Side2Outcome::A,
                "non-absorbing strategy broke the postselected bound"
            );
        }
    }
    assert!(
        (max_post - 1.0).abs() <= TOL,
        "max postselected margin {max_post}"
    );

    let (strategy, exhibit) = lhv::find_postselected_violation();
    assert_eq!(strategy.response2(false), Side2Outcome::A);
    assert!((exhibit.margin - 1.0).abs() <= TOL);
    println!(
        "ACCEPTANCE 6 PASS: 36 strategies all satisfy the full-ensemble bound (max margin {:.1e}); \
         postselected margin reaches {} and only absorbing strategies exceed 0",
        report.max_ch_total_margin, exhibit.margin
    );
}

#[test]
fn criterion_7_monte_carlo_fidelity() {
    let start = Instant::now();
    let q = (0.75f64).sqrt();
    let solution = hardy::solve(&HardyConfiguration::diagonal(q).unwrap()).unwrap();
    let tables = solution.tables();
    let n = 1_000_000u64;
    let seed = 0x5EED;

    let events = events::sample_events(&solution, n, seed, [1.0; 4]).unwrap();
    let estimates = events::estimate(&events, false).unwrap();
    for (k, pair) in SettingPair::ALL.iter().enumerate() {
        let est = &estimates[pair];
        let trials = est.trials as f64;
        for &o1 in &Side1Outcome::ALL {
            for &o2 in &Side2Outcome::ALL {
                let p = tables[k].probability(o1, o2);
                let observed = est.frequencies.probability(o1, o2);
                let band = 4.0 * (p * (1.0 - p) / trials).sqrt();
                assert!(
                    (observed - p).abs() <= band,
                    "frequency {observed} for ({o1},{o2}) in {pair} outside {p} +/- {band}"
                );
            }
        }
        // Postselection acceptance rate tracks the survival fraction.
        let acceptance = est.accepted as f64 / trials;
        let survival = solution.subensemble_fraction;
        if pair.side2_primed() {
            assert!((acceptance - 1.0).abs() <= TOL);
        } else {
            let band = 4.0 * (survival * (1.0 - survival) / trials).sqrt();
            assert!((acceptance - survival).abs() <= band);
        }
    }

    let audit = events::empirical_audit(&events).unwrap();
    assert!(audit.postselected_ch.report.margin > 0.0);
    assert!(audit.ch_total.report.margin <= 0.0);

    // Byte-identical replay.
    let replay = events::sample_events(&solution, n, seed, [1.0; 4]).unwrap();
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    events::write_events_csv(&events, &mut csv_a).unwrap();
    events::write_events_csv(&replay, &mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "run took {elapsed:?}");
    println!(
        "ACCEPTANCE 7 PASS: 1e6 trials within 4-sigma everywhere, empirical margins {:.5} / {:.5}, byte-identical replay, {:?}",
        audit.postselected_ch.report.margin, audit.ch_total.report.margin, elapsed
    );
}

#[test]
fn criterion_8_interaction_free_measurement() {
    // Transparent object: dark coincidence identically zero.
    for r2 in [0.0, 0.25, 0.5, 0.9, 1.0] {
        assert_eq!(
            ifm::dark_coincidence_prob(1.0, r2)
                .unwrap()
                .limiting_value(),
            0.0
        );
    }

    // Opaque object: monotone climb towards the supremum 1/2 along r2.
    let mut previous = -1.0;
    let mut last_value = 0.0;
    for j in 0..200 {
        let r2 = j as f64 / 200.0;
        let p = ifm::dark_coincidence_prob(0.0, r2)
            .unwrap()
            .limiting_value();
        assert!(p >= previous);
        previous = p;
        last_value = p;
    }
    assert!(last_value > 0.49);

    let report = ifm::ifm_efficiency(0.0, FRAC_1_SQRT_2).unwrap();
    assert!((report.efficiency.limiting_value() - 1.0 / 3.0).abs() <= TOL);

    let supremum = ifm::ifm_efficiency(0.0, 1.0).unwrap();
    assert!(supremum.efficiency.is_supremum());
    assert!((supremum.efficiency.limiting_value() - 0.5).abs() <= TOL);

    // Side-1 singles are insensitive to the object.
    for i in 0..=20 {
        let u = i as f64 / 20.0;
        for &r2 in &[0.2, 0.6, 0.95] {
            let (s1, s2) = ifm::balanced_settings(u, r2).unwrap();
            let table = optics::joint_table(&s1, &s2);
            assert!((table.side1_marginal(Side1Outcome::L) - 0.5).abs() <= TOL);
            assert!((table.side1_marginal(Side1Outcome::U) - 0.5).abs() <= TOL);
        }
    }
    println!(
        "ACCEPTANCE 8 PASS: dark coincidence 0 at u = 1, climbs to {last_value:.4} towards 1/2; \
         eta(0, 1/sqrt(2)) = 1/3, supremum 1/2 flagged; side-1 singles pinned at 1/2"
    );
}

#[test]
fn criterion_9_normalisation_contrast() {
    // Unnormalised correlations never break the bound anywhere feasible.
    let mut max_unnormalised = f64::NEG_INFINITY;
    for i in 1..=100 {
        let a = i as f64 / 100.0;
        let b_min = (1.0 - a * a).max(0.0).sqrt();
        for j in 0..100 {
            let b = (b_min + (1.0 - b_min) * j as f64 / 99.0).min(1.0);
            if b <= 0.0 {
                continue;
            }
            let solution = hardy::solve(&HardyConfiguration {
                t1_prime: a,
                r2_prime: b,
                u_prime: 1.0,
                phi0: 0.0,
                n1: 1,
                n2: 1,
                n3: 1,
            })
            .unwrap();
            let (_, report) = bell::chsh(&solution.tables(), false).unwrap();
            max_unnormalised = max_unnormalised.max(report.lhs);
            assert!(
                report.lhs <= 2.0 + TOL,
                "unnormalised |S| = {} at ({a}, {b})",
                report.lhs
            );
        }
    }

    // Rescaled to the drained-source intensity, the q^2 = 3/4 point
    // overshoots the bound by exactly 1/4 (frozen regression constant).
    let q = (0.75f64).sqrt();
    let solution = hardy::solve(&HardyConfiguration::diagonal(q).unwrap()).unwrap();
    let (_, normalised) = bell::chsh(&solution.tables(), true).unwrap();
    assert!(normalised.violated);
    assert!(
        (normalised.margin - 0.25).abs() <= TOL,
        "normalised margin {} != 1/4",
        normalised.margin
    );
    println!(
        "ACCEPTANCE 9 PASS: unnormalised |S| <= 2 across the feasible region (max {:.12}); \
         normalised |S| = {:.12} at q^2 = 3/4, margin +1/4",
        max_unnormalised, normalised.lhs
    );
}
