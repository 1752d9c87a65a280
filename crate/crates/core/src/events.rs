//! Seeded Monte Carlo event generation and empirical audit.
//!
//! Each trial independently draws one of the four configurations (weighted)
//! and then a joint outcome from that configuration's exact probability
//! table. Draws are derived from a counter-based scheme: one ChaCha12 stream
//! per trial index, keyed by the run seed. The stream derivation makes the
//! record a pure function of (seed, trial), so replays are byte-identical on
//! any host and trials may be generated in any order or in parallel without
//! changing the record.
//!
//! The empirical pipeline mirrors the analytic one: frequencies are counted
//! relative to all emitted pairs of a configuration, and postselection
//! merely discards absorbed trials from the counts without rescaling. That
//! matches the ratio convention of the probability inequalities, so the
//! empirical margins estimate the analytic ones directly.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

use crate::bell::{self, ChInputs, InequalityReport};
use crate::error::{Error, Result};
use crate::hardy::HardySolution;
use crate::optics::{JointProbabilityTable, SettingPair, Side1Outcome, Side2Outcome};

/// Identifier of the draw scheme, recorded in run summaries.
pub const RNG_ALGORITHM_ID: &str = "chacha12/stream-per-trial/v1";

/// Half-width of reported confidence intervals, in standard errors.
pub const CI_SIGMAS: f64 = 4.0;

/// One simulated coincidence-detection record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub trial: u64,
    pub pair: SettingPair,
    pub outcome1: Side1Outcome,
    pub outcome2: Side2Outcome,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

fn unit_f64(rng: &mut ChaCha12Rng) -> f64 {
    // 53-bit mantissa draw in [0, 1).
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

const OUTCOME_ORDER: [(Side1Outcome, Side2Outcome); 6] = [
    (Side1Outcome::L, Side2Outcome::L),
    (Side1Outcome::L, Side2Outcome::U),
    (Side1Outcome::L, Side2Outcome::A),
    (Side1Outcome::U, Side2Outcome::L),
    (Side1Outcome::U, Side2Outcome::U),
    (Side1Outcome::U, Side2Outcome::A),
];

fn draw_outcome(table: &JointProbabilityTable, x: f64) -> (Side1Outcome, Side2Outcome) {
    let mut cumulative = 0.0;
    for &(o1, o2) in &OUTCOME_ORDER {
        cumulative += table.probability(o1, o2);
        if x < cumulative {
            return (o1, o2);
        }
    }
    // x landed in the rounding sliver above the accumulated total.
    *OUTCOME_ORDER.last().unwrap()
}

/// Draws `n` trials from explicit configuration tables (in
/// [`SettingPair::ALL`] order). Weights need not be normalized; they must
/// be nonnegative with a positive sum.
pub fn sample_events_from_tables(
    tables: &[JointProbabilityTable; 4],
    n: u64,
    seed: u64,
    weights: [f64; 4],
) -> Result<Vec<EventRecord>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "trial count must be positive".into(),
        ));
    }
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::InvalidParameter(
            "setting weights must be nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(
            "setting weights must have a positive sum".into(),
        ));
    }
    for table in tables {
        table.check(1e-9)?;
    }

    let cumulative_weights: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect();

    let mut events = Vec::with_capacity(n as usize);
    for trial in 0..n {
        let mut rng = trial_rng(seed, trial);
        let x_pair = unit_f64(&mut rng);
        let k = cumulative_weights
            .iter()
            .position(|&c| x_pair < c)
            .unwrap_or(3);
        let pair = SettingPair::ALL[k];
        let (outcome1, outcome2) = draw_outcome(&tables[k], unit_f64(&mut rng));
        events.push(EventRecord {
            trial,
            pair,
            outcome1,
            outcome2,
        });
    }
    Ok(events)
}

/// Draws `n` trials from a solved configuration's closed-form tables.
pub fn sample_events(
    solution: &HardySolution,
    n: u64,
    seed: u64,
    weights: [f64; 4],
) -> Result<Vec<EventRecord>> {
    sample_events_from_tables(&solution.tables(), n, seed, weights)
}

/// Counted frequencies for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalEstimate {
    pub pair: SettingPair,
    /// Emitted pairs for this configuration, absorbed trials included.
    pub trials: u64,
    /// Trials surviving postselection (outcome2 != A2).
    pub accepted: u64,
    /// Counts in [`JointProbabilityTable`] field order; absorption rows are
    /// zeroed when postselected.
    pub counts: BTreeMap<String, u64>,
    /// Relative frequencies count / trials. Postselection does not rescale
    /// the denominator.
    pub frequencies: JointProbabilityTable,
    /// Binomial standard errors sqrt(p (1 - p) / trials) per entry.
    pub std_errors: JointProbabilityTable,
    pub postselected: bool,
}

fn outcome_key(o1: Side1Outcome, o2: Side2Outcome) -> String {
    format!("{o1}-{o2}")
}

/// Per-configuration counts and frequencies. With `postselect`, absorbed
/// records are discarded before counting; denominators keep every emitted
/// pair either way. Fails on an empty record.
pub fn estimate(
    events: &[EventRecord],
    postselect: bool,
) -> Result<BTreeMap<SettingPair, EmpiricalEstimate>> {
    if events.is_empty() {
        return Err(Error::InsufficientData("no events to estimate from".into()));
    }
    let mut counts: BTreeMap<SettingPair, BTreeMap<(Side1Outcome, Side2Outcome), u64>> =
        BTreeMap::new();
    let mut trials: BTreeMap<SettingPair, u64> = BTreeMap::new();
    let mut survivors: BTreeMap<SettingPair, u64> = BTreeMap::new();
    for event in events {
        *trials.entry(event.pair).or_default() += 1;
        if event.outcome2 != Side2Outcome::A {
            *survivors.entry(event.pair).or_default() += 1;
        } else if postselect {
            continue;
        }
        *counts
            .entry(event.pair)
            .or_default()
            .entry((event.outcome1, event.outcome2))
            .or_default() += 1;
    }

    let mut out = BTreeMap::new();
    for (&pair, &n) in &trials {
        let pair_counts = counts.get(&pair).cloned().unwrap_or_default();
        let count_of = |o1, o2| pair_counts.get(&(o1, o2)).copied().unwrap_or(0);
        let freq_of = |o1, o2| count_of(o1, o2) as f64 / n as f64;
        let se_of = |o1, o2| {
            let p = freq_of(o1, o2);
            (p * (1.0 - p) / n as f64).sqrt()
        };
        let build = |f: &dyn Fn(Side1Outcome, Side2Outcome) -> f64| JointProbabilityTable {
            p_l1_l2: f(Side1Outcome::L, Side2Outcome::L),
            p_l1_u2: f(Side1Outcome::L, Side2Outcome::U),
            p_l1_a2: f(Side1Outcome::L, Side2Outcome::A),
            p_u1_l2: f(Side1Outcome::U, Side2Outcome::L),
            p_u1_u2: f(Side1Outcome::U, Side2Outcome::U),
            p_u1_a2: f(Side1Outcome::U, Side2Outcome::A),
        };
        let accepted = survivors.get(&pair).copied().unwrap_or(0);
        out.insert(
            pair,
            EmpiricalEstimate {
                pair,
                trials: n,
                accepted,
                counts: OUTCOME_ORDER
                    .iter()
                    .map(|&(o1, o2)| (outcome_key(o1, o2), count_of(o1, o2)))
                    .collect(),
                frequencies: build(&freq_of),
                std_errors: build(&se_of),
                postselected: postselect,
            },
        );
    }
    Ok(out)
}

/// An inequality report together with the sampling uncertainty of its
/// margin.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalReport {
    #[serde(flatten)]
    pub report: InequalityReport,
    pub margin_std_error: f64,
    /// margin -/+ [`CI_SIGMAS`] standard errors.
    pub margin_ci: (f64, f64),
}

/// Both audits of a sampled record: the postselected bound and the
/// full-ensemble bound, with propagated standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalAudit {
    pub postselected_ch: EmpiricalReport,
    pub ch_total: EmpiricalReport,
}

fn variance_of(est: &EmpiricalEstimate, o1: Side1Outcome, o2: Side2Outcome) -> f64 {
    let se = est.std_errors.probability(o1, o2);
    se * se
}

/// Runs both audits on a sampled record. Requires events in all four
/// configurations.
pub fn empirical_audit(events: &[EventRecord]) -> Result<EmpiricalAudit> {
    let estimates = estimate(events, false)?;
    for pair in SettingPair::ALL {
        if !estimates.contains_key(&pair) {
            return Err(Error::InsufficientData(format!(
                "no events for configuration {pair}"
            )));
        }
    }
    let est = |pair: SettingPair| &estimates[&pair];
    let freq = |pair: SettingPair, o1, o2| est(pair).frequencies.probability(o1, o2);

    let inputs = ChInputs::new(
        freq(SettingPair::BothPrimed, Side1Outcome::U, Side2Outcome::U),
        freq(SettingPair::NeitherPrimed, Side1Outcome::L, Side2Outcome::L),
        freq(SettingPair::Side2Primed, Side1Outcome::U, Side2Outcome::U),
        freq(SettingPair::Side1Primed, Side1Outcome::U, Side2Outcome::U),
        "monte-carlo",
    )?;
    let p_abs = est(SettingPair::NeitherPrimed)
        .frequencies
        .side2_marginal(Side2Outcome::A);

    // The four CH terms come from four disjoint subsamples and are
    // independent; P(L1,L2) and P(A2) share the first subsample, so their
    // multinomial covariance -p q / n enters the total-bound variance.
    let base_variance = variance_of(
        est(SettingPair::BothPrimed),
        Side1Outcome::U,
        Side2Outcome::U,
    ) + variance_of(
        est(SettingPair::NeitherPrimed),
        Side1Outcome::L,
        Side2Outcome::L,
    ) + variance_of(
        est(SettingPair::Side2Primed),
        Side1Outcome::U,
        Side2Outcome::U,
    ) + variance_of(
        est(SettingPair::Side1Primed),
        Side1Outcome::U,
        Side2Outcome::U,
    );

    let n_first = est(SettingPair::NeitherPrimed).trials as f64;
    let abs_variance = p_abs * (1.0 - p_abs) / n_first;
    let covariance = -inputs.p_ll * p_abs / n_first;
    let total_variance = base_variance + abs_variance + 2.0 * covariance;

    let wrap = |report: InequalityReport, variance: f64| {
        let se = variance.max(0.0).sqrt();
        EmpiricalReport {
            margin_std_error: se,
            margin_ci: (
                report.margin - CI_SIGMAS * se,
                report.margin + CI_SIGMAS * se,
            ),
            report,
        }
    };

    Ok(EmpiricalAudit {
        postselected_ch: wrap(bell::ch_postselected(&inputs)?, base_variance),
        ch_total: wrap(bell::ch_total(&inputs, p_abs)?, total_variance),
    })
}

/// Event log serialization: one row per trial, fixed column order.
pub fn write_events_csv<W: Write>(events: &[EventRecord], mut writer: W) -> Result<()> {
    writeln!(writer, "trial,pair,outcome1,outcome2")?;
    for e in events {
        writeln!(
            writer,
            "{},{},{},{}",
            e.trial, e.pair, e.outcome1, e.outcome2
        )?;
    }
    Ok(())
}

/// Machine-readable run summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub rng: &'static str,
    pub trials: u64,
    pub weights: [f64; 4],
    pub estimates: BTreeMap<String, EmpiricalEstimate>,
    pub postselected_estimates: BTreeMap<String, EmpiricalEstimate>,
    pub audit: EmpiricalAudit,
}

/// Samples, estimates, and audits in one step.
pub fn run_summary(
    tables: &[JointProbabilityTable; 4],
    n: u64,
    seed: u64,
    weights: [f64; 4],
) -> Result<(Vec<EventRecord>, RunSummary)> {
    let events = sample_events_from_tables(tables, n, seed, weights)?;
    let keyed = |m: BTreeMap<SettingPair, EmpiricalEstimate>| {
        m.into_iter()
            .map(|(k, v)| (k.label().to_string(), v))
            .collect()
    };
    let summary = RunSummary {
        seed,
        rng: RNG_ALGORITHM_ID,
        trials: n,
        weights,
        estimates: keyed(estimate(&events, false)?),
        postselected_estimates: keyed(estimate(&events, true)?),
        audit: empirical_audit(&events)?,
    };
    Ok((events, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::{self, HardyConfiguration};
    use crate::lhv;

    const UNIFORM: [f64; 4] = [1.0, 1.0, 1.0, 1.0];

    #[test]
    fn determinism() {
        let sol = hardy::solve(&HardyConfiguration::diagonal(0.9).unwrap()).unwrap();
        let a = sample_events(&sol, 2000, 7, UNIFORM).unwrap();
        let b = sample_events(&sol, 2000, 7, UNIFORM).unwrap();
        assert_eq!(a, b);
        let c = sample_events(&sol, 2000, 8, UNIFORM).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn prefix_stability() {
        // Per-trial stream derivation: a longer run extends a shorter one.
        let sol = hardy::solve(&HardyConfiguration::diagonal(0.9).unwrap()).unwrap();
        let short = sample_events(&sol, 100, 3, UNIFORM).unwrap();
        let long = sample_events(&sol, 200, 3, UNIFORM).unwrap();
        assert_eq!(&long[..100], &short[..]);
    }

    #[test]
    fn input_validation() {
        let sol = hardy::solve(&HardyConfiguration::diagonal(0.9).unwrap()).unwrap();
        assert!(sample_events(&sol, 0, 1, UNIFORM).is_err());
        assert!(sample_events(&sol, 10, 1, [0.0; 4]).is_err());
        assert!(sample_events(&sol, 10, 1, [1.0, -1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn point_mass_frequencies_are_exact() {
        let (strategy, _) = lhv::find_postselected_violation();
        let tables = lhv::strategy_tables(&strategy);
        let events = sample_events_from_tables(&tables, 400, 5, UNIFORM).unwrap();
        let estimates = estimate(&events, false).unwrap();
        for (pair, est) in &estimates {
            let (o1, o2) = strategy.outcome(*pair);
            assert_eq!(est.frequencies.probability(o1, o2), 1.0);
            assert_eq!(est.frequencies.total(), 1.0);
        }
    }

    #[test]
    fn extreme_point_frequencies() {
        // At the extreme point the target coincidence and the absorption
        // marginal both sit at 1/2.
        let sol = hardy::solve(&HardyConfiguration::diagonal(1.0).unwrap()).unwrap();
        let events = sample_events(&sol, 200_000, 17, UNIFORM).unwrap();
        let estimates = estimate(&events, false).unwrap();

        let target = &estimates[&SettingPair::BothPrimed];
        let band = 4.0 * (0.25 / target.trials as f64).sqrt();
        assert!((target.frequencies.p_u1_u2 - 0.5).abs() <= band);

        let plain = &estimates[&SettingPair::NeitherPrimed];
        let band = 4.0 * (0.25 / plain.trials as f64).sqrt();
        assert!((plain.frequencies.side2_marginal(Side2Outcome::A) - 0.5).abs() <= band);

        let audit = empirical_audit(&events).unwrap();
        assert!(audit.postselected_ch.report.violated);
        assert!(!audit.ch_total.report.violated);
    }

    #[test]
    fn standard_run_saturates_empirically() {
        // Boundary configuration: u = 1, no absorption, all correlations
        // near -1, so the correlation bound is met with |S| close to 2.
        let sol = hardy::solve(
            &HardyConfiguration::diagonal(std::f64::consts::FRAC_1_SQRT_2).unwrap(),
        )
        .unwrap();
        let events = sample_events(&sol, 200_000, 23, UNIFORM).unwrap();
        let audit = empirical_audit(&events).unwrap();
        assert!(!audit.postselected_ch.report.violated);
        assert!(!audit.ch_total.report.violated);

        let estimates = estimate(&events, false).unwrap();
        let tables = SettingPair::ALL.map(|pair| estimates[&pair].frequencies);
        let (correlations, report) = crate::bell::chsh(&tables, false).unwrap();
        for e in correlations.values() {
            assert!((e + 1.0).abs() < 0.02, "correlation {e} far from -1");
        }
        assert!((report.lhs - 2.0).abs() < 0.02);
    }

    #[test]
    fn postselection_drops_absorbed_counts_only() {
        let sol = hardy::solve(&HardyConfiguration::diagonal(0.9).unwrap()).unwrap();
        let events = sample_events(&sol, 20_000, 11, UNIFORM).unwrap();
        let full = estimate(&events, false).unwrap();
        let post = estimate(&events, true).unwrap();
        for pair in SettingPair::ALL {
            let f = &full[&pair];
            let p = &post[&pair];
            assert_eq!(f.trials, p.trials);
            assert_eq!(p.frequencies.side2_marginal(Side2Outcome::A), 0.0);
            // Non-absorption entries are identical: no rescaling happened.
            assert_eq!(f.frequencies.p_u1_u2, p.frequencies.p_u1_u2);
            assert_eq!(f.frequencies.p_l1_l2, p.frequencies.p_l1_l2);
            assert_eq!(f.accepted, p.accepted);
        }
    }

    #[test]
    fn empty_and_partial_records_are_rejected() {
        assert!(matches!(
            estimate(&[], false),
            Err(Error::InsufficientData(_))
        ));
        let sol = hardy::solve(&HardyConfiguration::diagonal(0.9).unwrap()).unwrap();
        // Weights that starve three configurations.
        let events = sample_events(&sol, 50, 2, [1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            empirical_audit(&events),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn csv_shape() {
        let sol = hardy::solve(&HardyConfiguration::diagonal(1.0).unwrap()).unwrap();
        let events = sample_events(&sol, 3, 1, UNIFORM).unwrap();
        let mut buf = Vec::new();
        write_events_csv(&events, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("trial,pair,outcome1,outcome2"));
        assert_eq!(lines.count(), 3);
    }

    #[test]
    fn frequencies_track_the_tables_across_seeds() {
        // Binomial consistency at 5 sigma across independent seeds.
        let sol = hardy::solve(&HardyConfiguration::diagonal((0.75f64).sqrt()).unwrap()).unwrap();
        let tables = sol.tables();
        for seed in 0..10u64 {
            let events = sample_events(&sol, 100_000, seed, UNIFORM).unwrap();
            let estimates = estimate(&events, false).unwrap();
            for (k, pair) in SettingPair::ALL.iter().enumerate() {
                let est = &estimates[pair];
                let n = est.trials as f64;
                for o1 in crate::optics::Side1Outcome::ALL {
                    for o2 in Side2Outcome::ALL {
                        let p = tables[k].probability(o1, o2);
                        let band = 5.0 * (p * (1.0 - p) / n).sqrt();
                        let observed = est.frequencies.probability(o1, o2);
                        assert!(
                            (observed - p).abs() <= band,
                            "seed {seed}, {pair}, ({o1},{o2}): {observed} vs {p} +/- {band}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn sampled_lhv_violation_shows_up_empirically() {
        let (strategy, _) = lhv::find_postselected_violation();
        let tables = lhv::strategy_tables(&strategy);
        let events = sample_events_from_tables(&tables, 4000, 13, UNIFORM).unwrap();
        let audit = empirical_audit(&events).unwrap();
        assert!((audit.postselected_ch.report.margin - 1.0).abs() < 1e-12);
        assert!(audit.ch_total.report.margin <= 1e-12);
    }
}
