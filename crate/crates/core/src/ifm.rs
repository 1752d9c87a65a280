//! Interaction-free detection of the absorber.
//!
//! Run the apparatus in the (phi1', phi2) configuration with the phase
//! difference an odd multiple of pi and the splitters balanced so that
//! `u t1' r2 = r1' t2`. With a perfectly transmitting element (u = 1) the
//! L1L2 coincidence is then dark: two-photon interference forbids it. A
//! partially absorbing object (u < 1) breaks the cancellation and the dark
//! coincidence lights up with probability
//!
//! ```text
//! P(L1,L2) = (1 - r2^2) r2^2 (1 - u^2)^2 / (2 [1 - r2^2 (1 - u^2)])
//! ```
//!
//! so a single L1L2 coincidence certifies the object's presence even though
//! no photon was scattered off it. The absorption probability is
//! (1 - u^2) / 2, giving an interaction-free fraction
//! eta = P(L1,L2) / (P(L1,L2) + P(abs)) that climbs towards 1/2 as u -> 0
//! and r2 -> 1. The endpoint (u = 0, r2 = 1) itself is singular (the
//! denominator above vanishes); values there are flagged as suprema rather
//! than evaluated.
//!
//! Side-1 singles stay at 1/2 whatever the object does, so one-sided count
//! rates reveal nothing; only the coincidence pattern does.

use serde::Serialize;
use std::io::Write;

use crate::error::{Error, Result};
use crate::events::EventRecord;
use crate::optics::{OpticalSetting, Side1Outcome, Side2Outcome};

/// A quantity that may sit at an open-endpoint supremum instead of a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Limited {
    Value(f64),
    /// The limit is approached but not attained; reported instead of
    /// dividing by zero at the endpoint.
    Supremum {
        limit: f64,
    },
}

impl Limited {
    /// The value, or the limiting value at a flagged endpoint.
    pub fn limiting_value(&self) -> f64 {
        match *self {
            Limited::Value(x) => x,
            Limited::Supremum { limit } => limit,
        }
    }

    pub fn is_supremum(&self) -> bool {
        matches!(self, Limited::Supremum { .. })
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

/// Dark-coincidence probability on the balanced family, as a function of the
/// object transmission and the side-2 reflectivity. Returns the flagged
/// supremum 1/2 at the singular endpoint (u = 0, r2 = 1); zero whenever
/// u = 1 or r2 is 0 or 1 (with u > 0).
pub fn dark_coincidence_prob(u: f64, r2: f64) -> Result<Limited> {
    check_unit("u", u)?;
    check_unit("r2", r2)?;
    let open = 1.0 - u * u;
    let denominator = 1.0 - r2 * r2 * open;
    if denominator <= 0.0 {
        return Ok(Limited::Supremum { limit: 0.5 });
    }
    Ok(Limited::Value(
        0.5 * (1.0 - r2 * r2) * r2 * r2 * open * open / denominator,
    ))
}

/// Interaction-free measurement figures at one parameter point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IfmReport {
    pub u: f64,
    pub r2: f64,
    /// Probability of the certifying L1L2 coincidence.
    pub dark_coincidence: Limited,
    /// Probability (1 - u^2) / 2 that the object destructively locates the
    /// photon instead.
    pub absorption_probability: f64,
    /// Fraction of object-locating runs that are interaction-free,
    /// dark / (dark + absorption). At most 1/2.
    pub efficiency: Limited,
}

/// Efficiency report. Fails at u = 1, where nothing interacts and the
/// fraction is undefined.
pub fn ifm_efficiency(u: f64, r2: f64) -> Result<IfmReport> {
    check_unit("u", u)?;
    check_unit("r2", r2)?;
    if u >= 1.0 {
        return Err(Error::NoObjectInteraction);
    }
    let absorption = 0.5 * (1.0 - u * u);
    let dark = dark_coincidence_prob(u, r2)?;
    let efficiency = match dark {
        Limited::Value(p) => Limited::Value(p / (p + absorption)),
        Limited::Supremum { limit } => Limited::Supremum {
            limit: limit / (limit + absorption),
        },
    };
    Ok(IfmReport {
        u,
        r2,
        dark_coincidence: dark,
        absorption_probability: absorption,
        efficiency,
    })
}

/// The side-1 splitter that balances `u t1' r2 = r1' t2` for given (u, r2),
/// normalized to r^2 + t^2 = 1, with the dark phase difference baked in.
pub fn balanced_settings(u: f64, r2: f64) -> Result<(OpticalSetting, OpticalSetting)> {
    check_unit("u", u)?;
    check_unit("r2", r2)?;
    let t2 = (1.0 - r2 * r2).max(0.0).sqrt();
    let norm = (u * r2).hypot(t2);
    if norm <= 0.0 {
        return Err(Error::InvalidParameter(
            "balance is undefined at u = 0, r2 = 1".into(),
        ));
    }
    let r1_prime = u * r2 / norm;
    let side1 = OpticalSetting::side1(std::f64::consts::PI, r1_prime)?;
    let side2 = OpticalSetting::side2(0.0, r2, u)?;
    Ok((side1, side2))
}

/// How a single record reads in the dark-fringe configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IfmClassification {
    /// L1L2 coincidence: the object is certainly present and did not touch
    /// the photon.
    ConclusivePresent,
    /// The photon ended inside the object: located, but destructively.
    DestructiveDetection,
    /// Any other coincidence could have happened with or without the
    /// object; nothing can be concluded from it.
    Inconclusive,
}

/// Classification context: the pair of settings in force and whether the
/// object was actually in the beam.
#[derive(Debug, Clone, Copy)]
pub struct IfmContext {
    pub side1: OpticalSetting,
    pub side2: OpticalSetting,
    pub object_present: bool,
}

const CONTEXT_TOL: f64 = 1e-9;

/// Classifies one event. The context must be a dark-fringe configuration:
/// phase difference at an odd multiple of pi and the splitter balance
/// satisfied for the context's `u`; otherwise classification is refused.
///
/// The verdict is what an observer of the record infers. With the object
/// actually absent, the conclusive and destructive outcomes have probability
/// zero, so on consistent inputs they never arise.
pub fn classify_event(record: &EventRecord, context: &IfmContext) -> Result<IfmClassification> {
    let cosine = (context.side1.phase - context.side2.phase).cos();
    if (cosine + 1.0).abs() > CONTEXT_TOL {
        return Err(Error::ClassificationUnsupported(format!(
            "phase difference must be an odd multiple of pi, cos = {cosine}"
        )));
    }
    let (s1, s2) = (&context.side1, &context.side2);
    let balance = s2.absorber_transmission * s1.transmittivity * s2.reflectivity
        - s1.reflectivity * s2.transmittivity;
    if balance.abs() > CONTEXT_TOL {
        return Err(Error::ClassificationUnsupported(format!(
            "splitters are not balanced for the dark fringe: residual {balance}"
        )));
    }
    Ok(match (record.outcome1, record.outcome2) {
        (Side1Outcome::L, Side2Outcome::L) => IfmClassification::ConclusivePresent,
        (_, Side2Outcome::A) => IfmClassification::DestructiveDetection,
        _ => IfmClassification::Inconclusive,
    })
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IfmSweepRow {
    pub u: f64,
    pub r2: f64,
    pub dark_coincidence: f64,
    pub absorption_probability: f64,
    pub efficiency: f64,
    pub supremum: bool,
}

/// Sweeps the (u, r2) grid. Singular endpoints report limiting values with
/// the supremum flag set.
pub fn sweep(u_values: &[f64], r2_values: &[f64]) -> Result<Vec<IfmSweepRow>> {
    let mut rows = Vec::with_capacity(u_values.len() * r2_values.len());
    for &u in u_values {
        for &r2 in r2_values {
            let dark = dark_coincidence_prob(u, r2)?;
            let absorption = 0.5 * (1.0 - u * u);
            let efficiency = if u >= 1.0 {
                // Nothing absorbs; the fraction is undefined, recorded as 0.
                0.0
            } else {
                match dark {
                    Limited::Value(p) => p / (p + absorption),
                    Limited::Supremum { limit } => limit / (limit + absorption),
                }
            };
            rows.push(IfmSweepRow {
                u,
                r2,
                dark_coincidence: dark.limiting_value(),
                absorption_probability: absorption,
                efficiency,
                supremum: dark.is_supremum(),
            });
        }
    }
    Ok(rows)
}

/// Sweep serialization: fixed column order, header always present.
pub fn write_sweep_csv<W: Write>(rows: &[IfmSweepRow], mut writer: W) -> Result<()> {
    writeln!(writer, "u,r2,p_dark,p_abs,eta,supremum")?;
    for row in rows {
        writeln!(
            writer,
            "{},{},{},{},{},{}",
            row.u,
            row.r2,
            row.dark_coincidence,
            row.absorption_probability,
            row.efficiency,
            row.supremum
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{self, SettingPair};
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-12;

    #[test]
    fn dark_coincidence_values() {
        // Transparent object: no dark counts at any splitter.
        for r2 in [0.0, 0.3, 0.99, 1.0] {
            assert_eq!(dark_coincidence_prob(1.0, r2).unwrap(), Limited::Value(0.0));
        }
        // Opaque object, balanced splitter: (1/2)(1/4)/(1/2) = 1/4.
        let p = dark_coincidence_prob(0.0, (0.5f64).sqrt()).unwrap();
        assert_abs_diff_eq!(p.limiting_value(), 0.25, epsilon = TOL);
        assert!(!p.is_supremum());
        // Singular endpoint.
        let p = dark_coincidence_prob(0.0, 1.0).unwrap();
        assert!(p.is_supremum());
        assert_eq!(p.limiting_value(), 0.5);
    }

    #[test]
    fn positivity_region() {
        // Dark counts occur exactly for u < 1 and r2 strictly inside (0, 1).
        for &(u, r2, positive) in &[
            (0.5, 0.5, true),
            (0.5, 0.0, false),
            (0.5, 1.0, false),
            (1.0, 0.5, false),
            (0.0, 0.9, true),
        ] {
            let p = dark_coincidence_prob(u, r2).unwrap().limiting_value();
            assert_eq!(p > TOL, positive, "at ({u}, {r2})");
        }
    }

    #[test]
    fn efficiency_values() {
        let r = ifm_efficiency(0.0, (0.5f64).sqrt()).unwrap();
        assert_abs_diff_eq!(r.efficiency.limiting_value(), 1.0 / 3.0, epsilon = TOL);
        assert_abs_diff_eq!(r.absorption_probability, 0.5, epsilon = TOL);

        let r = ifm_efficiency(0.0, 1.0).unwrap();
        assert!(r.efficiency.is_supremum());
        assert_abs_diff_eq!(r.efficiency.limiting_value(), 0.5, epsilon = TOL);

        assert!(matches!(
            ifm_efficiency(1.0, 0.5),
            Err(Error::NoObjectInteraction)
        ));
    }

    #[test]
    fn efficiency_never_exceeds_half() {
        for i in 0..=20 {
            for j in 0..=20 {
                let u = i as f64 / 20.0;
                let r2 = j as f64 / 20.0;
                if u >= 1.0 {
                    continue;
                }
                let eta = ifm_efficiency(u, r2).unwrap().efficiency.limiting_value();
                assert!(eta <= 0.5 + TOL, "eta = {eta} at ({u}, {r2})");
            }
        }
    }

    #[test]
    fn monotone_towards_the_supremum() {
        // At u = 0 the dark coincidence is r2^2 / 2, increasing in r2.
        let mut prev = -1.0;
        for j in 0..40 {
            let r2 = j as f64 / 40.0;
            let p = dark_coincidence_prob(0.0, r2).unwrap().limiting_value();
            assert_abs_diff_eq!(p, 0.5 * r2 * r2, epsilon = TOL);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn closed_form_matches_propagation_on_balanced_family() {
        for &u in &[0.0, 0.2, 0.5, 0.9, 0.99] {
            for &r2 in &[0.1, 0.4, (0.5f64).sqrt(), 0.8, 0.97] {
                let (s1, s2) = balanced_settings(u, r2).unwrap();
                let table = optics::joint_table(&s1, &s2);
                let expected = dark_coincidence_prob(u, r2).unwrap().limiting_value();
                assert_abs_diff_eq!(table.p_l1_l2, expected, epsilon = TOL);
                // Object insertion leaves side-1 singles untouched.
                assert_abs_diff_eq!(table.side1_marginal(Side1Outcome::L), 0.5, epsilon = TOL);
            }
        }
    }

    #[test]
    fn classification() {
        let (side1, side2) = balanced_settings(0.4, 0.7).unwrap();
        let context = IfmContext {
            side1,
            side2,
            object_present: true,
        };
        let record = |o1, o2| EventRecord {
            trial: 0,
            pair: SettingPair::Side1Primed,
            outcome1: o1,
            outcome2: o2,
        };
        assert_eq!(
            classify_event(&record(Side1Outcome::L, Side2Outcome::L), &context).unwrap(),
            IfmClassification::ConclusivePresent
        );
        assert_eq!(
            classify_event(&record(Side1Outcome::U, Side2Outcome::A), &context).unwrap(),
            IfmClassification::DestructiveDetection
        );
        for (o1, o2) in [
            (Side1Outcome::U, Side2Outcome::L),
            (Side1Outcome::L, Side2Outcome::U),
            (Side1Outcome::U, Side2Outcome::U),
        ] {
            assert_eq!(
                classify_event(&record(o1, o2), &context).unwrap(),
                IfmClassification::Inconclusive
            );
        }

        // Unbalanced context refuses to classify.
        let bad = IfmContext {
            side1: OpticalSetting::side1(std::f64::consts::PI, 0.3).unwrap(),
            side2,
            object_present: true,
        };
        assert!(matches!(
            classify_event(&record(Side1Outcome::L, Side2Outcome::L), &bad),
            Err(Error::ClassificationUnsupported(_))
        ));
        // Wrong phase likewise.
        let off_fringe = IfmContext {
            side1: OpticalSetting::side1(1.0, side1.reflectivity).unwrap(),
            side2,
            object_present: true,
        };
        assert!(classify_event(&record(Side1Outcome::L, Side2Outcome::L), &off_fringe).is_err());
    }

    #[test]
    fn sweep_csv_shape() {
        let rows = sweep(&[0.0, 0.5], &[0.1, 0.9]).unwrap();
        assert_eq!(rows.len(), 4);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,r2,p_dark,p_abs,eta,supremum\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
