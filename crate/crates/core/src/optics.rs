//! Amplitude-level propagation through the two-photon interferometer.
//!
//! The source emits photon pairs into four beams in the path-entangled state
//! (|a>_1 |c>_2 + |d>_1 |b>_2) / sqrt(2). Photon 1 is recombined at a
//! symmetric beam splitter fed by arms `a` (adjustable phase shifter) and
//! `d`; photon 2 at a second splitter fed by arms `b` and `c`. The phase
//! shifter in arm `b` is partially absorbing: a photon passes with amplitude
//! `u` and is absorbed with amplitude `sqrt(1 - u^2)`, in which case it never
//! reaches the splitter and registers as a third outcome `A2` on side 2.
//!
//! This module computes joint outcome amplitudes by applying each optical
//! element in turn. It is deliberately independent of the closed forms in
//! [`crate::closed_form`]; the two paths cross-check each other to 1e-12.
//!
//! Conventions (only probabilities are part of the contract; global phases
//! are not observable):
//! - symmetric beam splitter: real transmission amplitude `t`, reflection
//!   amplitude `i*r`, with r^2 + t^2 = 1;
//! - arm `a` transmits towards L1 and reflects towards U1, arm `d` the other
//!   way around; arm `b` transmits towards L2, arm `c` towards U2;
//! - every mirror reflection contributes a factor `i`;
//! - the absorption amplitude is taken real and nonnegative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for exact-algebra invariants (unitarity, completeness,
/// splitter normalization).
pub const EXACT_TOL: f64 = 1e-12;

/// Detection outcome for photon 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side1Outcome {
    #[serde(rename = "L1")]
    L,
    #[serde(rename = "U1")]
    U,
}

/// Detection outcome for photon 2. `A` is absorption inside the phase
/// shifter, modeled as a third orthogonal outcome rather than a lost event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side2Outcome {
    #[serde(rename = "L2")]
    L,
    #[serde(rename = "U2")]
    U,
    #[serde(rename = "A2")]
    A,
}

impl fmt::Display for Side1Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side1Outcome::L => "L1",
            Side1Outcome::U => "U1",
        })
    }
}

impl fmt::Display for Side2Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side2Outcome::L => "L2",
            Side2Outcome::U => "U2",
            Side2Outcome::A => "A2",
        })
    }
}

impl Side1Outcome {
    pub const ALL: [Side1Outcome; 2] = [Side1Outcome::L, Side1Outcome::U];
}

impl Side2Outcome {
    pub const ALL: [Side2Outcome; 3] = [Side2Outcome::L, Side2Outcome::U, Side2Outcome::A];
}

/// The four measurement configurations, identified by which side uses its
/// primed setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SettingPair {
    /// (phi1, phi2)
    #[serde(rename = "1-2")]
    NeitherPrimed,
    /// (phi1, phi2')
    #[serde(rename = "1-2p")]
    Side2Primed,
    /// (phi1', phi2)
    #[serde(rename = "1p-2")]
    Side1Primed,
    /// (phi1', phi2')
    #[serde(rename = "1p-2p")]
    BothPrimed,
}

impl SettingPair {
    /// Fixed evaluation order used everywhere a four-table array appears.
    pub const ALL: [SettingPair; 4] = [
        SettingPair::NeitherPrimed,
        SettingPair::Side2Primed,
        SettingPair::Side1Primed,
        SettingPair::BothPrimed,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SettingPair::NeitherPrimed => "1-2",
            SettingPair::Side2Primed => "1-2p",
            SettingPair::Side1Primed => "1p-2",
            SettingPair::BothPrimed => "1p-2p",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            SettingPair::NeitherPrimed => 0,
            SettingPair::Side2Primed => 1,
            SettingPair::Side1Primed => 2,
            SettingPair::BothPrimed => 3,
        }
    }

    /// True when side 1 (resp. side 2) uses its primed setting.
    pub fn side1_primed(&self) -> bool {
        matches!(self, SettingPair::Side1Primed | SettingPair::BothPrimed)
    }

    pub fn side2_primed(&self) -> bool {
        matches!(self, SettingPair::Side2Primed | SettingPair::BothPrimed)
    }

    pub fn from_label(label: &str) -> Option<SettingPair> {
        SettingPair::ALL.into_iter().find(|p| p.label() == label)
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One side's control knobs: phase shift, beam-splitter coefficients, and
/// (side 2 only) the absorber transmission amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticalSetting {
    /// Phase shift in radians. Accepted unreduced and fed to `cos` directly;
    /// callers working beyond |phi| ~ 1e6 should reduce the angle themselves.
    pub phase: f64,
    /// Beam-splitter reflectivity, in [0, 1].
    pub reflectivity: f64,
    /// Beam-splitter transmittivity; r^2 + t^2 = 1 within 1e-12.
    pub transmittivity: f64,
    /// Transmission amplitude of the absorbing element, in [0, 1]. Side 1
    /// carries no absorber, so side-1 settings fix this to 1.
    pub absorber_transmission: f64,
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

impl OpticalSetting {
    /// Side-1 setting: phase and reflectivity, no absorber.
    pub fn side1(phase: f64, reflectivity: f64) -> Result<Self> {
        Self::side2(phase, reflectivity, 1.0)
    }

    /// Side-2 setting: phase, reflectivity, and absorber transmission `u`.
    pub fn side2(phase: f64, reflectivity: f64, absorber_transmission: f64) -> Result<Self> {
        if !phase.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "phase must be finite, got {phase}"
            )));
        }
        check_unit_interval("reflectivity", reflectivity)?;
        check_unit_interval("absorber transmission", absorber_transmission)?;
        Ok(OpticalSetting {
            phase,
            reflectivity,
            transmittivity: (1.0 - reflectivity * reflectivity).max(0.0).sqrt(),
            absorber_transmission,
        })
    }

    /// Builds a setting from an explicit (r, t) pair, checking r^2 + t^2 = 1.
    pub fn with_components(
        phase: f64,
        reflectivity: f64,
        transmittivity: f64,
        absorber_transmission: f64,
    ) -> Result<Self> {
        check_unit_interval("transmittivity", transmittivity)?;
        let norm = reflectivity * reflectivity + transmittivity * transmittivity;
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidParameter(format!(
                "splitter coefficients must satisfy r^2 + t^2 = 1, got {norm}"
            )));
        }
        let mut s = Self::side2(phase, reflectivity, absorber_transmission)?;
        s.transmittivity = transmittivity;
        Ok(s)
    }

    /// Absorption amplitude sqrt(1 - u^2), taken real and nonnegative.
    pub fn absorption_amplitude(&self) -> f64 {
        let u = self.absorber_transmission;
        (1.0 - u * u).max(0.0).sqrt()
    }
}

/// Joint outcome amplitudes over {L1, U1} x {L2, U2, A2}.
#[derive(Debug, Clone, Copy)]
pub struct OutcomeAmplitudeTable {
    pub l1_l2: Complex64,
    pub l1_u2: Complex64,
    pub l1_a2: Complex64,
    pub u1_l2: Complex64,
    pub u1_u2: Complex64,
    pub u1_a2: Complex64,
}

impl OutcomeAmplitudeTable {
    pub fn amplitude(&self, o1: Side1Outcome, o2: Side2Outcome) -> Complex64 {
        use Side1Outcome as S1;
        use Side2Outcome as S2;
        match (o1, o2) {
            (S1::L, S2::L) => self.l1_l2,
            (S1::L, S2::U) => self.l1_u2,
            (S1::L, S2::A) => self.l1_a2,
            (S1::U, S2::L) => self.u1_l2,
            (S1::U, S2::U) => self.u1_u2,
            (S1::U, S2::A) => self.u1_a2,
        }
    }

    /// Sum of squared magnitudes; 1 for any valid setting pair.
    pub fn total_probability(&self) -> f64 {
        Side1Outcome::ALL
            .iter()
            .flat_map(|&o1| Side2Outcome::ALL.iter().map(move |&o2| (o1, o2)))
            .map(|(o1, o2)| self.amplitude(o1, o2).norm_sqr())
            .sum()
    }
}

/// Joint outcome probabilities over {L1, U1} x {L2, U2, A2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilityTable {
    pub p_l1_l2: f64,
    pub p_l1_u2: f64,
    pub p_l1_a2: f64,
    pub p_u1_l2: f64,
    pub p_u1_u2: f64,
    pub p_u1_a2: f64,
}

impl JointProbabilityTable {
    pub fn probability(&self, o1: Side1Outcome, o2: Side2Outcome) -> f64 {
        use Side1Outcome as S1;
        use Side2Outcome as S2;
        match (o1, o2) {
            (S1::L, S2::L) => self.p_l1_l2,
            (S1::L, S2::U) => self.p_l1_u2,
            (S1::L, S2::A) => self.p_l1_a2,
            (S1::U, S2::L) => self.p_u1_l2,
            (S1::U, S2::U) => self.p_u1_u2,
            (S1::U, S2::A) => self.p_u1_a2,
        }
    }

    pub fn side1_marginal(&self, o1: Side1Outcome) -> f64 {
        Side2Outcome::ALL
            .iter()
            .map(|&o2| self.probability(o1, o2))
            .sum()
    }

    pub fn side2_marginal(&self, o2: Side2Outcome) -> f64 {
        Side1Outcome::ALL
            .iter()
            .map(|&o1| self.probability(o1, o2))
            .sum()
    }

    pub fn total(&self) -> f64 {
        Side1Outcome::ALL
            .iter()
            .map(|&o1| self.side1_marginal(o1))
            .sum()
    }

    /// Probability mass on the four detector coincidences, i.e. everything
    /// except absorption.
    pub fn non_absorption_mass(&self) -> f64 {
        self.total() - self.side2_marginal(Side2Outcome::A)
    }

    /// Copy with the absorption entries removed and the remaining entries
    /// left unrescaled, matching the ratio convention of the probability
    /// inequalities.
    pub fn postselected(&self) -> JointProbabilityTable {
        JointProbabilityTable {
            p_l1_a2: 0.0,
            p_u1_a2: 0.0,
            ..*self
        }
    }

    /// Copy conditioned on survival: absorption entries removed and the
    /// rest rescaled to sum to 1. Fails when nothing survives.
    pub fn conditioned_on_survival(&self) -> Result<JointProbabilityTable> {
        let survival = self.non_absorption_mass();
        if survival <= 0.0 {
            return Err(Error::InvalidParameter(
                "cannot condition on survival: no non-absorption mass".into(),
            ));
        }
        let t = self.postselected();
        Ok(JointProbabilityTable {
            p_l1_l2: t.p_l1_l2 / survival,
            p_l1_u2: t.p_l1_u2 / survival,
            p_l1_a2: 0.0,
            p_u1_l2: t.p_u1_l2 / survival,
            p_u1_u2: t.p_u1_u2 / survival,
            p_u1_a2: 0.0,
        })
    }

    /// Checks completeness and entry bounds.
    pub fn check(&self, tol: f64) -> Result<()> {
        for &o1 in &Side1Outcome::ALL {
            for &o2 in &Side2Outcome::ALL {
                let p = self.probability(o1, o2);
                if !(-tol..=1.0 + tol).contains(&p) {
                    return Err(Error::InvalidParameter(format!(
                        "probability P({o1},{o2}) = {p} outside [0, 1]"
                    )));
                }
            }
        }
        let total = self.total();
        if (total - 1.0).abs() > tol {
            return Err(Error::NormalizationDefect {
                total,
                defect: (total - 1.0).abs(),
            });
        }
        Ok(())
    }
}

/// Propagates the source state through phase shifters, the absorber, mirrors
/// and beam splitters, returning the joint outcome amplitudes.
///
/// Total on valid settings. The absorbed component is tagged by which arm
/// photon 1 occupies (always `d` when photon 2 took arm `b`), so the table
/// resolves absorption jointly with the photon-1 outcome.
pub fn propagate_amplitudes(
    setting1: &OpticalSetting,
    setting2: &OpticalSetting,
) -> OutcomeAmplitudeTable {
    let i = Complex64::i();

    // Photon 1. Arm a: phase shifter, mirror, then the splitter; arm d:
    // mirror, splitter.
    let a = i * Complex64::from_polar(1.0, setting1.phase);
    let a_l1 = a * setting1.transmittivity;
    let a_u1 = a * i * setting1.reflectivity;
    let d = i;
    let d_u1 = d * setting1.transmittivity;
    let d_l1 = d * i * setting1.reflectivity;

    // Photon 2. Arm b: absorbing phase shifter, mirror, splitter; the
    // absorbed component stops at the element. Arm c: mirror, splitter.
    let u = setting2.absorber_transmission;
    let b = i * u * Complex64::from_polar(1.0, setting2.phase);
    let b_l2 = b * setting2.transmittivity;
    let b_u2 = b * i * setting2.reflectivity;
    let b_abs = i * setting2.absorption_amplitude();
    let c = i;
    let c_u2 = c * setting2.transmittivity;
    let c_l2 = c * i * setting2.reflectivity;

    // Source branches: (photon 1 in a, photon 2 in c) and (d, b), each with
    // weight 1/sqrt(2).
    let w = FRAC_1_SQRT_2;
    OutcomeAmplitudeTable {
        l1_l2: w * (a_l1 * c_l2 + d_l1 * b_l2),
        l1_u2: w * (a_l1 * c_u2 + d_l1 * b_u2),
        l1_a2: w * d_l1 * b_abs,
        u1_l2: w * (a_u1 * c_l2 + d_u1 * b_l2),
        u1_u2: w * (a_u1 * c_u2 + d_u1 * b_u2),
        u1_a2: w * d_u1 * b_abs,
    }
}

/// Squares the amplitude table into outcome probabilities, rejecting tables
/// whose total deviates from 1 by more than 1e-9.
pub fn outcome_probabilities(amps: &OutcomeAmplitudeTable) -> Result<JointProbabilityTable> {
    let total = amps.total_probability();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NormalizationDefect {
            total,
            defect: (total - 1.0).abs(),
        });
    }
    Ok(JointProbabilityTable {
        p_l1_l2: amps.l1_l2.norm_sqr(),
        p_l1_u2: amps.l1_u2.norm_sqr(),
        p_l1_a2: amps.l1_a2.norm_sqr(),
        p_u1_l2: amps.u1_l2.norm_sqr(),
        p_u1_u2: amps.u1_u2.norm_sqr(),
        p_u1_a2: amps.u1_a2.norm_sqr(),
    })
}

/// Convenience: propagate and square in one step.
pub fn joint_table(setting1: &OpticalSetting, setting2: &OpticalSetting) -> JointProbabilityTable {
    // Unitarity holds by construction, so the defect branch is unreachable
    // for tables produced by propagate_amplitudes.
    outcome_probabilities(&propagate_amplitudes(setting1, setting2))
        .expect("propagated amplitude table is normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn half_splitter(phase: f64) -> OpticalSetting {
        OpticalSetting::side1(phase, FRAC_1_SQRT_2).unwrap()
    }

    #[test]
    fn standard_setup_equal_phases() {
        let t = joint_table(&half_splitter(0.4), &half_splitter(0.4));
        assert_abs_diff_eq!(t.p_l1_l2, 0.5, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(t.p_u1_u2, 0.5, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(t.p_l1_u2, 0.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(t.p_u1_l2, 0.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(t.side2_marginal(Side2Outcome::A), 0.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn standard_setup_opposite_phases() {
        let t = joint_table(&half_splitter(std::f64::consts::PI), &half_splitter(0.0));
        assert_abs_diff_eq!(t.p_l1_u2, 0.5, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(t.p_u1_l2, 0.5, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(t.p_l1_l2, 0.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn opaque_absorber_marginal() {
        // u = 0 absorbs half of all pairs regardless of splitters and phases.
        let s1 = OpticalSetting::side1(1.3, 0.3).unwrap();
        let s2 = OpticalSetting::side2(-0.7, 0.9, 0.0).unwrap();
        let t = joint_table(&s1, &s2);
        assert_abs_diff_eq!(t.side2_marginal(Side2Outcome::A), 0.5, epsilon = EXACT_TOL);
    }

    #[test]
    fn point_mass_table_roundtrip() {
        let amps = OutcomeAmplitudeTable {
            l1_l2: Complex64::new(0.0, 0.0),
            l1_u2: Complex64::new(0.0, 0.0),
            l1_a2: Complex64::new(0.0, 0.0),
            u1_l2: Complex64::new(0.0, 0.0),
            u1_u2: Complex64::new(0.0, 1.0),
            u1_a2: Complex64::new(0.0, 0.0),
        };
        let t = outcome_probabilities(&amps).unwrap();
        assert_eq!(t.p_u1_u2, 1.0);
        assert_eq!(t.total(), 1.0);
    }

    #[test]
    fn normalization_defect_is_reported() {
        let amps = OutcomeAmplitudeTable {
            l1_l2: Complex64::new(0.8, 0.0),
            l1_u2: Complex64::new(0.0, 0.0),
            l1_a2: Complex64::new(0.0, 0.0),
            u1_l2: Complex64::new(0.0, 0.0),
            u1_u2: Complex64::new(0.0, 0.0),
            u1_a2: Complex64::new(0.0, 0.0),
        };
        assert!(matches!(
            outcome_probabilities(&amps),
            Err(Error::NormalizationDefect { .. })
        ));
    }

    #[test]
    fn setting_validation() {
        assert!(OpticalSetting::side1(0.0, 1.5).is_err());
        assert!(OpticalSetting::side2(0.0, 0.5, -0.1).is_err());
        assert!(OpticalSetting::with_components(0.0, 0.9, 0.9, 1.0).is_err());
        let s = OpticalSetting::side1(0.0, 0.6).unwrap();
        assert_abs_diff_eq!(s.transmittivity, 0.8, epsilon = EXACT_TOL);
    }

    proptest! {
        #[test]
        fn completeness_and_side1_uniformity(
            phi1 in -30.0f64..30.0,
            phi2 in -30.0f64..30.0,
            r1 in 0.0f64..=1.0,
            r2 in 0.0f64..=1.0,
            u in 0.0f64..=1.0,
        ) {
            let s1 = OpticalSetting::side1(phi1, r1).unwrap();
            let s2 = OpticalSetting::side2(phi2, r2, u).unwrap();
            let t = joint_table(&s1, &s2);
            t.check(EXACT_TOL).unwrap();
            // The source is maximally path-entangled, so each side-1
            // detector fires half of the time whatever side 2 does.
            prop_assert!((t.side1_marginal(Side1Outcome::L) - 0.5).abs() < EXACT_TOL);
            prop_assert!((t.side1_marginal(Side1Outcome::U) - 0.5).abs() < EXACT_TOL);
            // Absorption marginal depends only on u.
            let expected_abs = 0.5 * (1.0 - u * u);
            prop_assert!((t.side2_marginal(Side2Outcome::A) - expected_abs).abs() < EXACT_TOL);
        }
    }
}
