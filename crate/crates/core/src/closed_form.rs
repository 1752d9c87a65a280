//! Closed-form detection probabilities for the interferometer.
//!
//! These are the frozen interference-algebra expressions for the apparatus
//! modeled in [`crate::optics`]. The L1L2 and U1U2 coincidences follow the
//! familiar two-photon forms; the cross terms and the absorption entries
//! complete the table so that it sums to one. Every expression here agrees
//! with the amplitude-level propagation to 1e-12 (enforced by tests), which
//! is the arbiter for sign and port conventions.
//!
//! Phases are accepted unreduced and evaluated through `cos` directly; no
//! modular reduction is performed, so extreme arguments (|phi| well beyond
//! 1e6) lose precision the way `cos` itself does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{JointProbabilityTable, OpticalSetting, Side1Outcome, Side2Outcome};

/// A joint detection outcome, one detector per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomePair {
    pub side1: Side1Outcome,
    pub side2: Side2Outcome,
}

impl OutcomePair {
    pub fn new(side1: Side1Outcome, side2: Side2Outcome) -> Self {
        OutcomePair { side1, side2 }
    }
}

/// Joint detection probability for the standard apparatus: 50-50 splitters,
/// no absorber. Equal-letter pairs interfere constructively,
/// `(1 + cos(phi1 - phi2)) / 4`; mixed pairs destructively,
/// `(1 - cos(phi1 - phi2)) / 4`.
///
/// Rejects absorption outcomes: the standard setup has no absorber.
pub fn joint_prob_standard(phi1: f64, phi2: f64, pair: OutcomePair) -> Result<f64> {
    let c = (phi1 - phi2).cos();
    match (pair.side1, pair.side2) {
        (Side1Outcome::L, Side2Outcome::L) | (Side1Outcome::U, Side2Outcome::U) => {
            Ok(0.25 * (1.0 + c))
        }
        (Side1Outcome::L, Side2Outcome::U) | (Side1Outcome::U, Side2Outcome::L) => {
            Ok(0.25 * (1.0 - c))
        }
        (_, Side2Outcome::A) => Err(Error::InvalidParameter(
            "standard setup has no absorption outcome".into(),
        )),
    }
}

/// Joint detection probability for arbitrary symmetric splitters and an
/// absorber of transmission `u` on side 2.
///
/// With r_i, t_i the splitter coefficients and `D = phi1 - phi2`:
///
/// ```text
/// P(L1,L2) = [u^2 r1^2 t2^2 + t1^2 r2^2 + 2 u r1 r2 t1 t2 cos D] / 2
/// P(U1,U2) = [u^2 t1^2 r2^2 + r1^2 t2^2 + 2 u r1 r2 t1 t2 cos D] / 2
/// P(L1,U2) = [t1^2 t2^2 + u^2 r1^2 r2^2 - 2 u r1 r2 t1 t2 cos D] / 2
/// P(U1,L2) = [r1^2 r2^2 + u^2 t1^2 t2^2 - 2 u r1 r2 t1 t2 cos D] / 2
/// P(L1,A2) = (1 - u^2) r1^2 / 2
/// P(U1,A2) = (1 - u^2) t1^2 / 2
/// ```
///
/// An absorbed photon 2 took arm `b`, so its partner is in arm `d` and
/// reaches L1 by reflection; hence the r1/t1 split of the absorption rows.
pub fn joint_prob_general(
    setting1: &OpticalSetting,
    setting2: &OpticalSetting,
    pair: OutcomePair,
) -> f64 {
    let (r1, t1) = (setting1.reflectivity, setting1.transmittivity);
    let (r2, t2) = (setting2.reflectivity, setting2.transmittivity);
    let u = setting2.absorber_transmission;
    let cross = 2.0 * u * r1 * r2 * t1 * t2 * (setting1.phase - setting2.phase).cos();
    let u2 = u * u;
    match (pair.side1, pair.side2) {
        (Side1Outcome::L, Side2Outcome::L) => {
            0.5 * (u2 * r1 * r1 * t2 * t2 + t1 * t1 * r2 * r2 + cross)
        }
        (Side1Outcome::U, Side2Outcome::U) => {
            0.5 * (u2 * t1 * t1 * r2 * r2 + r1 * r1 * t2 * t2 + cross)
        }
        (Side1Outcome::L, Side2Outcome::U) => {
            0.5 * (t1 * t1 * t2 * t2 + u2 * r1 * r1 * r2 * r2 - cross)
        }
        (Side1Outcome::U, Side2Outcome::L) => {
            0.5 * (r1 * r1 * r2 * r2 + u2 * t1 * t1 * t2 * t2 - cross)
        }
        (Side1Outcome::L, Side2Outcome::A) => 0.5 * (1.0 - u2) * r1 * r1,
        (Side1Outcome::U, Side2Outcome::A) => 0.5 * (1.0 - u2) * t1 * t1,
    }
}

/// Full six-entry table from the closed forms.
pub fn joint_probability_table(
    setting1: &OpticalSetting,
    setting2: &OpticalSetting,
) -> JointProbabilityTable {
    let p = |o1, o2| joint_prob_general(setting1, setting2, OutcomePair::new(o1, o2));
    JointProbabilityTable {
        p_l1_l2: p(Side1Outcome::L, Side2Outcome::L),
        p_l1_u2: p(Side1Outcome::L, Side2Outcome::U),
        p_l1_a2: p(Side1Outcome::L, Side2Outcome::A),
        p_u1_l2: p(Side1Outcome::U, Side2Outcome::L),
        p_u1_u2: p(Side1Outcome::U, Side2Outcome::U),
        p_u1_a2: p(Side1Outcome::U, Side2Outcome::A),
    }
}

/// Side-2 single detection probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleDetectionProbs {
    pub p_l2: f64,
    pub p_u2: f64,
    pub p_a2: f64,
}

/// P(L2) = (u^2 t2^2 + r2^2) / 2, P(U2) = (u^2 r2^2 + t2^2) / 2,
/// P(A2) = (1 - u^2) / 2. The three sum to 1; they do not depend on the
/// side-1 setting or on any phase.
pub fn single_detection_probs(setting2: &OpticalSetting) -> SingleDetectionProbs {
    let (r2, t2) = (setting2.reflectivity, setting2.transmittivity);
    let u2 = setting2.absorber_transmission * setting2.absorber_transmission;
    SingleDetectionProbs {
        p_l2: 0.5 * (u2 * t2 * t2 + r2 * r2),
        p_u2: 0.5 * (u2 * r2 * r2 + t2 * t2),
        p_a2: 0.5 * (1.0 - u2),
    }
}
