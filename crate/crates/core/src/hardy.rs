//! Solver for the zero-coincidence constraint system.
//!
//! Four configurations are used, built from two settings per side. Three
//! joint probabilities are forced to zero while a fourth is kept positive:
//!
//! ```text
//! P(L1,L2 | phi1,  phi2 ) = 0
//! P(U1,U2 | phi1,  phi2') = 0
//! P(U1,U2 | phi1', phi2 ) = 0
//! P(U1,U2 | phi1', phi2') > 0
//! ```
//!
//! Each zero condition pins the corresponding cosine to -1 and imposes an
//! amplitude balance between the two interfering paths:
//!
//! ```text
//! u  r1  t2  = t1  r2          (from the first zero)
//! u' t1  r2' = r1  t2'         (from the second)
//! u  t1' r2  = r1' t2          (from the third)
//! ```
//!
//! whose product form `u^2 u' t1' r2' = r1' t2'` fixes the absorber
//! transmission once `t1'`, `r2'` and `u'` are chosen. A physical solution
//! (u^2 <= 1) exists exactly on `t1'^2 + r2'^2 >= 1` when u' = 1, with
//! equality forcing u = 1 and a vanishing target coincidence. The target
//! probability is `[u' t1' r2' (1 - u^2)]^2 / 2`, reaching its maximum of
//! 1/2 at `t1' = r2' = 1` (where u = 0).
//!
//! In the standard apparatus (u = 1, 50-50 splitters) the same three zeros
//! force the fourth probability to vanish as well, and the four resulting
//! perfect anticorrelations only saturate the CHSH bound. The solver keeps
//! both stories runnable: [`check_standard_infeasibility`] for the standard
//! apparatus, [`solve`] for the absorber-modified one.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::bell;
use crate::closed_form;
use crate::error::{Error, Result};
use crate::optics::{JointProbabilityTable, OpticalSetting, SettingPair};

/// Feasibility slack on u^2 <= 1: points on the boundary circle evaluate to
/// u^2 = 1 up to rounding and must not be rejected.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

fn check_odd(name: &'static str, value: i64) -> Result<()> {
    if value.rem_euclid(2) != 1 {
        return Err(Error::EvenPhaseInteger { name, value });
    }
    Ok(())
}

/// The four phases, one pair per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseAssignment {
    pub phi1: f64,
    pub phi2: f64,
    pub phi1_prime: f64,
    pub phi2_prime: f64,
}

impl PhaseAssignment {
    /// The four phase differences in configuration order, each an odd
    /// multiple of pi for a valid assignment.
    pub fn differences(&self) -> [f64; 4] {
        [
            self.phi1 - self.phi2,
            self.phi1 - self.phi2_prime,
            self.phi1_prime - self.phi2,
            self.phi1_prime - self.phi2_prime,
        ]
    }
}

/// Assigns the four phases from a free offset `phi0` and three odd integers:
///
/// ```text
/// phi2' = phi0
/// phi1  = n2 pi + phi0
/// phi2  = (n2 - n1) pi + phi0
/// phi1' = (n3 + n2 - n1) pi + phi0
/// ```
///
/// so that all four configuration phase differences are odd multiples of pi
/// (the fourth difference is n3 + n2 - n1, odd whenever the three are odd).
pub fn assign_phases(phi0: f64, n1: i64, n2: i64, n3: i64) -> Result<PhaseAssignment> {
    check_odd("n1", n1)?;
    check_odd("n2", n2)?;
    check_odd("n3", n3)?;
    Ok(PhaseAssignment {
        phi1: n2 as f64 * PI + phi0,
        phi2: (n2 - n1) as f64 * PI + phi0,
        phi1_prime: (n3 + n2 - n1) as f64 * PI + phi0,
        phi2_prime: phi0,
    })
}

/// Free parameters of the constraint system: the primed splitter pair, the
/// primed absorber transmission, and the phase bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyConfiguration {
    /// Transmittivity of the primed side-1 splitter, in (0, 1].
    pub t1_prime: f64,
    /// Reflectivity of the primed side-2 splitter, in (0, 1].
    pub r2_prime: f64,
    /// Absorber transmission in the primed side-2 setting, in (0, 1].
    #[serde(default = "default_u_prime")]
    pub u_prime: f64,
    /// Free phase offset; shifts all four phases without touching any
    /// probability.
    #[serde(default)]
    pub phi0: f64,
    #[serde(default = "default_odd")]
    pub n1: i64,
    #[serde(default = "default_odd")]
    pub n2: i64,
    #[serde(default = "default_odd")]
    pub n3: i64,
}

fn default_u_prime() -> f64 {
    1.0
}

fn default_odd() -> i64 {
    1
}

impl HardyConfiguration {
    pub fn new(t1_prime: f64, r2_prime: f64) -> Result<Self> {
        HardyConfiguration {
            t1_prime,
            r2_prime,
            u_prime: 1.0,
            phi0: 0.0,
            n1: 1,
            n2: 1,
            n3: 1,
        }
        .validated()
    }

    /// Symmetric configuration t1' = r2' = q. Feasible for q >= 1/sqrt(2).
    pub fn diagonal(q: f64) -> Result<Self> {
        Self::new(q, q)
    }

    /// Domain checks; feasibility is left to [`solve`].
    pub fn validated(self) -> Result<Self> {
        for (name, x) in [
            ("t1_prime", self.t1_prime),
            ("r2_prime", self.r2_prime),
            ("u_prime", self.u_prime),
        ] {
            if !x.is_finite() || !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {x}"
                )));
            }
        }
        if self.u_prime == 0.0 {
            // At u' = 0 the target coincidence vanishes identically.
            return Err(Error::InvalidParameter(
                "u_prime = 0 is excluded: the target coincidence probability vanishes".into(),
            ));
        }
        if self.t1_prime == 0.0 || self.r2_prime == 0.0 {
            return Err(Error::InvalidParameter(
                "t1_prime and r2_prime must be positive: the balance conditions divide by them"
                    .into(),
            ));
        }
        if !self.phi0.is_finite() {
            return Err(Error::InvalidParameter("phi0 must be finite".into()));
        }
        check_odd("n1", self.n1)?;
        check_odd("n2", self.n2)?;
        check_odd("n3", self.n3)?;
        Ok(self)
    }
}

/// A full parameter assignment satisfying the constraint system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardySolution {
    pub configuration: HardyConfiguration,
    /// Absorber transmission of the unprimed side-2 setting, derived from
    /// u^2 = r1' t2' / (u' t1' r2').
    pub u: f64,
    pub r1: f64,
    pub t1: f64,
    pub r2: f64,
    pub t2: f64,
    pub r1_prime: f64,
    pub t1_prime: f64,
    pub r2_prime: f64,
    pub t2_prime: f64,
    pub phases: PhaseAssignment,
    /// Target coincidence P(U1,U2) in the doubly-primed configuration.
    pub hardy_probability: f64,
    /// Fraction (1 + u^2) / 2 of emitted pairs surviving the absorber in the
    /// unprimed side-2 configuration.
    pub subensemble_fraction: f64,
}

impl HardySolution {
    pub fn setting_phi1(&self) -> OpticalSetting {
        OpticalSetting::with_components(self.phases.phi1, self.r1, self.t1, 1.0)
            .expect("solver output is normalized")
    }

    pub fn setting_phi1_prime(&self) -> OpticalSetting {
        OpticalSetting::with_components(self.phases.phi1_prime, self.r1_prime, self.t1_prime, 1.0)
            .expect("solver output is normalized")
    }

    pub fn setting_phi2(&self) -> OpticalSetting {
        OpticalSetting::with_components(self.phases.phi2, self.r2, self.t2, self.u)
            .expect("solver output is normalized")
    }

    pub fn setting_phi2_prime(&self) -> OpticalSetting {
        OpticalSetting::with_components(
            self.phases.phi2_prime,
            self.r2_prime,
            self.t2_prime,
            self.configuration.u_prime,
        )
        .expect("solver output is normalized")
    }

    pub fn setting_pair(&self, pair: SettingPair) -> (OpticalSetting, OpticalSetting) {
        let s1 = if pair.side1_primed() {
            self.setting_phi1_prime()
        } else {
            self.setting_phi1()
        };
        let s2 = if pair.side2_primed() {
            self.setting_phi2_prime()
        } else {
            self.setting_phi2()
        };
        (s1, s2)
    }

    /// Closed-form probability tables for the four configurations, in
    /// [`SettingPair::ALL`] order.
    pub fn tables(&self) -> [JointProbabilityTable; 4] {
        SettingPair::ALL.map(|pair| {
            let (s1, s2) = self.setting_pair(pair);
            closed_form::joint_probability_table(&s1, &s2)
        })
    }

    /// Same four tables from the amplitude-level propagation.
    pub fn oracle_tables(&self) -> [JointProbabilityTable; 4] {
        SettingPair::ALL.map(|pair| {
            let (s1, s2) = self.setting_pair(pair);
            crate::optics::joint_table(&s1, &s2)
        })
    }

    /// Largest residual over the three balance conditions, their product
    /// form, the four pinned cosines, and the three zero coincidences.
    /// Near zero (1e-12) for any solver output.
    pub fn max_residual(&self) -> f64 {
        let balances = [
            self.u * self.r1 * self.t2 - self.t1 * self.r2,
            self.configuration.u_prime * self.t1 * self.r2_prime - self.r1 * self.t2_prime,
            self.u * self.t1_prime * self.r2 - self.r1_prime * self.t2,
            self.u * self.u * self.configuration.u_prime * self.t1_prime * self.r2_prime
                - self.r1_prime * self.t2_prime,
        ];
        let cosines = self.phases.differences().map(|d| d.cos() + 1.0);
        let tables = self.tables();
        let zeros = [tables[0].p_l1_l2, tables[1].p_u1_u2, tables[2].p_u1_u2];
        balances
            .iter()
            .chain(cosines.iter())
            .chain(zeros.iter())
            .fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Target coincidence probability `[u' t1' r2' (1 - u^2)]^2 / 2`.
///
/// On the diagonal t1' = r2' = q with u' = 1 this is `(2 q^2 - 1)^2 / 2`.
pub fn hardy_probability(u_prime: f64, t1_prime: f64, r2_prime: f64, u: f64) -> f64 {
    let x = u_prime * t1_prime * r2_prime * (1.0 - u * u);
    0.5 * x * x
}

/// Solves the constraint system for a feasible configuration.
///
/// `r1/t1` and `t2/r2` are fixed as ratios by the balance conditions; the
/// solver normalizes each pair to r^2 + t^2 = 1. Corner cases:
///
/// - `t1' = 1` forces u = 0 and leaves the third balance vacuous. For
///   r2' < 1 the first balance then forces r2 = 0; at the extreme point
///   t1' = r2' = 1 every (r2, t2) satisfies the system and the 50-50 value
///   is chosen, continuing the diagonal family (which always yields a
///   50-50 side-2 splitter).
pub fn solve(config: &HardyConfiguration) -> Result<HardySolution> {
    let config = config.validated()?;
    let a = config.t1_prime;
    let b = config.r2_prime;
    let up = config.u_prime;
    let a_comp = (1.0 - a * a).max(0.0).sqrt(); // r1'
    let b_comp = (1.0 - b * b).max(0.0).sqrt(); // t2'

    let u_squared = a_comp * b_comp / (up * a * b);
    if u_squared > 1.0 + FEASIBILITY_SLACK {
        return Err(Error::Infeasible {
            t1_prime: a,
            r2_prime: b,
            u_prime: up,
            u_squared,
        });
    }
    let u_squared = u_squared.min(1.0);
    let u = u_squared.sqrt();

    // r1 / t1 = u' r2' / t2'.
    let n1 = (up * b).hypot(b_comp);
    let r1 = up * b / n1;
    let t1 = b_comp / n1;

    // t2 / r2 = u t1' / r1'; degenerate only when t1' = 1 (then u = 0).
    let (r2, t2) = if u * a == 0.0 && a_comp == 0.0 {
        if b >= 1.0 {
            (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
        } else {
            (0.0, 1.0)
        }
    } else {
        let n2 = (u * a).hypot(a_comp);
        (a_comp / n2, u * a / n2)
    };

    let phases = assign_phases(config.phi0, config.n1, config.n2, config.n3)?;

    Ok(HardySolution {
        configuration: config,
        u,
        r1,
        t1,
        r2,
        t2,
        r1_prime: a_comp,
        t1_prime: a,
        r2_prime: b,
        t2_prime: b_comp,
        phases,
        hardy_probability: hardy_probability(up, a, b, u),
        subensemble_fraction: 0.5 * (1.0 + u_squared),
    })
}

/// What the standard apparatus (u = 1, 50-50 splitters) does under the same
/// three zero conditions: the fourth coincidence is forced to zero and the
/// four correlations all equal -1, saturating the CHSH bound.
#[derive(Debug, Clone, Serialize)]
pub struct StandardSetupReport {
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub phases: PhaseAssignment,
    /// cos of the four configuration phase differences; all -1.
    pub cosines: [f64; 4],
    /// P(U1,U2) in the doubly-primed configuration; forced to 0.
    pub target_coincidence: f64,
    pub correlations: bell::CorrelationSet,
    pub chsh: bell::InequalityReport,
}

/// Evaluates the standard apparatus at the phases fixed by three odd
/// integers. Rejects even integers.
pub fn check_standard_infeasibility(n1: i64, n2: i64, n3: i64) -> Result<StandardSetupReport> {
    let phases = assign_phases(0.0, n1, n2, n3)?;
    let side1 = |phi| OpticalSetting::side1(phi, FRAC_1_SQRT_2).expect("valid");
    let side2 = |phi| OpticalSetting::side2(phi, FRAC_1_SQRT_2, 1.0).expect("valid");
    let tables = [
        closed_form::joint_probability_table(&side1(phases.phi1), &side2(phases.phi2)),
        closed_form::joint_probability_table(&side1(phases.phi1), &side2(phases.phi2_prime)),
        closed_form::joint_probability_table(&side1(phases.phi1_prime), &side2(phases.phi2)),
        closed_form::joint_probability_table(&side1(phases.phi1_prime), &side2(phases.phi2_prime)),
    ];
    let (correlations, chsh) = bell::chsh(&tables, false)?;
    Ok(StandardSetupReport {
        n1,
        n2,
        n3,
        phases,
        cosines: phases.differences().map(f64::cos),
        target_coincidence: tables[3].p_u1_u2,
        correlations,
        chsh,
    })
}

/// Deterministic grid search for the maximum target coincidence over the
/// feasible region with u' = 1, followed by local grid refinement. Ties
/// resolve to the lexicographically smallest (t1', r2'). The analytic
/// optimum sits at (1, 1) with value 1/2, so this doubles as an internal
/// consistency check.
pub fn maximize_hardy(resolution: usize) -> Result<(HardyConfiguration, f64)> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }

    let value = |a: f64, b: f64| -> Option<f64> {
        // Inline feasibility and objective; full solves are not needed to
        // rank grid points.
        if a <= 0.0 || b <= 0.0 {
            return None;
        }
        let u_squared = ((1.0 - a * a).max(0.0) * (1.0 - b * b).max(0.0)).sqrt() / (a * b);
        if u_squared > 1.0 + FEASIBILITY_SLACK {
            return None;
        }
        Some(hardy_probability(1.0, a, b, u_squared.min(1.0).sqrt()))
    };

    let mut best = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let scan = |lo_a: f64, hi_a: f64, lo_b: f64, hi_b: f64, best: &mut (f64, f64, f64)| {
        for i in 0..resolution {
            let a = lo_a + (hi_a - lo_a) * i as f64 / (resolution - 1) as f64;
            for j in 0..resolution {
                let b = lo_b + (hi_b - lo_b) * j as f64 / (resolution - 1) as f64;
                if let Some(h) = value(a, b) {
                    if h > best.2 {
                        *best = (a, b, h);
                    }
                }
            }
        }
    };

    scan(0.0, 1.0, 0.0, 1.0, &mut best);
    let mut half_width = 1.0 / (resolution - 1) as f64;
    for _ in 0..6 {
        let (a0, b0, _) = best;
        scan(
            (a0 - half_width).max(0.0),
            (a0 + half_width).min(1.0),
            (b0 - half_width).max(0.0),
            (b0 + half_width).min(1.0),
            &mut best,
        );
        half_width /= (resolution - 1) as f64;
    }

    let config = HardyConfiguration::new(best.0, best.1)?;
    Ok((config, best.2))
}
