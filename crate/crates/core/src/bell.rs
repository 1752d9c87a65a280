//! Bell-type inequality audits.
//!
//! Four inequality families are evaluated:
//!
//! - the Hardy-form probability inequality over the postselected record
//!   ([`ch_postselected`]), sensitive only to ratios of probabilities;
//! - its full-ensemble extension that adds the absorption probability to the
//!   bound ([`ch_total`]), which holds for every locally realistic model of
//!   the complete correlation pattern;
//! - the simplified product-form bound the previous one reduces to when the
//!   zero-coincidence conditions hold ([`ch_simplified_bound`]);
//! - the correlation-function inequality with classical bound 2 ([`chsh`]),
//!   in unnormalised and normalised variants.
//!
//! The outcome-to-value map for correlations is fixed: a count at L maps to
//! [`OUTCOME_VALUE_L`] (-1), a count at U to [`OUTCOME_VALUE_U`] (+1),
//! absorption contributes nothing. Unnormalised correlations divide by the
//! full ensemble (absorbed pairs included) and therefore never exceed 1 in
//! magnitude.
//!
//! The normalised variant rescales all four correlations to the intensity of
//! the pair source that remains once absorbed pairs are drained away, i.e.
//! divides by the surviving mass of the first configuration's table,
//! (1 + u^2) / 2. Rescaled correlations for configurations that absorb less
//! than the reference can exceed 1 in magnitude; that excess is exactly what
//! the postselected record fakes. A per-configuration conditional variant
//! ([`chsh_conditional`]) is also provided; for the u' = 1 solution family
//! it saturates the classical bound identically (see tests), while mixed
//! absorbers (u' < 1) push it past the bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optics::{JointProbabilityTable, SettingPair, Side2Outcome};

/// Margins above this are flagged as violations.
pub const VIOLATION_TOL: f64 = 1e-12;

/// Value assigned to a count at L1 or L2.
pub const OUTCOME_VALUE_L: f64 = -1.0;
/// Value assigned to a count at U1 or U2.
pub const OUTCOME_VALUE_U: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InequalityId {
    #[serde(rename = "CH-postselected")]
    ChPostselected,
    #[serde(rename = "CH-total")]
    ChTotal,
    #[serde(rename = "CH-simplified")]
    ChSimplified,
    #[serde(rename = "CHSH")]
    Chsh,
}

/// One probability or correlation entering an inequality, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
    pub source: String,
}

/// Outcome of one inequality evaluation. `violated` is `margin > 1e-12`;
/// the raw margin is carried so callers can apply their own thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub inequality: InequalityId,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub violated: bool,
    pub terms: Vec<Term>,
}

impl InequalityReport {
    fn new(inequality: InequalityId, lhs: f64, rhs: f64, terms: Vec<Term>) -> Self {
        let margin = lhs - rhs;
        InequalityReport {
            inequality,
            lhs,
            rhs,
            margin,
            violated: margin > VIOLATION_TOL,
            terms,
        }
    }
}

/// The four joint probabilities entering the Hardy-form inequalities,
/// tagged with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChInputs {
    /// P(U1,U2) in the (phi1', phi2') configuration: the target coincidence.
    pub p_uu_both_primed: f64,
    /// P(L1,L2) in the (phi1, phi2) configuration.
    pub p_ll: f64,
    /// P(U1,U2) in the (phi1, phi2') configuration.
    pub p_uu_side2_primed: f64,
    /// P(U1,U2) in the (phi1', phi2) configuration.
    pub p_uu_side1_primed: f64,
    pub source: String,
}

/// Accepts values in [-1e-12, 0) as exact zeros: cancellation in the closed
/// forms can undershoot zero by a few ulps at zero-coincidence settings.
fn checked_probability(label: &str, value: f64) -> Result<f64> {
    if !value.is_finite() || !(-VIOLATION_TOL..=1.0 + VIOLATION_TOL).contains(&value) {
        return Err(Error::InvalidParameter(format!(
            "{label} must be a probability in [0, 1], got {value}"
        )));
    }
    Ok(value.clamp(0.0, 1.0))
}

impl ChInputs {
    pub fn new(
        p_uu_both_primed: f64,
        p_ll: f64,
        p_uu_side2_primed: f64,
        p_uu_side1_primed: f64,
        source: impl Into<String>,
    ) -> Result<Self> {
        Ok(ChInputs {
            p_uu_both_primed: checked_probability("P(U1,U2 | 1p-2p)", p_uu_both_primed)?,
            p_ll: checked_probability("P(L1,L2 | 1-2)", p_ll)?,
            p_uu_side2_primed: checked_probability("P(U1,U2 | 1-2p)", p_uu_side2_primed)?,
            p_uu_side1_primed: checked_probability("P(U1,U2 | 1p-2)", p_uu_side1_primed)?,
            source: source.into(),
        })
    }

    /// Reads the four probabilities out of the four configuration tables
    /// (in [`SettingPair::ALL`] order).
    pub fn from_tables(tables: &[JointProbabilityTable; 4], source: impl Into<String>) -> Self {
        ChInputs {
            p_uu_both_primed: tables[3].p_u1_u2,
            p_ll: tables[0].p_l1_l2,
            p_uu_side2_primed: tables[1].p_u1_u2,
            p_uu_side1_primed: tables[2].p_u1_u2,
            source: source.into(),
        }
    }

    fn labeled(&self) -> [(&'static str, f64); 4] {
        [
            ("P(U1,U2 | 1p-2p)", self.p_uu_both_primed),
            ("P(L1,L2 | 1-2)", self.p_ll),
            ("P(U1,U2 | 1-2p)", self.p_uu_side2_primed),
            ("P(U1,U2 | 1p-2)", self.p_uu_side1_primed),
        ]
    }

    fn terms(&self) -> Vec<Term> {
        self.labeled()
            .iter()
            .map(|&(label, value)| Term {
                label: label.into(),
                value,
                source: self.source.clone(),
            })
            .collect()
    }
}

/// Hardy-form probability inequality over the postselected record:
///
/// ```text
/// P(U1,U2 | 1p-2p) <= P(L1,L2 | 1-2) + P(U1,U2 | 1-2p) + P(U1,U2 | 1p-2)
/// ```
///
/// Scaling all four inputs by a common positive factor moves both sides
/// together, so the verdict depends only on probability ratios; the
/// unrenormalized postselected record can be fed in directly.
pub fn ch_postselected(inputs: &ChInputs) -> Result<InequalityReport> {
    // Revalidate: inputs may arrive from deserialized or hand-built values.
    let inputs = ChInputs::new(
        inputs.p_uu_both_primed,
        inputs.p_ll,
        inputs.p_uu_side2_primed,
        inputs.p_uu_side1_primed,
        inputs.source.clone(),
    )?;
    let rhs = inputs.p_ll + inputs.p_uu_side2_primed + inputs.p_uu_side1_primed;
    Ok(InequalityReport::new(
        InequalityId::ChPostselected,
        inputs.p_uu_both_primed,
        rhs,
        inputs.terms(),
    ))
}

/// Full-ensemble inequality: the bound of [`ch_postselected`] plus the
/// absorption probability P(A2 | phi2). Every locally realistic model of
/// the complete correlation pattern satisfies it, and so does the
/// apparatus for every feasible solution.
pub fn ch_total(inputs: &ChInputs, p_abs: f64) -> Result<InequalityReport> {
    let p_abs = checked_probability("P(A2 | 2)", p_abs)?;
    let base = ch_postselected(inputs)?;
    let mut terms = base.terms;
    terms.push(Term {
        label: "P(A2 | 2)".into(),
        value: p_abs,
        source: inputs.source.clone(),
    });
    Ok(InequalityReport::new(
        InequalityId::ChTotal,
        base.lhs,
        base.rhs + p_abs,
        terms,
    ))
}

/// The product-form bound `(u' t1' r2')^2 (1 - u^2) <= 1` that [`ch_total`]
/// reduces to when the three zero-coincidence conditions hold. Never
/// violated; saturated only at the extreme point (u' = t1' = r2' = 1,
/// u = 0). Degenerates at u^2 = 1, where the reduction divides by the
/// vanishing absorption probability.
pub fn ch_simplified_bound(
    u_prime: f64,
    t1_prime: f64,
    r2_prime: f64,
    u: f64,
) -> Result<InequalityReport> {
    for (name, x) in [
        ("u_prime", u_prime),
        ("t1_prime", t1_prime),
        ("r2_prime", r2_prime),
        ("u", u),
    ] {
        if !(0.0..=1.0).contains(&x) || !x.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must lie in [0, 1], got {x}"
            )));
        }
    }
    if u >= 1.0 {
        return Err(Error::DegenerateFullTransmission);
    }
    let product = u_prime * t1_prime * r2_prime;
    let lhs = product * product * (1.0 - u * u);
    let terms = vec![
        Term {
            label: "(u' t1' r2')^2".into(),
            value: product * product,
            source: "input".into(),
        },
        Term {
            label: "1 - u^2".into(),
            value: 1.0 - u * u,
            source: "input".into(),
        },
    ];
    Ok(InequalityReport::new(
        InequalityId::ChSimplified,
        lhs,
        1.0,
        terms,
    ))
}

/// The four correlation functions, one per configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationSet {
    /// E in the (phi1, phi2) configuration.
    pub e_12: f64,
    /// E in the (phi1, phi2') configuration.
    pub e_12p: f64,
    /// E in the (phi1', phi2) configuration.
    pub e_1p2: f64,
    /// E in the (phi1', phi2') configuration.
    pub e_1p2p: f64,
    pub normalised: bool,
}

impl CorrelationSet {
    pub fn values(&self) -> [f64; 4] {
        [self.e_12, self.e_12p, self.e_1p2, self.e_1p2p]
    }

    /// The audited combination E(1,2) + E(1,2') + E(1',2) - E(1',2').
    pub fn combination(&self) -> f64 {
        self.e_12 + self.e_12p + self.e_1p2 - self.e_1p2p
    }
}

fn raw_correlation(table: &JointProbabilityTable) -> f64 {
    table.p_l1_l2 + table.p_u1_u2 - table.p_l1_u2 - table.p_u1_l2
}

fn chsh_report(correlations: CorrelationSet) -> (CorrelationSet, InequalityReport) {
    let labels = ["E(1-2)", "E(1-2p)", "E(1p-2)", "E(1p-2p)"];
    let source = if correlations.normalised {
        "normalised"
    } else {
        "unnormalised"
    };
    let terms = labels
        .iter()
        .zip(correlations.values())
        .map(|(&label, value)| Term {
            label: label.into(),
            value,
            source: source.into(),
        })
        .collect();
    let report = InequalityReport::new(
        InequalityId::Chsh,
        correlations.combination().abs(),
        2.0,
        terms,
    );
    (correlations, report)
}

/// Correlation-function inequality |E(1,2) + E(1,2') + E(1',2) - E(1',2')|
/// <= 2, from the four configuration tables in [`SettingPair::ALL`] order.
///
/// `normalised = false` counts every emitted pair in the denominator (an
/// absorption event contributes zero to the numerator): the physical,
/// full-ensemble correlations. `normalised = true` refers all four
/// correlations to the surviving intensity of the reference configuration
/// (the first table): the statistics an observer of the drained source
/// would write down. Fails if the reference table has no surviving mass.
pub fn chsh(
    tables: &[JointProbabilityTable; 4],
    normalised: bool,
) -> Result<(CorrelationSet, InequalityReport)> {
    let raw = tables.each_ref().map(raw_correlation);
    let scale = if normalised {
        let survival = tables[0].non_absorption_mass();
        if survival <= 0.0 {
            return Err(Error::UndefinedCorrelation {
                pair: SettingPair::NeitherPrimed.label(),
            });
        }
        1.0 / survival
    } else {
        1.0
    };
    let e = raw.map(|x| x * scale);
    Ok(chsh_report(CorrelationSet {
        e_12: e[0],
        e_12p: e[1],
        e_1p2: e[2],
        e_1p2p: e[3],
        normalised,
    }))
}

/// Per-configuration conditional variant: each correlation is divided by its
/// own table's surviving mass, i.e. computed from the record with absorbed
/// trials of that configuration discarded. All |E| <= 1. Fails if any
/// configuration has no surviving mass.
pub fn chsh_conditional(
    tables: &[JointProbabilityTable; 4],
) -> Result<(CorrelationSet, InequalityReport)> {
    let mut e = [0.0f64; 4];
    for (k, table) in tables.iter().enumerate() {
        let survival = table.non_absorption_mass();
        if survival <= 0.0 {
            return Err(Error::UndefinedCorrelation {
                pair: SettingPair::ALL[k].label(),
            });
        }
        e[k] = raw_correlation(table) / survival;
    }
    Ok(chsh_report(CorrelationSet {
        e_12: e[0],
        e_12p: e[1],
        e_1p2: e[2],
        e_1p2p: e[3],
        normalised: true,
    }))
}

/// Absorption probability read from a configuration table.
pub fn absorption_probability(table: &JointProbabilityTable) -> f64 {
    table.side2_marginal(Side2Outcome::A)
}
