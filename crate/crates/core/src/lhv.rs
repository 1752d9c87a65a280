//! Exhaustive audit of locally realistic models.
//!
//! A hidden state assigns each side a response to each of its two settings:
//! side 1 picks L or U, side 2 picks L, U or A. That gives 2*2*3*3 = 36
//! deterministic strategies; every stochastic local model is a mixture of
//! them, because per-setting response probabilities factor into a product
//! distribution over response functions and joint probabilities are linear
//! in that distribution. Checking an inequality on the 36 vertices therefore
//! checks it on every local model.
//!
//! Two facts are established here by direct enumeration:
//!
//! - the full-ensemble bound ([`crate::bell::ch_total`]) holds on every
//!   vertex, with the worst margin exactly 0;
//! - the postselected bound ([`crate::bell::ch_postselected`]) is broken,
//!   with margin up to 1, by strategies that answer A to the unprimed
//!   side-2 setting, and only by those. Discarding absorbed trials turns a
//!   classical strategy into an apparent nonlocality violation.

use serde::Serialize;

use crate::bell::{self, ChInputs, InequalityReport};
use crate::error::{Error, Result};
use crate::optics::{JointProbabilityTable, SettingPair, Side1Outcome, Side2Outcome};

/// One deterministic local response table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    /// Responses of side 1 to (phi1, phi1').
    pub side1: [Side1Outcome; 2],
    /// Responses of side 2 to (phi2, phi2').
    pub side2: [Side2Outcome; 2],
}

impl DeterministicStrategy {
    pub fn response1(&self, primed: bool) -> Side1Outcome {
        self.side1[usize::from(primed)]
    }

    pub fn response2(&self, primed: bool) -> Side2Outcome {
        self.side2[usize::from(primed)]
    }

    /// The joint outcome this strategy produces in a given configuration.
    pub fn outcome(&self, pair: SettingPair) -> (Side1Outcome, Side2Outcome) {
        (
            self.response1(pair.side1_primed()),
            self.response2(pair.side2_primed()),
        )
    }
}

/// All 36 strategies in canonical order: side-1 responses vary slowest
/// (plain before primed, L before U), side-2 responses fastest
/// (L before U before A). The first strategy answers L everywhere.
pub fn enumerate_strategies() -> Vec<DeterministicStrategy> {
    let mut out = Vec::with_capacity(36);
    for o1_plain in Side1Outcome::ALL {
        for o1_primed in Side1Outcome::ALL {
            for o2_plain in Side2Outcome::ALL {
                for o2_primed in Side2Outcome::ALL {
                    out.push(DeterministicStrategy {
                        side1: [o1_plain, o1_primed],
                        side2: [o2_plain, o2_primed],
                    });
                }
            }
        }
    }
    out
}

fn point_mass(o1: Side1Outcome, o2: Side2Outcome) -> JointProbabilityTable {
    let mut t = JointProbabilityTable {
        p_l1_l2: 0.0,
        p_l1_u2: 0.0,
        p_l1_a2: 0.0,
        p_u1_l2: 0.0,
        p_u1_u2: 0.0,
        p_u1_a2: 0.0,
    };
    let slot = match (o1, o2) {
        (Side1Outcome::L, Side2Outcome::L) => &mut t.p_l1_l2,
        (Side1Outcome::L, Side2Outcome::U) => &mut t.p_l1_u2,
        (Side1Outcome::L, Side2Outcome::A) => &mut t.p_l1_a2,
        (Side1Outcome::U, Side2Outcome::L) => &mut t.p_u1_l2,
        (Side1Outcome::U, Side2Outcome::U) => &mut t.p_u1_u2,
        (Side1Outcome::U, Side2Outcome::A) => &mut t.p_u1_a2,
    };
    *slot = 1.0;
    t
}

/// The four configuration tables of a deterministic strategy: each is a 0/1
/// point mass at the strategy's joint outcome.
pub fn strategy_tables(strategy: &DeterministicStrategy) -> [JointProbabilityTable; 4] {
    SettingPair::ALL.map(|pair| {
        let (o1, o2) = strategy.outcome(pair);
        point_mass(o1, o2)
    })
}

/// A mixture over the 36 deterministic strategies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LhvMixture {
    /// Weights in canonical strategy order; nonnegative, summing to 1.
    pub weights: Vec<f64>,
}

impl LhvMixture {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != 36 {
            return Err(Error::InvalidParameter(format!(
                "mixture needs 36 weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::InvalidParameter(
                "mixture weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(LhvMixture { weights })
    }

    /// Uniform mixture over all vertices.
    pub fn uniform() -> Self {
        LhvMixture {
            weights: vec![1.0 / 36.0; 36],
        }
    }

    /// Weight-averaged configuration tables.
    pub fn tables(&self) -> [JointProbabilityTable; 4] {
        let strategies = enumerate_strategies();
        let mut out = [point_mass(Side1Outcome::L, Side2Outcome::L); 4];
        for t in &mut out {
            t.p_l1_l2 = 0.0;
        }
        for (w, s) in self.weights.iter().zip(&strategies) {
            let tables = strategy_tables(s);
            for (acc, t) in out.iter_mut().zip(tables.iter()) {
                acc.p_l1_l2 += w * t.p_l1_l2;
                acc.p_l1_u2 += w * t.p_l1_u2;
                acc.p_l1_a2 += w * t.p_l1_a2;
                acc.p_u1_l2 += w * t.p_u1_l2;
                acc.p_u1_u2 += w * t.p_u1_u2;
                acc.p_u1_a2 += w * t.p_u1_a2;
            }
        }
        out
    }
}

/// Inequality inputs for a set of configuration tables, full-ensemble.
fn full_inputs(tables: &[JointProbabilityTable; 4]) -> (ChInputs, f64) {
    let inputs = ChInputs::from_tables(tables, "lhv-point-mass");
    let p_abs = bell::absorption_probability(&tables[0]);
    (inputs, p_abs)
}

/// Inequality inputs after discarding absorbed trials, without rescaling.
fn postselected_inputs(tables: &[JointProbabilityTable; 4]) -> ChInputs {
    let kept = tables.each_ref().map(JointProbabilityTable::postselected);
    ChInputs::from_tables(&kept, "lhv-point-mass-postselected")
}

/// A strategy's tables after postselection. The default (subensemble
/// frequencies relative to all emitted pairs) suits the ratio-insensitive
/// probability bounds; `renormalise` conditions each table on survival
/// instead, which fails for strategies that answer A to a setting.
pub fn postselected_strategy_tables(
    strategy: &DeterministicStrategy,
    renormalise: bool,
) -> Result<[JointProbabilityTable; 4]> {
    let tables = strategy_tables(strategy);
    if !renormalise {
        return Ok(tables.each_ref().map(JointProbabilityTable::postselected));
    }
    let mut out = tables;
    for table in &mut out {
        *table = table.conditioned_on_survival()?;
    }
    Ok(out)
}

/// Margins of one vertex under both bounds.
#[derive(Debug, Clone, Serialize)]
pub struct VertexAudit {
    pub index: usize,
    pub strategy: DeterministicStrategy,
    pub ch_total_margin: f64,
    pub postselected_margin: f64,
}

/// Results of the exhaustive vertex check.
#[derive(Debug, Clone, Serialize)]
pub struct VertexReport {
    pub vertices: Vec<VertexAudit>,
    pub max_ch_total_margin: f64,
    pub max_postselected_margin: f64,
}

/// Evaluates the full-ensemble bound (and, for contrast, the postselected
/// one) on every deterministic strategy. By mixture linearity the maximum
/// full-ensemble margin over vertices bounds every local model; it is 0.
pub fn verify_ch_total_all() -> VertexReport {
    let mut vertices = Vec::with_capacity(36);
    let mut max_total = f64::NEG_INFINITY;
    let mut max_post = f64::NEG_INFINITY;
    for (index, strategy) in enumerate_strategies().into_iter().enumerate() {
        let tables = strategy_tables(&strategy);
        let (inputs, p_abs) = full_inputs(&tables);
        let total = bell::ch_total(&inputs, p_abs).expect("point masses are probabilities");
        let post = bell::ch_postselected(&postselected_inputs(&tables))
            .expect("point masses are probabilities");
        max_total = max_total.max(total.margin);
        max_post = max_post.max(post.margin);
        vertices.push(VertexAudit {
            index,
            strategy,
            ch_total_margin: total.margin,
            postselected_margin: post.margin,
        });
    }
    VertexReport {
        vertices,
        max_ch_total_margin: max_total,
        max_postselected_margin: max_post,
    }
}

/// Margins of an explicit mixture under the full-ensemble bound.
pub fn mixture_ch_total(mixture: &LhvMixture) -> Result<InequalityReport> {
    let tables = mixture.tables();
    let (inputs, p_abs) = full_inputs(&tables);
    bell::ch_total(&inputs, p_abs)
}

/// Finds a deterministic strategy whose postselected record violates the
/// Hardy-form bound maximally (margin 1): answer U to both primed settings,
/// L to the plain side-1 setting, and A to the plain side-2 setting. The
/// absorbed trials carry the whole correction; discarding them leaves an
/// apparently nonlocal record, while the full-ensemble bound still holds.
pub fn find_postselected_violation() -> (DeterministicStrategy, InequalityReport) {
    let mut best: Option<(DeterministicStrategy, InequalityReport)> = None;
    for strategy in enumerate_strategies() {
        let tables = strategy_tables(&strategy);
        let report = bell::ch_postselected(&postselected_inputs(&tables))
            .expect("point masses are probabilities");
        let better = match &best {
            None => true,
            Some((_, b)) => report.margin > b.margin,
        };
        if better {
            best = Some((strategy, report));
        }
    }
    best.expect("the strategy set is nonempty")
}
