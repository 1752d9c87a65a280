//! Command-line front end: JSON in, JSON or CSV out.
//!
//! Exit codes: 0 success, 2 validation error, 3 infeasible configuration,
//! 4 insufficient data. Numeric output goes through the shortest exact
//! decimal representation, so identical runs diff byte-identically.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bell::{self, ChInputs, CorrelationSet, InequalityReport};
use crate::error::{Error, Result};
use crate::events;
use crate::hardy::{self, HardyConfiguration, HardySolution};
use crate::ifm;
use crate::lhv;
use crate::optics::SettingPair;

/// Environment variable consulted for the default sampling seed.
pub const SEED_ENV_VAR: &str = "BIPHOTON_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "biphoton",
    version,
    about = "Two-photon interferometer toolkit: solve the zero-coincidence setting system, \
             audit Bell-type inequalities with and without postselection, generate seeded \
             coincidence records, and analyze interaction-free detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Configuration source: inline flags or a JSON file. The file may be a bare
/// configuration object, a `solve` output (its `configuration` field is
/// used), or an experiment spec with optional sampling fields.
#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// Symmetric configuration t1' = r2' = q.
    #[arg(long, conflicts_with_all = ["q2", "t1p", "r2p", "config"])]
    pub q: Option<f64>,
    /// Symmetric configuration given as q^2.
    #[arg(long, conflicts_with_all = ["t1p", "r2p", "config"])]
    pub q2: Option<f64>,
    /// Primed side-1 splitter transmittivity.
    #[arg(long, requires = "r2p", conflicts_with = "config")]
    pub t1p: Option<f64>,
    /// Primed side-2 splitter reflectivity.
    #[arg(long, requires = "t1p", conflicts_with = "config")]
    pub r2p: Option<f64>,
    /// Absorber transmission of the primed side-2 setting (default 1).
    #[arg(long)]
    pub uprime: Option<f64>,
    /// Free phase offset (default 0).
    #[arg(long)]
    pub phi0: Option<f64>,
    /// Odd phase integers (default 1 each).
    #[arg(long)]
    pub n1: Option<i64>,
    #[arg(long)]
    pub n2: Option<i64>,
    #[arg(long)]
    pub n3: Option<i64>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Sampling fields an experiment spec may carry alongside the configuration.
#[derive(Debug, Default, Clone, Copy)]
pub struct SpecExtras {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub weights: Option<[f64; 4]>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the zero-coincidence constraint system.
    Solve {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output path (stdout if omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Joint probability tables for the four configurations of a solution.
    Probs {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Analytic inequality reports for a solution.
    Audit {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Seeded Monte Carlo record plus empirical audit.
    Sample {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of trials.
        #[arg(long, short = 'n')]
        trials: Option<u64>,
        /// Seed; falls back to BIPHOTON_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Relative weights of the four configurations.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        weights: Option<Vec<f64>>,
        /// Event log CSV path (skipped if omitted).
        #[arg(long)]
        events_out: Option<PathBuf>,
        /// Summary JSON path (stdout if omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Deterministic-strategy audit and the postselection violation exhibit.
    Lhv {
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Interaction-free measurement figures at a point, or a sweep CSV.
    Ifm {
        /// Object transmission amplitude.
        #[arg(long, conflicts_with = "sweep")]
        u: Option<f64>,
        /// Side-2 reflectivity.
        #[arg(long, conflicts_with = "sweep")]
        r2: Option<f64>,
        /// Emit a (u, r2) grid sweep CSV instead of a point report.
        #[arg(long)]
        sweep: bool,
        /// Grid resolution per axis for --sweep.
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Feasible-region sweep CSV: target probability and bound margins.
    Sweep {
        /// Grid resolution per axis over the feasible region.
        #[arg(long, default_value_t = 110)]
        resolution: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

impl ConfigArgs {
    /// Resolves flags and/or file into a validated configuration.
    pub fn resolve(&self) -> Result<(HardyConfiguration, SpecExtras)> {
        let (mut config, extras) = if let Some(path) = &self.config {
            load_config_file(path)?
        } else {
            let (t1_prime, r2_prime) = if let Some(q) = self.q {
                (q, q)
            } else if let Some(q2) = self.q2 {
                if q2 < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "q2 must be nonnegative, got {q2}"
                    )));
                }
                let q = q2.sqrt();
                (q, q)
            } else if let (Some(a), Some(b)) = (self.t1p, self.r2p) {
                (a, b)
            } else {
                return Err(Error::InvalidParameter(
                    "a configuration is required: --q, --q2, --t1p/--r2p, or --config".into(),
                ));
            };
            (
                HardyConfiguration {
                    t1_prime,
                    r2_prime,
                    u_prime: 1.0,
                    phi0: 0.0,
                    n1: 1,
                    n2: 1,
                    n3: 1,
                },
                SpecExtras::default(),
            )
        };
        if let Some(u_prime) = self.uprime {
            config.u_prime = u_prime;
        }
        if let Some(phi0) = self.phi0 {
            config.phi0 = phi0;
        }
        if let Some(n1) = self.n1 {
            config.n1 = n1;
        }
        if let Some(n2) = self.n2 {
            config.n2 = n2;
        }
        if let Some(n3) = self.n3 {
            config.n3 = n3;
        }
        Ok((config.validated()?, extras))
    }
}

fn parse_weights(value: &Value) -> Result<[f64; 4]> {
    let list: Vec<f64> = serde_json::from_value(value.clone())?;
    if list.len() != 4 {
        return Err(Error::InvalidParameter(format!(
            "weights must have 4 entries, got {}",
            list.len()
        )));
    }
    Ok([list[0], list[1], list[2], list[3]])
}

fn load_config_file(path: &Path) -> Result<(HardyConfiguration, SpecExtras)> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    let config_value = if value.get("configuration").is_some() {
        value["configuration"].clone()
    } else {
        value.clone()
    };

    let config: HardyConfiguration = if config_value.get("t1_prime").is_some() {
        serde_json::from_value(config_value)?
    } else if let Some(q) = config_value.get("q").and_then(Value::as_f64) {
        let mut c = HardyConfiguration::diagonal(q)?;
        if let Ok(partial) =
            serde_json::from_value::<HardyConfiguration>(patch_diagonal(&config_value, q))
        {
            c = partial;
        }
        c
    } else if let Some(q2) = config_value.get("q2").and_then(Value::as_f64) {
        HardyConfiguration::diagonal(q2.sqrt())?
    } else {
        return Err(Error::InvalidParameter(format!(
            "{} holds no configuration: expected t1_prime/r2_prime, q, or q2",
            path.display()
        )));
    };

    let extras = SpecExtras {
        trials: value.get("trials").and_then(Value::as_u64),
        seed: value.get("seed").and_then(Value::as_u64),
        weights: match value.get("weights") {
            Some(w) => Some(parse_weights(w)?),
            None => None,
        },
    };
    Ok((config, extras))
}

fn patch_diagonal(value: &Value, q: f64) -> Value {
    // Inject the diagonal splitter pair so serde picks up any explicit
    // u_prime / phi0 / n fields next to "q".
    let mut patched = value.clone();
    if let Value::Object(map) = &mut patched {
        map.insert("t1_prime".into(), q.into());
        map.insert("r2_prime".into(), q.into());
    }
    patched
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, content)?,
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

#[derive(Serialize)]
struct ProbsOutput {
    solution: HardySolution,
    tables: BTreeMap<&'static str, crate::optics::JointProbabilityTable>,
}

#[derive(Serialize)]
struct ChshOutput {
    correlations: CorrelationSet,
    report: InequalityReport,
}

#[derive(Serialize)]
struct AuditOutput {
    solution: HardySolution,
    ch_postselected: InequalityReport,
    ch_total: InequalityReport,
    /// Absent when u = 1, where the simplified reduction degenerates.
    ch_simplified: Option<InequalityReport>,
    chsh_unnormalised: ChshOutput,
    chsh_normalised: ChshOutput,
    chsh_conditional: ChshOutput,
}

/// Analytic inequality reports for a solved configuration.
pub fn audit_solution(solution: &HardySolution) -> Result<AuditOutputOwned> {
    let tables = solution.tables();
    let inputs = ChInputs::from_tables(&tables, "closed-form");
    let p_abs = bell::absorption_probability(&tables[0]);
    let ch_simplified = if solution.u < 1.0 {
        Some(bell::ch_simplified_bound(
            solution.configuration.u_prime,
            solution.t1_prime,
            solution.r2_prime,
            solution.u,
        )?)
    } else {
        None
    };
    let (e_u, r_u) = bell::chsh(&tables, false)?;
    let (e_n, r_n) = bell::chsh(&tables, true)?;
    let (e_c, r_c) = bell::chsh_conditional(&tables)?;
    Ok(AuditOutputOwned {
        ch_postselected: bell::ch_postselected(&inputs)?,
        ch_total: bell::ch_total(&inputs, p_abs)?,
        ch_simplified,
        chsh_unnormalised: (e_u, r_u),
        chsh_normalised: (e_n, r_n),
        chsh_conditional: (e_c, r_c),
    })
}

/// Owned form of the audit results, independent of serialization.
pub struct AuditOutputOwned {
    pub ch_postselected: InequalityReport,
    pub ch_total: InequalityReport,
    pub ch_simplified: Option<InequalityReport>,
    pub chsh_unnormalised: (CorrelationSet, InequalityReport),
    pub chsh_normalised: (CorrelationSet, InequalityReport),
    pub chsh_conditional: (CorrelationSet, InequalityReport),
}

#[derive(Serialize)]
struct LhvOutput {
    strategy_count: usize,
    max_ch_total_margin: f64,
    max_postselected_margin: f64,
    vertices: Vec<lhv::VertexAudit>,
    violation_exhibit: LhvExhibit,
}

#[derive(Serialize)]
struct LhvExhibit {
    strategy: lhv::DeterministicStrategy,
    postselected: InequalityReport,
    full_ensemble: InequalityReport,
}

#[derive(Serialize)]
struct SampleOutput {
    solution: HardySolution,
    #[serde(flatten)]
    summary: events::RunSummary,
}

/// One row of the feasible-region sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub t1_prime: f64,
    pub r2_prime: f64,
    pub u: f64,
    pub hardy_probability: f64,
    pub ch_postselected_margin: f64,
    pub ch_total_margin: f64,
}

/// Sweeps a resolution x resolution grid over the feasible region with
/// u' = 1 (the degenerate t1' = 1, r2' = 0 corner is skipped).
pub fn sweep_feasible(resolution: usize) -> Result<Vec<SweepRow>> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "sweep resolution must be at least 2, got {resolution}"
        )));
    }
    let mut rows = Vec::with_capacity(resolution * resolution);
    for i in 1..=resolution {
        let a = i as f64 / resolution as f64;
        let b_min = (1.0 - a * a).max(0.0).sqrt();
        for j in 0..resolution {
            let b = (b_min + (1.0 - b_min) * j as f64 / (resolution - 1) as f64).min(1.0);
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
            })?;
            let tables = solution.tables();
            let inputs = ChInputs::from_tables(&tables, "closed-form");
            let p_abs = bell::absorption_probability(&tables[0]);
            rows.push(SweepRow {
                t1_prime: a,
                r2_prime: b,
                u: solution.u,
                hardy_probability: solution.hardy_probability,
                ch_postselected_margin: bell::ch_postselected(&inputs)?.margin,
                ch_total_margin: bell::ch_total(&inputs, p_abs)?.margin,
            });
        }
    }
    Ok(rows)
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "t1_prime,r2_prime,u,hardy_probability,ch_postselected_margin,ch_total_margin\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.t1_prime,
            row.r2_prime,
            row.u,
            row.hardy_probability,
            row.ch_postselected_margin,
            row.ch_total_margin
        ));
    }
    out
}

fn default_seed() -> u64 {
    std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

/// Runs one parsed command.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { config, out } => {
            let (config, _) = config.resolve()?;
            let solution = hardy::solve(&config)?;
            write_output(out.as_deref(), &to_json(&solution)?)
        }
        Command::Probs { config, out } => {
            let (config, _) = config.resolve()?;
            let solution = hardy::solve(&config)?;
            let tables = solution.tables();
            let output = ProbsOutput {
                tables: SettingPair::ALL
                    .iter()
                    .map(|p| p.label())
                    .zip(tables)
                    .collect(),
                solution,
            };
            write_output(out.as_deref(), &to_json(&output)?)
        }
        Command::Audit { config, out } => {
            let (config, _) = config.resolve()?;
            let solution = hardy::solve(&config)?;
            let audit = audit_solution(&solution)?;
            let output = AuditOutput {
                solution,
                ch_postselected: audit.ch_postselected,
                ch_total: audit.ch_total,
                ch_simplified: audit.ch_simplified,
                chsh_unnormalised: ChshOutput {
                    correlations: audit.chsh_unnormalised.0,
                    report: audit.chsh_unnormalised.1,
                },
                chsh_normalised: ChshOutput {
                    correlations: audit.chsh_normalised.0,
                    report: audit.chsh_normalised.1,
                },
                chsh_conditional: ChshOutput {
                    correlations: audit.chsh_conditional.0,
                    report: audit.chsh_conditional.1,
                },
            };
            write_output(out.as_deref(), &to_json(&output)?)
        }
        Command::Sample {
            config,
            trials,
            seed,
            weights,
            events_out,
            out,
        } => {
            let (config, extras) = config.resolve()?;
            let solution = hardy::solve(&config)?;
            let n = trials.or(extras.trials).unwrap_or(1);
            let seed = seed.or(extras.seed).unwrap_or_else(default_seed);
            let weights = match weights {
                Some(w) => [w[0], w[1], w[2], w[3]],
                None => extras.weights.unwrap_or([1.0; 4]),
            };
            let (events, summary) = events::run_summary(&solution.tables(), n, seed, weights)?;
            if let Some(path) = events_out {
                let mut buffer = Vec::new();
                events::write_events_csv(&events, &mut buffer)?;
                fs::write(path, buffer)?;
            }
            let output = SampleOutput { solution, summary };
            write_output(out.as_deref(), &to_json(&output)?)
        }
        Command::Lhv { out } => {
            let report = lhv::verify_ch_total_all();
            let (strategy, postselected) = lhv::find_postselected_violation();
            let tables = lhv::strategy_tables(&strategy);
            let inputs = ChInputs::from_tables(&tables, "lhv-point-mass");
            let full_ensemble = bell::ch_total(&inputs, bell::absorption_probability(&tables[0]))?;
            let output = LhvOutput {
                strategy_count: report.vertices.len(),
                max_ch_total_margin: report.max_ch_total_margin,
                max_postselected_margin: report.max_postselected_margin,
                vertices: report.vertices,
                violation_exhibit: LhvExhibit {
                    strategy,
                    postselected,
                    full_ensemble,
                },
            };
            write_output(out.as_deref(), &to_json(&output)?)
        }
        Command::Ifm {
            u,
            r2,
            sweep,
            resolution,
            out,
        } => {
            if sweep {
                if resolution < 2 {
                    return Err(Error::InvalidParameter(
                        "ifm sweep resolution must be at least 2".into(),
                    ));
                }
                let grid: Vec<f64> = (0..resolution)
                    .map(|i| i as f64 / (resolution - 1) as f64)
                    .collect();
                let rows = ifm::sweep(&grid, &grid)?;
                let mut buffer = Vec::new();
                ifm::write_sweep_csv(&rows, &mut buffer)?;
                write_output(out.as_deref(), &String::from_utf8(buffer).expect("ascii"))
            } else {
                let (u, r2) = match (u, r2) {
                    (Some(u), Some(r2)) => (u, r2),
                    _ => {
                        return Err(Error::InvalidParameter(
                            "ifm needs --u and --r2, or --sweep".into(),
                        ))
                    }
                };
                let report = ifm::ifm_efficiency(u, r2)?;
                write_output(out.as_deref(), &to_json(&report)?)
            }
        }
        Command::Sweep { resolution, out } => {
            let rows = sweep_feasible(resolution)?;
            write_output(out.as_deref(), &sweep_csv(&rows))
        }
    }
}
