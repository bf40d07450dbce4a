//! Command-line interface: scenario loading, subcommand dispatch and the
//! CSV/JSON writers.
//!
//! Scenario files are JSON objects with keys `n_stas`, `n_rus`,
//! `arrival_rate`, `eocw_min`, `m` and optionally `timing`; command-line
//! flags override file values field by field.

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::aoi::{analyze, Analysis};
use crate::bounds::{
    approx_lower_bound, approx_lower_bound_hat, lower_bound_of_w, stationary_roots, RootRegime,
};
use crate::config::{poisson_to_slot_rate, NetworkConfig, SlotTiming};
use crate::error::{Result, UoraError};
use crate::optimizer::{
    efficient_search_alg1, efficient_search_alg2, exhaustive_search, OptimizationResult,
    SearchMethod,
};
use crate::sim::{run_simulation, Policy, SimConfig, SimStats};

#[derive(Debug, Parser)]
#[command(
    name = "uora-aoi",
    about = "Average Age of Information analysis, optimization and simulation \
             for IEEE 802.11ax UORA uplink random access",
    version
)]
pub struct Cli {
    /// JSON scenario file; flags override its fields
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output file (defaults to stdout)
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Uora,
    RoundRobin,
    MaxAoi,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Uora => Policy::Uora,
            PolicyArg::RoundRobin => Policy::RoundRobin,
            PolicyArg::MaxAoi => Policy::MaxAoi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exhaustive,
    Alg1,
    Alg2,
}

/// Scenario flags shared by every subcommand that needs a network.
#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Number of stations N
    #[arg(long, value_name = "N")]
    pub n_stas: Option<usize>,

    /// Number of random-access RUs L
    #[arg(long, value_name = "L")]
    pub n_rus: Option<usize>,

    /// Per-slot Bernoulli arrival probability in (0, 1]
    #[arg(long, value_name = "RATE")]
    pub lambda: Option<f64>,

    /// Continuous-time Poisson arrival rate (per microsecond); converted to a
    /// per-slot probability via the scenario timing block
    #[arg(long, value_name = "RATE", conflicts_with = "lambda")]
    pub poisson_rate: Option<f64>,

    /// Exponent of the minimum contention window, W_0 = 2^EOCW_min
    #[arg(long, value_name = "EXP")]
    pub eocw_min: Option<u32>,

    /// Maximum backoff level m
    #[arg(long, value_name = "M")]
    pub m: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the analytical AAoI pipeline for one scenario
    Analyze {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run the slot-level Monte Carlo simulator and report empirical
    /// statistics next to the analytical ones
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Slots per replication
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        /// Warmup slots discarded before measurement
        #[arg(long, default_value_t = 10_000)]
        warmup: u64,
        /// Base RNG seed; replications derive independent substreams
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Channel access policy
        #[arg(long, value_enum, default_value_t = PolicyArg::Uora)]
        policy: PolicyArg,
        /// Independent replications
        #[arg(long, default_value_t = 10)]
        replications: u32,
    },
    /// Search for the AAoI-minimizing (W_0, m)
    Optimize {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Search strategy
        #[arg(long, value_enum, default_value_t = MethodArg::Exhaustive)]
        method: MethodArg,
    },
    /// Evaluate the analytical pipeline over a list of arrival rates
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated arrival rates
        #[arg(long, value_delimiter = ',', required = true, value_name = "RATES")]
        lambdas: Vec<f64>,
    },
    /// Report the stationary-point structure of the fixed-window
    /// generate-at-will AAoI in W_0, with a log-spaced bound table
    Roots {
        /// Number of stations N
        #[arg(long, value_name = "N")]
        n_stas: Option<usize>,
        /// Number of random-access RUs L
        #[arg(long, value_name = "L")]
        n_rus: Option<usize>,
        /// Rows in the bound table over W in [1, 10^4]
        #[arg(long, default_value_t = 25)]
        table_rows: usize,
    },
}

/// On-disk scenario file shape.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n_stas: Option<usize>,
    pub n_rus: Option<usize>,
    pub arrival_rate: Option<f64>,
    pub eocw_min: Option<u32>,
    pub m: Option<u32>,
    pub timing: Option<SlotTiming>,
}

fn load_scenario_file(path: Option<&PathBuf>) -> Result<ScenarioFile> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(ScenarioFile::default()),
    }
}

/// Merges file values and flags into a validated `NetworkConfig`.
pub fn resolve_network(file: &ScenarioFile, args: &ScenarioArgs) -> Result<NetworkConfig> {
    let missing = |name: &str| {
        UoraError::InvalidArgument(format!(
            "{name} missing: pass --{} or set \"{}\" in the scenario file",
            name.replace('_', "-"),
            name
        ))
    };
    let arrival_rate = match (args.lambda, args.poisson_rate) {
        (Some(l), _) => l,
        (None, Some(r)) => {
            let timing = file.timing.ok_or_else(|| {
                UoraError::InvalidArgument(
                    "--poisson-rate needs a \"timing\" block in the scenario file".into(),
                )
            })?;
            poisson_to_slot_rate(r, &timing)
        }
        (None, None) => file.arrival_rate.ok_or_else(|| missing("arrival_rate"))?,
    };
    NetworkConfig::new(
        args.n_stas.or(file.n_stas).ok_or_else(|| missing("n_stas"))?,
        args.n_rus.or(file.n_rus).ok_or_else(|| missing("n_rus"))?,
        arrival_rate,
        args.eocw_min.or(file.eocw_min).unwrap_or(0),
        args.m.or(file.m).unwrap_or(0),
    )
}

/// Formats a float with ten significant digits, the fixed precision of all
/// numeric CSV output.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.9e}")
}

pub const ANALYTIC_COLUMNS: &str =
    "n,l,lambda,eocw_min,m,q,rho,e_v,e_v2,e_k,e_k2,e_s,aaoi";
pub const SIM_COLUMNS: &str = ",sim_aaoi,sim_ci95,sim_q,sim_rho";

fn analytic_row(config: &NetworkConfig, analysis: &Analysis) -> String {
    let b = &analysis.breakdown;
    let ss = &analysis.steady_state;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        config.n_stas,
        config.n_rus,
        fmt_float(config.arrival_rate),
        config.eocw_min,
        config.max_backoff_level,
        fmt_float(ss.q),
        fmt_float(ss.rho),
        fmt_float(b.ev),
        fmt_float(b.ev2),
        fmt_float(b.ek),
        fmt_float(b.ek2),
        fmt_float(b.es),
        fmt_float(b.aaoi),
    )
}

fn analytic_json(config: &NetworkConfig, analysis: &Analysis) -> serde_json::Value {
    let b = &analysis.breakdown;
    let ss = &analysis.steady_state;
    json!({
        "config": config_json(config),
        "q": ss.q,
        "rho": ss.rho,
        "mu": ss.mu,
        "e_v": b.ev,
        "e_v2": b.ev2,
        "e_k": b.ek,
        "e_k2": b.ek2,
        "e_s": b.es,
        "e_x": b.ex,
        "e_x2": b.ex2,
        "aaoi": b.aaoi,
    })
}

fn config_json(config: &NetworkConfig) -> serde_json::Value {
    json!({
        "n_stas": config.n_stas,
        "n_rus": config.n_rus,
        "arrival_rate": config.arrival_rate,
        "eocw_min": config.eocw_min,
        "m": config.max_backoff_level,
    })
}

fn config_header(config: &NetworkConfig) -> String {
    format!(
        "# scenario: n_stas={} n_rus={} arrival_rate={} eocw_min={} m={}\n",
        config.n_stas,
        config.n_rus,
        config.arrival_rate,
        config.eocw_min,
        config.max_backoff_level
    )
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn run_analyze(cli: &Cli, scenario: &ScenarioArgs) -> Result<String> {
    let file = load_scenario_file(cli.config.as_ref())?;
    let config = resolve_network(&file, scenario)?;
    let analysis = analyze(&config)?;
    Ok(match cli.format {
        Format::Csv => format!(
            "{}{}\n{}\n",
            config_header(&config),
            ANALYTIC_COLUMNS,
            analytic_row(&config, &analysis)
        ),
        Format::Json => format!("{:#}\n", analytic_json(&config, &analysis)),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    cli: &Cli,
    scenario: &ScenarioArgs,
    slots: u64,
    warmup: u64,
    seed: u64,
    policy: PolicyArg,
    replications: u32,
) -> Result<String> {
    let file = load_scenario_file(cli.config.as_ref())?;
    let network = resolve_network(&file, scenario)?;
    let sim = SimConfig {
        network,
        slots,
        warmup,
        seed,
        policy: policy.into(),
        replications,
    };
    let stats = run_simulation(&sim)?;
    // the analytical columns describe the UORA model regardless of the
    // simulated policy
    let analysis = analyze(&network)?;
    Ok(match cli.format {
        Format::Csv => {
            let header = format!(
                "{}# simulate: policy={:?} slots={slots} warmup={warmup} seed={seed} \
                 replications={replications}\n",
                config_header(&network),
                sim.policy
            );
            format!(
                "{header}{}{}\n{},{},{},{},{}\n",
                ANALYTIC_COLUMNS,
                SIM_COLUMNS,
                analytic_row(&network, &analysis),
                fmt_float(stats.mean_aoi_network),
                fmt_float(stats.ci95_mean_aoi),
                fmt_float(stats.empirical_q),
                fmt_float(stats.empirical_rho),
            )
        }
        Format::Json => {
            let mut value = analytic_json(&network, &analysis);
            value["simulation"] = sim_json(&sim, &stats);
            format!("{value:#}\n")
        }
    })
}

fn sim_json(sim: &SimConfig, stats: &SimStats) -> serde_json::Value {
    json!({
        "policy": sim.policy,
        "slots": sim.slots,
        "warmup": sim.warmup,
        "seed": sim.seed,
        "replications": sim.replications,
        "mean_aoi_network": stats.mean_aoi_network,
        "ci95_mean_aoi": stats.ci95_mean_aoi,
        "empirical_q": stats.empirical_q,
        "empirical_rho": stats.empirical_rho,
        "active_count_hist": stats.active_count_hist,
        "successes": stats.successes,
        "collisions": stats.collisions,
        "wasted_rus": stats.wasted_rus,
    })
}

fn run_optimize(cli: &Cli, scenario: &ScenarioArgs, method: MethodArg) -> Result<String> {
    let file = load_scenario_file(cli.config.as_ref())?;
    // W_0 and m are outputs here; fall back to a searchable placeholder
    let args = ScenarioArgs {
        eocw_min: Some(0),
        m: Some(0),
        n_stas: scenario.n_stas,
        n_rus: scenario.n_rus,
        lambda: scenario.lambda,
        poisson_rate: scenario.poisson_rate,
    };
    let config = resolve_network(&file, &args)?;
    let (n, l, lambda) = (config.n_stas, config.n_rus, config.arrival_rate);
    let result = match method {
        MethodArg::Exhaustive => exhaustive_search(n, l, lambda)?,
        MethodArg::Alg1 => {
            if lambda != 1.0 {
                return Err(UoraError::InvalidArgument(
                    "the root-guided search applies only to --lambda 1".into(),
                ));
            }
            efficient_search_alg1(n, l)?
        }
        MethodArg::Alg2 => efficient_search_alg2(n, l, lambda)?,
    };
    Ok(match cli.format {
        Format::Csv => {
            let mut text = format!(
                "# scenario: n_stas={n} n_rus={l} arrival_rate={lambda}\n\
                 # method={:?} best_w0={} best_m={} best_aaoi={} edge_of_range={}\n\
                 w0,m,aaoi\n",
                result.method,
                result.w0_star,
                result.m_star,
                fmt_float(result.predicted_aaoi),
                result.edge_of_range
            );
            for cell in &result.evaluations {
                text.push_str(&format!(
                    "{},{},{}\n",
                    cell.w0,
                    cell.m,
                    fmt_float(cell.aaoi)
                ));
            }
            text
        }
        Format::Json => format!("{:#}\n", optimize_json(n, l, lambda, &result)),
    })
}

fn optimize_json(n: usize, l: usize, lambda: f64, result: &OptimizationResult) -> serde_json::Value {
    json!({
        "scenario": { "n_stas": n, "n_rus": l, "arrival_rate": lambda },
        "method": match result.method {
            SearchMethod::Exhaustive => "exhaustive",
            SearchMethod::Alg1 => "alg1",
            SearchMethod::Alg2 => "alg2",
        },
        "w0_star": result.w0_star,
        "m_star": result.m_star,
        "predicted_aaoi": result.predicted_aaoi,
        "edge_of_range": result.edge_of_range,
        "evaluations": result.evaluations.iter().map(|c| {
            json!({ "w0": c.w0, "m": c.m, "aaoi": c.aaoi })
        }).collect::<Vec<_>>(),
        "failed_cells": result.failed_cells,
    })
}

fn run_sweep(cli: &Cli, scenario: &ScenarioArgs, lambdas: &[f64]) -> Result<String> {
    let file = load_scenario_file(cli.config.as_ref())?;
    let mut rows: Vec<(NetworkConfig, Analysis)> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let args = ScenarioArgs {
            lambda: Some(lambda),
            poisson_rate: None,
            n_stas: scenario.n_stas,
            n_rus: scenario.n_rus,
            eocw_min: scenario.eocw_min,
            m: scenario.m,
        };
        let config = resolve_network(&file, &args)?;
        let analysis = analyze(&config)?;
        rows.push((config, analysis));
    }
    Ok(match cli.format {
        Format::Csv => {
            let first = &rows[0].0;
            let mut text = format!(
                "# scenario: n_stas={} n_rus={} eocw_min={} m={} sweep over lambda\n{}\n",
                first.n_stas,
                first.n_rus,
                first.eocw_min,
                first.max_backoff_level,
                ANALYTIC_COLUMNS
            );
            for (config, analysis) in &rows {
                text.push_str(&analytic_row(config, analysis));
                text.push('\n');
            }
            text
        }
        Format::Json => {
            let values: Vec<_> = rows
                .iter()
                .map(|(c, a)| analytic_json(c, a))
                .collect();
            format!("{:#}\n", serde_json::Value::Array(values))
        }
    })
}

fn run_roots(
    cli: &Cli,
    n_stas: Option<usize>,
    n_rus: Option<usize>,
    table_rows: usize,
) -> Result<String> {
    let file = load_scenario_file(cli.config.as_ref())?;
    let n = n_stas
        .or(file.n_stas)
        .ok_or_else(|| UoraError::InvalidArgument("n_stas missing: pass --n-stas".into()))?;
    let l = n_rus
        .or(file.n_rus)
        .ok_or_else(|| UoraError::InvalidArgument("n_rus missing: pass --n-rus".into()))?;
    if table_rows < 2 {
        return Err(UoraError::InvalidArgument(
            "--table-rows must be at least 2".into(),
        ));
    }
    let roots = stationary_roots(n, l)?;
    let regime = match roots.regime {
        RootRegime::ThreeRoot => "three-root",
        RootRegime::OneRoot => "one-root",
    };
    // log-spaced grid over W in [1, 10^4]
    let grid: Vec<f64> = (0..table_rows)
        .map(|i| 10f64.powf(4.0 * i as f64 / (table_rows - 1) as f64))
        .collect();
    let mut table = Vec::with_capacity(grid.len());
    for &w in &grid {
        table.push((
            w,
            lower_bound_of_w(n, l, w)?,
            approx_lower_bound_hat(n, l, w)?,
            approx_lower_bound(n, l, w)?,
        ));
    }
    Ok(match cli.format {
        Format::Csv => {
            let fmt_opt = |r: Option<f64>| r.map_or_else(|| "nan".into(), fmt_float);
            let mut text = format!(
                "# scenario: n_stas={n} n_rus={l}\n\
                 # regime={regime} b={} r1={} r2={} r3={}\n\
                 w,lower_bound,approx_bound_hat,approx_bound\n",
                fmt_float(roots.b_coeff),
                fmt_opt(roots.r1),
                fmt_float(roots.r2),
                fmt_opt(roots.r3),
            );
            for (w, lb, hat, tilde) in &table {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_float(*w),
                    fmt_float(*lb),
                    fmt_float(*hat),
                    fmt_float(*tilde)
                ));
            }
            text
        }
        Format::Json => {
            let value = json!({
                "scenario": { "n_stas": n, "n_rus": l },
                "regime": regime,
                "b": roots.b_coeff,
                "r1": roots.r1,
                "r2": roots.r2,
                "r3": roots.r3,
                "table": table.iter().map(|(w, lb, hat, tilde)| json!({
                    "w": w,
                    "lower_bound": lb,
                    "approx_bound_hat": hat,
                    "approx_bound": tilde,
                })).collect::<Vec<_>>(),
            });
            format!("{value:#}\n")
        }
    })
}

/// Executes a parsed command, writing output to `--out` or stdout.
pub fn run(cli: &Cli) -> Result<()> {
    let text = match &cli.command {
        Command::Analyze { scenario } => run_analyze(cli, scenario)?,
        Command::Simulate {
            scenario,
            slots,
            warmup,
            seed,
            policy,
            replications,
        } => run_simulate(cli, scenario, *slots, *warmup, *seed, *policy, *replications)?,
        Command::Optimize { scenario, method } => run_optimize(cli, scenario, *method)?,
        Command::Sweep { scenario, lambdas } => run_sweep(cli, scenario, lambdas)?,
        Command::Roots {
            n_stas,
            n_rus,
            table_rows,
        } => run_roots(cli, *n_stas, *n_rus, *table_rows)?,
    };
    write_output(cli.out.as_ref(), &text)
}

/// Process exit code for an error: 2 for invalid input, 3 for
/// non-convergence, 1 otherwise.
pub fn exit_code(err: &UoraError) -> i32 {
    match err {
        UoraError::InvalidConfig(_) | UoraError::InvalidArgument(_) | UoraError::Json(_) => 2,
        UoraError::NonConvergence { .. } => 3,
        _ => 1,
    }
}
