//! The `coinvest` command line.
//!
//! Exit codes: 0 success, 1 invalid configuration or arguments, 2 numeric or
//! I/O failure, 3 analysis not applicable to the configured load model.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::allocation::optimal_plan;
use crate::error::Error;
use crate::game::{build_value_table, delta_hat, shapley, stability_report, stability_value_lp, PlayerSet, ValueTable};
use crate::montecarlo::{
    payback_slots, simulate, slot_to_years, summarize, PaybackSummary, PaymentMode, SimulationOptions,
    SimulationSummary,
};
use crate::scenario::{Scenario, ScenarioConfig, SCHEMA_VERSION};

pub use output::num;
use output::{save_json, sibling, Table};

/// Env var capping the number of worker threads.
pub const THREADS_ENV: &str = "COINVEST_THREADS";

#[derive(Debug, Parser)]
#[command(name = "coinvest", version, about = "Edge co-investment planning and risk analysis")]
pub struct Cli {
    /// Also write the validated scenario, as JSON, to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub dump_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal capacity and per-slot shares.
    Plan {
        #[command(flatten)]
        io: Io,
        /// Emit every coalition, not only the grand one.
        #[arg(long)]
        all_coalitions: bool,
    },
    /// Hoeffding lower bound on grand-coalition stability (bounded model only).
    Stability {
        #[command(flatten)]
        io: Io,
        /// Load spreads to evaluate; defaults to the configured one.
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<f64>,
        /// Also estimate the stability frequency by simulation.
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-realization payoffs, payments and rewards.
    Simulate {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 100)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PaymentArg::ExPost)]
        payment_mode: PaymentArg,
    },
    /// Payback time of the grand coalition over one or more investment periods.
    Payback {
        #[command(flatten)]
        io: Io,
        /// Investment periods in years; defaults to the configured one.
        #[arg(long, value_delimiter = ',')]
        periods: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct Io {
    /// Scenario file (.toml or .json).
    pub config: PathBuf,
    /// Main CSV output; sidecar files are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PaymentArg {
    ExAnte,
    ExPost,
}

impl From<PaymentArg> for PaymentMode {
    fn from(p: PaymentArg) -> Self {
        match p {
            PaymentArg::ExAnte => PaymentMode::ExAnte,
            PaymentArg::ExPost => PaymentMode::ExPost,
        }
    }
}

/// A failure together with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter { .. } | Error::HorizonTooLong { .. } => 1,
            Error::ModelMismatch(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 2, message: format!("cannot write {}: {e}", path.display()) }
}

/// Parses `std::env::args`, runs, and reports errors on stderr.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    let io = match &cli.command {
        Command::Plan { io, .. }
        | Command::Stability { io, .. }
        | Command::Simulate { io, .. }
        | Command::Payback { io, .. } => io,
    };
    let scenario = ScenarioConfig::from_path(&io.config)?.validate()?;
    if let Some(path) = &cli.dump_config {
        output::write_atomic(path, scenario.config().to_json().as_bytes()).map_err(|e| io_failure(path, e))?;
    }
    match &cli.command {
        Command::Plan { all_coalitions, .. } => cmd_plan(&scenario, &io.out, *all_coalitions),
        Command::Stability { sigma, realizations, seed, .. } => {
            cmd_stability(&scenario, &io.out, sigma, *realizations, *seed)
        }
        Command::Simulate { realizations, seed, payment_mode, .. } => {
            cmd_simulate(&scenario, &io.out, *realizations, *seed, (*payment_mode).into())
        }
        Command::Payback { periods, realizations, seed, .. } => {
            cmd_payback(&scenario, &io.out, periods, *realizations, *seed)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure {
        code: 1,
        message: format!("{THREADS_ENV} must be a positive integer, got `{raw}`"),
    })?;
    // A pool may already exist when embedded in tests; its size then stays as is.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

#[derive(Serialize)]
struct PlanSidecar {
    schema_version: u32,
    coalitions: Vec<PlanEntry>,
}

#[derive(Serialize)]
struct PlanEntry {
    coalition: String,
    bits: u32,
    capacity_vcores: f64,
    objective: f64,
    cost: f64,
    method: crate::allocation::SolveMethod,
}

/// Writes `coalition,capacity_vcores,player,slot,share_vcores` plus a JSON sidecar.
pub fn cmd_plan(scenario: &Scenario, out: &Path, all_coalitions: bool) -> Result<(), Failure> {
    let names = scenario.player_names();
    let expected = scenario.expected_loads();
    let params = scenario.params();
    let plans = if all_coalitions {
        build_value_table(&expected, params)?.plans().to_vec()
    } else {
        vec![optimal_plan(PlayerSet::grand(scenario.players())?, &expected, params)?]
    };
    let mut csv = Table::new(&["coalition", "capacity_vcores", "player", "slot", "share_vcores"]);
    let mut entries = Vec::new();
    for plan in &plans {
        let label = plan.coalition.label(&names);
        let capacity = num(plan.capacity);
        let sps: Vec<usize> = plan.coalition.sps().collect();
        if !plan.coalition.has_inp() || sps.is_empty() {
            csv.row([label.as_str(), &capacity, "", "", ""]);
        } else {
            for &sp in &sps {
                for t in 0..plan.horizon() {
                    csv.row([label.as_str(), &capacity, &names[sp], &t.to_string(), &num(plan.share(sp, t))]);
                }
            }
        }
        entries.push(PlanEntry {
            coalition: label,
            bits: plan.coalition.bits(),
            capacity_vcores: plan.capacity,
            objective: plan.objective,
            cost: plan.cost(params),
            method: plan.method,
        });
    }
    csv.save(out).map_err(|e| io_failure(out, e))?;
    let side = sibling(out, "", "json");
    save_json(&side, &PlanSidecar { schema_version: SCHEMA_VERSION, coalitions: entries })
        .map_err(|e| io_failure(&side, e))
}

#[derive(Serialize)]
struct StabilitySidecar {
    schema_version: u32,
    players: Vec<String>,
    grand_value: f64,
    shapley_expected: Vec<f64>,
    sigma_hat: f64,
    /// Least-core optimum, reported up to 8 players.
    stability_value_lp: Option<f64>,
    delta_hat: f64,
    degenerate: bool,
    sweep: Vec<StabilityRow>,
}

#[derive(Serialize)]
struct StabilityRow {
    sigma: f64,
    p_lb: Vec<f64>,
    nu_lb: f64,
    empirical_stability_freq: Option<f64>,
}

/// Writes `sigma,player,p_lb`, `<stem>_nu.csv` with `sigma,nu_lb`, and a JSON sidecar.
pub fn cmd_stability(
    scenario: &Scenario,
    out: &Path,
    sigmas: &[f64],
    realizations: Option<usize>,
    seed: u64,
) -> Result<(), Failure> {
    let configured = match scenario.config().uncertainty {
        crate::scenario::UncertaintyConfig::Bounded { sigma } => sigma,
        crate::scenario::UncertaintyConfig::Fbm { .. } => {
            return Err(Failure {
                code: 3,
                message: "stability bounds need the bounded load model; fBm loads are unbounded, so Hoeffding ranges do not exist (use `simulate` instead)".into(),
            })
        }
    };
    let sigmas = if sigmas.is_empty() { vec![configured] } else { sigmas.to_vec() };
    let names = scenario.player_names();
    // Expected loads do not depend on sigma, so one table serves the whole sweep.
    let table = build_value_table(&scenario.expected_loads(), scenario.params())?;
    let x = shapley(table.values())?;
    let delta = delta_hat(&table, &x);

    let mut per_player = Table::new(&["sigma", "player", "p_lb"]);
    let mut nu = Table::new(&["sigma", "nu_lb"]);
    let mut sweep = Vec::new();
    let mut sigma_hat = 0.0;
    for &sigma in &sigmas {
        let variant = scenario.with_sigma(sigma)?;
        let report = stability_report(&table, variant.models(), variant.params())?;
        sigma_hat = report.sigma_hat;
        for (name, p) in names.iter().zip(&report.per_player_bound) {
            per_player.row([num(sigma), name.clone(), num(*p)]);
        }
        nu.row([num(sigma), num(report.nu_lower_bound)]);
        let freq = match realizations {
            Some(n) => {
                let outcomes =
                    simulate(&variant.sampler()?, &table, variant.params(), &SimulationOptions::new(n, seed))?;
                Some(crate::montecarlo::empirical_stability_frequency(&outcomes, delta.value))
            }
            None => None,
        };
        sweep.push(StabilityRow {
            sigma,
            p_lb: report.per_player_bound,
            nu_lb: report.nu_lower_bound,
            empirical_stability_freq: freq,
        });
    }
    let lp = if table.players() <= 8 { Some(stability_value_lp(&table)?) } else { None };
    per_player.save(out).map_err(|e| io_failure(out, e))?;
    let nu_path = sibling(out, "_nu", "csv");
    nu.save(&nu_path).map_err(|e| io_failure(&nu_path, e))?;
    let side = sibling(out, "", "json");
    let sidecar = StabilitySidecar {
        schema_version: SCHEMA_VERSION,
        players: names,
        grand_value: table.grand_value(),
        shapley_expected: x,
        sigma_hat,
        stability_value_lp: lp,
        delta_hat: delta.value,
        degenerate: delta.degenerate,
        sweep,
    };
    save_json(&side, &sidecar).map_err(|e| io_failure(&side, e))
}

#[derive(Serialize)]
struct SimulationSidecar {
    schema_version: u32,
    players: Vec<String>,
    seed: u64,
    payment_mode: PaymentMode,
    delta_hat: f64,
    #[serde(flatten)]
    summary: SimulationSummary,
}

/// Writes `omega,player,collected,payment,reward,shapley_payoff,deviation` and `<stem>_summary.json`.
pub fn cmd_simulate(
    scenario: &Scenario,
    out: &Path,
    realizations: usize,
    seed: u64,
    mode: PaymentMode,
) -> Result<(), Failure> {
    let names = scenario.player_names();
    let table: ValueTable = build_value_table(&scenario.expected_loads(), scenario.params())?;
    let options = SimulationOptions { payment_mode: mode, ..SimulationOptions::new(realizations, seed) };
    let outcomes = simulate(&scenario.sampler()?, &table, scenario.params(), &options)?;
    let delta = delta_hat(&table, &shapley(table.values())?);

    let mut csv = Table::new(&["omega", "player", "collected", "payment", "reward", "shapley_payoff", "deviation"]);
    for o in &outcomes {
        let omega = o.realization_id.to_string();
        for (i, name) in names.iter().enumerate() {
            csv.row([
                omega.clone(),
                name.clone(),
                num(o.collected[i]),
                num(o.payments[i]),
                num(o.rewards[i]),
                num(o.shapley[i]),
                num(o.deviations[i]),
            ]);
        }
    }
    csv.save(out).map_err(|e| io_failure(out, e))?;
    let summary = summarize(&outcomes, Some(delta.value), scenario.params().slot_hours);
    let side = sibling(out, "_summary", "json");
    let sidecar = SimulationSidecar {
        schema_version: SCHEMA_VERSION,
        players: names,
        seed,
        payment_mode: mode,
        delta_hat: delta.value,
        summary,
    };
    save_json(&side, &sidecar).map_err(|e| io_failure(&side, e))
}

#[derive(Serialize)]
struct PaybackSidecar {
    schema_version: u32,
    seed: u64,
    periods: Vec<PaybackPeriod>,
}

#[derive(Serialize)]
struct PaybackPeriod {
    investment_years: f64,
    capacity_vcores: f64,
    cost: f64,
    /// Quantiles of payback years divided by the investment period.
    relative: Option<crate::montecarlo::QuantileSummary>,
    #[serde(flatten)]
    payback: PaybackSummary,
}

/// Writes `investment_years,omega,payback_slot,payback_years,censored` and `<stem>_summary.json`.
pub fn cmd_payback(
    scenario: &Scenario,
    out: &Path,
    periods: &[f64],
    realizations: usize,
    seed: u64,
) -> Result<(), Failure> {
    if realizations == 0 {
        return Err(Error::invalid("realizations", "must be at least 1").into());
    }
    let periods = if periods.is_empty() { vec![scenario.config().horizon.investment_years] } else { periods.to_vec() };
    let mut csv = Table::new(&["investment_years", "omega", "payback_slot", "payback_years", "censored"]);
    let mut summary = Vec::new();
    for &years in &periods {
        let variant = scenario.with_investment_years(years)?;
        let params = variant.params();
        let plan = optimal_plan(PlayerSet::grand(variant.players())?, &variant.expected_loads(), params)?;
        let slots = payback_slots(&variant.sampler()?, &plan, params, realizations, seed)?;
        for (omega, slot) in slots.iter().enumerate() {
            match slot {
                Some(z) => csv.row([
                    num(years),
                    omega.to_string(),
                    z.to_string(),
                    num(slot_to_years(*z, params.slot_hours)),
                    "false".into(),
                ]),
                None => csv.row([num(years), omega.to_string(), String::new(), String::new(), "true".into()]),
            }
        }
        let relative: Vec<f64> = slots.iter().flatten().map(|&z| slot_to_years(z, params.slot_hours) / years).collect();
        summary.push(PaybackPeriod {
            investment_years: years,
            capacity_vcores: plan.capacity,
            cost: plan.cost(params),
            relative: crate::montecarlo::QuantileSummary::of(&relative),
            payback: PaybackSummary::of(&slots, params.slot_hours),
        });
    }
    csv.save(out).map_err(|e| io_failure(out, e))?;
    let side = sibling(out, "_summary", "json");
    save_json(&side, &PaybackSidecar { schema_version: SCHEMA_VERSION, seed, periods: summary })
        .map_err(|e| io_failure(&side, e))
}
