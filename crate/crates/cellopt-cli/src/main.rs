//! `cellopt` — joint antenna-count and transmit-power optimization from the
//! command line. Single solves print JSON to stdout; `experiment` runs a
//! seeded Monte Carlo batch into CSV files. Exit codes: 0 success, 1 the
//! instance was infeasible, 2 usage or configuration error, 3 numerical
//! failure inside a solver.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use cellopt::gp::GpStandardForm;
use cellopt::multicell::{
    asymptotic_maxmin, build_mc_system, exhaustive_p4, maxmin_sinr, solve_p3, solve_p4,
    McSolution, McStatus, McSystem,
};
use cellopt::scenario::Precoder;
use cellopt::singlecell::{solve_p2, ScStatus, SingleCellInstance};
use cellopt_cli::config::RunConfig;
use cellopt_cli::experiment::run_experiment;
use cellopt_cli::output::{mc_status_label, sc_status_label};
use cellopt_cli::CliError;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "cellopt",
    version,
    about = "Joint antenna-count and downlink power optimization for massive MIMO cells"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one single-cell instance given explicitly (noise-normalized).
    SolveSc(SolveScArgs),
    /// Jointly optimize antennas and powers for a drawn multi-cell scenario.
    SolveMc(ScenarioArgs),
    /// Minimize transmit power at fixed antenna counts.
    SolveP3(SolveP3Args),
    /// Largest uniform SINR target supportable at fixed antenna counts.
    Maxmin(MaxminArgs),
    /// Exhaustive integer optimum on a deliberately small scenario.
    Oracle(OracleArgs),
    /// Run a Monte Carlo experiment from a config file into CSV files.
    Experiment(ExperimentArgs),
    /// Parse a geometric-program dump file, solve it, print the solution.
    GpCheck(GpCheckArgs),
}

/// Defaults reproduce the one-user worked example: beta 1, estimate quality
/// 0.5, unit target, unit budget, antenna cost 2 — the optimizer must pick
/// 4 antennas, spend power 1, at cost 9.
#[derive(Args)]
struct SolveScArgs {
    /// Large-scale fading per user, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    beta: Vec<f64>,
    /// Channel-estimate quality per user, comma separated; pairs with beta.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    gamma: Vec<f64>,
    /// SINR target per user; a single value broadcasts to every user.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    alpha: Vec<f64>,
    /// Downlink power budget.
    #[arg(long, default_value_t = 1.0)]
    rho_dl: f64,
    /// Largest deployable antenna count.
    #[arg(long, default_value_t = 10)]
    m_max: u32,
    /// Circuit power per active antenna.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// mrt or zf.
    #[arg(long, default_value = "mrt")]
    precoder: String,
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Layout seed; defaults to the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SolveP3Args {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Antennas per cell, comma separated; one value is used for every cell.
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u32>,
}

#[derive(Args)]
struct MaxminArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Antennas per cell, comma separated; one value is used for every cell.
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<u32>,
    /// Balance SINR without enforcing the per-station power budget.
    #[arg(long)]
    ignore_budget: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Cap on antenna combinations the search may visit; overrides the
    /// config's oracle_limit.
    #[arg(long)]
    limit: Option<u64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML run configuration with a `mode` key.
    config: PathBuf,
    /// Directory for records.csv, summary.csv, manifest.txt, timings.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GpCheckArgs {
    /// Geometric-program dump file.
    file: PathBuf,
    /// Relative duality-gap target.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::SolveSc(args) => cmd_solve_sc(args),
        Command::SolveMc(args) => cmd_solve_mc(args),
        Command::SolveP3(args) => cmd_solve_p3(args),
        Command::Maxmin(args) => cmd_maxmin(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::GpCheck(args) => cmd_gp_check(args),
    }
}

/// Wrap a finite float for JSON; infeasible solutions carry NaN costs, which
/// JSON cannot represent, so those become null.
fn num(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

fn print_json(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("JSON output must serialize");
    // A closed pipe (e.g. piping into `head`) is a normal way to consume
    // output, not a crash.
    if writeln!(io::stdout(), "{text}").is_err() {
        std::process::exit(0);
    }
}

fn cmd_solve_sc(args: SolveScArgs) -> Result<ExitCode, CliError> {
    let users = args.beta.len();
    if args.gamma.len() != users {
        return Err(CliError::Usage(format!(
            "--gamma has {} entries but --beta has {users}",
            args.gamma.len()
        )));
    }
    let alpha = if args.alpha.len() == 1 {
        vec![args.alpha[0]; users]
    } else if args.alpha.len() == users {
        args.alpha.clone()
    } else {
        return Err(CliError::Usage(format!(
            "--alpha needs 1 or {users} entries, got {}",
            args.alpha.len()
        )));
    };
    let precoder = Precoder::from_str(&args.precoder).map_err(CliError::Usage)?;
    let inst = SingleCellInstance {
        users,
        beta: args.beta,
        gamma: args.gamma,
        alpha,
        rho_dl: args.rho_dl,
        m_max: args.m_max,
        cost_per_antenna: args.c,
        precoder,
    };
    let sol = solve_p2(&inst)?;
    print_json(&json!({
        "status": sc_status_label(sol.status),
        "m": sol.m,
        "mbar": sol.mbar,
        "p": sol.p,
        "total_power": num(sol.p.iter().sum()),
        "cost": num(sol.cost),
        "cost_physical": num(sol.cost_physical),
        "mbar_continuous": num(sol.m_continuous),
    }));
    Ok(ExitCode::from(u8::from(sol.status != ScStatus::Feasible)))
}

/// Build the multi-cell system a config describes, at the given seed.
fn system_from_config(cfg: &RunConfig, seed: u64) -> Result<McSystem, CliError> {
    let (inst, gammas) =
        cfg.draw_instance(seed, cfg.users_per_cell, cfg.alpha, cfg.precoder()?)?;
    Ok(build_mc_system(&inst, &gammas)?)
}

fn mc_solution_json(sol: &McSolution, seed: u64) -> serde_json::Value {
    json!({
        "status": mc_status_label(sol.status),
        "seed": seed,
        "m": sol.m,
        "p": sol.p,
        "total_power": num(sol.total_power),
        "cost": num(sol.cost),
        "gp_continuous_m": sol.gp_continuous_m,
        "gp_lower_bound": sol.gp_lower_bound,
    })
}

fn mc_exit(status: McStatus) -> ExitCode {
    ExitCode::from(u8::from(status != McStatus::Feasible))
}

fn cmd_solve_mc(args: ScenarioArgs) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let sys = system_from_config(&cfg, seed)?;
    let sol = solve_p4(&sys)?;
    print_json(&mc_solution_json(&sol, seed));
    Ok(mc_exit(sol.status))
}

/// Expand a `--m` list to one antenna count per cell.
fn antennas_per_cell(m: &[u32], cells: usize) -> Result<Vec<u32>, CliError> {
    if m.len() == 1 {
        Ok(vec![m[0]; cells])
    } else if m.len() == cells {
        Ok(m.to_vec())
    } else {
        Err(CliError::Usage(format!(
            "--m needs 1 or {cells} entries, got {}",
            m.len()
        )))
    }
}

fn cmd_solve_p3(args: SolveP3Args) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::load(&args.scenario.config)?;
    let seed = args.scenario.seed.unwrap_or(cfg.seed);
    let sys = system_from_config(&cfg, seed)?;
    let m = antennas_per_cell(&args.m, cfg.l_grid)?;
    let sol = solve_p3(&sys, &m)?;
    print_json(&mc_solution_json(&sol, seed));
    Ok(mc_exit(sol.status))
}

fn cmd_maxmin(args: MaxminArgs) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::load(&args.scenario.config)?;
    let seed = args.scenario.seed.unwrap_or(cfg.seed);
    let sys = system_from_config(&cfg, seed)?;
    let m = antennas_per_cell(&args.m, cfg.l_grid)?;
    let honor_budget = !args.ignore_budget && cfg.honor_budget;
    let level = maxmin_sinr(&sys, &m, honor_budget)?;
    let ceiling = asymptotic_maxmin(&sys)?;
    print_json(&json!({
        "seed": seed,
        "m": m,
        "honor_budget": honor_budget,
        "maxmin_sinr": num(level),
        "asymptotic_limit": num(ceiling),
    }));
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::load(&args.scenario.config)?;
    let seed = args.scenario.seed.unwrap_or(cfg.seed);
    let sys = system_from_config(&cfg, seed)?;
    let limit = args.limit.unwrap_or(cfg.oracle_limit);
    let sol = exhaustive_p4(&sys, limit)?;
    print_json(&mc_solution_json(&sol, seed));
    Ok(mc_exit(sol.status))
}

fn cmd_experiment(args: ExperimentArgs) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let outputs = run_experiment(&cfg, &args.out)?;
    eprintln!(
        "wrote {} and {}",
        outputs.records.display(),
        outputs.summary.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_gp_check(args: GpCheckArgs) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(&args.file)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.file.display())))?;
    let gp = GpStandardForm::parse_dump(&text)?;
    let sol = cellopt::gp::solve_gp(&gp, args.tol)?;
    let values: serde_json::Map<String, serde_json::Value> = (0..gp.vars().len())
        .map(|id| (gp.vars().name(id).to_string(), json!(sol.x[id])))
        .collect();
    print_json(&json!({
        "cost": num(sol.cost),
        "gap_bound": num(sol.gap_bound),
        "iterations": sol.iterations,
        "x": values,
    }));
    Ok(ExitCode::SUCCESS)
}
