//! Seeded Monte Carlo experiment runner.
//!
//! Each mode draws `trials` random layouts, evaluates its solver family at
//! every sweep point, and writes four or five files into the output
//! directory:
//!
//! * `records.csv` — one row per trial and sweep point, schema fixed per
//!   mode; infeasible rows leave the power/cost cells empty.
//! * `summary.csv` — per sweep point: trial counts, feasibility rate, and
//!   means over the feasible trials only.
//! * `cdf.csv` — empirical CDFs, only for the CDF modes.
//! * `manifest.txt` — resolved configuration echo, master seed, version.
//! * `timings.csv` — per-trial wall time. This is the one file that is not
//!   byte-reproducible across runs; everything else is.
//!
//! Trials run on the global worker pool, but records are keyed by trial
//! index and assembled in index order, so the output never depends on
//! scheduling. Solver failures inside a trial are recorded in its status
//! cell and never abort the run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cellopt::multicell::{
    build_mc_system, exhaustive_p4, maxmin_sinr, solve_p3, solve_p4, McSystem,
};
use cellopt::scenario::Precoder;
use cellopt::singlecell::{
    m_opt_continuous, solve_p2, total_power_sc, ScStatus, ScSystem, SingleCellInstance,
};
use rayon::prelude::*;

use crate::config::{Mode, RunConfig};
use crate::output::{
    emit_cdf, fmt_f64, fmt_opt, fmt_u32s, mc_status_label, sc_status_label, write_csv,
};
use crate::CliError;

/// Paths of the files a run produced.
#[derive(Debug)]
pub struct RunOutputs {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
    pub timings: PathBuf,
    pub cdf: Option<PathBuf>,
}

/// Deterministic per-trial seed: a counter pushed through a 64-bit mixer so
/// neighboring trials get unrelated streams.
pub fn trial_seed(master: u64, trial: u32) -> u64 {
    splitmix64(master ^ u64::from(trial))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Status cell for a trial whose solver returned an error. Commas and
/// newlines are squeezed out so the CSV stays one cell wide.
fn error_status(err: impl std::fmt::Display) -> String {
    let msg = err
        .to_string()
        .replace(['\n', '\r'], " ")
        .replace(',', ";");
    format!("error({msg})")
}

/// Mean over feasible samples; `None` when nothing was feasible.
#[derive(Clone, Copy, Default)]
struct MeanAcc {
    n: usize,
    sum: f64,
}

impl MeanAcc {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
    }
    fn mean(self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

fn rate(num: usize, den: usize) -> f64 {
    num as f64 / den as f64
}

/// The sweep values a mode actually runs: the configured list when present,
/// otherwise the mode's default grid.
pub fn resolved_sweep(cfg: &RunConfig, mode: Mode) -> Result<Vec<f64>, CliError> {
    if mode.has_no_sweep() {
        if !cfg.sweep_values.is_empty() {
            return Err(CliError::Usage(format!(
                "mode {mode} does not take sweep_values"
            )));
        }
        return Ok(Vec::new());
    }
    if !cfg.sweep_values.is_empty() {
        if mode.sweeps_antennas() {
            for &v in &cfg.sweep_values {
                if v.fract() != 0.0 || v < 1.0 || v > f64::from(cfg.m_max) {
                    return Err(CliError::Usage(format!(
                        "antenna sweep value {v} must be an integer in [1, {}]",
                        cfg.m_max
                    )));
                }
            }
        } else {
            for &v in &cfg.sweep_values {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Usage(format!(
                        "SINR target sweep value {v} must be positive"
                    )));
                }
            }
        }
        return Ok(cfg.sweep_values.clone());
    }
    Ok(match mode {
        Mode::P1Sweep | Mode::P3Sweep | Mode::MaxminCdf => {
            let mut values: Vec<f64> = (1..=5)
                .map(|i| f64::from((cfg.m_max * i / 5).max(1)))
                .collect();
            values.dedup();
            values
        }
        Mode::P2CostCurve => (1..=cfg.m_max).map(f64::from).collect(),
        Mode::MrtZfCompare => vec![0.5, 1.0, 2.0, 4.0],
        _ => unreachable!("no-sweep modes already returned"),
    })
}

/// User counts for p1_sweep; other modes must not set `k_values`.
fn resolved_k_values(cfg: &RunConfig, mode: Mode) -> Result<Vec<usize>, CliError> {
    if mode != Mode::P1Sweep {
        if !cfg.k_values.is_empty() {
            return Err(CliError::Usage(format!(
                "mode {mode} does not take k_values"
            )));
        }
        return Ok(vec![cfg.users_per_cell]);
    }
    let ks = if cfg.k_values.is_empty() {
        vec![5, 10, 15]
    } else {
        cfg.k_values.clone()
    };
    if ks.iter().any(|&k| k == 0) {
        return Err(CliError::Usage("k_values entries must be positive".into()));
    }
    Ok(ks)
}

/// Reject configurations the mode cannot run before spending any trial time.
fn validate(cfg: &RunConfig, mode: Mode) -> Result<(), CliError> {
    if cfg.trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    if !(cfg.alpha.is_finite() && cfg.alpha > 0.0) {
        return Err(CliError::Usage(format!(
            "alpha must be positive, got {}",
            cfg.alpha
        )));
    }
    cfg.precoder()?;
    cfg.grid_side()?;
    if mode.is_single_cell() && cfg.l_grid != 1 {
        return Err(CliError::Usage(format!(
            "mode {mode} is single-cell; set L_grid = 1 (got {})",
            cfg.l_grid
        )));
    }
    if mode == Mode::MrtZfCompare && cfg.c <= 0.0 {
        return Err(CliError::Usage(
            "mrt_zf_compare needs a positive antenna cost c".into(),
        ));
    }
    if mode == Mode::RoundingGap {
        if cfg.m_max > 12 || cfg.l_grid > 4 {
            return Err(CliError::Usage(format!(
                "rounding_gap runs an exhaustive oracle; it requires m_max <= 12 \
                 and L_grid <= 4 (got m_max = {}, L_grid = {})",
                cfg.m_max, cfg.l_grid
            )));
        }
        let offset = cfg.precoder()?.antenna_offset(cfg.users_per_cell);
        if cfg.m_max <= offset {
            return Err(CliError::Usage(format!(
                "m_max = {} leaves no usable antennas above the precoder \
                 minimum {offset}",
                cfg.m_max
            )));
        }
        let combos = u128::from(cfg.m_max - offset).pow(cfg.l_grid as u32);
        if combos > u128::from(cfg.oracle_limit) {
            return Err(CliError::Usage(format!(
                "exhaustive search would visit {combos} antenna combinations, \
                 above oracle_limit = {}",
                cfg.oracle_limit
            )));
        }
    }
    Ok(())
}

/// One mode's fully formatted output tables.
struct ModeOutput {
    records_header: &'static [&'static str],
    records: Vec<Vec<String>>,
    summary_header: &'static [&'static str],
    summary: Vec<Vec<String>>,
    cdf: Option<(&'static [&'static str], Vec<Vec<String>>)>,
    /// Wall-clock seconds per trial, in trial order.
    timings: Vec<f64>,
}

/// Run the configured experiment and write its files under `out_dir`,
/// creating the directory if needed.
pub fn run_experiment(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutputs, CliError> {
    let mode = cfg
        .mode
        .ok_or_else(|| CliError::Usage("config file does not set a mode".into()))?;
    validate(cfg, mode)?;
    let sweep = resolved_sweep(cfg, mode)?;
    let ks = resolved_k_values(cfg, mode)?;

    let out = match mode {
        Mode::P1Sweep => run_p1_sweep(cfg, &sweep, &ks)?,
        Mode::P2CostCurve => run_p2_cost_curve(cfg, &sweep)?,
        Mode::MrtZfCompare => run_mrt_zf_compare(cfg, &sweep)?,
        Mode::P3Sweep => run_p3_sweep(cfg, &sweep)?,
        Mode::MaxminCdf => run_maxmin_cdf(cfg, &sweep)?,
        Mode::P4MCdf => run_p4_m_cdf(cfg)?,
        Mode::P4VsMax => run_p4_vs_max(cfg)?,
        Mode::RoundingGap => run_rounding_gap(cfg)?,
    };

    std::fs::create_dir_all(out_dir)?;
    let records = out_dir.join("records.csv");
    let summary = out_dir.join("summary.csv");
    let manifest = out_dir.join("manifest.txt");
    let timings = out_dir.join("timings.csv");
    write_csv(&records, out.records_header, &out.records)?;
    write_csv(&summary, out.summary_header, &out.summary)?;
    let cdf = match out.cdf {
        Some((header, rows)) => {
            let path = out_dir.join("cdf.csv");
            write_csv(&path, header, &rows)?;
            Some(path)
        }
        None => None,
    };
    let timing_rows: Vec<Vec<String>> = out
        .timings
        .iter()
        .enumerate()
        .map(|(t, secs)| vec![t.to_string(), fmt_f64(*secs)])
        .collect();
    write_csv(&timings, &["trial", "seconds"], &timing_rows)?;

    let mut text = String::from("# cellopt run manifest\n");
    text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&cfg.echo());
    text.push_str("files = records.csv summary.csv timings.csv");
    if cdf.is_some() {
        text.push_str(" cdf.csv");
    }
    text.push('\n');
    std::fs::write(&manifest, text)?;

    Ok(RunOutputs {
        records,
        summary,
        manifest,
        timings,
        cdf,
    })
}

// ---------------------------------------------------------------------------
// Single-cell modes
// ---------------------------------------------------------------------------

fn draw_single_cell(
    cfg: &RunConfig,
    seed: u64,
    users: usize,
    alpha: f64,
    precoder: Precoder,
) -> Result<(SingleCellInstance, ScSystem), CliError> {
    let (inst, gammas) = cfg.draw_instance(seed, users, alpha, precoder)?;
    let sc = SingleCellInstance::from_multicell(&inst, &gammas)?;
    let sys = ScSystem::new(&sc)?;
    Ok((sc, sys))
}

/// Minimum transmit power at each antenna count; SINR feasibility only, no
/// budget, matching the pure power-minimization problem.
fn sc_power_at(sys: &ScSystem, precoder: Precoder, users: usize, m: u32) -> Option<f64> {
    let offset = precoder.antenna_offset(users);
    if m <= offset {
        return None;
    }
    total_power_sc(sys, f64::from(m - offset))
}

fn run_p1_sweep(cfg: &RunConfig, sweep: &[f64], ks: &[usize]) -> Result<ModeOutput, CliError> {
    let precoder = cfg.precoder()?;
    struct Point {
        status: String,
        power: Option<f64>,
    }
    struct Trial {
        seed: u64,
        // Indexed [k][m] in config order.
        points: Vec<Vec<Point>>,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            let points = ks
                .iter()
                .map(|&k| match draw_single_cell(cfg, seed, k, cfg.alpha, precoder) {
                    Ok((_, sys)) => sweep
                        .iter()
                        .map(|&mv| {
                            let power = sc_power_at(&sys, precoder, k, mv as u32);
                            Point {
                                status: match power {
                                    Some(_) => "feasible".into(),
                                    None => "infeasible_sinr".into(),
                                },
                                power,
                            }
                        })
                        .collect(),
                    Err(err) => sweep
                        .iter()
                        .map(|_| Point {
                            status: error_status(&err),
                            power: None,
                        })
                        .collect(),
                })
                .collect();
            Trial {
                seed,
                points,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        for (ki, &k) in ks.iter().enumerate() {
            for (mi, &mv) in sweep.iter().enumerate() {
                let point = &trial.points[ki][mi];
                records.push(vec![
                    t.to_string(),
                    trial.seed.to_string(),
                    k.to_string(),
                    fmt_f64(mv),
                    point.status.clone(),
                    fmt_opt(point.power),
                ]);
            }
        }
    }

    let mut summary = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        for (mi, &mv) in sweep.iter().enumerate() {
            let mut acc = MeanAcc::default();
            for trial in &trials {
                if let Some(p) = trial.points[ki][mi].power {
                    acc.push(p);
                }
            }
            summary.push(vec![
                k.to_string(),
                fmt_f64(mv),
                trials.len().to_string(),
                acc.n.to_string(),
                fmt_f64(rate(acc.n, trials.len())),
                fmt_opt(acc.mean()),
            ]);
        }
    }

    Ok(ModeOutput {
        records_header: &["trial", "seed", "k", "m", "status", "total_power"],
        records,
        summary_header: &[
            "k",
            "m",
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_total_power",
        ],
        summary,
        cdf: None,
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}

fn run_p2_cost_curve(cfg: &RunConfig, sweep: &[f64]) -> Result<ModeOutput, CliError> {
    let precoder = cfg.precoder()?;
    let users = cfg.users_per_cell;
    struct Point {
        status: String,
        mbar: u32,
        power: Option<f64>,
        cost: Option<f64>,
    }
    struct Trial {
        seed: u64,
        points: Vec<Point>,
        /// Clamped continuous optimum (effective antennas) and the chosen
        /// integer optimum, for comparison against the swept curve.
        mbar_cont: Option<f64>,
        mbar_opt: Option<u32>,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            match draw_single_cell(cfg, seed, users, cfg.alpha, precoder) {
                Ok((sc, sys)) => {
                    let offset = precoder.antenna_offset(users);
                    let points = sweep
                        .iter()
                        .map(|&mv| {
                            let m = mv as u32;
                            let mbar = m.saturating_sub(offset);
                            let power = sc_power_at(&sys, precoder, users, m);
                            match power {
                                Some(p) if p <= sc.rho_dl => Point {
                                    status: "feasible".into(),
                                    mbar,
                                    power: Some(p),
                                    cost: Some(sc.cost_per_antenna * f64::from(mbar) + p),
                                },
                                Some(_) => Point {
                                    status: "infeasible_power".into(),
                                    mbar,
                                    power: None,
                                    cost: None,
                                },
                                None => Point {
                                    status: "infeasible_sinr".into(),
                                    mbar,
                                    power: None,
                                    cost: None,
                                },
                            }
                        })
                        .collect();
                    let mbar_cont = Some(m_opt_continuous(&sys, &sc));
                    let mbar_opt = match solve_p2(&sc) {
                        Ok(sol) if sol.status == ScStatus::Feasible => Some(sol.mbar),
                        _ => None,
                    };
                    Trial {
                        seed,
                        points,
                        mbar_cont,
                        mbar_opt,
                        secs: start.elapsed().as_secs_f64(),
                    }
                }
                Err(err) => Trial {
                    seed,
                    points: sweep
                        .iter()
                        .map(|_| Point {
                            status: error_status(&err),
                            mbar: 0,
                            power: None,
                            cost: None,
                        })
                        .collect(),
                    mbar_cont: None,
                    mbar_opt: None,
                    secs: start.elapsed().as_secs_f64(),
                },
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        for (mi, &mv) in sweep.iter().enumerate() {
            let point = &trial.points[mi];
            records.push(vec![
                t.to_string(),
                trial.seed.to_string(),
                fmt_f64(mv),
                point.mbar.to_string(),
                point.status.clone(),
                fmt_opt(point.power),
                fmt_opt(point.cost),
                fmt_opt(trial.mbar_cont),
                trial.mbar_opt.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }

    let mut summary = Vec::new();
    for (mi, &mv) in sweep.iter().enumerate() {
        let mut power = MeanAcc::default();
        let mut cost = MeanAcc::default();
        for trial in &trials {
            if let Some(p) = trial.points[mi].power {
                power.push(p);
            }
            if let Some(u) = trial.points[mi].cost {
                cost.push(u);
            }
        }
        summary.push(vec![
            fmt_f64(mv),
            trials.len().to_string(),
            power.n.to_string(),
            fmt_f64(rate(power.n, trials.len())),
            fmt_opt(power.mean()),
            fmt_opt(cost.mean()),
        ]);
    }

    Ok(ModeOutput {
        records_header: &[
            "trial",
            "seed",
            "m",
            "mbar",
            "status",
            "total_power",
            "cost",
            "mbar_cont",
            "mbar_opt",
        ],
        records,
        summary_header: &[
            "m",
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_total_power",
            "mean_cost",
        ],
        summary,
        cdf: None,
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}

fn run_mrt_zf_compare(cfg: &RunConfig, sweep: &[f64]) -> Result<ModeOutput, CliError> {
    let users = cfg.users_per_cell;
    const PRECODERS: [Precoder; 2] = [Precoder::Mrt, Precoder::Zf];
    struct Point {
        status: String,
        m_opt: Option<u32>,
        mbar_opt: Option<u32>,
        /// Unclamped continuous optimum in physical antennas; the
        /// maximum-ratio and zero-forcing values differ by exactly
        /// `sum(alpha) - K`.
        m_star: Option<f64>,
        cost: Option<f64>,
    }
    struct Trial {
        seed: u64,
        // Indexed [alpha][precoder].
        points: Vec<[Point; 2]>,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            let points = sweep
                .iter()
                .map(|&alpha| {
                    PRECODERS.map(|precoder| {
                        match draw_single_cell(cfg, seed, users, alpha, precoder) {
                            Ok((sc, sys)) => {
                                let offset = precoder.antenna_offset(users);
                                let m_star = sys.mu
                                    + (sys.tau / sc.cost_per_antenna).sqrt()
                                    + f64::from(offset);
                                match solve_p2(&sc) {
                                    Ok(sol) => Point {
                                        status: sc_status_label(sol.status).into(),
                                        m_opt: (sol.status == ScStatus::Feasible)
                                            .then_some(sol.m),
                                        mbar_opt: (sol.status == ScStatus::Feasible)
                                            .then_some(sol.mbar),
                                        m_star: Some(m_star),
                                        cost: sol.cost.is_finite().then_some(sol.cost),
                                    },
                                    Err(err) => Point {
                                        status: error_status(&err),
                                        m_opt: None,
                                        mbar_opt: None,
                                        m_star: Some(m_star),
                                        cost: None,
                                    },
                                }
                            }
                            Err(err) => Point {
                                status: error_status(&err),
                                m_opt: None,
                                mbar_opt: None,
                                m_star: None,
                                cost: None,
                            },
                        }
                    })
                })
                .collect();
            Trial {
                seed,
                points,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        for (ai, &alpha) in sweep.iter().enumerate() {
            for (pi, precoder) in PRECODERS.iter().enumerate() {
                let point = &trial.points[ai][pi];
                records.push(vec![
                    t.to_string(),
                    trial.seed.to_string(),
                    fmt_f64(alpha),
                    precoder.to_string(),
                    point.status.clone(),
                    point.m_opt.map(|v| v.to_string()).unwrap_or_default(),
                    point.mbar_opt.map(|v| v.to_string()).unwrap_or_default(),
                    fmt_opt(point.m_star),
                    fmt_opt(point.cost),
                ]);
            }
        }
    }

    let mut summary = Vec::new();
    for (ai, &alpha) in sweep.iter().enumerate() {
        for (pi, precoder) in PRECODERS.iter().enumerate() {
            let mut m_opt = MeanAcc::default();
            let mut m_star = MeanAcc::default();
            let mut feasible = 0usize;
            for trial in &trials {
                let point = &trial.points[ai][pi];
                if let Some(m) = point.m_opt {
                    feasible += 1;
                    m_opt.push(f64::from(m));
                }
                if let Some(v) = point.m_star {
                    m_star.push(v);
                }
            }
            // Uniform targets make the closed-form gap K*(alpha - 1).
            let gap = users as f64 * (alpha - 1.0);
            summary.push(vec![
                fmt_f64(alpha),
                precoder.to_string(),
                trials.len().to_string(),
                feasible.to_string(),
                fmt_f64(rate(feasible, trials.len())),
                fmt_opt(m_opt.mean()),
                fmt_opt(m_star.mean()),
                fmt_f64(gap),
            ]);
        }
    }

    Ok(ModeOutput {
        records_header: &[
            "trial",
            "seed",
            "alpha",
            "precoder",
            "status",
            "m_opt",
            "mbar_opt",
            "m_star",
            "cost",
        ],
        records,
        summary_header: &[
            "alpha",
            "precoder",
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_m_opt",
            "mean_m_star",
            "closed_form_gap",
        ],
        summary,
        cdf: None,
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}

// ---------------------------------------------------------------------------
// Multi-cell modes
// ---------------------------------------------------------------------------

fn draw_mc_system(cfg: &RunConfig, seed: u64) -> Result<McSystem, CliError> {
    let (inst, gammas) =
        cfg.draw_instance(seed, cfg.users_per_cell, cfg.alpha, cfg.precoder()?)?;
    Ok(build_mc_system(&inst, &gammas)?)
}

/// Outcome of one multi-cell solve, reduced to CSV-ready fields.
struct McPoint {
    status: String,
    m: Vec<u32>,
    power: Option<f64>,
    cost: Option<f64>,
}

impl McPoint {
    fn from_solution(sol: &cellopt::multicell::McSolution) -> Self {
        McPoint {
            status: mc_status_label(sol.status).into(),
            m: sol.m.clone(),
            power: sol.total_power.is_finite().then_some(sol.total_power),
            cost: sol.cost.is_finite().then_some(sol.cost),
        }
    }

    fn error(err: impl std::fmt::Display) -> Self {
        McPoint {
            status: error_status(err),
            m: Vec::new(),
            power: None,
            cost: None,
        }
    }
}

fn run_p3_sweep(cfg: &RunConfig, sweep: &[f64]) -> Result<ModeOutput, CliError> {
    let precoder = cfg.precoder()?;
    let cells = cfg.l_grid;
    let offset = precoder.antenna_offset(cfg.users_per_cell);
    struct Trial {
        seed: u64,
        points: Vec<McPoint>,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            let points = match draw_mc_system(cfg, seed) {
                Ok(sys) => sweep
                    .iter()
                    .map(|&mv| {
                        let m = mv as u32;
                        if m <= offset {
                            return McPoint {
                                status: "infeasible_sinr".into(),
                                m: vec![m; cells],
                                power: None,
                                cost: None,
                            };
                        }
                        match solve_p3(&sys, &vec![m; cells]) {
                            Ok(sol) => McPoint::from_solution(&sol),
                            Err(err) => McPoint::error(err),
                        }
                    })
                    .collect(),
                Err(err) => sweep.iter().map(|_| McPoint::error(&err)).collect(),
            };
            Trial {
                seed,
                points,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        for (mi, &mv) in sweep.iter().enumerate() {
            let point = &trial.points[mi];
            records.push(vec![
                t.to_string(),
                trial.seed.to_string(),
                fmt_f64(mv),
                point.status.clone(),
                fmt_opt(point.power),
                fmt_opt(point.cost),
            ]);
        }
    }

    let mut summary = Vec::new();
    for (mi, &mv) in sweep.iter().enumerate() {
        let mut power = MeanAcc::default();
        let mut cost = MeanAcc::default();
        for trial in &trials {
            if let Some(p) = trial.points[mi].power {
                power.push(p);
            }
            if let Some(u) = trial.points[mi].cost {
                cost.push(u);
            }
        }
        summary.push(vec![
            fmt_f64(mv),
            trials.len().to_string(),
            power.n.to_string(),
            fmt_f64(rate(power.n, trials.len())),
            fmt_opt(power.mean()),
            fmt_opt(cost.mean()),
        ]);
    }

    Ok(ModeOutput {
        records_header: &["trial", "seed", "m", "status", "total_power", "cost"],
        records,
        summary_header: &[
            "m",
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_total_power",
            "mean_cost",
        ],
        summary,
        cdf: None,
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}

fn run_maxmin_cdf(cfg: &RunConfig, sweep: &[f64]) -> Result<ModeOutput, CliError> {
    let precoder = cfg.precoder()?;
    let cells = cfg.l_grid;
    let offset = precoder.antenna_offset(cfg.users_per_cell);
    struct Point {
        status: String,
        level: Option<f64>,
    }
    struct Trial {
        seed: u64,
        points: Vec<Point>,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            let points = match draw_mc_system(cfg, seed) {
                Ok(sys) => sweep
                    .iter()
                    .map(|&mv| {
                        let m = mv as u32;
                        if m <= offset {
                            return Point {
                                status: "infeasible_sinr".into(),
                                level: None,
                            };
                        }
                        match maxmin_sinr(&sys, &vec![m; cells], cfg.honor_budget) {
                            Ok(level) => Point {
                                status: "feasible".into(),
                                level: Some(level),
                            },
                            Err(err) => Point {
                                status: error_status(err),
                                level: None,
                            },
                        }
                    })
                    .collect(),
                Err(err) => sweep
                    .iter()
                    .map(|_| Point {
                        status: error_status(&err),
                        level: None,
                    })
                    .collect(),
            };
            Trial {
                seed,
                points,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        for (mi, &mv) in sweep.iter().enumerate() {
            let point = &trial.points[mi];
            let meets = point.level.map(|v| v >= cfg.alpha);
            records.push(vec![
                t.to_string(),
                trial.seed.to_string(),
                fmt_f64(mv),
                point.status.clone(),
                fmt_opt(point.level),
                meets.map(|b| (b as u8).to_string()).unwrap_or_default(),
            ]);
        }
    }

    let mut summary = Vec::new();
    let mut cdf_rows = Vec::new();
    for (mi, &mv) in sweep.iter().enumerate() {
        let mut level = MeanAcc::default();
        let mut meeting = 0usize;
        let mut samples = Vec::new();
        for trial in &trials {
            if let Some(v) = trial.points[mi].level {
                level.push(v);
                samples.push(v);
                if v >= cfg.alpha {
                    meeting += 1;
                }
            }
        }
        summary.push(vec![
            fmt_f64(mv),
            trials.len().to_string(),
            meeting.to_string(),
            fmt_f64(rate(meeting, trials.len())),
            fmt_opt(level.mean()),
        ]);
        if !samples.is_empty() {
            for (value, fraction) in emit_cdf(&samples)? {
                cdf_rows.push(vec![fmt_f64(mv), fmt_f64(value), fmt_f64(fraction)]);
            }
        }
    }

    Ok(ModeOutput {
        records_header: &["trial", "seed", "m", "status", "maxmin_sinr", "meets_target"],
        records,
        summary_header: &[
            "m",
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_maxmin_sinr",
        ],
        summary,
        cdf: (!cdf_rows.is_empty()).then_some((
            &["m", "maxmin_sinr", "fraction"] as &'static [&'static str],
            cdf_rows,
        )),
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}

fn run_p4_m_cdf(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    struct Trial {
        seed: u64,
        point: McPoint,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            let point = match draw_mc_system(cfg, seed) {
                Ok(sys) => match solve_p4(&sys) {
                    Ok(sol) => McPoint::from_solution(&sol),
                    Err(err) => McPoint::error(err),
                },
                Err(err) => McPoint::error(err),
            };
            Trial {
                seed,
                point,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        records.push(vec![
            t.to_string(),
            trial.seed.to_string(),
            trial.point.status.clone(),
            fmt_u32s(&trial.point.m),
            fmt_opt(trial.point.power),
            fmt_opt(trial.point.cost),
        ]);
    }

    let mut power = MeanAcc::default();
    let mut cost = MeanAcc::default();
    let mut antennas = MeanAcc::default();
    let mut samples = Vec::new();
    let mut feasible = 0usize;
    for trial in &trials {
        if trial.point.power.is_some() {
            feasible += 1;
        }
        if let Some(p) = trial.point.power {
            power.push(p);
        }
        if let Some(u) = trial.point.cost {
            cost.push(u);
        }
        for &m in &trial.point.m {
            antennas.push(f64::from(m));
            samples.push(f64::from(m));
        }
    }
    let summary = vec![vec![
        trials.len().to_string(),
        feasible.to_string(),
        fmt_f64(rate(feasible, trials.len())),
        fmt_opt(power.mean()),
        fmt_opt(cost.mean()),
        fmt_opt(antennas.mean()),
    ]];

    let cdf = if samples.is_empty() {
        None
    } else {
        let rows: Vec<Vec<String>> = emit_cdf(&samples)?
            .into_iter()
            .map(|(value, fraction)| vec![fmt_f64(value), fmt_f64(fraction)])
            .collect();
        Some((&["antennas", "fraction"] as &'static [&'static str], rows))
    };

    Ok(ModeOutput {
        records_header: &["trial", "seed", "status", "m", "total_power", "cost"],
        records,
        summary_header: &[
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_total_power",
            "mean_cost",
            "mean_m",
        ],
        summary,
        cdf,
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}

fn run_p4_vs_max(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    let cells = cfg.l_grid;
    struct Trial {
        seed: u64,
        opt: McPoint,
        max: McPoint,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            let (opt, max) = match draw_mc_system(cfg, seed) {
                Ok(sys) => {
                    let opt = match solve_p4(&sys) {
                        Ok(sol) => McPoint::from_solution(&sol),
                        Err(err) => McPoint::error(err),
                    };
                    let max = match solve_p3(&sys, &vec![cfg.m_max; cells]) {
                        Ok(sol) => McPoint::from_solution(&sol),
                        Err(err) => McPoint::error(err),
                    };
                    (opt, max)
                }
                Err(err) => (McPoint::error(&err), McPoint::error(&err)),
            };
            Trial {
                seed,
                opt,
                max,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        let saving = match (trial.opt.cost, trial.max.cost) {
            (Some(opt), Some(max)) if max > 0.0 => Some((max - opt) / max),
            _ => None,
        };
        records.push(vec![
            t.to_string(),
            trial.seed.to_string(),
            trial.opt.status.clone(),
            fmt_opt(trial.opt.cost),
            fmt_opt(trial.opt.power),
            fmt_opt(trial.max.cost),
            fmt_opt(trial.max.power),
            fmt_opt(saving),
        ]);
    }

    let mut cost_opt = MeanAcc::default();
    let mut cost_max = MeanAcc::default();
    let mut saving = MeanAcc::default();
    let mut feasible = 0usize;
    for trial in &trials {
        if let (Some(opt), Some(max)) = (trial.opt.cost, trial.max.cost) {
            feasible += 1;
            cost_opt.push(opt);
            cost_max.push(max);
            if max > 0.0 {
                saving.push((max - opt) / max);
            }
        }
    }
    let summary = vec![vec![
        trials.len().to_string(),
        feasible.to_string(),
        fmt_f64(rate(feasible, trials.len())),
        fmt_opt(cost_opt.mean()),
        fmt_opt(cost_max.mean()),
        fmt_opt(saving.mean()),
    ]];

    Ok(ModeOutput {
        records_header: &[
            "trial",
            "seed",
            "status",
            "cost_opt",
            "power_opt",
            "cost_max",
            "power_max",
            "saving",
        ],
        records,
        summary_header: &[
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_cost_opt",
            "mean_cost_max",
            "mean_saving",
        ],
        summary,
        cdf: None,
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}

fn run_rounding_gap(cfg: &RunConfig) -> Result<ModeOutput, CliError> {
    struct Trial {
        seed: u64,
        status: String,
        rounded: Option<f64>,
        exact: Option<f64>,
        bound: Option<f64>,
        secs: f64,
    }

    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let start = Instant::now();
            let seed = trial_seed(cfg.seed, t);
            let (status, rounded, exact, bound) = match draw_mc_system(cfg, seed) {
                Ok(sys) => match (solve_p4(&sys), exhaustive_p4(&sys, cfg.oracle_limit)) {
                    (Ok(sol), Ok(oracle)) => (
                        mc_status_label(sol.status).to_string(),
                        sol.cost.is_finite().then_some(sol.cost),
                        oracle.cost.is_finite().then_some(oracle.cost),
                        sol.gp_lower_bound,
                    ),
                    (Err(err), _) | (_, Err(err)) => {
                        (error_status(err), None, None, None)
                    }
                },
                Err(err) => (error_status(err), None, None, None),
            };
            Trial {
                seed,
                status,
                rounded,
                exact,
                bound,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut records = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        let gap = match (trial.rounded, trial.exact) {
            (Some(r), Some(e)) if e > 0.0 => Some((r - e) / e),
            _ => None,
        };
        records.push(vec![
            t.to_string(),
            trial.seed.to_string(),
            trial.status.clone(),
            fmt_opt(trial.rounded),
            fmt_opt(trial.exact),
            fmt_opt(gap),
            fmt_opt(trial.bound),
        ]);
    }

    let mut gaps = MeanAcc::default();
    let mut max_gap: Option<f64> = None;
    let mut within = 0usize;
    let mut feasible = 0usize;
    for trial in &trials {
        if let (Some(r), Some(e)) = (trial.rounded, trial.exact) {
            feasible += 1;
            if e > 0.0 {
                let gap = (r - e) / e;
                gaps.push(gap);
                max_gap = Some(max_gap.map_or(gap, |m: f64| m.max(gap)));
                if gap <= 0.02 {
                    within += 1;
                }
            }
        }
    }
    let summary = vec![vec![
        trials.len().to_string(),
        feasible.to_string(),
        fmt_f64(rate(feasible, trials.len())),
        fmt_opt(gaps.mean()),
        fmt_opt(max_gap),
        // Share of the feasible trials the rounding kept within two percent.
        fmt_f64(rate(within, feasible.max(1))),
    ]];

    Ok(ModeOutput {
        records_header: &[
            "trial",
            "seed",
            "status",
            "cost_rounded",
            "cost_exact",
            "rel_gap",
            "gp_lower_bound",
        ],
        records,
        summary_header: &[
            "trials",
            "feasible",
            "feasibility_rate",
            "mean_rel_gap",
            "max_rel_gap",
            "within_2pct_rate",
        ],
        summary,
        cdf: None,
        timings: trials.iter().map(|t| t.secs).collect(),
    })
}
