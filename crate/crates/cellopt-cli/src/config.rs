//! TOML run configuration: scenario parameters shared by every subcommand
//! that builds an instance from a layout, plus the experiment controls
//! (mode, trial count, sweep values). Unknown keys are rejected so typos in
//! a config file fail loudly instead of silently running defaults.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use cellopt::scenario::{
    build_instance, compute_gammas_mc, generate_layout, GammaTable, GridConfig,
    MultiCellInstance, Precoder, RadioConfig, TargetSinr,
};
use serde::Deserialize;

use crate::CliError;

/// Experiment mode; each reproduces one figure-style result at desk scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Single-cell minimum transmit power versus antenna count, one curve
    /// per user count.
    P1Sweep,
    /// Single-cell transmit-plus-circuit cost versus antenna count, with the
    /// closed-form optimum recorded alongside for comparison.
    P2CostCurve,
    /// Optimal antenna counts under maximum-ratio versus zero-forcing
    /// precoding across a range of SINR targets.
    MrtZfCompare,
    /// Multi-cell minimum transmit power versus a uniform antenna count.
    P3Sweep,
    /// Empirical CDF of the max-min SINR level at fixed antenna counts.
    MaxminCdf,
    /// Empirical CDF of the jointly optimized per-cell antenna counts.
    P4MCdf,
    /// Jointly optimized cost versus the cost of always deploying the full
    /// array.
    P4VsMax,
    /// Rounded joint solution versus the exhaustive integer optimum on
    /// deliberately small scenarios.
    RoundingGap,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::P1Sweep => "p1_sweep",
            Mode::P2CostCurve => "p2_cost_curve",
            Mode::MrtZfCompare => "mrt_zf_compare",
            Mode::P3Sweep => "p3_sweep",
            Mode::MaxminCdf => "maxmin_cdf",
            Mode::P4MCdf => "p4_m_cdf",
            Mode::P4VsMax => "p4_vs_max",
            Mode::RoundingGap => "rounding_gap",
        }
    }

    /// Modes whose sweep values are physical antenna counts.
    pub fn sweeps_antennas(self) -> bool {
        matches!(
            self,
            Mode::P1Sweep | Mode::P2CostCurve | Mode::P3Sweep | Mode::MaxminCdf
        )
    }

    /// Modes that run one joint solve per trial with no swept parameter.
    pub fn has_no_sweep(self) -> bool {
        matches!(self, Mode::P4MCdf | Mode::P4VsMax | Mode::RoundingGap)
    }

    /// Modes restricted to a single cell.
    pub fn is_single_cell(self) -> bool {
        matches!(self, Mode::P1Sweep | Mode::P2CostCurve | Mode::MrtZfCompare)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_trials() -> u32 {
    200
}
fn default_seed() -> u64 {
    1
}
fn default_l_grid() -> usize {
    16
}
fn default_cell_edge_m() -> f64 {
    250.0
}
fn default_d_min_m() -> f64 {
    15.0
}
fn default_users_per_cell() -> usize {
    8
}
fn default_pilot_reuse() -> usize {
    1
}
fn default_bandwidth_hz() -> f64 {
    20e6
}
fn default_noise_w() -> f64 {
    2e-13
}
fn default_rho_dl_w() -> f64 {
    1.0
}
fn default_rho_ul_w() -> f64 {
    0.1
}
fn default_np_over_k() -> f64 {
    1.0
}
fn default_m_max() -> u32 {
    100
}
fn default_c() -> f64 {
    0.09
}
fn default_precoder() -> String {
    "mrt".into()
}
fn default_alpha() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_oracle_limit() -> u64 {
    100_000
}

/// One run configuration file. Scenario keys apply to every subcommand that
/// reads a config; `mode`, `trials`, and the sweep lists only matter to
/// `experiment`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Experiment mode; required by `experiment`, ignored elsewhere.
    pub mode: Option<Mode>,
    /// Monte Carlo trials per sweep point.
    #[serde(default = "default_trials")]
    pub trials: u32,
    /// Master seed; per-trial seeds are derived from it by counter.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Total number of cells; must be a perfect square (grid side squared).
    #[serde(rename = "L_grid", default = "default_l_grid")]
    pub l_grid: usize,
    /// Side length of each square cell in meters.
    #[serde(default = "default_cell_edge_m")]
    pub cell_edge_m: f64,
    /// Minimum user-to-base-station distance in meters.
    #[serde(default = "default_d_min_m")]
    pub d_min_m: f64,
    /// Users per cell (K).
    #[serde(default = "default_users_per_cell")]
    pub users_per_cell: usize,
    /// Pilot reuse factor: 1, 2, 4, or the number of cells.
    #[serde(default = "default_pilot_reuse")]
    pub pilot_reuse: usize,
    /// System bandwidth in hertz. Echoed in the manifest for documentation;
    /// the solvers work with the total noise power below.
    #[serde(default = "default_bandwidth_hz")]
    pub bandwidth_hz: f64,
    /// Total receiver noise power in watts.
    #[serde(default = "default_noise_w")]
    pub noise_w: f64,
    /// Downlink power budget per base station in watts.
    #[serde(default = "default_rho_dl_w")]
    pub rho_dl_w: f64,
    /// Uplink pilot power per user in watts.
    #[serde(default = "default_rho_ul_w")]
    pub rho_ul_w: f64,
    /// Pilot length as a multiple of users per cell.
    #[serde(default = "default_np_over_k")]
    pub np_over_k: f64,
    /// Largest deployable antenna count per base station.
    #[serde(default = "default_m_max")]
    pub m_max: u32,
    /// Circuit power per active antenna, normalized like transmit power.
    #[serde(default = "default_c")]
    pub c: f64,
    /// "mrt" or "zf".
    #[serde(default = "default_precoder")]
    pub precoder: String,
    /// Uniform SINR target.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Swept parameter values. Antenna counts for p1_sweep, p2_cost_curve,
    /// p3_sweep, and maxmin_cdf; SINR targets for mrt_zf_compare; must be
    /// absent for the no-sweep modes. Empty picks a mode-specific default.
    #[serde(default)]
    pub sweep_values: Vec<f64>,
    /// User counts for p1_sweep (one curve per entry); other modes use
    /// `users_per_cell` and reject this key.
    #[serde(default)]
    pub k_values: Vec<usize>,
    /// Whether max-min balancing respects the downlink power budget.
    #[serde(default = "default_true")]
    pub honor_budget: bool,
    /// Upper bound on antenna combinations an exhaustive search may visit.
    #[serde(default = "default_oracle_limit")]
    pub oracle_limit: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config must deserialize from defaults")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn precoder(&self) -> Result<Precoder, CliError> {
        Precoder::from_str(&self.precoder)
            .map_err(|_| CliError::Usage(format!("unknown precoder {:?}", self.precoder)))
    }

    pub fn grid_side(&self) -> Result<usize, CliError> {
        let side = (self.l_grid as f64).sqrt().round() as usize;
        if side == 0 || side * side != self.l_grid {
            return Err(CliError::Usage(format!(
                "L_grid = {} is not a positive perfect square",
                self.l_grid
            )));
        }
        Ok(side)
    }

    /// Scenario geometry for one trial. `users` overrides `users_per_cell`
    /// so sweep modes can vary the user count without cloning the config.
    pub fn grid_config(&self, seed: u64, users: usize) -> Result<GridConfig, CliError> {
        Ok(GridConfig {
            grid_side: self.grid_side()?,
            cell_edge_m: self.cell_edge_m,
            d_min_m: self.d_min_m,
            users_per_cell: users,
            pilot_reuse: self.pilot_reuse,
            seed,
        })
    }

    pub fn radio_config(&self, precoder: Precoder) -> RadioConfig {
        RadioConfig {
            noise_w: self.noise_w,
            rho_dl_w: self.rho_dl_w,
            rho_ul_w: self.rho_ul_w,
            np_over_k: self.np_over_k,
            m_max: self.m_max,
            cost_per_antenna: self.c,
            precoder,
        }
    }

    /// Draw one scenario: place users with the given seed, then build the
    /// normalized instance and its channel-estimate qualities.
    pub fn draw_instance(
        &self,
        seed: u64,
        users: usize,
        alpha: f64,
        precoder: Precoder,
    ) -> Result<(MultiCellInstance, GammaTable), CliError> {
        let grid = self.grid_config(seed, users)?;
        let radio = self.radio_config(precoder);
        let layout = generate_layout(&grid)?;
        let inst = build_instance(&layout, &grid, &radio, &TargetSinr::Uniform(alpha))?;
        let gammas = compute_gammas_mc(&inst);
        Ok((inst, gammas))
    }

    /// Echo every resolved key in a fixed order, one `key = value` line per
    /// entry, for the run manifest.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push(
            "mode",
            self.mode.map_or("unset".into(), |m| m.name().into()),
        );
        push("trials", self.trials.to_string());
        push("seed", self.seed.to_string());
        push("L_grid", self.l_grid.to_string());
        push("cell_edge_m", self.cell_edge_m.to_string());
        push("d_min_m", self.d_min_m.to_string());
        push("users_per_cell", self.users_per_cell.to_string());
        push("pilot_reuse", self.pilot_reuse.to_string());
        push("bandwidth_hz", self.bandwidth_hz.to_string());
        push("noise_w", self.noise_w.to_string());
        push("rho_dl_w", self.rho_dl_w.to_string());
        push("rho_ul_w", self.rho_ul_w.to_string());
        push("np_over_k", self.np_over_k.to_string());
        push("m_max", self.m_max.to_string());
        push("c", self.c.to_string());
        push("precoder", self.precoder.clone());
        push("alpha", self.alpha.to_string());
        push("sweep_values", format!("{:?}", self.sweep_values));
        push("k_values", format!("{:?}", self.k_values));
        push("honor_budget", self.honor_budget.to_string());
        push("oracle_limit", self.oracle_limit.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_every_key() {
        let cfg = RunConfig::parse("").expect("empty config should parse");
        assert_eq!(cfg.trials, 200, "default trial count");
        assert_eq!(cfg.l_grid, 16, "default grid size");
        assert_eq!(cfg.m_max, 100, "default antenna cap");
        assert_eq!(cfg.precoder().unwrap(), Precoder::Mrt);
        assert!(cfg.mode.is_none(), "mode has no default");
        assert!(cfg.honor_budget, "budget honored by default");
    }

    #[test]
    fn mode_names_round_trip() {
        for (text, mode) in [
            ("p1_sweep", Mode::P1Sweep),
            ("p2_cost_curve", Mode::P2CostCurve),
            ("mrt_zf_compare", Mode::MrtZfCompare),
            ("p3_sweep", Mode::P3Sweep),
            ("maxmin_cdf", Mode::MaxminCdf),
            ("p4_m_cdf", Mode::P4MCdf),
            ("p4_vs_max", Mode::P4VsMax),
            ("rounding_gap", Mode::RoundingGap),
        ] {
            let cfg = RunConfig::parse(&format!("mode = {text:?}"))
                .unwrap_or_else(|e| panic!("mode {text} should parse: {e}"));
            assert_eq!(cfg.mode, Some(mode));
            assert_eq!(mode.name(), text, "display name matches TOML spelling");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("m_maximum = 3").expect_err("typo should fail");
        assert!(
            err.to_string().contains("m_maximum"),
            "error should name the bad key, got: {err}"
        );
    }

    #[test]
    fn non_square_grid_is_rejected() {
        let cfg = RunConfig::parse("L_grid = 12").unwrap();
        assert!(cfg.grid_side().is_err(), "12 cells do not form a square");
        let cfg = RunConfig::parse("L_grid = 9").unwrap();
        assert_eq!(cfg.grid_side().unwrap(), 3);
    }

    #[test]
    fn draw_instance_is_seed_deterministic() {
        let cfg = RunConfig::parse("L_grid = 4\nusers_per_cell = 3").unwrap();
        let (a, ga) = cfg.draw_instance(7, 3, 1.0, Precoder::Mrt).unwrap();
        let (b, gb) = cfg.draw_instance(7, 3, 1.0, Precoder::Mrt).unwrap();
        assert_eq!(a.beta, b.beta, "same seed must give identical fading");
        assert_eq!(ga.gamma, gb.gamma);
        let (c, _) = cfg.draw_instance(8, 3, 1.0, Precoder::Mrt).unwrap();
        assert_ne!(a.beta, c.beta, "different seeds should move the users");
    }
}
