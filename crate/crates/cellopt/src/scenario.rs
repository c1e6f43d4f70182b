//! Random multi-cell scenarios on a square grid with wrap-around distances.
//!
//! A scenario is a `grid_side x grid_side` arrangement of square cells, one
//! base station at each cell center and a fixed number of users dropped
//! uniformly in each cell (re-drawn until they clear a minimum distance from
//! their own base station). Cross-cell distances use the torus metric so
//! border cells see the same interference geometry as interior ones.
//!
//! From a layout, [`build_instance`] produces the noise-normalized
//! large-scale fading table `beta[l][k][j]` (user `k` of cell `l` toward the
//! base station of cell `j`) together with pilot groups and SINR targets, and
//! [`compute_gammas_mc`] turns that into the channel-estimate quality table
//! `gamma[l][k][j]` accounting for pilot contamination: cells sharing a pilot
//! group pollute each other's estimates, and `gamma` is only nonzero toward
//! base stations that actually hear the user's pilot.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("distance must be positive and finite, got {0} km")]
    Distance(f64),
    #[error("pilot reuse {reuse} is not a valid coloring of a {side}x{side} grid")]
    Reuse { reuse: usize, side: usize },
    #[error("could not place a user {d_min} m away from the base station")]
    Placement { d_min: f64 },
}

/// Downlink precoding scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precoder {
    Mrt,
    Zf,
}

impl Precoder {
    /// Difference between physical and effective antenna counts: ZF spends
    /// one spatial degree of freedom per served user.
    pub fn antenna_offset(self, users_per_cell: usize) -> u32 {
        match self {
            Precoder::Mrt => 0,
            Precoder::Zf => users_per_cell as u32,
        }
    }
}

impl std::str::FromStr for Precoder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mrt" => Ok(Precoder::Mrt),
            "zf" => Ok(Precoder::Zf),
            other => Err(format!("unknown precoder '{other}', expected mrt or zf")),
        }
    }
}

impl std::fmt::Display for Precoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precoder::Mrt => "mrt",
            Precoder::Zf => "zf",
        })
    }
}

/// Geometry and population of the cell grid.
#[derive(Clone, Debug)]
pub struct GridConfig {
    /// Cells per side; the system has `grid_side^2` cells.
    pub grid_side: usize,
    /// Side length of each square cell in meters.
    pub cell_edge_m: f64,
    /// Minimum user distance from its serving base station in meters.
    pub d_min_m: f64,
    /// Users per cell (K).
    pub users_per_cell: usize,
    /// Pilot reuse factor: 1, 2, 4, or the number of cells.
    pub pilot_reuse: usize,
    /// Seed for user placement.
    pub seed: u64,
}

impl GridConfig {
    pub fn num_cells(&self) -> usize {
        self.grid_side * self.grid_side
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.grid_side == 0 {
            return Err(ScenarioError::Config("grid_side must be positive".into()));
        }
        if !(self.cell_edge_m.is_finite() && self.cell_edge_m > 0.0) {
            return Err(ScenarioError::Config(format!(
                "cell_edge_m must be positive, got {}",
                self.cell_edge_m
            )));
        }
        if !(self.d_min_m.is_finite() && self.d_min_m >= 0.0) {
            return Err(ScenarioError::Config(format!(
                "d_min_m must be nonnegative, got {}",
                self.d_min_m
            )));
        }
        if self.d_min_m >= self.cell_edge_m / 2.0 {
            return Err(ScenarioError::Config(format!(
                "d_min_m = {} leaves no room in a {} m cell",
                self.d_min_m, self.cell_edge_m
            )));
        }
        if self.users_per_cell == 0 {
            return Err(ScenarioError::Config("users_per_cell must be positive".into()));
        }
        validate_reuse(self.pilot_reuse, self.grid_side)?;
        Ok(())
    }
}

/// Radio-layer parameters in physical units; converted to noise-normalized
/// form by [`build_instance`].
#[derive(Clone, Debug)]
pub struct RadioConfig {
    /// Total receiver noise power in watts (noise PSD times bandwidth).
    pub noise_w: f64,
    /// Downlink power budget per base station in watts.
    pub rho_dl_w: f64,
    /// Uplink pilot power per user in watts.
    pub rho_ul_w: f64,
    /// Pilot sequence length as a multiple of users per cell; at least 1.
    pub np_over_k: f64,
    /// Largest deployable antenna count per base station.
    pub m_max: u32,
    /// Circuit power per active antenna, in the same units as transmit power
    /// after normalization (watts per antenna divided by noise power when
    /// the caller works in watts; any consistent unit works).
    pub cost_per_antenna: f64,
    pub precoder: Precoder,
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (name, v) in [
            ("noise_w", self.noise_w),
            ("rho_dl_w", self.rho_dl_w),
            ("rho_ul_w", self.rho_ul_w),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.np_over_k.is_finite() && self.np_over_k >= 1.0) {
            return Err(ScenarioError::Config(format!(
                "np_over_k must be at least 1, got {}",
                self.np_over_k
            )));
        }
        if self.m_max == 0 {
            return Err(ScenarioError::Config("m_max must be positive".into()));
        }
        if !(self.cost_per_antenna.is_finite() && self.cost_per_antenna >= 0.0) {
            return Err(ScenarioError::Config(format!(
                "cost_per_antenna must be nonnegative, got {}",
                self.cost_per_antenna
            )));
        }
        Ok(())
    }
}

/// Per-user SINR targets handed to [`build_instance`].
#[derive(Clone, Debug)]
pub enum TargetSinr {
    /// The same target for every user in every cell.
    Uniform(f64),
    /// `targets[l][k]` for user `k` of cell `l`.
    PerUser(Vec<Vec<f64>>),
}

/// Base-station and user positions, in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct CellLayout {
    pub grid_side: usize,
    pub cell_edge_m: f64,
    /// Base-station position per cell, row-major over the grid.
    pub bs_xy: Vec<(f64, f64)>,
    /// `users_xy[l][k]` is the position of user `k` in cell `l`.
    pub users_xy: Vec<Vec<(f64, f64)>>,
}

impl CellLayout {
    pub fn num_cells(&self) -> usize {
        self.bs_xy.len()
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_xy.first().map_or(0, Vec::len)
    }

    /// Side length of the whole grid in meters.
    pub fn extent_m(&self) -> f64 {
        self.grid_side as f64 * self.cell_edge_m
    }

    /// Distance under the wrap-around metric, so interference statistics are
    /// translation invariant across the grid.
    pub fn torus_distance_m(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let extent = self.extent_m();
        let wrap = |d: f64| {
            let d = d.abs();
            d.min(extent - d)
        };
        let dx = wrap(a.0 - b.0);
        let dy = wrap(a.1 - b.1);
        (dx * dx + dy * dy).sqrt()
    }
}

/// A complete problem instance in noise-normalized units.
#[derive(Clone, Debug)]
pub struct MultiCellInstance {
    pub num_cells: usize,
    pub users_per_cell: usize,
    /// `beta[l][k][j]`: large-scale fading of user `k` in cell `l` toward the
    /// base station of cell `j`, normalized by noise power.
    pub beta: Vec<Vec<Vec<f64>>>,
    /// Pilot group id per cell; cells in the same group share pilots, and
    /// user `k` uses pilot `k` within its group.
    pub pilot_group: Vec<usize>,
    /// SINR target per user.
    pub alpha: Vec<Vec<f64>>,
    /// Pilot sequence length in symbols.
    pub num_pilots: usize,
    /// Uplink pilot power, noise-normalized.
    pub rho_ul: f64,
    /// Downlink power budget per base station, noise-normalized.
    pub rho_dl: f64,
    pub m_max: u32,
    pub cost_per_antenna: f64,
    pub precoder: Precoder,
}

impl MultiCellInstance {
    /// Whether cells `l` and `j` share a pilot group.
    pub fn shares_pilots(&self, l: usize, j: usize) -> bool {
        self.pilot_group[l] == self.pilot_group[j]
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let l = self.num_cells;
        let k = self.users_per_cell;
        if l == 0 || k == 0 {
            return Err(ScenarioError::Config("empty instance".into()));
        }
        if self.beta.len() != l || self.pilot_group.len() != l || self.alpha.len() != l {
            return Err(ScenarioError::Config("per-cell table length mismatch".into()));
        }
        for cell in &self.beta {
            if cell.len() != k || cell.iter().any(|u| u.len() != l) {
                return Err(ScenarioError::Config("beta table shape mismatch".into()));
            }
            for user in cell {
                for &b in user {
                    if !(b.is_finite() && b > 0.0) {
                        return Err(ScenarioError::Config(format!(
                            "beta entries must be positive, got {b}"
                        )));
                    }
                }
            }
        }
        for cell in &self.alpha {
            if cell.len() != k {
                return Err(ScenarioError::Config("alpha table shape mismatch".into()));
            }
            for &a in cell {
                if !(a.is_finite() && a > 0.0) {
                    return Err(ScenarioError::Config(format!(
                        "SINR targets must be positive, got {a}"
                    )));
                }
            }
        }
        if self.num_pilots < k {
            return Err(ScenarioError::Config(format!(
                "num_pilots = {} cannot host {k} orthogonal pilots",
                self.num_pilots
            )));
        }
        for (name, v) in [("rho_ul", self.rho_ul), ("rho_dl", self.rho_dl)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.m_max == 0 {
            return Err(ScenarioError::Config("m_max must be positive".into()));
        }
        if !(self.cost_per_antenna.is_finite() && self.cost_per_antenna >= 0.0) {
            return Err(ScenarioError::Config("cost_per_antenna must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Channel-estimate quality table; same indexing as the fading table.
/// `gamma[l][k][j]` is zero unless cell `j` hears the pilot of user `(l, k)`,
/// i.e. unless `j` shares the pilot group of `l`.
#[derive(Clone, Debug)]
pub struct GammaTable {
    pub gamma: Vec<Vec<Vec<f64>>>,
}

impl GammaTable {
    /// Quality of the serving base station's own estimate for user `(l, k)`.
    pub fn own(&self, l: usize, k: usize) -> f64 {
        self.gamma[l][k][l]
    }
}

/// Distance-based pathloss as a linear power gain for `d_km` kilometers:
/// 130 dB at one kilometer plus 37.6 dB per decade.
pub fn pathloss(d_km: f64) -> Result<f64, ScenarioError> {
    if !(d_km.is_finite() && d_km > 0.0) {
        return Err(ScenarioError::Distance(d_km));
    }
    let loss_db = 130.0 + 37.6 * d_km.log10();
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Draws base-station and user positions for `cfg`, deterministically in
/// `cfg.seed`.
pub fn generate_layout(cfg: &GridConfig) -> Result<CellLayout, ScenarioError> {
    cfg.validate()?;
    let side = cfg.grid_side;
    let edge = cfg.cell_edge_m;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut bs_xy = Vec::with_capacity(cfg.num_cells());
    let mut users_xy = Vec::with_capacity(cfg.num_cells());
    for cell in 0..cfg.num_cells() {
        let gx = (cell % side) as f64;
        let gy = (cell / side) as f64;
        let (x0, y0) = (gx * edge, gy * edge);
        let bs = (x0 + edge / 2.0, y0 + edge / 2.0);
        bs_xy.push(bs);

        let mut users = Vec::with_capacity(cfg.users_per_cell);
        for _ in 0..cfg.users_per_cell {
            users.push(place_user(&mut rng, (x0, y0), edge, bs, cfg.d_min_m)?);
        }
        users_xy.push(users);
    }
    Ok(CellLayout {
        grid_side: side,
        cell_edge_m: edge,
        bs_xy,
        users_xy,
    })
}

fn place_user(
    rng: &mut ChaCha8Rng,
    origin: (f64, f64),
    edge: f64,
    bs: (f64, f64),
    d_min: f64,
) -> Result<(f64, f64), ScenarioError> {
    // Rejection sampling; the exclusion disc covers under pi/4 of the cell
    // (enforced by GridConfig::validate), so this terminates fast.
    for _ in 0..10_000 {
        let p = (
            origin.0 + rng.gen_range(0.0..edge),
            origin.1 + rng.gen_range(0.0..edge),
        );
        let d = ((p.0 - bs.0).powi(2) + (p.1 - bs.1).powi(2)).sqrt();
        if d >= d_min {
            return Ok(p);
        }
    }
    Err(ScenarioError::Placement { d_min })
}

fn validate_reuse(reuse: usize, side: usize) -> Result<(), ScenarioError> {
    let cells = side * side;
    let ok = match reuse {
        1 => true,
        // Checkerboard and 2x2 tilings only close up on an even torus.
        2 | 4 => side % 2 == 0,
        r => r == cells,
    };
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::Reuse { reuse, side })
    }
}

/// Colors the grid into pilot groups. Reuse 1 puts every cell in one group,
/// reuse 2 is a checkerboard, reuse 4 a 2x2 tiling, and reuse equal to the
/// cell count makes every cell its own group (no contamination). The tiled
/// colorings require an even grid side so they stay consistent across the
/// wrap-around boundary.
pub fn assign_pilots(grid_side: usize, reuse: usize) -> Result<Vec<usize>, ScenarioError> {
    validate_reuse(reuse, grid_side)?;
    let cells = grid_side * grid_side;
    Ok((0..cells)
        .map(|cell| {
            let gx = cell % grid_side;
            let gy = cell / grid_side;
            match reuse {
                1 => 0,
                2 => (gx + gy) % 2,
                4 => (gx % 2) + 2 * (gy % 2),
                _ => cell,
            }
        })
        .collect())
}

/// Assembles a noise-normalized instance from a layout, radio parameters,
/// and SINR targets.
pub fn build_instance(
    layout: &CellLayout,
    grid: &GridConfig,
    radio: &RadioConfig,
    targets: &TargetSinr,
) -> Result<MultiCellInstance, ScenarioError> {
    grid.validate()?;
    radio.validate()?;
    let l = layout.num_cells();
    let k = layout.users_per_cell();
    if l != grid.num_cells() || k != grid.users_per_cell {
        return Err(ScenarioError::Config(
            "layout does not match grid configuration".into(),
        ));
    }

    let alpha = match targets {
        TargetSinr::Uniform(a) => {
            if !(a.is_finite() && *a > 0.0) {
                return Err(ScenarioError::Config(format!(
                    "SINR target must be positive, got {a}"
                )));
            }
            vec![vec![*a; k]; l]
        }
        TargetSinr::PerUser(t) => {
            if t.len() != l || t.iter().any(|row| row.len() != k) {
                return Err(ScenarioError::Config(
                    "per-user target table has the wrong shape".into(),
                ));
            }
            t.clone()
        }
    };

    let mut beta = vec![vec![vec![0.0; l]; k]; l];
    for (cell, users) in layout.users_xy.iter().enumerate() {
        for (user, &pos) in users.iter().enumerate() {
            for (bs, &bs_pos) in layout.bs_xy.iter().enumerate() {
                let d_km = layout.torus_distance_m(pos, bs_pos) / 1000.0;
                beta[cell][user][bs] = pathloss(d_km)? / radio.noise_w;
            }
        }
    }

    let num_pilots = (radio.np_over_k * k as f64).round() as usize;
    let inst = MultiCellInstance {
        num_cells: l,
        users_per_cell: k,
        beta,
        pilot_group: assign_pilots(grid.grid_side, grid.pilot_reuse)?,
        alpha,
        num_pilots,
        rho_ul: radio.rho_ul_w / radio.noise_w,
        rho_dl: radio.rho_dl_w / radio.noise_w,
        m_max: radio.m_max,
        cost_per_antenna: radio.cost_per_antenna,
        precoder: radio.precoder,
    };
    inst.validate()?;
    Ok(inst)
}

/// Channel-estimate quality for one isolated link: MMSE estimation from
/// `num_pilots` pilot symbols at power `rho_ul` against fading `beta`.
/// Always in `(0, beta]`; mathematically strictly below `beta`, but at very
/// high pilot SNR the quotient can round one ulp past it, so the result is
/// clamped to keep downstream validation honest.
pub fn compute_gamma_sc(beta: f64, num_pilots: usize, rho_ul: f64) -> f64 {
    let snr = num_pilots as f64 * rho_ul * beta;
    (snr * beta / (1.0 + snr)).min(beta)
}

/// Channel-estimate quality table under pilot contamination. For user `k` of
/// cell `l` and a base station `j` in the same pilot group, every same-group
/// cell's user `k` transmits the same pilot, so the estimate at `j` is
/// degraded by the sum of their fading coefficients toward `j`. Entries for
/// base stations outside the group are zero.
pub fn compute_gammas_mc(inst: &MultiCellInstance) -> GammaTable {
    let l = inst.num_cells;
    let k = inst.users_per_cell;
    let np_rho = inst.num_pilots as f64 * inst.rho_ul;
    let mut gamma = vec![vec![vec![0.0; l]; k]; l];
    for cell in 0..l {
        for user in 0..k {
            for bs in 0..l {
                if !inst.shares_pilots(cell, bs) {
                    continue;
                }
                let contamination: f64 = (0..l)
                    .filter(|&other| inst.shares_pilots(other, bs))
                    .map(|other| inst.beta[other][user][bs])
                    .sum();
                let b = inst.beta[cell][user][bs];
                // Clamp like compute_gamma_sc: the estimate quality cannot
                // exceed the fading itself, even after rounding.
                gamma[cell][user][bs] = (np_rho * b * b / (1.0 + np_rho * contamination)).min(b);
            }
        }
    }
    GammaTable { gamma }
}
