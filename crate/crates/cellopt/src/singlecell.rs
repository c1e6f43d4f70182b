//! Closed-form joint antenna/power optimization for a single cell.
//!
//! With MRT or ZF precoding from MMSE channel estimates, the per-user SINR
//! constraints at effective antenna count `mbar` (physical antennas for MRT,
//! physical minus users for ZF) reduce to a linear system whose interference
//! matrix is diagonal-times-rank-one. That structure gives everything in
//! closed form:
//!
//! * the exact power vector meeting every SINR target with equality,
//! * the total transmit power `tau / (mbar - mu)`, where `mu` is the
//!   interference load (trace of the target-weighted interference matrix) and
//!   `tau` the target-weighted inverse estimate quality,
//! * feasibility thresholds on `mbar` for the SINR constraints alone and
//!   jointly with the power budget,
//! * the real-valued minimizer `mu + sqrt(tau / c)` of the transmit-plus-
//!   circuit power cost `c * mbar + tau / (mbar - mu)`, whose convexity
//!   confines the integer optimum to the two neighbors of the continuous one.
//!
//! Powers are noise-normalized throughout, matching [`crate::scenario`].

use crate::linalg::{RankOneMatrix, RADIUS_MARGIN};
use crate::scenario::{GammaTable, MultiCellInstance, Precoder};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("{antennas} antennas cannot zero-force {users} users")]
    TooFewAntennas { antennas: u32, users: usize },
    #[error("expected a single-cell instance, got {cells} cells")]
    NotSingleCell { cells: usize },
}

/// One cell, `users` single-antenna users, noise-normalized quantities.
#[derive(Clone, Debug)]
pub struct SingleCellInstance {
    pub users: usize,
    /// Large-scale fading per user.
    pub beta: Vec<f64>,
    /// Channel-estimate quality per user; in `(0, beta]`.
    pub gamma: Vec<f64>,
    /// SINR target per user.
    pub alpha: Vec<f64>,
    /// Downlink power budget.
    pub rho_dl: f64,
    /// Largest deployable physical antenna count.
    pub m_max: u32,
    /// Circuit power per active antenna.
    pub cost_per_antenna: f64,
    pub precoder: Precoder,
}

impl SingleCellInstance {
    pub fn validate(&self) -> Result<(), ScError> {
        let k = self.users;
        if k == 0 {
            return Err(ScError::Invalid("no users".into()));
        }
        if self.beta.len() != k || self.gamma.len() != k || self.alpha.len() != k {
            return Err(ScError::Invalid("per-user vectors must have length users".into()));
        }
        for i in 0..k {
            let (b, g, a) = (self.beta[i], self.gamma[i], self.alpha[i]);
            if !(b.is_finite() && b > 0.0) {
                return Err(ScError::Invalid(format!("beta[{i}] = {b} must be positive")));
            }
            if !(g.is_finite() && g > 0.0 && g <= b) {
                return Err(ScError::Invalid(format!(
                    "gamma[{i}] = {g} must lie in (0, beta] = (0, {b}]"
                )));
            }
            if !(a.is_finite() && a > 0.0) {
                return Err(ScError::Invalid(format!("alpha[{i}] = {a} must be positive")));
            }
        }
        if !(self.rho_dl.is_finite() && self.rho_dl > 0.0) {
            return Err(ScError::Invalid(format!(
                "rho_dl = {} must be positive",
                self.rho_dl
            )));
        }
        if self.m_max == 0 {
            return Err(ScError::Invalid("m_max must be positive".into()));
        }
        if !(self.cost_per_antenna.is_finite() && self.cost_per_antenna >= 0.0) {
            return Err(ScError::Invalid("cost_per_antenna must be nonnegative".into()));
        }
        Ok(())
    }

    /// Extracts the single-cell view of a one-cell multi-cell instance.
    pub fn from_multicell(
        inst: &MultiCellInstance,
        gammas: &GammaTable,
    ) -> Result<Self, ScError> {
        if inst.num_cells != 1 {
            return Err(ScError::NotSingleCell {
                cells: inst.num_cells,
            });
        }
        let me = Self {
            users: inst.users_per_cell,
            beta: (0..inst.users_per_cell).map(|k| inst.beta[0][k][0]).collect(),
            gamma: (0..inst.users_per_cell).map(|k| gammas.own(0, k)).collect(),
            alpha: inst.alpha[0].clone(),
            rho_dl: inst.rho_dl,
            m_max: inst.m_max,
            cost_per_antenna: inst.cost_per_antenna,
            precoder: inst.precoder,
        };
        me.validate()?;
        Ok(me)
    }

    /// Physical antennas consumed before any effective antenna serves gain.
    pub fn antenna_offset(&self) -> u32 {
        self.precoder.antenna_offset(self.users)
    }

    /// Largest usable effective antenna count, or zero when the precoder
    /// cannot run at all within `m_max`.
    pub fn mbar_max(&self) -> u32 {
        self.m_max.saturating_sub(self.antenna_offset())
    }
}

/// The reduced quantities the closed forms run on.
#[derive(Clone, Debug)]
pub struct ScSystem {
    pub users: usize,
    /// Interference-to-quality ratio per user: `beta/gamma` for MRT,
    /// `(beta - gamma)/gamma` for ZF.
    pub interference: Vec<f64>,
    /// SINR target per user (diagonal of the target matrix).
    pub targets: Vec<f64>,
    /// Target-weighted inverse quality per user: `alpha/gamma`.
    pub load: Vec<f64>,
    /// Interference load: `sum_k alpha_k * interference_k`. The SINR system
    /// is solvable exactly when `mbar` exceeds this.
    pub mu: f64,
    /// `sum_k alpha_k / gamma_k`; total power at `mbar` is `tau/(mbar - mu)`.
    pub tau: f64,
}

impl ScSystem {
    pub fn new(inst: &SingleCellInstance) -> Result<Self, ScError> {
        inst.validate()?;
        let interference: Vec<f64> = inst
            .beta
            .iter()
            .zip(&inst.gamma)
            .map(|(&b, &g)| match inst.precoder {
                Precoder::Mrt => b / g,
                Precoder::Zf => (b - g) / g,
            })
            .collect();
        let load: Vec<f64> = inst
            .alpha
            .iter()
            .zip(&inst.gamma)
            .map(|(&a, &g)| a / g)
            .collect();
        let mu = inst
            .alpha
            .iter()
            .zip(&interference)
            .map(|(&a, &f)| a * f)
            .sum();
        let tau = load.iter().sum();
        Ok(Self {
            users: inst.users,
            interference,
            targets: inst.alpha.clone(),
            load,
            mu,
            tau,
        })
    }

    /// Target-weighted interference matrix as an explicit rank-one factor
    /// (column vector `alpha .* interference`, row vector of ones).
    pub fn weighted_interference(&self) -> RankOneMatrix {
        let u: Vec<f64> = self
            .targets
            .iter()
            .zip(&self.interference)
            .map(|(&a, &f)| a * f)
            .collect();
        RankOneMatrix::new(u, vec![1.0; self.users]).expect("equal lengths by construction")
    }

    /// Whether the SINR system is solvable at effective count `mbar`,
    /// with the standard margin against the singular boundary.
    pub fn sinr_feasible(&self, mbar: f64) -> bool {
        mbar > 0.0 && self.mu < mbar * (1.0 - RADIUS_MARGIN)
    }
}

/// Smallest integer strictly greater than `x`, treating values within 1e-9
/// of an integer as that integer (the boundary itself never counts).
fn strict_int_above(x: f64) -> u32 {
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 { r + 1.0 } else { x.ceil() };
    v.max(1.0) as u32
}

/// Smallest integer at least `x`, snapping values within 1e-9 of an integer
/// down to it (the boundary counts as attained).
fn lenient_ceil(x: f64) -> u32 {
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 { r } else { x.ceil() };
    v.max(1.0) as u32
}

/// Exact powers meeting every SINR target with equality at effective antenna
/// count `mbar`, or `None` when the targets are unreachable at that count.
///
/// Uses the rank-one resolvent: with interference load `mu` and per-user
/// load vector `nu`, the solution is `(nu + (alpha .* f) * tau/(mbar - mu)) / mbar`.
pub fn min_power_sc(sys: &ScSystem, mbar: f64) -> Option<Vec<f64>> {
    if !sys.sinr_feasible(mbar) {
        return None;
    }
    let spill = sys.tau / (mbar - sys.mu);
    Some(
        sys.load
            .iter()
            .zip(sys.targets.iter().zip(&sys.interference))
            .map(|(&nu, (&a, &f))| (nu + a * f * spill) / mbar)
            .collect(),
    )
}

/// Total transmit power of the equality solution at `mbar`: `tau/(mbar - mu)`.
pub fn total_power_sc(sys: &ScSystem, mbar: f64) -> Option<f64> {
    if !sys.sinr_feasible(mbar) {
        return None;
    }
    Some(sys.tau / (mbar - sys.mu))
}

/// Smallest integer effective antenna count at which the SINR targets are
/// reachable with finite power. The threshold (the interference load) is an
/// open boundary, so landing on it exactly still requires one more antenna.
pub fn m_min_sinr(sys: &ScSystem) -> u32 {
    strict_int_above(sys.mu)
}

/// Smallest integer effective antenna count satisfying the SINR targets and
/// the power budget together. The budget threshold `mu + tau/rho_dl` is a
/// closed boundary: total power there equals the budget exactly.
pub fn m_min_joint(sys: &ScSystem, rho_dl: f64) -> u32 {
    let budget_floor = lenient_ceil(sys.mu + sys.tau / rho_dl);
    m_min_sinr(sys).max(budget_floor)
}

/// Stationary point of the transmit-plus-circuit cost over real `mbar`,
/// ignoring every constraint: `mu + sqrt(tau / c)`.
pub fn m_opt_unclamped(sys: &ScSystem, cost_per_antenna: f64) -> f64 {
    sys.mu + (sys.tau / cost_per_antenna).sqrt()
}

/// Real-valued cost minimizer clamped into the feasible interval
/// `[max(mu + tau/rho_dl, 1), mbar_max]`. With zero antenna cost the
/// optimum saturates at `mbar_max` since more antennas only save power.
pub fn m_opt_continuous(sys: &ScSystem, inst: &SingleCellInstance) -> f64 {
    let upper = inst.mbar_max() as f64;
    if inst.cost_per_antenna == 0.0 {
        return upper;
    }
    let lower = (sys.mu + sys.tau / inst.rho_dl).max(1.0);
    m_opt_unclamped(sys, inst.cost_per_antenna)
        .max(lower)
        .min(upper)
}

/// Transmit-plus-circuit cost at effective count `mbar` with powers `p`.
pub fn cost_u(cost_per_antenna: f64, mbar: f64, p: &[f64]) -> f64 {
    cost_per_antenna * mbar + p.iter().sum::<f64>()
}

/// Physical-antenna gap between the MRT and ZF continuous optima sharing the
/// same fading, estimate qualities, and targets: `sum(alpha) - users`.
///
/// MRT pays `beta/gamma` interference per user where ZF pays
/// `(beta - gamma)/gamma`, so the interference loads differ by `sum(alpha)`;
/// converting ZF's effective count to physical antennas costs `users` more.
/// Positive means MRT wants more antennas; uniform unit targets balance out.
pub fn mrt_zf_gap(inst: &SingleCellInstance) -> f64 {
    inst.alpha.iter().sum::<f64>() - inst.users as f64
}

/// Outcome classification for the single-cell solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScStatus {
    Feasible,
    /// SINR targets unreachable at any power within `m_max` antennas.
    InfeasibleSinr,
    /// SINR targets reachable, but not within the power budget.
    InfeasiblePower,
}

#[derive(Clone, Debug)]
pub struct ScSolution {
    pub status: ScStatus,
    /// Chosen physical antenna count; 0 when infeasible.
    pub m: u32,
    /// Chosen effective antenna count; 0 when infeasible.
    pub mbar: u32,
    /// Per-user powers meeting every target with equality; empty when
    /// infeasible.
    pub p: Vec<f64>,
    /// `c * mbar + sum(p)`; NaN when infeasible.
    pub cost: f64,
    /// `c * m + sum(p)` over physical antennas; NaN when infeasible.
    pub cost_physical: f64,
    /// Clamped real-valued optimum the integer choice was rounded from.
    pub m_continuous: f64,
}

impl ScSolution {
    fn infeasible(status: ScStatus, m_continuous: f64) -> Self {
        Self {
            status,
            m: 0,
            mbar: 0,
            p: Vec::new(),
            cost: f64::NAN,
            cost_physical: f64::NAN,
            m_continuous,
        }
    }
}

/// Minimizes transmit-plus-circuit power over antenna count and powers.
///
/// The cost over effective antennas is strictly convex on the feasible ray,
/// so after clamping the continuous minimizer into the feasible interval the
/// integer optimum is one of its two integer neighbors; both are evaluated
/// exactly and the cheaper kept (ties to the smaller count).
pub fn solve_p2(inst: &SingleCellInstance) -> Result<ScSolution, ScError> {
    let sys = ScSystem::new(inst)?;
    let mbar_max = inst.mbar_max();
    if mbar_max == 0 || !sys.sinr_feasible(mbar_max as f64) {
        return Ok(ScSolution::infeasible(ScStatus::InfeasibleSinr, f64::NAN));
    }
    let m_cont = m_opt_continuous(&sys, inst);
    let m_lo = m_min_joint(&sys, inst.rho_dl);
    if m_lo > mbar_max {
        return Ok(ScSolution::infeasible(ScStatus::InfeasiblePower, m_cont));
    }

    let clamp = |m: f64| -> u32 { (m.max(m_lo as f64).min(mbar_max as f64)) as u32 };
    let lo = clamp(m_cont.floor());
    let hi = clamp(m_cont.ceil());
    let cost_at = |mbar: u32| sys.tau / (mbar as f64 - sys.mu) + inst.cost_per_antenna * mbar as f64;
    let mbar = if hi != lo && cost_at(hi) < cost_at(lo) { hi } else { lo };

    let p = min_power_sc(&sys, mbar as f64).expect("mbar is above the SINR floor");
    let total: f64 = p.iter().sum();
    debug_assert!(
        total <= inst.rho_dl * (1.0 + 1e-9),
        "budget violated at the joint floor: {total} > {}",
        inst.rho_dl
    );
    let m = mbar + inst.antenna_offset();
    Ok(ScSolution {
        status: ScStatus::Feasible,
        m,
        mbar,
        p,
        cost: inst.cost_per_antenna * mbar as f64 + total,
        cost_physical: inst.cost_per_antenna * m as f64 + total,
        m_continuous: m_cont,
    })
}

/// Per-user SINRs delivered by powers `p` at physical antenna count `m`.
pub fn effective_sinr_sc(
    inst: &SingleCellInstance,
    p: &[f64],
    m: u32,
) -> Result<Vec<f64>, ScError> {
    inst.validate()?;
    if p.len() != inst.users {
        return Err(ScError::Invalid(format!(
            "power vector has length {}, expected {}",
            p.len(),
            inst.users
        )));
    }
    if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(ScError::Invalid("powers must be nonnegative".into()));
    }
    let offset = inst.antenna_offset();
    if m <= offset {
        return Err(ScError::TooFewAntennas {
            antennas: m,
            users: inst.users,
        });
    }
    let mbar = (m - offset) as f64;
    let total: f64 = p.iter().sum();
    Ok((0..inst.users)
        .map(|k| {
            let leak = match inst.precoder {
                Precoder::Mrt => inst.beta[k],
                Precoder::Zf => inst.beta[k] - inst.gamma[k],
            };
            mbar * inst.gamma[k] * p[k] / (1.0 + leak * total)
        })
        .collect())
}
