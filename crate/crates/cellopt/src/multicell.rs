//! Multi-cell power control and the joint antenna/power optimizer.
//!
//! Users are indexed flat as `i = l * K + k` for user `k` of cell `l`. With
//! effective antenna counts `mbar_l` per base station, the SINR targets are
//! met with equality by the solution of the linear system
//!
//! ```text
//! (M - T F - T A M) p = v,
//! ```
//!
//! where `M` is the per-user diagonal of serving-cell antenna counts, `T` the
//! diagonal of targets, `v_i = alpha_i / gamma_i`, `F` collects ordinary
//! interference-to-quality ratios, and `A` the pilot-contamination coupling
//! whose interference grows with the *interferer's* antenna count. Row `i` of
//! `F` holds `beta / gamma_i` ratios toward each interfering base station
//! (with the zero-forcing reduction `beta - gamma` where that station has an
//! estimate of user `i`'s channel); `A` is nonzero only toward same-pilot
//! users of other cells in the same pilot group and is precoder-independent.
//!
//! Substituting `q = M p` turns the system into `(I - B) q = v` with the
//! nonnegative coupling matrix `B = T F M^{-1} + T A`; targets are achievable
//! exactly when the spectral radius of `B` stays below one. Because `B` is
//! entrywise decreasing in the antenna counts while `T A` is not, the radius
//! of `T A` alone decides whether any antenna count can help: at or above one
//! the instance stays infeasible no matter how large the arrays grow.
//!
//! The joint problem (choose integer antenna counts and powers to minimize
//! transmit plus circuit cost) is attacked through a geometric-program
//! relaxation over continuous antenna counts, rounded up and then improved by
//! greedy single-cell decrements; [`exhaustive_p4`] provides the certified
//! optimum for small instances and [`McSolution::gp_lower_bound`] a sound
//! bound for larger ones.

use crate::gp::{self, GpError, GpStandardForm, Monomial, Posynomial, VarId, VarSet};
use crate::linalg::{
    is_nonsingular_m_matrix, solve_linear, spectral_radius, DenseMatrix, LinalgError,
    RADIUS_MARGIN,
};
use crate::scenario::{GammaTable, MultiCellInstance, Precoder, ScenarioError};
use thiserror::Error;

/// Convergence tolerance handed to spectral-radius computations.
const RADIUS_TOL: f64 = 1e-12;
/// Relative slack allowed when checking per-station power budgets.
const BUDGET_SLACK: f64 = 1e-9;
/// Relative gap requested from the geometric-program solver.
const GP_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("cell {cell} has {antennas} antennas but needs more than {offset} for this precoder")]
    TooFewAntennas { cell: usize, antennas: u32, offset: u32 },
    #[error("antenna vector has {got} entries, expected {expected}")]
    WrongCellCount { got: usize, expected: usize },
    #[error("exhaustive search over {combos} antenna combinations exceeds the limit {limit}")]
    SearchTooLarge { combos: u128, limit: u64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Precomputed coupling data for one instance, in flat user indexing.
#[derive(Clone, Debug)]
pub struct McSystem {
    pub num_cells: usize,
    pub users_per_cell: usize,
    /// Ordinary interference-to-quality ratios, row `i` scaled by `1/gamma_i`.
    pub f: DenseMatrix,
    /// Coherent (pilot-contamination) coupling, same scaling; zero outside
    /// same-pilot cross-cell pairs.
    pub a: DenseMatrix,
    /// SINR target per user.
    pub targets: Vec<f64>,
    /// Serving-station estimate quality per user.
    pub gamma_own: Vec<f64>,
    pub rho_dl: f64,
    pub m_max: u32,
    pub cost_per_antenna: f64,
    pub precoder: Precoder,
}

/// Builds the flat coupling system from an instance and its estimate-quality
/// table.
pub fn build_mc_system(
    inst: &MultiCellInstance,
    gammas: &GammaTable,
) -> Result<McSystem, McError> {
    inst.validate()?;
    let cells = inst.num_cells;
    let users = inst.users_per_cell;
    if gammas.gamma.len() != cells
        || gammas
            .gamma
            .iter()
            .any(|c| c.len() != users || c.iter().any(|u| u.len() != cells))
    {
        return Err(McError::Invalid(
            "estimate-quality table shape does not match the instance".into(),
        ));
    }
    let n = cells * users;
    let mut targets = Vec::with_capacity(n);
    let mut gamma_own = Vec::with_capacity(n);
    for l in 0..cells {
        for k in 0..users {
            let g = gammas.own(l, k);
            if !(g.is_finite() && g > 0.0) {
                return Err(McError::Invalid(format!(
                    "user ({l}, {k}) has no usable serving-station estimate (gamma = {g})"
                )));
            }
            targets.push(inst.alpha[l][k]);
            gamma_own.push(g);
        }
    }

    let zf = inst.precoder == Precoder::Zf;
    let mut f = DenseMatrix::zeros(n, n);
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let (l, k) = (i / users, i % users);
        let gi = gamma_own[i];
        for j in 0..n {
            let (lp, kp) = (j / users, j % users);
            // Station lp transmits power p_j; its signal reaches user (l, k)
            // through beta[l][k][lp], reduced by the quality of its estimate
            // of that channel when zero-forcing.
            let mut numer = inst.beta[l][k][lp];
            if zf {
                let known = gammas.gamma[l][k][lp];
                if known > numer * (1.0 + 1e-12) {
                    return Err(McError::Invalid(format!(
                        "estimate quality {known} exceeds fading {numer} for user ({l}, {k}) at station {lp}"
                    )));
                }
                numer = (numer - known).max(0.0);
            }
            if numer > 0.0 {
                f.set(i, j, numer / gi);
            }
            if kp == k && lp != l && inst.shares_pilots(l, lp) {
                let coh = gammas.gamma[l][k][lp];
                if coh > 0.0 {
                    a.set(i, j, coh / gi);
                }
            }
        }
    }
    Ok(McSystem {
        num_cells: cells,
        users_per_cell: users,
        f,
        a,
        targets,
        gamma_own,
        rho_dl: inst.rho_dl,
        m_max: inst.m_max,
        cost_per_antenna: inst.cost_per_antenna,
        precoder: inst.precoder,
    })
}

impl McSystem {
    pub fn dim(&self) -> usize {
        self.num_cells * self.users_per_cell
    }

    /// Physical minus effective antennas per station for the precoder.
    pub fn antenna_offset(&self) -> u32 {
        self.precoder.antenna_offset(self.users_per_cell)
    }

    /// Largest usable effective antenna count.
    pub fn mbar_max(&self) -> u32 {
        self.m_max.saturating_sub(self.antenna_offset())
    }

    /// Target-weighted inverse estimate quality, the right-hand side of the
    /// equality-SINR system.
    pub fn load_vector(&self) -> Vec<f64> {
        self.targets
            .iter()
            .zip(&self.gamma_own)
            .map(|(&a, &g)| a / g)
            .collect()
    }

    /// Converts physical antenna counts to effective ones, checking shape
    /// and the precoder's minimum.
    pub fn effective_antennas(&self, m: &[u32]) -> Result<Vec<f64>, McError> {
        if m.len() != self.num_cells {
            return Err(McError::WrongCellCount {
                got: m.len(),
                expected: self.num_cells,
            });
        }
        let offset = self.antenna_offset();
        m.iter()
            .enumerate()
            .map(|(cell, &ml)| {
                if ml <= offset {
                    Err(McError::TooFewAntennas {
                        cell,
                        antennas: ml,
                        offset,
                    })
                } else {
                    Ok(f64::from(ml - offset))
                }
            })
            .collect()
    }

    /// Coupling matrix `B = T F M^{-1} + T A` for the given effective
    /// antenna counts; targets are exactly achievable when its spectral
    /// radius stays below one.
    fn coupling(&self, m_eff: &[f64]) -> DenseMatrix {
        let users = self.users_per_cell;
        DenseMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.targets[i] * (self.f.get(i, j) / m_eff[j / users] + self.a.get(i, j))
        })
    }

    /// Like [`Self::coupling`] but with unit targets, used by max-min search.
    fn unit_coupling(&self, m_eff: &[f64]) -> DenseMatrix {
        let users = self.users_per_cell;
        DenseMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.f.get(i, j) / m_eff[j / users] + self.a.get(i, j)
        })
    }

    /// Target-weighted coherent coupling `T A` alone.
    pub fn coherent_coupling(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.targets[i] * self.a.get(i, j)
        })
    }

    /// Spectral radius of the coherent coupling; at or above one the targets
    /// are unreachable for every antenna count.
    pub fn coherent_radius(&self) -> Result<f64, McError> {
        Ok(spectral_radius(&self.coherent_coupling(), RADIUS_TOL)?)
    }

    /// Whether the SINR targets are achievable at the given physical counts.
    pub fn sinr_feasible(&self, m: &[u32]) -> Result<bool, McError> {
        let m_eff = self.effective_antennas(m)?;
        Ok(is_nonsingular_m_matrix(
            1.0,
            &self.coupling(&m_eff),
            RADIUS_TOL,
        )?)
    }

    /// Per-station transmitted totals for a flat power vector.
    pub fn station_totals(&self, p: &[f64]) -> Vec<f64> {
        p.chunks(self.users_per_cell).map(|c| c.iter().sum()).collect()
    }

    /// Whether every station's total stays within the downlink budget.
    pub fn within_budget(&self, p: &[f64]) -> bool {
        self.station_totals(p)
            .iter()
            .all(|&t| t <= self.rho_dl * (1.0 + BUDGET_SLACK))
    }

    /// Total cost of a feasible operating point: transmit power plus the
    /// per-antenna circuit price on physical counts.
    pub fn cost(&self, m: &[u32], p: &[f64]) -> f64 {
        let antennas: f64 = m.iter().map(|&ml| f64::from(ml)).sum();
        p.iter().sum::<f64>() + self.cost_per_antenna * antennas
    }
}

/// Equality powers at fixed effective antennas and explicit load vector, or
/// `None` when the coupling radius reaches one.
fn powers_at(
    sys: &McSystem,
    m_eff: &[f64],
    coupling: &DenseMatrix,
    load: &[f64],
) -> Result<Option<Vec<f64>>, McError> {
    if !is_nonsingular_m_matrix(1.0, coupling, RADIUS_TOL)? {
        return Ok(None);
    }
    let n = sys.dim();
    let users = sys.users_per_cell;
    let lhs = DenseMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - coupling.get(i, j)
    });
    let q = solve_linear(&lhs, load)?;
    Ok(Some(
        q.iter()
            .enumerate()
            .map(|(i, &qi)| qi / m_eff[i / users])
            .collect(),
    ))
}

/// Minimum powers meeting every SINR target at the given physical antenna
/// counts, ignoring budgets; `None` when the targets are unreachable there.
/// Any other power vector meeting the targets dominates this one entrywise.
pub fn min_power_mc(sys: &McSystem, m: &[u32]) -> Result<Option<Vec<f64>>, McError> {
    let m_eff = sys.effective_antennas(m)?;
    let coupling = sys.coupling(&m_eff);
    powers_at(sys, &m_eff, &coupling, &sys.load_vector())
}

/// Delivered SINR per user for arbitrary powers and antenna counts, computed
/// directly from the coupling ratios rather than the equality system.
pub fn effective_sinr_mc(sys: &McSystem, p: &[f64], m: &[u32]) -> Result<Vec<f64>, McError> {
    let n = sys.dim();
    if p.len() != n {
        return Err(McError::Invalid(format!(
            "power vector has {} entries, expected {n}",
            p.len()
        )));
    }
    if p.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(McError::Invalid("powers must be finite and nonnegative".into()));
    }
    let m_eff = sys.effective_antennas(m)?;
    let users = sys.users_per_cell;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let gi = sys.gamma_own[i];
        let mut denom = 1.0;
        for j in 0..n {
            denom += gi * (sys.f.get(i, j) + sys.a.get(i, j) * m_eff[j / users]) * p[j];
        }
        out.push(m_eff[i / users] * gi * p[i] / denom);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McStatus {
    Feasible,
    /// Pilot contamination alone already exceeds the targets; no antenna
    /// count can fix this.
    InfeasibleCoherent,
    /// Targets unreachable at the given (or maximal) antenna counts.
    InfeasibleSinr,
    /// Targets reachable but only beyond some station's power budget.
    InfeasiblePower,
}

#[derive(Clone, Debug)]
pub struct McSolution {
    pub status: McStatus,
    /// Physical antennas per cell; empty when infeasible.
    pub m: Vec<u32>,
    /// Flat per-user powers; empty when infeasible.
    pub p: Vec<f64>,
    pub total_power: f64,
    /// Transmit power plus circuit cost on physical antenna counts.
    pub cost: f64,
    /// Continuous physical antenna counts from the relaxation, when one was
    /// solved.
    pub gp_continuous_m: Option<Vec<f64>>,
    /// Certified lower bound on the cost of *any* feasible integer choice,
    /// from the relaxation's duality gap.
    pub gp_lower_bound: Option<f64>,
}

impl McSolution {
    fn infeasible(status: McStatus) -> Self {
        Self {
            status,
            m: Vec::new(),
            p: Vec::new(),
            total_power: f64::NAN,
            cost: f64::NAN,
            gp_continuous_m: None,
            gp_lower_bound: None,
        }
    }

    fn feasible(sys: &McSystem, m: Vec<u32>, p: Vec<f64>) -> Self {
        let total_power = p.iter().sum();
        let cost = sys.cost(&m, &p);
        Self {
            status: McStatus::Feasible,
            m,
            p,
            total_power,
            cost,
            gp_continuous_m: None,
            gp_lower_bound: None,
        }
    }
}

/// Minimum-power solve at fixed physical antenna counts, honoring per-station
/// budgets.
pub fn solve_p3(sys: &McSystem, m: &[u32]) -> Result<McSolution, McError> {
    // Validate shape and precoder minimum up front so errors beat statuses.
    let _ = sys.effective_antennas(m)?;
    if sys.coherent_radius()? >= 1.0 - RADIUS_MARGIN {
        return Ok(McSolution::infeasible(McStatus::InfeasibleCoherent));
    }
    let Some(p) = min_power_mc(sys, m)? else {
        return Ok(McSolution::infeasible(McStatus::InfeasibleSinr));
    };
    if !sys.within_budget(&p) {
        return Ok(McSolution::infeasible(McStatus::InfeasiblePower));
    }
    Ok(McSolution::feasible(sys, m.to_vec(), p))
}

/// Largest uniform SINR target supportable at the given antenna counts.
///
/// Without the budget this is exactly the reciprocal spectral radius of the
/// unit-target coupling (infinite when there is no interference at all).
/// With `honor_power_budget` the value is found by bisection on the largest
/// uniform target whose equality powers stay within every station's budget.
pub fn maxmin_sinr(
    sys: &McSystem,
    m: &[u32],
    honor_power_budget: bool,
) -> Result<f64, McError> {
    let m_eff = sys.effective_antennas(m)?;
    let unit = sys.unit_coupling(&m_eff);
    let radius = spectral_radius(&unit, RADIUS_TOL)?;
    let cap = if radius > 0.0 {
        (1.0 / radius) * (1.0 - RADIUS_MARGIN)
    } else {
        f64::INFINITY
    };
    if !honor_power_budget {
        return Ok(if radius > 0.0 { 1.0 / radius } else { f64::INFINITY });
    }

    let inv_gamma: Vec<f64> = sys.gamma_own.iter().map(|&g| 1.0 / g).collect();
    let n = sys.dim();
    let ok = |alpha: f64| -> Result<bool, McError> {
        if alpha <= 0.0 {
            return Ok(true);
        }
        if alpha >= cap {
            return Ok(false);
        }
        let coupling = DenseMatrix::from_fn(n, n, |i, j| alpha * unit.get(i, j));
        let load: Vec<f64> = inv_gamma.iter().map(|&v| alpha * v).collect();
        match powers_at(sys, &m_eff, &coupling, &load) {
            Ok(Some(p)) => Ok(sys.within_budget(&p)),
            Ok(None) => Ok(false),
            // A level so close to the ceiling that the power system cannot
            // be solved at working precision is not supportable; let the
            // bisection back away from it instead of aborting.
            Err(McError::Linalg(
                LinalgError::Singular | LinalgError::IllConditioned { .. },
            )) => Ok(false),
            Err(other) => Err(other),
        }
    };

    // Bracket the budget-limited target, then bisect to relative precision.
    let (mut lo, mut hi);
    if cap.is_finite() {
        if ok(cap)? {
            return Ok(cap);
        }
        lo = 0.0;
        hi = cap;
    } else {
        lo = 0.0;
        hi = 1.0;
        while ok(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > 1e15 {
                return Ok(hi);
            }
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-6 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Limit of the max-min target as antenna counts grow without bound: the
/// reciprocal spectral radius of the coherent coupling alone, infinite when
/// pilot contamination is absent.
pub fn asymptotic_maxmin(sys: &McSystem) -> Result<f64, McError> {
    let radius = spectral_radius(&sys.a, RADIUS_TOL)?;
    Ok(if radius > 0.0 { 1.0 / radius } else { f64::INFINITY })
}

/// Geometric-program encoding of the continuous joint problem.
pub struct P4Gp {
    pub gp: GpStandardForm,
    /// Flat per-user power variables.
    pub p_ids: Vec<VarId>,
    /// Per-cell effective antenna-count variables.
    pub x_ids: Vec<VarId>,
    /// Constant to add to the program's objective to price *physical*
    /// antennas (zero-forcing spends one spatial degree of freedom per user,
    /// which the program's variables do not see).
    pub cost_offset: f64,
}

/// Encodes the continuous relaxation: minimize total power plus antenna cost
/// over positive powers and effective antenna counts in `[1, mbar_max]`,
/// subject to inverted-SINR posynomials and per-station budgets.
pub fn build_p4_gp(sys: &McSystem) -> Result<P4Gp, McError> {
    let cells = sys.num_cells;
    let users = sys.users_per_cell;
    let n = sys.dim();
    let mbar_max = sys.mbar_max();
    if mbar_max == 0 {
        return Err(McError::TooFewAntennas {
            cell: 0,
            antennas: sys.m_max,
            offset: sys.antenna_offset(),
        });
    }

    let mut vars = VarSet::new();
    let mut p_ids = Vec::with_capacity(n);
    for l in 0..cells {
        for k in 0..users {
            p_ids.push(
                vars.add(&format!("p_{l}_{k}"))
                    .expect("generated power names are unique"),
            );
        }
    }
    let mut x_ids = Vec::with_capacity(cells);
    for l in 0..cells {
        let id = vars
            .add(&format!("x_{l}"))
            .expect("generated antenna names are unique");
        vars.set_bounds(id, Some(1.0), None)?;
        x_ids.push(id);
    }

    // Objective: sum of powers plus the per-antenna price on the effective
    // counts; the physical correction is a constant reported separately.
    let mut objective: Option<Posynomial> = None;
    let push = |obj: &mut Option<Posynomial>, m: Monomial| match obj {
        None => *obj = Some(m.into()),
        Some(p) => p.add_term(m),
    };
    for &pid in &p_ids {
        push(&mut objective, Monomial::var(pid));
    }
    if sys.cost_per_antenna > 0.0 {
        for &xid in &x_ids {
            push(
                &mut objective,
                Monomial::new(sys.cost_per_antenna, &[(xid, 1.0)])?,
            );
        }
    }
    let mut gp = GpStandardForm::new(vars, objective.expect("at least one user"));

    // Inverted SINR constraints, one per user.
    for i in 0..n {
        let l = i / users;
        let xi = x_ids[l];
        let vi = sys.targets[i] / sys.gamma_own[i];
        let mut posy: Posynomial =
            Monomial::new(vi, &[(xi, -1.0), (p_ids[i], -1.0)])?.into();
        for j in 0..n {
            let fij = sys.f.get(i, j);
            if fij > 0.0 {
                posy.add_term(Monomial::new(
                    sys.targets[i] * fij,
                    &[(xi, -1.0), (p_ids[i], -1.0), (p_ids[j], 1.0)],
                )?);
            }
            let aij = sys.a.get(i, j);
            if aij > 0.0 {
                posy.add_term(Monomial::new(
                    sys.targets[i] * aij,
                    &[
                        (xi, -1.0),
                        (x_ids[j / users], 1.0),
                        (p_ids[i], -1.0),
                        (p_ids[j], 1.0),
                    ],
                )?);
            }
        }
        gp.add_inequality(posy);
    }

    // Antenna caps as monomial constraints, budgets as posynomials.
    for &xid in &x_ids {
        gp.add_inequality(
            Monomial::new(1.0 / f64::from(mbar_max), &[(xid, 1.0)])?.into(),
        );
    }
    for l in 0..cells {
        let mut budget: Option<Posynomial> = None;
        for k in 0..users {
            let m = Monomial::new(1.0 / sys.rho_dl, &[(p_ids[l * users + k], 1.0)])?;
            match &mut budget {
                None => budget = Some(m.into()),
                Some(p) => p.add_term(m),
            }
        }
        gp.add_inequality(budget.expect("at least one user per cell"));
    }

    let cost_offset =
        sys.cost_per_antenna * f64::from(sys.antenna_offset()) * cells as f64;
    Ok(P4Gp {
        gp,
        p_ids,
        x_ids,
        cost_offset,
    })
}

/// Joint antenna/power optimization: relax to a geometric program, round the
/// antenna counts up, re-solve the powers exactly, then walk greedy
/// single-station decrements while they reduce total cost.
pub fn solve_p4(sys: &McSystem) -> Result<McSolution, McError> {
    let offset = sys.antenna_offset();
    let mbar_max = sys.mbar_max();
    if mbar_max == 0 {
        return Ok(McSolution::infeasible(McStatus::InfeasibleSinr));
    }
    if sys.coherent_radius()? >= 1.0 - RADIUS_MARGIN {
        return Ok(McSolution::infeasible(McStatus::InfeasibleCoherent));
    }
    // Everything that is feasible at all is feasible at the cap.
    let m_cap = vec![sys.m_max; sys.num_cells];
    let Some(p_cap) = min_power_mc(sys, &m_cap)? else {
        return Ok(McSolution::infeasible(McStatus::InfeasibleSinr));
    };
    if !sys.within_budget(&p_cap) {
        return Ok(McSolution::infeasible(McStatus::InfeasiblePower));
    }

    let relaxed = build_p4_gp(sys)?;
    let (mut mbar, gp_continuous_m, gp_lower_bound) =
        match gp::solve_gp(&relaxed.gp, GP_TOL) {
            Ok(sol) => {
                let x: Vec<f64> = relaxed.x_ids.iter().map(|&id| sol.x[id]).collect();
                let mbar: Vec<u32> = x
                    .iter()
                    .map(|&v| ((v - 1e-9).ceil().max(1.0) as u32).min(mbar_max))
                    .collect();
                let physical: Vec<f64> =
                    x.iter().map(|&v| v + f64::from(offset)).collect();
                let bound = sol.cost * (-sol.gap_bound).exp() + relaxed.cost_offset;
                (mbar, Some(physical), Some(bound))
            }
            // The integer cap point is feasible, so a relaxation failure is
            // numerical; fall back to the cap and let the greedy pass work.
            Err(GpError::Infeasible { .. }) | Err(GpError::NoConvergence { .. }) => {
                (vec![mbar_max; sys.num_cells], None, None)
            }
            Err(e) => return Err(e.into()),
        };

    let to_physical =
        |mb: &[u32]| -> Vec<u32> { mb.iter().map(|&v| v + offset).collect() };

    // Rounding up preserves feasibility; guard numerically anyway.
    let mut m = to_physical(&mbar);
    let mut p = match min_power_mc(sys, &m)? {
        Some(p) if sys.within_budget(&p) => p,
        _ => {
            mbar = vec![mbar_max; sys.num_cells];
            m = to_physical(&mbar);
            p_cap
        }
    };
    let mut cost = sys.cost(&m, &p);

    // Greedy refinement: drop one station's count by one while that reduces
    // total cost, preferring the biggest reduction each round.
    loop {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for l in 0..sys.num_cells {
            if mbar[l] < 2 {
                continue;
            }
            let mut trial = mbar.clone();
            trial[l] -= 1;
            let m_trial = to_physical(&trial);
            if let Some(p_trial) = min_power_mc(sys, &m_trial)? {
                if sys.within_budget(&p_trial) {
                    let c_trial = sys.cost(&m_trial, &p_trial);
                    let beats_current = c_trial < cost;
                    let beats_best = best.as_ref().is_none_or(|(_, bc, _)| c_trial < *bc);
                    if beats_current && beats_best {
                        best = Some((l, c_trial, p_trial));
                    }
                }
            }
        }
        match best {
            Some((l, c_new, p_new)) => {
                mbar[l] -= 1;
                m = to_physical(&mbar);
                p = p_new;
                cost = c_new;
            }
            None => break,
        }
    }

    let mut sol = McSolution::feasible(sys, m, p);
    sol.gp_continuous_m = gp_continuous_m;
    sol.gp_lower_bound = gp_lower_bound;
    Ok(sol)
}

/// Certified optimum by enumerating every antenna combination up to the cap.
/// Refuses searches larger than `limit` combinations. Ties keep the first
/// (lexicographically smallest) antenna vector.
pub fn exhaustive_p4(sys: &McSystem, limit: u64) -> Result<McSolution, McError> {
    let cells = sys.num_cells;
    let mbar_max = sys.mbar_max();
    if mbar_max == 0 {
        return Ok(McSolution::infeasible(McStatus::InfeasibleSinr));
    }
    let combos = (mbar_max as u128).pow(cells as u32);
    if combos > u128::from(limit) {
        return Err(McError::SearchTooLarge { combos, limit });
    }
    if sys.coherent_radius()? >= 1.0 - RADIUS_MARGIN {
        return Ok(McSolution::infeasible(McStatus::InfeasibleCoherent));
    }

    let offset = sys.antenna_offset();
    let mut mbar = vec![1u32; cells];
    let mut best: Option<(f64, Vec<u32>, Vec<f64>)> = None;
    let mut saw_sinr_feasible = false;
    loop {
        let m: Vec<u32> = mbar.iter().map(|&v| v + offset).collect();
        if let Some(p) = min_power_mc(sys, &m)? {
            saw_sinr_feasible = true;
            if sys.within_budget(&p) {
                let cost = sys.cost(&m, &p);
                if best.as_ref().is_none_or(|(bc, _, _)| cost < *bc) {
                    best = Some((cost, m, p));
                }
            }
        }
        // Odometer increment, last cell fastest.
        let mut pos = cells;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            if mbar[pos] < mbar_max {
                mbar[pos] += 1;
                for v in &mut mbar[pos + 1..] {
                    *v = 1;
                }
                break;
            }
            if pos == 0 {
                match best {
                    Some((_, m, p)) => return Ok(McSolution::feasible(sys, m, p)),
                    None => {
                        return Ok(McSolution::infeasible(if saw_sinr_feasible {
                            McStatus::InfeasiblePower
                        } else {
                            McStatus::InfeasibleSinr
                        }))
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{compute_gammas_mc, Precoder};
    use crate::singlecell::{
        min_power_sc, solve_p2, total_power_sc, ScSystem, SingleCellInstance,
    };
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Two symmetric cells sharing pilots: own fading 1, cross fading 1/2,
    /// pilot SNR product 2. Estimate qualities come out to 1/2 and 1/8, so
    /// the coherent coupling has radius 1/4.
    fn two_cell(
        alpha: f64,
        precoder: Precoder,
        m_max: u32,
        cost_per_antenna: f64,
        rho_dl: f64,
    ) -> (MultiCellInstance, GammaTable) {
        let inst = MultiCellInstance {
            num_cells: 2,
            users_per_cell: 1,
            beta: vec![vec![vec![1.0, 0.5]], vec![vec![0.5, 1.0]]],
            pilot_group: vec![0, 0],
            alpha: vec![vec![alpha], vec![alpha]],
            num_pilots: 1,
            rho_ul: 2.0,
            rho_dl,
            m_max,
            cost_per_antenna,
            precoder,
        };
        let gammas = compute_gammas_mc(&inst);
        (inst, gammas)
    }

    fn two_cell_system(
        alpha: f64,
        precoder: Precoder,
        m_max: u32,
        cost_per_antenna: f64,
        rho_dl: f64,
    ) -> McSystem {
        let (inst, gammas) = two_cell(alpha, precoder, m_max, cost_per_antenna, rho_dl);
        build_mc_system(&inst, &gammas).expect("fixture is valid")
    }

    #[test]
    fn fixture_coupling_matches_hand_computation() {
        let sys = two_cell_system(1.0, Precoder::Mrt, 100, 0.0, 1e9);
        // gamma own = 1/2, cross = 1/8; A entries 0.125/0.5 = 1/4.
        for (i, j, want) in [(0, 0, 0.0), (0, 1, 0.25), (1, 0, 0.25), (1, 1, 0.0)] {
            assert_relative_eq!(sys.a.get(i, j), want, max_relative = 1e-12);
        }
        // MRT rows: own 1/0.5 = 2, cross 0.5/0.5 = 1.
        for (i, j, want) in [(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)] {
            assert_relative_eq!(sys.f.get(i, j), want, max_relative = 1e-12);
        }
        let zf = two_cell_system(1.0, Precoder::Zf, 100, 0.0, 1e9);
        // ZF numerators: own 1 - 1/2, cross 1/2 - 1/8.
        for (i, j, want) in [(0, 0, 1.0), (0, 1, 0.75), (1, 0, 0.75), (1, 1, 1.0)] {
            assert_relative_eq!(zf.f.get(i, j), want, max_relative = 1e-12);
        }
        assert_relative_eq!(sys.coherent_radius().unwrap(), 0.25, max_relative = 1e-9);
    }

    #[test]
    fn single_cell_reduction_matches_closed_form() {
        let inst = MultiCellInstance {
            num_cells: 1,
            users_per_cell: 3,
            beta: vec![vec![vec![2.0], vec![1.0], vec![0.5]]],
            pilot_group: vec![0],
            alpha: vec![vec![1.5, 1.0, 0.8]],
            num_pilots: 3,
            rho_ul: 1.0,
            rho_dl: 1e9,
            m_max: 64,
            cost_per_antenna: 0.1,
            precoder: Precoder::Mrt,
        };
        let gammas = compute_gammas_mc(&inst);
        let sys = build_mc_system(&inst, &gammas).unwrap();
        let sc_inst = SingleCellInstance::from_multicell(&inst, &gammas).unwrap();
        let sc = ScSystem::new(&sc_inst).unwrap();

        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sys.a.get(i, j), 0.0, "no coherent coupling in one cell");
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(
                    sys.f.get(i, j),
                    sc.interference[i],
                    max_relative = 1e-12
                );
            }
        }
        let m = [40u32; 1];
        let mc_p = min_power_mc(&sys, &m).unwrap().expect("feasible");
        let sc_p = min_power_sc(&sc, 40.0).expect("feasible");
        for (a, b) in mc_p.iter().zip(&sc_p) {
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
        let sol = solve_p3(&sys, &m).unwrap();
        assert_relative_eq!(
            sol.total_power,
            total_power_sc(&sc, 40.0).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn fixture_powers_are_symmetric_and_exact() {
        // At target 2 and 16 effective antennas each, the equality powers
        // are exactly 2: q = 4 / (1/2 - 6/16) = 32, p = 32/16.
        let sys = two_cell_system(2.0, Precoder::Mrt, 100, 0.25, 1e9);
        let sol = solve_p3(&sys, &[16, 16]).unwrap();
        assert_eq!(sol.status, McStatus::Feasible);
        assert_relative_eq!(sol.p[0], 2.0, max_relative = 1e-9);
        assert_relative_eq!(sol.p[1], 2.0, max_relative = 1e-9);
        assert_relative_eq!(sol.total_power, 4.0, max_relative = 1e-9);
        assert_relative_eq!(sol.cost, 4.0 + 0.25 * 32.0, max_relative = 1e-9);
    }

    #[test]
    fn status_distinguishes_every_failure_mode() {
        // Coherent coupling radius 0.25 times target 5 reaches 1.25: hopeless.
        let sys = two_cell_system(5.0, Precoder::Mrt, 100, 0.0, 1e9);
        let sol = solve_p3(&sys, &[50, 50]).unwrap();
        assert_eq!(sol.status, McStatus::InfeasibleCoherent);
        assert!(sol.p.is_empty() && sol.cost.is_nan());

        // At target 2 the full coupling radius is 6/mbar + 1/2: exactly 1 at
        // 12 antennas, below 1 at 13.
        let sys = two_cell_system(2.0, Precoder::Mrt, 100, 0.0, 1e9);
        assert_eq!(
            solve_p3(&sys, &[12, 12]).unwrap().status,
            McStatus::InfeasibleSinr
        );
        assert_eq!(
            solve_p3(&sys, &[13, 13]).unwrap().status,
            McStatus::Feasible
        );
        assert!(!sys.sinr_feasible(&[12, 12]).unwrap());
        assert!(sys.sinr_feasible(&[13, 13]).unwrap());

        // Same instance with a budget below the needed 2.0 per station.
        let sys = two_cell_system(2.0, Precoder::Mrt, 100, 0.0, 1.9);
        assert_eq!(
            solve_p3(&sys, &[16, 16]).unwrap().status,
            McStatus::InfeasiblePower
        );
    }

    #[test]
    fn delivered_sinrs_hit_the_targets() {
        for precoder in [Precoder::Mrt, Precoder::Zf] {
            let sys = two_cell_system(2.0, precoder, 100, 0.0, 1e9);
            let m = [20u32, 27u32];
            let p = min_power_mc(&sys, &m).unwrap().expect("feasible");
            let sinrs = effective_sinr_mc(&sys, &p, &m).unwrap();
            for s in sinrs {
                assert_relative_eq!(s, 2.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn raising_one_station_count_helps_its_neighbors_too() {
        let sys = two_cell_system(2.0, Precoder::Mrt, 100, 0.0, 1e9);
        let p = min_power_mc(&sys, &[20, 20]).unwrap().unwrap();
        let p_up = min_power_mc(&sys, &[21, 20]).unwrap().unwrap();
        for (after, before) in p_up.iter().zip(&p) {
            assert!(
                after < before,
                "every power should drop when any station grows: {after} vs {before}"
            );
        }
    }

    #[test]
    fn maxmin_matches_the_radius_reciprocal() {
        let sys = two_cell_system(1.0, Precoder::Mrt, 100, 0.0, 1e9);
        // Unit coupling radius at 16 antennas: 3/16 + 1/4 = 0.4375.
        let got = maxmin_sinr(&sys, &[16, 16], false).unwrap();
        assert_relative_eq!(got, 1.0 / 0.4375, max_relative = 1e-9);

        // A generous budget leaves the radius bound in charge.
        let rich = two_cell_system(1.0, Precoder::Mrt, 100, 0.0, 1e9);
        let with_budget = maxmin_sinr(&rich, &[16, 16], true).unwrap();
        assert_relative_eq!(with_budget, 1.0 / 0.4375, max_relative = 1e-6);

        // Budget 1/4 per station binds first: alpha solves
        // 2 alpha / (16 (1 - 0.4375 alpha)) = 1/4, i.e. alpha = 16/15.
        let tight = two_cell_system(1.0, Precoder::Mrt, 100, 0.0, 0.25);
        let capped = maxmin_sinr(&tight, &[16, 16], true).unwrap();
        assert_relative_eq!(capped, 16.0 / 15.0, max_relative = 1e-5);
    }

    #[test]
    fn maxmin_grows_with_antennas_toward_the_contamination_limit() {
        let mrt = two_cell_system(1.0, Precoder::Mrt, 100, 0.0, 1e9);
        let zf = two_cell_system(1.0, Precoder::Zf, 100, 0.0, 1e9);
        let mut last = 0.0;
        for m in [10u32, 100, 1_000, 10_000, 100_000] {
            let a = maxmin_sinr(&mrt, &[m, m], false).unwrap();
            assert!(a >= last, "max-min target must not shrink with antennas");
            last = a;
        }
        assert!(last > 3.8 && last <= 4.0, "near the limit at 1e5: {last}");
        let lim_mrt = asymptotic_maxmin(&mrt).unwrap();
        let lim_zf = asymptotic_maxmin(&zf).unwrap();
        assert_relative_eq!(lim_mrt, 4.0, max_relative = 1e-9);
        assert_relative_eq!(lim_mrt, lim_zf, max_relative = 1e-12);
    }

    #[test]
    fn no_contamination_means_unbounded_maxmin() {
        let (mut inst, _) = two_cell(1.0, Precoder::Mrt, 100, 0.0, 1e9);
        inst.pilot_group = vec![0, 1];
        inst.num_pilots = 2;
        let gammas = compute_gammas_mc(&inst);
        let sys = build_mc_system(&inst, &gammas).unwrap();
        assert!(asymptotic_maxmin(&sys).unwrap().is_infinite());
    }

    #[test]
    fn joint_solver_matches_exhaustive_on_the_fixture() {
        // The symmetric continuous optimum sits near 21.4 antennas per cell,
        // but the best integer choice is the *asymmetric* pair (21, 22): the
        // station keeping 22 shields its neighbor enough to beat 21 each.
        let sys = two_cell_system(2.0, Precoder::Mrt, 30, 0.09, 1e9);
        let best = exhaustive_p4(&sys, 1_000_000).unwrap();
        let sol = solve_p4(&sys).unwrap();
        assert_eq!(sol.status, McStatus::Feasible);
        // The two mirror optima tie exactly; floating-point noise decides
        // which one each search lands on, so compare as a multiset.
        let sorted = |m: &[u32]| {
            let mut v = m.to_vec();
            v.sort_unstable();
            v
        };
        assert_eq!(sorted(&best.m), vec![21, 22]);
        assert_eq!(sorted(&sol.m), sorted(&best.m));
        assert_relative_eq!(sol.cost, best.cost, max_relative = 1e-9);
        assert_relative_eq!(sol.cost, 5.556411149826, max_relative = 1e-9);

        let lb = sol.gp_lower_bound.expect("relaxation solved");
        assert!(
            lb <= best.cost * (1.0 + 1e-9),
            "certified bound {lb} must not exceed the optimum {}",
            best.cost
        );
        assert!(
            lb >= best.cost * 0.98,
            "bound {lb} should be tight on this fixture, optimum {}",
            best.cost
        );
        let cont = sol.gp_continuous_m.expect("relaxation solved");
        assert_relative_eq!(cont[0], 12.0 + (8.0f64 / 0.09).sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn joint_solver_handles_zero_forcing_offsets() {
        // Effective optimum near 7 + sqrt(8/c) and again asymmetric in the
        // integers; physical counts add one antenna per served user.
        let sys = two_cell_system(2.0, Precoder::Zf, 40, 0.09, 1e9);
        let best = exhaustive_p4(&sys, 1_000_000).unwrap();
        let sol = solve_p4(&sys).unwrap();
        let sorted = |m: &[u32]| {
            let mut v = m.to_vec();
            v.sort_unstable();
            v
        };
        assert_eq!(sorted(&best.m), vec![17, 18]);
        assert_eq!(sorted(&sol.m), sorted(&best.m));
        assert_relative_eq!(sol.cost, best.cost, max_relative = 1e-9);
        assert_relative_eq!(sol.cost, 4.836956521739, max_relative = 1e-9);
    }

    #[test]
    fn free_antennas_saturate_the_cap() {
        let sys = two_cell_system(2.0, Precoder::Mrt, 25, 0.0, 1e9);
        let sol = solve_p4(&sys).unwrap();
        assert_eq!(sol.m, vec![25, 25], "free antennas always help the power bill");
    }

    #[test]
    fn joint_solver_reports_infeasibility_reasons() {
        let hopeless = two_cell_system(5.0, Precoder::Mrt, 100, 0.1, 1e9);
        assert_eq!(
            solve_p4(&hopeless).unwrap().status,
            McStatus::InfeasibleCoherent
        );
        // Radius 6/mbar + 1/2 stays at or above 1 up to 12 antennas.
        let cramped = two_cell_system(2.0, Precoder::Mrt, 12, 0.1, 1e9);
        assert_eq!(solve_p4(&cramped).unwrap().status, McStatus::InfeasibleSinr);
        let broke = two_cell_system(2.0, Precoder::Mrt, 16, 0.1, 1.9);
        assert_eq!(solve_p4(&broke).unwrap().status, McStatus::InfeasiblePower);
        // Zero-forcing with the cap at the user count leaves no freedom.
        let pinned = two_cell_system(2.0, Precoder::Zf, 1, 0.1, 1e9);
        assert_eq!(solve_p4(&pinned).unwrap().status, McStatus::InfeasibleSinr);
    }

    #[test]
    fn exhaustive_search_refuses_oversized_grids() {
        let sys = two_cell_system(2.0, Precoder::Mrt, 30, 0.09, 1e9);
        match exhaustive_p4(&sys, 10) {
            Err(McError::SearchTooLarge { combos, limit }) => {
                assert_eq!(combos, 900);
                assert_eq!(limit, 10);
            }
            other => panic!("expected a search-size refusal, got {other:?}"),
        }
    }

    #[test]
    fn greedy_refinement_never_loses_to_plain_ceiling() {
        let sys = two_cell_system(2.0, Precoder::Mrt, 30, 0.2, 1e9);
        let sol = solve_p4(&sys).unwrap();
        let cont = sol.gp_continuous_m.expect("relaxation solved");
        let ceil_m: Vec<u32> = cont.iter().map(|&v| v.ceil() as u32).collect();
        let ceil_sol = solve_p3(&sys, &ceil_m).unwrap();
        assert_eq!(ceil_sol.status, McStatus::Feasible);
        assert!(
            sol.cost <= ceil_sol.cost + 1e-12,
            "refined {} vs ceiling {}",
            sol.cost,
            ceil_sol.cost
        );
    }

    #[test]
    fn gp_relaxation_agrees_with_the_single_cell_closed_form() {
        let inst = MultiCellInstance {
            num_cells: 1,
            users_per_cell: 2,
            beta: vec![vec![vec![1.0], vec![0.8]]],
            pilot_group: vec![0],
            alpha: vec![vec![1.0, 1.2]],
            num_pilots: 2,
            rho_ul: 1.0,
            rho_dl: 100.0,
            m_max: 60,
            cost_per_antenna: 0.05,
            precoder: Precoder::Mrt,
        };
        let gammas = compute_gammas_mc(&inst);
        let sys = build_mc_system(&inst, &gammas).unwrap();
        let mc = solve_p4(&sys).unwrap();

        let sc_inst = SingleCellInstance::from_multicell(&inst, &gammas).unwrap();
        let sc = solve_p2(&sc_inst).unwrap();
        assert_relative_eq!(mc.cost, sc.cost_physical, max_relative = 1e-9);
        assert_eq!(mc.m[0], sc.m);
        let cont = mc.gp_continuous_m.unwrap();
        assert_relative_eq!(cont[0], sc.m_continuous, max_relative = 1e-4);
    }

    /// Random symmetric-ish two-cell instances with shared pilots; cross
    /// fading stays below own fading so estimates are sane.
    fn arb_two_cell() -> impl Strategy<Value = (MultiCellInstance, GammaTable)> {
        (
            0.5f64..2.0,
            0.5f64..2.0,
            0.05f64..0.45,
            0.05f64..0.45,
            0.2f64..1.4,
            prop::sample::select(vec![Precoder::Mrt, Precoder::Zf]),
        )
            .prop_map(|(b0, b1, x0, x1, alpha, precoder)| {
                let inst = MultiCellInstance {
                    num_cells: 2,
                    users_per_cell: 1,
                    beta: vec![vec![vec![b0, x0 * b0]], vec![vec![x1 * b1, b1]]],
                    pilot_group: vec![0, 0],
                    alpha: vec![vec![alpha], vec![alpha]],
                    num_pilots: 1,
                    rho_ul: 2.0,
                    rho_dl: 1e9,
                    m_max: 200,
                    cost_per_antenna: 0.1,
                    precoder,
                };
                let gammas = compute_gammas_mc(&inst);
                (inst, gammas)
            })
    }

    proptest! {
        #[test]
        fn any_single_station_increment_shrinks_every_power(
            (inst, gammas) in arb_two_cell(),
            m0 in 20u32..60,
            m1 in 20u32..60,
            which in 0usize..2,
        ) {
            let sys = build_mc_system(&inst, &gammas).unwrap();
            let m = [m0, m1];
            let p = min_power_mc(&sys, &m).unwrap();
            prop_assume!(p.is_some());
            let p = p.unwrap();
            let mut up = m;
            up[which] += 1;
            let p_up = min_power_mc(&sys, &up).unwrap().expect("still feasible");
            for (after, before) in p_up.iter().zip(&p) {
                prop_assert!(
                    *after <= before * (1.0 + 1e-10),
                    "growing a station must not raise any power: {after} vs {before}"
                );
            }
        }

        #[test]
        fn feasibility_is_upward_closed_in_antennas(
            (inst, gammas) in arb_two_cell(),
            m0 in 2u32..80,
            m1 in 2u32..80,
        ) {
            let sys = build_mc_system(&inst, &gammas).unwrap();
            prop_assume!(sys.sinr_feasible(&[m0, m1]).unwrap());
            prop_assert!(sys.sinr_feasible(&[m0 + 1, m1]).unwrap());
            prop_assert!(sys.sinr_feasible(&[m0, m1 + 1]).unwrap());
            prop_assert!(sys.sinr_feasible(&[m0 + 5, m1 + 5]).unwrap());
        }

        #[test]
        fn full_coupling_radius_dominates_the_coherent_part(
            (inst, gammas) in arb_two_cell(),
            m0 in 2u32..80,
            m1 in 2u32..80,
        ) {
            let sys = build_mc_system(&inst, &gammas).unwrap();
            let m_eff = sys.effective_antennas(&[m0, m1]).unwrap();
            let full = spectral_radius(&sys.coupling(&m_eff), 1e-12).unwrap();
            let coherent = sys.coherent_radius().unwrap();
            prop_assert!(full >= coherent - 1e-9 * coherent.max(1.0));
        }

        #[test]
        fn pricier_antennas_never_buy_more_of_them(
            (inst, gammas) in arb_two_cell(),
            c in 0.02f64..0.5,
        ) {
            let sys_cheap = {
                let mut i = inst.clone();
                i.cost_per_antenna = c;
                build_mc_system(&i, &gammas).unwrap()
            };
            let sys_dear = {
                let mut i = inst.clone();
                i.cost_per_antenna = 2.0 * c;
                build_mc_system(&i, &gammas).unwrap()
            };
            let cheap = solve_p4(&sys_cheap).unwrap();
            let dear = solve_p4(&sys_dear).unwrap();
            prop_assume!(cheap.status == McStatus::Feasible);
            prop_assert_eq!(dear.status, McStatus::Feasible);
            let total = |m: &[u32]| m.iter().map(|&v| u64::from(v)).sum::<u64>();
            prop_assert!(
                total(&dear.m) <= total(&cheap.m),
                "doubling the antenna price bought more antennas: {:?} vs {:?}",
                dear.m,
                cheap.m
            );
        }

        #[test]
        fn delivered_sinrs_match_targets_at_equality_powers(
            (inst, gammas) in arb_two_cell(),
            m0 in 20u32..80,
            m1 in 20u32..80,
        ) {
            let sys = build_mc_system(&inst, &gammas).unwrap();
            let m = [m0, m1];
            let p = min_power_mc(&sys, &m).unwrap();
            prop_assume!(p.is_some());
            let sinrs = effective_sinr_mc(&sys, &p.unwrap(), &m).unwrap();
            for (s, a) in sinrs.iter().zip(&sys.targets) {
                prop_assert!((s - a).abs() <= 1e-9 * a, "sinr {s} vs target {a}");
            }
        }
    }
}
