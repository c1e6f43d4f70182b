//! Geometric programs: posynomial algebra, the log-space convex transform,
//! and a barrier-method solver.
//!
//! A monomial here is `coeff * prod_i x_i^{a_i}` with a strictly positive
//! coefficient and real exponents; a posynomial is a sum of monomials. A
//! program in standard form minimizes a posynomial subject to posynomial
//! inequalities `<= 1` and monomial equalities `= 1`, over implicitly
//! positive variables, optionally boxed by positive bounds.
//!
//! Substituting `x = exp(y)` and taking logs turns the objective and each
//! inequality into a log-sum-exp function of `y` (smooth and convex) and each
//! equality into an affine equation. [`solve_gp`] runs a standard primal
//! barrier method on that transform: a phase-1 slack minimization finds a
//! strictly feasible start, then damped Newton steps track the central path
//! with the multiplicative schedule on the barrier parameter. Everything is
//! deterministic; there is no randomized restart.
//!
//! The solver reports a certified relative gap: at barrier parameter `t` with
//! `m` inequalities the log-space objective sits within `m/t` of optimal, so
//! the true optimum is at least `cost * exp(-gap_bound)`.

use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

pub type VarId = usize;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("program is infeasible (best constraint slack {max_violation:.3e} in log scale)")]
    Infeasible { max_violation: f64 },
    #[error("solver did not converge (best cost {best_cost:.6e})")]
    NoConvergence { best_cost: f64 },
    #[error("dump parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Named positive variables with optional positive box bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VarSet {
    names: Vec<String>,
    bounds: Vec<(Option<f64>, Option<f64>)>,
    index: BTreeMap<String, VarId>,
}

impl VarSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable; names must be unique, nonempty, and free of
    /// whitespace, '#', and ':' so the dump format stays unambiguous.
    pub fn add(&mut self, name: &str) -> Result<VarId, GpError> {
        if name.is_empty()
            || name
                .chars()
                .any(|c| c.is_whitespace() || c == ':' || c == '#')
        {
            return Err(GpError::Invalid(format!("bad variable name '{name}'")));
        }
        if self.index.contains_key(name) {
            return Err(GpError::Invalid(format!("duplicate variable '{name}'")));
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.bounds.push((None, None));
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Sets box bounds; either side may be `None`. Bounds must be positive
    /// and ordered.
    pub fn set_bounds(
        &mut self,
        id: VarId,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Result<(), GpError> {
        if id >= self.names.len() {
            return Err(GpError::Invalid(format!("unknown variable id {id}")));
        }
        for b in [lower, upper].into_iter().flatten() {
            if !(b.is_finite() && b > 0.0) {
                return Err(GpError::Invalid(format!(
                    "bounds must be positive and finite, got {b}"
                )));
            }
        }
        if let (Some(lo), Some(hi)) = (lower, upper) {
            if lo > hi {
                return Err(GpError::Invalid(format!("bounds out of order: {lo} > {hi}")));
            }
        }
        self.bounds[id] = (lower, upper);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn bounds(&self, id: VarId) -> (Option<f64>, Option<f64>) {
        self.bounds[id]
    }
}

/// `coeff * prod x_i^{e_i}` with `coeff > 0`. Zero exponents are dropped so
/// structurally equal monomials compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    coeff: f64,
    exps: BTreeMap<VarId, f64>,
}

impl Monomial {
    pub fn new(coeff: f64, exponents: &[(VarId, f64)]) -> Result<Self, GpError> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(GpError::Invalid(format!(
                "monomial coefficient must be positive and finite, got {coeff}"
            )));
        }
        let mut exps = BTreeMap::new();
        for &(id, e) in exponents {
            if !e.is_finite() {
                return Err(GpError::Invalid("exponent must be finite".into()));
            }
            *exps.entry(id).or_insert(0.0) += e;
        }
        exps.retain(|_, e| *e != 0.0);
        Ok(Self { coeff, exps })
    }

    pub fn constant(coeff: f64) -> Result<Self, GpError> {
        Self::new(coeff, &[])
    }

    /// The bare variable `x_id`.
    pub fn var(id: VarId) -> Self {
        Self {
            coeff: 1.0,
            exps: BTreeMap::from([(id, 1.0)]),
        }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn exponent(&self, id: VarId) -> f64 {
        self.exps.get(&id).copied().unwrap_or(0.0)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (VarId, f64)> + '_ {
        self.exps.iter().map(|(&id, &e)| (id, e))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut exps = self.exps.clone();
        for (&id, &e) in &other.exps {
            *exps.entry(id).or_insert(0.0) += e;
        }
        exps.retain(|_, e| *e != 0.0);
        Self {
            coeff: self.coeff * other.coeff,
            exps,
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.pow(-1.0))
    }

    pub fn pow(&self, e: f64) -> Self {
        let mut exps: BTreeMap<VarId, f64> = self
            .exps
            .iter()
            .map(|(&id, &a)| (id, a * e))
            .collect();
        exps.retain(|_, v| *v != 0.0);
        Self {
            coeff: self.coeff.powf(e),
            exps,
        }
    }

    pub fn scale(&self, s: f64) -> Result<Self, GpError> {
        Self::new(self.coeff * s, &self.exps.iter().map(|(&i, &e)| (i, e)).collect::<Vec<_>>())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps
            .iter()
            .fold(self.coeff, |acc, (&id, &e)| acc * x[id].powf(e))
    }

    fn max_var(&self) -> Option<VarId> {
        self.exps.keys().next_back().copied()
    }
}

/// Sum of monomials; always nonempty. Adding merges terms with identical
/// exponent patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct Posynomial {
    terms: Vec<Monomial>,
}

impl From<Monomial> for Posynomial {
    fn from(m: Monomial) -> Self {
        Self { terms: vec![m] }
    }
}

impl Posynomial {
    pub fn from_terms(terms: Vec<Monomial>) -> Result<Self, GpError> {
        if terms.is_empty() {
            return Err(GpError::Invalid("posynomial needs at least one term".into()));
        }
        let mut p = Self {
            terms: vec![terms[0].clone()],
        };
        for t in &terms[1..] {
            p.add_term(t.clone());
        }
        Ok(p)
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// Adds a term, merging with an existing one when the exponents match.
    pub fn add_term(&mut self, m: Monomial) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.exps == m.exps) {
            t.coeff += m.coeff;
        } else {
            self.terms.push(m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for t in &other.terms {
            out.add_term(t.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: Option<Self> = None;
        for a in &self.terms {
            for b in &other.terms {
                let m = a.mul(b);
                match &mut out {
                    None => out = Some(m.into()),
                    Some(p) => p.add_term(m),
                }
            }
        }
        out.expect("posynomials are nonempty")
    }

    /// Division is only defined by a monomial; dividing by a posynomial does
    /// not stay in the algebra, and the signature makes that unrepresentable.
    pub fn div_monomial(&self, m: &Monomial) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.div(m)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Result<Self, GpError> {
        Ok(Self {
            terms: self
                .terms
                .iter()
                .map(|t| t.scale(s))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    fn max_var(&self) -> Option<VarId> {
        self.terms.iter().filter_map(Monomial::max_var).max()
    }
}

/// A geometric program in standard form.
#[derive(Clone, Debug, PartialEq)]
pub struct GpStandardForm {
    vars: VarSet,
    objective: Posynomial,
    inequalities: Vec<Posynomial>,
    equalities: Vec<Monomial>,
}

impl GpStandardForm {
    pub fn new(vars: VarSet, objective: Posynomial) -> Self {
        Self {
            vars,
            objective,
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    /// Adds `posynomial <= 1`.
    pub fn add_inequality(&mut self, p: Posynomial) {
        self.inequalities.push(p);
    }

    /// Adds `monomial = 1`.
    pub fn add_equality(&mut self, m: Monomial) {
        self.equalities.push(m);
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn objective(&self) -> &Posynomial {
        &self.objective
    }

    pub fn inequalities(&self) -> &[Posynomial] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Monomial] {
        &self.equalities
    }

    pub fn validate(&self) -> Result<(), GpError> {
        let n = self.vars.len();
        if n == 0 {
            return Err(GpError::Invalid("program has no variables".into()));
        }
        let check = |p: &Posynomial, what: &str| -> Result<(), GpError> {
            match p.max_var() {
                Some(id) if id >= n => Err(GpError::Invalid(format!(
                    "{what} references unknown variable id {id}"
                ))),
                _ => Ok(()),
            }
        };
        check(&self.objective, "objective")?;
        for (i, p) in self.inequalities.iter().enumerate() {
            check(p, &format!("inequality {i}"))?;
        }
        for (i, m) in self.equalities.iter().enumerate() {
            if m.max_var().is_some_and(|id| id >= n) {
                return Err(GpError::Invalid(format!(
                    "equality {i} references an unknown variable"
                )));
            }
        }
        Ok(())
    }

    /// Serializes to the line-oriented dump format: variable declarations
    /// with optional bounds, then an `objective` section, one `constraint`
    /// section per inequality, and one `equality` section per equality. Each
    /// monomial is one line: coefficient followed by `name:exponent` pairs.
    pub fn write_dump(&self) -> String {
        let mut out = String::new();
        for id in 0..self.vars.len() {
            let (lo, hi) = self.vars.bounds(id);
            write!(out, "var {}", self.vars.name(id)).unwrap();
            if let Some(lo) = lo {
                write!(out, " lower {lo:?}").unwrap();
            }
            if let Some(hi) = hi {
                write!(out, " upper {hi:?}").unwrap();
            }
            out.push('\n');
        }
        let section = |header: &str, terms: &[Monomial], out: &mut String| {
            out.push_str(header);
            out.push('\n');
            for t in terms {
                write!(out, "{:?}", t.coeff()).unwrap();
                for (id, e) in t.exponents() {
                    write!(out, " {}:{:?}", self.vars.name(id), e).unwrap();
                }
                out.push('\n');
            }
        };
        section("objective", self.objective.terms(), &mut out);
        for p in &self.inequalities {
            section("constraint", p.terms(), &mut out);
        }
        for m in &self.equalities {
            section("equality", std::slice::from_ref(m), &mut out);
        }
        out
    }

    /// Parses the dump format produced by [`Self::write_dump`]. Variables
    /// must be declared before use.
    pub fn parse_dump(text: &str) -> Result<Self, GpError> {
        enum Section {
            None,
            Objective,
            Constraint,
            Equality,
        }
        let mut vars = VarSet::new();
        let mut objective: Option<Posynomial> = None;
        let mut inequalities: Vec<Posynomial> = Vec::new();
        let mut equalities: Vec<Monomial> = Vec::new();
        let mut section = Section::None;

        let err = |line: usize, msg: String| GpError::Parse { line, msg };
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "var" => {
                    if tokens.len() < 2 {
                        return Err(err(lineno, "var needs a name".into()));
                    }
                    let id = vars
                        .add(tokens[1])
                        .map_err(|e| err(lineno, e.to_string()))?;
                    let mut lo = None;
                    let mut hi = None;
                    let mut rest = &tokens[2..];
                    while !rest.is_empty() {
                        if rest.len() < 2 {
                            return Err(err(lineno, "bound keyword needs a value".into()));
                        }
                        let v: f64 = rest[1]
                            .parse()
                            .map_err(|_| err(lineno, format!("bad bound '{}'", rest[1])))?;
                        match rest[0] {
                            "lower" => lo = Some(v),
                            "upper" => hi = Some(v),
                            other => {
                                return Err(err(lineno, format!("unknown keyword '{other}'")))
                            }
                        }
                        rest = &rest[2..];
                    }
                    vars.set_bounds(id, lo, hi)
                        .map_err(|e| err(lineno, e.to_string()))?;
                }
                "objective" => {
                    if objective.is_some() {
                        return Err(err(lineno, "duplicate objective section".into()));
                    }
                    objective = Some(Posynomial {
                        terms: Vec::new(),
                    });
                    section = Section::Objective;
                }
                "constraint" => {
                    inequalities.push(Posynomial { terms: Vec::new() });
                    section = Section::Constraint;
                }
                "equality" => {
                    section = Section::Equality;
                }
                _ => {
                    let coeff: f64 = tokens[0]
                        .parse()
                        .map_err(|_| err(lineno, format!("bad coefficient '{}'", tokens[0])))?;
                    let mut pairs = Vec::new();
                    for tok in &tokens[1..] {
                        let (name, e) = tok
                            .split_once(':')
                            .ok_or_else(|| err(lineno, format!("expected name:exp, got '{tok}'")))?;
                        let id = vars
                            .id(name)
                            .ok_or_else(|| err(lineno, format!("undeclared variable '{name}'")))?;
                        let e: f64 = e
                            .parse()
                            .map_err(|_| err(lineno, format!("bad exponent '{e}'")))?;
                        pairs.push((id, e));
                    }
                    let m =
                        Monomial::new(coeff, &pairs).map_err(|e| err(lineno, e.to_string()))?;
                    match section {
                        Section::None => {
                            return Err(err(lineno, "monomial outside any section".into()))
                        }
                        Section::Objective => objective.as_mut().unwrap().add_term(m),
                        Section::Constraint => {
                            inequalities.last_mut().unwrap().add_term(m)
                        }
                        Section::Equality => equalities.push(m),
                    }
                }
            }
        }
        let objective = match objective {
            Some(p) if !p.terms.is_empty() => p,
            _ => {
                return Err(GpError::Parse {
                    line: 0,
                    msg: "missing or empty objective".into(),
                })
            }
        };
        if inequalities.iter().any(|p| p.terms.is_empty()) {
            return Err(GpError::Parse {
                line: 0,
                msg: "empty constraint section".into(),
            });
        }
        let gp = Self {
            vars,
            objective,
            inequalities,
            equalities,
        };
        gp.validate()?;
        Ok(gp)
    }
}

/// Smooth convex `F(y) = ln sum_t exp(c_t + a_t . y)` with dense term rows.
#[derive(Clone, Debug)]
pub struct LogSumExp {
    /// One row per term.
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl LogSumExp {
    fn z(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.a * y + &self.c
    }

    pub fn value(&self, y: &DVector<f64>) -> f64 {
        let z = self.z(y);
        let zmax = z.max();
        zmax + z.iter().map(|v| (v - zmax).exp()).sum::<f64>().ln()
    }

    /// Softmax weights of the terms at `y`; positive, summing to one.
    fn weights(&self, y: &DVector<f64>) -> (f64, DVector<f64>) {
        let z = self.z(y);
        let zmax = z.max();
        let mut w = z.map(|v| (v - zmax).exp());
        let total = w.sum();
        w /= total;
        (zmax + total.ln(), w)
    }

    pub fn value_grad(&self, y: &DVector<f64>) -> (f64, DVector<f64>) {
        let (v, w) = self.weights(y);
        (v, self.a.transpose() * w)
    }

    /// Value, gradient, and Hessian `A^T (diag(w) - w w^T) A`.
    pub fn value_grad_hess(&self, y: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (v, w) = self.weights(y);
        let g = self.a.transpose() * &w;
        let mut scaled = self.a.clone();
        for (mut row, &wt) in scaled.row_iter_mut().zip(w.iter()) {
            row *= wt.sqrt();
        }
        let h = scaled.transpose() * &scaled - &g * g.transpose();
        (v, g, h)
    }
}

/// Log-space transform of a standard-form program. Box bounds are lowered to
/// extra single-term inequalities, so `inequalities` may be longer than the
/// source program's list; the first entries correspond to it in order.
#[derive(Clone, Debug)]
pub struct ConvexGp {
    pub n: usize,
    pub objective: LogSumExp,
    pub inequalities: Vec<LogSumExp>,
    /// Affine equalities `eq_a * y = eq_b`.
    pub eq_a: DMatrix<f64>,
    pub eq_b: DVector<f64>,
}

fn lse_of(p: &Posynomial, n: usize) -> LogSumExp {
    let t = p.terms().len();
    let mut a = DMatrix::zeros(t, n);
    let mut c = DVector::zeros(t);
    for (row, m) in p.terms().iter().enumerate() {
        c[row] = m.coeff().ln();
        for (id, e) in m.exponents() {
            a[(row, id)] = e;
        }
    }
    LogSumExp { a, c }
}

/// Builds the log-space convex form: log-sum-exp objective and inequalities,
/// affine equalities, box bounds lowered to single-term inequalities.
pub fn to_convex(gp: &GpStandardForm) -> Result<ConvexGp, GpError> {
    gp.validate()?;
    let n = gp.vars().len();
    let objective = lse_of(gp.objective(), n);
    let mut inequalities: Vec<LogSumExp> = gp
        .inequalities()
        .iter()
        .map(|p| lse_of(p, n))
        .collect();
    for id in 0..n {
        let (lo, hi) = gp.vars().bounds(id);
        if let Some(lo) = lo {
            // lo / x <= 1  ->  ln(lo) - y <= 0
            let mut a = DMatrix::zeros(1, n);
            a[(0, id)] = -1.0;
            inequalities.push(LogSumExp {
                a,
                c: DVector::from_element(1, lo.ln()),
            });
        }
        if let Some(hi) = hi {
            // x / hi <= 1  ->  y - ln(hi) <= 0
            let mut a = DMatrix::zeros(1, n);
            a[(0, id)] = 1.0;
            inequalities.push(LogSumExp {
                a,
                c: DVector::from_element(1, -hi.ln()),
            });
        }
    }
    let p = gp.equalities().len();
    let mut eq_a = DMatrix::zeros(p, n);
    let mut eq_b = DVector::zeros(p);
    for (row, m) in gp.equalities().iter().enumerate() {
        // coeff * prod x^e = 1  ->  sum e_i y_i = -ln(coeff)
        for (id, e) in m.exponents() {
            eq_a[(row, id)] = e;
        }
        eq_b[row] = -m.coeff().ln();
    }
    Ok(ConvexGp {
        n,
        objective,
        inequalities,
        eq_a,
        eq_b,
    })
}

#[derive(Clone, Debug)]
pub struct GpSolution {
    /// Optimal variable values, indexed by `VarId`.
    pub x: Vec<f64>,
    /// Objective posynomial value at `x`.
    pub cost: f64,
    /// Certified relative duality gap in log scale: the true optimum is at
    /// least `cost * exp(-gap_bound)`.
    pub gap_bound: f64,
    /// Total Newton iterations across both phases.
    pub iterations: usize,
}

struct Barrier<'a> {
    objective: &'a LogSumExp,
    ineqs: &'a [LogSumExp],
    /// Newton steps stay inside `eq_a * y = eq_b`. The KKT system is solved
    /// with a tiny diagonal regularizer, which leaks a drift of order
    /// `1e-12 * nu` off the manifold per step; the equality multiplier `nu`
    /// grows with the path parameter, so the leak is re-projected away after
    /// every accepted step instead of being left to accumulate.
    eq_a: &'a DMatrix<f64>,
    eq_b: &'a DVector<f64>,
}

enum CenterStop {
    Converged,
    Early,
}

impl Barrier<'_> {
    /// Barrier-augmented merit `t * F0(y) - sum ln(-F_i(y))`, infinite
    /// outside the strictly feasible region.
    fn merit(&self, t: f64, y: &DVector<f64>) -> f64 {
        let mut v = t * self.objective.value(y);
        for f in self.ineqs {
            let fi = f.value(y);
            if fi >= 0.0 {
                return f64::INFINITY;
            }
            v -= (-fi).ln();
        }
        v
    }

    fn strictly_feasible(&self, y: &DVector<f64>) -> bool {
        self.ineqs.iter().all(|f| f.value(y) < 0.0)
    }

    /// Least-norm correction back onto the equality manifold.
    fn project_onto_equalities(&self, y: &mut DVector<f64>) {
        if self.eq_a.nrows() == 0 {
            return;
        }
        let r = self.eq_b - self.eq_a * &*y;
        if r.amax() <= 1e-14 * self.eq_b.amax().max(1.0) {
            return;
        }
        let svd = nalgebra::linalg::SVD::new(self.eq_a.clone_owned(), true, true);
        if let Ok(dy) = svd.solve(&r, 1e-12) {
            *y += dy;
        }
    }

    /// Damped Newton iterations for the centering problem at fixed `t`.
    /// `budget` counts total Newton steps across the whole solve.
    fn center(
        &self,
        t: f64,
        y: &mut DVector<f64>,
        budget: &mut usize,
        stop_early: Option<&dyn Fn(&DVector<f64>) -> bool>,
    ) -> Result<CenterStop, GpError> {
        const NEWTON_TOL: f64 = 1e-10;
        let n = y.len();
        let p = self.eq_a.nrows();
        for _ in 0..200 {
            if *budget == 0 {
                return Err(GpError::NoConvergence {
                    best_cost: f64::NAN,
                });
            }
            *budget -= 1;

            let (_, g0, h0) = self.objective.value_grad_hess(y);
            let mut g = g0 * t;
            let mut h = h0 * t;
            for f in self.ineqs {
                let (fi, gi, hi) = f.value_grad_hess(y);
                if fi >= 0.0 {
                    return Err(GpError::NoConvergence {
                        best_cost: f64::NAN,
                    });
                }
                let s = -1.0 / fi; // positive
                g += &gi * s;
                h += hi * s + (&gi * gi.transpose()) * (s * s);
            }
            // Tiny Tikhonov term keeps the KKT factorization stable when the
            // Hessian is only positive semidefinite (pure monomials).
            let reg = 1e-12 * (1.0 + h.trace().abs() / n as f64);
            for i in 0..n {
                h[(i, i)] += reg;
            }

            let dy = if p == 0 {
                h.clone().lu().solve(&(-&g)).ok_or(GpError::NoConvergence {
                    best_cost: f64::NAN,
                })?
            } else {
                let mut kkt = DMatrix::zeros(n + p, n + p);
                kkt.view_mut((0, 0), (n, n)).copy_from(&h);
                kkt.view_mut((0, n), (n, p)).copy_from(&self.eq_a.transpose());
                kkt.view_mut((n, 0), (p, n)).copy_from(self.eq_a);
                for i in 0..p {
                    kkt[(n + i, n + i)] = -1e-12;
                }
                let mut rhs = DVector::zeros(n + p);
                rhs.view_mut((0, 0), (n, 1)).copy_from(&(-&g));
                let sol = kkt.lu().solve(&rhs).ok_or(GpError::NoConvergence {
                    best_cost: f64::NAN,
                })?;
                sol.rows(0, n).into_owned()
            };

            let decrement = -g.dot(&dy);
            if !decrement.is_finite() {
                return Err(GpError::NoConvergence {
                    best_cost: f64::NAN,
                });
            }
            if decrement / 2.0 <= NEWTON_TOL {
                return Ok(CenterStop::Converged);
            }

            // Backtracking line search: stay strictly feasible, demand a
            // fixed fraction of the first-order decrease.
            let base = self.merit(t, y);
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let mut cand = y.clone() + &dy * step;
                self.project_onto_equalities(&mut cand);
                let m = self.merit(t, &cand);
                if m.is_finite() && m <= base - 0.01 * step * decrement {
                    *y = cand;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                // No further progress is representable in floating point.
                return Ok(CenterStop::Converged);
            }
            if let Some(stop) = stop_early {
                if stop(y) {
                    return Ok(CenterStop::Early);
                }
            }
        }
        Ok(CenterStop::Converged)
    }

    /// Path-following loop. Returns the final iterate and the certified gap
    /// `m/t` in log scale.
    fn follow(
        &self,
        mut y: DVector<f64>,
        tol: f64,
        budget: &mut usize,
        stop_early: Option<&dyn Fn(&DVector<f64>) -> bool>,
    ) -> Result<(DVector<f64>, f64), GpError> {
        let m = self.ineqs.len();
        if m == 0 {
            self.center(1.0, &mut y, budget, None)?;
            return Ok((y, 1e-9));
        }
        let mut t = 1.0;
        loop {
            match self.center(t, &mut y, budget, stop_early)? {
                CenterStop::Early => return Ok((y, m as f64 / t)),
                CenterStop::Converged => {}
            }
            let gap = m as f64 / t;
            if gap <= tol {
                return Ok((y, gap));
            }
            t *= 20.0;
        }
    }
}

/// Least-norm solution of the affine equalities, or an infeasibility error
/// when they are inconsistent.
fn equality_start(eq_a: &DMatrix<f64>, eq_b: &DVector<f64>) -> Result<DVector<f64>, GpError> {
    let n = eq_a.ncols();
    if eq_a.nrows() == 0 {
        return Ok(DVector::zeros(n));
    }
    let svd = nalgebra::linalg::SVD::new(eq_a.clone(), true, true);
    let y = svd
        .solve(eq_b, 1e-12)
        .map_err(|e| GpError::Invalid(format!("equality system: {e}")))?;
    let resid = (eq_a * &y - eq_b).amax();
    if resid > 1e-8 * eq_b.amax().max(1.0) {
        return Err(GpError::Infeasible {
            max_violation: resid,
        });
    }
    Ok(y)
}

/// Solves a standard-form geometric program to relative gap `tol`.
///
/// Runs phase-1 slack minimization to find a strictly feasible point of the
/// log-space transform (reporting [`GpError::Infeasible`] when none exists),
/// then follows the central path. Deterministic for fixed input.
pub fn solve_gp(gp: &GpStandardForm, tol: f64) -> Result<GpSolution, GpError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(GpError::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let cgp = to_convex(gp)?;
    let mut budget = 40_000usize;

    let y0 = equality_start(&cgp.eq_a, &cgp.eq_b)?;

    let y_feasible = if cgp.inequalities.is_empty() {
        y0
    } else {
        find_strictly_feasible(&cgp, y0, &mut budget)?
    };

    let barrier = Barrier {
        objective: &cgp.objective,
        ineqs: &cgp.inequalities,
        eq_a: &cgp.eq_a,
        eq_b: &cgp.eq_b,
    };
    let (y, gap) = barrier.follow(y_feasible, tol, &mut budget, None)?;

    let x: Vec<f64> = y.iter().map(|&v| v.exp()).collect();
    let cost = gp.objective().eval(&x);
    if !cost.is_finite() {
        return Err(GpError::NoConvergence { best_cost: cost });
    }
    // Safety factor on the certified gap: centering is approximate.
    Ok(GpSolution {
        x,
        cost,
        gap_bound: 2.0 * gap,
        iterations: 40_000 - budget,
    })
}

/// Phase 1: minimize a shared slack `s` over `(y, s)` with every inequality
/// relaxed by `s`, stopping as soon as the slack is comfortably negative.
fn find_strictly_feasible(
    cgp: &ConvexGp,
    y0: DVector<f64>,
    budget: &mut usize,
) -> Result<DVector<f64>, GpError> {
    let n = cgp.n;

    // Extended space z = (y, s).
    let extend = |f: &LogSumExp| -> LogSumExp {
        let t = f.a.nrows();
        let mut a = DMatrix::zeros(t, n + 1);
        a.view_mut((0, 0), (t, n)).copy_from(&f.a);
        for row in 0..t {
            a[(row, n)] = -1.0;
        }
        LogSumExp { a, c: f.c.clone() }
    };
    let mut ineqs: Vec<LogSumExp> = cgp.inequalities.iter().map(extend).collect();
    // Keep the slack itself bounded below so the phase-1 objective cannot
    // run to minus infinity on problems with lots of slack.
    let mut bound_a = DMatrix::zeros(1, n + 1);
    bound_a[(0, n)] = -1.0;
    ineqs.push(LogSumExp {
        a: bound_a,
        c: DVector::from_element(1, -2.0_f64),
    });

    let mut obj_a = DMatrix::zeros(1, n + 1);
    obj_a[(0, n)] = 1.0;
    let objective = LogSumExp {
        a: obj_a,
        c: DVector::zeros(1),
    };

    let eq_a = {
        let p = cgp.eq_a.nrows();
        let mut a = DMatrix::zeros(p, n + 1);
        a.view_mut((0, 0), (p, n)).copy_from(&cgp.eq_a);
        a
    };

    let worst = cgp
        .inequalities
        .iter()
        .map(|f| f.value(&y0))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z0 = DVector::zeros(n + 1);
    z0.rows_mut(0, n).copy_from(&y0);
    z0[n] = worst.max(-1.0) + 1.0;

    let barrier = Barrier {
        objective: &objective,
        ineqs: &ineqs,
        eq_a: &eq_a,
        eq_b: &cgp.eq_b,
    };
    let deep_enough = |z: &DVector<f64>| z[z.len() - 1] < -1e-3;
    let (z, _) = barrier.follow(z0, 1e-7, budget, Some(&deep_enough))?;

    let y = z.rows(0, n).into_owned();
    let s = z[n];
    let target = Barrier {
        objective: &cgp.objective,
        ineqs: &cgp.inequalities,
        eq_a: &cgp.eq_a,
        eq_b: &cgp.eq_b,
    };
    if s >= -1e-9 || !target.strictly_feasible(&y) {
        return Err(GpError::Infeasible { max_violation: s });
    }
    Ok(y)
}
