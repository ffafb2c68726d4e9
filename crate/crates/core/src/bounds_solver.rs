//! Sharp bounds as a pair of linear programs over the alive latent points,
//! after the Charnes-Cooper change of variables Q~ = gamma * Q with
//! gamma = 1 / (mass of the denominator set).

use std::sync::Arc;

use serde::Serialize;

use crate::empirical::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::latent_space::LatentIndex;
use crate::parameters::ParameterSpec;
use crate::restrictions::PrunedSupport;

/// Primal feasibility tolerance for reported solutions.
pub const FEAS_TOL: f64 = 1e-8;
/// Denominator lower bounds at or below this are treated as zero.
pub const DEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A sparse LP: objective, box bounds per variable, and linear rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub constraints: Vec<LinearConstraint>,
}

impl LinearProgram {
    pub fn add_var(&mut self, obj: f64, lo: f64, hi: f64) -> usize {
        self.objective.push(obj);
        self.bounds.push((lo, hi));
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(LinearConstraint { coeffs, relation, rhs });
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_equalities(&self) -> usize {
        self.constraints.iter().filter(|c| c.relation == Relation::Eq).count()
    }

    /// Largest violation of a bound or row at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (&v, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - v).max(v - hi);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let gap = match c.relation {
                Relation::Eq => (lhs - c.rhs).abs(),
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// Copy with the row order reversed; gives a simplex backend a
    /// different starting basis.
    pub fn with_reversed_rows(&self) -> LinearProgram {
        let mut out = self.clone();
        out.constraints.reverse();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

/// Anything that can solve a [`LinearProgram`]. Implementations must be
/// usable from several threads; each call is independent.
pub trait LpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, lp: &LinearProgram, sense: Sense) -> Result<LpOutcome>;
}

/// Sparse simplex from the `microlp` crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroLp;

impl LpBackend for MicroLp {
    fn name(&self) -> &str {
        "microlp"
    }

    /// Rows without coefficients are checked and dropped before the call,
    /// since the simplex factorization cannot handle them. A numerical
    /// failure is retried once with the rows in reverse order.
    fn solve(&self, lp: &LinearProgram, sense: Sense) -> Result<LpOutcome> {
        let mut trimmed = LinearProgram { objective: lp.objective.clone(), bounds: lp.bounds.clone(), constraints: Vec::new() };
        for row in &lp.constraints {
            if row.coeffs.iter().any(|&(_, a)| a != 0.0) {
                trimmed.constraints.push(row.clone());
                continue;
            }
            let ok = match row.relation {
                Relation::Eq => row.rhs.abs() <= FEAS_TOL,
                Relation::Le => row.rhs >= -FEAS_TOL,
                Relation::Ge => row.rhs <= FEAS_TOL,
            };
            if !ok {
                return Ok(LpOutcome::Infeasible);
            }
        }
        match microlp_solve(&trimmed, sense) {
            Err(Error::Solver(_)) => microlp_solve(&trimmed.with_reversed_rows(), sense),
            other => other,
        }
    }
}

fn microlp_solve(lp: &LinearProgram, sense: Sense) -> Result<LpOutcome> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let dir = match sense {
        Sense::Minimize => OptimizationDirection::Minimize,
        Sense::Maximize => OptimizationDirection::Maximize,
    };
    let mut p = Problem::new(dir);
    let vars: Vec<_> = lp.objective.iter().zip(&lp.bounds).map(|(&c, &b)| p.add_var(c, b)).collect();
    for row in &lp.constraints {
        let op = match row.relation {
            Relation::Eq => ComparisonOp::Eq,
            Relation::Le => ComparisonOp::Le,
            Relation::Ge => ComparisonOp::Ge,
        };
        let expr: Vec<_> = row.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
        p.add_constraint(expr, op, row.rhs);
    }
    match p.solve() {
        Ok(microlp::SolveOutcome::Solution(s)) => {
            let x: Vec<f64> = vars.iter().map(|&v| s.var_value(v)).collect();
            Ok(LpOutcome::Optimal(LpSolution { objective: s.objective(), x }))
        }
        Ok(microlp::SolveOutcome::Interrupted(_)) => Err(Error::Solver("solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
        Err(microlp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
        Err(e) => Err(Error::Solver(e.to_string())),
    }
}

/// The alive support together with the observable cell each alive point
/// produces under z=0 and z=1.
#[derive(Debug, Clone)]
pub struct CellMap {
    support: PrunedSupport,
    cells: Vec<[usize; 2]>,
    members: Vec<Vec<usize>>,
    n_alts: usize,
    grid: crate::latent_space::OutcomeGrid,
}

impl CellMap {
    pub fn new(idx: &LatentIndex, support: PrunedSupport) -> Result<Self> {
        if support.total() != idx.size() {
            return Err(Error::InvalidPoint("support was pruned on a different latent space".into()));
        }
        let n_cells = idx.n_cells();
        let mut members = vec![Vec::new(); n_cells];
        let mut cells = Vec::with_capacity(support.len());
        for (pos, &w) in support.indices().iter().enumerate() {
            let p = idx.point_at(w)?;
            let pair = [idx.cell_of(&p, 0), idx.cell_of(&p, 1)];
            members[pair[0]].push(pos);
            members[pair[1]].push(pos);
            cells.push(pair);
        }
        Ok(Self { support, cells, members, n_alts: idx.alternatives().len(), grid: idx.grid().clone() })
    }

    pub fn support(&self) -> &PrunedSupport {
        &self.support
    }

    pub fn n_alive(&self) -> usize {
        self.support.len()
    }

    pub fn n_cells(&self) -> usize {
        self.members.len()
    }

    /// Cells of the alive point at position `pos` under z=0 and z=1.
    pub fn cells_of(&self, pos: usize) -> [usize; 2] {
        self.cells[pos]
    }

    /// Alive positions mapped to `cell`, in increasing order.
    pub fn members(&self, cell: usize) -> &[usize] {
        &self.members[cell]
    }

    /// Cell probabilities implied by a distribution over alive positions.
    pub fn implied_cells(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cells()];
        for (pos, &mass) in q.iter().enumerate() {
            for c in self.cells[pos] {
                out[c] += mass;
            }
        }
        out
    }

    pub(crate) fn check_data(&self, data: &EmpiricalDistribution) -> Result<()> {
        if data.n_alts() != self.n_alts || data.grid() != &self.grid {
            return Err(Error::InvalidData("cell layout does not match the latent space".into()));
        }
        Ok(())
    }
}

/// Data, support and parameter for one bound computation.
#[derive(Debug, Clone)]
pub struct IdentificationProblem {
    cells: Arc<CellMap>,
    data: EmpiricalDistribution,
    param: ParameterSpec,
}

impl IdentificationProblem {
    pub fn new(cells: Arc<CellMap>, data: EmpiricalDistribution, param: ParameterSpec) -> Result<Self> {
        cells.check_data(&data)?;
        Ok(Self { cells, data, param })
    }

    pub fn cell_map(&self) -> &CellMap {
        &self.cells
    }

    pub fn shared_cell_map(&self) -> Arc<CellMap> {
        Arc::clone(&self.cells)
    }

    pub fn data(&self) -> &EmpiricalDistribution {
        &self.data
    }

    pub fn param(&self) -> &ParameterSpec {
        &self.param
    }

    /// Same support and data, different parameter.
    pub fn with_param(&self, param: ParameterSpec) -> Self {
        Self { cells: Arc::clone(&self.cells), data: self.data.clone(), param }
    }

    /// Numerator coefficient for each alive position.
    pub fn alive_coeffs(&self) -> Vec<f64> {
        self.cells.support.indices().iter().map(|&w| self.param.coeff(w)).collect()
    }

    /// Denominator membership for each alive position.
    pub fn alive_in_den(&self) -> Vec<bool> {
        self.cells.support.indices().iter().map(|&w| self.param.in_denominator(w)).collect()
    }
}

/// The transformed program. Variable 0 is gamma; variable 1 + j is Q~ for
/// alive position j.
#[derive(Debug, Clone)]
pub struct CharnesCooperLp {
    pub lp: LinearProgram,
    pub n_alive: usize,
}

impl CharnesCooperLp {
    pub const GAMMA: usize = 0;

    pub fn q_var(pos: usize) -> usize {
        1 + pos
    }

    /// Recovers Q = Q~ / gamma as (latent index, mass) pairs with positive mass.
    pub fn detransform(&self, x: &[f64], support: &PrunedSupport) -> Vec<(usize, f64)> {
        let gamma = x[Self::GAMMA];
        support
            .indices()
            .iter()
            .enumerate()
            .filter_map(|(pos, &w)| {
                let q = x[Self::q_var(pos)].max(0.0) / gamma;
                (q > 0.0).then_some((w, q))
            })
            .collect()
    }
}

/// Builds the transformed LP. Rows: normalization, one data row per cell
/// in (z, d, y) order, then the denominator row.
///
/// The bounds Q~ <= gamma are not emitted as rows: they follow from
/// Q~ >= 0 and sum Q~ = gamma, and every returned solution is checked
/// against them.
pub fn assemble(problem: &IdentificationProblem) -> CharnesCooperLp {
    let cm = problem.cell_map();
    let n = cm.n_alive();
    let coeffs = problem.alive_coeffs();
    let in_den = problem.alive_in_den();
    let mut lp = LinearProgram::default();
    lp.add_var(0.0, 0.0, f64::INFINITY);
    for &a in &coeffs {
        lp.add_var(a, 0.0, f64::INFINITY);
    }
    let mut norm: Vec<(usize, f64)> = (0..n).map(|j| (CharnesCooperLp::q_var(j), 1.0)).collect();
    norm.push((CharnesCooperLp::GAMMA, -1.0));
    lp.add_constraint(norm, Relation::Eq, 0.0);
    for (x, &p) in problem.data().cells().iter().enumerate() {
        let mut row: Vec<(usize, f64)> = cm.members(x).iter().map(|&j| (CharnesCooperLp::q_var(j), 1.0)).collect();
        row.push((CharnesCooperLp::GAMMA, -p));
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    let den: Vec<(usize, f64)> =
        (0..n).filter(|&j| in_den[j]).map(|j| (CharnesCooperLp::q_var(j), 1.0)).collect();
    lp.add_constraint(den, Relation::Eq, 1.0);
    CharnesCooperLp { lp, n_alive: n }
}

/// What the backend reported for one side of an interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub backend: String,
    pub attempts: u32,
    pub gamma: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_status: SolveReport,
    pub hi_status: SolveReport,
    /// Distributions attaining each bound, as (latent index, mass).
    #[serde(skip)]
    pub lo_witness: Vec<(usize, f64)>,
    #[serde(skip)]
    pub hi_witness: Vec<(usize, f64)>,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

/// Outcome of the elastic feasibility program: the least total absolute
/// deviation from the data any distribution on the support can achieve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violation: f64,
    #[serde(skip)]
    pub witness: Vec<(usize, f64)>,
}

/// Minimizes the L1 distance between implied and observed cells over
/// distributions on the support. Zero (to tolerance) means feasible, and
/// the minimizer is a witness; a positive value certifies infeasibility.
pub fn check_feasibility(
    cells: &CellMap,
    data: &EmpiricalDistribution,
    backend: &dyn LpBackend,
) -> Result<FeasibilityReport> {
    cells.check_data(data)?;
    let n = cells.n_alive();
    if n == 0 {
        return Ok(FeasibilityReport { feasible: false, violation: 2.0, witness: Vec::new() });
    }
    let mut lp = LinearProgram::default();
    for _ in 0..n {
        lp.add_var(0.0, 0.0, f64::INFINITY);
    }
    lp.add_constraint((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
    for (x, &p) in data.cells().iter().enumerate() {
        let over = lp.add_var(1.0, 0.0, f64::INFINITY);
        let under = lp.add_var(1.0, 0.0, f64::INFINITY);
        let mut row: Vec<(usize, f64)> = cells.members(x).iter().map(|&j| (j, 1.0)).collect();
        row.push((over, -1.0));
        row.push((under, 1.0));
        lp.add_constraint(row, Relation::Eq, p);
    }
    let sol = match backend.solve(&lp, Sense::Minimize)? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => match backend.solve(&lp.with_reversed_rows(), Sense::Minimize)? {
            LpOutcome::Optimal(s) => s,
            _ => return Err(Error::Solver("elastic feasibility program reported infeasible".into())),
        },
        LpOutcome::Unbounded => return Err(Error::Unbounded),
    };
    let violation = sol.objective.max(0.0);
    let witness = cells
        .support()
        .indices()
        .iter()
        .enumerate()
        .filter_map(|(j, &w)| (sol.x[j] > 0.0).then_some((w, sol.x[j])))
        .collect();
    Ok(FeasibilityReport { feasible: violation <= FEAS_TOL, violation, witness })
}

/// Minimum total slack needed to satisfy every equality row of `lp`; zero
/// (to tolerance) means the program is feasible.
pub fn elastic_violation(lp: &LinearProgram, backend: &dyn LpBackend) -> Result<f64> {
    let mut el = lp.clone();
    el.objective.iter_mut().for_each(|c| *c = 0.0);
    for r in 0..el.constraints.len() {
        let (over, under) = (el.add_var(1.0, 0.0, f64::INFINITY), el.add_var(1.0, 0.0, f64::INFINITY));
        let row = &mut el.constraints[r];
        match row.relation {
            Relation::Eq => row.coeffs.extend([(over, -1.0), (under, 1.0)]),
            Relation::Le => row.coeffs.push((over, -1.0)),
            Relation::Ge => row.coeffs.push((under, 1.0)),
        }
    }
    match backend.solve(&el, Sense::Minimize)? {
        LpOutcome::Optimal(s) => Ok(s.objective.max(0.0)),
        LpOutcome::Unbounded => Err(Error::Unbounded),
        LpOutcome::Infeasible => Err(Error::Solver("elastic program reported infeasible".into())),
    }
}

/// Solves a scaled program whose variable `gamma` bounds every other
/// variable from above (rows that are implied and therefore not emitted).
///
/// A backend infeasibility claim is accepted only when the elastic program
/// confirms a positive violation; otherwise, like a returned point that
/// fails validation, it triggers one retry with reversed row order.
pub(crate) fn robust_solve(
    lp: &LinearProgram,
    gamma: usize,
    sense: Sense,
    backend: &dyn LpBackend,
) -> Result<(LpSolution, SolveReport)> {
    let mut last_failure = None;
    for attempt in 0..2u32 {
        let try_lp = if attempt == 0 { lp.clone() } else { lp.with_reversed_rows() };
        match backend.solve(&try_lp, sense)? {
            LpOutcome::Optimal(sol) => {
                let g = sol.x[gamma];
                let mut violation = lp.max_violation(&sol.x);
                for (j, &v) in sol.x.iter().enumerate() {
                    if j != gamma {
                        violation = violation.max(v - g);
                    }
                }
                if violation > 1e3 * FEAS_TOL || g <= 0.0 {
                    last_failure = Some(Error::Solver(format!(
                        "returned point violates constraints by {violation:.3e} (gamma {g:.3e})"
                    )));
                    continue;
                }
                let report = SolveReport {
                    backend: backend.name().to_string(),
                    attempts: attempt + 1,
                    gamma: g,
                    max_violation: violation,
                };
                return Ok((sol, report));
            }
            LpOutcome::Unbounded => return Err(Error::Unbounded),
            LpOutcome::Infeasible => {
                let violation = elastic_violation(lp, backend)?;
                if violation > FEAS_TOL {
                    return Err(Error::Infeasible { violation });
                }
                last_failure = Some(Error::Solver(format!(
                    "backend reported infeasible but the elastic program found violation {violation:.3e}"
                )));
            }
        }
    }
    Err(last_failure.expect("two attempts recorded"))
}

fn solve_side(
    problem: &IdentificationProblem,
    cc: &CharnesCooperLp,
    sense: Sense,
    backend: &dyn LpBackend,
) -> Result<(f64, SolveReport, Vec<(usize, f64)>)> {
    let (sol, report) = robust_solve(&cc.lp, CharnesCooperLp::GAMMA, sense, backend)?;
    Ok((sol.objective, report, cc.detransform(&sol.x, problem.cell_map().support())))
}

/// Lower bound of the denominator mass over all distributions consistent
/// with the data. Exactly 1 for linear parameters.
pub fn check_denominator(problem: &IdentificationProblem, backend: &dyn LpBackend) -> Result<f64> {
    if problem.param().is_linear() {
        return Ok(1.0);
    }
    let aux = problem.with_param(problem.param().denominator_mass());
    let cc = assemble(&aux);
    if cc.n_alive == 0 {
        return Err(Error::Infeasible { violation: 2.0 });
    }
    let (lo, _, _) = solve_side(&aux, &cc, Sense::Minimize, backend)?;
    Ok(lo)
}

/// Sharp bounds on the parameter. Fractional parameters are refused unless
/// the denominator is bounded away from zero.
pub fn solve_bounds(problem: &IdentificationProblem, backend: &dyn LpBackend) -> Result<Interval> {
    if problem.cell_map().n_alive() == 0 {
        return Err(Error::Infeasible { violation: 2.0 });
    }
    if !problem.param().is_linear() {
        let lower = check_denominator(problem, backend)?;
        if lower <= DEN_TOL {
            return Err(Error::DenominatorNotPositive { lower });
        }
    }
    let cc = assemble(problem);
    let (lo, hi) = rayon::join(
        || solve_side(problem, &cc, Sense::Minimize, backend),
        || solve_side(problem, &cc, Sense::Maximize, backend),
    );
    let (lo, lo_status, lo_witness) = lo?;
    let (hi, hi_status, hi_witness) = hi?;
    Ok(Interval { lo, hi, lo_status, hi_status, lo_witness, hi_witness })
}
