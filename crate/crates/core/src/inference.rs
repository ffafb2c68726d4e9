//! Bootstrap tests, confidence intervals by test inversion, and the model
//! specification test. Every statistic is a scaled squared distance from
//! the cell probabilities to a (possibly tightened) image of the latent
//! simplex, computed as a quadratic program.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds_solver::{solve_bounds, CellMap, IdentificationProblem, LpBackend};
use crate::empirical::{draw_rng, CellSample, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::parameters::ParameterSpec;
use crate::qp::{QpBackend, QpOutcome, QuadraticProgram};

/// Statistics at or below this are reported as exactly zero.
pub const STAT_SNAP: f64 = 1e-7;

/// The tightening parameter is halved at most this many times.
pub const MAX_HALVINGS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TauRule {
    /// sqrt(ln G / G), halved until the tightened set is non-empty.
    Auto,
    /// A fixed starting value, halved the same way.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub bootstrap: usize,
    pub tau: TauRule,
    /// Number of points in the inversion grid.
    pub theta_grid: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { alpha: 0.05, bootstrap: 200, tau: TauRule::Auto, theta_grid: 201, seed: 0 }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha={} outside (0,1)", self.alpha)));
        }
        if self.bootstrap == 0 {
            return Err(Error::InvalidConfig("at least one bootstrap draw is needed".into()));
        }
        if let TauRule::Fixed(t) = self.tau {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidConfig(format!("tau={t} outside (0,1)")));
            }
        }
        if self.theta_grid < 2 {
            return Err(Error::InvalidConfig("theta grid needs at least two points".into()));
        }
        Ok(())
    }

    /// Starting tightening parameter for `g` clusters.
    pub fn tau(&self, g: usize) -> Result<f64> {
        match self.tau {
            TauRule::Fixed(t) => Ok(t),
            TauRule::Auto if g >= 2 => Ok(((g as f64).ln() / g as f64).sqrt()),
            TauRule::Auto => Err(Error::InvalidConfig(format!("automatic tau needs G >= 2, got {g}"))),
        }
    }
}

/// Lower bounds on the latent masses, one per alive point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightenedSet {
    pub tau: f64,
    pub halvings: u32,
    pub lower: Vec<f64>,
}

impl TightenedSet {
    /// Bounds for the test of `a . Q = theta0`. Points where `a` is maximal
    /// and minimal get shares proportional to how far `theta0` sits from the
    /// opposite end; the rest share what remains.
    pub fn for_parameter(a: &[f64], theta0: f64, tau: f64) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::EmptyTightenedSet);
        }
        let mut t = tau;
        for halvings in 0..=MAX_HALVINGS {
            let lower = parameter_lower_bounds(a, theta0, t);
            if admits(a, &lower, theta0) {
                return Ok(Self { tau: t, halvings, lower });
            }
            t /= 2.0;
        }
        Err(Error::EmptyTightenedSet)
    }

    /// Uniform bounds tau / |alive| for the specification test. Never empty.
    pub fn for_specification(n_alive: usize, tau: f64) -> Self {
        Self { tau, halvings: 0, lower: vec![tau / n_alive.max(1) as f64; n_alive] }
    }
}

fn parameter_lower_bounds(a: &[f64], theta0: f64, tau: f64) -> Vec<f64> {
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == lo {
        return vec![tau / a.len() as f64; a.len()];
    }
    let n_hi = a.iter().filter(|&&v| v == hi).count() as f64;
    let n_lo = a.iter().filter(|&&v| v == lo).count() as f64;
    let n_mid = a.len() as f64 - n_hi - n_lo;
    let low_share = (hi - theta0) / (hi - lo) * tau / (n_lo + n_mid);
    let high_share = (theta0 - lo) / (hi - lo) * tau / (n_hi + n_mid);
    let mid = if n_mid > 0.0 { (1.0 - low_share - high_share) * tau / n_mid } else { 0.0 };
    a.iter()
        .map(|&v| {
            if v == lo {
                low_share
            } else if v == hi {
                high_share
            } else {
                mid
            }
        })
        .collect()
}

/// Whether some Q >= lower with total mass 1 has `a . Q = theta0`: the mass
/// left after the bounds must be able to carry the remaining moment.
fn admits(a: &[f64], lower: &[f64], theta0: f64) -> bool {
    const SLACK: f64 = 1e-12;
    if lower.iter().any(|&l| l < 0.0) {
        return false;
    }
    let free = 1.0 - lower.iter().sum::<f64>();
    if free < -SLACK {
        return false;
    }
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let rest = theta0 - a.iter().zip(lower).map(|(v, l)| v * l).sum::<f64>();
    rest >= lo * free.max(0.0) - SLACK && rest <= hi * free.max(0.0) + SLACK
}

#[derive(Debug, Clone)]
struct Column {
    cells: [usize; 2],
    a: f64,
    lower: f64,
}

/// Distance from cell targets to the image of a set of latent masses.
/// Points that share both cells (and the coefficient, when a moment is
/// pinned) are interchangeable, so each group becomes one column whose
/// lower bound is the sum of its members'.
struct Projection {
    columns: Vec<Column>,
    n_cells: usize,
    moment: Option<f64>,
}

impl Projection {
    fn new(cells: &CellMap, a: Option<&[f64]>, moment: Option<f64>, lower: Option<&[f64]>) -> Self {
        let mut groups: BTreeMap<(usize, usize, u64), Column> = BTreeMap::new();
        for pos in 0..cells.n_alive() {
            let c = cells.cells_of(pos);
            let coeff = a.map_or(0.0, |a| a[pos]);
            let l = lower.map_or(0.0, |l| l[pos]);
            groups
                .entry((c[0], c[1], coeff.to_bits()))
                .and_modify(|col| col.lower += l)
                .or_insert(Column { cells: c, a: coeff, lower: l });
        }
        Self { columns: groups.into_values().collect(), n_cells: cells.n_cells(), moment }
    }

    /// Minimum of the summed squared residual, with the projected cells.
    fn solve(&self, target: &[f64], qp_backend: &dyn QpBackend) -> Result<Option<(f64, Vec<f64>)>> {
        let mut qp = QuadraticProgram::default();
        for col in &self.columns {
            qp.add_var(0.0, col.lower);
        }
        let k = self.columns.len();
        let mut rows: Vec<Vec<(usize, f64)>> = (0..self.n_cells).map(|x| vec![(k + x, 1.0)]).collect();
        for (j, col) in self.columns.iter().enumerate() {
            for c in col.cells {
                rows[c].push((j, 1.0));
            }
        }
        for (x, row) in rows.into_iter().enumerate() {
            qp.add_var(1.0, f64::NEG_INFINITY);
            qp.add_equality(row, target[x]);
        }
        if let Some(theta0) = self.moment {
            qp.add_equality((0..k).map(|j| (j, 1.0)).collect(), 1.0);
            qp.add_equality((0..k).map(|j| (j, self.columns[j].a)).collect(), theta0);
        }
        match qp_backend.solve(&qp)? {
            QpOutcome::Infeasible => Ok(None),
            QpOutcome::Optimal { x, objective } => {
                let eta = (0..self.n_cells).map(|c| target[c] - x[k + c]).collect();
                Ok(Some((objective, eta)))
            }
        }
    }

    fn statistic(&self, target: &[f64], g: usize, qp_backend: &dyn QpBackend) -> Result<f64> {
        Ok(match self.solve(target, qp_backend)? {
            Some((ss, _)) => snap(g as f64 * ss),
            None => f64::INFINITY,
        })
    }
}

fn snap(stat: f64) -> f64 {
    if stat <= STAT_SNAP {
        0.0
    } else {
        stat
    }
}

fn require_linear(param: &ParameterSpec) -> Result<()> {
    if param.is_linear() {
        Ok(())
    } else {
        Err(Error::LinearOnly(param.name().to_string()))
    }
}

fn alive_coeffs(cells: &CellMap, param: &ParameterSpec) -> Vec<f64> {
    cells.support().indices().iter().map(|&w| param.coeff(w)).collect()
}

fn coeff_range(a: &[f64]) -> (f64, f64) {
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// G times the smallest squared distance from `emp` to the cells of a
/// latent pmf with `a . Q = theta0`. Infinite when no pmf reaches theta0.
pub fn test_statistic(
    emp: &EmpiricalDistribution,
    cells: &CellMap,
    param: &ParameterSpec,
    theta0: f64,
    g: usize,
    qp_backend: &dyn QpBackend,
) -> Result<f64> {
    require_linear(param)?;
    cells.check_data(emp)?;
    let a = alive_coeffs(cells, param);
    let (lo, hi) = coeff_range(&a);
    if a.is_empty() || theta0 < lo || theta0 > hi {
        return Ok(f64::INFINITY);
    }
    Projection::new(cells, Some(&a), Some(theta0), None).statistic(emp.cells(), g, qp_backend)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub theta0: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    /// In draw order.
    pub bootstrap_stats: Vec<f64>,
    pub tau: f64,
}

/// Smallest statistic t with at least a (1 - alpha) share of the draws at
/// or below t.
pub fn critical_value(stats: &[f64], alpha: f64) -> f64 {
    let mut sorted = stats.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((1.0 - alpha) * sorted.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[k.min(sorted.len()) - 1]
}

/// Cell vectors of the B cluster bootstrap draws. Draw b depends only on
/// the seed and b.
pub fn bootstrap_draws(sample: &CellSample, cfg: &TestConfig) -> Result<Vec<EmpiricalDistribution>> {
    (0..cfg.bootstrap as u64).into_par_iter().map(|b| sample.resample(&mut draw_rng(cfg.seed, b))).collect()
}

struct Bootstrap<'a> {
    cells: &'a CellMap,
    p_hat: &'a [f64],
    draws: &'a [EmpiricalDistribution],
    g: usize,
    tau: f64,
}

impl Bootstrap<'_> {
    /// Re-centered draws around the tightened projection of P-hat, each
    /// projected back onto the tightened set.
    fn stats(&self, tight: &Projection, qp_backend: &dyn QpBackend) -> Result<Vec<f64>> {
        let (_, eta) = tight.solve(self.p_hat, qp_backend)?.ok_or(Error::EmptyTightenedSet)?;
        self.draws
            .par_iter()
            .map(|d| {
                let target: Vec<f64> =
                    d.cells().iter().zip(self.p_hat).zip(&eta).map(|((pb, p), e)| pb - p + e).collect();
                tight.statistic(&target, self.g, qp_backend)
            })
            .collect()
    }

    fn test(&self, a: &[f64], theta0: f64, alpha: f64, qp_backend: &dyn QpBackend) -> Result<TestResult> {
        let (lo, hi) = coeff_range(a);
        if a.is_empty() || theta0 < lo || theta0 > hi {
            return Ok(TestResult {
                theta0,
                statistic: f64::INFINITY,
                critical_value: f64::NAN,
                reject: true,
                bootstrap_stats: Vec::new(),
                tau: self.tau,
            });
        }
        let statistic =
            Projection::new(self.cells, Some(a), Some(theta0), None).statistic(self.p_hat, self.g, qp_backend)?;
        let set = TightenedSet::for_parameter(a, theta0, self.tau)?;
        let tight = Projection::new(self.cells, Some(a), Some(theta0), Some(&set.lower));
        let bootstrap_stats = self.stats(&tight, qp_backend)?;
        let critical_value = critical_value(&bootstrap_stats, alpha);
        Ok(TestResult {
            theta0,
            statistic,
            critical_value,
            reject: statistic > critical_value,
            bootstrap_stats,
            tau: set.tau,
        })
    }
}

/// Bootstrap test of `theta = theta0`.
pub fn bootstrap_test(
    sample: &CellSample,
    cells: &CellMap,
    param: &ParameterSpec,
    theta0: f64,
    cfg: &TestConfig,
    qp_backend: &dyn QpBackend,
) -> Result<TestResult> {
    require_linear(param)?;
    cfg.validate()?;
    let g = sample.n_clusters();
    let emp = sample.estimate()?;
    cells.check_data(&emp)?;
    let draws = bootstrap_draws(sample, cfg)?;
    let boot = Bootstrap { cells, p_hat: emp.cells(), draws: &draws, g, tau: cfg.tau(g)? };
    boot.test(&alive_coeffs(cells, param), theta0, cfg.alpha, qp_backend)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub theta0: f64,
    pub statistic: f64,
    /// Absent when the statistic is zero or infinite, which decides the
    /// test without bootstrapping.
    pub critical_value: Option<f64>,
    pub reject: bool,
    /// Set when no tightened set exists at this point; a positive statistic
    /// then counts as a rejection.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    /// Hull of the accepted grid points; `None` when every point is rejected.
    pub bounds: Option<(f64, f64)>,
    /// Bounds estimated from P-hat, or `None` when P-hat admits no pmf.
    pub estimated: Option<(f64, f64)>,
    pub grid: Vec<GridPoint>,
    pub diagnostics: Vec<String>,
}

/// Inverts the bootstrap test over a grid around the estimated bounds.
pub fn confidence_interval(
    sample: &CellSample,
    cells: Arc<CellMap>,
    param: &ParameterSpec,
    cfg: &TestConfig,
    lp_backend: &dyn LpBackend,
    qp_backend: &dyn QpBackend,
) -> Result<ConfidenceInterval> {
    require_linear(param)?;
    cfg.validate()?;
    let g = sample.n_clusters();
    let emp = sample.estimate()?;
    let a = alive_coeffs(&cells, param);
    if a.is_empty() {
        return Err(Error::Infeasible { violation: 2.0 });
    }
    let (a_lo, a_hi) = coeff_range(&a);
    let mut diagnostics = Vec::new();
    let problem = IdentificationProblem::new(cells.clone(), emp.clone(), param.clone())?;
    let estimated = match solve_bounds(&problem, lp_backend) {
        Ok(iv) => Some((iv.lo, iv.hi)),
        Err(Error::Infeasible { violation }) => {
            diagnostics.push(format!(
                "estimated cells admit no latent pmf (violation {violation:.3e}); grid centered on the coefficient range"
            ));
            None
        }
        Err(e) => return Err(e),
    };
    let (l, u) = estimated.unwrap_or((a_lo, a_hi));
    let delta = (0.5 * (u - l)).max(0.25 * (a_hi - a_lo));
    let n = cfg.theta_grid;
    let step = (u - l + 2.0 * delta) / (n - 1) as f64;
    let thetas: Vec<f64> = (0..n).map(|i| l - delta + i as f64 * step).collect();

    let draws = bootstrap_draws(sample, cfg)?;
    let boot = Bootstrap { cells: &cells, p_hat: emp.cells(), draws: &draws, g, tau: cfg.tau(g)? };
    let grid = thetas
        .par_iter()
        .map(|&theta0| -> Result<GridPoint> {
            let point = |statistic, critical_value, reject, note| GridPoint { theta0, statistic, critical_value, reject, note };
            if theta0 < a_lo || theta0 > a_hi {
                return Ok(point(f64::INFINITY, None, true, None));
            }
            let statistic = Projection::new(&cells, Some(&a), Some(theta0), None).statistic(emp.cells(), g, qp_backend)?;
            if statistic == 0.0 {
                return Ok(point(0.0, None, false, None));
            }
            match boot.test(&a, theta0, cfg.alpha, qp_backend) {
                Ok(t) => Ok(point(t.statistic, Some(t.critical_value), t.reject, None)),
                Err(Error::EmptyTightenedSet) => {
                    Ok(point(statistic, None, true, Some("no non-empty tightened set".into())))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let accepted: Vec<f64> = grid.iter().filter(|p| !p.reject).map(|p| p.theta0).collect();
    let bounds = match (accepted.first(), accepted.last()) {
        (Some(&lo), Some(&hi)) => Some((lo, hi)),
        _ => {
            diagnostics.push("EmptyCI: every grid point was rejected".into());
            None
        }
    };
    Ok(ConfidenceInterval { bounds, estimated, grid, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecificationTest {
    pub statistic: f64,
    pub p_value: f64,
    /// Empty when the statistic is zero, since the p-value is then 1.
    pub bootstrap_stats: Vec<f64>,
    pub tau: f64,
}

/// Tests whether some latent pmf on the support reproduces the cells.
/// Masses are only required to be nonnegative.
pub fn specification_test(
    sample: &CellSample,
    cells: &CellMap,
    cfg: &TestConfig,
    qp_backend: &dyn QpBackend,
) -> Result<SpecificationTest> {
    cfg.validate()?;
    let g = sample.n_clusters();
    let tau = cfg.tau(g)?;
    let emp = sample.estimate()?;
    cells.check_data(&emp)?;
    let statistic = Projection::new(cells, None, None, None).statistic(emp.cells(), g, qp_backend)?;
    if statistic == 0.0 {
        return Ok(SpecificationTest { statistic, p_value: 1.0, bootstrap_stats: Vec::new(), tau });
    }
    let set = TightenedSet::for_specification(cells.n_alive(), tau);
    let tight = Projection::new(cells, None, None, Some(&set.lower));
    let draws = bootstrap_draws(sample, cfg)?;
    let boot = Bootstrap { cells, p_hat: emp.cells(), draws: &draws, g, tau };
    let bootstrap_stats = boot.stats(&tight, qp_backend)?;
    let hits = bootstrap_stats.iter().filter(|&&s| s >= statistic).count();
    Ok(SpecificationTest { statistic, p_value: hits as f64 / bootstrap_stats.len() as f64, bootstrap_stats, tau })
}
