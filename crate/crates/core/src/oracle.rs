//! Verification machinery: bounds by bisection on feasibility programs
//! (no Charnes-Cooper variable), synthetic data from explicit latent
//! distributions, and planted misspecification.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::bounds_solver::{
    check_feasibility, elastic_violation, CellMap, IdentificationProblem, LinearProgram, LpBackend, LpOutcome, Relation, Sense,
};
use crate::empirical::{ClusteredSample, EmpiricalDistribution, Observation};
use crate::error::{Error, Result};
use crate::latent_space::LatentIndex;
use crate::parameters::ParameterSpec;
use crate::restrictions::{PrunedSupport, RestrictionSet};

/// A latent distribution together with the assignment probability and the
/// cluster layout used to draw samples from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    pmf: Vec<(usize, f64)>,
    p_z: f64,
    cluster_sizes: Vec<usize>,
}

impl SyntheticModel {
    /// Checks that the pmf sums to one and puts no mass on points the
    /// restrictions exclude.
    pub fn new(
        idx: &LatentIndex,
        restrictions: &RestrictionSet,
        mut pmf: Vec<(usize, f64)>,
        p_z: f64,
        cluster_sizes: Vec<usize>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_z) {
            return Err(Error::InvalidConfig(format!("p_z={p_z} outside [0,1]")));
        }
        if cluster_sizes.is_empty() || cluster_sizes.contains(&0) {
            return Err(Error::InvalidConfig("clusters must be non-empty".into()));
        }
        pmf.retain(|&(_, q)| q != 0.0);
        pmf.sort_by_key(|&(i, _)| i);
        if pmf.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidConfig("repeated latent index in pmf".into()));
        }
        if pmf.iter().any(|&(_, q)| !(q > 0.0 && q.is_finite())) {
            return Err(Error::InvalidConfig("pmf masses must be positive".into()));
        }
        let total: f64 = pmf.iter().map(|&(_, q)| q).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("pmf sums to {total}")));
        }
        for &(i, _) in &pmf {
            let p = idx.point_at(i)?;
            if !restrictions.is_alive(idx, &p) {
                return Err(Error::InvalidConfig(format!(
                    "pmf puts mass on excluded point {}",
                    idx.describe_point(&p)
                )));
            }
        }
        Ok(Self { pmf, p_z, cluster_sizes })
    }

    pub fn pmf(&self) -> &[(usize, f64)] {
        &self.pmf
    }

    pub fn p_z(&self) -> f64 {
        self.p_z
    }

    pub fn cluster_sizes(&self) -> &[usize] {
        &self.cluster_sizes
    }

    pub fn true_value(&self, param: &ParameterSpec) -> Result<f64> {
        param.evaluate(&self.pmf)
    }

    /// Population cell probabilities P(y, d | z).
    pub fn implied_cells(&self, idx: &LatentIndex) -> Result<EmpiricalDistribution> {
        let mut cells = vec![0.0; idx.n_cells()];
        for &(i, q) in &self.pmf {
            let p = idx.point_at(i)?;
            for z in 0..2 {
                cells[idx.cell_of(&p, z)] += q;
            }
        }
        EmpiricalDistribution::from_cells(idx.alternatives().len(), idx.grid().clone(), cells, [0, 0])
    }

    /// Draws a clustered sample: for each observation a latent point from
    /// the pmf, an independent assignment z, then D = d(u, c(z)), Y = y(D).
    pub fn generate(&self, idx: &LatentIndex, seed: u64) -> Result<ClusteredSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = WeightedIndex::new(self.pmf.iter().map(|&(_, q)| q))
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let points = self.pmf.iter().map(|&(i, _)| idx.point_at(i)).collect::<Result<Vec<_>>>()?;
        let clusters = self
            .cluster_sizes
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        let p = &points[weights.sample(&mut rng)];
                        let z = u8::from(rng.random_bool(self.p_z));
                        let (d, y) = idx.realized(p, z);
                        Observation { y: idx.grid().value(y), d, z }
                    })
                    .collect()
            })
            .collect();
        ClusteredSample::from_clusters(clusters)
    }
}

/// Draws a sample straight from cell probabilities, ignoring any latent
/// structure. Used to sample from planted, misspecified populations.
pub fn generate_from_cells(
    data: &EmpiricalDistribution,
    p_z: f64,
    cluster_sizes: &[usize],
    seed: u64,
) -> Result<ClusteredSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_arm = data.n_cells() / 2;
    let arm = |z: usize| {
        WeightedIndex::new(&data.cells()[z * per_arm..(z + 1) * per_arm])
            .map_err(|e| Error::InvalidData(e.to_string()))
    };
    let arms = [arm(0)?, arm(1)?];
    let m = data.grid().len();
    let clusters = cluster_sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    let z = u8::from(rng.random_bool(p_z));
                    let c = arms[z as usize].sample(&mut rng);
                    Observation { y: data.grid().value(c % m), d: c / m, z }
                })
                .collect()
        })
        .collect();
    ClusteredSample::from_clusters(clusters)
}

/// Dirichlet(1, ..., 1) weights on `k` distinct alive points chosen at random.
pub fn random_pmf(support: &PrunedSupport, k: usize, rng: &mut impl Rng) -> Result<Vec<(usize, f64)>> {
    if support.is_empty() {
        return Err(Error::Infeasible { violation: 2.0 });
    }
    let k = k.clamp(1, support.len());
    let mut picks = sample(rng, support.len(), k).into_vec();
    picks.sort_unstable();
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + 1e-12).collect();
    let total: f64 = raw.iter().sum();
    Ok(picks.into_iter().zip(raw).map(|(j, g)| (support.indices()[j], g / total)).collect())
}

/// Random sparse models until `accept` holds, at most 10^4 attempts.
pub fn random_model_where(
    idx: &LatentIndex,
    restrictions: &RestrictionSet,
    support: &PrunedSupport,
    k: usize,
    p_z: f64,
    cluster_sizes: Vec<usize>,
    rng: &mut impl Rng,
    mut accept: impl FnMut(&SyntheticModel) -> bool,
) -> Result<SyntheticModel> {
    for _ in 0..10_000 {
        let pmf = random_pmf(support, k, rng)?;
        let model = SyntheticModel::new(idx, restrictions, pmf, p_z, cluster_sizes.clone())?;
        if accept(&model) {
            return Ok(model);
        }
    }
    Err(Error::InvalidConfig("no acceptable random model in 10^4 attempts".into()))
}

/// Feasibility of {Q pmf on the support, data equalities,
/// sum a Q = theta0 * sum_den Q}.
fn theta_feasible(problem: &IdentificationProblem, theta0: f64, backend: &dyn LpBackend) -> Result<bool> {
    let cm = problem.cell_map();
    let n = cm.n_alive();
    let coeffs = problem.alive_coeffs();
    let in_den = problem.alive_in_den();
    let mut lp = LinearProgram::default();
    for _ in 0..n {
        lp.add_var(0.0, 0.0, f64::INFINITY);
    }
    lp.add_constraint((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
    for (x, &p) in problem.data().cells().iter().enumerate() {
        lp.add_constraint(cm.members(x).iter().map(|&j| (j, 1.0)).collect(), Relation::Eq, p);
    }
    if problem.param().is_linear() {
        let moment = (0..n).filter(|&j| coeffs[j] != 0.0).map(|j| (j, coeffs[j])).collect();
        lp.add_constraint(moment, Relation::Eq, theta0);
    } else {
        let ratio = (0..n)
            .map(|j| (j, coeffs[j] - if in_den[j] { theta0 } else { 0.0 }))
            .filter(|&(_, a)| a != 0.0)
            .collect();
        lp.add_constraint(ratio, Relation::Eq, 0.0);
    }
    match backend.solve(&lp, Sense::Minimize) {
        Ok(LpOutcome::Optimal(s)) => Ok(lp.max_violation(&s.x) <= 1e-9),
        Ok(LpOutcome::Infeasible) => Ok(false),
        Ok(LpOutcome::Unbounded) => Err(Error::Unbounded),
        // Near-degenerate ratio rows can break the factorization.
        Err(Error::Solver(_)) => Ok(elastic_violation(&lp, backend)? <= 1e-9),
        Err(e) => Err(e),
    }
}

/// Bounds by bisection on the largest and smallest feasible parameter
/// value. Relies on the identified set being an interval.
pub fn bisect_bounds(problem: &IdentificationProblem, tol: f64, backend: &dyn LpBackend) -> Result<(f64, f64)> {
    let report = check_feasibility(problem.cell_map(), problem.data(), backend)?;
    if !report.feasible {
        return Err(Error::Infeasible { violation: report.violation });
    }
    let start = problem
        .param()
        .evaluate(&report.witness)
        .map_err(|_| Error::DenominatorNotPositive { lower: 0.0 })?;
    let search = |dir: f64| -> Result<f64> {
        let mut inside = start;
        let mut step = start.abs().max(1.0);
        let mut outside = start + dir * step;
        let mut doublings = 0;
        while theta_feasible(problem, outside, backend)? {
            inside = outside;
            step *= 2.0;
            outside = start + dir * step;
            doublings += 1;
            if doublings > 60 {
                return Err(Error::Unbounded);
            }
        }
        for _ in 0..60 {
            if (outside - inside).abs() <= tol {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if theta_feasible(problem, mid, backend)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };
    Ok((search(-1.0)?, search(1.0)?))
}

/// Bounds of a linear parameter from the plain program over pmfs, with no
/// scaling variable.
pub fn direct_linear_bounds(problem: &IdentificationProblem, backend: &dyn LpBackend) -> Result<(f64, f64)> {
    if !problem.param().is_linear() {
        return Err(Error::LinearOnly(problem.param().name().to_string()));
    }
    let cm = problem.cell_map();
    let n = cm.n_alive();
    let mut lp = LinearProgram::default();
    for a in problem.alive_coeffs() {
        lp.add_var(a, 0.0, f64::INFINITY);
    }
    lp.add_constraint((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
    for (x, &p) in problem.data().cells().iter().enumerate() {
        lp.add_constraint(cm.members(x).iter().map(|&j| (j, 1.0)).collect(), Relation::Eq, p);
    }
    let side = |sense| match backend.solve(&lp, sense)? {
        LpOutcome::Optimal(s) => Ok(s.objective),
        LpOutcome::Infeasible => Err(Error::Infeasible { violation: f64::NAN }),
        LpOutcome::Unbounded => Err(Error::Unbounded),
    };
    Ok((side(Sense::Minimize)?, side(Sense::Maximize)?))
}

/// Largest t in [0, 1] with p + t (v - p) still consistent with some
/// distribution on the support.
fn exit_fraction(cells: &CellMap, p: &[f64], v: &[f64], backend: &dyn LpBackend) -> Result<f64> {
    let n = cells.n_alive();
    let mut lp = LinearProgram::default();
    for _ in 0..n {
        lp.add_var(0.0, 0.0, f64::INFINITY);
    }
    let t = lp.add_var(1.0, 0.0, 1.0);
    lp.add_constraint((0..n).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0);
    for x in 0..cells.n_cells() {
        let mut row: Vec<(usize, f64)> = cells.members(x).iter().map(|&j| (j, 1.0)).collect();
        if v[x] != p[x] {
            row.push((t, p[x] - v[x]));
        }
        lp.add_constraint(row, Relation::Eq, p[x]);
    }
    match backend.solve(&lp, Sense::Maximize)? {
        LpOutcome::Optimal(s) => Ok(s.objective.clamp(0.0, 1.0)),
        LpOutcome::Infeasible => Ok(0.0),
        LpOutcome::Unbounded => Err(Error::Unbounded),
    }
}

/// Moves the cells toward a vertex of the product of the two arm simplices
/// that no distribution on the support can produce.
///
/// Among such vertices the one whose segment from the data leaves the
/// feasible polytope soonest is used. The result is
/// p + min(t* + magnitude, 1) (v - p), where t* is the exit fraction, so
/// `magnitude` is the share of the segment travelled beyond the boundary.
/// At magnitude 0 this is the exit point, which is p itself whenever p
/// already lies on the boundary facing v.
pub fn plant_violation(
    cells: &CellMap,
    data: &EmpiricalDistribution,
    magnitude: f64,
    backend: &dyn LpBackend,
) -> Result<EmpiricalDistribution> {
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidConfig(format!("magnitude {magnitude}")));
    }
    let per_arm = cells.n_cells() / 2;
    let p = data.cells();
    let mut reachable = vec![false; per_arm * per_arm];
    for pos in 0..cells.n_alive() {
        let [c0, c1] = cells.cells_of(pos);
        reachable[c0 * per_arm + (c1 - per_arm)] = true;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x0 in 0..per_arm {
        for x1 in 0..per_arm {
            if reachable[x0 * per_arm + x1] {
                continue;
            }
            let mut v = vec![0.0; 2 * per_arm];
            v[x0] = 1.0;
            v[per_arm + x1] = 1.0;
            let t = exit_fraction(cells, p, &v, backend)?;
            if best.as_ref().is_none_or(|(bt, _)| t < *bt - 1e-12) {
                best = Some((t, v));
            }
        }
    }
    let (t_exit, v) = best.ok_or_else(|| {
        Error::InvalidConfig("every cell pair is reachable; no direction leaves the feasible set".into())
    })?;
    let s = (t_exit + magnitude).min(1.0);
    let mut out: Vec<f64> = p.iter().zip(&v).map(|(&a, &b)| (a + s * (b - a)).max(0.0)).collect();
    for z in 0..2 {
        let arm = &mut out[z * per_arm..(z + 1) * per_arm];
        let total: f64 = arm.iter().sum();
        arm.iter_mut().for_each(|c| *c /= total);
    }
    EmpiricalDistribution::from_cells(data.n_alts(), data.grid().clone(), out, data.arm_counts())
}
