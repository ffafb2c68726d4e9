//! Bounds when an assumption holds only for a fraction lambda of the
//! population: Q = lambda H1 + (1 - lambda) H0, where H1 satisfies the extra
//! restrictions, and H0, H1 put the same mass on every
//! (preference, c0, c1) group.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::bounds_solver::{
    robust_solve, solve_bounds, CellMap, IdentificationProblem, Interval, LinearProgram, LpBackend, Relation,
    Sense, DEN_TOL,
};
use crate::error::{Error, Result};
use crate::latent_space::LatentIndex;
use crate::parameters::ParameterSpec;
use crate::restrictions::{prune, PrunedSupport, RestrictionSet};

/// Latent points carrying one mixture component, with what the program
/// needs to know about each.
#[derive(Debug, Clone)]
struct Component {
    indices: Vec<usize>,
    cells: Vec<[usize; 2]>,
    /// Position in the Q-level support, if the point is alive there.
    q_pos: Vec<Option<usize>>,
    group: Vec<usize>,
}

impl Component {
    fn build(idx: &LatentIndex, support: &PrunedSupport, alive_q: &PrunedSupport) -> Result<Self> {
        let mut c = Component { indices: Vec::new(), cells: Vec::new(), q_pos: Vec::new(), group: Vec::new() };
        for &w in support.indices() {
            let p = idx.point_at(w)?;
            c.indices.push(w);
            c.cells.push([idx.cell_of(&p, 0), idx.cell_of(&p, 1)]);
            c.q_pos.push(alive_q.position(w));
            // Outcome digits are the fastest, so this is the (u, c0, c1) group.
            c.group.push(w / idx.n_profiles());
        }
        Ok(c)
    }

    fn len(&self) -> usize {
        self.indices.len()
    }
}

/// A bound problem where `s1` binds only the H1 component.
#[derive(Debug, Clone)]
pub struct MixtureProblem {
    base: IdentificationProblem,
    lambda: f64,
    s1_names: Vec<String>,
    s_and_s1: PrunedSupport,
    full_cells: Arc<CellMap>,
    h0: Component,
    h1: Component,
}

impl MixtureProblem {
    /// `s` is the Q-level restriction set that produced `base`'s support.
    pub fn new(
        idx: &LatentIndex,
        base: IdentificationProblem,
        s: &RestrictionSet,
        s1: &RestrictionSet,
        lambda: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidConfig(format!("lambda={lambda} outside [0,1]")));
        }
        if let Some(name) = s1.names().into_iter().find(|n| s.contains(n)) {
            return Err(Error::InvalidConfig(format!("`{name}` is imposed on Q and on H1")));
        }
        let alive_q = base.cell_map().support().clone();
        if prune(s, idx) != alive_q {
            return Err(Error::InvalidConfig("base support does not match the Q-level restrictions".into()));
        }
        let alive_s1 = prune(s1, idx);
        let everything = PrunedSupport::from_indices((0..idx.size()).collect(), idx.size())?;
        // Off the Q support, lambda in (0,1) forces both components to zero.
        // At the endpoints the component with zero weight is unrestricted.
        let h0_support = if lambda < 1.0 { alive_q.clone() } else { everything };
        let h1_support = if lambda > 0.0 { alive_s1.intersect(&alive_q) } else { alive_s1 };
        let h0 = Component::build(idx, &h0_support, &alive_q)?;
        let h1 = Component::build(idx, &h1_support, &alive_q)?;
        let s_and_s1 = alive_q.intersect(&prune(s1, idx));
        Ok(Self {
            full_cells: Arc::new(CellMap::new(idx, s_and_s1.clone())?),
            s_and_s1,
            base,
            lambda,
            s1_names: s1.names().into_iter().map(String::from).collect(),
            h0,
            h1,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn base(&self) -> &IdentificationProblem {
        &self.base
    }

    pub fn s1_names(&self) -> &[String] {
        &self.s1_names
    }

    /// Alive points when `s1` is imposed on Q as well.
    pub fn fully_restricted_support(&self) -> &PrunedSupport {
        &self.s_and_s1
    }
}

/// The scaled mixture program with Q substituted out. Variable 0 is gamma,
/// then H0 over its support, then H1 over its support.
struct MixtureLp {
    lp: LinearProgram,
    n0: usize,
}

fn assemble_reduced(mp: &MixtureProblem, param: &ParameterSpec) -> MixtureLp {
    let lambda = mp.lambda;
    let (h0, h1) = (&mp.h0, &mp.h1);
    let n0 = h0.len();
    let mut lp = LinearProgram::default();
    lp.add_var(0.0, 0.0, f64::INFINITY);
    // Each component contributes to Q with its weight, only where Q lives.
    let weight = |comp: &Component, j: usize, w: f64| if comp.q_pos[j].is_some() { w } else { 0.0 };
    let terms: Vec<(usize, &Component, usize, f64)> = (0..n0)
        .map(|j| (1 + j, h0, j, weight(h0, j, 1.0 - lambda)))
        .chain((0..h1.len()).map(|j| (1 + n0 + j, h1, j, weight(h1, j, lambda))))
        .collect();
    for &(_, comp, j, wt) in &terms {
        lp.add_var(wt * param.coeff(comp.indices[j]), 0.0, f64::INFINITY);
    }
    for (comp, offset) in [(h0, 1), (h1, 1 + n0)] {
        let mut row: Vec<(usize, f64)> = (0..comp.len()).map(|j| (offset + j, 1.0)).collect();
        row.push((0, -1.0));
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    let data = mp.base.data().cells();
    let mut cell_rows: Vec<Vec<(usize, f64)>> = data.iter().map(|&p| vec![(0, -p)]).collect();
    let mut den_row = Vec::new();
    for &(var, comp, j, wt) in &terms {
        if wt == 0.0 {
            continue;
        }
        for c in comp.cells[j] {
            cell_rows[c].push((var, wt));
        }
        if param.in_denominator(comp.indices[j]) {
            den_row.push((var, wt));
        }
    }
    for row in cell_rows {
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    lp.add_constraint(den_row, Relation::Eq, 1.0);
    let mut groups: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (j, &g) in h0.group.iter().enumerate() {
        groups.entry(g).or_default().push((1 + j, 1.0));
    }
    for (j, &g) in h1.group.iter().enumerate() {
        groups.entry(g).or_default().push((1 + n0 + j, -1.0));
    }
    for (_, row) in groups {
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    MixtureLp { lp, n0 }
}

impl MixtureLp {
    /// Q = (lambda H1~ + (1 - lambda) H0~) / gamma on the Q support.
    fn detransform(&self, mp: &MixtureProblem, x: &[f64]) -> Vec<(usize, f64)> {
        let alive = mp.base.cell_map().support();
        let mut q = vec![0.0; alive.len()];
        for (comp, offset, wt) in [(&mp.h0, 1, 1.0 - mp.lambda), (&mp.h1, 1 + self.n0, mp.lambda)] {
            for j in 0..comp.len() {
                if let Some(pos) = comp.q_pos[j] {
                    q[pos] += wt * x[offset + j].max(0.0) / x[0];
                }
            }
        }
        alive.indices().iter().zip(q).filter(|&(_, m)| m > 0.0).map(|(&w, m)| (w, m)).collect()
    }
}

fn mixture_bounds(mp: &MixtureProblem, param: &ParameterSpec, backend: &dyn LpBackend) -> Result<Interval> {
    let m = assemble_reduced(mp, param);
    let side = |sense| -> Result<_> {
        let (sol, report) = robust_solve(&m.lp, 0, sense, backend)?;
        Ok((sol.objective, report, m.detransform(mp, &sol.x)))
    };
    let (lo, hi) = rayon::join(|| side(Sense::Minimize), || side(Sense::Maximize));
    let (lo, lo_status, lo_witness) = lo?;
    let (hi, hi_status, hi_witness) = hi?;
    Ok(Interval { lo, hi, lo_status, hi_status, lo_witness, hi_witness })
}

/// Bounds from the full mixture program at any lambda in [0, 1].
pub fn solve_mixture_system(mp: &MixtureProblem, backend: &dyn LpBackend) -> Result<Interval> {
    let param = mp.base.param();
    if !param.is_linear() {
        let den = mixture_bounds(mp, &param.denominator_mass(), backend)?;
        if den.lo <= DEN_TOL {
            return Err(Error::DenominatorNotPositive { lower: den.lo });
        }
    }
    mixture_bounds(mp, param, backend)
}

/// Bounds under the partial assumption. At lambda = 1 the mixture is
/// H1 itself, so the bounds are those with `s1` imposed on Q.
pub fn solve_sensitivity(mp: &MixtureProblem, backend: &dyn LpBackend) -> Result<Interval> {
    if mp.lambda == 1.0 {
        let full =
            IdentificationProblem::new(mp.full_cells.clone(), mp.base.data().clone(), mp.base.param().clone())?;
        return solve_bounds(&full, backend);
    }
    solve_mixture_system(mp, backend)
}

/// One row of a lambda scan.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityRow {
    pub lambda: f64,
    pub interval: Option<Interval>,
    pub error: Option<String>,
    /// At lambda = 0: largest endpoint gap between the mixture program and
    /// the bounds without `s1`. Expected to be zero.
    pub lambda_zero_gap: Option<f64>,
}

/// Solves every lambda in `lambdas`, in parallel.
pub fn sensitivity_scan(
    idx: &LatentIndex,
    base: &IdentificationProblem,
    s: &RestrictionSet,
    s1: &RestrictionSet,
    lambdas: &[f64],
    backend: &dyn LpBackend,
) -> Result<Vec<SensitivityRow>> {
    use rayon::prelude::*;
    let problems = lambdas
        .iter()
        .map(|&l| MixtureProblem::new(idx, base.clone(), s, s1, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(problems
        .par_iter()
        .map(|mp| {
            let result = solve_sensitivity(mp, backend);
            let gap = if mp.lambda == 0.0 {
                match (&result, solve_bounds(base, backend)) {
                    (Ok(a), Ok(b)) => Some((a.lo - b.lo).abs().max((a.hi - b.hi).abs())),
                    _ => None,
                }
            } else {
                None
            };
            match result {
                Ok(iv) => SensitivityRow { lambda: mp.lambda, interval: Some(iv), error: None, lambda_zero_gap: gap },
                Err(e) => SensitivityRow { lambda: mp.lambda, interval: None, error: Some(e.to_string()), lambda_zero_gap: gap },
            }
        })
        .collect())
}

/// The mixture program exactly as stated, with Q, H0 and H1 all on the
/// Q support. Variables: gamma, Q~, H0~, H1~ (1 + 3 |alive|). Rows:
/// normalization, cells, denominator, the two component normalizations,
/// one zero-mass row per restriction in `s1`, the mixture identity at every
/// alive point, and one matching row per (u, c0, c1) group. Meant for
/// lambda strictly between 0 and 1, where it is equivalent to the program
/// [`solve_mixture_system`] solves.
pub fn assemble_mixture_verbatim(mp: &MixtureProblem, idx: &LatentIndex, s1: &RestrictionSet) -> Result<LinearProgram> {
    let cm = mp.base.cell_map();
    let alive = cm.support();
    let n = alive.len();
    let lambda = mp.lambda;
    let param = mp.base.param();
    let (q, h0, h1) = (|j: usize| 1 + j, |j: usize| 1 + n + j, |j: usize| 1 + 2 * n + j);
    let mut lp = LinearProgram::default();
    lp.add_var(0.0, 0.0, f64::INFINITY);
    for &w in alive.indices() {
        lp.add_var(param.coeff(w), 0.0, f64::INFINITY);
    }
    for _ in 0..2 * n {
        lp.add_var(0.0, 0.0, f64::INFINITY);
    }
    let sum_row = |var: &dyn Fn(usize) -> usize| {
        let mut row: Vec<(usize, f64)> = (0..n).map(|j| (var(j), 1.0)).collect();
        row.push((0, -1.0));
        row
    };
    lp.add_constraint(sum_row(&q), Relation::Eq, 0.0);
    for (x, &p) in mp.base.data().cells().iter().enumerate() {
        let mut row: Vec<(usize, f64)> = cm.members(x).iter().map(|&j| (q(j), 1.0)).collect();
        row.push((0, -p));
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    let den: Vec<(usize, f64)> =
        (0..n).filter(|&j| param.in_denominator(alive.indices()[j])).map(|j| (q(j), 1.0)).collect();
    lp.add_constraint(den, Relation::Eq, 1.0);
    lp.add_constraint(sum_row(&h0), Relation::Eq, 0.0);
    lp.add_constraint(sum_row(&h1), Relation::Eq, 0.0);
    let points = alive.indices().iter().map(|&w| idx.point_at(w)).collect::<Result<Vec<_>>>()?;
    for r in s1.iter() {
        let row: Vec<(usize, f64)> = (0..n).filter(|&j| r.kills(idx, &points[j])).map(|j| (h1(j), 1.0)).collect();
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    for j in 0..n {
        lp.add_constraint(vec![(q(j), 1.0), (h1(j), -lambda), (h0(j), lambda - 1.0)], Relation::Eq, 0.0);
    }
    let mut groups: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (j, &w) in alive.indices().iter().enumerate() {
        groups.entry(w / idx.n_profiles()).or_default().extend([(h0(j), 1.0), (h1(j), -1.0)]);
    }
    for (_, row) in groups {
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bounds_solver::MicroLp;
    use crate::latent_space::{AlternativeSet, ChoiceSet, OutcomeGrid};
    use crate::oracle::{random_pmf, SyntheticModel};
    use crate::parameters::{average_access_effect, participation_proportion};
    use crate::restrictions::{hsis_access, mtr};

    struct Setup {
        idx: LatentIndex,
        s: RestrictionSet,
        s1: RestrictionSet,
        base: IdentificationProblem,
    }

    fn setup(seed: u64, use_ate: bool) -> Setup {
        let alts = AlternativeSet::new(["n", "a", "h"], "n").unwrap();
        let idx = LatentIndex::new(alts.clone(), OutcomeGrid::integers(2).unwrap()).unwrap();
        let s = RestrictionSet::new().with(hsis_access(&alts, "h").unwrap()).unwrap();
        let s1 = RestrictionSet::new().with(mtr(&alts)).unwrap();
        let both = s.union(&s1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pmf = random_pmf(&prune(&both, &idx), 8, &mut rng).unwrap();
        let model = SyntheticModel::new(&idx, &both, pmf, 0.5, vec![1]).unwrap();
        let cells = Arc::new(CellMap::new(&idx, prune(&s, &idx)).unwrap());
        let nh = ChoiceSet::from_labels(&alts, &["n", "h"]).unwrap();
        let n = ChoiceSet::from_labels(&alts, &["n"]).unwrap();
        let param = if use_ate {
            average_access_effect(&idx, nh, n).unwrap()
        } else {
            participation_proportion(&idx, "h", n).unwrap()
        };
        let base = IdentificationProblem::new(cells, model.implied_cells(&idx).unwrap(), param).unwrap();
        Setup { idx, s, s1, base }
    }

    #[test]
    fn verbatim_counts() {
        let st = setup(1, true);
        let mp = MixtureProblem::new(&st.idx, st.base.clone(), &st.s, &st.s1, 0.9).unwrap();
        let lp = assemble_mixture_verbatim(&mp, &st.idx, &st.s1).unwrap();
        let n = st.base.cell_map().n_alive();
        assert_eq!(lp.n_vars(), 1 + 3 * n);
        let groups: std::collections::BTreeSet<usize> =
            st.base.cell_map().support().indices().iter().map(|&w| w / st.idx.n_profiles()).collect();
        let cells = st.idx.n_cells();
        assert_eq!(lp.constraints.len(), 1 + cells + 1 + 2 + 1 + n + groups.len());
    }

    #[test]
    fn reduced_program_matches_verbatim() {
        for seed in 0..3 {
            let st = setup(seed, true);
            for lambda in [0.3, 0.9] {
                let mp = MixtureProblem::new(&st.idx, st.base.clone(), &st.s, &st.s1, lambda).unwrap();
                let lp = assemble_mixture_verbatim(&mp, &st.idx, &st.s1).unwrap();
                let lo = robust_solve(&lp, 0, Sense::Minimize, &MicroLp).unwrap().0.objective;
                let hi = robust_solve(&lp, 0, Sense::Maximize, &MicroLp).unwrap().0.objective;
                let iv = solve_mixture_system(&mp, &MicroLp).unwrap();
                assert!((iv.lo - lo).abs() < 1e-8 && (iv.hi - hi).abs() < 1e-8, "{iv:?} vs ({lo},{hi})");
            }
        }
    }

    #[test]
    fn endpoints() {
        let st = setup(4, true);
        let plain = solve_bounds(&st.base, &MicroLp).unwrap();
        let zero = MixtureProblem::new(&st.idx, st.base.clone(), &st.s, &st.s1, 0.0).unwrap();
        let iv0 = solve_mixture_system(&zero, &MicroLp).unwrap();
        assert!((iv0.lo - plain.lo).abs() < 1e-8 && (iv0.hi - plain.hi).abs() < 1e-8);
        let one = MixtureProblem::new(&st.idx, st.base.clone(), &st.s, &st.s1, 1.0).unwrap();
        let system = solve_mixture_system(&one, &MicroLp).unwrap();
        let shortcut = solve_sensitivity(&one, &MicroLp).unwrap();
        assert!((system.lo - shortcut.lo).abs() < 1e-8 && (system.hi - shortcut.hi).abs() < 1e-8);
        assert!(shortcut.width() <= plain.width() + 1e-8);
    }

    #[test]
    fn nesting_over_lambda() {
        let st = setup(5, true);
        let rows = sensitivity_scan(&st.idx, &st.base, &st.s, &st.s1, &[0.0, 0.875, 0.9, 0.925, 0.95, 1.0], &MicroLp)
            .unwrap();
        assert!(rows[0].lambda_zero_gap.unwrap() < 1e-8);
        for pair in rows.windows(2) {
            let (wide, narrow) = (pair[0].interval.as_ref().unwrap(), pair[1].interval.as_ref().unwrap());
            assert!(wide.lo <= narrow.lo + 1e-8 && narrow.hi <= wide.hi + 1e-8, "{wide:?} {narrow:?}");
        }
    }

    #[test]
    fn rejects_overlapping_restrictions() {
        let st = setup(6, false);
        assert!(MixtureProblem::new(&st.idx, st.base.clone(), &st.s, &st.s, 0.5).is_err());
        assert!(MixtureProblem::new(&st.idx, st.base.clone(), &st.s, &st.s1, 1.5).is_err());
    }
}
