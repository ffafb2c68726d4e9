//! Shared fixtures for the benchmarks: a three-alternative access design
//! with population cells from a random sparse model.

use std::sync::Arc;

use latent_bounds::empirical::draw_rng;
use latent_bounds::oracle::{random_pmf, SyntheticModel};
use latent_bounds::parameters::{average_access_effect, average_effect_on_participants, participation_proportion};
use latent_bounds::restrictions::{hsis_access, mtr, unaltered_alternative};
use latent_bounds::{
    prune, AlternativeSet, CellMap, CellSample, ChoiceSet, EmpiricalDistribution, LatentIndex, OutcomeGrid,
    ParameterSpec, RestrictionSet,
};

pub struct Fixture {
    pub idx: LatentIndex,
    pub restrictions: RestrictionSet,
    pub cells: Arc<CellMap>,
    pub data: EmpiricalDistribution,
    pub pp: ParameterSpec,
    pub ate: ParameterSpec,
    pub atop: ParameterSpec,
}

fn menu(alts: &AlternativeSet, labels: &[&str]) -> ChoiceSet {
    ChoiceSet::from_labels(alts, labels).expect("valid menu")
}

/// Alternatives n, a, h on an `m`-point outcome grid under access, UA and
/// MTR; the data are the exact cells of a 20-point model.
pub fn hsis(m: usize, seed: u64) -> Fixture {
    let alts = AlternativeSet::new(["n", "a", "h"], "n").unwrap();
    let idx = LatentIndex::new(alts.clone(), OutcomeGrid::integers(m).unwrap()).unwrap();
    let restrictions = RestrictionSet::new()
        .with(hsis_access(&alts, "h").unwrap())
        .and_then(|s| s.with(unaltered_alternative(&alts, "a")?))
        .and_then(|s| s.with(mtr(&alts)))
        .unwrap();
    let cells = Arc::new(CellMap::new(&idx, prune(&restrictions, &idx)).unwrap());
    let pmf = random_pmf(cells.support(), 20, &mut draw_rng(seed, 0)).unwrap();
    let model = SyntheticModel::new(&idx, &restrictions, pmf, 0.5, vec![1]).unwrap();
    let data = model.implied_cells(&idx).unwrap();
    let pp = participation_proportion(&idx, "h", menu(&alts, &["n"])).unwrap();
    let ate = average_access_effect(&idx, menu(&alts, &["n", "h"]), menu(&alts, &["n"])).unwrap();
    let atop = average_effect_on_participants(&idx, menu(&alts, &["n", "h"]), menu(&alts, &["n"]), "h").unwrap();
    Fixture { idx, restrictions, cells, data, pp, ate, atop }
}

/// A clustered sample of `clusters` pairs drawn from the same kind of
/// model, on the fixture's grid.
pub fn sample(f: &Fixture, clusters: usize, seed: u64) -> CellSample {
    let pmf = random_pmf(f.cells.support(), 20, &mut draw_rng(seed, 0)).unwrap();
    let model = SyntheticModel::new(&f.idx, &f.restrictions, pmf, 0.5, vec![2; clusters]).unwrap();
    let s = model.generate(&f.idx, seed).unwrap();
    CellSample::new(&s, f.idx.alternatives().len(), f.idx.grid()).unwrap()
}
