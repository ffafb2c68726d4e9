//! Property tests over randomly drawn models and samples.

use std::sync::Arc;

use proptest::prelude::*;

use latent_bounds::empirical::{draw_rng, fit_discretizer};
use latent_bounds::inference::critical_value;
use latent_bounds::oracle::{random_pmf, SyntheticModel};
use latent_bounds::parameters::{average_access_effect, custom_linear, participation_proportion};
use latent_bounds::restrictions::{hsis_access, mtr, roy_pair, unaltered_alternative};
use latent_bounds::sensitivity::solve_sensitivity;
use latent_bounds::{
    prune, solve_bounds, AlternativeSet, CellMap, ChoiceSet, EmpiricalDistribution, IdentificationProblem,
    LatentIndex, MicroLp, MixtureProblem, OutcomeGrid, RestrictionSet,
};

const TOL: f64 = 1e-7;

struct World {
    idx: LatentIndex,
    access: RestrictionSet,
    full: RestrictionSet,
}

/// Alternatives n, a, h on an `m`-point grid. `full` adds UA and MTR.
fn world(m: usize) -> World {
    let alts = AlternativeSet::new(["n", "a", "h"], "n").unwrap();
    let idx = LatentIndex::new(alts.clone(), OutcomeGrid::integers(m).unwrap()).unwrap();
    let access = RestrictionSet::new().with(hsis_access(&alts, "h").unwrap()).unwrap();
    let full = access
        .clone()
        .with(unaltered_alternative(&alts, "a").unwrap())
        .and_then(|s| s.with(mtr(&alts)))
        .unwrap();
    World { idx, access, full }
}

fn cells(idx: &LatentIndex, set: &RestrictionSet) -> Arc<CellMap> {
    Arc::new(CellMap::new(idx, prune(set, idx)).unwrap())
}

/// Exact population cells of a sparse model satisfying `set`.
fn model(idx: &LatentIndex, set: &RestrictionSet, k: usize, seed: u64) -> (Vec<(usize, f64)>, EmpiricalDistribution) {
    let support = prune(set, idx);
    let pmf = random_pmf(&support, k, &mut draw_rng(seed, 0)).unwrap();
    let m = SyntheticModel::new(idx, set, pmf.clone(), 0.5, vec![1]).unwrap();
    (pmf, m.implied_cells(idx).unwrap())
}

fn menu(idx: &LatentIndex, labels: &[&str]) -> ChoiceSet {
    ChoiceSet::from_labels(idx.alternatives(), labels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn bounds_contain_the_truth(seed in any::<u64>(), k in 1usize..12, m in 2usize..4) {
        let w = world(m);
        let (pmf, data) = model(&w.idx, &w.full, k, seed);
        let params = [
            participation_proportion(&w.idx, "h", menu(&w.idx, &["n"])).unwrap(),
            average_access_effect(&w.idx, menu(&w.idx, &["n", "h"]), menu(&w.idx, &["n"])).unwrap(),
        ];
        for set in [&w.access, &w.full] {
            let cm = cells(&w.idx, set);
            for p in &params {
                let truth = p.evaluate(&pmf).unwrap();
                let iv = solve_bounds(&IdentificationProblem::new(cm.clone(), data.clone(), p.clone()).unwrap(), &MicroLp).unwrap();
                prop_assert!(iv.contains(truth, TOL), "{}: {truth} outside [{}, {}]", p.name(), iv.lo, iv.hi);
            }
        }
    }

    #[test]
    fn more_restrictions_never_widen(seed in any::<u64>(), k in 1usize..12) {
        let w = world(2);
        let (_, data) = model(&w.idx, &w.full, k, seed);
        let p = average_access_effect(&w.idx, menu(&w.idx, &["n", "a", "h"]), menu(&w.idx, &["n", "a"])).unwrap();
        let wide = solve_bounds(&IdentificationProblem::new(cells(&w.idx, &w.access), data.clone(), p.clone()).unwrap(), &MicroLp).unwrap();
        let narrow = solve_bounds(&IdentificationProblem::new(cells(&w.idx, &w.full), data, p).unwrap(), &MicroLp).unwrap();
        prop_assert!(narrow.lo >= wide.lo - TOL && narrow.hi <= wide.hi + TOL);
    }

    #[test]
    fn negating_the_parameter_mirrors_the_interval(seed in any::<u64>(), k in 1usize..10) {
        let w = world(2);
        let (_, data) = model(&w.idx, &w.full, k, seed);
        let cm = cells(&w.idx, &w.access);
        let p = average_access_effect(&w.idx, menu(&w.idx, &["n", "h"]), menu(&w.idx, &["n"])).unwrap();
        let neg = custom_linear("neg", p.coefficients().iter().map(|&(i, a)| (i, -a)).collect(), &w.idx).unwrap();
        let a = solve_bounds(&IdentificationProblem::new(cm.clone(), data.clone(), p).unwrap(), &MicroLp).unwrap();
        let b = solve_bounds(&IdentificationProblem::new(cm, data, neg).unwrap(), &MicroLp).unwrap();
        prop_assert!((a.lo + b.hi).abs() < TOL && (a.hi + b.lo).abs() < TOL);
    }

    #[test]
    fn proportions_stay_in_the_unit_interval(seed in any::<u64>(), k in 1usize..12) {
        let w = world(2);
        let (_, data) = model(&w.idx, &w.access, k, seed);
        let p = participation_proportion(&w.idx, "h", menu(&w.idx, &["n", "a"])).unwrap();
        let iv = solve_bounds(&IdentificationProblem::new(cells(&w.idx, &w.access), data, p).unwrap(), &MicroLp).unwrap();
        prop_assert!(iv.lo >= -TOL && iv.hi <= 1.0 + TOL && iv.lo <= iv.hi + TOL);
    }

    #[test]
    fn sensitivity_intervals_shrink_with_lambda(seed in any::<u64>(), k in 1usize..10) {
        let w = world(2);
        let alts = w.idx.alternatives().clone();
        let s = w.access.clone().with(unaltered_alternative(&alts, "a").unwrap()).unwrap();
        let s1 = RestrictionSet::new().with(roy_pair(&alts, "n", "h").unwrap()).unwrap();
        let (_, data) = model(&w.idx, &s.union(&s1).unwrap(), k, seed);
        let p = average_access_effect(&w.idx, menu(&w.idx, &["n", "h"]), menu(&w.idx, &["n"])).unwrap();
        let base = IdentificationProblem::new(cells(&w.idx, &s), data, p).unwrap();
        let mut previous: Option<(f64, f64)> = None;
        for lambda in [0.0, 0.3, 0.6, 0.9, 1.0] {
            let mp = MixtureProblem::new(&w.idx, base.clone(), &s, &s1, lambda).unwrap();
            let iv = solve_sensitivity(&mp, &MicroLp).unwrap();
            if let Some((lo, hi)) = previous {
                prop_assert!(iv.lo >= lo - TOL && iv.hi <= hi + TOL, "lambda {lambda}");
            }
            previous = Some((iv.lo, iv.hi));
        }
    }

    #[test]
    fn latent_index_round_trips(m in 1usize..5, raw in any::<u64>()) {
        let w = world(m);
        let i = (raw % w.idx.size() as u64) as usize;
        let p = w.idx.point_at(i).unwrap();
        prop_assert_eq!(w.idx.index_of(&p).unwrap(), i);
    }

    #[test]
    fn discretized_bins_are_monotone(mut ys in prop::collection::vec(-50.0f64..50.0, 20..80), m in 1usize..6) {
        if let Ok(map) = fit_discretizer(&ys, m) {
            ys.sort_by(f64::total_cmp);
            let bins: Vec<usize> = ys.iter().map(|&y| map.bin(y)).collect();
            prop_assert!(bins.windows(2).all(|b| b[0] <= b[1]));
            prop_assert!(bins.iter().all(|&b| b < m));
            // A repeated cut leaves an empty bin whose midpoint maps onward.
            if map.cuts().windows(2).all(|c| c[0] < c[1]) {
                for (k, &mid) in map.midpoints().iter().enumerate() {
                    prop_assert_eq!(map.bin(mid), k);
                }
            }
        }
    }

    #[test]
    fn critical_values_fall_as_alpha_grows(stats in prop::collection::vec(0.0f64..10.0, 1..60), a in 0.01f64..0.5) {
        let lo = critical_value(&stats, a);
        let hi = critical_value(&stats, (a * 1.5).min(0.99));
        prop_assert!(hi <= lo);
        prop_assert!(stats.contains(&lo));
        let share_above = stats.iter().filter(|&&s| s > lo).count() as f64 / stats.len() as f64;
        prop_assert!(share_above <= a + 1e-9);
    }
}
