//! The finite latent space of (potential outcomes, preference ranking,
//! choice set under each instrument value).
//!
//! Every latent point has a mixed-radix index. Outcome indices vary fastest
//! (one digit per alternative, in alternative order), followed by the
//! preference index, then the z=0 choice set, then the z=1 choice set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of alternatives. |D|! grows quickly and the
/// latent space with it.
pub const MAX_ALTERNATIVES: usize = 5;

/// Ordered, labelled alternatives with a distinguished base alternative that
/// belongs to every choice set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternativeSet {
    labels: Vec<String>,
    base: usize,
}

impl AlternativeSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>, base: &str) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidAlternatives("no alternatives".into()));
        }
        if labels.len() > MAX_ALTERNATIVES {
            return Err(Error::InvalidAlternatives(format!(
                "{} alternatives exceeds the maximum of {MAX_ALTERNATIVES}",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::InvalidAlternatives(format!("bad label `{l}`")));
            }
            if labels[..i].contains(l) {
                return Err(Error::InvalidAlternatives(format!("duplicate label `{l}`")));
            }
        }
        let base = labels
            .iter()
            .position(|l| l == base)
            .ok_or_else(|| Error::UnknownAlternative(base.to_string()))?;
        Ok(Self { labels, base })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, d: usize) -> &str {
        &self.labels[d]
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownAlternative(label.to_string()))
    }

    /// Bitmask with every alternative set.
    pub fn full_mask(&self) -> u32 {
        (1u32 << self.len()) - 1
    }
}

/// A strict ranking of the alternatives, best first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PreferenceType {
    ranking: Vec<usize>,
    position: Vec<usize>,
}

impl PreferenceType {
    pub fn new(ranking: Vec<usize>) -> Result<Self> {
        let n = ranking.len();
        let mut position = vec![usize::MAX; n];
        for (pos, &d) in ranking.iter().enumerate() {
            if d >= n || position[d] != usize::MAX {
                return Err(Error::InvalidPoint(format!("{ranking:?} is not a permutation")));
            }
            position[d] = pos;
        }
        Ok(Self { ranking, position })
    }

    /// Alternatives from most to least preferred.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// Rank of `d`, 0 being the favourite.
    pub fn position(&self, d: usize) -> usize {
        self.position[d]
    }

    /// Strict preference of `a` over `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.position[a] < self.position[b]
    }

    /// Favourite member of a choice set. Choice sets are never empty.
    pub fn choose(&self, c: ChoiceSet) -> usize {
        self.choose_mask(c.0).expect("choice sets always contain the base alternative")
    }

    /// Favourite member of an arbitrary subset given as a bitmask.
    pub fn choose_mask(&self, mask: u32) -> Result<usize> {
        self.ranking
            .iter()
            .copied()
            .find(|&d| mask & (1 << d) != 0)
            .ok_or(Error::EmptyChoiceSet)
    }

    pub fn describe(&self, alts: &AlternativeSet) -> String {
        self.ranking
            .iter()
            .map(|&d| alts.label(d))
            .collect::<Vec<_>>()
            .join(">")
    }
}

/// The alternative `u` picks from the subset `mask`.
pub fn choice(u: &PreferenceType, mask: u32) -> Result<usize> {
    u.choose_mask(mask)
}

/// All |D|! rankings in lexicographic order of their ranking vectors.
pub fn enumerate_preferences(n: usize) -> Vec<PreferenceType> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<PreferenceType>) {
        if current.len() == n {
            out.push(PreferenceType::new(current.clone()).expect("permutation"));
            return;
        }
        for d in 0..n {
            if !used[d] {
                used[d] = true;
                current.push(d);
                rec(n, current, used, out);
                current.pop();
                used[d] = false;
            }
        }
    }
    rec(n, &mut current, &mut used, &mut out);
    out
}

/// A subset of alternatives that always contains the base alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChoiceSet(u32);

impl ChoiceSet {
    /// Validates `mask`: it must contain the base and no bits beyond |D|.
    pub fn new(alts: &AlternativeSet, mask: u32) -> Result<Self> {
        if mask & !alts.full_mask() != 0 {
            return Err(Error::InvalidChoiceSet {
                mask,
                reason: format!("bits beyond the {} alternatives", alts.len()),
            });
        }
        if mask & (1 << alts.base()) == 0 {
            return Err(Error::InvalidChoiceSet {
                mask,
                reason: format!("base alternative `{}` missing", alts.label(alts.base())),
            });
        }
        Ok(Self(mask))
    }

    pub fn from_labels(alts: &AlternativeSet, labels: &[&str]) -> Result<Self> {
        let mut mask = 0u32;
        for l in labels {
            mask |= 1 << alts.index_of(l)?;
        }
        Self::new(alts, mask)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn contains(self, d: usize) -> bool {
        self.0 & (1 << d) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32usize).filter(move |&d| self.0 & (1 << d) != 0)
    }

    pub fn is_subset_of(self, other: ChoiceSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn describe(self, alts: &AlternativeSet) -> String {
        let names: Vec<&str> = self.members().map(|d| alts.label(d)).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// Every admissible choice set in ascending bitmask order.
pub fn enumerate_choice_sets(alts: &AlternativeSet) -> Vec<ChoiceSet> {
    (0..=alts.full_mask())
        .filter(|m| m & (1 << alts.base()) != 0)
        .map(ChoiceSet)
        .collect()
}

/// Strictly increasing, finite support points for the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeGrid {
    values: Vec<f64>,
}

impl OutcomeGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid value".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// The grid 0, 1, ..., m-1.
    pub fn integers(m: usize) -> Result<Self> {
        Self::new((0..m).map(|v| v as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of a value that lies exactly on the grid.
    pub fn index_of(&self, v: f64) -> Option<usize> {
        self.values.iter().position(|&g| g == v)
    }
}

/// One latent type: an outcome index per alternative, a preference index,
/// and the choice sets under z=0 and z=1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatentPoint {
    pub outcomes: Vec<usize>,
    pub pref: usize,
    pub c0: ChoiceSet,
    pub c1: ChoiceSet,
}

impl LatentPoint {
    pub fn choice_set(&self, z: u8) -> ChoiceSet {
        if z == 0 {
            self.c0
        } else {
            self.c1
        }
    }
}

/// Bijection between latent points and `0..size`, plus the observable cell
/// layout (z, d, y) used everywhere else.
#[derive(Debug, Clone)]
pub struct LatentIndex {
    alts: AlternativeSet,
    grid: OutcomeGrid,
    prefs: Vec<PreferenceType>,
    choice_sets: Vec<ChoiceSet>,
    set_position: Vec<usize>,
    n_profiles: usize,
    size: usize,
}

impl LatentIndex {
    pub fn new(alts: AlternativeSet, grid: OutcomeGrid) -> Result<Self> {
        let k = alts.len();
        let m = grid.len();
        let prefs = enumerate_preferences(k);
        let choice_sets = enumerate_choice_sets(&alts);
        let mut set_position = vec![usize::MAX; 1 << k];
        for (i, c) in choice_sets.iter().enumerate() {
            set_position[c.mask() as usize] = i;
        }
        let overflow = || Error::InvalidGrid(format!("latent space with M={m}, |D|={k} is too large"));
        let n_profiles = (0..k).try_fold(1usize, |acc, _| acc.checked_mul(m)).ok_or_else(overflow)?;
        let size = n_profiles
            .checked_mul(prefs.len())
            .and_then(|s| s.checked_mul(choice_sets.len()))
            .and_then(|s| s.checked_mul(choice_sets.len()))
            .filter(|&s| s <= u32::MAX as usize)
            .ok_or_else(overflow)?;
        Ok(Self { alts, grid, prefs, choice_sets, set_position, n_profiles, size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn alternatives(&self) -> &AlternativeSet {
        &self.alts
    }

    pub fn grid(&self) -> &OutcomeGrid {
        &self.grid
    }

    pub fn preferences(&self) -> &[PreferenceType] {
        &self.prefs
    }

    pub fn preference(&self, i: usize) -> &PreferenceType {
        &self.prefs[i]
    }

    pub fn choice_sets(&self) -> &[ChoiceSet] {
        &self.choice_sets
    }

    /// Number of outcome profiles M^|D|.
    pub fn n_profiles(&self) -> usize {
        self.n_profiles
    }

    pub fn index_of(&self, p: &LatentPoint) -> Result<usize> {
        let k = self.alts.len();
        let m = self.grid.len();
        if p.outcomes.len() != k {
            return Err(Error::InvalidPoint(format!("expected {k} outcomes, got {}", p.outcomes.len())));
        }
        if let Some(&bad) = p.outcomes.iter().find(|&&o| o >= m) {
            return Err(Error::InvalidPoint(format!("outcome index {bad} exceeds grid size {m}")));
        }
        if p.pref >= self.prefs.len() {
            return Err(Error::InvalidPoint(format!("preference index {}", p.pref)));
        }
        let pos = |c: ChoiceSet| {
            self.set_position
                .get(c.mask() as usize)
                .copied()
                .filter(|&i| i != usize::MAX)
                .ok_or_else(|| Error::InvalidPoint(format!("choice set {:#b}", c.mask())))
        };
        let (c0, c1) = (pos(p.c0)?, pos(p.c1)?);
        let mut profile = 0usize;
        for &o in p.outcomes.iter().rev() {
            profile = profile * m + o;
        }
        let nc = self.choice_sets.len();
        Ok(profile + self.n_profiles * (p.pref + self.prefs.len() * (c0 + nc * c1)))
    }

    pub fn point_at(&self, index: usize) -> Result<LatentPoint> {
        if index >= self.size {
            return Err(Error::IndexOutOfRange { index, size: self.size });
        }
        let m = self.grid.len();
        let mut rest = index;
        let mut outcomes = Vec::with_capacity(self.alts.len());
        for _ in 0..self.alts.len() {
            outcomes.push(rest % m);
            rest /= m;
        }
        let pref = rest % self.prefs.len();
        rest /= self.prefs.len();
        let nc = self.choice_sets.len();
        let c0 = self.choice_sets[rest % nc];
        let c1 = self.choice_sets[rest / nc];
        Ok(LatentPoint { outcomes, pref, c0, c1 })
    }

    /// Preference index of the point at `index`, without decoding the rest.
    pub fn pref_of(&self, index: usize) -> usize {
        (index / self.n_profiles) % self.prefs.len()
    }

    /// Outcome index of alternative `d` at latent `index`.
    pub fn outcome_of(&self, index: usize, d: usize) -> usize {
        let m = self.grid.len();
        let mut rest = index;
        for _ in 0..d {
            rest /= m;
        }
        rest % m
    }

    /// Alternative chosen and its outcome index when the instrument is `z`.
    pub fn realized(&self, p: &LatentPoint, z: u8) -> (usize, usize) {
        let d = self.prefs[p.pref].choose(p.choice_set(z));
        (d, p.outcomes[d])
    }

    /// Number of observable cells (z, d, y): 2 * |D| * M.
    pub fn n_cells(&self) -> usize {
        2 * self.alts.len() * self.grid.len()
    }

    /// Row-major position of cell (z, d, y), z slowest.
    pub fn cell_id(&self, z: u8, d: usize, y: usize) -> usize {
        let per_arm = self.alts.len() * self.grid.len();
        z as usize * per_arm + d * self.grid.len() + y
    }

    /// Inverse of [`LatentIndex::cell_id`].
    pub fn cell_at(&self, id: usize) -> (u8, usize, usize) {
        let m = self.grid.len();
        let per_arm = self.alts.len() * m;
        ((id / per_arm) as u8, (id % per_arm) / m, id % m)
    }

    /// Cell the point lands in under instrument value `z`.
    pub fn cell_of(&self, p: &LatentPoint, z: u8) -> usize {
        let (d, y) = self.realized(p, z);
        self.cell_id(z, d, y)
    }

    pub fn describe_point(&self, p: &LatentPoint) -> String {
        let ys: Vec<String> = p
            .outcomes
            .iter()
            .enumerate()
            .map(|(d, &o)| format!("y({})={}", self.alts.label(d), self.grid.value(o)))
            .collect();
        format!(
            "[{}; u={}; c0={}; c1={}]",
            ys.join(","),
            self.prefs[p.pref].describe(&self.alts),
            p.c0.describe(&self.alts),
            p.c1.describe(&self.alts)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn hsis_alts() -> AlternativeSet {
        AlternativeSet::new(["n", "a", "h"], "n").unwrap()
    }

    #[test]
    fn hsis_space_size() {
        let idx = LatentIndex::new(hsis_alts(), OutcomeGrid::integers(10).unwrap()).unwrap();
        assert_eq!(idx.size(), 1000 * 6 * 16);
        assert_eq!(idx.choice_sets().len(), 4);
        assert_eq!(idx.n_cells(), 60);
    }

    #[test]
    fn preferences_are_lexicographic() {
        let prefs = enumerate_preferences(3);
        let rankings: Vec<Vec<usize>> = prefs.iter().map(|p| p.ranking().to_vec()).collect();
        assert_eq!(
            rankings,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
    }

    #[test]
    fn choice_picks_favourite_member() {
        let alts = hsis_alts();
        // h > a > n
        let u = PreferenceType::new(vec![2, 1, 0]).unwrap();
        let nh = ChoiceSet::from_labels(&alts, &["n", "h"]).unwrap();
        let na = ChoiceSet::from_labels(&alts, &["n", "a"]).unwrap();
        assert_eq!(u.choose(nh), 2);
        assert_eq!(u.choose(na), 1);
        assert_eq!(choice(&u, 0), Err(Error::EmptyChoiceSet));
    }

    #[test]
    fn choice_set_requires_base() {
        let alts = hsis_alts();
        assert!(ChoiceSet::from_labels(&alts, &["h"]).is_err());
        assert!(ChoiceSet::new(&alts, 0b1001).is_err());
        assert_eq!(ChoiceSet::new(&alts, 0b101).unwrap().len(), 2);
    }

    #[test]
    fn index_layout_puts_outcomes_fastest() {
        let idx = LatentIndex::new(hsis_alts(), OutcomeGrid::integers(10).unwrap()).unwrap();
        let p = idx.point_at(1).unwrap();
        assert_eq!(p.outcomes, vec![1, 0, 0]);
        let p = idx.point_at(10).unwrap();
        assert_eq!(p.outcomes, vec![0, 1, 0]);
        let p = idx.point_at(1000).unwrap();
        assert_eq!((p.pref, p.c0.mask(), p.c1.mask()), (1, 0b001, 0b001));
        let p = idx.point_at(6000).unwrap();
        assert_eq!((p.pref, p.c0.mask(), p.c1.mask()), (0, 0b011, 0b001));
        let p = idx.point_at(24000).unwrap();
        assert_eq!((p.pref, p.c0.mask(), p.c1.mask()), (0, 0b001, 0b011));
        assert!(idx.point_at(idx.size()).is_err());
    }

    #[test]
    fn cells_round_trip() {
        let idx = LatentIndex::new(hsis_alts(), OutcomeGrid::integers(4).unwrap()).unwrap();
        for id in 0..idx.n_cells() {
            let (z, d, y) = idx.cell_at(id);
            assert_eq!(idx.cell_id(z, d, y), id);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(AlternativeSet::new(["a", "b", "c", "d", "e", "f"], "a").is_err());
        assert!(AlternativeSet::new(["a", "a"], "a").is_err());
        assert!(AlternativeSet::new(["a", "b"], "z").is_err());
        assert!(OutcomeGrid::new(vec![1.0, 1.0]).is_err());
        assert!(OutcomeGrid::new(vec![]).is_err());
        assert!(OutcomeGrid::new(vec![0.0, f64::NAN]).is_err());
    }
}
