//! Target parameters written as a ratio of two linear functionals of the
//! latent distribution: sum of a_num(w) Q(w) over sum of Q(w) on a
//! denominator set.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::latent_space::{ChoiceSet, LatentIndex};

/// Denominator index set. `Whole` stands for every latent point and makes
/// the parameter linear.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Denominator {
    Whole,
    Subset(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSpec {
    name: String,
    coeffs: Vec<(usize, f64)>,
    den: Denominator,
}

impl ParameterSpec {
    /// Zero coefficients are dropped; indices must be unique.
    pub fn new(name: impl Into<String>, coeffs: Vec<(usize, f64)>, den: Denominator) -> Result<Self> {
        let name = name.into();
        let mut coeffs: Vec<(usize, f64)> = coeffs.into_iter().filter(|&(_, a)| a != 0.0).collect();
        if let Some(&(i, a)) = coeffs.iter().find(|(_, a)| !a.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name}: coefficient {a} at index {i}")));
        }
        coeffs.sort_by_key(|&(i, _)| i);
        if coeffs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter(format!("{name}: repeated coefficient index")));
        }
        let den = match den {
            Denominator::Whole => Denominator::Whole,
            Denominator::Subset(mut s) => {
                s.sort_unstable();
                s.dedup();
                if s.is_empty() {
                    return Err(Error::InvalidParameter(format!("{name}: empty denominator set")));
                }
                Denominator::Subset(s)
            }
        };
        Ok(Self { name, coeffs, den })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_linear(&self) -> bool {
        self.den == Denominator::Whole
    }

    pub fn denominator(&self) -> &Denominator {
        &self.den
    }

    /// Non-zero numerator coefficients sorted by latent index.
    pub fn coefficients(&self) -> &[(usize, f64)] {
        &self.coeffs
    }

    pub fn coeff(&self, index: usize) -> f64 {
        match self.coeffs.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(k) => self.coeffs[k].1,
            Err(_) => 0.0,
        }
    }

    pub fn in_denominator(&self, index: usize) -> bool {
        match &self.den {
            Denominator::Whole => true,
            Denominator::Subset(s) => s.binary_search(&index).is_ok(),
        }
    }

    /// The numerator alone, as a linear parameter.
    pub fn numerator(&self) -> ParameterSpec {
        Self { name: format!("{}_num", self.name), coeffs: self.coeffs.clone(), den: Denominator::Whole }
    }

    /// Probability of the denominator set, as a linear parameter.
    pub fn denominator_mass(&self) -> ParameterSpec {
        let coeffs = match &self.den {
            Denominator::Whole => Vec::new(),
            Denominator::Subset(s) => s.iter().map(|&i| (i, 1.0)).collect(),
        };
        Self { name: format!("{}_den", self.name), coeffs, den: Denominator::Whole }
    }

    /// Value at a distribution given as (latent index, mass) pairs.
    pub fn evaluate(&self, pmf: &[(usize, f64)]) -> Result<f64> {
        let num: f64 = pmf.iter().map(|&(i, q)| q * self.coeff(i)).sum();
        let den: f64 = pmf.iter().filter(|&&(i, _)| self.in_denominator(i)).map(|&(_, q)| q).sum();
        if den <= 0.0 {
            return Err(Error::InvalidParameter(format!("{}: denominator has no mass", self.name)));
        }
        Ok(num / den)
    }
}

/// Share of types who pick `target` once it is added to `baseline`.
pub fn participation_proportion(idx: &LatentIndex, target: &str, baseline: ChoiceSet) -> Result<ParameterSpec> {
    let alts = idx.alternatives();
    let t = alts.index_of(target)?;
    if baseline.contains(t) {
        return Err(Error::InvalidParameter(format!("`{target}` is already in the baseline set")));
    }
    let offered = baseline.mask() | (1 << t);
    let picks: Vec<bool> = idx.preferences().iter().map(|u| u.choose_mask(offered) == Ok(t)).collect();
    let coeffs = (0..idx.size()).filter(|&i| picks[idx.pref_of(i)]).map(|i| (i, 1.0)).collect();
    let name = format!("pp_{}|{}", target, set_label(idx, baseline));
    ParameterSpec::new(name, coeffs, Denominator::Whole)
}

fn check_nested(with: ChoiceSet, without: ChoiceSet) -> Result<()> {
    if !without.is_subset_of(with) || with == without {
        return Err(Error::NonNested(format!(
            "{:#b} must be a proper subset of {:#b}",
            without.mask(),
            with.mask()
        )));
    }
    Ok(())
}

fn effect_coeffs(idx: &LatentIndex, with: ChoiceSet, without: ChoiceSet) -> Vec<(usize, f64)> {
    let grid = idx.grid();
    let moves: Vec<(usize, usize)> = idx.preferences().iter().map(|u| (u.choose(with), u.choose(without))).collect();
    (0..idx.size())
        .filter_map(|i| {
            let (dw, dn) = moves[idx.pref_of(i)];
            if dw == dn {
                return None;
            }
            let effect = grid.value(idx.outcome_of(i, dw)) - grid.value(idx.outcome_of(i, dn));
            (effect != 0.0).then_some((i, effect))
        })
        .collect()
}

/// Mean outcome change from enlarging the choice set from `without` to `with`.
pub fn average_access_effect(idx: &LatentIndex, with: ChoiceSet, without: ChoiceSet) -> Result<ParameterSpec> {
    check_nested(with, without)?;
    let name = format!("ate_{}|{}", set_label(idx, with), set_label(idx, without));
    ParameterSpec::new(name, effect_coeffs(idx, with, without), Denominator::Whole)
}

/// The same effect averaged over the types who switch into `target`.
pub fn average_effect_on_participants(
    idx: &LatentIndex,
    with: ChoiceSet,
    without: ChoiceSet,
    target: &str,
) -> Result<ParameterSpec> {
    check_nested(with, without)?;
    let t = idx.alternatives().index_of(target)?;
    if !with.contains(t) || without.contains(t) {
        return Err(Error::InvalidParameter(format!("`{target}` must be one of the added alternatives")));
    }
    let switchers: Vec<bool> =
        idx.preferences().iter().map(|u| u.choose(with) == t && u.choose(without) != t).collect();
    if !switchers.iter().any(|&s| s) {
        return Err(Error::InvalidParameter(format!("no type switches into `{target}`")));
    }
    let den = (0..idx.size()).filter(|&i| switchers[idx.pref_of(i)]).collect();
    let name = format!("atop_{}|{}", set_label(idx, with), set_label(idx, without));
    ParameterSpec::new(name, effect_coeffs(idx, with, without), Denominator::Subset(den))
}

/// A user-supplied linear functional.
pub fn custom_linear(name: &str, coeffs: Vec<(usize, f64)>, idx: &LatentIndex) -> Result<ParameterSpec> {
    if let Some(&(i, _)) = coeffs.iter().find(|&&(i, _)| i >= idx.size()) {
        return Err(Error::IndexOutOfRange { index: i, size: idx.size() });
    }
    ParameterSpec::new(name, coeffs, Denominator::Whole)
}

fn set_label(idx: &LatentIndex, c: ChoiceSet) -> String {
    c.members().map(|d| idx.alternatives().label(d)).collect::<Vec<_>>().join("")
}
