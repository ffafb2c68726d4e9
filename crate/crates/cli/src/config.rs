//! Run configuration: a TOML document, resolved against the alternatives
//! of the chosen experiment template into restriction sets and parameters.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use latent_bounds::parameters::{
    average_access_effect, average_effect_on_participants, custom_linear, participation_proportion,
};
use latent_bounds::restrictions::{
    hsis_access, mfe_access, mtr, ohie_access, parse_restriction, roy, roy_pair, unaltered_alternative,
};
use latent_bounds::{AlternativeSet, ChoiceSet, LatentIndex, ParameterSpec, RestrictionSet, TauRule, TestConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Template {
    #[default]
    Hsis,
    Ohie,
    Mfe,
    Custom,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default)]
    pub template: Template,
    pub alternatives: Option<Vec<String>>,
    pub base: Option<String>,
    /// hsis: the treated alternative; ohie: the insured alternative;
    /// mfe: the alternative always offered under z=1.
    pub treated: Option<String>,
    /// mfe only.
    pub partner: Option<String>,
    /// mfe only.
    pub bundle: Option<String>,
    /// Named predicates from `[predicates]` imposed in every specification.
    #[serde(default)]
    pub access: Vec<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Specification {
    pub name: String,
    #[serde(default)]
    pub assumptions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterKind {
    Pp,
    Ate,
    Atop,
    Custom,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub weight: f64,
    /// Condition in the predicate language; the term applies where it holds.
    pub when: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterEntry {
    pub kind: ParameterKind,
    pub name: Option<String>,
    pub target: Option<String>,
    pub with: Option<Vec<String>>,
    pub without: Option<Vec<String>>,
    #[serde(default)]
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSection {
    pub alpha: Option<f64>,
    pub bootstrap: Option<usize>,
    /// "auto" or a number in (0,1).
    pub tau: Option<TauSetting>,
    pub theta_grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum TauSetting {
    Value(f64),
    Named(String),
}

impl TauSetting {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "auto" {
            return Ok(TauSetting::Named(text.into()));
        }
        text.parse().map(TauSetting::Value).map_err(|_| anyhow!("--tau expects `auto` or a number, got `{text}`"))
    }

    fn rule(&self) -> Result<TauRule> {
        match self {
            TauSetting::Value(v) => Ok(TauRule::Fixed(*v)),
            TauSetting::Named(s) if s == "auto" => Ok(TauRule::Auto),
            TauSetting::Named(s) => bail!("tau must be `auto` or a number, got `{s}`"),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    /// Specification whose restrictions hold for everyone.
    pub specification: String,
    /// Assumptions that hold only for a share lambda of the population.
    pub partial: Vec<String>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Specification the simulated population satisfies.
    pub specification: String,
    /// Number of latent points carrying mass.
    #[serde(default = "default_points")]
    pub points: usize,
    pub clusters: usize,
    #[serde(default = "default_cluster_size")]
    pub cluster_size: usize,
    #[serde(default = "default_p_z")]
    pub p_z: f64,
    /// Outcomes are 0, 1, ..., levels - 1.
    pub levels: usize,
}

fn default_points() -> usize {
    8
}

fn default_cluster_size() -> usize {
    1
}

fn default_p_z() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Experiment,
    /// Named conditions in the predicate language.
    #[serde(default)]
    pub predicates: BTreeMap<String, String>,
    #[serde(default)]
    pub specifications: Vec<Specification>,
    #[serde(default)]
    pub parameters: Vec<ParameterEntry>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Discretization bins; omit to use the observed outcome values as is.
    pub bins: Option<usize>,
    pub seed: Option<u64>,
    pub inference: Option<InferenceSection>,
    pub sensitivity: Option<SensitivitySection>,
    pub simulate: Option<SimulateSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
    }

    /// Relative `input` and `output` paths are taken relative to the
    /// directory holding the config file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let dir = path.parent().unwrap_or(std::path::Path::new(""));
        for p in [&mut cfg.input, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn alternatives(&self) -> Result<AlternativeSet> {
        let e = &self.experiment;
        let (labels, base): (Vec<String>, &str) = match e.template {
            Template::Hsis => (strings(&["n", "a", "h"]), "n"),
            Template::Ohie => (strings(&["n", "m"]), "n"),
            Template::Mfe => (strings(&["n", "m", "a", "ma"]), "n"),
            Template::Custom => (
                e.alternatives.clone().ok_or_else(|| anyhow!("custom template needs `alternatives`"))?,
                e.base.as_deref().ok_or_else(|| anyhow!("custom template needs `base`"))?,
            ),
        };
        let labels = e.alternatives.clone().unwrap_or(labels);
        let base = e.base.as_deref().unwrap_or(base);
        Ok(AlternativeSet::new(labels, base)?)
    }

    fn predicate(&self, name: &str, alts: &AlternativeSet) -> Result<latent_bounds::ZeroSetRestriction> {
        let text = self.predicates.get(name).ok_or_else(|| anyhow!("unknown assumption or predicate `{name}`"))?;
        parse_restriction(name, text, alts).with_context(|| format!("predicate `{name}`"))
    }

    /// Restrictions every specification shares.
    pub fn access(&self, alts: &AlternativeSet) -> Result<RestrictionSet> {
        let e = &self.experiment;
        let mut set = RestrictionSet::new();
        let label = |field: &Option<String>, default: &str| field.clone().unwrap_or_else(|| default.to_string());
        match e.template {
            Template::Hsis => set.push(hsis_access(alts, &label(&e.treated, "h"))?)?,
            Template::Ohie => set.push(ohie_access(alts, &label(&e.treated, "m"))?)?,
            Template::Mfe => {
                let r = mfe_access(alts, &label(&e.treated, "m"), &label(&e.partner, "a"), &label(&e.bundle, "ma"))?;
                set.extend(&r)?;
            }
            Template::Custom => {}
        }
        for name in &e.access {
            set.push(self.predicate(name, alts)?)?;
        }
        Ok(set)
    }

    /// Resolves assumption toggles: `ua` / `ua:<alt>`, `mtr`, `roy`,
    /// `roy:<d>:<e>`, or the name of a predicate.
    pub fn assumptions(&self, names: &[String], alts: &AlternativeSet) -> Result<RestrictionSet> {
        let mut set = RestrictionSet::new();
        for name in names {
            let parts: Vec<&str> = name.split(':').collect();
            match parts.as_slice() {
                ["ua"] => {
                    let alt = self.default_unaltered(alts)?;
                    set.push(unaltered_alternative(alts, &alt)?)?;
                }
                ["ua", alt] => set.push(unaltered_alternative(alts, alt)?)?,
                ["mtr"] => set.push(mtr(alts))?,
                ["roy"] => set.extend(&roy(alts))?,
                ["roy", d, e] => set.push(roy_pair(alts, d, e)?)?,
                _ => set.push(self.predicate(name, alts)?)?,
            }
        }
        Ok(set)
    }

    fn default_unaltered(&self, alts: &AlternativeSet) -> Result<String> {
        if self.experiment.template != Template::Hsis {
            bail!("`ua` needs an alternative here; write `ua:<label>`");
        }
        let treated = self.experiment.treated.clone().unwrap_or_else(|| "h".into());
        let others: Vec<&String> =
            alts.labels().iter().enumerate().filter(|&(d, l)| d != alts.base() && *l != treated).map(|(_, l)| l).collect();
        match others.as_slice() {
            [one] => Ok((*one).clone()),
            _ => bail!("`ua` is ambiguous with alternatives {:?}; write `ua:<label>`", alts.labels()),
        }
    }

    /// Access restrictions plus the specification's assumptions.
    pub fn specification_set(&self, spec: &Specification, alts: &AlternativeSet) -> Result<RestrictionSet> {
        let extra = self.assumptions(&spec.assumptions, alts).with_context(|| format!("specification `{}`", spec.name))?;
        Ok(self.access(alts)?.union(&extra)?)
    }

    pub fn specification(&self, name: &str) -> Result<&Specification> {
        self.specifications.iter().find(|s| s.name == name).ok_or_else(|| anyhow!("unknown specification `{name}`"))
    }

    pub fn validate(&self) -> Result<()> {
        let alts = self.alternatives()?;
        self.access(&alts)?;
        let mut seen = std::collections::BTreeSet::new();
        for spec in &self.specifications {
            if !seen.insert(&spec.name) {
                bail!("specification `{}` appears twice", spec.name);
            }
            self.specification_set(spec, &alts)?;
        }
        if self.bins == Some(0) {
            bail!("bins must be at least 1");
        }
        if let Some(s) = &self.sensitivity {
            self.specification(&s.specification)?;
            if let Some(l) = s.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
                bail!("lambda {l} outside [0,1]");
            }
        }
        Ok(())
    }

    pub fn test_config(&self) -> Result<TestConfig> {
        let mut cfg = TestConfig { seed: self.seed.unwrap_or(0), ..TestConfig::default() };
        if let Some(i) = &self.inference {
            if let Some(a) = i.alpha {
                cfg.alpha = a;
            }
            if let Some(b) = i.bootstrap {
                cfg.bootstrap = b;
            }
            if let Some(t) = &i.tau {
                cfg.tau = t.rule()?;
            }
            if let Some(g) = i.theta_grid {
                cfg.theta_grid = g;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn strings(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

fn menu(alts: &AlternativeSet, labels: &Option<Vec<String>>, what: &str, name: &str) -> Result<ChoiceSet> {
    let labels = labels.as_ref().ok_or_else(|| anyhow!("parameter `{name}` needs `{what}`"))?;
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Ok(ChoiceSet::from_labels(alts, &refs)?)
}

impl ParameterEntry {
    /// Builds the parameter over `idx`. Without `name` the library's label
    /// is kept, e.g. `pp_h|n`.
    pub fn build(&self, idx: &LatentIndex, config: &RunConfig) -> Result<ParameterSpec> {
        let alts = idx.alternatives();
        let label = self.name.clone().unwrap_or_else(|| format!("{:?}", self.kind).to_lowercase());
        let spec = match self.kind {
            ParameterKind::Pp => {
                let target = self.target.as_deref().ok_or_else(|| anyhow!("parameter `{label}` needs `target`"))?;
                participation_proportion(idx, target, menu(alts, &self.without, "without", &label)?)?
            }
            ParameterKind::Ate => average_access_effect(
                idx,
                menu(alts, &self.with, "with", &label)?,
                menu(alts, &self.without, "without", &label)?,
            )?,
            ParameterKind::Atop => {
                let target = self.target.as_deref().ok_or_else(|| anyhow!("parameter `{label}` needs `target`"))?;
                average_effect_on_participants(
                    idx,
                    menu(alts, &self.with, "with", &label)?,
                    menu(alts, &self.without, "without", &label)?,
                    target,
                )?
            }
            ParameterKind::Custom => {
                if self.terms.is_empty() {
                    bail!("custom parameter `{label}` needs at least one term");
                }
                let conditions = self
                    .terms
                    .iter()
                    .map(|t| {
                        let text = config.predicates.get(&t.when).cloned().unwrap_or_else(|| t.when.clone());
                        parse_restriction(&label, &text, alts)
                            .map(|p| (t.weight, p))
                            .with_context(|| format!("term `{}` of `{label}`", t.when))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut coeffs = Vec::new();
                for i in 0..idx.size() {
                    let p = idx.point_at(i)?;
                    let a: f64 = conditions.iter().filter(|(_, c)| c.kills(idx, &p)).map(|(w, _)| w).sum();
                    if a != 0.0 {
                        coeffs.push((i, a));
                    }
                }
                return Ok(custom_linear(&label, coeffs, idx)?);
            }
        };
        match &self.name {
            Some(name) => Ok(ParameterSpec::new(name.clone(), spec.coefficients().to_vec(), spec.denominator().clone())?),
            None => Ok(spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HSIS: &str = r#"
        [experiment]
        template = "hsis"

        [predicates]
        no_a_switch = "a in c0 and a notin c1"

        [[specifications]]
        name = "(1)"

        [[specifications]]
        name = "(2)"
        assumptions = ["ua", "mtr"]

        [[parameters]]
        kind = "pp"
        target = "h"
        without = ["n"]
    "#;

    #[test]
    fn hsis_defaults() {
        let cfg = RunConfig::from_toml(HSIS).unwrap();
        cfg.validate().unwrap();
        let alts = cfg.alternatives().unwrap();
        assert_eq!(alts.labels(), ["n", "a", "h"]);
        let s = cfg.specification_set(&cfg.specifications[1], &alts).unwrap();
        assert_eq!(s.names(), ["hsis_access", "ua", "mtr"]);
    }

    #[test]
    fn unknown_fields_report_the_line() {
        let err = RunConfig::from_toml("[experiment]\ntemplate = \"hsis\"\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_assumption_is_an_error() {
        let mut cfg = RunConfig::from_toml(HSIS).unwrap();
        cfg.specifications[0].assumptions.push("nope".into());
        assert!(format!("{:#}", cfg.validate().unwrap_err()).contains("nope"));
    }

    #[test]
    fn named_predicates_and_roy_pairs_resolve() {
        let cfg = RunConfig::from_toml(HSIS).unwrap();
        let alts = cfg.alternatives().unwrap();
        let s = cfg.assumptions(&["no_a_switch".into(), "roy:n:h".into()], &alts).unwrap();
        assert_eq!(s.names(), ["no_a_switch", "roy_n_h"]);
        assert_eq!(cfg.assumptions(&["roy".into()], &alts).unwrap().len(), 3);
    }

    #[test]
    fn tau_setting() {
        assert_eq!(TauSetting::parse("auto").unwrap().rule().unwrap(), TauRule::Auto);
        assert_eq!(TauSetting::parse("0.1").unwrap().rule().unwrap(), TauRule::Fixed(0.1));
        assert!(TauSetting::parse("fast").is_err());
    }
}
