//! The subcommand pipelines: load and discretize data, resolve the
//! configuration, call the library, and shape the reports.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use latent_bounds::bounds_solver::check_feasibility;
use latent_bounds::empirical::{draw_rng, fit_discretizer};
use latent_bounds::inference::{confidence_interval, specification_test, ConfidenceInterval};
use latent_bounds::oracle::{random_pmf, SyntheticModel};
use latent_bounds::sensitivity::solve_sensitivity;
use latent_bounds::{
    prune, solve_bounds, AlternativeSet, CellMap, CellSample, Clarabel, ClusteredSample, DiscretizationMap,
    EmpiricalDistribution, Error, IdentificationProblem, LatentIndex, MicroLp, MixtureProblem, OutcomeGrid,
    ParameterSpec, RestrictionSet,
};

use crate::config::{RunConfig, Specification};
use crate::report::{interval, number, Report, Table};

pub struct Data {
    pub idx: LatentIndex,
    pub cells: CellSample,
    pub emp: EmpiricalDistribution,
    pub n_obs: usize,
}

fn read_sample(cfg: &RunConfig, alts: &AlternativeSet) -> Result<ClusteredSample> {
    let path = cfg.input.as_ref().ok_or_else(|| anyhow!("no input data: pass --input or set `input`"))?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    ClusteredSample::read_csv(BufReader::new(file), alts).with_context(|| format!("reading {}", path.display()))
}

fn discretize(sample: &ClusteredSample, bins: usize) -> Result<(ClusteredSample, DiscretizationMap)> {
    let raw: Vec<f64> = sample.observations().map(|o| o.y).collect();
    let map = fit_discretizer(&raw, bins)?;
    Ok((sample.discretized(&map), map))
}

/// Reads the input, discretizes it when `bins` is set (otherwise the
/// observed outcome values form the grid), and estimates the cells.
pub fn load_data(cfg: &RunConfig, alts: &AlternativeSet) -> Result<Data> {
    let raw = read_sample(cfg, alts)?;
    let (sample, grid) = match cfg.bins {
        Some(m) => {
            let (sample, map) = discretize(&raw, m)?;
            (sample, map.grid())
        }
        None => {
            let mut ys: Vec<f64> = raw.observations().map(|o| o.y).collect();
            ys.sort_by(f64::total_cmp);
            ys.dedup();
            (raw, OutcomeGrid::new(ys)?)
        }
    };
    let idx = LatentIndex::new(alts.clone(), grid.clone())?;
    let cells = CellSample::new(&sample, alts.len(), &grid)?;
    let emp = cells.estimate()?;
    Ok(Data { idx, cells, emp, n_obs: sample.n_obs() })
}

struct Spec {
    name: String,
    restrictions: Vec<String>,
    cells: Arc<CellMap>,
}

/// Without any `[[specifications]]`, a single one named `baseline` imposes
/// the template's access restrictions alone.
fn specifications(cfg: &RunConfig, idx: &LatentIndex) -> Result<Vec<Spec>> {
    let listed = if cfg.specifications.is_empty() {
        vec![Specification { name: "baseline".into(), assumptions: Vec::new() }]
    } else {
        cfg.specifications.clone()
    };
    listed
        .iter()
        .map(|s| {
            let set = cfg.specification_set(s, idx.alternatives())?;
            let cells = Arc::new(CellMap::new(idx, prune(&set, idx))?);
            let restrictions = set.names().into_iter().map(String::from).collect();
            Ok(Spec { name: s.name.clone(), restrictions, cells })
        })
        .collect()
}

fn parameters(cfg: &RunConfig, idx: &LatentIndex) -> Result<Vec<ParameterSpec>> {
    cfg.parameters.iter().map(|p| p.build(idx, cfg)).collect()
}

/// Outcome of one bound computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell {
    Ok { lo: f64, hi: f64 },
    Infeasible { violation: f64 },
    Denominator { lower: f64 },
    Error { message: String },
}

impl Cell {
    fn from_result(r: latent_bounds::Result<latent_bounds::Interval>) -> Self {
        match r {
            Ok(iv) => Cell::Ok { lo: iv.lo, hi: iv.hi },
            Err(Error::Infeasible { violation }) => Cell::Infeasible { violation },
            Err(Error::DenominatorNotPositive { lower }) => Cell::Denominator { lower },
            Err(e) => Cell::Error { message: e.to_string() },
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Ok { lo, hi } => interval(*lo, *hi),
            Cell::Infeasible { .. } => "infeasible".into(),
            Cell::Denominator { .. } => "-".into(),
            Cell::Error { .. } => "error".into(),
        }
    }

    fn note(&self, row: &str, column: &str) -> Option<String> {
        match self {
            Cell::Ok { .. } => None,
            // The data, not the parameter, are at fault: one note per column.
            Cell::Infeasible { violation } => {
                Some(format!("{column}: no latent pmf fits the data (L1 violation {violation:.3e})"))
            }
            Cell::Denominator { lower } => Some(format!(
                "{row} under {column}: denominator lower bound {lower:.3e} is not positive, bounds not reported"
            )),
            Cell::Error { message } => Some(format!("{row} under {column}: {message}")),
        }
    }
}

/// 1 for solver errors, else 2 for an infeasible model, else 3 for a
/// failed denominator check, else 0.
fn exit_code<'a>(cells: impl IntoIterator<Item = &'a Cell>) -> u8 {
    let mut code = 0;
    for c in cells {
        let rank = match c {
            Cell::Ok { .. } => 0,
            Cell::Denominator { .. } => 1,
            Cell::Infeasible { .. } => 2,
            Cell::Error { .. } => 3,
        };
        code = code.max(rank);
    }
    [0, 3, 2, 1][code]
}

#[derive(Debug, Serialize)]
pub struct ParameterRow {
    pub name: String,
    pub linear: bool,
    /// One entry per column, in column order.
    pub cells: Vec<Cell>,
}

#[derive(Debug, Serialize)]
pub struct SpecificationSummary {
    pub name: String,
    pub restrictions: Vec<String>,
    pub alive: usize,
    pub feasible: bool,
    pub violation: f64,
}

#[derive(Debug, Serialize)]
pub struct Sample {
    pub alternatives: Vec<String>,
    pub grid: Vec<f64>,
    pub clusters: usize,
    pub observations: usize,
}

impl Sample {
    fn of(data: &Data) -> Self {
        Sample {
            alternatives: data.idx.alternatives().labels().to_vec(),
            grid: data.idx.grid().values().to_vec(),
            clusters: data.cells.n_clusters(),
            observations: data.n_obs,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BoundsJson {
    pub command: &'static str,
    pub sample: Sample,
    pub specifications: Vec<SpecificationSummary>,
    pub parameters: Vec<ParameterRow>,
    pub exit_code: u8,
}

fn grid_text(header: Vec<String>, rows: &[ParameterRow]) -> String {
    let mut table = Table::new(header.clone());
    let mut notes = Vec::new();
    for row in rows {
        let mut line = vec![row.name.clone()];
        for (cell, column) in row.cells.iter().zip(&header[1..]) {
            line.push(cell.text());
            if let Some(n) = cell.note(&row.name, column) {
                if !notes.contains(&n) {
                    notes.push(n);
                }
            }
        }
        table.push(line);
    }
    let mut text = table.render();
    if !notes.is_empty() {
        text.push('\n');
        for n in notes {
            text.push_str(&format!("note: {n}\n"));
        }
    }
    text
}

/// Estimated identified sets, one row per parameter and one column per
/// specification.
pub fn run_bounds(cfg: &RunConfig) -> Result<Report<BoundsJson>> {
    let alts = cfg.alternatives()?;
    let data = load_data(cfg, &alts)?;
    let specs = specifications(cfg, &data.idx)?;
    let params = parameters(cfg, &data.idx)?;
    let summaries = specs
        .iter()
        .map(|s| {
            let f = check_feasibility(&s.cells, &data.emp, &MicroLp)?;
            Ok(SpecificationSummary {
                name: s.name.clone(),
                restrictions: s.restrictions.clone(),
                alive: s.cells.n_alive(),
                feasible: f.feasible,
                violation: f.violation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..params.len()).flat_map(|p| (0..specs.len()).map(move |s| (p, s))).collect();
    let solved: Vec<Cell> = jobs
        .par_iter()
        .map(|&(p, s)| {
            if !summaries[s].feasible {
                return Ok(Cell::Infeasible { violation: summaries[s].violation });
            }
            let problem = IdentificationProblem::new(specs[s].cells.clone(), data.emp.clone(), params[p].clone())?;
            Ok(Cell::from_result(solve_bounds(&problem, &MicroLp)))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ParameterRow> = params
        .iter()
        .zip(solved.chunks(specs.len().max(1)))
        .map(|(p, cells)| ParameterRow { name: p.name().to_string(), linear: p.is_linear(), cells: cells.to_vec() })
        .collect();
    let infeasible_spec = summaries.iter().any(|s| !s.feasible);
    let mut code = exit_code(rows.iter().flat_map(|r| &r.cells));
    if infeasible_spec && code != 1 {
        code = 2;
    }
    let mut header = vec!["parameter".to_string()];
    header.extend(specs.iter().map(|s| s.name.clone()));
    let mut text = grid_text(header, &rows);
    if rows.is_empty() {
        for s in summaries.iter().filter(|s| !s.feasible) {
            text.push_str(&format!("note: {} is infeasible (L1 violation {:.3e})\n", s.name, s.violation));
        }
    }
    let json =
        BoundsJson { command: "bounds", sample: Sample::of(&data), specifications: summaries, parameters: rows, exit_code: code };
    Ok(Report { name: "bounds", json, text, exit_code: code })
}

#[derive(Debug, Serialize)]
pub struct SensitivityJson {
    pub command: &'static str,
    pub sample: Sample,
    pub specification: String,
    /// Restrictions imposed on everyone.
    pub restrictions: Vec<String>,
    /// Restrictions imposed on a share lambda of the population.
    pub partial: Vec<String>,
    pub lambdas: Vec<f64>,
    pub parameters: Vec<ParameterRow>,
    pub notes: Vec<String>,
    pub exit_code: u8,
}

/// The mixture components share their mass over (preference, choice sets)
/// groups, so partial restrictions that empty a whole group act on
/// everyone at every lambda. Returns the number of such groups.
fn groups_removed(idx: &LatentIndex, s: &RestrictionSet, s1: &RestrictionSet) -> Result<usize> {
    let groups = |set: &RestrictionSet| -> BTreeSet<usize> {
        prune(set, idx).indices().iter().map(|i| i / idx.n_profiles()).collect()
    };
    Ok(groups(s).difference(&groups(&s.union(s1)?)).count())
}

/// Bounds when the partial assumptions hold for a share lambda of the
/// population, one column per lambda.
pub fn run_sensitivity(cfg: &RunConfig) -> Result<Report<SensitivityJson>> {
    let section = cfg.sensitivity.as_ref().ok_or_else(|| anyhow!("the config has no [sensitivity] section"))?;
    let alts = cfg.alternatives()?;
    let data = load_data(cfg, &alts)?;
    let spec = cfg.specification(&section.specification)?;
    let s = cfg.specification_set(spec, &alts)?;
    let s1 = cfg.assumptions(&section.partial, &alts)?;
    let cells = Arc::new(CellMap::new(&data.idx, prune(&s, &data.idx))?);
    let params = parameters(cfg, &data.idx)?;
    let mut problems = Vec::new();
    for p in &params {
        let base = IdentificationProblem::new(cells.clone(), data.emp.clone(), p.clone())?;
        for &l in &section.lambdas {
            problems.push(MixtureProblem::new(&data.idx, base.clone(), &s, &s1, l)?);
        }
    }
    let solved: Vec<Cell> = problems.par_iter().map(|mp| Cell::from_result(solve_sensitivity(mp, &MicroLp))).collect();
    let rows: Vec<ParameterRow> = params
        .iter()
        .zip(solved.chunks(section.lambdas.len().max(1)))
        .map(|(p, cells)| ParameterRow { name: p.name().to_string(), linear: p.is_linear(), cells: cells.to_vec() })
        .collect();
    let code = exit_code(rows.iter().flat_map(|r| &r.cells));
    let mut header = vec!["parameter".to_string()];
    header.extend(section.lambdas.iter().map(|l| format!("lambda={l}")));
    let mut text = grid_text(header, &rows);
    let mut notes = Vec::new();
    let removed = groups_removed(&data.idx, &s, &s1)?;
    if removed > 0 {
        notes.push(format!(
            "the partial restrictions exclude {removed} whole (preference, choice set) groups; \
             both mixture components share group masses, so these exclusions hold at every lambda"
        ));
    }
    if !notes.is_empty() {
        if !text.contains("\nnote: ") {
            text.push('\n');
        }
        notes.iter().for_each(|n| text.push_str(&format!("note: {n}\n")));
    }
    let json = SensitivityJson {
        command: "sensitivity",
        sample: Sample::of(&data),
        specification: spec.name.clone(),
        restrictions: s.names().into_iter().map(String::from).collect(),
        partial: s1.names().into_iter().map(String::from).collect(),
        lambdas: section.lambdas.clone(),
        parameters: rows,
        notes,
        exit_code: code,
    };
    Ok(Report { name: "sensitivity", json, text, exit_code: code })
}

#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum InferenceCell {
    Ok(ConfidenceInterval),
    Skipped { reason: String },
    Error { message: String },
}

#[derive(Debug, Serialize)]
pub struct InferenceRow {
    pub name: String,
    pub cells: Vec<InferenceCell>,
}

#[derive(Debug, Serialize)]
pub struct InferenceJson {
    pub command: &'static str,
    pub sample: Sample,
    pub config: latent_bounds::TestConfig,
    pub specifications: Vec<String>,
    pub parameters: Vec<InferenceRow>,
    pub exit_code: u8,
}

/// Confidence intervals for linear parameters by test inversion.
pub fn run_inference(cfg: &RunConfig) -> Result<Report<InferenceJson>> {
    let tcfg = cfg.test_config()?;
    let alts = cfg.alternatives()?;
    let data = load_data(cfg, &alts)?;
    let specs = specifications(cfg, &data.idx)?;
    let params = parameters(cfg, &data.idx)?;
    let mut rows = Vec::new();
    for p in &params {
        let cells = specs
            .iter()
            .map(|s| {
                if !p.is_linear() {
                    return InferenceCell::Skipped { reason: "inference covers linear parameters only".into() };
                }
                match confidence_interval(&data.cells, s.cells.clone(), p, &tcfg, &MicroLp, &Clarabel) {
                    Ok(ci) => InferenceCell::Ok(ci),
                    Err(e) => InferenceCell::Error { message: e.to_string() },
                }
            })
            .collect();
        rows.push(InferenceRow { name: p.name().to_string(), cells });
    }
    let failed = rows.iter().flat_map(|r| &r.cells).any(|c| matches!(c, InferenceCell::Error { .. }));
    let code = if failed { 1 } else { 0 };

    let mut header = vec!["parameter".to_string()];
    header.extend(specs.iter().map(|s| s.name.clone()));
    let mut estimated = Table::new(header.clone());
    let mut intervals = Table::new(header.clone());
    let mut notes = Vec::new();
    for row in &rows {
        let mut est = vec![row.name.clone()];
        let mut ci = vec![row.name.clone()];
        for (cell, column) in row.cells.iter().zip(&header[1..]) {
            let (e, c) = match cell {
                InferenceCell::Ok(r) => (
                    r.estimated.map_or("none".into(), |(l, u)| interval(l, u)),
                    r.bounds.map_or("empty".into(), |(l, u)| interval(l, u)),
                ),
                InferenceCell::Skipped { .. } => ("-".into(), "-".into()),
                InferenceCell::Error { .. } => ("error".into(), "error".into()),
            };
            match cell {
                InferenceCell::Ok(r) => notes.extend(r.diagnostics.iter().map(|d| format!("{} under {column}: {d}", row.name))),
                InferenceCell::Skipped { reason } => notes.push(format!("{} under {column}: {reason}", row.name)),
                InferenceCell::Error { message } => notes.push(format!("{} under {column}: {message}", row.name)),
            }
            est.push(e);
            ci.push(c);
        }
        estimated.push(est);
        intervals.push(ci);
    }
    let level = 100.0 * (1.0 - tcfg.alpha);
    let mut text = format!("estimated identified sets\n{}\n{level}% confidence intervals\n{}", estimated.render(), intervals.render());
    if !notes.is_empty() {
        text.push('\n');
        notes.iter().for_each(|n| text.push_str(&format!("note: {n}\n")));
    }
    let json = InferenceJson {
        command: "infer",
        sample: Sample::of(&data),
        config: tcfg,
        specifications: specs.iter().map(|s| s.name.clone()).collect(),
        parameters: rows,
        exit_code: code,
    };
    Ok(Report { name: "infer", json, text, exit_code: code })
}

#[derive(Debug, Serialize)]
pub struct SpecTestRow {
    pub name: String,
    pub restrictions: Vec<String>,
    pub alive: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub tau: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SpecTestJson {
    pub command: &'static str,
    pub sample: Sample,
    pub config: latent_bounds::TestConfig,
    pub specifications: Vec<SpecTestRow>,
    pub exit_code: u8,
}

/// Bootstrap test of each specification against the data.
pub fn run_spectest(cfg: &RunConfig) -> Result<Report<SpecTestJson>> {
    let tcfg = cfg.test_config()?;
    let alts = cfg.alternatives()?;
    let data = load_data(cfg, &alts)?;
    let specs = specifications(cfg, &data.idx)?;
    let rows: Vec<SpecTestRow> = specs
        .iter()
        .map(|s| {
            let mut row = SpecTestRow {
                name: s.name.clone(),
                restrictions: s.restrictions.clone(),
                alive: s.cells.n_alive(),
                statistic: None,
                p_value: None,
                reject: None,
                tau: None,
                error: None,
            };
            if row.alive == 0 {
                row.error = Some("the restrictions exclude every latent point".into());
                return row;
            }
            match specification_test(&data.cells, &s.cells, &tcfg, &Clarabel) {
                Ok(t) => {
                    row.statistic = Some(t.statistic);
                    row.p_value = Some(t.p_value);
                    row.reject = Some(t.p_value <= tcfg.alpha);
                    row.tau = Some(t.tau);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    let code = if rows.iter().any(|r| r.alive == 0) {
        2
    } else if rows.iter().any(|r| r.error.is_some()) {
        1
    } else {
        0
    };
    let mut table = Table::new(vec!["specification".into(), "statistic".into(), "p-value".into(), "decision".into()]);
    let mut notes = Vec::new();
    for r in &rows {
        let cells = match (r.statistic, r.p_value, r.reject) {
            (Some(t), Some(p), Some(rej)) => [number(t), number(p), if rej { "reject" } else { "accept" }.into()],
            _ => ["-".into(), "-".into(), "error".into()],
        };
        if let Some(e) = &r.error {
            notes.push(format!("note: {}: {e}\n", r.name));
        }
        let mut line = vec![r.name.clone()];
        line.extend(cells);
        table.push(line);
    }
    let mut text = table.render();
    if !notes.is_empty() {
        text.push('\n');
        notes.iter().for_each(|n| text.push_str(n));
    }
    let json = SpecTestJson { command: "spectest", sample: Sample::of(&data), config: tcfg, specifications: rows, exit_code: code };
    Ok(Report { name: "spectest", json, text, exit_code: code })
}

#[derive(Debug, Serialize)]
pub struct MassPoint {
    pub index: usize,
    pub point: String,
    pub mass: f64,
}

#[derive(Debug, Serialize)]
pub struct TrueValue {
    pub name: String,
    pub value: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SimulateJson {
    pub command: &'static str,
    pub specification: String,
    pub restrictions: Vec<String>,
    pub seed: u64,
    pub p_z: f64,
    pub clusters: usize,
    pub cluster_size: usize,
    pub levels: usize,
    pub pmf: Vec<MassPoint>,
    pub true_values: Vec<TrueValue>,
    pub population: serde_json::Value,
}

/// Draws a random sparse pmf satisfying the chosen specification and a
/// clustered sample from it. Returns the report and the sample CSV.
pub fn run_simulate(cfg: &RunConfig) -> Result<(Report<SimulateJson>, String)> {
    let sim = cfg.simulate.as_ref().ok_or_else(|| anyhow!("the config has no [simulate] section"))?;
    let seed = cfg.seed.unwrap_or(0);
    let alts = cfg.alternatives()?;
    let idx = LatentIndex::new(alts.clone(), OutcomeGrid::integers(sim.levels)?)?;
    let spec = cfg.specification(&sim.specification)?;
    let set = cfg.specification_set(spec, &alts)?;
    let support = prune(&set, &idx);
    let pmf = random_pmf(&support, sim.points, &mut draw_rng(seed, 1))?;
    let model = SyntheticModel::new(&idx, &set, pmf, sim.p_z, vec![sim.cluster_size; sim.clusters])?;
    let sample = model.generate(&idx, seed)?;
    let mut csv = Vec::new();
    sample.write_csv(&mut csv, &alts)?;

    let true_values: Vec<TrueValue> = parameters(cfg, &idx)?
        .iter()
        .map(|p| TrueValue { name: p.name().to_string(), value: model.true_value(p).ok() })
        .collect();
    let mut table = Table::new(vec!["parameter".into(), "true value".into()]);
    for t in &true_values {
        table.push(vec![t.name.clone(), t.value.map_or("-".into(), number)]);
    }
    let pmf = model
        .pmf()
        .iter()
        .map(|&(i, q)| Ok(MassPoint { index: i, point: idx.describe_point(&idx.point_at(i)?), mass: q }))
        .collect::<Result<Vec<_>>>()?;
    let json = SimulateJson {
        command: "simulate",
        specification: spec.name.clone(),
        restrictions: set.names().into_iter().map(String::from).collect(),
        seed,
        p_z: sim.p_z,
        clusters: sim.clusters,
        cluster_size: sim.cluster_size,
        levels: sim.levels,
        pmf,
        true_values,
        population: model.implied_cells(&idx)?.to_json(&alts),
    };
    let report = Report { name: "simulate", json, text: table.render(), exit_code: 0 };
    Ok((report, String::from_utf8(csv)?))
}

#[derive(Debug, Serialize)]
pub struct DiscretizeJson {
    pub command: &'static str,
    pub bins: usize,
    pub cuts: Vec<f64>,
    pub midpoints: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Quantile discretization of the input outcomes. Returns the report and
/// the discretized CSV.
pub fn run_discretize(cfg: &RunConfig) -> Result<(Report<DiscretizeJson>, String)> {
    let bins = cfg.bins.ok_or_else(|| anyhow!("discretize needs --bins or `bins`"))?;
    let alts = cfg.alternatives()?;
    let raw = read_sample(cfg, &alts)?;
    let (sample, map) = discretize(&raw, bins)?;
    let mut counts = vec![0; bins];
    raw.observations().for_each(|o| counts[map.bin(o.y)] += 1);
    let mut table = Table::new(vec!["bin".into(), "from".into(), "to".into(), "midpoint".into(), "count".into()]);
    for (k, &n) in counts.iter().enumerate() {
        table.push(vec![
            (k + 1).to_string(),
            number(map.cuts()[k]),
            number(map.cuts()[k + 1]),
            number(map.midpoints()[k]),
            n.to_string(),
        ]);
    }
    let mut csv = Vec::new();
    sample.write_csv(&mut csv, &alts)?;
    let json = DiscretizeJson {
        command: "discretize",
        bins,
        cuts: map.cuts().to_vec(),
        midpoints: map.midpoints().to_vec(),
        counts,
    };
    Ok((Report { name: "discretize", json, text: table.render(), exit_code: 0 }, String::from_utf8(csv)?))
}
