//! Clustered (Y, D, Z) data: CSV ingestion, quantile-midpoint
//! discretization, cell frequencies, and the cluster bootstrap.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent_space::{AlternativeSet, OutcomeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub y: f64,
    /// Index of the chosen alternative.
    pub d: usize,
    pub z: u8,
}

/// Observations grouped by sampling cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredSample {
    ids: Vec<String>,
    clusters: Vec<Vec<Observation>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    cluster_id: String,
    y: f64,
    d: String,
    z: u8,
}

impl ClusteredSample {
    pub fn new(ids: Vec<String>, clusters: Vec<Vec<Observation>>) -> Result<Self> {
        if ids.len() != clusters.len() {
            return Err(Error::InvalidData("one id per cluster required".into()));
        }
        if clusters.is_empty() {
            return Err(Error::InvalidData("no clusters".into()));
        }
        for o in clusters.iter().flatten() {
            if o.z > 1 {
                return Err(Error::InvalidData(format!("z={} is not 0 or 1", o.z)));
            }
            if !o.y.is_finite() {
                return Err(Error::InvalidData("non-finite outcome".into()));
            }
        }
        Ok(Self { ids, clusters })
    }

    /// Clusters with generated ids "0", "1", ...
    pub fn from_clusters(clusters: Vec<Vec<Observation>>) -> Result<Self> {
        let ids = (0..clusters.len()).map(|g| g.to_string()).collect();
        Self::new(ids, clusters)
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn n_obs(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    pub fn clusters(&self) -> &[Vec<Observation>] {
        &self.clusters
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn observations(&self) -> impl Iterator<Item = &Observation> {
        self.clusters.iter().flatten()
    }

    /// Reads `cluster_id,y,d,z` rows. Clusters keep first-appearance order.
    pub fn read_csv(reader: impl Read, alts: &AlternativeSet) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["cluster_id", "y", "d", "z"] {
            return Err(Error::InvalidData(format!(
                "expected header `cluster_id,y,d,z`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut ids: Vec<String> = Vec::new();
        let mut clusters: Vec<Vec<Observation>> = Vec::new();
        let mut lookup = std::collections::HashMap::new();
        for (line, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| Error::InvalidData(format!("row {}: {e}", line + 2)))?;
            let d = alts
                .index_of(&row.d)
                .map_err(|_| Error::InvalidData(format!("row {}: unknown alternative `{}`", line + 2, row.d)))?;
            if row.z > 1 {
                return Err(Error::InvalidData(format!("row {}: z must be 0 or 1", line + 2)));
            }
            let g = *lookup.entry(row.cluster_id.clone()).or_insert_with(|| {
                ids.push(row.cluster_id.clone());
                clusters.push(Vec::new());
                clusters.len() - 1
            });
            clusters[g].push(Observation { y: row.y, d, z: row.z });
        }
        Self::new(ids, clusters)
    }

    pub fn write_csv(&self, writer: impl Write, alts: &AlternativeSet) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (id, cluster) in self.ids.iter().zip(&self.clusters) {
            for o in cluster {
                w.serialize(CsvRow { cluster_id: id.clone(), y: o.y, d: alts.label(o.d).to_string(), z: o.z })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Same clusters with every outcome replaced by its grid midpoint.
    pub fn discretized(&self, map: &DiscretizationMap) -> ClusteredSample {
        let clusters = self
            .clusters
            .iter()
            .map(|c| c.iter().map(|o| Observation { y: map.apply(o.y), ..*o }).collect())
            .collect();
        ClusteredSample { ids: self.ids.clone(), clusters }
    }
}

/// Cut values and bin midpoints from empirical quantiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizationMap {
    cuts: Vec<f64>,
    midpoints: Vec<f64>,
}

impl DiscretizationMap {
    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn grid(&self) -> OutcomeGrid {
        OutcomeGrid::new(self.midpoints.clone()).expect("midpoints strictly increasing")
    }

    /// Bin index (0-based) of a raw value. Bins are left-closed, the top bin
    /// is closed, and values outside the fitted range are clamped.
    pub fn bin(&self, y: f64) -> usize {
        let m = self.midpoints.len();
        (1..m).find(|&k| y < self.cuts[k]).map_or(m - 1, |k| k - 1)
    }

    pub fn apply(&self, y: f64) -> f64 {
        self.midpoints[self.bin(y)]
    }
}

/// Fits M bins at the quantiles 100m/M, m = 0..M, where the p-th quantile
/// is the smallest sample value v with at least p% of the sample <= v.
pub fn fit_discretizer(raw: &[f64], m: usize) -> Result<DiscretizationMap> {
    if m == 0 {
        return Err(Error::InvalidConfig("need at least one bin".into()));
    }
    if raw.is_empty() {
        return Err(Error::InvalidData("no outcomes to discretize".into()));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite outcome".into()));
    }
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // count(<= v) / n >= k / m  <=>  count * m >= k * n, exact in integers.
    let cuts: Vec<f64> = (0..=m)
        .map(|k| {
            if k == 0 {
                return sorted[0];
            }
            let need = (k * n).div_ceil(m);
            sorted[need.max(1) - 1]
        })
        .collect();
    let midpoints: Vec<f64> = cuts.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    if midpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateGrid(format!("repeated midpoints {midpoints:?}")));
    }
    Ok(DiscretizationMap { cuts, midpoints })
}

pub fn apply_discretizer(map: &DiscretizationMap, y: f64) -> f64 {
    map.apply(y)
}

/// Conditional cell frequencies P(y, d | z), laid out z-major, then d, then y.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    n_alts: usize,
    grid: OutcomeGrid,
    cells: Vec<f64>,
    arm_counts: [usize; 2],
}

#[derive(Serialize)]
struct CellEntry<'a> {
    z: u8,
    d: &'a str,
    y: f64,
    p: f64,
}

impl EmpiricalDistribution {
    /// Wraps population or planted cell probabilities; each arm must sum to one.
    pub fn from_cells(n_alts: usize, grid: OutcomeGrid, cells: Vec<f64>, arm_counts: [usize; 2]) -> Result<Self> {
        let per_arm = n_alts * grid.len();
        if cells.len() != 2 * per_arm {
            return Err(Error::InvalidData(format!("expected {} cells, got {}", 2 * per_arm, cells.len())));
        }
        if cells.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidData("cell probabilities must be finite and non-negative".into()));
        }
        for z in 0..2 {
            let s: f64 = cells[z * per_arm..(z + 1) * per_arm].iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidData(format!("arm z={z} sums to {s}")));
            }
        }
        Ok(Self { n_alts, grid, cells, arm_counts })
    }

    pub fn n_alts(&self) -> usize {
        self.n_alts
    }

    pub fn grid(&self) -> &OutcomeGrid {
        &self.grid
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, z: u8, d: usize, y: usize) -> f64 {
        self.cells[self.cell_id(z, d, y)]
    }

    pub fn cell_id(&self, z: u8, d: usize, y: usize) -> usize {
        z as usize * self.n_alts * self.grid.len() + d * self.grid.len() + y
    }

    /// Observations per arm; zero for population distributions.
    pub fn arm_counts(&self) -> [usize; 2] {
        self.arm_counts
    }

    pub fn to_json(&self, alts: &AlternativeSet) -> serde_json::Value {
        let mut entries = Vec::with_capacity(self.cells.len());
        for z in 0..2u8 {
            for d in 0..self.n_alts {
                for y in 0..self.grid.len() {
                    entries.push(CellEntry { z, d: alts.label(d), y: self.grid.value(y), p: self.cell(z, d, y) });
                }
            }
        }
        serde_json::json!({ "arm_counts": self.arm_counts, "cells": entries })
    }
}

/// Observations pre-mapped to cell ids, ready for repeated resampling.
#[derive(Debug, Clone)]
pub struct CellSample {
    n_alts: usize,
    grid: OutcomeGrid,
    clusters: Vec<Vec<usize>>,
}

impl CellSample {
    /// Requires every outcome to lie exactly on `grid`.
    pub fn new(sample: &ClusteredSample, n_alts: usize, grid: &OutcomeGrid) -> Result<Self> {
        let m = grid.len();
        let clusters = sample
            .clusters()
            .iter()
            .map(|c| {
                c.iter()
                    .map(|o| {
                        if o.d >= n_alts {
                            return Err(Error::InvalidData(format!("alternative index {}", o.d)));
                        }
                        let y = grid.index_of(o.y).ok_or(Error::OffGrid(o.y))?;
                        Ok(o.z as usize * n_alts * m + o.d * m + y)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_alts, grid: grid.clone(), clusters })
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    fn distribution(&self, picks: impl Iterator<Item = usize>) -> Result<EmpiricalDistribution> {
        let per_arm = self.n_alts * self.grid.len();
        let mut counts = vec![0usize; 2 * per_arm];
        for g in picks {
            for &c in &self.clusters[g] {
                counts[c] += 1;
            }
        }
        let arm = |z: usize| counts[z * per_arm..(z + 1) * per_arm].iter().sum::<usize>();
        let arm_counts = [arm(0), arm(1)];
        for z in 0..2 {
            if arm_counts[z] == 0 {
                return Err(Error::EmptyArm(z as u8));
            }
        }
        let cells = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 / arm_counts[i / per_arm] as f64)
            .collect();
        Ok(EmpiricalDistribution { n_alts: self.n_alts, grid: self.grid.clone(), cells, arm_counts })
    }

    pub fn estimate(&self) -> Result<EmpiricalDistribution> {
        self.distribution(0..self.clusters.len())
    }

    /// Cells of a cluster bootstrap draw. Draws that leave an arm empty are
    /// redrawn from the same stream, so the result stays a function of `rng`.
    pub fn resample(&self, rng: &mut ChaCha8Rng) -> Result<EmpiricalDistribution> {
        let g = self.clusters.len();
        for _ in 0..10_000 {
            let picks: Vec<usize> = (0..g).map(|_| rng.random_range(0..g)).collect();
            match self.distribution(picks.into_iter()) {
                Err(Error::EmptyArm(_)) => continue,
                other => return other,
            }
        }
        Err(Error::InvalidData("bootstrap draws keep leaving an arm empty".into()))
    }
}

/// Pooled cell frequencies of a sample whose outcomes lie on `grid`.
pub fn estimate(sample: &ClusteredSample, n_alts: usize, grid: &OutcomeGrid) -> Result<EmpiricalDistribution> {
    CellSample::new(sample, n_alts, grid)?.estimate()
}

/// Random stream for bootstrap draw `draw` under `master_seed`. Streams are
/// independent of each other and of scheduling.
pub fn draw_rng(master_seed: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(draw);
    rng
}

/// G clusters drawn with replacement.
pub fn cluster_resample(sample: &ClusteredSample, seed: u64) -> ClusteredSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = sample.n_clusters();
    let picks: Vec<usize> = (0..g).map(|_| rng.random_range(0..g)).collect();
    ClusteredSample {
        ids: picks.iter().map(|&i| sample.ids[i].clone()).collect(),
        clusters: picks.iter().map(|&i| sample.clusters[i].clone()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IttIv {
    pub itt_d: f64,
    pub itt_y: f64,
    /// `None` when the first stage is exactly zero.
    pub iv: Option<f64>,
}

/// Intent-to-treat contrasts and their Wald ratio.
pub fn itt_iv(emp: &EmpiricalDistribution, target: usize) -> IttIv {
    let m = emp.grid().len();
    let share = |z: u8| (0..m).map(|y| emp.cell(z, target, y)).sum::<f64>();
    let mean = |z: u8| {
        (0..emp.n_alts())
            .flat_map(|d| (0..m).map(move |y| (d, y)))
            .map(|(d, y)| emp.cell(z, d, y) * emp.grid().value(y))
            .sum::<f64>()
    };
    let itt_d = share(1) - share(0);
    let itt_y = mean(1) - mean(0);
    let iv = (itt_d != 0.0).then(|| itt_y / itt_d);
    IttIv { itt_d, itt_y, iv }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discretizer_fixture() {
        let map = fit_discretizer(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(map.cuts(), &[1.0, 2.0, 4.0]);
        assert_eq!(map.midpoints(), &[1.5, 3.0]);
        assert_eq!(map.apply(2.0), 3.0);
        assert_eq!(map.apply(4.0), 3.0);
        assert_eq!(map.apply(1.0), 1.5);
        assert_eq!(map.apply(-10.0), 1.5);
        assert_eq!(map.apply(10.0), 3.0);
    }

    #[test]
    fn single_bin_uses_range_midpoint() {
        let map = fit_discretizer(&[3.0, -1.0, 7.0], 1).unwrap();
        assert_eq!(map.midpoints(), &[3.0]);
        assert_eq!(map.apply(-1.0), 3.0);
        assert_eq!(map.apply(7.0), 3.0);
    }

    #[test]
    fn constant_data_is_degenerate() {
        assert!(matches!(fit_discretizer(&[2.0; 5], 2), Err(Error::DegenerateGrid(_))));
        assert!(fit_discretizer(&[], 2).is_err());
        assert!(fit_discretizer(&[1.0], 0).is_err());
    }

    fn obs(y: f64, d: usize, z: u8) -> Observation {
        Observation { y, d, z }
    }

    #[test]
    fn estimate_single_observation_arms() {
        let s = ClusteredSample::from_clusters(vec![vec![obs(1.0, 1, 1)], vec![obs(0.0, 0, 0)]]).unwrap();
        let grid = OutcomeGrid::integers(2).unwrap();
        let e = estimate(&s, 2, &grid).unwrap();
        assert_eq!(e.cell(1, 1, 1), 1.0);
        assert_eq!(e.cell(0, 0, 0), 1.0);
        assert_eq!(e.cells().iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn estimate_requires_both_arms_and_grid_values() {
        let grid = OutcomeGrid::integers(2).unwrap();
        let s = ClusteredSample::from_clusters(vec![vec![obs(1.0, 1, 1)]]).unwrap();
        assert_eq!(estimate(&s, 2, &grid), Err(Error::EmptyArm(0)));
        let s = ClusteredSample::from_clusters(vec![vec![obs(0.5, 1, 1), obs(0.0, 0, 0)]]).unwrap();
        assert_eq!(estimate(&s, 2, &grid), Err(Error::OffGrid(0.5)));
    }

    #[test]
    fn resample_is_deterministic_and_trivial_for_one_cluster() {
        let s = ClusteredSample::from_clusters(vec![vec![obs(1.0, 1, 1), obs(0.0, 0, 0)]]).unwrap();
        assert_eq!(cluster_resample(&s, 9), s);
        let s = ClusteredSample::from_clusters((0..20).map(|g| vec![obs(g as f64, 0, (g % 2) as u8)]).collect())
            .unwrap();
        assert_eq!(cluster_resample(&s, 5), cluster_resample(&s, 5));
        assert_ne!(cluster_resample(&s, 5), cluster_resample(&s, 6));
    }

    #[test]
    fn itt_iv_fixture() {
        let grid = OutcomeGrid::new(vec![0.0, 1.0]).unwrap();
        // Arm z=1: P(h)=0.6, E[Y]=0.5; arm z=0: P(h)=0.1, E[Y]=0.3.
        // Cell order within an arm: (n,0), (n,1), (h,0), (h,1).
        let cells = vec![0.6, 0.3, 0.1, 0.0, 0.4, 0.0, 0.1, 0.5];
        let e = EmpiricalDistribution::from_cells(2, grid, cells, [0, 0]).unwrap();
        let r = itt_iv(&e, 1);
        assert!((r.itt_d - 0.5).abs() < 1e-12);
        assert!((r.itt_y - 0.2).abs() < 1e-12);
        assert!((r.iv.unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn itt_iv_identical_arms() {
        let grid = OutcomeGrid::new(vec![0.0, 1.0]).unwrap();
        let cells = vec![0.25; 8];
        let e = EmpiricalDistribution::from_cells(2, grid, cells, [0, 0]).unwrap();
        assert_eq!(itt_iv(&e, 1), IttIv { itt_d: 0.0, itt_y: 0.0, iv: None });
    }

    #[test]
    fn csv_round_trip() {
        let alts = AlternativeSet::new(["n", "h"], "n").unwrap();
        let text = "cluster_id,y,d,z\ns1,1.5,h,1\ns2,0,n,0\ns1,2,n,1\n";
        let s = ClusteredSample::read_csv(text.as_bytes(), &alts).unwrap();
        assert_eq!(s.n_clusters(), 2);
        assert_eq!(s.clusters()[0].len(), 2);
        let mut out = Vec::new();
        s.write_csv(&mut out, &alts).unwrap();
        let back = ClusteredSample::read_csv(out.as_slice(), &alts).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let alts = AlternativeSet::new(["n", "h"], "n").unwrap();
        let err = ClusteredSample::read_csv("cluster_id,y,d,z\n1,0,x,1\n".as_bytes(), &alts).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        assert!(ClusteredSample::read_csv("id,y,d,z\n".as_bytes(), &alts).is_err());
        assert!(ClusteredSample::read_csv("cluster_id,y,d,z\n1,0,n,2\n".as_bytes(), &alts).is_err());
    }
}
