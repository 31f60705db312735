//! Metric and parameter grids, and the empirical conditional model that links
//! them.
//!
//! For parameter cell `R_i` and metric cell `S_j` the baseline supplies
//! `P(S_j | R_i) ~ n_ij / n_i`. A candidate `q` assigns each parameter cell
//! a probability; the law of total probability then predicts the metric
//! histogram. Only parameter cells seen in the baseline carry information,
//! so the prediction is renormalized over them and the pre-normalization
//! mass is reported as `coverage`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use log::warn;

use crate::error::{Error, Result};
use crate::graph::MetricPoint;
use crate::params::{beta_cdf, QVector, UnitPoint, DIMS};

/// Predictions with less observed mass than this are rejected.
pub const MIN_COVERAGE: f64 = 1e-6;

const FORMAT_HEADER: &str = "graphbargain-conditional v1";

/// Regular grid over (clustering, dlog). Cells are indexed row-major with
/// the clustering bin as the row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricGrid {
    pub clustering_bins: usize,
    pub dlog_bins: usize,
    pub dlog_min: f64,
    pub dlog_max: f64,
}

impl Default for MetricGrid {
    fn default() -> Self {
        MetricGrid { clustering_bins: 10, dlog_bins: 10, dlog_min: -6.0, dlog_max: 0.0 }
    }
}

fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = (x - lo) / (hi - lo) * bins as f64;
    if t <= 0.0 || t.is_nan() {
        0
    } else {
        (t.floor() as usize).min(bins - 1)
    }
}

impl MetricGrid {
    pub fn square(bins: usize) -> Self {
        MetricGrid { clustering_bins: bins, dlog_bins: bins, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clustering_bins == 0 || self.dlog_bins == 0 || self.cells() < 2 {
            return Err(Error::InvalidConfig("metric grid needs at least 2 cells".into()));
        }
        if !(self.dlog_min < self.dlog_max) {
            return Err(Error::InvalidConfig("metric grid dlog range is empty".into()));
        }
        Ok(())
    }

    /// Number of cells `M`.
    pub fn cells(&self) -> usize {
        self.clustering_bins * self.dlog_bins
    }

    pub fn bins(&self, m: &MetricPoint) -> (usize, usize) {
        if m.dlog < self.dlog_min {
            warn!("dlog {} below grid minimum {}; clamped into first bin", m.dlog, self.dlog_min);
        }
        (
            bin_of(m.clustering, 0.0, 1.0, self.clustering_bins),
            bin_of(m.dlog, self.dlog_min, self.dlog_max, self.dlog_bins),
        )
    }

    /// Row-major cell index of a metric point; the upper edges belong to the
    /// last bin.
    pub fn locate(&self, m: &MetricPoint) -> usize {
        let (c, d) = self.bins(m);
        c * self.dlog_bins + d
    }
}

/// `bins^4` equal cells over the unit-normalized `(u_N, u_a, u_b, u_c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamGrid {
    pub bins: usize,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid { bins: 20 }
    }
}

impl ParamGrid {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.bins > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!("parameter bins {} out of range", self.bins)));
        }
        Ok(())
    }

    /// Number of cells `L`.
    pub fn cells(&self) -> u64 {
        (self.bins as u64).pow(DIMS as u32)
    }

    pub fn bin_indices(&self, u: &UnitPoint) -> [usize; DIMS] {
        u.0.map(|x| bin_of(x, 0.0, 1.0, self.bins))
    }

    pub fn locate(&self, u: &UnitPoint) -> u64 {
        self.linear(&self.bin_indices(u))
    }

    pub fn linear(&self, idx: &[usize; DIMS]) -> u64 {
        idx.iter().fold(0u64, |acc, &i| acc * self.bins as u64 + i as u64)
    }

    pub fn unlinear(&self, mut cell: u64) -> [usize; DIMS] {
        let b = self.bins as u64;
        let mut idx = [0; DIMS];
        for k in (0..DIMS).rev() {
            idx[k] = (cell % b) as usize;
            cell /= b;
        }
        idx
    }

    pub fn cell_box(&self, cell: u64) -> crate::params::ParamCell {
        let idx = self.unlinear(cell);
        let w = 1.0 / self.bins as f64;
        crate::params::ParamCell {
            lo: idx.map(|i| i as f64 * w),
            hi: idx.map(|i| if i + 1 == self.bins { 1.0 } else { (i + 1) as f64 * w }),
        }
    }

    /// Probability mass of `q` in each bin of each dimension.
    pub fn bin_masses(&self, q: &QVector) -> Result<[Vec<f64>; DIMS]> {
        let mut out: [Vec<f64>; DIMS] = Default::default();
        for (k, spec) in q.0.iter().enumerate() {
            let edges: Vec<f64> = (0..=self.bins)
                .map(|i| {
                    let x = if i == self.bins { 1.0 } else { i as f64 / self.bins as f64 };
                    beta_cdf(x, *spec)
                })
                .collect::<Result<_>>()?;
            out[k] = edges.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        }
        Ok(out)
    }
}

/// Counts for one observed parameter cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRow {
    /// Linear parameter-cell index.
    pub cell: u64,
    /// `n_i`.
    pub count: u64,
    /// `(j, n_ij)` sorted by `j`, every count positive.
    pub entries: Vec<(usize, u64)>,
}

impl CellRow {
    pub fn conditional(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.count as f64;
        self.entries.iter().map(move |&(j, c)| (j, c as f64 / n))
    }
}

/// Metric distribution predicted for some `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Probability per metric cell, summing to 1.
    pub probs: Vec<f64>,
    /// Mass of `q` inside observed parameter cells before renormalization.
    pub coverage: f64,
}

/// Sparse `n_i`, `n_ij` counts over observed parameter cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalModel {
    metric_grid: MetricGrid,
    param_grid: ParamGrid,
    rows: Vec<CellRow>,
    total: u64,
}

impl ConditionalModel {
    /// Builds the model from `(parameter cell, metric cell)` pairs.
    pub fn from_cell_pairs<I>(metric_grid: MetricGrid, param_grid: ParamGrid, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, usize)>,
    {
        metric_grid.validate()?;
        param_grid.validate()?;
        let mut counts: BTreeMap<u64, BTreeMap<usize, u64>> = BTreeMap::new();
        let mut total = 0;
        for (i, j) in pairs {
            if i >= param_grid.cells() || j >= metric_grid.cells() {
                return Err(Error::InvalidConfig(format!("cell pair ({i}, {j}) outside the grids")));
            }
            *counts.entry(i).or_default().entry(j).or_default() += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::InvalidConfig("conditional model needs at least one record".into()));
        }
        let rows = counts
            .into_iter()
            .map(|(cell, row)| CellRow {
                cell,
                count: row.values().sum(),
                entries: row.into_iter().collect(),
            })
            .collect();
        Ok(ConditionalModel { metric_grid, param_grid, rows, total })
    }

    /// Sum of two models with identical grids, as if built from the union of records.
    pub fn merge(&self, other: &ConditionalModel) -> Result<Self> {
        self.check_compatible(other)?;
        ConditionalModel::from_cell_pairs(
            self.metric_grid,
            self.param_grid,
            self.cell_pairs().chain(other.cell_pairs()),
        )
    }

    pub fn metric_grid(&self) -> &MetricGrid {
        &self.metric_grid
    }

    pub fn param_grid(&self) -> &ParamGrid {
        &self.param_grid
    }

    pub fn rows(&self) -> &[CellRow] {
        &self.rows
    }

    /// Total record count `n`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn check_compatible(&self, other: &ConditionalModel) -> Result<()> {
        if self.metric_grid != other.metric_grid || self.param_grid != other.param_grid {
            return Err(Error::InvalidConfig("conditional models use different grids".into()));
        }
        Ok(())
    }

    /// One `(parameter cell, metric cell)` pair per underlying record, in
    /// cell order.
    pub fn cell_pairs(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.rows.iter().flat_map(|r| {
            r.entries
                .iter()
                .flat_map(move |&(j, c)| std::iter::repeat_n((r.cell, j), c as usize))
        })
    }

    /// Baseline histogram `n_j / n`.
    pub fn metric_histogram(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.metric_grid.cells()];
        for r in &self.rows {
            for &(j, c) in &r.entries {
                h[j] += c as f64;
            }
        }
        let n = self.total as f64;
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    /// `sum_i (n_ij / n_i) w_i` for arbitrary per-row weights, without
    /// renormalization. Returns the vector and `sum_i w_i`.
    pub fn mix_rows<F>(&self, mut weight: F) -> (Vec<f64>, f64)
    where
        F: FnMut(&CellRow) -> f64,
    {
        let mut p = vec![0.0; self.metric_grid.cells()];
        let mut mass = 0.0;
        for r in &self.rows {
            let w = weight(r);
            if w == 0.0 {
                continue;
            }
            mass += w;
            for (j, cond) in r.conditional() {
                p[j] += cond * w;
            }
        }
        (p, mass)
    }

    /// Empirical mode: parameter-cell probabilities replaced by `n_i / n`.
    /// Algebraically equal to [`ConditionalModel::metric_histogram`].
    pub fn predict_empirical(&self) -> Vec<f64> {
        let n = self.total as f64;
        self.mix_rows(|r| r.count as f64 / n).0
    }

    /// Fraction of `q`'s parameter-space mass on observed cells.
    pub fn coverage(&self, q: &QVector) -> Result<f64> {
        let masses = self.param_grid.bin_masses(q)?;
        Ok(self.rows.iter().map(|r| self.cell_mass(&masses, r.cell)).sum())
    }

    fn cell_mass(&self, masses: &[Vec<f64>; DIMS], cell: u64) -> f64 {
        let idx = self.param_grid.unlinear(cell);
        (0..DIMS).map(|k| masses[k][idx[k]]).product()
    }

    /// Metric histogram predicted for `q`, renormalized over observed cells.
    pub fn predict(&self, q: &QVector) -> Result<Prediction> {
        let masses = self.param_grid.bin_masses(q)?;
        let (mut probs, coverage) = self.mix_rows(|r| self.cell_mass(&masses, r.cell));
        if !(coverage >= MIN_COVERAGE) {
            return Err(Error::CoverageCollapse(coverage));
        }
        probs.iter_mut().for_each(|x| *x /= coverage);
        Ok(Prediction { probs, coverage: coverage.min(1.0) })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = &self.metric_grid;
        writeln!(w, "{FORMAT_HEADER}")?;
        writeln!(w, "metric_grid {} {} {} {}", m.clustering_bins, m.dlog_bins, m.dlog_min, m.dlog_max)?;
        writeln!(w, "param_grid {} {}", self.param_grid.bins, DIMS)?;
        writeln!(w, "records {}", self.total)?;
        for r in &self.rows {
            for &(j, c) in &r.entries {
                writeln!(w, "{} {} {}", r.cell, j, c)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((n, Err(e))) => Err(Error::parse(n, e.to_string())),
                None => Err(Error::parse(0, format!("missing {what}"))),
            }
        };
        let (n, header) = next_line("header")?;
        if header.trim() != FORMAT_HEADER {
            return Err(Error::parse(n, format!("expected '{FORMAT_HEADER}'")));
        }
        let (n, l) = next_line("metric_grid")?;
        let f = keyed_fields(n, &l, "metric_grid", 4)?;
        let metric_grid = MetricGrid {
            clustering_bins: parse_field(n, f[0])?,
            dlog_bins: parse_field(n, f[1])?,
            dlog_min: parse_field(n, f[2])?,
            dlog_max: parse_field(n, f[3])?,
        };
        let (n, l) = next_line("param_grid")?;
        let f = keyed_fields(n, &l, "param_grid", 2)?;
        let param_grid = ParamGrid { bins: parse_field(n, f[0])? };
        if parse_field::<usize>(n, f[1])? != DIMS {
            return Err(Error::parse(n, format!("expected {DIMS} parameter dimensions")));
        }
        let (n, l) = next_line("records")?;
        let declared: u64 = parse_field(n, keyed_fields(n, &l, "records", 1)?[0])?;

        let mut pairs = Vec::new();
        for (n, l) in lines {
            let l = l.map_err(|e| Error::parse(n, e.to_string()))?;
            if l.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::parse(n, "expected 'param_cell metric_cell count'"));
            }
            let i: u64 = parse_field(n, f[0])?;
            let j: usize = parse_field(n, f[1])?;
            let c: u64 = parse_field(n, f[2])?;
            if c == 0 {
                return Err(Error::parse(n, "zero count"));
            }
            pairs.extend(std::iter::repeat_n((i, j), c as usize));
        }
        let model = ConditionalModel::from_cell_pairs(metric_grid, param_grid, pairs)?;
        if model.total != declared {
            return Err(Error::parse(4, format!("declared {declared} records, found {}", model.total)));
        }
        Ok(model)
    }
}

fn keyed_fields<'a>(line: usize, l: &'a str, key: &str, count: usize) -> Result<Vec<&'a str>> {
    let mut f = l.split_whitespace();
    if f.next() != Some(key) {
        return Err(Error::parse(line, format!("expected '{key}'")));
    }
    let rest: Vec<&str> = f.collect();
    if rest.len() != count {
        return Err(Error::parse(line, format!("'{key}' takes {count} values")));
    }
    Ok(rest)
}

fn parse_field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(line, format!("bad value '{s}'")))
}

/// Conditional model over `(unit parameters, metrics)` records.
pub fn build_conditional(
    records: &[(UnitPoint, MetricPoint)],
    metric_grid: MetricGrid,
    param_grid: ParamGrid,
) -> Result<ConditionalModel> {
    ConditionalModel::from_cell_pairs(
        metric_grid,
        param_grid,
        records
            .iter()
            .map(|(u, m)| (param_grid.locate(u), metric_grid.locate(m))),
    )
}

/// Row-major metric-cell index of `m` on `grid`.
pub fn locate_metric(grid: &MetricGrid, m: &MetricPoint) -> usize {
    grid.locate(m)
}

/// Predicted metric distribution for `q`; see [`ConditionalModel::predict`].
pub fn predict_metric_distribution(model: &ConditionalModel, q: &QVector) -> Result<Prediction> {
    model.predict(q)
}
