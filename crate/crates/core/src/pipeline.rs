//! End-to-end commands: `baseline`, `optimize`, `generate`, `validate`, `report`.
//!
//! Output layout under `out`:
//!
//! ```text
//! baseline/graphs/000000.edges ...   baseline/manifest.csv
//! baseline/conditional.txt           baseline/report.csv
//! best_q.txt                         optimize_trace.csv
//! result/graphs/000000.edges ...     result/manifest.csv
//! validation/validation.csv          validation/scatter.csv
//! validation/report.txt
//! ```
//!
//! Every primary output is a pure function of the configuration and seed,
//! independent of the number of worker threads.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::MetricPoint;
use crate::grid::{ConditionalModel, MetricGrid, ParamGrid};
use crate::io::{compute_stats, emit_scatter_csv, read_manifest, write_edge_list, write_manifest, ManifestRow, StatsReport};
use crate::objective::bargaining_fitness;
use crate::optimizer::{optimize, split_model, Evaluator, OptimizationResult, OptimizerConfig};
use crate::params::{sample_baseline, sample_from_q, ParamBounds, QVector};
use crate::rmat::{generate_graph_with_seed, RmatParams};
use crate::{graph, seeds};

/// Parameter draws tried per graph before a generation run gives up.
pub const MAX_RESAMPLES: usize = 64;

const BASELINE_STREAM: u64 = 0xBA5E;
const RESULT_STREAM: u64 = 0x7E57;

/// Run configuration; defaults reproduce the full-scale setup
/// (10000 graphs, `E` in `[1e5, 1e6]`, 10x10 metric grid, 20^4 parameter grid).
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub e_min: u64,
    pub e_max: u64,
    pub metric_bins: usize,
    pub param_bins: usize,
    pub optimizer: OptimizerConfig,
    /// Graphs produced by `generate`; `None` means `n`.
    pub count: Option<usize>,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 10_000,
            e_min: 100_000,
            e_max: 1_000_000,
            metric_bins: 10,
            param_bins: 20,
            optimizer: OptimizerConfig::default(),
            count: None,
            seed: 0,
            jobs: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn metric_grid(&self) -> MetricGrid {
        MetricGrid::square(self.metric_bins)
    }

    pub fn param_grid(&self) -> ParamGrid {
        ParamGrid { bins: self.param_bins }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig { seed: seeds::derive(self.seed, &[0x0B7]), ..self.optimizer.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        if self.e_min < 10 || self.e_max <= self.e_min {
            return Err(Error::InvalidConfig(format!(
                "edge range [{}, {}] needs e_min >= 10 and e_max > e_min",
                self.e_min, self.e_max
            )));
        }
        ParamBounds::for_edges(self.e_min).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        self.metric_grid().validate()?;
        self.param_grid().validate()?;
        self.optimizer.validate()?;
        Ok(())
    }

    /// Applies one `key=value` setting. Keys match the long CLI flags,
    /// with `-` or `_` as separator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidConfig(format!("bad value '{v}' for {key}")))
        }
        match key.trim().replace('_', "-").as_str() {
            "n" => self.n = num(key, value)?,
            "e-min" => self.e_min = num(key, value)?,
            "e-max" => self.e_max = num(key, value)?,
            "metric-bins" => self.metric_bins = num(key, value)?,
            "param-bins" => self.param_bins = num(key, value)?,
            "pop" => self.optimizer.population_size = num(key, value)?,
            "max-gen" => self.optimizer.max_generations = num(key, value)?,
            "tol" => self.optimizer.tolerance = num(key, value)?,
            "patience" => self.optimizer.patience = num(key, value)?,
            "holdout" => self.optimizer.holdout_fraction = num(key, value)?,
            "count" => self.count = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "jobs" => self.jobs = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(Error::InvalidConfig(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a flat `key=value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (k, v) in parse_key_values(&text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
    }

    pub fn baseline_dir(&self) -> PathBuf {
        self.out.join("baseline")
    }

    pub fn result_dir(&self) -> PathBuf {
        self.out.join("result")
    }

    pub fn conditional_path(&self) -> PathBuf {
        self.baseline_dir().join("conditional.txt")
    }

    pub fn best_q_path(&self) -> PathBuf {
        self.out.join("best_q.txt")
    }
}

fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(i + 1, "expected key=value"));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Generates `count` graphs, drawing parameters with `sample`. Graph `i`
/// uses its own random stream, so output does not depend on scheduling.
/// Edge lists go to `dir/graphs`, rows come back in id order.
fn generate_dataset<F>(cfg: &RunConfig, stream: u64, count: usize, dir: &Path, sample: F) -> Result<Vec<ManifestRow>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<RmatParams> + Sync,
{
    let graphs_dir = dir.join("graphs");
    create_dir(&graphs_dir)?;
    let one = |i: usize| -> Result<ManifestRow> {
        let mut rng = seeds::stream(cfg.seed, &[stream, i as u64]);
        for _ in 0..MAX_RESAMPLES {
            let params = sample(&mut rng)?;
            let graph_seed: u64 = rng.random();
            match generate_graph_with_seed(&params, graph_seed) {
                Ok((g, m, used_seed)) => {
                    write_edge_list(&g, graphs_dir.join(format!("{i:06}.edges")))?;
                    let unit = ParamBounds::for_edges(params.e_param)?.to_unit(&params);
                    return Ok(ManifestRow::new(i as u64, used_seed, &params, &unit, g.node_count(), g.edge_count(), &m));
                }
                Err(Error::DegenerateParameters) => {
                    warn!("graph {i}: degenerate parameters {params:?}, resampling");
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::DegenerateParameters)
    };
    let rows: Vec<ManifestRow> = cfg
        .pool()?
        .install(|| (0..count).into_par_iter().map(one).collect::<Result<_>>())?;
    write_manifest(&rows, dir.join("manifest.csv"))?;
    Ok(rows)
}

/// Fitness of a dataset's own metric histogram.
pub fn histogram_fitness(points: &[MetricPoint], grid: &MetricGrid) -> Result<f64> {
    let mut h = vec![0.0; grid.cells()];
    for p in points {
        h[grid.locate(p)] += 1.0;
    }
    let n = points.len() as f64;
    h.iter_mut().for_each(|x| *x /= n);
    Ok(bargaining_fitness(&h)?.value())
}

pub fn model_from_rows(rows: &[ManifestRow], metric_grid: MetricGrid, param_grid: ParamGrid) -> Result<ConditionalModel> {
    let records: Vec<_> = rows.iter().map(|r| (r.unit(), r.metrics())).collect();
    crate::grid::build_conditional(&records, metric_grid, param_grid)
}

pub struct BaselineOutput {
    pub rows: Vec<ManifestRow>,
    pub model: ConditionalModel,
}

/// Naive baseline: `n` graphs with uniformly drawn parameters, their
/// manifest, the serialized conditional model and a summary report.
pub fn cmd_baseline(cfg: &RunConfig) -> Result<BaselineOutput> {
    cfg.validate()?;
    let dir = cfg.baseline_dir();
    create_dir(&dir)?;
    info!("baseline: generating {} graphs with E in [{}, {}]", cfg.n, cfg.e_min, cfg.e_max);
    let rows = generate_dataset(cfg, BASELINE_STREAM, cfg.n, &dir, |rng| {
        sample_baseline(cfg.e_min, cfg.e_max, rng)
    })?;
    let model = model_from_rows(&rows, cfg.metric_grid(), cfg.param_grid())?;
    let path = cfg.conditional_path();
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    model.write_to(BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;

    let points: Vec<MetricPoint> = rows.iter().map(ManifestRow::metrics).collect();
    let report = dataset_report("baseline", &points, &cfg.metric_grid())?;
    write_text(&dir.join("report.csv"), &report)?;
    info!(
        "baseline: {} observed parameter cells of {}",
        model.rows().len(),
        cfg.param_grid().cells()
    );
    Ok(BaselineOutput { rows, model })
}

/// `dataset,count,corr,...,histogram_fitness,low_clustering_fraction` CSV for one dataset.
pub fn dataset_report(label: &str, points: &[MetricPoint], grid: &MetricGrid) -> Result<String> {
    let mut out = format!("{},histogram_fitness,low_clustering_fraction\n", StatsReport::CSV_HEADER);
    out.push_str(&dataset_report_row(label, points, grid)?);
    Ok(out)
}

fn dataset_report_row(label: &str, points: &[MetricPoint], grid: &MetricGrid) -> Result<String> {
    let stats = compute_stats(points, grid)?;
    let fitness = histogram_fitness(points, grid)?;
    let low_edge = 1.0 / grid.clustering_bins as f64;
    let low = points.iter().filter(|p| p.clustering < low_edge).count() as f64 / points.len() as f64;
    Ok(format!("{},{fitness},{low}\n", stats.csv_row(label)))
}

pub fn read_model(path: &Path) -> Result<ConditionalModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ConditionalModel::read_from(BufReader::new(file))
}

pub fn write_q(q: &QVector, path: &Path) -> Result<()> {
    let mut text = String::new();
    for (k, v) in QVector::keys().iter().zip(q.to_array()) {
        text.push_str(&format!("{k}={v}\n"));
    }
    write_text(path, &text)
}

pub fn read_q(path: &Path) -> Result<QVector> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let values: BTreeMap<String, String> = parse_key_values(&text)?.into_iter().collect();
    let keys = QVector::keys();
    let mut arr = [0.0; 8];
    for (k, slot) in keys.iter().zip(arr.iter_mut()) {
        let v = values
            .get(k)
            .ok_or_else(|| Error::InvalidConfig(format!("{}: missing key {k}", path.display())))?;
        *slot = v
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{}: bad value '{v}' for {k}", path.display())))?;
    }
    if let Some(extra) = values.keys().find(|k| !keys.contains(k)) {
        return Err(Error::InvalidConfig(format!("{}: unknown key {extra}", path.display())));
    }
    QVector::from_array(&arr)
}

/// Optimizes `q` against a stored conditional model: splits its records into
/// train and holdout, runs the search, writes `best_q.txt` and the trace.
pub fn cmd_optimize(cfg: &RunConfig, model_path: &Path) -> Result<OptimizationResult> {
    cfg.optimizer.validate()?;
    let model = read_model(model_path)?;
    let opt = cfg.optimizer_config();
    let (train, holdout) = split_model(&model, opt.holdout_fraction, opt.seed)?;
    info!("optimize: {} train / {} holdout records", train.total(), holdout.total());
    let result = cfg.pool()?.install(|| optimize(&train, &holdout, &opt))?;

    let final_eval = Evaluator::new(&holdout)?.evaluate(&result.best_q);
    if final_eval.penalized {
        return Err(Error::CoverageCollapse(final_eval.coverage));
    }
    create_dir(&cfg.out)?;
    write_q(&result.best_q, &cfg.best_q_path())?;
    let mut trace = String::from("generation,best_train,holdout,best_holdout,coverage\n");
    for s in &result.trace {
        trace.push_str(&format!(
            "{},{},{},{},{}\n",
            s.generation, s.best_train.0, s.holdout.0, s.best_holdout.0, s.coverage
        ));
    }
    write_text(&cfg.out.join("optimize_trace.csv"), &trace)?;
    info!(
        "optimize: best holdout f {:.5} after {} generations",
        result.best_holdout_fitness.0, result.generations_run
    );
    Ok(result)
}

/// Result dataset: `count` graphs with parameters drawn from `q`.
pub fn cmd_generate(cfg: &RunConfig, q: &QVector, count: usize) -> Result<Vec<ManifestRow>> {
    cfg.validate()?;
    q.validate()?;
    let dir = cfg.result_dir();
    create_dir(&dir)?;
    info!("generate: {count} graphs from {q:?}");
    let rows = generate_dataset(cfg, RESULT_STREAM, count, &dir, |rng| {
        sample_from_q(q, cfg.e_min, cfg.e_max, rng)
    })?;
    let points: Vec<MetricPoint> = rows.iter().map(ManifestRow::metrics).collect();
    if points.len() >= 2 {
        write_text(&dir.join("report.csv"), &dataset_report("result", &points, &cfg.metric_grid())?)?;
    }
    Ok(rows)
}

/// Metrics of one real validation graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationRow {
    pub name: String,
    pub n_final: usize,
    pub e_final: usize,
    pub metrics: MetricPoint,
    /// Whether the result dataset has a graph in the same metric cell.
    pub covered: bool,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub failures: Vec<(PathBuf, String)>,
    pub result_stats: Option<StatsReport>,
    pub validation_stats: Option<StatsReport>,
    /// Share of validation graphs in a metric cell the result dataset
    /// occupies; `None` without validation graphs.
    pub coverage: Option<f64>,
}

/// Reads a validation graph (MatrixMarket `.mtx`, otherwise an edge list)
/// and reduces it to its largest connected component.
pub fn load_validation_graph(path: &Path) -> Result<graph::Graph> {
    let is_mtx = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("mtx"));
    if is_mtx {
        crate::io::read_matrix_market_pattern(path)
    } else {
        graph::largest_connected_component(&crate::io::read_edge_list(path)?)
    }
}

/// Compares real graphs against a result manifest. Unreadable files are
/// reported and skipped.
pub fn cmd_validate(cfg: &RunConfig, result_manifest: &Path, files: &[PathBuf]) -> Result<ValidationReport> {
    let grid = cfg.metric_grid();
    grid.validate()?;
    let result_rows = read_manifest(result_manifest)?;
    let result_points: Vec<MetricPoint> = result_rows.iter().map(ManifestRow::metrics).collect();
    let occupied: HashSet<usize> = result_points.iter().map(|p| grid.locate(p)).collect();

    let loaded: Vec<(PathBuf, Result<(usize, usize, MetricPoint)>)> = cfg.pool()?.install(|| {
        files
            .par_iter()
            .map(|path| {
                let r = load_validation_graph(path).and_then(|g| {
                    let m = graph::metric_projection(&g)?;
                    Ok((g.node_count(), g.edge_count(), m))
                });
                (path.clone(), r)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (path, r) in loaded {
        match r {
            Ok((n, e, m)) => rows.push(ValidationRow {
                name: path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
                n_final: n,
                e_final: e,
                metrics: m,
                covered: occupied.contains(&grid.locate(&m)),
            }),
            Err(e) => {
                warn!("validate: skipping {}: {e}", path.display());
                failures.push((path, e.to_string()));
            }
        }
    }
    let validation_points: Vec<MetricPoint> = rows.iter().map(|r| r.metrics).collect();
    let coverage = (!rows.is_empty()).then(|| rows.iter().filter(|r| r.covered).count() as f64 / rows.len() as f64);
    let report = ValidationReport {
        result_stats: compute_stats(&result_points, &grid).ok(),
        validation_stats: compute_stats(&validation_points, &grid).ok(),
        rows,
        failures,
        coverage,
    };

    let dir = cfg.out.join("validation");
    create_dir(&dir)?;
    let mut table = String::from("name,n_final,e_final,clustering,dlog,covered\n");
    for r in &report.rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.name, r.n_final, r.e_final, r.metrics.clustering, r.metrics.dlog, r.covered
        ));
    }
    write_text(&dir.join("validation.csv"), &table)?;

    let scatter_path = dir.join("scatter.csv");
    let file = File::create(&scatter_path).map_err(|e| Error::io(&scatter_path, e))?;
    emit_scatter_csv(&[("result", &result_points), ("validation", &validation_points)], BufWriter::new(file))
        .map_err(|source| Error::Csv { path: scatter_path, source })?;

    let mut text = format!("{}\n", StatsReport::CSV_HEADER);
    if let Some(s) = &report.result_stats {
        text.push_str(&s.csv_row("result"));
        text.push('\n');
    }
    if let Some(s) = &report.validation_stats {
        text.push_str(&s.csv_row("validation"));
        text.push('\n');
    }
    match report.coverage {
        Some(c) => text.push_str(&format!("coverage,{c}\n")),
        None => text.push_str("coverage,n/a\n"),
    }
    for (p, e) in &report.failures {
        text.push_str(&format!("unreadable,{},{e}\n", p.display()));
    }
    write_text(&dir.join("report.txt"), &text)?;
    Ok(report)
}

/// Statistics for several manifests, one CSV row each, plus the fitness of
/// each dataset's metric histogram.
pub fn cmd_report(cfg: &RunConfig, manifests: &[(String, PathBuf)]) -> Result<String> {
    let grid = cfg.metric_grid();
    grid.validate()?;
    let mut out = format!("{},histogram_fitness,low_clustering_fraction\n", StatsReport::CSV_HEADER);
    for (label, path) in manifests {
        let rows = read_manifest(path)?;
        let points: Vec<MetricPoint> = rows.iter().map(ManifestRow::metrics).collect();
        out.push_str(&dataset_report_row(label, &points, &grid)?);
    }
    Ok(out)
}

/// Writes the combined `dataset,clustering,dlog` scatter for several manifests.
pub fn write_scatter(manifests: &[(String, PathBuf)], mut w: impl Write) -> Result<()> {
    let mut sets = Vec::new();
    for (label, path) in manifests {
        let rows = read_manifest(path)?;
        sets.push((label.as_str(), rows.iter().map(ManifestRow::metrics).collect::<Vec<_>>()));
    }
    let borrowed: Vec<(&str, &[MetricPoint])> = sets.iter().map(|(l, p)| (*l, p.as_slice())).collect();
    emit_scatter_csv(&borrowed, &mut w).map_err(|source| Error::Csv { path: PathBuf::from("<scatter>"), source })
}
