//! Population-based search over the eight Beta shape parameters.
//!
//! The search is differential evolution (`rand/1/bin`) carried out on the
//! logarithm of each shape parameter, clamped into `[lower, upper]`. The
//! population starts at the uninformative all-ones vector with
//! multiplicative log-uniform jitter; individual 0 is kept exactly at
//! all-ones. Selection uses the training model only. After every
//! generation the best training individual is scored on a holdout model;
//! the search stops once the best holdout fitness has improved by less than
//! `tolerance` for `patience` consecutive generations, and the individual
//! with the best holdout score is returned.

use log::info;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{build_conditional, ConditionalModel, MetricGrid, ParamGrid};
use crate::graph::MetricPoint;
use crate::objective::{bargaining_fitness, fitness_bounds, Fitness};
use crate::params::{QVector, UnitPoint, BETA_PARAM_MAX, DIMS};
use crate::seeds;

const GENES: usize = 2 * DIMS;

/// Candidates whose observed mass is below this fraction of the all-ones
/// reference coverage are scored as `f_max`.
pub const COVERAGE_PENALTY_RATIO: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Minimum holdout improvement per generation that keeps the search going.
    pub tolerance: f64,
    /// Consecutive generations below `tolerance` before stopping.
    pub patience: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub holdout_fraction: f64,
    /// Differential weight `F`.
    pub mutation: f64,
    /// Binomial crossover rate `CR`.
    pub crossover: f64,
    /// Initial jitter: each gene is `exp(U(-ln j, ln j))`.
    pub init_jitter: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population_size: 32,
            max_generations: 50,
            tolerance: 1e-3,
            patience: 3,
            lower_bound: 0.01,
            upper_bound: BETA_PARAM_MAX,
            holdout_fraction: 0.2,
            mutation: 0.7,
            crossover: 0.9,
            init_jitter: 2.0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 8 {
            return bad(format!("population_size {} < 8", self.population_size));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if !(self.lower_bound > 0.0 && self.lower_bound < self.upper_bound && self.upper_bound <= BETA_PARAM_MAX) {
            return bad(format!(
                "bounds [{}, {}] must lie in (0, {BETA_PARAM_MAX}]",
                self.lower_bound, self.upper_bound
            ));
        }
        if !(self.lower_bound <= 1.0 && 1.0 <= self.upper_bound) {
            return bad("bounds must contain the all-ones starting point".into());
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad(format!("holdout_fraction {} outside (0, 1)", self.holdout_fraction));
        }
        if !(self.mutation > 0.0 && self.mutation <= 2.0) {
            return bad(format!("mutation {} outside (0, 2]", self.mutation));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return bad(format!("crossover {} outside [0, 1]", self.crossover));
        }
        if !(self.init_jitter >= 1.0) {
            return bad(format!("init_jitter {} < 1", self.init_jitter));
        }
        Ok(())
    }
}

/// Fitness of `q` on one model plus the coverage behind it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub fitness: Fitness,
    pub coverage: f64,
    pub penalized: bool,
}

/// Scores candidates against one conditional model.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    model: &'a ConditionalModel,
    reference_coverage: f64,
    f_max: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a ConditionalModel) -> Result<Self> {
        let (_, f_max) = fitness_bounds(model.metric_grid().cells())?;
        Ok(Evaluator {
            model,
            reference_coverage: model.coverage(&QVector::UNIFORM)?,
            f_max,
        })
    }

    /// Coverage of the all-ones `q`, i.e. the observed share of the unit cube.
    pub fn reference_coverage(&self) -> f64 {
        self.reference_coverage
    }

    pub fn evaluate(&self, q: &QVector) -> Evaluation {
        let penalty = |coverage| Evaluation { fitness: Fitness(self.f_max), coverage, penalized: true };
        match self.model.predict(q) {
            Ok(p) if p.coverage >= COVERAGE_PENALTY_RATIO * self.reference_coverage => {
                match bargaining_fitness(&p.probs) {
                    Ok(fitness) => Evaluation { fitness, coverage: p.coverage, penalized: false },
                    Err(_) => penalty(p.coverage),
                }
            }
            Ok(p) => penalty(p.coverage),
            Err(Error::CoverageCollapse(c)) => penalty(c),
            Err(_) => penalty(0.0),
        }
    }
}

/// One line of the per-generation trace. Generation 0 is the initial population.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best training fitness in the population.
    pub best_train: Fitness,
    /// Holdout fitness of that best training individual.
    pub holdout: Fitness,
    /// Best holdout fitness seen so far.
    pub best_holdout: Fitness,
    /// Training coverage of the best training individual.
    pub coverage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    /// Individual with the best holdout fitness seen.
    pub best_q: QVector,
    pub best_train_fitness: Fitness,
    pub best_holdout_fitness: Fitness,
    pub trace: Vec<GenerationStats>,
    pub generations_run: usize,
}

impl OptimizationResult {
    pub fn train_fitness(&self) -> Vec<Fitness> {
        self.trace.iter().map(|s| s.best_train).collect()
    }

    pub fn holdout_fitness(&self) -> Vec<Fitness> {
        self.trace.iter().map(|s| s.holdout).collect()
    }
}

/// Disjoint random split of `0..n` into (train, holdout) index lists, each
/// in ascending order.
pub fn split_indices(n: usize, holdout_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 10 {
        return Err(Error::InvalidConfig(format!("need at least 10 records to split, got {n}")));
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("holdout fraction {holdout_fraction} outside (0, 1)")));
    }
    let k = (n as f64 * holdout_fraction).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction {holdout_fraction} leaves an empty side for {n} records"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeds::stream(seed, &[0x5911]));
    let mut holdout = idx[..k].to_vec();
    let mut train = idx[k..].to_vec();
    holdout.sort_unstable();
    train.sort_unstable();
    Ok((train, holdout))
}

/// Train/holdout conditional models from a random split of the records.
pub fn split_baseline(
    records: &[(UnitPoint, MetricPoint)],
    metric_grid: MetricGrid,
    param_grid: ParamGrid,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(ConditionalModel, ConditionalModel)> {
    let (train, holdout) = split_indices(records.len(), holdout_fraction, seed)?;
    let pick = |ids: &[usize]| ids.iter().map(|&i| records[i]).collect::<Vec<_>>();
    Ok((
        build_conditional(&pick(&train), metric_grid, param_grid)?,
        build_conditional(&pick(&holdout), metric_grid, param_grid)?,
    ))
}

/// Same split, applied to the records underlying an existing model.
pub fn split_model(
    model: &ConditionalModel,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(ConditionalModel, ConditionalModel)> {
    let pairs: Vec<(u64, usize)> = model.cell_pairs().collect();
    let (train, holdout) = split_indices(pairs.len(), holdout_fraction, seed)?;
    let build = |ids: &[usize]| {
        ConditionalModel::from_cell_pairs(
            *model.metric_grid(),
            *model.param_grid(),
            ids.iter().map(|&i| pairs[i]),
        )
    };
    Ok((build(&train)?, build(&holdout)?))
}

type Genome = [f64; GENES];

struct Bounds {
    lo: f64,
    hi: f64,
    ln_lo: f64,
    ln_hi: f64,
}

impl Bounds {
    fn to_q(&self, g: &Genome) -> QVector {
        let raw: Genome = g.map(|x| x.clamp(self.ln_lo, self.ln_hi).exp().clamp(self.lo, self.hi));
        assert!(raw.iter().all(|&x| x > 0.0 && x <= BETA_PARAM_MAX));
        QVector::from_array(&raw).expect("clamped genome is a valid q")
    }

    fn clamp(&self, g: &mut Genome) {
        g.iter_mut().for_each(|x| *x = x.clamp(self.ln_lo, self.ln_hi));
    }
}

fn best_index(fitness: &[Evaluation]) -> usize {
    let mut best = 0;
    for (i, e) in fitness.iter().enumerate() {
        if e.fitness.0 < fitness[best].fitness.0 {
            best = i;
        }
    }
    best
}

/// Minimizes the bargaining fitness on `train`, early-stopping on `holdout`.
pub fn optimize(train: &ConditionalModel, holdout: &ConditionalModel, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    train.check_compatible(holdout)?;
    let train_eval = Evaluator::new(train)?;
    let holdout_eval = Evaluator::new(holdout)?;
    let bounds = Bounds {
        lo: cfg.lower_bound,
        hi: cfg.upper_bound,
        ln_lo: cfg.lower_bound.ln(),
        ln_hi: cfg.upper_bound.ln(),
    };

    let jitter = cfg.init_jitter.ln();
    let mut population: Vec<Genome> = (0..cfg.population_size)
        .map(|i| {
            if i == 0 || jitter == 0.0 {
                return [0.0; GENES];
            }
            let mut rng = seeds::stream(cfg.seed, &[0, i as u64]);
            let mut g: Genome = std::array::from_fn(|_| rng.random_range(-jitter..=jitter));
            bounds.clamp(&mut g);
            g
        })
        .collect();
    let mut scores: Vec<Evaluation> = population
        .par_iter()
        .map(|g| train_eval.evaluate(&bounds.to_q(g)))
        .collect();

    let mut trace = Vec::new();
    let best = best_index(&scores);
    let q = bounds.to_q(&population[best]);
    let h = holdout_eval.evaluate(&q);
    let mut best_q = q;
    let mut best_holdout = h.fitness;
    let mut best_holdout_train = scores[best].fitness;
    trace.push(GenerationStats {
        generation: 0,
        best_train: scores[best].fitness,
        holdout: h.fitness,
        best_holdout,
        coverage: scores[best].coverage,
    });
    log_generation(trace.last().unwrap());

    let n = cfg.population_size;
    let mut stalled = 0;
    let mut generations_run = 0;
    for generation in 1..=cfg.max_generations {
        let trials: Vec<(Genome, Evaluation)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = seeds::stream(cfg.seed, &[generation as u64, i as u64]);
                let mut pick = || loop {
                    let r = rng.random_range(0..n);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let forced = rng.random_range(0..GENES);
                let mut trial = population[i];
                for k in 0..GENES {
                    if k == forced || rng.random::<f64>() < cfg.crossover {
                        trial[k] = population[r1][k] + cfg.mutation * (population[r2][k] - population[r3][k]);
                    }
                }
                bounds.clamp(&mut trial);
                let eval = train_eval.evaluate(&bounds.to_q(&trial));
                (trial, eval)
            })
            .collect();
        for (i, (trial, eval)) in trials.into_iter().enumerate() {
            if eval.fitness.0 <= scores[i].fitness.0 {
                population[i] = trial;
                scores[i] = eval;
            }
        }
        generations_run = generation;

        let best = best_index(&scores);
        let q = bounds.to_q(&population[best]);
        let h = holdout_eval.evaluate(&q);
        let improvement = best_holdout.0 - h.fitness.0;
        if h.fitness.0 < best_holdout.0 {
            best_holdout = h.fitness;
            best_q = q;
            best_holdout_train = scores[best].fitness;
        }
        trace.push(GenerationStats {
            generation,
            best_train: scores[best].fitness,
            holdout: h.fitness,
            best_holdout,
            coverage: scores[best].coverage,
        });
        log_generation(trace.last().unwrap());

        if improvement < cfg.tolerance {
            stalled += 1;
            if stalled >= cfg.patience {
                break;
            }
        } else {
            stalled = 0;
        }
    }

    Ok(OptimizationResult {
        best_q,
        best_train_fitness: best_holdout_train,
        best_holdout_fitness: best_holdout,
        trace,
        generations_run,
    })
}

fn log_generation(s: &GenerationStats) {
    info!(
        "generation {}: best train f {:.5}, best holdout f {:.5}, coverage {:.5}",
        s.generation, s.best_train.0, s.best_holdout.0, s.coverage
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_rows_model(records_per_cell: usize) -> ConditionalModel {
        let pg = ParamGrid { bins: 2 };
        let mg = MetricGrid::square(2);
        let pairs = (0..pg.cells()).flat_map(|i| (0..records_per_cell).map(move |k| (i, k % 4)));
        ConditionalModel::from_cell_pairs(mg, pg, pairs).unwrap()
    }

    #[test]
    fn split_sizes() {
        let (train, holdout) = split_indices(10, 0.2, 1).unwrap();
        assert_eq!((train.len(), holdout.len()), (8, 2));
        assert!(split_indices(10, 0.0, 1).is_err());
        assert!(split_indices(10, 1.0, 1).is_err());
        assert!(split_indices(9, 0.5, 1).is_err());
        assert!(split_indices(10, 0.01, 1).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        for (n, frac, seed) in [(10usize, 0.3, 5u64), (137, 0.2, 9), (1000, 0.77, 2)] {
            let (mut a, b) = split_indices(n, frac, seed).unwrap();
            assert_eq!(a.len() + b.len(), n);
            a.extend(b);
            a.sort_unstable();
            assert_eq!(a, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn split_model_preserves_records() {
        let m = uniform_rows_model(4);
        let (train, holdout) = split_model(&m, 0.25, 3).unwrap();
        assert_eq!(train.total() + holdout.total(), m.total());
        assert_eq!(train.merge(&holdout).unwrap(), m);
    }

    #[test]
    fn uniform_rows_converge_immediately() {
        let m = uniform_rows_model(4);
        let cfg = OptimizerConfig { seed: 11, ..Default::default() };
        let r = optimize(&m, &m, &cfg).unwrap();
        let (f_min, _) = fitness_bounds(4).unwrap();
        assert!((r.trace[1].best_train.0 - f_min).abs() < cfg.tolerance);
        assert!((r.best_holdout_fitness.0 - f_min).abs() < cfg.tolerance);
        assert_eq!(r.generations_run, cfg.patience);
    }

    #[test]
    fn rejects_bad_config() {
        let m = uniform_rows_model(1);
        for cfg in [
            OptimizerConfig { population_size: 4, ..Default::default() },
            OptimizerConfig { tolerance: 0.0, ..Default::default() },
            OptimizerConfig { lower_bound: 0.0, ..Default::default() },
            OptimizerConfig { upper_bound: 101.0, ..Default::default() },
        ] {
            assert!(matches!(optimize(&m, &m, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn incompatible_models_are_rejected() {
        let a = uniform_rows_model(1);
        let b = ConditionalModel::from_cell_pairs(MetricGrid::default(), ParamGrid { bins: 2 }, [(0, 0)]).unwrap();
        assert!(optimize(&a, &b, &OptimizerConfig::default()).is_err());
    }
}
