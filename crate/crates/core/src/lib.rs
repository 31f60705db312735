//! Synthetic graph datasets spread evenly over a graph-metric space.
//!
//! The pipeline generates a naive RMAT baseline, estimates how parameter
//! cells map onto metric cells, and then searches for Beta distributions
//! over the RMAT parameters that minimize a cooperative-bargaining fitness
//! of the predicted metric histogram. The optimized distributions drive a
//! result dataset that can be compared against real graphs.
//!
//! Module map:
//! - [`graph`]: simple undirected graphs, connected components, metrics.
//! - [`rmat`]: RMAT edge sampling and sanitization.
//! - [`params`]: feasible RMAT parameter region, unit coordinates, Beta CDF.
//! - [`grid`]: metric/parameter grids and the empirical conditional model.
//! - [`objective`]: bargaining fitness and its bounds.
//! - [`optimizer`]: differential-evolution search with holdout early stopping.
//! - [`io`]: edge lists, MatrixMarket, manifests, statistics, scatter CSV.
//! - [`pipeline`]: the `baseline`/`optimize`/`generate`/`validate`/`report` commands.

pub mod error;
pub mod graph;
pub mod grid;
pub mod io;
pub mod objective;
pub mod optimizer;
pub mod params;
pub mod pipeline;
pub mod rmat;
pub mod seeds;

pub use error::{Error, Result};
pub use graph::{Graph, MetricPoint};
pub use grid::{ConditionalModel, MetricGrid, ParamGrid};
pub use objective::{bargaining_fitness, fitness_bounds, Fitness};
pub use optimizer::{optimize, OptimizationResult, OptimizerConfig};
pub use params::{BetaSpec, ParamBounds, QVector, UnitPoint};
pub use rmat::RmatParams;
