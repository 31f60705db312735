//! RMAT edge sampling and the sanitization that turns raw RMAT output into a
//! simple connected undirected graph.
//!
//! A non-power-of-two node count is handled by sampling over the enclosing
//! `2^k x 2^k` matrix and discarding edges with an endpoint in the padding.
//! Duplicate edges are merged, never resampled, so the final edge count is
//! at most the requested one.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{largest_connected_component, metric_projection, Graph, MetricPoint, NodeId};
use crate::seeds;

/// Number of seeds tried by [`generate_graph`] before giving up.
pub const MAX_ATTEMPTS: u64 = 16;

const SUM_TOL: f64 = 1e-9;
const DOMINANCE_TOL: f64 = 1e-12;

/// One RMAT configuration: requested node and edge counts plus the quadrant
/// probabilities `[a, b, c, d]` (top-left, top-right, bottom-left, bottom-right).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmatParams {
    pub n_param: u64,
    pub e_param: u64,
    pub r: [f64; 4],
}

impl RmatParams {
    pub fn new(n_param: u64, e_param: u64, r: [f64; 4]) -> Result<Self> {
        let p = RmatParams { n_param, e_param, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b, c, d] = self.r;
        if self.r.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParams(format!("negative or non-finite r {:?}", self.r)));
        }
        if ((a + b + c + d) - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParams(format!("r {:?} does not sum to 1", self.r)));
        }
        if b > a + DOMINANCE_TOL || c > a + DOMINANCE_TOL || d > a + DOMINANCE_TOL {
            return Err(Error::InvalidParams(format!("a is not dominant in {:?}", self.r)));
        }
        if self.n_param < 2 {
            return Err(Error::InvalidParams(format!("n_param {} < 2", self.n_param)));
        }
        if self.n_param > NodeId::MAX as u64 {
            return Err(Error::InvalidParams(format!("n_param {} too large", self.n_param)));
        }
        if self.e_param + 1 < self.n_param {
            return Err(Error::InvalidParams(format!(
                "e_param {} cannot connect {} nodes",
                self.e_param, self.n_param
            )));
        }
        Ok(())
    }

    /// Recursion depth `ceil(log2 n_param)`.
    pub fn levels(&self) -> u32 {
        ceil_log2(self.n_param)
    }
}

fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Quadrant index (0..4) for a uniform draw in `[0, 1)`.
#[inline]
fn quadrant(x: f64, cumulative: &[f64; 3]) -> u32 {
    if x < cumulative[0] {
        0
    } else if x < cumulative[1] {
        1
    } else if x < cumulative[2] {
        2
    } else {
        3
    }
}

/// Samples exactly `e_param` (row, column) pairs over the `2^k x 2^k`
/// adjacency matrix, one quadrant draw per level. Deterministic in `seed`.
pub fn generate_raw_edges(p: &RmatParams, seed: u64) -> Vec<(u64, u64)> {
    let mut rng = seeds::stream(seed, &[]);
    raw_edges_with(p, &mut rng)
}

fn raw_edges_with<R: Rng>(p: &RmatParams, rng: &mut R) -> Vec<(u64, u64)> {
    let [a, b, c, _] = p.r;
    let cumulative = [a, a + b, a + b + c];
    let levels = p.levels();
    (0..p.e_param)
        .map(|_| {
            let (mut row, mut col) = (0u64, 0u64);
            for _ in 0..levels {
                let q = quadrant(rng.random::<f64>(), &cumulative);
                row = (row << 1) | (q >> 1) as u64;
                col = (col << 1) | (q & 1) as u64;
            }
            (row, col)
        })
        .collect()
}

/// Undirected, simple, largest-component graph from raw RMAT pairs.
/// Self-loops and pairs touching ids `>= n_param` are dropped.
pub fn sanitize(edges: &[(u64, u64)], n_param: u64) -> Result<Graph> {
    let kept: Vec<(NodeId, NodeId)> = edges
        .iter()
        .filter(|&&(u, v)| u != v && u < n_param && v < n_param)
        .map(|&(u, v)| (u as NodeId, v as NodeId))
        .collect();
    if kept.is_empty() {
        return Err(Error::VanishedGraph);
    }
    let g = Graph::from_edges(n_param as usize, kept);
    largest_connected_component(&g)
}

/// Sanitized graph with its metric projection, plus the seed that produced
/// it. A vanished graph is retried with `seed + 1`, up to [`MAX_ATTEMPTS`] seeds.
pub fn generate_graph_with_seed(p: &RmatParams, seed: u64) -> Result<(Graph, MetricPoint, u64)> {
    p.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let s = seed.wrapping_add(attempt);
        match sanitize(&generate_raw_edges(p, s), p.n_param) {
            Ok(g) => {
                let m = metric_projection(&g)?;
                return Ok((g, m, s));
            }
            Err(Error::VanishedGraph) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateParameters)
}

pub fn generate_graph(p: &RmatParams, seed: u64) -> Result<(Graph, MetricPoint)> {
    generate_graph_with_seed(p, seed).map(|(g, m, _)| (g, m))
}
