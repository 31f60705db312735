//! Simple undirected graphs and the metrics that place them in metric space.
//!
//! The clustering metric is the *mean local* clustering coefficient, not the
//! global transitivity ratio. Nodes with degree below two contribute zero.

use crate::error::{Error, Result};

pub type NodeId = u32;

/// Simple undirected graph. Adjacency lists are sorted, symmetric and free
/// of self-loops and duplicates; this is enforced at construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

/// Position of a graph in metric space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricPoint {
    /// Mean local clustering coefficient, in `[0, 1]`.
    pub clustering: f64,
    /// `log10` of the density `2E / (N (N - 1))`.
    pub dlog: f64,
}

impl Graph {
    /// Builds a graph on `node_count` nodes. Self-loops are dropped and
    /// `(u, v)` / `(v, u)` collapse into one undirected edge.
    ///
    /// Panics if an endpoint is `>= node_count`.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adjacency = vec![Vec::new(); node_count];
        for (u, v) in edges {
            assert!(
                (u as usize) < node_count && (v as usize) < node_count,
                "edge ({u}, {v}) out of range for {node_count} nodes"
            );
            if u == v {
                continue;
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        let mut degree_sum = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            degree_sum += list.len();
        }
        Graph {
            adjacency,
            edge_count: degree_sum / 2,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            let u = u as NodeId;
            list.iter().copied().filter(move |&v| v > u).map(move |v| (u, v))
        })
    }

    /// Connected component label per node, plus the number of components.
    /// Labels are assigned in order of each component's smallest node id.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start as NodeId);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if label[v as usize] == usize::MAX {
                        label[v as usize] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() > 0 && self.components().1 == 1
    }

    /// Subgraph induced by the nodes where `keep` is true, relabeled to
    /// `0..k` in ascending order of original id.
    pub fn induced(&self, keep: &[bool]) -> Graph {
        let mut new_id = vec![NodeId::MAX; self.node_count()];
        let mut next = 0;
        for (v, &k) in keep.iter().enumerate() {
            if k {
                new_id[v] = next;
                next += 1;
            }
        }
        let mut adjacency = Vec::with_capacity(next as usize);
        let mut degree_sum = 0;
        for (v, list) in self.adjacency.iter().enumerate() {
            if !keep[v] {
                continue;
            }
            // relabeling is monotone, so the filtered list stays sorted
            let mapped: Vec<NodeId> = list
                .iter()
                .filter(|&&w| keep[w as usize])
                .map(|&w| new_id[w as usize])
                .collect();
            degree_sum += mapped.len();
            adjacency.push(mapped);
        }
        Graph {
            adjacency,
            edge_count: degree_sum / 2,
        }
    }
}

/// Largest connected component, relabeled to `0..k`. Among equally large
/// components the one holding the smallest original node id wins.
pub fn largest_connected_component(g: &Graph) -> Result<Graph> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let (label, count) = g.components();
    if count == 1 {
        return Ok(g.clone());
    }
    let mut sizes = vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    // labels follow smallest node id, so the first maximum is the tie winner
    let mut best = 0;
    for (l, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = l;
        }
    }
    let keep: Vec<bool> = label.iter().map(|&l| l == best).collect();
    Ok(g.induced(&keep))
}

/// Number of triangles through each node.
///
/// Edges are oriented from lower to higher (degree, id) rank so each
/// triangle is found exactly once; hubs never scan their full neighborhood
/// twice, which keeps the cost near `O(E^1.5)`.
pub fn triangles_per_node(g: &Graph) -> Vec<u64> {
    let n = g.node_count();
    let rank_less = |u: NodeId, v: NodeId| (g.degree(u), u) < (g.degree(v), v);
    let forward: Vec<Vec<NodeId>> = (0..n as NodeId)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&v| rank_less(u, v))
                .collect()
        })
        .collect();

    let mut tri = vec![0u64; n];
    let mut mark = vec![false; n];
    for u in 0..n {
        for &v in &forward[u] {
            mark[v as usize] = true;
        }
        for &v in &forward[u] {
            for &w in &forward[v as usize] {
                if mark[w as usize] {
                    tri[u] += 1;
                    tri[v as usize] += 1;
                    tri[w as usize] += 1;
                }
            }
        }
        for &v in &forward[u] {
            mark[v as usize] = false;
        }
    }
    tri
}

/// Mean over nodes of `2 T(v) / (deg(v) (deg(v) - 1))`, with zero for
/// nodes of degree below two. Returns 0 for the empty graph.
pub fn mean_local_clustering(g: &Graph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let tri = triangles_per_node(g);
    let sum: f64 = tri
        .iter()
        .enumerate()
        .map(|(v, &t)| {
            let d = g.degree(v as NodeId) as f64;
            if d < 2.0 {
                0.0
            } else {
                2.0 * t as f64 / (d * (d - 1.0))
            }
        })
        .sum();
    sum / n as f64
}

/// `log10(2E / (N (N - 1)))`.
pub fn log_density(node_count: usize, edge_count: usize) -> f64 {
    let n = node_count as f64;
    (2.0 * edge_count as f64 / (n * (n - 1.0))).log10()
}

/// Metric projection of a connected graph: mean clustering and log-density
/// of the graph as given (final node and edge counts).
pub fn metric_projection(g: &Graph) -> Result<MetricPoint> {
    if g.node_count() < 2 {
        return Err(Error::DegenerateGraph);
    }
    Ok(MetricPoint {
        clustering: mean_local_clustering(g),
        dlog: log_density(g.node_count(), g.edge_count()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: u32) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::from_edges(n as usize, edges)
    }

    fn star(leaves: u32) -> Graph {
        Graph::from_edges(leaves as usize + 1, (1..=leaves).map(|v| (0, v)))
    }

    #[test]
    fn construction_normalizes_edges() {
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (2, 2), (1, 2), (1, 2)]);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(!g.has_edge(2, 2));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn lcc_tie_goes_to_smallest_node() {
        let g = Graph::from_edges(7, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let lcc = largest_connected_component(&g).unwrap();
        assert_eq!(lcc, complete(3));

        // same sizes, but the component with node 0 now sits on the high ids
        let g = Graph::from_edges(7, [(1, 2), (2, 3), (1, 3), (0, 5), (5, 6), (0, 6)]);
        let lcc = largest_connected_component(&g).unwrap();
        assert_eq!(lcc, complete(3));
        assert_eq!(lcc.node_count(), 3);
    }

    #[test]
    fn lcc_of_connected_graph_is_identity() {
        let g = complete(5);
        assert_eq!(largest_connected_component(&g).unwrap(), g);
    }

    #[test]
    fn lcc_larger_component_wins() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]);
        let lcc = largest_connected_component(&g).unwrap();
        assert_eq!(lcc, Graph::from_edges(3, [(0, 1), (1, 2)]));
    }

    #[test]
    fn lcc_empty_graph_errors() {
        let g = Graph::from_edges(0, []);
        assert!(matches!(largest_connected_component(&g), Err(Error::EmptyGraph)));
    }

    #[test]
    fn clustering_fixed_cases() {
        assert_eq!(mean_local_clustering(&complete(3)), 1.0);
        assert_eq!(mean_local_clustering(&star(4)), 0.0);
        // K4 minus edge {2,3}: nodes 0,1 have c=1, nodes 2,3 have c=2/3
        let k4e = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        let expected = (1.0 + 1.0 + 2.0 / 3.0 + 2.0 / 3.0) / 4.0;
        assert!((mean_local_clustering(&k4e) - expected).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let m = metric_projection(&complete(3)).unwrap();
        assert_eq!(m, MetricPoint { clustering: 1.0, dlog: 0.0 });

        let path = Graph::from_edges(3, [(0, 1), (1, 2)]);
        let m = metric_projection(&path).unwrap();
        assert_eq!(m.clustering, 0.0);
        assert!((m.dlog - (2.0f64 / 3.0).log10()).abs() < 1e-15);
        assert!((m.dlog + 0.1761).abs() < 1e-4);

        let m = metric_projection(&star(10)).unwrap();
        assert_eq!(m.clustering, 0.0);
        assert!((m.dlog + 0.7404).abs() < 1e-4);
    }

    #[test]
    fn projection_rejects_single_node() {
        let g = Graph::from_edges(1, []);
        assert!(matches!(metric_projection(&g), Err(Error::DegenerateGraph)));
    }

    #[test]
    fn triangle_counts_on_k4() {
        assert_eq!(triangles_per_node(&complete(4)), vec![3, 3, 3, 3]);
    }
}
