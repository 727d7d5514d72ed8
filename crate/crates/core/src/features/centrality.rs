//! Centrality measures on undirected, unweighted simple graphs.
//!
//! All shortest paths are hop-count; betweenness follows Brandes'
//! accumulation over all unordered source/target pairs.

use crate::error::{Error, Result};
use std::collections::VecDeque;

/// Undirected simple graph over dense node indices.
#[derive(Debug, Clone)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>, // (edge index, neighbor)
}

impl SimpleGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop at node {a}")));
            }
            adj[a].push((i, b));
            adj[b].push((i, a));
        }
        Ok(SimpleGraph { n, edges, adj })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(_, v) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }
}

/// Node degrees as floats.
pub fn degree_centrality(g: &SimpleGraph) -> Vec<f64> {
    (0..g.node_count()).map(|v| g.degree(v) as f64).collect()
}

/// Node and link betweenness, Brandes' algorithm.
///
/// Scores sum shortest-path fractions over all unordered pairs `s != t`
/// (endpoints excluded for node scores) and are normalized to `[0, 1]`:
/// nodes by `(n-1)(n-2)/2`, links by `n(n-1)/2`.
pub fn betweenness_centrality(g: &SimpleGraph) -> (Vec<f64>, Vec<f64>) {
    let n = g.node_count();
    let m = g.edge_count();
    let mut node_score = vec![0.0; n];
    let mut edge_score = vec![0.0; m];

    let mut dist = vec![-1i64; n];
    let mut sigma = vec![0.0f64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (pred node, via edge)
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut queue = VecDeque::new();

    for s in 0..n {
        for v in 0..n {
            dist[v] = -1;
            sigma[v] = 0.0;
            delta[v] = 0.0;
            preds[v].clear();
        }
        stack.clear();
        queue.clear();

        dist[s] = 0;
        sigma[s] = 1.0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            stack.push(u);
            for &(e, v) in &g.adj[u] {
                if dist[v] < 0 {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                    preds[v].push((u, e));
                }
            }
        }

        while let Some(w) = stack.pop() {
            for &(v, e) in &preds[w] {
                let share = sigma[v] / sigma[w] * (1.0 + delta[w]);
                delta[v] += share;
                edge_score[e] += share;
            }
            if w != s {
                node_score[w] += delta[w];
            }
        }
    }

    // Each unordered pair was visited from both endpoints.
    let node_norm = if n >= 3 {
        (n - 1) as f64 * (n - 2) as f64 / 2.0
    } else {
        1.0
    };
    let edge_norm = if n >= 2 {
        n as f64 * (n - 1) as f64 / 2.0
    } else {
        1.0
    };
    for v in &mut node_score {
        *v = *v / 2.0 / node_norm;
    }
    for e in &mut edge_score {
        *e = *e / 2.0 / edge_norm;
    }
    (node_score, edge_score)
}

/// Dominant adjacency eigenvector by power iteration, max-normalized.
///
/// Returns `(centralities, lambda)` where `lambda` is the dominant
/// adjacency eigenvalue. Iteration runs on `A + I` so bipartite graphs
/// (where `+/-lambda` tie) still converge; the shift leaves eigenvectors
/// unchanged. Convergence: successive max-normalized iterates differ by
/// less than `tol` in max norm.
pub fn eigenvector_centrality(
    g: &SimpleGraph,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64)> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("eigenvector centrality".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected("eigenvector centrality".into()));
    }
    let mut v = vec![1.0f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = v.clone(); // the +I term
        for u in 0..n {
            for &(_, w) in &g.adj[u] {
                next[u] += v[w];
            }
        }
        let max = next.iter().cloned().fold(0.0f64, f64::max);
        if max == 0.0 {
            // single isolated node: centrality 1 by convention
            return Ok((vec![1.0; n], 0.0));
        }
        for x in &mut next {
            *x /= max;
        }
        residual = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        v = next;
        if residual < tol {
            // Rayleigh quotient of A (not A + I) for the reported lambda.
            let mut av = vec![0.0f64; n];
            for u in 0..n {
                for &(_, w) in &g.adj[u] {
                    av[u] += v[w];
                }
            }
            let num: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
            let den: f64 = v.iter().map(|x| x * x).sum();
            return Ok((v, num / den));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Closeness centrality `(n-1) / sum of hop distances`.
///
/// Requires a connected graph; unreachable nodes would make the distance
/// sum infinite.
pub fn closeness_centrality(g: &SimpleGraph) -> Result<Vec<f64>> {
    let n = g.node_count();
    if n == 1 {
        return Ok(vec![0.0]);
    }
    if !g.is_connected() {
        return Err(Error::Disconnected("closeness centrality".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut dist = vec![-1i64; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = -1);
        queue.clear();
        dist[s] = 0;
        queue.push_back(s);
        let mut sum = 0i64;
        while let Some(u) = queue.pop_front() {
            sum += dist[u];
            for &(_, v) in &g.adj[u] {
                if dist[v] < 0 {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        out.push((n - 1) as f64 / sum as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SimpleGraph {
        SimpleGraph::new(3, vec![(0, 1), (1, 2)]).unwrap()
    }

    fn star4() -> SimpleGraph {
        SimpleGraph::new(5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap()
    }

    fn triangle() -> SimpleGraph {
        SimpleGraph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degree_centrality(&star4())[0], 4.0);
        assert_eq!(degree_centrality(&path3())[1], 2.0);
        let lonely = SimpleGraph::new(1, vec![]).unwrap();
        assert_eq!(degree_centrality(&lonely)[0], 0.0);
    }

    #[test]
    fn betweenness_path3() {
        let (nodes, edges) = betweenness_centrality(&path3());
        assert!((nodes[1] - 1.0).abs() < 1e-12);
        assert!(nodes[0].abs() < 1e-12);
        // link (a,b): pairs (a,b) and (a,c) traverse it; normalizer 3
        assert!((edges[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn betweenness_triangle_is_zero() {
        let (nodes, _) = betweenness_centrality(&triangle());
        for v in nodes {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvector_star() {
        let (c, lambda) = eigenvector_centrality(&star4(), 1e-10, 10_000).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-8);
        for leaf in 1..5 {
            assert!((c[leaf] - 0.5).abs() < 1e-8, "leaf = {}", c[leaf]);
        }
        assert!((lambda - 2.0).abs() < 1e-8);
    }

    #[test]
    fn eigenvector_cycle_is_uniform() {
        let c5 = SimpleGraph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let (c, _) = eigenvector_centrality(&c5, 1e-10, 10_000).unwrap();
        for v in &c {
            assert!((v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenvector_single_edge() {
        let g = SimpleGraph::new(2, vec![(0, 1)]).unwrap();
        let (c, lambda) = eigenvector_centrality(&g, 1e-10, 10_000).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9);
        assert!((lambda - 1.0).abs() < 1e-8);
    }

    #[test]
    fn eigenvector_rejects_disconnected() {
        let g = SimpleGraph::new(3, vec![(0, 1)]).unwrap();
        assert!(matches!(
            eigenvector_centrality(&g, 1e-10, 100),
            Err(Error::Disconnected(_))
        ));
    }

    #[test]
    fn closeness_examples() {
        let c = closeness_centrality(&path3()).unwrap();
        assert!((c[1] - 1.0).abs() < 1e-12);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-12);
        let t = closeness_centrality(&triangle()).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_sums_to_twice_edges() {
        let g = SimpleGraph::new(6, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)])
            .unwrap();
        let sum: f64 = degree_centrality(&g).iter().sum();
        assert_eq!(sum, 2.0 * g.edge_count() as f64);
    }
}
