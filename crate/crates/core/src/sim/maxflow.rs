//! Capacitated max-flow (Dinic) over f64 capacities.
//!
//! Arcs are stored in reverse pairs (`arc ^ 1` is the reverse of `arc`),
//! so undirected links are two mutually-reverse arcs of equal capacity;
//! the net flow across the pair stays within the link capacity. The solver
//! may be re-run after capacities are raised, continuing from the current
//! flow without rerouting what is already allocated.

/// Residual tolerance: anything below this is treated as empty.
pub const FLOW_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    to: Vec<usize>,
    cap: Vec<f64>,
    orig: Vec<f64>,
    head: Vec<Vec<usize>>, // arcs leaving each node
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(n_nodes: usize) -> Self {
        FlowNetwork {
            to: Vec::new(),
            cap: Vec::new(),
            orig: Vec::new(),
            head: vec![Vec::new(); n_nodes],
            level: vec![-1; n_nodes],
            iter: vec![0; n_nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.head.len()
    }

    /// Adds a directed arc and returns its index.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.to.len();
        self.to.push(to);
        self.cap.push(cap);
        self.orig.push(cap);
        self.head[from].push(id);
        self.to.push(from);
        self.cap.push(0.0);
        self.orig.push(0.0);
        self.head[to].push(id + 1);
        id
    }

    /// Adds an undirected link as a mutually-reverse arc pair; returns the
    /// index of the `from -> to` arc.
    pub fn add_undirected(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.to.len();
        self.to.push(to);
        self.cap.push(cap);
        self.orig.push(cap);
        self.head[from].push(id);
        self.to.push(from);
        self.cap.push(cap);
        self.orig.push(cap);
        self.head[to].push(id + 1);
        id
    }

    /// Raises the capacity of a directed arc (never lowers).
    pub fn raise_cap(&mut self, arc: usize, new_cap: f64) {
        let extra = new_cap - self.orig[arc];
        if extra > 0.0 {
            self.orig[arc] = new_cap;
            self.cap[arc] += extra;
        }
    }

    /// Current flow along an arc (net flow for undirected pairs).
    pub fn flow(&self, arc: usize) -> f64 {
        self.orig[arc] - self.cap[arc]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = std::collections::VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, limit: f64) -> f64 {
        if u == t {
            return limit;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[e]));
                if pushed > FLOW_EPS {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[u] += 1;
        }
        0.0
    }

    /// Dinic max-flow from `s` to `t`; returns the flow added by this call.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.dfs(s, t, f64::INFINITY);
                if pushed <= FLOW_EPS {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    /// Maximum absolute conservation violation over interior nodes
    /// (everything except `s` and `t`).
    pub fn max_conservation_violation(&self, s: usize, t: usize) -> f64 {
        let mut worst = 0.0f64;
        for u in 0..self.head.len() {
            if u == s || u == t {
                continue;
            }
            let net: f64 = self.head[u].iter().map(|&e| self.flow(e)).sum();
            worst = worst.max(net.abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_path() {
        let mut net = FlowNetwork::new(3);
        net.add_arc(0, 1, 5.0);
        net.add_arc(1, 2, 3.0);
        assert_eq!(net.max_flow(0, 2), 3.0);
        assert!(net.max_conservation_violation(0, 2) < 1e-12);
    }

    #[test]
    fn two_path_loop_survives_one_failure() {
        // source 0, sink 3, two disjoint paths each with capacity >= demand
        let mut net = FlowNetwork::new(4);
        net.add_undirected(0, 1, 10.0);
        net.add_undirected(1, 3, 10.0);
        net.add_undirected(0, 2, 10.0);
        net.add_undirected(2, 3, 10.0);
        assert_eq!(net.max_flow(0, 3), 20.0);

        // with one path removed the surviving path still meets a demand of 8
        let mut cut = FlowNetwork::new(4);
        cut.add_undirected(0, 1, 10.0);
        cut.add_undirected(1, 3, 10.0);
        let sink = cut.add_arc(3, 2, 8.0); // demand arc to a sink stand-in
        let f = cut.max_flow(0, 2);
        assert_eq!(f, 8.0);
        assert_eq!(cut.flow(sink), 8.0);
    }

    #[test]
    fn raising_caps_continues_without_rerouting() {
        let mut net = FlowNetwork::new(5);
        net.add_undirected(0, 1, 10.0);
        let a = net.add_arc(1, 2, 2.0);
        let b = net.add_arc(1, 3, 2.0);
        net.add_arc(2, 4, f64::INFINITY);
        net.add_arc(3, 4, f64::INFINITY);
        let first = net.max_flow(0, 4);
        assert_eq!(first, 4.0);
        net.raise_cap(a, 6.0);
        let extra = net.max_flow(0, 4);
        assert_eq!(first + extra, 8.0);
        // the earlier allocation on arc b is never taken back
        assert!(net.flow(b) >= 2.0 - 1e-12);
    }
}
