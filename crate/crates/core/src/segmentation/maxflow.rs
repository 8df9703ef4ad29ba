//! Dinic's maximum flow on a directed graph with real capacities.

const EPS: f64 = 1e-12;

pub(crate) struct FlowGraph {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    /// Adds `u -> v` with capacity `c_uv` and `v -> u` with `c_vu` as a residual pair.
    pub fn add_edge(&mut self, u: usize, v: usize, c_uv: f64, c_vu: f64) {
        debug_assert!(c_uv >= 0.0 && c_vu >= 0.0);
        let e = self.to.len();
        self.to.extend([v, u]);
        self.cap.extend([c_uv, c_vu]);
        self.adj[u].push(e);
        self.adj[v].push(e + 1);
    }

    fn levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1; self.adj.len()];
        let mut queue = std::collections::VecDeque::from([s]);
        level[s] = 0;
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if level[v] < 0 && self.cap[e] > EPS {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let mut level = self.levels(s);
            if level[t] < 0 {
                return total;
            }
            let mut it = vec![0usize; self.adj.len()];
            let mut path: Vec<usize> = Vec::new();
            let mut u = s;
            loop {
                if u == t {
                    let f = path.iter().map(|&e| self.cap[e]).fold(f64::INFINITY, f64::min);
                    for &e in &path {
                        self.cap[e] -= f;
                        self.cap[e ^ 1] += f;
                    }
                    total += f;
                    let k = path.iter().position(|&e| self.cap[e] <= EPS).unwrap_or(0);
                    path.truncate(k);
                    u = path.last().map_or(s, |&e| self.to[e]);
                    continue;
                }
                let mut advanced = false;
                while it[u] < self.adj[u].len() {
                    let e = self.adj[u][it[u]];
                    let v = self.to[e];
                    if self.cap[e] > EPS && level[v] == level[u] + 1 {
                        path.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    it[u] += 1;
                }
                if !advanced {
                    if u == s {
                        break;
                    }
                    level[u] = -1;
                    let e = path.pop().expect("non-source node has a parent edge");
                    u = self.to[e ^ 1];
                    it[u] += 1;
                }
            }
        }
    }

    /// Nodes reachable from `s` in the residual graph.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        self.levels(s).into_iter().map(|l| l >= 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_network() {
        // CLRS flow network, max flow 23
        let mut g = FlowGraph::new(6);
        for (u, v, c) in [(0, 1, 16.0), (0, 2, 13.0), (1, 3, 12.0), (2, 1, 4.0), (2, 4, 14.0), (3, 2, 9.0), (3, 5, 20.0), (4, 3, 7.0), (4, 5, 4.0)] {
            g.add_edge(u, v, c, 0.0);
        }
        assert_eq!(g.max_flow(0, 5), 23.0);
        let side = g.source_side(0);
        assert!(side[0] && !side[5]);
    }

    #[test]
    fn disconnected() {
        let mut g = FlowGraph::new(3);
        g.add_edge(0, 1, 1.0, 0.0);
        assert_eq!(g.max_flow(0, 2), 0.0);
    }
}
