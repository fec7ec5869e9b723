//! Highest-label push-relabel max-flow with the gap heuristic and periodic
//! global relabeling, on floating-point capacities.
//!
//! The algorithm runs to a full flow (excess that cannot reach the sink is
//! returned to the source), so the residual graph yields the minimum cut
//! whose source side is smallest.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    to: Vec<usize>,
    residual: Vec<f64>,
    capacity: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct MaxFlow {
    pub value: f64,
    /// Capacity of the cut between `source_side` and the rest.
    pub cut: f64,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self { n, to: Vec::new(), residual: Vec::new(), capacity: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    fn push_pair(&mut self, u: usize, v: usize, forward: f64, backward: f64) {
        assert!(u < self.n && v < self.n && u != v, "bad arc {u} -> {v}");
        assert!(forward >= 0.0 && backward >= 0.0, "negative capacity");
        let a = self.to.len();
        self.to.extend([v, u]);
        self.residual.extend([forward, backward]);
        self.capacity.extend([forward, backward]);
        self.adj[u].push(a);
        self.adj[v].push(a + 1);
    }

    pub fn add_arc(&mut self, u: usize, v: usize, cap: f64) {
        self.push_pair(u, v, cap, 0.0);
    }

    /// An edge usable in both directions with the same capacity.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64) {
        self.push_pair(u, v, cap, cap);
    }

    fn total_capacity(&self) -> f64 {
        self.capacity.iter().sum()
    }

    /// Exact distance labels: to `t` where possible, otherwise `n` plus the
    /// distance to `s`, otherwise `2n`.
    fn global_relabel(&self, s: usize, t: usize, height: &mut [usize]) {
        let n = self.n;
        height.iter_mut().for_each(|h| *h = 2 * n);
        let mut queue = VecDeque::new();
        for (root, base) in [(t, 0), (s, n)] {
            height[root] = base;
            queue.push_back(root);
            while let Some(w) = queue.pop_front() {
                for &a in &self.adj[w] {
                    let v = self.to[a];
                    if height[v] == 2 * n && v != s && v != t && self.residual[a ^ 1] > 0.0 {
                        height[v] = height[w] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> Result<MaxFlow> {
        assert!(s != t && s < self.n && t < self.n);
        let n = self.n;
        let hmax = 2 * n;
        let mut height = vec![0usize; n];
        let mut excess = vec![0.0f64; n];
        let mut current = vec![0usize; n];
        let mut count = vec![0usize; hmax + 1];
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); hmax + 1];

        for &a in &self.adj[s].clone() {
            let c = self.residual[a];
            if c > 0.0 {
                let v = self.to[a];
                self.residual[a] = 0.0;
                self.residual[a ^ 1] += c;
                excess[v] += c;
                excess[s] -= c;
            }
        }

        let rebuild = |height: &[usize], excess: &[f64], count: &mut Vec<usize>, buckets: &mut Vec<Vec<usize>>| -> usize {
            count.iter_mut().for_each(|c| *c = 0);
            buckets.iter_mut().for_each(|b| b.clear());
            let mut top = 0;
            for v in 0..n {
                count[height[v]] += 1;
                if v != s && v != t && excess[v] > 0.0 && height[v] < hmax {
                    buckets[height[v]].push(v);
                    top = top.max(height[v]);
                }
            }
            top
        };

        self.global_relabel(s, t, &mut height);
        let mut top = rebuild(&height, &excess, &mut count, &mut buckets);
        let mut relabels_since_global = 0usize;

        loop {
            while top > 0 && buckets[top].is_empty() {
                top -= 1;
            }
            let Some(u) = buckets[top].pop() else {
                break;
            };
            if height[u] != top || excess[u] <= 0.0 {
                continue;
            }
            // discharge
            while excess[u] > 0.0 {
                if current[u] == self.adj[u].len() {
                    let old = height[u];
                    let mut new = hmax;
                    for &a in &self.adj[u] {
                        if self.residual[a] > 0.0 {
                            new = new.min(height[self.to[a]] + 1);
                        }
                    }
                    if new >= hmax {
                        return Err(Error::SolverFailure { iterations: relabels_since_global, residual: excess[u] });
                    }
                    count[old] -= 1;
                    height[u] = new;
                    count[new] += 1;
                    current[u] = 0;
                    relabels_since_global += 1;
                    if count[old] == 0 && old < n {
                        // Nodes above the gap can no longer reach the sink.
                        for v in 0..n {
                            if v != s && height[v] > old && height[v] < n + 1 {
                                count[height[v]] -= 1;
                                height[v] = n + 1;
                                count[n + 1] += 1;
                                current[v] = 0;
                                if v != u && excess[v] > 0.0 && v != t {
                                    buckets[n + 1].push(v);
                                    top = top.max(n + 1);
                                }
                            }
                        }
                    }
                    continue;
                }
                let a = self.adj[u][current[u]];
                let v = self.to[a];
                if self.residual[a] > 0.0 && height[u] == height[v] + 1 {
                    let delta = excess[u].min(self.residual[a]);
                    if delta == self.residual[a] {
                        self.residual[a] = 0.0;
                    } else {
                        self.residual[a] -= delta;
                    }
                    self.residual[a ^ 1] += delta;
                    excess[u] -= delta;
                    let was_idle = excess[v] <= 0.0;
                    excess[v] += delta;
                    if was_idle && excess[v] > 0.0 && v != s && v != t {
                        buckets[height[v]].push(v);
                        top = top.max(height[v]);
                    }
                } else {
                    current[u] += 1;
                }
            }
            if relabels_since_global > n {
                relabels_since_global = 0;
                self.global_relabel(s, t, &mut height);
                current.iter_mut().for_each(|c| *c = 0);
                top = rebuild(&height, &excess, &mut count, &mut buckets);
            }
        }

        let total = self.total_capacity();
        let tol = 1e-12 * total.max(f64::MIN_POSITIVE);
        for v in 0..n {
            if v != s && v != t && excess[v].abs() > tol {
                return Err(Error::SolverFailure { iterations: 0, residual: excess[v] });
            }
        }
        let value = excess[t];

        let mut source_side = vec![false; n];
        source_side[s] = true;
        let mut queue = VecDeque::from([s]);
        let reach_tol = 1e-14 * self.capacity.iter().copied().fold(0.0, f64::max);
        while let Some(w) = queue.pop_front() {
            for &a in &self.adj[w] {
                let v = self.to[a];
                if !source_side[v] && self.residual[a] > reach_tol {
                    source_side[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let mut cut = 0.0;
        for u in 0..n {
            if source_side[u] {
                for &a in &self.adj[u] {
                    if !source_side[self.to[a]] {
                        cut += self.capacity[a];
                    }
                }
            }
        }
        if (cut - value).abs() > tol {
            return Err(Error::Duality { flow: value, cut });
        }
        Ok(MaxFlow { value, cut, source_side })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // CLRS figure 26.1: max flow 23.
        let mut g = FlowNetwork::new(6);
        for (u, v, c) in [(0, 1, 16.0), (0, 2, 13.0), (2, 1, 4.0), (1, 3, 12.0), (3, 2, 9.0), (2, 4, 14.0), (4, 3, 7.0), (3, 5, 20.0), (4, 5, 4.0)] {
            g.add_arc(u, v, c);
        }
        let f = g.max_flow(0, 5).unwrap();
        assert_eq!(f.value, 23.0);
        assert_eq!(f.cut, 23.0);
        assert_eq!(f.source_side, vec![true, true, true, false, true, false]);
    }

    #[test]
    fn minimal_source_side_on_ties() {
        // s -1-> a -1-> t: both single-arc cuts cost 1; the minimal side is {s}.
        let mut g = FlowNetwork::new(3);
        g.add_arc(0, 1, 1.0);
        g.add_arc(1, 2, 1.0);
        let f = g.max_flow(0, 2).unwrap();
        assert_eq!(f.source_side, vec![true, false, false]);
    }

    #[test]
    fn excess_returns_to_source() {
        // A wide source arc into a bottleneck forces excess back.
        let mut g = FlowNetwork::new(4);
        g.add_arc(0, 1, 10.0);
        g.add_edge(1, 2, 0.5);
        g.add_arc(2, 3, 10.0);
        let f = g.max_flow(0, 3).unwrap();
        assert!((f.value - 0.5).abs() < 1e-15);
        assert_eq!(f.source_side, vec![true, true, false, false]);
    }

    #[test]
    fn disconnected_sink() {
        let mut g = FlowNetwork::new(3);
        g.add_arc(0, 1, 2.0);
        let f = g.max_flow(0, 2).unwrap();
        assert_eq!(f.value, 0.0);
        assert_eq!(f.source_side, vec![true, true, false]);
    }
}
