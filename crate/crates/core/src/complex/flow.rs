//! Highest-label push-relabel maximum flow with the gap heuristic and
//! periodic global relabeling. Capacities are reals.
//!
//! Only the first phase runs (a maximum preflow); that is all a minimum cut
//! needs. The sink side of the returned cut is the set of nodes that can
//! still reach the sink in the residual graph, which makes the cut the one
//! closest to the sink and therefore canonical.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    n: usize,
    edges: Vec<(u32, u32, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    /// Net flow into the sink.
    pub flow_value: f64,
    /// Capacity of the returned cut.
    pub cut_value: f64,
    pub source_side: Vec<bool>,
    /// Edge ids (as returned by [`FlowNetwork::add_edge`]) crossing the cut,
    /// with `+1` when the edge runs from the source side to the sink side.
    pub cut_edges: Vec<(usize, i8)>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Adds an edge with capacity `cap_uv` forward and `cap_vu` backward.
    pub fn add_edge(&mut self, u: usize, v: usize, cap_uv: f64, cap_vu: f64) -> usize {
        assert!(u < self.n && v < self.n, "node out of range");
        assert!(cap_uv >= 0.0 && cap_vu >= 0.0, "capacities must be nonnegative");
        self.edges.push((u as u32, v as u32, cap_uv, cap_vu));
        self.edges.len() - 1
    }

    pub fn max_flow(&self, s: usize, t: usize) -> Result<FlowSolution> {
        if s == t || s >= self.n || t >= self.n {
            return Err(Error::arg("source and sink must be distinct nodes"));
        }
        let mut solver = Solver::new(self);
        solver.run(s, t);
        Ok(solver.finish(self, s, t))
    }
}

struct Solver {
    n: usize,
    start: Vec<usize>,
    to: Vec<u32>,
    rev: Vec<u32>,
    cap: Vec<f64>,
    eps: f64,
    height: Vec<usize>,
    excess: Vec<f64>,
    cur: Vec<usize>,
    active: Vec<Vec<usize>>,
    members: Vec<Vec<usize>>,
    count: Vec<usize>,
    highest: usize,
    max_height: usize,
}

impl Solver {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.n;
        let mut deg = vec![0usize; n + 1];
        for &(u, v, _, _) in &net.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + deg[i];
        }
        let m2 = start[n];
        let mut fill = start.clone();
        let mut to = vec![0u32; m2];
        let mut rev = vec![0u32; m2];
        let mut cap = vec![0.0; m2];
        let mut max_cap: f64 = 0.0;
        for &(u, v, cuv, cvu) in &net.edges {
            let a = fill[u as usize];
            fill[u as usize] += 1;
            let b = fill[v as usize];
            fill[v as usize] += 1;
            to[a] = v;
            to[b] = u;
            rev[a] = b as u32;
            rev[b] = a as u32;
            cap[a] = cuv;
            cap[b] = cvu;
            max_cap = max_cap.max(cuv).max(cvu);
        }
        Self {
            n,
            cur: start[..n].to_vec(),
            start,
            to,
            rev,
            cap,
            eps: 1e-13 * max_cap.max(f64::MIN_POSITIVE),
            height: vec![0; n],
            excess: vec![0.0; n],
            active: vec![Vec::new(); n + 1],
            members: vec![Vec::new(); n + 1],
            count: vec![0; n + 1],
            highest: 0,
            max_height: 0,
        }
    }

    fn global_relabel(&mut self, s: usize, t: usize) {
        let n = self.n;
        self.height.iter_mut().for_each(|h| *h = n);
        self.height[t] = 0;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for a in self.start[v]..self.start[v + 1] {
                let w = self.to[a] as usize;
                if w != s && self.height[w] == n && self.cap[self.rev[a] as usize] > self.eps {
                    self.height[w] = self.height[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.height[s] = n;
        for h in 0..=n {
            self.active[h].clear();
            self.members[h].clear();
            self.count[h] = 0;
        }
        self.highest = 0;
        self.max_height = 0;
        for v in 0..n {
            let h = self.height[v];
            if h < n {
                self.count[h] += 1;
                self.members[h].push(v);
                self.max_height = self.max_height.max(h);
                if v != t && v != s && self.excess[v] > self.eps {
                    self.active[h].push(v);
                    self.highest = self.highest.max(h);
                }
            }
            self.cur[v] = self.start[v];
        }
    }

    fn set_height(&mut self, v: usize, h: usize) {
        let n = self.n;
        let old = self.height[v];
        if old < n {
            self.count[old] -= 1;
        }
        self.height[v] = h;
        if h < n {
            self.count[h] += 1;
            self.members[h].push(v);
            self.max_height = self.max_height.max(h);
        }
    }

    /// Lifts every node above an emptied level out of reach of the sink.
    fn gap(&mut self, level: usize) {
        let n = self.n;
        for h in level + 1..=self.max_height.min(n - 1) {
            let list = std::mem::take(&mut self.members[h]);
            for w in list {
                if self.height[w] == h {
                    self.height[w] = n;
                    self.count[h] -= 1;
                }
            }
            self.active[h].clear();
        }
        self.max_height = level.saturating_sub(1);
    }

    fn run(&mut self, s: usize, t: usize) {
        let n = self.n;
        self.global_relabel(s, t);
        for a in self.start[s]..self.start[s + 1] {
            let f = self.cap[a];
            if f > 0.0 {
                let v = self.to[a] as usize;
                self.cap[a] = 0.0;
                self.cap[self.rev[a] as usize] += f;
                self.excess[v] += f;
                self.excess[s] -= f;
            }
        }
        self.global_relabel(s, t);

        let relabel_budget = n.max(64);
        let mut relabels = 0usize;
        loop {
            while self.highest > 0 && self.active[self.highest].is_empty() {
                self.highest -= 1;
            }
            let Some(u) = self.active[self.highest].pop() else {
                break;
            };
            if self.height[u] != self.highest || self.excess[u] <= self.eps || u == s || u == t {
                continue;
            }
            // discharge
            while self.excess[u] > self.eps {
                if self.cur[u] == self.start[u + 1] {
                    relabels += 1;
                    let old = self.height[u];
                    let mut new_h = n;
                    for a in self.start[u]..self.start[u + 1] {
                        if self.cap[a] > self.eps {
                            new_h = new_h.min(self.height[self.to[a] as usize] + 1);
                        }
                    }
                    self.set_height(u, new_h.min(n));
                    self.cur[u] = self.start[u];
                    if self.count[old] == 0 {
                        self.gap(old);
                        if self.height[u] < n {
                            self.set_height(u, n);
                        }
                    }
                    if self.height[u] >= n {
                        break;
                    }
                    continue;
                }
                let a = self.cur[u];
                let v = self.to[a] as usize;
                if self.cap[a] > self.eps && self.height[u] == self.height[v] + 1 {
                    let d = self.excess[u].min(self.cap[a]);
                    self.cap[a] -= d;
                    self.cap[self.rev[a] as usize] += d;
                    self.excess[u] -= d;
                    let was_idle = self.excess[v] <= self.eps;
                    self.excess[v] += d;
                    if was_idle && v != s && v != t && self.excess[v] > self.eps && self.height[v] < n {
                        self.active[self.height[v]].push(v);
                        self.highest = self.highest.max(self.height[v]);
                    }
                } else {
                    self.cur[u] += 1;
                }
            }
            if self.excess[u] > self.eps && self.height[u] < n {
                let h = self.height[u];
                self.active[h].push(u);
                self.highest = self.highest.max(h);
            }
            if relabels >= relabel_budget {
                relabels = 0;
                self.global_relabel(s, t);
            }
        }
    }

    fn finish(&self, net: &FlowNetwork, s: usize, t: usize) -> FlowSolution {
        // sink side: nodes that reach t through residual arcs
        let mut sink_side = vec![false; self.n];
        sink_side[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for a in self.start[v]..self.start[v + 1] {
                let w = self.to[a] as usize;
                if !sink_side[w] && self.cap[self.rev[a] as usize] > self.eps {
                    sink_side[w] = true;
                    queue.push_back(w);
                }
            }
        }
        debug_assert!(!sink_side[s]);
        let source_side: Vec<bool> = sink_side.iter().map(|&b| !b).collect();
        let mut cut_value = 0.0;
        let mut cut_edges = Vec::new();
        for (id, &(u, v, cuv, cvu)) in net.edges.iter().enumerate() {
            let (u, v) = (u as usize, v as usize);
            if source_side[u] && !source_side[v] {
                cut_value += cuv;
                cut_edges.push((id, 1));
            } else if source_side[v] && !source_side[u] {
                cut_value += cvu;
                cut_edges.push((id, -1));
            }
        }
        FlowSolution {
            flow_value: self.excess[t],
            cut_value,
            source_side,
            cut_edges,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimum over all s-t cuts.
    fn brute_min_cut(n: usize, edges: &[(usize, usize, f64, f64)], s: usize, t: usize) -> f64 {
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let side = |v: usize| mask >> v & 1 == 1;
            if !side(s) || side(t) {
                continue;
            }
            let c: f64 = edges
                .iter()
                .map(|&(u, v, a, b)| match (side(u), side(v)) {
                    (true, false) => a,
                    (false, true) => b,
                    _ => 0.0,
                })
                .sum();
            best = best.min(c);
        }
        best
    }

    #[test]
    fn textbook_network() {
        let mut net = FlowNetwork::new(6);
        for &(u, v, c) in &[(0, 1, 16.0), (0, 2, 13.0), (1, 2, 10.0), (2, 1, 4.0), (1, 3, 12.0), (3, 2, 9.0), (2, 4, 14.0), (4, 3, 7.0), (3, 5, 20.0), (4, 5, 4.0)] {
            net.add_edge(u, v, c, 0.0);
        }
        let sol = net.max_flow(0, 5).unwrap();
        assert_abs_diff_eq!(sol.flow_value, 23.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.cut_value, 23.0, epsilon = 1e-9);
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..=9);
            let m = rng.gen_range(1..=20);
            let edges: Vec<_> = (0..m)
                .map(|_| {
                    let u = rng.gen_range(0..n);
                    let v = rng.gen_range(0..n);
                    let a = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..3.0) };
                    let b = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..3.0) };
                    (u, v, a, b)
                })
                .filter(|e| e.0 != e.1)
                .collect();
            let mut net = FlowNetwork::new(n);
            for &(u, v, a, b) in &edges {
                net.add_edge(u, v, a, b);
            }
            let sol = net.max_flow(0, n - 1).unwrap();
            let brute = brute_min_cut(n, &edges, 0, n - 1);
            assert_abs_diff_eq!(sol.cut_value, brute, epsilon = 1e-9);
            assert_abs_diff_eq!(sol.flow_value, brute, epsilon = 1e-9);
        }
    }

    #[test]
    fn disconnected_sink_gives_zero() {
        let mut net = FlowNetwork::new(4);
        net.add_edge(0, 1, 1.0, 1.0);
        net.add_edge(2, 3, 1.0, 1.0);
        let sol = net.max_flow(0, 3).unwrap();
        assert_eq!(sol.cut_value, 0.0);
        assert!(net.max_flow(1, 1).is_err());
    }
}
