//! Dinic maximum flow on integer capacities.

use std::collections::VecDeque;

/// Residual graph in compressed adjacency form. Every arc has a paired
/// reverse arc; an undirected edge is two arcs that are each other's reverse.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    start: Vec<usize>,
    to: Vec<u32>,
    rev: Vec<u32>,
    cap: Vec<i64>,
}

/// Edge list accumulated before freezing into a [`FlowGraph`].
#[derive(Debug, Clone, Default)]
pub struct FlowBuilder {
    nodes: usize,
    edges: Vec<(u32, u32, i64, i64)>,
}

impl FlowBuilder {
    pub fn new(nodes: usize) -> Self {
        Self { nodes, edges: Vec::new() }
    }

    /// Arc `u → v` with capacity `forward` and `v → u` with `backward`.
    pub fn add(&mut self, u: usize, v: usize, forward: i64, backward: i64) {
        debug_assert!(forward >= 0 && backward >= 0);
        self.edges.push((u as u32, v as u32, forward, backward));
    }

    pub fn build(self) -> FlowGraph {
        let n = self.nodes;
        let mut degree = vec![0usize; n + 1];
        for &(u, v, _, _) in &self.edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + degree[i];
        }
        let m = start[n];
        let mut fill = start.clone();
        let mut to = vec![0u32; m];
        let mut rev = vec![0u32; m];
        let mut cap = vec![0i64; m];
        for &(u, v, f, b) in &self.edges {
            let (u, v) = (u as usize, v as usize);
            let (a, c) = (fill[u], fill[v]);
            fill[u] += 1;
            fill[v] += 1;
            to[a] = v as u32;
            cap[a] = f;
            rev[a] = c as u32;
            to[c] = u as u32;
            cap[c] = b;
            rev[c] = a as u32;
        }
        FlowGraph { start, to, rev, cap }
    }
}

impl FlowGraph {
    pub fn node_count(&self) -> usize {
        self.start.len() - 1
    }

    fn levels(&self, s: usize, t: usize, level: &mut [i32]) -> bool {
        level.fill(-1);
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for e in self.start[u]..self.start[u + 1] {
                let v = self.to[e] as usize;
                if self.cap[e] > 0 && level[v] < 0 {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level[t] >= 0
    }

    /// Pushes a blocking flow in the current level graph.
    fn blocking(&mut self, s: usize, t: usize, level: &mut [i32], it: &mut [usize]) -> i64 {
        let mut total = 0i64;
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let bottleneck = path.iter().map(|&e| self.cap[e]).min().unwrap_or(0);
                let mut cut_at = None;
                for (i, &e) in path.iter().enumerate() {
                    self.cap[e] -= bottleneck;
                    self.cap[self.rev[e] as usize] += bottleneck;
                    if self.cap[e] == 0 && cut_at.is_none() {
                        cut_at = Some(i);
                    }
                }
                total += bottleneck;
                let i = cut_at.expect("an augmenting path saturates some arc");
                u = self.to[self.rev[path[i]] as usize] as usize;
                path.truncate(i);
                continue;
            }
            let end = self.start[u + 1];
            let mut advanced = false;
            while it[u] < end {
                let e = it[u];
                let v = self.to[e] as usize;
                if self.cap[e] > 0 && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                it[u] += 1;
            }
            if !advanced {
                if u == s {
                    return total;
                }
                level[u] = -1;
                let e = path.pop().expect("non-source node has an incoming path arc");
                u = self.to[self.rev[e] as usize] as usize;
                it[u] += 1;
            }
        }
    }

    /// Maximum flow value from `s` to `t`; leaves the residual graph behind.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.node_count();
        let mut level = vec![-1i32; n];
        let mut it = vec![0usize; n];
        let mut flow = 0i64;
        while self.levels(s, t, &mut level) {
            it.copy_from_slice(&self.start[..n]);
            flow += self.blocking(s, t, &mut level, &mut it);
        }
        flow
    }

    /// Nodes reachable from `s` through arcs with residual capacity.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for e in self.start[u]..self.start[u + 1] {
                let v = self.to[e] as usize;
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        seen
    }
}
