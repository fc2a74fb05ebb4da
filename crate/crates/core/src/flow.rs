//! Dinic max-flow over real capacities.

use std::collections::VecDeque;

/// Residual capacities at or below this are treated as saturated.
const RESIDUAL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    cap: f64,
    rev: usize,
}

#[derive(Debug, Clone)]
pub struct MaxFlow {
    graph: Vec<Vec<Arc>>,
    /// `(from, position in graph[from], original capacity)` per added arc.
    handles: Vec<(usize, usize, f64)>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

impl MaxFlow {
    pub fn new(nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
            handles: Vec::new(),
            level: vec![-1; nodes],
            iter: vec![0; nodes],
        }
    }

    /// Adds a directed arc and returns its handle for [`MaxFlow::flow_on`].
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> usize {
        debug_assert!(cap >= 0.0);
        let fwd = self.graph[from].len();
        let back = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc { to, cap, rev: back });
        self.graph[to].push(Arc { to: from, cap: 0.0, rev: fwd });
        self.handles.push((from, fwd, cap));
        self.handles.len() - 1
    }

    /// Flow currently routed on the arc `handle`.
    pub fn flow_on(&self, handle: usize) -> f64 {
        let (from, pos, cap) = self.handles[handle];
        (cap - self.graph[from][pos].cap).max(0.0)
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for a in &self.graph[v] {
                if a.cap > RESIDUAL_EPS && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: f64) -> f64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.graph[v].len() {
            let Arc { to, cap, rev } = self.graph[v][self.iter[v]];
            if cap > RESIDUAL_EPS && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0.0 {
                    let idx = self.iter[v];
                    self.graph[v][idx].cap -= d;
                    self.graph[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    /// Pushes a maximum flow from `s` to `t` and returns its value.
    pub fn run(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
    }
}
