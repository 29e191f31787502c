//! Highest-label push–relabel maximum flow with the gap heuristic.
//!
//! Runs to a full flow (not only a maximum preflow): excess that cannot reach
//! the sink is returned to the source, so the edge flows are conserving and
//! can be read off as a coupling.

use std::ops::{Add, AddAssign, Sub, SubAssign};

pub(crate) trait FlowNum:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + AddAssign + SubAssign + std::fmt::Debug
{
    const ZERO: Self;
    /// Capacity standing in for "unbounded".
    const INFINITE: Self;
    /// Amounts at or below this are treated as zero.
    const SLACK: Self;

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn positive(self) -> bool {
        self > Self::SLACK
    }
}

impl FlowNum for i64 {
    const ZERO: Self = 0;
    const INFINITE: Self = i64::MAX / 4;
    const SLACK: Self = 0;
}

impl FlowNum for f64 {
    const ZERO: Self = 0.0;
    const INFINITE: Self = 1e30;
    const SLACK: Self = 1e-12;
}

#[derive(Clone, Debug)]
struct Edge<F> {
    to: usize,
    rev: usize,
    residual: F,
    /// Net flow, tracked separately: `cap − residual` loses it when `cap` is huge.
    flow: F,
}

pub(crate) struct FlowNetwork<F> {
    adj: Vec<Vec<Edge<F>>>,
}

/// Handle to an edge added with [`FlowNetwork::add_edge`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct EdgeId {
    from: usize,
    index: usize,
}

impl<F: FlowNum> FlowNetwork<F> {
    pub fn new(nodes: usize) -> Self {
        Self { adj: (0..nodes).map(|_| Vec::new()).collect() }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: F) -> EdgeId {
        let index = self.adj[from].len();
        let rev = self.adj[to].len() + usize::from(from == to);
        self.adj[from].push(Edge { to, rev, residual: cap, flow: F::ZERO });
        self.adj[to].push(Edge { to: from, rev: index, residual: F::ZERO, flow: F::ZERO });
        EdgeId { from, index }
    }

    /// Flow currently carried by an edge.
    pub fn flow(&self, id: EdgeId) -> F {
        self.adj[id.from][id.index].flow
    }

    fn push(&mut self, v: usize, i: usize, amount: F) {
        let (to, rev) = {
            let e = &mut self.adj[v][i];
            e.residual -= amount;
            e.flow += amount;
            (e.to, e.rev)
        };
        let back = &mut self.adj[to][rev];
        back.residual += amount;
        back.flow -= amount;
    }

    /// Computes a maximum flow from `source` to `sink` and returns its value.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> F {
        let n = self.adj.len();
        let max_height = 2 * n;
        let mut height = vec![0usize; n];
        let mut excess = vec![F::ZERO; n];
        let mut current = vec![0usize; n];
        let mut count = vec![0usize; max_height + 1];
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_height + 1];
        let mut highest = 0usize;

        height[source] = n;
        count[0] = n - 1;
        count[n] = 1;

        for i in 0..self.adj[source].len() {
            let amount = self.adj[source][i].residual;
            if amount.positive() {
                let to = self.adj[source][i].to;
                self.push(source, i, amount);
                excess[source] -= amount;
                excess[to] += amount;
                if to != sink && to != source && height[to] < max_height {
                    buckets[height[to]].push(to);
                    highest = highest.max(height[to]);
                }
            }
        }

        loop {
            while highest > 0 && buckets[highest].is_empty() {
                highest -= 1;
            }
            let Some(v) = buckets[highest].pop() else {
                break;
            };
            if !excess[v].positive() || height[v] >= max_height {
                continue;
            }
            if height[v] != highest {
                // lifted by a gap while queued
                buckets[height[v]].push(v);
                highest = highest.max(height[v]);
                continue;
            }
            // discharge v
            while excess[v].positive() {
                if current[v] == self.adj[v].len() {
                    // relabel
                    let old = height[v];
                    let new = self.adj[v]
                        .iter()
                        .filter(|e| e.residual.positive())
                        .map(|e| height[e.to] + 1)
                        .min()
                        .unwrap_or(max_height)
                        .min(max_height);
                    count[old] -= 1;
                    height[v] = new;
                    count[new] += 1;
                    current[v] = 0;
                    if count[old] == 0 && old < n {
                        // gap: nothing below can reach the sink through `old`
                        for (w, h) in height.iter_mut().enumerate() {
                            if w != source && *h > old && *h < n {
                                count[*h] -= 1;
                                *h = n + 1;
                                count[n + 1] += 1;
                                current[w] = 0;
                            }
                        }
                        if height[v] < n + 1 {
                            count[height[v]] -= 1;
                            height[v] = n + 1;
                            count[n + 1] += 1;
                        }
                    }
                    if height[v] >= max_height {
                        break;
                    }
                    continue;
                }
                let i = current[v];
                let (to, residual) = (self.adj[v][i].to, self.adj[v][i].residual);
                if residual.positive() && height[v] == height[to] + 1 {
                    let amount = excess[v].min_of(residual);
                    self.push(v, i, amount);
                    excess[v] -= amount;
                    let was_idle = !excess[to].positive();
                    excess[to] += amount;
                    if was_idle && to != source && to != sink && excess[to].positive() {
                        buckets[height[to]].push(to);
                        highest = highest.max(height[to]);
                    }
                } else {
                    current[v] += 1;
                }
            }
            if excess[v].positive() && height[v] < max_height {
                buckets[height[v]].push(v);
                highest = highest.max(height[v]);
            }
        }
        excess[sink]
    }

    /// Nodes reachable from `source` through edges with positive residual
    /// capacity: the source side of the inclusion-minimal minimum cut.
    pub fn source_side(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(v) = stack.pop() {
            for e in &self.adj[v] {
                if e.residual.positive() && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}
