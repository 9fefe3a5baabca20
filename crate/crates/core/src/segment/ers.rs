//! Entropy-rate objective and its lazy greedy maximization.
//!
//! For a selected edge set `A` the random walk moves from `i` to neighbour `j`
//! with probability `w_ij / w_i` when `(i, j) ∈ A` and otherwise stays put, so
//! unselected weight becomes self-loop mass. The stationary distribution
//! `μ_i = w_i / w_total` is fixed by the full graph. The objective is
//!
//! ```text
//! F(A) = H(A) + λ B(A)
//! H(A) = -Σ_i μ_i Σ_j p_ij(A) ln p_ij(A)
//! B(A) = -Σ_c z_c ln z_c - N_A        (z_c: component size / pixel count)
//! ```
//!
//! Only edges joining two different components are ever added. Both gain
//! terms shrink as components grow and as a vertex loses self-loop mass, so
//! a cached gain is an upper bound on the current one and stale heap entries
//! only need re-evaluating when they reach the top.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::graph::LatticeGraph;
use super::labels::SuperpixelMap;
use crate::error::{Error, Result};

/// `-x ln x` with `0 ln 0 = 0`.
#[inline]
fn plogp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Edges in selection order with the objective gain each one realized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GreedyTrace {
    pub steps: Vec<(usize, f64)>,
    pub objective: f64,
}

impl GreedyTrace {
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|(e, _)| *e)
    }
}

/// Objective evaluator bound to one graph.
#[derive(Debug, Clone)]
pub struct ErsObjective<'g> {
    graph: &'g LatticeGraph,
    lambda: f64,
    vertex_weight: Vec<f64>,
    total_weight: f64,
}

impl<'g> ErsObjective<'g> {
    pub fn new(graph: &'g LatticeGraph, lambda: f64) -> Self {
        let mut vertex_weight = vec![0.0; graph.vertex_count()];
        for (e, &w) in graph.edges().iter().zip(graph.weights()) {
            vertex_weight[e.a as usize] += w;
            vertex_weight[e.b as usize] += w;
        }
        let total_weight = vertex_weight.iter().sum();
        ErsObjective {
            graph,
            lambda,
            vertex_weight,
            total_weight,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Entropy-rate change at vertex `v` when an edge of weight `w` leaves its
    /// self-loop, given `selected` weight already taken from it.
    fn entropy_gain_at(&self, v: usize, selected: f64, w: f64) -> f64 {
        let wv = self.vertex_weight[v];
        if wv <= 0.0 || self.total_weight <= 0.0 {
            return 0.0;
        }
        let q = w / wv;
        let before = ((wv - selected) / wv).max(0.0);
        let after = (before - q).max(0.0);
        (wv / self.total_weight) * (plogp(after) + plogp(q) - plogp(before))
    }

    fn balance_gain(&self, size_a: usize, size_b: usize) -> f64 {
        let n = self.graph.vertex_count() as f64;
        let (a, b) = (size_a as f64 / n, size_b as f64 / n);
        plogp(a + b) - plogp(a) - plogp(b) + 1.0
    }

    /// Entropy-rate gain of adding `edge` to the empty selection.
    pub fn initial_entropy_gain(&self, edge: usize) -> f64 {
        let e = self.graph.edges()[edge];
        let w = self.graph.weights()[edge];
        self.entropy_gain_at(e.a as usize, 0.0, w) + self.entropy_gain_at(e.b as usize, 0.0, w)
    }

    /// Balancing gain of merging two singletons.
    pub fn initial_balance_gain(&self) -> f64 {
        self.balance_gain(1, 1)
    }

    /// `F(∅) = ln n - n`.
    pub fn empty_value(&self) -> f64 {
        let n = self.graph.vertex_count() as f64;
        self.lambda * (n.ln() - n)
    }

    /// `F(A)` evaluated from scratch for an arbitrary edge subset.
    pub fn evaluate(&self, selected: &[usize]) -> f64 {
        let n = self.graph.vertex_count();
        let mut taken = vec![0.0; n];
        let mut entropy = 0.0;
        let mut dsu = Dsu::new(n);
        for &idx in selected {
            let e = self.graph.edges()[idx];
            let w = self.graph.weights()[idx];
            for v in [e.a as usize, e.b as usize] {
                taken[v] += w;
                if self.vertex_weight[v] > 0.0 {
                    entropy += self.vertex_weight[v] / self.total_weight * plogp(w / self.vertex_weight[v]);
                }
            }
            dsu.union(e.a as usize, e.b as usize);
        }
        for (v, &t) in taken.iter().enumerate() {
            let wv = self.vertex_weight[v];
            if wv > 0.0 {
                entropy += wv / self.total_weight * plogp(((wv - t) / wv).max(0.0));
            }
        }
        let mut sizes = vec![0usize; n];
        for v in 0..n {
            sizes[dsu.find(v)] += 1;
        }
        let components = sizes.iter().filter(|s| **s > 0).count();
        let size_entropy: f64 = sizes.iter().map(|&s| plogp(s as f64 / n as f64)).sum();
        entropy + self.lambda * (size_entropy - components as f64)
    }
}

/// `λ = 0.5 · max_e ΔH(e | ∅) / ΔB(singleton merge)`.
pub fn default_lambda(graph: &LatticeGraph) -> f64 {
    let objective = ErsObjective::new(graph, 0.0);
    let max_entropy = (0..graph.edges().len())
        .map(|e| objective.initial_entropy_gain(e))
        .fold(0.0, f64::max);
    let balance = objective.initial_balance_gain().abs();
    if balance > 0.0 {
        0.5 * max_entropy / balance
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    edge: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    /// Higher gain first; equal gains prefer the smaller edge index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] as usize != v {
            let grand = self.parent[self.parent[v] as usize];
            self.parent[v] = grand;
            v = grand as usize;
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Greedily adds component-merging edges until exactly `k` components remain.
///
/// Labels are the connected components of the selected forest, numbered by
/// the row-major order of each component's first pixel.
pub fn segment(graph: &LatticeGraph, k: usize, lambda: f64) -> Result<(SuperpixelMap, GreedyTrace)> {
    let n = graph.vertex_count();
    if k == 0 || k > n {
        return Err(Error::SuperpixelCount { k, pixels: n });
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }

    let objective = ErsObjective::new(graph, lambda);
    let edges = graph.edges();
    let weights = graph.weights();
    let mut dsu = Dsu::new(n);
    let mut selected = vec![0.0; n];

    let gain_of = |edge: usize, dsu: &mut Dsu, selected: &[f64]| -> Option<f64> {
        let e = edges[edge];
        let (a, b) = (e.a as usize, e.b as usize);
        let (ra, rb) = (dsu.find(a), dsu.find(b));
        if ra == rb {
            return None;
        }
        let w = weights[edge];
        let entropy = objective.entropy_gain_at(a, selected[a], w) + objective.entropy_gain_at(b, selected[b], w);
        let balance = objective.balance_gain(dsu.size[ra] as usize, dsu.size[rb] as usize);
        Some(entropy + lambda * balance)
    };

    let mut heap: BinaryHeap<Candidate> = (0..edges.len())
        .filter_map(|edge| gain_of(edge, &mut dsu, &selected).map(|gain| Candidate { gain, edge }))
        .collect();

    let mut trace = GreedyTrace {
        steps: Vec::with_capacity(n - k),
        objective: objective.empty_value(),
    };
    let mut components = n;
    while components > k {
        let Some(top) = heap.pop() else {
            break;
        };
        let Some(gain) = gain_of(top.edge, &mut dsu, &selected) else {
            continue;
        };
        let fresh = Candidate { gain, edge: top.edge };
        if heap.peek().is_some_and(|next| fresh < *next) {
            heap.push(fresh);
            continue;
        }
        let e = edges[top.edge];
        let w = weights[top.edge];
        selected[e.a as usize] += w;
        selected[e.b as usize] += w;
        dsu.union(e.a as usize, e.b as usize);
        components -= 1;
        trace.steps.push((top.edge, gain));
        trace.objective += gain;
    }

    let roots: Vec<u32> = (0..n).map(|v| dsu.find(v) as u32).collect();
    let map = SuperpixelMap::from_labels(graph.height(), graph.width(), roots)?.relabel_canonical();
    Ok((map, trace))
}
