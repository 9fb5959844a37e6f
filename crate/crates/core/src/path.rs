//! Shortest-path next hops with deterministic tie-breaking.
//!
//! A [`NextHopTable`] is built by one reverse Dijkstra from a target node and
//! then answers "first node after `v` on a shortest path to the target" for
//! every `v`. Between equal-cost alternatives the successor with the smallest
//! id (equivalently, the smallest index) wins. The observation model builds
//! one table per matched place, so a whole particle set is scored against a
//! target with a single graph search.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::Result;
use crate::graph::NavGraph;

/// Relative tolerance under which two path costs count as equal.
pub const COST_TIE_EPS: f64 = 1e-9;

pub(crate) fn costs_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_TIE_EPS * (1.0 + a.abs().max(b.abs()))
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on node index.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distances to, and next hops toward, one target node.
#[derive(Debug, Clone, PartialEq)]
pub struct NextHopTable {
    target: usize,
    dist: Vec<f64>,
    hop: Vec<Option<usize>>,
}

impl NextHopTable {
    pub fn build(g: &NavGraph, target: usize) -> Self {
        let n = g.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[target] = 0.0;
        heap.push(HeapItem {
            cost: 0.0,
            node: target,
        });
        while let Some(HeapItem { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for e in g.in_edges(node) {
                let c = cost + e.length;
                if c < dist[e.from] {
                    dist[e.from] = c;
                    heap.push(HeapItem { cost: c, node: e.from });
                }
            }
        }

        let mut hop = vec![None; n];
        for v in 0..n {
            if v == target {
                hop[v] = Some(target);
                continue;
            }
            if !dist[v].is_finite() {
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for e in g.out_edges(v) {
                let c = e.length + dist[e.to];
                if !c.is_finite() {
                    continue;
                }
                best = match best {
                    None => Some((c, e.to)),
                    Some((bc, bw)) => {
                        if costs_equal(c, bc) {
                            Some((bc.min(c), bw.min(e.to)))
                        } else if c < bc {
                            Some((c, e.to))
                        } else {
                            Some((bc, bw))
                        }
                    }
                };
            }
            hop[v] = best.map(|(_, w)| w);
        }
        Self { target, dist, hop }
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Successor of `v` on a shortest path to the target; `Some(target)` for
    /// the target itself; `None` when unreachable.
    pub fn next_hop(&self, v: usize) -> Option<usize> {
        self.hop[v]
    }

    pub fn distance(&self, v: usize) -> f64 {
        self.dist[v]
    }
}

/// Shortest path lengths from `source` to every node (forward search).
pub fn distances_from(g: &NavGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem {
        cost: 0.0,
        node: source,
    });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for e in g.out_edges(node) {
            let c = cost + e.length;
            if c < dist[e.to] {
                dist[e.to] = c;
                heap.push(HeapItem { cost: c, node: e.to });
            }
        }
    }
    dist
}

/// Next hop from `from` toward `to` by node id. Returns `from` when the two
/// coincide and `None` when `to` is unreachable.
pub fn shortest_path_next_hop<'g>(g: &'g NavGraph, from: &str, to: &str) -> Result<Option<&'g str>> {
    let f = g.require(from)?;
    let t = g.require(to)?;
    let table = NextHopTable::build(g, t);
    Ok(table.next_hop(f).map(|w| g.node(w).id.as_str()))
}
