use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::edges::EdgeSet;
use crate::{Error, Result};

/// Per-node geodesic neighbor lists, nearest first.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicNeighbors {
    pub neighbors: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `k` nearest nodes by shortest-path length for every node.
///
/// Runs one Dijkstra per source, stopping once `k` non-source nodes are
/// settled. Equal distances settle the smaller node id first. The lists are
/// directed: `j` in the list of `i` does not imply the converse.
pub fn geodesic_knn(edges: &EdgeSet, k: usize) -> Result<GeodesicNeighbors> {
    let n = edges.node_count();
    if k == 0 || k >= n {
        return Err(Error::arg(format!("k = {k} must lie in 1..{n}")));
    }
    if !edges.is_connected() {
        return Err(Error::Disconnected);
    }
    let (neighbors, distances) = (0..n)
        .into_par_iter()
        .map(|s| nearest_from(edges, s, k))
        .unzip();
    Ok(GeodesicNeighbors { neighbors, distances })
}

fn nearest_from(edges: &EdgeSet, source: usize, k: usize) -> (Vec<usize>, Vec<f64>) {
    let n = edges.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut ids = Vec::with_capacity(k);
    let mut lens = Vec::with_capacity(k);
    dist[source] = 0.0;
    heap.push(Reverse(Entry { dist: 0.0, node: source }));
    while let Some(Reverse(Entry { dist: d, node: u })) = heap.pop() {
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        if u != source {
            ids.push(u);
            lens.push(d);
            if ids.len() == k {
                break;
            }
        }
        for &(v, len) in edges.neighbors(u) {
            let nd = d + len;
            if !settled[v] && nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse(Entry { dist: nd, node: v }));
            }
        }
    }
    (ids, lens)
}
