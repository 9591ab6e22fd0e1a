//! Sparse deformation graph over control nodes sampled from a splat.
//!
//! Control nodes are chosen by farthest-point sampling of the Gaussian
//! centers. Nodes are first joined to their `K/2` Euclidean nearest neighbors
//! (symmetrized, then repaired to one component); the final neighborhoods are
//! the `K` nearest nodes by shortest-path length through that initial graph,
//! which keeps neighborhoods from jumping across gaps between nearby parts.

mod edges;
mod fps;
mod geodesic;

pub use edges::{build_initial_graph, EdgeSet};
pub use fps::{farthest_point_sample, farthest_point_sample_from};
pub use geodesic::{geodesic_knn, GeodesicNeighbors};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{DEFAULT_CONTROL_COUNT, DEFAULT_NEIGHBORS};
use crate::{Error, GaussianCloud, Result, Vec3};

/// Edge weighting scheme for the rigidity energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// `1 / d_ij` with `d_ij` the geodesic distance.
    InverseDistance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphOptions {
    pub control_count: usize,
    pub neighbors: usize,
    pub seed: u64,
    pub weighting: Weighting,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            control_count: DEFAULT_CONTROL_COUNT,
            neighbors: DEFAULT_NEIGHBORS,
            seed: 0,
            weighting: Weighting::Uniform,
        }
    }
}

/// Control nodes with directed, weighted neighbor lists.
///
/// Built graphs list each node's `K` geodesic nearest neighbors first. When
/// those neighborhoods alone would split the graph, the nodes joined by a
/// bridge carry one extra entry at the end of their lists.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlGraph {
    node_indices: Vec<usize>,
    rest_positions: Vec<Vec3>,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
    initial_edges: Option<EdgeSet>,
}

impl ControlGraph {
    /// Builds a graph from explicit adjacency.
    ///
    /// Neighbor lists may differ in length (or be empty) here; graphs produced
    /// by [`build_control_graph`] always carry exactly `k` neighbors per node.
    pub fn from_adjacency(rest_positions: Vec<Vec3>, neighbors: Vec<Vec<usize>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let m = rest_positions.len();
        let node_indices = (0..m).collect();
        let k = neighbors.iter().map(Vec::len).max().unwrap_or(0);
        let graph = Self {
            node_indices,
            rest_positions,
            neighbors,
            weights,
            k,
            seed: 0,
            initial_edges: None,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Uniform-weight graph from directed neighbor lists.
    pub fn with_uniform_weights(rest_positions: Vec<Vec3>, neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let weights = neighbors.iter().map(|l| vec![1.0; l.len()]).collect();
        Self::from_adjacency(rest_positions, neighbors, weights)
    }

    fn validate(&self) -> Result<()> {
        let m = self.rest_positions.len();
        if m == 0 {
            return Err(Error::arg("graph has no nodes"));
        }
        if self.neighbors.len() != m || self.weights.len() != m || self.node_indices.len() != m {
            return Err(Error::arg("graph arrays differ in length"));
        }
        if let Some(i) = self.rest_positions.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::Validation { field: "rest_position", index: i });
        }
        for (i, (list, w)) in self.neighbors.iter().zip(&self.weights).enumerate() {
            if list.len() != w.len() {
                return Err(Error::arg(format!("node {i}: neighbor and weight counts differ")));
            }
            for (a, &j) in list.iter().enumerate() {
                if j >= m || j == i || list[..a].contains(&j) {
                    return Err(Error::arg(format!("node {i}: invalid neighbor {j}")));
                }
            }
            if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Validation { field: "weight", index: i });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rest_positions.is_empty()
    }

    pub fn node_indices(&self) -> &[usize] {
        &self.node_indices
    }

    pub fn rest_positions(&self) -> &[Vec3] {
        &self.rest_positions
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn weights(&self, node: usize) -> &[f64] {
        &self.weights[node]
    }

    /// Directed edges `(i, j, w_ij)` for `j` in the neighborhood of `i`.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors
            .iter()
            .zip(&self.weights)
            .enumerate()
            .flat_map(|(i, (list, w))| list.iter().zip(w).map(move |(&j, &wij)| (i, j, wij)))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The repaired `K/2` graph the neighborhoods were derived from, when built from a cloud.
    pub fn initial_edges(&self) -> Option<&EdgeSet> {
        self.initial_edges.as_ref()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = GraphFile {
            node_indices: self.node_indices.clone(),
            rest_positions: self.rest_positions.iter().map(|p| [p.x, p.y, p.z]).collect(),
            neighbors: self.neighbors.clone(),
            weights: self.weights.clone(),
            k: self.k,
            seed: self.seed,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        let graph = Self {
            node_indices: file.node_indices,
            rest_positions: file.rest_positions.iter().map(|p| Vec3::from(*p)).collect(),
            neighbors: file.neighbors,
            weights: file.weights,
            k: file.k,
            seed: file.seed,
            initial_edges: None,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk layout of a control graph.
#[derive(Serialize, Deserialize)]
struct GraphFile {
    node_indices: Vec<usize>,
    rest_positions: Vec<[f64; 3]>,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
}

/// Joins the neighborhood graph into one component.
///
/// K-NN sets can close over a cluster even when the initial graph is
/// connected, which would leave handle-free parts with a singular system.
/// Components are joined with the same closest-pair rule as the initial
/// graph; each bridge is added to both endpoints' lists with its Euclidean
/// length.
fn bridge_neighborhoods(positions: &[Vec3], neighbors: &mut [Vec<usize>], distances: &mut [Vec<f64>]) {
    let mut set = EdgeSet::from_pairs(
        positions,
        neighbors.iter().enumerate().flat_map(|(i, l)| l.iter().map(move |&j| (i, j))),
    );
    edges::repair_connectivity(&mut set, positions);
    for &(a, b) in set.repairs() {
        let d = (positions[a] - positions[b]).norm();
        for (from, to) in [(a, b), (b, a)] {
            neighbors[from].push(to);
            distances[from].push(d);
        }
    }
}

/// Samples control nodes from `cloud` and connects them into a deformation graph.
pub fn build_control_graph(cloud: &GaussianCloud, opts: &GraphOptions) -> Result<ControlGraph> {
    let k = opts.neighbors;
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::arg(format!("neighbor count {k} must be even and at least 2")));
    }
    if opts.control_count <= k {
        return Err(Error::arg(format!(
            "control count {} must exceed neighbor count {k}",
            opts.control_count
        )));
    }
    let node_indices = farthest_point_sample(cloud.centers(), opts.control_count, opts.seed)?;
    let rest_positions: Vec<Vec3> = node_indices.iter().map(|&i| cloud.centers()[i]).collect();
    let initial = build_initial_graph(&rest_positions, k / 2)?;
    let GeodesicNeighbors { mut neighbors, mut distances } = geodesic_knn(&initial, k)?;
    bridge_neighborhoods(&rest_positions, &mut neighbors, &mut distances);
    let weights = match opts.weighting {
        Weighting::Uniform => neighbors.iter().map(|l| vec![1.0; l.len()]).collect(),
        Weighting::InverseDistance => distances
            .iter()
            .map(|d| d.iter().map(|&x| 1.0 / x.max(f64::MIN_POSITIVE)).collect())
            .collect(),
    };
    let graph = ControlGraph {
        node_indices,
        rest_positions,
        neighbors,
        weights,
        k,
        seed: opts.seed,
        initial_edges: Some(initial),
    };
    graph.validate()?;
    Ok(graph)
}
