//! Randomized fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use gsdeform::graph::EdgeSet;
use gsdeform::{build_control_graph, synth, ControlGraph, GraphOptions, HandleSet, Mat3, Vec3, Weighting};
use nalgebra::{DMatrix, Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss3(rng: &mut impl Rng) -> Vec3 {
    Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly distributed rotation.
pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let q = Quaternion::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
    *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix()
}

/// A control graph of `n` nodes sampled from one of the procedural shapes.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, k: usize, weighting: Weighting) -> ControlGraph {
    let seed = rng.random();
    let points = (2 * n).max(n + 16);
    let cloud = match rng.random_range(0..3) {
        0 => synth::blob(points, Vec3::zeros(), 1.0, seed),
        1 => synth::arc(points, 2.0, 0.2, seed),
        _ => synth::dumbbell(points, &synth::Dumbbell::default(), seed),
    }
    .unwrap();
    let opts = GraphOptions { control_count: n, neighbors: k, seed, weighting };
    build_control_graph(&cloud, &opts).unwrap()
}

/// Random distinct handle indices with targets displaced from rest.
pub fn random_handles(rng: &mut ChaCha8Rng, graph: &ControlGraph, count: usize, scale: f64) -> HandleSet {
    let mut indices: Vec<usize> = Vec::new();
    while indices.len() < count {
        let i = rng.random_range(0..graph.len());
        if !indices.contains(&i) {
            indices.push(i);
        }
    }
    let targets = indices.iter().map(|&i| graph.rest_positions()[i] + gauss3(rng) * scale).collect();
    HandleSet::new(indices, targets).unwrap()
}

/// Minimizes the rigidity energy over the free nodes by dense least squares:
/// one row per directed edge, `sqrt(w) (x_i - x_j) = sqrt(w) R_i (p_i - p_j)`,
/// with handle columns moved to the right-hand side.
pub fn dense_least_squares(graph: &ControlGraph, rotations: &[Mat3], handles: &HandleSet) -> Vec<Vec3> {
    let n = graph.len();
    let mut column = vec![None; n];
    let mut free = 0;
    for (i, c) in column.iter_mut().enumerate() {
        if !handles.indices().contains(&i) {
            *c = Some(free);
            free += 1;
        }
    }
    let mut fixed = vec![Vec3::zeros(); n];
    for (&h, t) in handles.indices().iter().zip(handles.targets()) {
        fixed[h] = *t;
    }
    let edges: Vec<(usize, usize, f64)> = graph.directed_edges().collect();
    let rest = graph.rest_positions();
    let mut a = DMatrix::<f64>::zeros(edges.len(), free);
    let mut b = DMatrix::<f64>::zeros(edges.len(), 3);
    for (row, &(i, j, w)) in edges.iter().enumerate() {
        let s = w.sqrt();
        let mut rhs = rotations[i] * (rest[i] - rest[j]) * s;
        match column[i] {
            Some(c) => a[(row, c)] += s,
            None => rhs -= fixed[i] * s,
        }
        match column[j] {
            Some(c) => a[(row, c)] -= s,
            None => rhs += fixed[j] * s,
        }
        for d in 0..3 {
            b[(row, d)] = rhs[d];
        }
    }
    let svd = a.clone().svd(true, true);
    let mut x = svd.solve(&b, 1e-14).unwrap();
    // iterative refinement against the original rows
    for _ in 0..3 {
        let residual = &b - &a * &x;
        x += svd.solve(&residual, 1e-14).unwrap();
    }
    (0..n)
        .map(|i| match column[i] {
            Some(c) => Vec3::new(x[(c, 0)], x[(c, 1)], x[(c, 2)]),
            None => fixed[i],
        })
        .collect()
}

/// All-pairs shortest path lengths.
pub fn floyd_warshall(edges: &EdgeSet) -> Vec<Vec<f64>> {
    let n = edges.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (a, b, len) in edges.edges() {
        d[a][b] = d[a][b].min(len);
        d[b][a] = d[b][a].min(len);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// The `k` nearest other nodes by path length, ties by index.
pub fn knn_from_distances(d: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..d.len())
        .map(|i| {
            let mut others: Vec<usize> = (0..d.len()).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| d[i][a].total_cmp(&d[i][b]).then(a.cmp(&b)));
            others.truncate(k);
            others
        })
        .collect()
}
