use rayon::prelude::*;

use crate::{ControlGraph, Mat3, Result, Vec3};

/// Rotation `R` maximizing `trace(R S)` over proper rotations.
///
/// With `S = U Σ Vᵀ` the unconstrained optimum is `V Uᵀ`. When that is a
/// reflection, the column of `V` paired with the smallest singular value is
/// negated, which yields the best rotation instead.
pub fn fit_rotation(cov: &Mat3) -> Mat3 {
    let svd = cov.svd(true, true);
    let u = svd.u.expect("requested U");
    let mut v = svd.v_t.expect("requested V^T").transpose();
    let mut r = v * u.transpose();
    if r.determinant() < 0.0 {
        let smallest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(2);
        v.column_mut(smallest).neg_mut();
        r = v * u.transpose();
    }
    r
}

/// Per-node covariance `S_i = sum_j w_ij (p_j - p_i)(p'_j - p'_i)ᵀ`.
pub fn node_covariance(graph: &ControlGraph, current: &[Vec3], node: usize) -> Mat3 {
    let rest = graph.rest_positions();
    graph
        .neighbors(node)
        .iter()
        .zip(graph.weights(node))
        .fold(Mat3::zeros(), |acc, (&j, &w)| {
            acc + (rest[j] - rest[node]) * (current[j] - current[node]).transpose() * w
        })
}

/// Local step: the best rotation for every node given the deformed positions.
pub fn fit_rotations(graph: &ControlGraph, current: &[Vec3]) -> Result<Vec<Mat3>> {
    if current.len() != graph.len() {
        return Err(crate::Error::arg("positions do not match graph size"));
    }
    Ok((0..graph.len())
        .into_par_iter()
        .map(|i| fit_rotation(&node_covariance(graph, current, i)))
        .collect())
}
