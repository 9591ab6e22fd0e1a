use crate::{ControlGraph, Error, Mat3, Result, Vec3};

fn check_finite(field: &'static str, values: impl Iterator<Item = f64>, stride: usize) -> Result<()> {
    for (k, v) in values.enumerate() {
        if !v.is_finite() {
            return Err(Error::Validation { field, index: k / stride });
        }
    }
    Ok(())
}

/// Rigidity energy `sum_i sum_{j in N_i} w_ij |(p'_i - p'_j) - R_i (p_i - p_j)|^2`.
pub fn arap_energy(graph: &ControlGraph, current: &[Vec3], rotations: &[Mat3]) -> Result<f64> {
    if current.len() != graph.len() || rotations.len() != graph.len() {
        return Err(Error::arg("positions/rotations do not match graph size"));
    }
    check_finite("position", current.iter().flat_map(|p| p.iter().copied()), 3)?;
    check_finite("rotation", rotations.iter().flat_map(|r| r.iter().copied()), 9)?;
    Ok(energy_unchecked(graph, current, rotations))
}

pub(crate) fn energy_unchecked(graph: &ControlGraph, current: &[Vec3], rotations: &[Mat3]) -> f64 {
    let rest = graph.rest_positions();
    graph
        .directed_edges()
        .map(|(i, j, w)| {
            let e = (current[i] - current[j]) - rotations[i] * (rest[i] - rest[j]);
            w * e.norm_squared()
        })
        .sum()
}

/// Right-hand side `b` of the global step: the energy's gradient is `2 (L p' - b)`.
///
/// `b_i = sum_{j in N_i} w_ij R_i (p_i - p_j) + sum_{k : i in N_k} w_ki R_k (p_i - p_k)`,
/// which reduces to `sum_j w_ij (R_i + R_j)(p_i - p_j)` when neighborhoods are symmetric.
pub fn laplacian_rhs(graph: &ControlGraph, rotations: &[Mat3]) -> Vec<Vec3> {
    let rest = graph.rest_positions();
    let mut b = vec![Vec3::zeros(); graph.len()];
    for (i, j, w) in graph.directed_edges() {
        let d = rotations[i] * (rest[i] - rest[j]) * w;
        b[i] += d;
        b[j] -= d;
    }
    b
}

/// `L x` for the Laplacian of the symmetrized weights `w_ij + w_ji`.
pub fn apply_laplacian(graph: &ControlGraph, x: &[Vec3]) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); graph.len()];
    for (i, j, w) in graph.directed_edges() {
        let d = (x[i] - x[j]) * w;
        out[i] += d;
        out[j] -= d;
    }
    out
}
