//! Linear blend skinning of Gaussians onto deformed control nodes.
//!
//! Each Gaussian is bound in the rest pose to its `K̃` nearest control nodes
//! with normalized inverse-distance weights. A deformation moves the center as
//! the weighted blend of per-node rigid transforms and blends the per-node
//! rotated orientations as sign-aligned quaternions.

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use rayon::prelude::*;

use crate::arap::DeformResult;
use crate::{ControlGraph, Error, GaussianCloud, Result, Vec3};

/// Relative distance regularizer: `ε = BIND_EPS * bbox diagonal`.
pub const BIND_EPS: f64 = 1e-8;

/// Blended quaternions shorter than this fall back to the dominant term.
const MIN_BLEND_NORM: f64 = 1e-8;

/// Rest-pose binding of every Gaussian to a few control nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SkinBinding {
    k: usize,
    control_ids: Vec<usize>,
    weights: Vec<f64>,
}

impl SkinBinding {
    /// Controls bound per Gaussian.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.control_ids.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.control_ids.is_empty()
    }

    pub fn controls(&self, gaussian: usize) -> &[usize] {
        &self.control_ids[gaussian * self.k..(gaussian + 1) * self.k]
    }

    pub fn weights(&self, gaussian: usize) -> &[f64] {
        &self.weights[gaussian * self.k..(gaussian + 1) * self.k]
    }
}

/// Binds each Gaussian to its `k_tilde` Euclidean-nearest control rest positions.
///
/// Weights are `1 / (d + ε)` normalized to sum to one; equal distances prefer
/// the smaller node id.
pub fn bind(cloud: &GaussianCloud, graph: &ControlGraph, k_tilde: usize) -> Result<SkinBinding> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if k_tilde == 0 || k_tilde > graph.len() {
        return Err(Error::arg(format!(
            "skin neighbor count {k_tilde} outside 1..={}",
            graph.len()
        )));
    }
    let diag = cloud.bbox_diagonal();
    let eps = if diag > 0.0 { BIND_EPS * diag } else { BIND_EPS };
    let nodes = graph.rest_positions();

    let per_gaussian: Vec<(Vec<usize>, Vec<f64>)> = cloud
        .centers()
        .par_iter()
        .map(|c| {
            // small sorted buffer of (squared distance, id)
            let mut best: Vec<(f64, usize)> = Vec::with_capacity(k_tilde + 1);
            for (j, p) in nodes.iter().enumerate() {
                let d2 = (p - c).norm_squared();
                if best.len() == k_tilde && !closer((d2, j), best[k_tilde - 1]) {
                    continue;
                }
                let pos = best.partition_point(|&e| closer(e, (d2, j)));
                best.insert(pos, (d2, j));
                best.truncate(k_tilde);
            }
            let raw: Vec<f64> = best.iter().map(|&(d2, _)| 1.0 / (d2.sqrt() + eps)).collect();
            let total: f64 = raw.iter().sum();
            (
                best.iter().map(|&(_, j)| j).collect(),
                raw.iter().map(|w| w / total).collect(),
            )
        })
        .collect();

    let mut control_ids = Vec::with_capacity(cloud.len() * k_tilde);
    let mut weights = Vec::with_capacity(cloud.len() * k_tilde);
    for (ids, w) in per_gaussian {
        control_ids.extend(ids);
        weights.extend(w);
    }
    Ok(SkinBinding {
        k: k_tilde,
        control_ids,
        weights,
    })
}

/// Weighted sum of quaternions sign-aligned to the first term, normalized.
///
/// Falls back to the highest-weight term when the sum nearly vanishes.
pub fn blend_quaternions(terms: &[(f64, UnitQuaternion<f64>)]) -> UnitQuaternion<f64> {
    let Some(&(_, first)) = terms.first() else {
        return UnitQuaternion::identity();
    };
    let reference = *first.quaternion();
    let mut sum = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    let mut dominant = terms[0];
    for &(w, q) in terms {
        let mut coords = *q.quaternion();
        if reference.dot(&coords) < 0.0 {
            coords = -coords;
        }
        sum += coords * w;
        if w > dominant.0 {
            dominant = (w, q);
        }
    }
    if sum.norm() < MIN_BLEND_NORM {
        dominant.1
    } else {
        UnitQuaternion::from_quaternion(sum)
    }
}

fn closer(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Applies a solved deformation to every Gaussian.
///
/// Centers: `μ' = Σ w_j (R_j (μ - p_j) + p'_j)`. Orientations: per-node
/// `R_j · q`, sign-aligned to the first term, summed with the weights and
/// normalized. Opacities, scales and colors are carried over unchanged.
pub fn apply_lbs(
    cloud: &GaussianCloud,
    binding: &SkinBinding,
    graph: &ControlGraph,
    result: &DeformResult,
) -> Result<GaussianCloud> {
    if binding.len() != cloud.len() {
        return Err(Error::arg("binding does not match cloud size"));
    }
    if result.positions.len() != graph.len() || result.rotations.len() != graph.len() {
        return Err(Error::arg("deform result does not match graph size"));
    }
    let node_quats: Vec<UnitQuaternion<f64>> = result
        .rotations
        .par_iter()
        .map(|r| UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r)))
        .collect();
    let rest = graph.rest_positions();

    let (centers, rotations): (Vec<Vec3>, Vec<UnitQuaternion<f64>>) = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mu = cloud.centers()[i];
            let q = cloud.rotations()[i];
            let ids = binding.controls(i);
            let ws = binding.weights(i);

            let mut center = Vec3::zeros();
            let mut terms = Vec::with_capacity(ids.len());
            for (&j, &w) in ids.iter().zip(ws) {
                center += (result.rotations[j] * (mu - rest[j]) + result.positions[j]) * w;
                terms.push((w, node_quats[j] * q));
            }
            let rotation = blend_quaternions(&terms);
            (center, rotation)
        })
        .unzip();
    cloud.with_pose(centers, rotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat3;
    use nalgebra::Unit;

    fn cloud(points: &[Vec3]) -> GaussianCloud {
        let n = points.len();
        GaussianCloud::new(
            points.to_vec(),
            (0..n).map(|i| 0.2 + 0.05 * i as f64).collect(),
            (0..n).map(|i| Vec3::new(0.1, 0.2, 0.3) * (1.0 + i as f64)).collect(),
            (0..n)
                .map(|i| {
                    *UnitQuaternion::from_euler_angles(0.1 * i as f64, 0.3, -0.2 * i as f64).quaternion()
                })
                .collect(),
            vec![Vec3::new(0.1, 0.2, 0.3); n],
            None,
        )
        .unwrap()
    }

    fn square_graph() -> ControlGraph {
        let pts = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::new(1.0, 1.0, 0.0)];
        ControlGraph::with_uniform_weights(pts, vec![vec![1, 2], vec![0, 3], vec![0, 3], vec![1, 2]]).unwrap()
    }

    #[test]
    fn default_k_tilde() {
        assert_eq!(crate::config::DEFAULT_SKIN_NEIGHBORS, 3);
    }

    #[test]
    fn gaussian_on_a_node_takes_its_weight() {
        let g = ControlGraph::with_uniform_weights(
            vec![Vec3::zeros(), Vec3::x() * 2.0, Vec3::y() * 3.0, Vec3::z() * 1.0],
            vec![vec![1], vec![0], vec![0], vec![0]],
        )
        .unwrap();
        let c = cloud(&[Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)]);
        let b = bind(&c, &g, 3).unwrap();
        assert_eq!(b.controls(0)[0], 0);
        assert!(b.weights(0)[0] > 0.99);
    }

    #[test]
    fn equidistant_weights() {
        let s = 3f64.sqrt() / 2.0;
        let g = ControlGraph::with_uniform_weights(
            vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-0.5, s, 0.0), Vec3::new(-0.5, -s, 0.0)],
            vec![vec![1], vec![2], vec![0]],
        )
        .unwrap();
        let b = bind(&cloud(&[Vec3::zeros(), Vec3::x() * 3.0]), &g, 3).unwrap();
        for &w in b.weights(0) {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        let mut ids = b.controls(0).to_vec();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn weights_sum_to_one() {
        let g = square_graph();
        let c = cloud(&[Vec3::new(0.3, 0.2, 0.1), Vec3::new(2.0, -1.0, 0.5), Vec3::new(0.5, 0.5, 0.0)]);
        let b = bind(&c, &g, 3).unwrap();
        for i in 0..c.len() {
            let sum: f64 = b.weights(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(b.weights(i).iter().all(|&w| w >= 0.0));
            let mut ids = b.controls(i).to_vec();
            ids.dedup();
            assert_eq!(ids.len(), 3);
        }
        assert!(bind(&c, &g, 5).is_err());
    }

    #[test]
    fn rest_pose_is_identity() {
        let g = square_graph();
        let c = cloud(&[Vec3::new(0.3, 0.2, 0.1), Vec3::new(2.0, -1.0, 0.5), Vec3::new(0.5, 0.5, 0.0)]);
        let b = bind(&c, &g, 3).unwrap();
        let out = apply_lbs(&c, &b, &g, &DeformResult::rest(&g)).unwrap();
        for i in 0..c.len() {
            assert!((out.centers()[i] - c.centers()[i]).norm() < 1e-9);
            assert!(out.rotations()[i].angle_to(&c.rotations()[i]) < 1e-9);
        }
        assert_eq!(out.opacities(), c.opacities());
        assert_eq!(out.scales(), c.scales());
        assert_eq!(out.colors_dc(), c.colors_dc());
    }

    #[test]
    fn two_control_blend_is_mean_of_predictions() {
        let g = ControlGraph::with_uniform_weights(vec![Vec3::zeros(), Vec3::x() * 2.0], vec![vec![1], vec![0]]).unwrap();
        let c = cloud(&[Vec3::new(1.0, 0.0, 0.0)]);
        let b = bind(&c, &g, 2).unwrap();
        assert!((b.weights(0)[0] - 0.5).abs() < 1e-12);
        let rz = *Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::z()), std::f64::consts::FRAC_PI_2).matrix();
        let result = DeformResult {
            positions: vec![Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)],
            rotations: vec![rz, Mat3::identity()],
            energy_trace: vec![],
            status: crate::arap::DeformStatus::Solved,
        };
        let out = apply_lbs(&c, &b, &g, &result).unwrap();
        // control 0 maps (1,0,0) to (0,1,0); control 1 leaves it at (1,0,0)
        let expected = (Vec3::new(0.0, 1.0, 0.0) + Vec3::new(1.0, 0.0, 0.0)) * 0.5;
        assert!((out.centers()[0] - expected).norm() < 1e-12);
    }

    #[test]
    fn sign_alignment_and_fallback() {
        let q = UnitQuaternion::from_euler_angles(0.4, -0.1, 0.9);
        let flipped = UnitQuaternion::new_unchecked(-*q.quaternion());
        // q and -q encode the same rotation and must not cancel
        let blended = blend_quaternions(&[(0.5, q), (0.5, flipped)]);
        assert!(blended.angle_to(&q) < 1e-12);
        // vanishing weights fall back to the dominant term
        let other = UnitQuaternion::from_euler_angles(0.0, 0.0, 1.0);
        let fallback = blend_quaternions(&[(0.0, q), (1e-12, other)]);
        assert_eq!(fallback, other);
    }
}
