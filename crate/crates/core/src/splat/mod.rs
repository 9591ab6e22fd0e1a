//! Gaussian splat objects and their PLY serialization.

mod ply;

pub use ply::{load_ply, save_ply, LoadOptions};

use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};

use crate::{Error, Result, Vec3};

/// Zeroth-order spherical harmonic basis constant.
pub const SH_C0: f64 = 0.282_094_791_8;

/// Maximum deviation from unit norm accepted for a rotation quaternion.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Higher-order SH coefficients carried through untouched, `stride` values per Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct ShRest {
    pub stride: usize,
    pub values: Vec<f32>,
}

impl ShRest {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.stride..(i + 1) * self.stride]
    }
}

/// A dense splat object in working (activated) parameterization.
///
/// Opacities lie in (0, 1), scales are strictly positive and rotations are
/// unit quaternions stored scalar-first. A cloud is immutable once built;
/// edits produce new clouds.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCloud {
    centers: Vec<Vec3>,
    opacities: Vec<f64>,
    scales: Vec<Vec3>,
    rotations: Vec<UnitQuaternion<f64>>,
    colors_dc: Vec<Vec3>,
    colors_rest: Option<ShRest>,
}

impl GaussianCloud {
    pub fn new(
        centers: Vec<Vec3>,
        opacities: Vec<f64>,
        scales: Vec<Vec3>,
        rotations: Vec<Quaternion<f64>>,
        colors_dc: Vec<Vec3>,
        colors_rest: Option<ShRest>,
    ) -> Result<Self> {
        let n = centers.len();
        if n == 0 {
            return Err(Error::EmptyCloud);
        }
        if opacities.len() != n || scales.len() != n || rotations.len() != n || colors_dc.len() != n {
            return Err(Error::arg("attribute arrays differ in length"));
        }
        if let Some(rest) = &colors_rest {
            if rest.values.len() != rest.stride * n {
                return Err(Error::arg("colors_rest length does not match cloud size"));
            }
            if let Some(i) = rest.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation { field: "f_rest", index: i / rest.stride.max(1) });
            }
        }
        for i in 0..n {
            if !finite3(&centers[i]) {
                return Err(Error::Validation { field: "center", index: i });
            }
            let o = opacities[i];
            if !(o > 0.0 && o < 1.0) {
                return Err(Error::Validation { field: "opacity", index: i });
            }
            if !finite3(&scales[i]) || scales[i].iter().any(|&s| s <= 0.0) {
                return Err(Error::Validation { field: "scale", index: i });
            }
            let q = &rotations[i];
            if !q.coords.iter().all(|v| v.is_finite()) || (q.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::Validation { field: "rotation", index: i });
            }
            if !finite3(&colors_dc[i]) {
                return Err(Error::Validation { field: "color", index: i });
            }
        }
        Ok(Self {
            centers,
            opacities,
            scales,
            rotations: rotations.into_iter().map(UnitQuaternion::new_unchecked).collect(),
            colors_dc,
            colors_rest,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn opacities(&self) -> &[f64] {
        &self.opacities
    }

    pub fn scales(&self) -> &[Vec3] {
        &self.scales
    }

    pub fn rotations(&self) -> &[UnitQuaternion<f64>] {
        &self.rotations
    }

    pub fn colors_dc(&self) -> &[Vec3] {
        &self.colors_dc
    }

    pub fn colors_rest(&self) -> Option<&ShRest> {
        self.colors_rest.as_ref()
    }

    /// Returns a copy with new centers and rotations; every other attribute is shared verbatim.
    pub fn with_pose(&self, centers: Vec<Vec3>, rotations: Vec<UnitQuaternion<f64>>) -> Result<Self> {
        if centers.len() != self.len() || rotations.len() != self.len() {
            return Err(Error::arg("pose arrays differ in length from cloud"));
        }
        if let Some(i) = centers.iter().position(|c| !finite3(c)) {
            return Err(Error::Validation { field: "center", index: i });
        }
        if let Some(i) = rotations
            .iter()
            .position(|q| (q.norm() - 1.0).abs() > UNIT_TOLERANCE || !q.coords.iter().all(|v| v.is_finite()))
        {
            return Err(Error::Validation { field: "rotation", index: i });
        }
        Ok(Self {
            centers,
            rotations,
            opacities: self.opacities.clone(),
            scales: self.scales.clone(),
            colors_dc: self.colors_dc.clone(),
            colors_rest: self.colors_rest.clone(),
        })
    }

    /// Reads a PLY file.
    pub fn load(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Self> {
        load_ply(&std::fs::read(path)?, opts)
    }

    /// Writes a binary little-endian PLY file.
    pub fn save(&self, path: impl AsRef<Path>, opts: LoadOptions) -> Result<()> {
        std::fs::write(path, save_ply(self, opts))?;
        Ok(())
    }

    /// Length of the diagonal of the axis-aligned bounding box of the centers.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = self.centers[0];
        let mut hi = self.centers[0];
        for c in &self.centers[1..] {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        (hi - lo).norm()
    }
}

fn finite3(v: &Vec3) -> bool {
    v.iter().all(|x| x.is_finite())
}
