use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Mat3, Result, Vec3};

/// Pinhole camera. Camera space has +x right, +y down and +z forward.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: Mat3,
    /// World-to-camera translation.
    pub translation: Vec3,
    pub width: usize,
    pub height: usize,
}

#[derive(Serialize, Deserialize)]
struct CameraFile {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    /// Row-major.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    width: usize,
    height: usize,
}

impl Camera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, rotation: Mat3, translation: Vec3, width: usize, height: usize) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy, rotation, translation, width, height };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `eye` looking at `target`, with a vertical field of view in radians.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, fov_y: f64, width: usize, height: usize) -> Result<Self> {
        let forward = (target - eye).try_normalize(1e-12).ok_or_else(|| Error::arg("eye equals target"))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::arg("up is parallel to the view direction"))?;
        let down = forward.cross(&right);
        let rotation = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let f = 0.5 * height as f64 / (0.5 * fov_y).tan();
        Self::new(f, f, width as f64 / 2.0, height as f64 / 2.0, rotation, -(rotation * eye), width, height)
    }

    fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::arg("focal lengths must be positive"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::arg("image size must be non-zero"));
        }
        let r = &self.rotation;
        if (r.transpose() * r - Mat3::identity()).norm() > 1e-6 || r.determinant() <= 0.0 {
            return Err(Error::arg("camera rotation must be orthonormal with det +1"));
        }
        Ok(())
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Pixel coordinates of a camera-space point.
    pub fn project(&self, pc: &Vec3) -> (f64, f64) {
        (self.fx * pc.x / pc.z + self.cx, self.fy * pc.y / pc.z + self.cy)
    }

    pub fn to_json(&self) -> Result<String> {
        let r = &self.rotation;
        Ok(serde_json::to_string_pretty(&CameraFile {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: [self.translation.x, self.translation.y, self.translation.z],
            width: self.width,
            height: self.height,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CameraFile = serde_json::from_str(text)?;
        let rotation = Mat3::from_fn(|i, j| f.rotation[i][j]);
        Self::new(f.fx, f.fy, f.cx, f.cy, rotation, Vec3::from(f.translation), f.width, f.height)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }
}
