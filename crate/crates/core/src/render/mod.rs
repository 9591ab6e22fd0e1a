//! CPU preview renderer for Gaussian clouds.
//!
//! Each Gaussian is projected to a 2D Gaussian (EWA splatting with the
//! perspective Jacobian), splats are depth-sorted globally and blended with
//! the over operator. Color is the SH degree-0 term only.

mod camera;
mod image;

pub use camera::Camera;
pub use image::{ImageRgb, ImageRgba};

use nalgebra::{Matrix2, Matrix2x3, UnitQuaternion, Vector2};
use rayon::prelude::*;

use crate::splat::SH_C0;
use crate::{GaussianCloud, Mat3, Vec3};

pub const NEAR_PLANE: f64 = 1e-4;
/// Added to every projected covariance, in pixels squared.
pub const COV2D_REGULARIZER: f64 = 0.3;
pub const MAX_ALPHA: f64 = 0.99;
/// Pixels stop accumulating once transmittance drops below this.
const MIN_TRANSMITTANCE: f64 = 1e-4;
/// Rows per parallel work unit.
const BAND_ROWS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedGaussian {
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    pub depth: f64,
}

/// Projects a 3D Gaussian to image space; `None` when it lies behind the near plane.
pub fn project_gaussian(center: &Vec3, scale: &Vec3, rotation: &UnitQuaternion<f64>, camera: &Camera) -> Option<ProjectedGaussian> {
    let pc = camera.world_to_camera(center);
    if !(pc.z > NEAR_PLANE) {
        return None;
    }
    let r: Mat3 = *rotation.to_rotation_matrix().matrix();
    let m = r * Mat3::from_diagonal(scale);
    let cov_world = m * m.transpose();
    let w = camera.rotation;
    let cov_cam = w * cov_world * w.transpose();
    let (x, y, z) = (pc.x, pc.y, pc.z);
    let j = Matrix2x3::new(
        camera.fx / z, 0.0, -camera.fx * x / (z * z),
        0.0, camera.fy / z, -camera.fy * y / (z * z),
    );
    let cov2d = j * cov_cam * j.transpose() + Matrix2::identity() * COV2D_REGULARIZER;
    let (u, v) = camera.project(&pc);
    Some(ProjectedGaussian {
        mean2d: Vector2::new(u, v),
        cov2d,
        depth: z,
    })
}

/// SH degree-0 color to RGB.
pub fn dc_to_rgb(dc: &Vec3) -> [f64; 3] {
    [0, 1, 2].map(|c| (0.5 + SH_C0 * dc[c]).clamp(0.0, 1.0))
}

struct Splat {
    mean: Vector2<f64>,
    conic: Matrix2<f64>,
    opacity: f64,
    color: [f64; 3],
    /// Inclusive pixel bounds.
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

/// Renders `cloud` front to back with straight-alpha output.
///
/// Pixel `(x, y)` samples the image plane at `(x, y)`; the principal point is
/// in the same coordinates.
pub fn render(cloud: &GaussianCloud, camera: &Camera) -> ImageRgba {
    let (width, height) = (camera.width, camera.height);
    let mut projected: Vec<(f64, usize, Splat)> = (0..cloud.len())
        .into_par_iter()
        .filter_map(|i| {
            let p = project_gaussian(&cloud.centers()[i], &cloud.scales()[i], &cloud.rotations()[i], camera)?;
            let conic = p.cov2d.try_inverse()?;
            // 3 sigma along the major axis
            let (a, b, c) = (p.cov2d[(0, 0)], p.cov2d[(0, 1)], p.cov2d[(1, 1)]);
            let mid = 0.5 * (a + c);
            let lambda = mid + (mid * mid - (a * c - b * b)).max(0.0).sqrt();
            let radius = 3.0 * lambda.sqrt();
            let (u, v) = (p.mean2d.x, p.mean2d.y);
            if u + radius < 0.0 || v + radius < 0.0 || u - radius > (width - 1) as f64 || v - radius > (height - 1) as f64 {
                return None;
            }
            let clamp = |t: f64, hi: usize| t.max(0.0).min(hi as f64) as usize;
            Some((
                p.depth,
                i,
                Splat {
                    mean: p.mean2d,
                    conic,
                    opacity: cloud.opacities()[i],
                    color: dc_to_rgb(&cloud.colors_dc()[i]),
                    x0: clamp((u - radius).ceil(), width - 1),
                    x1: clamp((u + radius).floor(), width - 1),
                    y0: clamp((v - radius).ceil(), height - 1),
                    y1: clamp((v + radius).floor(), height - 1),
                },
            ))
        })
        .collect();
    projected.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut img = ImageRgba::transparent(width, height);
    img.pixels
        .par_chunks_mut(width * BAND_ROWS)
        .enumerate()
        .for_each(|(band, pixels)| {
            let row0 = band * BAND_ROWS;
            let rows = pixels.len() / width;
            // accumulated premultiplied color and transmittance
            let mut acc = vec![([0.0f64; 3], 1.0f64); pixels.len()];
            for (_, _, s) in &projected {
                if s.y1 < row0 || s.y0 >= row0 + rows {
                    continue;
                }
                for y in s.y0.max(row0)..=s.y1.min(row0 + rows - 1) {
                    for x in s.x0..=s.x1 {
                        let slot = &mut acc[(y - row0) * width + x];
                        if slot.1 < MIN_TRANSMITTANCE {
                            continue;
                        }
                        let d = Vector2::new(x as f64, y as f64) - s.mean;
                        let power = -0.5 * (d.transpose() * s.conic * d)[(0, 0)];
                        let alpha = (s.opacity * power.exp()).min(MAX_ALPHA);
                        for c in 0..3 {
                            slot.0[c] += slot.1 * alpha * s.color[c];
                        }
                        slot.1 *= 1.0 - alpha;
                    }
                }
            }
            for (px, (color, t)) in pixels.iter_mut().zip(acc) {
                let a = 1.0 - t;
                if a > 0.0 {
                    *px = [
                        (color[0] / a).clamp(0.0, 1.0) as f32,
                        (color[1] / a).clamp(0.0, 1.0) as f32,
                        (color[2] / a).clamp(0.0, 1.0) as f32,
                        a.clamp(0.0, 1.0) as f32,
                    ];
                }
            }
        });
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Quaternion;

    fn axis_camera(f: f64, w: usize, h: usize) -> Camera {
        Camera::new(f, f, w as f64 / 2.0, h as f64 / 2.0, Mat3::identity(), Vec3::zeros(), w, h).unwrap()
    }

    fn cloud(centers: Vec<Vec3>, scales: Vec<Vec3>, opacities: Vec<f64>, dc: Vec<Vec3>) -> GaussianCloud {
        let n = centers.len();
        GaussianCloud::new(centers, opacities, scales, vec![Quaternion::identity(); n], dc, None).unwrap()
    }

    #[test]
    fn isotropic_on_axis() {
        let (f, sigma, z) = (200.0, 0.05, 4.0);
        let cam = axis_camera(f, 64, 64);
        let p = project_gaussian(&Vec3::new(0.0, 0.0, z), &Vec3::repeat(sigma), &UnitQuaternion::identity(), &cam).unwrap();
        let expected = (f * sigma / z).powi(2) + 0.3;
        assert!((p.cov2d[(0, 0)] - expected).abs() < 1e-12);
        assert!((p.cov2d[(1, 1)] - expected).abs() < 1e-12);
        assert!(p.cov2d[(0, 1)].abs() < 1e-12);
        assert_eq!(p.depth, z);
        assert_eq!(p.mean2d, Vector2::new(32.0, 32.0));
    }

    #[test]
    fn doubling_depth_quarters_covariance() {
        let cam = axis_camera(100.0, 64, 64);
        let s = Vec3::new(0.1, 0.2, 0.05);
        let near = project_gaussian(&Vec3::new(0.0, 0.0, 2.0), &s, &UnitQuaternion::identity(), &cam).unwrap();
        let far = project_gaussian(&Vec3::new(0.0, 0.0, 4.0), &s, &UnitQuaternion::identity(), &cam).unwrap();
        let reg = Matrix2::identity() * COV2D_REGULARIZER;
        assert!(((near.cov2d - reg) / 4.0 - (far.cov2d - reg)).norm() < 1e-12);
    }

    #[test]
    fn behind_camera_is_culled() {
        let cam = axis_camera(100.0, 8, 8);
        for z in [0.0, -1.0, 1e-5] {
            assert!(project_gaussian(&Vec3::new(0.0, 0.0, z), &Vec3::repeat(0.1), &UnitQuaternion::identity(), &cam).is_none());
        }
    }

    #[test]
    fn single_opaque_splat() {
        let cam = axis_camera(100.0, 32, 32);
        let dc = Vec3::new(0.8, -0.4, 0.1);
        let c = cloud(vec![Vec3::new(0.0, 0.0, 2.0)], vec![Vec3::repeat(0.5)], vec![1.0 - 1e-9], vec![dc]);
        let img = render(&c, &cam);
        let px = img.get(16, 16);
        let want = dc_to_rgb(&dc);
        for ch in 0..3 {
            assert!((px[ch] as f64 - want[ch]).abs() <= 1.0 / 255.0);
        }
        assert!(px[3] >= 0.98);
    }

    #[test]
    fn near_red_occludes_far_green() {
        let cam = axis_camera(100.0, 32, 32);
        // dc such that 0.5 + C0 * dc hits 1 or 0
        let red = Vec3::new(2.0, -2.0, -2.0);
        let green = Vec3::new(-2.0, 2.0, -2.0);
        let c = cloud(
            vec![Vec3::new(0.0, 0.0, 5.0), Vec3::new(0.0, 0.0, 2.0)],
            vec![Vec3::repeat(0.5); 2],
            vec![0.999; 2],
            vec![green, red],
        );
        let px = render(&c, &cam).get(16, 16);
        assert!(px[0] > 0.98 && px[1] < 0.02, "{px:?}");
    }

    #[test]
    fn empty_view_is_transparent() {
        let cam = axis_camera(100.0, 16, 8);
        let c = cloud(vec![Vec3::new(0.0, 0.0, -3.0)], vec![Vec3::repeat(0.5)], vec![0.9], vec![Vec3::zeros()]);
        let img = render(&c, &cam);
        assert!(img.pixels.iter().all(|p| *p == [0.0; 4]));
    }

    #[test]
    fn storage_order_does_not_matter() {
        let cam = axis_camera(60.0, 40, 30);
        let centers = vec![Vec3::new(0.1, 0.0, 3.0), Vec3::new(-0.2, 0.1, 3.5), Vec3::new(0.0, -0.1, 2.5)];
        let scales = vec![Vec3::new(0.2, 0.1, 0.1), Vec3::repeat(0.3), Vec3::new(0.05, 0.3, 0.1)];
        let opac = vec![0.6, 0.8, 0.4];
        let dc = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)];
        let a = render(&cloud(centers.clone(), scales.clone(), opac.clone(), dc.clone()), &cam);
        let perm = [2, 0, 1];
        let b = render(
            &cloud(
                perm.iter().map(|&i| centers[i]).collect(),
                perm.iter().map(|&i| scales[i]).collect(),
                perm.iter().map(|&i| opac[i]).collect(),
                perm.iter().map(|&i| dc[i]).collect(),
            ),
            &cam,
        );
        assert_eq!(a, b);
        assert!(a.pixels.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
