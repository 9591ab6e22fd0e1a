//! Procedural splat clouds for tests, benchmarks and demos.

use nalgebra::Quaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

use crate::{GaussianCloud, Result, Vec3};

/// Per-Gaussian attributes of a synthetic cloud before validation.
#[derive(Default)]
struct Builder {
    centers: Vec<Vec3>,
    opacities: Vec<f64>,
    scales: Vec<Vec3>,
    rotations: Vec<Quaternion<f64>>,
    colors: Vec<Vec3>,
}

impl Builder {
    fn push(&mut self, rng: &mut ChaCha8Rng, center: Vec3, size: f64, color: Vec3) {
        self.centers.push(center);
        self.opacities.push(rng.random_range(0.3..0.95));
        self.scales.push(Vec3::from_fn(|_, _| size * rng.random_range(0.5..1.5)));
        let q = Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        self.rotations.push(q.normalize());
        self.colors.push(color + Vec3::from_fn(|_, _| rng.random_range(-0.2..0.2)));
    }

    fn build(self) -> Result<GaussianCloud> {
        GaussianCloud::new(self.centers, self.opacities, self.scales, self.rotations, self.colors, None)
    }
}

fn in_ball(rng: &mut ChaCha8Rng, center: Vec3, radius: f64) -> Vec3 {
    let dir: [f64; 3] = UnitSphere.sample(rng);
    center + Vec3::from(dir) * radius * rng.random::<f64>().cbrt()
}

/// `n` Gaussians uniformly filling a ball.
pub fn blob(n: usize, center: Vec3, radius: f64, seed: u64) -> Result<GaussianCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::default();
    let size = radius * 0.6 / (n.max(1) as f64).cbrt();
    for _ in 0..n {
        let c = in_ball(&mut rng, center, radius);
        b.push(&mut rng, c, size, Vec3::new(0.8, -0.3, 0.4));
    }
    b.build()
}

/// Layout of a [`dumbbell`] cloud.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dumbbell {
    pub left_center: Vec3,
    pub right_center: Vec3,
    pub blob_radius: f64,
    pub bridge_radius: f64,
}

impl Default for Dumbbell {
    fn default() -> Self {
        Self {
            left_center: Vec3::new(-2.0, 0.0, 0.0),
            right_center: Vec3::new(2.0, 0.0, 0.0),
            blob_radius: 1.0,
            bridge_radius: 0.15,
        }
    }
}

impl Dumbbell {
    /// Center of the blob containing `p`, or `None` on the bridge.
    pub fn blob_of(&self, p: &Vec3) -> Option<Vec3> {
        [self.left_center, self.right_center]
            .into_iter()
            .find(|c| (p - c).norm() <= self.blob_radius * (1.0 + 1e-9))
    }
}

/// Two solid balls joined by a thin cylinder along the line between them.
///
/// Roughly 40% of the Gaussians go to each blob and the rest to the bridge.
pub fn dumbbell(n: usize, layout: &Dumbbell, seed: u64) -> Result<GaussianCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::default();
    let per_blob = n * 2 / 5;
    let size = layout.blob_radius * 0.6 / (per_blob.max(1) as f64).cbrt();
    for (center, color) in [(layout.left_center, Vec3::new(1.0, -0.5, -0.5)), (layout.right_center, Vec3::new(-0.5, -0.5, 1.0))] {
        for _ in 0..per_blob {
            let c = in_ball(&mut rng, center, layout.blob_radius);
            b.push(&mut rng, c, size, color);
        }
    }
    let axis = layout.right_center - layout.left_center;
    let dir = axis.normalize();
    let side = if dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = dir.cross(&side).normalize();
    let v = dir.cross(&u);
    // bridge spans the gap between the blob surfaces
    let (t0, t1) = (layout.blob_radius, axis.norm() - layout.blob_radius);
    while b.centers.len() < n {
        let t = rng.random_range(t0..t1);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = layout.bridge_radius * rng.random::<f64>().sqrt();
        let c = layout.left_center + dir * t + (u * angle.cos() + v * angle.sin()) * r;
        b.push(&mut rng, c, size * 0.5, Vec3::new(0.0, 0.8, 0.0));
    }
    b.build()
}

/// Gaussians scattered along a curve bent into a C shape of the given radius.
pub fn arc(n: usize, radius: f64, thickness: f64, seed: u64) -> Result<GaussianCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::default();
    let max_angle = 170f64.to_radians();
    for _ in 0..n {
        let a = rng.random_range(-max_angle..=max_angle);
        let on_curve = Vec3::new(radius * a.cos(), radius * a.sin(), 0.0);
        let c = in_ball(&mut rng, on_curve, thickness);
        b.push(&mut rng, c, thickness * 0.3, Vec3::new(0.2, 0.2, 0.9));
    }
    b.build()
}
