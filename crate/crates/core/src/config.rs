//! Default parameters of the deformation pipeline.

/// Number of control nodes sampled from the Gaussians.
pub const DEFAULT_CONTROL_COUNT: usize = 512;

/// Neighbors per control node in the deformation graph.
pub const DEFAULT_NEIGHBORS: usize = 8;

/// Control nodes blended per Gaussian during skinning.
pub const DEFAULT_SKIN_NEIGHBORS: usize = 3;

/// Local/global alternations per solve.
pub const DEFAULT_ITERATIONS: usize = 3;

pub const DEFAULT_MASK_THRESHOLD: f32 = 0.5;

/// Boundary band dilation radius in pixels.
pub const DEFAULT_MASK_RADIUS: usize = 8;
