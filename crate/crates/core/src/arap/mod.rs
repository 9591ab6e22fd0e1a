//! As-rigid-as-possible solve over the control graph.
//!
//! Alternates a local step (best rotation per node from the SVD of its
//! neighborhood covariance) with a global step (linear solve of the reduced
//! Laplacian system with handle positions held fixed).

pub mod cholesky;
mod energy;
mod rotation;
mod system;

pub use energy::{apply_laplacian, arap_energy, laplacian_rhs};
pub use rotation::{fit_rotation, fit_rotations, node_covariance};
pub use system::FactorizedSystem;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{ControlGraph, Error, Mat3, Result, Vec3};

/// Hard position constraints on a subset of control nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct HandleSet {
    indices: Vec<usize>,
    targets: Vec<Vec3>,
}

#[derive(Serialize, Deserialize)]
struct HandleFile {
    indices: Vec<usize>,
    targets: Vec<[f64; 3]>,
}

impl HandleSet {
    pub fn new(indices: Vec<usize>, targets: Vec<Vec3>) -> Result<Self> {
        if indices.len() != targets.len() {
            return Err(Error::arg("handle indices and targets differ in length"));
        }
        for (a, &i) in indices.iter().enumerate() {
            if indices[..a].contains(&i) {
                return Err(Error::arg(format!("duplicate handle index {i}")));
            }
        }
        if let Some(h) = targets.iter().position(|t| !t.iter().all(|v| v.is_finite())) {
            return Err(Error::Validation { field: "target", index: h });
        }
        Ok(Self { indices, targets })
    }

    /// Handles pinned at their rest positions.
    pub fn at_rest(graph: &ControlGraph, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= graph.len()) {
            return Err(Error::arg(format!("handle index {bad} out of range")));
        }
        let targets = indices.iter().map(|&i| graph.rest_positions()[i]).collect();
        Self::new(indices, targets)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn targets(&self) -> &[Vec3] {
        &self.targets
    }

    /// Same indices, new targets.
    pub fn with_targets(&self, targets: Vec<Vec3>) -> Result<Self> {
        if targets.len() != self.indices.len() {
            return Err(Error::arg(format!(
                "expected {} targets, got {}",
                self.indices.len(),
                targets.len()
            )));
        }
        Self::new(self.indices.clone(), targets)
    }

    pub fn check_range(&self, node_count: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= node_count) {
            Some(i) => Err(Error::arg(format!("handle index {i} out of range"))),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&HandleFile {
            indices: self.indices.clone(),
            targets: self.targets.iter().map(|t| [t.x, t.y, t.z]).collect(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: HandleFile = serde_json::from_str(text)?;
        Self::new(file.indices, file.targets.into_iter().map(Vec3::from).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeformStatus {
    Solved,
    /// No handles were given; the rest pose is returned unchanged.
    Unconstrained,
}

/// Solved control positions and per-node rotations.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformResult {
    pub positions: Vec<Vec3>,
    pub rotations: Vec<Mat3>,
    /// Energy after each half-step: `[local_1, global_1, local_2, global_2, ...]`.
    pub energy_trace: Vec<f64>,
    pub status: DeformStatus,
}

#[derive(Serialize)]
struct ResultFile<'a> {
    positions: Vec<[f64; 3]>,
    /// Row-major 3x3 matrices.
    rotations: Vec<[[f64; 3]; 3]>,
    energy_trace: &'a [f64],
    status: DeformStatus,
}

impl DeformResult {
    /// Rest pose with identity rotations.
    pub fn rest(graph: &ControlGraph) -> Self {
        Self {
            positions: graph.rest_positions().to_vec(),
            rotations: vec![Mat3::identity(); graph.len()],
            energy_trace: Vec::new(),
            status: DeformStatus::Unconstrained,
        }
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.energy_trace.last().copied()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ResultFile {
            positions: self.positions.iter().map(|p| [p.x, p.y, p.z]).collect(),
            rotations: self
                .rotations
                .iter()
                .map(|r| [0, 1, 2].map(|row| [r[(row, 0)], r[(row, 1)], r[(row, 2)]]))
                .collect(),
            energy_trace: &self.energy_trace,
            status: self.status,
        };
        Ok(serde_json::to_string(&file)?)
    }
}

/// Solves from the rest pose, factoring the system for this handle set.
pub fn deform(graph: &ControlGraph, handles: &HandleSet, iters: usize) -> Result<DeformResult> {
    handles.check_range(graph.len())?;
    let system = FactorizedSystem::assemble(graph, handles.indices())?;
    deform_from(&system, graph, handles, graph.rest_positions(), iters)
}

/// Solves starting from `initial` (typically the previous solution) with a pre-factored system.
///
/// Handle entries of `initial` are replaced by their targets before the first
/// local step.
pub fn deform_from(
    system: &FactorizedSystem,
    graph: &ControlGraph,
    handles: &HandleSet,
    initial: &[Vec3],
    iters: usize,
) -> Result<DeformResult> {
    if iters == 0 {
        return Err(Error::arg("iteration count must be at least 1"));
    }
    if initial.len() != graph.len() {
        return Err(Error::arg("initial positions do not match graph size"));
    }
    if system.is_underconstrained() {
        return Ok(DeformResult::rest(graph));
    }
    let mut positions = initial.to_vec();
    for (&node, target) in handles.indices().iter().zip(handles.targets()) {
        positions[node] = *target;
    }
    let mut rotations = Vec::new();
    let mut energy_trace = Vec::with_capacity(2 * iters);
    for _ in 0..iters {
        rotations = fit_rotations(graph, &positions)?;
        energy_trace.push(energy::energy_unchecked(graph, &positions, &rotations));
        positions = system.solve_positions(graph, &rotations, handles)?;
        energy_trace.push(energy::energy_unchecked(graph, &positions, &rotations));
    }
    Ok(DeformResult {
        positions,
        rotations,
        energy_trace,
        status: DeformStatus::Solved,
    })
}
