use nalgebra::DMatrix;
use rayon::prelude::*;

use super::cholesky::EnvelopeCholesky;
use super::energy::laplacian_rhs;
use super::HandleSet;
use crate::{ControlGraph, Error, Mat3, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Free(usize),
    Handle(usize),
}

/// Laplacian of the control graph with handle rows and columns eliminated,
/// factored once and reused for every solve with the same handle indices.
#[derive(Clone, Debug)]
pub struct FactorizedSystem {
    handle_indices: Vec<usize>,
    free: Vec<usize>,
    slots: Vec<Slot>,
    /// Lower triangle of the free-free block, in free-slot numbering.
    reduced: Vec<(usize, usize, f64)>,
    /// Per free slot, `(handle slot, L_fh)` couplings moved to the right-hand side.
    coupling: Vec<Vec<(usize, f64)>>,
    factor: Option<EnvelopeCholesky>,
}

impl FactorizedSystem {
    /// Assembles and factors the reduced system for a handle index set.
    ///
    /// The Laplacian uses symmetrized weights `w_ij + w_ji`. With no handles the
    /// system is singular (rigid translations are free); the result is then
    /// marked [`underconstrained`](Self::is_underconstrained) and holds no factor.
    pub fn assemble(graph: &ControlGraph, handle_indices: &[usize]) -> Result<Self> {
        let n = graph.len();
        let mut slots = vec![Slot::Free(usize::MAX); n];
        for (h, &node) in handle_indices.iter().enumerate() {
            if node >= n {
                return Err(Error::arg(format!("handle index {node} out of range")));
            }
            if matches!(slots[node], Slot::Handle(_)) {
                return Err(Error::arg(format!("duplicate handle index {node}")));
            }
            slots[node] = Slot::Handle(h);
        }
        let mut free = Vec::with_capacity(n - handle_indices.len());
        for (node, slot) in slots.iter_mut().enumerate() {
            if let Slot::Free(f) = slot {
                *f = free.len();
                free.push(node);
            }
        }

        let mut diag = vec![0.0; free.len()];
        let mut reduced = Vec::new();
        let mut coupling = vec![Vec::new(); free.len()];
        for (i, j, w) in graph.directed_edges() {
            match (slots[i], slots[j]) {
                (Slot::Free(a), Slot::Free(b)) => {
                    diag[a] += w;
                    diag[b] += w;
                    reduced.push((a.max(b), a.min(b), -w));
                }
                (Slot::Free(a), Slot::Handle(h)) | (Slot::Handle(h), Slot::Free(a)) => {
                    diag[a] += w;
                    coupling[a].push((h, -w));
                }
                (Slot::Handle(_), Slot::Handle(_)) => {}
            }
        }
        reduced.extend(diag.iter().enumerate().map(|(a, &d)| (a, a, d)));

        let factor = if handle_indices.is_empty() || free.is_empty() {
            None
        } else {
            Some(EnvelopeCholesky::factor(free.len(), &reduced).map_err(|_| {
                Error::Numeric("reduced Laplacian is singular: some component has no handle".into())
            })?)
        };
        Ok(Self {
            handle_indices: handle_indices.to_vec(),
            free,
            slots,
            reduced,
            coupling,
            factor,
        })
    }

    /// No handles: positions are only defined up to a translation.
    pub fn is_underconstrained(&self) -> bool {
        self.handle_indices.is_empty()
    }

    pub fn handle_indices(&self) -> &[usize] {
        &self.handle_indices
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn node_count(&self) -> usize {
        self.slots.len()
    }

    /// Dense copy of the reduced matrix over free nodes, in [`free_nodes`](Self::free_nodes) order.
    pub fn reduced_matrix(&self) -> DMatrix<f64> {
        let m = self.free.len();
        let mut out = DMatrix::zeros(m, m);
        for &(r, c, v) in &self.reduced {
            out[(r, c)] += v;
            if r != c {
                out[(c, r)] += v;
            }
        }
        out
    }

    /// Global step: positions minimizing the rigidity energy for fixed rotations.
    ///
    /// Handle entries of the output are the targets, copied exactly.
    pub fn solve_positions(&self, graph: &ControlGraph, rotations: &[Mat3], handles: &HandleSet) -> Result<Vec<Vec3>> {
        if graph.len() != self.node_count() || rotations.len() != self.node_count() {
            return Err(Error::arg("graph or rotations do not match the factored system"));
        }
        if handles.indices() != self.handle_indices.as_slice() {
            return Err(Error::arg("handle indices differ from the factored system"));
        }
        if self.is_underconstrained() {
            return Err(Error::arg("cannot solve positions without handles"));
        }
        let mut out = vec![Vec3::zeros(); self.node_count()];
        for (&node, target) in handles.indices().iter().zip(handles.targets()) {
            out[node] = *target;
        }
        let Some(factor) = &self.factor else {
            return Ok(out);
        };

        let b = laplacian_rhs(graph, rotations);
        let rhs: Vec<Vec3> = self
            .free
            .iter()
            .zip(&self.coupling)
            .map(|(&node, couple)| {
                couple
                    .iter()
                    .fold(b[node], |acc, &(h, l)| acc - handles.targets()[h] * l)
            })
            .collect();
        let axes: Vec<Vec<f64>> = (0..3)
            .into_par_iter()
            .map(|axis| factor.solve(&rhs.iter().map(|v| v[axis]).collect::<Vec<_>>()))
            .collect();
        for (f, &node) in self.free.iter().enumerate() {
            out[node] = Vec3::new(axes[0][f], axes[1][f], axes[2][f]);
        }
        Ok(out)
    }
}
