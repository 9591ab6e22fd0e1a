//! Envelope (profile) Cholesky factorization of sparse SPD matrices.
//!
//! Rows are reordered with reverse Cuthill-McKee to shrink the envelope;
//! the factor stores, per row, the contiguous span from the first nonzero
//! column to the diagonal. Fill stays inside that span.

use std::collections::VecDeque;

use crate::{Error, Result};

/// Pivots at or below this fraction of the original diagonal are rejected.
const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// First stored column of each (permuted) row.
    first: Vec<usize>,
    /// Offset of each row's span in `values`.
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors the symmetric matrix given by `(row, col, value)` triplets.
    ///
    /// Duplicate entries are summed. Only entries with `col <= row` are read, so
    /// callers may pass either the lower triangle or the full matrix.
    pub fn factor(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(Error::arg("triplet index out of range"));
            }
            if r != c {
                adjacency[r].push(c);
                adjacency[c].push(r);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let perm = reverse_cuthill_mckee(&adjacency);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for &(r, c, _) in triplets {
            let (a, b) = (inv[r], inv[c]);
            let (row, col) = if a >= b { (a, b) } else { (b, a) };
            first[row] = first[row].min(col);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            start.push(total);
            total += i - f + 1;
        }
        start.push(total);

        let mut values = vec![0.0; total];
        for &(r, c, v) in triplets {
            let (a, b) = (inv[r], inv[c]);
            if r < c {
                continue;
            }
            let (row, col) = if a >= b { (a, b) } else { (b, a) };
            values[start[row] + col - first[row]] += v;
        }

        let diag: Vec<f64> = (0..n).map(|i| values[start[i] + i - first[i]]).collect();
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = values[start[i] + j - fi];
                for k in lo..j {
                    s -= values[start[i] + k - fi] * values[start[j] + k - fj];
                }
                if j < i {
                    values[start[i] + j - fi] = s / values[start[j] + j - fj];
                } else {
                    // cancellation down to roundoff means the matrix is singular
                    if !(s > PIVOT_TOLERANCE * diag[i].abs()) {
                        return Err(Error::Numeric(format!("matrix is not positive definite (pivot {i})")));
                    }
                    values[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self { perm, first, start, values })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor, a measure of fill.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        self.values[self.start[row] + col - self.first[row]]
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.at(i, k) * y[k];
            }
            y[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let xi = y[i] / self.at(i, i);
            y[i] = xi;
            for k in self.first[i]..i {
                y[k] -= self.at(i, k) * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering, `result[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree = |v: usize| adjacency[v].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree(v), v));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(adjacency, seed);
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adjacency[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (degree(v), v));
            for v in next {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Node of maximal eccentricity found by repeated BFS from the farthest level.
fn pseudo_peripheral(adjacency: &[Vec<usize>], start: usize) -> usize {
    let mut root = start;
    let mut height = 0;
    loop {
        let levels = bfs_levels(adjacency, root);
        let max_level = *levels.iter().filter(|&&l| l != usize::MAX).max().unwrap_or(&0);
        let candidate = (0..adjacency.len())
            .filter(|&v| levels[v] == max_level)
            .min_by_key(|&v| (adjacency[v].len(), v))
            .unwrap_or(root);
        if max_level <= height {
            return root;
        }
        height = max_level;
        root = candidate;
    }
}

fn bfs_levels(adjacency: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adjacency.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    level
}
