use std::cmp::Ordering;

use rayon::prelude::*;

use crate::{Error, Result, Vec3};

/// Undirected graph over control nodes with Euclidean edge lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSet {
    /// Per node, `(neighbor, length)` sorted by neighbor id.
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Edges added to join otherwise disconnected components.
    repairs: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            repairs: Vec::new(),
        }
    }

    /// Builds an edge set from undirected pairs, lengths taken from `positions`.
    pub fn from_pairs(positions: &[Vec3], pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut set = Self::new(positions.len());
        for (a, b) in pairs {
            set.insert(a, b, (positions[a] - positions[b]).norm());
        }
        set
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn insert(&mut self, a: usize, b: usize, length: f64) {
        if a == b {
            return;
        }
        for (from, to) in [(a, b), (b, a)] {
            let list = &mut self.adjacency[from];
            if let Err(pos) = list.binary_search_by(|e| e.0.cmp(&to)) {
                list.insert(pos, (to, length));
            }
        }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by(|e| e.0.cmp(&b)).is_ok()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Undirected edges as `(a, b, length)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |e| e.0 > a).map(move |&(b, l)| (a, b, l)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn repairs(&self) -> &[(usize, usize)] {
        &self.repairs
    }

    /// Component label per node, labels numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }
}

/// Indices of the `k` Euclidean-nearest other points, ties by smaller index.
pub(crate) fn euclidean_knn(positions: &[Vec3], node: usize, k: usize) -> Vec<usize> {
    let p = positions[node];
    let mut cand: Vec<(f64, usize)> = positions
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != node)
        .map(|(j, q)| ((q - p).norm_squared(), j))
        .collect();
    let k = k.min(cand.len());
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k, by_dist);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Symmetrized `k_half`-nearest-neighbor graph, repaired to a single component.
///
/// Components are joined greedily: the globally closest pair of nodes lying in
/// different components is linked until one component remains.
pub fn build_initial_graph(positions: &[Vec3], k_half: usize) -> Result<EdgeSet> {
    if positions.len() < 2 {
        return Err(Error::arg("initial graph needs at least 2 positions"));
    }
    if k_half == 0 {
        return Err(Error::arg("k_half must be at least 1"));
    }
    let directed: Vec<Vec<usize>> = (0..positions.len())
        .into_par_iter()
        .map(|i| euclidean_knn(positions, i, k_half))
        .collect();
    let mut set = EdgeSet::from_pairs(
        positions,
        directed
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j))),
    );
    repair_connectivity(&mut set, positions);
    Ok(set)
}

pub(crate) fn repair_connectivity(set: &mut EdgeSet, positions: &[Vec3]) {
    let labels = set.components();
    let count = labels.iter().max().map_or(0, |m| m + 1);
    if count <= 1 {
        return;
    }
    // Joining the two components with the closest cross pair, repeatedly, is Kruskal's
    // algorithm on the component graph: scan cross pairs in increasing length.
    let n = positions.len();
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let labels = &labels;
            (a + 1..n)
                .filter(move |&b| labels[a] != labels[b])
                .map(move |b| ((positions[a] - positions[b]).norm(), a, b))
        })
        .collect();
    pairs.par_sort_unstable_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut uf = UnionFind::new(count);
    let mut joined = 1;
    for (len, a, b) in pairs {
        if uf.union(labels[a], labels[b]) {
            set.insert(a, b, len);
            set.repairs.push((a, b));
            joined += 1;
            if joined == count {
                break;
            }
        }
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        match ra.cmp(&rb) {
            Ordering::Equal => false,
            Ordering::Less => {
                self.parent[rb] = ra;
                true
            }
            Ordering::Greater => {
                self.parent[ra] = rb;
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Vec<Vec3> {
        xs.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect()
    }

    #[test]
    fn collinear_chain() {
        let set = build_initial_graph(&line(&[0.0, 1.0, 2.1]), 1).unwrap();
        let edges: Vec<(usize, usize)> = set.edges().map(|(a, b, _)| (a, b)).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
        assert!(set.repairs().is_empty());
    }

    #[test]
    fn two_clusters_get_one_bridge() {
        let pts = line(&[0.0, 0.5, 1.2, 100.0, 100.4, 101.5]);
        let set = build_initial_graph(&pts, 1).unwrap();
        assert_eq!(set.repairs(), &[(2, 3)]);
        // union-find over the final edges confirms a single component
        let mut uf = UnionFind::new(pts.len());
        for (a, b, _) in set.edges() {
            uf.union(a, b);
        }
        let root = uf.find(0);
        assert!((0..pts.len()).all(|i| uf.find(i) == root));
    }

    #[test]
    fn edges_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec3> = (0..80).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
        let set = build_initial_graph(&pts, 3).unwrap();
        for a in 0..pts.len() {
            for &(b, len) in set.neighbors(a) {
                assert!(set.contains(b, a));
                assert_eq!(len, (pts[a] - pts[b]).norm());
            }
        }
        assert!(set.is_connected());
    }

    #[test]
    fn many_clusters_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts = Vec::new();
        for c in 0..6 {
            let base = Vec3::new(c as f64 * 50.0, (c % 2) as f64 * 30.0, 0.0);
            for _ in 0..5 {
                pts.push(base + Vec3::new(rng.random(), rng.random(), rng.random()));
            }
        }
        let set = build_initial_graph(&pts, 1).unwrap();
        assert!(set.is_connected());
        assert!(!set.repairs().is_empty());
    }

    #[test]
    fn rejects_single_point() {
        assert!(build_initial_graph(&line(&[0.0]), 1).is_err());
    }
}
