//! Nearest-neighbour queries, single-linkage clustering and local PCA.

use kdtree::distance::squared_euclidean;
use kdtree::KdTree;
use nalgebra::{DMatrix, SymmetricEigen};
use petgraph::unionfind::UnionFind;

/// k-d tree over a fixed set of points; query results are point indices.
pub struct PointIndex {
    tree: KdTree<f64, usize, Vec<f64>>,
    len: usize,
}

impl PointIndex {
    pub fn new<P: AsRef<[f64]>>(points: &[P]) -> Self {
        let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(1);
        let mut tree = KdTree::with_capacity(dim, 32);
        for (i, p) in points.iter().enumerate() {
            tree.add(p.as_ref().to_vec(), i).expect("finite coordinates");
        }
        PointIndex { tree, len: points.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The `k` nearest points as `(distance, index)`, closest first.
    pub fn nearest(&self, q: &[f64], k: usize) -> Vec<(f64, usize)> {
        self.tree
            .nearest(q, k.min(self.len), &squared_euclidean)
            .map(|v| v.into_iter().map(|(d2, &i)| (d2.sqrt(), i)).collect())
            .unwrap_or_default()
    }

    pub fn nearest_one(&self, q: &[f64]) -> Option<(f64, usize)> {
        self.nearest(q, 1).into_iter().next()
    }

    /// All points within Euclidean distance `r` of `q`.
    pub fn within(&self, q: &[f64], r: f64) -> Vec<(f64, usize)> {
        self.tree
            .within(q, r * r, &squared_euclidean)
            .map(|v| v.into_iter().map(|(d2, &i)| (d2.sqrt(), i)).collect())
            .unwrap_or_default()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median distance from each point to its nearest other point.
pub fn median_nn_distance<P: AsRef<[f64]>>(points: &[P], index: &PointIndex) -> f64 {
    let d: Vec<f64> = points
        .iter()
        .filter_map(|p| index.nearest(p.as_ref(), 2).get(1).map(|x| x.0))
        .collect();
    median(d)
}

/// Connected components of the graph joining points closer than `threshold`.
/// Labels are dense, ordered by first occurrence.
pub fn single_linkage<P: AsRef<[f64]>>(points: &[P], index: &PointIndex, threshold: f64) -> Vec<usize> {
    let n = points.len();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, p) in points.iter().enumerate() {
        for (_, j) in index.within(p.as_ref(), threshold) {
            if j > i {
                uf.union(i, j);
            }
        }
    }
    dense_labels(&uf.into_labeling())
}

/// Greedy net: keeps points (in order) that are at least `delta` from every
/// point kept before them. Returns the kept indices.
pub fn greedy_net<P: AsRef<[f64]>>(points: &[P], delta: f64) -> Vec<usize> {
    let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(1);
    let mut tree: KdTree<f64, usize, Vec<f64>> = KdTree::with_capacity(dim, 32);
    let mut kept = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        let near = tree
            .nearest(p, 1, &squared_euclidean)
            .ok()
            .and_then(|v| v.first().map(|x| x.0 < delta * delta))
            .unwrap_or(false);
        if !near {
            tree.add(p.to_vec(), i).expect("finite coordinates");
            kept.push(i);
        }
    }
    kept
}

/// Greedy net with (about) `target` points: the smallest spacing, found by
/// bisection, whose net has at most `target` points.
pub fn net_of_size<P: AsRef<[f64]>>(points: &[P], target: usize) -> Vec<usize> {
    if points.len() <= target {
        return (0..points.len()).collect();
    }
    let index = PointIndex::new(points);
    let mut lo = 0.0;
    let mut hi = median_nn_distance(points, &index).max(1e-300);
    while greedy_net(points, hi).len() > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if greedy_net(points, mid).len() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    greedy_net(points, hi)
}

pub fn dense_labels(raw: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len();
            *map.entry(*r).or_insert(next)
        })
        .collect()
}

pub fn component_sizes(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

/// Eigenvalues (descending) of the covariance of the `k` nearest neighbours of `q`.
pub fn local_pca_spectrum<P: AsRef<[f64]>>(points: &[P], index: &PointIndex, q: &[f64], k: usize) -> Vec<f64> {
    let nn = index.nearest(q, k + 1);
    let dim = q.len();
    let m = nn.len();
    if m < 2 {
        return vec![0.0; dim];
    }
    let mut mean = vec![0.0; dim];
    for (_, i) in &nn {
        for (a, x) in mean.iter_mut().zip(points[*i].as_ref()) {
            *a += x / m as f64;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for (_, i) in &nn {
        let p = points[*i].as_ref();
        for a in 0..dim {
            for b in 0..dim {
                cov[(a, b)] += (p[a] - mean[a]) * (p[b] - mean[b]);
            }
        }
    }
    let eig = SymmetricEigen::new(cov / m as f64);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0)).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

/// Local PCA rank: number of eigenvalues above `rel` times the largest.
pub fn local_pca_rank<P: AsRef<[f64]>>(points: &[P], index: &PointIndex, q: &[f64], k: usize, rel: f64) -> usize {
    let ev = local_pca_spectrum(points, index, q, k);
    let top = ev.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    ev.iter().filter(|&&x| x > rel * top).count()
}

/// Default neighbour count and eigenvalue threshold for rank estimates.
pub const PCA_NEIGHBOURS: usize = 12;
pub const PCA_REL_THRESHOLD: f64 = 0.05;

/// Most common local PCA rank over (a deterministic subsample of) the cloud.
pub fn modal_pca_rank<P: AsRef<[f64]>>(points: &[P], index: &PointIndex, max_queries: usize) -> (usize, Vec<usize>) {
    let stride = (points.len() / max_queries.max(1)).max(1);
    let ranks: Vec<usize> = points
        .iter()
        .step_by(stride)
        .map(|p| local_pca_rank(points, index, p.as_ref(), PCA_NEIGHBOURS, PCA_REL_THRESHOLD))
        .collect();
    let mut counts = std::collections::BTreeMap::new();
    for &r in &ranks {
        *counts.entry(r).or_insert(0usize) += 1;
    }
    let modal = counts.iter().max_by_key(|(_, &c)| c).map(|(&r, _)| r).unwrap_or(0);
    (modal, ranks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_two_segments() {
        let mut pts = Vec::new();
        for i in 0..50 {
            pts.push(vec![i as f64 * 0.02, 0.0]);
            pts.push(vec![i as f64 * 0.02, 1.0]);
        }
        let idx = PointIndex::new(&pts);
        let md = median_nn_distance(&pts, &idx);
        assert!((md - 0.02).abs() < 1e-12);
        let labels = single_linkage(&pts, &idx, 5.0 * md);
        assert_eq!(component_sizes(&labels), vec![50, 50]);
    }

    #[test]
    fn net_is_separated_and_covering() {
        let pts: Vec<Vec<f64>> = (0..1000).map(|i| vec![((i * 7919) % 1000) as f64 * 1e-3]).collect();
        let kept = greedy_net(&pts, 0.01);
        for (a, &i) in kept.iter().enumerate() {
            for &j in &kept[a + 1..] {
                assert!((pts[i][0] - pts[j][0]).abs() >= 0.01);
            }
        }
        assert!(net_of_size(&pts, 100).len() <= 100);
        assert!(net_of_size(&pts, 100).len() >= 50);
    }

    #[test]
    fn pca_rank_of_line_in_plane() {
        let pts: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 * 0.1, 2.0 * i as f64 * 0.1, 0.0]).collect();
        let idx = PointIndex::new(&pts);
        assert_eq!(local_pca_rank(&pts, &idx, &pts[20], 12, 0.05), 1);
    }
}
