//! Inner (path) metric on sampled sets via neighbourhood graphs.

use std::io::Write;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};
use crate::linalg;
use crate::measure::{self, DensityEstimate};
use crate::spatial::{self, PointIndex};
use crate::variety::{sample_ball, sample_sheets, substream, SampleCloud, TubeOptions, VarietySpec};

pub const DEFAULT_RADIUS_MULTIPLIER: f64 = 3.0;
/// No edge may be longer than this multiple of the median spacing.
pub const SHORTCUT_LIMIT: f64 = 5.0;
const ORIGIN_NEIGHBOURS: usize = 12;

/// Points joined when closer than `connectivity_radius`; edge weights are
/// Euclidean lengths.
#[derive(Debug, Clone)]
pub struct NeighborhoodGraph {
    pub graph: UnGraph<(), f64>,
    pub connectivity_radius: f64,
    pub spacing: f64,
    pub labels: Vec<usize>,
    pub n_components: usize,
}

impl NeighborhoodGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Component sizes, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut s = spatial::component_sizes(&self.labels);
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    /// Errors unless a single component holds all but a `slack` fraction of nodes.
    pub fn require_connected(&self, slack: f64) -> Result<()> {
        let sizes = self.component_sizes();
        let big = sizes.iter().filter(|&&s| s as f64 > slack * self.node_count() as f64).count();
        if big > 1 || sizes.first().copied().unwrap_or(0) as f64 <= (1.0 - slack) * self.node_count() as f64 {
            return Err(GermError::UndersampledGraph { components: self.n_components });
        }
        Ok(())
    }

    /// Shortest-path lengths from `a` to every node (`INFINITY` if unreachable).
    pub fn distances_from(&self, a: usize) -> Vec<f64> {
        let map = dijkstra(&self.graph, NodeIndex::new(a), None, |e| *e.weight());
        let mut d = vec![f64::INFINITY; self.node_count()];
        for (k, v) in map {
            d[k.index()] = v;
        }
        d
    }

    pub fn write_edge_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["source", "target", "length"]).map_err(|e| GermError::Io(e.to_string()))?;
        for e in self.graph.edge_indices() {
            let (a, b) = self.graph.edge_endpoints(e).unwrap();
            wr.write_record(&[a.index().to_string(), b.index().to_string(), format!("{:.17e}", self.graph[e])])
                .map_err(|e| GermError::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn build_graph(cloud: &SampleCloud, radius_multiplier: f64) -> Result<NeighborhoodGraph> {
    build_graph_points(&cloud.points, radius_multiplier)
}

/// Graph joining points within `radius_multiplier` times the median
/// nearest-neighbour distance.
pub fn build_graph_points<P: AsRef<[f64]>>(points: &[P], radius_multiplier: f64) -> Result<NeighborhoodGraph> {
    if points.len() < 2 {
        return Err(GermError::input("a neighbourhood graph needs at least 2 points"));
    }
    if !(radius_multiplier >= 2.0) {
        return Err(GermError::input(format!("radius multiplier must be >= 2, got {}", radius_multiplier)));
    }
    let index = PointIndex::new(points);
    let spacing = spatial::median_nn_distance(points, &index);
    let radius = radius_multiplier.min(SHORTCUT_LIMIT) * spacing;
    Ok(graph_with_radius(points, &index, radius, spacing, |_| true))
}

/// Graph on the nodes with `keep(i)`; other nodes stay isolated.
pub(crate) fn graph_with_radius<P: AsRef<[f64]>>(
    points: &[P],
    index: &PointIndex,
    radius: f64,
    spacing: f64,
    keep: impl Fn(usize) -> bool,
) -> NeighborhoodGraph {
    let n = points.len();
    let mut graph = UnGraph::<(), f64>::with_capacity(n, n * 8);
    for _ in 0..n {
        graph.add_node(());
    }
    let mut uf = petgraph::unionfind::UnionFind::<usize>::new(n);
    for (i, p) in points.iter().enumerate() {
        if !keep(i) {
            continue;
        }
        for (d, j) in index.within(p.as_ref(), radius) {
            if j > i && keep(j) {
                graph.add_edge(NodeIndex::new(i), NodeIndex::new(j), d);
                uf.union(i, j);
            }
        }
    }
    let labels = spatial::dense_labels(&uf.into_labeling());
    let n_components = labels.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    NeighborhoodGraph { graph, connectivity_radius: radius, spacing, labels, n_components }
}

/// Graph shortest-path distance between nodes `a` and `b`.
pub fn inner_distance(g: &NeighborhoodGraph, a: usize, b: usize) -> Result<f64> {
    let n = g.node_count();
    if a >= n || b >= n {
        return Err(GermError::input(format!("node index out of range ({} nodes)", n)));
    }
    if g.labels[a] != g.labels[b] {
        return Err(GermError::Unreachable { a, b });
    }
    let map = dijkstra(&g.graph, NodeIndex::new(a), Some(NodeIndex::new(b)), |e| *e.weight());
    map.get(&NodeIndex::new(b)).copied().ok_or(GermError::Unreachable { a, b })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    /// Largest inner / outer distance ratio over the sampled pairs.
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub median_ratio: f64,
    pub pair_count: usize,
    pub unreachable_pairs: usize,
    /// Bounds on outer / inner density ratios implied by `max_ratio`.
    pub kappa_lower: f64,
    pub kappa_upper: f64,
}

/// Inner / outer distance ratios over `n_pairs` random pairs of the cloud.
pub fn normal_embedding_ratio(cloud: &SampleCloud, n_pairs: usize, seed: u64) -> Result<EmbeddingReport> {
    let g = build_graph(cloud, DEFAULT_RADIUS_MULTIPLIER)?;
    let n = cloud.len();
    if n_pairs == 0 {
        return Err(GermError::input("n_pairs must be positive"));
    }
    let mut rng = substream(seed, 0);
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| loop {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                break (a, b);
            }
        })
        .collect();
    let mut ratios = Vec::with_capacity(n_pairs);
    let mut unreachable = 0;
    for &(a, b) in &pairs {
        let outer = linalg::dist(&cloud.points[a].coords, &cloud.points[b].coords);
        if outer == 0.0 {
            continue;
        }
        match inner_distance(&g, a, b) {
            Ok(d) => ratios.push(d / outer),
            Err(GermError::Unreachable { .. }) => unreachable += 1,
            Err(e) => return Err(e),
        }
    }
    if ratios.is_empty() {
        return Err(GermError::UndersampledGraph { components: g.n_components });
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_ratio = sorted[sorted.len() / 2];
    let k = cloud.intrinsic_dim.max(1) as i32;
    Ok(EmbeddingReport {
        max_ratio,
        mean_ratio,
        median_ratio,
        pair_count: ratios.len(),
        unreachable_pairs: unreachable,
        kappa_lower: 1.0,
        kappa_upper: max_ratio.max(1.0).powi(k),
    })
}

/// Measure of the inner ball of radius 1 around the origin of a rescaled
/// weighted cloud of `X ∩ B(0, 1)`: the origin is linked to its nearest
/// samples and graph distances decide membership.
pub fn inner_unit_ball_measure(cloud: &SampleCloud, radius_multiplier: f64) -> Result<f64> {
    let weights = cloud
        .weights
        .as_ref()
        .ok_or_else(|| GermError::input("inner ball measures need a weighted cloud"))?;
    if cloud.len() < ORIGIN_NEIGHBOURS + 1 {
        return Err(GermError::EmptySlice("too few points for an inner ball".into()));
    }
    let dim = cloud.ambient_dim();
    let mut pts: Vec<Vec<f64>> = cloud.points.iter().map(|p| p.coords.clone()).collect();
    pts.push(vec![0.0; dim]);
    let origin = pts.len() - 1;
    let index = PointIndex::new(&pts);
    let spacing = spatial::median_nn_distance(&pts[..origin], &index);
    let mut g = graph_with_radius(&pts, &index, radius_multiplier.min(SHORTCUT_LIMIT) * spacing, spacing, |_| true);
    for (d, j) in index.nearest(&pts[origin], ORIGIN_NEIGHBOURS + 1) {
        if j != origin {
            g.graph.add_edge(NodeIndex::new(origin), NodeIndex::new(j), d);
        }
    }
    let d = g.distances_from(origin);
    Ok((0..origin).filter(|&i| d[i] <= 1.0).map(|i| weights[i]).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub outer: DensityEstimate,
    pub inner: DensityEstimate,
    /// `kappa_lower * theta_inner <= theta_outer <= kappa_upper * theta_inner` on the grid.
    pub kappa_lower: f64,
    pub kappa_upper: f64,
    /// Radii dropped because the inner ball was empty.
    pub truncated: Vec<f64>,
}

/// Outer and inner (graph-ball) density profiles from the same samples.
pub fn inner_density_sandwich(
    spec: &VarietySpec,
    x0: &[f64],
    k: usize,
    eps_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<SandwichReport> {
    if spec.real_dimension() != k {
        return Err(GermError::DimensionMismatch { expected: spec.real_dimension(), got: k });
    }
    let at_origin = x0.iter().all(|&x| x == 0.0);
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    let mut kept = Vec::new();
    let mut truncated = Vec::new();
    for &e in eps_grid {
        let cloud = if at_origin && spec.sheet_variable().is_some() {
            sample_sheets(spec, e, n, seed, None)?.cloud
        } else {
            sample_ball(&spec.rescaled(x0, e)?, 1.0, n, seed, &TubeOptions::default())?
        };
        let scale = e.powi(k as i32);
        let out = cloud.total_weight().unwrap_or(0.0) * scale;
        let inn = inner_unit_ball_measure(&cloud, DEFAULT_RADIUS_MULTIPLIER)? * scale;
        if inn <= 0.0 {
            truncated.push(e);
            continue;
        }
        kept.push(e);
        outer.push(out);
        inner.push(inn);
    }
    if kept.len() < 2 {
        return Err(GermError::EmptySlice("inner balls empty on most of the grid".into()));
    }
    let zeros = vec![0.0; kept.len()];
    let outer_est = DensityEstimate::from_measures(k, &kept, &outer, &zeros)?;
    let inner_est = DensityEstimate::from_measures(k, &kept, &inner, &zeros)?;
    let q: Vec<f64> = outer.iter().zip(&inner).map(|(o, i)| o / i).collect();
    Ok(SandwichReport {
        outer: outer_est,
        inner: inner_est,
        kappa_lower: q.iter().cloned().fold(f64::INFINITY, f64::min),
        kappa_upper: q.iter().cloned().fold(0.0, f64::max),
        truncated,
    })
}

/// Re-exported for callers classifying sandwich profiles with custom thresholds.
pub use measure::classify_density as classify;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variety::SamplingLaw;
    use std::f64::consts::PI;

    fn circle(n: usize) -> SampleCloud {
        let coords = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        SampleCloud::from_coords(coords, 1, SamplingLaw::Parametric)
    }

    #[test]
    fn circle_graph_is_connected_and_geodesic() {
        let c = circle(1000);
        let g = build_graph(&c, 3.0).unwrap();
        assert_eq!(g.n_components, 1);
        let d = inner_distance(&g, 0, 500).unwrap();
        assert!((d - PI).abs() < 0.02 * PI, "{}", d);
    }

    #[test]
    fn parallel_segments_give_two_components() {
        let mut pts = Vec::new();
        for i in 0..100 {
            pts.push(vec![i as f64 * 0.01, 0.0]);
            pts.push(vec![i as f64 * 0.01, 0.5]);
        }
        let g = build_graph_points(&pts, 3.0).unwrap();
        assert_eq!(g.n_components, 2);
        assert!(g.require_connected(0.01).is_err());
        assert!(matches!(inner_distance(&g, 0, 1), Err(GermError::Unreachable { .. })));
    }

    #[test]
    fn straight_segment_distance_is_euclidean() {
        let pts: Vec<Vec<f64>> = (0..=200).map(|i| vec![i as f64 * 0.005, 0.0]).collect();
        let g = build_graph_points(&pts, 3.0).unwrap();
        let d = inner_distance(&g, 0, 200).unwrap();
        assert!((d - 1.0).abs() < 0.01);
    }

    #[test]
    fn bad_inputs() {
        assert!(build_graph_points(&[vec![0.0]], 3.0).is_err());
        assert!(build_graph(&circle(10), 1.5).is_err());
    }

    #[test]
    fn circle_embedding_ratio_near_half_pi() {
        let r = normal_embedding_ratio(&circle(2000), 400, 3).unwrap();
        assert!(r.max_ratio > 1.4 && r.max_ratio < PI / 2.0 * 1.03, "{:?}", r);
        assert!(r.kappa_lower <= r.kappa_upper);
    }

    #[test]
    fn edge_csv_has_header() {
        let g = build_graph(&circle(20), 3.0).unwrap();
        let mut buf = Vec::new();
        g.write_edge_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("source,target,length"));
        assert_eq!(text.lines().count(), g.edge_count() + 1);
    }
}
