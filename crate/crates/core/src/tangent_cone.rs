//! Tangent cones by rescaling, horn neighborhoods, and separating subcones.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};
use crate::inner_metric::{build_graph_points, graph_with_radius};
use crate::linalg;
use crate::measure::{self, classify_density, DensityEstimate, DEFAULT_BETA_THRESHOLD, DEFAULT_THETA_THRESHOLD};
use crate::separating::{verdict_of, SeparationReport, Verdict};
use crate::spatial::{self, PointIndex};
use crate::variety::{
    nearest_point, sample_ball, sample_projected, sample_sheets, substream, EquationSystem, GermPoint, SampleCloud,
    SamplingLaw, TubeOptions, VarietySpec, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// Coverage samples are drawn this many times over before thinning to a net.
const NET_OVERSAMPLE: usize = 8;
/// Points whose normal-direction gradient is below this fraction of the
/// sample maximum are treated as lying near `Sing(T0X)` when clustering.
pub const SING_CUTOFF: f64 = 0.3;
/// Subcone tube radius, in median spacings of the cone link.
pub const SUBCONE_TUBE: f64 = 3.0;
/// Edge length of the graph on the cone link, in median spacings.
pub const SUBCONE_GRAPH_MULTIPLIER: f64 = 2.5;
/// Components smaller than this fraction of the kept points are ignored.
pub const MIN_COMPONENT_FRACTION: f64 = 0.05;
/// Relative perturbation applied to `c` to probe genericity.
pub const C_PERTURBATION: f64 = 0.1;
/// Half-width of the coarea band around `{psi = 0}`, as a fraction of the horn width.
pub const HORN_BAND_FRACTION: f64 = 0.2;
/// Edge length of the graphs compared by [`metric_cone_distortion`].
pub const DISTORTION_GRAPH_MULTIPLIER: f64 = 5.0;
/// Matching cost allowed, in median spacings.
pub const MATCH_MULTIPLIER: f64 = 5.0;

/// Unit vectors of a sample of a cone.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereTangentLink {
    pub vectors: Vec<Vec<f64>>,
}

impl SphereTangentLink {
    pub fn from_cloud(cloud: &SampleCloud) -> Result<Self> {
        let vectors = cloud
            .points
            .iter()
            .map(|p| {
                let r = linalg::norm(&p.coords);
                if r == 0.0 {
                    Err(GermError::NearSingularPoint { radius: 0.0 })
                } else {
                    Ok(p.coords.iter().map(|x| x / r).collect())
                }
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(SphereTangentLink { vectors })
    }
}

#[derive(Debug, Clone)]
pub struct TangentConeSample {
    pub t_grid: Vec<f64>,
    /// `(X ∩ S(t)) / t` for every `t`, thinned to nets.
    pub rescaled_clouds: Vec<SampleCloud>,
    /// Net sample of the link of the candidate cone (initial forms).
    pub limit_cloud: SampleCloud,
    pub cone_spec: VarietySpec,
    /// `f(t)`: Hausdorff distance between `X` and `T0X` on the sphere of radius `t`.
    pub f_values: Vec<f64>,
    /// `f(t) ≈ a t^alpha`; `NaN` when every `f` vanishes (a straight cone).
    pub alpha: f64,
    pub a: f64,
    pub r2: f64,
    /// Horn constant `2 max f(t) / t^alpha`.
    pub c: f64,
    /// Cluster label of every limit point kept away from `Sing(T0X)`.
    pub cluster_labels: Vec<Option<usize>>,
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentConeSummary {
    pub t_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub alpha: f64,
    pub a: f64,
    pub r2: f64,
    pub c: f64,
    pub n_clusters: usize,
    pub cluster_sizes: Vec<usize>,
}

impl TangentConeSample {
    pub fn n_clusters(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn summary(&self) -> TangentConeSummary {
        TangentConeSummary {
            t_grid: self.t_grid.clone(),
            f_values: self.f_values.clone(),
            alpha: self.alpha,
            a: self.a,
            r2: self.r2,
            c: self.c,
            n_clusters: self.n_clusters(),
            cluster_sizes: self.cluster_sizes.clone(),
        }
    }

    /// Limit points of one cluster.
    pub fn cluster(&self, label: usize) -> Vec<GermPoint> {
        self.limit_cloud
            .points
            .iter()
            .zip(&self.cluster_labels)
            .filter(|(_, l)| **l == Some(label))
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// Net sample of `sys ∩ S(r)` with about `n` points.
pub fn link_net<S: EquationSystem + ?Sized>(sys: &S, r: f64, n: usize, seed: u64, law: SamplingLaw, dim: usize) -> Result<SampleCloud> {
    let raw = sample_projected(sys, r, n * NET_OVERSAMPLE, seed)?;
    let keep = spatial::net_of_size(&raw, n);
    let coords = keep.into_iter().map(|i| raw[i].coords.clone()).collect();
    Ok(SampleCloud::from_coords(coords, dim, law))
}

fn distance_to<S: EquationSystem + ?Sized>(sys: &S, p: &[f64]) -> Option<f64> {
    nearest_point(sys, p, DEFAULT_TOL, DEFAULT_MAX_ITER).ok().map(|(q, _)| linalg::dist(p, &q))
}

fn one_sided<S: EquationSystem + ?Sized + Sync>(sys: &S, cloud: &SampleCloud) -> f64 {
    cloud
        .points
        .par_iter()
        .filter_map(|p| distance_to(sys, &p.coords))
        .reduce(|| 0.0, f64::max)
}

/// Samples `X/t ∩ S(1)` along `t_grid`, measures the Hausdorff distance to
/// the cone of initial forms, fits `f(t) ≈ a t^alpha` and clusters the cone
/// link away from its singular set.
pub fn tangent_cone_sample(spec: &VarietySpec, x0: &[f64], t_grid: &[f64], n: usize, seed: u64) -> Result<TangentConeSample> {
    measure::validate_grid(t_grid, 1.5)?;
    if t_grid.len() < 4 {
        return Err(GermError::input("the exponent fit needs at least 4 radii"));
    }
    if n < 10 {
        return Err(GermError::input("sample size must be at least 10"));
    }
    let base = if x0.iter().any(|&x| x != 0.0) { spec.rescaled(x0, 1.0)? } else { spec.clone() };
    let cone = base.tangent_cone();
    let dim = base.real_dimension();
    let limit_cloud = link_net(&cone, 1.0, n, seed, SamplingLaw::SphereSlice, dim - 1)?;

    let per_t: Vec<(SampleCloud, f64)> = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let local = base.rescaled(&vec![0.0; base.ambient_real_dim()], t)?;
            let cloud = link_net(&local, 1.0, n, seed.wrapping_add(1 + i as u64), SamplingLaw::SphereSlice, dim - 1)?;
            let h = one_sided(&cone, &cloud).max(one_sided(&local, &limit_cloud));
            Ok((cloud, t * h))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rescaled_clouds, f_values): (Vec<SampleCloud>, Vec<f64>) = per_t.into_iter().unzip();

    let fit: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(&f_values)
        .filter(|(t, f)| **f > 1e-10 * **t)
        .map(|(t, f)| (t.ln(), f.ln()))
        .collect();
    let (alpha, a, r2, c) = if fit.len() < 4 {
        (f64::NAN, 0.0, 0.0, 0.0)
    } else {
        let last = f_values[f_values.len() - 1];
        if last >= f_values[0] {
            return Err(GermError::NoConvergence { iterations: t_grid.len(), residual: last });
        }
        let (x, y): (Vec<f64>, Vec<f64>) = fit.into_iter().unzip();
        let (ln_a, alpha, r2) = linalg::linear_fit(&x, &y);
        let c = 2.0 * t_grid.iter().zip(&f_values).map(|(t, f)| f / t.powf(alpha)).fold(0.0, f64::max);
        (alpha, ln_a.exp(), r2, c)
    };

    let (cluster_labels, cluster_sizes) = cone_clusters(&cone, &limit_cloud);
    Ok(TangentConeSample {
        t_grid: t_grid.to_vec(),
        rescaled_clouds,
        limit_cloud,
        cone_spec: cone,
        f_values,
        alpha,
        a,
        r2,
        c,
        cluster_labels,
        cluster_sizes,
    })
}

/// Strength of the normal space at `p` (the `codim`-th singular value of
/// the Jacobian) and the flattened projector onto it.
fn normal_data(cone: &VarietySpec, p: &[f64]) -> (f64, Vec<f64>) {
    let (_, j) = cone.evaluate(p);
    let n = p.len();
    let codim = n - cone.real_dimension();
    let (s, v) = linalg::full_right_svd(&j);
    if codim == 0 || codim > s.len() {
        return (0.0, vec![0.0; n * n]);
    }
    let b = v.columns(0, codim);
    let proj = &b * b.transpose();
    (s[codim - 1], proj.as_slice().to_vec())
}

/// Clusters of the cone link after dropping points close to the singular
/// set of the cone (small normal gradient). Points are compared by position
/// and normal space together, so sheets through a common stratum split.
fn cone_clusters(cone: &VarietySpec, cloud: &SampleCloud) -> (Vec<Option<usize>>, Vec<usize>) {
    let data: Vec<(f64, Vec<f64>)> = cloud.points.iter().map(|p| normal_data(cone, &p.coords)).collect();
    let max = data.iter().map(|d| d.0).fold(0.0, f64::max);
    let mut keep: Vec<bool> = data.iter().map(|d| max > 0.0 && d.0 >= SING_CUTOFF * max).collect();
    if keep.iter().filter(|&&k| k).count() < cloud.len() / 10 {
        keep = vec![true; cloud.len()];
    }
    let features: Vec<Vec<f64>> = cloud
        .points
        .iter()
        .zip(&data)
        .map(|(p, d)| p.coords.iter().chain(&d.1).cloned().collect())
        .collect();
    let index = PointIndex::new(&features);
    let spacing = spatial::median_nn_distance(&features, &index);
    let g = graph_with_radius(&features, &index, SUBCONE_GRAPH_MULTIPLIER * spacing, spacing, |i| keep[i]);
    significant_components(&g.labels, &keep)
}

/// Relabels components of the kept nodes, largest first, dropping those
/// below [`MIN_COMPONENT_FRACTION`].
fn significant_components(labels: &[usize], keep: &[bool]) -> (Vec<Option<usize>>, Vec<usize>) {
    let kept = keep.iter().filter(|&&k| k).count();
    let mut counts = std::collections::BTreeMap::new();
    for (l, &k) in labels.iter().zip(keep) {
        if k {
            *counts.entry(*l).or_insert(0usize) += 1;
        }
    }
    let mut big: Vec<(usize, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c as f64 >= MIN_COMPONENT_FRACTION * kept as f64)
        .collect();
    big.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let rank: std::collections::HashMap<usize, usize> = big.iter().enumerate().map(|(r, &(l, _))| (l, r)).collect();
    let out = labels
        .iter()
        .zip(keep)
        .map(|(l, &k)| if k { rank.get(l).copied() } else { None })
        .collect();
    (out, big.into_iter().map(|x| x.1).collect())
}

/// One piece of the base set of a horn.
#[derive(Debug, Clone)]
pub enum HornPiece {
    /// A linear subspace, given by an orthonormal basis (columns).
    Linear(DMatrix<f64>),
    /// A sampled set; with `conical` the samples are a link and the piece is
    /// the cone over them.
    Sampled { points: Vec<Vec<f64>>, index: PointIndexed, spacing: f64, conical: bool },
}

/// Point index kept alongside its points.
#[derive(Clone)]
pub struct PointIndexed(std::sync::Arc<PointIndex>);

impl std::fmt::Debug for PointIndexed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PointIndex({} points)", self.0.len())
    }
}

impl HornPiece {
    pub fn sampled(points: Vec<Vec<f64>>, conical: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(GermError::input("horn base sample is empty"));
        }
        let index = PointIndex::new(&points);
        let spacing = if points.len() > 1 { spatial::median_nn_distance(&points, &index) } else { 0.0 };
        Ok(HornPiece::Sampled { points, index: PointIndexed(std::sync::Arc::new(index)), spacing, conical })
    }

    /// Linear span of a link sample when the sample spans a subspace of
    /// dimension `dim`, a sampled cone otherwise.
    pub fn from_link(points: &[Vec<f64>], dim: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(GermError::input("horn base sample is empty"));
        }
        let m = DMatrix::from_fn(points.len(), points[0].len(), |i, j| points[i][j]);
        let (s, v) = linalg::full_right_svd(&m);
        let rank = s.iter().filter(|&&x| x > 1e-6 * s[0]).count();
        if rank == dim {
            Ok(HornPiece::Linear(v.columns(0, dim).into_owned()))
        } else {
            HornPiece::sampled(points.to_vec(), true)
        }
    }

    /// Distance from `p` to the piece, and the unit direction away from it.
    pub fn distance_grad(&self, p: &[f64]) -> (f64, Vec<f64>) {
        match self {
            HornPiece::Linear(b) => {
                let x = DVector::from_column_slice(p);
                let r = &x - b * (b.transpose() * &x);
                let d = r.norm();
                let u = if d > 0.0 { (r / d).as_slice().to_vec() } else { vec![0.0; p.len()] };
                (d, u)
            }
            HornPiece::Sampled { points, index, spacing, conical } => {
                let scale = if *conical { linalg::norm(p) } else { 1.0 };
                if scale == 0.0 {
                    return (0.0, vec![0.0; p.len()]);
                }
                let q: Vec<f64> = p.iter().map(|x| x / scale).collect();
                let (d, i) = index.0.nearest_one(&q).unwrap();
                let w: Vec<f64> = points[i].iter().map(|x| x * scale).collect();
                let dd = linalg::dist(p, &w);
                let u = if dd > 0.0 { p.iter().zip(&w).map(|(a, b)| (a - b) / dd).collect() } else { vec![0.0; p.len()] };
                (scale * (d - 0.5 * spacing).max(0.0), u)
            }
        }
    }

    pub fn distance(&self, p: &[f64]) -> f64 {
        self.distance_grad(p).0
    }
}

/// `U_W^{c,alpha} = { x : d(x, W) < c |x|^alpha }`, with `W` a union of pieces.
#[derive(Debug, Clone)]
pub struct HornNeighborhood {
    pub base: Vec<HornPiece>,
    pub c: f64,
    pub alpha: f64,
}

impl HornNeighborhood {
    pub fn new(base: Vec<HornPiece>, c: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(GermError::HornInvalid { alpha });
        }
        if !(c > 0.0) {
            return Err(GermError::input("horn constant must be positive"));
        }
        if base.is_empty() {
            return Err(GermError::input("horn base is empty"));
        }
        Ok(HornNeighborhood { base, c, alpha })
    }

    pub fn distance_grad(&self, p: &[f64]) -> (f64, Vec<f64>) {
        self.base
            .iter()
            .map(|piece| piece.distance_grad(p))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap()
    }

    pub fn distance(&self, p: &[f64]) -> f64 {
        self.distance_grad(p).0
    }

    pub fn width(&self, p: &[f64]) -> f64 {
        self.c * linalg::norm(p).powf(self.alpha)
    }
}

pub fn horn_membership(p: &[f64], horn: &HornNeighborhood) -> bool {
    horn.distance(p) < horn.width(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubconeReport {
    pub components: usize,
    pub component_sizes: Vec<usize>,
    pub tube_radius: f64,
    pub deleted: usize,
    pub cone_dim: usize,
    pub subcone_dim: usize,
    pub codim_ok: bool,
    /// Component of every cone point outside the tube.
    #[serde(skip)]
    pub labels: Vec<Option<usize>>,
}

/// Deletes a tube around `y` from the cone link and counts what is left.
pub fn subcone_separation(cone_cloud: &SampleCloud, y: &SampleCloud, codim_check: usize) -> Result<SubconeReport> {
    if cone_cloud.len() < 2 || y.is_empty() {
        return Err(GermError::input("cone and subcone samples must be nonempty"));
    }
    let index = cone_cloud.index();
    let spacing = spatial::median_nn_distance(&cone_cloud.points, &index);
    let tube = SUBCONE_TUBE * spacing;
    if let Some(p) = y.points.iter().find(|p| index.nearest_one(&p.coords).unwrap().0 > tube) {
        return Err(GermError::input(format!(
            "subcone point at distance {:.3e} from the cone sample",
            index.nearest_one(&p.coords).unwrap().0
        )));
    }
    let yi = y.index();
    let keep: Vec<bool> = cone_cloud.points.iter().map(|p| yi.nearest_one(&p.coords).unwrap().0 > tube).collect();
    let g = graph_with_radius(&cone_cloud.points, &index, SUBCONE_GRAPH_MULTIPLIER * spacing, spacing, |i| keep[i]);
    let (labels, sizes) = significant_components(&g.labels, &keep);
    let (cone_dim, _) = spatial::modal_pca_rank(&cone_cloud.points, &index, 200);
    let subcone_dim = if y.len() > spatial::PCA_NEIGHBOURS { spatial::modal_pca_rank(&y.points, &yi, 200).0 } else { 0 };
    Ok(SubconeReport {
        components: sizes.len(),
        component_sizes: sizes,
        tube_radius: tube,
        deleted: keep.iter().filter(|&&k| !k).count(),
        cone_dim,
        subcone_dim,
        codim_ok: cone_dim >= subcone_dim + codim_check,
        labels,
    })
}

/// Budgets of [`separating_subcone_to_separating_set`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferParams {
    pub link_n: usize,
    pub n_per_eps: usize,
    pub eps_grid: Vec<f64>,
    pub beta_threshold: f64,
    pub theta_threshold: f64,
    pub seed: u64,
}

impl Default for TransferParams {
    fn default() -> Self {
        TransferParams {
            link_n: 4000,
            n_per_eps: 200_000,
            eps_grid: measure::geometric_grid(1e-1, 10f64.powf(-2.5), 7),
            beta_threshold: DEFAULT_BETA_THRESHOLD,
            theta_threshold: DEFAULT_THETA_THRESHOLD,
            seed: 1,
        }
    }
}

/// Horn-based construction: `A`, `B` are the pieces of `T0X` off the tube
/// around `Y`, `Z` is the intersection of their closed horns and the
/// candidate separating set is the frontier of `X ∩ Z`, i.e. the level set
/// `max(d(x, A), d(x, B)) = c |x|^alpha` on `X`.
pub fn separating_subcone_to_separating_set(
    spec: &VarietySpec,
    y: &SampleCloud,
    c: f64,
    alpha: f64,
    params: &TransferParams,
) -> Result<SeparationReport> {
    if !(alpha > 1.0) {
        return Err(GermError::HornInvalid { alpha });
    }
    if !(c > 0.0) {
        return Err(GermError::input("horn constant must be positive"));
    }
    measure::validate_grid(&params.eps_grid, 1.5)?;
    let cone = spec.tangent_cone();
    let dim = spec.real_dimension();
    let link = link_net(&cone, 1.0, params.link_n, params.seed, SamplingLaw::SphereSlice, dim - 1)
        .map_err(|e| e.in_stage("cone link"))?;
    let sub = subcone_separation(&link, y, 2).map_err(|e| e.in_stage("subcone_separation"))?;
    let mut notes = vec![format!("c = {:.4e}, alpha = {:.4}", c, alpha)];
    if !sub.codim_ok {
        notes.push(format!("subcone dimension {} is not of codimension 2 in {}", sub.subcone_dim, sub.cone_dim));
    }
    if sub.components < 2 {
        notes.push(format!("subcone leaves {} component(s)", sub.components));
        return Ok(SeparationReport {
            thin_estimate: None,
            fat_estimates: None,
            components_found: sub.components,
            branches: sub.components,
            verdict: Verdict::NotFoundByThisConstruction,
            xi: 0.0,
            band: HORN_BAND_FRACTION,
            delta: f64::NAN,
            conflict_points: 0,
            notes,
        });
    }
    let piece = |label: usize| -> Result<HornPiece> {
        let pts: Vec<Vec<f64>> = link
            .points
            .iter()
            .zip(&sub.labels)
            .filter(|(_, l)| **l == Some(label))
            .map(|(p, _)| p.coords.clone())
            .collect();
        HornPiece::from_link(&pts, dim)
    };
    let a_pieces = vec![piece(0)?];
    let b_pieces = (1..sub.components).map(piece).collect::<Result<Vec<_>>>()?;

    let scales = [1.0, 1.0 - C_PERTURBATION, 1.0 + C_PERTURBATION];
    let grid = &params.eps_grid;
    let mut tables = vec![(Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new()); scales.len()];
    let mut uncovered = 0.0f64;
    let mut band_points = 0;
    for (gi, &e) in grid.iter().enumerate() {
        let sheets = sample_sheets(spec, e, params.n_per_eps, params.seed.wrapping_add(1 + gi as u64), None)
            .map_err(|err| err.in_stage("sheet sample"))?;
        let frames = sheets.cloud.frames.as_ref().expect("sheet samples carry frames");
        let geo: Vec<((f64, Vec<f64>), (f64, Vec<f64>))> = sheets
            .cloud
            .points
            .par_iter()
            .map(|p| (min_piece(&a_pieces, &p.coords), min_piece(&b_pieces, &p.coords)))
            .collect();
        for (si, s) in scales.iter().enumerate() {
            let cc = c * s * e.powf(alpha - 1.0);
            let width = |q: &[f64]| cc * linalg::norm(q).powf(alpha);
            let thin_f = |i: usize, p: &GermPoint| -> f64 {
                let ((da, ga), (db, gb)) = &geo[i];
                let q = &p.coords;
                let w = width(q);
                let (dmax, gmax) = if da >= db { (*da, ga) } else { (*db, gb) };
                let h = HORN_BAND_FRACTION * w;
                if h == 0.0 || (dmax - w).abs() > 3.0 * h {
                    return 0.0;
                }
                let r = linalg::norm(q);
                let grad: Vec<f64> = gmax.iter().zip(q).map(|(g, x)| g - alpha * cc * r.powf(alpha - 2.0) * x).collect();
                let gn = (frames[i].transpose() * DVector::from_vec(grad)).norm();
                if (dmax - w).abs() <= h * gn {
                    1.0 / (2.0 * h)
                } else {
                    0.0
                }
            };
            let (tm, ts) = sheets.integrate(thin_f, dim - 1);
            let (am, as_) = sheets.measure_where(|i, p| geo[i].0 .0 <= width(&p.coords) && geo[i].1 .0 > width(&p.coords));
            let (bm, bs) = sheets.measure_where(|i, p| geo[i].1 .0 <= width(&p.coords) && geo[i].0 .0 > width(&p.coords));
            if si == 0 {
                let (um, _) = sheets.measure_where(|i, p| geo[i].0 .0.min(geo[i].1 .0) > width(&p.coords));
                let (all, _) = sheets.measure();
                if all > 0.0 {
                    uncovered = uncovered.max(um / all);
                }
                if gi + 1 == grid.len() {
                    band_points = (0..sheets.cloud.len()).filter(|&i| thin_f(i, &sheets.cloud.points[i]) > 0.0).count();
                }
            }
            let t = &mut tables[si];
            t.0.push(tm);
            t.1.push(ts);
            t.2.push(am);
            t.3.push(as_);
            t.4.push(bm);
            t.5.push(bs);
        }
    }
    let classify = |mut est: DensityEstimate| {
        est.classification = classify_density(&est, params.beta_threshold, params.theta_threshold);
        est
    };
    let mut reports = Vec::new();
    for t in &tables {
        let thin = classify(DensityEstimate::from_measures(dim - 1, grid, &t.0, &t.1)?);
        let fa = classify(DensityEstimate::from_measures(dim, grid, &t.2, &t.3)?);
        let fb = classify(DensityEstimate::from_measures(dim, grid, &t.4, &t.5)?);
        let v = verdict_of(&thin, &fa, &fb, sub.components);
        reports.push((thin, fa, fb, v));
    }
    if reports.iter().any(|r| r.3 != reports[0].3) {
        notes.push(format!(
            "verdict changes under c -> c(1 ± {}): {:?}",
            C_PERTURBATION,
            reports.iter().map(|r| r.3).collect::<Vec<_>>()
        ));
    }
    if uncovered > 0.0 {
        notes.push(format!("fraction of X outside both horns: {:.3e}", uncovered));
    }
    let (thin, fa, fb, verdict) = reports.swap_remove(0);
    Ok(SeparationReport {
        xi: fa.theta_lower.min(fb.theta_lower),
        thin_estimate: Some(thin),
        fat_estimates: Some((fa, fb)),
        components_found: sub.components,
        branches: sub.components,
        verdict,
        band: HORN_BAND_FRACTION,
        delta: f64::NAN,
        conflict_points: band_points,
        notes,
    })
}

fn min_piece(pieces: &[HornPiece], p: &[f64]) -> (f64, Vec<f64>) {
    pieces
        .iter()
        .map(|piece| piece.distance_grad(p))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
}

/// Weighted ball sample of `X/t ∩ B(0, 1)`.
pub fn rescaled_ball_cloud(spec: &VarietySpec, t: f64, n: usize, seed: u64) -> Result<SampleCloud> {
    let local = spec.rescaled(&vec![0.0; spec.ambient_real_dim()], t)?;
    sample_ball(&local, 1.0, n, seed, &TubeOptions::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Largest inner-distance mismatch over the sampled pairs.
    pub distortion: f64,
    /// Same for outer distances, for comparison.
    pub outer_distortion: f64,
    pub match_cost: f64,
    pub pairs: usize,
}

/// Compares graph distances of two rescaled clouds of equal size under the
/// nearest-neighbour matching of the first onto the second.
pub fn metric_cone_distortion(a: &SampleCloud, b: &SampleCloud, n_pairs: usize, seed: u64) -> Result<DistortionReport> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(GermError::input(format!("clouds must have equal size ≥ 2 (got {} and {})", a.len(), b.len())));
    }
    let ib = b.index();
    let ia = a.index();
    let spacing = spatial::median_nn_distance(&a.points, &ia).max(spatial::median_nn_distance(&b.points, &ib));
    let sigma: Vec<(f64, usize)> = a.points.iter().map(|p| ib.nearest_one(&p.coords).unwrap()).collect();
    let cost = sigma.iter().map(|x| x.0).fold(0.0, f64::max);
    let threshold = MATCH_MULTIPLIER * spacing;
    if cost > threshold {
        return Err(GermError::MatchFailed { cost, threshold });
    }
    let ga = build_graph_points(&a.points, DISTORTION_GRAPH_MULTIPLIER)?;
    let gb = build_graph_points(&b.points, DISTORTION_GRAPH_MULTIPLIER)?;
    let n = a.len();
    let n_sources = n_pairs.clamp(1, 32).min(n);
    let mut rng = substream(seed, 0);
    let sources: Vec<usize> = sample_indices(&mut rng, n, n_sources).into_vec();
    let per_source = (n_pairs / n_sources).max(1);
    let results: Vec<(f64, f64, usize)> = sources
        .par_iter()
        .enumerate()
        .map(|(k, &s)| {
            let da = ga.distances_from(s);
            let db = gb.distances_from(sigma[s].1);
            let mut rng = substream(seed, 1 + k as u64);
            let targets = sample_indices(&mut rng, n, per_source.min(n)).into_vec();
            let mut inner = 0.0f64;
            let mut outer = 0.0f64;
            let mut used = 0;
            for t in targets {
                let (x, y) = (da[t], db[sigma[t].1]);
                if !x.is_finite() || !y.is_finite() {
                    continue;
                }
                inner = inner.max((x - y).abs());
                let oa = linalg::dist(&a.points[s].coords, &a.points[t].coords);
                let ob = linalg::dist(&b.points[sigma[s].1].coords, &b.points[sigma[t].1].coords);
                outer = outer.max((oa - ob).abs());
                used += 1;
            }
            (inner, outer, used)
        })
        .collect();
    Ok(DistortionReport {
        distortion: results.iter().map(|r| r.0).fold(0.0, f64::max),
        outer_distortion: results.iter().map(|r| r.1).fold(0.0, f64::max),
        match_cost: cost,
        pairs: results.iter().map(|r| r.2).sum(),
    })
}

/// Symmetric Hausdorff distance between two point samples.
pub fn sampled_hausdorff(a: &SampleCloud, b: &SampleCloud) -> f64 {
    let ia = a.index();
    let ib = b.index();
    let ab = a.points.iter().map(|p| ib.nearest_one(&p.coords).unwrap().0).fold(0.0, f64::max);
    let ba = b.points.iter().map(|p| ia.nearest_one(&p.coords).unwrap().0).fold(0.0, f64::max);
    ab.max(ba)
}

/// Sample of the circle `|z3| = 1` in the subcone `{z1 = z2 = 0}` of `C^3`.
pub fn z3_axis_circle(n: usize) -> SampleCloud {
    let coords = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            vec![0.0, 0.0, 0.0, 0.0, a.cos(), a.sin()]
        })
        .collect();
    SampleCloud::from_coords(coords, 1, SamplingLaw::Parametric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DensityClass;

    fn x_axis() -> HornPiece {
        HornPiece::sampled((0..=400).map(|i| vec![-2.0 + i as f64 * 0.01, 0.0]).collect(), false).unwrap()
    }

    #[test]
    fn horn_examples() {
        let horn = HornNeighborhood::new(vec![x_axis()], 1.0, 2.0).unwrap();
        assert!(horn_membership(&[0.5, 0.0], &horn));
        assert!(horn_membership(&[1.0, 0.5], &horn));
        assert!(horn_membership(&[0.5, 0.4], &horn));
        assert!(!horn_membership(&[0.2, 0.1], &horn));
        assert!(matches!(HornNeighborhood::new(vec![x_axis()], 1.0, 1.0), Err(GermError::HornInvalid { .. })));
        let lin = HornPiece::Linear(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        assert!((lin.distance(&[3.0, -0.25]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sphere_link_normalizes() {
        let c = SampleCloud::from_coords(vec![vec![3.0, 4.0], vec![0.0, -2.0]], 0, SamplingLaw::Derived);
        let s = SphereTangentLink::from_cloud(&c).unwrap();
        for v in &s.vectors {
            assert!((linalg::norm(v) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn straight_cone_is_its_own_tangent_cone() {
        let plane = VarietySpec::real_plane_r4();
        let grid = measure::geometric_grid(1e-1, 1e-3, 5);
        let s = tangent_cone_sample(&plane, &[0.0; 4], &grid, 300, 3).unwrap();
        assert!(s.f_values.iter().all(|&f| f < 1e-9));
        assert!(s.alpha.is_nan());
        let sp = {
            let idx = s.limit_cloud.index();
            spatial::median_nn_distance(&s.limit_cloud.points, &idx)
        };
        for c in &s.rescaled_clouds {
            assert!(sampled_hausdorff(c, &s.limit_cloud) <= 2.0 * sp + 1e-12);
        }
    }

    #[test]
    fn bs_tangent_cone_is_yz_plane() {
        let bs = VarietySpec::briancon_speder(1.0);
        let grid = measure::geometric_grid(1e-1, 1e-3, 5);
        let s = tangent_cone_sample(&bs, &[0.0; 6], &grid, 300, 5).unwrap();
        for p in &s.limit_cloud.points {
            assert!(p.coords[0].hypot(p.coords[1]) < 1e-2);
        }
        assert!(s.alpha > 1.0, "{}", s.alpha);
    }

    #[test]
    fn a2_cone_has_two_hyperplanes() {
        let x = VarietySpec::brieskorn_z(2, 2, 3);
        let grid = measure::geometric_grid(1e-1, 1e-3, 5);
        let s = tangent_cone_sample(&x, &[0.0; 6], &grid, 1500, 7).unwrap();
        assert_eq!(s.n_clusters(), 2, "{:?}", s.cluster_sizes);
        assert!(s.alpha > 1.0, "{}", s.alpha);
    }

    #[test]
    fn subcone_examples() {
        let cone = VarietySpec::brieskorn_z(2, 2, 3).tangent_cone();
        let link = link_net(&cone, 1.0, 3000, 11, SamplingLaw::SphereSlice, 3).unwrap();
        let r = subcone_separation(&link, &z3_axis_circle(200), 2).unwrap();
        assert_eq!(r.components, 2, "{:?}", r);
        assert!(r.codim_ok, "{:?}", r);

        let plane = VarietySpec::real_plane_r4();
        let circle = link_net(&plane, 1.0, 400, 2, SamplingLaw::SphereSlice, 1).unwrap();
        let ray = SampleCloud::from_coords(vec![circle.points[0].coords.clone()], 0, SamplingLaw::Derived);
        assert_eq!(subcone_separation(&circle, &ray, 0).unwrap().components, 1);

        let off = SampleCloud::from_coords(vec![vec![0.0, 0.0, 1.0, 0.0]], 0, SamplingLaw::Derived);
        assert!(subcone_separation(&circle, &off, 0).is_err());
    }

    #[test]
    fn transfer_rejects_flat_horns() {
        let x = VarietySpec::brieskorn_z(2, 2, 3);
        let e = separating_subcone_to_separating_set(&x, &z3_axis_circle(50), 1.0, 1.0, &TransferParams::default());
        assert!(matches!(e, Err(GermError::HornInvalid { .. })));
    }

    #[test]
    fn distortion_of_plane_is_small() {
        let plane = VarietySpec::real_plane_r4();
        let a = rescaled_ball_cloud(&plane, 1e-2, 1500, 1).unwrap();
        let b = rescaled_ball_cloud(&plane, 1e-3, 1500, 2).unwrap();
        let r = metric_cone_distortion(&a, &b, 500, 3).unwrap();
        assert!(r.distortion < 0.5, "{:?}", r);
        let _ = DensityClass::Zero;
    }
}
