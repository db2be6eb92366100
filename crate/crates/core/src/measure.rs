//! Hausdorff measure estimates on weighted clouds, density profiles of germs
//! and their zero / positive classification.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};
use crate::linalg::{self, gram_volume};
use crate::spatial::{self, PointIndex};
use crate::variety::{sample_ball, sample_sheets, sample_sphere_slice_with, SampleCloud, ScalingAction, TubeOptions, VarietySpec};

pub const DEFAULT_BETA_THRESHOLD: f64 = 0.2;
pub const DEFAULT_THETA_THRESHOLD: f64 = 0.05;
/// Relative spread allowed across the tail of a profile before a positive
/// density is trusted.
pub const TAIL_CV_LIMIT: f64 = 0.25;
const BATCHES: usize = 20;
const KNN_M: usize = 12;

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: i64) -> Result<f64> {
    if k < 0 {
        return Err(GermError::input(format!("dimension must be nonnegative, got {}", k)));
    }
    let mut v = if k % 2 == 0 { 1.0 } else { 2.0 };
    let mut j = if k % 2 == 0 { 2 } else { 3 };
    while j <= k {
        v *= 2.0 * std::f64::consts::PI / j as f64;
        j += 2;
    }
    Ok(v)
}

/// The default grid: 9 radii from `1e-1` down to `1e-3`, geometric.
pub fn default_eps_grid() -> Vec<f64> {
    geometric_grid(1e-1, 1e-3, 9)
}

pub fn geometric_grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    let step = (to / from).ln() / (n - 1) as f64;
    (0..n).map(|i| from * (step * i as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureMethod {
    JacobianMC,
    CoveringCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub k: usize,
    pub value: f64,
    pub stderr: f64,
    pub method: MeasureMethod,
}

/// Sum of independent per-acceptance contributions with the Poisson
/// standard error `sqrt(sum c_i^2)`.
pub(crate) fn poisson_sum(contrib: &[f64]) -> (f64, f64) {
    let total: f64 = contrib.iter().sum();
    let sq: f64 = contrib.iter().map(|c| c * c).sum();
    (total, sq.sqrt())
}

/// Sum and batch standard error of per-point contributions.
pub(crate) fn batch_sum(contrib: &[f64]) -> (f64, f64) {
    let total: f64 = contrib.iter().sum();
    let n = contrib.len();
    if n < 2 * BATCHES {
        let mean = total / n.max(1) as f64;
        let var = contrib.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n.max(2) - 1) as f64;
        return (total, (var * n as f64).sqrt());
    }
    let b = BATCHES as f64;
    let sums: Vec<f64> = (0..BATCHES)
        .map(|i| contrib[i * n / BATCHES..(i + 1) * n / BATCHES].iter().sum::<f64>() * b)
        .collect();
    let var = sums.iter().map(|s| (s - total) * (s - total)).sum::<f64>() / (b * (b - 1.0));
    (total, var.sqrt())
}

fn check_pca_dimension(cloud: &SampleCloud, k: usize) -> Result<()> {
    if cloud.len() <= spatial::PCA_NEIGHBOURS + 1 {
        return Ok(());
    }
    let index = cloud.index();
    let (_, ranks) = spatial::modal_pca_rank(&cloud.points, &index, 200);
    let bad = ranks.iter().filter(|&&r| r != k).count();
    if bad as f64 > 0.1 * ranks.len() as f64 {
        let mut counts = std::collections::BTreeMap::new();
        for r in ranks {
            *counts.entry(r).or_insert(0usize) += 1;
        }
        let modal = counts.iter().max_by_key(|(_, &c)| c).map(|(&r, _)| r).unwrap_or(0);
        return Err(GermError::DimensionMismatch { expected: k, got: modal });
    }
    Ok(())
}

/// `k`-dimensional Hausdorff measure of the sampled set.
///
/// Weighted clouds sum their weights; unweighted clouds use the
/// nearest-neighbour covering estimator `sum eta_k r_m^k / m`.
pub fn hausdorff_measure(cloud: &SampleCloud, k: usize) -> Result<MeasureEstimate> {
    if cloud.is_empty() {
        return Err(GermError::input("cannot measure an empty cloud"));
    }
    let n_amb = cloud.ambient_dim();
    if k > n_amb {
        return Err(GermError::DimensionMismatch { expected: n_amb, got: k });
    }
    match (&cloud.weights, &cloud.frames) {
        (Some(_), Some(_)) if cloud.intrinsic_dim != k => {
            return Err(GermError::DimensionMismatch { expected: k, got: cloud.intrinsic_dim })
        }
        (_, Some(_)) => {}
        _ => check_pca_dimension(cloud, k)?,
    }
    if let Some(w) = &cloud.weights {
        let (value, stderr) = poisson_sum(w);
        return Ok(MeasureEstimate { k, value, stderr, method: MeasureMethod::JacobianMC });
    }
    if cloud.len() <= KNN_M {
        return Err(GermError::input(format!("covering estimate needs more than {} points", KNN_M)));
    }
    let index = cloud.index();
    let eta = unit_ball_volume(k as i64)?;
    let contrib: Vec<f64> = cloud
        .points
        .par_iter()
        .map(|p| {
            let nn = index.nearest(&p.coords, KNN_M + 1);
            let r = nn.last().map(|x| x.0).unwrap_or(0.0);
            eta * r.powi(k as i32) / KNN_M as f64
        })
        .collect();
    let (value, stderr) = batch_sum(&contrib);
    Ok(MeasureEstimate { k, value, stderr, method: MeasureMethod::CoveringCount })
}

// ---------------------------------------------------------------------------
// Cone integrals

/// Quadrature nodes per orbit for cone integrals.
pub const CONE_NODES: usize = 24;

/// `(m+1)`-measure of `{t . p : p in base, t > 0} ∩ B(0, eps)` (optionally
/// after a linear map `post`), where `base` is a weighted cloud with
/// `m`-dimensional frames lying on a set met once by every orbit.
///
/// Returns `(value, stderr)`.
pub fn cone_ball_measure(
    base: &SampleCloud,
    action: &ScalingAction,
    eps: f64,
    post: Option<&DMatrix<f64>>,
) -> Result<(f64, f64)> {
    let contrib = cone_contributions(base, action, eps, post, CONE_NODES)?;
    Ok(poisson_sum(&contrib.iter().map(|c| c.iter().map(|n| n.1).sum()).collect::<Vec<f64>>()))
}

/// Per base point, the quadrature nodes `(point, weight)` of its orbit
/// segment inside the ball.
pub(crate) fn cone_contributions(
    base: &SampleCloud,
    action: &ScalingAction,
    eps: f64,
    post: Option<&DMatrix<f64>>,
    nodes: usize,
) -> Result<Vec<Vec<(Vec<f64>, f64)>>> {
    let (weights, frames) = match (&base.weights, &base.frames) {
        (Some(w), Some(f)) => (w, f),
        _ => return Err(GermError::input("cone integrals need a weighted cloud with tangent frames")),
    };
    if !(eps > 0.0) {
        return Err(GermError::input("radius must be positive"));
    }
    let m = base.intrinsic_dim;
    let k = (m + 1) as f64;
    // radius bound so that |L x| <= eps implies |x| <= reach
    let reach = match post {
        Some(l) => {
            let s = l.clone().svd(false, false).singular_values;
            let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
            eps / smin
        }
        None => eps,
    };
    Ok(base
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let t_max = action.time_to_radius(&p.coords, reach);
            if !t_max.is_finite() || weights[i] == 0.0 {
                return Vec::new();
            }
            let mut out = Vec::with_capacity(nodes);
            for j in 0..nodes {
                let u = (j as f64 + 0.5) / nodes as f64;
                let t = t_max * u.powf(1.0 / k);
                let dt_du = t_max / k * u.powf(1.0 / k - 1.0);
                let x = action.apply(&p.coords, t);
                let vel = action.velocity(&p.coords, t);
                let mut g = DMatrix::zeros(x.len(), m + 1);
                for c in 0..m {
                    let col: Vec<f64> = frames[i].column(c).iter().cloned().collect();
                    let pushed = action.push_vector(&col, t);
                    for r in 0..x.len() {
                        g[(r, c)] = pushed[r];
                    }
                }
                for r in 0..x.len() {
                    g[(r, m)] = vel[r];
                }
                let (y, jac) = match post {
                    Some(l) => {
                        let y = l * nalgebra::DVector::from_column_slice(&x);
                        (y.as_slice().to_vec(), gram_volume(&(l * &g)))
                    }
                    None => (x, gram_volume(&g)),
                };
                if linalg::norm(&y) > eps {
                    continue;
                }
                out.push((y, weights[i] * jac * dt_du / nodes as f64));
            }
            out
        })
        .collect())
}

/// Materializes the cone over `base` inside `B(0, eps)` as a weighted
/// `(m+1)`-dimensional cloud, rescaled by `1/eps`.
pub fn cone_cloud(base: &SampleCloud, action: &ScalingAction, eps: f64, post: Option<&DMatrix<f64>>, nodes: usize) -> Result<SampleCloud> {
    let contrib = cone_contributions(base, action, eps, post, nodes)?;
    let k = base.intrinsic_dim + 1;
    let scale = eps.powi(k as i32);
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for node in contrib.into_iter().flatten() {
        coords.push(node.0.iter().map(|x| x / eps).collect());
        weights.push(node.1 / scale);
    }
    let mut cloud = SampleCloud::from_coords(coords, k, crate::variety::SamplingLaw::Derived);
    cloud.weights = Some(weights);
    cloud.seed = base.seed;
    cloud.spec = base.spec.clone();
    Ok(cloud)
}

// ---------------------------------------------------------------------------
// Density profiles

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityClass {
    Zero,
    Positive,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub k: usize,
    pub eps_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub beta: f64,
    pub r2: f64,
    pub classification: DensityClass,
}

impl DensityEstimate {
    /// Builds the estimate from measured `H^k(X ∩ eps B)` values and
    /// classifies it with the default thresholds.
    pub fn from_measures(k: usize, eps_grid: &[f64], measures: &[f64], stderrs: &[f64]) -> Result<Self> {
        validate_grid(eps_grid, 0.0)?;
        let eta = unit_ball_volume(k as i64)?;
        let norm: Vec<f64> = eps_grid.iter().map(|e| eta * e.powi(k as i32)).collect();
        let ratios: Vec<f64> = measures.iter().zip(&norm).map(|(m, n)| (m / n).max(0.0)).collect();
        let errs: Vec<f64> = stderrs.iter().zip(&norm).map(|(s, n)| s / n).collect();
        Ok(Self::from_ratios(k, eps_grid, ratios, errs))
    }

    pub fn from_ratios(k: usize, eps_grid: &[f64], ratios: Vec<f64>, stderrs: Vec<f64>) -> Self {
        let positive: Vec<(f64, f64)> = eps_grid
            .iter()
            .zip(&ratios)
            .filter(|(_, r)| **r > 0.0)
            .map(|(e, r)| (e.ln(), r.ln()))
            .collect();
        let (beta, r2) = if positive.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
            let (_, b, r2) = linalg::linear_fit(&x, &y);
            (b, r2)
        } else {
            (f64::NAN, 0.0)
        };
        let tail = tail(&ratios);
        let theta_lower = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let theta_upper = tail.iter().cloned().fold(0.0, f64::max);
        let mut est = DensityEstimate {
            k,
            eps_grid: eps_grid.to_vec(),
            ratios,
            stderrs,
            theta_lower,
            theta_upper,
            beta,
            r2,
            classification: DensityClass::Inconclusive,
        };
        est.classification = classify_density(&est, DEFAULT_BETA_THRESHOLD, DEFAULT_THETA_THRESHOLD);
        est
    }

    pub fn tail_cv(&self) -> f64 {
        let t = tail(&self.ratios);
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        if mean == 0.0 {
            return f64::INFINITY;
        }
        let var = t.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t.len() as f64;
        var.sqrt() / mean
    }
}

/// Smallest-radius tail of a profile: the last third, at least 3 entries.
fn tail(ratios: &[f64]) -> &[f64] {
    let len = (ratios.len() / 3).max(3).min(ratios.len());
    &ratios[ratios.len() - len..]
}

/// Zero if the fitted excess exponent exceeds `beta_threshold` on a good fit
/// (or every ratio vanishes); Positive if the tail stays above
/// `theta_threshold` and is stable; otherwise Inconclusive.
pub fn classify_density(est: &DensityEstimate, beta_threshold: f64, theta_threshold: f64) -> DensityClass {
    if !est.ratios.is_empty() && est.ratios.iter().all(|&r| r == 0.0) {
        return DensityClass::Zero;
    }
    if est.beta > beta_threshold && est.r2 > 0.9 {
        return DensityClass::Zero;
    }
    if est.theta_lower > theta_threshold && est.tail_cv() <= TAIL_CV_LIMIT {
        return DensityClass::Positive;
    }
    DensityClass::Inconclusive
}

pub(crate) fn validate_grid(eps_grid: &[f64], min_decades: f64) -> Result<()> {
    if eps_grid.len() < 2 {
        return Err(GermError::input("radius grid needs at least 2 entries"));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0)) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(GermError::input("radius grid must be positive and strictly decreasing"));
    }
    let decades = (eps_grid[0] / eps_grid[eps_grid.len() - 1]).log10();
    if decades < min_decades - 1e-9 {
        return Err(GermError::input(format!("radius grid spans {:.2} decades, need {}", decades, min_decades)));
    }
    Ok(())
}

/// Options for [`density_profile_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub tube: TubeOptions,
    /// Use the scaling action of weighted-homogeneous germs at the origin
    /// (one link sample for every radius) instead of per-radius ball samples.
    pub use_cone: bool,
    pub min_decades: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { tube: TubeOptions::default(), use_cone: true, min_decades: 1.5 }
    }
}

/// Density profile of `spec` at `x0` in dimension `k`.
pub fn density_profile(spec: &VarietySpec, x0: &[f64], k: usize, eps_grid: &[f64], n_per_eps: usize, seed: u64) -> Result<DensityEstimate> {
    density_profile_with(spec, x0, k, eps_grid, n_per_eps, seed, &ProfileOptions::default())
}

pub fn density_profile_with(
    spec: &VarietySpec,
    x0: &[f64],
    k: usize,
    eps_grid: &[f64],
    n_per_eps: usize,
    seed: u64,
    opts: &ProfileOptions,
) -> Result<DensityEstimate> {
    validate_grid(eps_grid, opts.min_decades)?;
    if x0.len() != spec.ambient_real_dim() {
        return Err(GermError::DimensionMismatch { expected: spec.ambient_real_dim(), got: x0.len() });
    }
    if n_per_eps == 0 {
        return Err(GermError::input("n_per_eps must be positive"));
    }
    let d = spec.real_dimension();
    if d != k {
        return Err(GermError::DimensionMismatch { expected: d, got: k });
    }
    let at_origin = x0.iter().all(|&x| x == 0.0);
    let (measures, errs): (Vec<f64>, Vec<f64>) = match spec.scaling_action() {
        Some(action) if at_origin && opts.use_cone && action.is_radial() => {
            // a straight cone: one link serves every radius
            let link = sample_sphere_slice_with(spec, 1.0, n_per_eps * eps_grid.len(), seed, &opts.tube)?;
            eps_grid
                .iter()
                .map(|&e| cone_ball_measure(&link, &action, e, None))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
        Some(_) if at_origin && opts.use_cone && spec.sheet_variable().is_some() => eps_grid
            .iter()
            .map(|&e| Ok(sample_sheets(spec, e, n_per_eps, seed, None)?.measure()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        _ => eps_grid
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let local = spec.rescaled(x0, e)?;
                let cloud = sample_ball(&local, 1.0, n_per_eps, seed.wrapping_add(0x9e37_79b9 * (i as u64 + 1)), &opts.tube)?;
                let est = hausdorff_measure(&cloud, k)?;
                let s = e.powi(k as i32);
                Ok((est.value * s, est.stderr * s))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
    };
    DensityEstimate::from_measures(k, eps_grid, &measures, &errs)
}

/// `H^k(X ∩ eps B)` for a weighted-homogeneous germ, from a link sample of
/// `X / eps` coned down to the origin (common seed across radii).
pub fn rescaled_cone_measure(
    spec: &VarietySpec,
    action: &ScalingAction,
    eps: f64,
    n: usize,
    seed: u64,
    tube: &TubeOptions,
    post: Option<&DMatrix<f64>>,
) -> Result<(f64, f64)> {
    let local = spec.rescaled(&vec![0.0; spec.ambient_real_dim()], eps)?;
    let link = sample_sphere_slice_with(&local, 1.0, n, seed, tube)?;
    let k = link.intrinsic_dim + 1;
    let (v, s) = cone_ball_measure(&link, action, 1.0, post)?;
    let scale = eps.powi(k as i32);
    Ok((v * scale, s * scale))
}

/// Index of the covering estimate: number of nearest neighbours used.
pub fn covering_neighbours() -> usize {
    KNN_M
}

/// Local PCA rank check exposed for clouds built elsewhere.
pub fn pca_dimension(cloud: &SampleCloud) -> usize {
    let index = PointIndex::new(&cloud.points);
    spatial::modal_pca_rank(&cloud.points, &index, 200).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variety::{random_sphere_point, substream, SamplingLaw};
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(0).unwrap(), 1.0);
        assert_eq!(unit_ball_volume(1).unwrap(), 2.0);
        assert!((unit_ball_volume(2).unwrap() - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4).unwrap() - PI * PI / 2.0).abs() < 1e-14);
        assert!(unit_ball_volume(-1).is_err());
    }

    fn circle_cloud(n: usize) -> SampleCloud {
        let coords = (0..n)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.3) / n as f64;
                vec![a.cos(), a.sin(), 0.0]
            })
            .collect();
        SampleCloud::from_coords(coords, 1, SamplingLaw::Parametric)
    }

    #[test]
    fn covering_estimate_of_circle() {
        let est = hausdorff_measure(&circle_cloud(2000), 1).unwrap();
        assert_eq!(est.method, MeasureMethod::CoveringCount);
        assert!((est.value - 2.0 * PI).abs() < 0.02, "{:?}", est);
    }

    #[test]
    fn covering_estimate_of_random_sphere() {
        let mut rng = substream(4, 0);
        let coords = (0..4000).map(|_| random_sphere_point(&mut rng, 3, 1.0)).collect();
        let cloud = SampleCloud::from_coords(coords, 2, SamplingLaw::Parametric);
        let est = hausdorff_measure(&cloud, 2).unwrap();
        assert!((est.value - 4.0 * PI).abs() < 4.0 * est.stderr + 0.03 * 4.0 * PI, "{:?}", est);
    }

    #[test]
    fn dimension_mismatch_detected() {
        assert!(matches!(hausdorff_measure(&circle_cloud(500), 2), Err(GermError::DimensionMismatch { .. })));
    }

    #[test]
    fn weighted_disk_measure() {
        let plane = VarietySpec::parse("plane", crate::variety::Field::Real, &["x".into(), "y".into(), "z".into()], &["z".into()], BTreeMap::new())
            .unwrap();
        let cloud = sample_ball(&plane, 1.0, 4000, 3, &TubeOptions::default()).unwrap();
        let est = hausdorff_measure(&cloud, 2).unwrap();
        assert_eq!(est.method, MeasureMethod::JacobianMC);
        assert!((est.value - PI).abs() < 3.0 * est.stderr, "{:?}", est);
    }

    #[test]
    fn radial_cone_is_exact() {
        // cone over the unit circle in the plane: area pi eps^2
        let mut link = circle_cloud(400);
        link.weights = Some(vec![2.0 * PI / 400.0; 400]);
        link.frames = Some(
            link.points
                .iter()
                .map(|p| DMatrix::from_column_slice(3, 1, &[-p.coords[1], p.coords[0], 0.0]))
                .collect(),
        );
        let act = ScalingAction::radial(3);
        for &e in &[1.0, 0.1, 0.01] {
            let (v, _) = cone_ball_measure(&link, &act, e, None).unwrap();
            assert!((v - PI * e * e).abs() < 1e-12 * e * e.max(1e-300));
        }
    }

    #[test]
    fn classification_rules() {
        let grid = default_eps_grid();
        let flat = DensityEstimate::from_ratios(2, &grid, vec![1.0; 9], vec![0.0; 9]);
        assert_eq!(flat.classification, DensityClass::Positive);
        assert!(flat.beta.abs() < 1e-12);
        let thin = DensityEstimate::from_ratios(3, &grid, grid.iter().map(|e| e.powf(0.5)).collect(), vec![0.0; 9]);
        assert_eq!(thin.classification, DensityClass::Zero);
        assert!((thin.beta - 0.5).abs() < 1e-12);
        let empty = DensityEstimate::from_ratios(3, &grid, vec![0.0; 9], vec![0.0; 9]);
        assert_eq!(empty.classification, DensityClass::Zero);
        // a plane whose estimates are swamped by 50% ambient noise
        let mut rng = substream(11, 0);
        let noisy: Vec<f64> = (0..9).map(|_| if rand::Rng::gen_bool(&mut rng, 0.5) { 1.0 } else { 0.02 }).collect();
        let est = DensityEstimate::from_ratios(2, &grid, noisy, vec![0.0; 9]);
        assert_eq!(est.classification, DensityClass::Inconclusive, "{:?}", est);
    }

    #[test]
    fn grid_validation() {
        let spec = VarietySpec::real_plane_r4();
        let x0 = vec![0.0; 4];
        assert!(density_profile(&spec, &x0, 2, &[0.1, 0.05], 100, 1).is_err());
        assert!(density_profile(&spec, &x0, 2, &[0.001, 0.1], 100, 1).is_err());
        assert!(matches!(
            density_profile(&spec, &x0, 3, &default_eps_grid(), 100, 1),
            Err(GermError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn plane_profile_is_flat() {
        let spec = VarietySpec::real_plane_r4();
        let est = density_profile(&spec, &[0.0; 4], 2, &default_eps_grid(), 300, 1).unwrap();
        assert_eq!(est.classification, DensityClass::Positive);
        assert!(est.beta.abs() < 1e-9);
        assert!((est.theta_lower - 1.0).abs() < 0.1, "{:?}", est);
    }
}
