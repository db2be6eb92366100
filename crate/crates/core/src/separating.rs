//! Conflict sets between two pieces of a link, their cones under the
//! weighted scaling action, and the thin / fat / disconnection verdict.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};
use crate::inner_metric::graph_with_radius;
use crate::linalg;
use crate::measure::{
    self, classify_density, cone_ball_measure, default_eps_grid, DensityClass, DensityEstimate, DEFAULT_BETA_THRESHOLD,
    DEFAULT_THETA_THRESHOLD,
};
use crate::spatial::{self, PointIndex};
use crate::variety::{
    branch_components, sample_sheets, sample_sphere_slice_with, GermPoint, SampleCloud, SamplingLaw, ScalingAction,
    TubeOptions, VarietySpec, WeightVector,
};

/// Fraction of the link a graph component must hold to count.
pub const COMPONENT_FRACTION: f64 = 0.1;
/// Edge length of the component graph, in median spacings. Edges this short
/// cannot jump across a band of half-width 2 spacings.
pub const COMPONENT_GRAPH_MULTIPLIER: f64 = 2.0;
pub const DEFAULT_BAND_MULTIPLIER: f64 = 2.0;

/// Signed distance difference `d(p, A) - d(p, B)` to two seed sets.
pub struct Bisector {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    ia: PointIndex,
    ib: PointIndex,
}

impl Bisector {
    pub fn new(a: &[Vec<f64>], b: &[Vec<f64>]) -> Self {
        Bisector { ia: PointIndex::new(a), ib: PointIndex::new(b), a: a.to_vec(), b: b.to_vec() }
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let (da, _) = self.ia.nearest_one(p).unwrap();
        let (db, _) = self.ib.nearest_one(p).unwrap();
        da - db
    }

    /// Value and ambient gradient.
    pub fn value_grad(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let (da, i) = self.ia.nearest_one(p).unwrap();
        let (db, j) = self.ib.nearest_one(p).unwrap();
        let grad = (0..p.len())
            .map(|k| {
                let ua = if da > 0.0 { (p[k] - self.a[i][k]) / da } else { 0.0 };
                let ub = if db > 0.0 { (p[k] - self.b[j][k]) / db } else { 0.0 };
                ua - ub
            })
            .collect();
        (da - db, grad)
    }

    pub fn distance_to_seeds(&self, p: &[f64]) -> f64 {
        let (da, _) = self.ia.nearest_one(p).unwrap();
        let (db, _) = self.ib.nearest_one(p).unwrap();
        da.min(db)
    }

    pub fn cross_distance(&self) -> f64 {
        self.a
            .iter()
            .map(|p| self.ib.nearest_one(p).unwrap().0)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct ConflictSet {
    /// Link points within the band of the bisector.
    pub link_points: Vec<GermPoint>,
    /// Their indices in the link cloud.
    pub link_indices: Vec<usize>,
    /// `d(p, A) - d(p, B)` for every point of the link cloud.
    pub g: Vec<f64>,
    /// `|grad g|` along the link (ambient when the link has no frames).
    pub grad_norm: Vec<f64>,
    pub band: f64,
    /// Minimum distance of the conflict points to the seed sets.
    pub delta: f64,
    /// `(m-1)`-dimensional weighted sample of the exact conflict set, when
    /// the link carries weights and frames (coarea over the band).
    pub base: Option<SampleCloud>,
    /// Cone over the conflict points under the scaling action.
    pub cone_cloud: SampleCloud,
}

/// Default scaling parameters for cone clouds: 9 values from 1 to `1e-3`.
pub fn default_t_grid() -> Vec<f64> {
    measure::geometric_grid(1.0, 1e-3, 9)
}

fn to_coords(points: &[GermPoint]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.coords.clone()).collect()
}

fn link_action(link: &SampleCloud) -> ScalingAction {
    link.spec
        .as_ref()
        .and_then(|s| s.scaling_action())
        .unwrap_or_else(|| ScalingAction::radial(link.ambient_dim()))
}

/// Link points within distance about `band` of the bisector of the two seed
/// sets, measured to first order as `|g| / |grad g|`.
pub fn conflict_set(link: &SampleCloud, a_seed: &[GermPoint], b_seed: &[GermPoint], band: f64) -> Result<ConflictSet> {
    if a_seed.is_empty() || b_seed.is_empty() {
        return Err(GermError::input("seed sets must be nonempty"));
    }
    if link.is_empty() {
        return Err(GermError::input("link sample is empty"));
    }
    if !(band > 0.0) {
        return Err(GermError::input("band must be positive"));
    }
    let bis = Bisector::new(&to_coords(a_seed), &to_coords(b_seed));
    let cross = bis.cross_distance();
    if cross <= 2.0 * band {
        return Err(GermError::SeedOverlap { distance: cross });
    }
    let (g, grads): (Vec<f64>, Vec<Vec<f64>>) = link.points.iter().map(|p| bis.value_grad(&p.coords)).unzip();
    let grad_norm: Vec<f64> = grads
        .iter()
        .enumerate()
        .map(|(i, v)| match &link.frames {
            Some(f) => (f[i].transpose() * DVector::from_column_slice(v)).norm(),
            None => linalg::norm(v),
        })
        .collect();
    let in_band = |b: f64| -> Vec<usize> { (0..link.len()).filter(|&i| g[i].abs() <= b * grad_norm[i]).collect() };
    let mut band = band;
    let mut idx = in_band(band);
    if idx.is_empty() {
        band *= 2.0;
        idx = in_band(band);
        if idx.is_empty() {
            return Err(GermError::EmptyConflict { band });
        }
    }
    let delta = idx.iter().map(|&i| bis.distance_to_seeds(&link.points[i].coords)).fold(f64::INFINITY, f64::min);
    let base = conflict_base(link, &grads, &idx, band);
    let link_points: Vec<GermPoint> = idx.iter().map(|&i| link.points[i].clone()).collect();
    let action = link_action(link);
    let cone_cloud = cone_points(&link_points, &action, &default_t_grid());
    Ok(ConflictSet { link_points, link_indices: idx, g, grad_norm, band, delta, base, cone_cloud })
}

/// Estimate of the level set `{g = 0}` inside the link: points of the tube
/// of half-width `band` around it, weighted by `w / (2 band)`, frames with the
/// gradient direction removed.
fn conflict_base(link: &SampleCloud, grads: &[Vec<f64>], idx: &[usize], band: f64) -> Option<SampleCloud> {
    let (weights, frames) = match (&link.weights, &link.frames) {
        (Some(w), Some(f)) if link.intrinsic_dim >= 1 => (w, f),
        _ => return None,
    };
    let m = link.intrinsic_dim;
    let mut out_w = Vec::with_capacity(idx.len());
    let mut out_f = Vec::with_capacity(idx.len());
    for &i in idx {
        let u = &frames[i];
        let v = u.transpose() * DVector::from_column_slice(&grads[i]);
        let norm = v.norm();
        out_w.push(weights[i] / (2.0 * band));
        // complement of v inside the frame
        let mut cols = vec![if norm > 0.0 { v.clone() / norm } else { DVector::zeros(m) }];
        for c in 0..m {
            let mut e = DVector::zeros(m);
            e[c] = 1.0;
            cols.push(e);
        }
        let basis = linalg::orthonormalize(&cols);
        let rest: Vec<DVector<f64>> = basis.into_iter().skip(1).take(m - 1).map(|b| u * b).collect();
        out_f.push(if rest.is_empty() { DMatrix::zeros(u.nrows(), 0) } else { DMatrix::from_columns(&rest) });
    }
    let mut cloud = link.select(idx);
    cloud.weights = Some(out_w);
    cloud.frames = Some(out_f);
    cloud.intrinsic_dim = m - 1;
    cloud.sampling_law = SamplingLaw::Derived;
    Some(cloud)
}

fn cone_points(points: &[GermPoint], action: &ScalingAction, t_grid: &[f64]) -> SampleCloud {
    let mut coords = Vec::with_capacity(points.len() * t_grid.len());
    for &t in t_grid {
        for p in points {
            coords.push(action.apply(&p.coords, t));
        }
    }
    SampleCloud::from_coords(coords, 0, SamplingLaw::Derived)
}

/// Images of every conflict point under the scaling action, one block per `t`
/// (in grid order).
pub fn cone_down(cs: &ConflictSet, w: &WeightVector, t_grid: &[f64]) -> Result<SampleCloud> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(GermError::input("t values must lie in (0, 1]"));
    }
    let mut coords = Vec::with_capacity(cs.link_points.len() * t_grid.len());
    for &t in t_grid {
        for p in &cs.link_points {
            coords.push(crate::variety::weighted_scale(&p.coords, w, t)?);
        }
    }
    let mut cloud = SampleCloud::from_coords(coords, cs.cone_cloud.intrinsic_dim, SamplingLaw::Derived);
    if let Some(spec) = cs.base.as_ref().and_then(|b| b.spec.clone()) {
        for p in cloud.points.iter_mut() {
            p.residual = spec.residual(&p.coords);
            if p.residual > 1e-8 {
                return Err(GermError::NoConvergence { iterations: 0, residual: p.residual });
            }
        }
        cloud.spec = Some(spec);
    }
    Ok(cloud)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SeparatingSetFound,
    NotFoundByThisConstruction,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub thin_estimate: Option<DensityEstimate>,
    pub fat_estimates: Option<(DensityEstimate, DensityEstimate)>,
    pub components_found: usize,
    pub branches: usize,
    pub verdict: Verdict,
    /// Smaller of the two fat inferior densities.
    pub xi: f64,
    pub band: f64,
    pub delta: f64,
    pub conflict_points: usize,
    pub notes: Vec<String>,
}

impl SeparationReport {
    fn gated(branches: usize, note: String) -> Self {
        SeparationReport {
            thin_estimate: None,
            fat_estimates: None,
            components_found: 0,
            branches,
            verdict: Verdict::NotFoundByThisConstruction,
            xi: 0.0,
            band: 0.0,
            delta: 0.0,
            conflict_points: 0,
            notes: vec![note],
        }
    }
}

/// Budgets and thresholds of the separation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationParams {
    pub link_n: usize,
    pub slice_n: usize,
    pub n_per_eps: usize,
    pub eps_grid: Vec<f64>,
    pub band_multiplier: f64,
    pub beta_threshold: f64,
    pub theta_threshold: f64,
    pub tube: f64,
    pub seed: u64,
}

impl Default for SeparationParams {
    fn default() -> Self {
        SeparationParams {
            link_n: 20_000,
            slice_n: 1500,
            n_per_eps: 1000,
            eps_grid: default_eps_grid(),
            band_multiplier: DEFAULT_BAND_MULTIPLIER,
            beta_threshold: DEFAULT_BETA_THRESHOLD,
            theta_threshold: DEFAULT_THETA_THRESHOLD,
            tube: 0.05,
            seed: 1,
        }
    }
}

/// Counts graph components of the link with the conflict band removed,
/// keeping those with at least [`COMPONENT_FRACTION`] of the samples.
pub fn components_outside_band(link: &SampleCloud, cs: &ConflictSet) -> usize {
    let index = link.index();
    let spacing = spatial::median_nn_distance(&link.points, &index);
    let g = graph_with_radius(&link.points, &index, COMPONENT_GRAPH_MULTIPLIER * spacing, spacing, |i| {
        cs.g[i].abs() > cs.band * cs.grad_norm[i]
    });
    let sizes = spatial::component_sizes(&g.labels);
    sizes.iter().filter(|&&s| s as f64 >= COMPONENT_FRACTION * link.len() as f64).count()
}

fn reclassify(est: &mut DensityEstimate, p: &SeparationParams) {
    est.classification = classify_density(est, p.beta_threshold, p.theta_threshold);
}

pub(crate) fn verdict_of(thin: &DensityEstimate, a: &DensityEstimate, b: &DensityEstimate, components: usize) -> Verdict {
    use DensityClass::*;
    if thin.classification == Zero && a.classification == Positive && b.classification == Positive && components >= 2 {
        Verdict::SeparatingSetFound
    } else if [thin.classification, a.classification, b.classification].contains(&Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::NotFoundByThisConstruction
    }
}

/// Runs the conflict-set construction for a weighted-homogeneous germ:
/// branches of the slice `{slice_var = 0}` seed the bisector, the conflict
/// cone must be thin and both sides fat.
pub fn separation_verdict(spec: &VarietySpec, w: &WeightVector, slice_var: usize, params: &SeparationParams) -> Result<SeparationReport> {
    separation_verdict_mapped(spec, w, slice_var, params, None)
}

/// As [`separation_verdict`], measuring every density after the linear map `post`.
pub fn separation_verdict_mapped(
    spec: &VarietySpec,
    w: &WeightVector,
    slice_var: usize,
    params: &SeparationParams,
    post: Option<&DMatrix<f64>>,
) -> Result<SeparationReport> {
    let spec = spec.clone().with_weights(w.clone())?;
    let branches = branch_components(&spec, slice_var, 1.0, params.slice_n, params.seed)
        .map_err(|e| e.in_stage("branch_components"))?;
    if branches.len() < 2 {
        return Ok(SeparationReport::gated(
            branches.len(),
            format!("slice {{{} = 0}} has a single branch", spec.variables[slice_var]),
        ));
    }
    let a_seed = branches[0].clone();
    let b_seed: Vec<GermPoint> = branches[1..].iter().flatten().cloned().collect();
    let tube = TubeOptions { tube: params.tube, ..Default::default() };
    let link = sample_sphere_slice_with(&spec, 1.0, params.link_n, params.seed.wrapping_add(1), &tube)
        .map_err(|e| e.in_stage("link sample"))?;
    let action = spec.scaling_action().expect("weights attached");
    let mut report = run_pipeline(&spec, &link, &a_seed, &b_seed, &action, params, post)?;
    report.branches = branches.len();
    if !w.satisfies_ordering() && report.verdict == Verdict::SeparatingSetFound {
        report.verdict = Verdict::NotFoundByThisConstruction;
        report.notes.push(format!("weights {:?} violate w1 >= w2 > w3", w.w));
    }
    Ok(report)
}

fn run_pipeline(
    spec: &VarietySpec,
    link: &SampleCloud,
    a_seed: &[GermPoint],
    b_seed: &[GermPoint],
    action: &ScalingAction,
    params: &SeparationParams,
    post: Option<&DMatrix<f64>>,
) -> Result<SeparationReport> {
    let index = link.index();
    let spacing = spatial::median_nn_distance(&link.points, &index);
    let cs = conflict_set(link, a_seed, b_seed, params.band_multiplier * spacing).map_err(|e| e.in_stage("conflict_set"))?;
    let base = cs.base.as_ref().ok_or_else(|| GermError::input("link sample carries no weights"))?;
    let k = link.intrinsic_dim + 1;
    let grid = &params.eps_grid;

    let (thin_m, thin_s): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .map(|&e| cone_ball_measure(base, action, e, post))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let mut thin = DensityEstimate::from_measures(k - 1, grid, &thin_m, &thin_s)?;
    reclassify(&mut thin, params);

    let bis = Bisector::new(&to_coords(a_seed), &to_coords(b_seed));
    let (mut fa, mut fb) = fat_profiles(spec, link, &cs, &bis, action, params, post)?;
    reclassify(&mut fa, params);
    reclassify(&mut fb, params);

    let components = components_outside_band(link, &cs);
    let verdict = verdict_of(&thin, &fa, &fb, components);
    Ok(SeparationReport {
        xi: fa.theta_lower.min(fb.theta_lower),
        thin_estimate: Some(thin),
        fat_estimates: Some((fa, fb)),
        components_found: components,
        branches: 0,
        verdict,
        band: cs.band,
        delta: cs.delta,
        conflict_points: cs.link_points.len(),
        notes: Vec::new(),
    })
}

/// Density profiles of the two sides `{g < 0}` and `{g > 0}` of the cone.
fn fat_profiles(
    spec: &VarietySpec,
    link: &SampleCloud,
    cs: &ConflictSet,
    bis: &Bisector,
    action: &ScalingAction,
    params: &SeparationParams,
    post: Option<&DMatrix<f64>>,
) -> Result<(DensityEstimate, DensityEstimate)> {
    let k = link.intrinsic_dim + 1;
    let grid = &params.eps_grid;
    let mut ma = Vec::new();
    let mut sa = Vec::new();
    let mut mb = Vec::new();
    let mut sb = Vec::new();
    if !action.is_radial() && spec.sheet_variable().is_some() {
        let inv = match post {
            Some(l) => Some(l.clone().try_inverse().ok_or_else(|| GermError::input("linear map is singular"))?),
            None => None,
        };
        for &e in grid {
            let sheets = sample_sheets(spec, e, params.n_per_eps, params.seed.wrapping_add(2), post)?;
            let side: Vec<bool> = sheets
                .cloud
                .points
                .iter()
                .map(|p| {
                    let y: Vec<f64> = p.coords.iter().map(|c| c * e).collect();
                    let x = match &inv {
                        Some(m) => (m * DVector::from_vec(y)).as_slice().to_vec(),
                        None => y,
                    };
                    let t = action.time_to_radius(&x, 1.0);
                    bis.value(&action.apply(&x, t)) < 0.0
                })
                .collect();
            let (va, ea) = sheets.measure_where(|i, _| side[i]);
            let (vb, eb) = sheets.measure_where(|i, _| !side[i]);
            ma.push(va);
            sa.push(ea);
            mb.push(vb);
            sb.push(eb);
        }
    } else {
        let a_side = link.filter(|i, _| cs.g[i] < 0.0);
        let b_side = link.filter(|i, _| cs.g[i] >= 0.0);
        for &e in grid {
            let (va, ea) = cone_ball_measure(&a_side, action, e, post)?;
            let (vb, eb) = cone_ball_measure(&b_side, action, e, post)?;
            ma.push(va);
            sa.push(ea);
            mb.push(vb);
            sb.push(eb);
        }
    }
    Ok((DensityEstimate::from_measures(k, grid, &ma, &sa)?, DensityEstimate::from_measures(k, grid, &mb, &sb)?))
}

/// The same pipeline on a weighted link sample of a straight cone, with
/// radial scaling.
pub fn straight_cone_control(link: &SampleCloud, a_seed: &[GermPoint], b_seed: &[GermPoint], params: &SeparationParams) -> Result<SeparationReport> {
    let action = ScalingAction::radial(link.ambient_dim());
    let spec = link
        .spec
        .as_deref()
        .cloned()
        .unwrap_or_else(|| VarietySpec::smooth_c2());
    let mut report = run_pipeline(&spec, link, a_seed, b_seed, &action, params, None)?;
    report.branches = 2;
    Ok(report)
}

/// Weighted sample of the unit circle in the `xy`-plane of `R^3`, the link
/// of the straight cone `{z = 0}` seen as a cone over a circle.
pub fn circle_link(n: usize) -> SampleCloud {
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            vec![a.cos(), a.sin(), 0.0]
        })
        .collect();
    let frames = coords.iter().map(|c| DMatrix::from_column_slice(3, 1, &[-c[1], c[0], 0.0])).collect();
    let mut cloud = SampleCloud::from_coords(coords, 1, SamplingLaw::Parametric);
    cloud.weights = Some(vec![2.0 * std::f64::consts::PI / n as f64; n]);
    cloud.frames = Some(frames);
    cloud
}

/// Points of `cloud` within `radius` of `center`.
pub fn seed_patch(cloud: &SampleCloud, center: &[f64], radius: f64) -> Vec<GermPoint> {
    cloud.points.iter().filter(|p| linalg::dist(&p.coords, center) <= radius).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(c: &[f64]) -> GermPoint {
        GermPoint::new(c.to_vec(), 0.0)
    }

    #[test]
    fn circle_bisector() {
        let link = circle_link(2000);
        let cs = conflict_set(&link, &[gp(&[1.0, 0.0, 0.0])], &[gp(&[-1.0, 0.0, 0.0])], 0.05).unwrap();
        assert!(!cs.link_points.is_empty());
        for p in &cs.link_points {
            assert!(p.coords[0].abs() < 0.06);
        }
        let base = cs.base.as_ref().unwrap();
        // two points: coarea weight sums to about 2
        assert!((base.total_weight().unwrap() - 2.0).abs() < 0.1, "{:?}", base.total_weight());
    }

    #[test]
    fn bisector_symmetry() {
        let link = circle_link(1000);
        let a = seed_patch(&link, &[1.0, 0.0, 0.0], 0.3);
        let b = seed_patch(&link, &[0.0, 1.0, 0.0], 0.3);
        let ab = conflict_set(&link, &a, &b, 0.01).unwrap();
        let ba = conflict_set(&link, &b, &a, 0.01).unwrap();
        assert_eq!(ab.link_indices, ba.link_indices);
    }

    #[test]
    fn overlapping_seeds_rejected() {
        let link = circle_link(100);
        let a = vec![gp(&[1.0, 0.0, 0.0])];
        assert!(matches!(conflict_set(&link, &a, &a, 0.01), Err(GermError::SeedOverlap { .. })));
    }

    #[test]
    fn cone_down_examples() {
        let link = circle_link(400);
        let cs = conflict_set(&link, &[gp(&[1.0, 0.0, 0.0])], &[gp(&[-1.0, 0.0, 0.0])], 0.02).unwrap();
        let w = WeightVector::uniform(3);
        let c = cone_down(&cs, &w, &[1.0]).unwrap();
        assert_eq!(to_coords(&c.points), to_coords(&cs.link_points));
        let half = cone_down(&cs, &w, &[0.5]).unwrap();
        for (p, q) in half.points.iter().zip(&cs.link_points) {
            for (a, b) in p.coords.iter().zip(&q.coords) {
                assert!((a - 0.5 * b).abs() < 1e-15);
            }
        }
        assert!(cone_down(&cs, &w, &[1.5]).is_err());
        assert!(cone_down(&cs, &w, &[0.0]).is_err());
    }

    #[test]
    fn cone_over_circle_is_negative() {
        let link = circle_link(4000);
        let a = seed_patch(&link, &[1.0, 0.0, 0.0], 0.5);
        let b = seed_patch(&link, &[-1.0, 0.0, 0.0], 0.5);
        let r = straight_cone_control(&link, &a, &b, &SeparationParams::default()).unwrap();
        let thin = r.thin_estimate.as_ref().unwrap();
        assert_eq!(thin.classification, DensityClass::Positive);
        assert_eq!(r.components_found, 2);
        assert_eq!(r.verdict, Verdict::NotFoundByThisConstruction);
    }
}
