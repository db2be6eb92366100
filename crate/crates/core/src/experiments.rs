//! Scenario runner: catalog of germs, pipelines, deterministic reports and
//! the Briançon–Speder checks.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};
use crate::linalg;
use crate::measure::{default_eps_grid, geometric_grid};
use crate::separating::{
    self, circle_link, conflict_set, cone_down, seed_patch, separation_verdict_mapped, straight_cone_control,
    SeparationParams, SeparationReport, Verdict,
};
use crate::spatial;
use crate::tangent_cone::{
    link_net, separating_subcone_to_separating_set, subcone_separation, tangent_cone_sample, SubconeReport,
    TangentConeSummary, TransferParams,
};
use crate::variety::{
    branch_components, random_ball_point, sample_sphere_slice_with, substream, wirtinger_measure, GermPoint,
    SampleCloud, SamplingLaw, TubeOptions, VarietyConfig, VarietySpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    SeparationVerdict,
    TangentCone,
    SubconeTransfer,
    StraightConeControl,
    BsConical,
}

/// Sample counts and grids. Unset grids fall back to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub link_n: usize,
    pub slice_n: usize,
    pub n_per_eps: usize,
    pub eps_grid: Vec<f64>,
    pub tangent_n: usize,
    pub t_grid: Vec<f64>,
    pub transfer_n_per_eps: usize,
    pub transfer_eps_grid: Vec<f64>,
    pub conical_n: usize,
    pub conical_eps: Vec<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        let s = SeparationParams::default();
        let t = TransferParams::default();
        Budget {
            link_n: s.link_n,
            slice_n: s.slice_n,
            n_per_eps: s.n_per_eps,
            eps_grid: default_eps_grid(),
            tangent_n: 1500,
            t_grid: default_eps_grid(),
            transfer_n_per_eps: t.n_per_eps,
            transfer_eps_grid: t.eps_grid,
            conical_n: 20_000,
            conical_eps: vec![0.2, 0.3, 0.4],
        }
    }
}

impl Budget {
    fn validate(&self) -> Result<()> {
        let counts = [
            self.link_n,
            self.slice_n,
            self.n_per_eps,
            self.tangent_n,
            self.transfer_n_per_eps,
            self.conical_n,
        ];
        if counts.iter().any(|&c| c == 0) {
            return Err(GermError::Config("budget sample counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: VarietySpec,
    pub pipeline: Pipeline,
    pub budget: Budget,
    pub seed: u64,
    pub expected: Option<Verdict>,
    /// Expected number of hyperplanes in the tangent cone.
    pub expected_clusters: Option<usize>,
    pub slice_var: Option<usize>,
}

/// Flat TOML form of a [`Scenario`]. The germ is either a catalog name
/// (`germ = "brieskorn:2,4,5"`) or a `[variety]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub pipeline: Pipeline,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub expected: Option<Verdict>,
    #[serde(default)]
    pub expected_clusters: Option<usize>,
    #[serde(default)]
    pub germ: Option<String>,
    #[serde(default)]
    pub variety: Option<VarietyConfig>,
    #[serde(default)]
    pub slice_var: Option<String>,
    #[serde(default)]
    pub budget: Budget,
}

fn default_seed() -> u64 {
    1
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<Scenario> {
        let spec = match (&self.germ, &self.variety) {
            (Some(g), None) => germ(g)?,
            (None, Some(v)) => {
                let mut spec = v.build()?;
                if spec.name.is_empty() {
                    spec.name = self.name.clone();
                }
                spec
            }
            _ => return Err(GermError::Config("give exactly one of `germ` and `[variety]`".into())),
        };
        let slice_var = match &self.slice_var {
            Some(v) => Some(
                spec.variables
                    .iter()
                    .position(|x| x == v)
                    .ok_or_else(|| GermError::Config(format!("unknown slice variable `{}`", v)))?,
            ),
            None => None,
        };
        self.budget.validate()?;
        Ok(Scenario {
            name: self.name.clone(),
            spec,
            pipeline: self.pipeline,
            budget: self.budget.clone(),
            seed: self.seed,
            expected: self.expected,
            expected_clusters: self.expected_clusters,
            slice_var,
        })
    }
}

pub fn parse_scenario(src: &str) -> Result<Scenario> {
    let cfg: ScenarioConfig = toml::from_str(src).map_err(|e| GermError::Config(e.to_string()))?;
    cfg.build()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| GermError::Config(format!("bad {} `{}`", what, s))))
        .collect()
}

/// Germ from a catalog name: `a<k>`, `brieskorn:p,q,r`, `z:a1,a2,a3`,
/// `bs:t`, `c2`, or a polynomial in `x, y, z`.
pub fn germ(name: &str) -> Result<VarietySpec> {
    let name = name.trim();
    if let Some(rest) = name.strip_prefix("brieskorn:") {
        let v: Vec<u32> = parse_list(rest, "exponents")?;
        if v.len() != 3 || v.iter().any(|&e| e < 2) {
            return Err(GermError::Config(format!("brieskorn needs three exponents >= 2, got `{}`", rest)));
        }
        return Ok(VarietySpec::brieskorn(v[0], v[1], v[2]));
    }
    if let Some(rest) = name.strip_prefix("z:") {
        let v: Vec<u32> = parse_list(rest, "exponents")?;
        if v.len() != 3 || v.iter().any(|&e| e < 2) {
            return Err(GermError::Config(format!("z: needs three exponents >= 2, got `{}`", rest)));
        }
        return Ok(VarietySpec::brieskorn_z(v[0], v[1], v[2]));
    }
    if let Some(rest) = name.strip_prefix("bs:") {
        let t: f64 = rest.trim().trim_start_matches("t=").parse().map_err(|_| GermError::Config(format!("bad t `{}`", rest)))?;
        return Ok(VarietySpec::briancon_speder(t));
    }
    if name == "c2" {
        return Ok(VarietySpec::smooth_c2());
    }
    if let Some(k) = name.strip_prefix('a').and_then(|k| k.parse::<u32>().ok()) {
        if k == 0 {
            return Err(GermError::Config("A_k needs k >= 1".into()));
        }
        return Ok(VarietySpec::a_k(k));
    }
    let cfg = VarietyConfig {
        name: name.to_string(),
        field: crate::variety::Field::Complex,
        variables: Vec::new(),
        equations: vec![name.to_string()],
        params: BTreeMap::new(),
        weights: None,
        dim: None,
    };
    cfg.build()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Built-in scenario names, with a one-line description each.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("a1", "A1 negative control through the conflict-set pipeline"),
        ("a2", "A2: conflict-set separating set"),
        ("a3", "A3: conflict-set separating set"),
        ("brieskorn:p,q,r", "Brieskorn X(p,q,r): conflict-set pipeline, expected by gcd(p,q)"),
        ("bs:t", "Briançon–Speder X_t; t = 0 adds the conical checks"),
        ("cone-control", "straight cone over a circle"),
        ("tangent:germ", "tangent cone of a germ (e.g. tangent:z:2,2,3)"),
        ("subcone:germ", "separating subcone {z1 = z2 = 0} transferred to the germ"),
    ]
}

/// Scenario for a catalog name.
pub fn catalog_scenario(name: &str) -> Result<Scenario> {
    let base = |spec: VarietySpec, pipeline: Pipeline, expected: Option<Verdict>| Scenario {
        name: name.to_string(),
        spec,
        pipeline,
        budget: Budget::default(),
        seed: 1,
        expected,
        expected_clusters: None,
        slice_var: None,
    };
    if let Some(rest) = name.strip_prefix("tangent:") {
        let spec = germ(rest)?;
        return Ok(base(spec, Pipeline::TangentCone, None));
    }
    if let Some(rest) = name.strip_prefix("subcone:") {
        let spec = germ(rest)?;
        return Ok(base(spec, Pipeline::SubconeTransfer, Some(Verdict::SeparatingSetFound)));
    }
    if name == "cone-control" {
        return Ok(base(VarietySpec::smooth_c2(), Pipeline::StraightConeControl, Some(Verdict::NotFoundByThisConstruction)));
    }
    if let Some(rest) = name.strip_prefix("brieskorn:") {
        let v: Vec<u32> = parse_list(rest, "exponents")?;
        let spec = germ(name)?;
        let expected = if v.len() == 3 && gcd(v[0], v[1]) > 1 {
            Verdict::SeparatingSetFound
        } else {
            Verdict::NotFoundByThisConstruction
        };
        return Ok(base(spec, Pipeline::SeparationVerdict, Some(expected)));
    }
    if name.starts_with("bs:") {
        let spec = germ(name)?;
        let t = spec.family_params.get("t").copied().unwrap_or(0.0);
        let expected = if t != 0.0 { Verdict::SeparatingSetFound } else { Verdict::NotFoundByThisConstruction };
        return Ok(base(spec, Pipeline::SeparationVerdict, Some(expected)));
    }
    if let Some(k) = name.strip_prefix('a').and_then(|k| k.parse::<u32>().ok()) {
        let spec = germ(name)?;
        let expected = if k >= 2 { Verdict::SeparatingSetFound } else { Verdict::NotFoundByThisConstruction };
        return Ok(base(spec, Pipeline::SeparationVerdict, Some(expected)));
    }
    Err(GermError::Config(format!("unknown scenario `{}` (see `germlab catalog`)", name)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Match,
    Mismatch,
    Inconclusive,
    NoExpectation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Match | Outcome::NoExpectation => 0,
            Outcome::Mismatch => 1,
            Outcome::Inconclusive => 2,
        }
    }
}

/// Exit code for a failed run.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub germ: String,
    pub equations: Vec<String>,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub budget: Budget,
    pub expected: Option<Verdict>,
    pub verdict: Option<Verdict>,
    pub outcome: Outcome,
    pub separation: Option<SeparationReport>,
    pub tangent_cone: Option<TangentConeSummary>,
    pub subcone: Option<SubconeReport>,
    pub conical: Vec<BsConicalReport>,
    pub notes: Vec<String>,
}

impl ScenarioReport {
    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }

    /// Pretty JSON; non-finite numbers become `null`.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| GermError::Io(e.to_string()))
    }

    /// Density tables of the report as CSV files in `dir`.
    pub fn write_csv(&self, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut tables = Vec::new();
        if let Some(s) = &self.separation {
            if let Some(t) = &s.thin_estimate {
                tables.push(("thin", t));
            }
            if let Some((a, b)) = &s.fat_estimates {
                tables.push(("fat_a", a));
                tables.push(("fat_b", b));
            }
        }
        for (label, est) in tables {
            let path = dir.join(format!("{}_{}.csv", sanitize(&self.scenario), label));
            let mut w = csv::Writer::from_path(&path).map_err(|e| GermError::Io(e.to_string()))?;
            w.write_record(["eps", "ratio", "stderr"]).map_err(|e| GermError::Io(e.to_string()))?;
            for i in 0..est.eps_grid.len() {
                w.write_record([est.eps_grid[i].to_string(), est.ratios[i].to_string(), est.stderrs[i].to_string()])
                    .map_err(|e| GermError::Io(e.to_string()))?;
            }
            w.flush()?;
            written.push(path);
        }
        if let Some(t) = &self.tangent_cone {
            let path = dir.join(format!("{}_tangent.csv", sanitize(&self.scenario)));
            let mut w = csv::Writer::from_path(&path).map_err(|e| GermError::Io(e.to_string()))?;
            w.write_record(["t", "f"]).map_err(|e| GermError::Io(e.to_string()))?;
            for (t, f) in t.t_grid.iter().zip(&t.f_values) {
                w.write_record([t.to_string(), f.to_string()]).map_err(|e| GermError::Io(e.to_string()))?;
            }
            w.flush()?;
            written.push(path);
        }
        Ok(written)
    }
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn separation_params(s: &Scenario) -> SeparationParams {
    SeparationParams {
        link_n: s.budget.link_n,
        slice_n: s.budget.slice_n,
        n_per_eps: s.budget.n_per_eps,
        eps_grid: s.budget.eps_grid.clone(),
        seed: s.seed,
        ..Default::default()
    }
}

/// Index of the variable of lowest weight (the last one on ties).
fn lowest_weight_variable(spec: &VarietySpec) -> Result<usize> {
    let w = spec
        .weights
        .as_ref()
        .ok_or_else(|| GermError::NotWeightedHomogeneous(format!("`{}` carries no weights", spec.name)))?;
    let m = *w.w.iter().min().unwrap();
    Ok(w.w.iter().rposition(|&x| x == m).unwrap())
}

/// Circle `|v| = 1` on the axis of the last variable of `C^n`.
pub fn last_axis_circle(n_vars: usize, n: usize) -> SampleCloud {
    let coords = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let mut p = vec![0.0; 2 * n_vars];
            p[2 * n_vars - 2] = a.cos();
            p[2 * n_vars - 1] = a.sin();
            p
        })
        .collect();
    SampleCloud::from_coords(coords, 1, SamplingLaw::Parametric)
}

fn outcome(expected: Option<Verdict>, verdict: Option<Verdict>) -> Outcome {
    match (expected, verdict) {
        (_, Some(Verdict::Inconclusive)) => Outcome::Inconclusive,
        (None, _) => Outcome::NoExpectation,
        (Some(e), Some(v)) if e == v => Outcome::Match,
        _ => Outcome::Mismatch,
    }
}

fn is_bs_zero(spec: &VarietySpec) -> bool {
    spec.name.starts_with("BS(") && spec.family_params.get("t").copied() == Some(0.0)
}

/// Runs one scenario. Pipeline errors carry the name of the failing stage.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioReport> {
    s.budget.validate()?;
    let mut report = ScenarioReport {
        scenario: s.name.clone(),
        germ: s.spec.name.clone(),
        equations: s.spec.equations.iter().map(|e| e.display_with(&s.spec.variables)).collect(),
        pipeline: s.pipeline,
        seed: s.seed,
        budget: s.budget.clone(),
        expected: s.expected,
        verdict: None,
        outcome: Outcome::NoExpectation,
        separation: None,
        tangent_cone: None,
        subcone: None,
        conical: Vec::new(),
        notes: Vec::new(),
    };
    match s.pipeline {
        Pipeline::SeparationVerdict => {
            let w = s
                .spec
                .weights
                .clone()
                .ok_or_else(|| GermError::NotWeightedHomogeneous(format!("`{}` carries no weights", s.spec.name)))?;
            let slice = match s.slice_var {
                Some(v) => v,
                None => lowest_weight_variable(&s.spec)?,
            };
            let sep = separation_verdict_mapped(&s.spec, &w, slice, &separation_params(s), None)
                .map_err(|e| e.in_stage("separation_verdict"))?;
            report.verdict = Some(sep.verdict);
            report.separation = Some(sep);
            if is_bs_zero(&s.spec) {
                run_conical(s, &mut report)?;
            }
        }
        Pipeline::BsConical => {
            run_conical(s, &mut report)?;
            let ok = report.conical.iter().all(|c| c.passed);
            report.verdict = Some(if ok { Verdict::NotFoundByThisConstruction } else { Verdict::Inconclusive });
        }
        Pipeline::StraightConeControl => {
            let link = circle_link(s.budget.link_n.min(20_000));
            let a = seed_patch(&link, &[1.0, 0.0, 0.0], 0.5);
            let b = seed_patch(&link, &[-1.0, 0.0, 0.0], 0.5);
            let sep = straight_cone_control(&link, &a, &b, &separation_params(s))
                .map_err(|e| e.in_stage("straight_cone_control"))?;
            report.verdict = Some(sep.verdict);
            report.separation = Some(sep);
        }
        Pipeline::TangentCone => {
            let x0 = vec![0.0; s.spec.ambient_real_dim()];
            let t = tangent_cone_sample(&s.spec, &x0, &s.budget.t_grid, s.budget.tangent_n, s.seed)
                .map_err(|e| e.in_stage("tangent_cone_sample"))?;
            if let Some(k) = s.expected_clusters {
                report.outcome = if t.n_clusters() == k { Outcome::Match } else { Outcome::Mismatch };
            }
            report.tangent_cone = Some(t.summary());
            return Ok(report);
        }
        Pipeline::SubconeTransfer => {
            let x0 = vec![0.0; s.spec.ambient_real_dim()];
            let t = tangent_cone_sample(&s.spec, &x0, &s.budget.t_grid, s.budget.tangent_n, s.seed)
                .map_err(|e| e.in_stage("tangent_cone_sample"))?;
            let y = last_axis_circle(s.spec.n_vars(), 200);
            let dim = s.spec.real_dimension();
            let link = link_net(&t.cone_spec, 1.0, s.budget.tangent_n.max(3000), s.seed, SamplingLaw::SphereSlice, dim - 1)
                .map_err(|e| e.in_stage("cone link"))?;
            report.subcone = Some(subcone_separation(&link, &y, 2).map_err(|e| e.in_stage("subcone_separation"))?);
            let params = TransferParams {
                n_per_eps: s.budget.transfer_n_per_eps,
                eps_grid: s.budget.transfer_eps_grid.clone(),
                seed: s.seed,
                ..Default::default()
            };
            let sep = separating_subcone_to_separating_set(&s.spec, &y, t.c, t.alpha, &params)
                .map_err(|e| e.in_stage("separating_subcone_to_separating_set"))?;
            report.tangent_cone = Some(t.summary());
            report.verdict = Some(sep.verdict);
            report.separation = Some(sep);
        }
    }
    report.outcome = outcome(s.expected, report.verdict);
    if report.outcome == Outcome::Match && !report.conical.is_empty() && !report.conical.iter().all(|c| c.passed) {
        report.outcome = Outcome::Mismatch;
        report.notes.push("conical evidence failed".into());
    }
    Ok(report)
}

fn run_conical(s: &Scenario, report: &mut ScenarioReport) -> Result<()> {
    for (i, &e) in s.budget.conical_eps.iter().enumerate() {
        let r = bs_conical_check(e, 0.4 * e, s.budget.conical_n, s.seed.wrapping_add(i as u64))
            .map_err(|err| err.in_stage("bs_conical_check"))?;
        report.conical.push(r);
    }
    if report.conical.windows(2).any(|w| w[0].passed != w[1].passed) {
        report.notes.push("conical checks disagree across epsilon".into());
    }
    Ok(())
}

/// Conflict-cone points of a weighted-homogeneous germ, pushed down by the
/// scaling action along `t_grid` and projected to the unit sphere.
/// Returns, for each `t`, the mean angle to the axis of the slice variable.
pub fn conflict_cone_angles(spec: &VarietySpec, slice_var: usize, t_grid: &[f64], params: &SeparationParams) -> Result<Vec<f64>> {
    let w = spec
        .weights
        .clone()
        .ok_or_else(|| GermError::NotWeightedHomogeneous(format!("`{}` carries no weights", spec.name)))?;
    let branches = branch_components(spec, slice_var, 1.0, params.slice_n, params.seed)?;
    if branches.len() < 2 {
        return Err(GermError::input("slice has a single branch"));
    }
    let a = branches[0].clone();
    let b: Vec<GermPoint> = branches[1..].iter().flatten().cloned().collect();
    let tube = TubeOptions { tube: params.tube, ..Default::default() };
    let link = sample_sphere_slice_with(spec, 1.0, params.link_n, params.seed.wrapping_add(1), &tube)?;
    let index = link.index();
    let spacing = spatial::median_nn_distance(&link.points, &index);
    let cs = conflict_set(&link, &a, &b, params.band_multiplier * spacing)?;
    let cloud = cone_down(&cs, &w, t_grid)?;
    let m = cs.link_points.len();
    let (re, im) = (2 * slice_var, 2 * slice_var + 1);
    Ok(cloud
        .points
        .chunks(m)
        .map(|block| {
            block
                .iter()
                .map(|p| {
                    let axis = p.coords[re].hypot(p.coords[im]);
                    let rest = (linalg::norm(&p.coords).powi(2) - axis * axis).max(0.0).sqrt();
                    rest.atan2(axis)
                })
                .sum::<f64>()
                / m as f64
        })
        .collect())
}

/// Random linear map of `R^n` with singular values in `[1, max_cond]`.
pub fn random_linear_map(n: usize, max_cond: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = substream(seed, 0);
    let mut gauss = || DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = gauss().qr().q();
    let v = gauss().qr().q();
    let mut rng = substream(seed, 1);
    let mut s: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..=max_cond)).collect();
    s[0] = 1.0;
    s[n - 1] = max_cond;
    u * DMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsConicalReport {
    pub epsilon: f64,
    /// Radius of the base disk.
    pub r: f64,
    /// Number of sampled points of `X_0 ∩ X^ε` (all five sheets).
    pub samples: usize,
    /// Observed maxima of `|∂x/∂y|` and `|∂x/∂z|`.
    pub derivative_max: (f64, f64),
    /// Closed-form bounds for the same quantities.
    pub derivative_bound: (f64, f64),
    pub lambda_fit: f64,
    /// Loops of `γ(s) = (c e^{2πis}, c)` needed before the lift closes.
    pub cover_degree: usize,
    /// Distinct roots over a base point.
    pub sheets: usize,
    pub passed: bool,
}

/// Required relative margin below the derivative bounds.
pub const BOUND_MARGIN: f64 = 0.01;

fn bs0_roots(y: Complex64, z: Complex64) -> Vec<Complex64> {
    let w = -(z.powu(15) + y.powu(7) * z);
    let (m, a) = w.to_polar();
    (0..5)
        .map(|k| Complex64::from_polar(m.powf(0.2), (a + 2.0 * std::f64::consts::PI * k as f64) / 5.0))
        .collect()
}

/// Samples `X_0 ∩ X^ε` over the disk of radius `r` in the `(y, z)` plane,
/// checks the implicit derivatives against their closed-form bounds and
/// counts sheets by monodromy.
pub fn bs_conical_check(epsilon: f64, r: f64, n: usize, seed: u64) -> Result<BsConicalReport> {
    if !(epsilon > 0.0) {
        return Err(GermError::input("epsilon must be positive"));
    }
    if epsilon >= 1.0 {
        return Err(GermError::EmptySlice(format!("the band ε|y| ≤ |z| ≤ |y|/ε is degenerate at ε = {}", epsilon)));
    }
    if !(r > 0.0 && r < epsilon / 2.0) {
        return Err(GermError::input(format!("disk radius must lie in (0, ε/2), got {}", r)));
    }
    if n == 0 {
        return Err(GermError::input("sample size must be positive"));
    }
    let mut rng = substream(seed, 0);
    let mut base = Vec::with_capacity(n);
    let mut tries = 0usize;
    while base.len() < n && tries < 200 * n {
        tries += 1;
        let b = random_ball_point(&mut rng, 4, r);
        let y = Complex64::new(b[0], b[1]);
        let z = Complex64::new(b[2], b[3]);
        if epsilon * y.norm() <= z.norm() && z.norm() <= y.norm() / epsilon && z.norm() > 0.0 {
            base.push((y, z));
        }
    }
    if base.is_empty() {
        return Err(GermError::EmptySlice(format!("no sample of X^ε found at ε = {}", epsilon)));
    }
    let mut dy_max = 0.0f64;
    let mut dz_max = 0.0f64;
    let mut lambda = 0.0f64;
    for &(y, z) in &base {
        let s = z.powu(14) + y.powu(7);
        let t = z.powu(14) * 15.0 + y.powu(7);
        lambda = lambda
            .max(t.norm() / z.norm().powi(4))
            .max(y.powu(7).norm() / s.norm())
            .max(t.norm() / s.norm());
        for x in bs0_roots(y, z) {
            let x4 = x.powu(4) * 5.0;
            dy_max = dy_max.max((y.powu(6) * z * 7.0 / x4).norm());
            dz_max = dz_max.max((t / x4).norm());
        }
    }
    let by = (7f64.powi(5) * lambda.powi(4) * epsilon.powi(3) / (5f64.powi(5) * 8.0)).powf(0.2);
    let bz = lambda / 5.0;
    if dy_max > by * (1.0 + BOUND_MARGIN) || dz_max > bz * (1.0 + BOUND_MARGIN) {
        return Err(GermError::BoundViolated(format!(
            "|dx/dy| = {:.4e} (bound {:.4e}), |dx/dz| = {:.4e} (bound {:.4e})",
            dy_max, by, dz_max, bz
        )));
    }
    let passed = dy_max <= by / (1.0 + BOUND_MARGIN) && dz_max <= bz / (1.0 + BOUND_MARGIN);
    let (y0, z0) = base[0];
    let roots = bs0_roots(y0, z0);
    let sheets = (0..roots.len())
        .filter(|&i| (0..i).all(|j| (roots[i] - roots[j]).norm() > 1e-12 * roots[i].norm().max(1e-300)))
        .count();
    let cover_degree = monodromy_loops(epsilon / 4.0, 10)?;
    Ok(BsConicalReport {
        epsilon,
        r,
        samples: base.len() * 5,
        derivative_max: (dy_max, dz_max),
        derivative_bound: (by, bz),
        lambda_fit: lambda,
        cover_degree,
        sheets,
        passed: passed && cover_degree == 5 && sheets == 5,
    })
}

/// Continues a root of `x^5 + z^15 + y^7 z` along `y = c e^{2πis}`, `z = c`
/// and returns the number of loops after which it comes back.
pub fn monodromy_loops(c: f64, max_loops: usize) -> Result<usize> {
    const STEPS: usize = 2000;
    let z = Complex64::new(c, 0.0);
    let f = |x: Complex64, y: Complex64| x.powu(5) + z.powu(15) + y.powu(7) * z;
    let x0 = bs0_roots(Complex64::new(c, 0.0), z)[0];
    let mut x = x0;
    for lap in 1..=max_loops {
        for k in 1..=STEPS {
            let s = k as f64 / STEPS as f64;
            let y = Complex64::from_polar(c, 2.0 * std::f64::consts::PI * s);
            for _ in 0..4 {
                x -= f(x, y) / (x.powu(4) * 5.0);
            }
        }
        if (x - x0).norm() < 1e-6 * x0.norm() {
            return Ok(lap);
        }
    }
    Err(GermError::NoConvergence { iterations: max_loops, residual: (x - x0).norm() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NEpsReport {
    pub eps_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// `measures[i][j]` at `r_grid[i]`, `eps_grid[j]`.
    pub measures: Vec<Vec<f64>>,
    pub stderrs: Vec<Vec<f64>>,
    pub r_exponent: f64,
    pub eps_exponent: f64,
    /// Smallest `K` with `measure ≤ K ε r^4` on the grid.
    pub k_fit: f64,
    pub r2: f64,
    pub linear_in_eps: bool,
    pub quartic_in_r: bool,
    pub inconclusive: bool,
}

/// Allowed relative error of the fitted exponents.
pub const EXPONENT_TOLERANCE: f64 = 0.15;

/// `N^ε = {|z| ≤ ε|y| or |y| ≤ ε|z|}`.
pub fn in_n_eps(p: &[f64], eps: f64) -> bool {
    let y = p[2].hypot(p[3]);
    let z = p[4].hypot(p[5]);
    z <= eps * y || y <= eps * z
}

/// `H^4(X_0 ∩ N^ε ∩ B(0, r))`.
pub fn n_eps_measure(eps: f64, r: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    if eps < 0.0 {
        return Err(GermError::input("epsilon must be nonnegative"));
    }
    wirtinger_measure(&VarietySpec::briancon_speder(0.0), r, n, seed, |p| in_n_eps(p, eps))
}

/// Measures `X_0 ∩ N^ε ∩ B(0, r)` on the grids and fits
/// `log H = log K + a log ε + b log r`.
pub fn n_eps_volume_check(eps_grid: &[f64], r_grid: &[f64], n: usize, seed: u64) -> Result<NEpsReport> {
    for (g, what) in [(eps_grid, "epsilon"), (r_grid, "radius")] {
        if g.len() < 2 || g.iter().any(|&v| !(v > 0.0)) {
            return Err(GermError::input(format!("{} grid needs at least two positive values", what)));
        }
        let (lo, hi) = g.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        if hi / lo < 10.0 - 1e-9 {
            return Err(GermError::input(format!("{} grid must span a decade", what)));
        }
    }
    let mut measures = Vec::new();
    let mut stderrs = Vec::new();
    for (i, &r) in r_grid.iter().enumerate() {
        let mut row = Vec::new();
        let mut row_e = Vec::new();
        for (j, &e) in eps_grid.iter().enumerate() {
            let (v, s) = n_eps_measure(e, r, n, seed.wrapping_add((i * eps_grid.len() + j) as u64))?;
            row.push(v);
            row_e.push(s);
        }
        measures.push(row);
        stderrs.push(row_e);
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, &r) in r_grid.iter().enumerate() {
        for (j, &e) in eps_grid.iter().enumerate() {
            if measures[i][j] > 0.0 {
                rows.push([1.0, e.ln(), r.ln()]);
                rhs.push(measures[i][j].ln());
            }
        }
    }
    if rows.len() < 4 {
        return Ok(NEpsReport {
            eps_grid: eps_grid.to_vec(),
            r_grid: r_grid.to_vec(),
            measures,
            stderrs,
            r_exponent: f64::NAN,
            eps_exponent: f64::NAN,
            k_fit: f64::NAN,
            r2: 0.0,
            linear_in_eps: false,
            quartic_in_r: false,
            inconclusive: true,
        });
    }
    let a = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let coef = linalg::min_norm_solve(&a, &b);
    let fitted = &a * &coef;
    let mean = b.mean();
    let ss_res = (&b - &fitted).norm_squared();
    let ss_tot = b.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    let mut k_fit = 0.0f64;
    for (i, &r) in r_grid.iter().enumerate() {
        for (j, &e) in eps_grid.iter().enumerate() {
            k_fit = k_fit.max(measures[i][j] / (e * r.powi(4)));
        }
    }
    Ok(NEpsReport {
        eps_grid: eps_grid.to_vec(),
        r_grid: r_grid.to_vec(),
        measures,
        stderrs,
        r_exponent: coef[2],
        eps_exponent: coef[1],
        k_fit,
        r2,
        linear_in_eps: (coef[1] - 1.0).abs() <= EXPONENT_TOLERANCE,
        quartic_in_r: (coef[2] - 4.0).abs() <= 4.0 * EXPONENT_TOLERANCE,
        inconclusive: false,
    })
}

/// Default grids of the `N^ε` check.
pub fn default_n_eps_grids() -> (Vec<f64>, Vec<f64>) {
    (geometric_grid(0.5, 0.05, 4), geometric_grid(1.0, 0.1, 4))
}

pub use separating::COMPONENT_FRACTION;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_resolve() {
        for name in ["a1", "a2", "a3", "brieskorn:2,4,5", "bs:1", "bs:0", "cone-control", "tangent:z:2,2,3", "subcone:z:2,2,3"] {
            catalog_scenario(name).unwrap();
        }
        assert!(catalog_scenario("nope").is_err());
        assert_eq!(catalog_scenario("brieskorn:2,3,7").unwrap().expected, Some(Verdict::NotFoundByThisConstruction));
        assert_eq!(catalog_scenario("a2").unwrap().expected, Some(Verdict::SeparatingSetFound));
    }

    #[test]
    fn config_round_trip() {
        let src = r#"
name = "custom"
pipeline = "separation-verdict"
seed = 4
expected = "SeparatingSetFound"
slice_var = "z"

[variety]
equations = ["x^2+y^2+z^3"]
weights = [3, 3, 2]
dim = 4

[budget]
link_n = 500
"#;
        let s = parse_scenario(src).unwrap();
        assert_eq!(s.slice_var, Some(2));
        assert_eq!(s.budget.link_n, 500);
        assert_eq!(s.budget.slice_n, Budget::default().slice_n);
        assert!(parse_scenario("name = 1").is_err());
        let bad = src.replace("link_n = 500", "link_n = 0");
        assert!(matches!(parse_scenario(&bad), Err(GermError::Config(_))));
    }

    #[test]
    fn conical_check_examples() {
        let r = bs_conical_check(0.3, 0.1, 5000, 1).unwrap();
        assert!(r.passed, "{:?}", r);
        assert_eq!(r.cover_degree, 5);
        assert_eq!(r.sheets, 5);
        assert!(matches!(bs_conical_check(1.0, 0.1, 100, 1), Err(GermError::EmptySlice(_))));
        assert!(bs_conical_check(0.3, 0.2, 100, 1).is_err());
    }

    #[test]
    fn cross_has_no_volume() {
        let (v, _) = n_eps_measure(0.0, 0.5, 2000, 1).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn random_map_condition() {
        let m = random_linear_map(6, 3.0, 9);
        let s = m.svd(false, false).singular_values;
        let (lo, hi) = s.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo <= 3.0 + 1e-9 && hi / lo > 2.9);
    }
}
