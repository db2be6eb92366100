//! Algebraic germs given by polynomial equations, Newton projection onto
//! their zero sets, and seeded samplers for links and balls.
//!
//! Complex coordinates are stored as interleaved real pairs
//! `(re z_0, im z_0, re z_1, ...)`; all geometry happens in `R^{2n}`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};
use crate::linalg::{self, kernel_frame, min_norm_solve};
use crate::measure::unit_ball_volume;
use crate::poly::{parse_polynomial, Polynomial};
use crate::spatial::{self, PointIndex};

/// Default residual tolerance for projected points.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Real,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightVector {
    pub w: Vec<u32>,
}

impl WeightVector {
    pub fn new(w: Vec<u32>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|&x| x == 0) {
            return Err(GermError::input(format!("weights must be positive integers, got {:?}", w)));
        }
        Ok(WeightVector { w })
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector { w: vec![1; n] }
    }

    /// `w1 >= w2 > w3`, the ordering required by the conflict-set construction.
    pub fn satisfies_ordering(&self) -> bool {
        self.w.len() == 3 && self.w[0] >= self.w[1] && self.w[1] > self.w[2]
    }

    pub fn lowest(&self) -> u32 {
        *self.w.iter().min().unwrap()
    }

    pub fn is_uniform(&self) -> bool {
        self.w.iter().all(|&x| x == self.w[0])
    }

    /// Per-variable exponents `w_j / w_min` of the scaling action.
    pub fn exponents(&self) -> Vec<f64> {
        let lo = self.lowest() as f64;
        self.w.iter().map(|&x| x as f64 / lo).collect()
    }
}

/// Residual rows and real Jacobian of a system of real equations in `R^N`.
pub trait EquationSystem: Sync {
    fn ambient_dim(&self) -> usize;
    fn evaluate(&self, p: &[f64]) -> (DVector<f64>, DMatrix<f64>);
}

/// A germ `(X, 0)` given by polynomial equations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarietySpec {
    pub name: String,
    pub field: Field,
    pub variables: Vec<String>,
    pub equations: Vec<Polynomial>,
    #[serde(default)]
    pub family_params: BTreeMap<String, f64>,
    #[serde(default)]
    pub weights: Option<WeightVector>,
    #[serde(default)]
    dim_override: Option<usize>,
    #[serde(skip)]
    dim_cache: OnceLock<usize>,
}

/// Declarative text form of a [`VarietySpec`] (TOML).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarietyConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_field")]
    pub field: Field,
    #[serde(default)]
    pub variables: Vec<String>,
    pub equations: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub weights: Option<Vec<u32>>,
    #[serde(default)]
    pub dim: Option<usize>,
}

fn default_field() -> Field {
    Field::Complex
}

impl VarietyConfig {
    pub fn build(&self) -> Result<VarietySpec> {
        let vars = if self.variables.is_empty() {
            infer_variables(&self.equations)
        } else {
            self.variables.clone()
        };
        let mut spec = VarietySpec::parse(&self.name, self.field, &vars, &self.equations, self.params.clone())?;
        if let Some(w) = &self.weights {
            spec = spec.with_weights(WeightVector::new(w.clone())?)?;
        }
        spec.dim_override = self.dim;
        Ok(spec)
    }
}

/// `x, y, z` unless the equations use `z1, z2, ...` or `x1, x2, ...`.
fn infer_variables(equations: &[String]) -> Vec<String> {
    let joined = equations.join(" ");
    for prefix in ["z", "x"] {
        let mut max = 0;
        for k in 1..=9 {
            if joined.contains(&format!("{}{}", prefix, k)) {
                max = k;
            }
        }
        if max > 0 {
            return (1..=max).map(|k| format!("{}{}", prefix, k)).collect();
        }
    }
    vec!["x".into(), "y".into(), "z".into()]
}

impl VarietySpec {
    pub fn from_polynomials(name: &str, field: Field, variables: Vec<String>, equations: Vec<Polynomial>) -> Result<Self> {
        if equations.is_empty() {
            return Err(GermError::input("a variety needs at least one equation"));
        }
        if let Some(e) = equations.iter().find(|e| e.nvars() != variables.len()) {
            return Err(GermError::input(format!(
                "equation uses {} variables but {} were declared",
                e.nvars(),
                variables.len()
            )));
        }
        Ok(VarietySpec {
            name: name.to_string(),
            field,
            variables,
            equations,
            family_params: BTreeMap::new(),
            weights: None,
            dim_override: None,
            dim_cache: OnceLock::new(),
        })
    }

    pub fn parse(
        name: &str,
        field: Field,
        variables: &[String],
        equations: &[String],
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let polys = equations
            .iter()
            .map(|s| parse_polynomial(s, variables, &params))
            .collect::<Result<Vec<_>>>()?;
        let mut spec = Self::from_polynomials(name, field, variables.to_vec(), polys)?;
        spec.family_params = params;
        Ok(spec)
    }

    pub fn from_config_str(src: &str) -> Result<Self> {
        let cfg: VarietyConfig = toml::from_str(src).map_err(|e| GermError::Config(e.to_string()))?;
        cfg.build()
    }

    /// Attaches weights after checking every equation is weighted homogeneous.
    pub fn with_weights(mut self, w: WeightVector) -> Result<Self> {
        if w.w.len() != self.variables.len() {
            return Err(GermError::input(format!(
                "{} weights for {} variables",
                w.w.len(),
                self.variables.len()
            )));
        }
        for (i, e) in self.equations.iter().enumerate() {
            if e.weighted_degree(&w.w).is_none() {
                return Err(GermError::NotWeightedHomogeneous(format!(
                    "equation {} of `{}` with weights {:?}",
                    i, self.name, w.w
                )));
            }
        }
        self.weights = Some(w);
        Ok(self)
    }

    pub fn with_dimension(mut self, dim: usize) -> Self {
        self.dim_override = Some(dim);
        self
    }

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Kleinian `A_k`: `x^2 + y^2 + z^{k+1}`.
    pub fn a_k(k: u32) -> Self {
        let eq = format!("x^2+y^2+z^{}", k + 1);
        let d = 2 * (k + 1);
        Self::parse(&format!("A{}", k), Field::Complex, &Self::vars(&["x", "y", "z"]), &[eq], BTreeMap::new())
            .and_then(|s| s.with_weights(WeightVector { w: vec![d / 2, d / 2, 2] }))
            .expect("A_k is weighted homogeneous")
            .with_dimension(4)
    }

    /// Brieskorn `X(p,q,r)`: `x^p + y^q + z^r`.
    pub fn brieskorn(p: u32, q: u32, r: u32) -> Self {
        let l = lcm(lcm(p, q), r);
        let eq = format!("x^{}+y^{}+z^{}", p, q, r);
        Self::parse(&format!("X({},{},{})", p, q, r), Field::Complex, &Self::vars(&["x", "y", "z"]), &[eq], BTreeMap::new())
            .and_then(|s| s.with_weights(WeightVector { w: vec![l / p, l / q, l / r] }))
            .expect("Brieskorn polynomials are weighted homogeneous")
            .with_dimension(4)
    }

    /// Brieskorn in `z1, z2, z3` naming, as used for tangent-cone examples.
    pub fn brieskorn_z(a1: u32, a2: u32, a3: u32) -> Self {
        let l = lcm(lcm(a1, a2), a3);
        let eq = format!("z1^{}+z2^{}+z3^{}", a1, a2, a3);
        Self::parse(&format!("X({},{},{})", a1, a2, a3), Field::Complex, &Self::vars(&["z1", "z2", "z3"]), &[eq], BTreeMap::new())
            .and_then(|s| s.with_weights(WeightVector { w: vec![l / a1, l / a2, l / a3] }))
            .expect("Brieskorn polynomials are weighted homogeneous")
            .with_dimension(4)
    }

    /// Briançon–Speder family `x^5 + z^15 + y^7 z + t x y^6`.
    pub fn briancon_speder(t: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("t".to_string(), t);
        Self::parse(
            &format!("BS(t={})", t),
            Field::Complex,
            &Self::vars(&["x", "y", "z"]),
            &["x^5+z^15+y^7*z+t*x*y^6".to_string()],
            params,
        )
        .and_then(|s| s.with_weights(WeightVector { w: vec![3, 2, 1] }))
        .expect("Briançon–Speder family is weighted homogeneous")
        .with_dimension(4)
    }

    /// The smooth germ `C^2 = {z = 0}` inside `C^3`.
    pub fn smooth_c2() -> Self {
        Self::parse("C2", Field::Complex, &Self::vars(&["x", "y", "z"]), &["z".to_string()], BTreeMap::new())
            .and_then(|s| s.with_weights(WeightVector::uniform(3)))
            .unwrap()
            .with_dimension(4)
    }

    /// The coordinate 2-plane `{x3 = x4 = 0}` in `R^4`.
    pub fn real_plane_r4() -> Self {
        Self::parse(
            "plane-R4",
            Field::Real,
            &Self::vars(&["x1", "x2", "x3", "x4"]),
            &["x3".to_string(), "x4".to_string()],
            BTreeMap::new(),
        )
        .and_then(|s| s.with_weights(WeightVector::uniform(4)))
        .unwrap()
        .with_dimension(2)
    }

    /// Union of the transverse 2-planes `{x1=x2=0}` and `{x3=x4=0}` in `R^4`.
    pub fn two_planes_r4() -> Self {
        Self::parse(
            "two-planes-R4",
            Field::Real,
            &Self::vars(&["x1", "x2", "x3", "x4"]),
            &["x1*x3", "x1*x4", "x2*x3", "x2*x4"].map(String::from),
            BTreeMap::new(),
        )
        .and_then(|s| s.with_weights(WeightVector::uniform(4)))
        .unwrap()
        .with_dimension(2)
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn ambient_real_dim(&self) -> usize {
        match self.field {
            Field::Complex => 2 * self.variables.len(),
            Field::Real => self.variables.len(),
        }
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.ambient_real_dim() {
            return Err(GermError::DimensionMismatch { expected: self.ambient_real_dim(), got: p.len() });
        }
        Ok(())
    }

    pub fn to_complex(&self, p: &[f64]) -> Vec<Complex64> {
        match self.field {
            Field::Complex => p.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
            Field::Real => p.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn from_complex(&self, z: &[Complex64]) -> Vec<f64> {
        match self.field {
            Field::Complex => z.iter().flat_map(|c| [c.re, c.im]).collect(),
            Field::Real => z.iter().map(|c| c.re).collect(),
        }
    }

    /// Value of every equation at `p`.
    pub fn eval(&self, p: &[f64]) -> Result<Vec<Complex64>> {
        self.check_dim(p)?;
        let z = self.to_complex(p);
        Ok(self.equations.iter().map(|e| e.eval(&z)).collect())
    }

    /// `max_i |f_i(p)|`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        let z = self.to_complex(p);
        self.equations.iter().map(|e| e.eval(&z).norm()).fold(0.0, f64::max)
    }

    /// Adds the linear equation `variables[var] = 0`.
    pub fn with_slice(&self, var: usize) -> Result<Self> {
        if var >= self.n_vars() {
            return Err(GermError::input(format!("slice variable {} out of range", var)));
        }
        let mut out = self.clone();
        out.equations.push(Polynomial::variable(self.n_vars(), var));
        out.name = format!("{}|{}=0", self.name, self.variables[var]);
        out.dim_override = None;
        out.dim_cache = OnceLock::new();
        out.weights = None;
        Ok(out)
    }

    /// The germ `(X - center) / scale`, with normalized coefficients.
    pub fn rescaled(&self, center: &[f64], scale: f64) -> Result<Self> {
        self.check_dim(center)?;
        let c = self.to_complex(center);
        let mut out = self.clone();
        out.equations = self.equations.iter().map(|e| e.affine_substitute(&c, scale).normalized()).collect();
        out.name = format!("{}@scale{:e}", self.name, scale);
        if center.iter().any(|&x| x != 0.0) {
            out.weights = None;
        }
        let dim = self.real_dimension();
        out.dim_cache = OnceLock::new();
        out.dim_override = Some(dim);
        Ok(out)
    }

    /// Tangent cone of a hypersurface (or of each equation separately):
    /// the lowest-degree homogeneous parts.
    pub fn tangent_cone(&self) -> Self {
        let mut out = self.clone();
        out.equations = self.equations.iter().map(|e| e.initial_form().normalized()).collect();
        out.name = format!("T0({})", self.name);
        out.weights = Some(WeightVector::uniform(self.n_vars()));
        out.dim_cache = OnceLock::new();
        out
    }

    /// Weighted degrees of the equations, if weights are attached.
    pub fn weighted_degrees(&self) -> Option<Vec<u32>> {
        let w = self.weights.as_ref()?;
        self.equations.iter().map(|e| e.weighted_degree(&w.w)).collect()
    }

    /// For a complex hypersurface, a variable `x_j` in which the equation is
    /// monic (a pure power of top degree), so that `X` is a finite branched
    /// cover of the other coordinates. The lowest such degree is preferred.
    pub fn sheet_variable(&self) -> Option<usize> {
        if self.field != Field::Complex || self.equations.len() != 1 {
            return None;
        }
        let eq = &self.equations[0];
        (0..self.n_vars())
            .filter_map(|j| eq.pure_power_degree(j).map(|d| (d, j)))
            .min()
            .map(|x| x.1)
    }

    pub fn scaling_action(&self) -> Option<ScalingAction> {
        self.weights.as_ref().map(|w| ScalingAction::from_weights(w, self.field))
    }

    /// Real dimension of the smooth part of `X`, estimated from the Jacobian
    /// rank at random smooth points unless given explicitly.
    pub fn real_dimension(&self) -> usize {
        if let Some(d) = self.dim_override {
            return d;
        }
        *self.dim_cache.get_or_init(|| self.estimate_dimension())
    }

    fn estimate_dimension(&self) -> usize {
        let n = self.ambient_real_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1ce);
        let mut best = 0;
        let mut found = 0;
        for _ in 0..200 {
            let p = random_sphere_point(&mut rng, n, 1.0);
            if let Ok((q, _, _)) = gauss_newton(self, &p, DEFAULT_TOL, DEFAULT_MAX_ITER) {
                if linalg::norm(&q) < 1e-3 {
                    continue;
                }
                let (_, j) = self.evaluate(&q);
                best = best.max(linalg::rank(&j, 1e-8));
                found += 1;
                if found >= 8 {
                    break;
                }
            }
        }
        n - best
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

impl EquationSystem for VarietySpec {
    fn ambient_dim(&self) -> usize {
        self.ambient_real_dim()
    }

    fn evaluate(&self, p: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n_vars();
        let big_n = self.ambient_real_dim();
        let z = self.to_complex(p);
        let mut rows: Vec<(f64, Vec<f64>)> = Vec::with_capacity(2 * self.equations.len());
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        for e in &self.equations {
            let v = e.eval_with_grad(&z, &mut grad);
            match self.field {
                Field::Complex => {
                    // Cauchy–Riemann: d/da = f', d/db = i f'
                    let mut re = vec![0.0; big_n];
                    let mut im = vec![0.0; big_n];
                    for j in 0..n {
                        re[2 * j] = grad[j].re;
                        re[2 * j + 1] = -grad[j].im;
                        im[2 * j] = grad[j].im;
                        im[2 * j + 1] = grad[j].re;
                    }
                    rows.push((v.re, re));
                    rows.push((v.im, im));
                }
                Field::Real => {
                    rows.push((v.re, grad.iter().map(|g| g.re).collect()));
                    if e.has_complex_coefficients() {
                        rows.push((v.im, grad.iter().map(|g| g.im).collect()));
                    }
                }
            }
        }
        let f = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.0));
        let j = DMatrix::from_fn(rows.len(), big_n, |i, k| rows[i].1[k]);
        (f, j)
    }
}

/// `S` intersected with the sphere of radius `radius`.
pub struct OnSphere<'a, S: EquationSystem + ?Sized> {
    pub base: &'a S,
    pub radius: f64,
}

impl<'a, S: EquationSystem + ?Sized> EquationSystem for OnSphere<'a, S> {
    fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    fn evaluate(&self, p: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (f, j) = self.base.evaluate(p);
        let m = f.len();
        let n = p.len();
        let mut f2 = DVector::zeros(m + 1);
        f2.rows_mut(0, m).copy_from(&f);
        let r2: f64 = p.iter().map(|x| x * x).sum();
        f2[m] = (r2 - self.radius * self.radius) / (2.0 * self.radius);
        let mut j2 = DMatrix::zeros(m + 1, n);
        j2.view_mut((0, 0), (m, n)).copy_from(&j);
        for k in 0..n {
            j2[(m, k)] = p[k] / self.radius;
        }
        (f2, j2)
    }
}

/// Value of every equation of `spec` at the real point `p`.
pub fn eval(spec: &VarietySpec, p: &[f64]) -> Result<Vec<Complex64>> {
    spec.eval(p)
}

// ---------------------------------------------------------------------------
// Scaling action

/// The weighted action `t . p = (t^{e_1} p_1, ...)`, `e_j = w_j / w_min`,
/// expanded to real coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingAction {
    pub exponents: Vec<f64>,
}

impl ScalingAction {
    pub fn from_weights(w: &WeightVector, field: Field) -> Self {
        let e = w.exponents();
        let exponents = match field {
            Field::Complex => e.iter().flat_map(|&x| [x, x]).collect(),
            Field::Real => e,
        };
        ScalingAction { exponents }
    }

    pub fn radial(n: usize) -> Self {
        ScalingAction { exponents: vec![1.0; n] }
    }

    pub fn is_radial(&self) -> bool {
        self.exponents.iter().all(|&e| e == 1.0)
    }

    pub fn apply(&self, p: &[f64], t: f64) -> Vec<f64> {
        p.iter().zip(&self.exponents).map(|(x, e)| t.powf(*e) * x).collect()
    }

    /// `d/dt (t . p)`.
    pub fn velocity(&self, p: &[f64], t: f64) -> Vec<f64> {
        p.iter().zip(&self.exponents).map(|(x, e)| e * t.powf(e - 1.0) * x).collect()
    }

    /// Applies the linear part `diag(t^{e_j})` to a tangent vector.
    pub fn push_vector(&self, v: &[f64], t: f64) -> Vec<f64> {
        self.apply(v, t)
    }

    /// Unique `t > 0` with `|t . p| = target`, for `p != 0`.
    pub fn time_to_radius(&self, p: &[f64], target: f64) -> f64 {
        let norm_at = |t: f64| linalg::norm(&self.apply(p, t));
        if norm_at(1.0) == 0.0 {
            return f64::INFINITY;
        }
        let mut lo = 1.0;
        let mut hi = 1.0;
        while norm_at(hi) < target {
            hi *= 2.0;
            lo = hi * 0.5;
        }
        while norm_at(lo) >= target {
            hi = lo;
            lo *= 0.5;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `T(p, t) = (t^{w1/w3} x, t^{w2/w3} y, t z)` for interleaved complex
/// coordinates (or one real coordinate per weight).
pub fn weighted_scale(p: &[f64], w: &WeightVector, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(GermError::input(format!("scaling parameter must be positive, got {}", t)));
    }
    let field = if p.len() == 2 * w.w.len() {
        Field::Complex
    } else if p.len() == w.w.len() {
        Field::Real
    } else {
        return Err(GermError::DimensionMismatch { expected: 2 * w.w.len(), got: p.len() });
    };
    Ok(ScalingAction::from_weights(w, field).apply(p, t))
}

// ---------------------------------------------------------------------------
// Points and clouds

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermPoint {
    pub coords: Vec<f64>,
    pub radius: f64,
    pub residual: f64,
}

impl GermPoint {
    pub fn new(coords: Vec<f64>, residual: f64) -> Self {
        let radius = linalg::norm(&coords);
        GermPoint { coords, radius, residual }
    }
}

impl AsRef<[f64]> for GermPoint {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingLaw {
    /// Uniform-on-sphere proposals accepted within a thin tube around the link.
    SphereSlice,
    /// Uniform-in-ball proposals accepted within a thin tube around `X`.
    BallUniform,
    /// Points restricted to a semialgebraic region (parametrized sampling).
    RegionRestricted,
    /// Projected proposals without acceptance; coverage only, no weights.
    ProjectedCoverage,
    /// Images of another cloud under the scaling action or a linear map.
    Derived,
    /// Explicit parametrization with known weights.
    Parametric,
    /// Uniform base proposals lifted to every sheet of a branched cover.
    BranchedCover,
}

/// A sample of points on a set, optionally carrying per-point measure
/// weights and orthonormal tangent frames.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    pub points: Vec<GermPoint>,
    pub spec: Option<Arc<VarietySpec>>,
    pub radius_band: [f64; 2],
    pub seed: u64,
    pub sampling_law: SamplingLaw,
    /// Dimension of the sampled set.
    pub intrinsic_dim: usize,
    /// Hausdorff measure carried by each point (`intrinsic_dim`-dimensional).
    pub weights: Option<Vec<f64>>,
    /// Tangent frames (`ambient x intrinsic_dim`, orthonormal columns).
    pub frames: Option<Vec<DMatrix<f64>>>,
}

impl SampleCloud {
    pub fn from_coords(coords: Vec<Vec<f64>>, intrinsic_dim: usize, law: SamplingLaw) -> Self {
        let points: Vec<GermPoint> = coords.into_iter().map(|c| GermPoint::new(c, 0.0)).collect();
        let band = radius_band(&points);
        SampleCloud {
            points,
            spec: None,
            radius_band: band,
            seed: 0,
            sampling_law: law,
            intrinsic_dim,
            weights: None,
            frames: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.points.first().map(|p| p.coords.len()).unwrap_or(0)
    }

    pub fn coords(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.coords.as_slice()).collect()
    }

    pub fn index(&self) -> PointIndex {
        PointIndex::new(&self.points)
    }

    pub fn total_weight(&self) -> Option<f64> {
        self.weights.as_ref().map(|w| w.iter().sum())
    }

    /// Keeps the points for which `keep` holds (weights and frames follow).
    pub fn filter(&self, mut keep: impl FnMut(usize, &GermPoint) -> bool) -> SampleCloud {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i, &self.points[i])).collect();
        self.select(&idx)
    }

    pub fn select(&self, idx: &[usize]) -> SampleCloud {
        let points: Vec<GermPoint> = idx.iter().map(|&i| self.points[i].clone()).collect();
        SampleCloud {
            radius_band: radius_band(&points),
            points,
            spec: self.spec.clone(),
            seed: self.seed,
            sampling_law: self.sampling_law,
            intrinsic_dim: self.intrinsic_dim,
            weights: self.weights.as_ref().map(|w| idx.iter().map(|&i| w[i]).collect()),
            frames: self.frames.as_ref().map(|f| idx.iter().map(|&i| f[i].clone()).collect()),
        }
    }

    /// Applies a linear map to every point; weights are multiplied by the
    /// Jacobian of the map on the tangent frames, frames are pushed forward.
    pub fn map_linear(&self, m: &DMatrix<f64>) -> SampleCloud {
        let mut out = self.clone();
        let mut new_frames = Vec::new();
        for (i, p) in out.points.iter_mut().enumerate() {
            let v = m * DVector::from_column_slice(&p.coords);
            *p = GermPoint::new(v.as_slice().to_vec(), p.residual);
            if let (Some(frames), Some(w)) = (&self.frames, out.weights.as_mut()) {
                let img = m * &frames[i];
                w[i] *= linalg::gram_volume(&img);
                let cols: Vec<DVector<f64>> = img.column_iter().map(|c| c.into_owned()).collect();
                let ortho = linalg::orthonormalize(&cols);
                new_frames.push(DMatrix::from_columns(&ortho));
            }
        }
        if self.frames.is_some() && self.weights.is_some() {
            out.frames = Some(new_frames);
        }
        out.spec = None;
        out.radius_band = radius_band(&out.points);
        out
    }

    /// Writes one CSV row per point: coordinates, radius, residual (and weight).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let dim = self.ambient_dim();
        let mut header: Vec<String> = (0..dim).map(|i| format!("c{}", i)).collect();
        header.push("radius".into());
        header.push("residual".into());
        if self.weights.is_some() {
            header.push("weight".into());
        }
        wr.write_record(&header).map_err(|e| GermError::Io(e.to_string()))?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row: Vec<String> = p.coords.iter().map(|x| format!("{:.17e}", x)).collect();
            row.push(format!("{:.17e}", p.radius));
            row.push(format!("{:.17e}", p.residual));
            if let Some(w) = &self.weights {
                row.push(format!("{:.17e}", w[i]));
            }
            wr.write_record(&row).map_err(|e| GermError::Io(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Columnar little-endian binary: magic, counts, then one column per
    /// coordinate followed by radius, residual and (optionally) weight.
    pub fn write_columnar<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.len() as u64;
        let dim = self.ambient_dim() as u64;
        w.write_all(COLUMNAR_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        w.write_all(&dim.to_le_bytes())?;
        w.write_all(&(self.intrinsic_dim as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&[self.weights.is_some() as u8])?;
        for k in 0..dim as usize {
            for p in &self.points {
                w.write_all(&p.coords[k].to_le_bytes())?;
            }
        }
        for p in &self.points {
            w.write_all(&p.radius.to_le_bytes())?;
        }
        for p in &self.points {
            w.write_all(&p.residual.to_le_bytes())?;
        }
        if let Some(ws) = &self.weights {
            for x in ws {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_columnar<R: Read>(mut r: R) -> Result<SampleCloud> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != COLUMNAR_MAGIC {
            return Err(GermError::Io("not a germlab cloud file".into()));
        }
        let mut u = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u)?;
            Ok(u64::from_le_bytes(u))
        };
        let n = read_u64(&mut r)? as usize;
        let dim = read_u64(&mut r)? as usize;
        let kdim = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let read_col = |r: &mut R| -> Result<Vec<f64>> {
            let mut col = vec![0.0; n];
            let mut b = [0u8; 8];
            for x in col.iter_mut() {
                r.read_exact(&mut b)?;
                *x = f64::from_le_bytes(b);
            }
            Ok(col)
        };
        let cols: Vec<Vec<f64>> = (0..dim).map(|_| read_col(&mut r)).collect::<Result<_>>()?;
        let radius = read_col(&mut r)?;
        let residual = read_col(&mut r)?;
        let weights = if flag[0] == 1 { Some(read_col(&mut r)?) } else { None };
        let points: Vec<GermPoint> = (0..n)
            .map(|i| GermPoint {
                coords: (0..dim).map(|k| cols[k][i]).collect(),
                radius: radius[i],
                residual: residual[i],
            })
            .collect();
        Ok(SampleCloud {
            radius_band: radius_band(&points),
            points,
            spec: None,
            seed,
            sampling_law: SamplingLaw::Derived,
            intrinsic_dim: kdim,
            weights,
            frames: None,
        })
    }
}

const COLUMNAR_MAGIC: &[u8; 8] = b"GLCLOUD1";

fn radius_band(points: &[GermPoint]) -> [f64; 2] {
    if points.is_empty() {
        return [0.0, 0.0];
    }
    let lo = points.iter().map(|p| p.radius).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.radius).fold(0.0, f64::max);
    [lo, hi]
}

// ---------------------------------------------------------------------------
// Projection

/// Gauss–Newton with minimum-norm steps. Returns the point, the summed step
/// lengths (a bound on the displacement) and the final max-row residual.
pub fn gauss_newton<S: EquationSystem + ?Sized>(
    sys: &S,
    p0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, f64)> {
    let mut p = DVector::from_column_slice(p0);
    let scale = 1.0 + linalg::norm(p0);
    let mut steps = 0.0;
    let mut res = f64::INFINITY;
    for _ in 0..max_iter {
        let (f, j) = sys.evaluate(p.as_slice());
        res = f.amax();
        if res <= tol {
            return Ok((p.as_slice().to_vec(), steps, res));
        }
        let delta = min_norm_solve(&j, &f);
        let dn = delta.norm();
        if !dn.is_finite() || dn > 10.0 * scale || dn == 0.0 {
            break;
        }
        p -= delta;
        steps += dn;
    }
    let (f, _) = sys.evaluate(p.as_slice());
    let last = f.amax();
    if last <= tol {
        return Ok((p.as_slice().to_vec(), steps, last));
    }
    Err(GermError::NoConvergence { iterations: max_iter, residual: res.min(last) })
}

/// Closest point of the zero set to `p` (locally): Gauss–Newton followed by
/// tangential corrections until `p - q` is normal at `q`.
pub fn nearest_point<S: EquationSystem + ?Sized>(sys: &S, p: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let (mut q, _, mut res) = gauss_newton(sys, p, tol, max_iter)?;
    let scale = 1.0 + linalg::norm(p);
    for _ in 0..8 {
        let (_, j) = sys.evaluate(&q);
        let v = DVector::from_iterator(p.len(), p.iter().zip(&q).map(|(a, b)| a - b));
        let normal = min_norm_solve(&j, &(&j * &v));
        let tangential = &v - normal;
        if tangential.norm() < 1e-11 * scale {
            break;
        }
        let moved: Vec<f64> = q.iter().zip(tangential.iter()).map(|(a, b)| a + b).collect();
        let (q2, _, r2) = gauss_newton(sys, &moved, tol, max_iter)?;
        q = q2;
        res = r2;
    }
    Ok((q, res))
}

/// Orthonormal tangent frame of dimension `dim` at a smooth point.
pub fn tangent_frame<S: EquationSystem + ?Sized>(sys: &S, q: &[f64], dim: usize) -> DMatrix<f64> {
    let (_, j) = sys.evaluate(q);
    kernel_frame(&j, dim)
}

/// Result of [`project_to_variety`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub point: GermPoint,
    /// Sum of Newton step lengths; bounds `|point - p0|`.
    pub step_sum: f64,
}

/// Newton projection of `p0` onto `X`.
pub fn project_to_variety(spec: &VarietySpec, p0: &[f64], tol: f64, max_iter: usize) -> Result<ProjectedPoint> {
    spec.check_dim(p0)?;
    if !(tol > 0.0) {
        return Err(GermError::input("projection tolerance must be positive"));
    }
    let r0 = linalg::norm(p0);
    if r0 <= tol {
        return Err(GermError::NearSingularPoint { radius: r0 });
    }
    let (q, steps, _) = gauss_newton(spec, p0, tol, max_iter)?;
    let rq = linalg::norm(&q);
    if rq < 1e-6 * r0 {
        return Err(GermError::NearSingularPoint { radius: rq });
    }
    let residual = spec.residual(&q);
    Ok(ProjectedPoint { point: GermPoint::new(q, residual), step_sum: steps })
}

// ---------------------------------------------------------------------------
// Sampling

pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_sphere_point<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = linalg::norm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|x| r * x / norm).collect();
        }
    }
}

pub fn random_ball_point<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> Vec<f64> {
    let u: f64 = rng.gen();
    random_sphere_point(rng, n, r * u.powf(1.0 / n as f64))
}

/// (k-1)-volume of the sphere of radius `r` in `R^k`.
pub fn sphere_area(k: usize, r: f64) -> f64 {
    k as f64 * unit_ball_volume(k as i64).unwrap() * r.powi(k as i32 - 1)
}

/// Volume of the set of points of `S^c(r)` within chord distance `h` of a point.
pub fn cap_volume(c: usize, h: f64, r: f64) -> f64 {
    if c == 0 {
        return 1.0;
    }
    let phi = 2.0 * (h / (2.0 * r)).min(1.0).asin();
    let m = 400;
    let dx = phi / m as f64;
    let f = |x: f64| x.sin().powi(c as i32 - 1);
    let mut s = f(0.0) + f(phi);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * dx);
    }
    let integral = s * dx / 3.0;
    sphere_area(c, 1.0) * r.powi(c as i32) * integral
}

/// Tube-acceptance options for the weighted samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeOptions {
    /// Tube radius relative to the working radius.
    pub tube: f64,
    /// Linearized-distance prefilter, in tube radii.
    pub prefilter: f64,
    pub chunk: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub max_proposals: u64,
}

impl Default for TubeOptions {
    fn default() -> Self {
        TubeOptions {
            tube: 0.05,
            prefilter: 3.0,
            chunk: 4096,
            tol: DEFAULT_TOL,
            max_iter: 60,
            max_proposals: 200_000_000,
        }
    }
}

struct Accepted {
    index: u64,
    coords: Vec<f64>,
    residual: f64,
}

/// Runs seeded proposal chunks in order until `n` proposals are accepted.
/// Returns the accepted points and the number of proposals consumed.
fn accept_until<P, A>(n: usize, seed: u64, opts: &TubeOptions, propose: P, accept: A) -> Result<(Vec<Accepted>, u64)>
where
    P: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
    A: Fn(&[f64]) -> Option<(Vec<f64>, f64)> + Sync,
{
    const WAVE: u64 = 4;
    let chunk = opts.chunk as u64;
    let mut accepted: Vec<Accepted> = Vec::with_capacity(n);
    let mut next_chunk = 0u64;
    while accepted.len() < n {
        if next_chunk * chunk >= opts.max_proposals {
            if accepted.is_empty() {
                return Err(GermError::EmptySlice(format!("no proposal accepted in {} draws", next_chunk * chunk)));
            }
            return Err(GermError::NoConvergence { iterations: (next_chunk * chunk) as usize, residual: f64::NAN });
        }
        let wave: Vec<Vec<Accepted>> = (next_chunk..next_chunk + WAVE)
            .into_par_iter()
            .map(|c| {
                let mut rng = substream(seed, c);
                let mut out = Vec::new();
                for k in 0..chunk {
                    let p = propose(&mut rng);
                    if let Some((q, res)) = accept(&p) {
                        out.push(Accepted { index: c * chunk + k, coords: q, residual: res });
                    }
                }
                out
            })
            .collect();
        next_chunk += WAVE;
        for a in wave.into_iter().flatten() {
            if accepted.len() < n {
                accepted.push(a);
            }
        }
    }
    let used = accepted.last().map(|a| a.index + 1).unwrap_or(0);
    Ok((accepted, used))
}

/// `|J^+ F|`, the first Newton step length; cheap normal equations when
/// `J J^T` is well conditioned.
fn linearized_distance<S: EquationSystem + ?Sized>(sys: &S, p: &[f64]) -> f64 {
    let (f, j) = sys.evaluate(p);
    let jjt = &j * j.transpose();
    if let Some(ch) = jjt.clone().cholesky() {
        let l = ch.l();
        let pivots = l.diagonal();
        let lo = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pivots.iter().cloned().fold(0.0, f64::max);
        if lo > 1e-5 * hi {
            let d2 = f.dot(&ch.solve(&f));
            if d2.is_finite() && d2 >= 0.0 {
                return d2.sqrt();
            }
        }
    }
    min_norm_solve(&j, &f).norm()
}

/// Weighted sample of the link `X ∩ S(r)`: exactly `n` points, each carrying
/// its share of the (d-1)-dimensional Hausdorff measure of the link and a
/// tangent frame of the link.
pub fn sample_sphere_slice(spec: &VarietySpec, r: f64, n: usize, seed: u64) -> Result<SampleCloud> {
    sample_sphere_slice_with(spec, r, n, seed, &TubeOptions::default())
}

pub fn sample_sphere_slice_with(spec: &VarietySpec, r: f64, n: usize, seed: u64, opts: &TubeOptions) -> Result<SampleCloud> {
    if !(r > 0.0) {
        return Err(GermError::input("link radius must be positive"));
    }
    if n == 0 {
        return Err(GermError::input("sample size must be at least 1"));
    }
    let big_n = spec.ambient_real_dim();
    let d = spec.real_dimension();
    if d == 0 {
        return Err(GermError::EmptySlice(format!("`{}` is zero-dimensional", spec.name)));
    }
    let codim = big_n - d;
    let h = opts.tube * r;
    let link = OnSphere { base: spec, radius: r };
    let (acc, used) = accept_until(
        n,
        seed,
        opts,
        |rng| random_sphere_point(rng, big_n, r),
        |p| {
            if codim > 0 && linearized_distance(spec, p) > opts.prefilter * h {
                return None;
            }
            let (q, _) = nearest_point(&link, p, opts.tol * r.max(1e-300).min(1.0), opts.max_iter).ok()?;
            let res = spec.residual(&q);
            if linalg::dist(p, &q) < h && (linalg::norm(&q) - r).abs() <= 1e-9 * r && res <= opts.tol.max(1e-14) {
                Some((q, res))
            } else {
                None
            }
        },
    )?;
    let unit = sphere_area(big_n, r) / cap_volume(codim, h, r);
    let frames: Vec<DMatrix<f64>> = acc.iter().map(|a| tangent_frame(&link, &a.coords, d - 1)).collect();
    let points: Vec<GermPoint> = acc.into_iter().map(|a| GermPoint::new(a.coords, a.residual)).collect();
    Ok(SampleCloud {
        radius_band: [r, r],
        points,
        spec: Some(Arc::new(spec.clone())),
        seed,
        sampling_law: SamplingLaw::SphereSlice,
        intrinsic_dim: d - 1,
        weights: Some(vec![unit / used as f64; n]),
        frames: Some(frames),
    })
}

/// Weighted sample of `X ∩ B(0, R)` (points with `|q| < 1e-6 R` rejected).
pub fn sample_ball(spec: &VarietySpec, big_r: f64, n: usize, seed: u64, opts: &TubeOptions) -> Result<SampleCloud> {
    if !(big_r > 0.0) || n == 0 {
        return Err(GermError::input("ball radius must be positive and n >= 1"));
    }
    let big_n = spec.ambient_real_dim();
    let d = spec.real_dimension();
    let codim = big_n - d;
    let h = opts.tube * big_r;
    let outer = big_r + h;
    let (acc, used) = accept_until(
        n,
        seed,
        opts,
        |rng| random_ball_point(rng, big_n, outer),
        |p| {
            if codim > 0 && linearized_distance(spec, p) > opts.prefilter * h {
                return None;
            }
            let (q, _) = nearest_point(spec, p, opts.tol, opts.max_iter).ok()?;
            let rq = linalg::norm(&q);
            let res = spec.residual(&q);
            if linalg::dist(p, &q) < h && rq <= big_r && rq >= 1e-6 * big_r && res <= opts.tol.max(1e-14) {
                Some((q, res))
            } else {
                None
            }
        },
    )?;
    let normal_disk = unit_ball_volume(codim as i64).unwrap() * h.powi(codim as i32);
    let unit = unit_ball_volume(big_n as i64).unwrap() * outer.powi(big_n as i32) / normal_disk;
    let frames: Vec<DMatrix<f64>> = acc.iter().map(|a| tangent_frame(spec, &a.coords, d)).collect();
    let points: Vec<GermPoint> = acc.into_iter().map(|a| GermPoint::new(a.coords, a.residual)).collect();
    Ok(SampleCloud {
        radius_band: [0.0, big_r],
        points,
        spec: Some(Arc::new(spec.clone())),
        seed,
        sampling_law: SamplingLaw::BallUniform,
        intrinsic_dim: d,
        weights: Some(vec![unit / used as f64; n]),
        frames: Some(frames),
    })
}

/// Unweighted coverage sample of `sys ∩ S(r)`: uniform directions projected
/// onto the zero set. Used where only the shape matters (clustering).
pub fn sample_projected<S: EquationSystem + ?Sized>(sys: &S, r: f64, n: usize, seed: u64) -> Result<Vec<GermPoint>> {
    if n == 0 {
        return Err(GermError::input("sample size must be at least 1"));
    }
    let big_n = sys.ambient_dim();
    let link = OnSphere { base: sys, radius: r };
    let chunk = 256u64;
    let mut out = Vec::with_capacity(n);
    let mut c = 0u64;
    while out.len() < n {
        if c * chunk > (n as u64) * 200 + 10_000 {
            if out.is_empty() {
                return Err(GermError::EmptySlice("no projected proposal converged".into()));
            }
            break;
        }
        let mut rng = substream(seed, c);
        for _ in 0..chunk {
            let p = random_sphere_point(&mut rng, big_n, r);
            if let Ok((q, _, res)) = gauss_newton(&link, &p, DEFAULT_TOL, 300) {
                if (linalg::norm(&q) - r).abs() <= 1e-9 * r && out.len() < n {
                    out.push(GermPoint::new(q, res));
                }
            }
        }
        c += 1;
    }
    Ok(out)
}

/// Weighted sample of `X ∩ B(0, eps)` (or of `L(X) ∩ B(0, eps)` for a linear
/// map `L`) built from the branched-cover structure of a monic hypersurface:
/// uniform proposals in the ball of the base coordinates, every sheet over a
/// proposal kept. Coordinates are rescaled by `1 / eps`.
#[derive(Debug, Clone)]
pub struct SheetSample {
    pub cloud: SampleCloud,
    /// Proposal that produced each point.
    pub proposal: Vec<usize>,
    pub n_proposals: usize,
    pub eps: f64,
}

impl SheetSample {
    /// Measure (at the original scale) of the points selected by `keep`,
    /// with the i.i.d. standard error over proposals.
    pub fn measure_where(&self, keep: impl Fn(usize, &GermPoint) -> bool) -> (f64, f64) {
        self.integrate(|i, p| if keep(i, p) { 1.0 } else { 0.0 }, self.cloud.intrinsic_dim)
    }

    /// Integral of `f` against the weights, rescaled by `eps^scale_dim`.
    pub fn integrate(&self, f: impl Fn(usize, &GermPoint) -> f64, scale_dim: usize) -> (f64, f64) {
        let mut per = vec![0.0; self.n_proposals];
        let w = self.cloud.weights.as_ref().expect("sheet samples are weighted");
        for (i, p) in self.cloud.points.iter().enumerate() {
            let v = f(i, p);
            if v != 0.0 {
                per[self.proposal[i]] += w[i] * v;
            }
        }
        let n = self.n_proposals as f64;
        let total: f64 = per.iter().sum();
        let mean = total / n;
        let var = per.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        let scale = self.eps.powi(scale_dim as i32);
        (total * scale, (var * n).sqrt() * scale)
    }

    pub fn measure(&self) -> (f64, f64) {
        self.measure_where(|_, _| true)
    }
}

fn complex_to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn sample_sheets(spec: &VarietySpec, eps: f64, n: usize, seed: u64, post: Option<&DMatrix<f64>>) -> Result<SheetSample> {
    let j = spec
        .sheet_variable()
        .ok_or_else(|| GermError::input(format!("`{}` is not a monic complex hypersurface", spec.name)))?;
    if !(eps > 0.0) || n < 2 {
        return Err(GermError::input("sheet sampling needs eps > 0 and n >= 2"));
    }
    let nv = spec.n_vars();
    let big_n = 2 * nv;
    if let Some(l) = post {
        if l.nrows() != big_n || l.ncols() != big_n {
            return Err(GermError::DimensionMismatch { expected: big_n, got: l.nrows() });
        }
    }
    let local = spec.rescaled(&vec![0.0; big_n], eps)?;
    let eq = local.equations[0].clone();
    let reach = match post {
        Some(l) => 1.0 / l.clone().svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min),
        None => 1.0,
    };
    let base_dim = 2 * (nv - 1);
    let domain = unit_ball_volume(base_dim as i64)? * reach.powi(base_dim as i32);
    let mut rng = substream(seed, 0);
    let proposals: Vec<Vec<f64>> = (0..n).map(|_| random_ball_point(&mut rng, base_dim, reach)).collect();
    let found: Vec<Vec<(Vec<f64>, f64, DMatrix<f64>)>> = proposals
        .par_iter()
        .map(|b| {
            let mut z = vec![Complex64::new(0.0, 0.0); nv];
            let mut it = b.chunks(2);
            for (k, zk) in z.iter_mut().enumerate() {
                if k != j {
                    let c = it.next().unwrap();
                    *zk = Complex64::new(c[0], c[1]);
                }
            }
            let coeffs = eq.univariate_coefficients(j, &z);
            let mut out = Vec::new();
            let mut grad = vec![Complex64::new(0.0, 0.0); nv];
            for root in crate::poly::complex_roots(&coeffs) {
                z[j] = root;
                eq.eval_with_grad(&z, &mut grad);
                let fj = grad[j];
                if fj.norm() == 0.0 {
                    continue;
                }
                let p = complex_to_real(&z);
                let mut cols = Vec::with_capacity(base_dim);
                for k in (0..nv).filter(|&k| k != j) {
                    let mut v = vec![Complex64::new(0.0, 0.0); nv];
                    v[k] = Complex64::new(1.0, 0.0);
                    v[j] = -grad[k] / fj;
                    let iv: Vec<Complex64> = v.iter().map(|c| c * Complex64::new(0.0, 1.0)).collect();
                    cols.push(DVector::from_vec(complex_to_real(&v)));
                    cols.push(DVector::from_vec(complex_to_real(&iv)));
                }
                let mut g = DMatrix::from_columns(&cols);
                let mut y = p;
                if let Some(l) = post {
                    g = l * g;
                    y = (l * DVector::from_column_slice(&y)).as_slice().to_vec();
                }
                let r = linalg::norm(&y);
                if r > 1.0 || r == 0.0 {
                    continue;
                }
                let factor = linalg::gram_volume(&g);
                let frame = DMatrix::from_columns(&linalg::orthonormalize(
                    &g.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>(),
                ));
                out.push((y, domain * factor / n as f64, frame));
            }
            out
        })
        .collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut frames = Vec::new();
    let mut proposal = Vec::new();
    for (s, list) in found.into_iter().enumerate() {
        for (y, w, f) in list {
            points.push(GermPoint::new(y, 0.0));
            weights.push(w);
            frames.push(f);
            proposal.push(s);
        }
    }
    let cloud = SampleCloud {
        radius_band: [0.0, 1.0],
        points,
        spec: Some(Arc::new(local)),
        seed,
        sampling_law: SamplingLaw::BranchedCover,
        intrinsic_dim: base_dim,
        weights: Some(weights),
        frames: Some(frames),
    };
    Ok(SheetSample { cloud, proposal, n_proposals: n, eps })
}

/// `2(n-1)`-measure of `{p in X ∩ B(0, r) : keep(p)}` for a complex
/// hypersurface in `C^n`, by Wirtinger's formula: the volume is the sum over
/// the coordinate hyperplanes of the projected area counted with
/// multiplicity. Each multiplicity is a root count, so no Jacobian enters.
///
/// Returns `(value, stderr)`.
pub fn wirtinger_measure(spec: &VarietySpec, r: f64, n: usize, seed: u64, keep: impl Fn(&[f64]) -> bool + Sync) -> Result<(f64, f64)> {
    if spec.field != Field::Complex || spec.equations.len() != 1 {
        return Err(GermError::input("Wirtinger volumes need a complex hypersurface"));
    }
    if !(r > 0.0) || n < 2 {
        return Err(GermError::input("need r > 0 and n >= 2"));
    }
    let nv = spec.n_vars();
    let eq = &spec.equations[0];
    let base_dim = 2 * (nv - 1);
    let domain = unit_ball_volume(base_dim as i64)? * r.powi(base_dim as i32);
    let mut total = 0.0;
    let mut var = 0.0;
    for j in 0..nv {
        let mut rng = substream(seed, j as u64);
        let proposals: Vec<Vec<f64>> = (0..n).map(|_| random_ball_point(&mut rng, base_dim, r)).collect();
        let counts: Vec<f64> = proposals
            .par_iter()
            .map(|b| {
                let mut z = vec![Complex64::new(0.0, 0.0); nv];
                let mut it = b.chunks(2);
                for (k, zk) in z.iter_mut().enumerate() {
                    if k != j {
                        let c = it.next().unwrap();
                        *zk = Complex64::new(c[0], c[1]);
                    }
                }
                let mut coeffs = eq.univariate_coefficients(j, &z);
                while coeffs.len() > 1 && coeffs[coeffs.len() - 1].norm() == 0.0 {
                    coeffs.pop();
                }
                crate::poly::complex_roots(&coeffs)
                    .into_iter()
                    .filter(|root| {
                        z[j] = *root;
                        let p = complex_to_real(&z);
                        linalg::norm(&p) <= r && keep(&p)
                    })
                    .count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let v = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1) as f64;
        total += domain * mean;
        var += domain * domain * v / n as f64;
    }
    Ok((total, var.sqrt()))
}

/// Oversampling factor of the coverage sample before thinning to a net.
const NET_OVERSAMPLE: usize = 16;

/// Connected components of `(X \ {0}) ∩ {var = 0}` at radius `r`, largest first.
///
/// The slice is covered by projected samples thinned to a net of `n`
/// points, so that gaps inside a component stay comparable to the spacing.
pub fn branch_components(spec: &VarietySpec, slice_var: usize, r: f64, n: usize, seed: u64) -> Result<Vec<Vec<GermPoint>>> {
    if !(r > 0.0) {
        return Err(GermError::input("slice radius must be positive"));
    }
    let sliced = spec.with_slice(slice_var)?;
    let raw = sample_projected(&sliced, r, n * NET_OVERSAMPLE, seed)?;
    let keep = spatial::net_of_size(&raw, n);
    let pts: Vec<GermPoint> = keep.into_iter().map(|i| raw[i].clone()).collect();
    if pts.len() < 2 {
        return Err(GermError::EmptySlice(format!("slice of `{}` yielded {} points", spec.name, pts.len())));
    }
    let index = PointIndex::new(&pts);
    let md = spatial::median_nn_distance(&pts, &index);
    let labels = spatial::single_linkage(&pts, &index, 5.0 * md);
    let wide = spatial::single_linkage(&pts, &index, 10.0 * md);
    let k5 = spatial::component_sizes(&labels).len();
    let k10 = spatial::component_sizes(&wide).len();
    if k5 != k10 {
        return Err(GermError::AmbiguousClustering { coarse: k5, wide: k10 });
    }
    let mut groups: Vec<Vec<GermPoint>> = vec![Vec::new(); k5];
    for (p, &l) in pts.into_iter().zip(&labels) {
        groups[l].push(p);
    }
    groups.sort_by(|a, b| b.len().cmp(&a.len()));
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_r3() -> VarietySpec {
        VarietySpec::parse("plane", Field::Real, &VarietySpec::vars(&["x", "y", "z"]), &["z".to_string()], BTreeMap::new())
            .unwrap()
    }

    #[test]
    fn eval_examples() {
        let a1 = VarietySpec::a_k(1);
        let v = a1.eval(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(v[0].norm() < 1e-15);
        let b = VarietySpec::brieskorn(2, 3, 5);
        assert_eq!(b.eval(&[0.0; 6]).unwrap()[0].norm(), 0.0);
        let bs = VarietySpec::briancon_speder(1.0);
        let v = bs.eval(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(a1.eval(&[1.0, 2.0]), Err(GermError::DimensionMismatch { .. })));
    }

    #[test]
    fn projection_examples() {
        let plane = plane_r3();
        let q = project_to_variety(&plane, &[1.0, 1.0, 1.0], 1e-12, 20).unwrap();
        assert!(linalg::dist(&q.point.coords, &[1.0, 1.0, 0.0]) < 1e-14);
        assert!(q.step_sum >= linalg::dist(&q.point.coords, &[1.0, 1.0, 1.0]) - 1e-14);

        let a1 = VarietySpec::a_k(1);
        let p = [1.0 / 2f64.sqrt(), 0.0, 0.0, 1.0 / 2f64.sqrt(), 0.0, 0.0];
        let q = project_to_variety(&a1, &p, 1e-12, 20).unwrap();
        assert_eq!(q.point.coords, p.to_vec());
        assert_eq!(q.step_sum, 0.0);

        assert!(matches!(
            project_to_variety(&a1, &[0.0; 6], 1e-10, 20),
            Err(GermError::NearSingularPoint { .. })
        ));
    }

    #[test]
    fn projection_of_random_points_on_a1() {
        let a1 = VarietySpec::a_k(1);
        let mut rng = substream(3, 0);
        for _ in 0..50 {
            let p = random_sphere_point(&mut rng, 6, 1.0);
            let q = project_to_variety(&a1, &p, 1e-10, 50).unwrap();
            assert!(a1.residual(&q.point.coords) <= 1e-10);
            assert!(linalg::dist(&q.point.coords, &p) <= q.step_sum + 1e-12);
        }
    }

    #[test]
    fn weighted_scale_examples() {
        let w = WeightVector::new(vec![3, 2, 1]).unwrap();
        let p = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        assert_eq!(weighted_scale(&p, &w, 1.0).unwrap(), p.to_vec());
        let s = weighted_scale(&p, &w, 2.0).unwrap();
        assert_eq!(s, vec![8.0, 0.0, 4.0, 0.0, 2.0, 0.0]);
        assert!(weighted_scale(&p, &w, 0.0).is_err());
        assert!(weighted_scale(&p, &w, -1.0).is_err());
        assert!(weighted_scale(&p[..4], &w, 1.0).is_err());
    }

    #[test]
    fn scaling_preserves_briancon_speder() {
        let bs = VarietySpec::briancon_speder(1.0);
        let w = bs.weights.clone().unwrap();
        let cloud = sample_projected(&bs, 1.0, 20, 9).unwrap();
        for p in &cloud {
            for &t in &[0.1, 0.5, 3.0] {
                let q = weighted_scale(&p.coords, &w, t).unwrap();
                // f(t.p) = t^{15} f(p) with f(p) ~ 1e-10
                assert!(bs.residual(&q) <= 1e-10 * t.powi(15).max(1.0) * 1.01);
            }
        }
    }

    #[test]
    fn time_to_radius_inverts_norm() {
        let act = ScalingAction::from_weights(&WeightVector::new(vec![3, 3, 2]).unwrap(), Field::Complex);
        let p = [0.3, 0.1, -0.2, 0.4, 0.7, 0.2];
        for &target in &[1e-3, 0.1, 0.9, 5.0] {
            let t = act.time_to_radius(&p, target);
            assert!((linalg::norm(&act.apply(&p, t)) - target).abs() < 1e-12 * target.max(1.0));
        }
    }

    #[test]
    fn plane_slice_lies_on_unit_circle() {
        let plane = plane_r3();
        let cloud = sample_sphere_slice(&plane, 1.0, 1000, 1).unwrap();
        assert_eq!(cloud.len(), 1000);
        for p in &cloud.points {
            assert!(p.coords[2].abs() < 1e-10);
            assert!((p.radius - 1.0).abs() < 1e-9);
        }
        // total weight estimates the circumference
        let total = cloud.total_weight().unwrap();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 0.6, "{}", total);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(sample_sphere_slice(&plane_r3(), 1.0, 0, 1).is_err());
        assert!(sample_sphere_slice(&plane_r3(), -1.0, 5, 1).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let a2 = VarietySpec::a_k(2);
        let opts = TubeOptions { tube: 0.1, ..Default::default() };
        let a = sample_sphere_slice_with(&a2, 1.0, 100, 42, &opts).unwrap();
        let b = sample_sphere_slice_with(&a2, 1.0, 100, 42, &opts).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.weights, b.weights);
        let c = sample_sphere_slice_with(&a2, 1.0, 100, 43, &opts).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn a2_link_residuals() {
        let a2 = VarietySpec::a_k(2);
        let cloud = sample_sphere_slice(&a2, 1.0, 2000, 5).unwrap();
        for p in &cloud.points {
            let z = a2.to_complex(&p.coords);
            let v = z[0] * z[0] + z[1] * z[1] + z[2] * z[2] * z[2];
            assert!(v.norm() <= 1e-10);
        }
    }

    #[test]
    fn branch_component_counts() {
        let a2 = VarietySpec::a_k(2);
        assert_eq!(branch_components(&a2, 2, 1.0, 400, 1).unwrap().len(), 2);
        let b237 = VarietySpec::brieskorn(2, 3, 7);
        assert_eq!(branch_components(&b237, 2, 1.0, 400, 1).unwrap().len(), 1);
        let bs0 = VarietySpec::briancon_speder(0.0);
        assert_eq!(branch_components(&bs0, 2, 1.0, 400, 1).unwrap().len(), 1);
    }

    #[test]
    fn config_roundtrip() {
        let src = r#"
            name = "bs"
            equations = ["x^5+z^15+y^7*z+t*x*y^6"]
            weights = [3, 2, 1]
            [params]
            t = 1.0
        "#;
        let spec = VarietySpec::from_config_str(src).unwrap();
        assert_eq!(spec.ambient_real_dim(), 6);
        assert_eq!(spec.weighted_degrees(), Some(vec![15]));
        assert!(VarietySpec::from_config_str("equations = [\"x^2+y^2+z^3\"]\nweights=[1,1,1]").is_err());
    }

    #[test]
    fn estimated_dimensions() {
        let a2 = VarietySpec::parse("a2", Field::Complex, &VarietySpec::vars(&["x", "y", "z"]), &["x^2+y^2+z^3".into()], BTreeMap::new()).unwrap();
        assert_eq!(a2.real_dimension(), 4);
        let two = VarietySpec::parse("two", Field::Real, &VarietySpec::vars(&["a", "b", "c", "d"]), &["a*c", "a*d", "b*c", "b*d"].map(String::from), BTreeMap::new()).unwrap();
        assert_eq!(two.real_dimension(), 2);
    }

    #[test]
    fn columnar_and_csv_output() {
        let cloud = sample_sphere_slice(&plane_r3(), 1.0, 10, 2).unwrap();
        let mut buf = Vec::new();
        cloud.write_columnar(&mut buf).unwrap();
        let back = SampleCloud::read_columnar(buf.as_slice()).unwrap();
        assert_eq!(back.points, cloud.points);
        assert_eq!(back.weights, cloud.weights);
        let mut csv_buf = Vec::new();
        cloud.write_csv(&mut csv_buf).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("c0,c1,c2,radius,residual,weight"));
    }

    #[test]
    fn wirtinger_volumes() {
        let pi2 = std::f64::consts::PI.powi(2);
        let (v, e) = wirtinger_measure(&VarietySpec::smooth_c2(), 0.5, 4000, 1, |_| true).unwrap();
        assert!((v - pi2 / 2.0 * 0.5f64.powi(4)).abs() < 1e-12 + 4.0 * e, "{} ± {}", v, e);
        let (v, e) = wirtinger_measure(&VarietySpec::a_k(1), 1.0, 20000, 2, |_| true).unwrap();
        assert!((v - pi2).abs() < 4.0 * e + 0.02 * pi2, "{} ± {}", v, e);
    }
}
