//! Numerical experiments on separating sets of singular germs: sampling of
//! algebraic germs, Hausdorff density estimates, inner metrics, conflict-set
//! constructions and tangent cones.

pub mod error;
pub mod experiments;
pub mod inner_metric;
pub mod linalg;
pub mod measure;
pub mod poly;
pub mod separating;
pub mod spatial;
pub mod tangent_cone;
pub mod variety;

pub use error::{GermError, Result};
pub use measure::{
    classify_density, density_profile, hausdorff_measure, unit_ball_volume, DensityClass, DensityEstimate,
    MeasureEstimate, MeasureMethod,
};
pub use poly::{parse_polynomial, Polynomial};
pub use variety::{
    branch_components, eval, project_to_variety, sample_sphere_slice, weighted_scale, Field, GermPoint, SampleCloud,
    SamplingLaw, VarietySpec, WeightVector,
};
