//! Fixtures shared by the benchmarks.

use germlab::{sample_sphere_slice, SampleCloud, VarietySpec};

/// Link of the A2 germ at radius 1.
pub fn a2_link(n: usize) -> SampleCloud {
    sample_sphere_slice(&VarietySpec::a_k(2), 1.0, n, 1).expect("A2 link")
}
