//! Shared fixtures for the criterion benches.

use emxcs_core::emx::FiniteSupportDistribution;
use emxcs_core::fiberprobe::parity_boundary_point;

/// Uniform distribution on `{0, 2, 4, …}` with `k` atoms.
pub fn spread_uniform(k: usize) -> FiniteSupportDistribution {
    FiniteSupportDistribution::uniform((0..k).map(|i| 2 * i)).expect("k > 0")
}

/// A point of `[0,1]^(m+1)` with evenly spaced coordinates.
pub fn spaced_point(m: usize) -> Vec<f64> {
    parity_boundary_point(m)
}
