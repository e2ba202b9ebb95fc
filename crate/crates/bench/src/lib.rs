//! Shared fixtures for the benchmarks.

use mnr_core::{gen_mock, Dataset, MockConfig};

/// A fiducial-cell mock with `n` points.
pub fn fiducial(n: usize, seed: u64) -> Dataset {
    gen_mock(&MockConfig {
        n,
        seed,
        ..MockConfig::default()
    })
    .expect("fiducial mock")
    .0
}
