//! Fixtures shared by the benchmarks.

use pcnc::channel::NetworkRealization;
use pcnc::config::ScenarioConfig;

/// Realization of the reference deployment used across benchmarks.
pub fn realization(l: usize, m: usize, k: usize, n: usize, seed: u64) -> NetworkRealization {
    let cfg = ScenarioConfig::new(l, m, k, n);
    NetworkRealization::generate(&cfg, seed, 0).expect("reference deployment is feasible")
}
