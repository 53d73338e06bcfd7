//! Shared inputs for the benchmarks.

use fenep_core::oracles::StateSampler;
use fenep_core::{Conserved, PhysParams, RunConfig, SimState};

/// Random admissible interface pairs for the Riemann-solver benchmark.
pub fn random_pairs(n: usize, params: &PhysParams) -> Vec<(Conserved, Conserved)> {
    let mut sampler = StateSampler::new(7);
    (0..n)
        .map(|_| {
            let l = sampler.primitive(params.extensibility).to_conserved();
            let r = sampler.primitive(params.extensibility).to_conserved();
            (l, r)
        })
        .collect()
}

/// Dam-break configuration and its initial state at the given resolution.
pub fn dam_break(cells: usize, ell: f64) -> (RunConfig, SimState) {
    let mut config = RunConfig::preset_dam_break(ell).expect("valid preset");
    config.cells = cells;
    let grid = config.grid().expect("valid grid");
    let state = config.initial_state(&grid);
    (config, state)
}
