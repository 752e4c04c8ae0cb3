//! Fixtures shared by the benchmarks under benches/.

use lplsh_core::{derive_params, generate_planted, IndexParams, LshIndex, PlantedInstance, SchemeConfig, SchemeParams};

/// The c = 2, p = 1.5 scheme used for the end-to-end recall run.
pub fn recall_scheme() -> SchemeParams {
    let mut cfg = SchemeConfig::new(2.0, 1.5);
    cfg.knobs.kappa_w = 0.96;
    cfg.threshold_samples = 200_000;
    derive_params(&cfg).expect("fixed configuration is valid")
}

pub fn planted(n: usize, d: usize, queries: usize) -> PlantedInstance {
    generate_planted(&lplsh_core::PlantedConfig {
        n,
        d,
        planted_count: queries,
        seed: 1,
        ..Default::default()
    })
    .expect("fixed configuration is feasible")
}

pub fn index(inst: &PlantedInstance, scheme: &SchemeParams, k: usize, l: usize) -> LshIndex {
    LshIndex::build(&inst.data, scheme, IndexParams::new(k, l, 2)).expect("fixture builds")
}
