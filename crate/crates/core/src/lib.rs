//! Locality-sensitive hashing for ℓ_p (1 < p ≤ 2): p-stable projection to a
//! low dimension followed by hashing into shifted ℓ_p-ball lattices.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod geometry;
pub mod index;
pub mod lab;
pub mod lattice;
pub mod rng;
pub mod scheme;
pub mod stable;
pub mod stats;
pub mod verify;

pub use dataset::{generate_planted, Dataset, PlantedConfig, PlantedInstance};
pub use error::{Error, Result};
pub use geometry::{ball_volume_ratio, BallSpec, LpSpace};
pub use lattice::{compute_num_shifts, make_lattices, HashValue, LatticeParams, NumShifts, ShiftedLatticeSet};
pub use scheme::{
    derive_params, eval_hash, evaluation_cost, sample_hash, scale_to_unit, CostReport, HashFunction, Knobs, Overrides,
    Profile, SchemeConfig, SchemeParams,
};
pub use stable::{compute_threshold, sample_stable, StableParams, Threshold, ThresholdCache};
pub use index::{
    choose_k_l, linear_scan_nn, load_index, save_index, success_bound, Answer, IndexParams, LadderResult, LshIndex,
    QueryResult, RadiusLadder,
};
pub use lab::{
    estimate_collision, estimate_rho, geometric_collision, make_pair_at_distance, rho_from, rho_sweep, CollisionEstimate,
    RhoReport,
};
