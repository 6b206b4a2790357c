//! Synthetic two-class scenarios with known population truth.
//!
//! Covariances are block-diagonal combinations of intraclass blocks
//! `Γ_t = (I_t + 1 1ᵀ)/2`, banded-decay blocks `c Ω_t(ρ)` and diagonal blocks,
//! optionally plus a low-rank term. [`PopulationTruth`] evaluates the
//! variance quantities of the distance rule and of its oracle-transformed
//! version from these structures without dense `p × p` work.

mod covariance;
mod scenario;

pub use covariance::{Block, Noise, OmegaBlock, StructuredCov, MAX_DENSE_BLOCK};
pub use scenario::{
    make_scenario, OracleDeltas, PopulationTruth, Sampler, Scenario, ScenarioId, ScenarioSpec, MIN_SCENARIO_P,
};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `Φ(−Δ/(2δ))`.
pub fn asymptotic_error(delta: f64, delta_denom: f64) -> f64 {
    normal_cdf(-delta / (2.0 * delta_denom))
}

/// Generator type handed out per replication.
pub type ReplicationRng = ChaCha8Rng;

/// Generator for replication `rep` of a run seeded with `seed`.
///
/// Each replication gets its own stream, so results do not depend on how
/// replications are scheduled across threads.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}
