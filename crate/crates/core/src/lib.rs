//! Generalized signatures of semicoherent systems.
//!
//! `p_k = Pr(T = X_{k:n})` is computed for arbitrary absolutely continuous
//! lifetime laws as a difference of two level sums of the structure
//! function weighted by the relative quality function `q`. The crate
//! provides every route to `q` (exchangeable, ordering probabilities,
//! quadrature for independent marginals, Weibull closed forms), the
//! signature itself, the weighted symmetric projection whose coefficients
//! coincide with `p`, and brute-force and Monte Carlo oracles.

pub mod cli;
pub mod error;
pub mod formats;
pub mod lifetimes;
mod numeric;
mod perm;
pub mod quadrature;
pub mod quality;
pub mod signature;
pub mod oracle;
pub mod structure;

pub use error::{Error, Result};
pub use lifetimes::{LifetimeModel, Marginal, OrderProbabilities};
pub use oracle::{
    monte_carlo_quality, monte_carlo_shortest_lifetime, monte_carlo_signature,
    permutation_signature, MonteCarloConfig, OrderingLaw, SimulationReport,
};
pub use quality::{
    auto_route, quality_exchangeable, quality_for_model, quality_from_order_probabilities,
    quality_independent_quadrature, quality_weibull, quality_weibull_via_difference,
    shortest_lifetime_in_set_probability, weibull_characterization_check, QualityFunction,
    QualityRoute, WeibullCheck,
};
pub use signature::{
    boland_signature, projection_residual_check, signature_from_quality, signature_via_rk,
    signature_for_model, signature_from_quality_tol, symmetric_projection, tail_probabilities, ModelSignature, SignatureRoute, SignatureVector, SymmetricApproximation,
    TailProbabilityVector,
};
pub use structure::{
    s_difference, OrderStatisticFunction, PathSetSystem, SetFunction, StructureFunction,
    SubsetMask,
};
