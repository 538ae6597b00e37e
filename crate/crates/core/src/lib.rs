//! Natural copula estimation.
//!
//! Two one-dimensional marginals, each a clamped Hermite profile on [0,1],
//! are coupled through `π(x,y) = f_X(x) f_Y(y) τ(x,y)` with
//! `τ = C + Σ c_i x^j y^k` (every monomial vanishing on both axes). The
//! coefficients minimizing the quadratic transport cost `∫∫ (x−y)² π` under
//! total normalization are found by linear programming.
//!
//! Around that core the crate provides:
//!
//! - [`quadrature`]: Gauss–Legendre rules on [0,1] and [0,1]²
//! - [`marginals`]: Hermite densities, normalization and histogram fitting
//! - [`ingest`]: `price,volume,side` CSV records, smoothing and binning
//! - [`simplex`]: a dense two-phase simplex solver
//! - [`copula`]: LP assembly, estimation and cost evaluation
//! - [`hydro`]: stream-function velocity, circulation and flux
//! - [`correlation`]: the variance-of-τ correlation measure
//! - [`ot`]: exact one-dimensional optimal transport, used as an oracle
//! - [`synth`]: synthetic two-sided price-level data
//!
//! Data-parallel loops run on rayon when the default `parallel` feature is
//! enabled; see [`Exec`].

pub mod copula;
pub mod correlation;
pub mod error;
pub mod exec;
pub mod hydro;
pub mod ingest;
pub mod marginals;
pub mod ot;
pub mod quadrature;
pub mod simplex;
pub mod synth;

pub use copula::{
    assemble_lp, compute_integrals, estimate_copula, wasserstein_cost, CopulaConfig, CopulaModel,
    CostIntegrals, MonomialBasis,
};
pub use correlation::{correlation_ct, Correlation};
pub use error::{Error, Result};
pub use exec::Exec;
pub use hydro::{circulation, flux, green_check, velocity_field, ContourConvention, FlowSummary};
pub use ingest::{PriceLevelRecord, Side};
pub use marginals::{
    fit_marginal, hermite, normalize, raw_density, DomainMap, EmpiricalHistogram, FitConfig,
    MarginalDensity, MarginalSpec,
};
pub use ot::{discretize, solve_ot_1d, solve_ot_lp, DiscreteDistribution, TransportPlan};
pub use quadrature::{gauss_legendre_rule, integrate_1d, integrate_2d, QuadratureRule};
pub use simplex::{solve, LinearProgram, LpSolution, LpStatus, Sense};
