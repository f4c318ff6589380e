//! Replication analysis with mixture priors.
//!
//! The prior for a replication study mixes the original study's posterior
//! with a proper vague component; the mixture weight controls how much the
//! two data sources are pooled. Everything downstream is closed form:
//!
//! - [`study`] — study summaries, dataset parsing (CSV/JSON), and
//!   inverse-variance pooling of multiple replications;
//! - [`numerics`] — log densities, normal CDF, bracketed root finding, and
//!   adaptive quadrature (also the brute-force oracle used by the tests);
//! - [`mixture`] — the fixed-weight prior, its conjugate posterior update,
//!   the marginal likelihood, and the empirical Bayes weight;
//! - [`random_weight`] — a Beta prior on the weight: joint/marginal
//!   posteriors and the random-weight marginal likelihood;
//! - [`summaries`] — mixture CDF/quantiles, HPDI sets (possibly disjoint),
//!   mode counts, density grids, and the tipping-point analysis;
//! - [`bayes_factors`] — weight-consistency and effect-size tests with
//!   Jeffreys grading and a compact two-significant-digit report format.
//!
//! All values are immutable after construction and all operations are pure,
//! so everything can be shared freely across threads.

pub mod bayes_factors;
pub mod mixture;
pub mod numerics;
pub mod random_weight;
pub mod study;
pub mod summaries;

pub use bayes_factors::BayesFactorReport;
pub use mixture::{EmpiricalBayesWeight, FixedWeight, TwoComponentNormalMixture, VagueComponent};
pub use random_weight::{BetaWeightPrior, WeightPosterior};
pub use study::{DatasetFormat, ReplicationSet, StudySummary};
pub use summaries::{DensityGrid, HpdiSet, TippingPoint, TippingRegime};
