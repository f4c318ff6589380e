//! Fixed-weight mixture machinery: prior construction from an original
//! study, the closed-form two-component posterior, the marginal likelihood of
//! a replication estimate, and the empirical Bayes weight.
//!
//! The prior places weight `w` on the original study's posterior
//! N(estimate, std_error²) and weight `1 − w` on a proper vague component
//! N(mu, tau2). Updating on a replication estimate keeps the mixture form:
//! each component updates conjugately and the weight updates according to how
//! well each component predicted the replication data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{log_sum_exp, normal_log_density, NumericsError};
use crate::study::{DataError, StudySummary};

/// Weight ties in the empirical Bayes maximizer: log predictive densities
/// closer than this count as equal.
const EMPIRICAL_BAYES_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("mixture weight must lie in [0, 1], got {0}")]
    WeightOutOfRange(f64),
    #[error("vague component: mean must be finite, got {0}")]
    InvalidVagueMean(f64),
    #[error("vague component: variance must be positive and finite, got {0}")]
    InvalidVagueVariance(f64),
    #[error("mixture component variance must be positive and finite, got {0}")]
    InvalidComponentVariance(f64),
    #[error("mixture component mean must be finite, got {0}")]
    InvalidComponentMean(f64),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The proper non-informative mixture component N(mu, tau2).
///
/// Properness (finite `tau2`) is what lets the posterior weight move away
/// from 1; an improper component would force complete pooling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VagueComponent {
    pub mu: f64,
    pub tau2: f64,
}

impl VagueComponent {
    pub fn new(mu: f64, tau2: f64) -> Result<Self, ModelError> {
        if !mu.is_finite() {
            return Err(ModelError::InvalidVagueMean(mu));
        }
        if !(tau2.is_finite() && tau2 > 0.0) {
            return Err(ModelError::InvalidVagueVariance(tau2));
        }
        Ok(VagueComponent { mu, tau2 })
    }

    /// Unit-information component for standardized mean differences:
    /// mean 0, variance 2.
    pub fn unit_information() -> Self {
        VagueComponent { mu: 0.0, tau2: 2.0 }
    }
}

impl Default for VagueComponent {
    fn default() -> Self {
        Self::unit_information()
    }
}

/// A mixture weight, constrained to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct FixedWeight(f64);

impl FixedWeight {
    pub const ZERO: FixedWeight = FixedWeight(0.0);
    pub const HALF: FixedWeight = FixedWeight(0.5);
    pub const ONE: FixedWeight = FixedWeight(1.0);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&value) {
            Ok(FixedWeight(value))
        } else {
            Err(ModelError::WeightOutOfRange(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A convex combination of two normal densities. Represents both the mixture
/// prior and its posterior after updating on replication data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoComponentNormalMixture {
    weight_informative: f64,
    mean_informative: f64,
    var_informative: f64,
    mean_vague: f64,
    var_vague: f64,
}

impl TwoComponentNormalMixture {
    pub fn new(
        weight_informative: f64,
        mean_informative: f64,
        var_informative: f64,
        mean_vague: f64,
        var_vague: f64,
    ) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&weight_informative) {
            return Err(ModelError::WeightOutOfRange(weight_informative));
        }
        for mean in [mean_informative, mean_vague] {
            if !mean.is_finite() {
                return Err(ModelError::InvalidComponentMean(mean));
            }
        }
        for var in [var_informative, var_vague] {
            if !(var.is_finite() && var > 0.0) {
                return Err(ModelError::InvalidComponentVariance(var));
            }
        }
        Ok(TwoComponentNormalMixture {
            weight_informative,
            mean_informative,
            var_informative,
            mean_vague,
            var_vague,
        })
    }

    #[inline]
    pub fn weight_informative(&self) -> f64 {
        self.weight_informative
    }

    #[inline]
    pub fn weight_vague(&self) -> f64 {
        1.0 - self.weight_informative
    }

    #[inline]
    pub fn mean_informative(&self) -> f64 {
        self.mean_informative
    }

    #[inline]
    pub fn var_informative(&self) -> f64 {
        self.var_informative
    }

    #[inline]
    pub fn mean_vague(&self) -> f64 {
        self.mean_vague
    }

    #[inline]
    pub fn var_vague(&self) -> f64 {
        self.var_vague
    }

    /// Mixture mean, `w·m1 + (1−w)·m2`.
    pub fn mean(&self) -> f64 {
        self.weight_informative * self.mean_informative
            + self.weight_vague() * self.mean_vague
    }

    /// Density at `x`. Components with weight exactly zero are skipped, so a
    /// degenerate mixture behaves as the surviving single normal.
    pub fn density(&self, x: f64) -> f64 {
        let mut d = 0.0;
        if self.weight_informative > 0.0 {
            d += self.weight_informative
                * normal_log_density(x, self.mean_informative, self.var_informative)
                    .expect("validated mixture")
                    .exp();
        }
        if self.weight_informative < 1.0 {
            d += self.weight_vague()
                * normal_log_density(x, self.mean_vague, self.var_vague)
                    .expect("validated mixture")
                    .exp();
        }
        d
    }

    /// Log density at `x`, combining the component terms with log-sum-exp so
    /// deep tails stay representable.
    pub fn log_density(&self, x: f64) -> f64 {
        let informative = if self.weight_informative > 0.0 {
            self.weight_informative.ln()
                + normal_log_density(x, self.mean_informative, self.var_informative)
                    .expect("validated mixture")
                    .value()
        } else {
            f64::NEG_INFINITY
        };
        let vague = if self.weight_informative < 1.0 {
            self.weight_vague().ln()
                + normal_log_density(x, self.mean_vague, self.var_vague)
                    .expect("validated mixture")
                    .value()
        } else {
            f64::NEG_INFINITY
        };
        log_sum_exp(informative, vague)
    }

    /// Derivative of the density at `x`.
    pub fn density_derivative(&self, x: f64) -> f64 {
        let mut d = 0.0;
        if self.weight_informative > 0.0 {
            let n = normal_log_density(x, self.mean_informative, self.var_informative)
                .expect("validated mixture")
                .exp();
            d += self.weight_informative * n * (self.mean_informative - x) / self.var_informative;
        }
        if self.weight_informative < 1.0 {
            let n = normal_log_density(x, self.mean_vague, self.var_vague)
                .expect("validated mixture")
                .exp();
            d += self.weight_vague() * n * (self.mean_vague - x) / self.var_vague;
        }
        d
    }

    /// The active component means and standard deviations (weight-zero
    /// components are dropped).
    pub(crate) fn active_components(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(2);
        if self.weight_informative > 0.0 {
            out.push((self.mean_informative, self.var_informative.sqrt()));
        }
        if self.weight_informative < 1.0 {
            out.push((self.mean_vague, self.var_vague.sqrt()));
        }
        out
    }

    /// An interval outside of which the density is negligible: the active
    /// component mean span padded by `k` of the largest standard deviation.
    pub fn support_hint(&self, k: f64) -> (f64, f64) {
        let comps = self.active_components();
        let lo = comps.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let hi = comps.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        let sd = comps.iter().map(|c| c.1).fold(0.0, f64::max);
        (lo - k * sd, hi + k * sd)
    }
}

/// Mixture prior for the effect size: weight `w` on the original study's
/// posterior N(estimate, std_error²), weight `1 − w` on the vague component.
pub fn build_prior(
    original: &StudySummary,
    vague: &VagueComponent,
    weight: FixedWeight,
) -> Result<TwoComponentNormalMixture, ModelError> {
    original.validate()?;
    TwoComponentNormalMixture::new(
        weight.value(),
        original.estimate,
        original.variance(),
        vague.mu,
        vague.tau2,
    )
}

/// Posterior mixture after observing the replication summary.
///
/// Each component updates conjugately:
/// `v' = (1/v + 1/σ_r²)⁻¹`, `m' = (m/v + θ̂_r/σ_r²)·v'`. The updated weight is
/// the posterior probability of the informative component, computed in log
/// space from the two predictive densities so that even a 40σ conflict
/// cannot underflow. A weight of exactly 0 or 1 stays at 0 or 1.
pub fn update_fixed(
    prior: &TwoComponentNormalMixture,
    rep: &StudySummary,
) -> Result<TwoComponentNormalMixture, ModelError> {
    rep.validate()?;
    let sr2 = rep.variance();

    let v1 = 1.0 / (1.0 / prior.var_informative + 1.0 / sr2);
    let m1 = (prior.mean_informative / prior.var_informative + rep.estimate / sr2) * v1;
    let v2 = 1.0 / (1.0 / prior.var_vague + 1.0 / sr2);
    let m2 = (prior.mean_vague / prior.var_vague + rep.estimate / sr2) * v2;

    let w = prior.weight_informative;
    let updated_weight = if w == 0.0 || w == 1.0 {
        w
    } else {
        let lp_informative = w.ln()
            + normal_log_density(
                rep.estimate,
                prior.mean_informative,
                prior.var_informative + sr2,
            )?
            .value();
        let lp_vague = (1.0 - w).ln()
            + normal_log_density(rep.estimate, prior.mean_vague, prior.var_vague + sr2)?.value();
        (lp_informative - log_sum_exp(lp_informative, lp_vague)).exp()
    };

    TwoComponentNormalMixture::new(updated_weight, m1, v1, m2, v2)
}

/// Log predictive density of the replication estimate under the original
/// study's component, `ln N(θ̂_r | θ̂_o, σ_r² + σ_o²)`.
pub fn log_predictive_consistent(
    rep: &StudySummary,
    original: &StudySummary,
) -> Result<f64, ModelError> {
    rep.validate()?;
    original.validate()?;
    Ok(normal_log_density(
        rep.estimate,
        original.estimate,
        rep.variance() + original.variance(),
    )?
    .value())
}

/// Log predictive density of the replication estimate under the vague
/// component, `ln N(θ̂_r | μ, σ_r² + τ²)`.
pub fn log_predictive_vague(
    rep: &StudySummary,
    vague: &VagueComponent,
) -> Result<f64, ModelError> {
    rep.validate()?;
    Ok(normal_log_density(rep.estimate, vague.mu, rep.variance() + vague.tau2)?.value())
}

/// Marginal likelihood of the replication estimate under the mixture prior:
/// `w·N(θ̂_r | θ̂_o, σ_r²+σ_o²) + (1−w)·N(θ̂_r | μ, σ_r²+τ²)`.
///
/// Linear in the weight, and computed so that `ml(w)` equals
/// `(1−w)·ml(0) + w·ml(1)` to the last bit.
pub fn marginal_likelihood_fixed(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    weight: FixedWeight,
) -> Result<f64, ModelError> {
    let w = weight.value();
    if w == 0.0 {
        return Ok(log_predictive_vague(rep, vague)?.exp());
    }
    if w == 1.0 {
        return Ok(log_predictive_consistent(rep, original)?.exp());
    }
    let consistent = log_predictive_consistent(rep, original)?.exp();
    let vague_part = log_predictive_vague(rep, vague)?.exp();
    Ok(w * consistent + (1.0 - w) * vague_part)
}

/// Posterior mixture for a replication under the prior built from
/// `original`, `vague`, and `weight`; shorthand for
/// [`build_prior`] followed by [`update_fixed`].
///
/// ```
/// use repmix_core::mixture::{posterior_fixed, FixedWeight, VagueComponent};
/// use repmix_core::StudySummary;
///
/// let original = StudySummary::new("original", 0.21, 0.05)?;
/// let rep = StudySummary::new("rep", 0.09, 0.05)?;
/// let vague = VagueComponent::unit_information();
/// let posterior = posterior_fixed(&rep, &original, &vague, FixedWeight::HALF)?;
/// assert!((posterior.weight_informative() - 0.8261).abs() < 1e-4);
/// assert!((posterior.mean_informative() - 0.15).abs() < 1e-12);
/// # Ok::<(), repmix_core::mixture::ModelError>(())
/// ```
pub fn posterior_fixed(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    weight: FixedWeight,
) -> Result<TwoComponentNormalMixture, ModelError> {
    update_fixed(&build_prior(original, vague, weight)?, rep)
}

/// The weight maximizing the marginal likelihood, with a tie flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalBayesWeight {
    /// 0, 1, or 0.5 when tied.
    pub omega: f64,
    pub tie: bool,
}

/// Empirical Bayes estimate of the mixture weight.
///
/// The marginal likelihood is linear in the weight, so the maximizer sits at
/// an endpoint: 1 if the original-study component predicts the replication
/// estimate better, 0 if the vague component does. Log predictive densities
/// within 1e-12 of each other count as a tie, reported as 0.5.
pub fn empirical_bayes_weight(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
) -> Result<EmpiricalBayesWeight, ModelError> {
    let lp_consistent = log_predictive_consistent(rep, original)?;
    let lp_vague = log_predictive_vague(rep, vague)?;
    if (lp_consistent - lp_vague).abs() <= EMPIRICAL_BAYES_TIE_TOL {
        Ok(EmpiricalBayesWeight {
            omega: 0.5,
            tie: true,
        })
    } else if lp_consistent > lp_vague {
        Ok(EmpiricalBayesWeight {
            omega: 1.0,
            tie: false,
        })
    } else {
        Ok(EmpiricalBayesWeight {
            omega: 0.0,
            tie: false,
        })
    }
}
