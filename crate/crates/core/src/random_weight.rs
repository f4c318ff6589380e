//! Random mixture weight: a Beta prior on the weight, with the joint and
//! marginal posteriors and the random-weight marginal likelihood all in
//! closed form.
//!
//! Marginalizing the weight out of the joint posterior gives back the
//! fixed-weight machinery evaluated at the prior's expected weight, so the
//! effect-size posterior here is literally [`posterior_fixed`] at
//! `η/(η+ν)`. What the extension adds is a posterior distribution for the
//! weight itself, which quantifies study compatibility but can move at most
//! "one observation" away from its prior.

use serde::{Deserialize, Serialize};

use crate::mixture::{
    log_predictive_consistent, log_predictive_vague, marginal_likelihood_fixed, posterior_fixed,
    FixedWeight, ModelError, TwoComponentNormalMixture, VagueComponent,
};
use crate::numerics::{beta_log_density, normal_log_density};
use crate::study::StudySummary;

/// Beta(eta, nu) prior for the mixture weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaWeightPrior {
    pub eta: f64,
    pub nu: f64,
}

impl BetaWeightPrior {
    pub fn new(eta: f64, nu: f64) -> Result<Self, ModelError> {
        // delegate the shape checks to the density kernel
        beta_log_density(0.5, eta, nu)?;
        Ok(BetaWeightPrior { eta, nu })
    }

    /// The flat Beta(1, 1) prior.
    pub fn flat() -> Self {
        BetaWeightPrior { eta: 1.0, nu: 1.0 }
    }

    /// Prior mean of the weight, `η/(η+ν)`.
    #[inline]
    pub fn expected_weight(&self) -> f64 {
        self.eta / (self.eta + self.nu)
    }

    /// Prior density at `w`.
    pub fn density(&self, w: f64) -> Result<f64, ModelError> {
        Ok(beta_log_density(w, self.eta, self.nu)?.exp())
    }
}

/// Direction of the overwhelming-evidence limit for the weight posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLimitDirection {
    /// The weight-consistency Bayes factor tends to zero.
    ConsistencyOverwhelming,
    /// The weight-consistency Bayes factor tends to infinity.
    ConflictOverwhelming,
}

/// Marginal posterior of the mixture weight.
///
/// The density is `Beta(w | η, ν) · {w·pc + (1−w)·pv} / normalizer` where
/// `pc` and `pv` are the predictive densities of the replication estimate
/// under the original-study and vague components. Only those three numbers
/// are stored; grids are produced on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightPosterior {
    pub eta: f64,
    pub nu: f64,
    pub predictive_consistent: f64,
    pub predictive_vague: f64,
    pub normalizer: f64,
}

impl WeightPosterior {
    /// Posterior density of the weight at `w`.
    pub fn density(&self, w: f64) -> Result<f64, ModelError> {
        let prior = beta_log_density(w, self.eta, self.nu)?.exp();
        let lik = w * self.predictive_consistent + (1.0 - w) * self.predictive_vague;
        Ok(prior * lik / self.normalizer)
    }

    /// The same posterior written in terms of the weight-consistency Bayes
    /// factor `bf_dc`: density ∝ π(w)·{w + (1−w)·bf_dc}, normalized by
    /// `E[w]·(1 − bf_dc) + bf_dc`. Dividing predictive densities out of the
    /// likelihood leaves only the ratio, which is what survives in the
    /// overwhelming-evidence limits.
    pub fn from_bayes_factor(prior: &BetaWeightPrior, bf_dc: f64) -> Result<Self, ModelError> {
        if !(bf_dc.is_finite() && bf_dc > 0.0) {
            return Err(ModelError::Numerics(
                crate::numerics::NumericsError::NonFinite(bf_dc),
            ));
        }
        let expected = prior.expected_weight();
        Ok(WeightPosterior {
            eta: prior.eta,
            nu: prior.nu,
            predictive_consistent: 1.0,
            predictive_vague: bf_dc,
            normalizer: expected * (1.0 - bf_dc) + bf_dc,
        })
    }
}

/// Marginal likelihood of the replication estimate with a Beta-distributed
/// weight; equals the fixed-weight marginal likelihood at the prior's
/// expected weight.
pub fn marginal_likelihood_random(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    prior: &BetaWeightPrior,
) -> Result<f64, ModelError> {
    let expected = FixedWeight::new(prior.expected_weight())?;
    marginal_likelihood_fixed(rep, original, vague, expected)
}

/// Joint posterior density of (effect, weight) at `(theta, w)`.
pub fn joint_posterior_density(
    theta: f64,
    w: f64,
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    prior: &BetaWeightPrior,
) -> Result<f64, ModelError> {
    rep.validate()?;
    original.validate()?;
    let weight_prior = beta_log_density(w, prior.eta, prior.nu)?.exp();
    let likelihood = normal_log_density(rep.estimate, theta, rep.variance())?.exp();
    let effect_prior = w
        * normal_log_density(theta, original.estimate, original.variance())?.exp()
        + (1.0 - w) * normal_log_density(theta, vague.mu, vague.tau2)?.exp();
    let normalizer = marginal_likelihood_random(rep, original, vague, prior)?;
    Ok(likelihood * weight_prior * effect_prior / normalizer)
}

/// Marginal posterior of the weight after observing the replication.
pub fn weight_marginal_posterior(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    prior: &BetaWeightPrior,
) -> Result<WeightPosterior, ModelError> {
    let predictive_consistent = log_predictive_consistent(rep, original)?.exp();
    let predictive_vague = log_predictive_vague(rep, vague)?.exp();
    let normalizer = marginal_likelihood_random(rep, original, vague, prior)?;
    Ok(WeightPosterior {
        eta: prior.eta,
        nu: prior.nu,
        predictive_consistent,
        predictive_vague,
        normalizer,
    })
}

/// Marginal posterior of the effect size: the fixed-weight posterior at the
/// prior's expected weight, component by component.
pub fn effect_marginal_posterior(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    prior: &BetaWeightPrior,
) -> Result<TwoComponentNormalMixture, ModelError> {
    let expected = FixedWeight::new(prior.expected_weight())?;
    posterior_fixed(rep, original, vague, expected)
}

/// Limiting posterior of the weight under overwhelming evidence: the prior
/// updated by exactly one observation. Overwhelming consistency gives
/// Beta(η+1, ν); overwhelming conflict gives Beta(η, ν+1).
pub fn weight_posterior_limit(
    prior: &BetaWeightPrior,
    direction: WeightLimitDirection,
) -> BetaWeightPrior {
    match direction {
        WeightLimitDirection::ConsistencyOverwhelming => BetaWeightPrior {
            eta: prior.eta + 1.0,
            nu: prior.nu,
        },
        WeightLimitDirection::ConflictOverwhelming => BetaWeightPrior {
            eta: prior.eta,
            nu: prior.nu + 1.0,
        },
    }
}
