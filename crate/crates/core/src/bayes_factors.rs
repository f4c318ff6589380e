//! Hypothesis tests as Bayes factors: weight-consistency tests (point and
//! Beta-prior flavors), effect-size tests against a point null (mixture and
//! complete-pooling flavors), the small-standard-error limit, categorization
//! on the Jeffreys scale, and the two-significant-digit report format.
//!
//! Every ratio is computed as `exp(log numerator − log denominator)`; the
//! printed "<1/1000" convention is a formatting concern only and the raw
//! value is always retained in the report.

use serde::Serialize;

use crate::mixture::{
    log_predictive_consistent, log_predictive_vague, ModelError, VagueComponent,
};
use crate::numerics::normal_log_density;
use crate::random_weight::{marginal_likelihood_random, BetaWeightPrior};
use crate::study::StudySummary;

/// A Bayes factor with its orientation, formatted rendering, and Jeffreys
/// grade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesFactorReport {
    /// Ratio of the numerator-hypothesis marginal likelihood to the
    /// denominator's.
    pub value: f64,
    /// Which hypotheses sit in the numerator and denominator.
    pub orientation: String,
    /// Two-significant-digit rendering, `1/x` below one.
    pub formatted: String,
    /// Jeffreys grade with the favored hypothesis named; graded on the
    /// inverted value when the ratio is below one.
    pub jeffreys_label: Option<String>,
}

impl BayesFactorReport {
    fn new(value: f64, numerator: &str, denominator: &str) -> Self {
        let favored = if value >= 1.0 { numerator } else { denominator };
        BayesFactorReport {
            value,
            orientation: format!("{numerator} vs {denominator}"),
            formatted: format_bf(value),
            jeffreys_label: Some(format!("{} for {favored}", jeffreys_category(value))),
        }
    }
}

/// Point weight-consistency test: complete discounting against complete
/// pooling, `N(θ̂_r | μ, σ_r²+τ²) / N(θ̂_r | θ̂_o, σ_r²+σ_o²)`.
///
/// Values above one favor discounting the original study.
pub fn bf_dc_point(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
) -> Result<BayesFactorReport, ModelError> {
    let ln_num = log_predictive_vague(rep, vague)?;
    let ln_den = log_predictive_consistent(rep, original)?;
    Ok(BayesFactorReport::new(
        (ln_num - ln_den).exp(),
        "H_d (omega = 0)",
        "H_c (omega = 1)",
    ))
}

/// Weight-consistency test with a Beta prior on the weight under the
/// discounting hypothesis; the numerator is the random-weight marginal
/// likelihood. With Beta(1, ν) and growing ν this tightens to [`bf_dc_point`].
pub fn bf_dc_beta(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    prior: &BetaWeightPrior,
) -> Result<BayesFactorReport, ModelError> {
    let ln_num = marginal_likelihood_random(rep, original, vague, prior)?.ln();
    let ln_den = log_predictive_consistent(rep, original)?;
    Ok(BayesFactorReport::new(
        (ln_num - ln_den).exp(),
        &format!("H_d (omega ~ Beta({}, {}))", prior.eta, prior.nu),
        "H_c (omega = 1)",
    ))
}

/// Effect-size test of the point null against the mixture-prior alternative
/// with a Beta-distributed weight:
/// `N(θ̂_r | 0, σ_r²) / f(θ̂_r | mixture, ω ~ Beta(η, ν))`.
pub fn bf_01_mixture(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    prior: &BetaWeightPrior,
) -> Result<BayesFactorReport, ModelError> {
    rep.validate()?;
    let ln_num = normal_log_density(rep.estimate, 0.0, rep.variance())?.value();
    let ln_den = marginal_likelihood_random(rep, original, vague, prior)?.ln();
    Ok(BayesFactorReport::new(
        (ln_num - ln_den).exp(),
        "H_0 (theta = 0)",
        &format!("H_1 (mixture, omega ~ Beta({}, {}))", prior.eta, prior.nu),
    ))
}

/// Replication Bayes factor under normality: the point null against the
/// original study's posterior, the complete-pooling limit of
/// [`bf_01_mixture`].
pub fn bf_01_replication(
    rep: &StudySummary,
    original: &StudySummary,
) -> Result<BayesFactorReport, ModelError> {
    rep.validate()?;
    let ln_num = normal_log_density(rep.estimate, 0.0, rep.variance())?.value();
    let ln_den = log_predictive_consistent(rep, original)?;
    Ok(BayesFactorReport::new(
        (ln_num - ln_den).exp(),
        "H_0 (theta = 0)",
        "H_1 (omega = 1)",
    ))
}

/// Limit of the point weight-consistency Bayes factor as the replication
/// standard error goes to zero: `N(θ̂_r | μ, τ²) / N(θ̂_r | θ̂_o, σ_o²)`.
/// Bounded for positive τ² and σ_o², so shrinking the replication alone can
/// never produce overwhelming evidence either way.
pub fn bf_limit_small_sigma_r(
    rep_estimate: f64,
    original: &StudySummary,
    vague: &VagueComponent,
) -> Result<f64, ModelError> {
    original.validate()?;
    let ln_num = normal_log_density(rep_estimate, vague.mu, vague.tau2)?.value();
    let ln_den =
        normal_log_density(rep_estimate, original.estimate, original.variance())?.value();
    Ok((ln_num - ln_den).exp())
}

/// Evidence grade for a Bayes factor. Values below one are inverted first,
/// so the grade always describes the favored hypothesis.
pub fn jeffreys_category(value: f64) -> &'static str {
    let v = if value < 1.0 { 1.0 / value } else { value };
    if v <= 3.2 {
        "Barely worth mentioning"
    } else if v <= 10.0 {
        "Substantial evidence"
    } else if v <= 31.6 {
        "Strong evidence"
    } else if v <= 100.0 {
        "Very strong evidence"
    } else {
        "Decisive evidence"
    }
}

/// Report format for Bayes factors: two significant digits, values below one
/// as `1/x`, values below 1/1000 as `<1/1000`.
///
/// ```
/// use repmix_core::bayes_factors::format_bf;
///
/// assert_eq!(format_bf(27.3), "27");
/// assert_eq!(format_bf(0.2104), "1/4.8");
/// assert_eq!(format_bf(0.0000004), "<1/1000");
/// ```
pub fn format_bf(value: f64) -> String {
    if value < 0.001 {
        return "<1/1000".to_owned();
    }
    if value < 1.0 {
        return format!("1/{}", two_significant_digits(1.0 / value));
    }
    two_significant_digits(value)
}

fn two_significant_digits(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(magnitude - 1);
    let rounded = (v / scale).round() * scale;
    if rounded >= 10.0 {
        format!("{rounded:.0}")
    } else {
        format!("{rounded:.1}")
    }
}
