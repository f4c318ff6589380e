//! Brute-force oracles shared by the integration suites.
//!
//! Everything here recomputes model quantities from first principles —
//! quadrature over the likelihood-times-prior integrand, grid searches,
//! density sums — without touching the closed-form paths under test.

#![allow(dead_code)] // each test target uses a different subset

use repmix_core::mixture::{build_prior, FixedWeight, TwoComponentNormalMixture, VagueComponent};
use repmix_core::numerics::{beta_density, integrate_with_breakpoints, normal_density};
use repmix_core::random_weight::BetaWeightPrior;
use repmix_core::study::StudySummary;

/// Quadrature range for an effect-size integrand: every relevant center
/// padded by eight of the widest standard deviation.
pub fn effect_range(rep: &StudySummary, original: &StudySummary, vague: &VagueComponent) -> (f64, f64) {
    let centers = [rep.estimate, original.estimate, vague.mu];
    let sds = [rep.std_error, original.std_error, vague.tau2.sqrt()];
    let lo = centers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sd = sds.iter().copied().fold(0.0, f64::max);
    (lo - 8.0 * sd, hi + 8.0 * sd)
}

/// Marginal likelihood by 1-D quadrature of likelihood × mixture prior.
/// Two passes so small values still come back with relative accuracy.
pub fn ml_fixed_by_quadrature(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    w: f64,
) -> f64 {
    let prior = build_prior(original, vague, FixedWeight::new(w).unwrap()).unwrap();
    let (lo, hi) = effect_range(rep, original, vague);
    let breakpoints = [rep.estimate, original.estimate, vague.mu];
    let f = |theta: f64| {
        normal_density(rep.estimate, theta, rep.variance()).unwrap() * prior.density(theta)
    };
    let first = integrate_with_breakpoints(f, lo, hi, &breakpoints, 1e-11).unwrap();
    if first.abs() < 1e-3 && first.abs() > 0.0 {
        let tol = (first.abs() * 1e-10).max(1e-306);
        integrate_with_breakpoints(f, lo, hi, &breakpoints, tol).unwrap_or(first)
    } else {
        first
    }
}

/// Random-weight marginal likelihood by nested 2-D quadrature: for each
/// effect value the weight is integrated out numerically against its Beta
/// prior, then the effect is integrated out.
pub fn ml_random_by_quadrature(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    prior: &BetaWeightPrior,
) -> f64 {
    let (lo, hi) = effect_range(rep, original, vague);
    let breakpoints = [rep.estimate, original.estimate, vague.mu];
    let f = |theta: f64| {
        let lik = normal_density(rep.estimate, theta, rep.variance()).unwrap();
        let n_informative = normal_density(theta, original.estimate, original.variance()).unwrap();
        let n_vague = normal_density(theta, vague.mu, vague.tau2).unwrap();
        let inner = integrate_with_breakpoints(
            |w: f64| {
                beta_density(w, prior.eta, prior.nu).unwrap()
                    * (w * n_informative + (1.0 - w) * n_vague)
            },
            0.0,
            1.0,
            &[],
            1e-12,
        )
        .unwrap();
        lik * inner
    };
    let first = integrate_with_breakpoints(f, lo, hi, &breakpoints, 1e-9).unwrap();
    if first.abs() < 1e-3 && first.abs() > 0.0 {
        let tol = (first.abs() * 1e-9).max(1e-306);
        integrate_with_breakpoints(f, lo, hi, &breakpoints, tol).unwrap_or(first)
    } else {
        first
    }
}

/// Posterior density at `theta` straight from the pointwise Bayes theorem:
/// likelihood times prior over the quadrature normalizer.
pub fn posterior_density_by_bayes_theorem(
    theta: f64,
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    w: f64,
    normalizer: f64,
) -> f64 {
    let prior = build_prior(original, vague, FixedWeight::new(w).unwrap()).unwrap();
    normal_density(rep.estimate, theta, rep.variance()).unwrap() * prior.density(theta) / normalizer
}

/// Mixture CDF by quadrature of the density, independent of the erfc path.
pub fn cdf_by_quadrature(mixture: &TwoComponentNormalMixture, x: f64) -> f64 {
    let (lo, _) = mixture.support_hint(10.0);
    if x <= lo {
        return 0.0;
    }
    let means = [mixture.mean_informative(), mixture.mean_vague()];
    integrate_with_breakpoints(|t| mixture.density(t), lo, x, &means, 1e-12).unwrap()
}

/// Empirical Bayes weight by brute-force grid maximization of the marginal
/// likelihood over {0, 0.01, ..., 1}.
pub fn empirical_bayes_by_grid(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=100 {
        let w = i as f64 / 100.0;
        let ml = repmix_core::mixture::marginal_likelihood_fixed(
            rep,
            original,
            vague,
            FixedWeight::new(w).unwrap(),
        )
        .unwrap();
        if ml > best.0 {
            best = (ml, w);
        }
    }
    best.1
}

/// Shortest single interval holding `level` of the mixture mass, by scanning
/// left endpoints and completing each candidate through the CDF.
pub fn best_single_interval_length(mixture: &TwoComponentNormalMixture, level: f64) -> f64 {
    let (lo, hi) = mixture.support_hint(8.5);
    let n = 4000;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = lo + (hi - lo) * i as f64 / n as f64;
        let pa = repmix_core::summaries::mixture_cdf(mixture, a);
        let target = pa + level;
        if target >= 1.0 {
            break;
        }
        let b = repmix_core::summaries::posterior_quantile(mixture, target).unwrap();
        if b - a < best {
            best = b - a;
        }
    }
    best
}

/// Total-variation distance between two densities on [0, 1], trapezoid rule
/// on an `n`-point grid.
pub fn total_variation_on_unit_grid<F, G>(p: F, q: G, n: usize) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let mut acc = 0.0;
    let mut prev = (p(0.0) - q(0.0)).abs();
    for i in 1..n {
        let w = i as f64 / (n - 1) as f64;
        let cur = (p(w) - q(w)).abs();
        acc += 0.5 * (prev + cur) / (n - 1) as f64;
        prev = cur;
    }
    0.5 * acc
}

/// The bundled running-example dataset (estimates and standard errors as in
/// the published tables).
pub fn labels_dataset() -> repmix_core::study::ReplicationSet {
    repmix_core::study::ReplicationSet::new(
        StudySummary::new("original", 0.21, 0.05).unwrap(),
        vec![
            StudySummary::new("rep1", 0.09, 0.05).unwrap(),
            StudySummary::new("rep2", 0.21, 0.06).unwrap(),
            StudySummary::new("rep3", 0.44, 0.04).unwrap(),
        ],
    )
    .unwrap()
}
