//! Cross-module invariants checked against brute-force oracles: pointwise
//! Bayes-theorem identities, quadrature normalization, marginalization
//! consistency of the joint posterior, grid-search maximization, and HPDI
//! optimality.

mod support;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use repmix_core::mixture::{
    build_prior, empirical_bayes_weight, marginal_likelihood_fixed, posterior_fixed, update_fixed,
    FixedWeight, TwoComponentNormalMixture, VagueComponent,
};
use repmix_core::numerics::integrate_with_breakpoints;
use repmix_core::random_weight::{
    effect_marginal_posterior, joint_posterior_density, weight_marginal_posterior, BetaWeightPrior,
};
use repmix_core::study::StudySummary;
use repmix_core::summaries::{hpdi, mixture_cdf, posterior_quantile};

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn random_instance(r: &mut StdRng) -> (StudySummary, StudySummary, VagueComponent, f64) {
    let original = StudySummary::new("o", r.random_range(-2.0..2.0), r.random_range(0.01..1.0)).unwrap();
    let rep = StudySummary::new("r", r.random_range(-2.0..2.0), r.random_range(0.01..1.0)).unwrap();
    let vague = VagueComponent::new(0.0, r.random_range(0.5..10.0)).unwrap();
    let w = r.random_range(0.0..1.0);
    (original, rep, vague, w)
}

#[test]
fn posterior_identity_holds_pointwise() {
    // posterior density × marginal likelihood = likelihood × prior density,
    // everywhere; checked on a 512-point grid for randomized instances.
    let mut r = rng(1101);
    for _ in 0..40 {
        let (original, rep, vague, w) = random_instance(&mut r);
        let weight = FixedWeight::new(w).unwrap();
        let prior = build_prior(&original, &vague, weight).unwrap();
        let posterior = update_fixed(&prior, &rep).unwrap();
        let ml = marginal_likelihood_fixed(&rep, &original, &vague, weight).unwrap();
        if ml < 1e-280 {
            continue;
        }
        let (lo, hi) = support::effect_range(&rep, &original, &vague);
        for i in 0..512 {
            let theta = lo + (hi - lo) * i as f64 / 511.0;
            let lhs = posterior.density(theta) * ml;
            let rhs = repmix_core::numerics::normal_density(rep.estimate, theta, rep.variance())
                .unwrap()
                * prior.density(theta);
            let scale = lhs.abs().max(rhs.abs());
            if scale > 1e-290 {
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * scale,
                    "identity broke at theta={theta}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

#[test]
fn posterior_density_normalizes_under_quadrature() {
    let mut r = rng(1102);
    for _ in 0..25 {
        let (original, rep, vague, w) = random_instance(&mut r);
        let posterior = posterior_fixed(&rep, &original, &vague, FixedWeight::new(w).unwrap()).unwrap();
        let (lo, hi) = posterior.support_hint(8.0);
        let means = [posterior.mean_informative(), posterior.mean_vague()];
        let mass =
            integrate_with_breakpoints(|t| posterior.density(t), lo, hi, &means, 1e-9).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "posterior mass {mass}");
    }
}

#[test]
fn joint_posterior_marginalizes_to_both_closed_forms() {
    let original = StudySummary::new("original", 0.21, 0.05).unwrap();
    let vague = VagueComponent::unit_information();
    let prior = BetaWeightPrior::new(1.5, 2.5).unwrap();
    for rep in [
        StudySummary::new("rep1", 0.09, 0.05).unwrap(),
        StudySummary::new("rep3", 0.44, 0.04).unwrap(),
    ] {
        // integrating the weight out at fixed theta recovers the effect marginal
        let effect = effect_marginal_posterior(&rep, &original, &vague, &prior).unwrap();
        let (lo, hi) = effect.support_hint(6.0);
        for i in 0..128 {
            let theta = lo + (hi - lo) * i as f64 / 127.0;
            let via_joint = integrate_with_breakpoints(
                |w| joint_posterior_density(theta, w, &rep, &original, &vague, &prior).unwrap(),
                0.0,
                1.0,
                &[],
                1e-11,
            )
            .unwrap();
            let closed = effect.density(theta);
            assert!(
                (via_joint - closed).abs() <= 1e-8 * closed.max(1.0),
                "theta={theta}: {via_joint} vs {closed}"
            );
        }
        // integrating theta out at fixed weight recovers the weight marginal
        let weight_post = weight_marginal_posterior(&rep, &original, &vague, &prior).unwrap();
        let (lo, hi) = support::effect_range(&rep, &original, &vague);
        let breakpoints = [rep.estimate, original.estimate, vague.mu];
        for i in 0..=16 {
            let w = i as f64 / 16.0;
            let via_joint = integrate_with_breakpoints(
                |theta| {
                    joint_posterior_density(theta, w, &rep, &original, &vague, &prior).unwrap()
                },
                lo,
                hi,
                &breakpoints,
                1e-11,
            )
            .unwrap();
            let closed = weight_post.density(w).unwrap();
            assert!(
                (via_joint - closed).abs() <= 1e-8 * closed.max(1.0),
                "w={w}: {via_joint} vs {closed}"
            );
        }
    }
}

#[test]
fn empirical_bayes_matches_grid_maximization() {
    let mut r = rng(1103);
    for _ in 0..60 {
        let (original, rep, vague, _) = random_instance(&mut r);
        let eb = empirical_bayes_weight(&rep, &original, &vague).unwrap();
        let grid_best = support::empirical_bayes_by_grid(&rep, &original, &vague);
        if eb.tie {
            continue;
        }
        assert_eq!(
            eb.omega, grid_best,
            "EB weight disagrees with grid search for {rep:?} vs {original:?}"
        );
    }
}

#[test]
fn hpdi_no_shorter_single_interval_exists() {
    let mut r = rng(1104);
    for _ in 0..20 {
        let w = r.random_range(0.05..0.95);
        let m1 = r.random_range(-1.0..1.0);
        let m2 = r.random_range(-1.0..1.0);
        let v1 = r.random_range(0.002..0.5);
        let v2 = r.random_range(0.002..0.5);
        let mixture = TwoComponentNormalMixture::new(w, m1, v1, m2, v2).unwrap();
        let level = 0.9;
        let set = hpdi(&mixture, level).unwrap();
        let best_single = support::best_single_interval_length(&mixture, level);
        assert!(
            set.total_length() <= best_single + 1e-6,
            "hpdi length {} exceeds best single interval {best_single}",
            set.total_length()
        );
    }
}

#[test]
fn hpdi_region_is_a_density_level_set() {
    let mut r = rng(1105);
    for _ in 0..15 {
        let (original, rep, vague, w) = random_instance(&mut r);
        let posterior = posterior_fixed(&rep, &original, &vague, FixedWeight::new(w).unwrap()).unwrap();
        let set = hpdi(&posterior, 0.95).unwrap();
        let (lo, hi) = posterior.support_hint(8.0);
        for i in 0..=2000 {
            let x = lo + (hi - lo) * i as f64 / 2000.0;
            let d = posterior.density(x);
            if set.contains(x) {
                assert!(d >= set.density_cut - 1e-9 * set.density_cut.max(1.0));
            } else {
                assert!(
                    d <= set.density_cut + 1e-9,
                    "outside point x={x} has density {d} above cut {}",
                    set.density_cut
                );
            }
        }
        assert!((set.attained_mass - 0.95).abs() < 1e-6);
    }
}

#[test]
fn quantile_inverts_cdf_on_random_mixtures() {
    let mut r = rng(1106);
    for _ in 0..20 {
        let (original, rep, vague, w) = random_instance(&mut r);
        let posterior = posterior_fixed(&rep, &original, &vague, FixedWeight::new(w).unwrap()).unwrap();
        for i in 1..20 {
            let p = i as f64 / 20.0;
            if !(0.01..=0.99).contains(&p) {
                continue;
            }
            let x = posterior_quantile(&posterior, p).unwrap();
            let back = mixture_cdf(&posterior, x);
            assert!((back - p).abs() < 1e-10, "p={p}: cdf(quantile) = {back}");
        }
    }
}

#[test]
fn conflicting_replication_widens_the_flat_prior_hpdi() {
    // rep 3 disagrees with the original study; under a flat weight prior the
    // effect marginal borrows little and ends up *wider* than the
    // replication-only posterior. Reference endpoints (2 dp): mixture
    // (0.35, 0.52), replication-only (0.36, 0.52).
    let original = StudySummary::new("original", 0.21, 0.05).unwrap();
    let vague = VagueComponent::unit_information();
    let rep3 = StudySummary::new("rep3", 0.44, 0.04).unwrap();

    let mixture_posterior =
        effect_marginal_posterior(&rep3, &original, &vague, &BetaWeightPrior::flat()).unwrap();
    let mixture_set = hpdi(&mixture_posterior, 0.95).unwrap();
    assert_eq!(mixture_set.intervals.len(), 1);
    let (lo, hi) = mixture_set.intervals[0];
    assert_eq!(((lo * 100.0).round() / 100.0, (hi * 100.0).round() / 100.0), (0.35, 0.52));

    let replication_only =
        posterior_fixed(&rep3, &original, &vague, FixedWeight::ZERO).unwrap();
    let alone_set = hpdi(&replication_only, 0.95).unwrap();
    let (lo, hi) = alone_set.intervals[0];
    assert_eq!(((lo * 100.0).round() / 100.0, (hi * 100.0).round() / 100.0), (0.36, 0.52));

    assert!(
        mixture_set.total_length() > alone_set.total_length(),
        "conflict should inflate the credible region: {} vs {}",
        mixture_set.total_length(),
        alone_set.total_length()
    );
}

#[test]
fn weight_posterior_density_normalizes() {
    let original = StudySummary::new("original", 0.21, 0.05).unwrap();
    let vague = VagueComponent::unit_information();
    for rep in [
        StudySummary::new("rep1", 0.09, 0.05).unwrap(),
        StudySummary::new("rep3", 0.44, 0.04).unwrap(),
    ] {
        for (eta, nu) in [(1.0, 1.0), (1.0, 2.0), (3.0, 1.5)] {
            let prior = BetaWeightPrior::new(eta, nu).unwrap();
            let wp = weight_marginal_posterior(&rep, &original, &vague, &prior).unwrap();
            let mass = integrate_with_breakpoints(
                |w| wp.density(w).unwrap(),
                0.0,
                1.0,
                &[],
                1e-11,
            )
            .unwrap();
            assert!(
                (mass - 1.0).abs() < 1e-9,
                "Beta({eta},{nu}) weight posterior mass {mass}"
            );
        }
    }
}

#[test]
fn quadrature_cdf_agrees_with_closed_form() {
    let original = StudySummary::new("original", 0.21, 0.05).unwrap();
    let vague = VagueComponent::unit_information();
    let rep = StudySummary::new("rep1", 0.09, 0.05).unwrap();
    let posterior = posterior_fixed(&rep, &original, &vague, FixedWeight::HALF).unwrap();
    for x in [-0.1, 0.05, 0.1432931198878886, 0.2, 0.4] {
        let closed = mixture_cdf(&posterior, x);
        let quad = support::cdf_by_quadrature(&posterior, x);
        assert!((closed - quad).abs() < 1e-9, "x={x}: {closed} vs {quad}");
    }
}
