//! Posterior summaries for two-component normal mixtures: CDF and quantiles,
//! highest-posterior-density regions (possibly disjoint under bimodality),
//! mode counting, plot-ready density grids, and the reverse-Bayes
//! tipping-point analysis over the mixture weight.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::mixture::{posterior_fixed, FixedWeight, ModelError, TwoComponentNormalMixture, VagueComponent};
use crate::numerics::{find_root, normal_cdf, NumericsError};
use crate::study::StudySummary;

/// Window half-width, in component standard deviations, outside of which a
/// component's density is treated as numerically dead (e^-36 of its peak).
const SCAN_SIGMAS: f64 = 8.5;
/// Points per component window in the evaluation grid.
const SCAN_POINTS_PER_COMPONENT: usize = 1025;
/// Coarse bridge grid across the full span, so widely separated components
/// still share a common backbone.
const SCAN_BRIDGE_POINTS: usize = 129;
/// Tipping-point refinement width on the weight axis.
const TIPPING_REFINE_TOL: f64 = 1e-4;
/// Coarse tipping scan: 101 weights, step 0.01.
const TIPPING_GRID: usize = 101;

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("probability level must lie strictly inside (0, 1), got {0}")]
    LevelOutOfRange(f64),
    #[error("grid bounds must satisfy lo < hi and be finite, got [{lo}, {hi}]")]
    BadGridBounds { lo: f64, hi: f64 },
    #[error("a density grid needs at least two points, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A highest-posterior-density region: the union of one or two disjoint
/// intervals on which the density exceeds `density_cut`, holding
/// `attained_mass` of posterior probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpdiSet {
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
    pub attained_mass: f64,
    pub density_cut: f64,
}

impl HpdiSet {
    /// Whether `x` lies inside the region (interval endpoints included).
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|(lo, hi)| *lo <= x && x <= *hi)
    }

    /// Total length of the region.
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).sum()
    }

    /// Convex hull of the region as a single interval, for callers that
    /// insist on one interval even under bimodality.
    pub fn convex_hull(&self) -> (f64, f64) {
        let lo = self.intervals.first().map(|i| i.0).unwrap_or(f64::NAN);
        let hi = self.intervals.last().map(|i| i.1).unwrap_or(f64::NAN);
        (lo, hi)
    }

    /// `level, lo_1, hi_1[, lo_2, hi_2]` — the flat serialization convention.
    pub fn csv_fields(&self) -> Vec<String> {
        let mut fields = vec![self.level.to_string()];
        for (lo, hi) in &self.intervals {
            fields.push(lo.to_string());
            fields.push(hi.to_string());
        }
        fields
    }
}

/// Density evaluations over an ordered grid, with the analysis parameters
/// that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub points: Vec<(f64, f64)>,
    pub metadata: BTreeMap<String, String>,
}

impl DensityGrid {
    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    /// `theta,density` CSV rows, header included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,density\n");
        for (theta, density) in &self.points {
            out.push_str(&format!("{theta},{density}\n"));
        }
        out
    }
}

/// Mixture CDF: the weighted sum of the component normal CDFs.
pub fn mixture_cdf(mixture: &TwoComponentNormalMixture, x: f64) -> f64 {
    let mut cdf = 0.0;
    if mixture.weight_informative() > 0.0 {
        cdf += mixture.weight_informative()
            * normal_cdf(x, mixture.mean_informative(), mixture.var_informative())
                .expect("validated mixture");
    }
    if mixture.weight_informative() < 1.0 {
        cdf += mixture.weight_vague()
            * normal_cdf(x, mixture.mean_vague(), mixture.var_vague()).expect("validated mixture");
    }
    cdf
}

/// The unique `x` with `mixture_cdf(x) = p`, located by bracketed root
/// finding. `p` must lie strictly inside (0, 1).
pub fn posterior_quantile(
    mixture: &TwoComponentNormalMixture,
    p: f64,
) -> Result<f64, SummaryError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SummaryError::LevelOutOfRange(p));
    }
    let mut k = 9.0;
    let (mut lo, mut hi) = mixture.support_hint(k);
    // widen until the bracket straddles p; each step doubles the padding
    while (mixture_cdf(mixture, lo) >= p || mixture_cdf(mixture, hi) <= p) && k < 600.0 {
        k *= 2.0;
        (lo, hi) = mixture.support_hint(k);
    }
    let tol = (hi - lo) * 1e-15;
    let root = find_root(|x| mixture_cdf(mixture, x) - p, lo, hi, tol)?;
    Ok(root)
}

/// Number of strict local maxima of the mixture density: 1 or 2.
pub fn mode_count(mixture: &TwoComponentNormalMixture) -> usize {
    modes(mixture).len()
}

/// Locations of the strict local maxima of the density, ascending.
pub fn modes(mixture: &TwoComponentNormalMixture) -> Vec<f64> {
    let xs = scan_points(mixture);
    let ds: Vec<f64> = xs.iter().map(|x| mixture.density_derivative(*x)).collect();

    let mut found = Vec::new();
    let mut last_sign_positive: Option<(usize, bool)> = None;
    for (i, d) in ds.iter().enumerate() {
        if *d == 0.0 {
            continue;
        }
        let positive = *d > 0.0;
        if let Some((j, was_positive)) = last_sign_positive {
            if was_positive && !positive {
                // derivative went + -> -: a maximum sits in (xs[j], xs[i])
                let x = find_root(
                    |x| mixture.density_derivative(x),
                    xs[j],
                    xs[i],
                    (xs[i] - xs[j]).abs() * 1e-12 + 1e-300,
                )
                .unwrap_or_else(|_| 0.5 * (xs[j] + xs[i]));
                found.push(x);
            }
        }
        last_sign_positive = Some((i, positive));
    }
    if found.is_empty() {
        // a proper mixture density always has at least one maximum; the grid
        // can only miss it by symmetry cancellation at the shared mean
        found.push(mixture.mean());
    }
    found
}

/// Highest-posterior-density region at the given level, by water-filling.
///
/// The density cut `c*` solves `mass{θ : density(θ) ≥ c} = level`; the mass
/// of a candidate region is exact (component CDF differences at level-set
/// boundaries located by root finding), so no Monte Carlo is involved. The
/// region of a two-component normal mixture is one or two intervals.
///
/// ```
/// use repmix_core::mixture::TwoComponentNormalMixture;
/// use repmix_core::summaries::hpdi;
///
/// // a single standard normal: the 95% region is ±1.95996
/// let standard = TwoComponentNormalMixture::new(1.0, 0.0, 1.0, 0.0, 1.0).unwrap();
/// let set = hpdi(&standard, 0.95).unwrap();
/// let (lo, hi) = set.intervals[0];
/// assert!((lo + 1.95996).abs() < 1e-4 && (hi - 1.95996).abs() < 1e-4);
///
/// // far-separated modes: the region splits in two
/// let split = TwoComponentNormalMixture::new(0.5, -5.0, 0.01, 5.0, 0.01).unwrap();
/// assert_eq!(hpdi(&split, 0.95).unwrap().intervals.len(), 2);
/// ```
pub fn hpdi(mixture: &TwoComponentNormalMixture, level: f64) -> Result<HpdiSet, SummaryError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(SummaryError::LevelOutOfRange(level));
    }

    let xs = scan_points(mixture);
    let cached: Vec<f64> = xs.iter().map(|x| mixture.density(*x)).collect();
    let peak = modes(mixture)
        .iter()
        .map(|x| mixture.density(*x))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(cached.iter().copied().fold(f64::NEG_INFINITY, f64::max));

    let mass_minus_level =
        |cut: f64| mass_above_cut(mixture, &xs, &cached, cut).0 - level;
    let cut_lo = peak * 1e-15;
    let cut_hi = peak * (1.0 - 1e-12);
    let cut = find_root(mass_minus_level, cut_lo, cut_hi, peak * 1e-13)?;

    let (attained_mass, intervals) = mass_above_cut(mixture, &xs, &cached, cut);
    Ok(HpdiSet {
        level,
        intervals,
        attained_mass,
        density_cut: cut,
    })
}

/// Evaluate the mixture density on `n` equally spaced points of [lo, hi].
///
/// Metadata records the mixture weight and the vague-component parameters;
/// callers add study labels and anything else they know.
pub fn density_grid(
    mixture: &TwoComponentNormalMixture,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<DensityGrid, SummaryError> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(SummaryError::BadGridBounds { lo, hi });
    }
    if n < 2 {
        return Err(SummaryError::GridTooSmall(n));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let points = (0..n)
        .map(|i| {
            let x = if i == n - 1 { hi } else { lo + i as f64 * step };
            (x, mixture.density(x))
        })
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("omega".to_owned(), mixture.weight_informative().to_string());
    metadata.insert("mu".to_owned(), mixture.mean_vague().to_string());
    metadata.insert("tau2".to_owned(), mixture.var_vague().to_string());
    Ok(DensityGrid { points, metadata })
}

/// Outcome of the tipping-point analysis over the mixture weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TippingPoint {
    /// Smallest weight at which the HPDI excludes the threshold; `None` when
    /// no weight in [0, 1] does.
    pub omega_star: Option<f64>,
    pub regime: TippingRegime,
    /// Every weight at which the exclusion indicator flips, refined to 1e-4.
    /// More than one entry means the indicator is not monotone in the weight.
    pub crossings: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TippingRegime {
    AlwaysExcludes,
    NeverExcludes,
    Crossing,
}

/// Reverse-Bayes tipping point: how far the prior weight must move before
/// the level-HPDI of the posterior excludes `threshold`.
///
/// Exclusion is not assumed monotone in the weight: a 101-point scan finds
/// every sign-change bracket and each is bisected to 1e-4. If the HPDI
/// already excludes the threshold at weight 0 the regime is
/// `AlwaysExcludes` with a tipping point of 0; if no weight excludes it the
/// regime is `NeverExcludes`.
pub fn tipping_point(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    level: f64,
    threshold: f64,
) -> Result<TippingPoint, SummaryError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(SummaryError::LevelOutOfRange(level));
    }
    let excludes = |w: f64| -> Result<bool, SummaryError> {
        let weight = FixedWeight::new(w)?;
        let posterior = posterior_fixed(rep, original, vague, weight)?;
        Ok(!hpdi(&posterior, level)?.contains(threshold))
    };

    let mut flags = Vec::with_capacity(TIPPING_GRID);
    for i in 0..TIPPING_GRID {
        flags.push(excludes(i as f64 / (TIPPING_GRID - 1) as f64)?);
    }

    let mut crossings = Vec::new();
    let mut first_onset: Option<f64> = None;
    for i in 1..TIPPING_GRID {
        if flags[i] != flags[i - 1] {
            let mut lo = (i - 1) as f64 / (TIPPING_GRID - 1) as f64;
            let mut hi = i as f64 / (TIPPING_GRID - 1) as f64;
            let lo_flag = flags[i - 1];
            while hi - lo > TIPPING_REFINE_TOL {
                let mid = 0.5 * (lo + hi);
                if excludes(mid)? == lo_flag {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let flip = 0.5 * (lo + hi);
            crossings.push(flip);
            if !lo_flag && first_onset.is_none() {
                first_onset = Some(flip);
            }
        }
    }

    if flags[0] {
        Ok(TippingPoint {
            omega_star: Some(0.0),
            regime: TippingRegime::AlwaysExcludes,
            crossings,
        })
    } else if let Some(onset) = first_onset {
        Ok(TippingPoint {
            omega_star: Some(onset),
            regime: TippingRegime::Crossing,
            crossings,
        })
    } else {
        Ok(TippingPoint {
            omega_star: None,
            regime: TippingRegime::NeverExcludes,
            crossings,
        })
    }
}

/// One row of a posterior sweep over fixed weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSweepRow {
    pub omega: f64,
    pub median: f64,
    pub hpdi: HpdiSet,
}

/// Posterior median and HPDI across an even grid of fixed weights — the data
/// behind a tipping-point plot.
pub fn weight_sweep(
    rep: &StudySummary,
    original: &StudySummary,
    vague: &VagueComponent,
    level: f64,
    points: usize,
) -> Result<Vec<WeightSweepRow>, SummaryError> {
    if points < 2 {
        return Err(SummaryError::GridTooSmall(points));
    }
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let omega = i as f64 / (points - 1) as f64;
        let posterior = posterior_fixed(rep, original, vague, FixedWeight::new(omega)?)?;
        rows.push(WeightSweepRow {
            omega,
            median: posterior_quantile(&posterior, 0.5)?,
            hpdi: hpdi(&posterior, level)?,
        });
    }
    Ok(rows)
}

/// Evaluation grid: a dense window around every active component plus a
/// coarse bridge across the whole span, ascending and deduplicated.
fn scan_points(mixture: &TwoComponentNormalMixture) -> Vec<f64> {
    let comps = mixture.active_components();
    let (span_lo, span_hi) = mixture.support_hint(SCAN_SIGMAS);
    let mut xs = Vec::with_capacity(comps.len() * SCAN_POINTS_PER_COMPONENT + SCAN_BRIDGE_POINTS);
    for (mean, sd) in &comps {
        let lo = mean - SCAN_SIGMAS * sd;
        let hi = mean + SCAN_SIGMAS * sd;
        let step = (hi - lo) / (SCAN_POINTS_PER_COMPONENT - 1) as f64;
        for i in 0..SCAN_POINTS_PER_COMPONENT {
            xs.push(lo + i as f64 * step);
        }
    }
    let step = (span_hi - span_lo) / (SCAN_BRIDGE_POINTS - 1) as f64;
    for i in 0..SCAN_BRIDGE_POINTS {
        xs.push(span_lo + i as f64 * step);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    xs.dedup();
    xs
}

/// Mass and intervals of the level set {θ : density(θ) ≥ cut}.
///
/// `cached` holds the density at every grid point; sign changes of
/// `density − cut` bracket the level-set boundaries, which are then polished
/// by root finding. Interval mass is a component-CDF difference, so the
/// returned mass is exact up to the boundary tolerance.
fn mass_above_cut(
    mixture: &TwoComponentNormalMixture,
    xs: &[f64],
    cached: &[f64],
    cut: f64,
) -> (f64, Vec<(f64, f64)>) {
    let span = xs[xs.len() - 1] - xs[0];
    let tol = span * 1e-13;
    let mut boundaries = Vec::new();
    for i in 1..xs.len() {
        let a = cached[i - 1] - cut;
        let b = cached[i] - cut;
        if a == 0.0 {
            boundaries.push(xs[i - 1]);
        } else if a.signum() != b.signum() && b != 0.0 {
            let x = find_root(|x| mixture.density(x) - cut, xs[i - 1], xs[i], tol)
                .unwrap_or_else(|_| 0.5 * (xs[i - 1] + xs[i]));
            boundaries.push(x);
        }
    }
    if cached[xs.len() - 1] == cut {
        boundaries.push(xs[xs.len() - 1]);
    }

    let mut edges = Vec::with_capacity(boundaries.len() + 2);
    edges.push(xs[0]);
    edges.extend(boundaries);
    edges.push(xs[xs.len() - 1]);

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        if mixture.density(0.5 * (a + b)) >= cut {
            match intervals.last_mut() {
                // merge touching segments
                Some(last) if last.1 == a => last.1 = b,
                _ => intervals.push((a, b)),
            }
        }
    }

    let mass = intervals
        .iter()
        .map(|(a, b)| mixture_cdf(mixture, *b) - mixture_cdf(mixture, *a))
        .sum();
    (mass, intervals)
}
