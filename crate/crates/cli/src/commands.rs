//! The four subcommand engines. Each builds a typed report that renders to
//! a human table, CSV, or JSON; JSON key order follows struct order, so
//! identical invocations give byte-identical output.

use serde::Serialize;

use repmix_core::bayes_factors::{bf_01_mixture, bf_01_replication, bf_dc_beta, bf_dc_point};
use repmix_core::mixture::{empirical_bayes_weight, posterior_fixed, FixedWeight};
use repmix_core::random_weight::{weight_marginal_posterior, BetaWeightPrior, WeightPosterior};
use repmix_core::study::StudySummary;
use repmix_core::summaries::{
    density_grid, hpdi, mode_count, posterior_quantile, tipping_point, weight_sweep, HpdiSet,
    TippingRegime,
};
use repmix_core::{BayesFactorReport, ReplicationSet, TwoComponentNormalMixture};

use crate::config::{AnalysisConfig, WeightMode};
use crate::error::CliError;

const OMEGA_TRACE_POINTS: usize = 101;

fn hpdi_display(set: &HpdiSet) -> String {
    set.intervals
        .iter()
        .map(|(lo, hi)| format!("[{lo:.4}, {hi:.4}]"))
        .collect::<Vec<_>>()
        .join(" ∪ ")
}

/// Collapse a disjoint region to its convex hull, warning on stderr; the
/// attained mass is recomputed for the hull so the report stays honest.
fn force_hull(set: HpdiSet, mixture: &TwoComponentNormalMixture, label: &str) -> HpdiSet {
    if set.intervals.len() <= 1 {
        return set;
    }
    let (lo, hi) = set.convex_hull();
    eprintln!(
        "warning: the {} HPDI for `{label}` is {} disjoint intervals; --force-interval reports their convex hull",
        set.level,
        set.intervals.len()
    );
    let attained_mass = repmix_core::summaries::mixture_cdf(mixture, hi)
        - repmix_core::summaries::mixture_cdf(mixture, lo);
    HpdiSet {
        level: set.level,
        intervals: vec![(lo, hi)],
        attained_mass,
        density_cut: set.density_cut,
    }
}

/// Up to two intervals flattened into four CSV cells, empty when absent.
fn interval_cells(set: &HpdiSet) -> [String; 4] {
    let mut cells = [String::new(), String::new(), String::new(), String::new()];
    for (i, (lo, hi)) in set.intervals.iter().take(2).enumerate() {
        cells[2 * i] = lo.to_string();
        cells[2 * i + 1] = hi.to_string();
    }
    cells
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub command: &'static str,
    pub config: AnalysisConfig,
    pub force_interval: bool,
    pub rows: Vec<AnalyzeRow>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeRow {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    /// Prior weight used for this row (fixed value, Beta expectation, or the
    /// empirical Bayes pick).
    pub omega_prior: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_bayes_tie: Option<bool>,
    pub posterior: TwoComponentNormalMixture,
    pub median: f64,
    pub hpdi: HpdiSet,
    pub mode_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_posterior: Option<WeightPosterior>,
}

pub fn run_analyze(
    config: &AnalysisConfig,
    set: &ReplicationSet,
    force_interval: bool,
) -> Result<AnalyzeReport, CliError> {
    let vague = config.vague();
    let mut rows = Vec::new();
    for row in crate::config::select_rows(set, config.pooling, config.round_pooled) {
        let mode = config.weight_mode.unwrap_or(WeightMode::Fixed(0.5));
        let (omega_prior, tie, weight_posterior) = match mode {
            WeightMode::Fixed(w) => (w, None, None),
            WeightMode::Beta { eta, nu } => {
                let prior = BetaWeightPrior::new(eta, nu)?;
                let wp = weight_marginal_posterior(&row, &set.original, &vague, &prior)?;
                (prior.expected_weight(), None, Some(wp))
            }
            WeightMode::EmpiricalBayes => {
                let eb = empirical_bayes_weight(&row, &set.original, &vague)?;
                (eb.omega, Some(eb.tie), None)
            }
        };
        let posterior = posterior_fixed(&row, &set.original, &vague, FixedWeight::new(omega_prior)?)?;
        let mut region = hpdi(&posterior, config.level)?;
        if force_interval {
            region = force_hull(region, &posterior, &row.label);
        }
        rows.push(AnalyzeRow {
            label: row.label.clone(),
            estimate: row.estimate,
            std_error: row.std_error,
            omega_prior,
            empirical_bayes_tie: tie,
            median: posterior_quantile(&posterior, 0.5)?,
            hpdi: region,
            mode_count: mode_count(&posterior),
            weight_posterior,
            posterior,
        });
    }
    Ok(AnalyzeReport {
        command: "analyze",
        config: config.clone(),
        force_interval,
        rows,
    })
}

impl AnalyzeReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "analysis: mu={} tau2={} level={} weight_mode={:?}\n\n",
            self.config.mu,
            self.config.tau2,
            self.config.level,
            self.config.weight_mode.unwrap_or(WeightMode::Fixed(0.5))
        ));
        out.push_str(&format!(
            "{:<12} {:>9} {:>9} {:>7} {:>8} {:>9}  {:<28} {:>5}\n",
            "label", "estimate", "std_err", "omega", "w_post", "median", "hpdi", "modes"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>9.4} {:>9.4} {:>7.4} {:>8.4} {:>9.4}  {:<28} {:>5}\n",
                r.label,
                r.estimate,
                r.std_error,
                r.omega_prior,
                r.posterior.weight_informative(),
                r.median,
                hpdi_display(&r.hpdi),
                r.mode_count,
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,estimate,std_error,omega_prior,weight_informative,mean_informative,var_informative,mean_vague,var_vague,median,hpdi_level,hpdi_lo_1,hpdi_hi_1,hpdi_lo_2,hpdi_hi_2,mode_count\n",
        );
        for r in &self.rows {
            let cells = interval_cells(&r.hpdi);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.label,
                r.estimate,
                r.std_error,
                r.omega_prior,
                r.posterior.weight_informative(),
                r.posterior.mean_informative(),
                r.posterior.var_informative(),
                r.posterior.mean_vague(),
                r.posterior.var_vague(),
                r.median,
                r.hpdi.level,
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                r.mode_count,
            ));
        }
        out
    }
}

// --------------------------------------------------------------------- bf

#[derive(Debug, Serialize)]
pub struct BfReport {
    pub command: &'static str,
    pub config: AnalysisConfig,
    pub nu_dc: f64,
    pub eta: f64,
    pub nu: f64,
    pub rows: Vec<BfRow>,
}

#[derive(Debug, Serialize)]
pub struct BfRow {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub bf_dc_point: BayesFactorReport,
    pub bf_dc_beta: BayesFactorReport,
    pub bf_01_mixture: BayesFactorReport,
    pub bf_01_replication: BayesFactorReport,
}

pub fn run_bf(
    config: &AnalysisConfig,
    set: &ReplicationSet,
    nu_dc: f64,
    eta: f64,
    nu: f64,
) -> Result<BfReport, CliError> {
    let vague = config.vague();
    let dc_prior = BetaWeightPrior::new(1.0, nu_dc)?;
    let effect_prior = BetaWeightPrior::new(eta, nu)?;
    let mut rows = Vec::new();
    for row in crate::config::select_rows(set, config.pooling, config.round_pooled) {
        rows.push(BfRow {
            label: row.label.clone(),
            estimate: row.estimate,
            std_error: row.std_error,
            bf_dc_point: bf_dc_point(&row, &set.original, &vague)?,
            bf_dc_beta: bf_dc_beta(&row, &set.original, &vague, &dc_prior)?,
            bf_01_mixture: bf_01_mixture(&row, &set.original, &vague, &effect_prior)?,
            bf_01_replication: bf_01_replication(&row, &set.original)?,
        });
    }
    Ok(BfReport {
        command: "bf",
        config: config.clone(),
        nu_dc,
        eta,
        nu,
        rows,
    })
}

impl BfReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "weight tests: H_d vs H_c (point and Beta(1, {})); effect tests: H_0 vs H_1 (Beta({}, {}) and omega = 1)\n\n",
            self.nu_dc, self.eta, self.nu
        ));
        out.push_str(&format!(
            "{:<12} {:>9} {:>9} {:>12} {:>12} {:>14} {:>14}\n",
            "label", "estimate", "std_err", "bf_dc", "bf_dc_beta", "bf_01_mixture", "bf_01_repl"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>9.4} {:>9.4} {:>12} {:>12} {:>14} {:>14}\n",
                r.label,
                r.estimate,
                r.std_error,
                r.bf_dc_point.formatted,
                r.bf_dc_beta.formatted,
                r.bf_01_mixture.formatted,
                r.bf_01_replication.formatted,
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,estimate,std_error,bf_dc_point,bf_dc_point_formatted,bf_dc_beta,bf_dc_beta_formatted,bf_01_mixture,bf_01_mixture_formatted,bf_01_replication,bf_01_replication_formatted\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.label,
                r.estimate,
                r.std_error,
                r.bf_dc_point.value,
                r.bf_dc_point.formatted,
                r.bf_dc_beta.value,
                r.bf_dc_beta.formatted,
                r.bf_01_mixture.value,
                r.bf_01_mixture.formatted,
                r.bf_01_replication.value,
                r.bf_01_replication.formatted,
            ));
        }
        out
    }
}

// ---------------------------------------------------------------- tipping

#[derive(Debug, Serialize)]
pub struct TippingReport {
    pub command: &'static str,
    pub config: AnalysisConfig,
    pub threshold: f64,
    pub force_interval: bool,
    pub rows: Vec<TippingRow>,
}

#[derive(Debug, Serialize)]
pub struct TippingRow {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub omega_star: Option<f64>,
    pub regime: TippingRegime,
    pub crossings: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub omega: f64,
    pub median: f64,
    pub hpdi: HpdiSet,
}

pub fn run_tipping(
    config: &AnalysisConfig,
    set: &ReplicationSet,
    threshold: f64,
    force_interval: bool,
) -> Result<TippingReport, CliError> {
    if !threshold.is_finite() {
        return Err(CliError::Config(crate::config::ConfigError::Invalid {
            field: "--threshold".into(),
            message: format!("must be finite, got {threshold}"),
        }));
    }
    let vague = config.vague();
    let mut rows = Vec::new();
    for row in crate::config::select_rows(set, config.pooling, config.round_pooled) {
        let tp = tipping_point(&row, &set.original, &vague, config.level, threshold)?;
        let trace = weight_sweep(&row, &set.original, &vague, config.level, OMEGA_TRACE_POINTS)?
            .into_iter()
            .map(|sweep| {
                let hpdi = if force_interval {
                    let posterior = posterior_fixed(
                        &row,
                        &set.original,
                        &vague,
                        FixedWeight::new(sweep.omega)?,
                    )?;
                    force_hull(sweep.hpdi, &posterior, &row.label)
                } else {
                    sweep.hpdi
                };
                Ok(TraceRow {
                    omega: sweep.omega,
                    median: sweep.median,
                    hpdi,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        rows.push(TippingRow {
            label: row.label.clone(),
            estimate: row.estimate,
            std_error: row.std_error,
            omega_star: tp.omega_star,
            regime: tp.regime,
            crossings: tp.crossings,
            trace,
        });
    }
    Ok(TippingReport {
        command: "tipping",
        config: config.clone(),
        threshold,
        force_interval,
        rows,
    })
}

impl TippingReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "tipping point: smallest weight whose {}-HPDI excludes {} (trace in csv/json output)\n\n",
            self.config.level, self.threshold
        ));
        out.push_str(&format!(
            "{:<12} {:>9} {:>9} {:>10} {:<16} {}\n",
            "label", "estimate", "std_err", "omega*", "regime", "crossings"
        ));
        for r in &self.rows {
            let omega = r
                .omega_star
                .map(|w| format!("{w:.4}"))
                .unwrap_or_else(|| "none".into());
            let crossings = if r.crossings.is_empty() {
                "-".to_owned()
            } else {
                r.crossings
                    .iter()
                    .map(|c| format!("{c:.4}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            out.push_str(&format!(
                "{:<12} {:>9.4} {:>9.4} {:>10} {:<16} {}\n",
                r.label,
                r.estimate,
                r.std_error,
                omega,
                format!("{:?}", r.regime),
                crossings,
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,omega_star,regime,omega,median,hpdi_lo_1,hpdi_hi_1,hpdi_lo_2,hpdi_hi_2\n",
        );
        for r in &self.rows {
            let omega_star = r.omega_star.map(|w| w.to_string()).unwrap_or_default();
            let regime = match r.regime {
                TippingRegime::AlwaysExcludes => "always_excludes",
                TippingRegime::NeverExcludes => "never_excludes",
                TippingRegime::Crossing => "crossing",
            };
            for t in &r.trace {
                let cells = interval_cells(&t.hpdi);
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.label, omega_star, regime, t.omega, t.median, cells[0], cells[1], cells[2], cells[3],
                ));
            }
        }
        out
    }
}

// ------------------------------------------------------------------- grid

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
// the *_posterior names are the CLI/JSON contract
#[allow(clippy::enum_variant_names)]
pub enum GridTarget {
    EffectPosterior,
    WeightPosterior,
    JointPosterior,
}

#[derive(Debug, Serialize)]
pub struct GridReport {
    pub command: &'static str,
    pub target: GridTarget,
    pub config: AnalysisConfig,
    pub eta: f64,
    pub nu: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<GridCurve>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lattices: Vec<JointLattice>,
}

#[derive(Debug, Serialize)]
pub struct GridCurve {
    pub label: String,
    /// Fixed weight for effect-posterior curves; absent for weight curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize)]
pub struct JointLattice {
    pub label: String,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    /// Density values, one inner vector per theta, indexed by omega.
    pub density: Vec<Vec<f64>>,
}

pub struct GridOptions {
    pub target: GridTarget,
    pub weights: Vec<f64>,
    pub eta: f64,
    pub nu: f64,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub theta_points: usize,
    pub omega_points: usize,
}

pub fn run_grid(
    config: &AnalysisConfig,
    set: &ReplicationSet,
    options: &GridOptions,
) -> Result<GridReport, CliError> {
    let invalid = |field: &str, message: String| {
        CliError::Config(crate::config::ConfigError::Invalid {
            field: field.into(),
            message,
        })
    };
    if options.theta_points < 2 {
        return Err(invalid("--theta-points", format!("need at least 2, got {}", options.theta_points)));
    }
    if options.omega_points < 2 {
        return Err(invalid("--omega-points", format!("need at least 2, got {}", options.omega_points)));
    }
    for w in &options.weights {
        if !(0.0..=1.0).contains(w) {
            return Err(invalid("--weight", format!("must lie in [0, 1], got {w}")));
        }
    }

    let vague = config.vague();
    let rows = crate::config::select_rows(set, config.pooling, config.round_pooled);
    let weights = if options.weights.is_empty() {
        vec![0.0, 0.25, 0.5, 0.75, 1.0]
    } else {
        options.weights.clone()
    };
    let prior = BetaWeightPrior::new(options.eta, options.nu)?;

    let mut report = GridReport {
        command: "grid",
        target: options.target,
        config: config.clone(),
        eta: options.eta,
        nu: options.nu,
        weights: Vec::new(),
        curves: Vec::new(),
        lattices: Vec::new(),
    };

    match options.target {
        GridTarget::EffectPosterior => {
            report.weights = weights.clone();
            let (lo, hi) =
                effect_axis(config, set, &rows, &weights, options.theta_min, options.theta_max)?;
            for row in &rows {
                for &w in &weights {
                    let posterior =
                        posterior_fixed(row, &set.original, &vague, FixedWeight::new(w)?)?;
                    let grid = density_grid(&posterior, lo, hi, options.theta_points)?
                        .with_metadata("label", row.label.clone());
                    report.curves.push(GridCurve {
                        label: row.label.clone(),
                        omega: Some(w),
                        points: grid.points,
                    });
                }
            }
        }
        GridTarget::WeightPosterior => {
            for row in &rows {
                let wp = weight_marginal_posterior(row, &set.original, &vague, &prior)?;
                let n = options.omega_points;
                let points = (0..n)
                    .map(|i| {
                        let w = i as f64 / (n - 1) as f64;
                        wp.density(w).map(|d| (w, d))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                report.curves.push(GridCurve {
                    label: row.label.clone(),
                    omega: None,
                    points,
                });
            }
        }
        GridTarget::JointPosterior => {
            let (lo, hi) =
                effect_axis(config, set, &rows, &weights, options.theta_min, options.theta_max)?;
            let nt = options.theta_points;
            let nw = options.omega_points;
            for row in &rows {
                let theta_axis: Vec<f64> = (0..nt)
                    .map(|i| lo + (hi - lo) * i as f64 / (nt - 1) as f64)
                    .collect();
                let omega_axis: Vec<f64> =
                    (0..nw).map(|i| i as f64 / (nw - 1) as f64).collect();
                let mut density = Vec::with_capacity(nt);
                for &theta in &theta_axis {
                    let mut line = Vec::with_capacity(nw);
                    for &w in &omega_axis {
                        line.push(repmix_core::random_weight::joint_posterior_density(
                            theta,
                            w,
                            row,
                            &set.original,
                            &vague,
                            &prior,
                        )?);
                    }
                    density.push(line);
                }
                report.lattices.push(JointLattice {
                    label: row.label.clone(),
                    theta: theta_axis,
                    omega: omega_axis,
                    density,
                });
            }
        }
    }
    Ok(report)
}

/// The effect axis: explicit bounds when given, otherwise the hull of every
/// posterior in the report padded to negligible density.
fn effect_axis(
    config: &AnalysisConfig,
    set: &ReplicationSet,
    rows: &[StudySummary],
    weights: &[f64],
    theta_min: Option<f64>,
    theta_max: Option<f64>,
) -> Result<(f64, f64), CliError> {
    if let (Some(lo), Some(hi)) = (theta_min, theta_max) {
        return Ok((lo, hi));
    }
    let vague = config.vague();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in rows {
        for &w in weights {
            let posterior = posterior_fixed(row, &set.original, &vague, FixedWeight::new(w)?)?;
            let (a, b) = posterior.support_hint(5.0);
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    Ok((theta_min.unwrap_or(lo), theta_max.unwrap_or(hi)))
}

impl GridReport {
    pub fn to_table(&self) -> String {
        // grids are plot data; the table view just summarizes shapes
        let mut out = String::new();
        out.push_str(&format!("grid target: {:?}\n", self.target));
        for c in &self.curves {
            let omega = c
                .omega
                .map(|w| format!(" omega={w}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "curve label={}{omega} points={}\n",
                c.label,
                c.points.len()
            ));
        }
        for l in &self.lattices {
            out.push_str(&format!(
                "lattice label={} theta={} omega={}\n",
                l.label,
                l.theta.len(),
                l.omega.len()
            ));
        }
        out.push_str("use --format csv or --format json for the data\n");
        out
    }

    pub fn to_csv(&self) -> String {
        match self.target {
            GridTarget::EffectPosterior => {
                let mut out = String::from("label,omega,theta,density\n");
                for c in &self.curves {
                    let omega = c.omega.expect("effect curves carry a weight");
                    for (theta, density) in &c.points {
                        out.push_str(&format!("{},{},{},{}\n", c.label, omega, theta, density));
                    }
                }
                out
            }
            GridTarget::WeightPosterior => {
                let mut out = String::from("label,omega,density\n");
                for c in &self.curves {
                    for (w, density) in &c.points {
                        out.push_str(&format!("{},{},{}\n", c.label, w, density));
                    }
                }
                out
            }
            GridTarget::JointPosterior => {
                let mut out = String::from("label,theta,omega,density\n");
                for l in &self.lattices {
                    for (i, theta) in l.theta.iter().enumerate() {
                        for (j, w) in l.omega.iter().enumerate() {
                            out.push_str(&format!(
                                "{},{},{},{}\n",
                                l.label, theta, w, l.density[i][j]
                            ));
                        }
                    }
                }
                out
            }
        }
    }
}

// ------------------------------------------------------------ shared bits

/// Dispatch shared by `main`: pick the renderer for the chosen format.
pub fn render<R: Serialize>(
    report: &R,
    format: crate::config::OutputFormat,
    to_table: impl Fn(&R) -> String,
    to_csv: impl Fn(&R) -> String,
) -> Result<String, CliError> {
    Ok(match format {
        crate::config::OutputFormat::Table => to_table(report),
        crate::config::OutputFormat::Csv => to_csv(report),
        crate::config::OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(report).map_err(CliError::Serialize)?;
            text.push('\n');
            text
        }
    })
}
