//! Study summary statistics: ingestion, validation, and inverse-variance
//! pooling.
//!
//! A dataset is one original study plus at least one replication, each
//! reduced to an effect estimate and its standard error on an approximately
//! normal scale. Two wire formats are supported:
//!
//! - CSV with header `label,role,estimate,std_error[,scale]` where `role` is
//!   `original` or `replication`;
//! - JSON `{"original": {...}, "replications": [...]}` with the same field
//!   semantics.
//!
//! Any effect-size transformation (logit, log, ...) is the caller's business
//! before ingestion; the optional free-text `scale` field is passed through
//! untouched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label given to pooled summaries when the caller does not choose one.
pub const DEFAULT_POOLED_LABEL: &str = "pooled";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("study `{label}`: field `std_error` must be positive and finite, got {value}")]
    InvalidStdError { label: String, value: f64 },
    #[error("study `{label}`: field `estimate` must be finite, got {value}")]
    InvalidEstimate { label: String, value: f64 },
    #[error("no replications: the dataset needs at least one replication record")]
    NoReplications,
    #[error("cannot pool an empty sequence of studies")]
    EmptyPool,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("missing original: the dataset needs exactly one record with role `original`")]
    MissingOriginal,
    #[error("row {row}: a second record with role `original` (first was row {first})")]
    DuplicateOriginal { row: usize, first: usize },
    #[error("row {row}, field `{field}`: {message}")]
    Field {
        row: usize,
        field: String,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dataset is not valid UTF-8")]
    Utf8,
}

/// One study's effect estimate and standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
}

impl StudySummary {
    pub fn new(label: impl Into<String>, estimate: f64, std_error: f64) -> Result<Self, DataError> {
        let summary = StudySummary {
            label: label.into(),
            estimate,
            std_error,
            scale: None,
        };
        summary.validate()?;
        Ok(summary)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !self.estimate.is_finite() {
            return Err(DataError::InvalidEstimate {
                label: self.label.clone(),
                value: self.estimate,
            });
        }
        if !(self.std_error.is_finite() && self.std_error > 0.0) {
            return Err(DataError::InvalidStdError {
                label: self.label.clone(),
                value: self.std_error,
            });
        }
        Ok(())
    }

    /// The sampling variance, `std_error` squared.
    #[inline]
    pub fn variance(&self) -> f64 {
        self.std_error * self.std_error
    }

    /// Copy with estimate and standard error rounded to `decimals` places.
    /// Exists so displays can reproduce conventions that round before
    /// computing downstream statistics.
    pub fn rounded(&self, decimals: u32) -> StudySummary {
        let scale = 10f64.powi(decimals as i32);
        StudySummary {
            label: self.label.clone(),
            estimate: (self.estimate * scale).round() / scale,
            std_error: (self.std_error * scale).round() / scale,
            scale: self.scale.clone(),
        }
    }
}

/// One original study plus `m ≥ 1` replications, in their input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSet {
    pub original: StudySummary,
    pub replications: Vec<StudySummary>,
}

impl ReplicationSet {
    pub fn new(
        original: StudySummary,
        replications: Vec<StudySummary>,
    ) -> Result<Self, DataError> {
        let set = ReplicationSet {
            original,
            replications,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        self.original.validate()?;
        if self.replications.is_empty() {
            return Err(DataError::NoReplications);
        }
        let mut seen = std::collections::HashSet::new();
        seen.insert(self.original.label.as_str());
        for rep in &self.replications {
            rep.validate()?;
            if !seen.insert(rep.label.as_str()) {
                return Err(DataError::DuplicateLabel(rep.label.clone()));
            }
        }
        Ok(())
    }

    /// Number of replications.
    pub fn m(&self) -> usize {
        self.replications.len()
    }

    /// Inverse-variance pooled summary of the replications, labelled
    /// [`DEFAULT_POOLED_LABEL`].
    pub fn pooled(&self) -> StudySummary {
        pool(&self.replications).expect("a validated set has at least one replication")
    }
}

/// Inverse-variance pooling of several study summaries into one.
///
/// The pooled estimate is the precision-weighted mean and the pooled standard
/// error is `sqrt(1 / Σ 1/σ_i²)`. The result carries the default pooled
/// label; see [`pool_with_label`].
///
/// ```
/// use repmix_core::study::{pool, StudySummary};
///
/// let studies = vec![
///     StudySummary::new("a", 0.1, 0.1)?,
///     StudySummary::new("b", 0.3, 0.1)?,
/// ];
/// let pooled = pool(&studies)?;
/// assert!((pooled.estimate - 0.2).abs() < 1e-12);
/// # Ok::<(), repmix_core::study::DataError>(())
/// ```
pub fn pool(studies: &[StudySummary]) -> Result<StudySummary, DataError> {
    pool_with_label(studies, DEFAULT_POOLED_LABEL)
}

/// [`pool`] with a caller-chosen label.
pub fn pool_with_label(studies: &[StudySummary], label: &str) -> Result<StudySummary, DataError> {
    if studies.is_empty() {
        return Err(DataError::EmptyPool);
    }
    for study in studies {
        study.validate()?;
    }
    // Summation order is fixed by sorting the terms, so pooling is exactly
    // permutation invariant, not just up to rounding.
    let mut terms: Vec<(f64, f64)> = studies
        .iter()
        .map(|s| {
            let w = 1.0 / s.variance();
            (w, w * s.estimate)
        })
        .collect();
    terms.sort_by(|a, b| a.partial_cmp(b).expect("weights are finite"));
    let weight_sum: f64 = terms.iter().map(|t| t.0).sum();
    let weighted_estimate: f64 = terms.iter().map(|t| t.1).sum();

    let shared_scale = studies
        .first()
        .and_then(|first| first.scale.as_ref())
        .filter(|s| studies.iter().all(|x| x.scale.as_deref() == Some(s.as_str())))
        .cloned();

    Ok(StudySummary {
        label: label.to_owned(),
        estimate: weighted_estimate / weight_sum,
        std_error: (1.0 / weight_sum).sqrt(),
        scale: shared_scale,
    })
}

/// Wire format of a serialized dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Json,
}

/// Parse a dataset from raw bytes in the given format.
///
/// Exactly one record must carry role `original` and at least one must carry
/// role `replication`; replication order is preserved. Errors name the
/// offending row and field where the format allows it.
pub fn parse_dataset(raw: &[u8], format: DatasetFormat) -> Result<ReplicationSet, DataError> {
    match format {
        DatasetFormat::Csv => parse_csv(raw),
        DatasetFormat::Json => parse_json(raw),
    }
}

/// Serialize a dataset to the given format. Output parses back to an equal
/// value with [`parse_dataset`].
pub fn serialize_dataset(set: &ReplicationSet, format: DatasetFormat) -> Result<Vec<u8>, DataError> {
    match format {
        DatasetFormat::Csv => serialize_csv(set),
        DatasetFormat::Json => Ok(serde_json::to_vec_pretty(set)?),
    }
}

fn parse_json(raw: &[u8]) -> Result<ReplicationSet, DataError> {
    let text = std::str::from_utf8(raw).map_err(|_| DataError::Utf8)?;
    let set: ReplicationSet = serde_json::from_str(text)?;
    set.validate()?;
    Ok(set)
}

fn parse_csv(raw: &[u8]) -> Result<ReplicationSet, DataError> {
    let text = std::str::from_utf8(raw).map_err(|_| DataError::Utf8)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| DataError::Field {
            row: 0,
            field: name.to_owned(),
            message: "missing column in header".to_owned(),
        })
    };
    let label_col = required("label")?;
    let role_col = required("role")?;
    let estimate_col = required("estimate")?;
    let std_error_col = required("std_error")?;
    let scale_col = col("scale");

    let mut original: Option<(usize, StudySummary)> = None;
    let mut replications: Vec<StudySummary> = Vec::new();

    for (index, record) in reader.records().enumerate() {
        let row = index + 1; // 1-based data rows, header not counted
        let record = record?;
        let field = |idx: usize, name: &str| -> Result<&str, DataError> {
            record.get(idx).ok_or_else(|| DataError::Field {
                row,
                field: name.to_owned(),
                message: "missing value".to_owned(),
            })
        };
        let number = |idx: usize, name: &str| -> Result<f64, DataError> {
            let raw = field(idx, name)?;
            raw.parse::<f64>().map_err(|_| DataError::Field {
                row,
                field: name.to_owned(),
                message: format!("not a number: `{raw}`"),
            })
        };

        let label = field(label_col, "label")?.to_owned();
        let role = field(role_col, "role")?.to_owned();
        let estimate = number(estimate_col, "estimate")?;
        let std_error = number(std_error_col, "std_error")?;
        if !(std_error.is_finite() && std_error > 0.0) {
            return Err(DataError::Field {
                row,
                field: "std_error".to_owned(),
                message: format!("must be positive and finite, got {std_error}"),
            });
        }
        let scale = scale_col
            .and_then(|idx| record.get(idx))
            .filter(|s| !s.is_empty())
            .map(str::to_owned);

        let summary = StudySummary {
            label,
            estimate,
            std_error,
            scale,
        };
        summary.validate()?;

        match role.as_str() {
            "original" => {
                if let Some((first, _)) = original {
                    return Err(DataError::DuplicateOriginal { row, first });
                }
                original = Some((row, summary));
            }
            "replication" => replications.push(summary),
            other => {
                return Err(DataError::Field {
                    row,
                    field: "role".to_owned(),
                    message: format!("expected `original` or `replication`, got `{other}`"),
                })
            }
        }
    }

    let (_, original) = original.ok_or(DataError::MissingOriginal)?;
    ReplicationSet::new(original, replications)
}

fn serialize_csv(set: &ReplicationSet) -> Result<Vec<u8>, DataError> {
    let with_scale = std::iter::once(&set.original)
        .chain(&set.replications)
        .any(|s| s.scale.is_some());
    let mut writer = csv::Writer::from_writer(Vec::new());
    if with_scale {
        writer.write_record(["label", "role", "estimate", "std_error", "scale"])?;
    } else {
        writer.write_record(["label", "role", "estimate", "std_error"])?;
    }
    let mut write_row = |study: &StudySummary, role: &str| -> Result<(), DataError> {
        let estimate = study.estimate.to_string();
        let std_error = study.std_error.to_string();
        if with_scale {
            writer.write_record([
                study.label.as_str(),
                role,
                &estimate,
                &std_error,
                study.scale.as_deref().unwrap_or(""),
            ])?;
        } else {
            writer.write_record([study.label.as_str(), role, &estimate, &std_error])?;
        }
        Ok(())
    };
    write_row(&set.original, "original")?;
    for rep in &set.replications {
        write_row(rep, "replication")?;
    }
    writer
        .into_inner()
        .map_err(|e| DataError::Field {
            row: 0,
            field: String::new(),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels_set() -> ReplicationSet {
        ReplicationSet::new(
            StudySummary::new("original", 0.21, 0.05).unwrap(),
            vec![
                StudySummary::new("rep1", 0.09, 0.05).unwrap(),
                StudySummary::new("rep2", 0.21, 0.06).unwrap(),
                StudySummary::new("rep3", 0.44, 0.04).unwrap(),
            ],
        )
        .unwrap()
    }

    const LABELS_CSV: &str = "label,role,estimate,std_error\n\
                              original,original,0.21,0.05\n\
                              rep1,replication,0.09,0.05\n\
                              rep2,replication,0.21,0.06\n\
                              rep3,replication,0.44,0.04\n";

    #[test]
    fn pool_labels_replications() {
        // 50-digit reference: (0.2834968017057569..., 0.02770542579237661...)
        let pooled = labels_set().pooled();
        assert!((pooled.estimate - 0.283_496_801_705_756_9).abs() < 1e-15);
        assert!((pooled.std_error - 0.027_705_425_792_376_608).abs() < 1e-15);
        assert_eq!(pooled.label, "pooled");
        // rounded to two decimals this is the (0.28, 0.03) display convention
        let rounded = pooled.rounded(2);
        assert_eq!(rounded.estimate, 0.28);
        assert_eq!(rounded.std_error, 0.03);
    }

    #[test]
    fn pool_single_study_is_identity() {
        let s = StudySummary::new("only", 0.37, 0.12).unwrap();
        let pooled = pool(std::slice::from_ref(&s)).unwrap();
        assert!((pooled.estimate - 0.37).abs() < 1e-15);
        assert!((pooled.std_error - 0.12).abs() < 1e-15);
    }

    #[test]
    fn pool_two_equal_variances() {
        let studies = vec![
            StudySummary::new("a", 0.1, 0.1).unwrap(),
            StudySummary::new("b", 0.3, 0.1).unwrap(),
        ];
        let pooled = pool(&studies).unwrap();
        assert!((pooled.estimate - 0.2).abs() < 1e-15);
        assert!((pooled.std_error - 0.1 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pool_rejects_empty_and_invalid() {
        assert!(matches!(pool(&[]), Err(DataError::EmptyPool)));
        let bad = StudySummary {
            label: "bad".into(),
            estimate: 0.1,
            std_error: 0.0,
            scale: None,
        };
        assert!(matches!(
            pool(&[bad]),
            Err(DataError::InvalidStdError { .. })
        ));
    }

    #[test]
    fn pool_is_associative_over_partitions() {
        let set = labels_set();
        let (head, tail) = set.replications.split_at(2);
        let partial = pool(head).unwrap();
        let mut relabelled = partial.clone();
        relabelled.label = "partial".into();
        let mut staged = vec![relabelled];
        staged.extend_from_slice(tail);
        let two_stage = pool(&staged).unwrap();
        let direct = set.pooled();
        assert!((two_stage.estimate - direct.estimate).abs() / direct.estimate.abs() < 1e-12);
        assert!((two_stage.std_error - direct.std_error).abs() / direct.std_error < 1e-12);
    }

    #[test]
    fn pooled_std_error_never_exceeds_smallest_input() {
        let set = labels_set();
        let min_se = set
            .replications
            .iter()
            .map(|s| s.std_error)
            .fold(f64::INFINITY, f64::min);
        assert!(set.pooled().std_error <= min_se);
    }

    #[test]
    fn parse_labels_csv() {
        let set = parse_dataset(LABELS_CSV.as_bytes(), DatasetFormat::Csv).unwrap();
        assert_eq!(set.m(), 3);
        assert_eq!(set.original.label, "original");
        assert_eq!(set.replications[1].std_error, 0.06);
        assert_eq!(set, labels_set());
    }

    #[test]
    fn parse_json_equals_csv() {
        let json = serialize_dataset(&labels_set(), DatasetFormat::Json).unwrap();
        let from_json = parse_dataset(&json, DatasetFormat::Json).unwrap();
        let from_csv = parse_dataset(LABELS_CSV.as_bytes(), DatasetFormat::Csv).unwrap();
        assert_eq!(from_json, from_csv);
    }

    #[test]
    fn parse_rejects_missing_replications() {
        let csv = "label,role,estimate,std_error\noriginal,original,0.21,0.05\n";
        assert!(matches!(
            parse_dataset(csv.as_bytes(), DatasetFormat::Csv),
            Err(DataError::NoReplications)
        ));
    }

    #[test]
    fn parse_rejects_missing_original() {
        let csv = "label,role,estimate,std_error\nrep1,replication,0.09,0.05\n";
        assert!(matches!(
            parse_dataset(csv.as_bytes(), DatasetFormat::Csv),
            Err(DataError::MissingOriginal)
        ));
    }

    #[test]
    fn parse_rejects_duplicate_original() {
        let csv = "label,role,estimate,std_error\n\
                   a,original,0.2,0.05\n\
                   b,original,0.3,0.05\n\
                   c,replication,0.1,0.05\n";
        assert!(matches!(
            parse_dataset(csv.as_bytes(), DatasetFormat::Csv),
            Err(DataError::DuplicateOriginal { row: 2, first: 1 })
        ));
    }

    #[test]
    fn parse_rejects_duplicate_labels() {
        let csv = "label,role,estimate,std_error\n\
                   a,original,0.2,0.05\n\
                   b,replication,0.1,0.05\n\
                   b,replication,0.3,0.05\n";
        assert!(matches!(
            parse_dataset(csv.as_bytes(), DatasetFormat::Csv),
            Err(DataError::DuplicateLabel(l)) if l == "b"
        ));
    }

    #[test]
    fn parse_errors_name_row_and_field() {
        let csv = "label,role,estimate,std_error\n\
                   a,original,0.2,0.05\n\
                   b,replication,oops,0.05\n";
        match parse_dataset(csv.as_bytes(), DatasetFormat::Csv) {
            Err(DataError::Field { row, field, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(field, "estimate");
            }
            other => panic!("expected field error, got {other:?}"),
        }

        let csv = "label,role,estimate,std_error\n\
                   a,original,0.2,0.05\n\
                   b,replication,0.1,-0.05\n";
        match parse_dataset(csv.as_bytes(), DatasetFormat::Csv) {
            Err(DataError::Field { row, field, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(field, "std_error");
            }
            other => panic!("expected field error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_unknown_role() {
        let csv = "label,role,estimate,std_error\na,pilot,0.2,0.05\n";
        match parse_dataset(csv.as_bytes(), DatasetFormat::Csv) {
            Err(DataError::Field { field, .. }) => assert_eq!(field, "role"),
            other => panic!("expected role error, got {other:?}"),
        }
    }

    #[test]
    fn scale_field_round_trips_and_pools() {
        let csv = "label,role,estimate,std_error,scale\n\
                   o,original,0.2,0.05,smd\n\
                   r1,replication,0.1,0.05,smd\n\
                   r2,replication,0.3,0.04,smd\n";
        let set = parse_dataset(csv.as_bytes(), DatasetFormat::Csv).unwrap();
        assert_eq!(set.original.scale.as_deref(), Some("smd"));
        assert_eq!(set.pooled().scale.as_deref(), Some("smd"));
        let bytes = serialize_dataset(&set, DatasetFormat::Csv).unwrap();
        assert_eq!(parse_dataset(&bytes, DatasetFormat::Csv).unwrap(), set);
    }

    fn study_strategy(tag: &'static str) -> impl Strategy<Value = StudySummary> {
        (
            -10.0..10.0f64,
            0.001..5.0f64,
            prop::option::of("[a-z]{1,6}"),
            0u32..1000,
        )
            .prop_map(move |(estimate, std_error, scale, n)| StudySummary {
                label: format!("{tag}{n}"),
                estimate,
                std_error,
                scale,
            })
    }

    proptest! {
        #[test]
        fn pool_is_permutation_invariant(
            mut studies in prop::collection::vec(study_strategy("s"), 1..8),
            swap_a in 0usize..8,
            swap_b in 0usize..8,
        ) {
            // unique labels so validation passes
            for (i, s) in studies.iter_mut().enumerate() {
                s.label = format!("s{i}");
            }
            let forward = pool(&studies).unwrap();
            let mut shuffled = studies.clone();
            shuffled.reverse();
            let a = swap_a % shuffled.len();
            let b = swap_b % shuffled.len();
            shuffled.swap(a, b);
            let backward = pool(&shuffled).unwrap();
            // bitwise identical, not merely close
            prop_assert_eq!(forward.estimate.to_bits(), backward.estimate.to_bits());
            prop_assert_eq!(forward.std_error.to_bits(), backward.std_error.to_bits());
        }

        #[test]
        fn dataset_round_trip(
            original in study_strategy("o"),
            mut reps in prop::collection::vec(study_strategy("r"), 1..6),
        ) {
            let mut original = original;
            original.label = "orig".into();
            for (i, r) in reps.iter_mut().enumerate() {
                r.label = format!("rep{i}");
            }
            let set = ReplicationSet::new(original, reps).unwrap();
            for format in [DatasetFormat::Csv, DatasetFormat::Json] {
                let bytes = serialize_dataset(&set, format).unwrap();
                let back = parse_dataset(&bytes, format).unwrap();
                prop_assert_eq!(&back, &set);
            }
        }
    }
}
