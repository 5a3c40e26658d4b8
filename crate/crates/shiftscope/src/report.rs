//! The JSON shift report emitted by the detect command.
//!
//! Field order is fixed by the struct declarations and no maps are used,
//! so serialization is byte-stable for a given seed; only the timestamp
//! varies between runs. A JSON Schema for this format ships in
//! `schema/shift_report.schema.json`.

use serde::{Deserialize, Serialize};

use crate::decompose::DecompositionReport;
use crate::stattests::TestResult;
use crate::streamdrift::DriftEvent;

/// Which kind of shift a taxonomy label names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    Covariate,
    Label,
    Concept,
}

/// Whether the evidence came from a one-shot comparison or from monitoring
/// over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftSetting {
    Static,
    Dynamic,
}

/// One detected-shift classification. Labels are only emitted for tests
/// that actually ran and rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyLabel {
    pub kind: ShiftKind,
    pub setting: ShiftSetting,
}

/// Run configuration and provenance echoed into the report so results are
/// auditable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub seed: u64,
    /// RFC 3339; the only field excluded from determinism comparisons.
    pub timestamp: String,
    pub reference_path: String,
    pub current_path: String,
    pub standardized: bool,
    /// Convention applied when `standardized`: (x - mean_ref) / sd_ref with
    /// the n-1 denominator, reference statistics only.
    pub standardization: String,
    pub dropped_features: Vec<String>,
    pub alpha: f64,
    pub correction: String,
    pub bins: usize,
    pub smoothing: f64,
    pub n_permutations: usize,
    pub mmd_estimator: String,
    pub lambda_grid: Vec<f64>,
}

/// Per-feature covariate results: the KS test plus the histogram KL.
/// A disjoint-support KL (infinite) is serialized as `kl: null` with
/// `disjoint_support: true` rather than a floating infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureShift {
    pub feature: String,
    pub ks: TestResult,
    pub kl: Option<f64>,
    pub disjoint_support: bool,
}

/// Multivariate covariate tests over all retained features jointly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalCovariate {
    pub mmd: TestResult,
    pub mmd_bandwidth: f64,
    pub lsdd: TestResult,
    pub lsdd_sigma: f64,
    pub lsdd_lambda: f64,
    pub classifier: TestResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateSection {
    pub per_feature: Vec<FeatureShift>,
    /// Per-test threshold applied after correction.
    pub per_test_alpha: f64,
    /// True when any single feature rejects.
    pub any_feature_rejected: bool,
    pub global: GlobalCovariate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelShiftSection {
    pub ks: TestResult,
    pub kl: Option<f64>,
    pub disjoint_support: bool,
    pub rejected: bool,
}

/// Concept-shift evidence, populated by the decompose and stream commands
/// when their inputs are available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_events: Option<Vec<DriftEvent>>,
}

/// The detect command's full output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftReport {
    pub metadata: ReportMetadata,
    pub covariate: CovariateSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_shift: Option<LabelShiftSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concept: Option<ConceptSection>,
    pub taxonomy_labels: Vec<TaxonomyLabel>,
}

impl ShiftReport {
    /// True when any test in the report rejected; drives the exit code.
    pub fn any_rejection(&self) -> bool {
        let covariate = self.covariate.any_feature_rejected
            || self.covariate.global.mmd.reject
            || self.covariate.global.lsdd.reject
            || self.covariate.global.classifier.reject;
        let label = self
            .label_shift
            .as_ref()
            .map(|l| l.rejected)
            .unwrap_or(false);
        covariate || label
    }

    pub fn to_json_pretty(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// KL serialization policy shared by report sections: finite values pass
/// through, an infinite divergence becomes the (None, true) sentinel.
pub fn kl_field(kl: f64) -> (Option<f64>, bool) {
    if kl.is_finite() {
        (Some(kl), false)
    } else {
        (None, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_sentinel_policy() {
        assert_eq!(kl_field(0.25), (Some(0.25), false));
        assert_eq!(kl_field(f64::INFINITY), (None, true));
    }

    #[test]
    fn taxonomy_serializes_lowercase() {
        let label = TaxonomyLabel {
            kind: ShiftKind::Covariate,
            setting: ShiftSetting::Static,
        };
        let json = serde_json::to_string(&label).unwrap();
        assert_eq!(json, r#"{"kind":"covariate","setting":"static"}"#);
    }
}
