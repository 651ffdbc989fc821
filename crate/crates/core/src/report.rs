//! Structured pass/fail records emitted by every check.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactSum,
    Quadrature,
    MonteCarlo,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactSum => "exact-sum",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte-carlo",
            Method::ClosedForm => "closed-form",
        }
    }
}

/// Reproduction metadata. Fields that do not apply to a check stay empty and
/// are omitted from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_panels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
    /// Standard errors of Monte Carlo estimates, aligned with `computed`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub standard_errors: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

/// One verified claim.
///
/// For exact methods `pass` holds iff every `|computed[i] - reference[i]|` is
/// at most `tolerance`. Monte Carlo entries state their statistical criterion
/// in `diagnostics.notes`; for the common "within k standard errors" rule the
/// tolerance is `k` and the errors are in `diagnostics.standard_errors`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub claim_id: String,
    pub method: Method,
    pub computed: Vec<f64>,
    pub reference: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: Diagnostics,
    pub seed: Option<u64>,
}

impl VerificationReport {
    /// Absolute-tolerance comparison of aligned vectors.
    pub fn compare(
        claim_id: impl Into<String>,
        method: Method,
        computed: Vec<f64>,
        reference: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        assert_eq!(computed.len(), reference.len());
        let max_err = max_abs_error(&computed, &reference);
        let pass = computed.len() == reference.len() && max_err.is_some_and(|e| e <= tolerance);
        Self {
            claim_id: claim_id.into(),
            method,
            computed,
            reference,
            tolerance,
            pass,
            diagnostics: Diagnostics {
                max_abs_error: max_err,
                ..Diagnostics::default()
            },
            seed: None,
        }
    }

    /// Monte Carlo estimates compared with targets at `k` standard errors.
    pub fn within_standard_errors(
        claim_id: impl Into<String>,
        estimates: Vec<f64>,
        targets: Vec<f64>,
        standard_errors: Vec<f64>,
        k: f64,
        sample_size: u64,
        seed: u64,
    ) -> Self {
        let pass = estimates
            .iter()
            .zip(&targets)
            .zip(&standard_errors)
            .all(|((e, t), se)| (e - t).abs() <= k * se);
        Self {
            claim_id: claim_id.into(),
            method: Method::MonteCarlo,
            diagnostics: Diagnostics {
                max_abs_error: max_abs_error(&estimates, &targets),
                sample_size: Some(sample_size),
                standard_errors,
                notes: vec![format!("pass iff every |estimate - target| <= {k} SE")],
                ..Diagnostics::default()
            },
            computed: estimates,
            reference: targets,
            tolerance: k,
            pass,
            seed: Some(seed),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.diagnostics.notes.push(note.into());
        self
    }

    /// One-line summary for terminals.
    pub fn summary(&self) -> String {
        format!(
            "{:<4} {:<48} {:<12} max_err={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.claim_id,
            self.method.as_str(),
            self.diagnostics
                .max_abs_error
                .map(|e| format!("{e:.3e}"))
                .unwrap_or_else(|| "-".into()),
        )
    }
}

fn max_abs_error(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut worst = 0.0_f64;
    for (x, y) in a.iter().zip(b) {
        let e = if x == y { 0.0 } else { (x - y).abs() };
        if e.is_nan() {
            return None;
        }
        worst = worst.max(e);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_is_tolerance_gated() {
        let r = VerificationReport::compare(
            "a",
            Method::ExactSum,
            vec![1.0, 2.0],
            vec![1.0, 2.0 + 1e-11],
            1e-10,
        );
        assert!(r.pass);
        let r = VerificationReport::compare("a", Method::ExactSum, vec![1.0], vec![1.1], 1e-10);
        assert!(!r.pass);
        let r =
            VerificationReport::compare("a", Method::ExactSum, vec![f64::NAN], vec![1.0], 1e-10);
        assert!(!r.pass);
        // -inf on both sides is agreement
        let r = VerificationReport::compare(
            "a",
            Method::ExactSum,
            vec![f64::NEG_INFINITY],
            vec![f64::NEG_INFINITY],
            1e-10,
        );
        assert!(r.pass);
    }

    #[test]
    fn json_field_names() {
        let r = VerificationReport::compare("x", Method::MonteCarlo, vec![0.5], vec![0.5], 0.0)
            .with_seed(3);
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "claim_id",
            "method",
            "computed",
            "reference",
            "tolerance",
            "pass",
            "diagnostics",
            "seed",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["method"], "monte-carlo");
    }
}
