//! Machine-readable run reports and the golden-diff used by `verify`.
//!
//! Reports are plain serde structs with a fixed field order, so identical
//! runs serialize to identical bytes. Timings are quarantined in their own
//! subtree and excluded from every comparison.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CxField {
    pub re: f64,
    pub im: f64,
}

impl From<num_complex::Complex64> for CxField {
    fn from(c: num_complex::Complex64) -> Self {
        CxField { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerJRecord {
    pub j: u32,
    pub alpha: CxField,
    pub lambda1: CxField,
    pub lambda2: CxField,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_ratio_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_ratio_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff_to_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber_slope: Option<CxField>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub h: CxField,
    pub c: CxField,
    pub d: CxField,
    pub residual: f64,
    pub k: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeReportOut {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_estimate: Option<u32>,
    pub not_finite: bool,
    pub witness_a: Vec<CxField>,
    pub witness_b: Vec<CxField>,
    pub m_z_samples: Vec<(f64, f64)>,
    pub search_exhausted: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaSample {
    pub z_center: CxField,
    pub theta: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdicts {
    pub case: String,
    pub normality: String,
    pub type_kind: String,
    pub limit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetRatioOut {
    pub min: f64,
    pub max: f64,
    pub violation_suspected: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub total_s: f64,
    pub diagnostics_s: f64,
    pub scaling_s: f64,
    pub type_s: f64,
    pub tracking_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub config_name: String,
    pub seed: u64,
    pub mode: String,
    pub j_min: u32,
    pub j_max: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accumulation_point: Option<(CxField, CxField)>,
    pub verdicts: Verdicts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_report: Option<TypeReportOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_ratio: Option<DetRatioOut>,
    /// conjugate-derivative residual of the eigenvalue branches at j_max
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cr_residual_jmax: Option<f64>,
    pub per_j: Vec<PerJRecord>,
    pub theta_samples: Vec<ThetaSample>,
    pub errors: Vec<String>,
    pub config_echo: String,
    pub timings: Timings,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Serialization with timings zeroed: the determinism contract covers
    /// every field except wall-clock measurements.
    pub fn to_comparable_json(&self) -> String {
        let mut clone = self.clone();
        clone.timings = Timings::default();
        serde_json::to_string_pretty(&clone).expect("report serialization cannot fail")
    }
}

/// Compare a fresh report against a golden one.
///
/// Verdict strings, integers and booleans must match exactly; floats match
/// within `rel` relative (plus a tiny absolute floor); the timings subtree is
/// ignored. With `verdicts_only` only the verdict block and the type kind are
/// compared (used when the seed is overridden). Returns the path of the first
/// mismatch.
pub fn diff_reports(
    golden: &serde_json::Value,
    fresh: &serde_json::Value,
    rel: f64,
    verdicts_only: bool,
) -> Option<String> {
    if verdicts_only {
        let gv = golden.get("verdicts");
        let fv = fresh.get("verdicts");
        if let (Some(g), Some(f)) = (gv, fv) {
            if let Some(p) = diff_value(g, f, rel, "verdicts") {
                return Some(p);
            }
        } else {
            return Some("verdicts".into());
        }
        let gk = golden.get("type_report").and_then(|t| t.get("kind"));
        let fk = fresh.get("type_report").and_then(|t| t.get("kind"));
        if gk != fk {
            return Some("type_report.kind".into());
        }
        return None;
    }
    diff_value(golden, fresh, rel, "")
}

fn diff_value(g: &serde_json::Value, f: &serde_json::Value, rel: f64, path: &str) -> Option<String> {
    use serde_json::Value::*;
    if path.split('.').next_back() == Some("timings") || path == "timings" {
        return None;
    }
    match (g, f) {
        (Null, Null) => None,
        (Bool(a), Bool(b)) => (a != b).then(|| path.to_string()),
        (Number(a), Number(b)) => {
            let (x, y) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            let tol = rel * x.abs().max(y.abs()) + 1e-12;
            ((x - y).abs() > tol).then(|| path.to_string())
        }
        (String(a), String(b)) => (a != b).then(|| path.to_string()),
        (Array(a), Array(b)) => {
            if a.len() != b.len() {
                return Some(format!("{path}.len"));
            }
            for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
                if let Some(p) = diff_value(x, y, rel, &format!("{path}[{i}]")) {
                    return Some(p);
                }
            }
            None
        }
        (Object(a), Object(b)) => {
            let keys: std::collections::BTreeSet<&std::string::String> =
                a.keys().chain(b.keys()).collect();
            for k in keys {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                if sub == "timings" || sub.ends_with(".timings") {
                    continue;
                }
                match (a.get(k), b.get(k)) {
                    (Some(x), Some(y)) => {
                        if let Some(p) = diff_value(x, y, rel, &sub) {
                            return Some(p);
                        }
                    }
                    _ => return Some(sub),
                }
            }
            None
        }
        _ => Some(path.to_string()),
    }
}

/// One line per normalized homogeneous triple: re0 im0 re1 im1 re2 im2 label.
pub fn cloud_to_text<T: crate::scalar::Real>(cloud: &crate::projective::CloudCP2<T>) -> String {
    let mut out = String::new();
    for (p, l) in cloud.points.iter().zip(cloud.labels.iter()) {
        let label = match l {
            crate::projective::PointLabel::Interior => "interior",
            crate::projective::PointLabel::Boundary => "boundary",
        };
        out.push_str(&format!(
            "{} {} {} {} {} {} {}\n",
            p[0].re, p[0].im, p[1].re, p[1].im, p[2].re, p[2].im, label
        ));
    }
    out
}

/// j-indexed diagnostics as CSV.
pub fn series_csv(records: &[PerJRecord]) -> String {
    let mut out = String::from(
        "j,alpha_re,alpha_im,abs_lambda1,abs_lambda2,m_sup,det_ratio_min,det_ratio_max,hausdorff_step,hausdorff_to_target\n",
    );
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        let l1 = (r.lambda1.re.powi(2) + r.lambda1.im.powi(2)).sqrt();
        let l2 = (r.lambda2.re.powi(2) + r.lambda2.im.powi(2)).sqrt();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.j,
            r.alpha.re,
            r.alpha.im,
            l1,
            l2,
            opt(r.m_sup),
            opt(r.det_ratio_min),
            opt(r.det_ratio_max),
            opt(r.hausdorff_step),
            opt(r.hausdorff_to_target),
        ));
    }
    out
}
