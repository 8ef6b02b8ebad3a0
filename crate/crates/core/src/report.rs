//! Theorem reports and their JSON/CSV serialisation.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute pass floor for exact rows.
pub const ABSOLUTE_FLOOR: f64 = 1e-6;

/// Identity under test. The wire strings are stable report identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremId {
    /// Conic curvature measures against Grassmannian means of section traces.
    #[serde(rename = "prop3.1")]
    ConicMeasures,
    /// Curvature growth limits against Grassmannian means of links at infinity.
    #[serde(rename = "thm3.7")]
    GrowthLimits,
    /// The same limits stated for arbitrary closed sets.
    #[serde(rename = "cor3.8")]
    GrowthLimitsClosed,
    /// `Λ_0(X, X)` from links at infinity against an independent route.
    #[serde(rename = "du_lambda0")]
    TotalCurvature,
    /// `χ = Λ_0 + Σ_k lim Λ_k / (b_k R^k)`.
    #[serde(rename = "thm3.9")]
    EulerAssembly,
    /// Growth limits of Lipschitz-Killing-Weyl integrals of a submanifold.
    #[serde(rename = "thm4.1")]
    SmoothGrowth,
    /// As above with section Euler characteristics in place of link ones.
    #[serde(rename = "thm4.2")]
    SmoothSectionGrowth,
    /// `χ` of a submanifold from its Lipschitz-Killing-Weyl integrals.
    #[serde(rename = "thm4.3")]
    SmoothAssembly,
    /// The odd-dimensional Gauss-Bonnet identity.
    #[serde(rename = "odd_d_corollary")]
    OddDimension,
    /// Base-point invariance of the Euler assembly.
    #[serde(rename = "base_point")]
    BasePoint,
    /// Spherical Gauss-Bonnet for a graph on the sphere.
    #[serde(rename = "spherical_gb")]
    SphericalGaussBonnet,
}

impl TheoremId {
    pub const ALL: [TheoremId; 11] = [
        TheoremId::ConicMeasures,
        TheoremId::GrowthLimits,
        TheoremId::GrowthLimitsClosed,
        TheoremId::TotalCurvature,
        TheoremId::EulerAssembly,
        TheoremId::SmoothGrowth,
        TheoremId::SmoothSectionGrowth,
        TheoremId::SmoothAssembly,
        TheoremId::OddDimension,
        TheoremId::BasePoint,
        TheoremId::SphericalGaussBonnet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::ConicMeasures => "prop3.1",
            TheoremId::GrowthLimits => "thm3.7",
            TheoremId::GrowthLimitsClosed => "cor3.8",
            TheoremId::TotalCurvature => "du_lambda0",
            TheoremId::EulerAssembly => "thm3.9",
            TheoremId::SmoothGrowth => "thm4.1",
            TheoremId::SmoothSectionGrowth => "thm4.2",
            TheoremId::SmoothAssembly => "thm4.3",
            TheoremId::OddDimension => "odd_d_corollary",
            TheoremId::BasePoint => "base_point",
            TheoremId::SphericalGaussBonnet => "spherical_gb",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| Error::InvalidArgument(format!("unknown theorem `{s}`")))
    }
}

/// One named contribution to an assembled side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
    pub uncertainty: f64,
    pub route: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: i64,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub uncertainty: f64,
    pub pass: bool,
    pub route_lhs: String,
    pub route_rhs: String,
    pub skipped: bool,
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Term>,
}

impl ReportRow {
    /// A compared row; `pass` follows the 3σ rule with the absolute floor.
    pub fn compare(k: i64, label: &str, lhs: (f64, f64), rhs: (f64, f64), route_lhs: &str, route_rhs: &str) -> Self {
        let uncertainty = lhs.1.hypot(rhs.1);
        ReportRow {
            k,
            label: label.into(),
            lhs: lhs.0,
            rhs: rhs.0,
            uncertainty,
            pass: passes(lhs.0, rhs.0, uncertainty),
            route_lhs: route_lhs.into(),
            route_rhs: route_rhs.into(),
            skipped: false,
            reason: None,
            terms: Vec::new(),
        }
    }

    pub fn skipped(k: i64, label: &str, reason: impl Into<String>) -> Self {
        ReportRow {
            k,
            label: label.into(),
            lhs: 0.0,
            rhs: 0.0,
            uncertainty: 0.0,
            pass: false,
            route_lhs: String::new(),
            route_rhs: String::new(),
            skipped: true,
            reason: Some(reason.into()),
            terms: Vec::new(),
        }
    }

    pub fn with_terms(mut self, terms: Vec<Term>) -> Self {
        self.terms = terms;
        self
    }

    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// `|lhs − rhs| ≤ max(3u, 1e-6)`.
pub fn passes(lhs: f64, rhs: f64, uncertainty: f64) -> bool {
    (lhs - rhs).abs() <= (3.0 * uncertainty).max(ABSOLUTE_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    pub set: String,
    pub seed: u64,
    pub n_samples: usize,
    pub radii: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
    pub rows: Vec<ReportRow>,
    pub overall_pass: bool,
    pub status: Status,
    pub elapsed_seconds: f64,
}

impl TheoremReport {
    pub fn new(theorem: TheoremId, set: &str, seed: u64, n_samples: usize, radii: &[f64], rows: Vec<ReportRow>) -> Self {
        let status = if rows.iter().any(|r| r.skipped) || rows.is_empty() {
            Status::Incomplete
        } else if rows.iter().all(|r| r.pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        TheoremReport {
            theorem,
            set: set.into(),
            seed,
            n_samples,
            radii: radii.to_vec(),
            base_point: None,
            rows,
            overall_pass: status == Status::Pass,
            status,
            elapsed_seconds: 0.0,
        }
    }

    /// Process exit code: 0 pass, 1 failure, 2 incomplete.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Incomplete => 2,
        }
    }

    pub fn row(&self, k: i64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Flat CSV projection of the rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "theorem",
            "set",
            "seed",
            "n_samples",
            "k",
            "label",
            "lhs",
            "rhs",
            "uncertainty",
            "pass",
            "route_lhs",
            "route_rhs",
            "skipped",
            "reason",
        ])?;
        for r in &self.rows {
            w.write_record([
                self.theorem.as_str().to_string(),
                self.set.clone(),
                self.seed.to_string(),
                self.n_samples.to_string(),
                r.k.to_string(),
                r.label.clone(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.uncertainty.to_string(),
                r.pass.to_string(),
                r.route_lhs.clone(),
                r.route_rhs.clone(),
                r.skipped.to_string(),
                r.reason.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TheoremReport {
        let rows = vec![
            ReportRow::compare(1, "k=1", (2.0, 0.0), (2.0, 0.0), "exact", "grassmann"),
            ReportRow::compare(2, "k=2", (0.1 + 0.2, 1e-3), (0.3, 2e-3), "cubature", "grassmann"),
        ];
        TheoremReport::new(TheoremId::GrowthLimits, "cross_r2", 42, 4000, &[8.0, 16.0], rows)
    }

    #[test]
    fn pass_rule_uses_three_sigma_and_floor() {
        assert!(passes(1.0, 1.0 + 5e-7, 0.0));
        assert!(!passes(1.0, 1.0 + 2e-6, 0.0));
        assert!(passes(1.0, 1.3, 0.1));
        assert!(!passes(1.0, 1.31, 0.1));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut r = sample();
        r.elapsed_seconds = 0.123456789;
        r.rows[0].terms.push(Term { name: "lambda0".into(), value: 1.0 / 3.0, uncertainty: 0.0, route: "apex".into() });
        let back = TheoremReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn json_uses_stable_field_names() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        for key in ["theorem", "set", "seed", "n_samples", "radii", "rows", "overall_pass", "elapsed_seconds"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["theorem"], "thm3.7");
        for key in ["k", "lhs", "rhs", "uncertainty", "pass", "route_lhs", "route_rhs", "skipped", "reason"] {
            assert!(v["rows"][0].get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn skipped_rows_make_the_report_incomplete() {
        let mut rows = sample().rows;
        rows.push(ReportRow::skipped(3, "k=3", "unsupported"));
        let r = TheoremReport::new(TheoremId::GrowthLimits, "x", 1, 100, &[], rows);
        assert_eq!(r.status, Status::Incomplete);
        assert!(!r.overall_pass);
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn theorem_ids_parse() {
        for t in TheoremId::ALL {
            assert_eq!(t.as_str().parse::<TheoremId>().unwrap(), t);
        }
        assert!("thm9.9".parse::<TheoremId>().is_err());
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("theorem,set,seed"));
    }
}
