//! JSON and CSV report serialization.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{DomainSpec, Params};
use crate::indices::{
    BoundaryScan, Estimate, Exponent, NonPseudoconvexWitness, OracleResult, Tolerances,
};
use crate::space::BBox;

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        }
    }
}

/// Resolved settings of one run, embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub builtin: Option<String>,
    pub domain_file: Option<String>,
    pub map: Option<String>,
    pub seed: u64,
    pub samples: usize,
    pub strategy: String,
    pub tolerances: Tolerances,
    pub psi: Option<String>,
    pub psi_basis: String,
    pub optimize: bool,
    pub budget: usize,
    pub format: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainInfo {
    pub name: String,
    pub n: usize,
    pub rho: String,
    pub params: Params,
    pub bbox: BBox,
}

impl From<&DomainSpec> for DomainInfo {
    fn from(s: &DomainSpec) -> Self {
        Self {
            name: s.name.clone(),
            n: s.n,
            rho: s.rho.to_string(),
            params: s.params.clone(),
            bbox: s.bbox.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Pseudoconvexity {
    Verdict(bool),
    Witness { witness: NonPseudoconvexWitness },
}

impl From<&BoundaryScan> for Pseudoconvexity {
    fn from(s: &BoundaryScan) -> Self {
        match &s.non_pseudoconvex {
            None => Pseudoconvexity::Verdict(true),
            Some(w) => Pseudoconvexity::Witness { witness: w.clone() },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryInfo {
    pub points: usize,
    pub strictly_pseudoconvex: usize,
    pub weak: usize,
    pub non_pseudoconvex: usize,
    pub max_nearest_gap: f64,
    pub warning: Option<String>,
}

impl From<&BoundaryScan> for BoundaryInfo {
    fn from(s: &BoundaryScan) -> Self {
        Self {
            points: s.boundary_points.len(),
            strictly_pseudoconvex: s.strictly_pseudoconvex,
            weak: s.weak.len(),
            non_pseudoconvex: s.non_pseudoconvex_count,
            max_nearest_gap: crate::geometry::max_nearest_gap(&s.boundary_points),
            warning: s.warning.clone(),
        }
    }
}

/// One weak point; `A`, `B` and the thresholds run parallel to `null_dirs`.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaPoint {
    pub p: Vec<Complex64>,
    pub eigenvalues: Vec<f64>,
    pub null_dirs: Vec<Vec<Complex64>>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    pub df_threshold: Vec<f64>,
    pub st_threshold: Vec<Exponent>,
}

/// Groups per-direction records by weak point.
pub fn sigma_points(scan: &BoundaryScan, est: &Estimate) -> Vec<SigmaPoint> {
    let mut out: Vec<SigmaPoint> = scan
        .weak
        .iter()
        .map(|w| SigmaPoint {
            p: w.point.clone(),
            eigenvalues: w.eigenvalues.clone(),
            null_dirs: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            df_threshold: Vec::new(),
            st_threshold: Vec::new(),
        })
        .collect();
    let mut k = 0;
    for (sp, w) in out.iter_mut().zip(&scan.weak) {
        for _ in &w.null_dirs {
            let r = &est.records[k];
            sp.null_dirs.push(r.direction.clone());
            sp.a.push(r.a);
            sp.b.push(r.b);
            sp.df_threshold.push(r.df_threshold);
            sp.st_threshold.push(r.st_threshold);
            k += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationInfo {
    pub objective: String,
    pub basis: Vec<String>,
    pub theta: Vec<f64>,
    pub baseline_df: f64,
    pub baseline_st: Exponent,
    pub evals: usize,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleReport {
    pub interior: Option<OracleResult>,
    pub exterior: Option<OracleResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub p: Vec<Complex64>,
    pub class: String,
    pub eigenvalues: Vec<f64>,
    pub lambda_scale: f64,
    /// Components `a_j` of the D'Angelo form, `alpha(conj v) = sum a_j conj(v_j)`.
    pub alpha: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub weak_points: usize,
    pub df_lower: f64,
    pub st_upper: Exponent,
    pub sum_reciprocal: f64,
    pub theta_df: Vec<f64>,
    pub theta_st: Vec<f64>,
    pub oracle_df: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub domain: Option<DomainInfo>,
    pub pseudoconvex: Option<Pseudoconvexity>,
    pub boundary: Option<BoundaryInfo>,
    pub sigma_points: Vec<SigmaPoint>,
    pub df_lower: Option<f64>,
    pub st_upper: Option<Exponent>,
    pub df_witness: Option<Vec<Complex64>>,
    pub st_witness: Option<Vec<Complex64>>,
    pub optimization: Option<OptimizationInfo>,
    pub oracle: Option<OracleReport>,
    pub residual_suites: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Self {
            tool: ToolInfo::default(),
            config,
            domain: None,
            pseudoconvex: None,
            boundary: None,
            sigma_points: Vec::new(),
            df_lower: None,
            st_upper: None,
            df_witness: None,
            st_witness: None,
            optimization: None,
            oracle: None,
            residual_suites: BTreeMap::new(),
            points: Vec::new(),
            sweep: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Invalid(e.to_string()))
    }

    /// The CSV table of the report: the sweep for `worm-sweep`, all points for `analyze`,
    /// weak-point records otherwise.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let res = if !self.sweep.is_empty() {
            w.write_record(["beta", "df_lower", "st_upper", "sum_reciprocal"])
                .and_then(|_| {
                    self.sweep.iter().try_for_each(|r| {
                        w.write_record([
                            fmt(r.beta),
                            fmt(r.df_lower),
                            fmt_exp(r.st_upper),
                            fmt(r.sum_reciprocal),
                        ])
                    })
                })
        } else if !self.points.is_empty() {
            let n = self.points[0].p.len();
            let mut head = coord_header(n);
            head.extend(["class", "lambda_min", "lambda_scale"].map(String::from));
            w.write_record(&head).and_then(|_| {
                self.points.iter().try_for_each(|r| {
                    let mut row = coords(&r.p);
                    row.push(r.class.clone());
                    row.push(fmt(r.eigenvalues.first().copied().unwrap_or(f64::NAN)));
                    row.push(fmt(r.lambda_scale));
                    w.write_record(&row)
                })
            })
        } else {
            let n = self.domain.as_ref().map(|d| d.n).unwrap_or(2);
            let mut head = coord_header(n);
            head.extend(["direction", "A", "B", "df_threshold", "st_threshold"].map(String::from));
            w.write_record(&head).and_then(|_| {
                self.sigma_points.iter().try_for_each(|s| {
                    (0..s.a.len()).try_for_each(|k| {
                        let mut row = coords(&s.p);
                        row.push(k.to_string());
                        row.push(fmt(s.a[k]));
                        row.push(fmt(s.b[k]));
                        row.push(fmt(s.df_threshold[k]));
                        row.push(fmt_exp(s.st_threshold[k]));
                        w.write_record(&row)
                    })
                })
            })
        };
        res.map_err(|e| Error::Invalid(e.to_string()))?;
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }
}

/// 17 significant digits.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "infinite".into()
    } else {
        "-infinite".into()
    }
}

fn fmt_exp(e: Exponent) -> String {
    fmt(e.value())
}

fn coord_header(n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|j| [format!("x{j}"), format!("y{j}")])
        .collect()
}

fn coords(p: &[Complex64]) -> Vec<String> {
    p.iter().flat_map(|z| [fmt(z.re), fmt(z.im)]).collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}
