use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{Family, FamilyKind};
use crate::recombine::{wald_inference, CombinedFit, Estimate};

/// Relative differences divide by `max(|reference|, REL_EPSILON)`.
pub const REL_EPSILON: f64 = 1e-12;

/// p-values both below this are reported as equal.
pub const P_FLOOR: f64 = 1e-8;

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(REL_EPSILON)
}

/// A value passes when its absolute or its relative difference is within
/// the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub coef: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub dr_estimate: f64,
    pub full_estimate: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub dr_se: f64,
    pub full_se: f64,
    pub se_abs_diff: f64,
    pub se_rel_diff: f64,
    pub dr_stat: f64,
    pub full_stat: f64,
    pub stat_rel_diff: f64,
    pub dr_p: f64,
    pub full_p: f64,
    pub p_diff: f64,
    pub dr_ci: [f64; 2],
    pub full_ci: [f64; 2],
    pub coef_pass: bool,
    pub se_pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
    pub max_se_abs_diff: f64,
    pub max_se_rel_diff: f64,
    pub max_stat_rel_diff: f64,
    pub max_p_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// What the D&R fit is compared against (`full` or `baseline`).
    pub reference: String,
    pub tolerances: Tolerances,
    pub rows: Vec<ComparisonRow>,
    pub summary: Summary,
    pub passed: bool,
    pub legend: Vec<String>,
}

fn legend() -> Vec<String> {
    vec![
        format!("rel_diff = |dr - ref| / max(|ref|, {REL_EPSILON:e})"),
        "a coefficient or standard error passes when its absolute or relative difference is within tolerance"
            .into(),
        format!("p-values both below {P_FLOOR:e} are treated as equal (p_diff 0)"),
    ]
}

fn check_labels(left: &[String], right: &[String]) -> Result<Vec<usize>> {
    let l: BTreeSet<&String> = left.iter().collect();
    let r: BTreeSet<&String> = right.iter().collect();
    if l != r || l.len() != left.len() || r.len() != right.len() {
        return Err(Error::LabelMismatch {
            only_left: l.difference(&r).map(|s| s.to_string()).collect(),
            only_right: r.difference(&l).map(|s| s.to_string()).collect(),
        });
    }
    let pos: BTreeMap<&String, usize> = right.iter().enumerate().map(|(i, s)| (s, i)).collect();
    Ok(left.iter().map(|s| pos[s]).collect())
}

/// Coefficient-by-coefficient comparison of a D&R fit with a reference fit.
/// Reference rows are matched by label.
pub fn compare_fits(
    dr: &CombinedFit,
    full: &CombinedFit,
    tol: Tolerances,
) -> Result<ComparisonReport> {
    compare_with(dr, full, tol, "full")
}

fn compare_with(
    dr: &CombinedFit,
    full: &CombinedFit,
    tol: Tolerances,
    reference: &str,
) -> Result<ComparisonReport> {
    let order = check_labels(&dr.labels, &full.labels)?;
    let mut rows = Vec::with_capacity(order.len());
    let mut s = Summary::default();
    for (i, &j) in order.iter().enumerate() {
        let (a, b) = (dr.beta[i], full.beta[j]);
        let (sa, sb) = (dr.se[i], full.se[j]);
        let abs_diff = (a - b).abs();
        let rel = rel_diff(a, b);
        let se_abs_diff = (sa - sb).abs();
        let se_rel = rel_diff(sa, sb);
        let stat_rel = if dr.stat[i] == full.stat[j] {
            0.0
        } else {
            rel_diff(dr.stat[i], full.stat[j])
        };
        let (pa, pb) = (dr.p_value[i], full.p_value[j]);
        let p_diff = if pa < P_FLOOR && pb < P_FLOOR {
            0.0
        } else {
            (pa - pb).abs()
        };
        s.max_abs_diff = s.max_abs_diff.max(abs_diff);
        s.max_rel_diff = s.max_rel_diff.max(rel);
        s.max_se_abs_diff = s.max_se_abs_diff.max(se_abs_diff);
        s.max_se_rel_diff = s.max_se_rel_diff.max(se_rel);
        s.max_stat_rel_diff = s.max_stat_rel_diff.max(stat_rel);
        s.max_p_diff = s.max_p_diff.max(p_diff);
        rows.push(ComparisonRow {
            label: dr.labels[i].clone(),
            dr_estimate: a,
            full_estimate: b,
            abs_diff,
            rel_diff: rel,
            dr_se: sa,
            full_se: sb,
            se_abs_diff,
            se_rel_diff: se_rel,
            dr_stat: dr.stat[i],
            full_stat: full.stat[j],
            stat_rel_diff: stat_rel,
            dr_p: pa,
            full_p: pb,
            p_diff,
            dr_ci: [dr.ci_low[i], dr.ci_high[i]],
            full_ci: [full.ci_low[j], full.ci_high[j]],
            coef_pass: abs_diff <= tol.coef || rel <= tol.coef,
            se_pass: se_abs_diff <= tol.se || se_rel <= tol.se,
        });
    }
    let passed = rows.iter().all(|r| r.coef_pass && r.se_pass);
    Ok(ComparisonReport {
        reference: reference.to_string(),
        tolerances: tol,
        rows,
        summary: s,
        passed,
        legend: legend(),
    })
}

/// Third-party coefficient table: `label,estimate,se`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
}

pub fn read_baseline(path: &Path) -> Result<Vec<BaselineRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<BaselineRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse {
            row: i + 1,
            column: String::new(),
            message: e.to_string(),
        })?;
        if !(row.estimate.is_finite() && row.se.is_finite() && row.se >= 0.0) {
            return Err(Error::Parse {
                row: i + 1,
                column: row.label,
                message: "estimate and se must be finite, se nonnegative".into(),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::NoRows(path.to_path_buf()));
    }
    Ok(rows)
}

/// Compare against an external table. Statistics, p-values and intervals for
/// the baseline are derived from its estimates and standard errors with the
/// D&R fit's reference distribution and confidence level.
pub fn compare_baseline(
    dr: &CombinedFit,
    baseline: &[BaselineRow],
    tol: Tolerances,
) -> Result<ComparisonReport> {
    let labels: Vec<String> = baseline.iter().map(|r| r.label.clone()).collect();
    check_labels(&dr.labels, &labels)?;
    let d = baseline.len();
    let family = match dr.family {
        FamilyKind::Multinomial => Family::multinomial(dr.categories.unwrap_or(3))?,
        other => Family::from_kind(other, None)?,
    };
    let p = match dr.df {
        Some(df) => dr.n - df,
        None => 0,
    };
    let estimate = Estimate {
        beta: DVector::from_iterator(d, baseline.iter().map(|r| r.estimate)),
        variance: DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            baseline.iter().map(|r| r.se * r.se),
        )),
        method: dr.method,
        subsets: 1,
        n: dr.n,
    };
    let reference = wald_inference(estimate, family, p, dr.confidence, labels)?;
    compare_with(dr, &reference, tol, "baseline")
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "Inf".into()
        } else {
            "-Inf".into()
        }
    } else if v.abs() >= 1e-3 && v.abs() < 1e6 {
        format!("{v:.6}")
    } else {
        format!("{v:.3e}")
    }
}

/// Aligned plain-text rendering.
pub fn render_text(report: &ComparisonReport) -> String {
    let header = [
        "label",
        "dr",
        report.reference.as_str(),
        "abs_diff",
        "rel_diff",
        "dr_se",
        "ref_se",
        "se_rel",
        "dr_stat",
        "ref_stat",
        "dr_p",
        "ref_p",
        "ok",
    ];
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &report.rows {
        table.push(vec![
            r.label.clone(),
            fmt_num(r.dr_estimate),
            fmt_num(r.full_estimate),
            fmt_num(r.abs_diff),
            fmt_num(r.rel_diff),
            fmt_num(r.dr_se),
            fmt_num(r.full_se),
            fmt_num(r.se_rel_diff),
            fmt_num(r.dr_stat),
            fmt_num(r.full_stat),
            fmt_num(r.dr_p),
            fmt_num(r.full_p),
            if r.coef_pass && r.se_pass {
                "yes"
            } else {
                "NO"
            }
            .to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            table
                .iter()
                .map(|row| row[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in &table {
        for (c, cell) in row.iter().enumerate() {
            let pad = widths[c] - cell.chars().count();
            if c == 0 {
                let _ = write!(out, "{cell}{}", " ".repeat(pad));
            } else {
                let _ = write!(out, "  {}{cell}", " ".repeat(pad));
            }
        }
        out.push('\n');
    }
    let s = &report.summary;
    let _ = writeln!(
        out,
        "\nmax abs_diff {}  max rel_diff {}  max se_rel_diff {}  max stat_rel_diff {}  max p_diff {}",
        fmt_num(s.max_abs_diff),
        fmt_num(s.max_rel_diff),
        fmt_num(s.max_se_rel_diff),
        fmt_num(s.max_stat_rel_diff),
        fmt_num(s.max_p_diff)
    );
    let _ = writeln!(
        out,
        "tolerances: coef {:e}, se {:e}: {}",
        report.tolerances.coef,
        report.tolerances.se,
        if report.passed { "PASS" } else { "FAIL" }
    );
    for line in &report.legend {
        let _ = writeln!(out, "note: {line}");
    }
    out
}
