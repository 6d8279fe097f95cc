//! Recombination of per-subset fits into one estimate.
//!
//! * gaussian: exact pooling of Gram sums, `β̂ = (Σ X_s'X_s)^{-1} Σ X_s'y_s`;
//! * binomial: curvature-weighted average, `β̂ = (Σ I_s)^{-1} Σ I_s β̂_s`,
//!   with `I_s` the observed information at `β̂_s`;
//! * poisson and multinomial: plain average `Σ β̂_s / S`.
//!
//! The combined covariance is `(1/S²) Σ V(β̂_s)` for every family. It weights
//! subsets equally whatever their size, so strongly unbalanced plans degrade
//! the approximation. All sums run in ascending subset index so the result
//! does not depend on the order in which subset fits finished.

mod quantiles;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{solve_normal_equations, Family, FamilyKind, GramStats, SubsetFit};
use crate::linalg::Cholesky;

pub use quantiles::{normal_quantile, normal_sf, t_quantile, t_sf};

/// How subset estimates were pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMethod {
    GramSum,
    HessianWeighted,
    Mean,
}

impl CombineMethod {
    pub fn for_family(family: Family) -> Self {
        match family {
            Family::Gaussian => CombineMethod::GramSum,
            Family::Binomial => CombineMethod::HessianWeighted,
            Family::Poisson | Family::Multinomial(_) => CombineMethod::Mean,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CombineMethod::GramSum => "gram-sum",
            CombineMethod::HessianWeighted => "hessian-weighted",
            CombineMethod::Mean => "mean",
        }
    }
}

/// Which covariance accompanies a gaussian combination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceScheme {
    /// `(1/S²) Σ V(β̂_s)`, used for every family.
    #[default]
    Aggregated,
    /// `σ̂² (Σ X_s'X_s)^{-1}` with `σ̂²` from the pooled residual sum of squares.
    /// Gaussian only.
    PooledExact,
}

/// Recombined gaussian estimate with the pooled sufficient statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCombination {
    pub beta: DVector<f64>,
    pub pooled: GramStats,
    pub rss: f64,
}

impl LinearCombination {
    /// Exact full-data covariance `RSS/(n - p) · (Σ X'X)^{-1}`.
    pub fn pooled_variance(&self) -> Result<DMatrix<f64>> {
        let p = self.pooled.dim();
        if self.pooled.n <= p {
            return Err(Error::InsufficientRows {
                rows: self.pooled.n,
                params: p,
            });
        }
        let sigma2 = self.rss / (self.pooled.n - p) as f64;
        let chol =
            Cholesky::factor(&self.pooled.xx).map_err(|column| Error::SingularDesign { column })?;
        Ok(chol.inverse() * sigma2)
    }
}

fn sorted_by_index(fits: &[SubsetFit]) -> Result<Vec<&SubsetFit>> {
    let first = fits.first().ok_or(Error::DimensionMismatch {
        what: "subset fits",
        expected: 1,
        actual: 0,
    })?;
    let d = first.dim();
    if let Some(bad) = fits.iter().find(|f| f.dim() != d) {
        return Err(Error::DimensionMismatch {
            what: "subset coefficient length",
            expected: d,
            actual: bad.dim(),
        });
    }
    let mut sorted: Vec<&SubsetFit> = fits.iter().collect();
    sorted.sort_by_key(|f| f.subset_index);
    Ok(sorted)
}

fn require_converged(fits: &[&SubsetFit]) -> Result<()> {
    let bad: Vec<usize> = fits
        .iter()
        .filter(|f| !f.converged)
        .map(|f| f.subset_index)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::CombineRejected { subsets: bad })
    }
}

/// Pool Gram sums in the given order and solve the normal equations.
pub fn combine_linear(parts: &[GramStats]) -> Result<LinearCombination> {
    let first = parts.first().ok_or(Error::DimensionMismatch {
        what: "gram parts",
        expected: 1,
        actual: 0,
    })?;
    let mut pooled = first.clone();
    for part in &parts[1..] {
        pooled.add(part)?;
    }
    let (beta, _) = solve_normal_equations(&pooled)?;
    let rss = pooled.rss(&beta);
    Ok(LinearCombination { beta, pooled, rss })
}

/// `(Σ I_s)^{-1} Σ I_s β̂_s`. A single fit is returned unchanged.
pub fn combine_hessian_weighted(fits: &[SubsetFit]) -> Result<DVector<f64>> {
    let fits = sorted_by_index(fits)?;
    require_converged(&fits)?;
    if fits.len() == 1 {
        return Ok(fits[0].beta.clone());
    }
    let d = fits[0].dim();
    let mut info = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for f in &fits {
        info += &f.neg_hessian;
        rhs += &f.neg_hessian * &f.beta;
    }
    let chol = Cholesky::factor(&info).map_err(|column| Error::SingularInformation {
        subset: None,
        column,
    })?;
    Ok(chol.solve(&rhs))
}

/// `Σ β̂_s / S`.
pub fn combine_mean(fits: &[SubsetFit]) -> Result<DVector<f64>> {
    let fits = sorted_by_index(fits)?;
    require_converged(&fits)?;
    let mut sum = DVector::zeros(fits[0].dim());
    for f in &fits {
        sum += &f.beta;
    }
    Ok(sum / fits.len() as f64)
}

/// `(1/S²) Σ V(β̂_s)`.
pub fn aggregate_variance(fits: &[SubsetFit]) -> Result<DMatrix<f64>> {
    let fits = sorted_by_index(fits)?;
    let d = fits[0].dim();
    let mut sum = DMatrix::zeros(d, d);
    for f in &fits {
        if f.covariance.nrows() != d || f.covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                what: "subset covariance",
                expected: d,
                actual: f.covariance.nrows(),
            });
        }
        sum += &f.covariance;
    }
    let s = fits.len() as f64;
    Ok(sum / (s * s))
}

/// A recombined coefficient vector and covariance, before inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub beta: DVector<f64>,
    pub variance: DMatrix<f64>,
    pub method: CombineMethod,
    pub subsets: usize,
    pub n: usize,
}

/// Recombined estimate with Wald statistics, p-values and confidence intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedFit {
    pub family: FamilyKind,
    pub categories: Option<usize>,
    pub method: CombineMethod,
    pub labels: Vec<String>,
    pub beta: DVector<f64>,
    pub variance: DMatrix<f64>,
    pub se: DVector<f64>,
    /// t statistics for gaussian fits, z statistics otherwise.
    pub stat: DVector<f64>,
    pub p_value: DVector<f64>,
    pub ci_low: DVector<f64>,
    pub ci_high: DVector<f64>,
    pub confidence: f64,
    /// Quantile used for the intervals.
    pub critical_value: f64,
    /// Residual degrees of freedom `n - p` (gaussian only).
    pub df: Option<usize>,
    pub subsets: usize,
    pub n: usize,
    /// Coefficients whose standard error is exactly zero.
    pub zero_se: Vec<usize>,
}

/// One printable coefficient line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub stat: f64,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CombinedFit {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn rows(&self) -> Vec<CoefficientRow> {
        (0..self.len())
            .map(|j| CoefficientRow {
                label: self.labels[j].clone(),
                estimate: self.beta[j],
                se: self.se[j],
                stat: self.stat[j],
                p: self.p_value[j],
                ci_low: self.ci_low[j],
                ci_high: self.ci_high[j],
            })
            .collect()
    }

    /// Statistic name as printed in coefficient tables.
    pub fn stat_name(&self) -> &'static str {
        if self.df.is_some() {
            "t"
        } else {
            "z"
        }
    }
}

/// Wald statistics, two-sided p-values and intervals at `confidence`.
///
/// Gaussian fits use Student-t with `n - p` degrees of freedom, all other
/// families the standard normal. `p` is the number of design columns.
pub fn wald_inference(
    estimate: Estimate,
    family: Family,
    p: usize,
    confidence: f64,
    labels: Vec<String>,
) -> Result<CombinedFit> {
    let d = estimate.beta.len();
    if estimate.variance.nrows() != d || estimate.variance.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "variance matrix",
            expected: d,
            actual: estimate.variance.nrows(),
        });
    }
    if labels.len() != d {
        return Err(Error::DimensionMismatch {
            what: "coefficient labels",
            expected: d,
            actual: labels.len(),
        });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "confidence level must lie in (0, 1), got {confidence}"
        )));
    }
    let upper = 1.0 - (1.0 - confidence) / 2.0;
    let df = if family.uses_t() {
        if estimate.n <= p {
            return Err(Error::InsufficientRows {
                rows: estimate.n,
                params: p,
            });
        }
        Some(estimate.n - p)
    } else {
        None
    };
    let (critical_value, tail): (f64, Box<dyn Fn(f64) -> f64>) = match df {
        Some(df) => {
            let df = df as f64;
            (t_quantile(upper, df), Box::new(move |t| t_sf(t, df)))
        }
        None => (normal_quantile(upper), Box::new(normal_sf)),
    };

    let mut se = DVector::zeros(d);
    let mut stat = DVector::zeros(d);
    let mut p_value = DVector::zeros(d);
    let mut ci_low = DVector::zeros(d);
    let mut ci_high = DVector::zeros(d);
    let mut zero_se = Vec::new();
    for j in 0..d {
        let v = estimate.variance[(j, j)];
        if v.is_nan() || v < 0.0 {
            return Err(Error::NonFinite {
                what: "variance diagonal",
                row: j,
            });
        }
        let b = estimate.beta[j];
        let s = v.sqrt();
        se[j] = s;
        if s == 0.0 {
            zero_se.push(j);
            if b == 0.0 {
                stat[j] = 0.0;
                p_value[j] = 1.0;
            } else {
                stat[j] = b.signum() * f64::INFINITY;
                p_value[j] = 0.0;
            }
        } else {
            stat[j] = b / s;
            p_value[j] = (2.0 * tail(stat[j].abs())).min(1.0);
        }
        let half = critical_value * s;
        ci_low[j] = b - half;
        ci_high[j] = b + half;
    }

    Ok(CombinedFit {
        family: family.kind(),
        categories: family.categories(),
        method: estimate.method,
        labels,
        beta: estimate.beta,
        variance: estimate.variance,
        se,
        stat,
        p_value,
        ci_low,
        ci_high,
        confidence,
        critical_value,
        df,
        subsets: estimate.subsets,
        n: estimate.n,
        zero_se,
    })
}
