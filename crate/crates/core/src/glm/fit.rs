use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, Cholesky};

use super::likelihood::{log_likelihood, max_bernoulli_weight, observed_information, score};
use super::{DesignBlock, Family, ResponseBlock};

/// Coefficient magnitude treated as a sign of complete separation.
pub const SEPARATION_LIMIT: f64 = 1e4;

/// A binomial or multinomial fit whose every row has `p(1-p)` below this
/// value has fitted probabilities that are all numerically 0 or 1.
pub const SATURATION_WEIGHT: f64 = 1e-6;

/// Newton–Raphson settings. There is no ridge fallback: a singular
/// information matrix is always an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_halving_max: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            gradient_tolerance: 1e-8,
            step_halving_max: 10,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig {
                path: "fit.max_iterations".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.gradient_tolerance.is_nan() || self.gradient_tolerance <= 0.0 {
            return Err(Error::InvalidConfig {
                path: "fit.gradient_tolerance".into(),
                message: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Sufficient statistics of a gaussian block: `X'X`, `X'y`, `y'y` and `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramStats {
    pub xx: DMatrix<f64>,
    pub xy: DVector<f64>,
    pub yy: f64,
    pub n: usize,
}

impl GramStats {
    pub fn zeros(p: usize) -> Self {
        Self {
            xx: DMatrix::zeros(p, p),
            xy: DVector::zeros(p),
            yy: 0.0,
            n: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.xy.len()
    }

    pub fn add(&mut self, other: &GramStats) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "gram dimension",
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        self.xx += &other.xx;
        self.xy += &other.xy;
        self.yy += other.yy;
        self.n += other.n;
        Ok(())
    }

    /// `y'y - 2β'X'y + β'X'Xβ`, clamped at zero.
    pub fn rss(&self, beta: &DVector<f64>) -> f64 {
        let quad = beta.dot(&(&self.xx * beta));
        (self.yy - 2.0 * beta.dot(&self.xy) + quad).max(0.0)
    }
}

/// Result of fitting one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFit {
    /// 1-based position in the partition plan.
    pub subset_index: usize,
    pub beta: DVector<f64>,
    /// Estimated covariance `V(β̂_s)`.
    pub covariance: DMatrix<f64>,
    /// Information at `β̂_s`; for gaussian fits this is `X'X`, so
    /// `covariance · neg_hessian = σ̂² I`.
    pub neg_hessian: DMatrix<f64>,
    /// Gaussian only.
    pub gram: Option<GramStats>,
    /// Gaussian only.
    pub rss: Option<f64>,
    pub n_rows: usize,
    pub converged: bool,
    pub iterations: usize,
    /// ∞-norm of the score at `β̂_s`.
    pub final_gradient_norm: f64,
}

impl SubsetFit {
    pub fn with_index(mut self, index: usize) -> Self {
        self.subset_index = index;
        self
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Residual variance estimate `RSS/(n - p)` for gaussian fits.
    pub fn sigma2(&self) -> Option<f64> {
        let rss = self.rss?;
        Some(rss / (self.n_rows - self.dim()) as f64)
    }
}

/// Exact Gram sums of one block.
pub fn accumulate_gram(x: &DesignBlock, y: &ResponseBlock) -> Result<GramStats> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let p = x.cols();
    let mut stats = GramStats::zeros(p);
    for (row, &yi) in x.iter_rows().zip(y.values()) {
        for j in 0..p {
            let xj = row[j];
            stats.xy[j] += xj * yi;
            for (l, &xl) in row[..=j].iter().enumerate() {
                stats.xx[(j, l)] += xj * xl;
            }
        }
        stats.yy += yi * yi;
    }
    for j in 0..p {
        for l in (j + 1)..p {
            stats.xx[(j, l)] = stats.xx[(l, j)];
        }
    }
    stats.n = x.rows();
    Ok(stats)
}

/// Solve `(X'X) β = X'y` from Gram sums.
pub(crate) fn solve_normal_equations(gram: &GramStats) -> Result<(DVector<f64>, Cholesky)> {
    let chol = Cholesky::factor(&gram.xx).map_err(|column| Error::SingularDesign { column })?;
    let beta = chol.solve(&gram.xy);
    Ok((beta, chol))
}

/// Ordinary least squares from accumulated Gram sums.
pub fn fit_ols(gram: &GramStats) -> Result<SubsetFit> {
    let p = gram.dim();
    if gram.n <= p {
        return Err(Error::InsufficientRows {
            rows: gram.n,
            params: p,
        });
    }
    let (beta, chol) = solve_normal_equations(gram)?;
    let rss = gram.rss(&beta);
    let sigma2 = rss / (gram.n - p) as f64;
    let covariance = chol.inverse() * sigma2;
    let gradient = &gram.xy - &gram.xx * &beta;
    Ok(SubsetFit {
        subset_index: 1,
        final_gradient_norm: max_abs(&gradient),
        beta,
        covariance,
        neg_hessian: gram.xx.clone(),
        gram: Some(gram.clone()),
        rss: Some(rss),
        n_rows: gram.n,
        converged: true,
        iterations: 0,
    })
}

/// Damped Newton–Raphson for the binomial, poisson and multinomial families.
///
/// Each step solves `I(β) δ = score(β)`; the step is halved (up to
/// `step_halving_max` times) while the log-likelihood decreases. Iteration
/// stops once `‖score‖∞ < gradient_tolerance`. Running out of iterations is
/// not an error: the fit comes back with `converged == false`.
pub fn fit_irls(
    family: Family,
    x: &DesignBlock,
    y: &ResponseBlock,
    config: &FitConfig,
    beta_init: Option<&DVector<f64>>,
) -> Result<SubsetFit> {
    if family == Family::Gaussian {
        return Err(Error::InvalidSpec(
            "gaussian models are fitted by least squares, not IRLS".into(),
        ));
    }
    config.validate()?;
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: x.rows(),
            actual: y.len(),
        });
    }
    y.validate(family)?;
    let d = family.num_params(x.cols());
    let mut beta = match beta_init {
        Some(b) => {
            if b.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "initial coefficients",
                    expected: d,
                    actual: b.len(),
                });
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "initial coefficients",
                    row: 0,
                });
            }
            b.clone()
        }
        None => DVector::zeros(d),
    };

    let mut ll = log_likelihood(family, &beta, x, y)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm;
    loop {
        let grad = score(family, &beta, x, y)?;
        grad_norm = max_abs(&grad);
        if grad_norm < config.gradient_tolerance {
            converged = true;
            break;
        }
        if iterations == config.max_iterations {
            break;
        }
        let info = observed_information(family, &beta, x, y)?;
        let chol = Cholesky::factor(&info).map_err(|column| Error::SingularInformation {
            subset: None,
            column,
        })?;
        let step = chol.solve(&grad);
        iterations += 1;

        // Near the optimum the likelihood change drops below summation
        // round-off, so allow a tiny decrease there.
        let slack = 1e-10 * (1.0 + ll.abs());
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=config.step_halving_max {
            let candidate = &beta + &step * scale;
            if let Ok(v) = log_likelihood(family, &candidate, x, y) {
                if v >= ll - slack {
                    accepted = Some((candidate, v));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((next, next_ll)) = accepted else {
            break;
        };
        beta = next;
        ll = next_ll;
        if max_abs(&beta) > SEPARATION_LIMIT {
            return Err(Error::Separation {
                subset: None,
                iteration: iterations,
            });
        }
    }

    if converged
        && matches!(family, Family::Binomial | Family::Multinomial(_))
        && max_bernoulli_weight(family, &beta, x)? < SATURATION_WEIGHT
    {
        return Err(Error::Separation {
            subset: None,
            iteration: iterations,
        });
    }

    let neg_hessian = observed_information(family, &beta, x, y)?;
    let covariance = Cholesky::factor(&neg_hessian)
        .map_err(|column| Error::SingularInformation {
            subset: None,
            column,
        })?
        .inverse();
    Ok(SubsetFit {
        subset_index: 1,
        beta,
        covariance,
        neg_hessian,
        gram: None,
        rss: None,
        n_rows: x.rows(),
        converged,
        iterations,
        final_gradient_norm: grad_norm,
    })
}
