//! Log-likelihoods and their first two derivatives for the supported families.
//!
//! Gaussian is the odd one out: its log-likelihood is profiled at
//! `σ̂² = RSS/n`, while its score is the scale-free `X'(y - Xβ)` and its
//! information the plain `X'X`. The profiled gradient equals the scale-free
//! score divided by `σ̂²(β)`.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

use super::{DesignBlock, Family, LinearPredictor, MeanResponse, ResponseBlock};

/// Largest linear predictor for which `exp` is evaluated in the Poisson family.
pub const POISSON_ETA_LIMIT: f64 = 700.0;

fn check_pair(x: &DesignBlock, y: &ResponseBlock) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: x.rows(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// `η_i = x_i·β`, one value per row or `r - 1` values per row for multinomial.
pub fn linear_predictor(
    family: Family,
    x: &DesignBlock,
    beta: &DVector<f64>,
) -> Result<LinearPredictor> {
    let p = x.cols();
    let width = family.equations();
    if beta.len() != p * width {
        return Err(Error::DimensionMismatch {
            what: "coefficient vector",
            expected: p * width,
            actual: beta.len(),
        });
    }
    let beta = beta.as_slice();
    let mut values = Vec::with_capacity(x.rows() * width);
    for row in x.iter_rows() {
        for block in beta.chunks_exact(p) {
            values.push(dot(row, block));
        }
    }
    Ok(LinearPredictor {
        rows: x.rows(),
        width,
        values,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Numerically stable logistic function.
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^η)` without overflow.
pub fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn ln_factorial(y: f64) -> f64 {
    if y < 2.0 {
        0.0
    } else {
        ln_gamma(y + 1.0)
    }
}

fn poisson_mean(row: usize, eta: f64) -> Result<f64> {
    if eta > POISSON_ETA_LIMIT {
        return Err(Error::Overflow { row, eta });
    }
    Ok(eta.exp())
}

/// Log-probabilities of all `r` categories given the `r - 1` non-reference
/// linear predictors; writes into `out` (length `r`, reference first).
fn multinomial_log_probs(eta: &[f64], out: &mut [f64]) {
    let max = eta.iter().fold(0.0_f64, |m, &e| m.max(e));
    let mut total = (-max).exp();
    for &e in eta {
        total += (e - max).exp();
    }
    let log_norm = max + total.ln();
    out[0] = -log_norm;
    for (o, &e) in out[1..].iter_mut().zip(eta) {
        *o = e - log_norm;
    }
}

fn multinomial_probs(eta: &[f64], out: &mut [f64]) {
    multinomial_log_probs(eta, out);
    for v in out.iter_mut() {
        *v = v.exp();
    }
}

/// Inverse link applied row-wise.
pub fn mean_from_eta(family: Family, eta: &LinearPredictor) -> Result<MeanResponse> {
    if eta.width != family.equations() {
        return Err(Error::DimensionMismatch {
            what: "linear predictor width",
            expected: family.equations(),
            actual: eta.width,
        });
    }
    if let Some(i) = eta.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "linear predictor",
            row: i / eta.width,
        });
    }
    let values = match family {
        Family::Gaussian => eta.values.clone(),
        Family::Binomial => eta.values.iter().map(|&e| logistic(e)).collect(),
        Family::Poisson => eta
            .values
            .iter()
            .enumerate()
            .map(|(i, &e)| poisson_mean(i, e))
            .collect::<Result<_>>()?,
        Family::Multinomial(c) => {
            let r = c.get();
            let mut out = vec![0.0; eta.rows * r];
            for (i, probs) in out.chunks_exact_mut(r).enumerate() {
                multinomial_probs(eta.row(i), probs);
            }
            return Ok(MeanResponse {
                width: r,
                values: out,
            });
        }
    };
    Ok(MeanResponse { width: 1, values })
}

/// Log-likelihood at `beta`.
pub fn log_likelihood(
    family: Family,
    beta: &DVector<f64>,
    x: &DesignBlock,
    y: &ResponseBlock,
) -> Result<f64> {
    check_pair(x, y)?;
    let eta = linear_predictor(family, x, beta)?;
    let yv = y.values();
    let total = match family {
        Family::Gaussian => {
            let rss: f64 = yv
                .iter()
                .zip(&eta.values)
                .map(|(y, e)| (y - e) * (y - e))
                .sum();
            let n = yv.len() as f64;
            let sigma2 = rss / n;
            -0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
        }
        Family::Binomial => yv
            .iter()
            .zip(&eta.values)
            .map(|(&y, &e)| y * e - softplus(e))
            .sum(),
        Family::Poisson => {
            let mut acc = 0.0;
            for (i, (&y, &e)) in yv.iter().zip(&eta.values).enumerate() {
                acc += y * e - poisson_mean(i, e)? - ln_factorial(y);
            }
            acc
        }
        Family::Multinomial(c) => {
            let mut logp = vec![0.0; c.get()];
            let mut acc = 0.0;
            for (i, &y) in yv.iter().enumerate() {
                multinomial_log_probs(eta.row(i), &mut logp);
                acc += logp[category_index(family, i, y)?];
            }
            acc
        }
    };
    if !total.is_finite() {
        let row = first_bad_row(&eta.values, eta.width);
        return Err(Error::NonFinite {
            what: "log-likelihood",
            row,
        });
    }
    Ok(total)
}

fn first_bad_row(values: &[f64], width: usize) -> usize {
    values
        .iter()
        .position(|v| !v.is_finite())
        .map_or(0, |i| i / width)
}

fn category_index(family: Family, row: usize, y: f64) -> Result<usize> {
    family.check_response(row, y)?;
    Ok(y as usize - 1)
}

/// Per-row residual vectors `y - μ` (length `r - 1` for multinomial) and
/// information weights.
fn score_parts(
    family: Family,
    eta: &LinearPredictor,
    y: &ResponseBlock,
    want_weights: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let yv = y.values();
    let n = yv.len();
    match family {
        Family::Gaussian => {
            let resid = yv.iter().zip(&eta.values).map(|(y, e)| y - e).collect();
            let w = if want_weights {
                vec![1.0; n]
            } else {
                Vec::new()
            };
            Ok((resid, w))
        }
        Family::Binomial => {
            let mut resid = Vec::with_capacity(n);
            let mut w = Vec::with_capacity(if want_weights { n } else { 0 });
            for (&y, &e) in yv.iter().zip(&eta.values) {
                let p = logistic(e);
                resid.push(y - p);
                if want_weights {
                    w.push(p * (1.0 - p));
                }
            }
            Ok((resid, w))
        }
        Family::Poisson => {
            let mut resid = Vec::with_capacity(n);
            let mut w = Vec::with_capacity(if want_weights { n } else { 0 });
            for (i, (&y, &e)) in yv.iter().zip(&eta.values).enumerate() {
                let mu = poisson_mean(i, e)?;
                resid.push(y - mu);
                if want_weights {
                    w.push(mu);
                }
            }
            Ok((resid, w))
        }
        Family::Multinomial(c) => {
            // residuals: n x (r-1); weights: the (r-1) non-reference probabilities
            let r = c.get();
            let k = r - 1;
            let mut probs = vec![0.0; r];
            let mut resid = Vec::with_capacity(n * k);
            let mut w = Vec::with_capacity(if want_weights { n * k } else { 0 });
            for (i, &y) in yv.iter().enumerate() {
                multinomial_probs(eta.row(i), &mut probs);
                let cat = category_index(family, i, y)?;
                for (j, &pj) in probs.iter().enumerate().skip(1) {
                    let hit = if cat == j { 1.0 } else { 0.0 };
                    resid.push(hit - pj);
                }
                if want_weights {
                    w.extend_from_slice(&probs[1..]);
                }
            }
            Ok((resid, w))
        }
    }
}

/// Largest per-row information weight at `beta` (`p(1-p)` for binomial,
/// the largest category `p_j(1-p_j)` for multinomial).
pub(crate) fn max_bernoulli_weight(
    family: Family,
    beta: &DVector<f64>,
    x: &DesignBlock,
) -> Result<f64> {
    let eta = linear_predictor(family, x, beta)?;
    let means = mean_from_eta(family, &eta)?;
    Ok(means
        .values
        .iter()
        .fold(0.0_f64, |m, &p| m.max(p * (1.0 - p))))
}

/// Gradient of the log-likelihood (scale-free `X'(y - Xβ)` for gaussian).
pub fn score(
    family: Family,
    beta: &DVector<f64>,
    x: &DesignBlock,
    y: &ResponseBlock,
) -> Result<DVector<f64>> {
    check_pair(x, y)?;
    let eta = linear_predictor(family, x, beta)?;
    let (resid, _) = score_parts(family, &eta, y, false)?;
    let p = x.cols();
    let k = family.equations();
    let mut g = DVector::zeros(p * k);
    for (i, row) in x.iter_rows().enumerate() {
        let r_i = &resid[i * k..(i + 1) * k];
        for (cat, &res) in r_i.iter().enumerate() {
            let block = &mut g.as_mut_slice()[cat * p..(cat + 1) * p];
            for (gj, xj) in block.iter_mut().zip(row) {
                *gj += res * xj;
            }
        }
    }
    Ok(g)
}

/// Observed information `I(β) = -∂²l/∂β∂β'` (positive semi-definite).
///
/// For canonical links this equals the expected information: `X'WX` with
/// `W = p(1-p)` (binomial), `e^η` (poisson) or `1` (gaussian); multinomial
/// blocks are `Σ (δ_jk p_j - p_j p_k) x x'`.
pub fn observed_information(
    family: Family,
    beta: &DVector<f64>,
    x: &DesignBlock,
    y: &ResponseBlock,
) -> Result<DMatrix<f64>> {
    check_pair(x, y)?;
    let eta = linear_predictor(family, x, beta)?;
    let (_, w) = score_parts(family, &eta, y, true)?;
    let p = x.cols();
    let k = family.equations();
    let d = p * k;
    let mut info = DMatrix::zeros(d, d);

    if !matches!(family, Family::Multinomial(_)) {
        for (row, &wi) in x.iter_rows().zip(&w) {
            add_weighted_outer(&mut info, 0, 0, row, wi, true);
        }
    } else {
        let mut cross = vec![0.0; k * k];
        for (i, row) in x.iter_rows().enumerate() {
            let probs = &w[i * k..(i + 1) * k];
            for a in 0..k {
                for b in 0..=a {
                    let v = if a == b {
                        probs[a] * (1.0 - probs[a])
                    } else {
                        -probs[a] * probs[b]
                    };
                    cross[a * k + b] = v;
                }
            }
            for a in 0..k {
                for b in 0..=a {
                    add_weighted_outer(&mut info, a * p, b * p, row, cross[a * k + b], a == b);
                }
            }
        }
    }
    fill_upper_from_lower(&mut info);
    Ok(info)
}

/// `info[r0+j, c0+l] += w x_j x_l` on the lower triangle of the block (the
/// whole block when `diagonal_block` is false).
fn add_weighted_outer(
    info: &mut DMatrix<f64>,
    r0: usize,
    c0: usize,
    row: &[f64],
    w: f64,
    diagonal_block: bool,
) {
    let p = row.len();
    for j in 0..p {
        let wx = w * row[j];
        let upto = if diagonal_block { j + 1 } else { p };
        for l in 0..upto {
            info[(r0 + j, c0 + l)] += wx * row[l];
        }
    }
}

fn fill_upper_from_lower(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = m[(j, i)];
        }
    }
}
