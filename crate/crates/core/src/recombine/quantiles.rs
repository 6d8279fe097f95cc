//! Reference-distribution tail probabilities and quantiles for Wald inference.
//!
//! The normal tail uses `libm::erfc`; the t tail uses the regularized
//! incomplete beta function from `statrs`. Quantiles start from the `statrs`
//! inverse and are polished with Newton steps on the upper tail.

use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

const NEWTON_STEPS: usize = 4;

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn students_t(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom")
}

/// `P(Z > z)` for a standard normal `Z`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn t_sf(t: f64, df: f64) -> f64 {
    students_t(df).sf(t)
}

fn polish(sf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64, prob: f64, start: f64) -> f64 {
    let upper = 1.0 - prob;
    let mut x = start;
    for _ in 0..NEWTON_STEPS {
        let density = pdf(x);
        if density.is_nan() || density <= 0.0 {
            break;
        }
        let step = (sf(x) - upper) / density;
        if !step.is_finite() {
            break;
        }
        x += step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Standard normal quantile for `prob` in `(0, 1)`.
pub fn normal_quantile(prob: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability must lie in (0, 1)");
    if prob < 0.5 {
        return -normal_quantile(1.0 - prob);
    }
    let dist = standard_normal();
    polish(normal_sf, |x| dist.pdf(x), prob, dist.inverse_cdf(prob))
}

/// Student-t quantile for `prob` in `(0, 1)`.
pub fn t_quantile(prob: f64, df: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability must lie in (0, 1)");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if prob < 0.5 {
        return -t_quantile(1.0 - prob, df);
    }
    let dist = students_t(df);
    polish(
        |x| dist.sf(x),
        |x| dist.pdf(x),
        prob,
        dist.inverse_cdf(prob),
    )
}
