use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Response distribution names as they appear in model specifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Gaussian,
    Binomial,
    Poisson,
    Multinomial,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Binomial => "binomial",
            FamilyKind::Poisson => "poisson",
            FamilyKind::Multinomial => "multinomial",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Number of response categories of a multinomial model (always at least 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Categories(pub(crate) usize);

impl Categories {
    pub fn new(r: usize) -> Result<Self> {
        if r < 3 {
            return Err(Error::InvalidSpec(format!(
                "multinomial family needs at least 3 categories, got {r}"
            )));
        }
        Ok(Self(r))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// A GLM family together with its canonical link.
///
/// Multinomial models use the baseline-category logit with category 1 as the
/// reference; their coefficient vector is laid out category-major
/// (all `p` coefficients of category 2, then category 3, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gaussian,
    Binomial,
    Poisson,
    Multinomial(Categories),
}

impl Family {
    pub fn multinomial(r: usize) -> Result<Self> {
        Categories::new(r).map(Family::Multinomial)
    }

    /// Build from a kind; `categories` is required for multinomial and ignored otherwise.
    pub fn from_kind(kind: FamilyKind, categories: Option<usize>) -> Result<Self> {
        match kind {
            FamilyKind::Gaussian => Ok(Family::Gaussian),
            FamilyKind::Binomial => Ok(Family::Binomial),
            FamilyKind::Poisson => Ok(Family::Poisson),
            FamilyKind::Multinomial => {
                let r = categories.ok_or_else(|| {
                    Error::InvalidSpec("multinomial family needs a category count".into())
                })?;
                Family::multinomial(r)
            }
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::Gaussian => FamilyKind::Gaussian,
            Family::Binomial => FamilyKind::Binomial,
            Family::Poisson => FamilyKind::Poisson,
            Family::Multinomial(_) => FamilyKind::Multinomial,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn link_name(&self) -> &'static str {
        match self {
            Family::Gaussian => "identity",
            Family::Binomial => "logit",
            Family::Poisson => "log",
            Family::Multinomial(_) => "baseline-category logit",
        }
    }

    pub fn categories(&self) -> Option<usize> {
        match self {
            Family::Multinomial(c) => Some(c.get()),
            _ => None,
        }
    }

    /// Number of linear predictors per row: `r - 1` for multinomial, else 1.
    pub fn equations(&self) -> usize {
        match self {
            Family::Multinomial(c) => c.get() - 1,
            _ => 1,
        }
    }

    /// Length of the coefficient vector for a design with `p` columns.
    pub fn num_params(&self, p: usize) -> usize {
        self.equations() * p
    }

    /// Whether Wald inference uses Student-t rather than normal reference quantiles.
    pub fn uses_t(&self) -> bool {
        matches!(self, Family::Gaussian)
    }

    /// Check a single response value against the family's support.
    pub fn check_response(&self, row: usize, y: f64) -> Result<()> {
        let ok = match self {
            Family::Gaussian => y.is_finite(),
            Family::Binomial => y == 0.0 || y == 1.0,
            Family::Poisson => y.is_finite() && y >= 0.0 && y.fract() == 0.0,
            Family::Multinomial(c) => y >= 1.0 && y <= c.get() as f64 && y.fract() == 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidResponse {
                family: self.name(),
                row,
                value: y,
            })
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Multinomial(c) => write!(f, "multinomial(r={})", c.get()),
            other => f.write_str(other.name()),
        }
    }
}
