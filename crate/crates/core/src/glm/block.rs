use crate::error::{Error, Result};

use super::Family;

/// Dense design matrix of one subset (or chunk), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignBlock {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DesignBlock {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::EmptyBlock);
        }
        if cols == 0 {
            return Err(Error::DimensionMismatch {
                what: "design columns",
                expected: 1,
                actual: 0,
            });
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "design values",
                expected: rows * cols,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "design matrix",
                row: i / cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Build from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "design row length",
                    expected: cols,
                    actual: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    /// Vertically concatenate blocks with the same column count.
    pub fn stack(blocks: &[DesignBlock]) -> Result<Self> {
        let first = blocks.first().ok_or(Error::EmptyBlock)?;
        let mut values = Vec::with_capacity(blocks.iter().map(|b| b.values.len()).sum());
        for b in blocks {
            if b.cols != first.cols {
                return Err(Error::DimensionMismatch {
                    what: "design columns",
                    expected: first.cols,
                    actual: b.cols,
                });
            }
            values.extend_from_slice(&b.values);
        }
        let rows = values.len() / first.cols;
        Ok(Self {
            rows,
            cols: first.cols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self::new(idx.len(), self.cols, values)
    }
}

/// Response vector paired with a [`DesignBlock`].
///
/// Multinomial responses hold category indices `1..=r` as floats.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseBlock {
    values: Vec<f64>,
}

impl ResponseBlock {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyBlock);
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "response",
                row,
            });
        }
        Ok(Self { values })
    }

    pub fn stack(blocks: &[ResponseBlock]) -> Result<Self> {
        Self::new(
            blocks
                .iter()
                .flat_map(|b| b.values.iter().copied())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validate(&self, family: Family) -> Result<()> {
        self.values
            .iter()
            .enumerate()
            .try_for_each(|(i, &y)| family.check_response(i, y))
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.values[i]).collect())
    }
}

/// Per-row linear predictors: one column, or `r - 1` columns for multinomial.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor {
    pub(crate) rows: usize,
    pub(crate) width: usize,
    pub(crate) values: Vec<f64>,
}

impl LinearPredictor {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn from_values(rows: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * width {
            return Err(Error::DimensionMismatch {
                what: "linear predictor",
                expected: rows * width,
                actual: values.len(),
            });
        }
        Ok(Self {
            rows,
            width,
            values,
        })
    }
}

/// Per-row fitted means. Multinomial rows carry all `r` probabilities,
/// reference category first.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanResponse {
    pub(crate) width: usize,
    pub(crate) values: Vec<f64>,
}

impl MeanResponse {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_blocks() {
        assert!(matches!(
            DesignBlock::new(0, 1, vec![]),
            Err(Error::EmptyBlock)
        ));
        assert!(DesignBlock::new(1, 2, vec![1.0]).is_err());
        assert!(matches!(
            DesignBlock::new(2, 1, vec![1.0, f64::INFINITY]),
            Err(Error::NonFinite { row: 1, .. })
        ));
        assert!(ResponseBlock::new(vec![]).is_err());
    }

    #[test]
    fn stack_and_select() {
        let a = DesignBlock::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = DesignBlock::from_rows(&[[1.0, 3.0], [1.0, 4.0]]).unwrap();
        let s = DesignBlock::stack(&[a, b]).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row(2), &[1.0, 4.0]);
        let picked = s.select_rows(&[2, 0]).unwrap();
        assert_eq!(picked.values(), &[1.0, 4.0, 1.0, 2.0]);
    }
}
