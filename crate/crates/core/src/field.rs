//! An observed scalar field on a lattice, with an optional validity mask.
//!
//! Values are stored in canonical cell order. Masked cells carry no data:
//! they are excluded from losses, candidate orders and the effective sample
//! size used for penalty scalings.

use crate::lattice::{GridSpec, Point, Region};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
    /// `None` means every cell is valid; otherwise `true` marks valid cells.
    mask: Option<Vec<bool>>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::with_mask(grid, values, None)
    }

    pub fn with_mask(grid: GridSpec, values: Vec<f64>, mask: Option<Vec<bool>>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.n()
            )));
        }
        if let Some(m) = &mask {
            if m.len() != grid.n() {
                return Err(Error::InvalidParameter("mask length mismatch".into()));
            }
        }
        for (i, v) in values.iter().enumerate() {
            let valid = mask.as_ref().map_or(true, |m| m[i]);
            if valid && !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value at cell {i}"
                )));
            }
        }
        Ok(Self { grid, values, mask })
    }

    /// Constant field, mostly useful in tests.
    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let n = grid.n();
        Self { grid, values: vec![value; n], mask: None }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn value_at(&self, p: &Point) -> Result<f64> {
        if !self.grid.contains(p) {
            return Err(Error::OutOfBounds(p.coords().to_vec(), self.grid.dims().to_vec()));
        }
        Ok(self.values[self.grid.index(p)])
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[idx])
    }

    /// Number of valid cells: the effective n for penalty scalings.
    pub fn valid_count(&self) -> usize {
        match &self.mask {
            None => self.grid.n(),
            Some(m) => m.iter().filter(|&&v| v).count(),
        }
    }

    /// Valid cell indices in canonical order.
    pub fn valid_cells(&self) -> Vec<usize> {
        (0..self.grid.n()).filter(|&i| self.is_valid(i)).collect()
    }

    /// Valid values over a region in canonical point order.
    pub fn region_values<'a>(&'a self, region: &'a Region) -> impl Iterator<Item = f64> + 'a {
        region.points().iter().filter_map(move |p| {
            let idx = self.grid.index(p);
            self.is_valid(idx).then(|| self.values[idx])
        })
    }
}
