//! Box domains, uniform node-centered grids, and grid functions.
//!
//! Interior nodes carry the unknowns; everything outside the box is
//! identically zero (exterior Dirichlet condition), encoded by omission.

use crate::error::{FraclapError, Result};
use std::sync::Arc;

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(FraclapError::Domain(format!(
                "box needs matching non-empty bounds, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(FraclapError::Domain(format!(
                    "axis {i}: need lo < hi, got [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Symmetric interval `(-half, half)`.
    pub fn interval(half: f64) -> Result<Self> {
        Self::new(vec![-half], vec![half])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
}

/// Uniform node-centered grid over a box; only interior nodes are stored.
///
/// Interior node `j` on axis `i` sits at `lo_i + (j + 1) * h_i` with
/// `h_i = side_i / (N_i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGrid {
    domain: BoxDomain,
    nodes_per_axis: Vec<usize>,
    spacing: Vec<f64>,
}

impl LatticeGrid {
    pub fn new(domain: BoxDomain, nodes_per_axis: Vec<usize>) -> Result<Arc<Self>> {
        if nodes_per_axis.len() != domain.dim() {
            return Err(FraclapError::Domain(format!(
                "node counts ({}) do not match domain dimension ({})",
                nodes_per_axis.len(),
                domain.dim()
            )));
        }
        if nodes_per_axis.iter().any(|&n| n == 0) {
            return Err(FraclapError::Domain(
                "each axis needs at least one interior node".into(),
            ));
        }
        let spacing = nodes_per_axis
            .iter()
            .enumerate()
            .map(|(i, &n)| domain.side(i) / (n + 1) as f64)
            .collect();
        Ok(Arc::new(Self {
            domain,
            nodes_per_axis,
            spacing,
        }))
    }

    /// Grid over `(-half, half)` with `n` interior nodes.
    pub fn interval(half: f64, n: usize) -> Result<Arc<Self>> {
        Self::new(BoxDomain::interval(half)?, vec![n])
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.nodes_per_axis.len()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes_per_axis
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total interior node count.
    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.iter().product()
    }

    /// Product of the per-axis spacings (the node cell volume).
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Discrete measure of the grid: node count times cell volume per axis.
    /// This is the quadrature mass of the interior nodes, `prod N_i h_i`.
    pub fn discrete_measure(&self) -> f64 {
        self.nodes_per_axis
            .iter()
            .zip(&self.spacing)
            .map(|(&n, &h)| n as f64 * h)
            .product()
    }

    /// Coordinate of interior node `j` on `axis`.
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.domain.lo[axis] + (j + 1) as f64 * self.spacing[axis]
    }

    /// All coordinates along `axis`.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.nodes_per_axis[axis])
            .map(|j| self.coord(axis, j))
            .collect()
    }

    /// Grid with the same node counts whose domain is scaled by `factor`
    /// about the origin (spacing scales by the same factor).
    pub fn scaled(&self, factor: f64) -> Result<Arc<Self>> {
        if !(factor > 0.0) {
            return Err(FraclapError::Domain(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let lo = self.domain.lo.iter().map(|&a| a * factor).collect();
        let hi = self.domain.hi.iter().map(|&b| b * factor).collect();
        Self::new(BoxDomain::new(lo, hi)?, self.nodes_per_axis.clone())
    }

    /// Grid with the t-axis (last axis) stretched by `factor`, same nodes.
    pub fn stretched_last_axis(&self, factor: f64) -> Result<Arc<Self>> {
        if !(factor > 0.0) {
            return Err(FraclapError::Domain(format!(
                "stretch factor must be positive, got {factor}"
            )));
        }
        let last = self.dim() - 1;
        let mut lo = self.domain.lo.clone();
        let mut hi = self.domain.hi.clone();
        lo[last] *= factor;
        hi[last] *= factor;
        Self::new(BoxDomain::new(lo, hi)?, self.nodes_per_axis.clone())
    }
}

/// Tensor grid over the product box; node ordering is x-major then t.
pub fn product_grid(gx: &LatticeGrid, gt: &LatticeGrid) -> Result<Arc<LatticeGrid>> {
    let lo = [gx.domain.lo.as_slice(), gt.domain.lo.as_slice()].concat();
    let hi = [gx.domain.hi.as_slice(), gt.domain.hi.as_slice()].concat();
    let nodes = [gx.nodes_per_axis.as_slice(), gt.nodes_per_axis.as_slice()].concat();
    LatticeGrid::new(BoxDomain::new(lo, hi)?, nodes)
}

/// Real values on the interior nodes of a grid, row-major over axes.
/// The function is extended by zero outside the domain.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<LatticeGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<LatticeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(FraclapError::GridMismatch(format!(
                "value array length {} does not match interior node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<LatticeGrid>) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<LatticeGrid>, c: f64) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: vec![c; n],
        }
    }

    /// Sample a function of the node coordinates (1-D grids).
    pub fn sample_1d(grid: Arc<LatticeGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(FraclapError::GridMismatch(
                "sample_1d needs a 1-axis grid".into(),
            ));
        }
        let values = grid.coords(0).into_iter().map(f).collect();
        Self::new(grid, values)
    }

    /// Sample a function of `(x, t)` on a 2-axis product grid.
    pub fn sample_2d(grid: Arc<LatticeGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(FraclapError::GridMismatch(
                "sample_2d needs a 2-axis grid".into(),
            ));
        }
        let xs = grid.coords(0);
        let ts = grid.coords(1);
        let mut values = Vec::with_capacity(grid.node_count());
        for &x in &xs {
            for &t in &ts {
                values.push(f(x, t));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<LatticeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Reattach the same values to a congruent grid (same node counts).
    pub fn on_grid(&self, grid: Arc<LatticeGrid>) -> Result<Self> {
        Self::new(grid, self.values.clone())
    }

    pub fn scaled_by(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn add_scaled(&mut self, c: f64, other: &Self) -> Result<()> {
        check_same_grid(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }
}

pub(crate) fn check_same_grid(u: &GridFunction, v: &GridFunction) -> Result<()> {
    if u.grid.as_ref() != v.grid.as_ref() {
        return Err(FraclapError::GridMismatch(
            "grid functions live on different grids".into(),
        ));
    }
    Ok(())
}

/// Discrete L2 pairing `sum_j u_j v_j * prod h_i`.
pub fn l2_inner(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    check_same_grid(u, v)?;
    let dot: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a * b)
        .sum();
    Ok(dot * u.grid.cell_volume())
}

/// Discrete L2 norm.
pub fn l2_norm(u: &GridFunction) -> f64 {
    let dot: f64 = u.values.iter().map(|a| a * a).sum();
    (dot * u.grid.cell_volume()).sqrt()
}
