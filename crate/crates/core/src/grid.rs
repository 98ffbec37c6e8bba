//! Uniform meshes of `[a, b]` and grid functions living on them.
//!
//! Nodes are indexed `1..=J` to match the usual two-point boundary value
//! notation; `x_1 = a` and `x_J = b`.

use crate::error::{Error, Result};

/// Uniform mesh with `points` nodes on `[a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    points: usize,
    h: f64,
}

impl Grid {
    /// Builds a mesh with `points >= 4` nodes.
    pub fn new(a: f64, b: f64, points: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!(
                "need finite a < b, got a = {a}, b = {b}"
            )));
        }
        if points < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 grid points, got {points}"
            )));
        }
        let h = (b - a) / (points - 1) as f64;
        Ok(Self { a, b, points, h })
    }

    /// Builds the mesh whose spacing is `h`; `h` must divide `b - a`.
    pub fn with_spacing(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let cells = ((b - a) / h).round();
        if cells < 1.0 || ((b - a) / cells - h).abs() > 1e-9 * h {
            return Err(Error::InvalidGrid(format!(
                "spacing {h} does not divide [{a}, {b}]"
            )));
        }
        Self::new(a, b, cells as usize + 1)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of nodes `J`.
    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Node `x_j`, 1-based. Computed as `a + (j - 1) h`, never by accumulation.
    pub fn x(&self, j: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.points);
        if j == self.points {
            self.b
        } else {
            self.a + (j - 1) as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.points).map(|j| self.x(j)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            values: (1..=self.points).map(|j| f(self.x(j))).collect(),
        }
    }
}

/// Real values at the nodes of a [`Grid`], stored 0-based internally.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite grid value at node {}",
                bad + 1
            )));
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value `U_j`, 1-based.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn set(&mut self, j: usize, value: f64) {
        self.values[j - 1] = value;
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

    /// Interior values `U_2..U_{J-1}`.
    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

fn check_index(grid: &Grid, j: usize, lo: usize, hi: usize) -> Result<()> {
    if j < lo || j > hi {
        return Err(Error::IndexOutOfRange {
            index: j,
            lo,
            hi: hi.max(lo),
        });
    }
    debug_assert!(hi <= grid.len());
    Ok(())
}

/// `(V_{j+1} - 2V_j + V_{j-1}) / h^2` at an interior node `2 <= j <= J-1`.
pub fn second_difference(grid: &Grid, v: &GridFunction, j: usize) -> Result<f64> {
    check_index(grid, j, 2, grid.len() - 1)?;
    let h = grid.h();
    Ok((v.get(j + 1) - 2.0 * v.get(j) + v.get(j - 1)) / (h * h))
}

/// `(V_{j+1} - V_j) / h` for `1 <= j <= J-1`.
pub fn forward_difference(grid: &Grid, v: &GridFunction, j: usize) -> Result<f64> {
    check_index(grid, j, 1, grid.len() - 1)?;
    Ok((v.get(j + 1) - v.get(j)) / grid.h())
}

/// `(V_j - V_{j-1}) / h` for `2 <= j <= J`.
pub fn backward_difference(grid: &Grid, v: &GridFunction, j: usize) -> Result<f64> {
    check_index(grid, j, 2, grid.len())?;
    Ok((v.get(j) - v.get(j - 1)) / grid.h())
}

/// Nodal max-norm error `max_j |U_j - exact(x_j)|`.
pub fn linf_error(grid: &Grid, u: &GridFunction, exact: impl Fn(f64) -> f64) -> f64 {
    (1..=grid.len()).fold(0.0, |m, j| m.max((u.get(j) - exact(grid.x(j))).abs()))
}

/// Piecewise-constant extension: `U_j` on the cell `(x_j - h/2, x_j + h/2]`.
/// The left endpoint `a`, which no half-open cell contains, maps to `U_1`.
pub fn piecewise_constant_eval(grid: &Grid, u: &GridFunction, x: f64) -> Result<f64> {
    if !(x >= grid.a() && x <= grid.b()) {
        return Err(Error::OutsideDomain {
            x,
            a: grid.a(),
            b: grid.b(),
        });
    }
    // x in (x_j - h/2, x_j + h/2]  <=>  j - 1/2 < s + 1 <= j + 1/2 with s = (x - a)/h
    let s = (x - grid.a()) / grid.h();
    let j = (s + 0.5).ceil() as usize;
    Ok(u.get(j.clamp(1, grid.len())))
}
