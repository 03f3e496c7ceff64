//! Uniform space-time grids. Only interior nodes carry unknowns; the
//! homogeneous Dirichlet boundary values are implicit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One spatial axis `[lower, upper]` with `interior` unknowns and
/// `h = (upper - lower) / (interior + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub interior: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, interior: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && upper > lower) {
            return Err(Error::InvalidArgument(format!(
                "axis bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        if interior == 0 {
            return Err(Error::InvalidArgument("axis needs at least one interior node".into()));
        }
        Ok(Self { lower, upper, interior })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        (self.upper - self.lower) / (self.interior + 1) as f64
    }

    /// Grid node `x_i = a + i h`, `i = 0..=N+1`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.h()
    }

    /// Half-grid point `x_{i+1/2}`.
    #[inline]
    pub fn half_node(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.h()
    }
}

/// Uniform time grid `t_m = m T / M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub final_time: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(final_time: f64, steps: usize) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        Ok(Self { final_time, steps })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    /// `t_m`; exact at `m = M`.
    #[inline]
    pub fn t(&self, m: usize) -> f64 {
        self.final_time * m as f64 / self.steps as f64
    }
}

/// Tensor-product interior grid in one or two dimensions plus the time grid.
///
/// Unknowns in 2D are ordered lexicographically with `x` varying fastest:
/// `k = j * nx + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationGrid {
    axes: Vec<Axis>,
    pub time: TimeGrid,
}

impl DiscretizationGrid {
    pub fn line(axis: Axis, time: TimeGrid) -> Self {
        Self { axes: vec![axis], time }
    }

    pub fn rectangle(x: Axis, y: Axis, time: TimeGrid) -> Self {
        Self { axes: vec![x, y], time }
    }

    /// `[lower, upper]^d` with `n` interior nodes per axis, `T` and `M`.
    pub fn uniform(dim: usize, lower: f64, upper: f64, n: usize, final_time: f64, steps: usize) -> Result<Self> {
        let axis = Axis::new(lower, upper, n)?;
        let time = TimeGrid::new(final_time, steps)?;
        match dim {
            1 => Ok(Self::line(axis, time)),
            2 => Ok(Self::rectangle(axis, axis, time)),
            d => Err(Error::InvalidArgument(format!(
                "only 1D and 2D grids are supported, got dimension {d}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    /// Number of unknowns (`N` in 1D, `Nx * Ny` in 2D).
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.interior).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight of one node in the discrete L2 norm, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::h).product()
    }

    /// Coordinates of unknown `k`. The second slot is zero in 1D.
    pub fn node(&self, k: usize) -> [f64; 2] {
        match self.axes.as_slice() {
            [x] => [x.node(k + 1), 0.0],
            [x, y] => {
                let (i, j) = (k % x.interior, k / x.interior);
                [x.node(i + 1), y.node(j + 1)]
            }
            _ => unreachable!("grid dimension is 1 or 2"),
        }
    }

    /// Coordinates of every unknown, in storage order.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Sample `field` at all interior nodes.
    pub fn sample(&self, field: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let d = self.dim();
        (0..self.len()).map(|k| field(&self.node(k)[..d])).collect()
    }

    /// Discrete L2 distance `(sum_k h^d |u_k - v_k|^2)^(1/2)`.
    pub fn l2_distance(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: u.len(),
                context: "grid function",
            });
        }
        weighted_l2(u, v, self.cell_volume())
    }
}

/// Discrete L2 error `(sum_i h |u_i - v_i|^2)^(1/2)` on a 1D grid.
pub fn discrete_l2_error(u: &[f64], v: &[f64], h: f64) -> Result<f64> {
    weighted_l2(u, v, h)
}

fn weighted_l2(u: &[f64], v: &[f64], weight: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
            context: "discrete L2 error",
        });
    }
    let s: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((weight * s).sqrt())
}
