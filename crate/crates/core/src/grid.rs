//! Uniform space/time discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

/// Uniform lattice `x_i = x_min + i*dx` and time samples `t_k = t_start + k*dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    t_start: f64,
    dt: f64,
    n_steps: usize,
}

pub fn make_grid(
    x_min: f64,
    x_max: f64,
    n_points: usize,
    t_start: f64,
    dt: f64,
    n_steps: usize,
) -> Result<SimulationGrid> {
    SimulationGrid::new(x_min, x_max, n_points, t_start, dt, n_steps)
}

impl SimulationGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, t_start: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && t_start.is_finite() && dt.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bound".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!("x_min {x_min} >= x_max {x_max}")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("n_points {n_points} below minimum {MIN_POINTS}")));
        }
        if dt <= 0.0 {
            return Err(Error::InvalidGrid(format!("dt {dt} must be positive")));
        }
        Ok(Self { x_min, x_max, n_points, t_start, dt, n_steps })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.x(i))
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.n_steps)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    pub fn check_contains(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideGrid { x, x_min: self.x_min, x_max: self.x_max })
        }
    }

    /// Fractional node coordinate `(x - x_min)/dx`.
    pub fn coordinate(&self, x: f64) -> f64 {
        (x - self.x_min) / self.dx()
    }

    /// Index of the node at `x` when `x` sits on the lattice (within 1e-9 dx).
    pub fn node_at(&self, x: f64) -> Option<usize> {
        let c = self.coordinate(x);
        let i = c.round();
        ((c - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.n_points).then_some(i as usize)
    }

    /// Same lattice with a different run length.
    pub fn with_steps(mut self, n_steps: usize) -> Self {
        self.n_steps = n_steps;
        self
    }

    /// Same lattice translated by `shift` in space.
    pub fn shifted(mut self, shift: f64) -> Self {
        self.x_min += shift;
        self.x_max += shift;
        self
    }
}
