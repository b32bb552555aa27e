//! Uniform grids on edges and in time.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform cell partition of `[x_start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGrid {
    pub n_cells: usize,
    pub x_start: f64,
    pub end: f64,
}

impl EdgeGrid {
    pub fn new(n_cells: usize, x_start: f64, end: f64) -> Result<Self> {
        if n_cells < 3 {
            return invalid(format!("an edge grid needs at least 3 cells, got {n_cells}"));
        }
        if !(end > x_start) {
            return invalid(format!("empty interval [{x_start}, {end}]"));
        }
        Ok(Self {
            n_cells,
            x_start,
            end,
        })
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.x_start) / self.n_cells as f64
    }

    /// Cell boundaries, `n_cells + 1` values from `x_start` to `end`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut v: Vec<f64> = (0..=self.n_cells).map(|j| self.x_start + j as f64 * h).collect();
        v[self.n_cells] = self.end;
        v
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_cells)
            .map(|j| self.x_start + (j as f64 + 0.5) * h)
            .collect()
    }
}

/// Uniform time grid on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || steps == 0 {
            return invalid("time grid needs T > 0 and at least one step");
        }
        Ok(Self { horizon, steps })
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time levels `0, dt, ..., T` (steps + 1 values).
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut v: Vec<f64> = (0..=self.steps).map(|n| n as f64 * dt).collect();
        v[self.steps] = self.horizon;
        v
    }
}
