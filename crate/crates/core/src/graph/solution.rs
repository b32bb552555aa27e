//! Containers for graph solutions and their CSV export.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::EdgeGrid;

/// Asymptotic order `c + d * alpha0`, kept symbolic so that orders compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrderTag {
    pub c: i32,
    pub d: i32,
}

impl OrderTag {
    pub const ZERO: OrderTag = OrderTag { c: 0, d: 0 };
    pub const MINUS_A0: OrderTag = OrderTag { c: 0, d: -1 };
    pub const MINUS_2A0: OrderTag = OrderTag { c: 0, d: -2 };
    pub const ONE_PLUS_A0: OrderTag = OrderTag { c: 1, d: 1 };
    pub const ONE: OrderTag = OrderTag { c: 1, d: 0 };
    pub const ONE_MINUS_A0: OrderTag = OrderTag { c: 1, d: -1 };

    /// The ansatz index set of the split regime.
    pub const INDEX_SET: [OrderTag; 6] = [
        OrderTag::ZERO,
        OrderTag::MINUS_A0,
        OrderTag::MINUS_2A0,
        OrderTag::ONE_PLUS_A0,
        OrderTag::ONE,
        OrderTag::ONE_MINUS_A0,
    ];

    pub fn value(self, alpha0: f64) -> f64 {
        self.c as f64 + self.d as f64 * alpha0
    }

    pub fn in_index_set(self) -> bool {
        Self::INDEX_SET.contains(&self)
    }

    pub fn minus(self, other: OrderTag) -> OrderTag {
        OrderTag {
            c: self.c - other.c,
            d: self.d - other.d,
        }
    }
}

impl fmt::Display for OrderTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.d {
            0 => String::new(),
            1 => "a0".into(),
            -1 => "-a0".into(),
            d => format!("{d}a0"),
        };
        match (self.c, a.is_empty()) {
            (c, true) => write!(f, "{c}"),
            (0, false) => write!(f, "{a}"),
            (c, false) if a.starts_with('-') => write!(f, "{c}{a}"),
            (c, false) => write!(f, "{c}+{a}"),
        }
    }
}

/// Values of one edge term at the cell centres, one row per time level.
#[derive(Debug, Clone)]
pub struct EdgeField {
    /// Edge index 1..=3.
    pub edge: usize,
    pub grid: EdgeGrid,
    pub values: Vec<Vec<f64>>,
}

/// Time series of a graph term on the three edges with vertex trace data.
#[derive(Debug, Clone)]
pub struct GraphSolution {
    pub order: OrderTag,
    pub times: Vec<f64>,
    pub fields: [EdgeField; 3],
    /// Vertex value seen by each edge, per time level.
    pub vertex_values: Vec<[f64; 3]>,
    /// `A_i(0) d/dx omega_i (0, t)`, per time level.
    pub vertex_fluxes: Vec<[f64; 3]>,
    /// Balance-row residual per time level (zero for Dirichlet vertex conditions).
    pub vertex_residuals: Vec<f64>,
    pub newton_iterations: Vec<usize>,
    /// Value at the far end of each edge (0 for every term).
    pub end_values: [f64; 3],
    /// Vertex areas `A_i(0)`.
    pub vertex_areas: [f64; 3],
}

impl GraphSolution {
    pub fn levels(&self) -> usize {
        self.times.len()
    }

    /// Index of the time level closest to `t`.
    pub fn level_of(&self, t: f64) -> usize {
        let dt = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            1.0
        };
        ((t - self.times[0]) / dt).round().clamp(0.0, (self.times.len() - 1) as f64) as usize
    }

    /// Piecewise-linear interpolant through the vertex value, the cell centres and the
    /// end value; `edge` is 0-based.
    pub fn value(&self, edge: usize, level: usize, x: f64) -> f64 {
        let f = &self.fields[edge];
        let g = &f.grid;
        let h = g.spacing();
        let u = &f.values[level];
        let n = u.len();
        let s = (x - g.x_start) / h;
        if s <= 0.5 {
            let w = self.vertex_values[level][edge];
            let t = (s / 0.5).max(0.0);
            return w + t * (u[0] - w);
        }
        if s >= n as f64 - 0.5 {
            let t = ((s - (n as f64 - 0.5)) / 0.5).min(1.0);
            return u[n - 1] + t * (self.end_values[edge] - u[n - 1]);
        }
        let k = ((s - 0.5).floor() as usize).min(n - 2);
        let t = s - 0.5 - k as f64;
        u[k] + t * (u[k + 1] - u[k])
    }

    /// Slope `d/dx omega_i (0, t)` at the vertex.
    pub fn vertex_slope(&self, edge: usize, level: usize) -> f64 {
        self.vertex_fluxes[level][edge] / self.vertex_areas[edge]
    }

    /// Backward difference of the vertex value of edge `edge` in time (forward at level 0).
    pub fn vertex_time_derivative(&self, edge: usize, level: usize) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        let l = level.max(1);
        let dt = self.times[l] - self.times[l - 1];
        (self.vertex_values[l][edge] - self.vertex_values[l - 1][edge]) / dt
    }

    /// Writes `t, edge, x, value` rows: vertex value, cell centres, end value.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "edge", "x", "value"])?;
        for (l, &t) in self.times.iter().enumerate() {
            for (i, f) in self.fields.iter().enumerate() {
                let mut rec = |x: f64, v: f64| {
                    w.write_record([t.to_string(), f.edge.to_string(), x.to_string(), v.to_string()])
                };
                rec(f.grid.x_start, self.vertex_values[l][i])?;
                for (x, v) in f.grid.centers().iter().zip(&f.values[l]) {
                    rec(*x, *v)?;
                }
                rec(f.grid.end, self.end_values[i])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the vertex trace `t, value, flux1, flux2, flux3, residual`.
    pub fn write_vertex_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "value", "flux1", "flux2", "flux3", "residual"])?;
        for (l, &t) in self.times.iter().enumerate() {
            let f = self.vertex_fluxes[l];
            w.write_record([
                t.to_string(),
                self.vertex_values[l][0].to_string(),
                f[0].to_string(),
                f[1].to_string(),
                f[2].to_string(),
                self.vertex_residuals[l].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Discrete `L2` norm on the graph, `sum_i sum_j h A_j u_j^2`, at one level.
    pub fn l2_norm_sq(&self, level: usize, areas: &[Vec<f64>; 3]) -> f64 {
        (0..3)
            .map(|i| {
                let h = self.fields[i].grid.spacing();
                self.fields[i].values[level]
                    .iter()
                    .zip(&areas[i])
                    .map(|(u, a)| h * a * u * u)
                    .sum::<f64>()
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_tags_display_and_evaluate() {
        assert_eq!(OrderTag::ONE_MINUS_A0.to_string(), "1-a0");
        assert_eq!(OrderTag::ONE_PLUS_A0.to_string(), "1+a0");
        assert_eq!(OrderTag::MINUS_2A0.to_string(), "-2a0");
        assert_eq!(OrderTag::ZERO.to_string(), "0");
        assert!((OrderTag::ONE_MINUS_A0.value(-0.5) - 1.5).abs() < 1e-15);
        assert_eq!(OrderTag::ONE.minus(OrderTag::ONE_PLUS_A0), OrderTag::MINUS_A0);
        assert!(!OrderTag { c: 2, d: 0 }.in_index_set());
    }
}
