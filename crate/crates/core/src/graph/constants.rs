//! Coupling constants between the graph terms and the inner layer: `d0*`, `d1*`, the
//! transmission jumps `delta` and the node values `V`, sampled on the time grid.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Regime;

use super::solution::OrderTag;

#[derive(Debug, Clone)]
pub struct CouplingConstants {
    pub times: Vec<f64>,
    pub regime: Regime,
    pub d0_star: Vec<f64>,
    pub d1_star: Vec<f64>,
    delta: BTreeMap<(OrderTag, usize), Vec<f64>>,
    pub v: BTreeMap<OrderTag, Vec<f64>>,
    pub gamma0_measure: f64,
    pub node_volume: f64,
}

/// Orders whose jumps vanish identically.
const ZERO_JUMP_ORDERS: [OrderTag; 3] = [
    OrderTag::ONE_PLUS_A0,
    OrderTag::MINUS_A0,
    OrderTag::MINUS_2A0,
];

impl CouplingConstants {
    pub fn new(times: Vec<f64>, regime: Regime, gamma0_measure: f64, node_volume: f64) -> Self {
        let n = times.len();
        Self {
            times,
            regime,
            d0_star: vec![0.0; n],
            d1_star: vec![0.0; n],
            delta: BTreeMap::new(),
            v: BTreeMap::new(),
            gamma0_measure,
            node_volume,
        }
    }

    /// Stores `delta_order^{(edge)}` (edge 1..=3). Nonzero values are rejected where
    /// the jump vanishes identically: orders `1+a0`, `-a0`, `-2a0`, and edge 1 of the
    /// relative jumps in regimes A and B.
    pub fn set_delta(&mut self, order: OrderTag, edge: usize, values: Vec<f64>) -> Result<()> {
        if !(1..=3).contains(&edge) {
            return Err(Error::InvalidInput(format!("edge index {edge} outside 1..=3")));
        }
        if values.len() != self.times.len() {
            return Err(Error::InvalidInput("delta series length differs from the time grid".into()));
        }
        let nonzero = values.iter().any(|&v| v != 0.0);
        if nonzero && ZERO_JUMP_ORDERS.contains(&order) {
            return Err(Error::InvalidInput(format!(
                "delta_{order} must vanish identically"
            )));
        }
        if nonzero && edge == 1 && matches!(self.regime, Regime::A | Regime::B) {
            return Err(Error::InvalidInput(format!(
                "delta_{order}^(1) must vanish: jumps are relative to edge 1"
            )));
        }
        self.delta.insert((order, edge), values);
        Ok(())
    }

    pub fn has_delta(&self, order: OrderTag) -> bool {
        (1..=3).any(|e| self.delta.contains_key(&(order, e)))
    }

    /// `delta_order^{(edge)}` at a time level; absent entries are 0.
    pub fn delta(&self, order: OrderTag, edge: usize, level: usize) -> f64 {
        self.delta
            .get(&(order, edge))
            .map(|v| v[level])
            .unwrap_or(0.0)
    }

    /// The three jumps of an order at a time level.
    pub fn delta_at(&self, order: OrderTag, level: usize) -> [f64; 3] {
        [1, 2, 3].map(|e| self.delta(order, e, level))
    }

    pub fn v_at(&self, order: OrderTag, level: usize) -> Option<f64> {
        self.v.get(&order).map(|v| v[level])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_jumps_are_enforced() {
        let mut c = CouplingConstants::new(vec![0.0, 1.0], Regime::B, 1.0, 1.0);
        assert!(c.set_delta(OrderTag::MINUS_A0, 2, vec![0.0, 1e-3]).is_err());
        assert!(c.set_delta(OrderTag::MINUS_A0, 2, vec![0.0, 0.0]).is_ok());
        assert!(c.set_delta(OrderTag::ONE, 1, vec![0.0, 1.0]).is_err());
        assert!(c.set_delta(OrderTag::ONE, 2, vec![0.0, 1.0]).is_ok());
        assert_eq!(c.delta_at(OrderTag::ONE, 1), [0.0, 1.0, 0.0]);
        let mut rc = CouplingConstants::new(vec![0.0], Regime::C, 1.0, 1.0);
        assert!(rc.set_delta(OrderTag::ONE, 1, vec![0.5]).is_ok());
    }
}
