//! Exponent classification into the three asymptotic regimes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance used when comparing exponents (Kronecker gates, regime boundaries).
pub const EXPONENT_TOL: f64 = 1e-12;

/// Kronecker delta on real exponents: 1 when `a` and `b` agree to [`EXPONENT_TOL`].
pub fn kron(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= EXPONENT_TOL {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPONENT_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `alpha0 >= 0`, `alpha_i >= 1`: Kirchhoff coupling at the vertex.
    A,
    /// `alpha0 in (-1, 0)`, `alpha_i >= 1`, `alpha_i != 2 + alpha0`: split Dirichlet problems.
    B,
    /// `alpha0 = -1`, `alpha_i >= 1`: split Dirichlet problems, Robin inner layer.
    C,
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
    pub regime: Regime,
}

/// Classifies the exponents. Rejects `beta0 < 0` and `beta_i < 1`.
pub fn classify_regime(alpha: [f64; 4], beta: [f64; 4]) -> Result<RegimeParams> {
    if alpha.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
        return invalid("exponents must be finite");
    }
    if beta[0] < 0.0 {
        return invalid(format!("beta0 must be >= 0, got {}", beta[0]));
    }
    for i in 1..4 {
        if beta[i] < 1.0 {
            return invalid(format!("beta{i} must be >= 1, got {}", beta[i]));
        }
    }
    let edges_ok = alpha[1..].iter().all(|&a| a >= 1.0);
    let a0 = alpha[0];
    let regime = if !edges_ok {
        Regime::Unsupported
    } else if a0 >= 0.0 {
        Regime::A
    } else if same(a0, -1.0) {
        Regime::C
    } else if a0 > -1.0 {
        if alpha[1..].iter().any(|&a| same(a, 2.0 + a0)) {
            Regime::Unsupported
        } else {
            Regime::B
        }
    } else {
        Regime::Unsupported
    };
    Ok(RegimeParams {
        alpha,
        beta,
        regime,
    })
}

impl RegimeParams {
    pub fn require_supported(&self) -> Result<()> {
        if self.regime == Regime::Unsupported {
            return Err(Error::Unsupported(format!(
                "alpha = {:?}, beta = {:?}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// True when `alpha_i` equals `value` (i = 0..3).
    pub fn alpha_is(&self, i: usize, value: f64) -> bool {
        same(self.alpha[i], value)
    }

    pub fn beta_is(&self, i: usize, value: f64) -> bool {
        same(self.beta[i], value)
    }

    /// 1.0 when `alpha_i = value`, else 0.0.
    pub fn alpha_gate(&self, i: usize, value: f64) -> f64 {
        kron(self.alpha[i], value)
    }

    pub fn beta_gate(&self, i: usize, value: f64) -> f64 {
        kron(self.beta[i], value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = classify_regime([0.5, 1.0, 1.0, 1.0], [1.0; 4]).unwrap();
        assert_eq!(r.regime, Regime::A);
        let r = classify_regime([-0.5, 1.0, 2.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.regime, Regime::B);
        let r = classify_regime([0.0, 0.5, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.regime, Regime::Unsupported);
        let r = classify_regime([-1.0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.regime, Regime::C);
        let r = classify_regime([-1.5, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.regime, Regime::Unsupported);
    }

    #[test]
    fn dashed_chain_case_is_unsupported() {
        let r = classify_regime([-0.5, 1.5, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.regime, Regime::Unsupported);
    }

    #[test]
    fn invalid_beta_rejected() {
        assert!(classify_regime([0.0, 1.0, 1.0, 1.0], [-0.1, 1.0, 1.0, 1.0]).is_err());
        assert!(classify_regime([0.0, 1.0, 1.0, 1.0], [0.0, 0.5, 1.0, 1.0]).is_err());
    }
}
