//! Blending cutoff, the rate functions `mu(eps)` and empirical order fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{kron, Regime, RegimeParams};

/// Default cutoff exponent `a`.
pub const DEFAULT_A: f64 = 0.75;

/// Rejects `a` outside the open interval `(2/3, 1)`.
pub fn check_cutoff_exponent(a: f64) -> Result<()> {
    if !(a > 2.0 / 3.0 && a < 1.0) {
        return invalid(format!("cutoff exponent a must lie in (2/3, 1), got {a}"));
    }
    Ok(())
}

/// `chi(x / eps^a)`: 0 for `x <= 2 l0 eps^a`, 1 for `x >= 3 l0 eps^a`, quintic
/// smoothstep in between. Negative `x` gives 0.
pub fn cutoff_chi(ell0: f64, a: f64, epsilon: f64, x: f64) -> f64 {
    let w = ell0 * epsilon.powf(a);
    let t = ((x - 2.0 * w) / w).clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Derivative of [`cutoff_chi`] with respect to `x`.
pub fn cutoff_chi_derivative(ell0: f64, a: f64, epsilon: f64, x: f64) -> f64 {
    let w = ell0 * epsilon.powf(a);
    let t = (x - 2.0 * w) / w;
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (1.0 - t) * (1.0 - t) / w
}

/// The rate of the approximation theorem of the regime: `mu` in regime A, `mu_0` in
/// regimes B and C. Every Kronecker gate compares exponents to 1e-12.
pub fn mu_of_epsilon(regime: &RegimeParams, a: f64, epsilon: f64) -> Result<f64> {
    regime.require_supported()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    let (al, be) = (regime.alpha, regime.beta);
    let e = |p: f64| epsilon.powf(p);
    let mut mu = e(1.0 + a / 2.0);
    match regime.regime {
        Regime::A | Regime::C => {
            for i in 1..4 {
                mu += (1.0 - kron(al[i], 1.0)) * e(al[i]) + (1.0 - kron(be[i], 1.0)) * e(be[i]);
            }
            if regime.regime == Regime::A {
                mu += (1.0 - kron(al[0], 0.0)) * e(al[0] + 1.0);
            }
            mu += (1.0 - kron(be[0], 0.0)) * e(be[0] + 1.0);
        }
        Regime::B => {
            let a0 = al[0];
            for i in 1..4 {
                mu += (1.0 - kron(al[i], 1.0) - kron(al[i], 1.0 - a0)) * e(al[i])
                    + (1.0 - kron(be[i], 1.0) - kron(be[i], 1.0 - a0)) * e(be[i]);
            }
            mu += e(2.0 + a0) + e(1.0 - a0);
            mu += (1.0 - kron(be[0], 0.0) - kron(be[0], -a0)) * e(be[0] + 1.0);
        }
        Regime::Unsupported => unreachable!("rejected above"),
    }
    Ok(mu)
}

/// Least-squares fit `log error = order log eps + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
    /// Two standard errors of the slope; `None` with fewer than three points.
    pub half_width: Option<f64>,
}

pub fn fit_eoc(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    if pairs.len() < 2 {
        return invalid("an order fit needs at least two (eps, error) pairs");
    }
    if let Some(p) = pairs.iter().find(|(e, r)| !(*e > 0.0 && *r > 0.0 && r.is_finite())) {
        return invalid(format!("order fit needs positive finite values, got {p:?}"));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("order fit needs at least two distinct eps values");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let half_width = (pairs.len() > 2).then(|| {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - order * x).powi(2))
            .sum();
        2.0 * (rss / (n - 2.0) / sxx).sqrt()
    });
    Ok(OrderFit {
        order,
        intercept,
        half_width,
    })
}

/// Order between consecutive pairs, `None` for the first entry.
pub fn running_orders(pairs: &[(f64, f64)]) -> Vec<Option<f64>> {
    (0..pairs.len())
        .map(|k| {
            (k > 0).then(|| {
                let (e0, r0) = pairs[k - 1];
                let (e1, r1) = pairs[k];
                (r1 / r0).ln() / (e1 / e0).ln()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::classify_regime;

    #[test]
    fn cutoff_plateaus_and_midpoint() {
        let (l0, a, e) = (0.25, 0.75, 0.1f64);
        let w = l0 * e.powf(a);
        assert_eq!(cutoff_chi(l0, a, e, 2.0 * w), 0.0);
        assert!((cutoff_chi(l0, a, e, 3.0 * w) - 1.0).abs() < 1e-15);
        assert_eq!(cutoff_chi(l0, a, e, 4.0 * w), 1.0);
        assert!((cutoff_chi(l0, a, e, 2.5 * w) - 0.5).abs() < 1e-15);
        assert_eq!(cutoff_chi(l0, a, e, -1.0), 0.0);
        let h = 1e-7 * w;
        for s in [2.1, 2.4, 2.8] {
            let x = s * w;
            let fd = (cutoff_chi(l0, a, e, x + h) - cutoff_chi(l0, a, e, x - h)) / (2.0 * h);
            assert!((fd - cutoff_chi_derivative(l0, a, e, x)).abs() < 1e-5 / w);
        }
    }

    #[test]
    fn mu_closed_gates_leave_the_base_rate() {
        let r = classify_regime([0.0, 1.0, 1.0, 1.0], [0.0, 1.0, 1.0, 1.0]).unwrap();
        let mu = mu_of_epsilon(&r, 0.75, 0.1).unwrap();
        assert!((mu - 0.1f64.powf(1.375)).abs() < 1e-15);
        assert!((mu - 0.0422).abs() < 5e-5);
        for bad in [0.0, -0.1, f64::NAN, f64::INFINITY] {
            assert!(mu_of_epsilon(&r, 0.75, bad).is_err());
        }
    }

    #[test]
    fn exponent_window() {
        assert!(check_cutoff_exponent(0.75).is_ok());
        assert!(check_cutoff_exponent(2.0 / 3.0).is_err());
        assert!(check_cutoff_exponent(1.0).is_err());
    }

    #[test]
    fn fit_of_two_points() {
        let f = fit_eoc(&[(0.2, 4e-2), (0.1, 1e-2)]).unwrap();
        assert!((f.order - 2.0).abs() < 1e-12);
        assert!(f.half_width.is_none());
        assert!(fit_eoc(&[(0.2, 0.0), (0.1, 1.0)]).is_err());
        assert!(fit_eoc(&[(0.2, 1.0)]).is_err());
    }
}
