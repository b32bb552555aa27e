//! Absorption nonlinearities `k`, `kappa_0`, `kappa_i` with user-supplied derivatives.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::regime::Regime;

/// Value with first and second derivative in `s`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Named preset families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// `slope * s + offset`.
    Linear {
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `lambda * s + cos(s)`.
    Cosine { lambda: f64 },
    /// `lambda * s / (1 + nu |s|) + linear * s` (odd in `s`).
    MichaelisMenten {
        lambda: f64,
        nu: f64,
        #[serde(default)]
        linear: f64,
    },
}

impl Preset {
    pub fn eval(&self, s: f64) -> Derivs {
        match *self {
            Preset::Linear { slope, offset } => Derivs {
                value: slope * s + offset,
                d1: slope,
                d2: 0.0,
            },
            Preset::Cosine { lambda } => Derivs {
                value: lambda * s + s.cos(),
                d1: lambda - s.sin(),
                d2: -s.cos(),
            },
            Preset::MichaelisMenten { lambda, nu, linear } => {
                let q = 1.0 + nu * s.abs();
                let sign = if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                Derivs {
                    value: lambda * s / q + linear * s,
                    d1: lambda / (q * q) + linear,
                    d2: -2.0 * lambda * nu * sign / (q * q * q),
                }
            }
        }
    }
}

pub type ScalarClosure = Arc<dyn Fn(f64) -> Derivs + Send + Sync>;
pub type EdgeClosure = Arc<dyn Fn(f64, f64, f64) -> Derivs + Send + Sync>;

/// Function of `s` alone (`k`, `kappa_0`).
#[derive(Clone)]
pub enum ScalarNonlinearity {
    Preset(Preset),
    Custom(ScalarClosure),
}

impl ScalarNonlinearity {
    pub fn custom(f: impl Fn(f64) -> Derivs + Send + Sync + 'static) -> Self {
        ScalarNonlinearity::Custom(Arc::new(f))
    }

    pub fn eval(&self, s: f64) -> Derivs {
        match self {
            ScalarNonlinearity::Preset(p) => p.eval(s),
            ScalarNonlinearity::Custom(f) => f(s),
        }
    }

    pub fn zero() -> Self {
        ScalarNonlinearity::Preset(Preset::Linear {
            slope: 0.0,
            offset: 0.0,
        })
    }
}

impl fmt::Debug for ScalarNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarNonlinearity::Preset(p) => write!(f, "{p:?}"),
            ScalarNonlinearity::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Function of `(s, x_i, t)` (`kappa_i`).
#[derive(Clone)]
pub enum EdgeNonlinearity {
    Preset(Preset),
    Custom(EdgeClosure),
}

impl EdgeNonlinearity {
    pub fn custom(f: impl Fn(f64, f64, f64) -> Derivs + Send + Sync + 'static) -> Self {
        EdgeNonlinearity::Custom(Arc::new(f))
    }

    pub fn eval(&self, s: f64, x: f64, t: f64) -> Derivs {
        match self {
            EdgeNonlinearity::Preset(p) => p.eval(s),
            EdgeNonlinearity::Custom(f) => f(s, x, t),
        }
    }

    pub fn zero() -> Self {
        EdgeNonlinearity::Preset(Preset::Linear {
            slope: 0.0,
            offset: 0.0,
        })
    }
}

impl fmt::Debug for EdgeNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeNonlinearity::Preset(p) => write!(f, "{p:?}"),
            EdgeNonlinearity::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearitySet {
    pub k: ScalarNonlinearity,
    pub kappa0: ScalarNonlinearity,
    pub kappa: [EdgeNonlinearity; 3],
    pub k_plus: f64,
    pub k_minus: Option<f64>,
}

impl NonlinearitySet {
    /// All nonlinearities identically zero.
    pub fn zero() -> Self {
        Self {
            k: ScalarNonlinearity::zero(),
            kappa0: ScalarNonlinearity::zero(),
            kappa: [
                EdgeNonlinearity::zero(),
                EdgeNonlinearity::zero(),
                EdgeNonlinearity::zero(),
            ],
            k_plus: 1.0,
            k_minus: None,
        }
    }

    /// Linear `k(s) = c s`, `kappa_0(s) = c0 s`, `kappa_i(s) = ci s`.
    pub fn linear(c: f64, c0: f64, ci: f64) -> Self {
        let lin = |slope| Preset::Linear { slope, offset: 0.0 };
        Self {
            k: ScalarNonlinearity::Preset(lin(c)),
            kappa0: ScalarNonlinearity::Preset(lin(c0)),
            kappa: [
                EdgeNonlinearity::Preset(lin(ci)),
                EdgeNonlinearity::Preset(lin(ci)),
                EdgeNonlinearity::Preset(lin(ci)),
            ],
            k_plus: c.max(c0).max(ci).max(1e-300),
            k_minus: if c0 > 0.0 { Some(c0) } else { None },
        }
    }
}

/// Probe point for the derivative audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub s: f64,
    pub x: f64,
    pub t: f64,
}

/// Probe grid `s in [-2, 2]` (21 values) times `x in {0, 1/2, 1}` times `t in {0, T}`.
pub fn default_probes(horizon: f64) -> Vec<Probe> {
    let mut v = Vec::new();
    for k in 0..=20 {
        let s = -2.0 + 0.2 * k as f64;
        for x in [0.0, 0.5, 1.0] {
            for t in [0.0, horizon] {
                v.push(Probe { s, x, t });
            }
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub function: String,
    pub probe: Probe,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NonlinearityReport {
    pub probes_checked: usize,
    pub bound_violations: Vec<Violation>,
    pub derivative_mismatches: Vec<Violation>,
}

impl NonlinearityReport {
    pub fn passed(&self) -> bool {
        self.bound_violations.is_empty() && self.derivative_mismatches.is_empty()
    }
}

const FD_REL_TOL: f64 = 1e-5;

fn fd_check(
    name: &str,
    probe: Probe,
    f: &dyn Fn(f64) -> Derivs,
    out: &mut Vec<Violation>,
) {
    let s = probe.s;
    let h = 1e-5 * s.abs().max(1.0);
    let (p, m, c) = (f(s + h), f(s - h), f(s));
    let fd1 = (p.value - m.value) / (2.0 * h);
    let fd2 = (p.d1 - m.d1) / (2.0 * h);
    if (fd1 - c.d1).abs() > FD_REL_TOL * c.d1.abs().max(1.0) {
        out.push(Violation {
            function: name.to_string(),
            probe,
            message: format!("first derivative {} vs finite difference {fd1}", c.d1),
        });
    }
    if (fd2 - c.d2).abs() > FD_REL_TOL * c.d2.abs().max(1.0) {
        out.push(Violation {
            function: name.to_string(),
            probe,
            message: format!("second derivative {} vs finite difference {fd2}", c.d2),
        });
    }
}

fn bound_check(
    name: &str,
    probe: Probe,
    d1: f64,
    lower: f64,
    upper: f64,
    out: &mut Vec<Violation>,
) {
    let slack = 1e-12 * upper.abs().max(1.0);
    if !(d1 >= lower - slack && d1 <= upper + slack) {
        out.push(Violation {
            function: name.to_string(),
            probe,
            message: format!("derivative {d1} outside [{lower}, {upper}]"),
        });
    }
}

/// Audits monotonicity bounds and supplied derivatives on a probe set. Report only.
pub fn validate_nonlinearities(
    nl: &NonlinearitySet,
    probes: &[Probe],
    regime: Regime,
) -> NonlinearityReport {
    let mut rep = NonlinearityReport {
        probes_checked: probes.len(),
        ..Default::default()
    };
    let zero_absorption = matches!(regime, Regime::B | Regime::C);
    let lower0 = if zero_absorption {
        match nl.k_minus {
            Some(km) => km,
            None => {
                rep.bound_violations.push(Violation {
                    function: "kappa0".into(),
                    probe: Probe {
                        s: 0.0,
                        x: 0.0,
                        t: 0.0,
                    },
                    message: "regimes B and C require a positive lower bound k_minus".into(),
                });
                0.0
            }
        }
    } else {
        0.0
    };
    if zero_absorption {
        let v0 = nl.kappa0.eval(0.0).value;
        if v0.abs() > 1e-14 {
            rep.bound_violations.push(Violation {
                function: "kappa0".into(),
                probe: Probe {
                    s: 0.0,
                    x: 0.0,
                    t: 0.0,
                },
                message: format!("zero-absorption condition needs kappa0(0) = 0, got {v0}"),
            });
        }
    }
    for &p in probes {
        let k = |s| nl.k.eval(s);
        bound_check("k", p, k(p.s).d1, 0.0, nl.k_plus, &mut rep.bound_violations);
        fd_check("k", p, &k, &mut rep.derivative_mismatches);

        let k0 = |s| nl.kappa0.eval(s);
        bound_check("kappa0", p, k0(p.s).d1, lower0, nl.k_plus, &mut rep.bound_violations);
        fd_check("kappa0", p, &k0, &mut rep.derivative_mismatches);

        for (i, kap) in nl.kappa.iter().enumerate() {
            let name = format!("kappa{}", i + 1);
            let ki = |s| kap.eval(s, p.x, p.t);
            bound_check(&name, p, ki(p.s).d1, 0.0, nl.k_plus, &mut rep.bound_violations);
            fd_check(&name, p, &ki, &mut rep.derivative_mismatches);
        }
    }
    rep
}
