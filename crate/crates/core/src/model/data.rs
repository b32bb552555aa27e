//! Source and boundary data: `f`, `phi_0`, `phi_i`.
//!
//! In configuration files data are written in a small preset algebra: a constant, or a
//! sum of terms `coef * prod_k factor_k(var_k)` where each factor is a polynomial or a
//! sine/cosine of one variable.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `f(x, t)` or `phi_0(xi, t)`: three space coordinates and time.
pub type BulkFn = Arc<dyn Fn([f64; 3], f64) -> f64 + Send + Sync>;
/// `phi_i(eta, x_i, t)`: two transverse fast coordinates, the axial coordinate, time.
pub type LateralFn = Arc<dyn Fn([f64; 2], f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    /// Coefficients in increasing degree.
    Poly(Vec<f64>),
    Sin {
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    Cos {
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub var: String,
    #[serde(flatten)]
    pub kind: FactorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

/// Data expression as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Constant(f64),
    Sum { terms: Vec<Term> },
}

#[derive(Debug, Clone)]
struct CompiledFactor {
    var: usize,
    kind: FactorKind,
}

#[derive(Debug, Clone)]
struct CompiledTerm {
    coef: f64,
    factors: Vec<CompiledFactor>,
}

/// Expression with variable names resolved to slots `0..4`.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    terms: Vec<CompiledTerm>,
}

impl CompiledExpr {
    pub fn eval(&self, v: [f64; 4]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * t.factors
                        .iter()
                        .map(|f| {
                            let x = v[f.var];
                            match &f.kind {
                                FactorKind::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
                                FactorKind::Sin { freq, phase } => (freq * x + phase).sin(),
                                FactorKind::Cos { freq, phase } => (freq * x + phase).cos(),
                            }
                        })
                        .product::<f64>()
            })
            .sum()
    }

    /// True when the expression does not depend on variable slot `var`.
    pub fn independent_of(&self, var: usize) -> bool {
        self.terms
            .iter()
            .all(|t| t.factors.iter().all(|f| f.var != var))
    }
}

impl Expr {
    /// Resolves variable names against `vars` (exactly four names).
    pub fn compile(&self, vars: [&str; 4], slot: &str) -> Result<CompiledExpr> {
        match self {
            Expr::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::Config(format!("{slot}: non-finite constant")));
                }
                Ok(CompiledExpr {
                    terms: vec![CompiledTerm {
                        coef: *c,
                        factors: vec![],
                    }],
                })
            }
            Expr::Sum { terms } => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    let mut factors = Vec::with_capacity(t.factors.len());
                    for f in &t.factors {
                        let var = vars.iter().position(|v| *v == f.var).ok_or_else(|| {
                            Error::Config(format!(
                                "{slot}: unknown variable `{}` (expected one of {vars:?})",
                                f.var
                            ))
                        })?;
                        factors.push(CompiledFactor {
                            var,
                            kind: f.kind.clone(),
                        });
                    }
                    out.push(CompiledTerm {
                        coef: t.coef,
                        factors,
                    });
                }
                Ok(CompiledExpr { terms: out })
            }
        }
    }
}

pub const BULK_VARS: [&str; 4] = ["x1", "x2", "x3", "t"];
pub const NODE_VARS: [&str; 4] = ["xi1", "xi2", "xi3", "t"];
pub const LATERAL_VARS: [&str; 4] = ["eta1", "eta2", "x", "t"];

/// Right-hand side data of the problem on the thin junction.
#[derive(Clone)]
pub struct DataFunctions {
    pub f: BulkFn,
    pub phi0: BulkFn,
    pub phi: [LateralFn; 3],
    pub horizon: f64,
}

impl fmt::Debug for DataFunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DataFunctions")
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl DataFunctions {
    pub fn zero(horizon: f64) -> Self {
        let z: LateralFn = Arc::new(|_, _, _| 0.0);
        Self {
            f: Arc::new(|_, _| 0.0),
            phi0: Arc::new(|_, _| 0.0),
            phi: [z.clone(), z.clone(), z],
            horizon,
        }
    }

    pub fn from_exprs(f: &Expr, phi0: &Expr, phi: &[Expr; 3], horizon: f64) -> Result<Self> {
        let cf = f.compile(BULK_VARS, "f")?;
        let c0 = phi0.compile(NODE_VARS, "phi0")?;
        let mk = |e: &Expr, i: usize| -> Result<LateralFn> {
            let c = e.compile(LATERAL_VARS, &format!("phi{}", i + 1))?;
            Ok(Arc::new(move |eta: [f64; 2], x: f64, t: f64| {
                c.eval([eta[0], eta[1], x, t])
            }))
        };
        Ok(Self {
            f: Arc::new(move |x: [f64; 3], t: f64| cf.eval([x[0], x[1], x[2], t])),
            phi0: Arc::new(move |x: [f64; 3], t: f64| c0.eval([x[0], x[1], x[2], t])),
            phi: [mk(&phi[0], 0)?, mk(&phi[1], 1)?, mk(&phi[2], 2)?],
            horizon,
        })
    }

    /// `f` at the point `x` of axis `i` (0-based).
    pub fn f_on_axis(&self, i: usize, x: f64, t: f64) -> f64 {
        let mut p = [0.0; 3];
        p[i] = x;
        (self.f)(p, t)
    }
}

/// Maps the transverse coordinates of edge `i` (0-based) into a 3D point: the two
/// coordinates other than `i`, in increasing axis order.
pub fn transverse_axes(i: usize) -> [usize; 2] {
    match i {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let e: Expr = serde_json::from_str(
            r#"{"terms":[{"coef":2.0,"factors":[{"var":"t","poly":[0,1]},{"var":"x1","sin":{"freq":3.0}}]},{"coef":0.5}]}"#,
        )
        .unwrap();
        let c = e.compile(BULK_VARS, "f").unwrap();
        let v = c.eval([0.2, 0.0, 0.0, 0.7]);
        assert!((v - (2.0 * 0.7 * (0.6f64).sin() + 0.5)).abs() < 1e-15);
        assert!(c.independent_of(1));
        let k: Expr = serde_json::from_str("1.5").unwrap();
        assert_eq!(k.compile(BULK_VARS, "f").unwrap().eval([9.0; 4]), 1.5);
    }

    #[test]
    fn unknown_variable_rejected() {
        let e: Expr =
            serde_json::from_str(r#"{"terms":[{"coef":1.0,"factors":[{"var":"y","poly":[1]}]}]}"#)
                .unwrap();
        assert!(e.compile(BULK_VARS, "f").is_err());
    }
}
