//! Blending of the regular terms on the edges with the inner terms at the node into
//! the approximations `U^(0)` and `U^(1)` (`U^(1 - a0)` in the split regime).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphSolution, OrderTag};
use crate::junction::{JunctionMesh, TimeSeriesField};
use crate::model::Regime;

use super::inner::InnerSeries;
use super::rates::{check_cutoff_exponent, cutoff_chi};

/// Tolerance on the agreement of the three vertex traces of `omega_0` in regime A.
pub const VERTEX_TRACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproxOrder {
    Zeroth,
    First,
}

/// Every term an approximation may draw on. Graph terms and inner series are keyed by
/// their asymptotic order; `node_values` holds the regime-B values `V_n(t)` per level.
#[derive(Debug, Clone)]
pub struct AsymptoticTerms {
    pub regime: Regime,
    pub alpha0: f64,
    pub omega: BTreeMap<OrderTag, GraphSolution>,
    pub inner: BTreeMap<OrderTag, InnerSeries>,
    pub node_values: BTreeMap<OrderTag, Vec<f64>>,
}

/// Which terms went into an approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub regime: Regime,
    pub order: ApproxOrder,
    pub a: f64,
    pub epsilon: f64,
    pub omega_terms: Vec<String>,
    pub inner_terms: Vec<String>,
    pub node_values: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ApproximationField {
    pub series: TimeSeriesField,
    pub provenance: Provenance,
}

struct Plan {
    /// Regular terms with their powers of eps.
    regular: Vec<(OrderTag, f64)>,
    /// Inner terms with their powers of eps.
    inner: Vec<(OrderTag, f64)>,
    /// Node values with their powers of eps.
    node: Vec<(OrderTag, f64)>,
    /// Regime A: `omega_0^{(1)}(0, t)` in the node.
    vertex_trace: bool,
}

fn plan(regime: Regime, order: ApproxOrder, alpha0: f64) -> Result<Plan> {
    let first = order == ApproxOrder::First;
    let mut p = Plan {
        regular: vec![(OrderTag::ZERO, 0.0)],
        inner: Vec::new(),
        node: Vec::new(),
        vertex_trace: false,
    };
    match regime {
        Regime::A => {
            p.vertex_trace = true;
            if first {
                p.regular.push((OrderTag::ONE, 1.0));
                p.inner.push((OrderTag::ONE, 1.0));
            }
        }
        Regime::B => {
            if first {
                for o in [OrderTag::MINUS_A0, OrderTag::ONE, OrderTag::ONE_MINUS_A0] {
                    p.regular.push((o, o.value(alpha0)));
                }
                for o in [OrderTag::MINUS_A0, OrderTag::ONE, OrderTag::ONE_MINUS_A0] {
                    p.node.push((o, o.value(alpha0)));
                }
                for o in [OrderTag::ONE, OrderTag::ONE_MINUS_A0] {
                    p.inner.push((o, o.value(alpha0)));
                }
            }
        }
        Regime::C => {
            if first {
                p.regular.push((OrderTag::ONE, 1.0));
                p.inner.push((OrderTag::ONE, 1.0));
            }
        }
        Regime::Unsupported => {
            return Err(Error::Unsupported("no approximation outside A, B, C".into()))
        }
    }
    Ok(p)
}

/// Evaluates the approximation of `order` at every voxel centre of `mesh` and every
/// time level of the graph terms.
pub fn assemble_u(
    terms: &AsymptoticTerms,
    order: ApproxOrder,
    a: f64,
    mesh: &JunctionMesh,
) -> Result<ApproximationField> {
    check_cutoff_exponent(a)?;
    let p = plan(terms.regime, order, terms.alpha0)?;
    let eps = mesh.epsilon;
    let omega0 = terms
        .omega
        .get(&OrderTag::ZERO)
        .ok_or_else(|| Error::Dependency("omega_0 is required".into()))?;
    let times = omega0.times.clone();
    let levels = times.len();
    for (o, _) in &p.regular {
        let s = terms
            .omega
            .get(o)
            .ok_or_else(|| Error::Dependency(format!("omega_{o} is required")))?;
        if s.times.len() != levels {
            return Err(Error::InvalidInput(format!("omega_{o} has a different time grid")));
        }
    }
    for (o, _) in &p.inner {
        let s = terms
            .inner
            .get(o)
            .ok_or_else(|| Error::Dependency(format!("N_{o} is required")))?;
        if s.n_levels() != levels {
            return Err(Error::InvalidInput(format!("N_{o} has {} levels, expected {levels}", s.n_levels())));
        }
    }
    for (o, _) in &p.node {
        let v = terms
            .node_values
            .get(o)
            .ok_or_else(|| Error::Dependency(format!("V_{o} is required")))?;
        if v.len() != levels {
            return Err(Error::InvalidInput(format!("V_{o} has a different time grid")));
        }
    }
    if p.vertex_trace {
        for (l, w) in omega0.vertex_values.iter().enumerate() {
            let spread = (w[1] - w[0]).abs().max((w[2] - w[0]).abs());
            if spread > VERTEX_TRACE_TOL * (1.0 + w[0].abs()) {
                return Err(Error::InvalidInput(format!(
                    "vertex traces of omega_0 differ by {spread:e} at level {l}"
                )));
            }
        }
    }

    let ell0 = mesh.ell0;
    let chi: Vec<[f64; 3]> = mesh
        .centers
        .iter()
        .map(|c| c.map(|x| cutoff_chi(ell0, a, eps, x)))
        .collect();
    let xi: Vec<[f64; 3]> = mesh.centers.iter().map(|c| c.map(|x| x / eps)).collect();
    let mut series = TimeSeriesField::zeros(times.clone(), mesh.n_voxels());
    let clamp = |i: usize, x: f64| x.clamp(0.0, mesh.lengths[i]);
    for l in 1..levels {
        let node_const: f64 = p
            .node
            .iter()
            .map(|(o, pw)| eps.powf(*pw) * terms.node_values[o][l])
            .sum::<f64>()
            + if p.vertex_trace { omega0.vertex_values[l][0] } else { 0.0 };
        let out = &mut series.levels[l];
        for v in 0..mesh.n_voxels() {
            let c = mesh.centers[v];
            let ch = chi[v];
            let sum_chi: f64 = ch.iter().sum();
            let mut u = 0.0;
            for i in 0..3 {
                if ch[i] == 0.0 {
                    continue;
                }
                let x = clamp(i, c[i]);
                let reg: f64 = p
                    .regular
                    .iter()
                    .map(|(o, pw)| eps.powf(*pw) * terms.omega[o].value(i, l, x))
                    .sum();
                u += ch[i] * reg;
            }
            if sum_chi < 1.0 {
                let mut inner = node_const;
                for (o, pw) in &p.inner {
                    inner += eps.powf(*pw) * terms.inner[o].value(l, xi[v])?;
                }
                u += (1.0 - sum_chi) * inner;
            }
            out[v] = u;
        }
    }
    let name = |o: &OrderTag| o.to_string();
    Ok(ApproximationField {
        series,
        provenance: Provenance {
            regime: terms.regime,
            order,
            a,
            epsilon: eps,
            omega_terms: p.regular.iter().map(|(o, _)| name(o)).collect(),
            inner_terms: p.inner.iter().map(|(o, _)| name(o)).collect(),
            node_values: p.node.iter().map(|(o, _)| name(o)).collect(),
        },
    })
}
