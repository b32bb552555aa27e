//! Higher-order graph terms of the split regime (`-1 < alpha0 < 0`): the quadratic
//! Taylor coefficients `K_n`, the node values `V_n`, and the Dirichlet problems for
//! `omega_{-a0}`, `omega_1`, `omega_{1-a0}`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::regime::same;
use crate::model::Regime;

use super::constants::CouplingConstants;
use super::corrector::linear_coefficient;
use super::limit::{march, GraphContext, MarchVertex};
use super::solution::{GraphSolution, OrderTag};

/// `K_n` from the lower-order values `z`: `K_0 = K_{-a0} = K_{1+a0} = 0`,
/// `K_1 = z_{1+a0} z_{-a0}`, `K_{-2a0} = z_{-a0}^2 / 2`,
/// `K_{1-a0} = z_1 z_{-a0} + z_{1+a0} z_{-2a0}`. Missing entries of `z` count as 0.
pub fn eval_k(n: OrderTag, z: &dyn Fn(OrderTag) -> f64) -> Result<f64> {
    if !n.in_index_set() {
        return Err(Error::InvalidInput(format!("order {n} is outside the ansatz index set")));
    }
    Ok(match n {
        OrderTag::ONE => z(OrderTag::ONE_PLUS_A0) * z(OrderTag::MINUS_A0),
        OrderTag::MINUS_2A0 => 0.5 * z(OrderTag::MINUS_A0).powi(2),
        OrderTag::ONE_MINUS_A0 => {
            z(OrderTag::ONE) * z(OrderTag::MINUS_A0)
                + z(OrderTag::ONE_PLUS_A0) * z(OrderTag::MINUS_2A0)
        }
        _ => 0.0,
    })
}

/// [`eval_k`] with the values given as a map.
pub fn eval_k_map(n: OrderTag, z: &BTreeMap<OrderTag, f64>) -> Result<f64> {
    eval_k(n, &|j| z.get(&j).copied().unwrap_or(0.0))
}

/// Ansatz order whose value equals `v`. When several orders coincide numerically the
/// first one in the solving order is chosen, so a term is never counted twice.
fn order_with_value(v: f64, alpha0: f64) -> Option<OrderTag> {
    [
        OrderTag::ZERO,
        OrderTag::MINUS_A0,
        OrderTag::ONE,
        OrderTag::ONE_MINUS_A0,
        OrderTag::MINUS_2A0,
        OrderTag::ONE_PLUS_A0,
    ]
    .into_iter()
    .find(|o| same(o.value(alpha0), v))
}

/// Coefficients entering the node-value formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VFormula {
    /// `kappa_0'(0)`.
    pub kappa0_d1: f64,
    /// `kappa_0''(0)`.
    pub kappa0_d2: f64,
    pub gamma0: f64,
    /// Weights of the edge slopes: 1 as printed, or the port areas when the
    /// area-weighting switch is on.
    pub weights: [f64; 3],
}

impl VFormula {
    pub fn new(ctx: &GraphContext) -> Result<Self> {
        let k0 = ctx.problem.nonlinearities.kappa0.eval(0.0);
        if !(k0.d1 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "the node values need kappa_0'(0) > 0, got {}",
                k0.d1
            )));
        }
        let g = ctx.geometry();
        let weights = if ctx.problem.asymptotics.v_formula_area_weights {
            [g.area0(0), g.area0(1), g.area0(2)]
        } else {
            [1.0; 3]
        };
        Ok(Self {
            kappa0_d1: k0.d1,
            kappa0_d2: k0.d2,
            gamma0: g.gamma0_area(),
            weights,
        })
    }

    fn slope_sum(&self, slopes: [f64; 3]) -> f64 {
        (0..3).map(|i| self.weights[i] * slopes[i]).sum()
    }

    fn scale(&self) -> f64 {
        1.0 / (self.kappa0_d1 * self.gamma0)
    }

    /// `V_{-a0} = (sum_i omega_0'(0) + [beta0 = 0] int phi0) / (kappa_0'(0) |Gamma_0|)`.
    pub fn v_minus_a0(&self, slopes0: [f64; 3], phi0_gated: f64) -> f64 {
        self.scale() * (self.slope_sum(slopes0) + phi0_gated)
    }

    /// `V_{-2a0} = (sum_i omega_{-a0}'(0) - kappa_0''(0) |Gamma_0| V_{-a0}^2 / 2 + [beta0 = -a0] int phi0) / (kappa_0'(0) |Gamma_0|)`.
    pub fn v_minus_2a0(&self, slopes: [f64; 3], v_minus_a0: f64, phi0_gated: f64) -> f64 {
        self.scale()
            * (self.slope_sum(slopes) - 0.5 * self.kappa0_d2 * self.gamma0 * v_minus_a0.powi(2)
                + phi0_gated)
    }

    /// `V_1 = (sum_i omega_{1+a0}'(0) - kappa_0''(0) int N_1 / 2 + [beta0 = 1+a0] int phi0) / (kappa_0'(0) |Gamma_0|)`,
    /// with `omega_{1+a0} = 0`.
    pub fn v_one(&self, n1_gamma0: f64, phi0_gated: f64) -> f64 {
        self.scale() * (-0.5 * self.kappa0_d2 * n1_gamma0 + phi0_gated)
    }

    /// `V_{1-a0}`; `edge_and_node` collects the `l0 sum_i (...)`, `-|Xi0| (k(0) - f(0,t))`
    /// and `[beta0 = 1] int phi0` terms.
    pub fn v_one_minus_a0(
        &self,
        slopes1: [f64; 3],
        n1ma0_gamma0: f64,
        v_minus_a0: f64,
        v_one: f64,
        n1_gamma0: f64,
        edge_and_node: f64,
    ) -> f64 {
        self.scale()
            * (self.slope_sum(slopes1) - self.kappa0_d1 * n1ma0_gamma0
                - self.kappa0_d2 * v_minus_a0 * (v_one * self.gamma0 + n1_gamma0)
                + edge_and_node)
    }
}

/// `l0 sum_i (A_i(0)(k(0) - f(0,t)) + [alpha_i = 1] P_i(0) kappa_i(0,0,t) - [beta_i = 1] int phi_i dl)
///  - |Xi0| (k(0) - f(0,t)) + [beta0 = 1] int phi0` at time `t`.
pub fn v_edge_and_node_terms(ctx: &GraphContext, t: f64) -> f64 {
    let g = ctx.geometry();
    let r = ctx.regime();
    let nl = &ctx.problem.nonlinearities;
    let local = nl.k.eval(0.0).value - (ctx.problem.data.f)([0.0; 3], t);
    let mut sum = 0.0;
    for i in 0..3 {
        sum += g.area0(i) * local;
        if r.alpha_is(i + 1, 1.0) {
            sum += g.perimeter0(i) * nl.kappa[i].eval(0.0, 0.0, t).value;
        }
        if r.beta_is(i + 1, 1.0) {
            sum -= ctx.vertex_contour_integral(i, t);
        }
    }
    let mut v = g.ell0 * sum - g.node_volume() * local;
    if r.beta_is(0, 1.0) {
        v += ctx.phi0_integral(t);
    }
    v
}

/// `int phi0` at `t` when `beta0` equals `order + ...`, i.e. gated by `[beta0 = value]`.
pub fn phi0_gated(ctx: &GraphContext, value: f64, t: f64) -> f64 {
    if ctx.regime().beta_is(0, value) {
        ctx.phi0_integral(t)
    } else {
        0.0
    }
}

/// Slopes `omega'(0)` of the three edges at a level.
pub fn vertex_slopes(sol: &GraphSolution, level: usize) -> [f64; 3] {
    [0, 1, 2].map(|i| sol.vertex_slope(i, level))
}

/// Inputs of the node-value formulas at one time level. Entries that are not yet
/// available are `None`; the corresponding values are skipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct VInputs {
    pub slopes0: Option<[f64; 3]>,
    pub slopes_minus_a0: Option<[f64; 3]>,
    pub slopes_one: Option<[f64; 3]>,
    pub n1_gamma0: Option<f64>,
    pub n1ma0_gamma0: Option<f64>,
}

/// Evaluates every node value whose inputs are present at level `level`.
pub fn compute_v_values(
    ctx: &GraphContext,
    inputs: &VInputs,
    level: usize,
) -> Result<BTreeMap<OrderTag, f64>> {
    if ctx.regime().regime != Regime::B {
        return Err(Error::InvalidInput("node values are defined in regime B only".into()));
    }
    let f = VFormula::new(ctx)?;
    let t = ctx.times[level];
    let a0 = ctx.regime().alpha[0];
    let mut out = BTreeMap::new();
    out.insert(OrderTag::ONE_PLUS_A0, 0.0);
    let Some(s0) = inputs.slopes0 else {
        return Ok(out);
    };
    let vm = f.v_minus_a0(s0, phi0_gated(ctx, 0.0, t));
    out.insert(OrderTag::MINUS_A0, vm);
    if let Some(s) = inputs.slopes_minus_a0 {
        out.insert(OrderTag::MINUS_2A0, f.v_minus_2a0(s, vm, phi0_gated(ctx, -a0, t)));
    }
    if let Some(n1) = inputs.n1_gamma0 {
        let v1 = f.v_one(n1, phi0_gated(ctx, 1.0 + a0, t));
        out.insert(OrderTag::ONE, v1);
        if let (Some(s1), Some(n2)) = (inputs.slopes_one, inputs.n1ma0_gamma0) {
            let v = f.v_one_minus_a0(s1, n2, vm, v1, n1, v_edge_and_node_terms(ctx, t));
            out.insert(OrderTag::ONE_MINUS_A0, v);
        }
    }
    Ok(out)
}

/// The terms that must be solved before `order`.
fn prerequisites(order: OrderTag) -> Result<&'static [OrderTag]> {
    match order {
        OrderTag::MINUS_A0 => Ok(&[]),
        OrderTag::ONE => Ok(&[OrderTag::MINUS_A0]),
        OrderTag::ONE_MINUS_A0 => Ok(&[OrderTag::MINUS_A0, OrderTag::ONE]),
        o => Err(Error::InvalidInput(format!(
            "order {o} is not solved on the graph in regime B"
        ))),
    }
}

/// Per-length source `F_n hat` at cell `j` of edge `i`, level `l`.
fn fhat_n(
    ctx: &GraphContext,
    n: OrderTag,
    omega0: &GraphSolution,
    lower: &BTreeMap<OrderTag, &GraphSolution>,
    i: usize,
    j: usize,
    l: usize,
) -> Result<f64> {
    let e = &ctx.disc.edges[i];
    let nl = &ctx.problem.nonlinearities;
    let r = ctx.regime();
    let a0 = r.alpha[0];
    let t = ctx.times[l];
    let x = e.centers[j];
    let u0 = omega0.fields[i].values[l][j];
    let z = |o: OrderTag| lower.get(&o).map(|s| s.fields[i].values[l][j]).unwrap_or(0.0);
    let mut v = -e.area[j] * nl.k.eval(u0).d2 * eval_k(n, &z)?;
    if let Some(m) = order_with_value(r.alpha[i + 1] - 1.0, a0) {
        let kap = nl.kappa[i].eval(u0, x, t);
        if m == n {
            v -= e.perimeter[j] * kap.value;
        } else if m == OrderTag::ZERO {
            // the d_s kappa omega_n part sits in the operator
            v -= e.perimeter[j] * kap.d2 * eval_k(n, &z)?;
        } else {
            let rest = n.minus(m);
            if rest.in_index_set() {
                v -= e.perimeter[j] * (kap.d1 * z(rest) + kap.d2 * eval_k(rest, &z)?);
            }
        }
    }
    if same(r.beta[i + 1], n.value(a0) + 1.0) {
        v += ctx.contour_integral(i, j, t);
    }
    Ok(v)
}

/// Solves `omega_order` (order in `{-a0, 1, 1-a0}`) on the three edges with Dirichlet
/// value `V_order + delta_order^{(i)}` at the vertex. `lower` must hold every term the
/// order depends on.
pub fn solve_higher_terms_b(
    ctx: &GraphContext,
    omega0: &GraphSolution,
    lower: &BTreeMap<OrderTag, GraphSolution>,
    constants: &CouplingConstants,
    order: OrderTag,
) -> Result<GraphSolution> {
    if ctx.regime().regime != Regime::B {
        return Err(Error::InvalidInput("higher terms are a regime-B computation".into()));
    }
    for p in prerequisites(order)? {
        if !lower.contains_key(p) {
            return Err(Error::Dependency(format!("omega_{order} needs omega_{p} first")));
        }
    }
    let Some(v) = constants.v.get(&order) else {
        return Err(Error::Dependency(format!("V_{order} has not been computed")));
    };
    if order == OrderTag::MINUS_A0 && constants.has_delta(order) {
        let any = (0..ctx.times.len()).any(|l| constants.delta_at(order, l) != [0.0; 3]);
        if any {
            return Err(Error::InvalidInput(format!("delta_{order} must vanish identically")));
        }
    }
    if order != OrderTag::MINUS_A0 && !constants.has_delta(order) {
        return Err(Error::Dependency(format!("delta_{order} has not been computed")));
    }
    let refs: BTreeMap<OrderTag, &GraphSolution> = lower.iter().map(|(k, s)| (*k, s)).collect();
    let levels = ctx.times.len();
    let mut sources = Vec::with_capacity(levels);
    for l in 0..levels {
        let mut f: [Vec<f64>; 3] = Default::default();
        for i in 0..3 {
            f[i] = (0..ctx.disc.edges[i].n())
                .map(|j| fhat_n(ctx, order, omega0, &refs, i, j, l))
                .collect::<Result<_>>()?;
        }
        sources.push(f);
    }
    let reaction = |l: usize, i: usize, j: usize, s: f64| {
        let c = linear_coefficient(ctx, omega0, l, i, j);
        (c * s, c)
    };
    let source = |l: usize| sources[l].clone();
    let values = |l: usize| {
        let d = constants.delta_at(order, l);
        [v[l] + d[0], v[l] + d[1], v[l] + d[2]]
    };
    march(ctx, order, &source, &reaction, MarchVertex::Dirichlet(&values))
        .map_err(|e| e.in_stage(&format!("omega_{order}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_formulas() {
        let mut z = BTreeMap::new();
        z.insert(OrderTag::MINUS_A0, 2.0);
        assert_eq!(eval_k_map(OrderTag::MINUS_2A0, &z).unwrap(), 2.0);
        z.insert(OrderTag::MINUS_A0, 5.0);
        z.insert(OrderTag::ONE_PLUS_A0, 3.0);
        assert_eq!(eval_k_map(OrderTag::ONE, &z).unwrap(), 15.0);
        assert_eq!(eval_k_map(OrderTag::ZERO, &z).unwrap(), 0.0);
        z.insert(OrderTag::ONE, 7.0);
        z.insert(OrderTag::MINUS_2A0, 11.0);
        assert_eq!(eval_k_map(OrderTag::ONE_MINUS_A0, &z).unwrap(), 7.0 * 5.0 + 3.0 * 11.0);
        assert!(eval_k_map(OrderTag { c: 2, d: 0 }, &z).is_err());
    }

    #[test]
    fn coinciding_orders_resolve_to_solved_terms() {
        // alpha0 = -1/2: -2 alpha0 = 1, pick 1
        assert_eq!(order_with_value(1.0, -0.5), Some(OrderTag::ONE));
        assert_eq!(order_with_value(0.5, -0.5), Some(OrderTag::MINUS_A0));
        assert_eq!(order_with_value(0.3, -0.5), None);
    }

    #[test]
    fn v_formula_substitutions() {
        let f = VFormula {
            kappa0_d1: 2.0,
            kappa0_d2: 0.5,
            gamma0: 1.25,
            weights: [1.0; 3],
        };
        let g = 0.3;
        assert!((f.v_minus_a0([g; 3], 0.0) - 3.0 * g / (2.0 * 1.25)).abs() < 1e-15);
        let v = 0.7;
        assert!((f.v_minus_2a0([0.0; 3], v, 0.0) + 0.5 * v * v / (2.0 * 2.0)).abs() < 1e-15);
        assert_eq!(f.v_minus_a0([0.0; 3], 0.0), 0.0);
        assert_eq!(f.v_one(0.0, 0.0), 0.0);
        assert_eq!(f.v_one_minus_a0([0.0; 3], 0.0, 0.0, 0.0, 0.0, 0.0), 0.0);
    }
}
