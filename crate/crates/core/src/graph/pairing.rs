//! Weak form of the spatial graph operator and its monotonicity pairing.

use crate::model::{NonlinearitySet, Regime};

use super::fv::StarDiscretization;

/// Cell values on the three edges plus the vertex value (regime A; zero otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub u: [Vec<f64>; 3],
    pub w: f64,
}

/// Differences across the faces of edge `i` with their weights: interior faces at
/// distance `h`, the vertex and end faces at distance `h/2` (end value 0).
fn face_differences(disc: &StarDiscretization, i: usize, u: &[f64], w: f64) -> Vec<(f64, f64)> {
    let e = &disc.edges[i];
    let n = e.n();
    let h = e.h;
    let mut out = Vec::with_capacity(n + 1);
    out.push(((u[0] - w) / (0.5 * h), e.face_area[0] * 0.5 * h));
    for j in 1..n {
        out.push(((u[j] - u[j - 1]) / h, e.face_area[j] * h));
    }
    out.push(((0.0 - u[n - 1]) / (0.5 * h), e.face_area[n] * 0.5 * h));
    out
}

/// `<A u, v>` for the graph operator at time `t`: area-weighted gradient pairing,
/// reaction `A k(u) + [alpha_i = 1] P kappa_i(u)` and, in regime A with `alpha0 = 0`,
/// the vertex absorption `|Gamma_0| kappa_0(w)`.
#[allow(clippy::too_many_arguments)]
pub fn apply_weak(
    disc: &StarDiscretization,
    nl: &NonlinearitySet,
    regime: &crate::model::RegimeParams,
    gamma0: f64,
    u: &GraphState,
    v: &GraphState,
    t: f64,
) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        let e = &disc.edges[i];
        let du = face_differences(disc, i, &u.u[i], u.w);
        let dv = face_differences(disc, i, &v.u[i], v.w);
        total += du.iter().zip(&dv).map(|((a, wt), (b, _))| wt * a * b).sum::<f64>();
        let blow_up = regime.alpha_is(i + 1, 1.0);
        for j in 0..e.n() {
            let s = u.u[i][j];
            let mut r = e.area[j] * nl.k.eval(s).value;
            if blow_up {
                r += e.perimeter[j] * nl.kappa[i].eval(s, e.centers[j], t).value;
            }
            total += e.h * r * v.u[i][j];
        }
    }
    if regime.regime == Regime::A && regime.alpha_is(0, 0.0) {
        total += gamma0 * nl.kappa0.eval(u.w).value * v.w;
    }
    total
}

/// Area-weighted `H^1` seminorm squared of a state.
pub fn seminorm_sq(disc: &StarDiscretization, u: &GraphState) -> f64 {
    (0..3)
        .map(|i| {
            face_differences(disc, i, &u.u[i], u.w)
                .iter()
                .map(|(d, wt)| wt * d * d)
                .sum::<f64>()
        })
        .sum()
}

/// Returns `(<A u1 - A u2, u1 - u2>, |u1 - u2|^2)` with the seminorm from
/// [`seminorm_sq`]. Strong monotonicity means the first is at least the second.
pub fn graph_operator_pairing(
    disc: &StarDiscretization,
    nl: &NonlinearitySet,
    regime: &crate::model::RegimeParams,
    gamma0: f64,
    u1: &GraphState,
    u2: &GraphState,
    t: f64,
) -> (f64, f64) {
    let diff = GraphState {
        u: [0, 1, 2].map(|i| u1.u[i].iter().zip(&u2.u[i]).map(|(a, b)| a - b).collect()),
        w: u1.w - u2.w,
    };
    let p = apply_weak(disc, nl, regime, gamma0, u1, &diff, t)
        - apply_weak(disc, nl, regime, gamma0, u2, &diff, t);
    (p, seminorm_sq(disc, &diff))
}
