//! Dependency-ordered computation of every term an approximation needs.
//!
//! Regime A: `omega_0 -> N_1 -> (delta_1, d1*) -> omega_1`.
//! Regime B: `omega_0 -> V_{-a0} -> omega_{-a0} -> N_1 -> V_1 -> omega_1 -> N_{1-a0}
//! -> V_{1-a0} -> omega_{1-a0}`.
//! Regime C: `omega_0 -> Robin inner problem -> delta_1 -> omega_1`.
//!
//! Inner problems are solved at every time level after the initial one, where all
//! terms vanish.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::{ApproxOrder, AsymptoticTerms, InnerSeries};
use crate::cell::{
    inner_bc, inner_rhs_for, solve_inner, CellOperator, InnerDomainSpec, InnerInputs,
    InnerSolution,
};
use crate::error::{Error, Result};
use crate::graph::{
    compute_v_values, solve_corrector_omega1_a, solve_corrector_omega1_c, solve_higher_terms_b,
    solve_limit_omega0, vertex_slopes, CouplingConstants, GraphContext, GraphSolution,
    JumpMethod, OrderTag, VInputs,
};
use crate::model::{Problem, Regime};

/// Record of one executed stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub wall_time_s: f64,
    /// Largest absolute value the stage produced (field, constant or node value).
    pub max_abs: f64,
}

/// Everything the scheduler produced.
#[derive(Debug, Clone)]
pub struct TermBundle {
    pub terms: AsymptoticTerms,
    pub constants: CouplingConstants,
    pub stages: Vec<StageRecord>,
}

impl TermBundle {
    pub fn stage_names(&self) -> Vec<&str> {
        self.stages.iter().map(|s| s.name.as_str()).collect()
    }
}

struct Recorder {
    stages: Vec<StageRecord>,
}

impl Recorder {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>, size: impl Fn(&T) -> f64) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(name))?;
        self.stages.push(StageRecord {
            name: name.to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
            max_abs: size(&out),
        });
        Ok(out)
    }
}

fn graph_max(s: &GraphSolution) -> f64 {
    s.fields
        .iter()
        .flat_map(|f| f.values.iter().flatten())
        .chain(s.vertex_values.iter().flatten())
        .fold(0.0, |m, v| m.max(v.abs()))
}

fn series_max(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The cell operator of the problem's regime on its configured truncated domain.
pub fn cell_operator(problem: &Problem) -> Result<CellOperator> {
    let d = &problem.discretization;
    let spec = InnerDomainSpec::from_geometry(&problem.geometry, d.cell_radius, d.cell_hv)?;
    CellOperator::from_spec(&spec, inner_bc(problem)?)
}

/// Inner solves of `order` at levels `1..`; level 0 is `None`.
fn inner_levels(
    problem: &Problem,
    op: &CellOperator,
    order: OrderTag,
    times: &[f64],
    inputs: impl Fn(usize) -> InnerInputs,
) -> Result<Vec<Option<InnerSolution>>> {
    let mut out = vec![None];
    for (l, &t) in times.iter().enumerate().skip(1) {
        let rhs = inner_rhs_for(problem, &op.mesh, order, &inputs(l), t)?;
        let sol = solve_inner(op, &rhs, None).map_err(|e| e.in_stage(&format!("level {l}")))?;
        out.push(Some(sol));
    }
    Ok(out)
}

fn inner_max(sols: &[Option<InnerSolution>]) -> f64 {
    sols.iter()
        .flatten()
        .map(|s| series_max(&s.field.values).max(series_max(&s.delta)))
        .fold(0.0, f64::max)
}

/// Stores the far-field jumps of an order; edge 1 is forced to 0 for relative jumps.
fn store_deltas(
    constants: &mut CouplingConstants,
    order: OrderTag,
    sols: &[Option<InnerSolution>],
    relative: bool,
) -> Result<()> {
    for e in 1..=3 {
        let vals = sols
            .iter()
            .map(|s| match s {
                Some(s) if !(relative && e == 1) => s.delta[e - 1],
                _ => 0.0,
            })
            .collect();
        constants.set_delta(order, e, vals)?;
    }
    Ok(())
}

fn build_series(
    op: &CellOperator,
    sols: &[Option<InnerSolution>],
    slopes: impl Fn(usize) -> [f64; 3],
    offset: impl Fn(usize) -> f64,
) -> Result<InnerSeries> {
    let mut s = InnerSeries::new(&op.mesh)?;
    for (l, sol) in sols.iter().enumerate() {
        match sol {
            Some(sol) => s.push(slopes(l), offset(l), sol)?,
            None => s.push_raw([0.0; 3], 0.0, vec![0.0; op.mesh.n_voxels()], [0.0; 3], 0.0)?,
        }
    }
    Ok(s)
}

fn gamma0(sols: &[Option<InnerSolution>], l: usize) -> f64 {
    sols[l].as_ref().map_or(0.0, |s| s.gamma0_integral)
}

/// Computes the terms of the approximation of `order` in dependency order.
pub fn run_term_scheduler(problem: &Problem, order: ApproxOrder) -> Result<TermBundle> {
    problem.regime.require_supported()?;
    let mut rec = Recorder { stages: Vec::new() };
    let ctx = rec.run("graph context", || GraphContext::new(problem), |_| 0.0)?;
    let times = ctx.times.clone();
    let levels = times.len();
    let mut constants = ctx.empty_constants();
    let omega0 = rec.run("omega_0", || solve_limit_omega0(&ctx), graph_max)?;
    let regime = problem.regime.regime;
    let mut terms = AsymptoticTerms {
        regime,
        alpha0: problem.regime.alpha[0],
        omega: BTreeMap::new(),
        inner: BTreeMap::new(),
        node_values: BTreeMap::new(),
    };
    let first = order == ApproxOrder::First;
    let slopes0: Vec<[f64; 3]> = (0..levels).map(|l| vertex_slopes(&omega0, l)).collect();

    match (regime, first) {
        (_, false) => {}
        (Regime::A, true) => {
            let op = rec.run("cell operator", || cell_operator(problem), |_| 0.0)?;
            let sols = rec.run(
                "N_1",
                || {
                    inner_levels(problem, &op, OrderTag::ONE, &times, |l| InnerInputs {
                        slopes: slopes0[l],
                        omega0_vertex: omega0.vertex_values[l][0],
                        ..Default::default()
                    })
                },
                |s| inner_max(s),
            )?;
            rec.run(
                "delta_1",
                || store_deltas(&mut constants, OrderTag::ONE, &sols, true),
                |_| 0.0,
            )?;
            let g: Vec<f64> = (0..levels).map(|l| gamma0(&sols, l)).collect();
            let omega1 = rec.run(
                "omega_1",
                || solve_corrector_omega1_a(&ctx, &omega0, &mut constants, &g, JumpMethod::Shift),
                graph_max,
            )?;
            let series = build_series(&op, &sols, |l| slopes0[l], |l| omega1.vertex_values[l][0])?;
            terms.inner.insert(OrderTag::ONE, series);
            terms.omega.insert(OrderTag::ONE, omega1);
        }
        (Regime::C, true) => {
            let op = rec.run("cell operator", || cell_operator(problem), |_| 0.0)?;
            let sols = rec.run(
                "N_1",
                || {
                    inner_levels(problem, &op, OrderTag::ONE, &times, |l| InnerInputs {
                        slopes: slopes0[l],
                        ..Default::default()
                    })
                },
                |s| inner_max(s),
            )?;
            rec.run(
                "delta_1",
                || store_deltas(&mut constants, OrderTag::ONE, &sols, false),
                |_| 0.0,
            )?;
            let omega1 = rec.run(
                "omega_1",
                || solve_corrector_omega1_c(&ctx, &omega0, &constants),
                graph_max,
            )?;
            let series = build_series(&op, &sols, |l| slopes0[l], |_| 0.0)?;
            terms.inner.insert(OrderTag::ONE, series);
            terms.omega.insert(OrderTag::ONE, omega1);
        }
        (Regime::B, true) => {
            run_split_chain(problem, &ctx, &omega0, &slopes0, &mut constants, &mut terms, &mut rec)?
        }
        (Regime::Unsupported, true) => unreachable!("rejected above"),
    }
    terms.omega.insert(OrderTag::ZERO, omega0);
    Ok(TermBundle {
        terms,
        constants,
        stages: rec.stages,
    })
}

fn v_series(ctx: &GraphContext, order: OrderTag, inputs: impl Fn(usize) -> VInputs) -> Result<Vec<f64>> {
    (0..ctx.times.len())
        .map(|l| {
            compute_v_values(ctx, &inputs(l), l)?
                .get(&order)
                .copied()
                .ok_or_else(|| Error::Dependency(format!("V_{order} inputs incomplete")))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_split_chain(
    problem: &Problem,
    ctx: &GraphContext,
    omega0: &GraphSolution,
    slopes0: &[[f64; 3]],
    constants: &mut CouplingConstants,
    terms: &mut AsymptoticTerms,
    rec: &mut Recorder,
) -> Result<()> {
    let times = ctx.times.clone();
    let levels = times.len();
    let (ma0, one, one_ma0, m2a0) = (
        OrderTag::MINUS_A0,
        OrderTag::ONE,
        OrderTag::ONE_MINUS_A0,
        OrderTag::MINUS_2A0,
    );
    let mut lower: BTreeMap<OrderTag, GraphSolution> = BTreeMap::new();

    let v_ma0 = rec.run(
        "V_-a0",
        || {
            v_series(ctx, ma0, |l| VInputs {
                slopes0: Some(slopes0[l]),
                ..Default::default()
            })
        },
        |v| series_max(v),
    )?;
    constants.v.insert(ma0, v_ma0.clone());
    let w_ma0 = rec.run(
        "omega_-a0",
        || solve_higher_terms_b(ctx, omega0, &lower, constants, ma0),
        graph_max,
    )?;
    let slopes_ma0: Vec<[f64; 3]> = (0..levels).map(|l| vertex_slopes(&w_ma0, l)).collect();
    lower.insert(ma0, w_ma0);
    let v_m2a0 = rec.run(
        "V_-2a0",
        || {
            v_series(ctx, m2a0, |l| VInputs {
                slopes0: Some(slopes0[l]),
                slopes_minus_a0: Some(slopes_ma0[l]),
                ..Default::default()
            })
        },
        |v| series_max(v),
    )?;
    constants.v.insert(m2a0, v_m2a0.clone());

    let op = rec.run("cell operator", || cell_operator(problem), |_| 0.0)?;
    let n1 = rec.run(
        "N_1",
        || {
            inner_levels(problem, &op, one, &times, |l| InnerInputs {
                slopes: slopes0[l],
                v_minus_a0: v_ma0[l],
                ..Default::default()
            })
        },
        |s| inner_max(s),
    )?;
    let v1 = rec.run(
        "V_1",
        || {
            v_series(ctx, one, |l| VInputs {
                slopes0: Some(slopes0[l]),
                n1_gamma0: Some(gamma0(&n1, l)),
                ..Default::default()
            })
        },
        |v| series_max(v),
    )?;
    constants.v.insert(one, v1.clone());
    rec.run("delta_1", || store_deltas(constants, one, &n1, true), |_| 0.0)?;
    let w1 = rec.run(
        "omega_1",
        || solve_higher_terms_b(ctx, omega0, &lower, constants, one),
        graph_max,
    )?;
    let slopes1: Vec<[f64; 3]> = (0..levels).map(|l| vertex_slopes(&w1, l)).collect();
    lower.insert(one, w1);

    let n2 = rec.run(
        "N_1-a0",
        || {
            inner_levels(problem, &op, one_ma0, &times, |l| InnerInputs {
                slopes: slopes_ma0[l],
                v_minus_a0: v_ma0[l],
                v_minus_2a0: v_m2a0[l],
                ..Default::default()
            })
        },
        |s| inner_max(s),
    )?;
    let v2 = rec.run(
        "V_1-a0",
        || {
            v_series(ctx, one_ma0, |l| VInputs {
                slopes0: Some(slopes0[l]),
                slopes_minus_a0: Some(slopes_ma0[l]),
                slopes_one: Some(slopes1[l]),
                n1_gamma0: Some(gamma0(&n1, l)),
                n1ma0_gamma0: Some(gamma0(&n2, l)),
            })
        },
        |v| series_max(v),
    )?;
    constants.v.insert(one_ma0, v2.clone());
    rec.run("delta_1-a0", || store_deltas(constants, one_ma0, &n2, true), |_| 0.0)?;
    let w2 = rec.run(
        "omega_1-a0",
        || solve_higher_terms_b(ctx, omega0, &lower, constants, one_ma0),
        graph_max,
    )?;
    lower.insert(one_ma0, w2);

    terms
        .inner
        .insert(one, build_series(&op, &n1, |l| slopes0[l], |_| 0.0)?);
    terms
        .inner
        .insert(one_ma0, build_series(&op, &n2, |l| slopes_ma0[l], |_| 0.0)?);
    for o in [ma0, one, one_ma0] {
        terms.node_values.insert(o, constants.v[&o].clone());
    }
    terms.omega.extend(lower);
    Ok(())
}
