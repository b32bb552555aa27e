//! Convergence studies: reference runs over a decreasing list of `eps`, error
//! norms of the assembled approximations, fitted orders and report files.

use std::path::Path;

use serde::Serialize;

use crate::assembly::{
    assemble_u, error_norms, fit_eoc, running_orders, ApproxOrder, ApproximationField, ErrorEntry,
    OrderFit,
};
use crate::error::{invalid, Error, Result};
use crate::junction::{
    build_junction_mesh, field_norm, node_smallness, solve_junction, write_junction_field_binary,
    JunctionMesh, NormKind, NormRegion, RunStats, TimeSeriesField,
};
use crate::model::{Problem, Regime};

use super::plot::{loglog_svg, Series};
use super::scheduler::{run_term_scheduler, StageRecord, TermBundle};

/// Field snapshots are cropped to the cube `[.., FIELD_EXTENT]^3` around the node.
pub const FIELD_EXTENT: f64 = 0.25;

/// Manufactured reference `u = U + c eps^p (t / T) / sqrt(|Omega_eps|)`; the error
/// norms then scale exactly like `eps^p`, which checks the fitting pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Synthetic {
    pub c: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    /// Strictly decreasing, at least three values.
    pub epsilons: Vec<f64>,
    pub order: ApproxOrder,
    pub resolution: usize,
    pub synthetic: Option<Synthetic>,
    /// Run the `eps` values on separate threads.
    pub parallel: bool,
}

impl StudyPlan {
    pub fn new(epsilons: Vec<f64>, order: ApproxOrder, resolution: usize) -> Self {
        Self { epsilons, order, resolution, synthetic: None, parallel: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.len() < 3 {
            return invalid("a convergence study needs at least three values of eps");
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return invalid("eps values must be positive and finite");
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("eps values must be strictly decreasing");
        }
        if self.resolution == 0 {
            return invalid("resolution must be positive");
        }
        if let Some(s) = self.synthetic {
            if !(s.c.is_finite() && s.p.is_finite()) {
                return invalid("synthetic perturbation must be finite");
            }
        }
        Ok(())
    }
}

/// Results for one `eps`. `error` is set when that run failed; the other rows are kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub epsilon: f64,
    pub error: Option<String>,
    /// Errors of the requested approximation.
    pub approx: Option<ErrorEntry>,
    /// Errors of the leading-order approximation, for comparison.
    pub zeroth: Option<ErrorEntry>,
    pub volume: f64,
    pub voxels: usize,
    /// `maxL2 / sqrt(|Omega_eps|)` and `L2H1 / sqrt(|Omega_eps|)` of the requested approximation.
    pub scaled_max_l2: Option<f64>,
    pub scaled_l2h1: Option<f64>,
    /// `(max_t ||u||_{L2} + ||u||_{L2(H1)}) / eps` of the reference.
    pub apriori: Option<f64>,
    /// `eps^-3 int_0^T int_node u^2` of the reference.
    pub node_smallness: Option<f64>,
    pub stats: Option<RunStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyFits {
    #[serde(rename = "maxL2")]
    pub max_l2: Option<OrderFit>,
    #[serde(rename = "L2H1")]
    pub l2h1: Option<OrderFit>,
    #[serde(rename = "nodeGrad")]
    pub node_grad: Option<OrderFit>,
    pub mu: Option<OrderFit>,
    pub scaled_max_l2: Option<OrderFit>,
    pub scaled_l2h1: Option<OrderFit>,
    pub node_smallness: Option<OrderFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub regime: Regime,
    pub order: ApproxOrder,
    pub a: f64,
    pub resolution: usize,
    pub time_steps: usize,
    pub synthetic: Option<Synthetic>,
    pub rows: Vec<StudyRow>,
    pub fits: StudyFits,
    pub zeroth_fits: StudyFits,
    /// `max / min` of the a priori quantity over the successful rows.
    pub apriori_ratio: Option<f64>,
    pub stages: Vec<StageRecord>,
}

impl ConvergenceReport {
    pub fn successful(&self) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(|r| r.error.is_none())
    }

    pub fn failures(&self) -> usize {
        self.rows.len() - self.successful().count()
    }
}

struct RowOutput {
    row: StudyRow,
    fields: Option<(JunctionMesh, Vec<f64>, Vec<f64>)>,
}

fn perturbed(
    approx: &ApproximationField,
    mesh: &JunctionMesh,
    s: Synthetic,
    horizon: f64,
) -> TimeSeriesField {
    let amp = s.c * mesh.epsilon.powf(s.p) / mesh.volume().sqrt();
    let mut out = approx.series.clone();
    for (lev, &t) in out.levels.iter_mut().zip(&approx.series.times) {
        let add = amp * t / horizon;
        lev.iter_mut().for_each(|v| *v += add);
    }
    out
}

fn run_one(problem: &Problem, bundle: &TermBundle, plan: &StudyPlan, eps: f64) -> Result<RowOutput> {
    let a = problem.asymptotics.a;
    let (mesh, series, stats) = match plan.synthetic {
        None => {
            let run = solve_junction(problem, eps, plan.resolution)?;
            (run.mesh, Some(run.series), Some(run.stats))
        }
        Some(_) => (build_junction_mesh(&problem.geometry, eps, plan.resolution)?, None, None),
    };
    let u_req = assemble_u(&bundle.terms, plan.order, a, &mesh)?;
    let u_zero = if plan.order == ApproxOrder::Zeroth {
        None
    } else {
        Some(assemble_u(&bundle.terms, ApproxOrder::Zeroth, a, &mesh)?)
    };
    let reference = match (series, plan.synthetic) {
        (Some(s), _) => s,
        (None, Some(s)) => perturbed(&u_req, &mesh, s, problem.time.horizon),
        (None, None) => unreachable!(),
    };
    let approx = error_norms(&mesh, &reference, &u_req, &problem.regime, a)?;
    let zeroth = match &u_zero {
        Some(z) => error_norms(&mesh, &reference, z, &problem.regime, a)?,
        None => approx,
    };
    let u_max = field_norm(&mesh, &reference, NormRegion::All, NormKind::MaxL2)?;
    let u_l2h1 = field_norm(&mesh, &reference, NormRegion::All, NormKind::L2H1)?;
    let vol = mesh.volume();
    let row = StudyRow {
        epsilon: eps,
        error: None,
        approx: Some(approx),
        zeroth: Some(zeroth),
        volume: vol,
        voxels: mesh.n_voxels(),
        scaled_max_l2: Some(approx.max_l2 / vol.sqrt()),
        scaled_l2h1: Some(approx.l2h1 / vol.sqrt()),
        apriori: Some((u_max + u_l2h1) / eps),
        node_smallness: Some(node_smallness(&mesh, &reference)?),
        stats,
    };
    let last = reference.n_levels() - 1;
    let u_last = reference.levels[last].clone();
    let a_last = u_req.series.levels[last].clone();
    Ok(RowOutput { row, fields: Some((mesh, u_last, a_last)) })
}

fn failed_row(eps: f64, err: &Error) -> RowOutput {
    RowOutput {
        row: StudyRow {
            epsilon: eps,
            error: Some(err.to_string()),
            approx: None,
            zeroth: None,
            volume: 0.0,
            voxels: 0,
            scaled_max_l2: None,
            scaled_l2h1: None,
            apriori: None,
            node_smallness: None,
            stats: None,
        },
        fields: None,
    }
}

fn fit_column(rows: &[StudyRow], f: impl Fn(&StudyRow) -> Option<f64>) -> Option<OrderFit> {
    let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|r| f(r).map(|v| (r.epsilon, v))).collect();
    fit_eoc(&pairs).ok()
}

fn fits(rows: &[StudyRow], pick: impl Fn(&StudyRow) -> Option<ErrorEntry> + Copy) -> StudyFits {
    StudyFits {
        max_l2: fit_column(rows, |r| pick(r).map(|e| e.max_l2)),
        l2h1: fit_column(rows, |r| pick(r).map(|e| e.l2h1)),
        node_grad: fit_column(rows, |r| pick(r).map(|e| e.node_grad)),
        mu: fit_column(rows, |r| pick(r).map(|e| e.mu)),
        scaled_max_l2: fit_column(rows, |r| pick(r).map(|e| e.max_l2 / r.volume.sqrt())),
        scaled_l2h1: fit_column(rows, |r| pick(r).map(|e| e.l2h1 / r.volume.sqrt())),
        node_smallness: fit_column(rows, |r| r.node_smallness),
    }
}

/// Runs the study. Term computation failures abort it; a failure of one reference
/// run is recorded in its row and the remaining rows are still produced. When
/// `output_dir` is given the report files are written there.
pub fn run_convergence(
    problem: &Problem,
    plan: &StudyPlan,
    output_dir: Option<&Path>,
) -> Result<ConvergenceReport> {
    plan.validate()?;
    problem.regime.require_supported()?;
    let bundle = run_term_scheduler(problem, plan.order)?;

    let outputs: Vec<RowOutput> = if plan.parallel {
        let bundle = &bundle;
        std::thread::scope(|s| {
            let handles: Vec<_> = plan
                .epsilons
                .iter()
                .map(|&eps| s.spawn(move || run_one(problem, bundle, plan, eps)))
                .collect();
            handles
                .into_iter()
                .zip(&plan.epsilons)
                .map(|(h, &eps)| match h.join() {
                    Ok(Ok(o)) => o,
                    Ok(Err(e)) => failed_row(eps, &e),
                    Err(_) => failed_row(eps, &Error::LinearSolver("worker panicked".into())),
                })
                .collect()
        })
    } else {
        plan.epsilons
            .iter()
            .map(|&eps| run_one(problem, &bundle, plan, eps).unwrap_or_else(|e| failed_row(eps, &e)))
            .collect()
    };

    let rows: Vec<StudyRow> = outputs.iter().map(|o| o.row.clone()).collect();
    let ok: Vec<StudyRow> = rows.iter().filter(|r| r.error.is_none()).cloned().collect();
    let ap: Vec<f64> = ok.iter().filter_map(|r| r.apriori).collect();
    let apriori_ratio = (ap.len() >= 2).then(|| {
        let (lo, hi) = ap.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        hi / lo
    });
    let report = ConvergenceReport {
        regime: problem.regime.regime,
        order: plan.order,
        a: problem.asymptotics.a,
        resolution: plan.resolution,
        time_steps: problem.time.steps,
        synthetic: plan.synthetic,
        fits: fits(&ok, |r| r.approx),
        zeroth_fits: fits(&ok, |r| r.zeroth),
        rows,
        apriori_ratio,
        stages: bundle.stages.clone(),
    };
    if let Some(dir) = output_dir {
        write_outputs(dir, &report, &outputs)?;
    }
    Ok(report)
}

/// `epsilon,maxL2,L2H1,nodeGrad,mu,order_running` for the successful rows; the running
/// order is the `L2H1` order between consecutive rows. Formatting is fixed so that
/// identical runs give identical bytes.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let ok: Vec<&StudyRow> = report.successful().collect();
    let pairs: Vec<(f64, f64)> = ok
        .iter()
        .map(|r| (r.epsilon, r.approx.map_or(f64::NAN, |e| e.l2h1)))
        .collect();
    let orders = running_orders(&pairs);
    let mut s = String::from("epsilon,maxL2,L2H1,nodeGrad,mu,order_running\n");
    for (r, o) in ok.iter().zip(orders) {
        let Some(e) = r.approx else { continue };
        let o = o.map_or(String::new(), |v| format!("{v:.6}"));
        s.push_str(&format!(
            "{:.6e},{:.10e},{:.10e},{:.10e},{:.10e},{}\n",
            r.epsilon, e.max_l2, e.l2h1, e.node_grad, e.mu, o
        ));
    }
    s
}

fn write_outputs(dir: &Path, report: &ConvergenceReport, outputs: &[RowOutput]) -> Result<()> {
    std::fs::create_dir_all(dir.join("plots"))?;
    std::fs::create_dir_all(dir.join("fields"))?;
    std::fs::write(dir.join("convergence.csv"), convergence_csv(report))?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;

    let col = |name: &str, f: &dyn Fn(&StudyRow) -> Option<f64>, dashed: bool| Series {
        name: name.to_string(),
        points: report.successful().filter_map(|r| f(r).map(|v| (r.epsilon, v))).collect(),
        dashed,
    };
    let errors = [
        col("maxL2", &|r| r.approx.map(|e| e.max_l2), false),
        col("L2H1", &|r| r.approx.map(|e| e.l2h1), false),
        col("nodeGrad", &|r| r.approx.map(|e| e.node_grad), false),
        col("mu", &|r| r.approx.map(|e| e.mu), true),
    ];
    std::fs::write(
        dir.join("plots/errors.svg"),
        loglog_svg("Approximation errors", "eps", "error", &errors),
    )?;
    let scaled = [
        col("maxL2 / sqrt|Omega|", &|r| r.scaled_max_l2, false),
        col("L2H1 / sqrt|Omega|", &|r| r.scaled_l2h1, false),
        col("U0 L2H1 / sqrt|Omega|", &|r| r.zeroth.map(|e| e.l2h1 / r.volume.sqrt()), true),
    ];
    std::fs::write(
        dir.join("plots/scaled_errors.svg"),
        loglog_svg("Scaled errors", "eps", "error", &scaled),
    )?;

    for o in outputs {
        if let Some((mesh, u, approx)) = &o.fields {
            let tag = format!("{:.6}", o.row.epsilon);
            write_junction_field_binary(&dir.join(format!("fields/u_eps{tag}.bin")), mesh, u, FIELD_EXTENT)?;
            write_junction_field_binary(
                &dir.join(format!("fields/U_eps{tag}.bin")),
                mesh,
                approx,
                FIELD_EXTENT,
            )?;
        }
    }
    Ok(())
}
