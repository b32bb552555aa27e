//! Command-line driver. Exit codes: 0 success, 2 configuration or usage error,
//! 3 solver failure, 4 validation failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use starjunction::assembly::ApproxOrder;
use starjunction::cell::{
    write_far_field_json, write_field_binary, CellOperator, InnerDomainSpec, SpecialSolutions,
};
use starjunction::error::{Error, Result};
use starjunction::harness::{
    run_convergence, run_term_scheduler, run_validation, StudyPlan, Synthetic,
};
use starjunction::junction::{solve_junction, summarize, write_junction_field_binary, write_summary_json};
use starjunction::model::{Problem, ProblemConfig};

#[derive(Parser)]
#[command(name = "starjunction", version, about = "Thin star-shaped junction solvers and asymptotics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    #[value(name = "0")]
    Zeroth,
    #[value(name = "1")]
    First,
}

impl From<OrderArg> for ApproxOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Zeroth => ApproxOrder::Zeroth,
            OrderArg::First => ApproxOrder::First,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the graph terms and write them as CSV.
    SolveGraph {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "1")]
        order: OrderArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the special inner problems on a truncated domain.
    SolveCells {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        hv: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the full problem on the thin junction for one eps.
    SolveJunction {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        res: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Convergence study over a strictly decreasing list of eps.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        eps: Vec<f64>,
        #[arg(long, value_enum, default_value = "1")]
        order: OrderArg,
        #[arg(long)]
        res: Option<usize>,
        /// Manufactured reference `c,p` instead of the junction solves.
        #[arg(long, value_delimiter = ',')]
        synthetic: Option<Vec<f64>>,
        /// Run the eps values one after the other.
        #[arg(long)]
        sequential: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the validation checks and write validation.json.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

enum Outcome {
    Ok,
    ValidationFailed,
}

fn load(path: &Path) -> Result<Problem> {
    ProblemConfig::from_file(path)?.build()
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::SolveGraph { config, order, out } => {
            let problem = load(&config)?;
            let bundle = run_term_scheduler(&problem, order.into())?;
            std::fs::create_dir_all(&out)?;
            for (tag, sol) in &bundle.terms.omega {
                sol.write_csv(&out.join(format!("omega_{tag}.csv")))?;
                sol.write_vertex_csv(&out.join(format!("omega_{tag}_vertex.csv")))?;
            }
            std::fs::write(out.join("stages.json"), serde_json::to_string_pretty(&bundle.stages)?)?;
            for s in &bundle.stages {
                println!("{:<14} {:>9.3} s  max |.| {:.4e}", s.name, s.wall_time_s, s.max_abs);
            }
        }
        Command::SolveCells { config, radius, hv, out } => {
            let problem = load(&config)?;
            let d = &problem.discretization;
            let spec = InnerDomainSpec::from_geometry(
                &problem.geometry,
                radius.unwrap_or(d.cell_radius),
                hv.unwrap_or(d.cell_hv),
            )?;
            let op = CellOperator::from_spec(&spec, starjunction::cell::inner_bc(&problem)?)?;
            let specials = SpecialSolutions::compute(&op)?;
            std::fs::create_dir_all(&out)?;
            for (k, (f, r)) in specials.fields.iter().zip(&specials.reports).enumerate() {
                let i = specials.first + k;
                write_field_binary(&out.join(format!("special_{i}.bin")), &op.mesh, &f.values)?;
                write_far_field_json(&out.join(format!("special_{i}_far_field.json")), r)?;
                let c: Vec<String> = r.outlets.iter().map(|o| format!("{:.6e}", o.constant)).collect();
                println!("special solution {i}: far-field constants [{}]", c.join(", "));
            }
        }
        Command::SolveJunction { config, eps, res, out } => {
            let problem = load(&config)?;
            let res = res.unwrap_or(problem.discretization.junction_resolution);
            let run = solve_junction(&problem, eps, res)?;
            let summary = summarize(&run)?;
            std::fs::create_dir_all(&out)?;
            write_summary_json(&out.join("junction_summary.json"), &summary)?;
            let last = run.series.levels.last().map(Vec::as_slice).unwrap_or(&[]);
            write_junction_field_binary(
                &out.join("u_final.bin"),
                &run.mesh,
                last,
                starjunction::harness::FIELD_EXTENT,
            )?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Convergence { config, eps, order, res, synthetic, sequential, out } => {
            let problem = load(&config)?;
            let mut plan = StudyPlan::new(
                eps,
                order.into(),
                res.unwrap_or(problem.discretization.junction_resolution),
            );
            plan.parallel = !sequential;
            plan.synthetic = match synthetic.as_deref() {
                None => None,
                Some(&[c, p]) => Some(Synthetic { c, p }),
                Some(_) => {
                    return Err(Error::InvalidInput("--synthetic expects two values c,p".into()))
                }
            };
            let report = run_convergence(&problem, &plan, Some(&out))?;
            print!("{}", starjunction::harness::convergence_csv(&report));
            for r in report.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("eps = {}: {}", r.epsilon, r.error.as_deref().unwrap_or(""));
            }
            if let Some(f) = report.fits.l2h1 {
                println!("fitted L2H1 order {:.3}", f.order);
            }
            if report.failures() > 0 {
                return Err(Error::LinearSolver(format!(
                    "{} of {} reference runs failed",
                    report.failures(),
                    report.rows.len()
                )));
            }
        }
        Command::Validate { config, seed, out } => {
            let problem = load(&config)?;
            let report = run_validation(&problem, seed);
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("validation.json"), serde_json::to_string_pretty(&report)?)?;
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {:<24} measured {:.3e} tolerance {:.1e}  {}", c.name, c.measured, c.tolerance, c.detail);
            }
            if !report.passed() {
                return Ok(Outcome::ValidationFailed);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
