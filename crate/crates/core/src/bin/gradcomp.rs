use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gradcomp::cli::{self, ExperimentConfig, ExperimentKind, SolverKind, SweepParam};

#[derive(Parser)]
#[command(name = "gradcomp", version, about = "Gradient compensation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random convex quadratic.
    Quad(RunArgs),
    /// LQR with a nonlinear state perturbation.
    Lqr(RunArgs),
    /// One run per value of a parameter, summarized in a CSV.
    Sweep {
        #[arg(long, default_value = "quad")]
        experiment: ExperimentKind,
        /// gamma, L_r or eta_min
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", value_parser = parse_values)]
        values: Values,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Debug)]
struct Values(Vec<f64>);

fn parse_values(s: &str) -> Result<Values, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| format!("not a number: {v:?}")))
        .collect::<Result<_, _>>()
        .map(Values)
}

#[derive(Args)]
struct RunArgs {
    /// Overridden by GRADCOMP_SEED when set.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "l-r")]
    l_r: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "eta-min")]
    eta_min: Option<f64>,
    #[arg(long = "eta-max")]
    eta_max: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-outer-iters")]
    max_outer_iters: Option<usize>,
    /// paper-one-point, central-difference or forward
    #[arg(long = "grad-scheme", value_parser = cli::parse_scheme)]
    grad_scheme: Option<gradcomp::composite::GradientScheme>,
    /// Gradient-norm tolerance of the LQR reference optimum.
    #[arg(long = "ref-tol")]
    ref_tol: Option<f64>,
    /// Output prefix; defaults to `<experiment>-seed<seed>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: bool,
}

impl RunArgs {
    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig, String> {
        let mut c = ExperimentConfig::defaults(kind);
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Ok(env) = std::env::var("GRADCOMP_SEED") {
            c.seed = env.trim().parse().map_err(|_| format!("GRADCOMP_SEED is not an integer: {env:?}"))?;
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$target = v;
                }
            )*};
        }
        set!(solver => solver, gamma => gamma, l_r => l_r, alpha => alpha, beta => beta,
             eta_min => eta_min, eta_max => eta_max, tol => termination_tol,
             max_outer_iters => max_outer_iters, grad_scheme => gradient_scheme, ref_tol => reference_tol);
        c.output_path = self
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{kind}-seed{}", c.seed)));
        c.emit_svg = self.svg;
        Ok(c)
    }
}

fn run(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let config = match args.config(kind) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gradcomp: {e}");
            return ExitCode::from(2);
        }
    };
    match cli::run_experiment(&config) {
        Ok(out) => {
            let t = &out.trace;
            println!(
                "{} seed {} {}: {} evaluations, {} model-based / {} model-free steps, error {:e}",
                kind,
                config.seed,
                config.solver,
                t.total_evals,
                t.model_based_steps(),
                t.model_free_steps(),
                t.final_error()
            );
            println!("wrote {}", out.csv_path.display());
            if t.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("gradcomp: solver stopped ({:?}) before reaching the tolerance", t.stop);
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("gradcomp: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Quad(args) => run(ExperimentKind::Quad, args),
        Command::Lqr(args) => run(ExperimentKind::Lqr, args),
        Command::Sweep {
            experiment,
            param,
            values,
            run,
        } => {
            let mut base = match run.config(*experiment) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("gradcomp: {e}");
                    return ExitCode::from(2);
                }
            };
            if run.out.is_none() {
                base.output_path = PathBuf::from(format!("{experiment}-sweep-seed{}", base.seed));
            }
            match cli::write_sweep(&base, *param, &values.0) {
                Ok((path, rows)) => {
                    for row in rows.iter().filter(|r| !r.ok()) {
                        match &row.result {
                            Err(e) => eprintln!("gradcomp: value {}: {e}", row.value),
                            Ok(_) => eprintln!("gradcomp: value {}: did not converge", row.value),
                        }
                    }
                    println!("wrote {}", path.display());
                    if rows.iter().all(|r| r.ok()) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("gradcomp: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
