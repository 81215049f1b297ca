//! Experiment runner: seeded instance generation, a GC or model-free run, and
//! CSV/meta/SVG output. Also parameter sweeps and instance archives.

mod instance;
mod svg;

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::composite::{CompositeObjective, GradientScheme};
use crate::error::Error;
use crate::linesearch::LineSearchParams;
use crate::lqrenv::{self, LqrObjective};
use crate::matlin::Rng;
use crate::quadbench::{self, QuadGradientOracle};
use crate::solver::{gc_solve, model_free_solve, ConvergenceTrace, GcConfig, Termination, TraceRecord};

pub use instance::{instance_from_str, instance_to_string, load_instance, save_instance, Instance, HEADER};
pub use svg::render_svg;

pub const CSV_HEADER: &str = "eval_index,f_value,error,regime,event";
pub const SWEEP_HEADER: &str = "value,total_evals,mb_steps,mf_steps,converged";

/// Gradient-norm tolerance of the LQR reference optimum. The central
/// difference with `r_s = 1e−3` has a bias floor near `1e−5`, so much tighter
/// values are not reachable.
pub const LQR_REFERENCE_TOL: f64 = lqrenv::REFERENCE_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Quad,
    Lqr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Gc,
    ModelFree,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:path => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($variant),)+
                    other => Err(format!("unknown value {other:?}")),
                }
            }
        }
    };
}

keyword_enum!(ExperimentKind { ExperimentKind::Quad => "quad", ExperimentKind::Lqr => "lqr" });
keyword_enum!(SolverKind { SolverKind::Gc => "gc", SolverKind::ModelFree => "model-free" });

/// CLI spelling of a [`GradientScheme`].
pub fn scheme_name(s: GradientScheme) -> &'static str {
    match s {
        GradientScheme::Forward => "forward",
        GradientScheme::Central => "central-difference",
        GradientScheme::OnePoint => "paper-one-point",
    }
}

pub fn parse_scheme(s: &str) -> Result<GradientScheme, String> {
    match s {
        "forward" => Ok(GradientScheme::Forward),
        "central-difference" => Ok(GradientScheme::Central),
        "paper-one-point" => Ok(GradientScheme::OnePoint),
        other => Err(format!("unknown gradient scheme {other:?}")),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub solver: SolverKind,
    pub gamma: f64,
    pub l_r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub termination_tol: f64,
    pub max_outer_iters: usize,
    pub gradient_scheme: GradientScheme,
    /// Gradient-norm tolerance of the LQR reference optimum.
    pub reference_tol: f64,
    /// Output prefix; `.csv`, `.meta` and `.svg` are appended.
    pub output_path: PathBuf,
    pub emit_svg: bool,
}

impl ExperimentConfig {
    /// Quadratic benchmark: `α = 0.3`, `β = 0.5`, `η ∈ [0.005, 1]`, `γ = 0.6`,
    /// distance tolerance `1e−3`, `L_r = c2`, forward-difference gradients.
    pub fn quad_defaults() -> Self {
        Self {
            experiment: ExperimentKind::Quad,
            seed: 0,
            solver: SolverKind::Gc,
            gamma: 0.6,
            l_r: quadbench::DEFAULT_C2,
            alpha: 0.3,
            beta: 0.5,
            eta_min: 0.005,
            eta_max: 1.0,
            termination_tol: 1e-3,
            max_outer_iters: 5_000,
            gradient_scheme: GradientScheme::Forward,
            reference_tol: LQR_REFERENCE_TOL,
            output_path: PathBuf::from("quad"),
            emit_svg: false,
        }
    }

    /// LQR benchmark: `α = 0.3`, `β = 0.5`, `η ∈ [0.05, 1]`, distance
    /// tolerance `1e−4`, central-difference gradients. `γ = 0.5` and
    /// `L_r = 0.1` are tuning choices; `∇r` has no known Lipschitz constant here.
    pub fn lqr_defaults() -> Self {
        Self {
            experiment: ExperimentKind::Lqr,
            gamma: 0.5,
            l_r: 0.1,
            eta_min: 0.05,
            termination_tol: 1e-4,
            gradient_scheme: GradientScheme::Central,
            output_path: PathBuf::from("lqr"),
            ..Self::quad_defaults()
        }
    }

    pub fn defaults(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Quad => Self::quad_defaults(),
            ExperimentKind::Lqr => Self::lqr_defaults(),
        }
    }

    pub fn line_search(&self) -> LineSearchParams {
        LineSearchParams {
            alpha: self.alpha,
            beta: self.beta,
            eta_min: self.eta_min,
            eta_max: self.eta_max,
        }
    }

    fn gc_config(&self, reference: &[f64]) -> GcConfig {
        let ls = self.line_search();
        GcConfig {
            gamma: self.gamma,
            lipschitz: self.l_r,
            ls_model_based: ls,
            ls_model_free: ls.with_eta_min(0.0),
            max_outer_iters: self.max_outer_iters,
            termination_tol: self.termination_tol,
            termination: Termination::DistanceToReference(reference.to_vec()),
            record_steps: false,
        }
    }

    pub fn with_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.output_path = path.into();
        self
    }

    /// `key=value` lines, one per field, in a fixed order.
    pub fn to_meta(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment={}", self.experiment);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "solver={}", self.solver);
        let _ = writeln!(s, "gamma={}", self.gamma);
        let _ = writeln!(s, "l_r={}", self.l_r);
        let _ = writeln!(s, "alpha={}", self.alpha);
        let _ = writeln!(s, "beta={}", self.beta);
        let _ = writeln!(s, "eta_min={}", self.eta_min);
        let _ = writeln!(s, "eta_max={}", self.eta_max);
        let _ = writeln!(s, "termination_tol={}", self.termination_tol);
        let _ = writeln!(s, "max_outer_iters={}", self.max_outer_iters);
        let _ = writeln!(s, "grad_scheme={}", scheme_name(self.gradient_scheme));
        let _ = writeln!(s, "reference_tol={}", self.reference_tol);
        let _ = writeln!(s, "output_path={}", self.output_path.display());
        let _ = writeln!(s, "emit_svg={}", self.emit_svg);
        s
    }

    /// Rebuilds a configuration from a meta file. Result keys written after the
    /// configuration are ignored.
    pub fn from_meta(text: &str) -> Result<Self, String> {
        let mut pairs = Vec::new();
        for (no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(format!("line {}: expected key=value", no + 1))?;
            pairs.push((k.trim(), v.trim()));
        }
        let get = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or(format!("missing key {key:?}"))
        };
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value for {key}: {v:?}"))
        }
        let experiment: ExperimentKind = get("experiment")?.parse()?;
        let mut c = Self::defaults(experiment);
        c.seed = num("seed", get("seed")?)?;
        c.solver = get("solver")?.parse()?;
        c.gamma = num("gamma", get("gamma")?)?;
        c.l_r = num("l_r", get("l_r")?)?;
        c.alpha = num("alpha", get("alpha")?)?;
        c.beta = num("beta", get("beta")?)?;
        c.eta_min = num("eta_min", get("eta_min")?)?;
        c.eta_max = num("eta_max", get("eta_max")?)?;
        c.termination_tol = num("termination_tol", get("termination_tol")?)?;
        c.max_outer_iters = num("max_outer_iters", get("max_outer_iters")?)?;
        c.gradient_scheme = parse_scheme(get("grad_scheme")?)?;
        c.reference_tol = num("reference_tol", get("reference_tol")?)?;
        c.output_path = PathBuf::from(get("output_path")?);
        c.emit_svg = num("emit_svg", get("emit_svg")?)?;
        Ok(c)
    }
}

/// Where a run failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Generate,
    Reference,
    Solve,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "configuration",
            Stage::Generate => "instance generation",
            Stage::Reference => "reference optimum",
            Stage::Solve => "solver",
            Stage::Write => "output",
        })
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{stage} failed: {error}")]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

fn at(stage: Stage) -> impl Fn(Error) -> StageError {
    move |error| StageError { stage, error }
}

/// An instance with its starting point and the optimum used to measure error.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub instance: Instance,
    pub x0: Vec<f64>,
    pub reference: Vec<f64>,
    /// SHA-256 of the serialized instance.
    pub fingerprint: String,
}

/// Generates the instance for `config.seed` and computes its reference optimum.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, StageError> {
    let instance = match config.experiment {
        ExperimentKind::Quad => Instance::Quad(
            quadbench::make_quadratic(
                &mut Rng::new(config.seed),
                quadbench::DEFAULT_N,
                quadbench::DEFAULT_C1,
                quadbench::DEFAULT_C2,
                quadbench::DEFAULT_C3,
                quadbench::DEFAULT_Q_RADIUS,
            )
            .map_err(at(Stage::Generate))?,
        ),
        ExperimentKind::Lqr => {
            let mut inst = lqrenv::default_lqr(config.seed).map_err(at(Stage::Generate))?;
            lqrenv::reference_optimum(&mut inst, config.reference_tol).map_err(at(Stage::Reference))?;
            Instance::Lqr(inst)
        }
    };
    let (x0, reference) = match &instance {
        Instance::Quad(q) => (q.x_hat_star.clone(), q.x_star.clone()),
        Instance::Lqr(l) => (
            l.k_hat_star.as_slice().to_vec(),
            l.k_star_ref.as_ref().map(|k| k.as_slice().to_vec()).unwrap_or_default(),
        ),
    };
    let fingerprint = hex::encode(Sha256::digest(instance_to_string(&instance, Some(config.seed)).as_bytes()));
    Ok(Prepared {
        instance,
        x0,
        reference,
        fingerprint,
    })
}

/// Runs the configured solver on a prepared instance.
pub fn run_prepared(config: &ExperimentConfig, prepared: &Prepared) -> Result<ConvergenceTrace, StageError> {
    let gc = config.gc_config(&prepared.reference);
    gc.validate().map_err(at(Stage::Config))?;
    let mut obj: Box<dyn CompositeObjective> = match &prepared.instance {
        Instance::Quad(q) => Box::new(quadbench::quad_objective(q.clone()).with_oracle(
            QuadGradientOracle::FiniteDifference {
                scheme: config.gradient_scheme,
                step: quadbench::FD_STEP,
            },
        )),
        Instance::Lqr(l) => Box::new(LqrObjective::new(l.clone()).with_scheme(config.gradient_scheme)),
    };
    let trace = match config.solver {
        SolverKind::Gc => gc_solve(obj.as_mut(), &prepared.x0, &gc),
        SolverKind::ModelFree => model_free_solve(obj.as_mut(), &prepared.x0, &gc),
    };
    trace.map_err(at(Stage::Solve))
}

pub fn trace_csv(records: &[TraceRecord]) -> String {
    let mut s = String::with_capacity(48 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.eval_index,
            r.f_value,
            r.error,
            r.regime.tag(),
            r.event
        );
    }
    s
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub trace: ConvergenceTrace,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
    pub svg_path: Option<PathBuf>,
    pub fingerprint: String,
}

fn write_file(path: &Path, contents: &str) -> Result<(), StageError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| at(Stage::Write)(e.into()))?;
    }
    std::fs::write(path, contents).map_err(|e| at(Stage::Write)(e.into()))
}

/// Full pipeline: prepare, solve, write `<out>.csv`, `<out>.meta` and
/// optionally `<out>.svg`. A run that stops without meeting the tolerance
/// still writes its files; check `trace.converged`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, StageError> {
    let prepared = prepare(config)?;
    let trace = run_prepared(config, &prepared)?;
    let csv_path = with_extension(&config.output_path, "csv");
    let meta_path = with_extension(&config.output_path, "meta");
    write_file(&csv_path, &trace_csv(&trace.records))?;

    let mut meta = config.to_meta();
    let _ = writeln!(meta, "instance_sha256={}", prepared.fingerprint);
    let _ = writeln!(meta, "total_evals={}", trace.total_evals);
    let _ = writeln!(meta, "final_error={}", trace.final_error());
    let _ = writeln!(meta, "converged={}", trace.converged);
    let _ = writeln!(meta, "stop={:?}", trace.stop);
    let _ = writeln!(meta, "mb_steps={}", trace.model_based_steps());
    let _ = writeln!(meta, "mf_steps={}", trace.model_free_steps());
    write_file(&meta_path, &meta)?;

    let svg_path = if config.emit_svg {
        let path = with_extension(&config.output_path, "svg");
        let title = format!("{} seed {} ({})", config.experiment, config.seed, config.solver);
        write_file(&path, &render_svg(&trace.records, &title))?;
        Some(path)
    } else {
        None
    };
    Ok(ExperimentOutcome {
        trace,
        csv_path,
        meta_path,
        svg_path,
        fingerprint: prepared.fingerprint,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Gamma,
    LR,
    EtaMin,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gamma" => Ok(SweepParam::Gamma),
            "L_r" | "l_r" | "l-r" => Ok(SweepParam::LR),
            "eta_min" | "eta-min" => Ok(SweepParam::EtaMin),
            other => Err(format!("cannot sweep {other:?}; expected gamma, L_r or eta_min")),
        }
    }
}

impl SweepParam {
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut c = base.clone();
        match self {
            SweepParam::Gamma => c.gamma = value,
            SweepParam::LR => c.l_r = value,
            SweepParam::EtaMin => c.eta_min = value,
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<SweepStats, StageError>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepStats {
    pub total_evals: u64,
    pub mb_steps: usize,
    pub mf_steps: usize,
    pub converged: bool,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        matches!(self.result, Ok(s) if s.converged)
    }
}

/// One run per value on a shared instance, in parallel. Rows keep the order
/// of `values`; a failed run leaves its counts empty.
pub fn run_sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>, StageError> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let prepared = prepare(base)?;
    Ok(values
        .par_iter()
        .map(|&value| {
            let config = param.apply(base, value);
            let result = run_prepared(&config, &prepared).map(|t| SweepStats {
                total_evals: t.total_evals,
                mb_steps: t.model_based_steps(),
                mf_steps: t.model_free_steps(),
                converged: t.converged,
            });
            SweepRow { value, result }
        })
        .collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for row in rows {
        match &row.result {
            Ok(st) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    row.value, st.total_evals, st.mb_steps, st.mf_steps, st.converged
                );
            }
            Err(_) => {
                let _ = writeln!(s, "{},,,,false", row.value);
            }
        }
    }
    s
}

/// Runs a sweep and writes the summary to `<base.output_path>.csv`.
pub fn write_sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<(PathBuf, Vec<SweepRow>), StageError> {
    let rows = run_sweep(base, param, values)?;
    let path = with_extension(&base.output_path, "csv");
    write_file(&path, &sweep_csv(&rows))?;
    Ok((path, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_round_trip() {
        let mut c = ExperimentConfig::lqr_defaults();
        c.seed = 42;
        c.solver = SolverKind::ModelFree;
        c.eta_min = 5e-9;
        c.emit_svg = true;
        let mut meta = c.to_meta();
        meta.push_str("total_evals=10\n");
        assert_eq!(ExperimentConfig::from_meta(&meta).unwrap(), c);
    }

    #[test]
    fn keyword_parsing() {
        assert_eq!("model-free".parse::<SolverKind>().unwrap(), SolverKind::ModelFree);
        assert_eq!("lqr".parse::<ExperimentKind>().unwrap(), ExperimentKind::Lqr);
        assert_eq!("L_r".parse::<SweepParam>().unwrap(), SweepParam::LR);
        assert!("alpha".parse::<SweepParam>().is_err());
        for s in [GradientScheme::Forward, GradientScheme::Central, GradientScheme::OnePoint] {
            assert_eq!(parse_scheme(scheme_name(s)).unwrap(), s);
        }
    }

    #[test]
    fn empty_sweep_is_empty() {
        let rows = run_sweep(&ExperimentConfig::lqr_defaults(), SweepParam::EtaMin, &[]).unwrap();
        assert!(rows.is_empty());
        assert_eq!(sweep_csv(&rows), format!("{SWEEP_HEADER}\n"));
    }

    #[test]
    fn quad_run_prefers_gc() {
        let base = ExperimentConfig::quad_defaults();
        let prepared = prepare(&base).unwrap();
        let gc = run_prepared(&base, &prepared).unwrap();
        let mf = run_prepared(
            &ExperimentConfig {
                solver: SolverKind::ModelFree,
                ..base.clone()
            },
            &prepared,
        )
        .unwrap();
        assert!(gc.converged && mf.converged);
        assert!(gc.total_evals < mf.total_evals, "{} vs {}", gc.total_evals, mf.total_evals);
    }
}
