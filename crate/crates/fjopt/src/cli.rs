//! Subcommands behind the `fjopt` binary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use fjopt_core::clique::{self, DeltaVariant};
use fjopt_core::equilibrium::{self, EquilibriumError, IterationConfig};
use fjopt_core::matrix::max_abs_diff;
use fjopt_core::model::{BudgetNorm, BudgetSpec};
use fjopt_core::optimize::{self, DescentConfig, OptimizationResult, OptimizeError};
use fjopt_core::reduction::{self, DeltaChoice, ReductionError, ReductionKind};
use fjopt_core::scalar::rational_string;
use fjopt_core::{OpinionInstance, Rational, Scalar};

use crate::format::{self, artifact_doc, digest, FormatError};
use crate::generate::{gadget_probes, trial_rng};
use crate::number::parse_rational;
use crate::report::{Report, ReportRow};
use crate::suites::{run_suite, Backend, Suite, SuiteConfig, SuiteError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    PropertyFailed = 1,
    Input = 2,
    Guard = 3,
    Io = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn input(message: impl ToString) -> CliError {
    CliError {
        exit: Exit::Input,
        message: message.to_string(),
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        input(e)
    }
}

impl From<EquilibriumError> for CliError {
    fn from(e: EquilibriumError) -> Self {
        input(e)
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        let exit = if matches!(e, OptimizeError::Guard { .. }) { Exit::Guard } else { Exit::Input };
        CliError {
            exit,
            message: e.to_string(),
        }
    }
}

impl From<ReductionError> for CliError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Optimize(o) => o.into(),
            ReductionError::TooLarge { .. } => CliError {
                exit: Exit::Guard,
                message: e.to_string(),
            },
            other => input(other),
        }
    }
}

impl From<SuiteError> for CliError {
    fn from(e: SuiteError) -> Self {
        CliError {
            exit: if e.is_guard() { Exit::Guard } else { Exit::Input },
            message: e.to_string(),
        }
    }
}

impl From<clique::CliqueError> for CliError {
    fn from(e: clique::CliqueError) -> Self {
        input(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "fjopt", version, about = "Resistance optimization for Friedkin-Johnsen opinion dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Arithmetic for solves: exact rationals or f64.
    #[arg(long, global = true, value_enum, default_value_t = Backend::Exact)]
    pub backend: Backend,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the CSV report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    None,
    L0,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Enum,
    Concentrated,
    Grid,
    Descent,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    L0,
    L1,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium by direct solve and by iterating the dynamics.
    Equilibrium {
        instance: PathBuf,
        /// JSON array of resistances; defaults to `alpha_init`.
        alpha: Option<PathBuf>,
    },
    /// Minimize the total equilibrium opinion.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = NormArg::None)]
        norm: NormArg,
        #[arg(long, default_value = "0")]
        budget: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Build a vertex-cover gadget from an edge-list file.
    Reduce {
        graph: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// `paper`, `corrected` or an explicit `p/q` (L1 only).
        #[arg(long, default_value = "corrected")]
        delta: String,
        /// Write the gadget instance JSON here.
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Largest mixing weight keeping every probed y_ij negative.
    DeltaSearch {
        graph: PathBuf,
        #[arg(long, default_value_t = 32)]
        probes: usize,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError {
        exit: Exit::Io,
        message: format!("{}: {e}", path.display()),
    })
}

/// Report text plus whether every row passed. Diagnostics go to stderr.
pub struct Outcome {
    pub report: Report,
    pub notes: Vec<String>,
}

impl Outcome {
    fn rows(rows: Vec<ReportRow>) -> Self {
        Self {
            report: Report::new(rows),
            notes: Vec::new(),
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Equilibrium { instance, alpha } => cmd_equilibrium(instance, alpha.as_deref(), cli.backend),
        Command::Solve {
            instance,
            norm,
            budget,
            method,
        } => cmd_solve(instance, *norm, budget, *method, cli.backend),
        Command::Reduce {
            graph,
            kind,
            delta,
            artifact,
        } => cmd_reduce(graph, *kind, delta, artifact.as_deref()),
        Command::Verify { suite, trials } => Ok(Outcome::rows(run_suite(
            *suite,
            SuiteConfig {
                seed: cli.seed,
                trials: *trials,
                backend: cli.backend,
            },
        )?)),
        Command::DeltaSearch { graph, probes } => cmd_delta_search(graph, *probes, cli.seed),
    }
}

/// Runs the command, writes the report, and returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(out) => {
            let csv = out.report.to_csv();
            if let Some(path) = &cli.out {
                if let Err(e) = fs::write(path, &csv) {
                    eprintln!("error: {}: {e}", path.display());
                    return Exit::Io as i32;
                }
            } else {
                print!("{csv}");
            }
            for n in &out.notes {
                eprintln!("{n}");
            }
            eprintln!("{} passed, {} failed", out.report.passed(), out.report.failed());
            for r in out.report.failures() {
                eprintln!("FAIL {} {} {}", r.experiment, r.digest, r.quantity);
            }
            if out.report.all_pass() {
                Exit::Ok as i32
            } else {
                Exit::PropertyFailed as i32
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit as i32
        }
    }
}

fn cmd_equilibrium(path: &Path, alpha_path: Option<&Path>, backend: Backend) -> Result<Outcome, CliError> {
    let parsed = format::parse_instance(&read(path)?)?;
    let inst = parsed.instance;
    let alpha = match alpha_path {
        Some(p) => format::parse_alpha(&read(p)?, inst.agents())?,
        None => inst.alpha_init().to_vec(),
    };
    inst.check_alpha(&alpha).map_err(input)?;
    let dig = digest(&parsed.doc);
    let exp = "equilibrium";
    let mut rows = match backend {
        Backend::Exact => direct_rows(exp, &dig, &inst, &alpha)?,
        Backend::Float => {
            let fa: Vec<f64> = alpha.iter().map(Scalar::to_f64).collect();
            direct_rows(exp, &dig, &inst.to_f64(), &fa)?
        }
    };
    let direct: Vec<f64> = equilibrium::solve_equilibrium(&inst, &alpha)?.z.iter().map(Scalar::to_f64).collect();
    let z0: Vec<f64> = inst.innate().iter().map(Scalar::to_f64).collect();
    match equilibrium::iterate_dynamics(&inst, &alpha, &z0, IterationConfig::default()) {
        Ok(it) => {
            let gap = max_abs_diff(&it.z, &direct);
            rows.push(ReportRow::new(exp, &dig, "iterate.f", &it.f_value, "", true));
            rows.push(ReportRow::new(exp, &dig, "iterate.discrepancy", &gap, "<= 1e-10", gap <= 1e-10));
            rows.push(ReportRow::note(exp, &dig, "iterate.steps", it.iterations.unwrap_or(0).to_string()));
        }
        Err(EquilibriumError::NotConverged { steps, last_change, .. }) => {
            rows.push(
                ReportRow::new(exp, &dig, "iterate.discrepancy", &last_change, format!("not converged in {steps} steps"), false),
            );
        }
        Err(e) => return Err(e.into()),
    }
    if let Some(red) = &parsed.doc.reduction {
        let theta = parse_rational(&red.theta).map_err(input)?;
        let f = equilibrium::objective(&inst, &alpha)?;
        rows.push(ReportRow::new(exp, &dig, "f_minus_theta", &(f - &theta), format!("theta = {}", red.theta), true));
    }
    Ok(Outcome::rows(rows))
}

fn direct_rows<S: Scalar>(
    exp: &str,
    dig: &str,
    inst: &OpinionInstance<S>,
    alpha: &[S],
) -> Result<Vec<ReportRow>, CliError> {
    let rep = equilibrium::solve_equilibrium(inst, alpha)?;
    let mut rows: Vec<ReportRow> = rep
        .z
        .iter()
        .enumerate()
        .map(|(i, z)| ReportRow::new(exp, dig, format!("z[{i:03}]"), z, "", true))
        .collect();
    rows.push(ReportRow::new(exp, dig, "f", &rep.f_value, "", true));
    let tol = if S::EXACT { 0.0 } else { 1e-12 };
    rows.push(ReportRow::new(
        exp,
        dig,
        "residual",
        &rep.residual,
        if S::EXACT { "= 0".to_string() } else { format!("<= {tol:e}") },
        rep.residual.to_f64() <= tol,
    ));
    Ok(rows)
}

fn result_rows<S: Scalar>(
    dig: &str,
    inst: &OpinionInstance<S>,
    budget: &BudgetSpec<S>,
    res: &OptimizationResult<S>,
) -> Result<Outcome, CliError> {
    let exp = "solve";
    let mut rows = vec![
        ReportRow::new(exp, dig, "f_star", &res.f_star, "", true),
        ReportRow::note(exp, dig, "method", res.method.tag()),
        ReportRow::note(exp, dig, "evaluations", res.evaluations.to_string()),
        ReportRow::new(exp, dig, "budget_used.l0", &S::from_usize(res.alpha_star.l0_used()), "", true),
        ReportRow::new(exp, dig, "budget_used.l1", res.alpha_star.l1_used(), "", true),
    ];
    for (i, a) in res.alpha_star.alpha().iter().enumerate() {
        rows.push(ReportRow::new(exp, dig, format!("alpha[{i:03}]"), a, "", true));
    }
    let ok = res.verify(inst, budget, 1e-10)?;
    rows.push(ReportRow::note(exp, dig, "feasible_and_recomputed", "box, budget and objective rechecked").with_pass(ok));
    Ok(Outcome {
        report: Report::new(rows),
        notes: vec![format!("certificate: {:?}", res.certificate)],
    })
}

fn cmd_solve(path: &Path, norm: NormArg, budget: &str, method: MethodArg, backend: Backend) -> Result<Outcome, CliError> {
    let parsed = format::parse_instance(&read(path)?)?;
    let dig = digest(&parsed.doc);
    let inst = parsed.instance;
    let k = parse_rational(budget).map_err(input)?;
    let norm = match norm {
        NormArg::None => BudgetNorm::Unbudgeted,
        NormArg::L0 => BudgetNorm::L0,
        NormArg::L1 => BudgetNorm::L1,
    };
    let float_only = matches!(method, MethodArg::Grid | MethodArg::Descent);
    if backend == Backend::Float || float_only {
        let fi = inst.to_f64();
        let fb = BudgetSpec::new(norm, k.to_f64()).map_err(input)?;
        let res = solve_with(&fi, &fb, method)?;
        result_rows(&dig, &fi, &fb, &res)
    } else {
        let b = BudgetSpec::new(norm, k).map_err(input)?;
        let res = solve_with(&inst, &b, method)?;
        result_rows(&dig, &inst, &b, &res)
    }
}

fn unsupported(method: MethodArg, norm: BudgetNorm) -> CliError {
    input(format!("method {method:?} does not support norm {norm:?}"))
}

fn solve_with<S: Scalar>(
    inst: &OpinionInstance<S>,
    budget: &BudgetSpec<S>,
    method: MethodArg,
) -> Result<OptimizationResult<S>, CliError> {
    let norm = budget.norm();
    Ok(match (norm, method) {
        (BudgetNorm::Unbudgeted, MethodArg::Auto | MethodArg::Local) => optimize::local_search_unbudgeted(inst)?,
        (BudgetNorm::Unbudgeted, MethodArg::Enum) => {
            let all = BudgetSpec::l0(inst.agents());
            optimize::solve_l0(inst, &all)?
        }
        (BudgetNorm::L0, MethodArg::Auto | MethodArg::Enum) => optimize::solve_l0(inst, budget)?,
        (BudgetNorm::L1, MethodArg::Enum | MethodArg::Concentrated) => optimize::solve_l1_concentrated(inst, budget)?,
        (BudgetNorm::L1, MethodArg::Auto) => match optimize::solve_l1_concentrated(inst, budget) {
            Err(OptimizeError::Guard { .. }) => from_f64(descent(inst, budget)?, inst.alpha_init()),
            other => other?,
        },
        (BudgetNorm::L1, MethodArg::Grid) => from_f64(optimize::solve_l1_grid(
            &inst.to_f64(),
            &BudgetSpec::new(norm, budget.k().to_f64()).map_err(input)?,
            optimize::GRID_BASE_STEP,
            optimize::GRID_REFINE_ROUNDS,
        )?, inst.alpha_init()),
        (BudgetNorm::L1, MethodArg::Descent) => from_f64(descent(inst, budget)?, inst.alpha_init()),
        (n, m) => return Err(unsupported(m, n)),
    })
}

fn descent<S: Scalar>(inst: &OpinionInstance<S>, budget: &BudgetSpec<S>) -> Result<OptimizationResult<f64>, CliError> {
    let fb = BudgetSpec::new(budget.norm(), budget.k().to_f64()).map_err(input)?;
    Ok(optimize::solve_l1_projected_descent(&inst.to_f64(), &fb, DescentConfig::default(), None)?)
}

/// Float results re-expressed in the caller's scalar (exact binary values).
fn from_f64<S: Scalar>(r: OptimizationResult<f64>, init: &[S]) -> OptimizationResult<S> {
    let alpha: Vec<S> = r.alpha_star.alpha().iter().map(|&x| S::from_f64(x)).collect();
    OptimizationResult {
        alpha_star: fjopt_core::ResistanceVector::new(alpha, init).expect("same length"),
        f_star: S::from_f64(r.f_star),
        method: r.method,
        certificate: r.certificate,
        evaluations: r.evaluations,
    }
}

fn delta_choice(text: &str) -> Result<DeltaChoice, CliError> {
    Ok(match text {
        "paper" => DeltaChoice::Formula(DeltaVariant::Paper),
        "corrected" => DeltaChoice::Formula(DeltaVariant::Corrected),
        other => DeltaChoice::Explicit(parse_rational(other).map_err(input)?),
    })
}

fn cmd_reduce(path: &Path, kind: KindArg, delta: &str, artifact: Option<&Path>) -> Result<Outcome, CliError> {
    let vc = format::parse_graph(&read(path)?)?;
    let a = match kind {
        KindArg::L0 => reduction::build_l0_reduction(&vc)?,
        KindArg::L1 => reduction::build_l1_reduction(&vc, &delta_choice(delta)?)?,
    };
    let doc = artifact_doc(&a);
    let dig = digest(&doc);
    let exp = match a.kind {
        ReductionKind::L0 => "reduce-l0",
        ReductionKind::L1 => "reduce-l1",
    };
    let mut rows = vec![
        ReportRow::new(exp, &dig, "theta", &a.theta, "", true),
        ReportRow::new(exp, &dig, "gap", &a.gap, "", true),
        ReportRow::new(exp, &dig, "threshold", &reduction::decision_threshold(&a), "theta + gap/2", true),
        ReportRow::new(exp, &dig, "k", &Rational::from_usize(vc.k()), "", true),
    ];
    if let Some(d) = &a.delta {
        rows.push(ReportRow::new(exp, &dig, "delta", d, "", true));
    }
    let mut notes = Vec::new();
    if let Some(p) = artifact {
        fs::write(p, format::pretty_json(&doc) + "\n").map_err(|e| CliError {
            exit: Exit::Io,
            message: format!("{}: {e}", p.display()),
        })?;
        notes.push(format!("artifact written to {}", p.display()));
    }
    Ok(Outcome {
        report: Report::new(rows),
        notes,
    })
}

const DELTA_SEARCH_SALT: u64 = 0xde17a;

fn cmd_delta_search(path: &Path, probes: usize, seed: u64) -> Result<Outcome, CliError> {
    let vc = format::parse_graph(&read(path)?)?;
    let g = vc.graph();
    if probes == 0 {
        return Err(input("--probes must be at least 1"));
    }
    let paper = clique::delta_formula(g.n(), g.degree(), DeltaVariant::Paper)?;
    let corrected = clique::delta_formula(g.n(), g.degree(), DeltaVariant::Corrected)?;
    let exact_probes = gadget_probes(&mut trial_rng(seed, DELTA_SEARCH_SALT, 0), g.n(), probes);
    let fprobes: Vec<Vec<f64>> = exact_probes.iter().map(|p| p.iter().map(Scalar::to_f64).collect()).collect();
    let search = clique::empirical_delta_star(g, &fprobes, (0.0, 1.0))?;
    let dig = crate::format::instance_digest(&clique::mixed_instance(g, &corrected)?);
    let exp = "delta-search";
    let c = corrected.to_f64();
    let mut rows = vec![
        ReportRow::new(exp, &dig, "delta_star", &search.delta_star, format!(">= corrected {c:e}"), search.delta_star >= c),
        ReportRow::new(exp, &dig, "delta_paper", &paper, "", true),
        ReportRow::new(exp, &dig, "delta_corrected", &corrected, "", true),
        ReportRow::new(exp, &dig, "delta_star_over_corrected", &(search.delta_star / c), "", true),
        ReportRow::new(exp, &dig, "delta_star_over_paper", &(search.delta_star / paper.to_f64()), "", true),
    ];
    if search.no_sign_change {
        rows.push(ReportRow::note(exp, &dig, "search", "no sign change below d/n"));
    }
    let neg = clique::y_negativity(g, &corrected, &exact_probes)?;
    rows.push(ReportRow::new(
        exp,
        &dig,
        "max_y_at_corrected_delta",
        &neg.max_y,
        format!("< 0 over {} pairs", neg.pairs_checked),
        neg.all_negative(),
    ));
    Ok(Outcome {
        report: Report::new(rows),
        notes: vec![format!("corrected delta = {}", rational_string(&corrected))],
    })
}
