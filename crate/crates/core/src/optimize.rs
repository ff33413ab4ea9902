//! Solvers for the unbudgeted, L0 and L1 problems.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::calculus::{CalculusError, Sensitivity};
use crate::equilibrium::{self, EquilibriumError};
use crate::model::{BudgetNorm, BudgetSpec, ModelError, OpinionInstance, ResistanceVector};
use crate::scalar::Scalar;

/// Largest number of modifiable agents accepted by the enumerative solvers.
pub const ENUM_MAX_AGENTS: usize = 25;
/// Largest number of objective evaluations an enumerative solver may spend.
pub const ENUM_MAX_EVALS: usize = 2_000_000;
/// Largest number of modifiable agents accepted by the grid oracle.
pub const GRID_MAX_AGENTS: usize = 6;
/// Largest number of grid points per round.
pub const GRID_MAX_POINTS: usize = 1 << 25;
/// Relative slack for "strictly better" in floating point.
const FLOAT_IMPROVE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("refused: {what} is {got}, limit {limit}")]
    Guard {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("solver expects a {expected:?} budget, got {got:?}")]
    WrongNorm { expected: BudgetNorm, got: BudgetNorm },
    #[error("budget {0} is infeasible for this sweep")]
    InfeasibleSweep(f64),
    #[error("agents {0} and {1} must be distinct and modifiable")]
    BadPair(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LocalSearch,
    L0Enumeration,
    L1Concentrated,
    Grid,
    ProjectedDescent,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Self::LocalSearch => "local-search",
            Self::L0Enumeration => "l0-enum",
            Self::L1Concentrated => "l1-concentrated",
            Self::Grid => "grid",
            Self::ProjectedDescent => "projected-descent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Agents moved to an endpoint.
    Subset(Vec<usize>),
    /// Agents moved fully, plus one agent carrying the leftover budget.
    Concentrated {
        full: Vec<usize>,
        partial: Option<usize>,
    },
    LocalSearch { flips: usize },
    Grid {
        final_step: f64,
        rounds: usize,
        evaluated: usize,
    },
    /// Objective after each accepted step, starting point first.
    Trace(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<S> {
    pub alpha_star: ResistanceVector<S>,
    pub f_star: S,
    pub method: Method,
    pub certificate: Certificate,
    pub evaluations: usize,
}

impl<S: Scalar> OptimizationResult<S> {
    /// Recomputes feasibility and the objective independently.
    pub fn verify(&self, inst: &OpinionInstance<S>, budget: &BudgetSpec<S>, tol: f64) -> Result<bool, OptimizeError> {
        let alpha = self.alpha_star.alpha();
        let rv = ResistanceVector::new(alpha.to_vec(), inst.alpha_init())?;
        let f = equilibrium::objective(inst, alpha)?;
        Ok(inst.in_box(alpha)
            && budget.allows(&rv, tol)
            && rv.accounting_matches(inst.alpha_init())
            && f.approx_eq(&self.f_star, tol))
    }
}

/// `new` beats `old` strictly (exact, or by a relative margin for floats).
fn improves<S: Scalar>(new: &S, old: &S) -> bool {
    if S::EXACT {
        new < old
    } else {
        let (n, o) = (new.to_f64(), old.to_f64());
        n < o - FLOAT_IMPROVE * o.abs().max(1.0)
    }
}

fn finish<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: Vec<S>,
    f_star: S,
    method: Method,
    certificate: Certificate,
    evaluations: usize,
) -> Result<OptimizationResult<S>, OptimizeError> {
    Ok(OptimizationResult {
        alpha_star: ResistanceVector::new(alpha, inst.alpha_init())?,
        f_star,
        method,
        certificate,
        evaluations,
    })
}

fn guard(what: &'static str, got: usize, limit: usize) -> Result<(), OptimizeError> {
    if got > limit {
        Err(OptimizeError::Guard { what, got, limit })
    } else {
        Ok(())
    }
}

/// Endpoints of agent `i` other than its initial value, smaller first.
fn far_endpoints<S: Scalar>(inst: &OpinionInstance<S>, i: usize) -> Vec<S> {
    let b = &inst.bounds()[i];
    let init = &inst.alpha_init()[i];
    let mut out = Vec::with_capacity(2);
    if b.lower != *init {
        out.push(b.lower.clone());
    }
    if b.upper != *init && b.upper != b.lower {
        out.push(b.upper.clone());
    }
    out
}

/// Best objective over a stream of candidates; first one wins ties.
struct Incumbent<S> {
    best: Option<(S, Vec<S>, Certificate)>,
    evaluations: usize,
}

impl<S: Scalar> Incumbent<S> {
    fn new() -> Self {
        Self {
            best: None,
            evaluations: 0,
        }
    }

    fn offer(
        &mut self,
        inst: &OpinionInstance<S>,
        alpha: &[S],
        cert: impl FnOnce() -> Certificate,
    ) -> Result<(), OptimizeError> {
        guard("objective evaluations", self.evaluations + 1, ENUM_MAX_EVALS)?;
        self.evaluations += 1;
        let f = equilibrium::objective(inst, alpha)?;
        if self.best.as_ref().map_or(true, |(b, _, _)| improves(&f, b)) {
            self.best = Some((f, alpha.to_vec(), cert()));
        }
        Ok(())
    }

    fn into_result(self, inst: &OpinionInstance<S>, method: Method) -> Result<OptimizationResult<S>, OptimizeError> {
        let (f, alpha, cert) = self.best.expect("at least one candidate");
        finish(inst, alpha, f, method, cert, self.evaluations)
    }
}

/// Snap to endpoints, then steepest single-coordinate endpoint flips.
pub fn local_search_unbudgeted<S: Scalar>(inst: &OpinionInstance<S>) -> Result<OptimizationResult<S>, OptimizeError> {
    let mut alpha: Vec<S> = inst
        .alpha_init()
        .iter()
        .zip(inst.bounds())
        .map(|(a, b)| {
            let to_lower = a.clone() - &b.lower;
            let to_upper = b.upper.clone() - a;
            if to_lower <= to_upper {
                b.lower.clone()
            } else {
                b.upper.clone()
            }
        })
        .collect();
    let mut f = equilibrium::objective(inst, &alpha)?;
    let mut evaluations = 1;
    let mut flips = 0;
    let agents = inst.modifiable_agents();
    loop {
        let mut step: Option<(usize, S)> = None;
        for &i in &agents {
            let b = &inst.bounds()[i];
            let other = if alpha[i] == b.lower { b.upper.clone() } else { b.lower.clone() };
            let mut trial = alpha.clone();
            trial[i] = other;
            let ft = equilibrium::objective(inst, &trial)?;
            evaluations += 1;
            let reference = step.as_ref().map_or(&f, |(_, v)| v);
            if improves(&ft, reference) {
                step = Some((i, ft));
            }
        }
        let Some((i, ft)) = step else { break };
        let b = &inst.bounds()[i];
        alpha[i] = if alpha[i] == b.lower { b.upper.clone() } else { b.lower.clone() };
        f = ft;
        flips += 1;
    }
    finish(inst, alpha, f, Method::LocalSearch, Certificate::LocalSearch { flips }, evaluations)
}

/// Exact over all subsets of at most `k` modifiable agents, each moved to an
/// endpoint (all endpoint combinations enumerated).
pub fn solve_l0<S: Scalar>(inst: &OpinionInstance<S>, budget: &BudgetSpec<S>) -> Result<OptimizationResult<S>, OptimizeError> {
    expect_norm(budget, BudgetNorm::L0)?;
    let agents = inst.modifiable_agents();
    guard("modifiable agents", agents.len(), ENUM_MAX_AGENTS)?;
    let k = budget.k_count().min(agents.len());
    let mut inc = Incumbent::new();
    let mut alpha = inst.alpha_init().to_vec();
    let mut chosen = Vec::new();
    l0_dfs(inst, &agents, 0, k, &mut alpha, &mut chosen, &mut inc)?;
    inc.into_result(inst, Method::L0Enumeration)
}

fn l0_dfs<S: Scalar>(
    inst: &OpinionInstance<S>,
    agents: &[usize],
    start: usize,
    k: usize,
    alpha: &mut Vec<S>,
    chosen: &mut Vec<usize>,
    inc: &mut Incumbent<S>,
) -> Result<(), OptimizeError> {
    inc.offer(inst, alpha, || Certificate::Subset(chosen.clone()))?;
    if chosen.len() == k {
        return Ok(());
    }
    for idx in start..agents.len() {
        let i = agents[idx];
        for v in far_endpoints(inst, i) {
            alpha[i] = v;
            chosen.push(i);
            l0_dfs(inst, agents, idx + 1, k, alpha, chosen, inc)?;
            chosen.pop();
        }
        alpha[i] = inst.alpha_init()[i].clone();
    }
    Ok(())
}

fn expect_norm<S: Scalar>(budget: &BudgetSpec<S>, expected: BudgetNorm) -> Result<(), OptimizeError> {
    if budget.norm() != expected {
        return Err(OptimizeError::WrongNorm {
            expected,
            got: budget.norm(),
        });
    }
    Ok(())
}

/// Exact within the concentrated family: a set of agents moved fully to an
/// endpoint within the budget, plus at most one agent moved partially by the
/// leftover budget. For integer budgets on unit boxes this is the family of
/// `k` full moves; for fractional budgets it is a heuristic.
pub fn solve_l1_concentrated<S: Scalar>(
    inst: &OpinionInstance<S>,
    budget: &BudgetSpec<S>,
) -> Result<OptimizationResult<S>, OptimizeError> {
    expect_norm(budget, BudgetNorm::L1)?;
    let agents = inst.modifiable_agents();
    guard("modifiable agents", agents.len(), ENUM_MAX_AGENTS)?;
    let mut inc = Incumbent::new();
    let mut alpha = inst.alpha_init().to_vec();
    let mut chosen = Vec::new();
    l1_dfs(inst, &agents, 0, budget.k().clone(), &mut alpha, &mut chosen, &mut inc)?;
    inc.into_result(inst, Method::L1Concentrated)
}

fn l1_dfs<S: Scalar>(
    inst: &OpinionInstance<S>,
    agents: &[usize],
    start: usize,
    left: S,
    alpha: &mut Vec<S>,
    chosen: &mut Vec<usize>,
    inc: &mut Incumbent<S>,
) -> Result<(), OptimizeError> {
    inc.offer(inst, alpha, || Certificate::Concentrated {
        full: chosen.clone(),
        partial: None,
    })?;
    // One partial move by the whole leftover budget on an unused agent.
    if left.is_positive() {
        for &i in agents {
            if chosen.contains(&i) {
                continue;
            }
            let init = inst.alpha_init()[i].clone();
            for v in far_endpoints(inst, i) {
                let dist = (v.clone() - &init).abs();
                if left >= dist {
                    continue;
                }
                let moved = if v > init { init.clone() + &left } else { init.clone() - &left };
                alpha[i] = moved;
                inc.offer(inst, alpha, || Certificate::Concentrated {
                    full: chosen.clone(),
                    partial: Some(i),
                })?;
            }
            alpha[i] = init;
        }
    }
    for idx in start..agents.len() {
        let i = agents[idx];
        let init = inst.alpha_init()[i].clone();
        for v in far_endpoints(inst, i) {
            let cost = (v.clone() - &init).abs();
            if cost > left {
                continue;
            }
            alpha[i] = v;
            chosen.push(i);
            l1_dfs(inst, agents, idx + 1, left.clone() - cost, alpha, chosen, inc)?;
            chosen.pop();
        }
        alpha[i] = init;
    }
    Ok(())
}

/// Exhaustive search over a coarse grid of the feasible region, followed by
/// `refine_rounds` rounds of 4x finer search in a one-cell window around the
/// incumbent. Runs in `f64`; an oracle, not an exact solver.
pub fn solve_grid<S: Scalar>(
    inst: &OpinionInstance<S>,
    budget: &BudgetSpec<S>,
    base_step: f64,
    refine_rounds: usize,
) -> Result<OptimizationResult<f64>, OptimizeError> {
    let finst = inst.to_f64();
    let agents = finst.modifiable_agents();
    guard("modifiable agents", agents.len(), GRID_MAX_AGENTS)?;
    let fbudget = BudgetSpec::new(budget.norm(), budget.k().to_f64())?;
    let init = finst.alpha_init().to_vec();
    let axes: Vec<Vec<f64>> = agents
        .iter()
        .map(|&i| {
            let b = &finst.bounds()[i];
            let mut pts = Vec::new();
            let mut m = 0usize;
            loop {
                let v = b.lower + m as f64 * base_step;
                if v >= b.upper {
                    break;
                }
                pts.push(v);
                m += 1;
            }
            pts.push(b.upper);
            pts.push(init[i]);
            sort_dedup(pts)
        })
        .collect();
    let mut evaluated = 0;
    let mut best = grid_round(&finst, &fbudget, &agents, &axes, &mut evaluated)?;
    let mut step = base_step;
    for _ in 0..refine_rounds {
        let fine = step / 4.0;
        let axes: Vec<Vec<f64>> = agents
            .iter()
            .map(|&i| {
                let b = &finst.bounds()[i];
                let centre = best.1[i];
                let mut pts: Vec<f64> = (-4i32..=4)
                    .map(|m| centre + m as f64 * fine)
                    .filter(|v| *v >= b.lower && *v <= b.upper)
                    .collect();
                pts.push(centre);
                pts.push(init[i]);
                sort_dedup(pts)
            })
            .collect();
        let cand = grid_round(&finst, &fbudget, &agents, &axes, &mut evaluated)?;
        if improves(&cand.0, &best.0) {
            best = cand;
        }
        step = fine;
    }
    finish(
        &finst,
        best.1,
        best.0,
        Method::Grid,
        Certificate::Grid {
            final_step: step,
            rounds: refine_rounds,
            evaluated,
        },
        evaluated,
    )
}

fn sort_dedup(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.dedup();
    v
}

fn grid_round(
    inst: &OpinionInstance<f64>,
    budget: &BudgetSpec<f64>,
    agents: &[usize],
    axes: &[Vec<f64>],
    evaluated: &mut usize,
) -> Result<(f64, Vec<f64>), OptimizeError> {
    let points: usize = axes.iter().map(Vec::len).try_fold(1usize, |acc, l| acc.checked_mul(l)).unwrap_or(usize::MAX);
    guard("grid points per round", points, GRID_MAX_POINTS)?;
    let mut alpha = inst.alpha_init().to_vec();
    let mut best: Option<(f64, Vec<f64>)> = None;
    grid_dfs(inst, budget, agents, axes, 0, 0.0, 0, &mut alpha, &mut best, evaluated)?;
    Ok(best.expect("initial point is feasible"))
}

#[allow(clippy::too_many_arguments)]
fn grid_dfs(
    inst: &OpinionInstance<f64>,
    budget: &BudgetSpec<f64>,
    agents: &[usize],
    axes: &[Vec<f64>],
    slot: usize,
    l1: f64,
    l0: usize,
    alpha: &mut Vec<f64>,
    best: &mut Option<(f64, Vec<f64>)>,
    evaluated: &mut usize,
) -> Result<(), OptimizeError> {
    if slot == agents.len() {
        *evaluated += 1;
        let f = equilibrium::objective(inst, alpha)?;
        if best.as_ref().map_or(true, |(b, _)| improves(&f, b)) {
            *best = Some((f, alpha.clone()));
        }
        return Ok(());
    }
    let i = agents[slot];
    let init = inst.alpha_init()[i];
    for &v in &axes[slot] {
        let moved = v != init;
        let (nl1, nl0) = (l1 + (v - init).abs(), l0 + moved as usize);
        let feasible = match budget.norm() {
            BudgetNorm::Unbudgeted => true,
            BudgetNorm::L0 => nl0 <= budget.k_count(),
            BudgetNorm::L1 => nl1 <= budget.k() + 1e-12,
        };
        if !feasible {
            continue;
        }
        alpha[i] = v;
        grid_dfs(inst, budget, agents, axes, slot + 1, nl1, nl0, alpha, best, evaluated)?;
    }
    alpha[i] = init;
    Ok(())
}

/// L1 grid oracle; defaults to a 1/4 base grid refined twice (step 1/64).
pub fn solve_l1_grid<S: Scalar>(
    inst: &OpinionInstance<S>,
    budget: &BudgetSpec<S>,
    base_step: f64,
    refine_rounds: usize,
) -> Result<OptimizationResult<f64>, OptimizeError> {
    expect_norm(budget, BudgetNorm::L1)?;
    solve_grid(inst, budget, base_step, refine_rounds)
}

pub const GRID_BASE_STEP: f64 = 0.25;
pub const GRID_REFINE_ROUNDS: usize = 2;

/// Euclidean projection of `y` onto `{x : l <= x <= u, |x - c|_1 <= k}`.
///
/// Soft-thresholds `y - c` by `lambda`, clips to the box, and bisects on
/// `lambda` until the L1 constraint is tight.
pub fn project_l1_box(y: &[f64], centre: &[f64], lower: &[f64], upper: &[f64], k: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> {
        (0..y.len())
            .map(|i| {
                let d = y[i] - centre[i];
                let shrunk = d.signum() * (d.abs() - lambda).max(0.0);
                (centre[i] + shrunk).clamp(lower[i], upper[i])
            })
            .collect()
    };
    let l1 = |x: &[f64]| x.iter().zip(centre).map(|(a, c)| (a - c).abs()).sum::<f64>();
    let clipped = at(0.0);
    if l1(&clipped) <= k {
        return clipped;
    }
    let mut lo = 0.0;
    let mut hi = y.iter().zip(centre).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if l1(&at(mid)) > k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub steps: usize,
    pub step_size: f64,
    pub max_halvings: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            step_size: 0.5,
            max_halvings: 30,
        }
    }
}

/// Start point that spends budget `k / 2^(r+1)` on the `r`-th modifiable
/// agent in the descent direction, breaking the symmetry of the initial
/// point.
pub fn focus_biased_start(inst: &OpinionInstance<f64>, k: f64) -> Result<Vec<f64>, OptimizeError> {
    let init = inst.alpha_init().to_vec();
    let sens = Sensitivity::new(inst, &init)?;
    let grad = sens.gradient_extended_all();
    let mut alpha = init.clone();
    for (rank, &i) in inst.modifiable_agents().iter().enumerate() {
        let b = &inst.bounds()[i];
        let share = k / Scalar::pow(&2.0f64, rank as u32 + 1);
        let dir = if grad[i] < 0.0 { 1.0 } else { -1.0 };
        alpha[i] = (init[i] + dir * share).clamp(b.lower, b.upper);
    }
    Ok(alpha)
}

/// Projected gradient descent with backtracking; `f64` only. The trace is
/// nonincreasing by construction.
pub fn solve_l1_projected_descent(
    inst: &OpinionInstance<f64>,
    budget: &BudgetSpec<f64>,
    cfg: DescentConfig,
    start: Option<Vec<f64>>,
) -> Result<OptimizationResult<f64>, OptimizeError> {
    expect_norm(budget, BudgetNorm::L1)?;
    let k = *budget.k();
    let n = inst.agents();
    let centre = inst.alpha_init().to_vec();
    let lower: Vec<f64> = inst.bounds().iter().map(|b| b.lower).collect();
    let upper: Vec<f64> = inst.bounds().iter().map(|b| b.upper).collect();
    let start = match start {
        Some(s) => s,
        None => focus_biased_start(inst, k)?,
    };
    let mut alpha = project_l1_box(&start, &centre, &lower, &upper, k);
    let mut f = equilibrium::objective(inst, &alpha)?;
    let mut evaluations = 1;
    let mut trace = vec![f];
    for _ in 0..cfg.steps {
        let grad = Sensitivity::new(inst, &alpha)?.gradient_extended_all();
        let mut eta = cfg.step_size;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let y: Vec<f64> = (0..n).map(|i| alpha[i] - eta * grad[i]).collect();
            let cand = project_l1_box(&y, &centre, &lower, &upper, k);
            let fc = equilibrium::objective(inst, &cand)?;
            evaluations += 1;
            if fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        let moved = crate::matrix::max_abs_diff(&cand, &alpha);
        alpha = cand;
        f = fc;
        trace.push(f);
        if moved <= 1e-15 {
            break;
        }
    }
    finish(inst, alpha, f, Method::ProjectedDescent, Certificate::Trace(trace), evaluations)
}

/// Objective along `alpha_i = t`, `alpha_j = b - t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusCurve<S> {
    pub points: Vec<(S, S)>,
    pub argmin: usize,
}

impl<S> FocusCurve<S> {
    /// Minimum at an end of the segment (budget concentrated).
    pub fn focus_wins(&self) -> bool {
        self.argmin == 0 || self.argmin + 1 == self.points.len()
    }
}

pub fn focus_vs_spread<S: Scalar>(
    inst: &OpinionInstance<S>,
    base: &[S],
    (i, j): (usize, usize),
    b: &S,
    samples: usize,
) -> Result<FocusCurve<S>, OptimizeError> {
    let n = inst.agents();
    if i == j || i >= n || j >= n {
        return Err(OptimizeError::BadPair(i, j));
    }
    inst.check_alpha(base)?;
    let (bi, bj) = (&inst.bounds()[i], &inst.bounds()[j]);
    let lo = if bi.lower > b.clone() - &bj.upper { bi.lower.clone() } else { b.clone() - &bj.upper };
    let hi = if bi.upper < b.clone() - &bj.lower { bi.upper.clone() } else { b.clone() - &bj.lower };
    if lo > hi {
        return Err(OptimizeError::InfeasibleSweep(b.to_f64()));
    }
    let samples = samples.max(2);
    let mut points = Vec::with_capacity(samples);
    let mut alpha = base.to_vec();
    for m in 0..samples {
        let t = lo.clone() + (hi.clone() - &lo) * S::from_ratio(m as i64, (samples - 1) as i64);
        alpha[i] = t.clone();
        alpha[j] = b.clone() - &t;
        points.push((t, equilibrium::objective(inst, &alpha)?));
    }
    let mut argmin = 0;
    for (m, (_, f)) in points.iter().enumerate() {
        if improves(f, &points[argmin].1) {
            argmin = m;
        }
    }
    Ok(FocusCurve { points, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clique::{clique_instance, mixed_instance, seeded_instance};
    use crate::graph::RegularGraph;
    use crate::matrix::Matrix;
    use crate::model::InteractionMatrix;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn l0_triangle() -> OpinionInstance<Rational> {
        let g = RegularGraph::triangle();
        let m = Matrix::from_fn(4, 4, |i, j| {
            if i == 0 {
                if j == 0 { q(0, 1) } else { q(1, 3) }
            } else if j == 0 || g.has_edge(i, j) {
                q(1, 3)
            } else {
                q(0, 1)
            }
        });
        seeded_instance(InteractionMatrix::new(m).unwrap()).unwrap()
    }

    fn exhaustive_endpoints(inst: &OpinionInstance<Rational>) -> Rational {
        let agents = inst.modifiable_agents();
        let mut best: Option<Rational> = None;
        for mask in 0..(1u32 << agents.len()) {
            let mut a = inst.alpha_init().to_vec();
            for (b, &i) in agents.iter().enumerate() {
                let bd = &inst.bounds()[i];
                a[i] = if mask >> b & 1 == 1 { bd.upper.clone() } else { bd.lower.clone() };
            }
            let f = equilibrium::objective(inst, &a).unwrap();
            if best.as_ref().map_or(true, |b| f < *b) {
                best = Some(f);
            }
        }
        best.unwrap()
    }

    #[test]
    fn local_search_matches_exhaustive() {
        for inst in [clique_instance::<Rational>(2).unwrap(), l0_triangle()] {
            let r = local_search_unbudgeted(&inst).unwrap();
            assert_eq!(r.f_star, exhaustive_endpoints(&inst));
            assert!(r.verify(&inst, &BudgetSpec::unbudgeted(), 0.0).unwrap());
        }
        let r = local_search_unbudgeted(&clique_instance::<Rational>(2).unwrap()).unwrap();
        assert_eq!(r.f_star, q(1, 1));
    }

    #[test]
    fn local_search_constant_objective_stops_immediately() {
        let inst = clique_instance::<Rational>(3).unwrap();
        let inst = OpinionInstance::new(
            vec![q(1, 2); 4],
            inst.bounds().to_vec(),
            inst.alpha_init().to_vec(),
            inst.interaction().clone(),
        )
        .unwrap();
        let r = local_search_unbudgeted(&inst).unwrap();
        assert_eq!(r.certificate, Certificate::LocalSearch { flips: 0 });
        assert_eq!(r.f_star, q(2, 1));
    }

    #[test]
    fn l0_triangle_values() {
        let inst = l0_triangle();
        let r2 = solve_l0(&inst, &BudgetSpec::l0(2)).unwrap();
        assert_eq!(r2.f_star, q(4, 3));
        assert_eq!(r2.certificate, Certificate::Subset(vec![1, 2]));
        let r1 = solve_l0(&inst, &BudgetSpec::l0(1)).unwrap();
        assert_eq!(r1.f_star, q(2, 1));
        let r0 = solve_l0(&inst, &BudgetSpec::l0(0)).unwrap();
        assert_eq!(r0.alpha_star.alpha(), inst.alpha_init());
        assert!(r2.verify(&inst, &BudgetSpec::l0(2), 0.0).unwrap());
    }

    #[test]
    fn l1_concentrated_on_gadget() {
        let g = RegularGraph::triangle();
        let delta = crate::clique::delta_formula(3, 2, crate::clique::DeltaVariant::Corrected).unwrap();
        let inst = mixed_instance(&g, &delta).unwrap();
        let r = solve_l1_concentrated(&inst, &BudgetSpec::l1(q(2, 1)).unwrap()).unwrap();
        let theta = q(1, 1) + (q(1, 1) - &delta) / q(3, 1);
        assert_eq!(r.f_star, theta);
        let half = solve_l1_concentrated(&inst, &BudgetSpec::l1(q(3, 2)).unwrap()).unwrap();
        assert!(matches!(
            half.certificate,
            Certificate::Concentrated { ref full, partial: Some(_) } if full.len() == 1
        ));
        let grid = solve_l1_grid(&inst, &BudgetSpec::l1(q(3, 2)).unwrap(), GRID_BASE_STEP, GRID_REFINE_ROUNDS).unwrap();
        assert!(half.f_star.to_f64() <= grid.f_star + 1e-12);
        let zero = solve_l1_concentrated(&inst, &BudgetSpec::l1(q(0, 1)).unwrap()).unwrap();
        assert_eq!(zero.alpha_star.alpha(), inst.alpha_init());
    }

    #[test]
    fn grid_with_slack_budget_matches_local_search() {
        let inst = l0_triangle();
        let grid = solve_l1_grid(&inst, &BudgetSpec::l1(q(3, 1)).unwrap(), 0.5, 1).unwrap();
        let ls = local_search_unbudgeted(&inst).unwrap();
        assert!((grid.f_star - ls.f_star.to_f64()).abs() < 1e-12);
    }

    #[test]
    fn grid_guard_refuses_large_instances() {
        let inst = clique_instance::<Rational>(7).unwrap();
        assert!(matches!(
            solve_l1_grid(&inst, &BudgetSpec::l1(q(1, 1)).unwrap(), 0.25, 0),
            Err(OptimizeError::Guard { .. })
        ));
    }

    #[test]
    fn projection_properties() {
        let c = [1.0, 0.0, 0.0, 0.0];
        let lo = [1.0, 0.0, 0.0, 0.0];
        let hi = [1.0; 4];
        let feasible = [1.0, 0.5, 0.25, 0.0];
        assert_eq!(project_l1_box(&feasible, &c, &lo, &hi, 1.0), feasible.to_vec());
        let p = project_l1_box(&[2.0, 0.9, 0.8, -0.3], &c, &lo, &hi, 1.0);
        let used: f64 = p.iter().zip(&c).map(|(a, b)| (a - b).abs()).sum();
        assert!(used <= 1.0 + 1e-12);
        assert_eq!(project_l1_box(&p, &c, &lo, &hi, 1.0), p);
    }

    #[test]
    fn descent_reaches_concentrated_optimum() {
        let g = RegularGraph::triangle();
        let delta = crate::clique::delta_formula(3, 2, crate::clique::DeltaVariant::Corrected).unwrap();
        let inst = mixed_instance(&g, &delta).unwrap();
        let budget = BudgetSpec::l1(q(2, 1)).unwrap();
        let exact = solve_l1_concentrated(&inst, &budget).unwrap();
        let finst = inst.to_f64();
        let fb = BudgetSpec::l1(2.0).unwrap();
        let r = solve_l1_projected_descent(&finst, &fb, DescentConfig::default(), None).unwrap();
        assert!((r.f_star - exact.f_star.to_f64()).abs() <= 1e-6, "{} vs {}", r.f_star, exact.f_star.to_f64());
        let Certificate::Trace(trace) = &r.certificate else { panic!() };
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        let stall = solve_l1_projected_descent(&finst, &fb, DescentConfig::default(), Some(exact.alpha_star.alpha().iter().map(Scalar::to_f64).collect())).unwrap();
        assert!((stall.f_star - exact.f_star.to_f64()).abs() <= 1e-12);
    }

    #[test]
    fn focus_beats_spread_on_small_clique() {
        let inst = clique_instance::<Rational>(2).unwrap();
        let curve = focus_vs_spread(&inst, inst.alpha_init(), (1, 2), &q(1, 1), 5).unwrap();
        assert_eq!(curve.points[4], (q(1, 1), q(3, 2)));
        assert_eq!(curve.points[2], (q(1, 2), q(5, 3)));
        assert!(curve.focus_wins());
        for m in 0..5 {
            assert_eq!(curve.points[m].1, curve.points[4 - m].1);
        }
        assert!(focus_vs_spread(&inst, inst.alpha_init(), (1, 2), &q(3, 1), 5).is_err());
    }
}
