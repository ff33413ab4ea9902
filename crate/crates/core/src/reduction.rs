//! Vertex-cover gadgets for the L0 and L1 problems and the decision pipeline.

use alloc::vec::Vec;

use thiserror::Error;

use crate::clique::{self, CliqueError, DeltaVariant};
use crate::equilibrium::{self, EquilibriumError};
use crate::graph::RegularGraph;
use crate::matrix::Matrix;
use crate::model::{BudgetSpec, InteractionMatrix, ModelError, OpinionInstance, ResistanceVector};
use crate::optimize::{self, OptimizationResult, OptimizeError};
use crate::scalar::{Rational, Scalar};

/// Largest graph accepted by [`vc_bruteforce`].
pub const VC_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("cover size k = {k} must satisfy 1 <= k <= n = {n}")]
    BadK { k: usize, n: usize },
    #[error("refused: brute-force vertex cover limited to n <= {max} (got {n})")]
    TooLarge { n: usize, max: usize },
    #[error("set has {size} vertices, budget allows {k}")]
    Oversize { size: usize, k: usize },
    #[error("vertex {0} is not in 1..={1}")]
    BadVertex(usize, usize),
    #[error("mixing weight must lie in [0, d/n) (d/n = {d}/{n})")]
    DeltaTooLarge { d: usize, n: usize },
    #[error(transparent)]
    Clique(#[from] CliqueError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexCoverInstance {
    graph: RegularGraph,
    k: usize,
}

impl VertexCoverInstance {
    pub fn new(graph: RegularGraph, k: usize) -> Result<Self, ReductionError> {
        if k == 0 || k > graph.n() {
            return Err(ReductionError::BadK { k, n: graph.n() });
        }
        Ok(Self { graph, k })
    }

    pub fn graph(&self) -> &RegularGraph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// A smallest vertex cover of size at most `k` (lexicographically first
/// among the smallest), or `None`.
pub fn vc_bruteforce(vc: &VertexCoverInstance) -> Result<Option<Vec<usize>>, ReductionError> {
    let g = &vc.graph;
    if g.n() > VC_MAX_N {
        return Err(ReductionError::TooLarge {
            n: g.n(),
            max: VC_MAX_N,
        });
    }
    for size in 0..=vc.k {
        let mut set = Vec::with_capacity(size);
        if let Some(c) = first_cover(g, 1, size, &mut set) {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

fn first_cover(g: &RegularGraph, start: usize, size: usize, set: &mut Vec<usize>) -> Option<Vec<usize>> {
    if set.len() == size {
        return g.is_vertex_cover(set).then(|| set.clone());
    }
    for v in start..=g.n() {
        set.push(v);
        if let Some(c) = first_cover(g, v + 1, size, set) {
            return Some(c);
        }
        set.pop();
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    L0,
    L1,
}

impl ReductionKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::L0 => "l0",
            Self::L1 => "l1",
        }
    }
}

/// How the L1 mixing weight is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaChoice {
    Formula(DeltaVariant),
    Explicit(Rational),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionArtifact {
    pub vc: VertexCoverInstance,
    pub instance: OpinionInstance<Rational>,
    pub kind: ReductionKind,
    pub delta: Option<Rational>,
    pub theta: Rational,
    pub gap: Rational,
    pub budget: BudgetSpec<Rational>,
}

fn q(v: usize) -> Rational {
    Rational::from_usize(v)
}

/// Agent `i` of `V` averages agent 0 and its neighbours with weight
/// `1/(d+1)`; agent 0 averages `V` uniformly.
pub fn build_l0_reduction(vc: &VertexCoverInstance) -> Result<ReductionArtifact, ReductionError> {
    let g = &vc.graph;
    let (n, d, k) = (g.n(), g.degree(), vc.k);
    let w = Rational::from_ratio(1, d as i64 + 1);
    let row0 = Rational::from_ratio(1, n as i64);
    let zero = Rational::zero();
    let p = Matrix::from_fn(n + 1, n + 1, |i, j| {
        if i == 0 {
            if j == 0 { zero.clone() } else { row0.clone() }
        } else if j == 0 || g.has_edge(i, j) {
            w.clone()
        } else {
            zero.clone()
        }
    });
    let instance = clique::seeded_instance(InteractionMatrix::new(p)?)?;
    Ok(ReductionArtifact {
        vc: vc.clone(),
        instance,
        kind: ReductionKind::L0,
        delta: None,
        theta: Rational::one() + q(n - k) / q(d + 1),
        gap: Rational::from_int(2) / q(d * (d + 1)),
        budget: BudgetSpec::l0(k),
    })
}

pub fn resolve_delta(vc: &VertexCoverInstance, choice: &DeltaChoice) -> Result<Rational, ReductionError> {
    let g = &vc.graph;
    match choice {
        DeltaChoice::Formula(v) => Ok(clique::delta_formula(g.n(), g.degree(), *v)?),
        DeltaChoice::Explicit(r) => Ok(r.clone()),
    }
}

/// `P = (1 - delta) C + delta R` with an L1 budget of `k`.
pub fn build_l1_reduction(vc: &VertexCoverInstance, choice: &DeltaChoice) -> Result<ReductionArtifact, ReductionError> {
    let g = &vc.graph;
    let (n, d, k) = (g.n(), g.degree(), vc.k);
    let delta = resolve_delta(vc, choice)?;
    if delta.is_negative() || delta >= Rational::from_ratio(d as i64, n as i64) {
        return Err(ReductionError::DeltaTooLarge { d, n });
    }
    let instance = clique::mixed_instance(g, &delta)?;
    let keep = Rational::one() - &delta;
    let theta = Rational::one() + keep.clone() * q(n - k) / (q(n) - keep * q((n - k).saturating_sub(1)));
    Ok(ReductionArtifact {
        vc: vc.clone(),
        instance,
        kind: ReductionKind::L1,
        gap: delta.clone() / q(d * n),
        delta: Some(delta),
        theta,
        budget: BudgetSpec::l1(q(k))?,
    })
}

/// Threshold between YES and NO answers: `theta + gap / 2`.
pub fn decision_threshold(a: &ReductionArtifact) -> Rational {
    a.theta.clone() + a.gap.clone() / Rational::from_int(2)
}

/// `alpha_i = 1` on `T`, initial values elsewhere.
pub fn cover_to_alpha(a: &ReductionArtifact, t: &[usize]) -> Result<ResistanceVector<Rational>, ReductionError> {
    let n = a.vc.graph.n();
    if t.len() > a.vc.k {
        return Err(ReductionError::Oversize {
            size: t.len(),
            k: a.vc.k,
        });
    }
    let mut alpha = a.instance.alpha_init().to_vec();
    for &v in t {
        if v == 0 || v > n {
            return Err(ReductionError::BadVertex(v, n));
        }
        alpha[v] = Rational::one();
    }
    Ok(ResistanceVector::new(alpha, a.instance.alpha_init())?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum YesCertificate {
    /// `T` is not a vertex cover; nothing to certify.
    Inapplicable,
    Checked { f: Rational, theta: Rational },
}

impl YesCertificate {
    pub fn passes(&self) -> bool {
        matches!(self, Self::Checked { f, theta } if f == theta)
    }
}

pub fn certify_yes(a: &ReductionArtifact, t: &[usize]) -> Result<YesCertificate, ReductionError> {
    if !a.vc.graph.is_vertex_cover(t) {
        return Ok(YesCertificate::Inapplicable);
    }
    let alpha = cover_to_alpha(a, t)?;
    let f = equilibrium::objective(&a.instance, alpha.alpha())?;
    Ok(YesCertificate::Checked {
        f,
        theta: a.theta.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
}

/// Grid-oracle cross-check of the L1 decision.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFinding {
    pub grid_f: f64,
    pub concentrated_f: f64,
    /// The grid found nothing below the concentrated optimum (up to 1e-12).
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub answer: Answer,
    pub artifact: ReductionArtifact,
    pub result: OptimizationResult<Rational>,
    pub bruteforce: Option<Vec<usize>>,
    pub grid: Option<GridFinding>,
}

impl Decision {
    /// Answer matches the brute-force vertex cover.
    pub fn agrees(&self) -> bool {
        (self.answer == Answer::Yes) == self.bruteforce.is_some()
    }

    /// YES: optimum equals `theta`. NO: optimum at least `theta + gap`.
    pub fn bound_holds(&self) -> bool {
        let a = &self.artifact;
        match self.answer {
            Answer::Yes => self.result.f_star == a.theta,
            Answer::No => self.result.f_star >= a.theta.clone() + &a.gap,
        }
    }
}

/// Builds the gadget, solves it exactly (L0 enumeration or the L1
/// concentrated family), and answers YES iff `f* <= theta + gap / 2`.
pub fn decide_vc(
    vc: &VertexCoverInstance,
    kind: ReductionKind,
    delta: &DeltaChoice,
    grid_check: bool,
) -> Result<Decision, ReductionError> {
    let artifact = match kind {
        ReductionKind::L0 => build_l0_reduction(vc)?,
        ReductionKind::L1 => build_l1_reduction(vc, delta)?,
    };
    let result = match kind {
        ReductionKind::L0 => optimize::solve_l0(&artifact.instance, &artifact.budget)?,
        ReductionKind::L1 => optimize::solve_l1_concentrated(&artifact.instance, &artifact.budget)?,
    };
    let grid = if grid_check && kind == ReductionKind::L1 && vc.graph.n() <= optimize::GRID_MAX_AGENTS {
        let g = optimize::solve_l1_grid(
            &artifact.instance,
            &artifact.budget,
            optimize::GRID_BASE_STEP,
            optimize::GRID_REFINE_ROUNDS,
        )?;
        let concentrated_f = result.f_star.to_f64();
        Some(GridFinding {
            grid_f: g.f_star,
            concentrated_f,
            agrees: g.f_star >= concentrated_f - 1e-12,
        })
    } else {
        None
    };
    let answer = if result.f_star <= decision_threshold(&artifact) {
        Answer::Yes
    } else {
        Answer::No
    };
    Ok(Decision {
        answer,
        bruteforce: vc_bruteforce(vc)?,
        artifact,
        result,
        grid,
    })
}

/// Measured quantities of the L1 NO-instance argument at `alpha = 1_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoChain {
    /// `(1 - delta) / (n - (1 - delta)(n - k - 1))`.
    pub gamma0: Rational,
    /// Smallest equilibrium opinion among agents of `V` outside `T`.
    pub min_free: Rational,
    /// Smallest equilibrium opinion on an endpoint of an uncovered edge.
    pub min_uncovered: Option<Rational>,
}

impl NoChain {
    pub fn holds(&self, delta: &Rational, d: usize) -> bool {
        let boosted = self.gamma0.clone() + delta.clone() * &self.gamma0 / q(d);
        self.min_free >= self.gamma0 && self.min_uncovered.as_ref().map_or(true, |u| *u >= boosted)
    }
}

pub fn l1_no_chain(a: &ReductionArtifact, t: &[usize]) -> Result<NoChain, ReductionError> {
    let g = &a.vc.graph;
    let (n, k) = (g.n(), a.vc.k);
    let delta = a.delta.clone().unwrap_or_else(Rational::zero);
    let keep = Rational::one() - &delta;
    let gamma0 = keep.clone() / (q(n) - keep * q((n - k).saturating_sub(1)));
    let alpha = cover_to_alpha(a, t)?;
    let z = equilibrium::solve_equilibrium(&a.instance, alpha.alpha())?.z;
    let free = (1..=n).filter(|v| !t.contains(v));
    let min_free = free.map(|v| z[v].clone()).min().unwrap_or_else(Rational::one);
    let min_uncovered = g
        .uncovered_edges(t)
        .iter()
        .flat_map(|&(u, v)| [z[u].clone(), z[v].clone()])
        .min();
    Ok(NoChain {
        gamma0,
        min_free,
        min_uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn triangle(k: usize) -> VertexCoverInstance {
        VertexCoverInstance::new(RegularGraph::triangle(), k).unwrap()
    }

    #[test]
    fn bruteforce_covers() {
        assert_eq!(vc_bruteforce(&triangle(2)).unwrap(), Some(vec![1, 2]));
        assert_eq!(vc_bruteforce(&triangle(1)).unwrap(), None);
        let k4 = VertexCoverInstance::new(RegularGraph::complete(4).unwrap(), 3).unwrap();
        assert_eq!(vc_bruteforce(&k4).unwrap(), Some(vec![1, 2, 3]));
        assert!(VertexCoverInstance::new(RegularGraph::triangle(), 0).is_err());
    }

    #[test]
    fn l0_thresholds() {
        let a2 = build_l0_reduction(&triangle(2)).unwrap();
        assert_eq!((a2.theta.clone(), a2.gap.clone()), (r(4, 3), r(1, 3)));
        let a1 = build_l0_reduction(&triangle(1)).unwrap();
        assert_eq!((a1.theta, a1.gap), (r(5, 3), r(1, 3)));
        let k4 = VertexCoverInstance::new(RegularGraph::complete(4).unwrap(), 3).unwrap();
        assert_eq!(build_l0_reduction(&k4).unwrap().theta, r(5, 4));
        let p = a2.instance.interaction();
        assert_eq!(p.entry(1, 0), &r(1, 3));
        assert_eq!(p.entry(0, 2), &r(1, 3));
        assert_eq!(p.entry(1, 1), &r(0, 1));
    }

    #[test]
    fn l1_thresholds() {
        let paper = build_l1_reduction(&triangle(2), &DeltaChoice::Formula(DeltaVariant::Paper)).unwrap();
        assert_eq!(paper.delta, Some(r(729, 1_000_000_000)));
        assert_eq!(paper.theta, r(4, 3) - r(243, 1_000_000_000));
        assert_eq!(paper.gap, r(729, 6_000_000_000));
        let corrected = build_l1_reduction(&triangle(2), &DeltaChoice::Formula(DeltaVariant::Corrected)).unwrap();
        assert_eq!(corrected.delta, Some(r(729, 64_000_000_000)));
        assert!(matches!(
            build_l1_reduction(&triangle(2), &DeltaChoice::Explicit(r(2, 3))),
            Err(ReductionError::DeltaTooLarge { .. })
        ));
    }

    #[test]
    fn yes_certificates() {
        for kind in [ReductionKind::L0, ReductionKind::L1] {
            let a = match kind {
                ReductionKind::L0 => build_l0_reduction(&triangle(2)).unwrap(),
                ReductionKind::L1 => {
                    build_l1_reduction(&triangle(2), &DeltaChoice::Formula(DeltaVariant::Corrected)).unwrap()
                }
            };
            assert!(certify_yes(&a, &[1, 2]).unwrap().passes());
            assert!(certify_yes(&a, &[1, 3]).unwrap().passes());
            assert_eq!(certify_yes(&a, &[1]).unwrap(), YesCertificate::Inapplicable);
            assert_eq!(cover_to_alpha(&a, &[]).unwrap().alpha(), a.instance.alpha_init());
            assert!(cover_to_alpha(&a, &[1, 2, 3]).is_err());
        }
    }

    #[test]
    fn decisions_on_triangle() {
        let yes = decide_vc(&triangle(2), ReductionKind::L0, &DeltaChoice::Formula(DeltaVariant::Corrected), false).unwrap();
        assert_eq!(yes.answer, Answer::Yes);
        assert_eq!(yes.result.f_star, r(4, 3));
        let no = decide_vc(&triangle(1), ReductionKind::L0, &DeltaChoice::Formula(DeltaVariant::Corrected), false).unwrap();
        assert_eq!(no.answer, Answer::No);
        assert_eq!(no.result.f_star, r(2, 1));
        assert!(no.bound_holds() && no.agrees());
        let l1 = decide_vc(&triangle(1), ReductionKind::L1, &DeltaChoice::Formula(DeltaVariant::Corrected), true).unwrap();
        assert_eq!(l1.answer, Answer::No);
        assert!(l1.bound_holds() && l1.agrees());
        assert!(l1.grid.unwrap().agrees);
    }

    #[test]
    fn no_chain_on_triangle() {
        let a = build_l1_reduction(&triangle(1), &DeltaChoice::Formula(DeltaVariant::Corrected)).unwrap();
        let delta = a.delta.clone().unwrap();
        for t in [[1], [2], [3]] {
            let chain = l1_no_chain(&a, &t).unwrap();
            assert!(chain.min_uncovered.is_some());
            assert!(chain.holds(&delta, 2), "{chain:?}");
        }
    }
}
