//! Problem instances, budgets, and the special interaction matrices.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::graph::{first_unreachable, GraphError, RegularGraph};
use crate::matrix::{LinalgError, Matrix};
use crate::scalar::Scalar;

/// Float tolerance for row sums of an interaction matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("interaction matrix must be square and nonempty ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("{what} has length {got}, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("clique matrix needs n >= 2 (got {0})")]
    CliqueTooSmall(usize),
    #[error("mixing weight must lie in [0, 1]")]
    DeltaOutOfRange,
    #[error("matrix shapes differ ({0} vs {1})")]
    ShapeMismatch(usize, usize),
    #[error("row {0} is not stochastic")]
    NotStochastic(usize),
    #[error("budget must be nonnegative")]
    NegativeBudget,
    #[error("L0 budget must be an integer")]
    FractionalL0Budget,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A square matrix of nonnegative influence weights, one row per agent.
///
/// Construction only checks the shape; [`validate_instance`] reports semantic
/// violations so that malformed inputs can still be diagnosed.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix<S> {
    matrix: Matrix<S>,
}

impl<S: Scalar> InteractionMatrix<S> {
    pub fn new(matrix: Matrix<S>) -> Result<Self, ModelError> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(ModelError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self, ModelError> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn agents(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> &S {
        &self.matrix[(i, j)]
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.matrix.iter().all(|v| !v.is_negative())
            && self
                .matrix
                .row_sums()
                .iter()
                .all(|s| s.approx_eq(&S::one(), tol))
    }

    /// Support digraph strongly connected.
    pub fn is_irreducible(&self) -> bool {
        first_unreachable(self.agents(), |i, j| !self.matrix[(i, j)].is_zero()).is_none()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> InteractionMatrix<T> {
        InteractionMatrix {
            matrix: self.matrix.map(f),
        }
    }

    pub fn to_f64(&self) -> InteractionMatrix<f64> {
        self.map(Scalar::to_f64)
    }
}

/// Allowed resistance interval `[lower, upper]` of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<S> {
    pub lower: S,
    pub upper: S,
}

impl<S: Scalar> Bounds<S> {
    pub fn new(lower: S, upper: S) -> Self {
        Self { lower, upper }
    }

    pub fn fixed(v: S) -> Self {
        Self {
            lower: v.clone(),
            upper: v,
        }
    }

    pub fn contains(&self, v: &S) -> bool {
        &self.lower <= v && v <= &self.upper
    }

    pub fn clamp(&self, v: S) -> S {
        if v < self.lower {
            self.lower.clone()
        } else if v > self.upper {
            self.upper.clone()
        } else {
            v
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpinionInstance<S> {
    innate: Vec<S>,
    bounds: Vec<Bounds<S>>,
    alpha_init: Vec<S>,
    interaction: InteractionMatrix<S>,
}

impl<S: Scalar> OpinionInstance<S> {
    pub fn new(
        innate: Vec<S>,
        bounds: Vec<Bounds<S>>,
        alpha_init: Vec<S>,
        interaction: InteractionMatrix<S>,
    ) -> Result<Self, ModelError> {
        let n = interaction.agents();
        for (what, got) in [
            ("innate", innate.len()),
            ("bounds", bounds.len()),
            ("alpha_init", alpha_init.len()),
        ] {
            if got != n {
                return Err(ModelError::Length {
                    what,
                    expected: n,
                    got,
                });
            }
        }
        Ok(Self {
            innate,
            bounds,
            alpha_init,
            interaction,
        })
    }

    pub fn agents(&self) -> usize {
        self.innate.len()
    }

    pub fn innate(&self) -> &[S] {
        &self.innate
    }

    pub fn bounds(&self) -> &[Bounds<S>] {
        &self.bounds
    }

    pub fn alpha_init(&self) -> &[S] {
        &self.alpha_init
    }

    pub fn interaction(&self) -> &InteractionMatrix<S> {
        &self.interaction
    }

    /// Agents whose interval is not a single point.
    pub fn modifiable_agents(&self) -> Vec<usize> {
        (0..self.agents())
            .filter(|&i| !self.bounds[i].is_degenerate())
            .collect()
    }

    pub fn check_alpha(&self, alpha: &[S]) -> Result<(), ModelError> {
        if alpha.len() != self.agents() {
            return Err(ModelError::Length {
                what: "alpha",
                expected: self.agents(),
                got: alpha.len(),
            });
        }
        Ok(())
    }

    pub fn in_box(&self, alpha: &[S]) -> bool {
        alpha.len() == self.agents() && alpha.iter().zip(&self.bounds).all(|(a, b)| b.contains(a))
    }

    pub fn with_interaction(&self, interaction: InteractionMatrix<S>) -> Result<Self, ModelError> {
        Self::new(
            self.innate.clone(),
            self.bounds.clone(),
            self.alpha_init.clone(),
            interaction,
        )
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> OpinionInstance<T> {
        OpinionInstance {
            innate: self.innate.iter().map(&f).collect(),
            bounds: self
                .bounds
                .iter()
                .map(|b| Bounds::new(f(&b.lower), f(&b.upper)))
                .collect(),
            alpha_init: self.alpha_init.iter().map(&f).collect(),
            interaction: self.interaction.map(&f),
        }
    }

    pub fn to_f64(&self) -> OpinionInstance<f64> {
        self.map(Scalar::to_f64)
    }
}

/// A single violated instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeEntry { row: usize, col: usize },
    RowNotStochastic { row: usize, sum: f64 },
    InnateOutOfRange { agent: usize },
    BoundsInvalid { agent: usize },
    InitialOutOfBounds { agent: usize },
    NoPositiveLowerBound,
    Reducible { agent: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegativeEntry { row, col } => write!(f, "negative entry at ({row}, {col})"),
            Self::RowNotStochastic { row, sum } => {
                write!(f, "row not stochastic: row {row} sums to {sum}")
            }
            Self::InnateOutOfRange { agent } => write!(f, "innate opinion of agent {agent} outside [0, 1]"),
            Self::BoundsInvalid { agent } => {
                write!(f, "bounds of agent {agent} violate 0 <= l <= u <= 1")
            }
            Self::InitialOutOfBounds { agent } => {
                write!(f, "initial resistance of agent {agent} outside its bounds")
            }
            Self::NoPositiveLowerBound => write!(f, "no agent has a positive lower bound"),
            Self::Reducible { agent } => {
                write!(f, "interaction matrix reducible: agent {agent} not strongly connected to agent 0")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| alloc::format!("{v}")).collect()
    }
}

/// Reports every violated precondition. Never fails.
///
/// Row sums are compared exactly for the rational backend and within `tol`
/// for floats (see [`ROW_SUM_TOL`]).
pub fn validate_instance<S: Scalar>(inst: &OpinionInstance<S>, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let p = inst.interaction().matrix();
    let n = inst.agents();
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)].is_negative() {
                violations.push(Violation::NegativeEntry { row: i, col: j });
            }
        }
    }
    for (row, sum) in p.row_sums().iter().enumerate() {
        if !sum.approx_eq(&S::one(), tol) {
            violations.push(Violation::RowNotStochastic {
                row,
                sum: sum.to_f64(),
            });
        }
    }
    let unit = |v: &S| !v.is_negative() && *v <= S::one();
    for agent in 0..n {
        if !unit(&inst.innate()[agent]) {
            violations.push(Violation::InnateOutOfRange { agent });
        }
        let b = &inst.bounds()[agent];
        if !(unit(&b.lower) && unit(&b.upper) && b.lower <= b.upper) {
            violations.push(Violation::BoundsInvalid { agent });
        } else if !b.contains(&inst.alpha_init()[agent]) {
            violations.push(Violation::InitialOutOfBounds { agent });
        }
    }
    if !inst.bounds().iter().any(|b| b.lower.is_positive()) {
        violations.push(Violation::NoPositiveLowerBound);
    }
    if let Some(agent) = first_unreachable(n, |i, j| !p[(i, j)].is_zero()) {
        violations.push(Violation::Reducible { agent });
    }
    ValidationReport { violations }
}

/// Uniform clique on `n + 1` agents: zero diagonal, `1/n` elsewhere.
pub fn build_clique_matrix<S: Scalar>(n: usize) -> Result<InteractionMatrix<S>, ModelError> {
    if n < 2 {
        return Err(ModelError::CliqueTooSmall(n));
    }
    let w = S::from_ratio(1, n as i64);
    InteractionMatrix::new(Matrix::from_fn(n + 1, n + 1, |i, j| {
        if i == j {
            S::zero()
        } else {
            w.clone()
        }
    }))
}

/// Normalized adjacency of a `d`-regular graph plus the isolated agent 0
/// (`R[0][0] = 1`).
pub fn build_regular_matrix<S: Scalar>(
    edges: &[(usize, usize)],
    n: usize,
    d: usize,
) -> Result<InteractionMatrix<S>, ModelError> {
    let graph = RegularGraph::new(n, d, edges)?;
    Ok(regular_matrix(&graph))
}

pub fn regular_matrix<S: Scalar>(graph: &RegularGraph) -> InteractionMatrix<S> {
    let n = graph.n();
    let w = S::from_ratio(1, graph.degree() as i64);
    let m = Matrix::from_fn(n + 1, n + 1, |i, j| {
        if i == 0 || j == 0 {
            if i == j {
                S::one()
            } else {
                S::zero()
            }
        } else if graph.has_edge(i, j) {
            w.clone()
        } else {
            S::zero()
        }
    });
    InteractionMatrix { matrix: m }
}

/// `(1 - delta) C + delta R`.
pub fn mix_matrices<S: Scalar>(
    c: &InteractionMatrix<S>,
    r: &InteractionMatrix<S>,
    delta: &S,
) -> Result<InteractionMatrix<S>, ModelError> {
    if c.agents() != r.agents() {
        return Err(ModelError::ShapeMismatch(c.agents(), r.agents()));
    }
    if delta.is_negative() || *delta > S::one() {
        return Err(ModelError::DeltaOutOfRange);
    }
    for m in [c, r] {
        let sums = m.matrix().row_sums();
        if let Some(row) = sums.iter().position(|s| !s.approx_eq(&S::one(), ROW_SUM_TOL)) {
            return Err(ModelError::NotStochastic(row));
        }
    }
    let keep = S::one() - delta;
    let n = c.agents();
    let mixed = Matrix::from_fn(n, n, |i, j| {
        keep.clone() * c.entry(i, j) + delta.clone() * r.entry(i, j)
    });
    InteractionMatrix::new(mixed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetNorm {
    Unbudgeted,
    L0,
    L1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSpec<S> {
    norm: BudgetNorm,
    k: S,
}

impl<S: Scalar> BudgetSpec<S> {
    pub fn unbudgeted() -> Self {
        Self {
            norm: BudgetNorm::Unbudgeted,
            k: S::zero(),
        }
    }

    pub fn l0(k: usize) -> Self {
        Self {
            norm: BudgetNorm::L0,
            k: S::from_usize(k),
        }
    }

    pub fn l1(k: S) -> Result<Self, ModelError> {
        Self::new(BudgetNorm::L1, k)
    }

    pub fn new(norm: BudgetNorm, k: S) -> Result<Self, ModelError> {
        if k.is_negative() {
            return Err(ModelError::NegativeBudget);
        }
        if norm == BudgetNorm::L0 {
            let r = k.to_f64() as i64;
            if S::from_int(r) != k {
                return Err(ModelError::FractionalL0Budget);
            }
        }
        Ok(Self { norm, k })
    }

    pub fn norm(&self) -> BudgetNorm {
        self.norm
    }

    pub fn k(&self) -> &S {
        &self.k
    }

    /// L0 budget as a count.
    pub fn k_count(&self) -> usize {
        self.k.to_f64() as usize
    }

    /// `tol` only applies to the float L1 comparison.
    pub fn allows(&self, rv: &ResistanceVector<S>, tol: f64) -> bool {
        match self.norm {
            BudgetNorm::Unbudgeted => true,
            BudgetNorm::L0 => rv.l0_used() <= self.k_count(),
            BudgetNorm::L1 => rv.l1_used().approx_le(&self.k, tol),
        }
    }
}

/// A resistance vector with its distance from the initial resistances.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceVector<S> {
    alpha: Vec<S>,
    l0_used: usize,
    l1_used: S,
}

impl<S: Scalar> ResistanceVector<S> {
    pub fn new(alpha: Vec<S>, alpha_init: &[S]) -> Result<Self, ModelError> {
        if alpha.len() != alpha_init.len() {
            return Err(ModelError::Length {
                what: "alpha",
                expected: alpha_init.len(),
                got: alpha.len(),
            });
        }
        let (l0_used, l1_used) = distances(&alpha, alpha_init);
        Ok(Self {
            alpha,
            l0_used,
            l1_used,
        })
    }

    pub fn alpha(&self) -> &[S] {
        &self.alpha
    }

    pub fn into_alpha(self) -> Vec<S> {
        self.alpha
    }

    pub fn l0_used(&self) -> usize {
        self.l0_used
    }

    pub fn l1_used(&self) -> &S {
        &self.l1_used
    }

    /// Recomputes both distances from scratch and compares.
    pub fn accounting_matches(&self, alpha_init: &[S]) -> bool {
        let (l0, l1) = distances(&self.alpha, alpha_init);
        l0 == self.l0_used && l1 == self.l1_used
    }
}

fn distances<S: Scalar>(alpha: &[S], alpha_init: &[S]) -> (usize, S) {
    let mut l0 = 0;
    let mut l1 = S::zero();
    for (a, b) in alpha.iter().zip(alpha_init) {
        if a != b {
            l0 += 1;
            l1 = l1 + (a.clone() - b).abs();
        }
    }
    (l0, l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use alloc::vec;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn clique_instance(n: usize) -> OpinionInstance<Rational> {
        let p = build_clique_matrix::<Rational>(n).unwrap();
        let mut innate = vec![q(0, 1); n + 1];
        innate[0] = q(1, 1);
        let mut alpha = vec![q(0, 1); n + 1];
        alpha[0] = q(1, 1);
        let mut bounds = vec![Bounds::new(q(0, 1), q(1, 1)); n + 1];
        bounds[0] = Bounds::fixed(q(1, 1));
        OpinionInstance::new(innate, bounds, alpha, p).unwrap()
    }

    #[test]
    fn clique_instance_is_valid() {
        let report = validate_instance(&clique_instance(3), ROW_SUM_TOL);
        assert!(report.is_valid(), "{:?}", report.messages());
    }

    #[test]
    fn substochastic_row_is_reported() {
        let p = InteractionMatrix::from_rows(vec![
            vec![0.0, 1.0],
            vec![0.9, 0.0],
        ])
        .unwrap();
        let inst = OpinionInstance::new(
            vec![1.0, 0.0],
            vec![Bounds::fixed(1.0), Bounds::new(0.0, 1.0)],
            vec![1.0, 0.0],
            p,
        )
        .unwrap();
        let report = validate_instance(&inst, ROW_SUM_TOL);
        assert_eq!(report.violations.len(), 1);
        assert!(report.messages()[0].contains("row not stochastic"));
    }

    #[test]
    fn block_diagonal_is_reducible() {
        let h = q(1, 2);
        let z = q(0, 1);
        let p = InteractionMatrix::from_rows(vec![
            vec![z.clone(), q(1, 1), z.clone(), z.clone()],
            vec![q(1, 1), z.clone(), z.clone(), z.clone()],
            vec![z.clone(), z.clone(), h.clone(), h.clone()],
            vec![z.clone(), z.clone(), h.clone(), h.clone()],
        ])
        .unwrap();
        let inst = OpinionInstance::new(
            vec![q(1, 1); 4],
            vec![Bounds::fixed(q(1, 2)); 4],
            vec![q(1, 2); 4],
            p,
        )
        .unwrap();
        let report = validate_instance(&inst, ROW_SUM_TOL);
        assert_eq!(report.violations, vec![Violation::Reducible { agent: 2 }]);
        assert!(report.messages()[0].contains("reducible"));
    }

    #[test]
    fn missing_positive_lower_bound_and_bad_bounds() {
        let p = InteractionMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let inst = OpinionInstance::new(
            vec![0.5, 1.5],
            vec![Bounds::new(0.0, 1.0), Bounds::new(0.6, 0.2)],
            vec![0.5, 0.5],
            p,
        )
        .unwrap();
        let v = validate_instance(&inst, ROW_SUM_TOL).violations;
        assert!(v.contains(&Violation::InnateOutOfRange { agent: 1 }));
        assert!(v.contains(&Violation::BoundsInvalid { agent: 1 }));
        assert!(!v.contains(&Violation::NoPositiveLowerBound));
    }

    #[test]
    fn clique_matrix_shapes() {
        let c2 = build_clique_matrix::<Rational>(2).unwrap();
        assert_eq!(c2.agents(), 3);
        assert_eq!(c2.entry(0, 1), &q(1, 2));
        assert_eq!(c2.entry(1, 1), &q(0, 1));
        let c10 = build_clique_matrix::<Rational>(10).unwrap();
        assert!(c10.matrix().row_sums().iter().all(|s| *s == q(1, 1)));
        assert_eq!(c10.matrix(), &c10.matrix().transpose());
        assert_eq!(
            build_clique_matrix::<Rational>(1),
            Err(ModelError::CliqueTooSmall(1))
        );
    }

    #[test]
    fn regular_matrix_rows() {
        let r = build_regular_matrix::<Rational>(&[(1, 2), (2, 3), (1, 3)], 3, 2).unwrap();
        assert_eq!(r.entry(0, 0), &q(1, 1));
        for i in 1..=3 {
            let halves = r.matrix().row(i).iter().filter(|v| **v == q(1, 2)).count();
            assert_eq!(halves, 2);
        }
        let single = build_regular_matrix::<Rational>(&[(1, 2)], 2, 1).unwrap();
        assert_eq!(single.entry(1, 2), &q(1, 1));
        assert_eq!(single.entry(2, 1), &q(1, 1));
        let err = build_regular_matrix::<Rational>(&[(1, 2), (2, 3)], 3, 2).unwrap_err();
        assert_eq!(alloc::format!("{err}"), "vertex 1 has degree 1 ≠ 2");
    }

    #[test]
    fn mixing_endpoints_and_exact_entry() {
        let g = RegularGraph::triangle();
        let c = build_clique_matrix::<Rational>(3).unwrap();
        let r = regular_matrix::<Rational>(&g);
        assert_eq!(mix_matrices(&c, &r, &q(0, 1)).unwrap(), c);
        assert_eq!(mix_matrices(&c, &r, &q(1, 1)).unwrap(), r);
        let delta = q(729, 1_000_000_000);
        let p = mix_matrices(&c, &r, &delta).unwrap();
        let expected = (q(1, 1) - &delta) / q(3, 1) + delta.clone() / q(2, 1);
        assert_eq!(p.entry(1, 2), &expected);
        assert!(p.matrix().row_sums().iter().all(|s| *s == q(1, 1)));
        assert_eq!(
            mix_matrices(&c, &r, &q(3, 2)),
            Err(ModelError::DeltaOutOfRange)
        );
        let small = build_clique_matrix::<Rational>(2).unwrap();
        assert!(matches!(
            mix_matrices(&small, &r, &delta),
            Err(ModelError::ShapeMismatch(3, 4))
        ));
    }

    #[test]
    fn budget_specs() {
        assert_eq!(
            BudgetSpec::new(BudgetNorm::L0, q(3, 2)),
            Err(ModelError::FractionalL0Budget)
        );
        assert_eq!(BudgetSpec::l1(q(-1, 2)), Err(ModelError::NegativeBudget));
        let b = BudgetSpec::l1(q(3, 2)).unwrap();
        let init = vec![q(1, 1), q(0, 1), q(0, 1)];
        let rv = ResistanceVector::new(vec![q(1, 1), q(1, 1), q(1, 2)], &init).unwrap();
        assert_eq!(rv.l0_used(), 2);
        assert_eq!(rv.l1_used(), &q(3, 2));
        assert!(b.allows(&rv, 0.0));
        assert!(!BudgetSpec::<Rational>::l0(1).allows(&rv, 0.0));
        assert!(rv.accounting_matches(&init));
    }
}
