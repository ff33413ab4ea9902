//! Closed forms for the uniform clique, inverse perturbation bounds, and the
//! mixing weight used by the L1 gadget.

use alloc::vec::Vec;

use thiserror::Error;

use crate::calculus::{self, CalculusError};
use crate::equilibrium::{self, EquilibriumError, SystemMatrix};
use crate::graph::RegularGraph;
use crate::matrix::{self, LinalgError, Matrix};
use crate::model::{build_clique_matrix, mix_matrices, regular_matrix, Bounds, ModelError, OpinionInstance};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliqueError {
    #[error("resistance vector must have n + 1 = {expected} entries (got {got})")]
    Length { expected: usize, got: usize },
    #[error("agent 0 must have resistance 1")]
    AgentZeroNotStubborn,
    #[error("resistance of agent {0} outside [0, 1]")]
    OutOfRange(usize),
    #[error("pair ({0}, {1}) must be two distinct agents in 1..=n")]
    BadPair(usize, usize),
    #[error("mixing weight must lie in [0, d/n)")]
    DeltaTooLarge,
    #[error("no {d}-regular graph on {n} vertices (need n >= 2, 1 <= d < n, nd even)")]
    Infeasible { n: usize, d: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `M` for `P = C` via a rank-one update of the diagonal `D = A - (n+1) I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueClosedForm<S> {
    pub w: S,
    /// Diagonal of `D`.
    pub d: Vec<S>,
    pub m: Matrix<S>,
    /// `w / (1 + w)`.
    pub total_mass: S,
}

fn check_clique_alpha<S: Scalar>(alpha: &[S], n: usize) -> Result<(), CliqueError> {
    if n < 2 {
        return Err(ModelError::CliqueTooSmall(n).into());
    }
    if alpha.len() != n + 1 {
        return Err(CliqueError::Length {
            expected: n + 1,
            got: alpha.len(),
        });
    }
    if let Some(i) = alpha.iter().position(|a| a.is_negative() || *a > S::one()) {
        return Err(CliqueError::OutOfRange(i));
    }
    if alpha[0] != S::one() {
        return Err(CliqueError::AgentZeroNotStubborn);
    }
    Ok(())
}

fn clique_w<S: Scalar>(alpha: &[S], n: usize) -> (Vec<S>, S) {
    let shift = S::from_usize(n + 1);
    let d: Vec<S> = alpha.iter().map(|a| a.clone() - &shift).collect();
    let w = d.iter().fold(S::zero(), |acc, x| acc + x.recip());
    (d, w)
}

pub fn clique_closed_form<S: Scalar>(alpha: &[S], n: usize) -> Result<CliqueClosedForm<S>, CliqueError> {
    check_clique_alpha(alpha, n)?;
    let (d, w) = clique_w(alpha, n);
    let nn = S::from_usize(n);
    let one_w = S::one() + &w;
    let m = Matrix::from_fn(n + 1, n + 1, |a, b| {
        let mut v = (one_w.clone() * &d[b]).recip() + nn.clone() / (one_w.clone() * &d[a] * &d[b]);
        if a == b {
            v = v - nn.clone() / &d[a];
        }
        v
    });
    Ok(CliqueClosedForm {
        total_mass: w.clone() / one_w,
        w,
        d,
        m,
    })
}

/// `y_ij = (1 - alpha_j) / ((alpha_i - n - 1)(alpha_j - n - 1)(1 + w))`.
pub fn clique_yij<S: Scalar>(alpha: &[S], n: usize, i: usize, j: usize) -> Result<S, CliqueError> {
    check_clique_alpha(alpha, n)?;
    if i == j || i == 0 || j == 0 || i > n || j > n {
        return Err(CliqueError::BadPair(i, j));
    }
    let (d, w) = clique_w(alpha, n);
    Ok((S::one() - &alpha[j]) / (d[i].clone() * &d[j] * (S::one() + w)))
}

/// The clique instance with agent 0 stubborn at opinion 1 and all others at 0.
pub fn clique_instance<S: Scalar>(n: usize) -> Result<OpinionInstance<S>, CliqueError> {
    let p = build_clique_matrix(n)?;
    Ok(seeded_instance(p)?)
}

/// `s = alpha_init = e_0`, agent 0 fixed at 1, others free in `[0, 1]`.
pub fn seeded_instance<S: Scalar>(
    p: crate::model::InteractionMatrix<S>,
) -> Result<OpinionInstance<S>, ModelError> {
    let n = p.agents();
    let mut s = alloc::vec![S::zero(); n];
    s[0] = S::one();
    let mut bounds = alloc::vec![Bounds::new(S::zero(), S::one()); n];
    bounds[0] = Bounds::fixed(S::one());
    OpinionInstance::new(s.clone(), bounds, s, p)
}

/// Entrywise sandwich between two inverses.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCertificate<S> {
    pub epsilon: S,
    /// `(1 - eps)^n / (1 + eps)^(n-1)`.
    pub lower_factor: S,
    /// `(1 + eps)^n / (1 - eps)^(n-1)`.
    pub upper_factor: S,
    /// `|X_ij - X~_ij| <= eps |X_ij|` off the diagonal.
    pub offdiag_hypothesis: bool,
    /// `|X 1 - X~ 1| <= eps |X 1|` entrywise.
    pub rowsum_hypothesis: bool,
    /// Entries `(a, b)` where the sandwich fails.
    pub failures: Vec<(usize, usize)>,
    pub entries_checked: usize,
}

impl<S> PerturbationCertificate<S> {
    pub fn applicable(&self) -> bool {
        self.offdiag_hypothesis && self.rowsum_hypothesis
    }

    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Measures the sandwich for `X1^{-1}` around `X0^{-1}` with exponent
/// `n = dim`. The hypothesis is checked and reported; the sandwich is
/// measured either way.
pub fn perturbation_sandwich<S: Scalar>(
    x0: &Matrix<S>,
    x1: &Matrix<S>,
    epsilon: &S,
) -> Result<PerturbationCertificate<S>, CliqueError> {
    let n = x0.rows();
    if x1.rows() != n || !x0.is_square() || !x1.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: x1.rows(),
        }
        .into());
    }
    let one = S::one();
    let e = epsilon.clone();
    let exp = n as u32;
    let lower_factor = (one.clone() - &e).pow(exp) / (one.clone() + &e).pow(exp - 1);
    let upper_factor = (one.clone() + &e).pow(exp) / (one.clone() - &e).pow(exp - 1);
    let mut offdiag_hypothesis = true;
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            let diff = (x0[(a, b)].clone() - &x1[(a, b)]).abs();
            if diff > e.clone() * x0[(a, b)].abs() {
                offdiag_hypothesis = false;
            }
        }
    }
    let rowsum_hypothesis = x0
        .row_sums()
        .iter()
        .zip(x1.row_sums())
        .all(|(r0, r1)| (r0.clone() - r1).abs() <= e.clone() * r0.abs());
    let m0 = matrix::inverse(x0)?;
    let m1 = matrix::inverse(x1)?;
    let mut failures = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let lo = lower_factor.clone() * &m0[(a, b)];
            let hi = upper_factor.clone() * &m0[(a, b)];
            if !(lo.approx_le(&m1[(a, b)], 0.0) && m1[(a, b)].approx_le(&hi, 0.0)) {
                failures.push((a, b));
            }
        }
    }
    Ok(PerturbationCertificate {
        epsilon: e,
        lower_factor,
        upper_factor,
        offdiag_hypothesis,
        rowsum_hypothesis,
        failures,
        entries_checked: n * n,
    })
}

/// Builds the mixed instance `P = (1 - delta) C + delta R` for `graph`.
pub fn mixed_instance<S: Scalar>(graph: &RegularGraph, delta: &S) -> Result<OpinionInstance<S>, CliqueError> {
    let c = build_clique_matrix(graph.n())?;
    let r = regular_matrix(graph);
    Ok(seeded_instance(mix_matrices(&c, &r, delta)?)?)
}

fn check_delta<S: Scalar>(graph: &RegularGraph, delta: &S) -> Result<(), CliqueError> {
    let cap = S::from_ratio(graph.degree() as i64, graph.n() as i64);
    if delta.is_negative() || *delta >= cap {
        return Err(CliqueError::DeltaTooLarge);
    }
    Ok(())
}

/// Sandwich between the clique gadget and its mixed version at `alpha`,
/// with `eps = delta n / d`.
pub fn gadget_sandwich<S: Scalar>(
    graph: &RegularGraph,
    delta: &S,
    alpha: &[S],
) -> Result<PerturbationCertificate<S>, CliqueError> {
    check_delta(graph, delta)?;
    let base = mixed_instance(graph, &S::zero())?;
    let mixed = mixed_instance(graph, delta)?;
    let x0 = SystemMatrix::new(&base, alpha)?;
    let x1 = SystemMatrix::new(&mixed, alpha)?;
    let eps = delta.clone() * S::from_usize(graph.n()) / S::from_usize(graph.degree());
    perturbation_sandwich(x0.matrix(), x1.matrix(), &eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassBound<S> {
    /// `1^T M 1` for the mixed matrix.
    pub measured: S,
    /// `1^T M 1` for the clique at the same resistances.
    pub base: S,
    pub epsilon: S,
    /// `base (1 + eps)^n / (1 - eps)^(n-1)` with `n = |V|`.
    pub bound: S,
}

impl<S: Scalar> MassBound<S> {
    pub fn holds(&self) -> bool {
        self.measured.approx_le(&self.bound, 0.0)
    }
}

pub fn mass_bound_delta<S: Scalar>(
    graph: &RegularGraph,
    delta: &S,
    alpha: &[S],
) -> Result<MassBound<S>, CliqueError> {
    check_delta(graph, delta)?;
    let n = graph.n();
    check_clique_alpha(alpha, n)?;
    let mass = |d: &S| -> Result<S, CliqueError> {
        let inst = mixed_instance(graph, d)?;
        Ok(equilibrium::compute_m(&inst, alpha)?.total())
    };
    let base = mass(&S::zero())?;
    let measured = mass(delta)?;
    let epsilon = delta.clone() * S::from_usize(n) / S::from_usize(graph.degree());
    let exp = n as u32;
    let bound = base.clone() * (S::one() + &epsilon).pow(exp) / (S::one() - &epsilon).pow(exp - 1);
    Ok(MassBound {
        measured,
        base,
        epsilon,
        bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaVariant {
    /// `(n+1)^6` in the denominator.
    Paper,
    /// `(n+1)^9`, compatible with the clique mass bound `(n+1)^2`.
    Corrected,
}

/// `d^3 (2d-1)^(3n-3) / ((n+1)^e (2d+1)^(3n))`.
pub fn delta_formula(n: usize, d: usize, variant: DeltaVariant) -> Result<Rational, CliqueError> {
    if n < 2 || d == 0 || d >= n || (n * d) % 2 == 1 {
        return Err(CliqueError::Infeasible { n, d });
    }
    let q = |v: usize| Rational::from_usize(v);
    let e = match variant {
        DeltaVariant::Paper => 6,
        DeltaVariant::Corrected => 9,
    };
    let num = Scalar::pow(&q(d), 3) * Scalar::pow(&q(2 * d - 1), (3 * n - 3) as u32);
    let den = Scalar::pow(&q(n + 1), e) * Scalar::pow(&q(2 * d + 1), (3 * n) as u32);
    Ok(num / den)
}

/// Worst (largest) `y_ij` at `alpha_j = 0` over all probes and ordered pairs
/// in `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Negativity<S> {
    pub max_y: S,
    pub pairs_checked: usize,
}

impl<S: Scalar> Negativity<S> {
    pub fn all_negative(&self) -> bool {
        self.pairs_checked == 0 || self.max_y.is_negative()
    }
}

pub fn y_negativity<S: Scalar>(
    graph: &RegularGraph,
    delta: &S,
    probes: &[Vec<S>],
) -> Result<Negativity<S>, CliqueError> {
    let inst = mixed_instance(graph, delta)?;
    let n = graph.n();
    let mut max_y: Option<S> = None;
    let mut pairs_checked = 0;
    for probe in probes {
        check_clique_alpha(probe, n)?;
        for j in 1..=n {
            let mut alpha = probe.clone();
            alpha[j] = S::zero();
            let ys = calculus::y_towards(&inst, &alpha, j)?;
            for (i, y) in ys.into_iter().enumerate().skip(1) {
                if i == j {
                    continue;
                }
                pairs_checked += 1;
                if max_y.as_ref().map_or(true, |m| y > *m) {
                    max_y = Some(y);
                }
            }
        }
    }
    Ok(Negativity {
        max_y: max_y.unwrap_or_else(S::zero),
        pairs_checked,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSearch {
    /// Largest mixing weight found with every probed `y_ij < 0`.
    pub delta_star: f64,
    /// The predicate held at the top of the range, so no sign change exists.
    pub no_sign_change: bool,
    /// The predicate failed already at the bottom of the range.
    pub fails_at_lower: bool,
    pub iterations: usize,
}

pub const DELTA_SEARCH_STEPS: usize = 40;

/// Bisection in `f64` for the largest `delta` in `[lo, hi)` with
/// `y_ij^(delta) < 0` at `alpha_j = 0` for all probes and pairs. Assumes the
/// predicate is monotone in `delta` on the range; the result is empirical.
pub fn empirical_delta_star(
    graph: &RegularGraph,
    probes: &[Vec<f64>],
    range: (f64, f64),
) -> Result<DeltaSearch, CliqueError> {
    let ok = |delta: f64| -> Result<bool, CliqueError> {
        Ok(y_negativity(graph, &delta, probes)?.all_negative())
    };
    let (mut lo, mut hi) = range;
    let cap = graph.degree() as f64 / graph.n() as f64;
    hi = hi.min(cap * (1.0 - 1e-12));
    if !ok(lo)? {
        return Ok(DeltaSearch {
            delta_star: lo,
            no_sign_change: false,
            fails_at_lower: true,
            iterations: 0,
        });
    }
    if ok(hi)? {
        return Ok(DeltaSearch {
            delta_star: hi,
            no_sign_change: true,
            fails_at_lower: false,
            iterations: 0,
        });
    }
    for _ in 0..DELTA_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DeltaSearch {
        delta_star: lo,
        no_sign_change: false,
        fails_at_lower: false,
        iterations: DELTA_SEARCH_STEPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::y_quantity;
    use alloc::vec;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn anchor_n2() {
        let alpha = vec![q(1, 1), q(0, 1), q(0, 1)];
        let cf = clique_closed_form(&alpha, 2).unwrap();
        assert_eq!(cf.w, q(-7, 6));
        assert_eq!(cf.total_mass, q(7, 1));
        assert_eq!(cf.m[(1, 1)], q(4, 3));
        assert_eq!(cf.m.total(), q(7, 1));
        let direct = equilibrium::compute_m(&clique_instance::<Rational>(2).unwrap(), &alpha).unwrap();
        assert_eq!(cf.m, direct);
        assert_eq!(clique_yij(&alpha, 2, 1, 2).unwrap(), q(-2, 3));
    }

    #[test]
    fn all_stubborn_gives_identity() {
        for n in 2..6 {
            let alpha = vec![q(1, 1); n + 1];
            let cf = clique_closed_form(&alpha, n).unwrap();
            assert_eq!(cf.w, q(-(n as i64 + 1), n as i64));
            assert_eq!(cf.m, Matrix::identity(n + 1));
        }
    }

    #[test]
    fn closed_form_matches_direct_inverse_and_y() {
        let alpha = vec![q(1, 1), q(2, 7), q(0, 1), q(5, 6)];
        let cf = clique_closed_form(&alpha, 3).unwrap();
        let inst = clique_instance::<Rational>(3).unwrap();
        assert_eq!(cf.m, equilibrium::compute_m(&inst, &alpha).unwrap());
        for (i, j) in [(1, 2), (2, 1), (3, 1), (2, 3)] {
            assert_eq!(clique_yij(&alpha, 3, i, j).unwrap(), y_quantity(&inst, &alpha, i, j).unwrap());
        }
        assert_eq!(clique_yij(&alpha, 3, 1, 2).unwrap() <= q(-1, 4), true);
    }

    #[test]
    fn hypotheses_rejected() {
        assert_eq!(
            clique_closed_form(&[q(1, 2), q(0, 1), q(0, 1)], 2),
            Err(CliqueError::AgentZeroNotStubborn)
        );
        assert!(matches!(
            clique_yij(&[q(1, 1), q(0, 1), q(0, 1)], 2, 0, 1),
            Err(CliqueError::BadPair(0, 1))
        ));
    }

    #[test]
    fn delta_values() {
        assert_eq!(delta_formula(3, 2, DeltaVariant::Paper).unwrap(), q(729, 1_000_000_000));
        assert_eq!(
            delta_formula(3, 2, DeltaVariant::Corrected).unwrap(),
            q(729, 64_000_000_000)
        );
        for n in (4..=10).step_by(2) {
            for v in [DeltaVariant::Paper, DeltaVariant::Corrected] {
                let d = delta_formula(n, 3, v).unwrap();
                assert!(d < q(1, 2 * n as i64));
            }
        }
        assert!(delta_formula(5, 3, DeltaVariant::Paper).is_err());
    }

    #[test]
    fn sandwich_identity_and_single_edge() {
        let g = RegularGraph::new(2, 1, &[(1, 2)]).unwrap();
        let alpha = vec![q(1, 1), q(0, 1), q(1, 3)];
        let inst = mixed_instance(&g, &q(0, 1)).unwrap();
        let x = SystemMatrix::new(&inst, &alpha).unwrap();
        let same = perturbation_sandwich(x.matrix(), x.matrix(), &q(0, 1)).unwrap();
        assert!(same.applicable() && same.holds());
        assert_eq!(same.lower_factor, q(1, 1));
        let cert = gadget_sandwich(&g, &q(1, 10), &alpha).unwrap();
        assert_eq!(cert.epsilon, q(1, 5));
        assert!(cert.applicable() && cert.holds(), "{cert:?}");
        assert!(cert.lower_factor <= q(1, 1) && cert.upper_factor >= q(1, 1));
    }

    #[test]
    fn triangle_sandwich_and_mass_at_paper_delta() {
        let g = RegularGraph::triangle();
        let delta = delta_formula(3, 2, DeltaVariant::Paper).unwrap();
        let alpha = vec![q(1, 1), q(0, 1), q(0, 1), q(0, 1)];
        let cert = gadget_sandwich(&g, &delta, &alpha).unwrap();
        assert!(cert.applicable() && cert.holds());
        let tight = q(1, 100_000);
        assert!(cert.upper_factor < q(1, 1) + &tight && cert.lower_factor > q(1, 1) - tight);
        let mb = mass_bound_delta(&g, &delta, &alpha).unwrap();
        assert!(mb.holds());
        let zero = mass_bound_delta(&g, &q(0, 1), &alpha).unwrap();
        assert_eq!(zero.bound, zero.measured);
        assert!(mass_bound_delta(&g, &q(2, 3), &alpha).is_err());
    }

    #[test]
    fn negativity_and_search_on_triangle() {
        let g = RegularGraph::triangle();
        let probe = vec![q(1, 1), q(0, 1), q(0, 1), q(0, 1)];
        let delta = delta_formula(3, 2, DeltaVariant::Corrected).unwrap();
        let neg = y_negativity(&g, &delta, &[probe.clone()]).unwrap();
        assert!(neg.all_negative());
        assert_eq!(neg.pairs_checked, 6);
        let fprobe: Vec<f64> = probe.iter().map(Scalar::to_f64).collect();
        let search = empirical_delta_star(&g, &[fprobe], (0.0, 2.0 / 3.0)).unwrap();
        assert!(search.delta_star >= 729e-9);
        assert!(!search.fails_at_lower);
    }
}
