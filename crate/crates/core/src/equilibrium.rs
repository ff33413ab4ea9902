//! Equilibrium opinions: iteration, direct solve, and the inverse system matrix.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::matrix::{self, max_abs_diff, LinalgError, Matrix};
use crate::model::{ModelError, OpinionInstance};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("resistance of agent {0} outside [0, 1]")]
    AlphaOutOfRange(usize),
    #[error("system matrix singular: no pivot in column {column} (are all resistances zero?)")]
    Singular { column: usize },
    #[error("dynamics did not converge within {steps} steps (last change {last_change:e})")]
    NotConverged {
        steps: usize,
        last_change: f64,
        last: Vec<f64>,
    },
    #[error(transparent)]
    Linalg(LinalgError),
}

impl From<LinalgError> for EquilibriumError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { column } => Self::Singular { column },
            other => Self::Linalg(other),
        }
    }
}

/// `X = I - (I - A) P` with `A = Diag(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix<S> {
    x: Matrix<S>,
}

impl<S: Scalar> SystemMatrix<S> {
    pub fn new(inst: &OpinionInstance<S>, alpha: &[S]) -> Result<Self, EquilibriumError> {
        check_alpha(inst, alpha)?;
        let p = inst.interaction().matrix();
        let n = inst.agents();
        let x = Matrix::from_fn(n, n, |i, j| {
            let off = (S::one() - &alpha[i]) * &p[(i, j)];
            if i == j {
                S::one() - off
            } else {
                -off
            }
        });
        Ok(Self { x })
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.x
    }

    /// Largest deviation of the row sums of `X` from `alpha`.
    pub fn row_sum_defect(&self, alpha: &[S]) -> S {
        max_abs_diff(&self.x.row_sums(), alpha)
    }
}

fn check_alpha<S: Scalar>(inst: &OpinionInstance<S>, alpha: &[S]) -> Result<(), EquilibriumError> {
    inst.check_alpha(alpha)?;
    if let Some(i) = alpha
        .iter()
        .position(|a| a.is_negative() || *a > S::one())
    {
        return Err(EquilibriumError::AlphaOutOfRange(i));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport<S> {
    pub z: Vec<S>,
    pub f_value: S,
    pub m: Option<Matrix<S>>,
    /// `max |Xz - As|`.
    pub residual: S,
    /// Steps taken by the iterative path; `None` for direct solves.
    pub iterations: Option<usize>,
}

impl<S: Scalar> EquilibriumReport<S> {
    pub fn z_in_unit_box(&self, tol: f64) -> bool {
        self.z
            .iter()
            .all(|v| S::zero().approx_le(v, tol) && v.approx_le(&S::one(), tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub max_steps: usize,
    pub tol: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            max_steps: 1_000_000,
            tol: 1e-12,
        }
    }
}

fn stubborn_term<S: Scalar>(inst: &OpinionInstance<S>, alpha: &[S]) -> Vec<S> {
    alpha
        .iter()
        .zip(inst.innate())
        .map(|(a, s)| a.clone() * s)
        .collect()
}

fn residual<S: Scalar>(x: &SystemMatrix<S>, z: &[S], rhs: &[S]) -> Result<S, EquilibriumError> {
    Ok(max_abs_diff(&x.matrix().mul_vec(z)?, rhs))
}

/// Runs `z <- A s + (I - A) P z` in `f64` until the step change is at most
/// `cfg.tol`. Exact instances are evaluated in floating point; use
/// [`solve_equilibrium`] for certified values.
pub fn iterate_dynamics<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    z0: &[f64],
    cfg: IterationConfig,
) -> Result<EquilibriumReport<f64>, EquilibriumError> {
    check_alpha(inst, alpha)?;
    let finst = inst.to_f64();
    let a: Vec<f64> = alpha.iter().map(Scalar::to_f64).collect();
    if z0.len() != a.len() {
        return Err(ModelError::Length {
            what: "z0",
            expected: a.len(),
            got: z0.len(),
        }
        .into());
    }
    let p = finst.interaction().matrix();
    let base = stubborn_term(&finst, &a);
    let mut z = z0.to_vec();
    let mut change = f64::INFINITY;
    for step in 1..=cfg.max_steps {
        let pz = p.mul_vec(&z)?;
        let next: Vec<f64> = (0..z.len())
            .map(|i| base[i] + (1.0 - a[i]) * pz[i])
            .collect();
        change = matrix::max_abs_diff(&next, &z);
        z = next;
        if change <= cfg.tol {
            let x = SystemMatrix::new(&finst, &a)?;
            let residual = residual(&x, &z, &base)?;
            return Ok(EquilibriumReport {
                f_value: matrix::sum(&z),
                z,
                m: None,
                residual,
                iterations: Some(step),
            });
        }
    }
    Err(EquilibriumError::NotConverged {
        steps: cfg.max_steps,
        last_change: change,
        last: z,
    })
}

/// Solves `X z = A s` directly.
pub fn solve_equilibrium<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
) -> Result<EquilibriumReport<S>, EquilibriumError> {
    let x = SystemMatrix::new(inst, alpha)?;
    let rhs = stubborn_term(inst, alpha);
    let z = matrix::solve(x.matrix(), &rhs)?;
    Ok(EquilibriumReport {
        f_value: matrix::sum(&z),
        residual: residual(&x, &z, &rhs)?,
        z,
        m: None,
        iterations: None,
    })
}

/// `M = X^{-1}`.
pub fn compute_m<S: Scalar>(inst: &OpinionInstance<S>, alpha: &[S]) -> Result<Matrix<S>, EquilibriumError> {
    let x = SystemMatrix::new(inst, alpha)?;
    Ok(matrix::inverse(x.matrix())?)
}

/// Equilibrium obtained through `M`, which is kept in the report.
pub fn solve_with_m<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
) -> Result<EquilibriumReport<S>, EquilibriumError> {
    let x = SystemMatrix::new(inst, alpha)?;
    let m = matrix::inverse(x.matrix())?;
    let rhs = stubborn_term(inst, alpha);
    let z = m.mul_vec(&rhs)?;
    Ok(EquilibriumReport {
        f_value: matrix::sum(&z),
        residual: residual(&x, &z, &rhs)?,
        z,
        m: Some(m),
        iterations: None,
    })
}

/// `f(alpha) = 1^T z`.
pub fn objective<S: Scalar>(inst: &OpinionInstance<S>, alpha: &[S]) -> Result<S, EquilibriumError> {
    Ok(solve_equilibrium(inst, alpha)?.f_value)
}

/// Residuals of the `PM` identities over rows `k` with `alpha_k != 1`.
///
/// From `(I - A) P M = M - I`, row `k` of `PM` equals
/// `(M_kj - [j == k]) / (1 - alpha_k)`. `offdiag_minus_one` measures the
/// variant that subtracts 1 off the diagonal too; it does not hold in general.
#[derive(Debug, Clone, PartialEq)]
pub struct PmIdentityReport<S> {
    pub diagonal: S,
    pub offdiag: S,
    pub offdiag_minus_one: S,
    pub rows_checked: usize,
}

pub fn pm_identities<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    m: &Matrix<S>,
) -> Result<PmIdentityReport<S>, EquilibriumError> {
    let pm = inst.interaction().matrix().mul(m)?;
    let n = inst.agents();
    let mut diagonal = vec![];
    let mut offdiag = vec![];
    let mut minus_one = vec![];
    let mut rows_checked = 0;
    for k in 0..n {
        if alpha[k] == S::one() {
            continue;
        }
        rows_checked += 1;
        let scale = (S::one() - &alpha[k]).recip();
        for j in 0..n {
            let shift = if j == k { S::one() } else { S::zero() };
            let predicted = (m[(k, j)].clone() - &shift) * &scale;
            let err = (pm[(k, j)].clone() - &predicted).abs();
            if j == k {
                diagonal.push(err);
            } else {
                offdiag.push(err);
                let stated = (m[(k, j)].clone() - S::one()) * &scale;
                minus_one.push((pm[(k, j)].clone() - &stated).abs());
            }
        }
    }
    Ok(PmIdentityReport {
        diagonal: matrix::max_abs(&diagonal),
        offdiag: matrix::max_abs(&offdiag),
        offdiag_minus_one: matrix::max_abs(&minus_one),
        rows_checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RegularGraph;
    use crate::model::{build_clique_matrix, regular_matrix, Bounds, InteractionMatrix};
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn seeded(p: InteractionMatrix<Rational>) -> OpinionInstance<Rational> {
        let n = p.agents();
        let mut s = vec![q(0, 1); n];
        s[0] = q(1, 1);
        let mut bounds = vec![Bounds::new(q(0, 1), q(1, 1)); n];
        bounds[0] = Bounds::fixed(q(1, 1));
        OpinionInstance::new(s.clone(), bounds, s, p).unwrap()
    }

    fn clique2() -> OpinionInstance<Rational> {
        seeded(build_clique_matrix(2).unwrap())
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
        seeded(InteractionMatrix::new(m).unwrap())
    }

    fn qv(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(a, b)| q(a, b)).collect()
    }

    #[test]
    fn clique_direct_solve_and_m() {
        let inst = clique2();
        let alpha = qv(&[(1, 1), (0, 1), (0, 1)]);
        let rep = solve_with_m(&inst, &alpha).unwrap();
        assert_eq!(rep.z, qv(&[(1, 1), (1, 1), (1, 1)]));
        assert_eq!(rep.f_value, q(3, 1));
        assert_eq!(rep.residual, q(0, 1));
        let m = rep.m.unwrap();
        assert_eq!(m.column(0), qv(&[(1, 1), (1, 1), (1, 1)]));
        assert_eq!(m.column(1), qv(&[(0, 1), (4, 3), (2, 3)]));
        assert_eq!(m.column(2), qv(&[(0, 1), (2, 3), (4, 3)]));
        assert_eq!(m.mul_vec(&alpha).unwrap(), vec![q(1, 1); 3]);
    }

    #[test]
    fn clique_iteration_converges_to_ones() {
        let inst = clique2();
        let alpha = qv(&[(1, 1), (0, 1), (0, 1)]);
        let rep = iterate_dynamics(&inst, &alpha, &[0.0; 3], IterationConfig::default()).unwrap();
        for v in &rep.z {
            assert!((v - 1.0).abs() <= 1e-11);
        }
        assert!(rep.residual <= 1e-10);
    }

    #[test]
    fn stubborn_everyone_reaches_innate_in_one_step() {
        let mut inst = clique2().to_f64();
        inst = OpinionInstance::new(
            vec![0.2, 0.7, 0.4],
            inst.bounds().to_vec(),
            inst.alpha_init().to_vec(),
            inst.interaction().clone(),
        )
        .unwrap();
        let rep = iterate_dynamics(&inst, &[1.0; 3], &[0.9; 3], IterationConfig::default()).unwrap();
        assert_eq!(rep.z, vec![0.2, 0.7, 0.4]);
        assert!(rep.iterations.unwrap() <= 2);
        let m = compute_m(&inst, &[1.0; 3]).unwrap();
        assert_eq!(m, Matrix::identity(3));
    }

    #[test]
    fn l0_gadget_objectives() {
        let inst = l0_triangle();
        let cover = qv(&[(1, 1), (1, 1), (1, 1), (0, 1)]);
        let rep = solve_equilibrium(&inst, &cover).unwrap();
        assert_eq!(rep.z, qv(&[(1, 1), (0, 1), (0, 1), (1, 3)]));
        assert_eq!(rep.f_value, q(4, 3));
        let single = qv(&[(1, 1), (1, 1), (0, 1), (0, 1)]);
        assert_eq!(objective(&inst, &single).unwrap(), q(2, 1));
    }

    #[test]
    fn all_zero_resistance_is_singular() {
        let inst = clique2();
        let err = solve_equilibrium(&inst, &[q(0, 1), q(0, 1), q(0, 1)]).unwrap_err();
        assert!(matches!(err, EquilibriumError::Singular { .. }));
        assert!(alloc::format!("{err}").contains("pivot"));
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let inst = clique2().to_f64();
        let cfg = IterationConfig {
            max_steps: 3,
            tol: 1e-12,
        };
        match iterate_dynamics(&inst, &[1.0, 0.0, 0.0], &[0.0; 3], cfg) {
            Err(EquilibriumError::NotConverged { steps, last, .. }) => {
                assert_eq!(steps, 3);
                assert_eq!(last.len(), 3);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn pm_identity_offdiagonal_has_no_shift() {
        let g = RegularGraph::triangle();
        let c = build_clique_matrix::<Rational>(3).unwrap();
        let r = regular_matrix::<Rational>(&g);
        let p = crate::model::mix_matrices(&c, &r, &q(1, 5)).unwrap();
        let inst = seeded(p);
        let alpha = qv(&[(1, 1), (1, 3), (0, 1), (3, 4)]);
        let m = compute_m(&inst, &alpha).unwrap();
        let rep = pm_identities(&inst, &alpha, &m).unwrap();
        assert_eq!(rep.rows_checked, 3);
        assert_eq!(rep.diagonal, q(0, 1));
        assert_eq!(rep.offdiag, q(0, 1));
        assert!(rep.offdiag_minus_one > q(0, 1));
        let sys = SystemMatrix::new(&inst, &alpha).unwrap();
        assert_eq!(sys.row_sum_defect(&alpha), q(0, 1));
    }
}
