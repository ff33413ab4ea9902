//! First and second order sensitivity of the objective.
//!
//! Notation: `M = X^{-1}`, `c_i = 1^T M e_i` (column sums of `M`),
//! `z = M A s`. All analytic quantities are evaluated from one shared `M`.
//! The finite-difference oracles at the bottom evaluate `f` exactly at
//! rational points and difference exactly, so only truncation error remains.

use alloc::vec::Vec;

use thiserror::Error;

use crate::equilibrium::{self, EquilibriumError};
use crate::matrix::{self, Matrix};
use crate::model::{InteractionMatrix, OpinionInstance};
use crate::scalar::{Rational, Scalar};

/// Float margin below 1 at which a coordinate counts as fixed.
pub const BOUNDARY_ETA: f64 = 1e-9;
/// Float gradient-tie tolerance for the compact directional form.
pub const TIE_TOL: f64 = 1e-9;
/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("agent {0} has resistance 1; derivative undefined by the closed form")]
    Boundary(usize),
    #[error("pair needs two distinct agents (got {0}, {0})")]
    SamePair(usize),
    #[error("agent index {0} out of range")]
    Index(usize),
}

/// A derivative value, or a marker that the closed form does not apply.
#[derive(Debug, Clone, PartialEq)]
pub enum Derivative<S> {
    Defined(S),
    Undefined,
}

impl<S: Scalar> Derivative<S> {
    pub fn value(&self) -> Option<&S> {
        match self {
            Self::Defined(v) => Some(v),
            Self::Undefined => None,
        }
    }
}

/// Whether `alpha_i` sits at 1 (exactly, or within `eta` for floats).
pub fn at_boundary<S: Scalar>(a: &S, eta: f64) -> bool {
    if S::EXACT {
        *a == S::one()
    } else {
        a.to_f64() > 1.0 - eta
    }
}

/// The four second partials of `f` in the `(i, j)` coordinate plane.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianPair<S> {
    pub ii: S,
    pub jj: S,
    /// `d/d alpha_j (df/d alpha_i)`, closed form.
    pub ij: S,
    /// `d/d alpha_i (df/d alpha_j)`, via `dM/d alpha_i`.
    pub ji: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directional<S> {
    /// `(e_i - e_j)^T H (e_i - e_j)`.
    pub full: S,
    /// `|df/d alpha_i - df/d alpha_j|`.
    pub gradient_gap: S,
    /// Compact form, present only at a gradient tie.
    pub compact: Option<S>,
}

impl<S: Scalar> Directional<S> {
    /// Compact and full forms agree (vacuous without a tie).
    pub fn consistent(&self, rel: f64) -> bool {
        match &self.compact {
            None => true,
            Some(c) if S::EXACT => *c == self.full,
            Some(c) => crate::scalar::rel_close(c.to_f64(), self.full.to_f64(), rel, 1e-12),
        }
    }
}

/// Everything needed for derivatives at one resistance vector.
#[derive(Debug, Clone)]
pub struct Sensitivity<S> {
    alpha: Vec<S>,
    innate: Vec<S>,
    p: Matrix<S>,
    m: Matrix<S>,
    z: Vec<S>,
    c: Vec<S>,
    eta: f64,
}

impl<S: Scalar> Sensitivity<S> {
    pub fn new(inst: &OpinionInstance<S>, alpha: &[S]) -> Result<Self, CalculusError> {
        let rep = equilibrium::solve_with_m(inst, alpha)?;
        let m = rep.m.expect("solve_with_m keeps M");
        Ok(Self {
            alpha: alpha.to_vec(),
            innate: inst.innate().to_vec(),
            p: inst.interaction().matrix().clone(),
            c: m.column_sums(),
            m,
            z: rep.z,
            eta: BOUNDARY_ETA,
        })
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn m(&self) -> &Matrix<S> {
        &self.m
    }

    pub fn z(&self) -> &[S] {
        &self.z
    }

    pub fn f_value(&self) -> S {
        matrix::sum(&self.z)
    }

    /// `c_i = 1^T M e_i`.
    pub fn column_mass(&self, i: usize) -> &S {
        &self.c[i]
    }

    pub fn total_mass(&self) -> S {
        matrix::sum(&self.c)
    }

    fn n(&self) -> usize {
        self.alpha.len()
    }

    fn check(&self, i: usize) -> Result<(), CalculusError> {
        if i >= self.n() {
            return Err(CalculusError::Index(i));
        }
        if at_boundary(&self.alpha[i], self.eta) {
            return Err(CalculusError::Boundary(i));
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), CalculusError> {
        if i == j {
            return Err(CalculusError::SamePair(i));
        }
        self.check(i)?;
        self.check(j)
    }

    /// `1 / (1 - alpha_i)`.
    fn inv_gap(&self, i: usize) -> S {
        (S::one() - &self.alpha[i]).recip()
    }

    /// `s_i - z_i`.
    fn lag(&self, i: usize) -> S {
        self.innate[i].clone() - &self.z[i]
    }

    /// `df/d alpha_i = (s_i - z_i) c_i / (1 - alpha_i)`.
    pub fn gradient_at(&self, i: usize) -> Derivative<S> {
        match self.check(i) {
            Ok(()) => Derivative::Defined(self.lag(i) * &self.c[i] * self.inv_gap(i)),
            Err(_) => Derivative::Undefined,
        }
    }

    pub fn gradient(&self) -> Vec<Derivative<S>> {
        (0..self.n()).map(|i| self.gradient_at(i)).collect()
    }

    /// `c_i (s_i - (Pz)_i)`, equal to the gradient in the interior and its
    /// one-sided limit at `alpha_i = 1`.
    pub fn gradient_extended(&self, i: usize) -> S {
        let pz_i = matrix::dot(self.p.row(i), &self.z);
        self.c[i].clone() * (self.innate[i].clone() - pz_i)
    }

    pub fn gradient_extended_all(&self) -> Vec<S> {
        (0..self.n()).map(|i| self.gradient_extended(i)).collect()
    }

    /// `dM/d alpha_i = -M e_i e_i^T P M` (rank one).
    pub fn dm_dalpha(&self, i: usize) -> Derivative<Matrix<S>> {
        if self.check(i).is_err() {
            return Derivative::Undefined;
        }
        Derivative::Defined(self.dm_dalpha_raw(i))
    }

    fn dm_dalpha_raw(&self, i: usize) -> Matrix<S> {
        let pm_row = self.m.vec_mul(self.p.row(i)).expect("square");
        let col: Vec<S> = self.m.column(i).into_iter().map(|v| -v).collect();
        Matrix::outer(&col, &pm_row)
    }

    /// `dz/d alpha_j = M e_j (s_j - z_j) / (1 - alpha_j)`.
    pub fn dz_dalpha(&self, j: usize) -> Result<Vec<S>, CalculusError> {
        self.check(j)?;
        let scale = self.lag(j) * self.inv_gap(j);
        Ok(self.m.column(j).into_iter().map(|v| v * &scale).collect())
    }

    pub fn hessian_pair(&self, i: usize, j: usize) -> Result<HessianPair<S>, CalculusError> {
        self.check_pair(i, j)?;
        let diag = |k: usize| {
            let g = self.inv_gap(k);
            S::from_int(-2) * self.lag(k) * &self.c[k] * (self.m[(k, k)].clone() - S::one()) * &g * g
        };
        let ij = -(self.lag(i) * &self.c[j] * &self.m[(j, i)] + self.lag(j) * &self.c[i] * &self.m[(i, j)])
            * self.inv_gap(i)
            * self.inv_gap(j);
        Ok(HessianPair {
            ii: diag(i),
            jj: diag(j),
            ij,
            ji: self.mixed_via_dm(j, i),
        })
    }

    /// `d/d alpha_b (df/d alpha_a)` by differentiating `z` and `c` through
    /// `dM/d alpha_b`.
    fn mixed_via_dm(&self, a: usize, b: usize) -> S {
        let dm = self.dm_dalpha_raw(b);
        let stubborn: Vec<S> = self
            .alpha
            .iter()
            .zip(&self.innate)
            .map(|(x, s)| x.clone() * s)
            .collect();
        let dz_a = matrix::dot(dm.row(a), &stubborn) + self.m[(a, b)].clone() * &self.innate[b];
        let dc_a = dm.column_sums().swap_remove(a);
        (self.lag(a) * dc_a - dz_a * &self.c[a]) * self.inv_gap(a)
    }

    /// `y_ij = c_i (M_jj - 1) - c_j M_ji`.
    pub fn y(&self, i: usize, j: usize) -> S {
        y_from_m(&self.m, &self.c, i, j)
    }

    pub fn directional(&self, i: usize, j: usize, tie_tol: f64) -> Result<Directional<S>, CalculusError> {
        let h = self.hessian_pair(i, j)?;
        let full = h.ii + &h.jj - &h.ij - &h.ji;
        let gi = self.lag(i) * &self.c[i] * self.inv_gap(i);
        let gj = self.lag(j) * &self.c[j] * self.inv_gap(j);
        let gradient_gap = (gi - gj).abs();
        let tie = if S::EXACT {
            gradient_gap.is_zero()
        } else {
            gradient_gap.to_f64() <= tie_tol
        };
        let compact = tie.then(|| {
            let zi = -self.lag(i);
            let zj = -self.lag(j);
            S::from_int(2) * self.inv_gap(i) * self.inv_gap(j) * (zi * self.y(i, j) + zj * self.y(j, i))
        });
        Ok(Directional {
            full,
            gradient_gap,
            compact,
        })
    }

    /// `dM/dP_kl = (1 - alpha_k) M e_k e_l^T M`.
    pub fn dm_dp(&self, k: usize, l: usize) -> Matrix<S> {
        let w = S::one() - &self.alpha[k];
        let col: Vec<S> = self.m.column(k).into_iter().map(|v| v * &w).collect();
        Matrix::outer(&col, self.m.row(l))
    }

    /// `dy_ij/dP_kl`, analytic.
    pub fn dy_dp(&self, i: usize, j: usize, k: usize, l: usize) -> S {
        let m = &self.m;
        let c = &self.c;
        let w = S::one() - &self.alpha[k];
        let mjj1 = m[(j, j)].clone() - S::one();
        w * (c[k].clone() * &m[(l, i)] * mjj1 + c[i].clone() * &m[(j, k)] * &m[(l, j)]
            - c[k].clone() * &m[(l, j)] * &m[(j, i)]
            - c[j].clone() * &m[(j, k)] * &m[(l, i)])
    }

    /// `sum_{k,l} |dy_ij/dP_kl|` against `4 (1^T M 1)^3`.
    pub fn y_sensitivity_sum(&self, i: usize, j: usize) -> SensitivityBound<S> {
        let n = self.n();
        let mut total = S::zero();
        for k in 0..n {
            if self.alpha[k] == S::one() {
                continue;
            }
            for l in 0..n {
                total = total + self.dy_dp(i, j, k, l).abs();
            }
        }
        let bound = S::from_int(4) * self.total_mass().pow(3);
        let holds = total.approx_le(&bound, 0.0);
        SensitivityBound { sum: total, bound, holds }
    }

    /// Right-hand side of `dy_ij/d alpha_j = -M_jj / (1 - alpha_j) * y_ij`.
    pub fn y_dalpha_j(&self, i: usize, j: usize) -> Result<S, CalculusError> {
        self.check(j)?;
        Ok(-(self.m[(j, j)].clone() * self.inv_gap(j) * self.y(i, j)))
    }
}

/// `y_ij` from `M` and its column sums.
pub fn y_from_m<S: Scalar>(m: &Matrix<S>, col_sums: &[S], i: usize, j: usize) -> S {
    col_sums[i].clone() * (m[(j, j)].clone() - S::one()) - col_sums[j].clone() * &m[(j, i)]
}

pub fn y_quantity<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    j: usize,
) -> Result<S, CalculusError> {
    if i == j {
        return Err(CalculusError::SamePair(i));
    }
    let m = equilibrium::compute_m(inst, alpha)?;
    Ok(y_from_m(&m, &m.column_sums(), i, j))
}

/// `y_ij` for every `i` (entry `j` is zero), from one solve against `X^T`
/// with right-hand sides `1` and `e_j`.
pub fn y_towards<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    j: usize,
) -> Result<Vec<S>, CalculusError> {
    let n = inst.agents();
    if j >= n {
        return Err(CalculusError::Index(j));
    }
    let x = equilibrium::SystemMatrix::new(inst, alpha)?;
    let ones = alloc::vec![S::one(); n];
    let mut ej = alloc::vec![S::zero(); n];
    ej[j] = S::one();
    let sols = matrix::solve_many(&x.matrix().transpose(), &[ones, ej])
        .map_err(EquilibriumError::from)?;
    let (c, row_j) = (&sols[0], &sols[1]);
    let mjj1 = row_j[j].clone() - S::one();
    Ok((0..n)
        .map(|i| {
            if i == j {
                S::zero()
            } else {
                c[i].clone() * &mjj1 - c[j].clone() * &row_j[i]
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityBound<S> {
    pub sum: S,
    pub bound: S,
    pub holds: bool,
}

/// `y_ij` sampled along a grid of `alpha_j` values.
#[derive(Debug, Clone, PartialEq)]
pub struct SignSweep<S> {
    pub values: Vec<S>,
    pub sign_constant: bool,
    /// `|y_ij|` monotone along the grid, or `y_ij` identically zero.
    pub monotone: bool,
}

pub fn y_sign_sweep<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    j: usize,
    grid: &[S],
) -> Result<SignSweep<S>, CalculusError> {
    let mut point = alpha.to_vec();
    let mut values = Vec::with_capacity(grid.len());
    for g in grid {
        point[j] = g.clone();
        values.push(y_quantity(inst, &point, i, j)?);
    }
    let signum = |v: &S| {
        if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        }
    };
    let sign_constant = values.windows(2).all(|w| signum(&w[0]) == signum(&w[1]));
    let abs: Vec<S> = values.iter().map(Scalar::abs).collect();
    let monotone = abs.windows(2).all(|w| w[0] <= w[1]) || abs.windows(2).all(|w| w[0] >= w[1]);
    Ok(SignSweep {
        values,
        sign_constant,
        monotone,
    })
}

/// Default sweep grid `{0, 1/8, ..., 7/8}`.
pub fn eighths<S: Scalar>() -> Vec<S> {
    (0..8).map(|k| S::from_ratio(k, 8)).collect()
}

// ---------------------------------------------------------------------------
// Finite-difference oracles.

/// First derivative of `eval` at `x`, staying inside `[0, 1]`: central where
/// possible, else a second-order one-sided stencil.
pub fn fd_first<E>(
    x: &Rational,
    h: &Rational,
    mut eval: impl FnMut(&Rational) -> Result<Rational, E>,
) -> Result<Rational, E> {
    let zero = <Rational as Scalar>::zero();
    let one = <Rational as Scalar>::one();
    let two = Rational::from_int(2);
    if x.clone() - h >= zero && x.clone() + h <= one {
        Ok((eval(&(x.clone() + h))? - eval(&(x.clone() - h))?) / (two * h))
    } else if x.clone() + h.clone() * &two <= one {
        let y0 = eval(x)?;
        let y1 = eval(&(x.clone() + h))?;
        let y2 = eval(&(x.clone() + h.clone() * &two))?;
        Ok((Rational::from_int(-3) * y0 + Rational::from_int(4) * y1 - y2) / (two * h))
    } else {
        let y0 = eval(x)?;
        let y1 = eval(&(x.clone() - h))?;
        let y2 = eval(&(x.clone() - h.clone() * &two))?;
        Ok((Rational::from_int(3) * y0 - Rational::from_int(4) * y1 + y2) / (two * h))
    }
}

/// Instance, resistances and step as exact rationals.
pub fn exact_point<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
) -> (OpinionInstance<Rational>, Vec<Rational>) {
    (inst.map(Scalar::to_rational), alpha.iter().map(Scalar::to_rational).collect())
}

fn step(h: f64) -> Rational {
    Rational::from_f64(h)
}

fn shifted(alpha: &[Rational], i: usize, v: &Rational) -> Vec<Rational> {
    let mut a = alpha.to_vec();
    a[i] = v.clone();
    a
}

pub fn fd_gradient<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    h: f64,
) -> Result<f64, CalculusError> {
    let (inst, alpha) = exact_point(inst, alpha);
    let d = fd_first(&alpha[i], &step(h), |v| equilibrium::objective(&inst, &shifted(&alpha, i, v)))?;
    Ok(d.to_f64())
}

/// Second partial `d^2 f / d alpha_i d alpha_j` (central stencils; the
/// point must be at least `h` inside the box in both coordinates).
pub fn fd_second<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    j: usize,
    h: f64,
) -> Result<f64, CalculusError> {
    let (inst, alpha) = exact_point(inst, alpha);
    let h = step(h);
    let f = |a: &[Rational]| equilibrium::objective(&inst, a);
    let at = |di: i64, dj: i64| {
        let mut a = alpha.clone();
        a[i] = a[i].clone() + h.clone() * Rational::from_int(di);
        a[j] = a[j].clone() + h.clone() * Rational::from_int(dj);
        a
    };
    let v = if i == j {
        (f(&at(1, 0))? - Rational::from_int(2) * f(&alpha)? + f(&at(-1, 0))?) / (h.clone() * &h)
    } else {
        (f(&at(1, 1))? - f(&at(1, -1))? - f(&at(-1, 1))? + f(&at(-1, -1))?)
            / (Rational::from_int(4) * &h * &h)
    };
    Ok(v.to_f64())
}

/// `(f(a + h d) - 2 f(a) + f(a - h d)) / h^2` with `d = e_i - e_j`.
pub fn fd_directional<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    j: usize,
    h: f64,
) -> Result<f64, CalculusError> {
    let (inst, alpha) = exact_point(inst, alpha);
    let h = step(h);
    let along = |t: i64| {
        let mut a = alpha.clone();
        let d = h.clone() * Rational::from_int(t);
        a[i] = a[i].clone() + &d;
        a[j] = a[j].clone() - d;
        a
    };
    let f = |a: &[Rational]| equilibrium::objective(&inst, a);
    let v = (f(&along(1))? - Rational::from_int(2) * f(&alpha)? + f(&along(-1))?) / (h.clone() * &h);
    Ok(v.to_f64())
}

pub fn fd_dm_dalpha<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    h: f64,
) -> Result<Matrix<f64>, CalculusError> {
    let (inst, alpha) = exact_point(inst, alpha);
    let h = step(h);
    let plus = equilibrium::compute_m(&inst, &shifted(&alpha, i, &(alpha[i].clone() + &h)))?;
    let minus = equilibrium::compute_m(&inst, &shifted(&alpha, i, &(alpha[i].clone() - &h)))?;
    let two_h = Rational::from_int(2) * h;
    Ok(plus.sub(&minus).expect("same shape").map(|v| (v.clone() / &two_h).to_f64()))
}

/// Finite-difference `dy_ij / d alpha_j`.
pub fn fd_y_dalpha_j<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    j: usize,
    h: f64,
) -> Result<f64, CalculusError> {
    let (inst, alpha) = exact_point(inst, alpha);
    let d = fd_first(&alpha[j], &step(h), |v| y_quantity(&inst, &shifted(&alpha, j, v), i, j))?;
    Ok(d.to_f64())
}

/// Finite-difference `dy_ij / dP_kl`. Only entry `(k, l)` moves; rows are not
/// renormalized.
pub fn fd_y_dp<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    (i, j): (usize, usize),
    (k, l): (usize, usize),
    h: f64,
) -> Result<f64, CalculusError> {
    let (inst, alpha) = exact_point(inst, alpha);
    let h = step(h);
    let eval = |delta: Rational| -> Result<Rational, CalculusError> {
        let mut p = inst.interaction().matrix().clone();
        p[(k, l)] = p[(k, l)].clone() + delta;
        let moved = inst
            .with_interaction(InteractionMatrix::new(p).expect("square"))
            .expect("same size");
        y_quantity(&moved, &alpha, i, j)
    };
    let d = (eval(h.clone())? - eval(-h.clone())?) / (Rational::from_int(2) * h);
    Ok(d.to_f64())
}

/// `|fd - analytic|` for `dy_ij/d alpha_j`, with both values.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeResidual {
    pub finite_difference: f64,
    pub analytic: f64,
    pub residual: f64,
}

impl OdeResidual {
    pub fn passes(&self, rel: f64) -> bool {
        self.residual <= rel * self.analytic.abs().max(self.finite_difference.abs()).max(1e-12)
    }
}

pub fn y_derivative_check<S: Scalar>(
    inst: &OpinionInstance<S>,
    alpha: &[S],
    i: usize,
    j: usize,
    h: f64,
) -> Result<OdeResidual, CalculusError> {
    let sens = Sensitivity::new(inst, alpha)?;
    if i == j {
        return Err(CalculusError::SamePair(i));
    }
    let analytic = sens.y_dalpha_j(i, j)?.to_f64();
    let finite_difference = fd_y_dalpha_j(inst, alpha, i, j, h)?;
    Ok(OdeResidual {
        finite_difference,
        analytic,
        residual: (finite_difference - analytic).abs(),
    })
}
