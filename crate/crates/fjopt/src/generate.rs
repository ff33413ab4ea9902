//! Seeded random instances, resistance points and probes. All draws are
//! rationals with small denominators so exact and float runs see the same
//! data.

use fjopt_core::{Bounds, InteractionMatrix, Matrix, OpinionInstance, Rational, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent stream for trial `trial` of experiment `salt`.
pub fn trial_rng(seed: u64, salt: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(trial as u64);
    rng
}

fn eighth(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    Rational::from_ratio(rng.gen_range(lo..=hi), 8)
}

/// Row-stochastic `P` with integer weights in `0..=3`, strongly connected
/// through the cycle `i -> i + 1`.
pub fn random_interaction(rng: &mut ChaCha8Rng, n: usize) -> InteractionMatrix<Rational> {
    let mut w = vec![vec![0i64; n]; n];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = rng.gen_range(0..=3);
            }
        }
        if n > 1 {
            let next = (i + 1) % n;
            row[next] = row[next].max(1);
        } else {
            row[0] = 1;
        }
    }
    let m = Matrix::from_fn(n, n, |i, j| Rational::from_ratio(w[i][j], w[i].iter().sum()));
    InteractionMatrix::new(m).expect("square")
}

/// Random boxes (agent 0 has a positive lower bound), innate opinions and
/// initial resistances, all in eighths.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> OpinionInstance<Rational> {
    let p = random_interaction(rng, n);
    let innate = (0..n).map(|_| eighth(rng, 0, 8)).collect();
    let mut bounds = Vec::with_capacity(n);
    let mut init = Vec::with_capacity(n);
    for i in 0..n {
        let lo = rng.gen_range(if i == 0 { 1 } else { 0 }..=4);
        let hi = rng.gen_range(lo.max(1)..=8);
        bounds.push(Bounds::new(Rational::from_ratio(lo, 8), Rational::from_ratio(hi, 8)));
        init.push(eighth(rng, lo, hi));
    }
    OpinionInstance::new(innate, bounds, init, p).expect("consistent lengths")
}

/// Same as [`random_instance`] but every box is `[0, 1]` and `alpha_init`
/// is `1/2`, for derivative checks at arbitrary points.
pub fn random_free_instance(rng: &mut ChaCha8Rng, n: usize) -> OpinionInstance<Rational> {
    let p = random_interaction(rng, n);
    let innate = (0..n).map(|_| eighth(rng, 0, 8)).collect();
    OpinionInstance::new(
        innate,
        vec![Bounds::new(Rational::zero(), Rational::one()); n],
        vec![Rational::from_ratio(1, 2); n],
        p,
    )
    .expect("consistent lengths")
}

/// A point in the box with every coordinate at least `1/8`, so the
/// iteration contracts by at most `7/8` per step.
pub fn random_box_alpha(rng: &mut ChaCha8Rng, inst: &OpinionInstance<Rational>) -> Vec<Rational> {
    inst.bounds()
        .iter()
        .map(|b| {
            let lo = (b.lower.clone() * Rational::from_int(8)).to_integer();
            let hi = (b.upper.clone() * Rational::from_int(8)).to_integer();
            let lo = i64::try_from(lo).unwrap_or(0).max(1);
            let hi = i64::try_from(hi).unwrap_or(8).max(lo);
            eighth(rng, lo, hi)
        })
        .collect()
}

/// Interior point with coordinates in `{1/16, ..., 15/16}`.
pub fn random_interior_alpha(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n).map(|_| Rational::from_ratio(rng.gen_range(1..=15), 16)).collect()
}

/// `count` probes for a gadget on `n` vertices: `alpha_init = e_0` first,
/// then points with `alpha_0 = 1` and other coordinates in eighths.
pub fn gadget_probes(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<Vec<Rational>> {
    (0..count)
        .map(|p| {
            let mut a = vec![Rational::one()];
            a.extend((0..n).map(|_| if p == 0 { Rational::zero() } else { eighth(rng, 0, 8) }));
            a
        })
        .collect()
}

pub fn distinct_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let i = rng.gen_range(0..n);
    let j = (i + rng.gen_range(1..n)) % n;
    (i, j)
}
