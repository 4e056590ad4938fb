#![allow(dead_code)]

use heisenlab::{GridSpec, Operator, C64};
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(d: usize, seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((d, d), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_operator(grid: GridSpec, seed: u64) -> Operator {
    Operator::new(grid, random_matrix(grid.dim(), seed), format!("R{seed}")).unwrap()
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Singular values from the eigenvalues of M*M (no SVD involved).
pub fn oracle_singular_values(m: &Array2<C64>) -> Vec<f64> {
    let g = adjoint(m).dot(m);
    let (vals, _) = g.eigh(UPLO::Lower).unwrap();
    vals.iter().map(|&l| l.max(0.0).sqrt()).collect()
}

pub fn oracle_schatten(m: &Array2<C64>, q: f64) -> f64 {
    let s = oracle_singular_values(m);
    if q.is_infinite() {
        s.iter().cloned().fold(0.0, f64::max)
    } else {
        s.iter().map(|x| x.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}
