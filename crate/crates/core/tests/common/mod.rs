//! Random test matrices and independent oracles shared by the test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    gaussian(rows, cols, rng).qr().q()
}

/// Rank-deficient snapshot matrix with a spread of singular values.
pub fn snapshot_set(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, usize) {
    let n = rng.random_range(12..40);
    let ns = rng.random_range(6..30);
    let rank = rng.random_range(2..=n.min(ns) - 1);
    let left = orthonormal(n, rank, rng);
    let right = orthonormal(ns, rank, rng);
    let sigma = DMatrix::from_diagonal(&DVector::from_fn(rank, |i, _| 10f64.powf(-0.7 * i as f64)));
    (left * sigma * right.transpose(), rank)
}

/// Singular values and left singular vectors from the Gram matrix `U^T U`.
pub fn gram_oracle(u: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(u.transpose() * u);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    let mut left = DMatrix::zeros(u.nrows(), order.len());
    for (c, &i) in order.iter().enumerate() {
        if sigma[c] > 1e-8 * sigma[0] {
            let v = eig.eigenvectors.column(i);
            left.set_column(c, &(u * v / sigma[c]));
        }
    }
    (sigma, left)
}

/// Largest principal angle (as a sine) between two orthonormal subspaces.
pub fn subspace_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b * (b.transpose() * a)).norm()
}

/// Line-by-line greedy DEIM selection, written independently of the library.
pub fn deim_oracle(psi: &DMatrix<f64>) -> Vec<usize> {
    let argmax = |v: &DVector<f64>| {
        let mut best = 0;
        for i in 1..v.len() {
            if v[i].abs() > v[best].abs() {
                best = i;
            }
        }
        best
    };
    let mut picks = vec![argmax(&psi.column(0).into_owned())];
    for l in 1..psi.ncols() {
        let u = psi.columns(0, l).into_owned();
        let p_u = DMatrix::from_fn(l, l, |i, j| u[(picks[i], j)]);
        let p_psi = DVector::from_fn(l, |i, _| psi[(picks[i], l)]);
        let c = p_u.lu().solve(&p_psi).expect("nonsingular interpolation matrix");
        let r = psi.column(l).into_owned() - &u * c;
        picks.push(argmax(&r));
    }
    picks
}
