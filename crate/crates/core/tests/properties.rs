//! Randomized invariants of the kernel, the linear solvers, POD and DEIM,
//! checked against independent oracles.

use fracrom::deim::{build_deim_operator, deim_select};
use fracrom::kernel::{history_rhs, l1_weights, FractionalOrder};
use fracrom::linalg::{pcg_solve, thomas_solve, PcgOptions, Tridiagonal};
use fracrom::pod::{compute_basis, truncation_error, SnapshotKind, SnapshotMatrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

mod common;
use common::{deim_oracle, gaussian, gram_oracle, orthonormal, snapshot_set, subspace_gap};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn l1_weights_are_positive_decreasing_and_telescoping(beta in 0.001f64..0.999, m in 1usize..10_000) {
        let w = l1_weights(FractionalOrder::new(beta).unwrap(), m).unwrap();
        let b = w.as_slice();
        prop_assert_eq!(b.len(), m);
        prop_assert_eq!(b[0], 1.0);
        for j in 1..m {
            prop_assert!(b[j] > 0.0);
            prop_assert!(b[j] < b[j - 1]);
        }
        let sum: f64 = (0..m - 1).map(|j| b[j] - b[j + 1]).sum::<f64>() + b[m - 1];
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn history_is_linear(seed in any::<u64>(), beta in 0.05f64..0.95, m in 1usize..40, a in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 7;
        let u: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let v: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let w = l1_weights(FractionalOrder::new(beta).unwrap(), m).unwrap();
        let combined: Vec<Vec<f64>> = u.iter().zip(&v)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + a * q).collect())
            .collect();
        let lhs = history_rhs(&combined, w.as_slice()).unwrap();
        let hu = history_rhs(&u, w.as_slice()).unwrap();
        let hv = history_rhs(&v, w.as_slice()).unwrap();
        for i in 0..n {
            let rhs = a * hu[i] + a * hv[i];
            prop_assert!((lhs[i] - rhs).abs() <= 1e-13 * (1.0 + rhs.abs()) * m as f64);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn thomas_matches_dense_lu(seed in any::<u64>(), n in 2usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| 2.5 + rng.random_range(0.0..1.0)).collect();
        let tri = Tridiagonal::new(lower, diag, upper).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let x = DVector::from_vec(thomas_solve(&tri, &b).unwrap());
        let oracle = tri.to_dense().lu().solve(&DVector::from_vec(b)).unwrap();
        prop_assert!((x - &oracle).norm() <= 1e-12 * oracle.norm());
    }

    #[test]
    fn pcg_matches_dense_lu(seed in any::<u64>(), n in 2usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian(n, n, &mut rng);
        let a = &g * g.transpose() + DMatrix::identity(n, n) * n as f64;
        let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let opts = PcgOptions { tol: 1e-15, max_iter: Some(50 * n) };
        let x = DVector::from_vec(pcg_solve(&a, &b, &opts).unwrap().solution);
        let oracle = a.lu().solve(&DVector::from_vec(b)).unwrap();
        prop_assert!((x - &oracle).norm() <= 1e-12 * oracle.norm());
    }

    #[test]
    fn pod_truncation_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, rank) = snapshot_set(&mut rng);
        let snaps = SnapshotMatrix::from_matrix(u.clone(), SnapshotKind::State);
        let (sigma, _) = gram_oracle(&u);
        for r in 1..=rank.min(10) {
            let basis = compute_basis(&snaps, r).unwrap();
            let direct = truncation_error(&snaps, &basis);
            let tail: f64 = sigma.iter().take(rank).skip(r).map(|s| s * s).sum();
            prop_assert!((direct - tail).abs() <= 1e-8 * snaps.energy());
            prop_assert!(fracrom::pod::orthonormality_defect(basis.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn pod_basis_matches_gram_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 20;
        let u = gaussian(n, 6, &mut rng);
        let snaps = SnapshotMatrix::from_matrix(u.clone(), SnapshotKind::State);
        let (sigma, left) = gram_oracle(&u);
        for r in 1..=6 {
            let basis = compute_basis(&snaps, r).unwrap();
            for (s, o) in basis.singular_values().iter().zip(&sigma) {
                prop_assert!((s - o).abs() <= 1e-10 * sigma[0]);
            }
            let oracle = left.columns(0, r).into_owned();
            prop_assert!(subspace_gap(basis.matrix(), &oracle) <= 1e-8);
        }
    }

    #[test]
    fn pod_beats_random_subspaces(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, _) = snapshot_set(&mut rng);
        let snaps = SnapshotMatrix::from_matrix(u.clone(), SnapshotKind::State);
        let r = 2;
        let pod = truncation_error(&snaps, &compute_basis(&snaps, r).unwrap());
        for _ in 0..20 {
            let q = orthonormal(u.nrows(), r, &mut rng);
            let competitor = (&u - &q * (q.transpose() * &u)).norm_squared();
            prop_assert!(pod <= competitor * (1.0 + 1e-12));
        }
    }

    #[test]
    fn deim_selection_matches_oracle_retrace(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = orthonormal(30, 5, &mut rng);
        prop_assert_eq!(deim_select(&psi).unwrap(), deim_oracle(&psi));
    }

    #[test]
    fn deim_is_exact_on_the_interpolation_space(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(20..60);
        let s = rng.random_range(1..8);
        let r = rng.random_range(1..6);
        let psi = orthonormal(n, s, &mut rng);
        let phi = orthonormal(n, r, &mut rng);
        let idx = deim_select(&psi).unwrap();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), s);
        let op = build_deim_operator(&phi, &psi, &idx).unwrap();

        let f = &psi * DVector::from_fn(s, |_, _| rng.sample::<f64, _>(StandardNormal));
        let at_points: Vec<f64> = idx.iter().map(|&i| f[i]).collect();
        let reduced = op.apply(&at_points).unwrap();
        let exact = phi.transpose() * &f;
        prop_assert!((&reduced - &exact).norm() <= 1e-11 * exact.norm().max(1e-300));

        // the full-space reconstruction of arbitrary data interpolates at the points
        let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let g_points: Vec<f64> = idx.iter().map(|&i| g[i]).collect();
        let recon = op.reconstruct(&g_points).unwrap();
        for (&i, &v) in idx.iter().zip(&g_points) {
            prop_assert!((recon[i] - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
        // and composing the full formula with the projection gives the same reduced vector
        let through_full = phi.transpose() * &recon;
        let direct = op.apply(&g_points).unwrap();
        prop_assert!((through_full - direct).norm() <= 1e-12 * (1.0 + recon.norm()));
    }
}

#[test]
fn deim_selection_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let psi = orthonormal(200, 10, &mut rng);
    let first = deim_select(&psi).unwrap();
    for _ in 0..5 {
        assert_eq!(deim_select(&psi).unwrap(), first);
    }
}
