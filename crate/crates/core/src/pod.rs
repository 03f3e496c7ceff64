//! Snapshot collection and proper orthogonal decomposition.
//!
//! The POD basis of rank `r` is the first `r` left singular vectors of the
//! snapshot matrix. It minimizes the mean-square projection error, and
//!
//! ```text
//! sum_j || u_j - Phi Phi^T u_j ||^2 = sum_{i > r} sigma_i^2
//! ```

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fom::Trajectory;
use crate::problem::ProblemSpec;

/// Singular values at or below `RANK_TOL * sigma_1` count as zero.
pub const RANK_TOL: f64 = 1e-12;
/// Relative rank floor for DEIM bases.
pub const DEIM_RANK_TOL: f64 = f64::EPSILON;

/// Default energy fraction for [`energy_dimension`].
pub const DEFAULT_ENERGY: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    /// Solution states.
    State,
    /// Nonlinear terms `F(u^m, t_m)`.
    Nonlinear,
}

/// Origin of one snapshot column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotTag {
    pub beta: f64,
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: DMatrix<f64>,
    pub tags: Vec<SnapshotTag>,
    pub kind: SnapshotKind,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<f64>, tags: Vec<SnapshotTag>, kind: SnapshotKind) -> Result<Self> {
        if tags.len() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.ncols(),
                actual: tags.len(),
                context: "snapshot tags vs columns",
            });
        }
        Ok(Self { data, tags, kind })
    }

    /// Untagged snapshots, e.g. read back from disk.
    pub fn from_matrix(data: DMatrix<f64>, kind: SnapshotKind) -> Self {
        let tags = (0..data.ncols())
            .map(|j| SnapshotTag {
                beta: f64::NAN,
                level: j,
            })
            .collect();
        Self { data, tags, kind }
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Squared Frobenius norm, i.e. the total snapshot energy.
    pub fn energy(&self) -> f64 {
        self.data.norm_squared()
    }

    /// Side-by-side concatenation of snapshot sets of the same kind.
    pub fn hstack(parts: &[SnapshotMatrix]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let n = first.nrows();
        let mut columns = Vec::new();
        let mut tags = Vec::new();
        for p in parts {
            if p.nrows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: p.nrows(),
                    context: "snapshot state dimension",
                });
            }
            if p.kind != first.kind {
                return Err(Error::InvalidArgument(
                    "cannot mix state and nonlinear snapshots".into(),
                ));
            }
            columns.extend_from_slice(p.data.as_slice());
            tags.extend_from_slice(&p.tags);
        }
        Self::new(DMatrix::from_vec(n, tags.len(), columns), tags, first.kind)
    }
}

/// State snapshots `u^1..u^M` of every trajectory, ordered by sample and then
/// by time level. `u^0` is not a column.
pub fn collect_snapshots(trajectories: &[Trajectory]) -> Result<SnapshotMatrix> {
    collect_snapshots_with(trajectories, SnapshotKind::State, |u, _| u.to_vec())
}

/// Nonlinear snapshots `F(u^m, t_m) = g(u^m) - f(., t_m)`, `m = 1..M`.
pub fn collect_nonlinear_snapshots(trajectories: &[Trajectory], spec: &ProblemSpec) -> Result<SnapshotMatrix> {
    collect_snapshots_with(trajectories, SnapshotKind::Nonlinear, |u, t| {
        spec.nonlinear_vector(u, t)
    })
}

/// Apply `transform(u^m, t_m)` to each computed level.
pub fn collect_snapshots_with(
    trajectories: &[Trajectory],
    kind: SnapshotKind,
    transform: impl Fn(&[f64], f64) -> Vec<f64>,
) -> Result<SnapshotMatrix> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidArgument("no trajectories to collect".into()))?;
    let n = first.dim();
    let mut columns: Vec<f64> = Vec::new();
    let mut tags = Vec::new();
    for traj in trajectories {
        if traj.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: traj.dim(),
                context: "snapshot state dimension",
            });
        }
        for (m, u) in traj.states.iter().enumerate().skip(1) {
            let col = transform(u, traj.grid.time.t(m));
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: col.len(),
                    context: "transformed snapshot",
                });
            }
            columns.extend_from_slice(&col);
            tags.push(SnapshotTag {
                beta: traj.beta.get(),
                level: m,
            });
        }
    }
    let data = DMatrix::from_vec(n, tags.len(), columns);
    SnapshotMatrix::new(data, tags, kind)
}

/// Orthonormal basis with the singular values of the matrix it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    matrix: Arc<DMatrix<f64>>,
    singular_values: Vec<f64>,
}

impl ReducedBasis {
    /// Wrap an existing basis matrix. Orthonormality is checked.
    pub fn new(matrix: DMatrix<f64>, singular_values: Vec<f64>) -> Result<Self> {
        let dev = orthonormality_defect(&matrix);
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis columns are not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Self {
            matrix: Arc::new(matrix),
            singular_values,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn shared_matrix(&self) -> Arc<DMatrix<f64>> {
        Arc::clone(&self.matrix)
    }

    /// Every singular value of the source snapshot matrix, nonincreasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Retained dimension `r`.
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Length `N` of each basis vector.
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// `Phi^T v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (self.matrix.transpose() * v).data.into()
    }

    /// `Phi a`.
    pub fn lift(&self, a: &[f64]) -> Vec<f64> {
        let a = DVector::from_column_slice(a);
        (&*self.matrix * a).data.into()
    }

    /// The leading `r` columns.
    pub fn truncate(&self, r: usize) -> Result<Self> {
        if r == 0 || r > self.dim() {
            return Err(Error::RankExceeded {
                requested: r,
                available: self.dim(),
            });
        }
        Ok(Self {
            matrix: Arc::new(self.matrix.columns(0, r).into_owned()),
            singular_values: self.singular_values.clone(),
        })
    }

    /// `sum_{i > r} sigma_i^2` for the retained `r`.
    pub fn tail_energy(&self) -> f64 {
        self.singular_values.iter().skip(self.dim()).map(|s| s * s).sum()
    }
}

/// `max |Phi^T Phi - I|`.
pub fn orthonormality_defect(phi: &DMatrix<f64>) -> f64 {
    let g = phi.transpose() * phi;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Number of singular values above `RANK_TOL * sigma_1`.
pub fn numerical_rank(singular_values: &[f64]) -> usize {
    rank_above(singular_values, RANK_TOL)
}

fn rank_above(singular_values: &[f64], rel_tol: f64) -> usize {
    match singular_values.first() {
        Some(&s1) if s1 > 0.0 => singular_values.iter().take_while(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// Smallest `r` whose leading singular values carry at least `tau` of the energy.
pub fn energy_dimension(singular_values: &[f64], tau: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        acc += s * s;
        if acc >= tau * total {
            return i + 1;
        }
    }
    singular_values.len()
}

/// The first `r` left singular vectors of the snapshot matrix.
///
/// Each column is signed so that its largest-magnitude entry is positive.
pub fn compute_basis(snapshots: &SnapshotMatrix, r: usize) -> Result<ReducedBasis> {
    compute_basis_with_tolerance(snapshots, r, RANK_TOL)
}

/// Basis for DEIM. Only directions at the roundoff floor `eps * sigma_1` are
/// refused: the interpolation basis is orthonormal whatever the decay, and
/// the greedy selection rejects dependent columns itself.
pub fn compute_nonlinear_basis(snapshots: &SnapshotMatrix, s: usize) -> Result<ReducedBasis> {
    compute_basis_with_tolerance(snapshots, s, DEIM_RANK_TOL)
}

/// As [`compute_basis`], treating `sigma_i <= rel_tol * sigma_1` as zero.
pub fn compute_basis_with_tolerance(snapshots: &SnapshotMatrix, r: usize, rel_tol: f64) -> Result<ReducedBasis> {
    let (n, ns) = snapshots.data.shape();
    if r == 0 || r > n.min(ns) {
        return Err(Error::RankExceeded {
            requested: r,
            available: n.min(ns),
        });
    }
    let svd = snapshots.data.clone().svd(true, false);
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rank = rank_above(&sigma, rel_tol);
    if r > rank {
        return Err(Error::RankExceeded {
            requested: r,
            available: rank,
        });
    }
    let u = svd.u.expect("left singular vectors requested");
    let mut phi = u.columns(0, r).into_owned();
    for mut col in phi.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    let basis = ReducedBasis {
        matrix: Arc::new(phi),
        singular_values: sigma,
    };
    debug_assert!(
        truncation_identity_holds(snapshots, &basis),
        "POD truncation identity violated"
    );
    Ok(basis)
}

/// `sum_j || u_j - Phi Phi^T u_j ||^2`, computed directly.
pub fn truncation_error(snapshots: &SnapshotMatrix, basis: &ReducedBasis) -> f64 {
    let phi = basis.matrix();
    let coeffs = phi.transpose() * &snapshots.data;
    (&snapshots.data - phi * coeffs).norm_squared()
}

/// Direct truncation error equals the singular-value tail to `1e-8` relative,
/// or to `1e-12` of the total energy when the tail is negligible.
pub fn truncation_identity_holds(snapshots: &SnapshotMatrix, basis: &ReducedBasis) -> bool {
    let direct = truncation_error(snapshots, basis);
    let tail = basis.tail_energy();
    let total = snapshots.energy().max(f64::MIN_POSITIVE);
    (direct - tail).abs() <= 1e-8 * tail.max(direct) + 1e-12 * total
}
