//! Discrete empirical interpolation.
//!
//! A nonlinear term `F` is approximated from its values at `s` selected grid
//! points `P^T F` by `Psi (P^T Psi)^{-1} P^T F`. After Galerkin projection the
//! ROM only needs `Q = Phi^T Psi (P^T Psi)^{-1}` (`r x s`).
//!
//! Indices are 0-based here; file formats and reports use 1-based indices.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// Columns whose interpolation residual is this small relative to the column
/// itself are treated as dependent on the previous ones.
const DEPENDENCE_TOL: f64 = 1e-13;

/// First index of the largest `|v_i|`; ties go to the smallest index.
fn argmax_abs(v: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in v.enumerate() {
        if x.abs() > best.1 {
            best = (i, x.abs());
        }
    }
    best
}

fn gather_rows(m: &DMatrix<f64>, rows: &[usize], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |i, j| m[(rows[i], j)])
}

/// Greedy point selection on the columns of `psi` (`N x s`).
pub fn deim_select(psi: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (n, s) = psi.shape();
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!(
            "DEIM needs 1 <= s <= N, got s = {s}, N = {n}"
        )));
    }
    let (first, peak) = argmax_abs(psi.column(0).iter().copied());
    if peak == 0.0 {
        return Err(Error::DependentBasis { column: 0 });
    }
    let mut indices = vec![first];
    for l in 1..s {
        let psi_l = psi.column(l);
        let scale = psi_l.amax();
        let sub = gather_rows(psi, &indices, l);
        let rhs = DVector::from_iterator(l, indices.iter().map(|&i| psi_l[i]));
        let c = sub.lu().solve(&rhs).ok_or(Error::DependentBasis { column: l })?;
        let residual = psi_l - psi.columns(0, l) * c;
        let (next, size) = argmax_abs(residual.iter().copied());
        if !(size > DEPENDENCE_TOL * scale) || indices.contains(&next) {
            return Err(Error::DependentBasis { column: l });
        }
        indices.push(next);
    }
    Ok(indices)
}

#[derive(Debug, Clone)]
pub struct DeimOperator {
    indices: Vec<usize>,
    psi: Arc<DMatrix<f64>>,
    /// `Phi^T Psi (P^T Psi)^{-1}`, `r x s`.
    projector: DMatrix<f64>,
    /// LU factors of `P^T Psi`.
    interp_lu: LU<f64, Dyn, Dyn>,
    /// `P^T Phi`, `s x r`.
    phi_rows: DMatrix<f64>,
}

/// Assemble the operator for POD basis `phi` (`N x r`), nonlinear basis
/// `psi` (`N x s`) and interpolation indices.
pub fn build_deim_operator(phi: &DMatrix<f64>, psi: &DMatrix<f64>, indices: &[usize]) -> Result<DeimOperator> {
    let (n, s) = psi.shape();
    if phi.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: phi.nrows(),
            context: "POD vs nonlinear basis length",
        });
    }
    if indices.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            actual: indices.len(),
            context: "DEIM indices vs nonlinear basis columns",
        });
    }
    for (k, &i) in indices.iter().enumerate() {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if indices[..k].contains(&i) {
            return Err(Error::InvalidArgument(format!("repeated DEIM index {}", i + 1)));
        }
    }
    let interp = gather_rows(psi, indices, s);
    let interp_lu = interp.clone().lu();
    let inverse = interp_lu
        .try_inverse()
        .ok_or(Error::Singular("DEIM interpolation matrix P^T Psi"))?;
    let projector = phi.transpose() * psi * inverse;
    Ok(DeimOperator {
        indices: indices.to_vec(),
        psi: Arc::new(psi.clone()),
        projector,
        interp_lu,
        phi_rows: gather_rows(phi, indices, phi.ncols()),
    })
}

impl DeimOperator {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn indices_one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    /// Number of interpolation points `s`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// Rows of `Phi` at the interpolation points.
    pub fn phi_rows(&self) -> &DMatrix<f64> {
        &self.phi_rows
    }

    /// `Q F_p`, with `values` holding `F` at the interpolation points in index order.
    pub fn apply(&self, values: &[f64]) -> Result<DVector<f64>> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: values.len(),
                context: "DEIM point values",
            });
        }
        Ok(&self.projector * DVector::from_column_slice(values))
    }

    /// Like [`apply`](Self::apply), calling `eval(i)` once for each selected grid index `i`.
    pub fn apply_pointwise(&self, mut eval: impl FnMut(usize) -> f64) -> DVector<f64> {
        let values = DVector::from_iterator(self.len(), self.indices.iter().map(|&i| eval(i)));
        &self.projector * values
    }

    /// Full-length interpolant `Psi (P^T Psi)^{-1} F_p`.
    pub fn reconstruct(&self, values: &[f64]) -> Result<DVector<f64>> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: values.len(),
                context: "DEIM point values",
            });
        }
        let c = self
            .interp_lu
            .solve(&DVector::from_column_slice(values))
            .ok_or(Error::Singular("DEIM interpolation matrix P^T Psi"))?;
        Ok(&*self.psi * c)
    }
}
