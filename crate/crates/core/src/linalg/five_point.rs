use nalgebra::DMatrix;

use super::SymmetricOperator;

/// Symmetric 5-point operator on an `nx * ny` lexicographic grid (`x` fastest).
///
/// `east[k]` couples unknown `k` with `k + 1` and is zero on the last column;
/// `north[k]` couples `k` with `k + nx` and is zero on the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct FivePoint {
    pub nx: usize,
    pub ny: usize,
    pub diag: Vec<f64>,
    pub east: Vec<f64>,
    pub north: Vec<f64>,
}

impl FivePoint {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let nx = self.nx;
        let n = self.len();
        for k in 0..n {
            let mut s = self.diag[k] * x[k];
            if k + 1 < n {
                s += self.east[k] * x[k + 1];
            }
            if k >= 1 {
                s += self.east[k - 1] * x[k - 1];
            }
            if k + nx < n {
                s += self.north[k] * x[k + nx];
            }
            if k >= nx {
                s += self.north[k - nx] * x[k - nx];
            }
            y[k] = s;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            a[(k, k)] = self.diag[k];
            if k + 1 < n && self.east[k] != 0.0 {
                a[(k, k + 1)] = self.east[k];
                a[(k + 1, k)] = self.east[k];
            }
            if k + self.nx < n && self.north[k] != 0.0 {
                a[(k, k + self.nx)] = self.north[k];
                a[(k + self.nx, k)] = self.north[k];
            }
        }
        a
    }

    /// `I + scale * self + scale * diag(extra)`.
    pub fn shifted(&self, scale: f64, extra: Option<&[f64]>) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            diag: self
                .diag
                .iter()
                .enumerate()
                .map(|(k, &d)| 1.0 + scale * (d + extra.map_or(0.0, |e| e[k])))
                .collect(),
            east: self.east.iter().map(|v| scale * v).collect(),
            north: self.north.iter().map(|v| scale * v).collect(),
        }
    }

    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.len();
        let nx = self.nx;
        (0..n).all(|k| {
            let mut off = self.east[k].abs() + self.north[k].abs();
            if k >= 1 {
                off += self.east[k - 1].abs();
            }
            if k >= nx {
                off += self.north[k - nx].abs();
            }
            self.diag[k].abs() > off
        })
    }
}

impl SymmetricOperator for FivePoint {
    fn dim(&self) -> usize {
        self.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }
}
