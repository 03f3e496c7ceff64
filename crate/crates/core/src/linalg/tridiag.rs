use nalgebra::DMatrix;

use super::SymmetricOperator;
use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[i]` multiplies `x[i-1]` in
/// row `i` (so `lower[0]` is unused) and `upper[i]` multiplies `x[i+1]`
/// (`upper[n-1]` unused).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        for (len, context) in [
            (lower.len(), "tridiagonal lower band"),
            (upper.len(), "tridiagonal upper band"),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                    context,
                });
            }
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j + 1 == i {
                self.lower[i]
            } else if i + 1 == j {
                self.upper[i]
            } else {
                0.0
            }
        })
    }

    /// `I + scale * self + scale * diag(extra)`.
    pub fn shifted(&self, scale: f64, extra: Option<&[f64]>) -> Self {
        let diag = self
            .diag
            .iter()
            .enumerate()
            .map(|(i, &d)| 1.0 + scale * (d + extra.map_or(0.0, |e| e[i])))
            .collect();
        Self {
            lower: self.lower.iter().map(|v| scale * v).collect(),
            diag,
            upper: self.upper.iter().map(|v| scale * v).collect(),
        }
    }

    /// True when every row satisfies `|d_i| > |l_i| + |u_i|`.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let off = if i > 0 { self.lower[i].abs() } else { 0.0 } + if i + 1 < n { self.upper[i].abs() } else { 0.0 };
            self.diag[i].abs() > off
        })
    }
}

impl SymmetricOperator for Tridiagonal {
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

/// Thomas elimination (tridiagonal LU without pivoting), O(N).
pub fn thomas_solve(tri: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = tri.len();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rhs.len(),
            context: "Thomas right-hand side",
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];

    let mut denom = tri.diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroPivot { row: 0 });
    }
    c[0] = tri.upper[0] / denom;
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = tri.diag[i] - tri.lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::ZeroPivot { row: i });
        }
        c[i] = tri.upper[i] / denom;
        x[i] = (rhs[i] - tri.lower[i] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let rhs = vec![1.0, -2.0, 3.5, 0.25];
        assert_eq!(thomas_solve(&Tridiagonal::identity(4), &rhs).unwrap(), rhs);
    }

    #[test]
    fn hand_eliminated_three_by_three() {
        let tri = Tridiagonal::new(vec![0.0, -1.0, -1.0], vec![2.0; 3], vec![-1.0, -1.0, 0.0]).unwrap();
        let x = thomas_solve(&tri, &[1.0, 0.0, 0.0]).unwrap();
        for (a, b) in x.iter().zip([0.75, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn random_dominant_systems_match_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n = 50;
            let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let upper: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n).map(|_| 2.5 + rng.random_range(0.0..1.0)).collect();
            let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let tri = Tridiagonal::new(lower, diag, upper).unwrap();
            let x = thomas_solve(&tri, &rhs).unwrap();
            let dense = tri.to_dense().lu().solve(&nalgebra::DVector::from_vec(rhs)).unwrap();
            let err: f64 = x
                .iter()
                .zip(dense.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-12 * dense.norm(), "err {err}");
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let tri = Tridiagonal::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            thomas_solve(&tri, &[1.0, 1.0]),
            Err(Error::ZeroPivot { row: 0 })
        ));
    }
}
