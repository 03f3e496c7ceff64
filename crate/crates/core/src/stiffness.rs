//! Flux-form centered differences for `-div(mu grad u)` with homogeneous
//! Dirichlet data, scaled by `1/h^2` (`eta_{i+1/2} = mu(x_{i+1/2}) / h^2`).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::DiscretizationGrid;
use crate::linalg::{pcg_solve_with, thomas_solve, FivePoint, Jacobi, PcgOptions, SymmetricOperator, Tridiagonal};
use crate::problem::{Diffusion, SpatialFn};

#[derive(Debug, Clone, PartialEq)]
pub enum StiffnessMatrix {
    /// 1D three-point stencil.
    Tridiagonal(Tridiagonal),
    /// 2D five-point stencil, lexicographic ordering.
    FivePoint(FivePoint),
}

fn sample_positive(mu: &SpatialFn, x: &[f64]) -> Result<f64> {
    let v = mu(x);
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonPositiveDiffusion {
            value: v,
            location: x.to_vec(),
        })
    }
}

pub fn assemble_stiffness(diffusion: &Diffusion, grid: &DiscretizationGrid) -> Result<StiffnessMatrix> {
    match grid.dim() {
        1 => match diffusion {
            Diffusion::Scalar(mu) => assemble_stiffness_1d(mu, grid),
            Diffusion::Tensor { .. } => Err(Error::InvalidArgument("a diffusion tensor needs a 2D grid".into())),
        },
        _ => assemble_stiffness_2d(diffusion, grid),
    }
}

/// Tridiagonal matrix with diagonal `eta_{i-1/2} + eta_{i+1/2}` and
/// off-diagonals `-eta_{i+1/2}`.
pub fn assemble_stiffness_1d(mu: &SpatialFn, grid: &DiscretizationGrid) -> Result<StiffnessMatrix> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("1D assembly on a 2D grid".into()));
    }
    let axis = grid.axis(0);
    let n = axis.interior;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two interior nodes, got {n}"
        )));
    }
    let h2 = axis.h() * axis.h();
    // eta[i] lives at x_{i+1/2}, i = 0..=N
    let eta = (0..=n)
        .map(|i| sample_positive(mu, &[axis.half_node(i)]).map(|v| v / h2))
        .collect::<Result<Vec<_>>>()?;
    let diag = (0..n).map(|i| eta[i] + eta[i + 1]).collect();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n - 1 {
        upper[i] = -eta[i + 1];
        lower[i + 1] = -eta[i + 1];
    }
    Ok(StiffnessMatrix::Tridiagonal(Tridiagonal { lower, diag, upper }))
}

/// Five-point operator for `-d/dx(mu_xx du/dx) - d/dy(mu_yy du/dy)`.
/// A scalar coefficient is used for both directions; off-diagonal tensor
/// entries must vanish.
pub fn assemble_stiffness_2d(diffusion: &Diffusion, grid: &DiscretizationGrid) -> Result<StiffnessMatrix> {
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("2D assembly on a 1D grid".into()));
    }
    let (ax, ay) = (grid.axis(0), grid.axis(1));
    let (nx, ny) = (ax.interior, ay.interior);
    let (mu_x, mu_y) = match diffusion {
        Diffusion::Scalar(mu) => (mu, mu),
        Diffusion::Tensor { xx, yy, xy } => {
            if let Some(xy) = xy {
                for j in 1..=ny {
                    for i in 1..=nx {
                        let p = [ax.node(i), ay.node(j)];
                        let v = xy(&p);
                        if v != 0.0 {
                            return Err(Error::AnisotropicTensor {
                                value: v,
                                location: p.to_vec(),
                            });
                        }
                    }
                }
            }
            (xx, yy)
        }
    };
    let hx2 = ax.h() * ax.h();
    let hy2 = ay.h() * ay.h();
    let n = nx * ny;
    let mut diag = vec![0.0; n];
    let mut east = vec![0.0; n];
    let mut north = vec![0.0; n];
    for j in 0..ny {
        let y = ay.node(j + 1);
        for i in 0..nx {
            let x = ax.node(i + 1);
            let k = j * nx + i;
            let w = sample_positive(mu_x, &[ax.half_node(i), y])? / hx2;
            let e = sample_positive(mu_x, &[ax.half_node(i + 1), y])? / hx2;
            let s = sample_positive(mu_y, &[x, ay.half_node(j)])? / hy2;
            let nn = sample_positive(mu_y, &[x, ay.half_node(j + 1)])? / hy2;
            diag[k] = w + e + s + nn;
            if i + 1 < nx {
                east[k] = -e;
            }
            if j + 1 < ny {
                north[k] = -nn;
            }
        }
    }
    Ok(StiffnessMatrix::FivePoint(FivePoint {
        nx,
        ny,
        diag,
        east,
        north,
    }))
}

/// Work done by one linear solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveInfo {
    pub pcg_iterations: usize,
}

impl StiffnessMatrix {
    pub fn dim(&self) -> usize {
        match self {
            StiffnessMatrix::Tridiagonal(t) => t.len(),
            StiffnessMatrix::FivePoint(p) => p.len(),
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        match self {
            StiffnessMatrix::Tridiagonal(t) => t.matvec(x, y),
            StiffnessMatrix::FivePoint(p) => p.matvec(x, y),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            StiffnessMatrix::Tridiagonal(t) => t.to_dense(),
            StiffnessMatrix::FivePoint(p) => p.to_dense(),
        }
    }

    /// Time-step matrix `I + gamma A + gamma diag(extra)`.
    pub fn step_matrix(&self, gamma: f64, extra: Option<&[f64]>) -> StiffnessMatrix {
        match self {
            StiffnessMatrix::Tridiagonal(t) => StiffnessMatrix::Tridiagonal(t.shifted(gamma, extra)),
            StiffnessMatrix::FivePoint(p) => StiffnessMatrix::FivePoint(p.shifted(gamma, extra)),
        }
    }

    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        match self {
            StiffnessMatrix::Tridiagonal(t) => t.is_strictly_diagonally_dominant(),
            StiffnessMatrix::FivePoint(p) => p.is_strictly_diagonally_dominant(),
        }
    }

    /// Solve `self x = rhs`: Thomas elimination in 1D, Jacobi-PCG in 2D
    /// (warm-started from `guess` when given).
    pub fn solve(&self, rhs: &[f64], guess: Option<&[f64]>, pcg: &PcgOptions) -> Result<(Vec<f64>, SolveInfo)> {
        match self {
            StiffnessMatrix::Tridiagonal(t) => Ok((thomas_solve(t, rhs)?, SolveInfo::default())),
            StiffnessMatrix::FivePoint(p) => {
                let out = pcg_solve_with(p, rhs, guess, pcg, &Jacobi::new(p))?;
                Ok((
                    out.solution,
                    SolveInfo {
                        pcg_iterations: out.iterations,
                    },
                ))
            }
        }
    }

    /// `A Phi`, column by column.
    pub fn apply_to_columns(&self, phi: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, phi.ncols());
        let mut y = vec![0.0; n];
        for (c, col) in phi.column_iter().enumerate() {
            let x: Vec<f64> = col.iter().copied().collect();
            self.matvec(&x, &mut y);
            out.column_mut(c).copy_from_slice(&y);
        }
        out
    }
}

impl SymmetricOperator for StiffnessMatrix {
    fn dim(&self) -> usize {
        StiffnessMatrix::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }

    fn diagonal(&self) -> Vec<f64> {
        match self {
            StiffnessMatrix::Tridiagonal(t) => t.diag.clone(),
            StiffnessMatrix::FivePoint(p) => p.diag.clone(),
        }
    }
}
