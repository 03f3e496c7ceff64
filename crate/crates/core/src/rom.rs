//! Galerkin POD/DEIM reduced-order model
//!
//! ```text
//! (I_r + gamma A_r) a^m + gamma Q F_p(P^T Phi a^m, t_m) = sum_j (b_{j-1} - b_j) a^{m-j} + b_{m-1} a^0
//! ```
//!
//! with `A_r = Phi^T A Phi` and `a^0 = Phi^T u^0`. The operators are built once
//! and reused for every fractional order; only `gamma` and the L1 weights change.

use std::sync::Arc;

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::deim::DeimOperator;
use crate::error::{Error, Result};
use crate::kernel::{cached_l1_weights, gamma_scale, history_rhs, FractionalOrder};
use crate::pod::ReducedBasis;
use crate::problem::ProblemSpec;
use crate::stiffness::StiffnessMatrix;

#[derive(Debug, Clone)]
pub struct RomOperators {
    pub basis: ReducedBasis,
    /// `Phi^T A Phi`.
    pub reduced_stiffness: DMatrix<f64>,
    pub deim: Option<DeimOperator>,
}

pub fn build_rom(
    stiffness: &StiffnessMatrix,
    basis: &ReducedBasis,
    deim: Option<DeimOperator>,
) -> Result<RomOperators> {
    if stiffness.dim() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: stiffness.dim(),
            actual: basis.len(),
            context: "stiffness order vs basis length",
        });
    }
    if let Some(d) = &deim {
        if d.projector().nrows() != basis.dim() || d.psi().nrows() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: d.projector().nrows(),
                context: "DEIM projector rows vs basis dimension",
            });
        }
    }
    let phi = basis.matrix();
    let reduced_stiffness = phi.transpose() * stiffness.apply_to_columns(phi);
    Ok(RomOperators {
        basis: basis.clone(),
        reduced_stiffness,
        deim,
    })
}

impl RomOperators {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RomOptions {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl Default for RomOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-11,
            newton_max_iter: 50,
        }
    }
}

/// `Phi^T f(., t_m)` for `m = 0..M`. Independent of the fractional order, so
/// it is computed once per problem and basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLoad {
    levels: Vec<DVector<f64>>,
}

impl ReducedLoad {
    pub fn new(basis: &ReducedBasis, spec: &ProblemSpec) -> Self {
        let phi_t = basis.matrix().transpose();
        let levels = (0..=spec.grid.time.steps)
            .map(|m| &phi_t * DVector::from_vec(spec.source_vector(spec.grid.time.t(m))))
            .collect();
        Self { levels }
    }

    pub fn level(&self, m: usize) -> &DVector<f64> {
        &self.levels[m]
    }

    pub fn steps(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Work counters for one reduced solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RomStats {
    /// Pointwise evaluations of `F` (or of `g'`).
    pub nonlinear_evaluations: usize,
    /// Operations of length `N` performed inside the time loop.
    pub full_dim_work: usize,
    pub newton_iterations: usize,
    pub factorizations: usize,
}

#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    /// `a^0..a^M`.
    pub coefficients: Vec<Vec<f64>>,
    pub beta: FractionalOrder,
    basis: Arc<DMatrix<f64>>,
}

impl ReducedTrajectory {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `Phi a^m`.
    pub fn lift(&self, m: usize) -> Result<Vec<f64>> {
        let a = self.coefficients.get(m).ok_or(Error::IndexOutOfRange {
            index: m,
            len: self.coefficients.len(),
        })?;
        Ok((&*self.basis * DVector::from_column_slice(a)).data.into())
    }

    pub fn lift_final(&self) -> Vec<f64> {
        self.lift(self.coefficients.len() - 1)
            .expect("a reduced trajectory always holds a^0")
    }
}

/// Reduced solve at order `beta`.
pub fn rom_solve(
    rom: &RomOperators,
    spec: &ProblemSpec,
    beta: FractionalOrder,
) -> Result<(ReducedTrajectory, RomStats)> {
    let load = spec.source.is_some().then(|| ReducedLoad::new(&rom.basis, spec));
    rom_solve_with_load(rom, spec, beta, load.as_ref(), &RomOptions::default())
}

/// Reduced solve with a precomputed load. For linear problems with a source
/// `load` must be given; nonlinear problems take the source through `F`.
pub fn rom_solve_with_load(
    rom: &RomOperators,
    spec: &ProblemSpec,
    beta: FractionalOrder,
    load: Option<&ReducedLoad>,
    options: &RomOptions,
) -> Result<(ReducedTrajectory, RomStats)> {
    let phi = rom.basis.matrix();
    if phi.nrows() != spec.grid.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.grid.len(),
            actual: phi.nrows(),
            context: "basis length vs grid size",
        });
    }
    let r = rom.dim();
    let steps = spec.grid.time.steps;
    let gamma = gamma_scale(beta, spec.grid.time.dt())?.gamma;
    let weights = cached_l1_weights(beta, steps)?;
    let step_matrix = DMatrix::identity(r, r) + &rom.reduced_stiffness * gamma;
    let mut stats = RomStats::default();

    let mut coefficients: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    coefficients.push(rom.basis.project(&spec.initial_state()));

    if spec.is_linear() {
        if spec.source.is_some() {
            match load {
                Some(l) if l.steps() == steps && l.level(0).len() == r => {}
                _ => {
                    return Err(Error::InvalidArgument(
                        "linear problem with a source needs a matching reduced load".into(),
                    ))
                }
            }
        }
        let lu = step_matrix.clone().lu();
        stats.factorizations += 1;
        for m in 1..=steps {
            let mut rhs = DVector::from_vec(history_rhs(&coefficients, weights.prefix(m))?);
            if let (Some(l), true) = (load, spec.source.is_some()) {
                rhs.axpy(gamma, l.level(m), 1.0);
            }
            let a = lu.solve(&rhs).ok_or(Error::Singular("reduced step matrix"))?;
            coefficients.push(a.data.into());
        }
    } else {
        for m in 1..=steps {
            let hist = DVector::from_vec(history_rhs(&coefficients, weights.prefix(m))?);
            let a = newton_level(
                rom,
                spec,
                m,
                gamma,
                &step_matrix,
                &hist,
                &coefficients[m - 1],
                options,
                &mut stats,
            )?;
            coefficients.push(a);
        }
    }
    debug!("ROM beta={} r={} stats={:?}", beta, r, stats);
    Ok((
        ReducedTrajectory {
            coefficients,
            beta,
            basis: rom.basis.shared_matrix(),
        },
        stats,
    ))
}

#[allow(clippy::too_many_arguments)]
fn newton_level(
    rom: &RomOperators,
    spec: &ProblemSpec,
    level: usize,
    gamma: f64,
    step_matrix: &DMatrix<f64>,
    hist: &DVector<f64>,
    start: &[f64],
    options: &RomOptions,
    stats: &mut RomStats,
) -> Result<Vec<f64>> {
    let t = spec.grid.time.t(level);
    let reaction = &spec.reaction;
    let r = rom.dim();
    let phi = rom.basis.matrix();
    let mut a = DVector::from_column_slice(start);
    let mut residual_norm = f64::INFINITY;

    // Source values at the interpolation points do not change during the iteration.
    let deim_source: Option<Vec<f64>> = rom
        .deim
        .as_ref()
        .map(|d| d.indices().iter().map(|&k| spec.source_at(k, t)).collect());

    for _ in 0..options.newton_max_iter {
        let (fr, jr) = match (&rom.deim, &deim_source) {
            (Some(d), Some(src)) => {
                let u_p = d.phi_rows() * &a;
                let f_p: Vec<f64> = u_p.iter().zip(src).map(|(&u, &f)| reaction.value(u) - f).collect();
                let mut dphi = d.phi_rows().clone();
                for (i, &u) in u_p.iter().enumerate() {
                    let dg = reaction.derivative(u);
                    dphi.row_mut(i).scale_mut(dg);
                }
                stats.nonlinear_evaluations += 2 * d.len();
                (d.apply(&f_p)?, d.projector() * dphi)
            }
            _ => {
                // no hyper-reduction: evaluate on the whole grid
                let u = phi * &a;
                let f = DVector::from_vec(spec.nonlinear_vector(u.as_slice(), t));
                let mut dphi = phi.clone();
                for (i, &ui) in u.iter().enumerate() {
                    dphi.row_mut(i).scale_mut(reaction.derivative(ui));
                }
                stats.nonlinear_evaluations += 2 * u.len();
                stats.full_dim_work += 4;
                (phi.transpose() * f, phi.transpose() * dphi)
            }
        };
        let residual = step_matrix * &a + &fr * gamma - hist;
        residual_norm = residual.norm();
        let jac = step_matrix + jr * gamma;
        stats.factorizations += 1;
        let d = jac
            .lu()
            .solve(&(-residual))
            .ok_or(Error::Singular("reduced Jacobian"))?;
        a += &d;
        stats.newton_iterations += 1;
        if d.norm() <= options.newton_tol {
            debug_assert_eq!(a.len(), r);
            return Ok(a.data.into());
        }
    }
    Err(Error::NewtonNotConverged {
        level,
        iterations: options.newton_max_iter,
        residual_norm,
        last_iterate: a.data.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiscretizationGrid;
    use crate::problem::{Diffusion, Reaction};

    fn canonical_basis(n: usize, r: usize) -> ReducedBasis {
        ReducedBasis::new(DMatrix::identity(n, r), vec![1.0; r]).unwrap()
    }

    fn spec() -> ProblemSpec {
        ProblemSpec {
            grid: DiscretizationGrid::uniform(1, 0.0, 1.0, 6, 1.0, 5).unwrap(),
            diffusion: Diffusion::field(|x| 1.0 + x[0]),
            reaction: Reaction::None,
            source: None,
            initial: None,
            beta: FractionalOrder::new(0.4).unwrap(),
        }
    }

    #[test]
    fn coordinate_basis_gives_leading_block() {
        let s = spec();
        let a = s.stiffness().unwrap();
        let rom = build_rom(&a, &canonical_basis(6, 3), None).unwrap();
        let dense = a.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((rom.reduced_stiffness[(i, j)] - dense[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_problem_stays_zero() {
        let s = spec();
        let rom = build_rom(&s.stiffness().unwrap(), &canonical_basis(6, 2), None).unwrap();
        let (traj, stats) = rom_solve(&rom, &s, s.beta).unwrap();
        assert_eq!(traj.len(), 6);
        assert!(traj.coefficients.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(stats.factorizations, 1);
        assert_eq!(stats.full_dim_work, 0);
    }

    #[test]
    fn linear_source_requires_load() {
        let mut s = spec();
        s.source = Some(Arc::new(|_, t| t));
        let rom = build_rom(&s.stiffness().unwrap(), &canonical_basis(6, 2), None).unwrap();
        assert!(rom_solve_with_load(&rom, &s, s.beta, None, &RomOptions::default()).is_err());
        assert!(rom_solve(&rom, &s, s.beta).is_ok());
    }

    #[test]
    fn lift_checks_range() {
        let s = spec();
        let rom = build_rom(&s.stiffness().unwrap(), &canonical_basis(6, 2), None).unwrap();
        let (traj, _) = rom_solve(&rom, &s, s.beta).unwrap();
        assert!(matches!(traj.lift(6), Err(Error::IndexOutOfRange { .. })));
        assert_eq!(traj.lift(0).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let s = spec();
        assert!(build_rom(&s.stiffness().unwrap(), &canonical_basis(5, 2), None).is_err());
    }
}
