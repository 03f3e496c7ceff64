//! Full-order time stepping of the L1-discretized problem
//!
//! ```text
//! (I + gamma A) u^m + gamma F(u^m, t_m) = sum_{j=1}^{m-1} (b_{j-1} - b_j) u^{m-j} + b_{m-1} u^0
//! ```
//!
//! with `F(u, t) = g(u) - f(., t)`.

use log::{debug, trace};

use crate::error::{Error, Result};
use crate::grid::DiscretizationGrid;
use crate::kernel::{cached_l1_weights, gamma_scale, history_rhs, FractionalOrder};
use crate::linalg::{norm2, PcgOptions};
use crate::problem::ProblemSpec;
use crate::stiffness::StiffnessMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomOptions {
    /// Gauss-Newton stops once the step 2-norm falls to this value.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Used by the 2D solves.
    pub pcg: PcgOptions,
}

impl Default for FomOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max_iter: 50,
            pcg: PcgOptions::default(),
        }
    }
}

/// Gauss-Newton history at one time level.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonLog {
    /// `||r(u_l)||` at every iterate the step was computed from.
    pub residual_norms: Vec<f64>,
    pub step_norms: Vec<f64>,
}

impl NewtonLog {
    pub fn iterations(&self) -> usize {
        self.step_norms.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FomStats {
    pub linear_solves: usize,
    pub pcg_iterations: usize,
    /// One entry per time level for nonlinear problems; empty otherwise.
    pub newton: Vec<NewtonLog>,
}

/// States `u^0..u^M` at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub beta: FractionalOrder,
    pub grid: DiscretizationGrid,
}

impl Trajectory {
    /// Number of stored levels (`M + 1`).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn state(&self, m: usize) -> Result<&[f64]> {
        self.states.get(m).map(Vec::as_slice).ok_or(Error::IndexOutOfRange {
            index: m,
            len: self.states.len(),
        })
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("a trajectory always holds u^0")
    }
}

/// Assembles once and solves for any number of fractional orders.
#[derive(Debug, Clone)]
pub struct FomSolver {
    spec: ProblemSpec,
    stiffness: StiffnessMatrix,
    options: FomOptions,
}

impl FomSolver {
    pub fn new(spec: ProblemSpec, options: FomOptions) -> Result<Self> {
        let stiffness = spec.stiffness()?;
        Ok(Self {
            spec,
            stiffness,
            options,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn stiffness(&self) -> &StiffnessMatrix {
        &self.stiffness
    }

    pub fn options(&self) -> &FomOptions {
        &self.options
    }

    /// Solve at the order stored in the problem.
    pub fn solve(&self) -> Result<(Trajectory, FomStats)> {
        self.solve_at(self.spec.beta)
    }

    /// Solve with the operator order replaced by `beta`; everything else
    /// (in particular the source) is unchanged.
    pub fn solve_at(&self, beta: FractionalOrder) -> Result<(Trajectory, FomStats)> {
        let spec = &self.spec;
        let grid = &spec.grid;
        let steps = grid.time.steps;
        let scale = gamma_scale(beta, grid.time.dt())?;
        let gamma = scale.gamma;
        let weights = cached_l1_weights(beta, steps)?;
        let step_matrix = self.stiffness.step_matrix(gamma, None);
        let n = grid.len();

        let mut states: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
        states.push(spec.initial_state());
        let mut stats = FomStats::default();

        for m in 1..=steps {
            let t = grid.time.t(m);
            let hist = history_rhs(&states, weights.prefix(m))?;
            let source = spec.source_vector(t);
            let prev = &states[m - 1];
            let u = if spec.is_linear() {
                let rhs: Vec<f64> = hist.iter().zip(&source).map(|(h, f)| h + gamma * f).collect();
                let (u, info) = step_matrix.solve(&rhs, Some(prev), &self.options.pcg)?;
                stats.linear_solves += 1;
                stats.pcg_iterations += info.pcg_iterations;
                u
            } else {
                let (u, log) = self.newton_step(m, gamma, &step_matrix, &hist, &source, prev, &mut stats)?;
                stats.newton.push(log);
                u
            };
            debug_assert_eq!(u.len(), n);
            states.push(u);
        }
        debug!(
            "FOM beta={} N={} M={} solves={} pcg_iter={}",
            beta, n, steps, stats.linear_solves, stats.pcg_iterations
        );
        Ok((
            Trajectory {
                states,
                beta,
                grid: grid.clone(),
            },
            stats,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn newton_step(
        &self,
        level: usize,
        gamma: f64,
        step_matrix: &StiffnessMatrix,
        hist: &[f64],
        source: &[f64],
        start: &[f64],
        stats: &mut FomStats,
    ) -> Result<(Vec<f64>, NewtonLog)> {
        let reaction = &self.spec.reaction;
        let n = start.len();
        let mut u = start.to_vec();
        let mut ku = vec![0.0; n];
        let mut log = NewtonLog::default();
        let mut residual_norm = f64::INFINITY;

        for _ in 0..self.options.newton_max_iter {
            step_matrix.matvec(&u, &mut ku);
            let neg_res: Vec<f64> = (0..n)
                .map(|i| hist[i] - ku[i] - gamma * (reaction.value(u[i]) - source[i]))
                .collect();
            residual_norm = norm2(&neg_res);
            let dg: Vec<f64> = u.iter().map(|&v| reaction.derivative(v)).collect();
            let jac = self.stiffness.step_matrix(gamma, Some(&dg));
            let (d, info) = jac.solve(&neg_res, None, &self.options.pcg)?;
            stats.linear_solves += 1;
            stats.pcg_iterations += info.pcg_iterations;
            for (ui, di) in u.iter_mut().zip(&d) {
                *ui += di;
            }
            let step = norm2(&d);
            log.residual_norms.push(residual_norm);
            log.step_norms.push(step);
            trace!("level {level}: |r|={residual_norm:e} |d|={step:e}");
            if step <= self.options.newton_tol {
                return Ok((u, log));
            }
        }
        Err(Error::NewtonNotConverged {
            level,
            iterations: self.options.newton_max_iter,
            residual_norm,
            last_iterate: u,
        })
    }
}

/// March `spec` from `u^0` to `u^M` at its own fractional order.
pub fn fom_solve(spec: &ProblemSpec) -> Result<Trajectory> {
    fom_solve_with(spec, &FomOptions::default()).map(|(t, _)| t)
}

pub fn fom_solve_with(spec: &ProblemSpec, options: &FomOptions) -> Result<(Trajectory, FomStats)> {
    FomSolver::new(spec.clone(), *options)?.solve()
}
