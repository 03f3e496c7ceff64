//! Levenberg-Marquardt identification of the fractional order from
//! final-time observations
//!
//! ```text
//! min_beta  F(beta) = 1/2 sum_i (u(x_i, T; beta) - g_i)^2
//! ```
//!
//! The sensitivity `J = du/dbeta` is a forward difference, the direction is
//! `d = -J^T r / (J^T J + alpha)` and the step length comes from Armijo
//! backtracking. The forward map is either the full-order model or a ROM.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fom::{FomOptions, FomSolver};
use crate::kernel::FractionalOrder;
use crate::linalg::dot;
use crate::problem::ProblemSpec;
use crate::rom::{rom_solve_with_load, ReducedLoad, RomOperators, RomOptions};

/// Maps a fractional order to the final-time state on the grid.
pub trait ForwardModel: Sync {
    fn final_state(&self, beta: FractionalOrder) -> Result<Vec<f64>>;
    fn dim(&self) -> usize;
    fn name(&self) -> &'static str;
}

impl<F> ForwardModel for F
where
    F: Fn(FractionalOrder) -> Result<Vec<f64>> + Sync,
{
    fn final_state(&self, beta: FractionalOrder) -> Result<Vec<f64>> {
        self(beta)
    }

    fn dim(&self) -> usize {
        0
    }

    fn name(&self) -> &'static str {
        "closure"
    }
}

#[derive(Debug, Clone)]
pub struct FomForward {
    solver: FomSolver,
}

impl FomForward {
    pub fn new(spec: ProblemSpec, options: FomOptions) -> Result<Self> {
        Ok(Self {
            solver: FomSolver::new(spec, options)?,
        })
    }

    pub fn solver(&self) -> &FomSolver {
        &self.solver
    }
}

impl ForwardModel for FomForward {
    fn final_state(&self, beta: FractionalOrder) -> Result<Vec<f64>> {
        let (traj, _) = self.solver.solve_at(beta)?;
        Ok(traj.final_state().to_vec())
    }

    fn dim(&self) -> usize {
        self.solver.spec().grid.len()
    }

    fn name(&self) -> &'static str {
        "fom"
    }
}

#[derive(Debug, Clone)]
pub struct RomForward {
    rom: RomOperators,
    spec: ProblemSpec,
    load: Option<ReducedLoad>,
    options: RomOptions,
}

impl RomForward {
    /// The reduced source (linear problems) is projected here, once.
    pub fn new(rom: RomOperators, spec: ProblemSpec) -> Self {
        let load = (spec.is_linear() && spec.source.is_some()).then(|| ReducedLoad::new(&rom.basis, &spec));
        Self {
            rom,
            spec,
            load,
            options: RomOptions::default(),
        }
    }

    pub fn rom(&self) -> &RomOperators {
        &self.rom
    }
}

impl ForwardModel for RomForward {
    fn final_state(&self, beta: FractionalOrder) -> Result<Vec<f64>> {
        let (traj, _) = rom_solve_with_load(&self.rom, &self.spec, beta, self.load.as_ref(), &self.options)?;
        Ok(traj.lift_final())
    }

    fn dim(&self) -> usize {
        self.spec.grid.len()
    }

    fn name(&self) -> &'static str {
        "rom"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseInfo {
    pub epsilon_percent: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationData {
    pub values: Vec<f64>,
    pub noise: Option<NoiseInfo>,
}

impl ObservationData {
    pub fn clean(values: Vec<f64>) -> Self {
        Self { values, noise: None }
    }
}

/// `g_i (1 + epsilon/100 * z_i)` with `z_i` standard normal, drawn in index
/// order from a ChaCha8 stream seeded with `seed`.
pub fn add_noise(clean: &[f64], epsilon_percent: f64, seed: u64) -> Result<ObservationData> {
    if !(epsilon_percent >= 0.0 && epsilon_percent.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be nonnegative, got {epsilon_percent}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = epsilon_percent / 100.0;
    let values = clean
        .iter()
        .map(|&g| {
            let z: f64 = StandardNormal.sample(&mut rng);
            g * (1.0 + scale * z)
        })
        .collect();
    Ok(ObservationData {
        values,
        noise: Some(NoiseInfo { epsilon_percent, seed }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub beta0: f64,
    /// Armijo backtracking ratio.
    pub rho: f64,
    /// Armijo slope fraction.
    pub sigma: f64,
    pub alpha0: f64,
    /// Finite-difference increment for the sensitivity.
    pub delta: f64,
    /// Stop once the accepted step is at most this long.
    pub tol: f64,
    pub kmax: usize,
    pub max_backtracks: usize,
    /// `false` drops `alpha` from the direction (plain Gauss-Newton).
    pub regularized: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            beta0: 0.5,
            rho: 0.75,
            sigma: 0.25,
            alpha0: 1.0,
            delta: 1e-3,
            tol: 1e-7,
            kmax: 50,
            max_backtracks: 60,
            regularized: true,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        FractionalOrder::new(self.beta0)?;
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.sigma > 0.0 && self.sigma < 0.5) {
            return bad("sigma must lie in (0, 1/2)");
        }
        if !(self.alpha0 >= 0.0) {
            return bad("alpha0 must be nonnegative");
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return bad("delta must lie in (0, 1/2)");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        Ok(())
    }
}

/// One row of the iteration history. Row 0 is the initial guess; row `k + 1`
/// holds the trial point accepted by the line search at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub beta: f64,
    pub objective: f64,
    pub step: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    pub beta_inv: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub wall_time: Duration,
    pub forward_solves: usize,
}

/// `1/2 ||u - g||^2`.
pub fn objective_value(u: &[f64], data: &ObservationData) -> Result<f64> {
    if u.len() != data.values.len() {
        return Err(Error::DimensionMismatch {
            expected: data.values.len(),
            actual: u.len(),
            context: "model output vs observations",
        });
    }
    Ok(0.5 * u.iter().zip(&data.values).map(|(a, g)| (a - g) * (a - g)).sum::<f64>())
}

pub fn objective(beta: FractionalOrder, data: &ObservationData, forward: &dyn ForwardModel) -> Result<f64> {
    objective_value(&forward.final_state(beta)?, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub jacobian: Vec<f64>,
    pub residual: Vec<f64>,
    pub objective: f64,
}

/// Forward-difference sensitivity at `beta`; switches to a backward
/// difference when `beta + delta` would leave `(0, 1)`. `at_beta` may carry an
/// already computed `u(beta)`.
pub fn sensitivity(
    beta: FractionalOrder,
    data: &ObservationData,
    forward: &dyn ForwardModel,
    delta: f64,
    at_beta: Option<Vec<f64>>,
) -> Result<Sensitivity> {
    let b = beta.get();
    let (other, sign) = if b + delta < 1.0 {
        (FractionalOrder::new(b + delta)?, 1.0)
    } else {
        (FractionalOrder::new(b - delta)?, -1.0)
    };
    let (u, u_other) = match at_beta {
        Some(u) => (u, forward.final_state(other)?),
        None => {
            let (u, v) = rayon::join(|| forward.final_state(beta), || forward.final_state(other));
            (u?, v?)
        }
    };
    let jacobian: Vec<f64> = u.iter().zip(&u_other).map(|(a, c)| sign * (c - a) / delta).collect();
    let objective = objective_value(&u, data)?;
    let residual = u.iter().zip(&data.values).map(|(a, g)| a - g).collect();
    Ok(Sensitivity {
        jacobian,
        residual,
        objective,
    })
}

/// `-J^T r / (J^T J + alpha)`.
pub fn lm_direction(jacobian: &[f64], residual: &[f64], alpha: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::InvalidArgument("alpha must be nonnegative".into()));
    }
    let g = dot(jacobian, residual);
    let h = dot(jacobian, jacobian) + alpha;
    if g == 0.0 {
        return Ok(0.0);
    }
    if h == 0.0 {
        return Err(Error::Singular("J^T J + alpha"));
    }
    Ok(-g / h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoOutcome {
    /// `rho^m d`.
    pub step: f64,
    pub beta: f64,
    pub objective: f64,
    pub backtracks: usize,
}

/// Smallest `m` with `F(beta + rho^m d) <= F(beta) + sigma rho^m d slope`,
/// where `slope = J^T r`. Trial points outside `(0, 1)` are skipped without
/// evaluating `F`.
#[allow(clippy::too_many_arguments)]
pub fn armijo_search(
    beta: f64,
    direction: f64,
    slope: f64,
    current: f64,
    mut objective: impl FnMut(f64) -> Result<f64>,
    rho: f64,
    sigma: f64,
    max_backtracks: usize,
) -> Result<ArmijoOutcome> {
    let mut factor = 1.0;
    for m in 0..=max_backtracks {
        let step = factor * direction;
        let trial = beta + step;
        if trial > 0.0 && trial < 1.0 {
            let value = objective(trial)?;
            if value <= current + sigma * step * slope {
                return Ok(ArmijoOutcome {
                    step,
                    beta: trial,
                    objective: value,
                    backtracks: m,
                });
            }
        }
        factor *= rho;
    }
    Err(Error::LineSearchStalled {
        backtracks: max_backtracks,
    })
}

/// Run the Levenberg-Marquardt iteration from `config.beta0`.
///
/// The iteration stops at the first accepted step with `|rho^m d| <= tol`; the
/// estimate is the iterate that step started from.
pub fn identify(config: &LmConfig, data: &ObservationData, forward: &dyn ForwardModel) -> Result<IdentificationResult> {
    config.validate()?;
    let started = Instant::now();
    let solves = AtomicUsize::new(0);
    let counted = |beta: FractionalOrder| {
        solves.fetch_add(1, Ordering::Relaxed);
        forward.final_state(beta)
    };

    let mut beta = config.beta0;
    let mut alpha = config.alpha0;
    let mut trace = Vec::with_capacity(config.kmax + 1);
    let mut cached: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut iterations = config.kmax;

    for k in 0..config.kmax {
        let order = FractionalOrder::new(beta)?;
        let sens = sensitivity(order, data, &counted, config.delta, cached.take())?;
        if k == 0 {
            trace.push(TraceRow {
                k: 0,
                beta,
                objective: sens.objective,
                step: 0.0,
                backtracks: 0,
            });
        }
        let slope = dot(&sens.jacobian, &sens.residual);
        let d = lm_direction(
            &sens.jacobian,
            &sens.residual,
            if config.regularized { alpha } else { 0.0 },
        )?;
        let mut trial_state = None;
        let search = armijo_search(
            beta,
            d,
            slope,
            sens.objective,
            |b| {
                let u = counted(FractionalOrder::new(b)?)?;
                let f = objective_value(&u, data)?;
                trial_state = Some(u);
                Ok(f)
            },
            config.rho,
            config.sigma,
            config.max_backtracks,
        );
        let outcome = match search {
            Ok(o) => o,
            Err(Error::LineSearchStalled { backtracks }) => {
                // no acceptable point; record the shortest tried step and stop
                let smallest = config.rho.powi(backtracks as i32) * d.abs();
                trace.push(TraceRow {
                    k: k + 1,
                    beta,
                    objective: sens.objective,
                    step: smallest,
                    backtracks,
                });
                iterations = k + 1;
                converged = smallest <= config.tol;
                if !converged {
                    warn!("line search stalled at beta={beta} (direction {d:e})");
                }
                break;
            }
            Err(e) => return Err(e),
        };
        debug!(
            "k={k} beta={beta:.12} F={:e} step={:e} m={}",
            sens.objective, outcome.step, outcome.backtracks
        );
        trace.push(TraceRow {
            k: k + 1,
            beta: outcome.beta,
            objective: outcome.objective,
            step: outcome.step.abs(),
            backtracks: outcome.backtracks,
        });
        if outcome.step.abs() <= config.tol {
            converged = true;
            iterations = k + 1;
            break;
        }
        beta = outcome.beta;
        cached = trial_state;
        alpha /= 2.0;
    }

    Ok(IdentificationResult {
        beta_inv: beta,
        iterations,
        converged,
        trace,
        wall_time: started.elapsed(),
        forward_solves: solves.load(Ordering::Relaxed),
    })
}
