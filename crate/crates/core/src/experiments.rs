//! End-to-end workflows on the benchmark problems: offline ROM construction,
//! error tables and identification tables, each with the published reference
//! values it is compared against.

use std::fmt;
use std::time::{Duration, Instant};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deim::{build_deim_operator, deim_select, DeimOperator};
use crate::error::{Error, Result};
use crate::fom::{FomOptions, FomSolver, Trajectory};
use crate::inverse::{
    add_noise, identify, FomForward, ForwardModel, IdentificationResult, LmConfig, ObservationData, RomForward,
};
use crate::kernel::FractionalOrder;
use crate::pod::{
    collect_nonlinear_snapshots, collect_snapshots, compute_basis, compute_nonlinear_basis, ReducedBasis,
    SnapshotMatrix,
};
use crate::problems::{BenchmarkCase, CaseId, BETA_STAR, TRAINING_SAMPLES};
use crate::rom::{build_rom, rom_solve, RomOperators};

/// Orders `0.1, 0.2, ..., 0.9`.
pub fn table_orders() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Everything produced by the offline phase.
#[derive(Debug, Clone)]
pub struct OfflineModel {
    pub case: BenchmarkCase,
    pub samples: Vec<f64>,
    pub snapshots: SnapshotMatrix,
    pub nonlinear_snapshots: Option<SnapshotMatrix>,
    pub nonlinear_basis: Option<ReducedBasis>,
    pub rom: RomOperators,
    pub elapsed: Duration,
}

impl OfflineModel {
    pub fn deim(&self) -> Option<&DeimOperator> {
        self.rom.deim.as_ref()
    }
}

/// Full-order runs at each sample order, in sample order.
pub fn training_trajectories(case: &BenchmarkCase, samples: &[f64], options: &FomOptions) -> Result<Vec<Trajectory>> {
    samples
        .par_iter()
        .map(|&beta| {
            let spec = case.spec(beta)?;
            FomSolver::new(spec, *options)?.solve().map(|(t, _)| t)
        })
        .collect()
}

/// Snapshot collection, POD and (with `deim_points`) DEIM for one problem.
pub fn build_offline(
    case: &BenchmarkCase,
    samples: &[f64],
    rank: usize,
    deim_points: Option<usize>,
    options: &FomOptions,
) -> Result<OfflineModel> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("at least one sample order is required".into()));
    }
    let started = Instant::now();
    let trajectories = training_trajectories(case, samples, options)?;
    let snapshots = collect_snapshots(&trajectories)?;
    let basis = compute_basis(&snapshots, rank)?;
    let stiffness = case.spec(samples[0])?.stiffness()?;

    let (nonlinear_snapshots, nonlinear_basis, deim) = match deim_points {
        Some(s) => {
            let parts = trajectories
                .iter()
                .zip(samples)
                .map(|(t, &b)| collect_nonlinear_snapshots(std::slice::from_ref(t), &case.spec(b)?))
                .collect::<Result<Vec<_>>>()?;
            let nl = SnapshotMatrix::hstack(&parts)?;
            let psi = compute_nonlinear_basis(&nl, s)?;
            let indices = deim_select(psi.matrix())?;
            let op = build_deim_operator(basis.matrix(), psi.matrix(), &indices)?;
            (Some(nl), Some(psi), Some(op))
        }
        None => (None, None, None),
    };
    let rom = build_rom(&stiffness, &basis, deim)?;
    let elapsed = started.elapsed();
    info!(
        "offline {}: {} snapshots, r={}, s={:?}, {:.2?}",
        case.id,
        snapshots.ncols(),
        rank,
        deim_points,
        elapsed
    );
    Ok(OfflineModel {
        case: *case,
        samples: samples.to_vec(),
        snapshots,
        nonlinear_snapshots,
        nonlinear_basis,
        rom,
        elapsed,
    })
}

/// Offline model with the problem's default samples, rank and DEIM size.
pub fn default_offline(case: &BenchmarkCase) -> Result<OfflineModel> {
    build_offline(
        case,
        &TRAINING_SAMPLES,
        case.default_rank(),
        case.default_deim_points(),
        &FomOptions::default(),
    )
}

/// Discrete `L2` distance to the exact solution at the final time.
pub fn final_time_error(case: &BenchmarkCase, beta: f64, state: &[f64]) -> Result<f64> {
    let t = case.final_time;
    let exact = case
        .sample_exact(beta, t)?
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no exact solution at order {beta}", case.id)))?;
    case.grid()?.l2_distance(state, &exact)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub beta: f64,
    pub fom: Option<f64>,
    pub rom: f64,
    pub reference_fom: Option<f64>,
    pub reference_rom: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub table: u8,
    pub case: BenchmarkCase,
    pub rows: Vec<ErrorRow>,
    /// Relative tolerance against the reference values.
    pub tolerance: f64,
}

/// Published final-time errors `(beta, FOM, ROM)` for the error tables.
pub mod reference {
    pub const TABLE1_FOM: [(f64, f64); 4] = [(0.2, 1.31e-4), (0.4, 1.36e-4), (0.6, 1.66e-4), (0.8, 3.07e-4)];
    pub const TABLE1_ROM: [f64; 9] = [
        1.31e-4, 1.31e-4, 1.32e-4, 1.36e-4, 1.45e-4, 1.66e-4, 2.12e-4, 3.07e-4, 5.02e-4,
    ];
    pub const TABLE2_FOM: [(f64, f64); 4] = [(0.2, 2.12e-3), (0.4, 3.40e-3), (0.6, 5.46e-3), (0.8, 8.79e-3)];
    pub const TABLE2_ROM: [f64; 9] = [
        1.67e-3, 2.12e-3, 2.69e-3, 3.40e-3, 4.31e-3, 5.46e-3, 6.92e-3, 8.79e-3, 1.13e-2,
    ];
    pub const TABLE3_FOM: [(f64, f64); 4] = [(0.2, 6.68e-4), (0.4, 6.72e-4), (0.6, 7.41e-4), (0.8, 1.18e-3)];
    pub const TABLE3_ROM: [f64; 9] = [
        6.71e-4, 6.68e-4, 7.92e-4, 6.72e-4, 7.84e-4, 7.41e-4, 7.67e-4, 1.18e-3, 1.80e-3,
    ];
    pub const TABLE4_FOM: [(f64, f64); 4] = [(0.2, 7.17e-2), (0.4, 7.31e-2), (0.6, 7.46e-2), (0.8, 7.63e-2)];
    pub const TABLE4_ROM: [f64; 9] = [
        7.18e-2, 7.21e-2, 7.25e-2, 7.31e-2, 7.38e-2, 7.45e-2, 7.54e-2, 7.62e-2, 7.73e-2,
    ];

    /// `(noise %, beta0, beta_inv, |beta* - beta_inv|, iterations)`.
    pub type IdentRow = (f64, f64, f64, f64, usize);

    pub const TABLE5: [IdentRow; 24] = [
        (0.0, 0.1, 7.5000e-1, 8.8659e-9, 12),
        (0.0, 0.3, 7.5000e-1, 6.3319e-9, 12),
        (0.0, 0.5, 7.5000e-1, 3.7111e-9, 12),
        (0.0, 0.7, 7.5000e-1, 6.2172e-8, 11),
        (0.0, 0.8, 7.5000e-1, 6.6172e-8, 11),
        (0.0, 0.9, 7.5000e-1, 2.8085e-9, 12),
        (0.01, 0.1, 7.4971e-1, 2.8815e-4, 12),
        (0.01, 0.3, 7.5006e-1, 5.7065e-5, 12),
        (0.01, 0.5, 7.5043e-1, 4.3908e-4, 12),
        (0.01, 0.7, 7.5026e-1, 2.5526e-4, 11),
        (0.01, 0.8, 7.5007e-1, 7.0675e-5, 11),
        (0.01, 0.9, 7.5010e-1, 1.0379e-4, 12),
        (0.1, 0.1, 7.5104e-1, 1.0463e-3, 12),
        (0.1, 0.3, 7.4978e-1, 2.2298e-4, 12),
        (0.1, 0.5, 7.5078e-1, 7.8280e-4, 12),
        (0.1, 0.7, 7.4556e-1, 4.4472e-3, 11),
        (0.1, 0.8, 7.5236e-1, 2.3619e-3, 11),
        (0.1, 0.9, 7.5734e-1, 7.3391e-3, 12),
        (1.0, 0.1, 7.3621e-1, 1.3791e-2, 12),
        (1.0, 0.3, 7.6237e-1, 1.2373e-2, 12),
        (1.0, 0.5, 7.0238e-1, 4.7617e-2, 12),
        (1.0, 0.7, 7.2562e-1, 2.4375e-2, 11),
        (1.0, 0.8, 7.1960e-1, 3.3040e-2, 11),
        (1.0, 0.9, 7.6846e-1, 1.8461e-2, 12),
    ];

    pub const TABLE6: [IdentRow; 24] = [
        (0.0, 0.1, 7.5000e-1, 9.9664e-10, 8),
        (0.0, 0.3, 7.5000e-1, 3.4394e-10, 8),
        (0.0, 0.5, 7.5000e-1, 1.6732e-9, 8),
        (0.0, 0.7, 7.5000e-1, 2.9806e-8, 7),
        (0.0, 0.8, 7.5000e-1, 3.6300e-8, 7),
        (0.0, 0.9, 7.5000e-1, 1.0195e-7, 7),
        (0.01, 0.1, 7.4998e-1, 1.5424e-5, 8),
        (0.01, 0.3, 7.4997e-1, 3.0629e-5, 8),
        (0.01, 0.5, 7.5003e-1, 2.8158e-5, 8),
        (0.01, 0.7, 7.4989e-1, 1.1190e-4, 7),
        (0.01, 0.8, 7.5006e-1, 5.6022e-5, 7),
        (0.01, 0.9, 7.5007e-1, 6.5169e-5, 7),
        (0.1, 0.1, 7.5044e-1, 4.3990e-4, 8),
        (0.1, 0.3, 7.5025e-1, 2.4610e-4, 8),
        (0.1, 0.5, 7.5007e-1, 7.4076e-5, 8),
        (0.1, 0.7, 7.5012e-1, 1.2027e-4, 7),
        (0.1, 0.8, 7.4959e-1, 4.0968e-4, 7),
        (0.1, 0.9, 7.4968e-1, 3.1646e-4, 7),
        (1.0, 0.1, 7.5440e-1, 4.3964e-3, 8),
        (1.0, 0.3, 7.5246e-1, 2.4605e-3, 8),
        (1.0, 0.5, 7.5074e-1, 7.4073e-4, 8),
        (1.0, 0.7, 7.5120e-1, 1.2030e-3, 7),
        (1.0, 0.8, 7.4590e-1, 4.0992e-3, 7),
        (1.0, 0.9, 7.4683e-1, 3.1669e-3, 8),
    ];

    /// `(beta0, beta_inv, |beta* - beta_inv|, iterations, seconds)` for the
    /// full-order and reduced solvers, clean data then 1% noise.
    pub type SolverRow = (f64, f64, f64, usize, f64);

    pub const TABLE7_FOM_CLEAN: [SolverRow; 5] = [
        (0.5, 7.5000e-1, 2.0301e-8, 5, 529.0),
        (0.6, 7.5000e-1, 3.4855e-9, 5, 528.0),
        (0.7, 7.5000e-1, 2.8237e-8, 4, 418.0),
        (0.8, 7.5000e-1, 6.9110e-10, 5, 505.0),
        (0.9, 7.5000e-1, 8.7546e-9, 5, 494.0),
    ];
    pub const TABLE7_ROM_CLEAN: [SolverRow; 5] = [
        (0.5, 7.5000e-1, 2.0300e-8, 5, 34.0),
        (0.6, 7.5000e-1, 3.4840e-9, 5, 35.0),
        (0.7, 7.5000e-1, 2.8235e-8, 4, 28.0),
        (0.8, 7.5000e-1, 6.8953e-10, 5, 35.0),
        (0.9, 7.5000e-1, 8.7531e-9, 5, 35.0),
    ];
    pub const TABLE7_FOM_NOISY: [SolverRow; 5] = [
        (0.5, 7.4986e-1, 1.3766e-4, 5, 556.0),
        (0.6, 7.4986e-1, 1.3768e-4, 5, 1162.0),
        (0.7, 7.4986e-1, 1.3765e-4, 4, 442.0),
        (0.8, 7.4986e-1, 1.3768e-4, 5, 506.0),
        (0.9, 7.4986e-1, 1.3767e-4, 5, 695.0),
    ];
    pub const TABLE7_ROM_NOISY: [SolverRow; 5] = [
        (0.5, 7.4986e-1, 1.3766e-4, 5, 34.0),
        (0.6, 7.4986e-1, 1.3768e-4, 5, 33.0),
        (0.7, 7.4986e-1, 1.3765e-4, 4, 26.0),
        (0.8, 7.4986e-1, 1.3768e-4, 5, 35.0),
        (0.9, 7.4986e-1, 1.3767e-4, 5, 33.0),
    ];

    pub const TABLE8_FOM_CLEAN: [SolverRow; 7] = [
        (0.01, 7.5000e-1, 4.6031e-9, 8, 2803.0),
        (0.1, 7.5000e-1, 3.9489e-9, 8, 2784.0),
        (0.3, 7.5000e-1, 2.6262e-9, 8, 2753.0),
        (0.5, 7.5000e-1, 1.4268e-9, 8, 2725.0),
        (0.8, 7.5000e-1, 2.9511e-8, 7, 2334.0),
        (0.9, 7.5000e-1, 8.8339e-8, 7, 2334.0),
        (0.99, 7.5000e-1, 1.3489e-9, 8, 2647.0),
    ];
    pub const TABLE8_ROM_CLEAN: [SolverRow; 7] = [
        (0.01, 7.5000e-1, 4.6045e-9, 8, 9.0),
        (0.1, 7.5000e-1, 3.9490e-9, 8, 9.0),
        (0.3, 7.5000e-1, 2.6276e-9, 8, 9.0),
        (0.5, 7.5000e-1, 1.4268e-9, 8, 9.0),
        (0.8, 7.5000e-1, 2.9511e-8, 7, 8.0),
        (0.9, 7.5000e-1, 8.8337e-8, 7, 8.0),
        (0.99, 7.5000e-1, 1.3504e-9, 8, 9.0),
    ];
    pub const TABLE8_FOM_NOISY: [SolverRow; 7] = [
        (0.01, 7.3045e-1, 1.9554e-2, 8, 2821.0),
        (0.1, 7.3045e-1, 1.9554e-2, 8, 3038.0),
        (0.3, 7.3045e-1, 1.9554e-2, 8, 2789.0),
        (0.5, 7.3045e-1, 1.9554e-2, 8, 2761.0),
        (0.8, 7.3045e-1, 1.9554e-2, 7, 2381.0),
        (0.9, 7.3045e-1, 1.9554e-2, 8, 3503.0),
        (0.99, 7.3045e-1, 1.9554e-2, 8, 2682.0),
    ];
    pub const TABLE8_ROM_NOISY: [SolverRow; 7] = [
        (0.01, 7.3045e-1, 1.9554e-2, 8, 10.0),
        (0.1, 7.3045e-1, 1.9554e-2, 8, 10.0),
        (0.3, 7.3045e-1, 1.9554e-2, 8, 10.0),
        (0.5, 7.3045e-1, 1.9554e-2, 8, 10.0),
        (0.8, 7.3045e-1, 1.9554e-2, 7, 9.0),
        (0.9, 7.3045e-1, 1.9554e-2, 8, 10.0),
        (0.99, 7.3045e-1, 1.9554e-2, 8, 9.0),
    ];
}

/// Problem, published `(beta, FOM)` and ROM errors, and relative tolerance.
pub type ErrorTableSetup = (BenchmarkCase, &'static [(f64, f64)], &'static [f64], f64);

/// Which problem, horizon and references an error table uses.
pub fn error_table_setup(table: u8) -> Result<ErrorTableSetup> {
    use reference::*;
    Ok(match table {
        1 => (
            BenchmarkCase::new(CaseId::Test1),
            &TABLE1_FOM[..],
            &TABLE1_ROM[..],
            0.03,
        ),
        2 => (
            BenchmarkCase::with_final_time(CaseId::Test1, 10.0),
            &TABLE2_FOM[..],
            &TABLE2_ROM[..],
            0.15,
        ),
        3 => (
            BenchmarkCase::new(CaseId::Test2),
            &TABLE3_FOM[..],
            &TABLE3_ROM[..],
            0.03,
        ),
        4 => (
            BenchmarkCase::with_final_time(CaseId::Test2, 10.0),
            &TABLE4_FOM[..],
            &TABLE4_ROM[..],
            0.15,
        ),
        _ => return Err(Error::InvalidArgument(format!("table {table} is not an error table"))),
    })
}

/// Final-time errors of the full and reduced models over `0.1..0.9`.
pub fn error_table(table: u8) -> Result<ErrorTable> {
    let (case, fom_ref, rom_ref, tolerance) = error_table_setup(table)?;
    let offline = default_offline(&case)?;
    let orders = table_orders();
    let rows = orders
        .par_iter()
        .zip(rom_ref.par_iter())
        .map(|(&beta, &reference_rom)| {
            let spec = case.spec(beta)?;
            let (rt, _) = rom_solve(&offline.rom, &spec, FractionalOrder::new(beta)?)?;
            let rom = final_time_error(&case, beta, &rt.lift_final())?;
            let reference_fom = fom_ref.iter().find(|(b, _)| (b - beta).abs() < 1e-12).map(|r| r.1);
            let fom = match reference_fom {
                Some(_) => {
                    let (t, _) = FomSolver::new(spec, FomOptions::default())?.solve()?;
                    Some(final_time_error(&case, beta, t.final_state())?)
                }
                None => None,
            };
            Ok(ErrorRow {
                beta,
                fom,
                rom,
                reference_fom,
                reference_rom,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorTable {
        table,
        case,
        rows,
        tolerance,
    })
}

pub fn relative_deviation(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

impl ErrorTable {
    /// `(label, passed)` for every reference value.
    pub fn checks(&self) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        for row in &self.rows {
            if let (Some(v), Some(r)) = (row.fom, row.reference_fom) {
                out.push((
                    format!("FOM beta={:.1}: {:.3e} vs {:.2e}", row.beta, v, r),
                    relative_deviation(v, r) <= self.tolerance,
                ));
            }
            out.push((
                format!("ROM beta={:.1}: {:.3e} vs {:.2e}", row.beta, row.rom, row.reference_rom),
                relative_deviation(row.rom, row.reference_rom) <= self.tolerance,
            ));
        }
        out
    }

    pub fn all_pass(&self) -> bool {
        self.checks().iter().all(|c| c.1)
    }
}

impl fmt::Display for ErrorTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Table {}: {} final-time L2 errors, T = {} (tolerance {:.0}%)",
            self.table,
            self.case.id,
            self.case.final_time,
            self.tolerance * 100.0
        )?;
        writeln!(
            f,
            "{:>5} {:>11} {:>10} {:>11} {:>10}  check",
            "beta", "FOM", "ref", "ROM", "ref"
        )?;
        for row in &self.rows {
            let fmt_opt = |v: Option<f64>| v.map_or("---".to_string(), |v| format!("{v:.3e}"));
            let ok = row
                .fom
                .zip(row.reference_fom)
                .is_none_or(|(v, r)| relative_deviation(v, r) <= self.tolerance)
                && relative_deviation(row.rom, row.reference_rom) <= self.tolerance;
            writeln!(
                f,
                "{:>5.1} {:>11} {:>10} {:>11.3e} {:>10.2e}  {}",
                row.beta,
                fmt_opt(row.fom),
                row.reference_fom.map_or("---".to_string(), |v| format!("{v:.2e}")),
                row.rom,
                row.reference_rom,
                if ok { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForwardKind {
    Fom,
    Rom,
}

impl std::str::FromStr for ForwardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fom" => Ok(ForwardKind::Fom),
            "rom" => Ok(ForwardKind::Rom),
            _ => Err(Error::InvalidArgument(format!(
                "forward model must be `fom` or `rom`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for ForwardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForwardKind::Fom => "fom",
            ForwardKind::Rom => "rom",
        })
    }
}

/// Offline model, both forward maps and the clean observations of one
/// identification problem.
pub struct IdentificationSetup {
    pub case: BenchmarkCase,
    pub offline: OfflineModel,
    pub fom: FomForward,
    pub rom: RomForward,
    pub beta_star: f64,
    /// Full-order final state at the true order.
    pub clean: Vec<f64>,
}

impl IdentificationSetup {
    pub fn new(case: BenchmarkCase, offline: OfflineModel, beta_star: f64) -> Result<Self> {
        let spec = case.spec(beta_star)?;
        let fom = FomForward::new(spec.clone(), FomOptions::default())?;
        let clean = fom.final_state(FractionalOrder::new(beta_star)?)?;
        let rom = RomForward::new(offline.rom.clone(), spec);
        Ok(Self {
            case,
            offline,
            fom,
            rom,
            beta_star,
            clean,
        })
    }

    /// Default offline model and the true order of the problem.
    pub fn for_case(case: BenchmarkCase) -> Result<Self> {
        let beta_star = case.beta_star().unwrap_or(BETA_STAR);
        Self::new(case, default_offline(&case)?, beta_star)
    }

    pub fn observations(&self, noise_percent: f64, seed: u64) -> Result<ObservationData> {
        if noise_percent == 0.0 {
            Ok(ObservationData::clean(self.clean.clone()))
        } else {
            add_noise(&self.clean, noise_percent, seed)
        }
    }

    pub fn forward(&self, kind: ForwardKind) -> &dyn ForwardModel {
        match kind {
            ForwardKind::Fom => &self.fom,
            ForwardKind::Rom => &self.rom,
        }
    }

    pub fn run(&self, kind: ForwardKind, beta0: f64, data: &ObservationData) -> Result<IdentificationResult> {
        let config = LmConfig {
            beta0,
            ..LmConfig::default()
        };
        identify(&config, data, self.forward(kind))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentRecord {
    pub forward: ForwardKind,
    pub noise_percent: f64,
    pub seed: Option<u64>,
    pub beta0: f64,
    pub result: IdentificationResult,
    pub beta_star: f64,
    /// Published `(beta_inv, error, iterations, seconds)`, if any.
    pub reference: Option<(f64, f64, usize, Option<f64>)>,
}

impl IdentRecord {
    pub fn error(&self) -> f64 {
        (self.beta_star - self.result.beta_inv).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentTable {
    pub table: u8,
    pub case: CaseId,
    pub records: Vec<IdentRecord>,
}

/// Identification tables 5-8. Noisy data use `seed` (1D: `seed + row`, so
/// every run draws fresh noise; 2D: one fixed draw). `include_fom` adds the
/// full-order runs of tables 7 and 8.
pub fn ident_table(table: u8, seed: u64, include_fom: bool) -> Result<IdentTable> {
    use reference::*;
    match table {
        5 | 6 => {
            let id = if table == 5 { CaseId::Ex1 } else { CaseId::Ex2 };
            let setup = IdentificationSetup::for_case(BenchmarkCase::new(id))?;
            let refs: &[IdentRow] = if table == 5 { &TABLE5 } else { &TABLE6 };
            let records = refs
                .par_iter()
                .enumerate()
                .map(|(i, &(eps, beta0, b_ref, e_ref, k_ref))| {
                    let row_seed = (eps > 0.0).then_some(seed + i as u64);
                    let data = setup.observations(eps, row_seed.unwrap_or(seed))?;
                    let result = setup.run(ForwardKind::Rom, beta0, &data)?;
                    Ok(IdentRecord {
                        forward: ForwardKind::Rom,
                        noise_percent: eps,
                        seed: row_seed,
                        beta0,
                        result,
                        beta_star: setup.beta_star,
                        reference: Some((b_ref, e_ref, k_ref, None)),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(IdentTable {
                table,
                case: id,
                records,
            })
        }
        7 | 8 => {
            let id = if table == 7 { CaseId::Ex3 } else { CaseId::Ex4 };
            let setup = IdentificationSetup::for_case(BenchmarkCase::new(id))?;
            let groups: [(ForwardKind, f64, &[SolverRow]); 4] = if table == 7 {
                [
                    (ForwardKind::Fom, 0.0, &TABLE7_FOM_CLEAN),
                    (ForwardKind::Rom, 0.0, &TABLE7_ROM_CLEAN),
                    (ForwardKind::Fom, 1.0, &TABLE7_FOM_NOISY),
                    (ForwardKind::Rom, 1.0, &TABLE7_ROM_NOISY),
                ]
            } else {
                [
                    (ForwardKind::Fom, 0.0, &TABLE8_FOM_CLEAN),
                    (ForwardKind::Rom, 0.0, &TABLE8_ROM_CLEAN),
                    (ForwardKind::Fom, 1.0, &TABLE8_FOM_NOISY),
                    (ForwardKind::Rom, 1.0, &TABLE8_ROM_NOISY),
                ]
            };
            let mut records = Vec::new();
            for (kind, eps, rows) in groups {
                if kind == ForwardKind::Fom && !include_fom {
                    continue;
                }
                let data = setup.observations(eps, seed)?;
                // sequential so that the wall times are comparable
                for &(beta0, b_ref, e_ref, k_ref, secs) in rows {
                    let result = setup.run(kind, beta0, &data)?;
                    records.push(IdentRecord {
                        forward: kind,
                        noise_percent: eps,
                        seed: (eps > 0.0).then_some(seed),
                        beta0,
                        result,
                        beta_star: setup.beta_star,
                        reference: Some((b_ref, e_ref, k_ref, Some(secs))),
                    });
                }
            }
            Ok(IdentTable {
                table,
                case: id,
                records,
            })
        }
        _ => Err(Error::InvalidArgument(format!(
            "table {table} is not an identification table"
        ))),
    }
}

impl IdentTable {
    /// Clean-data checks: error at most `1e-6` and iterations within 3 of the
    /// published count. Noisy rows are reported without a check.
    pub fn checks(&self) -> Vec<(String, bool)> {
        self.records
            .iter()
            .filter(|r| r.noise_percent == 0.0)
            .map(|r| {
                let k_ref = r.reference.map_or(r.result.iterations, |x| x.2);
                (
                    format!(
                        "{} beta0={}: |err|={:.3e}, {} iterations (ref {})",
                        r.forward,
                        r.beta0,
                        r.error(),
                        r.result.iterations,
                        k_ref
                    ),
                    r.result.converged && r.error() <= 1e-6 && r.result.iterations.abs_diff(k_ref) <= 3,
                )
            })
            .collect()
    }
}

impl fmt::Display for IdentTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Table {}: identification of beta* = {} on {}",
            self.table, BETA_STAR, self.case
        )?;
        writeln!(
            f,
            "{:>4} {:>6} {:>5} {:>11} {:>11} {:>4} {:>10} | {:>11} {:>11} {:>4}",
            "fwd", "noise%", "beta0", "beta_inv", "|err|", "itr", "time", "ref", "|err|", "itr"
        )?;
        for r in &self.records {
            let (pb, pe, pk) = r.reference.map_or((f64::NAN, f64::NAN, 0), |x| (x.0, x.1, x.2));
            writeln!(
                f,
                "{:>4} {:>6} {:>5} {:>11.4e} {:>11.4e} {:>4} {:>9.3}s | {:>11.4e} {:>11.4e} {:>4}",
                r.forward,
                r.noise_percent,
                r.beta0,
                r.result.beta_inv,
                r.error(),
                r.result.iterations,
                r.result.wall_time.as_secs_f64(),
                pb,
                pe,
                pk
            )?;
        }
        Ok(())
    }
}
