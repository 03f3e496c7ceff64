use std::fs;
use std::path::Path;

use anyhow::Context as _;
use fracrom::persistence::{GridRecord, RunManifest, ToleranceRecord};
use fracrom::pod::{SnapshotKind, SnapshotMatrix};
use fracrom::problem::SpaceTimeFn;
use fracrom::{
    build_deim_operator, build_rom, BenchmarkCase, CaseId, CustomProblem, FomOptions, FractionalOrder, ProblemSpec,
    ReducedBasis, RomOperators, RomOptions,
};

use crate::args::ProblemArgs;
use crate::UsageError;

/// A benchmark case or a custom problem, with its grid fixed.
#[derive(Debug, Clone)]
pub enum Problem {
    Case(BenchmarkCase),
    Custom(CustomProblem),
}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn check_order(beta: f64, what: &str) -> anyhow::Result<FractionalOrder> {
    FractionalOrder::new(beta).map_err(|_| usage(format!("{what} = {beta} must lie in (0, 1)")))
}

impl Problem {
    pub fn from_args(a: &ProblemArgs) -> anyhow::Result<Self> {
        if matches!(a.n, Some(n) if n < 2) {
            return Err(usage("--n must be at least 2"));
        }
        if matches!(a.m, Some(0)) {
            return Err(usage("--m must be positive"));
        }
        if let Some(t) = a.final_time {
            if !(t.is_finite() && t > 0.0) {
                return Err(usage("--final-time must be positive"));
            }
        }
        if let Some(path) = &a.config {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let mut c: CustomProblem =
                toml::from_str(&text).map_err(|e| usage(format!("bad problem config {}: {e}", path.display())))?;
            if let Some(n) = a.n {
                c.n = n;
            }
            if let Some(t) = a.final_time {
                c.final_time = t;
            }
            if let Some(m) = a.m {
                c.steps = m;
            }
            c.spec().map_err(|e| usage(e.to_string()))?;
            return Ok(Problem::Custom(c));
        }
        let id = a
            .problem
            .ok_or_else(|| usage("either --problem or --config is required"))?;
        let mut case = match a.final_time {
            Some(t) => BenchmarkCase::with_final_time(id, t),
            None => BenchmarkCase::new(id),
        };
        if let Some(n) = a.n {
            case.n = n;
        }
        if let Some(m) = a.m {
            case.steps = m;
        }
        Ok(Problem::Case(case))
    }

    pub fn name(&self) -> String {
        match self {
            Problem::Case(c) => c.id.to_string(),
            Problem::Custom(_) => "custom".into(),
        }
    }

    /// Problem at order `beta`. Benchmark cases choose their own source
    /// convention; custom problems keep the source of the configured order.
    pub fn spec(&self, beta: f64) -> anyhow::Result<ProblemSpec> {
        let order = check_order(beta, "beta")?;
        Ok(match self {
            Problem::Case(c) => c.spec(beta)?,
            Problem::Custom(c) => c.spec()?.with_beta(order),
        })
    }

    pub fn exact(&self, beta: f64) -> Option<SpaceTimeFn> {
        match self {
            Problem::Case(c) => c.exact(beta),
            Problem::Custom(_) => None,
        }
    }

    /// Error against the exact solution at the final time, when one exists.
    pub fn final_error(&self, spec: &ProblemSpec, beta: f64, state: &[f64]) -> anyhow::Result<Option<f64>> {
        let Some(u) = self.exact(beta) else {
            return Ok(None);
        };
        let t = spec.grid.time.final_time;
        let exact = spec.grid.sample(|x| u(x, t));
        Ok(Some(spec.grid.l2_distance(state, &exact)?))
    }

    pub fn beta_star(&self) -> Option<f64> {
        match self {
            Problem::Case(c) => c.beta_star(),
            Problem::Custom(c) => Some(c.beta),
        }
    }

    pub fn grid_record(&self) -> anyhow::Result<GridRecord> {
        let grid = self.spec(0.5)?.grid;
        Ok(GridRecord {
            dim: grid.dim(),
            n: grid.axis(0).interior,
            steps: grid.time.steps,
            h: grid.axis(0).h(),
            dt: grid.time.dt(),
            final_time: grid.time.final_time,
        })
    }

    pub fn manifest(&self, samples: Vec<f64>) -> anyhow::Result<RunManifest> {
        let fom = FomOptions::default();
        let mut m = RunManifest::new(
            self.name(),
            self.grid_record()?,
            samples,
            ToleranceRecord {
                newton: fom.newton_tol,
                newton_max_iter: fom.newton_max_iter,
                pcg: fom.pcg.tol,
                rom_newton: RomOptions::default().newton_tol,
            },
        );
        if let Problem::Custom(c) = self {
            m.custom = Some(c.clone());
        }
        Ok(m)
    }

    /// Problem recorded in a manifest.
    pub fn from_manifest(m: &RunManifest) -> anyhow::Result<Self> {
        if m.problem == "custom" {
            let c = m
                .custom
                .clone()
                .ok_or_else(|| usage("custom manifest lacks its [custom] table"))?;
            return Ok(Problem::Custom(c));
        }
        let id: CaseId = m.problem.parse().map_err(|e: fracrom::Error| usage(e.to_string()))?;
        Ok(Problem::Case(BenchmarkCase {
            id,
            n: m.grid.n,
            steps: m.grid.steps,
            final_time: m.grid.final_time,
        }))
    }
}

pub fn load_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    if !path.is_file() {
        return Err(usage(format!("manifest {} does not exist", path.display())));
    }
    RunManifest::read(path).with_context(|| format!("reading manifest {}", path.display()))
}

pub fn load_snapshots(m: &RunManifest, base: &Path, name: &str, kind: SnapshotKind) -> anyhow::Result<SnapshotMatrix> {
    Ok(SnapshotMatrix::from_matrix(m.load_matrix(base, name)?, kind))
}

/// Reduced operators stored by `build-rom`.
pub fn load_rom(m: &RunManifest, base: &Path, problem: &Problem) -> anyhow::Result<RomOperators> {
    if !m.has("basis") {
        return Err(usage("manifest has no reduced basis; run build-rom first"));
    }
    let phi = m.load_matrix(base, "basis")?;
    let sigma: Vec<f64> = m.load_matrix(base, "singular_values")?.iter().copied().collect();
    let basis = ReducedBasis::new(phi, sigma)?;
    let deim = if m.has("deim_basis") {
        let psi = m.load_matrix(base, "deim_basis")?;
        let idx = fracrom::persistence::indices_from_matrix(&m.load_matrix(base, "deim_indices")?)?;
        Some(build_deim_operator(basis.matrix(), &psi, &idx)?)
    } else {
        None
    };
    let stiffness = problem.spec(0.5)?.stiffness()?;
    Ok(build_rom(&stiffness, &basis, deim)?)
}
