//! Benchmark problems with manufactured solutions.
//!
//! | id      | domain     | mu         | g(u)   | exact solution                              |
//! |---------|------------|------------|--------|---------------------------------------------|
//! | `test1` | [0,1]      | 1 + x      | 0      | t^(1+b) sin(pi x)                           |
//! | `test2` | [0,1]      | 0.05       | sin u  | 4 t^2 x(1-x) exp(-50 (x-1/2)^2)             |
//! | `ex1`   | as `test1`, source fixed at the true order 0.75                          |
//! | `ex2`   | as `test2`, source fixed at the true order 0.75                          |
//! | `ex3`   | [-1,1]^2   | 1          | 0      | none (f = 0, u0 = (x^2-1)(y^2-1))            |
//! | `ex4`   | [0,1]^2    | diag(1, 2) | u^3    | (t^(2+b) + t^2 + 1) sin(2 pi x) sin(pi y)    |
//!
//! In the identification examples the data come from the true order and only
//! the order of the time derivative is unknown, so the source is built once
//! with `b = 0.75` and kept fixed for every trial order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DiscretizationGrid;
use crate::kernel::{gamma, FractionalOrder};
use crate::problem::{Diffusion, ProblemSpec, Reaction, SpaceTimeFn};

/// True order in the identification examples.
pub const BETA_STAR: f64 = 0.75;

/// Orders whose full-order runs train the reduced models.
pub const TRAINING_SAMPLES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

const TEST2_MU: f64 = 0.05;

pub fn test1_exact(beta: f64) -> SpaceTimeFn {
    Arc::new(move |x, t| t.powf(1.0 + beta) * (PI * x[0]).sin())
}

pub fn test1_source(beta: f64) -> SpaceTimeFn {
    let g = gamma(2.0 + beta);
    Arc::new(move |x, t| {
        let x = x[0];
        g * t * (PI * x).sin() + t.powf(1.0 + beta) * ((1.0 + x) * PI * PI * (PI * x).sin() - PI * (PI * x).cos())
    })
}

pub fn test2_exact(_beta: f64) -> SpaceTimeFn {
    Arc::new(|x, t| {
        let x = x[0];
        4.0 * t * t * x * (1.0 - x) * (-50.0 * (x - 0.5) * (x - 0.5)).exp()
    })
}

pub fn test2_source(beta: f64) -> SpaceTimeFn {
    let c = 4.0 * gamma(3.0) / gamma(3.0 - beta);
    Arc::new(move |x, t| {
        let x = x[0];
        let e = (-50.0 * (x - 0.5) * (x - 0.5)).exp();
        let u = 4.0 * t * t * x * (1.0 - x) * e;
        let poly = -10000.0 * x.powi(4) + 20000.0 * x.powi(3) - 12000.0 * x * x + 2000.0 * x + 98.0;
        u.sin() + c * t.powf(2.0 - beta) * x * (1.0 - x) * e - 4.0 * TEST2_MU * t * t * poly * e
    })
}

pub fn example4_exact(beta: f64) -> SpaceTimeFn {
    Arc::new(move |x, t| (t.powf(2.0 + beta) + t * t + 1.0) * (2.0 * PI * x[0]).sin() * (PI * x[1]).sin())
}

pub fn example4_source(beta: f64) -> SpaceTimeFn {
    let c1 = gamma(3.0 + beta) / gamma(3.0);
    let c2 = gamma(3.0) / gamma(3.0 - beta);
    Arc::new(move |x, t| {
        let s = (2.0 * PI * x[0]).sin() * (PI * x[1]).sin();
        let u = (t.powf(2.0 + beta) + t * t + 1.0) * s;
        u * u * u + 6.0 * PI * PI * u + (c1 * t * t + c2 * t.powf(2.0 - beta)) * s
    })
}

fn line(n: usize, steps: usize, final_time: f64) -> Result<DiscretizationGrid> {
    DiscretizationGrid::uniform(1, 0.0, 1.0, n, final_time, steps)
}

pub fn test1_on(beta: FractionalOrder, source_beta: f64, grid: DiscretizationGrid) -> ProblemSpec {
    ProblemSpec {
        grid,
        diffusion: Diffusion::field(|x| 1.0 + x[0]),
        reaction: Reaction::None,
        source: Some(test1_source(source_beta)),
        initial: None,
        beta,
    }
}

pub fn test2_on(beta: FractionalOrder, source_beta: f64, grid: DiscretizationGrid) -> ProblemSpec {
    ProblemSpec {
        grid,
        diffusion: Diffusion::constant(TEST2_MU),
        reaction: Reaction::Sine,
        source: Some(test2_source(source_beta)),
        initial: None,
        beta,
    }
}

/// Linear test on the default grid `h = dt = 1/64`, `T = 1`.
pub fn test1(beta: FractionalOrder) -> ProblemSpec {
    test1_on(beta, beta.get(), line(63, 64, 1.0).expect("valid default grid"))
}

/// Nonlinear test on the default grid `h = dt = 1/64`, `T = 1`.
pub fn test2(beta: FractionalOrder) -> ProblemSpec {
    test2_on(beta, beta.get(), line(63, 64, 1.0).expect("valid default grid"))
}

pub fn example3_on(beta: FractionalOrder, grid: DiscretizationGrid) -> ProblemSpec {
    ProblemSpec {
        grid,
        diffusion: Diffusion::constant(1.0),
        reaction: Reaction::None,
        source: None,
        initial: Some(Arc::new(|x| (x[0] * x[0] - 1.0) * (x[1] * x[1] - 1.0))),
        beta,
    }
}

pub fn example4_on(beta: FractionalOrder, source_beta: f64, grid: DiscretizationGrid) -> ProblemSpec {
    ProblemSpec {
        grid,
        diffusion: Diffusion::diagonal(1.0, 2.0),
        reaction: Reaction::Cubic,
        source: Some(example4_source(source_beta)),
        initial: Some(Arc::new(|x| (2.0 * PI * x[0]).sin() * (PI * x[1]).sin())),
        beta,
    }
}

/// Linear 2D example on `[-1,1]^2` with a `64 x 64 x 64` grid.
pub fn example3(beta: FractionalOrder) -> ProblemSpec {
    example3_on(
        beta,
        DiscretizationGrid::uniform(2, -1.0, 1.0, 63, 1.0, 64).expect("valid default grid"),
    )
}

/// Nonlinear 2D example on `[0,1]^2` with a `64 x 64 x 64` grid.
pub fn example4(beta: FractionalOrder) -> ProblemSpec {
    example4_on(
        beta,
        BETA_STAR,
        DiscretizationGrid::uniform(2, 0.0, 1.0, 63, 1.0, 64).expect("valid default grid"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    Test1,
    Test2,
    Ex1,
    Ex2,
    Ex3,
    Ex4,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::Test1,
        CaseId::Test2,
        CaseId::Ex1,
        CaseId::Ex2,
        CaseId::Ex3,
        CaseId::Ex4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Test1 => "test1",
            CaseId::Test2 => "test2",
            CaseId::Ex1 => "ex1",
            CaseId::Ex2 => "ex2",
            CaseId::Ex3 => "ex3",
            CaseId::Ex4 => "ex4",
        }
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            CaseId::Ex3 | CaseId::Ex4 => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown problem `{s}` (expected one of test1, test2, ex1, ex2, ex3, ex4)"
            ))
        })
    }
}

/// A catalog problem on a chosen grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub id: CaseId,
    /// Interior nodes per axis.
    pub n: usize,
    /// Time steps.
    pub steps: usize,
    pub final_time: f64,
}

impl BenchmarkCase {
    /// Default grid: 63 interior nodes per axis, `dt = 1/64`, `T = 1`.
    pub fn new(id: CaseId) -> Self {
        Self {
            id,
            n: 63,
            steps: 64,
            final_time: 1.0,
        }
    }

    /// Longer horizon at the default time step.
    pub fn with_final_time(id: CaseId, final_time: f64) -> Self {
        Self {
            steps: (64.0 * final_time).round() as usize,
            final_time,
            ..Self::new(id)
        }
    }

    pub fn grid(&self) -> Result<DiscretizationGrid> {
        match self.id {
            CaseId::Ex3 => DiscretizationGrid::uniform(2, -1.0, 1.0, self.n, self.final_time, self.steps),
            CaseId::Ex4 => DiscretizationGrid::uniform(2, 0.0, 1.0, self.n, self.final_time, self.steps),
            _ => line(self.n, self.steps, self.final_time),
        }
    }

    /// The problem solved at order `beta`. This is also the problem used to
    /// generate training snapshots at a sample order.
    pub fn spec(&self, beta: f64) -> Result<ProblemSpec> {
        let order = FractionalOrder::new(beta)?;
        let grid = self.grid()?;
        Ok(match self.id {
            CaseId::Test1 => test1_on(order, beta, grid),
            CaseId::Test2 => test2_on(order, beta, grid),
            CaseId::Ex1 => test1_on(order, BETA_STAR, grid),
            CaseId::Ex2 => test2_on(order, BETA_STAR, grid),
            CaseId::Ex3 => example3_on(order, grid),
            CaseId::Ex4 => example4_on(order, BETA_STAR, grid),
        })
    }

    /// Exact solution of [`spec(beta)`](Self::spec), when one is known.
    pub fn exact(&self, beta: f64) -> Option<SpaceTimeFn> {
        match self.id {
            CaseId::Test1 => Some(test1_exact(beta)),
            CaseId::Test2 => Some(test2_exact(beta)),
            CaseId::Ex1 if beta == BETA_STAR => Some(test1_exact(beta)),
            CaseId::Ex2 if beta == BETA_STAR => Some(test2_exact(beta)),
            CaseId::Ex4 if beta == BETA_STAR => Some(example4_exact(beta)),
            _ => None,
        }
    }

    /// True order for identification problems.
    pub fn beta_star(&self) -> Option<f64> {
        matches!(self.id, CaseId::Ex1 | CaseId::Ex2 | CaseId::Ex3 | CaseId::Ex4).then_some(BETA_STAR)
    }

    /// POD dimension used for this problem.
    pub fn default_rank(&self) -> usize {
        match self.id {
            CaseId::Test1 => 2,
            _ => 4,
        }
    }

    /// DEIM points, for problems with a reaction term.
    pub fn default_deim_points(&self) -> Option<usize> {
        match self.id {
            CaseId::Test2 | CaseId::Ex2 | CaseId::Ex4 => Some(10),
            _ => None,
        }
    }

    /// Exact solution sampled at the grid nodes at time `t`.
    pub fn sample_exact(&self, beta: f64, t: f64) -> Result<Option<Vec<f64>>> {
        let grid = self.grid()?;
        Ok(self.exact(beta).map(|u| grid.sample(|x| u(x, t))))
    }
}
