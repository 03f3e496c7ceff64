//! Definition of one time-fractional diffusion-reaction problem
//!
//! ```text
//! D_t^beta u - div(mu grad u) + g(u) = f(x, t)   in Omega x (0, T]
//! u = 0 on the boundary,  u(x, 0) = u0(x)
//! ```

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::grid::DiscretizationGrid;
use crate::kernel::FractionalOrder;
use crate::stiffness::{assemble_stiffness, StiffnessMatrix};

pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Diffusion coefficient: a scalar field, or a diagonal tensor in 2D.
#[derive(Clone)]
pub enum Diffusion {
    Scalar(SpatialFn),
    /// `xy` exists only so that full tensors can be described and rejected.
    Tensor {
        xx: SpatialFn,
        yy: SpatialFn,
        xy: Option<SpatialFn>,
    },
}

impl Diffusion {
    pub fn constant(mu: f64) -> Self {
        Diffusion::Scalar(Arc::new(move |_| mu))
    }

    pub fn field(mu: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Diffusion::Scalar(Arc::new(mu))
    }

    pub fn diagonal(mu_x: f64, mu_y: f64) -> Self {
        Diffusion::Tensor {
            xx: Arc::new(move |_| mu_x),
            yy: Arc::new(move |_| mu_y),
            xy: None,
        }
    }
}

/// Reaction term `g(u)` together with `g'(u)`.
#[derive(Clone, Default)]
pub enum Reaction {
    #[default]
    None,
    Sine,
    Cubic,
    Custom {
        g: ScalarFn,
        dg: ScalarFn,
    },
}

impl Reaction {
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Reaction::None => 0.0,
            Reaction::Sine => u.sin(),
            Reaction::Cubic => u * u * u,
            Reaction::Custom { g, .. } => g(u),
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Reaction::None => 0.0,
            Reaction::Sine => u.cos(),
            Reaction::Cubic => 3.0 * u * u,
            Reaction::Custom { dg, .. } => dg(u),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Reaction::None)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reaction::None => "none",
            Reaction::Sine => "sin(u)",
            Reaction::Cubic => "u^3",
            Reaction::Custom { .. } => "custom",
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub grid: DiscretizationGrid,
    pub diffusion: Diffusion,
    pub reaction: Reaction,
    pub source: Option<SpaceTimeFn>,
    pub initial: Option<SpatialFn>,
    pub beta: FractionalOrder,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("grid", &self.grid)
            .field("reaction", &self.reaction.name())
            .field("has_source", &self.source.is_some())
            .field("has_initial", &self.initial.is_some())
            .field("beta", &self.beta)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Same problem with a different fractional order. The source is left
    /// untouched, which is what the identification problem needs: the data
    /// `f` is given and only the order of the operator is unknown.
    pub fn with_beta(&self, beta: FractionalOrder) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn with_grid(&self, grid: DiscretizationGrid) -> Self {
        Self { grid, ..self.clone() }
    }

    /// No reaction term, so each time step is a single linear solve.
    pub fn is_linear(&self) -> bool {
        self.reaction.is_none()
    }

    /// `u^0`: the initial data at the interior nodes.
    pub fn initial_state(&self) -> Vec<f64> {
        match &self.initial {
            Some(u0) => self.grid.sample(|x| u0(x)),
            None => vec![0.0; self.grid.len()],
        }
    }

    #[inline]
    pub fn source_at(&self, k: usize, t: f64) -> f64 {
        match &self.source {
            Some(f) => {
                let x = self.grid.node(k);
                f(&x[..self.grid.dim()], t)
            }
            None => 0.0,
        }
    }

    /// `F(u, x_k, t) = g(u) - f(x_k, t)`.
    #[inline]
    pub fn nonlinear_term(&self, u: f64, k: usize, t: f64) -> f64 {
        self.reaction.value(u) - self.source_at(k, t)
    }

    /// `F(u, ., t)` at every node.
    pub fn nonlinear_vector(&self, u: &[f64], t: f64) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, &uk)| self.nonlinear_term(uk, k, t))
            .collect()
    }

    /// `f(., t)` at every node.
    pub fn source_vector(&self, t: f64) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.source_at(k, t)).collect()
    }

    pub fn stiffness(&self) -> Result<StiffnessMatrix> {
        assemble_stiffness(&self.diffusion, &self.grid)
    }
}
