//! L1 discretization of the Caputo time derivative.
//!
//! For `0 < beta < 1` the Caputo derivative at `t_m` is approximated by
//!
//! ```text
//! (1 / gamma) * sum_{j=0}^{m-1} b_j (u^{m-j} - u^{m-j-1}),   gamma = dt^beta * Gamma(2 - beta)
//! ```
//!
//! with `b_j = (j+1)^(1-beta) - j^(1-beta)`. Moving everything except `u^m` to the
//! right-hand side leaves the memory term computed by [`history_rhs`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};

/// Order of the Caputo derivative, restricted to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 && beta < 1.0 {
            Ok(Self(beta))
        } else {
            Err(Error::InvalidOrder(beta))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;

    fn try_from(beta: f64) -> Result<Self> {
        Self::new(beta)
    }
}

impl std::fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// L1 weights `b_0..b_{m-1}` for one fractional order.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    beta: FractionalOrder,
    b: Vec<f64>,
}

impl L1Weights {
    pub fn beta(&self) -> FractionalOrder {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.b
    }

    /// The first `m` weights. `b_j` does not depend on the sequence length, so a
    /// prefix of a long sequence is the sequence for a shorter history.
    pub fn prefix(&self, m: usize) -> &[f64] {
        &self.b[..m]
    }
}

/// Closed-form L1 weights `b_j = (j+1)^(1-beta) - j^(1-beta)` for `j < m`.
pub fn l1_weights(beta: FractionalOrder, m: usize) -> Result<L1Weights> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "L1 weight sequence needs at least one entry".into(),
        ));
    }
    let p = 1.0 - beta.get();
    let b = (0..m)
        .map(|j| {
            let j = j as f64;
            (j + 1.0).powf(p) - j.powf(p)
        })
        .collect();
    Ok(L1Weights { beta, b })
}

const CACHE_CAPACITY: usize = 64;

type WeightCache = Mutex<HashMap<(u64, usize), Arc<L1Weights>>>;

fn weight_cache() -> &'static WeightCache {
    static CACHE: OnceLock<WeightCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Same as [`l1_weights`] but memoized on `(beta, m)`; the identification loop
/// revisits the same orders (e.g. `beta` and `beta + delta` across line-search trials).
pub fn cached_l1_weights(beta: FractionalOrder, m: usize) -> Result<Arc<L1Weights>> {
    let key = (beta.get().to_bits(), m);
    if let Some(w) = weight_cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(w));
    }
    let w = Arc::new(l1_weights(beta, m)?);
    let mut cache = weight_cache().lock().unwrap();
    if cache.len() >= CACHE_CAPACITY {
        cache.clear();
    }
    cache.insert(key, Arc::clone(&w));
    Ok(w)
}

/// `gamma = dt^beta * Gamma(2 - beta)`, the factor multiplying the spatial
/// operator once the L1 sum is normalized so that `b_0 = 1` multiplies `u^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaScale {
    pub gamma: f64,
    pub beta: FractionalOrder,
    pub dt: f64,
}

pub fn gamma_scale(beta: FractionalOrder, dt: f64) -> Result<GammaScale> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let gamma = dt.powf(beta.get()) * gamma_fn(2.0 - beta.get());
    Ok(GammaScale { gamma, beta, dt })
}

/// Euler gamma function (Lanczos approximation).
pub fn gamma(x: f64) -> f64 {
    gamma_fn(x)
}

/// Memory term of the L1 scheme at step `m = history.len()`:
///
/// ```text
/// sum_{j=1}^{m-1} (b_{j-1} - b_j) u^{m-j} + b_{m-1} u^0
/// ```
///
/// `history` holds `u^0..u^{m-1}` and `weights` holds `b_0..b_{m-1}`.
pub fn history_rhs<V: AsRef<[f64]>>(history: &[V], weights: &[f64]) -> Result<Vec<f64>> {
    let m = history.len();
    if m == 0 {
        return Err(Error::InvalidArgument("empty history".into()));
    }
    if weights.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: weights.len(),
            context: "L1 weights vs history length",
        });
    }
    let n = history[0].as_ref().len();
    let mut out: Vec<f64> = history[0].as_ref().iter().map(|v| weights[m - 1] * v).collect();
    for j in 1..m {
        let u = history[m - j].as_ref();
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: u.len(),
                context: "history state vectors",
            });
        }
        let c = weights[j - 1] - weights[j];
        for (o, &ui) in out.iter_mut().zip(u) {
            *o += c * ui;
        }
    }
    Ok(out)
}

/// L1 time stepping for the scalar problem `D^beta u = f(t)`, `u(0) = u0`.
///
/// Returns `u^0..u^M` on the uniform grid `t_m = m T / M`.
pub fn solve_scalar_caputo(
    beta: FractionalOrder,
    source: impl Fn(f64) -> f64,
    u0: f64,
    final_time: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("need at least one time step".into()));
    }
    let dt = final_time / steps as f64;
    let scale = gamma_scale(beta, dt)?;
    let w = l1_weights(beta, steps)?;
    let mut states: Vec<[f64; 1]> = Vec::with_capacity(steps + 1);
    states.push([u0]);
    for m in 1..=steps {
        let hist = history_rhs(&states, w.prefix(m))?;
        let t = final_time * m as f64 / steps as f64;
        states.push([hist[0] + scale.gamma * source(t)]);
    }
    Ok(states.into_iter().map(|s| s[0]).collect())
}
