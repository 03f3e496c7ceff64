//! User-supplied problem data as algebraic expressions in `x`, `y`, `t`, `u`
//! and `beta`, for problems outside the built-in benchmark set.

use std::sync::Arc;

use evalexpr::{build_operator_tree, Context, DefaultNumericTypes, EvalexprError, EvalexprResult, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DiscretizationGrid;
use crate::kernel::{gamma, FractionalOrder};
use crate::problem::{Diffusion, ProblemSpec, Reaction, ScalarFn, SpaceTimeFn, SpatialFn};

type Val = Value<DefaultNumericTypes>;
type EvalexprResultValue = EvalexprResult<Val, DefaultNumericTypes>;

/// Values bound to the free variables of an expression.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub u: f64,
    pub beta: f64,
}

struct EvalContext {
    x: Val,
    y: Val,
    t: Val,
    u: Val,
    beta: Val,
    pi: Val,
    e: Val,
}

impl EvalContext {
    fn new(b: &Bindings) -> Self {
        Self {
            x: Val::Float(b.x),
            y: Val::Float(b.y),
            t: Val::Float(b.t),
            u: Val::Float(b.u),
            beta: Val::Float(b.beta),
            pi: Val::Float(std::f64::consts::PI),
            e: Val::Float(std::f64::consts::E),
        }
    }
}

fn unary(arg: &Val, f: fn(f64) -> f64) -> EvalexprResultValue {
    Ok(Val::Float(f(arg.as_number()?)))
}

impl Context for EvalContext {
    type NumericTypes = DefaultNumericTypes;

    fn get_value(&self, identifier: &str) -> Option<&Val> {
        match identifier {
            "x" => Some(&self.x),
            "y" => Some(&self.y),
            "t" => Some(&self.t),
            "u" => Some(&self.u),
            "beta" => Some(&self.beta),
            "pi" => Some(&self.pi),
            "e" => Some(&self.e),
            _ => None,
        }
    }

    fn call_function(&self, identifier: &str, argument: &Val) -> EvalexprResultValue {
        match identifier {
            "sin" => unary(argument, f64::sin),
            "cos" => unary(argument, f64::cos),
            "tan" => unary(argument, f64::tan),
            "exp" => unary(argument, f64::exp),
            "ln" | "log" => unary(argument, f64::ln),
            "sqrt" => unary(argument, f64::sqrt),
            "abs" => unary(argument, f64::abs),
            "sinh" => unary(argument, f64::sinh),
            "cosh" => unary(argument, f64::cosh),
            "tanh" => unary(argument, f64::tanh),
            "gamma" => unary(argument, gamma),
            "pow" => {
                let args = argument.as_fixed_len_tuple(2)?;
                Ok(Val::Float(args[0].as_number()?.powf(args[1].as_number()?)))
            }
            _ => Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string())),
        }
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<(), DefaultNumericTypes> {
        Err(EvalexprError::BuiltinFunctionsCannotBeDisabled)
    }
}

/// Rewrites bare integer literals as floats so that `1/2` means one half.
fn promote_integers(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let starts_number = c.is_ascii_digit()
            && (i == 0 || !(chars[i - 1].is_alphanumeric() || chars[i - 1] == '_' || chars[i - 1] == '.'));
        if !starts_number {
            out.push(c);
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        out.extend(&chars[start..i]);
        let is_float = i < chars.len() && matches!(chars[i], '.' | 'e' | 'E');
        if !is_float {
            out.push_str(".0");
        }
    }
    out
}

/// A parsed expression.
#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    tree: Arc<Node<DefaultNumericTypes>>,
}

impl Expression {
    /// Parses `src` and evaluates it once at a neutral point so that unknown
    /// names are reported up front.
    pub fn parse(src: &str) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(&promote_integers(src))
            .map_err(|e| Error::Expression(format!("`{src}`: {e}")))?;
        let expr = Self {
            source: src.to_string(),
            tree: Arc::new(tree),
        };
        let probe = Bindings {
            x: 0.3,
            y: 0.3,
            t: 0.5,
            u: 0.1,
            beta: 0.5,
        };
        expr.try_eval(&probe)?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn try_eval(&self, b: &Bindings) -> Result<f64> {
        self.tree
            .eval_number_with_context(&EvalContext::new(b))
            .map_err(|e| Error::Expression(format!("`{}`: {e}", self.source)))
    }

    /// Evaluation that maps failures to NaN, for use inside solver callbacks.
    pub fn eval(&self, b: &Bindings) -> f64 {
        self.try_eval(b).unwrap_or(f64::NAN)
    }
}

fn point(x: &[f64]) -> (f64, f64) {
    (x[0], x.get(1).copied().unwrap_or(0.0))
}

/// Problem description with data given as expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomProblem {
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Interior nodes per axis.
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub final_time: f64,
    pub steps: usize,
    pub beta: f64,
    /// `mu(x, y)`.
    pub diffusion: String,
    /// `g(u)`; absent means no reaction.
    pub reaction: Option<String>,
    /// `g'(u)`; a central difference is used when absent.
    pub reaction_derivative: Option<String>,
    /// `f(x, y, t)`, may also depend on `beta`.
    pub source: Option<String>,
    /// `u0(x, y)`.
    pub initial: Option<String>,
}

impl Default for CustomProblem {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 63,
            lo: 0.0,
            hi: 1.0,
            final_time: 1.0,
            steps: 64,
            beta: 0.5,
            diffusion: "1".into(),
            reaction: None,
            reaction_derivative: None,
            source: None,
            initial: None,
        }
    }
}

impl CustomProblem {
    pub fn spec(&self) -> Result<ProblemSpec> {
        let beta = FractionalOrder::new(self.beta)?;
        let grid = DiscretizationGrid::uniform(self.dim, self.lo, self.hi, self.n, self.final_time, self.steps)?;
        let b = beta.get();

        let mu = Expression::parse(&self.diffusion)?;
        let diffusion_fn: SpatialFn = Arc::new(move |x: &[f64]| {
            let (x, y) = point(x);
            mu.eval(&Bindings {
                x,
                y,
                beta: b,
                ..Default::default()
            })
        });

        let reaction = match &self.reaction {
            None => Reaction::None,
            Some(g_src) => {
                let g_expr = Expression::parse(g_src)?;
                let g_eval = g_expr.clone();
                let g: ScalarFn = Arc::new(move |u| {
                    g_eval.eval(&Bindings {
                        u,
                        beta: b,
                        ..Default::default()
                    })
                });
                let dg: ScalarFn = match &self.reaction_derivative {
                    Some(d_src) => {
                        let d = Expression::parse(d_src)?;
                        Arc::new(move |u| {
                            d.eval(&Bindings {
                                u,
                                beta: b,
                                ..Default::default()
                            })
                        })
                    }
                    None => Arc::new(move |u| {
                        let h = 1e-6 * (1.0 + u.abs());
                        let at = |u| {
                            g_expr.eval(&Bindings {
                                u,
                                beta: b,
                                ..Default::default()
                            })
                        };
                        (at(u + h) - at(u - h)) / (2.0 * h)
                    }),
                };
                Reaction::Custom { g, dg }
            }
        };

        let source = match &self.source {
            None => None,
            Some(src) => {
                let f = Expression::parse(src)?;
                let f: SpaceTimeFn = Arc::new(move |x: &[f64], t| {
                    let (x, y) = point(x);
                    f.eval(&Bindings {
                        x,
                        y,
                        t,
                        u: 0.0,
                        beta: b,
                    })
                });
                Some(f)
            }
        };

        let initial = match &self.initial {
            None => None,
            Some(src) => {
                let u0 = Expression::parse(src)?;
                let u0: SpatialFn = Arc::new(move |x: &[f64]| {
                    let (x, y) = point(x);
                    u0.eval(&Bindings {
                        x,
                        y,
                        beta: b,
                        ..Default::default()
                    })
                });
                Some(u0)
            }
        };

        Ok(ProblemSpec {
            grid,
            diffusion: Diffusion::Scalar(diffusion_fn),
            reaction,
            source,
            initial,
            beta,
        })
    }
}
