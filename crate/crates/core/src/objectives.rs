//! Black-box objective abstraction, built-in test functions with exact
//! derivatives for ground truth, and the sign-comparison oracle.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A real-valued function on R^n, evaluated through a counted black-box
/// interface, optionally carrying closed-form derivatives for ground truth.
///
/// The evaluation counter increments by exactly one per `eval` call (atomic,
/// safe under concurrent evaluation), which makes the evaluation accounting
/// of every estimator directly auditable.
pub struct Objective {
    n: usize,
    f: Box<EvalFn>,
    grad: Option<Box<GradFn>>,
    hess: Option<Box<HessFn>>,
    evals: AtomicU64,
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective")
            .field("n", &self.n)
            .field("has_grad", &self.grad.is_some())
            .field("has_hess", &self.hess.is_some())
            .field("evals", &self.eval_count())
            .finish()
    }
}

impl Objective {
    /// Black-box objective from a closure; no exact derivatives attached.
    pub fn from_fn(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            n,
            f: Box::new(f),
            grad: None,
            hess: None,
            evals: AtomicU64::new(0),
        }
    }

    /// Attach a closed-form gradient.
    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Box::new(grad));
        self
    }

    /// Attach a closed-form Hessian.
    pub fn with_hessian(
        mut self,
        hess: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess = Some(Box::new(hess));
        self
    }

    /// The built-in benchmark objective
    /// f(x) = exp((x₁−1)(x₂+2)) + Σⱼ sin xⱼ
    /// with closed-form gradient and Hessian. Requires n ≥ 2.
    ///
    /// Writing E = exp((x₁−1)(x₂+2)), the nonzero derivative structure is a
    /// 2×2 block from the exponential plus diagonal sine terms:
    /// ∂₁f = (x₂+2)E + cos x₁, ∂₂f = (x₁−1)E + cos x₂, ∂ⱼf = cos xⱼ (j ≥ 3);
    /// ∂²₁₁ = (x₂+2)²E − sin x₁, ∂²₁₂ = (1+(x₁−1)(x₂+2))E, ∂²₂₂ = (x₁−1)²E − sin x₂.
    pub fn exp_sines(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", "the benchmark objective needs n >= 2"));
        }
        let f = move |x: &[f64]| -> f64 {
            ((x[0] - 1.0) * (x[1] + 2.0)).exp() + x.iter().map(|v| v.sin()).sum::<f64>()
        };
        let grad = move |x: &[f64]| -> DVector<f64> {
            let e = ((x[0] - 1.0) * (x[1] + 2.0)).exp();
            let mut g = DVector::from_fn(x.len(), |j, _| x[j].cos());
            g[0] += (x[1] + 2.0) * e;
            g[1] += (x[0] - 1.0) * e;
            g
        };
        let hess = move |x: &[f64]| -> DMatrix<f64> {
            let a = x[0] - 1.0;
            let c = x[1] + 2.0;
            let e = (a * c).exp();
            let mut h = DMatrix::zeros(x.len(), x.len());
            for j in 0..x.len() {
                h[(j, j)] = -x[j].sin();
            }
            h[(0, 0)] += c * c * e;
            h[(1, 1)] += a * a * e;
            let cross = (1.0 + a * c) * e;
            h[(0, 1)] += cross;
            h[(1, 0)] += cross;
            h
        };
        Ok(Self::from_fn(n, f).with_gradient(grad).with_hessian(hess))
    }

    /// Linear objective f(x) = cᵀx with exact derivatives (∇f = c, ∇²f = 0).
    pub fn linear(c: DVector<f64>) -> Result<Self> {
        if !c.iter().all(|v| v.is_finite()) {
            return Err(invalid("c", "coefficients must be finite"));
        }
        let n = c.len();
        let c_eval = c.clone();
        let c_grad = c;
        let f = move |x: &[f64]| -> f64 { x.iter().zip(c_eval.iter()).map(|(a, b)| a * b).sum() };
        let grad = move |_: &[f64]| c_grad.clone();
        let hess = move |x: &[f64]| DMatrix::zeros(x.len(), x.len());
        Ok(Self::from_fn(n, f).with_gradient(grad).with_hessian(hess))
    }

    /// Quadratic objective f(x) = ½xᵀAx + bᵀx with exact derivatives
    /// (∇f = Ax + b, ∇²f = A). `a` must be symmetric within 1e−12.
    pub fn quadratic(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: a.ncols(),
            });
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.len(),
            });
        }
        let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        let tolerance = 1e-12 * scale;
        let mut defect = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                defect = defect.max((a[(i, j)] - a[(j, i)]).abs());
            }
        }
        if defect > tolerance {
            return Err(Error::NotSymmetric { defect, tolerance });
        }

        let a_eval = a.clone();
        let b_eval = b.clone();
        let f = move |x: &[f64]| -> f64 {
            let x = DVector::from_column_slice(x);
            0.5 * (&a_eval * &x).dot(&x) + b_eval.dot(&x)
        };
        let a_grad = a.clone();
        let b_grad = b;
        let grad = move |x: &[f64]| -> DVector<f64> {
            let x = DVector::from_column_slice(x);
            &a_grad * x + &b_grad
        };
        let hess = move |_: &[f64]| a.clone();
        Ok(Self::from_fn(n, f).with_gradient(grad).with_hessian(hess))
    }

    /// Dimension of the domain.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Evaluate f(x), incrementing the evaluation counter by one.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        (self.f)(x)
    }

    /// Total number of `eval` calls made so far (monotone).
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Evaluate and reject non-finite results, naming the evaluation point.
    ///
    /// `point` is called lazily only on failure to build the description.
    pub(crate) fn eval_checked(
        &self,
        x: &[f64],
        point: impl FnOnce() -> String,
    ) -> Result<f64> {
        let value = self.eval(x);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteEvaluation {
                value,
                point: point(),
            })
        }
    }

    /// Closed-form gradient, if attached.
    pub fn gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    /// Closed-form Hessian, if attached.
    pub fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        self.hess.as_ref().map(|h| h(x))
    }
}

/// Sign-comparison oracle over an objective:
/// compare(x, y) = sign(f(x) − f(y)) ∈ {−1, 0, +1}.
///
/// Each comparison evaluates the objective at both points (two counter
/// increments); no caching, so the oracle is exactly as expensive as its
/// definition.
#[derive(Debug)]
pub struct ComparisonOracle<'a> {
    objective: &'a Objective,
}

impl<'a> ComparisonOracle<'a> {
    /// Wrap an objective.
    pub fn new(objective: &'a Objective) -> Self {
        Self { objective }
    }

    /// The wrapped objective.
    pub fn objective(&self) -> &Objective {
        self.objective
    }

    /// sign(f(x) − f(y)); 0 on exact ties. Antisymmetric by construction.
    ///
    /// # Errors
    ///
    /// [`Error::NonFiniteEvaluation`] if either evaluation is non-finite.
    pub fn compare(&self, x: &[f64], y: &[f64]) -> Result<i8> {
        let fx = self.objective.eval(x);
        if !fx.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                value: fx,
                point: "first comparison point".to_string(),
            });
        }
        let fy = self.objective.eval(y);
        if !fy.is_finite() {
            return Err(Error::NonFiniteEvaluation {
                value: fy,
                point: "second comparison point".to_string(),
            });
        }
        Ok(if fx > fy {
            1
        } else if fx < fy {
            -1
        } else {
            0
        })
    }
}
