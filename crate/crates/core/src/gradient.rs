//! Two-point gradient estimators driven by random direction ensembles.
//!
//! Every estimator consumes a [`RandomSource`] and is bitwise reproducible
//! for a fixed `(seed, stream)` pair: directions are drawn in a fixed order
//! and function evaluations happen in a fixed order, so the returned vector
//! and the objective's evaluation counter are both deterministic.

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::objectives::{ComparisonOracle, Objective};
use crate::sampling::{sparse_rademacher_using, stiefel_using, unit_sphere_using, RandomSource};

/// Which direction ensemble produced a [`GradientEstimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMethod {
    /// Orthonormal frame directions with the `n/(2δk)` prefactor.
    Stiefel,
    /// Independent unit-sphere directions with the same prefactor.
    Spherical,
    /// Independent standard Gaussian directions, probed at `δv/√n`.
    Gaussian,
    /// One sparse sign vector probed forward against the base point.
    Rademacher,
    /// Sign-comparison responses aggregated through the l1/l2 maximizer.
    Comparison,
    /// Central differences along every coordinate axis.
    Entrywise,
}

impl GradientMethod {
    /// Stable name used in CSV output and CLI selection.
    pub fn name(self) -> &'static str {
        match self {
            GradientMethod::Stiefel => "grad-stiefel",
            GradientMethod::Spherical => "grad-spherical",
            GradientMethod::Gaussian => "grad-gaussian",
            GradientMethod::Rademacher => "grad-rademacher",
            GradientMethod::Comparison => "grad-comparison",
            GradientMethod::Entrywise => "grad-entrywise",
        }
    }
}

impl std::fmt::Display for GradientMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A gradient estimate together with the budget it consumed.
#[derive(Clone, Debug)]
pub struct GradientEstimate {
    vector: DVector<f64>,
    method: GradientMethod,
    k: usize,
    delta: f64,
    n_evals: u64,
    seed: Option<u64>,
    stream: Option<u64>,
    degenerate: bool,
}

impl GradientEstimate {
    /// The estimated gradient.
    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }

    /// Consume the estimate, keeping only the vector.
    pub fn into_vector(self) -> DVector<f64> {
        self.vector
    }

    /// The ensemble that produced this estimate.
    pub fn method(&self) -> GradientMethod {
        self.method
    }

    /// Number of directions (for [`GradientMethod::Entrywise`], the dimension).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Probe radius used for the finite differences.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Function evaluations consumed; for [`GradientMethod::Comparison`] this
    /// counts oracle calls (each oracle call evaluates the objective twice).
    pub fn n_evals(&self) -> u64 {
        self.n_evals
    }

    /// Seed of the random source, absent for the deterministic estimator.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Stream of the random source, absent for the deterministic estimator.
    pub fn stream(&self) -> Option<u64> {
        self.stream
    }

    /// True when the estimator could only return the zero vector because
    /// every comparison response was flat or the responses cancelled.
    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
}

fn check_dimension(f: &Objective, x: &DVector<f64>) -> Result<usize> {
    let n = f.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    Ok(n)
}

fn check_delta(delta: f64) -> Result<()> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(invalid("delta", format!("must be positive and finite, got {delta}")));
    }
    Ok(())
}

fn check_k_at_most_n(k: usize, n: usize) -> Result<()> {
    if k < 1 || k > n {
        return Err(invalid("k", format!("must satisfy 1 <= k <= n = {n}, got {k}")));
    }
    Ok(())
}

fn check_k_positive(k: usize) -> Result<()> {
    if k < 1 {
        return Err(invalid("k", "must be at least 1"));
    }
    Ok(())
}

/// Shared antithetic-pair loop: accumulates `(f(x + step·d_i) - f(x - step·d_i))·w_i`
/// where `w_i` is the unscaled direction, then applies `prefactor`.
fn two_point_accumulate<'a>(
    f: &Objective,
    x: &DVector<f64>,
    step: f64,
    directions: impl Iterator<Item = nalgebra::DVectorView<'a, f64>>,
    prefactor: f64,
) -> Result<DVector<f64>> {
    let n = x.len();
    let mut acc = DVector::zeros(n);
    let mut point = DVector::zeros(n);
    for (i, v) in directions.enumerate() {
        point.copy_from(x);
        point.axpy(step, &v, 1.0);
        let fp = f.eval_checked(point.as_slice(), || format!("x + {step}*v[{i}]"))?;
        point.copy_from(x);
        point.axpy(-step, &v, 1.0);
        let fm = f.eval_checked(point.as_slice(), || format!("x - {step}*v[{i}]"))?;
        acc.axpy(fp - fm, &v, 1.0);
    }
    acc *= prefactor;
    Ok(acc)
}

/// Gradient from one orthonormal frame: `(n/(2δk)) Σ_i (f(x+δv_i) - f(x-δv_i)) v_i`.
///
/// Uses `2k` evaluations. Requires `1 <= k <= n`.
pub fn grad_stiefel(
    f: &Objective,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    source: &RandomSource,
) -> Result<GradientEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_at_most_n(k, n)?;
    let mut rng = source.rng();
    let frame = stiefel_using(n, k, &mut rng)?;
    let prefactor = n as f64 / (2.0 * delta * k as f64);
    let columns = (0..k).map(|i| frame.column(i));
    let vector = two_point_accumulate(f, x, delta, columns, prefactor)?;
    Ok(GradientEstimate {
        vector,
        method: GradientMethod::Stiefel,
        k,
        delta,
        n_evals: 2 * k as u64,
        seed: Some(source.seed()),
        stream: Some(source.stream()),
        degenerate: false,
    })
}

/// Same combination rule as [`grad_stiefel`] but with `k` independent
/// unit-sphere directions, so `k` may exceed `n`. Uses `2k` evaluations.
pub fn grad_spherical(
    f: &Objective,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    source: &RandomSource,
) -> Result<GradientEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_positive(k)?;
    let mut rng = source.rng();
    let mut directions = nalgebra::DMatrix::zeros(n, k);
    for i in 0..k {
        directions.set_column(i, &unit_sphere_using(n, &mut rng));
    }
    let prefactor = n as f64 / (2.0 * delta * k as f64);
    let columns = (0..k).map(|i| directions.column(i));
    let vector = two_point_accumulate(f, x, delta, columns, prefactor)?;
    Ok(GradientEstimate {
        vector,
        method: GradientMethod::Spherical,
        k,
        delta,
        n_evals: 2 * k as u64,
        seed: Some(source.seed()),
        stream: Some(source.stream()),
        degenerate: false,
    })
}

/// Gaussian smoothing estimate: directions are standard normal vectors,
/// probed at `x ± δ v_i/√n` and combined as `(√n/(2kδ)) Σ_i Δ_i v_i`.
/// Uses `2k` evaluations; `k` may exceed `n`.
pub fn grad_gaussian(
    f: &Objective,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    source: &RandomSource,
) -> Result<GradientEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_positive(k)?;
    let mut rng = source.rng();
    let mut directions = nalgebra::DMatrix::zeros(n, k);
    for i in 0..k {
        directions.set_column(i, &crate::sampling::gaussian_using(n, &mut rng));
    }
    let sqrt_n = (n as f64).sqrt();
    let step = delta / sqrt_n;
    let prefactor = sqrt_n / (2.0 * delta * k as f64);
    let columns = (0..k).map(|i| directions.column(i));
    let vector = two_point_accumulate(f, x, step, columns, prefactor)?;
    Ok(GradientEstimate {
        vector,
        method: GradientMethod::Gaussian,
        k,
        delta,
        n_evals: 2 * k as u64,
        seed: Some(source.seed()),
        stream: Some(source.stream()),
        degenerate: false,
    })
}

/// Sparse sign-vector estimate: one forward difference along a random
/// `k`-sparse ±1 vector `z`, returning `z·(f(x+δz) - f(x))/δ` entrywise.
///
/// Uses exactly 2 evaluations regardless of `k`. Requires `1 <= k <= n`.
pub fn grad_rademacher(
    f: &Objective,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    source: &RandomSource,
) -> Result<GradientEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_at_most_n(k, n)?;
    let mut rng = source.rng();
    let z = sparse_rademacher_using(n, k, &mut rng);
    let dense = z.dense();
    let mut point = x.clone();
    point.axpy(delta, &dense, 1.0);
    let fp = f.eval_checked(point.as_slice(), || format!("x + {delta}*z"))?;
    let f0 = f.eval_checked(x.as_slice(), || "x".to_string())?;
    let scale = (fp - f0) / delta;
    let vector = dense * scale;
    Ok(GradientEstimate {
        vector,
        method: GradientMethod::Rademacher,
        k,
        delta,
        n_evals: 2,
        seed: Some(source.seed()),
        stream: Some(source.stream()),
        degenerate: false,
    })
}

/// Comparison-only estimate of the gradient direction.
///
/// Draws `k` unit-sphere directions, asks the oracle for the sign of
/// `f(x + δ v_i) - f(x)`, forms `c = Σ_i z_i v_i`, and returns the l1/l2
/// constrained maximizer of `⟨c, ·⟩` with sparsity budget `sparsity`
/// (pass `f64::INFINITY` for the unconstrained unit vector `c/‖c‖`).
///
/// `n_evals` counts the `k` oracle calls; the underlying objective counter
/// advances by `2k` because each call compares two points. If every response
/// is zero, or the responses cancel exactly, the zero vector is returned and
/// [`GradientEstimate::degenerate`] is set.
pub fn grad_comparison(
    oracle: &ComparisonOracle<'_>,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    sparsity: f64,
    source: &RandomSource,
) -> Result<GradientEstimate> {
    let f = oracle.objective();
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_positive(k)?;
    if sparsity.is_nan() || sparsity <= 0.0 {
        return Err(invalid(
            "sparsity",
            format!("must be positive (or infinite), got {sparsity}"),
        ));
    }
    let mut rng = source.rng();
    let mut c = DVector::zeros(n);
    let mut point = DVector::zeros(n);
    for _ in 0..k {
        let v = unit_sphere_using(n, &mut rng);
        point.copy_from(x);
        point.axpy(delta, &v, 1.0);
        let z = oracle.compare(point.as_slice(), x.as_slice())?;
        if z != 0 {
            c.axpy(f64::from(z), &v, 1.0);
        }
    }
    let degenerate = c.norm() == 0.0;
    let vector = if degenerate {
        DVector::zeros(n)
    } else {
        l1_l2_linear_max(&c, sparsity)?
    };
    Ok(GradientEstimate {
        vector,
        method: GradientMethod::Comparison,
        k,
        delta,
        n_evals: k as u64,
        seed: Some(source.seed()),
        stream: Some(source.stream()),
        degenerate,
    })
}

/// Deterministic central differences along each coordinate axis.
///
/// Uses `2n` evaluations and carries no random source.
pub fn grad_entrywise(f: &Objective, x: &DVector<f64>, delta: f64) -> Result<GradientEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    let mut vector = DVector::zeros(n);
    let mut point = x.clone();
    for i in 0..n {
        point[i] = x[i] + delta;
        let fp = f.eval_checked(point.as_slice(), || format!("x + {delta}*e[{i}]"))?;
        point[i] = x[i] - delta;
        let fm = f.eval_checked(point.as_slice(), || format!("x - {delta}*e[{i}]"))?;
        point[i] = x[i];
        vector[i] = (fp - fm) / (2.0 * delta);
    }
    Ok(GradientEstimate {
        vector,
        method: GradientMethod::Entrywise,
        k: n,
        delta,
        n_evals: 2 * n as u64,
        seed: None,
        stream: None,
        degenerate: false,
    })
}

/// Maximize `⟨c, g⟩` over `{ ‖g‖₁ ≤ √s, ‖g‖₂ ≤ 1 }`.
///
/// The maximizer is a normalized soft-thresholding `S_λ(c)/‖S_λ(c)‖₂` whose
/// threshold λ is found by bisection on the ratio `‖S_λ(c)‖₁/‖S_λ(c)‖₂`,
/// which decreases continuously in λ toward `√m` over the `m` largest-
/// magnitude entries. When `√s` lies below that limit (possible only for an
/// exact tie among the `m` largest magnitudes) the bracket collapses and the
/// routine falls back to the direct solution on the tied support:
/// `g_i = sign(c_i)·min(√s/m, 1/√m)`.
///
/// Edge cases: `c = 0` returns the zero vector; `s = ∞` returns `c/‖c‖₂`.
pub fn l1_l2_linear_max(c: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
    if s.is_nan() || s <= 0.0 {
        return Err(invalid(
            "sparsity",
            format!("must be positive (or infinite), got {s}"),
        ));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(invalid("c", "entries must be finite"));
    }
    let n = c.len();
    let norm2 = c.norm();
    if norm2 == 0.0 {
        return Ok(DVector::zeros(n));
    }
    if s.is_infinite() {
        return Ok(c / norm2);
    }
    let target = s.sqrt();
    let norm1: f64 = c.iter().map(|v| v.abs()).sum();
    if norm1 / norm2 <= target {
        return Ok(c / norm2);
    }

    let soft = |lambda: f64| -> DVector<f64> {
        DVector::from_iterator(
            n,
            c.iter().map(|&v| {
                let mag = v.abs() - lambda;
                if mag > 0.0 {
                    v.signum() * mag
                } else {
                    0.0
                }
            }),
        )
    };

    let max_abs = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut lo = 0.0_f64;
    let mut hi = max_abs;
    const RATIO_TOL: f64 = 1e-12;
    for _ in 0..200 {
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let shrunk = soft(mid);
        let l2 = shrunk.norm();
        if l2 == 0.0 {
            hi = mid;
            continue;
        }
        let l1: f64 = shrunk.iter().map(|v| v.abs()).sum();
        let ratio = l1 / l2;
        if (ratio - target).abs() <= RATIO_TOL {
            return Ok(shrunk / l2);
        }
        if ratio > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let support: Vec<usize> = c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() == max_abs)
        .map(|(i, _)| i)
        .collect();
    let m = support.len() as f64;
    let value = (target / m).min(1.0 / m.sqrt());
    let mut g = DVector::zeros(n);
    for i in support {
        g[i] = c[i].signum() * value;
    }
    Ok(g)
}
