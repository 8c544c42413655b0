//! Error metrics and the Monte Carlo trial harness.
//!
//! [`run_trials`] executes one estimator repeatedly on per-trial substreams
//! and aggregates bias, variance, and error statistics. All folds run in
//! trial order with compensated summation, so results are bit-identical for
//! identical inputs regardless of how callers schedule the work.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::gradient::{
    grad_comparison, grad_entrywise, grad_gaussian, grad_rademacher, grad_spherical, grad_stiefel,
    GradientEstimate,
};
use crate::hessian::{
    hess_entrywise, hess_gaussian_stein, hess_spherical, hess_stiefel, HessianEstimate,
};
use crate::objectives::{ComparisonOracle, Objective};
use crate::sampling::RandomSource;

/// Spectral norm (largest absolute eigenvalue) of a symmetric matrix via
/// full symmetric eigendecomposition.
///
/// The input must be square and symmetric within `1e-10` relative to its
/// largest entry (absolute for matrices of unit scale or below).
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let max_abs = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tolerance = 1e-10 * max_abs.max(1.0);
    let mut defect = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            defect = defect.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if defect > tolerance {
        return Err(Error::NotSymmetric { defect, tolerance });
    }
    let eigen = m.clone().symmetric_eigen();
    Ok(eigen.eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs())))
}

/// Distance and alignment between a gradient estimate and the truth.
#[derive(Clone, Copy, Debug)]
pub struct VectorComparison {
    /// Euclidean distance `‖estimate - truth‖`.
    pub l2: f64,
    /// Cosine similarity, defined as 0 when either vector is zero.
    pub cosine: f64,
    /// True when the cosine was forced to 0 by a zero-norm input.
    pub degenerate: bool,
}

/// Compare a gradient estimate against the exact gradient.
pub fn compare_vectors(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<VectorComparison> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: estimate.len(),
        });
    }
    let l2 = (estimate - truth).norm();
    let estimate_norm = estimate.norm();
    let truth_norm = truth.norm();
    let (cosine, degenerate) = if estimate_norm == 0.0 || truth_norm == 0.0 {
        (0.0, true)
    } else {
        (estimate.dot(truth) / (estimate_norm * truth_norm), false)
    };
    Ok(VectorComparison {
        l2,
        cosine,
        degenerate,
    })
}

/// Distances between a Hessian estimate and the truth.
#[derive(Clone, Copy, Debug)]
pub struct MatrixComparison {
    /// Frobenius distance `‖estimate - truth‖_F`.
    pub frobenius: f64,
    /// Spectral distance `‖estimate - truth‖`.
    pub spectral: f64,
}

/// Compare a Hessian estimate against the exact Hessian. Both inputs must be
/// symmetric, since the spectral distance goes through [`spectral_norm`].
pub fn compare_matrices(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<MatrixComparison> {
    if estimate.nrows() != truth.nrows() || estimate.ncols() != truth.ncols() {
        return Err(Error::DimensionMismatch {
            expected: truth.nrows(),
            actual: estimate.nrows(),
        });
    }
    let diff = estimate - truth;
    let frobenius = diff.norm();
    let spectral = spectral_norm(&diff)?;
    Ok(MatrixComparison { frobenius, spectral })
}

/// Selects an estimator and its direction budget for [`run_trials`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimatorKind {
    GradStiefel { k: usize },
    GradSpherical { k: usize },
    GradGaussian { k: usize },
    GradRademacher { k: usize },
    GradComparison { k: usize, sparsity: f64 },
    GradEntrywise,
    HessStiefel { k: usize },
    HessSpherical { k: usize },
    HessGaussianStein { k: usize },
    HessEntrywise,
}

impl EstimatorKind {
    /// True for the gradient estimators, false for the Hessian ones.
    pub fn is_gradient(self) -> bool {
        matches!(
            self,
            EstimatorKind::GradStiefel { .. }
                | EstimatorKind::GradSpherical { .. }
                | EstimatorKind::GradGaussian { .. }
                | EstimatorKind::GradRademacher { .. }
                | EstimatorKind::GradComparison { .. }
                | EstimatorKind::GradEntrywise
        )
    }

    /// The direction budget; the entrywise estimators always use `n`.
    pub fn k_for(self, n: usize) -> usize {
        match self {
            EstimatorKind::GradStiefel { k }
            | EstimatorKind::GradSpherical { k }
            | EstimatorKind::GradGaussian { k }
            | EstimatorKind::GradRademacher { k }
            | EstimatorKind::GradComparison { k, .. }
            | EstimatorKind::HessStiefel { k }
            | EstimatorKind::HessSpherical { k }
            | EstimatorKind::HessGaussianStein { k } => k,
            EstimatorKind::GradEntrywise | EstimatorKind::HessEntrywise => n,
        }
    }

    /// Stable name used in CSV output and CLI selection.
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::GradStiefel { .. } => "grad-stiefel",
            EstimatorKind::GradSpherical { .. } => "grad-spherical",
            EstimatorKind::GradGaussian { .. } => "grad-gaussian",
            EstimatorKind::GradRademacher { .. } => "grad-rademacher",
            EstimatorKind::GradComparison { .. } => "grad-comparison",
            EstimatorKind::GradEntrywise => "grad-entrywise",
            EstimatorKind::HessStiefel { .. } => "hess-stiefel",
            EstimatorKind::HessSpherical { .. } => "hess-spherical",
            EstimatorKind::HessGaussianStein { .. } => "hess-gaussian-stein",
            EstimatorKind::HessEntrywise => "hess-entrywise",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Mean estimate produced by a trial run: a vector for gradient estimators,
/// a matrix for Hessian estimators.
#[derive(Clone, Debug)]
pub enum Estimand {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

impl Estimand {
    /// The vector payload, if this is a gradient estimand.
    pub fn as_vector(&self) -> Option<&DVector<f64>> {
        match self {
            Estimand::Vector(v) => Some(v),
            Estimand::Matrix(_) => None,
        }
    }

    /// The matrix payload, if this is a Hessian estimand.
    pub fn as_matrix(&self) -> Option<&DMatrix<f64>> {
        match self {
            Estimand::Vector(_) => None,
            Estimand::Matrix(m) => Some(m),
        }
    }
}

/// Mean, sample standard deviation, and range of a per-trial error series.
/// With a single trial the standard deviation is 0.
#[derive(Clone, Copy, Debug)]
pub struct ErrorStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl ErrorStats {
    pub(crate) fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        debug_assert!(count > 0);
        let mut total = Neumaier::new();
        for &v in values {
            total.add(v);
        }
        let mean = total.value() / count as f64;
        let std = if count >= 2 {
            let mut squares = Neumaier::new();
            for &v in values {
                let d = v - mean;
                squares.add(d * d);
            }
            (squares.value() / (count as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ErrorStats { mean, std, min, max }
    }
}

/// Per-trial outcome retained inside [`TrialStatistics`].
#[derive(Clone, Copy, Debug)]
pub struct TrialRecord {
    /// Zero-based trial index.
    pub trial: u64,
    /// Substream the trial consumed.
    pub stream: u64,
    /// Euclidean error (gradient estimators only).
    pub error_l2: Option<f64>,
    /// Frobenius error (Hessian estimators only).
    pub error_frobenius: Option<f64>,
    /// Spectral error (Hessian estimators only).
    pub error_spectral: Option<f64>,
    /// Cosine similarity to the truth (gradient estimators only).
    pub cosine: Option<f64>,
    /// True when the estimate or the comparison degenerated to zero.
    pub degenerate: bool,
    /// Function evaluations the trial consumed (oracle calls for the
    /// comparison estimator).
    pub n_evals: u64,
}

/// Aggregated output of [`run_trials`].
///
/// The per-trial error mean always satisfies the decomposition inequality
/// `error_mean <= sqrt(empirical_variance) + empirical_bias + 3·std/√trials`
/// (a triangle-inequality consequence); [`TrialStatistics::error_decomposition_gap`]
/// exposes the slack.
#[derive(Clone, Debug)]
pub struct TrialStatistics {
    pub kind: EstimatorKind,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub trials: u64,
    pub base_seed: u64,
    /// Arithmetic mean of the per-trial estimates.
    pub mean_estimate: Estimand,
    /// Norm distance between the mean estimate and the truth (Euclidean for
    /// vectors, Frobenius for matrices).
    pub empirical_bias: f64,
    /// Mean over trials of `‖estimate_t - mean‖²`; `None` with fewer than
    /// two trials.
    pub empirical_variance: Option<f64>,
    /// Statistics of the per-trial Euclidean error (gradient estimators).
    pub l2_error: Option<ErrorStats>,
    /// Statistics of the per-trial Frobenius error (Hessian estimators).
    pub frobenius_error: Option<ErrorStats>,
    /// Statistics of the per-trial spectral error (Hessian estimators).
    pub spectral_error: Option<ErrorStats>,
    /// Mean cosine similarity (gradient estimators).
    pub mean_cosine: Option<f64>,
    /// Total function evaluations across all trials.
    pub total_evals: u64,
    /// One record per trial, in execution order.
    pub per_trial: Vec<TrialRecord>,
}

impl TrialStatistics {
    /// Slack in the error-decomposition inequality for the primary error
    /// norm (Euclidean for gradients, Frobenius for Hessians); nonnegative
    /// whenever defined, `None` with fewer than two trials.
    pub fn error_decomposition_gap(&self) -> Option<f64> {
        let stats = self.l2_error.or(self.frobenius_error)?;
        let variance = self.empirical_variance?;
        let slack = variance.sqrt() + self.empirical_bias
            + 3.0 * stats.std / (self.trials as f64).sqrt();
        Some(slack - stats.mean)
    }
}

/// Compensated (Neumaier) summation; used so every statistic is a fixed-order
/// deterministic fold with small rounding error.
struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    fn new() -> Self {
        Neumaier {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Run `trials` independent repetitions of one estimator and aggregate.
///
/// Trial `t` draws from `RandomSource::new(base_seed).substream(t)`, so runs
/// are reproducible and individual trials can be replayed in isolation. The
/// objective must carry the exact derivative being estimated (the gradient
/// for gradient estimators, the Hessian for Hessian estimators); for the
/// comparison estimator the truth is the normalized gradient direction.
///
/// Estimator failures are wrapped in [`Error::TrialFailed`] with the index
/// of the failing trial.
pub fn run_trials(
    f: &Objective,
    x: &DVector<f64>,
    kind: EstimatorKind,
    delta: f64,
    trials: u64,
    base_seed: u64,
) -> Result<TrialStatistics> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    let n = f.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if kind.is_gradient() {
        run_gradient_trials(f, x, kind, delta, trials, base_seed)
    } else {
        run_hessian_trials(f, x, kind, delta, trials, base_seed)
    }
}

fn gradient_once(
    f: &Objective,
    x: &DVector<f64>,
    kind: EstimatorKind,
    delta: f64,
    source: &RandomSource,
) -> Result<GradientEstimate> {
    match kind {
        EstimatorKind::GradStiefel { k } => grad_stiefel(f, x, k, delta, source),
        EstimatorKind::GradSpherical { k } => grad_spherical(f, x, k, delta, source),
        EstimatorKind::GradGaussian { k } => grad_gaussian(f, x, k, delta, source),
        EstimatorKind::GradRademacher { k } => grad_rademacher(f, x, k, delta, source),
        EstimatorKind::GradComparison { k, sparsity } => {
            let oracle = ComparisonOracle::new(f);
            grad_comparison(&oracle, x, k, delta, sparsity, source)
        }
        EstimatorKind::GradEntrywise => grad_entrywise(f, x, delta),
        _ => unreachable!("hessian estimator dispatched to the gradient path"),
    }
}

fn hessian_once(
    f: &Objective,
    x: &DVector<f64>,
    kind: EstimatorKind,
    delta: f64,
    source: &RandomSource,
) -> Result<HessianEstimate> {
    match kind {
        EstimatorKind::HessStiefel { k } => hess_stiefel(f, x, k, delta, source),
        EstimatorKind::HessSpherical { k } => hess_spherical(f, x, k, delta, source),
        EstimatorKind::HessGaussianStein { k } => hess_gaussian_stein(f, x, k, delta, source),
        EstimatorKind::HessEntrywise => hess_entrywise(f, x, delta),
        _ => unreachable!("gradient estimator dispatched to the hessian path"),
    }
}

fn run_gradient_trials(
    f: &Objective,
    x: &DVector<f64>,
    kind: EstimatorKind,
    delta: f64,
    trials: u64,
    base_seed: u64,
) -> Result<TrialStatistics> {
    let n = x.len();
    let exact = f
        .gradient(x.as_slice())
        .ok_or(Error::MissingInput("exact gradient"))?;
    let truth = if matches!(kind, EstimatorKind::GradComparison { .. }) {
        let norm = exact.norm();
        if norm == 0.0 {
            return Err(invalid(
                "x",
                "the exact gradient vanishes here, so the normalized target of the comparison estimator is undefined",
            ));
        }
        exact / norm
    } else {
        exact
    };

    let mut estimates: Vec<DVector<f64>> = Vec::with_capacity(trials as usize);
    let mut per_trial = Vec::with_capacity(trials as usize);
    let mut l2_values = Vec::with_capacity(trials as usize);
    let mut cosine_acc = Neumaier::new();
    let mut total_evals = 0u64;
    for t in 0..trials {
        let source = RandomSource::new(base_seed).substream(t);
        let est = gradient_once(f, x, kind, delta, &source).map_err(|e| Error::TrialFailed {
            trial: t,
            source: Box::new(e),
        })?;
        let comparison = compare_vectors(est.vector(), &truth)?;
        l2_values.push(comparison.l2);
        cosine_acc.add(comparison.cosine);
        total_evals += est.n_evals();
        per_trial.push(TrialRecord {
            trial: t,
            stream: source.stream(),
            error_l2: Some(comparison.l2),
            error_frobenius: None,
            error_spectral: None,
            cosine: Some(comparison.cosine),
            degenerate: est.degenerate() || comparison.degenerate,
            n_evals: est.n_evals(),
        });
        estimates.push(est.into_vector());
    }

    let mut mean = DVector::zeros(n);
    for e in &estimates {
        mean += e;
    }
    mean /= trials as f64;
    let empirical_bias = (&mean - &truth).norm();
    let empirical_variance = if trials >= 2 {
        let mut acc = Neumaier::new();
        for e in &estimates {
            acc.add((e - &mean).norm_squared());
        }
        Some(acc.value() / trials as f64)
    } else {
        None
    };

    Ok(TrialStatistics {
        kind,
        n,
        k: kind.k_for(n),
        delta,
        trials,
        base_seed,
        mean_estimate: Estimand::Vector(mean),
        empirical_bias,
        empirical_variance,
        l2_error: Some(ErrorStats::from_values(&l2_values)),
        frobenius_error: None,
        spectral_error: None,
        mean_cosine: Some(cosine_acc.value() / trials as f64),
        total_evals,
        per_trial,
    })
}

fn run_hessian_trials(
    f: &Objective,
    x: &DVector<f64>,
    kind: EstimatorKind,
    delta: f64,
    trials: u64,
    base_seed: u64,
) -> Result<TrialStatistics> {
    let n = x.len();
    let truth = f
        .hessian(x.as_slice())
        .ok_or(Error::MissingInput("exact hessian"))?;

    let mut estimates: Vec<DMatrix<f64>> = Vec::with_capacity(trials as usize);
    let mut per_trial = Vec::with_capacity(trials as usize);
    let mut fro_values = Vec::with_capacity(trials as usize);
    let mut spec_values = Vec::with_capacity(trials as usize);
    let mut total_evals = 0u64;
    for t in 0..trials {
        let source = RandomSource::new(base_seed).substream(t);
        let est = hessian_once(f, x, kind, delta, &source).map_err(|e| Error::TrialFailed {
            trial: t,
            source: Box::new(e),
        })?;
        let comparison = compare_matrices(est.matrix(), &truth)?;
        fro_values.push(comparison.frobenius);
        spec_values.push(comparison.spectral);
        total_evals += est.n_evals();
        per_trial.push(TrialRecord {
            trial: t,
            stream: source.stream(),
            error_l2: None,
            error_frobenius: Some(comparison.frobenius),
            error_spectral: Some(comparison.spectral),
            cosine: None,
            degenerate: false,
            n_evals: est.n_evals(),
        });
        estimates.push(est.into_matrix());
    }

    let mut mean = DMatrix::zeros(n, n);
    for e in &estimates {
        mean += e;
    }
    mean /= trials as f64;
    let empirical_bias = (&mean - &truth).norm();
    let empirical_variance = if trials >= 2 {
        let mut acc = Neumaier::new();
        for e in &estimates {
            acc.add((e - &mean).norm_squared());
        }
        Some(acc.value() / trials as f64)
    } else {
        None
    };

    Ok(TrialStatistics {
        kind,
        n,
        k: kind.k_for(n),
        delta,
        trials,
        base_seed,
        mean_estimate: Estimand::Matrix(mean),
        empirical_bias,
        empirical_variance,
        l2_error: None,
        frobenius_error: Some(ErrorStats::from_values(&fro_values)),
        spectral_error: Some(ErrorStats::from_values(&spec_values)),
        mean_cosine: None,
        total_evals,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_norm_of_a_diagonal_is_the_largest_magnitude() {
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -3.0, 2.0]));
        assert_relative_eq!(spectral_norm(&m).unwrap(), 3.0, epsilon = 1e-12);
        let zero = DMatrix::zeros(4, 4);
        assert_eq!(spectral_norm(&zero).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_rejects_asymmetry() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        assert!(matches!(spectral_norm(&m), Err(Error::NotSymmetric { .. })));
        let rect = DMatrix::zeros(2, 3);
        assert!(spectral_norm(&rect).is_err());
    }

    #[test]
    fn vector_comparison_matches_worked_examples() {
        let truth = DVector::from_column_slice(&[1.0, 1.0]);
        let same = compare_vectors(&truth, &truth).unwrap();
        assert_eq!(same.l2, 0.0);
        assert_relative_eq!(same.cosine, 1.0, epsilon = 1e-15);
        let opposite = compare_vectors(&(-&truth), &truth).unwrap();
        assert_relative_eq!(opposite.cosine, -1.0, epsilon = 1e-15);
        let axis = DVector::from_column_slice(&[1.0, 0.0]);
        let skew = compare_vectors(&axis, &truth).unwrap();
        assert_relative_eq!(skew.cosine, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let zero = DVector::zeros(2);
        let degenerate = compare_vectors(&zero, &truth).unwrap();
        assert_eq!(degenerate.cosine, 0.0);
        assert!(degenerate.degenerate);
    }

    #[test]
    fn run_trials_is_bitwise_reproducible() {
        let f = Objective::exp_sines(6).unwrap();
        let x = DVector::from_element(6, 0.3);
        let kind = EstimatorKind::GradStiefel { k: 3 };
        let a = run_trials(&f, &x, kind, 0.05, 8, 99).unwrap();
        let b = run_trials(&f, &x, kind, 0.05, 8, 99).unwrap();
        let va = a.mean_estimate.as_vector().unwrap();
        let vb = b.mean_estimate.as_vector().unwrap();
        assert_eq!(va, vb);
        assert_eq!(a.l2_error.unwrap().mean.to_bits(), b.l2_error.unwrap().mean.to_bits());
        assert_eq!(a.total_evals, b.total_evals);
        assert_eq!(a.total_evals, 8 * 6);
    }

    #[test]
    fn deterministic_estimators_report_zero_spread() {
        let f = Objective::exp_sines(5).unwrap();
        let x = DVector::from_element(5, 0.1);
        let stats = run_trials(&f, &x, EstimatorKind::GradEntrywise, 1e-3, 5, 7).unwrap();
        let errors = stats.l2_error.unwrap();
        assert_eq!(errors.std, 0.0);
        assert_eq!(errors.min, errors.max);
        // The estimates are bitwise identical; the variance is not exactly
        // zero only because the mean rounds once in sum-then-divide.
        assert!(stats.empirical_variance.unwrap() < 1e-30);
    }

    #[test]
    fn variance_is_absent_with_a_single_trial() {
        let f = Objective::exp_sines(4).unwrap();
        let x = DVector::zeros(4);
        let stats = run_trials(&f, &x, EstimatorKind::GradStiefel { k: 2 }, 0.1, 1, 3).unwrap();
        assert!(stats.empirical_variance.is_none());
        assert!(stats.error_decomposition_gap().is_none());
        assert_eq!(stats.l2_error.unwrap().std, 0.0);
    }

    #[test]
    fn error_decomposition_inequality_holds() {
        let f = Objective::exp_sines(8).unwrap();
        let x = DVector::from_element(8, 0.4);
        for kind in [
            EstimatorKind::GradStiefel { k: 4 },
            EstimatorKind::GradSpherical { k: 6 },
            EstimatorKind::HessStiefel { k: 3 },
        ] {
            let stats = run_trials(&f, &x, kind, 0.05, 12, 17).unwrap();
            let gap = stats.error_decomposition_gap().unwrap();
            assert!(gap >= -1e-12, "decomposition violated for {kind}: gap {gap}");
        }
    }

    #[test]
    fn spherical_estimator_is_unbiased_on_linear_objectives() {
        let c = DVector::from_column_slice(&[1.0, -2.0, 0.5, 3.0, -1.5]);
        let f = Objective::linear(c.clone()).unwrap();
        let x = DVector::zeros(5);
        let stats = run_trials(&f, &x, EstimatorKind::GradSpherical { k: 1 }, 0.05, 20_000, 271).unwrap();
        let mean = stats.mean_estimate.as_vector().unwrap();
        let mean_norm_se = (stats.empirical_variance.unwrap() / 20_000.0).sqrt();
        assert!(
            (mean - &c).norm() <= 4.0 * mean_norm_se,
            "bias {} exceeds 4 standard errors {}",
            (mean - &c).norm(),
            4.0 * mean_norm_se
        );
    }

    #[test]
    fn hessian_trials_record_both_matrix_norms() {
        let f = Objective::exp_sines(5).unwrap();
        let x = DVector::from_element(5, 0.2);
        let stats = run_trials(&f, &x, EstimatorKind::HessEntrywise, 1e-3, 3, 5).unwrap();
        let fro = stats.frobenius_error.unwrap();
        let spec = stats.spectral_error.unwrap();
        assert!(spec.mean <= fro.mean + 1e-15);
        assert!(stats.l2_error.is_none());
        assert!(stats.mean_cosine.is_none());
        for record in &stats.per_trial {
            assert!(record.error_l2.is_none());
            assert!(record.error_frobenius.is_some());
            assert!(record.error_spectral.is_some());
        }
    }

    #[test]
    fn trial_failures_carry_the_trial_index() {
        let f = Objective::from_fn(3, |x| {
            if x[0] != 0.0 {
                f64::NAN
            } else {
                x[1]
            }
        })
        .with_gradient(|_| DVector::zeros(3));
        let x = DVector::zeros(3);
        let err = run_trials(&f, &x, EstimatorKind::GradStiefel { k: 3 }, 0.1, 4, 1).unwrap_err();
        match err {
            Error::TrialFailed { trial, source } => {
                assert_eq!(trial, 0);
                assert!(matches!(*source, Error::NonFiniteEvaluation { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_exact_derivatives_are_reported() {
        let f = Objective::from_fn(3, |x| x[0]);
        let x = DVector::zeros(3);
        assert!(matches!(
            run_trials(&f, &x, EstimatorKind::GradStiefel { k: 1 }, 0.1, 2, 1),
            Err(Error::MissingInput("exact gradient"))
        ));
        assert!(matches!(
            run_trials(&f, &x, EstimatorKind::HessEntrywise, 0.1, 2, 1),
            Err(Error::MissingInput("exact hessian"))
        ));
        assert!(run_trials(&f, &x, EstimatorKind::GradStiefel { k: 1 }, 0.1, 0, 1).is_err());
    }
}
