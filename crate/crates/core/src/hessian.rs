//! Four-point Hessian estimators sharing the direction ensembles of the
//! gradient module.
//!
//! All estimators return exactly symmetric matrices: the frame-based ones
//! symmetrize through `M + Mᵀ`, the Stein estimator accumulates symmetric
//! rank-one terms, and the entrywise stencil mirrors its upper triangle.
//! Evaluation order is fixed and documented per estimator, so results are
//! bitwise reproducible for a fixed `(seed, stream)` pair.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::objectives::Objective;
use crate::sampling::{gaussian_using, stiefel_using, unit_sphere_using, RandomSource};

/// Which direction ensemble produced a [`HessianEstimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HessianMethod {
    /// Two independent orthonormal frames with the `n²/(8δ²k²)` prefactor.
    Stiefel,
    /// Two batches of independent unit-sphere directions with the
    /// `n²/(8kδ²)` prefactor.
    Spherical,
    /// Gaussian directions through the second-difference Stein identity.
    GaussianStein,
    /// Four-point stencils on every coordinate pair.
    Entrywise,
}

impl HessianMethod {
    /// Stable name used in CSV output and CLI selection.
    pub fn name(self) -> &'static str {
        match self {
            HessianMethod::Stiefel => "hess-stiefel",
            HessianMethod::Spherical => "hess-spherical",
            HessianMethod::GaussianStein => "hess-gaussian-stein",
            HessianMethod::Entrywise => "hess-entrywise",
        }
    }
}

impl std::fmt::Display for HessianMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A Hessian estimate together with the budget it consumed.
#[derive(Clone, Debug)]
pub struct HessianEstimate {
    matrix: DMatrix<f64>,
    method: HessianMethod,
    k: usize,
    delta: f64,
    n_evals: u64,
    seed: Option<u64>,
    stream: Option<u64>,
}

impl HessianEstimate {
    /// The estimated Hessian; always exactly symmetric.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Consume the estimate, keeping only the matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// The ensemble that produced this estimate.
    pub fn method(&self) -> HessianMethod {
        self.method
    }

    /// Directions per frame (for [`HessianMethod::Entrywise`], the dimension).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Probe radius used for the finite differences.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Function evaluations consumed.
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

/// Fill `d` with the cross second differences
/// `D_ij = f(x+δv_i+δw_j) - f(x-δv_i+δw_j) - f(x+δv_i-δw_j) + f(x-δv_i-δw_j)`.
///
/// Pairs are visited row-major in `(i, j)` and each stencil evaluates its
/// four points in the order `(+,+), (-,+), (+,-), (-,-)`.
fn cross_differences(
    f: &Objective,
    x: &DVector<f64>,
    delta: f64,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
    d: &mut DMatrix<f64>,
) -> Result<()> {
    let k_v = v.ncols();
    let k_w = w.ncols();
    let mut point = DVector::zeros(x.len());
    let mut probe = |si: f64, sj: f64, i: usize, j: usize| -> Result<f64> {
        point.copy_from(x);
        point.axpy(si * delta, &v.column(i), 1.0);
        point.axpy(sj * delta, &w.column(j), 1.0);
        f.eval_checked(point.as_slice(), || {
            format!("x {} {delta}*v[{i}] {} {delta}*w[{j}]", sign_word(si), sign_word(sj))
        })
    };
    for i in 0..k_v {
        for j in 0..k_w {
            let fpp = probe(1.0, 1.0, i, j)?;
            let fmp = probe(-1.0, 1.0, i, j)?;
            let fpm = probe(1.0, -1.0, i, j)?;
            let fmm = probe(-1.0, -1.0, i, j)?;
            d[(i, j)] = fpp - fmp - fpm + fmm;
        }
    }
    Ok(())
}

fn sign_word(s: f64) -> &'static str {
    if s >= 0.0 {
        "+"
    } else {
        "-"
    }
}

/// Assemble `prefactor · (V D Wᵀ + (V D Wᵀ)ᵀ)`; exactly symmetric because the
/// `(a, b)` and `(b, a)` entries are the same two floats added in the same
/// order.
fn symmetrized_outer(v: &DMatrix<f64>, d: &DMatrix<f64>, w: &DMatrix<f64>, prefactor: f64) -> DMatrix<f64> {
    let m = v * d * w.transpose();
    let mut h = &m + m.transpose();
    h *= prefactor;
    h
}

/// Hessian from two independent orthonormal frames:
/// `(n²/(8δ²k²)) Σ_ij D_ij (v_i w_jᵀ + w_j v_iᵀ)`.
///
/// Uses `4k²` evaluations. Requires `1 <= k <= n`. The `v` frame is drawn
/// before the `w` frame from the same stream.
pub fn hess_stiefel(
    f: &Objective,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    source: &RandomSource,
) -> Result<HessianEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_at_most_n(k, n)?;
    let mut rng = source.rng();
    let v = stiefel_using(n, k, &mut rng)?.into_matrix();
    let w = stiefel_using(n, k, &mut rng)?.into_matrix();
    let mut d = DMatrix::zeros(k, k);
    cross_differences(f, x, delta, &v, &w, &mut d)?;
    let nf = n as f64;
    let kf = k as f64;
    let prefactor = nf * nf / (8.0 * delta * delta * kf * kf);
    let matrix = symmetrized_outer(&v, &d, &w, prefactor);
    Ok(HessianEstimate {
        matrix,
        method: HessianMethod::Stiefel,
        k,
        delta,
        n_evals: 4 * (k as u64) * (k as u64),
        seed: Some(source.seed()),
        stream: Some(source.stream()),
    })
}

/// Same stencil as [`hess_stiefel`] with independent unit-sphere directions
/// and the `n²/(8kδ²)` prefactor. All `k` `v`-directions are drawn before
/// the `k` `w`-directions. Uses `4k²` evaluations; `k` may exceed `n`.
pub fn hess_spherical(
    f: &Objective,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    source: &RandomSource,
) -> Result<HessianEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_positive(k)?;
    let mut rng = source.rng();
    let mut v = DMatrix::zeros(n, k);
    for i in 0..k {
        v.set_column(i, &unit_sphere_using(n, &mut rng));
    }
    let mut w = DMatrix::zeros(n, k);
    for j in 0..k {
        w.set_column(j, &unit_sphere_using(n, &mut rng));
    }
    let mut d = DMatrix::zeros(k, k);
    cross_differences(f, x, delta, &v, &w, &mut d)?;
    let nf = n as f64;
    let kf = k as f64;
    let prefactor = nf * nf / (8.0 * kf * delta * delta);
    let matrix = symmetrized_outer(&v, &d, &w, prefactor);
    Ok(HessianEstimate {
        matrix,
        method: HessianMethod::Spherical,
        k,
        delta,
        n_evals: 4 * (k as u64) * (k as u64),
        seed: Some(source.seed()),
        stream: Some(source.stream()),
    })
}

/// Stein-type estimate from `k²` Gaussian directions:
/// `(n/(2k²δ²)) Σ_i (f(x+δv_i/√n) - 2f(x) + f(x-δv_i/√n)) (v_i v_iᵀ - I)`,
/// followed by the explicit symmetrization `(H + Hᵀ)/2`.
///
/// `f(x)` is evaluated once up front, so the budget is `2k² + 1`.
pub fn hess_gaussian_stein(
    f: &Objective,
    x: &DVector<f64>,
    k: usize,
    delta: f64,
    source: &RandomSource,
) -> Result<HessianEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    check_k_positive(k)?;
    let mut rng = source.rng();
    let f0 = f.eval_checked(x.as_slice(), || "x".to_string())?;
    let draws = k * k;
    let step = delta / (n as f64).sqrt();
    let mut m = DMatrix::zeros(n, n);
    let mut diag_shift = 0.0;
    let mut point = DVector::zeros(n);
    for i in 0..draws {
        let v = gaussian_using(n, &mut rng);
        point.copy_from(x);
        point.axpy(step, &v, 1.0);
        let fp = f.eval_checked(point.as_slice(), || format!("x + {step}*v[{i}]"))?;
        point.copy_from(x);
        point.axpy(-step, &v, 1.0);
        let fm = f.eval_checked(point.as_slice(), || format!("x - {step}*v[{i}]"))?;
        let dd = fp - 2.0 * f0 + fm;
        m.ger(dd, &v, &v, 1.0);
        diag_shift += dd;
    }
    let nf = n as f64;
    let kf = k as f64;
    let prefactor = nf / (2.0 * kf * kf * delta * delta);
    for i in 0..n {
        m[(i, i)] -= diag_shift;
    }
    m *= prefactor;
    let matrix = (&m + m.transpose()) * 0.5;
    Ok(HessianEstimate {
        matrix,
        method: HessianMethod::GaussianStein,
        k,
        delta,
        n_evals: 2 * (draws as u64) + 1,
        seed: Some(source.seed()),
        stream: Some(source.stream()),
    })
}

/// Deterministic four-point stencils on every coordinate pair of the upper
/// triangle, mirrored to the lower triangle.
///
/// Diagonal entries use the same stencil with `i = j`, so their inner points
/// collapse onto `x`, which is evaluated twice per diagonal entry. The budget
/// is therefore exactly `4·n(n+1)/2 = 2n(n+1)` evaluations.
pub fn hess_entrywise(f: &Objective, x: &DVector<f64>, delta: f64) -> Result<HessianEstimate> {
    let n = check_dimension(f, x)?;
    check_delta(delta)?;
    let denom = 4.0 * delta * delta;
    let mut matrix = DMatrix::zeros(n, n);
    let mut point = x.clone();
    let mut probe = |si: f64, sj: f64, i: usize, j: usize| -> Result<f64> {
        point.copy_from(x);
        point[i] += si * delta;
        point[j] += sj * delta;
        f.eval_checked(point.as_slice(), || {
            format!("x {} {delta}*e[{i}] {} {delta}*e[{j}]", sign_word(si), sign_word(sj))
        })
    };
    for i in 0..n {
        for j in i..n {
            let fpp = probe(1.0, 1.0, i, j)?;
            let fmp = probe(-1.0, 1.0, i, j)?;
            let fpm = probe(1.0, -1.0, i, j)?;
            let fmm = probe(-1.0, -1.0, i, j)?;
            let value = (fpp - fmp - fpm + fmm) / denom;
            matrix[(i, j)] = value;
            matrix[(j, i)] = value;
        }
    }
    Ok(HessianEstimate {
        matrix,
        method: HessianMethod::Entrywise,
        k: n,
        delta,
        n_evals: 2 * (n as u64) * (n as u64 + 1),
        seed: None,
        stream: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn spd_quadratic(n: usize, seed: u64) -> (Objective, DMatrix<f64>) {
        let mut rng = RandomSource::new(seed).rng();
        let raw = DMatrix::from_fn(n, n, |_, _| crate::sampling::standard_normal(&mut rng));
        let a = &raw * raw.transpose() + DMatrix::identity(n, n);
        let b = DVector::from_fn(n, |i, _| 0.1 * i as f64);
        (Objective::quadratic(a.clone(), b).unwrap(), a)
    }

    #[test]
    fn stiefel_full_frame_recovers_quadratics() {
        let (f, a) = spd_quadratic(6, 21);
        let x = DVector::from_element(6, 0.5);
        let source = RandomSource::new(4);
        let est = hess_stiefel(&f, &x, 6, 0.05, &source).unwrap();
        assert_relative_eq!(est.matrix(), &a, epsilon = 1e-7);
        assert_eq!(est.n_evals(), 4 * 36);
        assert_eq!(f.eval_count(), 4 * 36);
    }

    #[test]
    fn stiefel_output_is_exactly_symmetric() {
        let f = Objective::exp_sines(7).unwrap();
        let x = DVector::from_element(7, 0.3);
        let source = RandomSource::new(15);
        let est = hess_stiefel(&f, &x, 4, 0.02, &source).unwrap();
        let m = est.matrix();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m[(i, j)].to_bits(), m[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn stiefel_is_bitwise_deterministic() {
        let f = Objective::exp_sines(5).unwrap();
        let x = DVector::zeros(5);
        let source = RandomSource::with_stream(8, 2);
        let a = hess_stiefel(&f, &x, 3, 0.1, &source).unwrap();
        let b = hess_stiefel(&f, &x, 3, 0.1, &source).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn spherical_matches_stiefel_for_a_single_direction_pair() {
        let f = Objective::exp_sines(6).unwrap();
        let x = DVector::from_element(6, 0.2);
        let source = RandomSource::new(30);
        let a = hess_stiefel(&f, &x, 1, 0.05, &source).unwrap();
        let b = hess_spherical(&f, &x, 1, 0.05, &source).unwrap();
        let scale = 1.0 + b.matrix().norm();
        assert!((a.matrix() - b.matrix()).norm() <= 1e-9 * scale);
    }

    #[test]
    fn gaussian_stein_recovers_quadratics_in_expectation() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.5, -0.2, 0.0, -0.2, 1.0]);
        let b = DVector::zeros(3);
        let f = Objective::quadratic(a.clone(), b).unwrap();
        let x = DVector::from_element(3, 0.1);
        let trials = 12_000;
        let mut mean = DMatrix::zeros(3, 3);
        for t in 0..trials {
            let source = RandomSource::new(91).substream(t);
            let est = hess_gaussian_stein(&f, &x, 3, 0.05, &source).unwrap();
            mean += est.matrix();
        }
        mean /= trials as f64;
        assert!((mean - &a).norm() < 0.15);
    }

    #[test]
    fn gaussian_stein_budget_counts_the_base_point_once() {
        let f = Objective::exp_sines(4).unwrap();
        let x = DVector::zeros(4);
        let source = RandomSource::new(2);
        let est = hess_gaussian_stein(&f, &x, 3, 0.1, &source).unwrap();
        assert_eq!(est.n_evals(), 2 * 9 + 1);
        assert_eq!(f.eval_count(), 19);
        let m = est.matrix();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[(i, j)].to_bits(), m[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn entrywise_is_exact_on_quadratics_and_counts_duplicates() {
        let (f, a) = spd_quadratic(4, 77);
        let x = DVector::from_column_slice(&[0.1, -0.4, 0.2, 0.9]);
        let est = hess_entrywise(&f, &x, 1e-3).unwrap();
        assert_relative_eq!(est.matrix(), &a, epsilon = 1e-5);
        assert_eq!(est.n_evals(), 2 * 4 * 5);
        assert_eq!(f.eval_count(), 40);
        assert_eq!(est.seed(), None);
    }

    #[test]
    fn entrywise_matches_closed_form_on_the_benchmark() {
        let f = Objective::exp_sines(5).unwrap();
        let x = DVector::from_element(5, 0.25);
        let est = hess_entrywise(&f, &x, 1e-4).unwrap();
        let truth = f.hessian(x.as_slice()).unwrap();
        assert_relative_eq!(est.matrix(), &truth, epsilon = 1e-5);
    }

    #[test]
    fn constant_functions_produce_zero_estimates() {
        let f = Objective::from_fn(5, |_| 3.5);
        let x = DVector::zeros(5);
        let source = RandomSource::new(6);
        let est = hess_stiefel(&f, &x, 2, 0.1, &source).unwrap();
        assert_eq!(est.matrix().norm(), 0.0);
        let est = hess_entrywise(&f, &x, 0.1).unwrap();
        assert_eq!(est.matrix().norm(), 0.0);
    }

    #[test]
    fn parameters_are_validated() {
        let f = Objective::exp_sines(4).unwrap();
        let x = DVector::zeros(4);
        let source = RandomSource::new(1);
        assert!(hess_stiefel(&f, &x, 0, 0.1, &source).is_err());
        assert!(hess_stiefel(&f, &x, 5, 0.1, &source).is_err());
        assert!(hess_spherical(&f, &x, 5, 0.1, &source).is_ok());
        assert!(hess_gaussian_stein(&f, &x, 2, -0.1, &source).is_err());
        let bad_x = DVector::zeros(2);
        assert!(hess_entrywise(&f, &bad_x, 0.1).is_err());
    }
}
