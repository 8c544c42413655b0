//! Deterministic, seedable generation of the random direction sets used by the
//! estimators: orthonormal frames from the Stiefel manifold St(n, k), uniform
//! unit sphere vectors, standard Gaussian vectors, and k-sparse sign vectors.
//!
//! # Determinism
//!
//! Every sampler is a pure function of its parameters and a [`RandomSource`].
//! The underlying generator is ChaCha8 keyed by `seed` with the 64-bit stream
//! counter set to `stream`, so identical `(seed, stream)` pairs reproduce the
//! exact variate sequence on every platform. Normal variates use the
//! Box–Muller transform (cosine branch, two uniforms per variate, no pair
//! caching) and bounded integers use Lemire rejection; both are implemented
//! here so the byte-to-variate mapping is fixed by this crate rather than by
//! an external sampling library.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{invalid, Error, Result};

/// Largest acceptable deviation of XᵀX from the identity for a frame.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Relative eigenvalue threshold below which a Gram matrix counts as singular.
pub const GRAM_SINGULARITY_TOL: f64 = 1e-12;

/// Resampling attempts after a singular Gram matrix before giving up.
const GRAM_RESAMPLE_ATTEMPTS: u32 = 3;

/// Seed plus substream selector for all sampling operations.
///
/// Distinct streams derived from one seed give statistically independent
/// sequences, which is how parallel or repeated trials stay reproducible
/// independently of scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
}

impl RandomSource {
    /// Source with the given seed on stream 0.
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Source with an explicit (seed, stream) pair.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Derived source on stream `self.stream ^ index`, same seed.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream ^ index,
        }
    }

    /// The seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The substream selector.
    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Instantiate the generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Uniform variate in [0, 1) with 53 random mantissa bits.
#[inline]
pub(crate) fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal variate via Box–Muller (cosine branch).
///
/// Consumes exactly two uniforms per call; `1 - u` maps the first into
/// (0, 1] so the logarithm is finite.
#[inline]
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform integer in [0, bound) by Lemire's unbiased rejection method.
#[inline]
pub(crate) fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    loop {
        let x = rng.next_u64();
        let m = (x as u128) * (bound as u128);
        let low = m as u64;
        if low >= bound || low >= low.wrapping_neg() % bound {
            return (m >> 64) as u64;
        }
    }
}

/// An n×k matrix with orthonormal columns, i.e. a point on St(n, k).
///
/// Columns serve as mutually orthogonal estimation directions. Uniformly
/// distributed frames have the useful marginal property that each column is
/// itself uniform on the unit sphere S^{n−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalFrame {
    columns: DMatrix<f64>,
}

impl OrthonormalFrame {
    pub(crate) fn from_matrix(columns: DMatrix<f64>) -> Self {
        debug_assert!(columns.iter().all(|v| v.is_finite()));
        Self { columns }
    }

    /// Ambient dimension n.
    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    /// Number of columns k.
    pub fn k(&self) -> usize {
        self.columns.ncols()
    }

    /// The frame as an n×k matrix (columns are the directions).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Column `i` as a view.
    pub fn column(&self, i: usize) -> nalgebra::DVectorView<'_, f64> {
        self.columns.column(i)
    }

    /// max |XᵀX − I| over all entries; ≤ [`ORTHONORMALITY_TOL`] by construction.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.columns.transpose() * &self.columns;
        let k = self.k();
        let mut worst = 0.0f64;
        for j in 0..k {
            for i in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Consume the frame, returning the underlying matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.columns
    }
}

/// Inverse square root M^{−1/2} of a symmetric positive-definite matrix via
/// symmetric eigendecomposition: M = QΛQᵀ ⇒ M^{−1/2} = QΛ^{−1/2}Qᵀ.
///
/// # Errors
///
/// [`Error::NotSymmetric`] if max |M−Mᵀ| exceeds 1e−12 (relative to the
/// largest entry, floored at 1); [`Error::SingularGram`] if the smallest
/// eigenvalue is ≤ 1e−12 times the largest.
pub fn gram_inverse_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let tolerance = 1e-12 * scale;
    let mut defect = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            defect = defect.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if defect > tolerance {
        return Err(Error::NotSymmetric { defect, tolerance });
    }

    let eig = m.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    if max_eig <= 0.0 || min_eig <= GRAM_SINGULARITY_TOL * max_eig {
        return Err(Error::SingularGram {
            attempts: 1,
            ratio: if max_eig > 0.0 { min_eig / max_eig } else { f64::NEG_INFINITY },
        });
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    Ok(&eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose())
}

/// Internal frame sampler operating on a live generator.
pub(crate) fn stiefel_using(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<OrthonormalFrame> {
    let mut last_ratio = f64::NAN;
    for _ in 0..=GRAM_RESAMPLE_ATTEMPTS {
        let u = DMatrix::from_fn(n, k, |_, _| standard_normal(rng));
        let gram = u.transpose() * &u;
        match gram_inverse_sqrt(&gram) {
            Ok(root) => {
                let x = &u * root;
                // One Newton–Schulz pass, X ← X(3I − XᵀX)/2: the identity map on
                // the exact-arithmetic result, it only absorbs eigendecomposition
                // rounding so the orthonormality invariant holds at every
                // conditioning the singularity threshold admits.
                let gram_x = x.transpose() * &x;
                let correction = DMatrix::<f64>::identity(k, k) * 3.0 - gram_x;
                let polished = (&x * correction) * 0.5;
                return Ok(OrthonormalFrame::from_matrix(polished));
            }
            Err(Error::SingularGram { ratio, .. }) => {
                last_ratio = ratio;
            }
            Err(other) => return Err(other),
        }
    }
    Err(Error::SingularGram {
        attempts: GRAM_RESAMPLE_ATTEMPTS + 1,
        ratio: last_ratio,
    })
}

/// Uniformly random orthonormal frame X = U(UᵀU)^{−1/2} with U an n×k matrix
/// of i.i.d. standard normals.
///
/// The Gaussian draw is filled in column-major order. A numerically singular
/// Gram matrix (relative smallest eigenvalue ≤ 1e−12, probability zero in
/// exact arithmetic) triggers an internal resample, up to 3 retries.
///
/// # Errors
///
/// `k` outside 1..=n; persistent Gram singularity.
pub fn sample_stiefel(n: usize, k: usize, source: &RandomSource) -> Result<OrthonormalFrame> {
    if k < 1 || k > n {
        return Err(invalid(
            "k",
            format!("frame size must satisfy 1 <= k <= n = {n}, got {k}"),
        ));
    }
    stiefel_using(n, k, &mut source.rng())
}

pub(crate) fn unit_sphere_using(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| standard_normal(rng));
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// Uniform vector on the unit sphere S^{n−1} (normalized standard Gaussian).
pub fn sample_unit_sphere(n: usize, source: &RandomSource) -> Result<DVector<f64>> {
    if n < 1 {
        return Err(invalid("n", "dimension must be at least 1"));
    }
    Ok(unit_sphere_using(n, &mut source.rng()))
}

pub(crate) fn gaussian_using(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| standard_normal(rng))
}

/// Vector of n i.i.d. standard normal entries.
pub fn sample_standard_gaussian(n: usize, source: &RandomSource) -> Result<DVector<f64>> {
    if n < 1 {
        return Err(invalid("n", "dimension must be at least 1"));
    }
    Ok(gaussian_using(n, &mut source.rng()))
}

/// A vector with exactly k nonzero entries, each ±1, on a uniformly random
/// support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSignVector {
    n: usize,
    support: Vec<usize>,
    signs: Vec<i8>,
}

impl SparseSignVector {
    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nonzero entries.
    pub fn k(&self) -> usize {
        self.support.len()
    }

    /// Support indices, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Signs aligned with [`Self::support`].
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Entry `i` as a float in {−1, 0, +1}.
    pub fn entry(&self, i: usize) -> f64 {
        match self.support.binary_search(&i) {
            Ok(pos) => f64::from(self.signs[pos]),
            Err(_) => 0.0,
        }
    }

    /// Dense representation.
    pub fn dense(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.n);
        for (&i, &s) in self.support.iter().zip(&self.signs) {
            v[i] = f64::from(s);
        }
        v
    }
}

pub(crate) fn sparse_rademacher_using(
    n: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> SparseSignVector {
    // Partial Fisher-Yates picks the support; variate order is fixed:
    // k support swaps first, then k sign bits.
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        indices.swap(i, j);
    }
    let mut support: Vec<usize> = indices[..k].to_vec();
    support.sort_unstable();
    let signs: Vec<i8> = (0..k)
        .map(|_| if rng.next_u64() & 1 == 1 { 1 } else { -1 })
        .collect();
    SparseSignVector { n, support, signs }
}

/// k-sparse sign vector: uniformly random k-subset support, i.i.d. ±1 signs.
///
/// # Errors
///
/// `k` outside 1..=n.
pub fn sample_sparse_rademacher(
    n: usize,
    k: usize,
    source: &RandomSource,
) -> Result<SparseSignVector> {
    if k < 1 || k > n {
        return Err(invalid(
            "k",
            format!("sparsity must satisfy 1 <= k <= n = {n}, got {k}"),
        ));
    }
    Ok(sparse_rademacher_using(n, k, &mut source.rng()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identical_source_reproduces_frames_bitwise() {
        let source = RandomSource::with_stream(1234, 7);
        let a = sample_stiefel(20, 5, &source).unwrap();
        let b = sample_stiefel(20, 5, &source).unwrap();
        assert_eq!(a.matrix(), b.matrix(), "same (seed, stream) must replay exactly");
    }

    #[test]
    fn distinct_streams_differ() {
        let a = sample_stiefel(10, 3, &RandomSource::with_stream(5, 0)).unwrap();
        let b = sample_stiefel(10, 3, &RandomSource::with_stream(5, 1)).unwrap();
        assert_ne!(a.matrix(), b.matrix());
    }

    #[test]
    fn substream_is_xor_on_stream() {
        let s = RandomSource::with_stream(9, 0b1100);
        assert_eq!(s.substream(0b1010).stream(), 0b0110);
        assert_eq!(s.substream(0).stream(), s.stream());
        assert_eq!(s.substream(3).seed(), 9);
    }

    #[test]
    fn frame_is_orthonormal() {
        for (n, k) in [(5, 5), (8, 3), (40, 17), (3, 1)] {
            let frame = sample_stiefel(n, k, &RandomSource::new(99)).unwrap();
            assert!(
                frame.orthonormality_defect() <= ORTHONORMALITY_TOL,
                "defect {} at n={n} k={k}",
                frame.orthonormality_defect()
            );
        }
    }

    #[test]
    fn k_one_frame_is_unit_vector() {
        let frame = sample_stiefel(3, 1, &RandomSource::new(4)).unwrap();
        let v = frame.column(0).into_owned();
        assert!((v.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn frame_rejects_bad_k() {
        assert!(sample_stiefel(4, 0, &RandomSource::new(0)).is_err());
        assert!(sample_stiefel(4, 5, &RandomSource::new(0)).is_err());
    }

    #[test]
    fn sphere_vector_is_unit() {
        for n in [1, 2, 17] {
            let v = sample_unit_sphere(n, &RandomSource::new(3)).unwrap();
            assert!((v.norm() - 1.0).abs() <= 1e-12, "n={n}");
        }
    }

    #[test]
    fn sphere_dimension_one_is_sign() {
        for seed in 0..20 {
            let v = sample_unit_sphere(1, &RandomSource::new(seed)).unwrap();
            assert!(v[0] == 1.0 || v[0] == -1.0, "got {}", v[0]);
        }
    }

    #[test]
    fn gaussian_determinism() {
        let source = RandomSource::with_stream(11, 2);
        let a = sample_standard_gaussian(2, &source).unwrap();
        let b = sample_standard_gaussian(2, &source).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inverse_sqrt_identity() {
        let id = DMatrix::<f64>::identity(3, 3);
        let root = gram_inverse_sqrt(&id).unwrap();
        assert_relative_eq!(root, id, epsilon = 1e-14);
    }

    #[test]
    fn inverse_sqrt_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let root = gram_inverse_sqrt(&m).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 1.0 / 3.0]));
        assert_relative_eq!(root, expected, epsilon = 1e-14);
    }

    #[test]
    fn inverse_sqrt_random_spd() {
        let mut rng = RandomSource::new(21).rng();
        let a = DMatrix::from_fn(5, 5, |_, _| standard_normal(&mut rng));
        let m = &a * a.transpose() + DMatrix::<f64>::identity(5, 5) * 0.5;
        let root = gram_inverse_sqrt(&m).unwrap();
        let recon = &root * &m * &root;
        assert!((recon - DMatrix::<f64>::identity(5, 5)).norm() <= 1e-10);
    }

    #[test]
    fn inverse_sqrt_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            gram_inverse_sqrt(&m),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn inverse_sqrt_rejects_singular() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-15]));
        assert!(matches!(
            gram_inverse_sqrt(&m),
            Err(Error::SingularGram { .. })
        ));
    }

    #[test]
    fn sparse_vector_has_exact_support() {
        let z = sample_sparse_rademacher(6, 2, &RandomSource::new(8)).unwrap();
        assert_eq!(z.k(), 2);
        assert_eq!(z.dense().iter().filter(|v| **v != 0.0).count(), 2);
        for &s in z.signs() {
            assert!(s == 1 || s == -1);
        }
    }

    #[test]
    fn sparse_vector_full_support_has_no_zeros() {
        let z = sample_sparse_rademacher(6, 6, &RandomSource::new(1)).unwrap();
        assert!(z.dense().iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn sparse_support_frequency_matches_k_over_n() {
        // Each index lands in the support with probability k/n = 1/3.
        let draws = 200_000;
        let mut rng = RandomSource::new(3141).rng();
        let mut counts = [0u64; 6];
        for _ in 0..draws {
            let z = sparse_rademacher_using(6, 2, &mut rng);
            for &i in z.support() {
                counts[i] += 1;
            }
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.005,
                "index {i} frequency {freq}"
            );
        }
    }

    #[test]
    fn gaussian_moments_are_standard() {
        let mut rng = RandomSource::new(777).rng();
        let draws = 1_000_000usize;
        let mut sum = [0.0f64; 4];
        let mut sumsq = [0.0f64; 4];
        for _ in 0..draws {
            let v = gaussian_using(4, &mut rng);
            for i in 0..4 {
                sum[i] += v[i];
                sumsq[i] += v[i] * v[i];
            }
        }
        for i in 0..4 {
            let mean = sum[i] / draws as f64;
            let var = sumsq[i] / draws as f64 - mean * mean;
            assert!(mean.abs() < 0.01, "coordinate {i} mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "coordinate {i} variance {var}");
        }
    }

    #[test]
    fn uniform_below_covers_range_without_bias() {
        let mut rng = RandomSource::new(5150).rng();
        let mut counts = [0u64; 7];
        let draws = 700_000;
        for _ in 0..draws {
            counts[uniform_below(&mut rng, 7) as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 7.0).abs() < 0.003, "value {i} frequency {freq}");
        }
    }
}
