//! Closed-form variance and bias bounds for the frame-based estimators,
//! log-scale trend surrogates, exact sphere moments, and brute-force
//! finite-difference helpers for smoothness constants and derivative
//! contractions.
//!
//! The bound evaluators are pure functions of [`BoundInputs`]. Smoothness
//! constants are optional there because they are external knowledge about
//! the objective; evaluators that need an absent constant return
//! [`Error::MissingInput`] instead of guessing.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::objectives::Objective;
use crate::sampling::{uniform01, unit_sphere_using, RandomSource};

/// Returned by the trend surrogates when their argument is zero or negative,
/// so sweeps that include `k = n, δ = 0` serialize cleanly instead of
/// producing `-inf`.
pub const C_CURVE_LOG_FLOOR: f64 = -300.0;

/// Inputs shared by the bound evaluators.
///
/// `n`, `k`, `delta` describe the estimator; the norms describe the objective
/// at the evaluation point; `l1` through `l6` are Lipschitz constants of the
/// corresponding total derivatives (`lp` bounds the operator norm of the
/// p-th derivative). The two contraction fields feed the refined bias
/// bounds: `third_contraction` holds the vector with entries
/// `Σ_j ∂_jji f(x)` and `fourth_contraction_spectral` the spectral norm of
/// the matrix with entries `Σ_m ∂_mmij f(x)`.
///
/// The δ⁴ term of the Hessian variance bound is only determined up to
/// constants; `c4_spectral_coeff` and `c4_quartic_coeff` scale its two
/// pieces and default to 1.
#[derive(Clone, Debug)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub grad_norm: f64,
    pub hess_spectral: f64,
    pub hess_frobenius: f64,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    pub l4: Option<f64>,
    pub l5: Option<f64>,
    pub l6: Option<f64>,
    pub third_contraction: Option<DVector<f64>>,
    pub fourth_contraction_spectral: Option<f64>,
    pub c4_spectral_coeff: f64,
    pub c4_quartic_coeff: f64,
}

impl BoundInputs {
    /// Geometry-only constructor; norms default to zero and constants to
    /// absent. Requires `1 <= k <= n` and finite `delta >= 0` (zero is
    /// allowed so the bounds can be evaluated in the exact-arithmetic limit).
    pub fn new(n: usize, k: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if k < 1 || k > n {
            return Err(invalid("k", format!("must satisfy 1 <= k <= n = {n}, got {k}")));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(invalid("delta", format!("must be finite and nonnegative, got {delta}")));
        }
        Ok(BoundInputs {
            n,
            k,
            delta,
            grad_norm: 0.0,
            hess_spectral: 0.0,
            hess_frobenius: 0.0,
            l1: None,
            l2: None,
            l3: None,
            l4: None,
            l5: None,
            l6: None,
            third_contraction: None,
            fourth_contraction_spectral: None,
            c4_spectral_coeff: 1.0,
            c4_quartic_coeff: 1.0,
        })
    }

    fn require(&self, value: Option<f64>, name: &'static str) -> Result<f64> {
        let v = value.ok_or(Error::MissingInput(name))?;
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(name, format!("must be finite and nonnegative, got {v}")));
        }
        Ok(v)
    }

    fn norm_field(&self, value: f64, name: &'static str) -> Result<f64> {
        if !value.is_finite() || value < 0.0 {
            return Err(invalid(name, format!("must be finite and nonnegative, got {value}")));
        }
        Ok(value)
    }

    /// Variance bound for the frame gradient estimator:
    /// `(n/k - 1)‖∇f‖² + (L₃δ²/3)(n²/k - n)‖∇f‖ + L₃²n²δ⁴/(36k)`.
    ///
    /// At `k = n` the first two terms vanish exactly and only the
    /// `L₃²nδ⁴/36` remainder survives.
    pub fn grad_variance_bound(&self) -> Result<f64> {
        let l3 = self.require(self.l3, "L3")?;
        let g = self.norm_field(self.grad_norm, "grad_norm")?;
        let nf = self.n as f64;
        let kf = self.k as f64;
        let d2 = self.delta * self.delta;
        let term1 = (nf / kf - 1.0) * g * g;
        let term2 = (l3 * d2 / 3.0) * (nf * nf / kf - nf) * g;
        let term3 = l3 * l3 * nf * nf * d2 * d2 / (36.0 * kf);
        Ok(term1 + term2 + term3)
    }

    /// First-order bias bound for the frame gradient estimator: `L₁nδ/(n+1)`.
    pub fn grad_bias_bound_first_order(&self) -> Result<f64> {
        let l1 = self.require(self.l1, "L1")?;
        let nf = self.n as f64;
        Ok(l1 * nf * self.delta / (nf + 1.0))
    }

    /// Refined bias bound for the frame gradient estimator:
    /// `(δ²/(2n))‖F‖ + δ³L₄n/24` with `F_i = Σ_j ∂_jji f(x)`.
    pub fn grad_bias_bound_refined(&self) -> Result<f64> {
        let l4 = self.require(self.l4, "L4")?;
        let contraction = self
            .third_contraction
            .as_ref()
            .ok_or(Error::MissingInput("third_contraction"))?;
        let nf = self.n as f64;
        let d = self.delta;
        Ok(d * d / (2.0 * nf) * contraction.norm() + d * d * d * l4 * nf / 24.0)
    }

    /// Variance bound for the frame Hessian estimator:
    /// `‖∇²f‖_F²(n²/k² - 1) + 2δ²L₄‖∇²f‖(n⁴/k² - n²) + C₄δ⁴` with
    /// `C₄ = c_a L₆ n² ‖∇²f‖ + c_b n⁴ L₄²/k²`.
    ///
    /// The δ⁴ term is known only up to constants; `c_a` and `c_b` are the
    /// configurable coefficients `c4_spectral_coeff` and `c4_quartic_coeff`.
    pub fn hess_variance_bound(&self) -> Result<f64> {
        let l4 = self.require(self.l4, "L4")?;
        let l6 = self.require(self.l6, "L6")?;
        let fro = self.norm_field(self.hess_frobenius, "hess_frobenius")?;
        let spec = self.norm_field(self.hess_spectral, "hess_spectral")?;
        let nf = self.n as f64;
        let kf = self.k as f64;
        let n2 = nf * nf;
        let n4 = n2 * n2;
        let k2 = kf * kf;
        let d2 = self.delta * self.delta;
        let term1 = fro * fro * (n2 / k2 - 1.0);
        let term2 = 2.0 * d2 * l4 * spec * (n4 / k2 - n2);
        let c4 = self.c4_spectral_coeff * l6 * n2 * spec + self.c4_quartic_coeff * n4 * l4 * l4 / k2;
        Ok(term1 + term2 + c4 * d2 * d2)
    }

    /// First-order bias bound for the frame Hessian estimator: `2nL₂δ/(n+1)`.
    pub fn hess_bias_bound_first_order(&self) -> Result<f64> {
        let l2 = self.require(self.l2, "L2")?;
        let nf = self.n as f64;
        Ok(2.0 * nf * l2 * self.delta / (nf + 1.0))
    }

    /// Refined bias bound for the frame Hessian estimator:
    /// `(δ²/(n+2))‖F̃‖ + 4δ³L₅n²/15` with `F̃_ij = Σ_m ∂_mmij f(x)`.
    pub fn hess_bias_bound_refined(&self) -> Result<f64> {
        let l5 = self.require(self.l5, "L5")?;
        let ftilde = self.require(self.fourth_contraction_spectral, "fourth_contraction_spectral")?;
        let nf = self.n as f64;
        let d = self.delta;
        Ok(d * d / (nf + 2.0) * ftilde + 4.0 * d * d * d * l5 * nf * nf / 15.0)
    }
}

fn log10_or_floor(argument: f64) -> f64 {
    if argument > 0.0 {
        argument.log10()
    } else {
        C_CURVE_LOG_FLOOR
    }
}

/// Constant-free log-scale surrogate of the gradient variance bound:
/// `log₁₀(‖∇f‖²(n/k - 1) + δ²(n²/k - n)‖∇f‖ + δ⁴n²/k)`.
///
/// Zero or negative arguments (possible at `k = n, δ = 0`) return
/// [`C_CURVE_LOG_FLOOR`]. This is the overlay curve, deliberately separate
/// from the exact [`BoundInputs::grad_variance_bound`].
pub fn c_curve_grad(n: usize, k: usize, delta: f64, grad_norm: f64) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let d2 = delta * delta;
    let argument =
        grad_norm * grad_norm * (nf / kf - 1.0) + d2 * (nf * nf / kf - nf) * grad_norm + d2 * d2 * nf * nf / kf;
    log10_or_floor(argument)
}

/// Constant-free log-scale surrogate of the Hessian variance bound:
/// `log₁₀(‖∇²f‖_F²(n²/k² - 1) + 2δ²‖∇²f‖(n⁴/k² - n²) + ‖∇²f‖n⁴δ⁴/k²)`.
///
/// Zero or negative arguments return [`C_CURVE_LOG_FLOOR`].
pub fn c_curve_hess(n: usize, k: usize, delta: f64, hess_frobenius: f64, hess_spectral: f64) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let n2 = nf * nf;
    let n4 = n2 * n2;
    let k2 = kf * kf;
    let d2 = delta * delta;
    let argument = hess_frobenius * hess_frobenius * (n2 / k2 - 1.0)
        + 2.0 * d2 * hess_spectral * (n4 / k2 - n2)
        + hess_spectral * n4 * d2 * d2 / k2;
    log10_or_floor(argument)
}

/// Exact even moment `E[v_i^p]` of a uniform unit-sphere coordinate:
/// `(p-1)!! / (n(n+2)⋯(n+p-2))`.
///
/// Requires `n >= 1` and even `p >= 2`.
pub fn sphere_even_moment(n: usize, p: u32) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if p < 2 || p % 2 != 0 {
        return Err(invalid("p", format!("must be a positive even integer, got {p}")));
    }
    let nf = n as f64;
    let mut moment = 1.0;
    for j in 0..(p / 2) {
        moment *= (2 * j + 1) as f64 / (nf + 2.0 * j as f64);
    }
    Ok(moment)
}

/// Exact cross moment `E[v_i²v_j²] = 1/(n² + 2n)` for distinct coordinates
/// of a uniform unit-sphere vector. Requires `n >= 2`.
pub fn sphere_cross_fourth_moment(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", "must be at least 2 for distinct coordinates"));
    }
    let nf = n as f64;
    Ok(1.0 / (nf * nf + 2.0 * nf))
}

struct Stencil {
    taps: &'static [(i32, f64)],
}

/// Central stencils for p-th directional derivatives, orders 1 through 6.
/// Coefficients already include the `1/2` of the odd-order stencils, so the
/// derivative is `Σ c_m f(x + m h v) / h^p`.
const STENCILS: [Stencil; 6] = [
    Stencil { taps: &[(1, 0.5), (-1, -0.5)] },
    Stencil { taps: &[(1, 1.0), (0, -2.0), (-1, 1.0)] },
    Stencil { taps: &[(2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)] },
    Stencil { taps: &[(2, 1.0), (1, -4.0), (0, 6.0), (-1, -4.0), (-2, 1.0)] },
    Stencil {
        taps: &[(3, 0.5), (2, -2.0), (1, 2.5), (-1, -2.5), (-2, 2.0), (-3, -0.5)],
    },
    Stencil {
        taps: &[(3, 1.0), (2, -6.0), (1, 15.0), (0, -20.0), (-1, 15.0), (-2, -6.0), (-3, 1.0)],
    },
];

/// Default finite-difference step per derivative order, balancing the
/// `O(h²)` truncation error of the central stencils against the `O(ε/h^p)`
/// rounding error. For unit-scale functions the achievable accuracy degrades
/// from roughly 1e-10 at order 1 to a few percent at order 6.
const STEP_BY_ORDER: [f64; 6] = [1e-5, 1e-4, 1e-3, 3e-3, 1e-2, 2e-2];

/// Brute-force sampled estimate of `max ‖∂^p f‖` over the ball of the given
/// radius around `x`.
///
/// Each sample picks a uniform point in the ball and a uniform direction and
/// evaluates the order-`order` central stencil along that direction; the
/// maximum absolute value over all samples is returned. For symmetric
/// derivative tensors the directional maximum equals the operator norm, so
/// with enough samples this approaches the true constant from below, up to
/// the stencil error documented at [`STEP_BY_ORDER`].
pub fn estimate_smoothness(
    f: &Objective,
    x: &DVector<f64>,
    order: u32,
    radius: f64,
    samples: usize,
    source: &RandomSource,
) -> Result<f64> {
    let n = f.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if order < 1 || order > 6 {
        return Err(invalid("order", format!("must be between 1 and 6, got {order}")));
    }
    if !radius.is_finite() || radius < 0.0 {
        return Err(invalid("radius", format!("must be finite and nonnegative, got {radius}")));
    }
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    let stencil = &STENCILS[(order - 1) as usize];
    let h = STEP_BY_ORDER[(order - 1) as usize];
    let denom = h.powi(order as i32);
    let mut rng = source.rng();
    let mut best = 0.0_f64;
    let mut center = DVector::zeros(n);
    let mut point = DVector::zeros(n);
    for sample in 0..samples {
        center.copy_from(x);
        if radius > 0.0 {
            let shell = unit_sphere_using(n, &mut rng);
            let t = uniform01(&mut rng).powf(1.0 / n as f64);
            center.axpy(radius * t, &shell, 1.0);
        }
        let v = unit_sphere_using(n, &mut rng);
        let mut acc = 0.0;
        for &(offset, coeff) in stencil.taps {
            point.copy_from(&center);
            point.axpy(f64::from(offset) * h, &v, 1.0);
            let value = f.eval_checked(point.as_slice(), || {
                format!("smoothness sample {sample}, stencil offset {offset}")
            })?;
            acc += coeff * value;
        }
        best = best.max((acc / denom).abs());
    }
    Ok(best)
}

/// Nested central-difference estimate of the third-derivative contraction
/// `F_i = Σ_j ∂_jji f(x)`.
///
/// Off-diagonal terms apply a second difference in `e_j` to the first
/// difference in `e_i`; the `j = i` term uses the five-point third-derivative
/// stencil along `e_i`. Costs `4n² + O(n)` evaluations.
pub fn third_contraction_fd(f: &Objective, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let n = f.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(invalid("h", format!("must be positive and finite, got {h}")));
    }
    let mut point = DVector::zeros(n);
    let eval = |p: &DVector<f64>, i: usize, j: usize| -> Result<f64> {
        f.eval_checked(p.as_slice(), || format!("third-contraction stencil near e[{i}], e[{j}]"))
    };
    let mut out = DVector::zeros(n);
    for i in 0..n {
        point.copy_from(x);
        point[i] = x[i] + h;
        let fpi = eval(&point, i, i)?;
        point[i] = x[i] - h;
        let fmi = eval(&point, i, i)?;
        let base = (fpi - fmi) / (2.0 * h);
        let mut total = 0.0;
        for j in 0..n {
            if j == i {
                point.copy_from(x);
                point[i] = x[i] + 2.0 * h;
                let fp2 = eval(&point, i, i)?;
                point[i] = x[i] - 2.0 * h;
                let fm2 = eval(&point, i, i)?;
                total += (fp2 - 2.0 * fpi + 2.0 * fmi - fm2) / (2.0 * h * h * h);
            } else {
                point.copy_from(x);
                point[j] = x[j] + h;
                point[i] = x[i] + h;
                let fpp = eval(&point, i, j)?;
                point[i] = x[i] - h;
                let fpm = eval(&point, i, j)?;
                point[j] = x[j] - h;
                point[i] = x[i] + h;
                let fmp = eval(&point, i, j)?;
                point[i] = x[i] - h;
                let fmm = eval(&point, i, j)?;
                let dplus = (fpp - fpm) / (2.0 * h);
                let dminus = (fmp - fmm) / (2.0 * h);
                total += (dplus - 2.0 * base + dminus) / (h * h);
            }
        }
        out[i] = total;
    }
    Ok(out)
}

/// Nested central-difference estimate of the fourth-derivative contraction
/// `F̃_ij = Σ_m ∂_mmij f(x)`, returned as an exactly symmetric matrix.
///
/// For each pair `(i, j)` the cross second derivative `∂_ij` is approximated
/// by its four-point (or three-point on the diagonal) stencil, and a second
/// difference in `e_m` is applied on top. Costs `O(n³)` evaluations; intended
/// for small `n`.
pub fn fourth_contraction_fd(f: &Objective, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = f.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(invalid("h", format!("must be positive and finite, got {h}")));
    }
    let mut probe = DVector::zeros(n);
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut cross = |base: &DVector<f64>| -> Result<f64> {
                let describe = || format!("fourth-contraction stencil near e[{i}], e[{j}]");
                if i == j {
                    probe.copy_from(base);
                    probe[i] += h;
                    let fp = f.eval_checked(probe.as_slice(), describe)?;
                    probe.copy_from(base);
                    let f0 = f.eval_checked(probe.as_slice(), describe)?;
                    probe[i] -= h;
                    let fm = f.eval_checked(probe.as_slice(), describe)?;
                    Ok((fp - 2.0 * f0 + fm) / (h * h))
                } else {
                    probe.copy_from(base);
                    probe[i] += h;
                    probe[j] += h;
                    let fpp = f.eval_checked(probe.as_slice(), describe)?;
                    probe[i] -= 2.0 * h;
                    let fmp = f.eval_checked(probe.as_slice(), describe)?;
                    probe[j] -= 2.0 * h;
                    let fmm = f.eval_checked(probe.as_slice(), describe)?;
                    probe[i] += 2.0 * h;
                    let fpm = f.eval_checked(probe.as_slice(), describe)?;
                    Ok((fpp - fmp - fpm + fmm) / (4.0 * h * h))
                }
            };
            let center = cross(x)?;
            let mut total = 0.0;
            let mut shifted = x.clone();
            for m in 0..n {
                shifted.copy_from(x);
                shifted[m] = x[m] + h;
                let ap = cross(&shifted)?;
                shifted[m] = x[m] - h;
                let am = cross(&shifted)?;
                total += (ap - 2.0 * center + am) / (h * h);
            }
            out[(i, j)] = total;
            out[(j, i)] = total;
        }
    }
    Ok(out)
}
