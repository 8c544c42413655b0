//! Resolution of CLI inputs into library types: objective specs, evaluation
//! points, estimator names, and the whitespace-separated vector and matrix
//! file formats they read from.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use zo_frames::{EstimatorKind, Objective};

use crate::{usage, Failure};

pub const ESTIMATORS: [&str; 10] = [
    "grad-stiefel",
    "grad-spherical",
    "grad-gaussian",
    "grad-rademacher",
    "grad-comparison",
    "grad-entrywise",
    "hess-stiefel",
    "hess-spherical",
    "hess-gaussian-stein",
    "hess-entrywise",
];

/// Build the objective from `--function`, reconciling any `--n` flag with
/// dimensions read from parameter files.
pub fn resolve_function(spec: Option<&str>, n_flag: Option<usize>) -> Result<Objective, Failure> {
    let spec = spec.unwrap_or("exp-sines");
    if spec == "exp-sines" {
        let n = n_flag.ok_or_else(|| usage("exp-sines needs --n"))?;
        return Ok(Objective::exp_sines(n)?);
    }
    if let Some(path) = spec.strip_prefix("linear:") {
        let c = read_vector(Path::new(path))?;
        check_n(n_flag, c.len())?;
        return Ok(Objective::linear(c)?);
    }
    if let Some(paths) = spec.strip_prefix("quadratic:") {
        let (a_path, b_path) = match paths.split_once(',') {
            Some((a, b)) => (a, Some(b)),
            None => (paths, None),
        };
        let a = read_matrix(Path::new(a_path))?;
        let b = match b_path {
            Some(path) => read_vector(Path::new(path))?,
            None => DVector::zeros(a.nrows()),
        };
        check_n(n_flag, a.nrows())?;
        return Ok(Objective::quadratic(a, b)?);
    }
    Err(usage(format!(
        "unknown function {spec:?}; expected exp-sines, linear:<c-file>, or quadratic:<A-file>[,<b-file>]"
    )))
}

fn check_n(n_flag: Option<usize>, from_file: usize) -> Result<(), Failure> {
    match n_flag {
        Some(n) if n != from_file => Err(usage(format!(
            "--n {n} contradicts the parameter file dimension {from_file}"
        ))),
        _ => Ok(()),
    }
}

/// Resolve `--x`: the named presets or a vector file of length n.
pub fn resolve_point(spec: Option<&str>, n: usize) -> Result<DVector<f64>, Failure> {
    match spec.unwrap_or("zero") {
        "zero" => Ok(DVector::zeros(n)),
        "pi4" => Ok(DVector::from_element(n, std::f64::consts::FRAC_PI_4)),
        "pi2" => Ok(DVector::from_element(n, std::f64::consts::FRAC_PI_2)),
        path => {
            let x = read_vector(Path::new(path))?;
            if x.len() != n {
                return Err(usage(format!(
                    "point file {path:?} has dimension {}, expected {n}",
                    x.len()
                )));
            }
            Ok(x)
        }
    }
}

pub fn resolve_estimator(
    token: &str,
    k: usize,
    sparsity: Option<f64>,
) -> Result<EstimatorKind, Failure> {
    let kind = match token {
        "grad-stiefel" => EstimatorKind::GradStiefel { k },
        "grad-spherical" => EstimatorKind::GradSpherical { k },
        "grad-gaussian" => EstimatorKind::GradGaussian { k },
        "grad-rademacher" => EstimatorKind::GradRademacher { k },
        "grad-comparison" => EstimatorKind::GradComparison {
            k,
            sparsity: sparsity.unwrap_or(f64::INFINITY),
        },
        "grad-entrywise" => EstimatorKind::GradEntrywise,
        "hess-stiefel" => EstimatorKind::HessStiefel { k },
        "hess-spherical" => EstimatorKind::HessSpherical { k },
        "hess-gaussian-stein" => EstimatorKind::HessGaussianStein { k },
        "hess-entrywise" => EstimatorKind::HessEntrywise,
        other => {
            return Err(usage(format!(
                "unknown estimator {other:?}; valid names: {}",
                ESTIMATORS.join(", ")
            )))
        }
    };
    Ok(kind)
}

fn read_floats(path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        rows.push(row.map_err(|e| {
            usage(format!("{}: invalid number in {line:?}: {e}", path.display()))
        })?);
    }
    if rows.is_empty() {
        return Err(usage(format!("{}: no values", path.display())));
    }
    Ok(rows)
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>, Failure> {
    let rows = read_floats(path)?;
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DVector::from_vec(values))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, Failure> {
    let rows = read_floats(path)?;
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(usage(format!("{}: ragged matrix rows", path.display())));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), width, &flat))
}
