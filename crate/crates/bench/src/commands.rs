//! The five subcommands. Each one buffers its CSV lines and writes them in
//! a single pass, so identical flags and seed reproduce identical bytes.

use std::io::Write;
use std::path::PathBuf;

use nalgebra::DVector;
use zo_frames::{
    c_curve_grad, c_curve_hess, grad_entrywise, grad_stiefel, hess_entrywise, run_trials,
    sample_unit_sphere, spectral_norm, sphere_cross_fourth_moment, sphere_even_moment,
    EstimatorKind, Objective, RandomSource, TrialStatistics,
};

use crate::inputs::{resolve_estimator, resolve_function, resolve_point};
use crate::{usage, Cli, Failure};

const RESULTS_HEADER: &str = "schema,estimator,n,k,delta,trial,seed,error_l2,error_fro,error_spec,cosine,n_evals,lg_error,bound_value,c_curve_value";
const TABLE_HEADER: &str =
    "schema,table,estimator,n,k,delta,trials,mean_error,reference_error,ratio";
const MOMENTS_HEADER: &str = "schema,check,n,p,draws,observed,expected,z";
const ZOGD_HEADER: &str = "schema,step,f,grad_norm,n_evals";

const TABLE_DELTAS: [f64; 3] = [0.1, 0.01, 0.001];

/// 17 significant digits, enough to round-trip an f64 exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn write_output(out: Option<&PathBuf>, lines: &[String]) -> Result<(), Failure> {
    let mut body = lines.join("\n");
    body.push('\n');
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

struct Run {
    f: Objective,
    x: DVector<f64>,
    n: usize,
    delta: f64,
    trials: u64,
    seed: u64,
}

fn resolve_run(cli: &Cli) -> Result<Run, Failure> {
    let f = resolve_function(cli.function.as_deref(), cli.n)?;
    let n = f.dim();
    let x = resolve_point(cli.x.as_deref(), n)?;
    Ok(Run {
        f,
        x,
        n,
        delta: cli.delta.unwrap_or(0.01),
        trials: cli.trials.unwrap_or(10),
        seed: cli.seed.unwrap_or(0),
    })
}

struct ResultRow<'a> {
    estimator: &'a str,
    n: usize,
    k: usize,
    delta: f64,
    trial: String,
    seed: u64,
    error_l2: Option<f64>,
    error_fro: Option<f64>,
    error_spec: Option<f64>,
    cosine: Option<f64>,
    n_evals: u64,
    lg_error: Option<f64>,
    c_curve: Option<f64>,
}

impl ResultRow<'_> {
    fn line(&self) -> String {
        // The bound_value column stays empty: the closed-form bounds need
        // smoothness constants no CLI run estimates.
        format!(
            "results-v1,{},{},{},{},{},{},{},{},{},{},{},{},,{}",
            self.estimator,
            self.n,
            self.k,
            fmt(self.delta),
            self.trial,
            self.seed,
            opt(self.error_l2),
            opt(self.error_fro),
            opt(self.error_spec),
            opt(self.cosine),
            self.n_evals,
            opt(self.lg_error),
            opt(self.c_curve),
        )
    }
}

/// c(k) overlay value from the exact derivative norms, when the objective
/// carries them; empty otherwise.
fn c_curve_value(
    f: &Objective,
    x: &DVector<f64>,
    kind: EstimatorKind,
    n: usize,
    delta: f64,
) -> Option<f64> {
    if kind.is_gradient() {
        let grad = f.gradient(x.as_slice())?;
        Some(c_curve_grad(n, kind.k_for(n), delta, grad.norm()))
    } else {
        let hess = f.hessian(x.as_slice())?;
        let spectral = spectral_norm(&hess).ok()?;
        Some(c_curve_hess(n, kind.k_for(n), delta, hess.norm(), spectral))
    }
}

fn aggregate_row<'a>(
    token: &'a str,
    stats: &TrialStatistics,
    curve: Option<f64>,
) -> ResultRow<'a> {
    let primary = if stats.kind.is_gradient() {
        stats.l2_error.map(|s| s.mean)
    } else {
        stats.frobenius_error.map(|s| s.mean)
    };
    ResultRow {
        estimator: token,
        n: stats.n,
        k: stats.k,
        delta: stats.delta,
        trial: "agg".to_string(),
        seed: stats.base_seed,
        error_l2: stats.l2_error.map(|s| s.mean),
        error_fro: stats.frobenius_error.map(|s| s.mean),
        error_spec: stats.spectral_error.map(|s| s.mean),
        cosine: stats.mean_cosine,
        n_evals: stats.total_evals,
        lg_error: primary.filter(|m| *m > 0.0).map(f64::log10),
        c_curve: curve,
    }
}

pub fn estimate(cli: &Cli) -> Result<(), Failure> {
    let run = resolve_run(cli)?;
    let token = cli
        .estimator
        .as_deref()
        .ok_or_else(|| usage("estimate needs --estimator"))?;
    let k = cli.k.unwrap_or(run.n);
    let kind = resolve_estimator(token, k, cli.sparsity)?;
    let stats = run_trials(&run.f, &run.x, kind, run.delta, run.trials, run.seed)?;

    let mut lines = vec![RESULTS_HEADER.to_string()];
    for record in &stats.per_trial {
        lines.push(
            ResultRow {
                estimator: token,
                n: stats.n,
                k: stats.k,
                delta: stats.delta,
                trial: record.trial.to_string(),
                seed: record.stream,
                error_l2: record.error_l2,
                error_fro: record.error_frobenius,
                error_spec: record.error_spectral,
                cosine: record.cosine,
                n_evals: record.n_evals,
                lg_error: None,
                c_curve: None,
            }
            .line(),
        );
    }
    let curve = c_curve_value(&run.f, &run.x, kind, run.n, run.delta);
    lines.push(aggregate_row(token, &stats, curve).line());
    write_output(cli.out.as_ref(), &lines)
}

fn k_grid(n: usize) -> Vec<usize> {
    let mut ks = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for m in [1usize, 2, 5] {
            let Some(k) = m.checked_mul(decade) else {
                break 'outer;
            };
            if k >= n {
                break 'outer;
            }
            ks.push(k);
        }
        let Some(next) = decade.checked_mul(10) else {
            break;
        };
        decade = next;
    }
    ks.push(n);
    ks
}

pub fn sweep_k(cli: &Cli) -> Result<(), Failure> {
    let run = resolve_run(cli)?;
    if !(run.delta > 0.0) {
        return Err(usage("sweep-k needs --delta > 0"));
    }
    let token = cli
        .estimator
        .as_deref()
        .ok_or_else(|| usage("sweep-k needs --estimator"))?;
    if matches!(token, "grad-entrywise" | "hess-entrywise") {
        return Err(usage(format!("{token} has no frame size to sweep")));
    }

    let mut lines = vec![RESULTS_HEADER.to_string()];
    for k in k_grid(run.n) {
        let kind = resolve_estimator(token, k, cli.sparsity)?;
        let stats = run_trials(&run.f, &run.x, kind, run.delta, run.trials, run.seed)?;
        let curve = c_curve_value(&run.f, &run.x, kind, run.n, run.delta);
        lines.push(aggregate_row(token, &stats, curve).line());
    }
    write_output(cli.out.as_ref(), &lines)
}

struct TableSpec {
    name: &'static str,
    n: usize,
    x: &'static str,
    gradient: bool,
    stiefel_refs: [f64; 3],
    entrywise_refs: [f64; 3],
}

const TABLES: [TableSpec; 4] = [
    TableSpec {
        name: "t1",
        n: 500,
        x: "zero",
        gradient: true,
        stiefel_refs: [2.8e-4, 2.8e-6, 2.9e-8],
        entrywise_refs: [3.8e-2, 3.7e-4, 3.7e-6],
    },
    TableSpec {
        name: "t-entry",
        n: 500,
        x: "pi4",
        gradient: true,
        stiefel_refs: [2.4e-4, 2.5e-6, 2.5e-8],
        entrywise_refs: [3.2e-2, 3.2e-4, 3.2e-6],
    },
    TableSpec {
        name: "t-hess1",
        n: 100,
        x: "pi2",
        gradient: false,
        stiefel_refs: [0.17, 1.7e-3, 1.6e-5],
        entrywise_refs: [4.4, 4.3e-2, 4.3e-4],
    },
    TableSpec {
        name: "t-hess2",
        n: 100,
        x: "pi4",
        gradient: false,
        stiefel_refs: [4.1e-3, 3.8e-5, 3.8e-7],
        entrywise_refs: [0.12, 1.2e-3, 1.2e-5],
    },
];

fn table_row(
    spec: &TableSpec,
    estimator: &str,
    delta: f64,
    trials: u64,
    mean: f64,
    reference: f64,
) -> String {
    format!(
        "table-v1,{},{},{},{},{},{},{},{},{}",
        spec.name,
        estimator,
        spec.n,
        spec.n,
        fmt(delta),
        trials,
        fmt(mean),
        fmt(reference),
        fmt(mean / reference),
    )
}

/// Reproduce one recorded reference table. The function, point, and deltas
/// are part of the table definition; only --trials and --seed vary.
pub fn table(cli: &Cli) -> Result<(), Failure> {
    let names: Vec<&str> = TABLES.iter().map(|t| t.name).collect();
    let name = cli
        .table_name
        .as_deref()
        .ok_or_else(|| usage(format!("table needs --table-name; valid names: {}", names.join(", "))))?;
    let Some(spec) = TABLES.iter().find(|t| t.name == name) else {
        return Err(usage(format!(
            "unknown table {name:?}; valid names: {}",
            names.join(", ")
        )));
    };
    if let Some(n) = cli.n {
        if n != spec.n {
            return Err(usage(format!("table {name} is defined for n = {}", spec.n)));
        }
    }
    let trials = cli.trials.unwrap_or(10);
    let seed = cli.seed.unwrap_or(0);
    let f = Objective::exp_sines(spec.n)?;
    let x = resolve_point(Some(spec.x), spec.n)?;
    let truth_grad = f
        .gradient(x.as_slice())
        .expect("the benchmark objective carries its gradient");
    let truth_hess = f
        .hessian(x.as_slice())
        .expect("the benchmark objective carries its hessian");

    let mut lines = vec![TABLE_HEADER.to_string()];
    for (i, delta) in TABLE_DELTAS.into_iter().enumerate() {
        let (estimator, kind) = if spec.gradient {
            ("grad-stiefel", EstimatorKind::GradStiefel { k: spec.n })
        } else {
            ("hess-stiefel", EstimatorKind::HessStiefel { k: spec.n })
        };
        let stats = run_trials(&f, &x, kind, delta, trials, seed)?;
        let mean = if spec.gradient {
            stats.l2_error.map(|s| s.mean)
        } else {
            stats.spectral_error.map(|s| s.mean)
        }
        .expect("stiefel trials always carry their error stats");
        lines.push(table_row(spec, estimator, delta, trials, mean, spec.stiefel_refs[i]));
    }
    for (i, delta) in TABLE_DELTAS.into_iter().enumerate() {
        let (estimator, error) = if spec.gradient {
            let est = grad_entrywise(&f, &x, delta)?;
            ("grad-entrywise", (est.vector() - &truth_grad).norm())
        } else {
            let est = hess_entrywise(&f, &x, delta)?;
            ("hess-entrywise", spectral_norm(&(est.matrix() - &truth_hess))?)
        };
        lines.push(table_row(spec, estimator, delta, 1, error, spec.entrywise_refs[i]));
    }
    write_output(cli.out.as_ref(), &lines)
}

struct MomentCheck {
    label: &'static str,
    p: u32,
    expected: f64,
    sum: f64,
    sum_sq: f64,
}

impl MomentCheck {
    fn new(label: &'static str, p: u32, expected: f64) -> Self {
        Self {
            label,
            p,
            expected,
            sum: 0.0,
            sum_sq: 0.0,
        }
    }

    fn push(&mut self, value: f64) {
        self.sum += value;
        self.sum_sq += value * value;
    }

    fn row(&self, n: usize, draws: u64) -> (String, f64) {
        let scale = draws as f64;
        let mean = self.sum / scale;
        let variance = (self.sum_sq / scale - mean * mean).max(0.0);
        let se = (variance / scale).sqrt();
        let z = if se > 0.0 {
            (mean - self.expected) / se
        } else if mean == self.expected {
            0.0
        } else {
            f64::INFINITY
        };
        let line = format!(
            "moments-v1,{},{},{},{},{},{},{}",
            self.label,
            n,
            self.p,
            draws,
            fmt(mean),
            fmt(self.expected),
            fmt(z),
        );
        (line, z)
    }
}

pub fn moments(cli: &Cli) -> Result<(), Failure> {
    let n = cli.n.ok_or_else(|| usage("moments needs --n"))?;
    if n < 2 {
        return Err(usage("moments needs n >= 2 for the cross-coordinate checks"));
    }
    let draws = cli.trials.unwrap_or(200_000);
    if draws < 2 {
        return Err(usage("moments needs at least 2 draws"));
    }
    let seed = cli.seed.unwrap_or(0);
    let source = RandomSource::new(seed);

    let mut checks = vec![
        MomentCheck::new("even-moment", 2, sphere_even_moment(n, 2)?),
        MomentCheck::new("even-moment", 4, sphere_even_moment(n, 4)?),
        MomentCheck::new("even-moment", 6, sphere_even_moment(n, 6)?),
        MomentCheck::new("cross-fourth", 4, sphere_cross_fourth_moment(n)?),
        MomentCheck::new("odd-mixed", 4, 0.0),
    ];
    for t in 0..draws {
        let v = sample_unit_sphere(n, &source.substream(t))?;
        checks[0].push(v[0] * v[0]);
        checks[1].push(v[0].powi(4));
        checks[2].push(v[0].powi(6));
        checks[3].push(v[0] * v[0] * v[1] * v[1]);
        checks[4].push(v[0].powi(3) * v[1]);
    }

    let mut lines = vec![MOMENTS_HEADER.to_string()];
    let mut worst: Option<(f64, &'static str, u32)> = None;
    for check in &checks {
        let (line, z) = check.row(n, draws);
        lines.push(line);
        if worst.is_none_or(|(w, _, _)| z.abs() > w.abs()) {
            worst = Some((z, check.label, check.p));
        }
    }
    write_output(cli.out.as_ref(), &lines)?;
    match worst {
        Some((z, label, p)) if z.abs() > 5.0 => Err(Failure::MomentCheck(format!(
            "{label} (p={p}) is {z:.2} standard errors from its closed form"
        ))),
        _ => Ok(()),
    }
}

pub fn zo_gd(cli: &Cli) -> Result<(), Failure> {
    let run = resolve_run(cli)?;
    let eta = cli.eta.unwrap_or(0.01);
    if !(eta > 0.0) {
        return Err(usage("zo-gd needs --eta > 0"));
    }
    let steps = cli.steps.unwrap_or(100);
    if steps == 0 {
        return Err(usage("zo-gd needs --steps >= 1"));
    }
    let k = cli.k.unwrap_or(run.n);
    let source = RandomSource::new(run.seed);

    let mut lines = vec![ZOGD_HEADER.to_string()];
    let mut x = run.x;
    let mut evals = 0u64;
    for step in 0..=steps {
        let value = run.f.eval(x.as_slice());
        let grad_norm = run.f.gradient(x.as_slice()).map(|g| g.norm());
        lines.push(format!(
            "zogd-v1,{},{},{},{}",
            step,
            fmt(value),
            opt(grad_norm),
            evals,
        ));
        if step == steps {
            break;
        }
        let est = grad_stiefel(&run.f, &x, k, run.delta, &source.substream(step))?;
        evals += est.n_evals();
        x -= est.vector() * eta;
    }
    write_output(cli.out.as_ref(), &lines)
}
