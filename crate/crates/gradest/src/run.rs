//! Task execution. Every task returns a JSON result, pass flag and tables;
//! [`execute`] writes them out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gradest_core::bounds::{bound_report, BoundInputs};
use gradest_core::catalog;
use gradest_core::coeffs::{local_norms, weighted_sup_norm, CoefficientModel};
use gradest_core::ergodic::{estimate_invariant, quadratic_certificate, Certificate};
use gradest_core::pdeoracle::{gaussian_semigroup_derivatives, ou_closed_form};
use gradest_core::poisson::{poisson_gradient_verify, residual_check, solve_poisson, PoissonConfig};
use gradest_core::rng::derive_seed;
use gradest_core::sde::{moment_check, simulate, SimulationConfig};
use gradest_core::semigroup::{
    estimate_semigroup_at_times, gradient_bismut_at_times, gradient_fd_at_times, hessian_fd_at_times, verify_bound,
    BoundKind, DerivativeEstimate, Estimator, VerificationReport, VerifyConfig,
};
use gradest_core::singular::uniform_gradient_check;
use gradest_core::{Error, Observable, CONSTANT_CONVENTION};
use serde_json::{json, Value};

use crate::output::{num, point, write_columnar, write_csv, write_json, Columnar, Format, Table};
use crate::spec::{ExperimentSpec, Task};
use crate::CliError;

/// Stream tag of the invariant-measure sample.
const INVARIANT_TAG: u64 = 0x696e_7661_7269_616e;
/// Norm sampling per point.
const NORM_PAIRS: usize = 256;
const NORM_NODES: usize = 512;

/// Result of one task.
#[derive(Clone, Debug, Default)]
pub struct TaskOutput {
    pub pass: bool,
    pub result: Value,
    pub tables: Vec<Table>,
    pub columnar: Vec<Columnar>,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub format: Format,
    pub workers: usize,
}

/// What [`execute`] produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub pass: bool,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `|phi|_{B_rho0}`: `sup |phi|` when bounded, else the weighted sup on a
/// line through the origin.
fn phi_norm(spec: &ExperimentSpec, phi: &Observable) -> Result<f64, CliError> {
    if let Some(s) = phi.sup_abs() {
        return Ok(s);
    }
    let d = spec.dim();
    let rho0 = spec.weights().rho0;
    let grid: Vec<Vec<f64>> = (0..=2000)
        .map(|i| {
            let mut p = vec![0.0; d];
            p[0] = -50.0 + 0.05 * i as f64;
            p
        })
        .collect();
    Ok(weighted_sup_norm(|x| phi.eval(x), |x| rho0.eval(x), &grid)?)
}

pub fn bounds(spec: &ExperimentSpec, model: &CoefficientModel) -> Result<TaskOutput, CliError> {
    let weights = spec.weights();
    let norm = phi_norm(spec, &spec.observable)?;
    let mut reports = Vec::new();
    let mut norm_reports = Vec::new();
    let mut table = Table::new(
        "bounds",
        &[
            "t",
            "x",
            "gamma_t",
            "gamma_tilde_t",
            "cal_g",
            "cal_h",
            "r0",
            "r",
            "grad_rhs",
            "hess_rhs",
            "longtime_grad_rhs",
            "longtime_hess_rhs",
            "poisson_grad_rhs",
            "schauder_rhs",
        ],
    );
    for (i, x) in spec.points().iter().enumerate() {
        let nr = local_norms(model, 0.0, x, NORM_PAIRS, NORM_NODES, spec.seed ^ i as u64)?;
        let mut inp = BoundInputs::from_model(model, spec.grid.t[0], x, nr.norms())?;
        inp.weights = Some(weights);
        inp.phi_norm = norm;
        norm_reports.push(nr);
        for &t in &spec.grid.t {
            let r = bound_report(&inp.at_time(t), spec.verify.beta)?;
            table.push(vec![
                num(t),
                point(x),
                num(r.gamma_t),
                opt(r.gamma_tilde_t),
                opt(r.cal_g),
                opt(r.cal_h),
                opt(r.r0),
                opt(r.r),
                opt(r.grad_rhs),
                opt(r.hess_rhs),
                opt(r.longtime_grad_rhs),
                opt(r.longtime_hess_rhs),
                opt(r.poisson_grad_rhs),
                opt(r.schauder_rhs),
            ]);
            reports.push(r);
        }
    }
    Ok(TaskOutput {
        pass: reports.iter().all(|r| r.gamma_t.is_finite()),
        result: json!({ "phi_norm": norm, "local_norms": to_value(&norm_reports), "records": to_value(&reports) }),
        tables: vec![table],
        columnar: Vec::new(),
    })
}

pub fn simulate_task(spec: &ExperimentSpec, model: &CoefficientModel) -> Result<TaskOutput, CliError> {
    let est = &spec.estimator;
    let times = &spec.grid.t;
    let horizon = times.iter().fold(0.0f64, |a, &b| a.max(b));
    let weights = spec.weights();
    let mut cfg =
        SimulationConfig::new(est.scheme, est.step.min(horizon), horizon, est.paths, spec.seed).with_records(times);
    cfg.keep_trajectories = spec.simulate.dump;
    cfg.budget_cap = 1e12;
    let mut results = Vec::new();
    let mut columnar = Vec::new();
    let mut table = Table::new("moments", &["x", "t", "mean_rho0", "std_error", "bound", "ratio"]);
    let mut pass = true;
    for (i, x) in spec.points().iter().enumerate() {
        let ens = simulate(model, &cfg, x)?;
        let d = ens.dim;
        let mut mean = vec![0.0; d];
        let mut valid = 0usize;
        for row in ens.valid_terminals() {
            valid += 1;
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= valid.max(1) as f64);
        let moments = moment_check(model, &cfg, &weights, x, times)?;
        pass &= moments.pass;
        for k in 0..moments.times.len() {
            table.push(vec![
                point(x),
                num(moments.times[k]),
                num(moments.mean[k]),
                num(moments.std_error[k]),
                num(moments.bound[k]),
                num(moments.ratio[k]),
            ]);
        }
        results.push(json!({
            "x": x,
            "record_times": ens.record_times,
            "terminal_mean": mean,
            "diverged": ens.diverged,
            "noise": to_value(&ens.noise),
            "moments": to_value(&moments),
        }));
        if let Some(traj) = ens.trajectories {
            let nrec = ens.record_times.len();
            columnar.push(Columnar {
                name: format!("trajectories_{i}"),
                shape: vec![ens.noise.paths, nrec, d],
                axes: vec!["path".into(), "time".into(), "coordinate".into()],
                meta: json!({ "x0": x, "record_times": ens.record_times, "seed": spec.seed, "scheme": est.scheme }),
                data: traj,
            });
        }
    }
    Ok(TaskOutput {
        pass,
        result: json!({ "starts": results }),
        tables: vec![table],
        columnar,
    })
}

/// Exact `(value, d/dx0, d^2/dx0^2)` for one-dimensional heat and OU.
fn oracle(spec: &ExperimentSpec, t: f64, x: &[f64]) -> Option<(f64, f64, f64)> {
    if spec.dim() != 1 {
        return None;
    }
    match spec.model.name.as_deref() {
        Some("heat") => gaussian_semigroup_derivatives(&spec.observable, t, x, &[1.0]).ok(),
        Some("ou") => ou_closed_form(&spec.observable, 1.0, t, x)
            .ok()
            .map(|o| (o.value, o.gradient, o.hessian)),
        _ => None,
    }
}

/// Oracle agreement: within four standard errors plus the Richardson bias.
const ORACLE_SIGMAS: f64 = 4.0;

/// Smallest nonzero value the estimator can return (one path out of `N`
/// seeing the full oscillation of `phi`), tripled. Covers rare events that
/// no path reached, where the sample standard error is zero.
fn resolution(e: &DerivativeEstimate, phi: &Observable) -> f64 {
    let osc = phi.sup_abs().map_or(0.0, |s| 2.0 * s);
    let scale = match e.order {
        0 => 1.0,
        k if e.bump > 0.0 => e.bump.powi(k as i32),
        _ => e.t,
    };
    3.0 * osc / (scale * e.paths as f64) + 1e-12 * e.value[0].abs()
}

pub fn estimate(spec: &ExperimentSpec, model: &CoefficientModel) -> Result<TaskOutput, CliError> {
    let cfg = spec.estimator_config();
    let phi = &spec.observable;
    let times = &spec.grid.t;
    let order = spec.estimator.order;
    let mut table = Table::new(
        "estimates",
        &[
            "t",
            "x",
            "order",
            "estimator",
            "component",
            "value",
            "std_error",
            "fd_bias",
            "bump",
            "oracle",
        ],
    );
    let mut all = Vec::new();
    let mut pass = true;
    for x in spec.points() {
        let est: Vec<DerivativeEstimate> = match (order, spec.estimator.method) {
            (0, _) => estimate_semigroup_at_times(model, phi, times, &x, &cfg)?,
            (1, Estimator::Bismut) => gradient_bismut_at_times(model, phi, times, &x, &cfg)?,
            (1, _) => gradient_fd_at_times(model, phi, times, &x, &cfg, spec.estimator.bump)?,
            _ => hessian_fd_at_times(model, phi, times, &x, &cfg, spec.estimator.bump)?,
        };
        for e in est {
            let exact = oracle(spec, e.t, &x).map(|o| match order {
                0 => o.0,
                1 => o.1,
                _ => o.2,
            });
            if let Some(v) = exact {
                let bias = e.fd_bias.first().copied().unwrap_or(0.0);
                pass &= (e.value[0] - v).abs() <= ORACLE_SIGMAS * e.std_error[0] + bias + resolution(&e, phi);
            }
            pass &= e.value.iter().all(|v| v.is_finite());
            for (k, v) in e.value.iter().enumerate() {
                table.push(vec![
                    num(e.t),
                    point(&x),
                    order.to_string(),
                    format!("{:?}", e.estimator),
                    k.to_string(),
                    num(*v),
                    num(e.std_error[k]),
                    e.fd_bias.get(k).map(|b| num(*b)).unwrap_or_default(),
                    num(e.bump),
                    if k == 0 { opt(exact) } else { String::new() },
                ]);
            }
            let mut rec = to_value(&e);
            rec["oracle"] = exact.map_or(Value::Null, Value::from);
            all.push(rec);
        }
    }
    Ok(TaskOutput {
        pass,
        result: json!({ "estimates": all, "oracle_sigmas": ORACLE_SIGMAS }),
        tables: vec![table],
        columnar: Vec::new(),
    })
}

fn verify_table(name: &str, reports: &[VerificationReport]) -> Table {
    let mut table = Table::new(name, &["kind", "t", "x", "measured", "std_error", "rhs", "ratio"]);
    for r in reports {
        for row in &r.rows {
            table.push(vec![
                format!("{:?}", r.kind),
                num(row.t),
                point(&row.x),
                num(row.measured),
                num(row.std_error),
                num(row.rhs),
                num(row.ratio),
            ]);
        }
    }
    table
}

fn verify(spec: &ExperimentSpec, model: &CoefficientModel, long: bool) -> Result<TaskOutput, CliError> {
    let weights = spec.weights();
    if long && weights.ell1.is_none() {
        return Err(CliError::Assumption(
            "long-time bounds need an ergodic rate l1 (weights.ell1); the model has none certified".into(),
        ));
    }
    let mut cfg = VerifyConfig::new(spec.estimator_config(), weights);
    cfg.gradient = match spec.estimator.method {
        Estimator::Bismut => Estimator::Bismut,
        _ => Estimator::FdCrn,
    };
    cfg.bump = spec.estimator.bump;
    cfg.beta = spec.verify.beta;
    let mut kinds = vec![if long {
        BoundKind::GradLong
    } else {
        BoundKind::GradShort
    }];
    if spec.verify.hessian {
        kinds.push(if long {
            BoundKind::HessLong
        } else {
            BoundKind::HessShort
        });
    }
    let points = spec.points();
    let reports = kinds
        .iter()
        .map(|&k| verify_bound(model, &spec.observable, &spec.grid.t, &points, k, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let name = if long { "verify_long" } else { "verify_short" };
    Ok(TaskOutput {
        pass: reports.iter().all(|r| r.pass),
        result: json!({ "reports": to_value(&reports) }),
        tables: vec![verify_table(name, &reports)],
        columnar: Vec::new(),
    })
}

fn certificate(spec: &ExperimentSpec, model: &CoefficientModel) -> Result<Certificate, CliError> {
    let cert = match spec.ergodic.burn_in {
        Some(burn_in) => Certificate::Override { burn_in },
        None => quadratic_certificate(model)?,
    };
    cert.burn_in()?;
    Ok(cert)
}

pub fn poisson(spec: &ExperimentSpec, model: &CoefficientModel) -> Result<TaskOutput, CliError> {
    let weights = spec.weights();
    if !weights.ell1.is_some_and(|d| d.integrable()) {
        return Err(CliError::Assumption(format!(
            "no invariant measure with integrable decay certified for '{}' (weights.ell1 missing or not integrable)",
            spec.model_name()
        )));
    }
    let cert = certificate(spec, model)?;
    let mut inv = spec.estimator_config();
    inv.paths = spec.ergodic.invariant_paths;
    inv.seed = derive_seed(spec.seed, INVARIANT_TAG);
    let mu = estimate_invariant(model, &cert, &vec![0.0; model.dim], &inv)?;
    let p = &spec.poisson;
    let mut cfg = PoissonConfig::new(spec.estimator_config(), weights);
    cfg.tail_tolerance = p.tail_tolerance;
    cfg.centering_tolerance = p.centering_tolerance;
    cfg.bump = p.bump;
    let points = spec.points();
    let f = &spec.observable;
    let sol = solve_poisson(model, f, &points, &mu, &cfg)?;
    let residual = if model.dim == 1 {
        Some(residual_check(
            model,
            f,
            &points,
            &mu,
            &cfg,
            p.residual_stencil,
            p.residual_tolerance,
        )?)
    } else {
        None
    };
    let grad = poisson_gradient_verify(model, f, &points, &mu, &cfg)?;
    let mut table = Table::new(
        "poisson",
        &[
            "x",
            "u",
            "u_std_error",
            "grad_norm",
            "quadrature_error",
            "mc_error",
            "tail_bound",
            "total_error_bound",
            "grad_rhs",
            "grad_ratio",
            "residual",
        ],
    );
    for (i, pt) in sol.points.iter().enumerate() {
        let g = &grad.rows[i];
        table.push(vec![
            point(&pt.x),
            num(pt.u),
            num(pt.u_std_error),
            num(g.measured),
            num(pt.quadrature_error),
            num(pt.mc_error),
            num(pt.tail_bound),
            num(pt.total_error_bound),
            num(g.rhs),
            num(g.ratio),
            residual.as_ref().map(|r| num(r.rows[i].residual)).unwrap_or_default(),
        ]);
    }
    let pass = grad.pass_finite && residual.as_ref().map_or(true, |r| r.pass);
    Ok(TaskOutput {
        pass,
        result: json!({
            "certificate": to_value(&cert),
            "invariant": { "samples": mu.len(), "mean": mu.mean, "variance": mu.variance, "burn_in": mu.burn_in },
            "solution": to_value(&sol),
            "residual": residual.as_ref().map(to_value),
            "gradient": to_value(&grad),
        }),
        tables: vec![table],
        columnar: Vec::new(),
    })
}

pub fn singular(spec: &ExperimentSpec) -> Result<TaskOutput, CliError> {
    if !spec.is_singular() {
        return Err(CliError::Config(
            "the singular task needs model.name = \"singular_v\"".into(),
        ));
    }
    let xs: Vec<f64> = spec.points().iter().map(|p| p[0]).collect();
    let rep = uniform_gradient_check(
        &spec.singular_spec(),
        &spec.observable,
        &spec.grid.t,
        &xs,
        &spec.singular.levels,
        &spec.estimator_config(),
        spec.estimator.bump,
    )?;
    let mut table = Table::new("singular", &["n", "t", "x", "measured", "std_error", "rhs", "ratio"]);
    for r in &rep.rows {
        table.push(vec![
            r.n.to_string(),
            num(r.t),
            num(r.x),
            num(r.measured),
            num(r.std_error),
            num(r.rhs),
            num(r.ratio),
        ]);
    }
    Ok(TaskOutput {
        pass: rep.pass,
        result: json!({ "alpha_b": spec.singular_spec().alpha_b, "uniformity": to_value(&rep) }),
        tables: vec![table],
        columnar: Vec::new(),
    })
}

fn run_one(task: Task, spec: &ExperimentSpec, model: &CoefficientModel) -> Result<TaskOutput, CliError> {
    match task {
        Task::Bounds => bounds(spec, model),
        Task::Simulate => simulate_task(spec, model),
        Task::Estimate => estimate(spec, model),
        Task::VerifyShort => verify(spec, model, false),
        Task::VerifyLong => verify(spec, model, true),
        Task::Poisson => poisson(spec, model),
        Task::Singular => singular(spec),
        Task::All => unreachable!("expanded by the caller"),
    }
}

/// Tasks run by `all`: those whose hypotheses the configuration provides
/// (the long-time leg only when every grid time exceeds 2).
pub fn expand(task: Task, spec: &ExperimentSpec) -> Vec<Task> {
    if task != Task::All {
        return vec![task];
    }
    let mut v = vec![Task::Bounds, Task::Simulate, Task::Estimate];
    if spec.observable.sup_abs().is_some() {
        v.push(Task::VerifyShort);
    }
    let ergodic = spec.weights().ell1.is_some_and(|d| d.integrable());
    let long_grid = spec.grid.t.iter().all(|&t| t > 2.0);
    if ergodic && long_grid && spec.observable.sup_abs().is_some() {
        v.push(Task::VerifyLong);
    }
    if ergodic {
        v.push(Task::Poisson);
    }
    if spec.is_singular() {
        v.push(Task::Singular);
    }
    v
}

/// Runs `task`, returns the summary and writes report files to `opts.out`.
/// `summary.json` holds no timing or environment data; that goes to
/// `metadata.json`.
pub fn execute(spec: &ExperimentSpec, task: Task, opts: &RunOptions) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let model = spec.build_model()?;
    let mut results = serde_json::Map::new();
    let mut outputs = Vec::new();
    for t in expand(task, spec) {
        let out = run_one(t, spec, &model)?;
        results.insert(t.name().into(), json!({ "pass": out.pass, "result": out.result }));
        outputs.push(out);
    }
    let pass = outputs.iter().all(|o| o.pass);
    let mut config = spec.clone();
    config.output = None;
    let summary = json!({
        "tool": "gradest",
        "version": env!("CARGO_PKG_VERSION"),
        "task": task.name(),
        "model": spec.model_name(),
        "observable": spec.observable.name(),
        "constant_convention": CONSTANT_CONVENTION,
        "config": to_value(&config),
        "weights": to_value(&spec.weights()),
        "pass": pass,
        "results": results,
    });
    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::Io(format!("{}: {e}", opts.out.display())))?;
    let mut files = Vec::new();
    if opts.format.json() {
        let p = opts.out.join("summary.json");
        write_json(&p, &summary)?;
        files.push(p);
    }
    if opts.format.csv() {
        for o in &outputs {
            for t in &o.tables {
                files.push(write_csv(&opts.out, t)?);
            }
        }
    }
    for o in &outputs {
        for c in &o.columnar {
            files.push(write_columnar(&opts.out, c)?);
        }
    }
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "created_unix": created,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "workers": opts.workers,
        "version": env!("CARGO_PKG_VERSION"),
        "task": task.name(),
        "files": files.iter().map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
    });
    let mp = opts.out.join("metadata.json");
    write_json(&mp, &meta)?;
    files.push(mp);
    Ok(RunReport { pass, summary, files })
}

/// Catalog entries as JSON.
pub fn catalog_json() -> Value {
    to_value(&catalog::entries())
}

/// One line per catalog entry.
pub fn catalog_text() -> String {
    let mut s = String::new();
    for e in catalog::entries() {
        let lyap = e
            .lyapunov
            .map(|(f, c0, c1)| format!("{f:?} c0={c0} c1={c1}"))
            .unwrap_or_else(|| "none".into());
        s.push_str(&format!(
            "{:<16} b = {:<28} alpha = {} p_b = {} lambda = {} Lambda = {} lyapunov: {} l0: {} l1: {}",
            e.name,
            e.drift,
            e.alpha,
            e.p_b.map_or("inf".into(), |p| p.to_string()),
            e.lambda,
            e.big_lambda,
            lyap,
            e.ell0_family,
            e.ell1_family,
        ));
        if let Some(a) = e.alpha_b {
            s.push_str(&format!(" alpha_b = {a}"));
        }
        s.push('\n');
    }
    s
}

/// Pass flags of a stored summary.
pub fn report(dir: &Path) -> Result<(bool, String), CliError> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let pass = v["pass"].as_bool().unwrap_or(false);
    let mut lines = format!("{} on {} ({})\n", v["task"], v["model"], v["observable"]);
    if let Some(m) = v["results"].as_object() {
        for (k, r) in m {
            lines.push_str(&format!(
                "  {k:<14} {}\n",
                if r["pass"].as_bool() == Some(true) {
                    "pass"
                } else {
                    "FAIL"
                }
            ));
        }
    }
    lines.push_str(&format!("overall: {}\n", if pass { "pass" } else { "FAIL" }));
    Ok((pass, lines))
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Assumption(_) | Error::Refused(_) | Error::ExponentRegime(_) | Error::Infeasible(_) => {
                CliError::Assumption(e.to_string())
            }
            Error::Argument(_) | Error::Configuration(_) | Error::Domain(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
