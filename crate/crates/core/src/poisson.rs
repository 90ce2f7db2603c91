//! Whole-space Poisson equation `L u = -f` through `u = int_0^inf T_t f dt`.
//!
//! The integrand `T_t f(x) - mu(f)` is estimated as
//! `E[f(X_t(x)) - f(X_t(Y))]` with `Y` drawn from an empirical invariant
//! measure and both copies on the same noise, so recentring costs nothing
//! extra and the Monte Carlo error stays proportional to the signal. Time is
//! discretised by the trapezoid rule in `log t` on `t_k = t0 r^k`, plus the
//! panel `[0, t0]`; halving the grid gives the quadrature error estimate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent on toolchains with float math in core
use num_traits::Float;

use crate::bounds::{poisson_grad_rhs, schauder_rhs, BoundInputs};
use crate::coeffs::{local_norms, weighted_sup_norm, CoefficientModel, WeightSpec};
use crate::ergodic::EmpiricalMeasure;
use crate::sde::{run_paths_from, SimulationConfig};
use crate::semigroup::{check_observable, EstimatorConfig};
use crate::stats::{linear_fit, MeanVarVec};
use crate::{Error, Observable, Result, CONSTANT_CONVENTION};

pub const DEFAULT_T0: f64 = 1e-3;
pub const DEFAULT_RATIO: f64 = 1.25;
/// Tail extensions (each doubling `T_max`) before giving up.
const MAX_EXTENSIONS: usize = 3;
/// Decay points earlier than this are transient and left out of the tail fit.
const TAIL_FIT_START: f64 = 0.5;
const TAIL_SIGNAL_TO_NOISE: f64 = 5.0;
/// Half-width of the line on which `|f|_{B_rho0}` is evaluated.
const NORM_GRID_RADIUS: f64 = 50.0;
const NORM_GRID_NODES: usize = 2001;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoissonConfig {
    pub estimator: EstimatorConfig,
    /// Needs an integrable `l1`.
    pub weights: WeightSpec,
    pub t0: f64,
    pub ratio: f64,
    /// Bound on `tail / rho1(x)`.
    pub tail_tolerance: f64,
    /// Largest accepted standard error of `mu(f)`.
    pub centering_tolerance: f64,
    /// Finite-difference bump for `grad u`.
    pub bump: f64,
}

impl PoissonConfig {
    pub fn new(estimator: EstimatorConfig, weights: WeightSpec) -> Self {
        PoissonConfig {
            estimator,
            weights,
            t0: DEFAULT_T0,
            ratio: DEFAULT_RATIO,
            tail_tolerance: 1e-3,
            centering_tolerance: 0.05,
            bump: 0.1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.ratio > 1.0 && self.tail_tolerance > 0.0 && self.bump > 0.0) {
            return Err(Error::arg(
                "t0, bump and tail tolerance must be positive and the ratio above one",
            ));
        }
        match self.weights.ell1 {
            Some(d) if d.integrable() => Ok(()),
            _ => Err(Error::Assumption(
                "the Poisson representation needs an integrable ergodic rate l1".into(),
            )),
        }
    }
}

/// Where the reported tail bound came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TailSource {
    /// Exponential fit of the measured integrand.
    Fitted,
    /// The declared `l1`, when the measured integrand is below noise.
    Declared,
    /// The integrand vanished identically.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoissonPoint {
    pub x: Vec<f64>,
    pub u: f64,
    pub u_std_error: f64,
    pub u_ci95: (f64, f64),
    pub gradient: Vec<f64>,
    pub gradient_std_error: Vec<f64>,
    pub quadrature_error: f64,
    /// Three standard errors.
    pub mc_error: f64,
    pub tail_bound: f64,
    pub tail_source: TailSource,
    /// Fitted decay rate of the integrand, when fitted.
    pub tail_gamma: Option<f64>,
    pub total_error_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoissonSolution {
    pub observable: String,
    pub points: Vec<PoissonPoint>,
    pub t_max: f64,
    /// Quadrature nodes, starting at 0.
    pub grid: Vec<f64>,
    pub centering: f64,
    pub centering_std_error: f64,
    pub paths: usize,
    pub diverged: usize,
}

/// Nodes `0, t0, t0 r, ..., t0 r^K` (`K` even) with fine and halved weights.
struct TimeGrid {
    times: Vec<f64>,
    fine: Vec<f64>,
    coarse: Vec<f64>,
}

impl TimeGrid {
    fn new(t0: f64, r: f64, t_max: f64) -> Self {
        let mut k = ((t_max / t0).ln() / r.ln()).ceil().max(2.0) as usize;
        k += k % 2;
        let ds = r.ln();
        let mut times = vec![0.0];
        times.extend((0..=k).map(|i| t0 * r.powi(i as i32)));
        let n = times.len();
        let mut fine = vec![0.0; n];
        let mut coarse = vec![0.0; n];
        fine[0] = 0.5 * t0;
        coarse[0] = 0.5 * t0;
        fine[1] = 0.5 * t0;
        coarse[1] = 0.5 * t0;
        for i in 0..=k {
            let t = times[i + 1];
            let end = i == 0 || i == k;
            fine[i + 1] += if end { 0.5 } else { 1.0 } * ds * t;
            if i % 2 == 0 {
                coarse[i + 1] += if end { 1.0 } else { 2.0 } * ds * t;
            }
        }
        TimeGrid { times, fine, coarse }
    }

    fn t_max(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }
}

/// Per-path combinations of the quadrature sums, and the integrand at every
/// node for the first start.
struct Coupled {
    combos: MeanVarVec,
    integrand: MeanVarVec,
    paths: usize,
    diverged: usize,
}

/// Runs `starts` and one invariant sample per path on shared noise. `combine`
/// receives the fine and coarse sums `S_j = sum_k w_k (f(X_{t_k}(x_j)) -
/// f(X_{t_k}(Y)))` of every start and writes the per-path statistics.
fn coupled_run<C>(
    model: &CoefficientModel,
    f: &Observable,
    starts: &[Vec<f64>],
    mu: &EmpiricalMeasure,
    grid: &TimeGrid,
    cfg: &EstimatorConfig,
    ncombo: usize,
    combine: C,
) -> Result<Coupled>
where
    C: Fn(&[f64], &[f64], &mut [f64]) + Sync + Send,
{
    let d = model.dim;
    let k = starts.len();
    let n = mu.len();
    let horizon = grid.t_max();
    let mut sim = SimulationConfig::new(cfg.scheme, cfg.step.min(horizon), horizon, cfg.paths, cfg.seed)
        .with_records(&grid.times);
    sim.budget_cap = cfg.budget_cap;
    let nodes = grid.times.len();
    let out = run_paths_from(
        model,
        &sim,
        k + 1,
        |i, out| {
            for (j, s) in starts.iter().enumerate() {
                out[j * d..(j + 1) * d].copy_from_slice(s);
            }
            out[k * d..].copy_from_slice(mu.sample(i as usize % n));
        },
        false,
        || None::<(MeanVarVec, MeanVarVec)>,
        |acc, rec| {
            let mut fine = vec![0.0; k];
            let mut coarse = vec![0.0; k];
            let mut first = vec![0.0; nodes];
            for r in 0..nodes {
                let fy = f.eval(rec.state(r, k));
                for j in 0..k {
                    let v = f.eval(rec.state(r, j)) - fy;
                    fine[j] += grid.fine[r] * v;
                    coarse[j] += grid.coarse[r] * v;
                    if j == 0 {
                        first[r] = v;
                    }
                }
            }
            let mut c = vec![0.0; ncombo];
            combine(&fine, &coarse, &mut c);
            let (cs, is) = acc.get_or_insert_with(|| (MeanVarVec::zeros(ncombo), MeanVarVec::zeros(nodes)));
            cs.push(&c);
            is.push(&first);
        },
        |a, b| match (a, b) {
            (Some(p), Some(q)) => Some((p.0.merge(q.0), p.1.merge(q.1))),
            (p, q) => p.or(q),
        },
    )?;
    let (combos, integrand) = out.acc.flatten().ok_or_else(|| Error::arg("every path diverged"))?;
    Ok(Coupled {
        combos,
        integrand,
        paths: out.paths,
        diverged: out.diverged,
    })
}

/// `|f|_{B_rho0}` on a line through the origin along the first axis.
fn weighted_norm(f: &Observable, weights: &WeightSpec, dim: usize) -> Result<f64> {
    let grid: Vec<Vec<f64>> = (0..NORM_GRID_NODES)
        .map(|i| {
            let mut p = vec![0.0; dim];
            p[0] = -NORM_GRID_RADIUS + 2.0 * NORM_GRID_RADIUS * i as f64 / (NORM_GRID_NODES - 1) as f64;
            p
        })
        .collect();
    weighted_sup_norm(|x| f.eval(x), |x| weights.rho0.eval(x), &grid)
}

fn check_inputs(
    model: &CoefficientModel,
    f: &Observable,
    points: &[Vec<f64>],
    mu: &EmpiricalMeasure,
    cfg: &PoissonConfig,
) -> Result<()> {
    cfg.validate()?;
    check_observable(f, &cfg.weights.rho0)?;
    if points.is_empty() {
        return Err(Error::arg("at least one point is required"));
    }
    if points.iter().any(|p| p.len() != model.dim) || mu.dim != model.dim || mu.is_empty() {
        return Err(Error::arg("point or measure dimension does not match the model"));
    }
    Ok(())
}

/// `(mu(f), SE)`, refusing when the error is above tolerance.
fn centering(f: &Observable, mu: &EmpiricalMeasure, cfg: &PoissonConfig) -> Result<(f64, f64)> {
    let (m, se) = mu.expectation(f);
    if se > cfg.centering_tolerance {
        let need = (mu.len() as f64 * (se / cfg.centering_tolerance).powi(2)).ceil();
        return Err(Error::Refused(alloc::format!(
            "mu(f) has standard error {se:.3e} above {:.3e}; about {need} invariant samples are needed",
            cfg.centering_tolerance
        )));
    }
    Ok((m, se))
}

/// `(bound, source, gamma)` for `int_T^inf |T_t f - mu(f)| dt` at one point.
fn tail_estimate(integrand: &MeanVarVec, grid: &TimeGrid, declared: f64) -> (f64, TailSource, Option<f64>) {
    if integrand.0.iter().all(|m| m.mean == 0.0 && m.variance() == 0.0) {
        return (0.0, TailSource::Zero, None);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, m) in grid.times.iter().zip(&integrand.0) {
        if *t < TAIL_FIT_START {
            continue;
        }
        if !(m.mean.abs() > TAIL_SIGNAL_TO_NOISE * m.std_error()) {
            break;
        }
        xs.push(*t);
        ys.push(m.mean.abs().ln());
    }
    let t_max = grid.t_max();
    match linear_fit(&xs, &ys) {
        Some(fit) if xs.len() >= 3 && fit.slope < 0.0 => {
            let gamma = -fit.slope;
            (
                (fit.intercept - gamma * t_max).exp() / gamma,
                TailSource::Fitted,
                Some(gamma),
            )
        }
        _ => (declared, TailSource::Declared, None),
    }
}

/// Solves `L u = -(f - mu(f))` at `points` with `mu` an empirical invariant
/// measure (see [`crate::ergodic::estimate_invariant`]).
pub fn solve_poisson(
    model: &CoefficientModel,
    f: &Observable,
    points: &[Vec<f64>],
    mu: &EmpiricalMeasure,
    cfg: &PoissonConfig,
) -> Result<PoissonSolution> {
    check_inputs(model, f, points, mu, cfg)?;
    let (centre, centre_se) = centering(f, mu, cfg)?;
    let norm = weighted_norm(f, &cfg.weights, model.dim)?;
    let ell1 = cfg.weights.ell1.expect("validated");
    let d = model.dim;
    // Declared tail: |T_t f - mu f| <= l1(t) rho1(x) |f|, normalised by rho1(x).
    let mut t_max = cfg.t0 * cfg.ratio;
    while norm * ell1.tail_integral(t_max) > cfg.tail_tolerance && t_max < 1e6 {
        t_max *= cfg.ratio;
    }
    let mut extensions = 0;
    loop {
        let grid = TimeGrid::new(cfg.t0, cfg.ratio, t_max);
        let mut out = Vec::with_capacity(points.len());
        let mut worst = 0.0f64;
        let mut paths = 0;
        let mut diverged = 0;
        for x in points {
            let mut starts = vec![x.clone()];
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[i] += s * cfg.bump;
                    starts.push(y);
                }
            }
            let h = cfg.bump;
            let run = coupled_run(
                model,
                f,
                &starts,
                mu,
                &grid,
                &cfg.estimator,
                2 + d,
                |fine, coarse, c| {
                    c[0] = fine[0];
                    c[1] = (fine[0] - coarse[0]) / 3.0;
                    for i in 0..d {
                        c[2 + i] = (fine[1 + 2 * i] - fine[2 + 2 * i]) / (2.0 * h);
                    }
                },
            )?;
            paths = run.paths;
            diverged += run.diverged;
            let rho1 = cfg.weights.rho1.eval(x);
            let declared = norm * rho1 * ell1.tail_integral(grid.t_max());
            let (tail, source, gamma) = tail_estimate(&run.integrand, &grid, declared);
            worst = worst.max(tail / rho1);
            let u = run.combos.0[0].mean;
            let se = run.combos.0[0].std_error();
            let quad = run.combos.0[1].mean.abs();
            let mc = 3.0 * se;
            out.push(PoissonPoint {
                x: x.clone(),
                u,
                u_std_error: se,
                u_ci95: (u - 1.96 * se, u + 1.96 * se),
                gradient: (0..d).map(|i| run.combos.0[2 + i].mean).collect(),
                gradient_std_error: (0..d).map(|i| run.combos.0[2 + i].std_error()).collect(),
                quadrature_error: quad,
                mc_error: mc,
                tail_bound: tail,
                tail_source: source,
                tail_gamma: gamma,
                total_error_bound: quad + mc + tail,
            });
        }
        if worst <= cfg.tail_tolerance {
            return Ok(PoissonSolution {
                observable: f.name(),
                points: out,
                t_max: grid.t_max(),
                grid: grid.times,
                centering: centre,
                centering_std_error: centre_se,
                paths,
                diverged,
            });
        }
        if extensions == MAX_EXTENSIONS {
            return Err(Error::Refused(alloc::format!(
                "tail bound {worst:.3e} (relative to rho1) still above {:.3e} at T_max = {:.3}",
                cfg.tail_tolerance,
                grid.t_max()
            )));
        }
        extensions += 1;
        t_max = 2.0 * grid.t_max();
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualRow {
    pub x: Vec<f64>,
    /// `a u'' + b u' + f - mu(f)`.
    pub residual: f64,
    pub std_error: f64,
    /// `sup |f|` on `[x - 1, x + 1]`.
    pub local_scale: f64,
    pub relative: f64,
    pub pass: bool,
    /// Three standard errors exceed the tolerance.
    pub inconclusive: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualReport {
    pub observable: String,
    pub stencil: f64,
    pub tolerance: f64,
    pub t_max: f64,
    pub rows: Vec<ResidualRow>,
    pub pass: bool,
}

/// Residual of `L u + f - mu(f)` from second differences of the quadrature
/// sums at `x - h, x, x + h` (same noise, so the stencil is nearly noise
/// free). One-dimensional models only.
pub fn residual_check(
    model: &CoefficientModel,
    f: &Observable,
    points: &[Vec<f64>],
    mu: &EmpiricalMeasure,
    cfg: &PoissonConfig,
    stencil: f64,
    tolerance: f64,
) -> Result<ResidualReport> {
    check_inputs(model, f, points, mu, cfg)?;
    if model.dim != 1 {
        return Err(Error::arg("the residual check needs a one-dimensional model"));
    }
    if !(stencil > 0.0 && tolerance > 0.0) {
        return Err(Error::arg("stencil and tolerance must be positive"));
    }
    let (centre, _) = centering(f, mu, cfg)?;
    let solution = solve_poisson(model, f, &points[..1], mu, cfg)?;
    let grid = TimeGrid::new(cfg.t0, cfg.ratio, solution.t_max);
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        let mut a = [0.0];
        let mut b = [0.0];
        model.diffusion(0.0, x, &mut a);
        model.drift(0.0, x, &mut b);
        let (a, b, h) = (a[0], b[0], stencil);
        let fx = f.eval(x) - centre;
        let starts = vec![x.clone(), vec![x[0] + h], vec![x[0] - h]];
        let run = coupled_run(model, f, &starts, mu, &grid, &cfg.estimator, 1, |s, _, c| {
            c[0] = a * (s[1] - 2.0 * s[0] + s[2]) / (h * h) + b * (s[1] - s[2]) / (2.0 * h) + fx;
        })?;
        let m = run.combos.0[0];
        let local_scale = (0..=200)
            .map(|i| f.eval1(x[0] - 1.0 + i as f64 / 100.0).abs())
            .fold(0.0, f64::max);
        let limit = tolerance * local_scale;
        let se = m.std_error();
        let inconclusive = 3.0 * se > limit && local_scale > 0.0;
        // a noisy row passes when the tolerance lies inside its 3-SE band
        let pass = m.mean.abs() <= limit.max(f64::MIN_POSITIVE)
            || (inconclusive && m.mean.abs() <= limit + 3.0 * se)
            || (local_scale == 0.0 && m.mean.abs() <= 3.0 * se);
        rows.push(ResidualRow {
            x: x.clone(),
            residual: m.mean,
            std_error: se,
            local_scale,
            relative: if local_scale > 0.0 {
                m.mean.abs() / local_scale
            } else {
                m.mean.abs()
            },
            pass,
            inconclusive,
        });
    }
    Ok(ResidualReport {
        observable: f.name(),
        stencil,
        tolerance,
        t_max: solution.t_max,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoissonGradientRow {
    pub x: Vec<f64>,
    pub measured: f64,
    pub std_error: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoissonGradientReport {
    pub model: String,
    pub observable: String,
    pub rows: Vec<PoissonGradientRow>,
    pub sup_ratio: f64,
    /// Largest over smallest positive ratio.
    pub ratio_spread: f64,
    pub pass_finite: bool,
    pub constant_convention: String,
}

/// `|grad u(x)|` against the Poisson gradient bound at every point.
pub fn poisson_gradient_verify(
    model: &CoefficientModel,
    f: &Observable,
    points: &[Vec<f64>],
    mu: &EmpiricalMeasure,
    cfg: &PoissonConfig,
) -> Result<PoissonGradientReport> {
    let sol = solve_poisson(model, f, points, mu, cfg)?;
    let norm = weighted_norm(f, &cfg.weights, model.dim)?;
    let mut rows = Vec::with_capacity(points.len());
    for (pi, p) in sol.points.iter().enumerate() {
        let inp = poisson_inputs(model, &p.x, norm, cfg, pi as u64)?;
        let rhs = poisson_grad_rhs(&inp)?;
        let measured = crate::linalg::norm(&p.gradient);
        let std_error = p.gradient_std_error.iter().fold(0.0f64, |a, &b| a.max(b));
        rows.push(PoissonGradientRow {
            x: p.x.clone(),
            measured,
            std_error,
            rhs,
            ratio: if measured == 0.0 { 0.0 } else { measured / rhs },
        });
    }
    let positive: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|r| *r > 0.0).collect();
    let ratio_spread = if positive.is_empty() {
        1.0
    } else {
        positive.iter().copied().fold(0.0, f64::max) / positive.iter().copied().fold(f64::INFINITY, f64::min)
    };
    Ok(PoissonGradientReport {
        model: model.name.clone(),
        observable: f.name(),
        sup_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        ratio_spread,
        pass_finite: rows.iter().all(|r| r.ratio.is_finite() && r.ratio >= 0.0),
        rows,
        constant_convention: CONSTANT_CONVENTION.into(),
    })
}

fn poisson_inputs(
    model: &CoefficientModel,
    x: &[f64],
    norm: f64,
    cfg: &PoissonConfig,
    salt: u64,
) -> Result<BoundInputs> {
    let norms = local_norms(model, 0.0, x, 256, 512, cfg.estimator.seed ^ salt)?.norms();
    let mut inp = BoundInputs::from_model(model, 1.0, x, norms)?;
    inp.weights = Some(cfg.weights);
    inp.phi_norm = norm;
    Ok(inp)
}

/// Number of mesh points on `[x - 1/2, x + 1/2]` in [`schauder_report`].
pub const SCHAUDER_MESH: usize = 17;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SchauderReport {
    pub x: Vec<f64>,
    pub alpha: f64,
    /// `u''` on the mesh.
    pub mesh: Vec<f64>,
    pub hessian: Vec<f64>,
    pub sup_hessian: f64,
    /// Largest `|u''(y) - u''(z)| / |y - z|^alpha` over mesh pairs.
    pub seminorm: f64,
    pub rhs: f64,
    /// `(sup |u''| + seminorm) / rhs`; a ratio report, not a norm bound.
    pub ratio: f64,
    pub constant_convention: String,
}

/// Second derivative of `u` on a mesh of `[x - 1/2, x + 1/2]` and its
/// pair-sampled Holder seminorm, against the Schauder bound. One-dimensional
/// models only.
pub fn schauder_report(
    model: &CoefficientModel,
    f: &Observable,
    x: &[f64],
    mu: &EmpiricalMeasure,
    cfg: &PoissonConfig,
) -> Result<SchauderReport> {
    let pts = [x.to_vec()];
    check_inputs(model, f, &pts, mu, cfg)?;
    if model.dim != 1 {
        return Err(Error::arg("the Schauder report needs a one-dimensional model"));
    }
    let sol = solve_poisson(model, f, &pts, mu, cfg)?;
    let grid = TimeGrid::new(cfg.t0, cfg.ratio, sol.t_max);
    let h = cfg.bump;
    let mesh: Vec<f64> = (0..SCHAUDER_MESH)
        .map(|i| x[0] - 0.5 + i as f64 / (SCHAUDER_MESH - 1) as f64)
        .collect();
    let mut starts = Vec::with_capacity(3 * SCHAUDER_MESH);
    for y in &mesh {
        starts.extend([vec![*y], vec![y + h], vec![y - h]]);
    }
    let run = coupled_run(
        model,
        f,
        &starts,
        mu,
        &grid,
        &cfg.estimator,
        SCHAUDER_MESH,
        |s, _, c| {
            for (i, v) in c.iter_mut().enumerate() {
                *v = (s[3 * i + 1] - 2.0 * s[3 * i] + s[3 * i + 2]) / (h * h);
            }
        },
    )?;
    let hessian = run.combos.means();
    let alpha = model.alpha;
    let mut seminorm = 0.0f64;
    for i in 0..mesh.len() {
        for j in i + 1..mesh.len() {
            seminorm = seminorm.max((hessian[i] - hessian[j]).abs() / (mesh[j] - mesh[i]).powf(alpha));
        }
    }
    let sup_hessian = hessian.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let norm = weighted_norm(f, &cfg.weights, 1)?;
    let rhs = schauder_rhs(&poisson_inputs(model, x, norm, cfg, 0)?)?;
    Ok(SchauderReport {
        x: x.to_vec(),
        alpha,
        mesh,
        hessian,
        sup_hessian,
        seminorm,
        rhs,
        ratio: (sup_hessian + seminorm) / rhs,
        constant_convention: CONSTANT_CONVENTION.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_weights_integrate_exponential() {
        let g = TimeGrid::new(1e-3, 1.25, 30.0);
        let fine: f64 = g.times.iter().zip(&g.fine).map(|(t, w)| w * (-t).exp()).sum();
        let coarse: f64 = g.times.iter().zip(&g.coarse).map(|(t, w)| w * (-t).exp()).sum();
        assert!((fine - 1.0).abs() < 1e-5, "{fine}");
        assert!((coarse - 1.0).abs() < 1e-3, "{coarse}");
        assert_eq!((g.times.len() - 2) % 2, 0);
    }
}
